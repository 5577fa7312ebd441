//! The meta-learning engine.
//!
//! A [`TaskSet`] holds N transforms and the probabilities used to sample
//! them. Each training step samples K tasks, transforms one shared source
//! minibatch K ways, adapts the classifier to every transformed batch with a
//! single gradient step, and updates the shared weights with Adam against
//! the summed post-adaptation losses (first-order: the adaptation Jacobian is
//! treated as identity). After every epoch the model is validated on all N
//! tasks and the sampling probabilities become the softmax of the
//! validation losses, so harder tasks are drawn more often.

mod config;
mod eval;
mod history;
mod sampling;
mod task_set;
mod train;

pub use config::{parse_config, TrainConfig, TrainMode};
pub use eval::{evaluate, EvalReport};
pub use history::{history_csv, history_header, summary_json, write_history_csv, write_summary};
pub use sampling::{sample_task_indices, update_probabilities};
pub use task_set::{build_task_set, TaskParamMode, TaskSet, ValueRanges, FIXED_GATES, FIXED_GRIDS, FIXED_PERCENTS};
pub use train::{
    meta_gradient, meta_train_step, meta_validate, train_baseline, train_metasets, train_with_mode,
    EpochRecord, MetaStep, TrainOutcome, Validation,
};
