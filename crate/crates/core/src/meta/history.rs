//! Per-epoch history as CSV and a run summary as JSON.

use std::fs;
use std::path::Path;

use serde_json::json;

use super::config::TrainConfig;
use super::train::{EpochRecord, TrainOutcome};
use crate::error::{Error, Result};

/// `epoch, loss_1..N, acc_1..N, p_1..N, train_loss`.
pub fn history_header(tasks: usize) -> Vec<String> {
    let mut cols = vec!["epoch".to_string()];
    for prefix in ["loss", "acc", "p"] {
        cols.extend((1..=tasks).map(|n| format!("{prefix}_{n}")));
    }
    cols.push("train_loss".into());
    cols
}

fn row(record: &EpochRecord) -> Vec<String> {
    let mut cells = vec![record.epoch.to_string()];
    for values in [&record.val_losses, &record.val_accuracies, &record.probabilities] {
        cells.extend(values.iter().map(|v| v.to_string()));
    }
    cells.push(record.train_loss().to_string());
    cells
}

pub fn history_csv(history: &[EpochRecord], tasks: usize) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| Error::InvalidInput(format!("csv encoding failed: {e}"));
    writer.write_record(history_header(tasks)).map_err(to_err)?;
    for record in history {
        writer.write_record(row(record)).map_err(to_err)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::InvalidInput(format!("csv encoding failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_history_csv(path: &Path, outcome: &TrainOutcome) -> Result<()> {
    let text = history_csv(&outcome.history, outcome.task_set.len())?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn summary_json(config: &TrainConfig, outcome: &TrainOutcome) -> serde_json::Value {
    let last = outcome.history.last();
    json!({
        "mode": config.mode.to_string(),
        "converged": outcome.converged,
        "epochs": outcome.history.len(),
        "tasks": outcome.task_set.transforms().iter().map(|t| t.to_string()).collect::<Vec<_>>(),
        "final_probabilities": outcome.task_set.probabilities(),
        "final_val_losses": last.map(|r| r.val_losses.clone()),
        "final_val_accuracies": last.map(|r| r.val_accuracies.clone()),
        "final_train_loss": last.map(|r| r.train_loss()),
        "config": config,
    })
}

pub fn write_summary(path: &Path, config: &TrainConfig, outcome: &TrainOutcome) -> Result<()> {
    let text = serde_json::to_string_pretty(&summary_json(config, outcome))
        .map_err(|e| Error::InvalidInput(format!("summary encoding failed: {e}")))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_count_is_one_plus_three_n_plus_one() {
        let rec = EpochRecord {
            epoch: 1,
            val_losses: vec![1.0; 9],
            val_accuracies: vec![0.5; 9],
            probabilities: vec![1.0 / 9.0; 9],
            step_losses: vec![2.0, 4.0],
        };
        let text = history_csv(&[rec.clone(), EpochRecord { epoch: 2, ..rec }], 9).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        for line in lines {
            assert_eq!(line.split(',').count(), 1 + 3 * 9 + 1);
        }
        assert!(text.lines().nth(1).unwrap().ends_with(",3"));
    }
}
