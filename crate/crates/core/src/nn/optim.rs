use super::{Architecture, Gradients, ModelParams};
use crate::error::{Error, Result};

/// Plain gradient step `params - lr * grads`, returned as a new value.
pub fn sgd_step(params: &ModelParams, grads: &Gradients, lr: f64) -> Result<ModelParams> {
    params.check_congruent(grads.architecture())?;
    let mut out = params.clone();
    for (p, g) in out.values_mut().iter_mut().zip(grads.values()) {
        *p -= lr * g;
    }
    Ok(out)
}

/// Moment estimates of the Adam optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub(crate) arch: Architecture,
    pub(crate) m: Vec<f64>,
    pub(crate) v: Vec<f64>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(arch: &Architecture) -> Self {
        Self::with_hyperparameters(arch, 0.9, 0.999, 1e-8)
    }

    pub fn with_hyperparameters(arch: &Architecture, beta1: f64, beta2: f64, eps: f64) -> Self {
        let n = arch.param_count();
        Self {
            arch: arch.clone(),
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
            beta1,
            beta2,
            eps,
        }
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }

    /// Bias-corrected Adam update applied in place.
    pub fn update(&mut self, params: &mut ModelParams, grads: &Gradients, lr: f64) -> Result<()> {
        if self.arch != *params.architecture() {
            return Err(Error::ShapeMismatch("optimizer state does not match parameters".into()));
        }
        params.check_congruent(grads.architecture())?;
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        for (((p, g), m), v) in params
            .values_mut()
            .iter_mut()
            .zip(grads.values())
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}

/// Value-semantics form of [`AdamState::update`].
pub fn adam_step(
    state: &AdamState,
    params: &ModelParams,
    grads: &Gradients,
    lr: f64,
) -> Result<(AdamState, ModelParams)> {
    let mut state = state.clone();
    let mut params = params.clone();
    state.update(&mut params, grads, lr)?;
    Ok((state, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::init_params_seeded;

    fn arch() -> Architecture {
        Architecture {
            point_widths: vec![4],
            head_widths: vec![],
            classes: 2,
        }
    }

    fn constant_grads(value: f64) -> Gradients {
        let a = arch();
        Gradients::from_values(&a, vec![value; a.param_count()]).unwrap()
    }

    #[test]
    fn sgd_identity_and_arithmetic() {
        let a = arch();
        let p = init_params_seeded(&a, 1).unwrap();
        assert_eq!(sgd_step(&p, &constant_grads(3.0), 0.0).unwrap(), p);
        let zero = ModelParams::zeros(&a).unwrap();
        let stepped = sgd_step(&zero, &constant_grads(1.0), 0.5).unwrap();
        assert!(stepped.values().iter().all(|&v| v == -0.5));
        // input untouched
        assert!(zero.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_sgd_steps_equal_one_double_step() {
        let a = arch();
        let p = init_params_seeded(&a, 2).unwrap();
        let g = Gradients::from_values(&a, (0..a.param_count()).map(|i| i as f64 * 0.25 - 1.0).collect()).unwrap();
        let twice = sgd_step(&sgd_step(&p, &g, 0.125).unwrap(), &g, 0.125).unwrap();
        let once = sgd_step(&p, &g, 0.25).unwrap();
        for (x, y) in twice.values().iter().zip(once.values()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn sgd_rejects_mismatched_shapes() {
        let p = ModelParams::zeros(&Architecture::compact(3)).unwrap();
        assert!(matches!(sgd_step(&p, &constant_grads(1.0), 0.1), Err(Error::ShapeMismatch(_))));
        let mut state = AdamState::new(&arch());
        let mut q = p.clone();
        assert!(state.update(&mut q, &constant_grads(1.0), 0.1).is_err());
    }

    #[test]
    fn first_adam_step_moves_by_lr_against_the_sign() {
        let a = arch();
        let p = ModelParams::zeros(&a).unwrap();
        let lr = 1e-3;
        for g in [2.5, -0.04] {
            let (state, q) = adam_step(&AdamState::new(&a), &p, &constant_grads(g), lr).unwrap();
            assert_eq!(state.step, 1);
            // m_hat = g, v_hat = g^2: update = -lr * g / (|g| + eps).
            let expected = -lr * g / (g.abs() + 1e-8);
            for &v in q.values() {
                assert!((v - expected).abs() < 1e-15);
                assert!((v.abs() - lr).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let a = arch();
        let mut p = init_params_seeded(&a, 3).unwrap();
        let before = p.clone();
        let mut state = AdamState::new(&a);
        for _ in 0..100 {
            state.update(&mut p, &constant_grads(0.0), 0.01).unwrap();
        }
        assert_eq!(p, before);
        assert_eq!(state.step, 100);
    }

    #[test]
    fn adam_trajectory_is_deterministic() {
        let a = arch();
        let run = || {
            let mut p = init_params_seeded(&a, 4).unwrap();
            let mut s = AdamState::new(&a);
            for k in 0..20 {
                s.update(&mut p, &constant_grads((k as f64).sin()), 0.01).unwrap();
            }
            (p, s)
        };
        assert_eq!(run(), run());
    }
}
