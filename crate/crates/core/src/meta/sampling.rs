use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;

use crate::error::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-9;

pub(crate) fn check_distribution(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidInput("empty probability vector".into()));
    }
    if p.iter().any(|&x| !x.is_finite() || x <= 0.0) {
        return Err(Error::InvalidInput(format!("probabilities must be positive: {p:?}")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::InvalidInput(format!("probabilities sum to {sum}, not 1")));
    }
    Ok(())
}

/// `k` independent draws, with replacement, from the categorical
/// distribution `p`.
pub fn sample_task_indices<R: rand::Rng + ?Sized>(p: &[f64], k: usize, rng: &mut R) -> Result<Vec<usize>> {
    check_distribution(p)?;
    if k == 0 {
        return Err(Error::InvalidInput("must sample at least one task".into()));
    }
    let dist = WeightedIndex::new(p).map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok((0..k).map(|_| dist.sample(rng)).collect())
}

/// Softmax of the validation losses: higher loss, higher probability.
pub fn update_probabilities(losses: &[f64]) -> Result<Vec<f64>> {
    if losses.is_empty() {
        return Err(Error::InvalidInput("no validation losses".into()));
    }
    if let Some(bad) = losses.iter().find(|l| !l.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite validation loss {bad}")));
    }
    let max = losses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = losses.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let mut p: Vec<f64> = exps.iter().map(|e| e / sum).collect();
    if p.contains(&0.0) {
        // Losses hundreds of nats apart underflow; keep every task drawable.
        for x in p.iter_mut() {
            *x = x.max(f64::MIN_POSITIVE);
        }
        let total: f64 = p.iter().sum();
        for x in p.iter_mut() {
            *x /= total;
        }
    }
    Ok(p)
}
