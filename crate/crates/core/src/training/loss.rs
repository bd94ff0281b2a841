use ndarray::Array1;

use crate::error::{Error, Result};

/// Probabilities are clamped to [CLAMP, 1 - CLAMP] inside the log.
pub const PROB_CLAMP: f64 = 1e-7;

/// Mean binary cross-entropy over the batch.
pub fn bce_loss(probs: &Array1<f64>, labels: &Array1<f64>) -> Result<f64> {
    check_shapes(probs, labels)?;
    let n = probs.len() as f64;
    let mut total = 0.0;
    for (&p, &y) in probs.iter().zip(labels.iter()) {
        let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        total -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
    }
    Ok(total / n)
}

/// Gradient of [`bce_loss`] wrt the probabilities. Zero where the clamp is
/// active, mirroring the flat loss there.
pub fn bce_grad(probs: &Array1<f64>, labels: &Array1<f64>) -> Array1<f64> {
    let n = probs.len() as f64;
    Array1::from_shape_fn(probs.len(), |i| {
        let p = probs[i];
        if p < PROB_CLAMP || p > 1.0 - PROB_CLAMP {
            return 0.0;
        }
        let y = labels[i];
        (-y / p + (1.0 - y) / (1.0 - p)) / n
    })
}

fn check_shapes(probs: &Array1<f64>, labels: &Array1<f64>) -> Result<()> {
    if probs.len() != labels.len() {
        return Err(Error::validation(format!(
            "probabilities ({}) and labels ({}) differ in length",
            probs.len(),
            labels.len()
        )));
    }
    if probs.is_empty() {
        return Err(Error::validation("empty batch"));
    }
    if labels.iter().any(|&y| y != 0.0 && y != 1.0) {
        return Err(Error::validation("labels must be 0 or 1"));
    }
    if probs.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
        return Err(Error::validation(
            "probabilities must lie strictly in (0, 1)",
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn perfect_prediction_is_at_the_clamp_floor() {
        let probs = array![1.0 - 1e-9, 1e-9];
        let labels = array![1.0, 0.0];
        // clamp pulls both to 1e-7 from the boundary
        let loss = bce_loss(&probs, &labels).unwrap();
        assert!(loss <= 1e-6);
        assert!(loss > 0.0);
    }

    #[test]
    fn maximum_entropy_is_ln_two() {
        let probs = array![0.5, 0.5, 0.5];
        let labels = array![1.0, 0.0, 1.0];
        let loss = bce_loss(&probs, &labels).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((loss - 0.693147).abs() < 1e-6);
    }

    #[test]
    fn worked_two_sample_case() {
        let probs = array![0.9, 0.2];
        let labels = array![1.0, 0.0];
        let loss = bce_loss(&probs, &labels).unwrap();
        let expected = -(0.9f64.ln() + 0.8f64.ln()) / 2.0;
        assert!((loss - expected).abs() < 1e-12);
        assert!((loss - 0.164252).abs() < 1e-6);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let probs = array![0.5, 0.5];
        let labels = array![1.0];
        assert!(bce_loss(&probs, &labels).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let probs = array![0.3, 0.8, 0.55];
        let labels = array![0.0, 1.0, 1.0];
        let g = bce_grad(&probs, &labels);
        let h = 1e-6;
        for i in 0..3 {
            let mut plus = probs.clone();
            plus[i] += h;
            let mut minus = probs.clone();
            minus[i] -= h;
            let numeric = (bce_loss(&plus, &labels).unwrap()
                - bce_loss(&minus, &labels).unwrap())
                / (2.0 * h);
            assert!((g[i] - numeric).abs() < 1e-6);
        }
    }
}
