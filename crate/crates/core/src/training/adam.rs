//! Adam, kept for debugging and warm starts. Training defaults to L-BFGS.

use serde::{Deserialize, Serialize};

use super::OptimResult;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamSettings {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamSettings {
    fn default() -> Self {
        AdamSettings {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Runs `epochs` Adam steps. Returns the best parameters seen; a failed
/// or non-finite evaluation stops the run.
pub fn adam_minimize<F>(mut f: F, x0: &[f64], epochs: usize, s: &AdamSettings) -> Result<OptimResult>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<f64>,
{
    let valid = s.learning_rate > 0.0 && (0.0..1.0).contains(&s.beta1) && (0.0..1.0).contains(&s.beta2) && s.eps > 0.0;
    if !valid {
        return Err(Error::InvalidConfig(format!("invalid Adam settings {s:?}")));
    }
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let (mut m, mut v) = (vec![0.0; n], vec![0.0; n]);
    let f0 = f(&x, &mut g)?;
    if !f0.is_finite() {
        return Err(crate::autodiff::AdError::NonFiniteLoss(f0).into());
    }
    let mut out = OptimResult {
        params: x.clone(),
        loss: f0,
        trace: vec![f0],
        iterations: 0,
        evaluations: 1,
        terminated_early: false,
    };
    for t in 1..=epochs {
        let (b1t, b2t) = (1.0 - s.beta1.powi(t as i32), 1.0 - s.beta2.powi(t as i32));
        for i in 0..n {
            m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
            v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g[i] * g[i];
            x[i] -= s.learning_rate * (m[i] / b1t) / ((v[i] / b2t).sqrt() + s.eps);
        }
        out.evaluations += 1;
        let fx = match f(&x, &mut g) {
            Ok(v) if v.is_finite() => v,
            _ => {
                out.terminated_early = true;
                break;
            }
        };
        out.iterations = t;
        if fx < out.loss {
            out.loss = fx;
            out.params.copy_from_slice(&x);
        }
        out.trace.push(out.loss);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimises_a_quadratic() {
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * (x[0] - 3.0);
            g[1] = 8.0 * (x[1] + 1.0);
            Ok((x[0] - 3.0).powi(2) + 4.0 * (x[1] + 1.0).powi(2))
        };
        let s = AdamSettings { learning_rate: 0.05, ..Default::default() };
        let r = adam_minimize(f, &[0.0, 0.0], 3000, &s).unwrap();
        assert!(r.loss < 1e-8, "{}", r.loss);
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn first_step_has_learning_rate_length() {
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = 100.0;
            Ok(100.0 * x[0])
        };
        let r = adam_minimize(f, &[0.0], 1, &AdamSettings::default()).unwrap();
        assert!((r.params[0] + 1e-3).abs() < 1e-9);
    }
}
