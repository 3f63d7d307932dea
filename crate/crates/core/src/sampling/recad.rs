//! Estimator-driven allocation of adaptive points over mesh elements.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::mesh::TriMesh;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecadConfig {
    pub n_adaptive: usize,
    pub epsilon: f64,
}

impl Default for RecadConfig {
    fn default() -> Self {
        RecadConfig {
            n_adaptive: 100,
            epsilon: 0.02,
        }
    }
}

/// Checks `epsilon` lies strictly between `1 / n_elements` and 1.
pub fn validate_epsilon(epsilon: f64, n_elements: usize) -> Result<()> {
    if n_elements == 0 {
        return Err(Error::InvalidSampling("no elements".into()));
    }
    if !(epsilon.is_finite() && epsilon * n_elements as f64 > 1.0 && epsilon < 1.0) {
        return Err(Error::InvalidSampling(format!(
            "epsilon {epsilon} outside (1/{n_elements}, 1)"
        )));
    }
    Ok(())
}

/// Per-element point counts, indexed like `eta`.
///
/// Elements are ranked by descending `eta`, ties by index. Each round keeps
/// the top `floor(epsilon * m)` of the previous selection and hands out
/// `floor(N_r * eta_j / sum)` to each. When the selection is smaller than
/// `1 / epsilon` the remainder goes to the top element.
pub fn recad_counts(eta: &[f64], n_adaptive: usize, epsilon: f64) -> Result<Vec<usize>> {
    validate_epsilon(epsilon, eta.len())?;
    if let Some((k, v)) = eta.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidSampling(format!("eta[{k}] = {v}")));
    }
    let mut counts = vec![0usize; eta.len()];
    if n_adaptive == 0 {
        return Ok(counts);
    }
    if eta.iter().all(|&v| v == 0.0) {
        return Err(Error::NoErrorSignal);
    }
    let mut order: Vec<usize> = (0..eta.len()).collect();
    order.sort_by(|&a, &b| eta[b].total_cmp(&eta[a]));

    let mut remaining = n_adaptive;
    let mut m = eta.len();
    let inv_eps = 1.0 / epsilon;
    while remaining != 0 {
        m = ((epsilon * m as f64).floor() as usize).clamp(1, m);
        let selected = &order[..m];
        let sum: f64 = selected.iter().map(|&j| eta[j]).sum();
        let budget = remaining;
        let mut given = 0;
        for &j in selected {
            let add = ((budget as f64 * eta[j] / sum).floor() as usize).min(budget - given);
            counts[j] += add;
            given += add;
        }
        remaining -= given;
        if (m as f64) < inv_eps {
            counts[order[0]] += remaining;
            remaining = 0;
        }
    }
    Ok(counts)
}

/// Counts plus the sampled points, element by element in index order.
pub fn recad<R: Rng + ?Sized>(
    eta: &[f64],
    mesh: &TriMesh,
    cfg: &RecadConfig,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<[f64; 2]>)> {
    if eta.len() != mesh.n_triangles() {
        return Err(Error::FieldLength {
            expected: mesh.n_triangles(),
            got: eta.len(),
        });
    }
    let counts = recad_counts(eta, cfg.n_adaptive, cfg.epsilon)?;
    let mut points = Vec::with_capacity(cfg.n_adaptive);
    for (t, &c) in counts.iter().enumerate() {
        for _ in 0..c {
            points.push(mesh.sample_in_triangle(t, rng));
        }
    }
    Ok((counts, points))
}
