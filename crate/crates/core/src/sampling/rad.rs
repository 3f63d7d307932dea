//! Residual-proportional resampling baseline.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use crate::mesh::RectDomain;
use crate::{Error, Result};

/// Uniform grid of probe cells; probe nodes sit at cell centres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeGrid {
    pub domain: RectDomain,
    pub nx: usize,
    pub ny: usize,
}

impl ProbeGrid {
    pub fn new(domain: RectDomain, nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidSampling("probe grid needs cells".into()));
        }
        Ok(ProbeGrid { domain, nx, ny })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Probe nodes, row-major with `x` fastest.
    pub fn nodes(&self) -> Vec<[f64; 2]> {
        let mut out = Vec::with_capacity(self.len());
        for j in 0..self.ny {
            for i in 0..self.nx {
                out.push(self.cell_point(i, j, 0.5, 0.5));
            }
        }
        out
    }

    fn cell_point(&self, i: usize, j: usize, fx: f64, fy: f64) -> [f64; 2] {
        let hx = self.domain.width() / self.nx as f64;
        let hy = self.domain.height() / self.ny as f64;
        [
            self.domain.lo[0] + (i as f64 + fx) * hx,
            self.domain.lo[1] + (j as f64 + fy) * hy,
        ]
    }

    pub fn cell_of(&self, p: [f64; 2]) -> usize {
        let fx = (p[0] - self.domain.lo[0]) / self.domain.width() * self.nx as f64;
        let fy = (p[1] - self.domain.lo[1]) / self.domain.height() * self.ny as f64;
        let i = (fx.max(0.0) as usize).min(self.nx - 1);
        let j = (fy.max(0.0) as usize).min(self.ny - 1);
        j * self.nx + i
    }
}

/// Draws `n` points: a probe cell with probability proportional to
/// `|residual|`, then a uniform point inside it. All-zero residuals give
/// uniform cells.
pub fn residual_pdf_sample<R: Rng + ?Sized>(
    grid: &ProbeGrid,
    residuals: &[f64],
    n: usize,
    rng: &mut R,
) -> Result<Vec<[f64; 2]>> {
    if residuals.len() != grid.len() {
        return Err(Error::FieldLength {
            expected: grid.len(),
            got: residuals.len(),
        });
    }
    if residuals.iter().any(|r| !r.is_finite()) {
        return Err(Error::InvalidSampling("non-finite residual".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let weights: Vec<f64> = if residuals.iter().all(|&r| r == 0.0) {
        vec![1.0; residuals.len()]
    } else {
        residuals.iter().map(|r| r.abs()).collect()
    };
    let dist = WeightedIndex::new(&weights).map_err(|e| Error::InvalidSampling(e.to_string()))?;
    Ok((0..n)
        .map(|_| {
            let c = dist.sample(rng);
            let (i, j) = (c % grid.nx, c / grid.nx);
            grid.cell_point(i, j, rng.gen(), rng.gen())
        })
        .collect())
}

/// `n` independent uniform points in the domain.
pub fn uniform_random<R: Rng + ?Sized>(domain: &RectDomain, n: usize, rng: &mut R) -> Vec<[f64; 2]> {
    (0..n).map(|_| domain.from_unit([rng.gen(), rng.gen()])).collect()
}

/// Tensor grid of `nx * ny` cell-centred points.
pub fn grid_points(domain: &RectDomain, nx: usize, ny: usize) -> Vec<[f64; 2]> {
    if nx == 0 || ny == 0 {
        return Vec::new();
    }
    ProbeGrid {
        domain: *domain,
        nx,
        ny,
    }
    .nodes()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> ProbeGrid {
        ProbeGrid::new(RectDomain::new([-1.0, 0.0], [1.0, 1.0]).unwrap(), 10, 10).unwrap()
    }

    #[test]
    fn concentrated_residual() {
        let g = grid();
        let mut r = vec![0.0; 100];
        r[37] = -2.0;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts = residual_pdf_sample(&g, &r, 500, &mut rng).unwrap();
        assert!(pts.iter().all(|&p| g.cell_of(p) == 37));
    }

    #[test]
    fn constant_residual_is_uniform() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 10_000;
        let pts = residual_pdf_sample(&g, &[0.7; 100], n, &mut rng).unwrap();
        let mut hist = [0usize; 100];
        for p in pts {
            hist[g.cell_of(p)] += 1;
        }
        let e = n as f64 / 100.0;
        let chi2: f64 = hist.iter().map(|&o| (o as f64 - e).powi(2) / e).sum();
        // 99 degrees of freedom, 1% upper critical value
        assert!(chi2 < 134.642, "chi2 = {chi2}");
    }

    #[test]
    fn zero_residual_falls_back_and_empty_requests() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(residual_pdf_sample(&g, &[0.0; 100], 0, &mut rng).unwrap().is_empty());
        let pts = residual_pdf_sample(&g, &[0.0; 100], 50, &mut rng).unwrap();
        assert_eq!(pts.len(), 50);
        assert!(residual_pdf_sample(&g, &[0.0; 99], 5, &mut rng).is_err());
    }

    #[test]
    fn simple_generators() {
        let d = RectDomain::new([0.0, -5.0], [6.0, 5.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert!(uniform_random(&d, 100, &mut rng).iter().all(|&p| d.contains(p)));
        let g = grid_points(&d, 3, 2);
        assert_eq!(g.len(), 6);
        assert_eq!(g[0], [1.0, -2.5]);
        assert_eq!(g[5], [5.0, 2.5]);
    }
}
