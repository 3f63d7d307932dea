//! Collocation point generators.

mod boundary;
mod rad;
mod recad;
mod sobol;

use std::io::Write;

pub use boundary::{boundary_points, BoundaryPoint, BoundarySegment};
pub use rad::{grid_points, residual_pdf_sample, uniform_random, ProbeGrid};
pub use recad::{recad, recad_counts, validate_epsilon, RecadConfig};
pub use sobol::{sobol_2d, Sobol2};

use crate::mesh::RectDomain;
use crate::Result;

/// Sobol points (origin skipped) mapped onto `domain`.
pub fn sobol_in(domain: &RectDomain, n: usize) -> Vec<[f64; 2]> {
    sobol_2d(n, 1).into_iter().map(|u| domain.from_unit(u)).collect()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CollocationSet {
    pub background: Vec<[f64; 2]>,
    pub adaptive: Vec<[f64; 2]>,
    pub boundary: Vec<BoundaryPoint>,
}

impl CollocationSet {
    /// Background followed by adaptive points.
    pub fn interior(&self) -> impl Iterator<Item = &[f64; 2]> {
        self.background.iter().chain(&self.adaptive)
    }

    pub fn n_interior(&self) -> usize {
        self.background.len() + self.adaptive.len()
    }

    pub fn write_csv_header<W: Write>(mut w: W) -> Result<()> {
        writeln!(w, "iteration,role,x,y")?;
        Ok(())
    }

    /// Rows `(iteration, role, x, y)`; boundary locations repeated for
    /// several constraints are written once.
    pub fn write_csv_rows<W: Write>(&self, iteration: usize, mut w: W) -> Result<()> {
        for p in &self.background {
            writeln!(w, "{iteration},background,{:.17e},{:.17e}", p[0], p[1])?;
        }
        for p in &self.adaptive {
            writeln!(w, "{iteration},adaptive,{:.17e},{:.17e}", p[0], p[1])?;
        }
        let mut last: Option<[f64; 2]> = None;
        for b in &self.boundary {
            if last == Some(b.point) {
                continue;
            }
            last = Some(b.point);
            writeln!(w, "{iteration},boundary,{:.17e},{:.17e}", b.point[0], b.point[1])?;
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, iteration: usize, mut w: W) -> Result<()> {
        Self::write_csv_header(&mut w)?;
        self.write_csv_rows(iteration, w)
    }
}
