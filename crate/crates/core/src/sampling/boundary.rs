//! Equispaced points on boundary and initial-condition segments.

use serde::Serialize;

use crate::{Error, Result};

/// Straight boundary piece and the constraints imposed on it.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySegment {
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub constraints: Vec<usize>,
}

impl BoundarySegment {
    pub fn new(start: [f64; 2], end: [f64; 2], constraints: &[usize]) -> Self {
        BoundarySegment {
            start,
            end,
            constraints: constraints.to_vec(),
        }
    }

    pub fn length(&self) -> f64 {
        (self.end[0] - self.start[0]).hypot(self.end[1] - self.start[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub point: [f64; 2],
    pub constraint: usize,
}

/// Splits `n` locations over the segments in proportion to length
/// (largest remainder, ties to the earlier segment) and places them at
/// cell midpoints along each segment. A location on a segment with several
/// constraints yields one entry per constraint.
pub fn boundary_points(segments: &[BoundarySegment], n: usize) -> Result<Vec<BoundaryPoint>> {
    if n == 0 || segments.is_empty() {
        return Err(Error::InvalidSampling("boundary sampling needs n >= 1 and a segment".into()));
    }
    let lengths: Vec<f64> = segments.iter().map(BoundarySegment::length).collect();
    let total: f64 = lengths.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::InvalidSampling("boundary has zero length".into()));
    }
    let quotas: Vec<f64> = lengths.iter().map(|l| n as f64 * l / total).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut left = n - counts.iter().sum::<usize>().min(n);
    let mut by_rem: Vec<usize> = (0..segments.len()).collect();
    by_rem.sort_by(|&a, &b| {
        let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        rb.total_cmp(&ra)
    });
    for &s in by_rem.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[s] += 1;
        left -= 1;
    }

    let mut out = Vec::new();
    for (seg, &c) in segments.iter().zip(&counts) {
        for i in 0..c {
            let f = (i as f64 + 0.5) / c as f64;
            let p = [
                seg.start[0] + f * (seg.end[0] - seg.start[0]),
                seg.start[1] + f * (seg.end[1] - seg.start[1]),
            ];
            for &constraint in &seg.constraints {
                out.push(BoundaryPoint { point: p, constraint });
            }
        }
    }
    Ok(out)
}
