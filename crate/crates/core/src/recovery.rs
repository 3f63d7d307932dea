//! Gradient recovery and the element-wise recovery estimator.
//!
//! Every recovery method works on the patch of triangles around a vertex
//! `z` in coordinates centred at `z`, and returns the recovered gradient
//! at `z`. The estimator on a triangle `K` is the L2 norm over `K` of the
//! constant interpolant gradient minus the linear interpolant of the
//! recovered nodal gradients.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::mesh::{element_gradients, ElementConstVectorField, NodalScalarField, NodalVectorField, TriMesh};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoveryMethod {
    #[default]
    WeightedAveraging,
    LocalL2Projection,
    LeastSquaresFit,
}

/// Recovered nodal gradient plus the number of vertices where a singular
/// local system forced weighted averaging.
#[derive(Debug, Clone, PartialEq)]
pub struct Recovered {
    pub gradient: NodalVectorField,
    pub fallbacks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorIndicator {
    pub eta: Vec<f64>,
    pub fallbacks: usize,
}

impl ErrorIndicator {
    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }

    /// `sqrt(sum eta_K^2)`.
    pub fn global(&self) -> f64 {
        self.eta.iter().map(|e| e * e).sum::<f64>().sqrt()
    }

    /// CSV dump `(triangle_id, eta)`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "triangle_id,eta")?;
        for (k, e) in self.eta.iter().enumerate() {
            writeln!(w, "{k},{e:.17e}")?;
        }
        Ok(())
    }
}

pub fn recover_gradient(mesh: &TriMesh, u: &NodalScalarField, method: RecoveryMethod) -> Result<Recovered> {
    let grads = element_gradients(mesh, u)?;
    recover_from_elements(mesh, &grads, method)
}

/// Recovery from precomputed element gradients.
pub fn recover_from_elements(
    mesh: &TriMesh,
    grads: &ElementConstVectorField,
    method: RecoveryMethod,
) -> Result<Recovered> {
    if grads.0.len() != mesh.n_triangles() {
        return Err(Error::FieldLength {
            expected: mesh.n_triangles(),
            got: grads.0.len(),
        });
    }
    let mut out = Vec::with_capacity(mesh.n_vertices());
    let mut fallbacks = 0;
    for z in 0..mesh.n_vertices() {
        let g = match method {
            RecoveryMethod::WeightedAveraging => Some(weighted_average(mesh, grads, z)),
            RecoveryMethod::LocalL2Projection => l2_projection(mesh, grads, z),
            RecoveryMethod::LeastSquaresFit => least_squares(mesh, grads, z),
        };
        out.push(g.unwrap_or_else(|| {
            fallbacks += 1;
            weighted_average(mesh, grads, z)
        }));
    }
    Ok(Recovered {
        gradient: NodalVectorField(out),
        fallbacks,
    })
}

fn weighted_average(mesh: &TriMesh, grads: &ElementConstVectorField, z: usize) -> [f64; 2] {
    let patch = mesh.patch(z);
    let total: f64 = patch.iter().map(|&t| mesh.area(t)).sum();
    let mut g = [0.0, 0.0];
    for &t in patch {
        let w = mesh.area(t) / total;
        g[0] += w * grads.0[t][0];
        g[1] += w * grads.0[t][1];
    }
    g
}

/// Patch coordinates: centred at `z` and divided by a patch length so the
/// normal matrix stays well scaled. The constant coefficient, which is the
/// value at `z`, does not depend on the scaling.
struct LocalFrame {
    origin: [f64; 2],
    inv_h: f64,
}

impl LocalFrame {
    fn new(mesh: &TriMesh, z: usize) -> Self {
        let area: f64 = mesh.patch(z).iter().map(|&t| mesh.area(t)).sum();
        LocalFrame {
            origin: mesh.vertices()[z],
            inv_h: 1.0 / area.sqrt(),
        }
    }

    fn basis(&self, p: [f64; 2]) -> [f64; 3] {
        [
            1.0,
            (p[0] - self.origin[0]) * self.inv_h,
            (p[1] - self.origin[1]) * self.inv_h,
        ]
    }
}

fn l2_projection(mesh: &TriMesh, grads: &ElementConstVectorField, z: usize) -> Option<[f64; 2]> {
    let frame = LocalFrame::new(mesh, z);
    let mut m = [[0.0; 3]; 3];
    let mut rhs = [[0.0; 3]; 2];
    for &t in mesh.patch(z) {
        let area = mesh.area(t);
        let [a, b, c] = mesh.triangle_vertices(t);
        for (p, q) in [(a, b), (b, c), (c, a)] {
            let phi = frame.basis([(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0]);
            for k in 0..3 {
                for l in 0..3 {
                    m[k][l] += area / 3.0 * phi[k] * phi[l];
                }
            }
        }
        let phi = frame.basis(mesh.barycenter(t));
        for k in 0..3 {
            rhs[0][k] += area * grads.0[t][0] * phi[k];
            rhs[1][k] += area * grads.0[t][1] * phi[k];
        }
    }
    solve_both(m, rhs)
}

fn least_squares(mesh: &TriMesh, grads: &ElementConstVectorField, z: usize) -> Option<[f64; 2]> {
    let patch = mesh.patch(z);
    if patch.len() < 3 {
        return None;
    }
    let frame = LocalFrame::new(mesh, z);
    let mut m = [[0.0; 3]; 3];
    let mut rhs = [[0.0; 3]; 2];
    for &t in patch {
        let phi = frame.basis(mesh.barycenter(t));
        for k in 0..3 {
            for l in 0..3 {
                m[k][l] += phi[k] * phi[l];
            }
            rhs[0][k] += grads.0[t][0] * phi[k];
            rhs[1][k] += grads.0[t][1] * phi[k];
        }
    }
    solve_both(m, rhs)
}

fn solve_both(m: [[f64; 3]; 3], rhs: [[f64; 3]; 2]) -> Option<[f64; 2]> {
    let gx = solve3(m, rhs[0])?;
    let gy = solve3(m, rhs[1])?;
    Some([gx[0], gy[0]])
}

/// Gaussian elimination with partial pivoting; `None` when a pivot is
/// negligible relative to the matrix scale.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    let scale = a.iter().flatten().fold(0.0_f64, |s, v| s.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return None;
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-10 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Three-point edge-midpoint rule, exact for quadratics.
pub fn edge_midpoint_rule(tri: [[f64; 2]; 3], f: impl Fn([f64; 2]) -> f64) -> f64 {
    let [a, b, c] = tri;
    let area = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs();
    let mid = |p: [f64; 2], q: [f64; 2]| [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0];
    area / 3.0 * (f(mid(a, b)) + f(mid(b, c)) + f(mid(c, a)))
}

/// Per-element estimator from a nodal field.
pub fn estimate(mesh: &TriMesh, u: &NodalScalarField, method: RecoveryMethod) -> Result<ErrorIndicator> {
    let grads = element_gradients(mesh, u)?;
    let rec = recover_from_elements(mesh, &grads, method)?;
    let eta = element_estimator(mesh, &grads, &rec.gradient);
    Ok(ErrorIndicator {
        eta,
        fallbacks: rec.fallbacks,
    })
}

/// `eta_K = || grad u_I - G u_I ||_{0,K}` by the edge-midpoint rule, where
/// the recovered field at an edge midpoint is the mean of its endpoints.
pub fn element_estimator(mesh: &TriMesh, grads: &ElementConstVectorField, recovered: &NodalVectorField) -> Vec<f64> {
    let g = &recovered.0;
    mesh.triangles()
        .iter()
        .enumerate()
        .map(|(t, &[a, b, c])| {
            let gk = grads.0[t];
            let sq = |p: usize, q: usize| {
                let ex = gk[0] - 0.5 * (g[p][0] + g[q][0]);
                let ey = gk[1] - 0.5 * (g[p][1] + g[q][1]);
                ex * ex + ey * ey
            };
            (mesh.area(t) / 3.0 * (sq(a, b) + sq(b, c) + sq(c, a))).sqrt()
        })
        .collect()
}
