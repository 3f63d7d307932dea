//! Regular diagonal triangulation of a rectangle.
//!
//! Vertices are numbered row-major, `v = j * (nx + 1) + i`. Cell `(i, j)`
//! is split along its lower-left to upper-right diagonal into triangle
//! `2 * (j * nx + i)` (below the diagonal) and `2 * (j * nx + i) + 1`
//! (above it). Both are counter-clockwise.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectDomain {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl RectDomain {
    pub fn new(lo: [f64; 2], hi: [f64; 2]) -> Result<Self> {
        if !(lo[0] < hi[0] && lo[1] < hi[1]) || !lo.iter().chain(&hi).all(|v| v.is_finite()) {
            return Err(Error::InvalidDomain(format!("{lo:?} .. {hi:?}")));
        }
        Ok(RectDomain { lo, hi })
    }

    pub fn unit_square() -> Self {
        RectDomain {
            lo: [0.0, 0.0],
            hi: [1.0, 1.0],
        }
    }

    pub fn width(&self) -> f64 {
        self.hi[0] - self.lo[0]
    }

    pub fn height(&self) -> f64 {
        self.hi[1] - self.lo[1]
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.lo[0] && p[0] <= self.hi[0] && p[1] >= self.lo[1] && p[1] <= self.hi[1]
    }

    /// Affine image of a point of the unit square.
    pub fn from_unit(&self, u: [f64; 2]) -> [f64; 2] {
        [
            self.lo[0] + u[0] * self.width(),
            self.lo[1] + u[1] * self.height(),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct TriMesh {
    domain: RectDomain,
    nx: usize,
    ny: usize,
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    patches: Vec<Vec<usize>>,
    areas: Vec<f64>,
    barycenters: Vec<[f64; 2]>,
}

pub fn build_diagonal_mesh(domain: RectDomain, nx: usize, ny: usize) -> Result<TriMesh> {
    TriMesh::diagonal(domain, nx, ny)
}

impl TriMesh {
    pub fn diagonal(domain: RectDomain, nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidDomain(format!(
                "mesh needs at least one cell per axis, got {nx}x{ny}"
            )));
        }
        let hx = domain.width() / nx as f64;
        let hy = domain.height() / ny as f64;
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            let y = if j == ny { domain.hi[1] } else { domain.lo[1] + j as f64 * hy };
            for i in 0..=nx {
                let x = if i == nx { domain.hi[0] } else { domain.lo[0] + i as f64 * hx };
                vertices.push([x, y]);
            }
        }
        let vid = |i: usize, j: usize| j * (nx + 1) + i;
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let v00 = vid(i, j);
                let v10 = vid(i + 1, j);
                let v11 = vid(i + 1, j + 1);
                let v01 = vid(i, j + 1);
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
        let mut patches = vec![Vec::new(); vertices.len()];
        let mut areas = Vec::with_capacity(triangles.len());
        let mut barycenters = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                patches[v].push(t);
            }
            let [a, b, c] = tri.map(|v| vertices[v]);
            let area = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
            if area <= 0.0 {
                return Err(Error::DegenerateTriangle(t));
            }
            areas.push(area);
            barycenters.push([(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]);
        }
        Ok(TriMesh {
            domain,
            nx,
            ny,
            vertices,
            triangles,
            patches,
            areas,
            barycenters,
        })
    }

    pub fn domain(&self) -> &RectDomain {
        &self.domain
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Triangles incident to vertex `v`, in increasing index order.
    pub fn patch(&self, v: usize) -> &[usize] {
        &self.patches[v]
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn barycenter(&self, t: usize) -> [f64; 2] {
        self.barycenters[t]
    }

    pub fn triangle_vertices(&self, t: usize) -> [[f64; 2]; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    /// Barycentric coordinates of `p` with respect to triangle `t`.
    pub fn barycentric(&self, t: usize, p: [f64; 2]) -> [f64; 3] {
        let [a, b, c] = self.triangle_vertices(t);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
        let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
        [1.0 - l1 - l2, l1, l2]
    }

    /// Triangle containing `p`; points on shared edges go to the lowest
    /// triangle index among those containing them.
    pub fn locate(&self, p: [f64; 2]) -> Result<usize> {
        if !(p[0].is_finite() && p[1].is_finite()) || !self.domain.contains(p) {
            return Err(Error::OutsideDomain { x: p[0], y: p[1] });
        }
        let fx = (p[0] - self.domain.lo[0]) / self.domain.width() * self.nx as f64;
        let fy = (p[1] - self.domain.lo[1]) / self.domain.height() * self.ny as f64;
        let ci = (fx.floor() as usize).min(self.nx - 1);
        let cj = (fy.floor() as usize).min(self.ny - 1);
        let tol = 1e-12;
        let mut best: Option<usize> = None;
        for j in cj.saturating_sub(1)..=cj {
            for i in ci.saturating_sub(1)..=ci {
                for k in 0..2 {
                    let t = 2 * (j * self.nx + i) + k;
                    if best.is_some_and(|b| b <= t) {
                        continue;
                    }
                    if self.barycentric(t, p).iter().all(|&l| l >= -tol) {
                        best = Some(t);
                    }
                }
            }
        }
        // rounding can leave a point a hair outside every candidate
        Ok(best.unwrap_or(2 * (cj * self.nx + ci)))
    }

    /// Uniform point inside triangle `t` (square-root map).
    pub fn sample_in_triangle<R: Rng + ?Sized>(&self, t: usize, rng: &mut R) -> [f64; 2] {
        let [a, b, c] = self.triangle_vertices(t);
        let r1: f64 = rng.gen();
        let r2: f64 = rng.gen();
        let s = r1.sqrt();
        let wa = 1.0 - s;
        let wb = s * (1.0 - r2);
        let wc = s * r2;
        [
            wa * a[0] + wb * b[0] + wc * c[0],
            wa * a[1] + wb * b[1] + wc * c[1],
        ]
    }

    /// CSV dump: a `vertex` section `(id,x,y)` then a `triangle` section
    /// `(id,v0,v1,v2)`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "id,x,y")?;
        for (k, v) in self.vertices.iter().enumerate() {
            writeln!(w, "{k},{:.17e},{:.17e}", v[0], v[1])?;
        }
        writeln!(w)?;
        writeln!(w, "id,v0,v1,v2")?;
        for (k, t) in self.triangles.iter().enumerate() {
            writeln!(w, "{k},{},{},{}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}

/// One value per mesh vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalScalarField(pub Vec<f64>);

/// One 2-vector per mesh vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalVectorField(pub Vec<[f64; 2]>);

/// One 2-vector per triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementConstVectorField(pub Vec<[f64; 2]>);

/// Samples `f` at every vertex.
pub fn interpolate_nodal(mesh: &TriMesh, mut f: impl FnMut([f64; 2]) -> f64) -> Result<NodalScalarField> {
    let mut out = Vec::with_capacity(mesh.n_vertices());
    for (vertex, &p) in mesh.vertices().iter().enumerate() {
        let value = f(p);
        if !value.is_finite() {
            return Err(Error::NonFiniteNodal { vertex, value });
        }
        out.push(value);
    }
    Ok(NodalScalarField(out))
}

/// Builds a nodal field from precomputed vertex values.
pub fn nodal_from_values(mesh: &TriMesh, values: Vec<f64>) -> Result<NodalScalarField> {
    if values.len() != mesh.n_vertices() {
        return Err(Error::FieldLength {
            expected: mesh.n_vertices(),
            got: values.len(),
        });
    }
    if let Some((vertex, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFiniteNodal { vertex, value });
    }
    Ok(NodalScalarField(values))
}

/// Gradient of the piecewise-linear interpolant on triangle `t`.
pub fn triangle_gradient(mesh: &TriMesh, u: &NodalScalarField, t: usize) -> Result<[f64; 2]> {
    let [ia, ib, ic] = mesh.triangles()[t];
    let [a, b, c] = mesh.triangle_vertices(t);
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    if det == 0.0 {
        return Err(Error::DegenerateTriangle(t));
    }
    let du1 = u.0[ib] - u.0[ia];
    let du2 = u.0[ic] - u.0[ia];
    let gx = (du1 * (c[1] - a[1]) - du2 * (b[1] - a[1])) / det;
    let gy = (du2 * (b[0] - a[0]) - du1 * (c[0] - a[0])) / det;
    Ok([gx, gy])
}

pub fn element_gradients(mesh: &TriMesh, u: &NodalScalarField) -> Result<ElementConstVectorField> {
    check_len(mesh.n_vertices(), u.0.len())?;
    (0..mesh.n_triangles())
        .map(|t| triangle_gradient(mesh, u, t))
        .collect::<Result<Vec<_>>>()
        .map(ElementConstVectorField)
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::FieldLength { expected, got });
    }
    Ok(())
}

/// Fields that can be interpolated linearly inside a triangle.
pub trait NodalField {
    type Value;
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn combine(&self, idx: [usize; 3], weights: [f64; 3]) -> Self::Value;
}

impl NodalField for NodalScalarField {
    type Value = f64;
    fn len(&self) -> usize {
        self.0.len()
    }
    fn combine(&self, idx: [usize; 3], w: [f64; 3]) -> f64 {
        w[0] * self.0[idx[0]] + w[1] * self.0[idx[1]] + w[2] * self.0[idx[2]]
    }
}

impl NodalField for NodalVectorField {
    type Value = [f64; 2];
    fn len(&self) -> usize {
        self.0.len()
    }
    fn combine(&self, idx: [usize; 3], w: [f64; 3]) -> [f64; 2] {
        let g = |k: usize| w[0] * self.0[idx[0]][k] + w[1] * self.0[idx[1]][k] + w[2] * self.0[idx[2]][k];
        [g(0), g(1)]
    }
}

/// Barycentric interpolation of a nodal field at `p`.
pub fn interpolate_linear<F: NodalField>(mesh: &TriMesh, field: &F, p: [f64; 2]) -> Result<F::Value> {
    check_len(mesh.n_vertices(), field.len())?;
    let t = mesh.locate(p)?;
    let w = mesh.barycentric(t, p);
    Ok(field.combine(mesh.triangles()[t], w))
}
