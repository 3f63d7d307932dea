//! Reference solution of the viscous Burgers problem.
//!
//! With `u(x,0) = -sin(πx)` the Cole-Hopf transform gives
//!
//! ```text
//! u(x,t) = - ∫ sin(π(x-η)) F(x-η) G(η) dη / ∫ F(x-η) G(η) dη
//! F(y) = exp(-cos(πy) / (2πν)),  G(η) = exp(-η² / (4νt))
//! ```
//!
//! The integrals are evaluated by the trapezoidal rule in log space. The
//! solution is odd in `x` and periodic, so it vanishes at `x = ±1`.
//!
//! Grid file format (text):
//!
//! ```text
//! nx,nt,x_min,x_max,t_min,t_max
//! 256,256,-1,1,0,1
//! u(x_0,t_0),u(x_1,t_0),...,u(x_{nx-1},t_0)
//! ...
//! u(x_0,t_{nt-1}),...
//! ```
//!
//! One line per time level, `nx` comma-separated values per line, grid
//! points `x_i = x_min + i (x_max - x_min) / (nx - 1)` and likewise for `t`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::{Error, Result};

pub const BURGERS_NU: f64 = 0.001 / PI;

const MAX_CELLS: usize = 1 << 24;
const HEADER: &str = "nx,nt,x_min,x_max,t_min,t_max";

/// Cole-Hopf solution at `(x, t)` for viscosity `nu`, using `nodes`
/// trapezoid points.
pub fn burgers_cole_hopf(x: f64, t: f64, nu: f64, nodes: usize) -> f64 {
    if t <= 0.0 {
        return -(PI * x).sin();
    }
    let a = 1.0 / (2.0 * PI * nu);
    let s = 4.0 * nu * t;
    // Gaussian tail below exp(-1040) against the exp(±a) range of F
    let half = (s * (2.0 * a + 40.0)).sqrt();
    let n = nodes.max(16);
    let h = 2.0 * half / n as f64;
    let log_w = |eta: f64| -(PI * (x - eta)).cos() * a - eta * eta / s;
    let lmax = (0..=n).map(|k| log_w(-half + k as f64 * h)).fold(f64::NEG_INFINITY, f64::max);
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..=n {
        let eta = -half + k as f64 * h;
        let end = if k == 0 || k == n { 0.5 } else { 1.0 };
        let w = end * (log_w(eta) - lmax).exp();
        num += (PI * (x - eta)).sin() * w;
        den += w;
    }
    -num / den
}

#[derive(Debug, Clone, PartialEq)]
pub struct BurgersReference {
    pub nx: usize,
    pub nt: usize,
    pub x_range: (f64, f64),
    pub t_range: (f64, f64),
    /// Row-major, time outer.
    pub values: Vec<f64>,
}

impl BurgersReference {
    /// Tabulates the Cole-Hopf solution on an `nx x nt` grid over
    /// `[-1,1] x [0,1]`.
    pub fn generate(nx: usize, nt: usize, nodes: usize) -> Result<Self> {
        if nx < 2 || nt < 2 {
            return Err(Error::InvalidSpec("reference grid needs at least 2 points per axis".into()));
        }
        let mut r = BurgersReference {
            nx,
            nt,
            x_range: (-1.0, 1.0),
            t_range: (0.0, 1.0),
            values: Vec::with_capacity(nx * nt),
        };
        for j in 0..nt {
            let t = r.t(j);
            for i in 0..nx {
                let x = r.x(i);
                // exact zeros at the walls and, by symmetry, on x = 0
                let v = if i == 0 || i == nx - 1 || x == 0.0 {
                    0.0
                } else {
                    burgers_cole_hopf(x, t, BURGERS_NU, nodes)
                };
                r.values.push(v);
            }
        }
        Ok(r)
    }

    pub fn x(&self, i: usize) -> f64 {
        grid(self.x_range, self.nx, i)
    }

    pub fn t(&self, j: usize) -> f64 {
        grid(self.t_range, self.nt, j)
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    /// Grid points `(x, t)` in file order.
    pub fn points(&self) -> Vec<[f64; 2]> {
        let mut out = Vec::with_capacity(self.values.len());
        for j in 0..self.nt {
            for i in 0..self.nx {
                out.push([self.x(i), self.t(j)]);
            }
        }
        out
    }

    /// Bilinear interpolation; errors outside the grid.
    pub fn interpolate(&self, x: f64, t: f64) -> Result<f64> {
        let fx = (x - self.x_range.0) / (self.x_range.1 - self.x_range.0) * (self.nx - 1) as f64;
        let ft = (t - self.t_range.0) / (self.t_range.1 - self.t_range.0) * (self.nt - 1) as f64;
        if !(fx >= 0.0 && fx <= (self.nx - 1) as f64 && ft >= 0.0 && ft <= (self.nt - 1) as f64) {
            return Err(Error::OutsideDomain { x, y: t });
        }
        let i = (fx.floor() as usize).min(self.nx - 2);
        let j = (ft.floor() as usize).min(self.nt - 2);
        let (a, b) = (fx - i as f64, ft - j as f64);
        Ok((1.0 - a) * (1.0 - b) * self.value(i, j)
            + a * (1.0 - b) * self.value(i + 1, j)
            + (1.0 - a) * b * self.value(i, j + 1)
            + a * b * self.value(i + 1, j + 1))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.values.len() * 25 + 64);
        let _ = writeln!(s, "{HEADER}");
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            self.nx, self.nt, self.x_range.0, self.x_range.1, self.t_range.0, self.t_range.1
        );
        for row in self.values.chunks(self.nx) {
            for (k, v) in row.iter().enumerate() {
                if k > 0 {
                    s.push(',');
                }
                let _ = write!(s, "{v:.16e}");
            }
            s.push('\n');
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    /// Parses the grid file; never panics on malformed input.
    pub fn parse(text: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse { line, msg };
        let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l.trim_end_matches('\r')));
        match lines.next() {
            Some((_, h)) if h.trim() == HEADER => {}
            _ => return Err(err(1, format!("expected header `{HEADER}`"))),
        }
        let (no, dims) = lines.next().ok_or_else(|| err(2, "missing grid line".into()))?;
        let f: Vec<&str> = dims.split(',').map(str::trim).collect();
        if f.len() != 6 {
            return Err(err(no, "grid line needs 6 fields".into()));
        }
        let nx: usize = f[0].parse().map_err(|_| err(no, "bad nx".into()))?;
        let nt: usize = f[1].parse().map_err(|_| err(no, "bad nt".into()))?;
        let mut r = [0.0_f64; 4];
        for k in 0..4 {
            r[k] = f[2 + k].parse().map_err(|_| err(no, format!("bad range field {}", k + 1)))?;
        }
        if nx < 2 || nt < 2 || nx.checked_mul(nt).is_none_or(|c| c > MAX_CELLS) {
            return Err(err(no, format!("unsupported grid size {nx}x{nt}")));
        }
        if !(r.iter().all(|v| v.is_finite()) && r[0] < r[1] && r[2] < r[3]) {
            return Err(err(no, "invalid ranges".into()));
        }
        let mut values = Vec::with_capacity(nx * nt);
        let mut rows = 0;
        for (no, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            if rows == nt {
                return Err(err(no, "trailing data after the last row".into()));
            }
            let before = values.len();
            for field in line.split(',') {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| err(no, format!("`{}` is not a number", field.trim())))?;
                if !v.is_finite() {
                    return Err(err(no, "non-finite value".into()));
                }
                if values.len() - before == nx {
                    return Err(err(no, format!("row has more than {nx} values")));
                }
                values.push(v);
            }
            if values.len() - before != nx {
                return Err(err(no, format!("row has {} values, expected {nx}", values.len() - before)));
            }
            rows += 1;
        }
        if rows != nt {
            return Err(err(0, format!("expected {nt} rows, found {rows}")));
        }
        Ok(BurgersReference {
            nx,
            nt,
            x_range: (r[0], r[1]),
            t_range: (r[2], r[3]),
            values,
        })
    }
}

fn grid(range: (f64, f64), n: usize, i: usize) -> f64 {
    if i == n - 1 {
        range.1
    } else {
        range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64
    }
}
