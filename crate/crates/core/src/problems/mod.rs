//! Benchmark PDE problems on rectangles.
//!
//! Points are 2-vectors in the problem's own coordinate order: `(x, y)` for
//! the elliptic problems, `(x, t)` for Burgers and `(t, x)` for the wave
//! equation. Residuals and constraints act on a [`Jet2`] of the network at
//! the point, so they can be evaluated on plain values, on tape variables
//! for parameter gradients, or on jets of a closed-form solution.

mod burgers_ref;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::autodiff::{Jet2, Real};
use crate::mesh::RectDomain;
use crate::network::Order;
use crate::sampling::BoundarySegment;
use crate::{Error, Result};

pub use burgers_ref::{burgers_cole_hopf, BurgersReference, BURGERS_NU};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemName {
    PoissonPeak,
    Burgers,
    TwoPeaks,
    Wave,
    InversePoisson,
}

impl ProblemName {
    pub const ALL: [ProblemName; 5] = [
        ProblemName::PoissonPeak,
        ProblemName::Burgers,
        ProblemName::TwoPeaks,
        ProblemName::Wave,
        ProblemName::InversePoisson,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProblemName::PoissonPeak => "poisson_peak",
            ProblemName::Burgers => "burgers",
            ProblemName::TwoPeaks => "two_peaks",
            ProblemName::Wave => "wave",
            ProblemName::InversePoisson => "inverse_poisson",
        }
    }

    pub fn build(self) -> PdeProblem {
        match self {
            ProblemName::PoissonPeak => poisson_peak(),
            ProblemName::Burgers => burgers(),
            ProblemName::TwoPeaks => two_peaks(),
            ProblemName::Wave => wave(),
            ProblemName::InversePoisson => inverse_poisson(INVERSE_KAPPA),
        }
    }
}

impl fmt::Display for ProblemName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ProblemName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = ProblemName::ALL.iter().map(|p| p.as_str()).collect();
                Error::InvalidConfig(format!("unknown problem `{s}`; valid names: {}", names.join(", ")))
            })
    }
}

/// Diffusion coefficient used to synthesise observations for the inverse
/// toy problem.
pub const INVERSE_KAPPA: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    PoissonPeak,
    Burgers,
    TwoPeaks,
    Wave,
    InversePoisson { kappa: f64 },
}

/// A boundary or initial-condition operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Constraint {
    pub name: &'static str,
    pub order: Order,
}

#[derive(Debug, Clone)]
pub struct PdeProblem {
    name: ProblemName,
    kind: Kind,
    domain: RectDomain,
    constraints: Vec<Constraint>,
    segments: Vec<BoundarySegment>,
    n_lambda: usize,
}

const DIRICHLET: Constraint = Constraint {
    name: "dirichlet",
    order: Order::Value,
};

fn rect_sides(d: &RectDomain, id: usize) -> Vec<BoundarySegment> {
    let (lo, hi) = (d.lo, d.hi);
    vec![
        BoundarySegment::new(lo, [hi[0], lo[1]], &[id]),
        BoundarySegment::new([hi[0], lo[1]], hi, &[id]),
        BoundarySegment::new(hi, [lo[0], hi[1]], &[id]),
        BoundarySegment::new([lo[0], hi[1]], lo, &[id]),
    ]
}

/// `-Δu = f` on the unit square with a sharp Gaussian peak at the centre.
pub fn poisson_peak() -> PdeProblem {
    let domain = RectDomain::unit_square();
    PdeProblem {
        name: ProblemName::PoissonPeak,
        kind: Kind::PoissonPeak,
        segments: rect_sides(&domain, 0),
        domain,
        constraints: vec![DIRICHLET],
        n_lambda: 0,
    }
}

/// `u_t + u u_x = (0.001/π) u_xx` on `[-1,1] x [0,1]` in `(x, t)`.
pub fn burgers() -> PdeProblem {
    let domain = RectDomain::new([-1.0, 0.0], [1.0, 1.0]).expect("valid domain");
    PdeProblem {
        name: ProblemName::Burgers,
        kind: Kind::Burgers,
        domain,
        constraints: vec![
            Constraint {
                name: "initial",
                order: Order::Value,
            },
            DIRICHLET,
        ],
        segments: vec![
            BoundarySegment::new([-1.0, 0.0], [-1.0, 1.0], &[1]),
            BoundarySegment::new([1.0, 0.0], [1.0, 1.0], &[1]),
            BoundarySegment::new([-1.0, 0.0], [1.0, 0.0], &[0]),
        ],
        n_lambda: 0,
    }
}

/// `-∇·(u ∇(x²+y²)) + Δu = f` on `[-1,1]²` with peaks at `±(0.5, 0.5)`.
pub fn two_peaks() -> PdeProblem {
    let domain = RectDomain::new([-1.0, -1.0], [1.0, 1.0]).expect("valid domain");
    PdeProblem {
        name: ProblemName::TwoPeaks,
        kind: Kind::TwoPeaks,
        segments: rect_sides(&domain, 0),
        domain,
        constraints: vec![DIRICHLET],
        n_lambda: 0,
    }
}

/// `u_tt - 3 u_xx = 0` on `[0,6] x [-5,5]` in `(t, x)`.
pub fn wave() -> PdeProblem {
    let domain = RectDomain::new([0.0, -5.0], [6.0, 5.0]).expect("valid domain");
    PdeProblem {
        name: ProblemName::Wave,
        kind: Kind::Wave,
        domain,
        constraints: vec![
            Constraint {
                name: "initial",
                order: Order::Value,
            },
            Constraint {
                name: "initial_velocity",
                order: Order::Gradient,
            },
            DIRICHLET,
        ],
        segments: vec![
            BoundarySegment::new([0.0, -5.0], [0.0, 5.0], &[0, 1]),
            BoundarySegment::new([0.0, -5.0], [6.0, -5.0], &[2]),
            BoundarySegment::new([0.0, 5.0], [6.0, 5.0], &[2]),
        ],
        n_lambda: 0,
    }
}

/// `-κ Δu = f` on the unit square with `u = sin(πx) sin(πy)` and unknown
/// scalar `κ` as the single trainable PDE parameter. `kappa` generates `f`.
pub fn inverse_poisson(kappa: f64) -> PdeProblem {
    let domain = RectDomain::unit_square();
    PdeProblem {
        name: ProblemName::InversePoisson,
        kind: Kind::InversePoisson { kappa },
        segments: rect_sides(&domain, 0),
        domain,
        constraints: vec![DIRICHLET],
        n_lambda: 1,
    }
}

fn gauss_peak<S: Real>(x: S, y: S, cx: f64, cy: f64) -> S {
    let dx = x - cx;
    let dy = y - cy;
    ((dx * dx + dy * dy) * -1000.0).exp()
}

fn sech_f(v: f64) -> f64 {
    1.0 / v.cosh()
}

impl PdeProblem {
    pub fn name(&self) -> ProblemName {
        self.name
    }

    pub fn domain(&self) -> &RectDomain {
        &self.domain
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn segments(&self) -> &[BoundarySegment] {
        &self.segments
    }

    /// Number of trainable PDE parameters.
    pub fn n_lambda(&self) -> usize {
        self.n_lambda
    }

    /// Starting values for the trainable PDE parameters.
    pub fn lambda_init(&self) -> Vec<f64> {
        vec![1.0; self.n_lambda]
    }

    /// Derivative order the residual needs. No benchmark operator has a
    /// mixed second derivative.
    pub fn residual_order(&self) -> Order {
        Order::DiagHessian
    }

    /// Highest order needed by any constraint.
    pub fn boundary_order(&self) -> Order {
        self.constraints.iter().map(|c| c.order).max().unwrap_or(Order::Value)
    }

    pub fn check_inside(&self, x: [f64; 2]) -> Result<()> {
        let tol = 1e-12 * (self.domain.width() + self.domain.height());
        let d = &self.domain;
        let inside = x[0] >= d.lo[0] - tol && x[0] <= d.hi[0] + tol && x[1] >= d.lo[1] - tol && x[1] <= d.hi[1] + tol;
        if !inside || !x.iter().all(|v| v.is_finite()) {
            return Err(Error::OutsideDomain { x: x[0], y: x[1] });
        }
        Ok(())
    }

    /// PDE residual at `x` given the jet of the network there.
    pub fn residual<S: Real>(&self, u: &Jet2<S>, x: [f64; 2], lambda: &[S]) -> S {
        match self.kind {
            Kind::PoissonPeak => -(u.second(0, 0) + u.second(1, 1)) - self.source(x),
            Kind::Burgers => {
                u.d(1) + u.value() * u.d(0) - u.second(0, 0) * BURGERS_NU
            }
            Kind::TwoPeaks => {
                let (px, py) = (x[0], x[1]);
                let drift = u.d(0) * (2.0 * px) + u.d(1) * (2.0 * py) + u.value() * 4.0;
                (u.second(0, 0) + u.second(1, 1)) - drift - self.source(x)
            }
            Kind::Wave => u.second(0, 0) - u.second(1, 1) * 3.0,
            Kind::InversePoisson { .. } => -(lambda[0] * (u.second(0, 0) + u.second(1, 1))) - self.source(x),
        }
    }

    /// Checked residual: errors outside the domain.
    pub fn residual_at<S: Real>(&self, u: &Jet2<S>, x: [f64; 2], lambda: &[S]) -> Result<S> {
        self.check_inside(x)?;
        Ok(self.residual(u, x, lambda))
    }

    /// Violation of constraint `id` at boundary point `x`.
    pub fn constraint<S: Real>(&self, id: usize, u: &Jet2<S>, x: [f64; 2]) -> S {
        match (self.kind, id) {
            (Kind::Burgers, 0) => u.value() + (PI * x[0]).sin(),
            (Kind::Burgers, _) => u.value(),
            (Kind::Wave, 0) => u.value() - wave_initial(x[1]),
            (Kind::Wave, 1) => u.d(0),
            (Kind::Wave, _) => u.value(),
            _ => u.value() - self.exact(x).unwrap_or(0.0),
        }
    }

    /// Source term `f` in closed form.
    pub fn source(&self, x: [f64; 2]) -> f64 {
        match self.kind {
            Kind::PoissonPeak => {
                let r2 = (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2);
                (4000.0 - 4.0e6 * r2) * gauss_peak(x[0], x[1], 0.5, 0.5)
            }
            Kind::TwoPeaks => {
                let (px, py) = (x[0], x[1]);
                [(0.5, 0.5), (-0.5, -0.5)]
                    .iter()
                    .map(|&(cx, cy)| {
                        let (dx, dy) = (px - cx, py - cy);
                        let g = gauss_peak(px, py, cx, cy);
                        let lap = (4.0e6 * (dx * dx + dy * dy) - 4000.0) * g;
                        let drift = -4000.0 * (px * dx + py * dy) * g + 4.0 * g;
                        lap - drift
                    })
                    .sum()
            }
            Kind::InversePoisson { kappa } => kappa * 2.0 * PI * PI * (PI * x[0]).sin() * (PI * x[1]).sin(),
            Kind::Burgers | Kind::Wave => 0.0,
        }
    }

    /// Closed-form solution over any [`Real`]; `None` for Burgers.
    pub fn exact_expr<S: Real>(&self, x: &[S]) -> Option<S> {
        let (a, b) = (x[0], x[1]);
        match self.kind {
            Kind::PoissonPeak => Some(gauss_peak(a, b, 0.5, 0.5)),
            Kind::TwoPeaks => Some(gauss_peak(a, b, 0.5, 0.5) + gauss_peak(a, b, -0.5, -0.5)),
            Kind::Wave => {
                let (t, x) = (a, b);
                let c = 3f64.sqrt();
                let s = |v: S| (v * 2.0).sech() * 0.5;
                Some(s(x - t * c) - s(x - 10.0 + t * c) + s(x + t * c) - s(x + 10.0 - t * c))
            }
            Kind::InversePoisson { .. } => Some((a * PI).sin() * (b * PI).sin()),
            Kind::Burgers => None,
        }
    }

    pub fn exact(&self, x: [f64; 2]) -> Option<f64> {
        self.exact_expr(&x)
    }

    /// Value of the trainable PDE parameters used to build the problem.
    pub fn true_lambda(&self) -> Vec<f64> {
        match self.kind {
            Kind::InversePoisson { kappa } => vec![kappa],
            _ => Vec::new(),
        }
    }
}

/// Initial displacement of the wave problem, as stated.
pub fn wave_initial(x: f64) -> f64 {
    sech_f(2.0 * x) - 0.5 * sech_f(2.0 * (x - 10.0)) - 0.5 * sech_f(2.0 * (x + 10.0))
}
