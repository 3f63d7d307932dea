use std::cell::RefCell;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use super::{AdError, Real};

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy)]
struct Node {
    parents: [u32; 2],
    partials: [f64; 2],
}

/// Append-only record of elementary operations for reverse-mode sweeps.
///
/// A tape is owned by one evaluation (or one worker); it is not `Sync`.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            nodes: RefCell::new(Vec::with_capacity(n)),
        }
    }

    /// New independent variable.
    pub fn var(&self, value: f64) -> Var<'_> {
        let idx = self.push(Node {
            parents: [NONE; 2],
            partials: [0.0; 2],
        });
        Var {
            tape: Some(self),
            idx,
            val: value,
        }
    }

    pub fn vars(&self, values: &[f64]) -> Vec<Var<'_>> {
        values.iter().map(|&v| self.var(v)).collect()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Drops all recorded nodes, keeping the allocation.
    pub fn clear(&mut self) {
        self.nodes.get_mut().clear();
    }

    fn push(&self, node: Node) -> u32 {
        let mut nodes = self.nodes.borrow_mut();
        let idx = nodes.len() as u32;
        assert!(idx != NONE, "tape overflow");
        nodes.push(node);
        idx
    }

    /// Reverse sweep seeded at `output`.
    pub fn gradient(&self, output: Var<'_>) -> Adjoints {
        let nodes = self.nodes.borrow();
        let mut adj = vec![0.0; nodes.len()];
        if output.tape.is_none() {
            return Adjoints(adj);
        }
        adj[output.idx as usize] = 1.0;
        for i in (0..=output.idx as usize).rev() {
            let a = adj[i];
            if a == 0.0 {
                continue;
            }
            let node = &nodes[i];
            for k in 0..2 {
                let p = node.parents[k];
                if p != NONE {
                    adj[p as usize] += node.partials[k] * a;
                }
            }
        }
        Adjoints(adj)
    }
}

/// Adjoint values of every node after a reverse sweep.
pub struct Adjoints(Vec<f64>);

impl Adjoints {
    /// d(output)/d(v); zero for constants.
    pub fn wrt(&self, v: &Var<'_>) -> f64 {
        if v.tape.is_none() {
            0.0
        } else {
            self.0[v.idx as usize]
        }
    }
}

/// Reverse-mode variable. Constants carry no tape and cost nothing to record.
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: Option<&'t Tape>,
    idx: u32,
    val: f64,
}

impl fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tape {
            Some(_) => write!(f, "Var({} @{})", self.val, self.idx),
            None => write!(f, "Const({})", self.val),
        }
    }
}

impl<'t> Var<'t> {
    pub fn constant(val: f64) -> Self {
        Var {
            tape: None,
            idx: NONE,
            val,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.tape.is_none()
    }

    #[inline]
    fn unary(self, val: f64, d: f64) -> Self {
        match self.tape {
            None => Var::constant(val),
            Some(t) => {
                let idx = t.push(Node {
                    parents: [self.idx, NONE],
                    partials: [d, 0.0],
                });
                Var {
                    tape: Some(t),
                    idx,
                    val,
                }
            }
        }
    }

    #[inline]
    fn binary(a: Self, b: Self, val: f64, da: f64, db: f64) -> Self {
        let tape = match (a.tape, b.tape) {
            (None, None) => return Var::constant(val),
            (Some(t), _) | (None, Some(t)) => t,
        };
        let (pa, qa) = if a.tape.is_some() { (a.idx, da) } else { (NONE, 0.0) };
        let (pb, qb) = if b.tape.is_some() { (b.idx, db) } else { (NONE, 0.0) };
        let idx = tape.push(Node {
            parents: [pa, pb],
            partials: [qa, qb],
        });
        Var {
            tape: Some(tape),
            idx,
            val,
        }
    }
}

impl<'t> Add for Var<'t> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Var::binary(self, rhs, self.val + rhs.val, 1.0, 1.0)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Var::binary(self, rhs, self.val - rhs.val, 1.0, -1.0)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Var::binary(self, rhs, self.val * rhs.val, rhs.val, self.val)
    }
}

impl<'t> Div for Var<'t> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let inv = 1.0 / rhs.val;
        let val = self.val * inv;
        Var::binary(self, rhs, val, inv, -val * inv)
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self.unary(-self.val, -1.0)
    }
}

impl<'t> Add<f64> for Var<'t> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: f64) -> Self {
        self.unary(self.val + rhs, 1.0)
    }
}

impl<'t> Sub<f64> for Var<'t> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: f64) -> Self {
        self.unary(self.val - rhs, 1.0)
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: f64) -> Self {
        self.unary(self.val * rhs, rhs)
    }
}

impl<'t> Div<f64> for Var<'t> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: f64) -> Self {
        self.unary(self.val / rhs, 1.0 / rhs)
    }
}

impl<'t> Real for Var<'t> {
    fn from_f64(v: f64) -> Self {
        Var::constant(v)
    }

    fn value(&self) -> f64 {
        self.val
    }

    fn tanh(self) -> Self {
        let t = super::tanh(self.val);
        self.unary(t, 1.0 - t * t)
    }

    fn exp(self) -> Self {
        let e = self.val.exp();
        self.unary(e, e)
    }

    fn sin(self) -> Self {
        self.unary(self.val.sin(), self.val.cos())
    }

    fn cos(self) -> Self {
        self.unary(self.val.cos(), -self.val.sin())
    }

    fn cosh(self) -> Self {
        self.unary(self.val.cosh(), self.val.sinh())
    }

    fn sinh(self) -> Self {
        self.unary(self.val.sinh(), self.val.cosh())
    }

    fn powi(self, n: i32) -> Self {
        let d = if n == 0 {
            0.0
        } else {
            n as f64 * self.val.powi(n - 1)
        };
        self.unary(self.val.powi(n), d)
    }
}

/// Value and gradient of `loss` at `params`.
///
/// `loss` receives one tape variable per parameter and may call
/// [`super::eval_jet`] internally on `Jet2<Var>`, in which case derivative
/// paths through input Hessians are included.
pub fn grad_params<F, E>(loss: F, params: &[f64]) -> Result<(f64, Vec<f64>), E>
where
    F: for<'t> FnOnce(&[Var<'t>]) -> Result<Var<'t>, E>,
    E: From<AdError>,
{
    let tape = Tape::with_capacity(params.len() * 8);
    let vars = tape.vars(params);
    let out = loss(&vars)?;
    let value = out.value();
    if !value.is_finite() {
        return Err(AdError::NonFiniteLoss(value).into());
    }
    let adj = tape.gradient(out);
    let mut grad = Vec::with_capacity(params.len());
    for (index, v) in vars.iter().enumerate() {
        let g = adj.wrt(v);
        if !g.is_finite() {
            return Err(AdError::NonFiniteGradient { index, value: g }.into());
        }
        grad.push(g);
    }
    Ok((value, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gradient_is_identity() {
        let theta = [0.3, -1.2, 2.5, 0.0];
        let (val, g) = grad_params::<_, AdError>(
            |p| {
                let mut acc = Var::constant(0.0);
                for &v in p {
                    acc = acc + v * v;
                }
                Ok(acc * 0.5)
            },
            &theta,
        )
        .unwrap();
        assert!((val - 0.5 * (0.09 + 1.44 + 6.25)).abs() < 1e-15);
        assert_eq!(g, theta.to_vec());
    }

    #[test]
    fn unary_partials_match_closed_forms() {
        let tape = Tape::new();
        let x = tape.var(0.7);
        let checks: Vec<(Var<'_>, f64)> = vec![
            (x.tanh(), 1.0 - 0.7f64.tanh().powi(2)),
            (x.exp(), 0.7f64.exp()),
            (x.sin(), 0.7f64.cos()),
            (x.cos(), -0.7f64.sin()),
            (x.cosh(), 0.7f64.sinh()),
            (x.powi(3), 3.0 * 0.49),
            (Var::constant(1.0) / x, -1.0 / 0.49),
        ];
        for (y, d) in checks {
            let adj = tape.gradient(y);
            assert!((adj.wrt(&x) - d).abs() < 1e-14);
        }
    }

    #[test]
    fn constants_do_not_touch_tape() {
        let tape = Tape::new();
        let a = Var::constant(2.0);
        let b = Var::constant(3.0);
        let c = (a * b + 1.0).tanh();
        assert!(c.is_constant());
        assert!(tape.is_empty());
    }

    #[test]
    fn non_finite_loss_is_reported() {
        let err = grad_params::<_, AdError>(|p| Ok(p[0] / Var::constant(0.0)), &[1.0]).unwrap_err();
        assert!(matches!(err, AdError::NonFiniteLoss(_)));
    }

    #[test]
    fn non_finite_gradient_names_index() {
        // 1/x at x = 1e-200 is finite but its derivative overflows
        let err = grad_params::<_, AdError>(
            |p| Ok(p[0] + (Var::constant(1.0) / p[1]) * 1e-200),
            &[1.0, 1e-200],
        )
        .unwrap_err();
        assert_eq!(
            err,
            AdError::NonFiniteGradient {
                index: 1,
                value: f64::NEG_INFINITY
            }
        );
    }
}
