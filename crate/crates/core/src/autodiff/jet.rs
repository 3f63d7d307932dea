use std::ops::{Add, Div, Mul, Neg, Sub};

use super::{AdError, Fault, Primitive, Real};

/// Largest supported input dimension for a jet.
pub const MAX_DIM: usize = 3;

/// Number of packed jet channels for input dimension `d`:
/// value, `d` first derivatives and the upper triangle of the Hessian.
pub const fn channel_count(d: usize) -> usize {
    1 + d + d * (d + 1) / 2
}

/// Channel of the second derivative `(i, j)` in packed layout
/// (row-major upper triangle after the gradient).
pub fn packed_index(i: usize, j: usize, d: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    // rows before i hold d, d-1, ..., d-i+1 entries
    1 + d + i * d - i * i.saturating_sub(1) / 2 + (j - i)
}

/// Value, gradient and Hessian of a scalar function of up to [`MAX_DIM`]
/// inputs. The Hessian is stored mirrored, so `second(i, j) == second(j, i)`
/// bit for bit.
///
/// A jet of dimension zero is a constant. Jets of different dimension can be
/// combined; missing derivative entries are zero.
#[derive(Clone, Copy, Debug)]
pub struct Jet2<S> {
    dim: usize,
    value: S,
    first: [S; MAX_DIM],
    second: [[S; MAX_DIM]; MAX_DIM],
    fault: Option<Fault>,
}

impl<S: Real> Jet2<S> {
    pub fn constant(value: S) -> Self {
        let z = S::zero();
        Jet2 {
            dim: 0,
            value,
            first: [z; MAX_DIM],
            second: [[z; MAX_DIM]; MAX_DIM],
            fault: None,
        }
    }

    /// The `index`-th coordinate of a `dim`-dimensional input.
    pub fn variable(value: S, index: usize, dim: usize) -> Self {
        assert!(index < dim && dim <= MAX_DIM);
        let mut j = Self::constant(value);
        j.dim = dim;
        j.first[index] = S::from_f64(1.0);
        j
    }

    /// Builds a jet from explicit parts; only the upper triangle of `second`
    /// is read and then mirrored.
    pub fn from_parts(value: S, first: &[S], second: impl Fn(usize, usize) -> S) -> Self {
        let dim = first.len();
        assert!(dim <= MAX_DIM);
        let mut j = Self::constant(value);
        j.dim = dim;
        j.first[..dim].copy_from_slice(first);
        for a in 0..dim {
            for b in a..dim {
                let v = second(a, b);
                j.second[a][b] = v;
                j.second[b][a] = v;
            }
        }
        j
    }

    /// Reads a jet from packed channels (see [`channel_count`]).
    pub fn from_channels(dim: usize, channels: &[S]) -> Self {
        assert_eq!(channels.len(), channel_count(dim));
        Self::from_parts(channels[0], &channels[1..1 + dim], |a, b| {
            channels[packed_index(a, b, dim)]
        })
    }

    /// Writes the packed channels of this jet.
    pub fn to_channels(&self, out: &mut [S]) {
        let d = self.dim;
        assert_eq!(out.len(), channel_count(d));
        out[0] = self.value;
        out[1..1 + d].copy_from_slice(&self.first[..d]);
        for a in 0..d {
            for b in a..d {
                out[packed_index(a, b, d)] = self.second[a][b];
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self) -> S {
        self.value
    }

    pub fn first(&self) -> &[S] {
        &self.first[..self.dim]
    }

    /// Gradient entry; zero beyond the jet's dimension.
    pub fn d(&self, i: usize) -> S {
        self.first[i]
    }

    pub fn second(&self, i: usize, j: usize) -> S {
        self.second[i][j]
    }

    pub fn hessian(&self) -> Vec<Vec<S>> {
        (0..self.dim)
            .map(|i| self.second[i][..self.dim].to_vec())
            .collect()
    }

    pub fn fault(&self) -> Option<Fault> {
        self.fault
    }

    /// Sum of the pure second derivatives.
    pub fn laplacian(&self) -> S {
        let mut acc = S::zero();
        for i in 0..self.dim {
            acc = acc + self.second[i][i];
        }
        acc
    }

    #[inline]
    fn checked(mut self, parent: Option<Fault>, prim: Primitive) -> Self {
        self.fault = parent;
        if self.fault.is_none() && !self.value.value().is_finite() {
            self.fault = Some(Fault::NonFinite(prim));
        }
        self
    }

    /// `g(self)` given `g`, `g'` and `g''` evaluated at `self.value`.
    #[inline]
    fn chain(&self, g0: S, g1: S, g2: S, prim: Primitive) -> Self {
        let d = self.dim;
        let mut out = Self::constant(g0);
        out.dim = d;
        for i in 0..d {
            out.first[i] = g1 * self.first[i];
        }
        for i in 0..d {
            for j in i..d {
                let v = g2 * self.first[i] * self.first[j] + g1 * self.second[i][j];
                out.second[i][j] = v;
                out.second[j][i] = v;
            }
        }
        out.checked(self.fault, prim)
    }

    #[inline]
    fn scale(&self, c: S, value: S, fault: Option<Fault>, prim: Primitive) -> Self {
        let d = self.dim;
        let mut out = Self::constant(value);
        out.dim = d;
        for i in 0..d {
            out.first[i] = self.first[i] * c;
        }
        for i in 0..d {
            for j in i..d {
                let v = self.second[i][j] * c;
                out.second[i][j] = v;
                out.second[j][i] = v;
            }
        }
        out.checked(fault, prim)
    }

    fn recip(&self) -> Self {
        if self.value.value() == 0.0 {
            let mut out = Self::constant(S::from_f64(f64::NAN));
            out.dim = self.dim;
            out.fault = self.fault.or(Some(Fault::DivisionByZero));
            return out;
        }
        let g0 = S::from_f64(1.0) / self.value;
        let g1 = -(g0 * g0);
        let g2 = g0 * g0 * g0 * 2.0;
        self.chain(g0, g1, g2, Primitive::Div)
    }
}

#[inline]
fn merge(a: Option<Fault>, b: Option<Fault>) -> Option<Fault> {
    a.or(b)
}

impl<S: Real> Add for Jet2<S> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let fault = merge(self.fault, rhs.fault);
        if rhs.dim == 0 {
            let mut out = self;
            out.value = self.value + rhs.value;
            return out.checked(fault, Primitive::Add);
        }
        if self.dim == 0 {
            let mut out = rhs;
            out.value = self.value + rhs.value;
            return out.checked(fault, Primitive::Add);
        }
        let d = self.dim.max(rhs.dim);
        let mut out = Self::constant(self.value + rhs.value);
        out.dim = d;
        for i in 0..d {
            out.first[i] = self.first[i] + rhs.first[i];
        }
        for i in 0..d {
            for j in i..d {
                let v = self.second[i][j] + rhs.second[i][j];
                out.second[i][j] = v;
                out.second[j][i] = v;
            }
        }
        out.checked(fault, Primitive::Add)
    }
}

impl<S: Real> Neg for Jet2<S> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(S::from_f64(-1.0), -self.value, self.fault, Primitive::Neg)
    }
}

impl<S: Real> Sub for Jet2<S> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let fault = merge(self.fault, rhs.fault);
        if rhs.dim == 0 {
            let mut out = self;
            out.value = self.value - rhs.value;
            return out.checked(fault, Primitive::Sub);
        }
        let d = self.dim.max(rhs.dim);
        let mut out = Self::constant(self.value - rhs.value);
        out.dim = d;
        for i in 0..d {
            out.first[i] = self.first[i] - rhs.first[i];
        }
        for i in 0..d {
            for j in i..d {
                let v = self.second[i][j] - rhs.second[i][j];
                out.second[i][j] = v;
                out.second[j][i] = v;
            }
        }
        out.checked(fault, Primitive::Sub)
    }
}

impl<S: Real> Mul for Jet2<S> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let fault = merge(self.fault, rhs.fault);
        let value = self.value * rhs.value;
        if rhs.dim == 0 {
            return self.scale(rhs.value, value, fault, Primitive::Mul);
        }
        if self.dim == 0 {
            return rhs.scale(self.value, value, fault, Primitive::Mul);
        }
        let d = self.dim.max(rhs.dim);
        let mut out = Self::constant(value);
        out.dim = d;
        for i in 0..d {
            out.first[i] = self.first[i] * rhs.value + self.value * rhs.first[i];
        }
        for i in 0..d {
            for j in i..d {
                let v = self.second[i][j] * rhs.value
                    + self.first[i] * rhs.first[j]
                    + self.first[j] * rhs.first[i]
                    + self.value * rhs.second[i][j];
                out.second[i][j] = v;
                out.second[j][i] = v;
            }
        }
        out.checked(fault, Primitive::Mul)
    }
}

impl<S: Real> Div for Jet2<S> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        if rhs.dim == 0 {
            let fault = merge(self.fault, rhs.fault);
            if rhs.value.value() == 0.0 {
                let mut out = Self::constant(S::from_f64(f64::NAN));
                out.dim = self.dim;
                out.fault = fault.or(Some(Fault::DivisionByZero));
                return out;
            }
            let inv = S::from_f64(1.0) / rhs.value;
            return self.scale(inv, self.value * inv, fault, Primitive::Div);
        }
        self * rhs.recip()
    }
}

impl<S: Real> Add<f64> for Jet2<S> {
    type Output = Self;
    fn add(self, rhs: f64) -> Self {
        let mut out = self;
        out.value = self.value + rhs;
        out.checked(self.fault, Primitive::Add)
    }
}

impl<S: Real> Sub<f64> for Jet2<S> {
    type Output = Self;
    fn sub(self, rhs: f64) -> Self {
        let mut out = self;
        out.value = self.value - rhs;
        out.checked(self.fault, Primitive::Sub)
    }
}

impl<S: Real> Mul<f64> for Jet2<S> {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.scale(S::from_f64(rhs), self.value * rhs, self.fault, Primitive::Mul)
    }
}

impl<S: Real> Div<f64> for Jet2<S> {
    type Output = Self;
    fn div(self, rhs: f64) -> Self {
        self / Jet2::constant(S::from_f64(rhs))
    }
}

impl<S: Real> Real for Jet2<S> {
    fn from_f64(v: f64) -> Self {
        Jet2::constant(S::from_f64(v))
    }

    fn value(&self) -> f64 {
        self.value.value()
    }

    fn tanh(self) -> Self {
        let t = self.value.tanh();
        let g1 = S::from_f64(1.0) - t * t;
        let g2 = t * g1 * -2.0;
        self.chain(t, g1, g2, Primitive::Tanh)
    }

    fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e, Primitive::Exp)
    }

    fn sin(self) -> Self {
        let s = self.value.sin();
        let c = self.value.cos();
        self.chain(s, c, -s, Primitive::Sin)
    }

    fn cos(self) -> Self {
        let s = self.value.sin();
        let c = self.value.cos();
        self.chain(c, -s, -c, Primitive::Cos)
    }

    fn cosh(self) -> Self {
        let ch = self.value.cosh();
        let sh = self.value.sinh();
        self.chain(ch, sh, ch, Primitive::Cosh)
    }

    fn sinh(self) -> Self {
        let ch = self.value.cosh();
        let sh = self.value.sinh();
        self.chain(sh, ch, sh, Primitive::Sinh)
    }

    fn powi(self, n: i32) -> Self {
        let u = self.value;
        if n < 0 && u.value() == 0.0 {
            let mut out = Self::constant(S::from_f64(f64::NAN));
            out.dim = self.dim;
            out.fault = self.fault.or(Some(Fault::DivisionByZero));
            return out;
        }
        let nf = n as f64;
        let g0 = u.powi(n);
        let g1 = if n == 0 { S::zero() } else { u.powi(n - 1) * nf };
        let g2 = if n == 0 || n == 1 {
            S::zero()
        } else {
            u.powi(n - 2) * (nf * (nf - 1.0))
        };
        self.chain(g0, g1, g2, Primitive::Powi)
    }
}

/// Value, gradient and Hessian of `f` at `x`.
///
/// `f` receives one seeded jet per coordinate. Division by zero or a
/// non-finite intermediate anywhere inside `f` is reported as an error,
/// never returned as a NaN-valued jet.
pub fn eval_jet<S, F>(f: F, x: &[S]) -> Result<Jet2<S>, AdError>
where
    S: Real,
    F: FnOnce(&[Jet2<S>]) -> Jet2<S>,
{
    let d = x.len();
    if d == 0 || d > MAX_DIM {
        return Err(AdError::UnsupportedDimension(d));
    }
    let inputs: Vec<Jet2<S>> = x
        .iter()
        .enumerate()
        .map(|(i, &xi)| Jet2::variable(xi, i, d))
        .collect();
    let mut out = f(&inputs);
    if let Some(fault) = out.fault {
        return Err(fault.into());
    }
    out.dim = d;
    let finite = out.first[..d].iter().all(|v| v.value().is_finite())
        && (0..d).all(|i| (0..d).all(|j| out.second[i][j].value().is_finite()));
    if !finite {
        return Err(AdError::NonFiniteDerivative);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jet(f: impl FnOnce(&[Jet2<f64>]) -> Jet2<f64>, x: &[f64]) -> Jet2<f64> {
        eval_jet(f, x).unwrap()
    }

    #[test]
    fn polynomial_x2y() {
        let j = jet(|v| v[0] * v[0] * v[1], &[2.0, 3.0]);
        assert_eq!(j.value(), 12.0);
        assert_eq!(j.first(), &[12.0, 4.0]);
        assert_eq!(j.hessian(), vec![vec![6.0, 4.0], vec![4.0, 0.0]]);
    }

    #[test]
    fn tanh_at_origin() {
        let j = jet(|v| v[0].tanh(), &[0.0]);
        assert_eq!(j.value(), 0.0);
        assert_eq!(j.first(), &[1.0]);
        assert_eq!(j.second(0, 0), 0.0);
    }

    #[test]
    fn primitive_table_matches_symbolic() {
        type F = fn(&[Jet2<f64>]) -> Jet2<f64>;
        // (f, x, f, f', f'') with hand derivatives
        let x = 0.37_f64;
        let table: Vec<(F, f64, f64, f64)> = vec![
            (|v| v[0].tanh(), x.tanh(), 1.0 - x.tanh().powi(2), -2.0 * x.tanh() * (1.0 - x.tanh().powi(2))),
            (|v| v[0].exp(), x.exp(), x.exp(), x.exp()),
            (|v| v[0].sin(), x.sin(), x.cos(), -x.sin()),
            (|v| v[0].cos(), x.cos(), -x.sin(), -x.cos()),
            (|v| v[0].cosh(), x.cosh(), x.sinh(), x.cosh()),
            (|v| v[0].sinh(), x.sinh(), x.cosh(), x.sinh()),
            (|v| v[0].powi(4), x.powi(4), 4.0 * x.powi(3), 12.0 * x.powi(2)),
            (|v| v[0].powi(-2), x.powi(-2), -2.0 * x.powi(-3), 6.0 * x.powi(-4)),
            (|v| Jet2::from_f64(1.0) / v[0], 1.0 / x, -1.0 / (x * x), 2.0 / x.powi(3)),
            (|v| v[0] * 3.0 + 2.0, 3.0 * x + 2.0, 3.0, 0.0),
            (|v| -(v[0] - 1.5), 1.5 - x, -1.0, 0.0),
            (|v| v[0] * v[0] / 4.0, x * x / 4.0, x / 2.0, 0.5),
            (|v| v[0].sech(), 1.0 / x.cosh(), -x.tanh() / x.cosh(), (2.0 * x.tanh().powi(2) - 1.0) / x.cosh()),
        ];
        for (k, (f, v0, v1, v2)) in table.into_iter().enumerate() {
            let j = jet(f, &[x]);
            assert!((j.value() - v0).abs() <= 1e-12, "row {k} value");
            assert!((j.first()[0] - v1).abs() <= 1e-12, "row {k} first");
            assert!((j.second(0, 0) - v2).abs() <= 1e-12, "row {k} second");
        }
    }

    #[test]
    fn mixed_partials_are_mirrored() {
        let j = jet(|v| (v[0] * v[1]).sin() * v[2].exp(), &[0.3, -0.8, 0.1]);
        for i in 0..3 {
            for k in 0..3 {
                assert_eq!(j.second(i, k).to_bits(), j.second(k, i).to_bits());
            }
        }
        let x = 0.3f64;
        let y = -0.8f64;
        let z = 0.1f64;
        let expected_xy = ((x * y).cos() - x * y * (x * y).sin()) * z.exp();
        assert!((j.second(0, 1) - expected_xy).abs() < 1e-14);
    }

    #[test]
    fn division_by_zero_is_an_error() {
        let err = eval_jet(|v| Jet2::from_f64(1.0) / (v[0] - 1.0), &[1.0]).unwrap_err();
        assert_eq!(err, AdError::DivisionByZero);
        let err = eval_jet(|v| (v[0] - v[0]).powi(-1), &[2.0]).unwrap_err();
        assert_eq!(err, AdError::DivisionByZero);
        let err = eval_jet(|v| v[0] / 0.0, &[2.0]).unwrap_err();
        assert_eq!(err, AdError::DivisionByZero);
    }

    #[test]
    fn overflow_reports_offending_primitive() {
        let err = eval_jet(|v| (v[0] * 1000.0).exp() * 0.0, &[1.0]).unwrap_err();
        assert_eq!(err, AdError::NonFinite(Primitive::Exp));
    }

    #[test]
    fn dimension_limits() {
        assert_eq!(
            eval_jet(|v: &[Jet2<f64>]| v[0], &[]).unwrap_err(),
            AdError::UnsupportedDimension(0)
        );
        assert_eq!(
            eval_jet(|v: &[Jet2<f64>]| v[0], &[0.0; 4]).unwrap_err(),
            AdError::UnsupportedDimension(4)
        );
    }

    #[test]
    fn channel_packing_round_trips() {
        for d in 1..=MAX_DIM {
            let mut seen = vec![false; channel_count(d)];
            for i in 0..d {
                for j in i..d {
                    let k = packed_index(i, j, d);
                    assert!(!seen[k]);
                    seen[k] = true;
                    assert_eq!(k, packed_index(j, i, d));
                }
            }
            assert!(seen[1 + d..].iter().all(|&s| s));
        }
        let x = [0.4, -0.2];
        let j = jet(|v| (v[0] * v[1] + v[0].sin()).tanh(), &x);
        let mut ch = vec![0.0; channel_count(2)];
        j.to_channels(&mut ch);
        let back = Jet2::from_channels(2, &ch);
        assert_eq!(back.value(), j.value());
        assert_eq!(back.hessian(), j.hessian());
    }

    #[test]
    fn constant_output_has_zero_derivatives() {
        let j = jet(|_| Jet2::from_f64(5.0), &[1.0, 2.0]);
        assert_eq!(j.value(), 5.0);
        assert_eq!(j.first(), &[0.0, 0.0]);
        assert_eq!(j.laplacian(), 0.0);
    }
}
