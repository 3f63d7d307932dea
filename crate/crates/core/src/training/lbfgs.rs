//! Limited-memory BFGS with a strong-Wolfe line search.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LbfgsSettings {
    pub history: usize,
    pub c1: f64,
    pub c2: f64,
    /// Trial step on steepest-descent iterations (the first one and after
    /// a restart); later iterations try the unit step.
    pub learning_rate: f64,
    /// Function evaluations allowed per line search.
    pub max_line_search: usize,
    /// Stop once the largest gradient component falls to this value.
    pub grad_tol: f64,
}

impl Default for LbfgsSettings {
    fn default() -> Self {
        LbfgsSettings {
            history: 50,
            c1: 1e-4,
            c2: 0.9,
            learning_rate: 0.1,
            max_line_search: 25,
            grad_tol: 1e-11,
        }
    }
}

impl LbfgsSettings {
    pub fn validate(&self) -> Result<()> {
        let ok = self.history > 0
            && 0.0 < self.c1
            && self.c1 < self.c2
            && self.c2 < 1.0
            && self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && self.max_line_search > 0
            && self.grad_tol >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid L-BFGS settings {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    /// Best parameters seen.
    pub params: Vec<f64>,
    /// Loss at `params`.
    pub loss: f64,
    /// Best loss after each iteration; `trace[0]` is the initial loss.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    /// Set when the line search failed twice in a row.
    pub terminated_early: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// `-H g` by the two-loop recursion.
fn direction(history: &VecDeque<Pair>, g: &[f64], d: &mut [f64]) {
    for (di, gi) in d.iter_mut().zip(g) {
        *di = -gi;
    }
    let mut alpha = vec![0.0; history.len()];
    for (k, p) in history.iter().enumerate().rev() {
        alpha[k] = p.rho * dot(&p.s, d);
        for (di, yi) in d.iter_mut().zip(&p.y) {
            *di -= alpha[k] * yi;
        }
    }
    if let Some(last) = history.back() {
        let gamma = dot(&last.s, &last.y) / dot(&last.y, &last.y);
        for di in d.iter_mut() {
            *di *= gamma;
        }
    }
    for (k, p) in history.iter().enumerate() {
        let beta = p.rho * dot(&p.y, d);
        for (di, si) in d.iter_mut().zip(&p.s) {
            *di += (alpha[k] - beta) * si;
        }
    }
}

/// Minimiser of the cubic through `(a, fa, ga)` and `(b, fb, gb)`, if real.
fn cubic_min(a: f64, fa: f64, ga: f64, b: f64, fb: f64, gb: f64) -> Option<f64> {
    let d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - ga * gb;
    if !(disc >= 0.0) {
        return None;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * ((gb + d2 - d1) / (gb - ga + 2.0 * d2));
    t.is_finite().then_some(t)
}

/// Minimiser of the parabola with value `fa` and slope `ga` at `a` and value
/// `fb` at `b`, if it opens upwards.
fn quadratic_min(a: f64, fa: f64, ga: f64, b: f64, fb: f64) -> Option<f64> {
    let h = b - a;
    let curv = fb - fa - ga * h;
    if !(curv > 0.0) {
        return None;
    }
    let t = a - ga * h * h / (2.0 * curv);
    t.is_finite().then_some(t)
}

struct Sample {
    alpha: f64,
    f: f64,
    slope: f64,
    g: Vec<f64>,
}

struct Accepted {
    sample: Sample,
    strong: bool,
}

struct LineSearch<'a, F> {
    f: &'a mut F,
    x: &'a [f64],
    d: &'a [f64],
    f0: f64,
    slope0: f64,
    c1: f64,
    c2: f64,
    budget: usize,
    evals: usize,
    trial: Vec<f64>,
}

impl<F: FnMut(&[f64], &mut [f64]) -> Result<f64>> LineSearch<'_, F> {
    /// Evaluates at `alpha`; failures and non-finite values become +inf.
    fn eval(&mut self, alpha: f64) -> Sample {
        self.evals += 1;
        for ((t, xi), di) in self.trial.iter_mut().zip(self.x).zip(self.d) {
            *t = xi + alpha * di;
        }
        let mut g = vec![0.0; self.x.len()];
        let f = match (self.f)(&self.trial, &mut g) {
            Ok(v) if v.is_finite() && g.iter().all(|x| x.is_finite()) => v,
            _ => f64::INFINITY,
        };
        let slope = if f.is_finite() { dot(&g, self.d) } else { f64::NAN };
        Sample { alpha, f, slope, g }
    }

    fn armijo(&self, s: &Sample) -> bool {
        s.f <= self.f0 + self.c1 * s.alpha * self.slope0
    }

    fn curvature(&self, s: &Sample) -> bool {
        s.slope.abs() <= -self.c2 * self.slope0
    }

    fn run(mut self, alpha0: f64) -> (Option<Accepted>, usize) {
        let mut prev = Sample {
            alpha: 0.0,
            f: self.f0,
            slope: self.slope0,
            g: Vec::new(),
        };
        let mut alpha = alpha0;
        let mut first = true;
        while self.evals < self.budget {
            let cur = self.eval(alpha);
            if !cur.f.is_finite() {
                // shrink towards the last good point
                alpha = prev.alpha + 0.5 * (alpha - prev.alpha);
                continue;
            }
            if !self.armijo(&cur) || (!first && cur.f >= prev.f) {
                return self.zoom(prev, cur);
            }
            if self.curvature(&cur) {
                return (Some(Accepted { sample: cur, strong: true }), self.evals);
            }
            if cur.slope >= 0.0 {
                return self.zoom(cur, prev);
            }
            let lo = cur.alpha + 0.01 * (cur.alpha - prev.alpha);
            let hi = 10.0 * cur.alpha;
            alpha = cubic_min(prev.alpha, prev.f, prev.slope, cur.alpha, cur.f, cur.slope)
                .map_or(hi, |t| t.clamp(lo, hi));
            prev = cur;
            first = false;
        }
        let fallback = (prev.alpha > 0.0).then_some(Accepted { sample: prev, strong: false });
        (fallback, self.evals)
    }

    /// `lo` satisfies sufficient decrease and has the lower value; the
    /// minimiser lies between `lo` and `hi`.
    fn zoom(mut self, mut lo: Sample, mut hi: Sample) -> (Option<Accepted>, usize) {
        while self.evals < self.budget {
            let (a, b) = (lo.alpha.min(hi.alpha), lo.alpha.max(hi.alpha));
            let width = b - a;
            if width <= f64::EPSILON * b {
                break;
            }
            let mid = 0.5 * (a + b);
            let t = if hi.f.is_finite() {
                cubic_min(lo.alpha, lo.f, lo.slope, hi.alpha, hi.f, hi.slope)
                    .filter(|&t| t > a + 0.1 * width && t < b - 0.1 * width)
                    .or_else(|| {
                        // a wildly overshooting `hi` makes the cubic useless; the
                        // quadratic through `lo` then shrinks the bracket by up to 100x
                        let overshoot = hi.f - lo.f > 100.0 * lo.slope.abs() * width;
                        overshoot
                            .then(|| quadratic_min(lo.alpha, lo.f, lo.slope, hi.alpha, hi.f))
                            .flatten()
                            .map(|t| t.clamp(a + 0.01 * width, b - 0.01 * width))
                    })
                    .unwrap_or(mid)
            } else {
                mid
            };
            let cur = self.eval(t);
            if !cur.f.is_finite() || !self.armijo(&cur) || cur.f >= lo.f {
                hi = cur;
                continue;
            }
            if self.curvature(&cur) {
                return (Some(Accepted { sample: cur, strong: true }), self.evals);
            }
            if cur.slope * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
        let fallback = (lo.alpha > 0.0).then_some(Accepted { sample: lo, strong: false });
        (fallback, self.evals)
    }
}

/// Minimises `f` from `x0` for at most `epochs` iterations.
///
/// `f` writes the gradient into its second argument and returns the loss.
/// The initial loss must be finite; later failures of `f` are treated as
/// an infinite loss and the line search backs off.
pub fn lbfgs_minimize<F>(mut f: F, x0: &[f64], epochs: usize, settings: &LbfgsSettings) -> Result<OptimResult>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<f64>,
{
    settings.validate()?;
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g)?;
    if !fx.is_finite() {
        return Err(crate::autodiff::AdError::NonFiniteLoss(fx).into());
    }
    let mut out = OptimResult {
        params: x.clone(),
        loss: fx,
        trace: vec![fx],
        iterations: 0,
        evaluations: 1,
        terminated_early: false,
    };
    let mut history: VecDeque<Pair> = VecDeque::with_capacity(settings.history);
    let mut d = vec![0.0; n];
    let mut steepest = true;
    while out.iterations < epochs {
        if g.iter().fold(0.0f64, |m, v| m.max(v.abs())) <= settings.grad_tol {
            break;
        }
        direction(&history, &g, &mut d);
        let mut slope0 = dot(&g, &d);
        if !(slope0 < 0.0) {
            history.clear();
            steepest = true;
            direction(&history, &g, &mut d);
            slope0 = dot(&g, &d);
        }
        let alpha0 = if steepest { settings.learning_rate } else { 1.0 };
        let ls = LineSearch {
            f: &mut f,
            x: &x,
            d: &d,
            f0: fx,
            slope0,
            c1: settings.c1,
            c2: settings.c2,
            budget: settings.max_line_search,
            evals: 0,
            trial: vec![0.0; n],
        };
        let (accepted, evals) = ls.run(alpha0);
        out.evaluations += evals;
        let Some(Accepted { sample, strong }) = accepted else {
            if steepest {
                out.terminated_early = true;
                log::debug!("line search failed after restart at iteration {}", out.iterations);
                break;
            }
            log::debug!("line search failed at iteration {}; restarting", out.iterations);
            history.clear();
            steepest = true;
            continue;
        };
        let s: Vec<f64> = d.iter().map(|di| sample.alpha * di).collect();
        let y: Vec<f64> = sample.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if strong && sy > f64::EPSILON * dot(&y, &y) {
            if history.len() == settings.history {
                history.pop_front();
            }
            history.push_back(Pair { s, y, rho: 1.0 / sy });
        }
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi += sample.alpha * di;
        }
        fx = sample.f;
        g = sample.g;
        steepest = history.is_empty();
        out.iterations += 1;
        if fx < out.loss {
            out.loss = fx;
            out.params.copy_from_slice(&x);
        }
        out.trace.push(out.loss);
    }
    Ok(out)
}
