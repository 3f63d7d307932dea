//! Loss terms: PDE residual, boundary constraints and data misfit.
//!
//! The free functions evaluate point by point through [`forward_jet`] and
//! serve as the reference. [`LossEvaluator`] computes the same losses and
//! their parameter gradients with the batched engine: the network's output
//! channels are propagated in chunks, each point's residual is
//! differentiated with respect to those channels and the PDE parameters on
//! a small tape, and the channel adjoints are pulled back through the
//! network in one reverse sweep.

use serde::{Deserialize, Serialize};

use crate::autodiff::{channel_count, Jet2, Real, Tape, Var};
use crate::network::{forward, forward_jet, BatchWorkspace, Layout, MlpSpec, Order};
use crate::problems::PdeProblem;
use crate::sampling::{BoundaryPoint, CollocationSet};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossWeights {
    pub w_f: f64,
    pub w_b: f64,
    pub w_i: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            w_f: 1.0,
            w_b: 1.0,
            w_i: 1.0,
        }
    }
}

/// Observed solution value at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub point: [f64; 2],
    pub value: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossParts {
    pub total: f64,
    pub pde: f64,
    pub boundary: f64,
    pub data: f64,
}

fn non_finite(point: [f64; 2], value: f64) -> Error {
    Error::NonFiniteResidual {
        point: point.to_vec(),
        value,
    }
}

fn mean_sq(sum: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Mean squared PDE residual over `points`.
pub fn loss_pde(problem: &PdeProblem, spec: &MlpSpec, points: &[[f64; 2]], params: &[f64]) -> Result<f64> {
    let layout = Layout::new(spec, problem.n_lambda());
    let lambda = &params[layout.n_network()..];
    let mut sum = 0.0;
    for &x in points {
        let jet = forward_jet(spec, &params[..layout.n_network()], &x)?;
        let r = problem.residual_at(&jet, x, lambda)?;
        if !r.is_finite() {
            return Err(non_finite(x, r));
        }
        sum += r * r;
    }
    Ok(mean_sq(sum, points.len()))
}

/// Mean squared constraint violation over `(point, constraint)` pairs.
pub fn loss_boundary(problem: &PdeProblem, spec: &MlpSpec, points: &[BoundaryPoint], params: &[f64]) -> Result<f64> {
    let mut sum = 0.0;
    for b in points {
        let jet = forward_jet(spec, params, &b.point)?;
        let c = problem.constraint(b.constraint, &jet, b.point);
        if !c.is_finite() {
            return Err(non_finite(b.point, c));
        }
        sum += c * c;
    }
    Ok(mean_sq(sum, points.len()))
}

/// Mean squared misfit against observations.
pub fn loss_data(spec: &MlpSpec, observations: &[Observation], params: &[f64]) -> Result<f64> {
    let mut sum = 0.0;
    for o in observations {
        let u = forward(spec, params, &o.point)?;
        let e = u - o.value;
        if !e.is_finite() {
            return Err(non_finite(o.point, e));
        }
        sum += e * e;
    }
    Ok(mean_sq(sum, observations.len()))
}

/// `w_f L_f + w_b L_b + w_i L_i`, with `L_f` over background and adaptive
/// points jointly.
pub fn total_loss(
    problem: &PdeProblem,
    spec: &MlpSpec,
    colloc: &CollocationSet,
    observations: &[Observation],
    params: &[f64],
    weights: &LossWeights,
) -> Result<LossParts> {
    let interior: Vec<[f64; 2]> = colloc.interior().copied().collect();
    let pde = loss_pde(problem, spec, &interior, params)?;
    let boundary = loss_boundary(problem, spec, &colloc.boundary, params)?;
    let data = loss_data(spec, observations, params)?;
    Ok(LossParts {
        total: weights.w_f * pde + weights.w_b * boundary + weights.w_i * data,
        pde,
        boundary,
        data,
    })
}

/// Total loss on the tape, for gradient cross-checks on small networks.
pub fn total_loss_tape<'t>(
    problem: &PdeProblem,
    spec: &MlpSpec,
    colloc: &CollocationSet,
    observations: &[Observation],
    params: &[Var<'t>],
    weights: &LossWeights,
) -> Result<Var<'t>> {
    let n_net = Layout::new(spec, problem.n_lambda()).n_network();
    let (net, lambda) = params.split_at(n_net);
    let mut pde = Var::constant(0.0);
    for &x in colloc.interior() {
        let jet = crate::network::forward_jet_generic(spec, net, &x)?;
        let r = problem.residual(&jet, x, lambda);
        pde = pde + r * r;
    }
    let mut bnd = Var::constant(0.0);
    for b in &colloc.boundary {
        let jet = crate::network::forward_jet_generic(spec, net, &b.point)?;
        let c = problem.constraint(b.constraint, &jet, b.point);
        bnd = bnd + c * c;
    }
    let mut data = Var::constant(0.0);
    for o in observations {
        let x = [Var::constant(o.point[0]), Var::constant(o.point[1])];
        let e = forward(spec, net, &x)? - o.value;
        data = data + e * e;
    }
    let scale = |n: usize| if n == 0 { 0.0 } else { 1.0 / n as f64 };
    Ok(pde * (weights.w_f * scale(colloc.n_interior()))
        + bnd * (weights.w_b * scale(colloc.boundary.len()))
        + data * (weights.w_i * scale(observations.len())))
}

const CHUNK: usize = 128;

/// Batched loss and gradient evaluation for a fixed problem and network.
pub struct LossEvaluator {
    problem: PdeProblem,
    layout: Layout,
    weights: LossWeights,
    interior: Vec<[f64; 2]>,
    boundary: Vec<BoundaryPoint>,
    observations: Vec<Observation>,
    ws_interior: BatchWorkspace,
    ws_boundary: BatchWorkspace,
    ws_data: BatchWorkspace,
    flat: Vec<f64>,
    out_bar: Vec<f64>,
    tape: Tape,
}

impl LossEvaluator {
    pub fn new(
        problem: &PdeProblem,
        spec: &MlpSpec,
        colloc: &CollocationSet,
        observations: &[Observation],
        weights: LossWeights,
    ) -> Result<Self> {
        if spec.input_dim != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: spec.input_dim,
            });
        }
        let mut ev = LossEvaluator {
            problem: problem.clone(),
            layout: Layout::new(spec, problem.n_lambda()),
            weights,
            interior: Vec::new(),
            boundary: Vec::new(),
            observations: observations.to_vec(),
            ws_interior: BatchWorkspace::new(spec, problem.residual_order(), CHUNK),
            ws_boundary: BatchWorkspace::new(spec, problem.boundary_order(), CHUNK),
            ws_data: BatchWorkspace::new(spec, Order::Value, CHUNK),
            flat: Vec::with_capacity(2 * CHUNK),
            out_bar: vec![0.0; channel_count(2) * CHUNK],
            tape: Tape::with_capacity(64),
        };
        ev.set_collocation(colloc)?;
        Ok(ev)
    }

    /// Replaces the point sets; all interior points must lie in the domain.
    pub fn set_collocation(&mut self, colloc: &CollocationSet) -> Result<()> {
        for &x in colloc.interior() {
            self.problem.check_inside(x)?;
        }
        self.interior = colloc.interior().copied().collect();
        self.boundary = colloc.boundary.clone();
        Ok(())
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn n_params(&self) -> usize {
        self.layout.len()
    }

    /// Loss parts without gradient.
    pub fn value(&mut self, params: &[f64]) -> Result<LossParts> {
        self.run(params, None)
    }

    /// Loss parts; the full gradient (network and PDE parameters) is
    /// written to `grad`.
    pub fn value_and_grad(&mut self, params: &[f64], grad: &mut [f64]) -> Result<LossParts> {
        if grad.len() != self.layout.len() {
            return Err(Error::DimensionMismatch {
                expected: self.layout.len(),
                got: grad.len(),
            });
        }
        grad.fill(0.0);
        self.run(params, Some(grad))
    }

    fn run(&mut self, params: &[f64], mut grad: Option<&mut [f64]>) -> Result<LossParts> {
        if params.len() != self.layout.len() {
            return Err(Error::DimensionMismatch {
                expected: self.layout.len(),
                got: params.len(),
            });
        }
        let w = self.weights;
        let pde = self.interior_pass(params, w.w_f, grad.as_deref_mut())?;
        let boundary = self.boundary_pass(params, w.w_b, grad.as_deref_mut())?;
        let data = self.data_pass(params, w.w_i, grad.as_deref_mut())?;
        let total = w.w_f * pde + w.w_b * boundary + w.w_i * data;
        if !total.is_finite() {
            return Err(crate::autodiff::AdError::NonFiniteLoss(total).into());
        }
        Ok(LossParts {
            total,
            pde,
            boundary,
            data,
        })
    }

    fn interior_pass(&mut self, params: &[f64], weight: f64, mut grad: Option<&mut [f64]>) -> Result<f64> {
        let total_n = self.interior.len();
        if total_n == 0 {
            return Ok(0.0);
        }
        let n_net = self.layout.n_network();
        let (net, lambda) = params.split_at(n_net);
        let scale = 2.0 * weight / total_n as f64;
        let order = self.problem.residual_order();
        let c = order.channels(2);
        let mut sum = 0.0;
        let mut lambda_bar = vec![0.0; lambda.len()];
        for start in (0..total_n).step_by(CHUNK) {
            let pts = &self.interior[start..(start + CHUNK).min(total_n)];
            let n = pts.len();
            self.flat.clear();
            self.flat.extend(pts.iter().flatten());
            self.ws_interior.forward(net, &self.flat)?;
            let out = self.ws_interior.output();
            let bar = &mut self.out_bar[..c * n];
            for (p, &x) in pts.iter().enumerate() {
                let ch: [f64; 6] = std::array::from_fn(|k| if k < c { out[k * n + p] } else { 0.0 });
                let r = if grad.is_some() {
                    let tape = &mut self.tape;
                    tape.clear();
                    let vars: Vec<Var> = tape.vars(&ch[..c]);
                    let lam: Vec<Var> = tape.vars(lambda);
                    let jet = jet_from_channels(&vars, order);
                    let r = self.problem.residual(&jet, x, &lam);
                    let adj = tape.gradient(r);
                    let rv = r.value();
                    for k in 0..c {
                        bar[k * n + p] = scale * rv * adj.wrt(&vars[k]);
                    }
                    for (k, l) in lam.iter().enumerate() {
                        lambda_bar[k] += scale * rv * adj.wrt(l);
                    }
                    rv
                } else {
                    let jet = jet_from_channels(&ch[..c], order);
                    self.problem.residual(&jet, x, lambda)
                };
                if !r.is_finite() {
                    return Err(non_finite(x, r));
                }
                sum += r * r;
            }
            if let Some(g) = grad.as_deref_mut() {
                self.ws_interior.backward(net, &self.out_bar[..c * n], g);
            }
        }
        if let Some(g) = grad {
            for (k, v) in lambda_bar.into_iter().enumerate() {
                g[n_net + k] += v;
            }
        }
        Ok(sum / total_n as f64)
    }

    fn boundary_pass(&mut self, params: &[f64], weight: f64, mut grad: Option<&mut [f64]>) -> Result<f64> {
        let total_n = self.boundary.len();
        if total_n == 0 {
            return Ok(0.0);
        }
        let net = &params[..self.layout.n_network()];
        let scale = 2.0 * weight / total_n as f64;
        let order = self.problem.boundary_order();
        let c = order.channels(2);
        let mut sum = 0.0;
        for start in (0..total_n).step_by(CHUNK) {
            let pts = &self.boundary[start..(start + CHUNK).min(total_n)];
            let n = pts.len();
            self.flat.clear();
            self.flat.extend(pts.iter().flat_map(|b| b.point));
            self.ws_boundary.forward(net, &self.flat)?;
            let out = self.ws_boundary.output();
            let bar = &mut self.out_bar[..c * n];
            for (p, b) in pts.iter().enumerate() {
                let ch: [f64; 6] = std::array::from_fn(|k| if k < c { out[k * n + p] } else { 0.0 });
                let v = if grad.is_some() {
                    let tape = &mut self.tape;
                    tape.clear();
                    let vars: Vec<Var> = tape.vars(&ch[..c]);
                    let jet = jet_from_channels(&vars, order);
                    let v = self.problem.constraint(b.constraint, &jet, b.point);
                    let adj = tape.gradient(v);
                    let cv = v.value();
                    for k in 0..c {
                        bar[k * n + p] = scale * cv * adj.wrt(&vars[k]);
                    }
                    cv
                } else {
                    let jet = jet_from_channels(&ch[..c], order);
                    self.problem.constraint(b.constraint, &jet, b.point)
                };
                if !v.is_finite() {
                    return Err(non_finite(b.point, v));
                }
                sum += v * v;
            }
            if let Some(g) = grad.as_deref_mut() {
                self.ws_boundary.backward(net, &self.out_bar[..c * n], g);
            }
        }
        Ok(sum / total_n as f64)
    }

    fn data_pass(&mut self, params: &[f64], weight: f64, mut grad: Option<&mut [f64]>) -> Result<f64> {
        let total_n = self.observations.len();
        if total_n == 0 {
            return Ok(0.0);
        }
        let net = &params[..self.layout.n_network()];
        let scale = 2.0 * weight / total_n as f64;
        let mut sum = 0.0;
        for start in (0..total_n).step_by(CHUNK) {
            let obs = &self.observations[start..(start + CHUNK).min(total_n)];
            let n = obs.len();
            self.flat.clear();
            self.flat.extend(obs.iter().flat_map(|o| o.point));
            self.ws_data.forward(net, &self.flat)?;
            let out = self.ws_data.output();
            for (p, o) in obs.iter().enumerate() {
                let e = out[p] - o.value;
                if !e.is_finite() {
                    return Err(non_finite(o.point, e));
                }
                sum += e * e;
                self.out_bar[p] = scale * e;
            }
            if let Some(g) = grad.as_deref_mut() {
                self.ws_data.backward(net, &self.out_bar[..n], g);
            }
        }
        Ok(sum / total_n as f64)
    }
}

/// Jet from the leading channels of a point; channels beyond `order` are
/// zero.
fn jet_from_channels<S: Real>(ch: &[S], order: Order) -> Jet2<S> {
    match order {
        Order::Hessian => Jet2::from_channels(2, ch),
        Order::DiagHessian => Jet2::from_parts(ch[0], &ch[1..3], |i, j| if i == j { ch[3 + i] } else { S::zero() }),
        Order::Gradient => Jet2::from_parts(ch[0], &ch[1..3], |_, _| S::zero()),
        Order::Value => Jet2::from_parts(ch[0], &[S::zero(), S::zero()], |_, _| S::zero()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::grad_params;
    use crate::network::init_params;
    use crate::problems::{burgers, inverse_poisson, poisson_peak, two_peaks, wave};
    use crate::sampling::{boundary_points, sobol_in};

    fn colloc(problem: &PdeProblem, n: usize, nb: usize) -> CollocationSet {
        CollocationSet {
            background: sobol_in(problem.domain(), n),
            adaptive: Vec::new(),
            boundary: boundary_points(problem.segments(), nb).unwrap(),
        }
    }

    #[test]
    fn trivial_pde_cases() {
        // zero network on the wave problem: residual is exactly zero
        let p = wave();
        let spec = MlpSpec::new(2, 2, 3).unwrap();
        let zeros = vec![0.0; spec.n_network_params()];
        let pts = sobol_in(p.domain(), 5);
        assert_eq!(loss_pde(&p, &spec, &pts, &zeros).unwrap(), 0.0);
        // zero network on the Poisson problem: residual is -f
        let q = poisson_peak();
        let x = [0.5, 0.5];
        assert_eq!(loss_pde(&q, &spec, &[x], &zeros).unwrap(), 4000.0 * 4000.0);
        let pts2 = [[0.5, 0.5], [0.0, 0.0]];
        let f2 = q.source(pts2[1]);
        let expected = (4000.0f64.powi(2) + f2 * f2) / 2.0;
        assert!((loss_pde(&q, &spec, &pts2, &zeros).unwrap() - expected).abs() <= 1e-9 * expected);
        assert!(loss_pde(&q, &spec, &[[1.5, 0.0]], &zeros).is_err());
    }

    #[test]
    fn trivial_boundary_and_data_cases() {
        let spec = MlpSpec::new(2, 1, 2).unwrap();
        let zeros = vec![0.0; spec.n_network_params()];
        let p = burgers();
        assert_eq!(loss_boundary(&p, &spec, &[], &zeros).unwrap(), 0.0);
        let one = [BoundaryPoint { point: [0.5, 0.0], constraint: 0 }];
        assert!((loss_boundary(&p, &spec, &one, &zeros).unwrap() - 1.0).abs() < 1e-15);
        let two = [
            BoundaryPoint { point: [-0.5, 0.0], constraint: 0 },
            BoundaryPoint { point: [1.0, 0.3], constraint: 1 },
        ];
        assert!((loss_boundary(&p, &spec, &two, &zeros).unwrap() - 0.5).abs() < 1e-15);

        assert_eq!(loss_data(&spec, &[], &zeros).unwrap(), 0.0);
        let obs = [Observation { point: [0.1, 0.2], value: 3.0 }];
        assert_eq!(loss_data(&spec, &obs, &zeros).unwrap(), 9.0);
        let obs2 = [obs[0], Observation { point: [0.3, 0.2], value: 1.0 }];
        assert_eq!(loss_data(&spec, &obs2, &zeros).unwrap(), 5.0);
    }

    #[test]
    fn weighted_total() {
        let p = burgers();
        let spec = MlpSpec::new(2, 1, 2).unwrap();
        let params = init_params(&spec, 3, &[]);
        let set = colloc(&p, 20, 10);
        let parts = total_loss(&p, &spec, &set, &[], params.values(), &LossWeights::default()).unwrap();
        let only_b = LossWeights { w_f: 0.0, w_b: 1.0, w_i: 1.0 };
        let b = total_loss(&p, &spec, &set, &[], params.values(), &only_b).unwrap();
        assert_eq!(b.total, parts.boundary);
        let w23 = LossWeights { w_f: 2.0, w_b: 3.0, w_i: 1.0 };
        let t = total_loss(&p, &spec, &set, &[], params.values(), &w23).unwrap();
        assert!((t.total - (2.0 * parts.pde + 3.0 * parts.boundary)).abs() <= 1e-14 * t.total);
        assert!(parts.total >= 0.0);
    }

    fn check_evaluator(p: &PdeProblem, spec: &MlpSpec, seed: u64, obs: &[Observation]) {
        let set = colloc(p, 150, 40);
        let lambda: Vec<f64> = p.lambda_init().iter().map(|l| l * 0.7).collect();
        let params = init_params(spec, seed, &lambda);
        let w = LossWeights { w_f: 1.3, w_b: 0.7, w_i: 2.0 };
        let reference = total_loss(p, spec, &set, obs, params.values(), &w).unwrap();
        let mut ev = LossEvaluator::new(p, spec, &set, obs, w).unwrap();
        let mut grad = vec![0.0; ev.n_params()];
        let fast = ev.value_and_grad(params.values(), &mut grad).unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
        assert!(rel(fast.total, reference.total) < 1e-12, "{} vs {}", fast.total, reference.total);
        assert!(rel(fast.pde, reference.pde) < 1e-12 || reference.pde == 0.0);
        assert_eq!(ev.value(params.values()).unwrap(), fast);

        let (tl, tg) = grad_params::<_, Error>(
            |v| total_loss_tape(p, spec, &set, obs, v, &w),
            params.values(),
        )
        .unwrap();
        assert!(rel(tl, reference.total) < 1e-12);
        let gmax = tg.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        for (k, (a, b)) in grad.iter().zip(&tg).enumerate() {
            assert!((a - b).abs() <= 1e-10 * gmax, "{:?} param {k}: {a} vs {b}", p.name());
        }
    }

    #[test]
    fn evaluator_matches_reference_and_tape() {
        let spec = MlpSpec::new(2, 3, 6).unwrap();
        check_evaluator(&poisson_peak(), &spec, 1, &[]);
        check_evaluator(&burgers(), &spec, 2, &[]);
        check_evaluator(&two_peaks(), &spec, 3, &[]);
        check_evaluator(&wave(), &spec, 4, &[]);
        let inv = inverse_poisson(2.0);
        let obs: Vec<Observation> = sobol_in(inv.domain(), 30)
            .into_iter()
            .map(|x| Observation { point: x, value: inv.exact(x).unwrap() })
            .collect();
        check_evaluator(&inv, &spec, 5, &obs);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = burgers();
        let spec = MlpSpec::new(2, 2, 4).unwrap();
        let set = colloc(&p, 40, 12);
        let params = init_params(&spec, 9, &[]);
        let mut ev = LossEvaluator::new(&p, &spec, &set, &[], LossWeights::default()).unwrap();
        let mut grad = vec![0.0; ev.n_params()];
        ev.value_and_grad(params.values(), &mut grad).unwrap();
        let h = 1e-6;
        for k in 0..ev.n_params() {
            let mut a = params.values().to_vec();
            let mut b = a.clone();
            a[k] += h;
            b[k] -= h;
            let fd = (ev.value(&a).unwrap().total - ev.value(&b).unwrap().total) / (2.0 * h);
            let scale = grad[k].abs().max(fd.abs()).max(1e-3);
            assert!((fd - grad[k]).abs() / scale < 1e-5, "param {k}: {fd} vs {}", grad[k]);
        }
    }

    #[test]
    fn rejects_outside_points_and_bad_lengths() {
        let p = poisson_peak();
        let spec = MlpSpec::new(2, 1, 3).unwrap();
        let mut set = colloc(&p, 4, 4);
        set.adaptive.push([1.2, 0.5]);
        assert!(LossEvaluator::new(&p, &spec, &set, &[], LossWeights::default()).is_err());
        set.adaptive.clear();
        let mut ev = LossEvaluator::new(&p, &spec, &set, &[], LossWeights::default()).unwrap();
        assert!(ev.value(&[0.0; 3]).is_err());
        let mut g = vec![0.0; 2];
        assert!(ev.value_and_grad(&vec![0.0; ev.n_params()], &mut g).is_err());
    }
}
