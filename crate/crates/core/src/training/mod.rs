//! Training: losses, optimizers, metrics and the adaptive loop.
//!
//! One "epoch" is one full-batch optimizer iteration. The learning rate of
//! L-BFGS is the trial step of its line search on steepest-descent
//! iterations. Optimizer history is dropped at the start of every training
//! phase because the collocation set, and with it the loss, has changed.

mod adam;
mod lbfgs;
mod loss;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use adam::{adam_minimize, AdamSettings};
pub use lbfgs::{lbfgs_minimize, LbfgsSettings, OptimResult};
pub use loss::{
    loss_boundary, loss_data, loss_pde, total_loss, total_loss_tape, LossEvaluator, LossParts, LossWeights,
    Observation,
};

use crate::mesh::{nodal_from_values, RectDomain, TriMesh};
use crate::network::{batch, init_params, save_checkpoint, MlpSpec, ParamVector};
use crate::problems::{BurgersReference, PdeProblem, ProblemName};
use crate::recovery::{estimate, ErrorIndicator, RecoveryMethod};
use crate::sampling::{
    boundary_points, recad, residual_pdf_sample, sobol_in, uniform_random, validate_epsilon, CollocationSet,
    ProbeGrid, RecadConfig,
};
use crate::{Error, Result};

/// How the `N2` extra interior points are chosen in each adaptive iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// Recovery-type estimator on the background mesh, then RecAD.
    #[default]
    Recad,
    /// No adaptive points: `N1 + M * N2` Sobol points from the start.
    Sobol,
    /// Residual-proportional sampling on a probe grid of mesh size.
    Rad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    Lbfgs,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub n1: usize,
    pub n2: usize,
    pub m: usize,
    pub pretrain_epochs: usize,
    pub adaptive_epochs: usize,
    pub n_boundary: usize,
    pub w_f: f64,
    pub w_b: f64,
    pub w_i: f64,
    pub mesh_nx: usize,
    pub mesh_ny: usize,
    pub epsilon: f64,
    pub recovery_method: RecoveryMethod,
    pub sampling: SamplingMode,
    pub optimizer: OptimizerKind,
    pub lbfgs: LbfgsSettings,
    pub adam: AdamSettings,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub seed: u64,
    pub eval_nx: usize,
    pub eval_ny: usize,
    /// Observations of the exact solution for the data term; only
    /// problems with a closed-form solution support them.
    pub n_observations: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            n1: 2000,
            n2: 100,
            m: 4,
            pretrain_epochs: 5000,
            adaptive_epochs: 5000,
            n_boundary: 200,
            w_f: 1.0,
            w_b: 1.0,
            w_i: 1.0,
            mesh_nx: 50,
            mesh_ny: 50,
            epsilon: 0.02,
            recovery_method: RecoveryMethod::WeightedAveraging,
            sampling: SamplingMode::Recad,
            optimizer: OptimizerKind::Lbfgs,
            lbfgs: LbfgsSettings::default(),
            adam: AdamSettings::default(),
            hidden_layers: 7,
            hidden_width: 20,
            seed: 0,
            eval_nx: 256,
            eval_ny: 256,
            n_observations: 0,
        }
    }
}

impl TrainConfig {
    /// Defaults with the per-benchmark budgets.
    pub fn for_problem(name: ProblemName) -> Self {
        let base = TrainConfig::default();
        match name {
            ProblemName::PoissonPeak => TrainConfig {
                n1: 4000,
                n2: 120,
                pretrain_epochs: 15000,
                adaptive_epochs: 10000,
                ..base
            },
            ProblemName::Burgers => TrainConfig {
                n1: 50000,
                n2: 500,
                pretrain_epochs: 15000,
                ..base
            },
            ProblemName::TwoPeaks => TrainConfig {
                n2: 150,
                pretrain_epochs: 10000,
                hidden_layers: 5,
                hidden_width: 64,
                ..base
            },
            ProblemName::Wave => base,
            ProblemName::InversePoisson => TrainConfig {
                n_observations: 100,
                ..base
            },
        }
    }

    pub fn network(&self) -> Result<MlpSpec> {
        MlpSpec::new(2, self.hidden_layers, self.hidden_width)
    }

    pub fn weights(&self) -> LossWeights {
        LossWeights {
            w_f: self.w_f,
            w_b: self.w_b,
            w_i: self.w_i,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        for (name, v) in [
            ("n1", self.n1),
            ("n2", self.n2),
            ("n_boundary", self.n_boundary),
            ("mesh_nx", self.mesh_nx),
            ("mesh_ny", self.mesh_ny),
            ("eval_nx", self.eval_nx),
            ("eval_ny", self.eval_ny),
        ] {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        if self.eval_nx < 2 || self.eval_ny < 2 {
            return bad("eval grid needs at least 2 points per axis".into());
        }
        for (name, w) in [("w_f", self.w_f), ("w_b", self.w_b), ("w_i", self.w_i)] {
            if !(w.is_finite() && w >= 0.0) {
                return bad(format!("{name} = {w} must be finite and nonnegative"));
            }
        }
        self.network()?;
        self.lbfgs.validate()?;
        if self.sampling == SamplingMode::Recad {
            validate_epsilon(self.epsilon, 2 * self.mesh_nx * self.mesh_ny)
                .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        }
        Ok(())
    }
}

/// Points and true values on which the error metrics are taken.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSet {
    pub points: Vec<[f64; 2]>,
    pub truth: Vec<f64>,
}

impl EvalSet {
    /// Uniform `nx * ny` grid including the boundary, against the exact
    /// solution.
    pub fn exact(problem: &PdeProblem, nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidConfig("eval grid needs at least 2 points per axis".into()));
        }
        let d = problem.domain();
        let mut points = Vec::with_capacity(nx * ny);
        let mut truth = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let x = d.from_unit([i as f64 / (nx - 1) as f64, j as f64 / (ny - 1) as f64]);
                let u = problem.exact(x).ok_or_else(|| {
                    Error::InvalidConfig(format!("{} has no closed-form solution", problem.name()))
                })?;
                points.push(x);
                truth.push(u);
            }
        }
        Ok(EvalSet { points, truth })
    }

    /// The nodes of a reference grid.
    pub fn reference(r: &BurgersReference) -> Self {
        EvalSet {
            points: r.points(),
            truth: r.values.clone(),
        }
    }
}

/// `(‖û − u‖₂ / ‖u‖₂, max |û − u|)` over paired samples.
pub fn metrics_from_values(pred: &[f64], truth: &[f64]) -> Result<(f64, f64)> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: pred.len(),
        });
    }
    let (mut num, mut den, mut linf) = (0.0f64, 0.0f64, 0.0f64);
    for (p, u) in pred.iter().zip(truth) {
        let e = p - u;
        num += e * e;
        den += u * u;
        linf = linf.max(e.abs());
    }
    if den == 0.0 {
        return Err(Error::InvalidConfig("reference solution is identically zero".into()));
    }
    Ok(((num / den).sqrt(), linf))
}

pub fn metrics(spec: &MlpSpec, params: &[f64], eval: &EvalSet) -> Result<(f64, f64)> {
    let flat: Vec<f64> = eval.points.iter().flatten().copied().collect();
    let pred = batch::values(spec, params, &flat)?;
    metrics_from_values(&pred, &eval.truth)
}

/// Element indicators for the network's nodal interpolant on `mesh`.
pub fn estimate_network(
    spec: &MlpSpec,
    params: &[f64],
    mesh: &TriMesh,
    method: RecoveryMethod,
) -> Result<ErrorIndicator> {
    let flat: Vec<f64> = mesh.vertices().iter().flatten().copied().collect();
    let values = batch::values(spec, params, &flat)?;
    let u = nodal_from_values(mesh, values)?;
    estimate(mesh, &u, method)
}

/// PDE residuals of the network at `points`.
pub fn residuals(problem: &PdeProblem, spec: &MlpSpec, params: &[f64], points: &[[f64; 2]]) -> Result<Vec<f64>> {
    let n_net = spec.n_network_params();
    let flat: Vec<f64> = points.iter().flatten().copied().collect();
    let jets = batch::jets(spec, &params[..n_net], &flat)?;
    Ok(jets
        .iter()
        .zip(points)
        .map(|(j, &x)| problem.residual(j, x, &params[n_net..]))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationReport {
    /// 0 after pre-training, k after the k-th adaptive iteration.
    pub iteration: usize,
    pub rel_l2: f64,
    pub l_inf: f64,
    pub loss: f64,
    pub lambda: Vec<f64>,
    pub points_path: Option<PathBuf>,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub reports: Vec<IterationReport>,
    pub params: ParamVector,
    /// Best loss per epoch across all phases; phases start on a fresh
    /// evaluation over the new collocation set.
    pub loss_trace: Vec<f64>,
    /// Collocation set of the last phase.
    pub collocation: CollocationSet,
}

fn phase_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn observations(problem: &PdeProblem, n: usize, seed: u64) -> Result<Vec<Observation>> {
    let mut rng = phase_rng(seed, 2);
    uniform_random(problem.domain(), n, &mut rng)
        .into_iter()
        .map(|x| {
            let value = problem.exact(x).ok_or_else(|| {
                Error::InvalidConfig(format!("{} has no closed-form solution for observations", problem.name()))
            })?;
            Ok(Observation { point: x, value })
        })
        .collect()
}

struct Outputs<'a> {
    dir: Option<&'a Path>,
    reports: Option<BufWriter<File>>,
    trace: Option<BufWriter<File>>,
    epoch: usize,
}

impl<'a> Outputs<'a> {
    fn new(dir: Option<&'a Path>, n_lambda: usize) -> Result<Self> {
        let mut out = Outputs {
            dir,
            reports: None,
            trace: None,
            epoch: 0,
        };
        if let Some(d) = dir {
            fs::create_dir_all(d)?;
            let mut r = BufWriter::new(File::create(d.join("reports.csv"))?);
            write!(r, "N_iter,rel_l2,l_inf,loss,seconds")?;
            for k in 0..n_lambda {
                write!(r, ",lambda_{k}")?;
            }
            writeln!(r)?;
            r.flush()?;
            let mut t = BufWriter::new(File::create(d.join("loss_trace.csv"))?);
            writeln!(t, "epoch,loss")?;
            t.flush()?;
            out.reports = Some(r);
            out.trace = Some(t);
        }
        Ok(out)
    }

    fn trace(&mut self, trace: &[f64]) -> Result<()> {
        let start = self.epoch;
        self.epoch += trace.len() - 1;
        if let Some(t) = self.trace.as_mut() {
            for (j, v) in trace.iter().enumerate() {
                writeln!(t, "{},{v:.16e}", start + j)?;
            }
            t.flush()?;
        }
        Ok(())
    }

    fn points(&self, k: usize, set: &CollocationSet) -> Result<Option<PathBuf>> {
        let Some(d) = self.dir else { return Ok(None) };
        let path = d.join(format!("points_iter{k}.csv"));
        let mut w = BufWriter::new(File::create(&path)?);
        set.write_csv(k, &mut w)?;
        w.flush()?;
        Ok(Some(path))
    }

    fn eta(&self, k: usize, eta: &ErrorIndicator) -> Result<()> {
        if let Some(d) = self.dir {
            let mut w = BufWriter::new(File::create(d.join(format!("eta_iter{k}.csv")))?);
            eta.write_csv(&mut w)?;
            w.flush()?;
        }
        Ok(())
    }

    fn report(&mut self, r: &IterationReport, spec: &MlpSpec, params: &ParamVector) -> Result<()> {
        if let Some(w) = self.reports.as_mut() {
            write!(w, "{},{:.16e},{:.16e},{:.16e},{:.16e}", r.iteration, r.rel_l2, r.l_inf, r.loss, r.seconds)?;
            for l in &r.lambda {
                write!(w, ",{l:.16e}")?;
            }
            writeln!(w)?;
            w.flush()?;
        }
        if let Some(d) = self.dir {
            save_checkpoint(&d.join("params.ckpt"), spec, params)?;
        }
        Ok(())
    }
}

fn train_phase(ev: &mut LossEvaluator, params: &mut ParamVector, epochs: usize, cfg: &TrainConfig) -> Result<OptimResult> {
    let f = |x: &[f64], g: &mut [f64]| ev.value_and_grad(x, g).map(|p| p.total);
    let r = match cfg.optimizer {
        OptimizerKind::Lbfgs => lbfgs_minimize(f, params.values(), epochs, &cfg.lbfgs)?,
        OptimizerKind::Adam => adam_minimize(f, params.values(), epochs, &cfg.adam)?,
    };
    if r.terminated_early {
        log::warn!("optimizer stopped early after {} of {epochs} epochs", r.iterations);
    }
    params.values_mut().copy_from_slice(&r.params);
    Ok(r)
}

/// Pre-training followed by `M` adaptive iterations.
///
/// With `out_dir` set, `reports.csv`, `loss_trace.csv`, `points_iterK.csv`,
/// `eta_iterK.csv` and `params.ckpt` are written as the run progresses.
pub fn run_rpinn(problem: &PdeProblem, cfg: &TrainConfig, eval: &EvalSet, out_dir: Option<&Path>) -> Result<RunOutcome> {
    cfg.validate()?;
    let spec = cfg.network()?;
    let domain: RectDomain = *problem.domain();
    let mut params = init_params(&spec, cfg.seed, &problem.lambda_init());
    let mut rng = phase_rng(cfg.seed, 1);
    let obs = observations(problem, cfg.n_observations, cfg.seed)?;

    let n_background = match cfg.sampling {
        SamplingMode::Sobol => cfg.n1 + cfg.m * cfg.n2,
        _ => cfg.n1,
    };
    let mut colloc = CollocationSet {
        background: sobol_in(&domain, n_background),
        adaptive: Vec::new(),
        boundary: boundary_points(problem.segments(), cfg.n_boundary)?,
    };
    let mesh = TriMesh::diagonal(domain, cfg.mesh_nx, cfg.mesh_ny)?;
    let probe = ProbeGrid::new(domain, cfg.mesh_nx, cfg.mesh_ny)?;
    let probe_nodes = probe.nodes();
    let mut ev = LossEvaluator::new(problem, &spec, &colloc, &obs, cfg.weights())?;
    let mut out = Outputs::new(out_dir, problem.n_lambda())?;
    let mut reports = Vec::with_capacity(cfg.m + 1);
    let mut loss_trace = Vec::new();

    for k in 0..=cfg.m {
        let started = Instant::now();
        let epochs = if k == 0 {
            cfg.pretrain_epochs
        } else {
            match cfg.sampling {
                SamplingMode::Recad => {
                    let eta = estimate_network(&spec, params.network(), &mesh, cfg.recovery_method)?;
                    out.eta(k, &eta)?;
                    let rc = RecadConfig {
                        n_adaptive: cfg.n2,
                        epsilon: cfg.epsilon,
                    };
                    colloc.adaptive = match recad(&eta.eta, &mesh, &rc, &mut rng) {
                        Ok((_, pts)) => pts,
                        Err(Error::NoErrorSignal) => {
                            log::warn!("iteration {k}: estimator is zero everywhere; using uniform points");
                            uniform_random(&domain, cfg.n2, &mut rng)
                        }
                        Err(e) => return Err(e),
                    };
                }
                SamplingMode::Rad => {
                    let r = residuals(problem, &spec, params.values(), &probe_nodes)?;
                    colloc.adaptive = residual_pdf_sample(&probe, &r, cfg.n2, &mut rng)?;
                }
                SamplingMode::Sobol => {}
            }
            ev.set_collocation(&colloc)?;
            cfg.adaptive_epochs
        };
        let points_path = out.points(k, &colloc)?;
        let r = train_phase(&mut ev, &mut params, epochs, cfg)?;
        out.trace(&r.trace)?;
        loss_trace.extend_from_slice(&r.trace);
        let (rel_l2, l_inf) = metrics(&spec, params.network(), eval)?;
        let report = IterationReport {
            iteration: k,
            rel_l2,
            l_inf,
            loss: r.loss,
            lambda: params.lambda().to_vec(),
            points_path,
            seconds: started.elapsed().as_secs_f64(),
        };
        log::info!(
            "{} iteration {k}: rel_l2 {rel_l2:.4e}, l_inf {l_inf:.4e}, loss {:.4e}, {} epochs, {:.1}s",
            problem.name(),
            r.loss,
            r.iterations,
            report.seconds
        );
        out.report(&report, &spec, &params)?;
        reports.push(report);
    }
    Ok(RunOutcome {
        reports,
        params,
        loss_trace,
        collocation: colloc,
    })
}
