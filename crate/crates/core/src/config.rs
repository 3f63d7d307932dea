//! JSON run specifications and the runners behind the `rpinn` binary.
//!
//! ```json
//! {
//!   "problem": "poisson_peak",
//!   "out_dir": "runs/poisson",
//!   "train": { "N1": 2000, "m": 2, "lbfgs": { "history": 20 } },
//!   "sweep": { "mesh": [10, 30, 50, 70], "n2": [25, 50, 100, 200] }
//! }
//! ```
//!
//! `train` is layered over the per-problem defaults of [`TrainConfig`];
//! `N1`, `N2` and `M` are accepted for `n1`, `n2` and `m`. `burgers`
//! needs `burgers_reference`, a grid file written by `rpinn burgers-ref`.
//! `estimate` reads `checkpoint`, defaulting to `<out_dir>/params.ckpt`.
//! The fully resolved specification is written to
//! `<out_dir>/config.resolved.json`; running it again reproduces the run.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::mesh::TriMesh;
use crate::network::load_checkpoint;
use crate::problems::{BurgersReference, PdeProblem, ProblemName};
use crate::training::{estimate_network, run_rpinn, EvalSet, IterationReport, TrainConfig};
use crate::{Error, Result};

const ALIASES: [(&str, &str); 3] = [("N1", "n1"), ("N2", "n2"), ("M", "m")];
const RESOLVED_NAME: &str = "config.resolved.json";

/// Optional lists; a sweep runs their Cartesian product.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxes {
    /// Square mesh sizes, setting both `mesh_nx` and `mesh_ny`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n1: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n2: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub problem: ProblemName,
    pub train: TrainConfig,
    pub out_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepAxes>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burgers_reference: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

/// Overlays `user` onto `base`, recursing into objects.
fn merge(base: &mut Value, user: &Value, path: &str) -> Result<()> {
    let Some(user) = user.as_object() else {
        return Err(invalid(format!("`{path}` must be an object")));
    };
    let Some(base) = base.as_object_mut() else {
        return Err(invalid(format!("`{path}` is not an object")));
    };
    for (key, v) in user {
        let key = ALIASES
            .iter()
            .find(|(a, _)| a == key)
            .map_or(key.as_str(), |(_, k)| k);
        match base.get_mut(key) {
            Some(slot) if slot.is_object() && v.is_object() => merge(slot, v, &format!("{path}.{key}"))?,
            Some(slot) => *slot = v.clone(),
            None => return Err(invalid(format!("unknown field `{path}.{key}`"))),
        }
    }
    Ok(())
}

/// Sets `key=value` on a raw specification. Keys name `train` fields,
/// dotted for nested ones (`lbfgs.history=20`), or one of the top-level
/// fields `problem`, `out_dir`, `burgers_reference`, `checkpoint`. Values
/// are read as JSON, falling back to a plain string.
pub fn apply_override(raw: &mut Value, assignment: &str) -> Result<()> {
    let (key, text) = assignment
        .split_once('=')
        .ok_or_else(|| invalid(format!("override `{assignment}` is not key=value")))?;
    let key = key.trim();
    let value: Value = serde_json::from_str(text).unwrap_or_else(|_| Value::String(text.to_string()));
    let obj = raw
        .as_object_mut()
        .ok_or_else(|| invalid("specification must be a JSON object"))?;
    if matches!(key, "problem" | "out_dir" | "burgers_reference" | "checkpoint") {
        obj.insert(key.to_string(), value);
        return Ok(());
    }
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(invalid(format!("bad override key `{key}`")));
    }
    let mut slot = obj.entry("train").or_insert_with(|| Value::Object(Map::new()));
    let parts: Vec<&str> = key.split('.').collect();
    for part in &parts[..parts.len() - 1] {
        let map = slot
            .as_object_mut()
            .ok_or_else(|| invalid(format!("override `{key}` descends into a non-object")))?;
        slot = map.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    slot.as_object_mut()
        .ok_or_else(|| invalid(format!("override `{key}` descends into a non-object")))?
        .insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Resolves a raw specification against the problem defaults.
pub fn resolve(raw: &Value) -> Result<RunSpec> {
    let obj = raw
        .as_object()
        .ok_or_else(|| invalid("specification must be a JSON object"))?;
    let name: ProblemName = obj
        .get("problem")
        .ok_or_else(|| invalid("missing field `problem`"))?
        .as_str()
        .ok_or_else(|| invalid("`problem` must be a string"))?
        .parse()?;
    let mut train = serde_json::to_value(TrainConfig::for_problem(name))?;
    if let Some(user) = obj.get("train") {
        merge(&mut train, user, "train")?;
    }
    let mut full = obj.clone();
    full.insert("train".into(), train);
    full.entry("out_dir")
        .or_insert_with(|| Value::String(format!("runs/{name}")));
    let spec: RunSpec = serde_json::from_value(Value::Object(full)).map_err(|e| invalid(e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

/// Parses and resolves a specification, applying `overrides` in order.
pub fn parse_run_spec(text: &str, overrides: &[String]) -> Result<RunSpec> {
    let mut raw: Value = serde_json::from_str(text)?;
    for o in overrides {
        apply_override(&mut raw, o)?;
    }
    resolve(&raw)
}

pub fn load_run_spec(path: &Path, overrides: &[String]) -> Result<RunSpec> {
    let text = fs::read_to_string(path)?;
    parse_run_spec(&text, overrides)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub train: TrainConfig,
    pub reports: Vec<IterationReport>,
}

impl RunSummary {
    pub fn last(&self) -> &IterationReport {
        self.reports.last().expect("a run has at least one report")
    }

    /// One line for the terminal.
    pub fn line(&self) -> String {
        let r = self.last();
        format!(
            "{}: N_iter {} rel_l2 {:.4e} l_inf {:.4e} loss {:.4e}",
            self.out_dir.display(),
            r.iteration,
            r.rel_l2,
            r.l_inf,
            r.loss
        )
    }
}

impl RunSpec {
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.problem == ProblemName::Burgers && self.burgers_reference.is_none() {
            return Err(invalid(
                "burgers needs `burgers_reference` (generate one with `rpinn burgers-ref`)",
            ));
        }
        if let Some(s) = &self.sweep {
            for (name, axis) in [("mesh", &s.mesh), ("n1", &s.n1), ("n2", &s.n2)] {
                if let Some(v) = axis {
                    if v.is_empty() || v.contains(&0) {
                        return Err(invalid(format!("sweep axis `{name}` must list positive values")));
                    }
                }
            }
            for spec in self.sweep_specs() {
                spec.train.validate()?;
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn eval_set(&self, problem: &PdeProblem) -> Result<EvalSet> {
        match &self.burgers_reference {
            Some(path) if self.problem == ProblemName::Burgers => Ok(EvalSet::reference(&BurgersReference::load(path)?)),
            _ => EvalSet::exact(problem, self.train.eval_nx, self.train.eval_ny),
        }
    }

    /// Trains once and writes all outputs under `out_dir`.
    pub fn run(&self) -> Result<RunSummary> {
        let problem = self.problem.build();
        let eval = self.eval_set(&problem)?;
        fs::create_dir_all(&self.out_dir)?;
        let single = RunSpec {
            sweep: None,
            ..self.clone()
        };
        fs::write(self.out_dir.join(RESOLVED_NAME), single.to_json()?)?;
        let out = run_rpinn(&problem, &self.train, &eval, Some(&self.out_dir))?;
        Ok(RunSummary {
            out_dir: self.out_dir.clone(),
            train: self.train.clone(),
            reports: out.reports,
        })
    }

    /// The single runs of the sweep, each in its own directory with a seed
    /// derived from the base seed and its position.
    pub fn sweep_specs(&self) -> Vec<RunSpec> {
        let axes = self.sweep.clone().unwrap_or_default();
        let mesh = axes.mesh.unwrap_or_else(|| vec![self.train.mesh_nx]);
        let n1 = axes.n1.unwrap_or_else(|| vec![self.train.n1]);
        let n2 = axes.n2.unwrap_or_else(|| vec![self.train.n2]);
        let mut out = Vec::with_capacity(mesh.len() * n1.len() * n2.len());
        for &m in &mesh {
            for &a in &n1 {
                for &b in &n2 {
                    let index = out.len() as u64;
                    let mut rng = ChaCha8Rng::seed_from_u64(self.train.seed);
                    rng.set_stream(index + 1);
                    let train = TrainConfig {
                        mesh_nx: m,
                        mesh_ny: m,
                        n1: a,
                        n2: b,
                        seed: rng.next_u64(),
                        ..self.train.clone()
                    };
                    out.push(RunSpec {
                        train,
                        out_dir: self.out_dir.join(format!("mesh{m}_n1-{a}_n2-{b}")),
                        sweep: None,
                        ..self.clone()
                    });
                }
            }
        }
        out
    }

    /// Runs every sweep point and writes `sweep_summary.csv` with the final
    /// report of each.
    pub fn sweep(&self, mut on_run: impl FnMut(&RunSummary)) -> Result<Vec<RunSummary>> {
        fs::create_dir_all(&self.out_dir)?;
        fs::write(self.out_dir.join(RESOLVED_NAME), self.to_json()?)?;
        let mut w = BufWriter::new(File::create(self.out_dir.join("sweep_summary.csv"))?);
        writeln!(w, "run,mesh_nx,mesh_ny,n1,n2,seed,N_iter,rel_l2,l_inf,loss,seconds")?;
        let mut all = Vec::new();
        for spec in self.sweep_specs() {
            let s = spec.run()?;
            let r = s.last();
            let seconds: f64 = s.reports.iter().map(|r| r.seconds).sum();
            let t = &spec.train;
            writeln!(
                w,
                "{},{},{},{},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e}",
                spec.out_dir.file_name().and_then(|n| n.to_str()).unwrap_or_default(),
                t.mesh_nx,
                t.mesh_ny,
                t.n1,
                t.n2,
                t.seed,
                r.iteration,
                r.rel_l2,
                r.l_inf,
                r.loss,
                seconds
            )?;
            w.flush()?;
            on_run(&s);
            all.push(s);
        }
        Ok(all)
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.checkpoint
            .clone()
            .unwrap_or_else(|| self.out_dir.join("params.ckpt"))
    }

    /// Element indicators for the checkpointed network on the configured
    /// mesh, written to `<out_dir>/eta.csv`. Returns the global estimate.
    pub fn estimate(&self) -> Result<f64> {
        let (spec, params) = load_checkpoint(&self.checkpoint_path())?;
        let problem = self.problem.build();
        let mesh = TriMesh::diagonal(*problem.domain(), self.train.mesh_nx, self.train.mesh_ny)?;
        let eta = estimate_network(&spec, params.network(), &mesh, self.train.recovery_method)?;
        fs::create_dir_all(&self.out_dir)?;
        let mut w = BufWriter::new(File::create(self.out_dir.join("eta.csv"))?);
        eta.write_csv(&mut w)?;
        w.flush()?;
        Ok(eta.global())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_layered_per_problem() {
        let s = parse_run_spec(r#"{"problem": "two_peaks", "train": {"N1": 300, "lbfgs": {"history": 7}}}"#, &[]).unwrap();
        assert_eq!(s.train.n1, 300);
        assert_eq!(s.train.hidden_width, 64);
        assert_eq!(s.train.lbfgs.history, 7);
        assert_eq!(s.train.lbfgs.c2, 0.9);
        assert_eq!(s.out_dir, PathBuf::from("runs/two_peaks"));
    }

    #[test]
    fn resolved_spec_round_trips() {
        let s = parse_run_spec(r#"{"problem": "wave", "out_dir": "x", "sweep": {"n2": [1, 2]}}"#, &[]).unwrap();
        let again = parse_run_spec(&s.to_json().unwrap(), &[]).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn rejects_bad_specs() {
        let err = parse_run_spec(r#"{"problem": "heat"}"#, &[]).unwrap_err().to_string();
        assert!(err.contains("poisson_peak") && err.contains("wave"), "{err}");
        let err = parse_run_spec(r#"{"problem": "wave", "train": {"n3": 1}}"#, &[]).unwrap_err().to_string();
        assert!(err.contains("train.n3"), "{err}");
        let err = parse_run_spec(r#"{"problem": "wave", "colour": 1}"#, &[]).unwrap_err().to_string();
        assert!(err.contains("colour"), "{err}");
        let err = parse_run_spec("{\"problem\": \"wave\",\n \"train\": {\"n1\": }}", &[]).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        assert!(parse_run_spec(r#"{"problem": "wave", "train": {"n1": -3}}"#, &[]).is_err());
        assert!(parse_run_spec(r#"{"problem": "wave", "train": {"epsilon": 2.0}}"#, &[]).is_err());
        assert!(parse_run_spec(r#"{"problem": "burgers"}"#, &[]).is_err());
        assert!(parse_run_spec(r#"{"problem": "wave", "sweep": {"mesh": []}}"#, &[]).is_err());
        assert!(parse_run_spec("[]", &[]).is_err());
        assert!(parse_run_spec("{}", &[]).is_err());
    }

    #[test]
    fn overrides() {
        let o = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let s = parse_run_spec(
            r#"{"problem": "wave"}"#,
            &o(&["M=0", "lbfgs.history=3", "out_dir=elsewhere", "sampling=sobol", "seed=9"]),
        )
        .unwrap();
        assert_eq!(s.train.m, 0);
        assert_eq!(s.train.lbfgs.history, 3);
        assert_eq!(s.out_dir, PathBuf::from("elsewhere"));
        assert_eq!(s.train.sampling, crate::training::SamplingMode::Sobol);
        assert_eq!(s.train.seed, 9);
        assert!(parse_run_spec(r#"{"problem": "wave"}"#, &o(&["n1"])).is_err());
        assert!(parse_run_spec(r#"{"problem": "wave"}"#, &o(&["n1.x=3"])).is_err());
        assert!(parse_run_spec(r#"{"problem": "wave"}"#, &o(&["bogus=3"])).is_err());
        assert!(parse_run_spec(r#"{"problem": "wave"}"#, &o(&["problem=nope"])).is_err());
    }

    #[test]
    fn sweep_expands_product_with_distinct_seeds() {
        let s = parse_run_spec(
            r#"{"problem": "poisson_peak", "out_dir": "sw",
                "sweep": {"n2": [25, 50, 100, 200], "mesh": [10, 30, 50, 70]}}"#,
            &[],
        )
        .unwrap();
        let runs = s.sweep_specs();
        assert_eq!(runs.len(), 16);
        let mut seeds: Vec<u64> = runs.iter().map(|r| r.train.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 16);
        assert_eq!(runs[1].train.mesh_nx, 10);
        assert_eq!(runs[1].train.n2, 50);
        assert_eq!(runs[1].out_dir, PathBuf::from("sw/mesh10_n1-4000_n2-50"));
        assert!(runs.iter().all(|r| r.sweep.is_none()));
        assert_eq!(s.sweep_specs(), runs);
    }
}
