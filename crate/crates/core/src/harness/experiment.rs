//! Trial execution, CSV output and sweeps.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use super::config::{AlgorithmName, ExperimentConfig, PenaltyMode, ProblemSpec, TopologySpec};
use crate::baselines::{self, BaselineConfig, BaselineKind};
use crate::error::{Error, Result};
use crate::graph::{GraphOperators, Topology};
use crate::metrics::{self, TraceRecord};
use crate::problems::Problem;
use crate::streams::{mix, trial_seed};
use crate::szo::OracleSpec;
use crate::zone_m::{self, MnetConfig, MnetTheory, PenaltySchedule, StepMode};
use crate::zone_s::{self, SnetConfig, SnetSchedule};

const GRAPH_TAG: u64 = 0x6772_6170_6800;
const PROBLEM_TAG: u64 = 0x7072_6f62_6c00;

/// Seeds of the graph, problem and algorithm streams of one trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialSeeds {
    pub graph: u64,
    pub problem: u64,
    pub algorithm: u64,
}

pub fn trial_seeds(cfg: &ExperimentConfig, trial: usize) -> TrialSeeds {
    let base = trial_seed(cfg.master_seed, trial);
    let graph = match cfg.topology {
        TopologySpec::Mnet { seed: Some(s), .. } => s,
        _ => mix(base, GRAPH_TAG),
    };
    let problem = match cfg.problem {
        ProblemSpec::SigmoidLog { seed: Some(s) } | ProblemSpec::SparseQuadratic { seed: Some(s), .. } => s,
        _ => mix(base, PROBLEM_TAG),
    };
    TrialSeeds {
        graph,
        problem,
        algorithm: base,
    }
}

/// The problem and (for meshes) graph of one trial.
pub struct TrialSetup {
    pub seeds: TrialSeeds,
    pub problem: Problem,
    pub topology: Option<Topology>,
}

pub fn setup_trial(cfg: &ExperimentConfig, trial: usize) -> Result<TrialSetup> {
    let seeds = trial_seeds(cfg, trial);
    let n = cfg.topology.agents();
    let problem = cfg.problem.build(n, seeds.problem);
    let topology = match cfg.topology {
        TopologySpec::Mnet { radius, .. } => Some(Topology::random_geometric(n, problem.dim, radius, seeds.graph)?),
        TopologySpec::Snet { .. } => None,
    };
    Ok(TrialSetup {
        seeds,
        problem,
        topology,
    })
}

fn oracle_spec(cfg: &ExperimentConfig, problem: &Problem) -> OracleSpec {
    let k = problem.grad_bounds.iter().copied().fold(0.0, f64::max);
    OracleSpec::new(cfg.noise_std, cfg.smoothing, cfg.batch)
        .with_coupling(cfg.noise_coupling.into())
        .with_constants(k, problem.total_smoothness(), problem.dim)
}

/// Theoretical mesh parameters with `L̂ = Σ L_i`.
pub fn mesh_theory(topo: &Topology, problem: &Problem, delta: f64) -> MnetTheory {
    zone_m::theoretical_params(&GraphOperators::derive(topo), problem.total_smoothness(), delta)
}

/// Iterations a centralized baseline runs: `horizon`, or as many as fit in
/// the oracle budget.
pub fn baseline_horizon(cfg: &ExperimentConfig, n_agents: usize) -> usize {
    match (cfg.algorithm.name, cfg.algorithm.oracle_budget) {
        (AlgorithmName::ZoGd, Some(b)) => (b / (2 * cfg.batch as u64 * n_agents as u64)) as usize,
        (AlgorithmName::ZoSgd, Some(b)) => (b / 2) as usize,
        _ => cfg.horizon,
    }
}

/// Exact oracle calls of one complete trial.
pub fn expected_oracle_calls(cfg: &ExperimentConfig) -> u64 {
    let n = cfg.topology.agents() as u64;
    let j = cfg.batch as u64;
    let t = baseline_horizon(cfg, n as usize) as u64;
    match cfg.algorithm.name {
        AlgorithmName::ZoneM | AlgorithmName::ZoneMInc | AlgorithmName::Rgf | AlgorithmName::ZoGd => t * n * 2 * j,
        AlgorithmName::ZoneS | AlgorithmName::ZoneSInc => (t + n) * 2 * j,
        AlgorithmName::ZoSgd => t * 2,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialResult {
    pub trial: usize,
    pub records: Vec<TraceRecord>,
    /// Diagnostic of an aborted trial.
    pub aborted: Option<String>,
}

/// Run one trial and return its trace with `trial` filled in.
pub fn run_trial(cfg: &ExperimentConfig, trial: usize) -> TrialResult {
    let start = Instant::now();
    match trace_of(cfg, trial) {
        Ok(mut records) => {
            for r in &mut records {
                r.trial = trial;
            }
            if cfg.record_wall_time {
                if let Some(last) = records.last_mut() {
                    last.wall_seconds = Some(start.elapsed().as_secs_f64());
                }
            }
            TrialResult {
                trial,
                records,
                aborted: None,
            }
        }
        Err(e) => TrialResult {
            trial,
            records: Vec::new(),
            aborted: Some(e.to_string()),
        },
    }
}

fn trace_of(cfg: &ExperimentConfig, trial: usize) -> Result<Vec<TraceRecord>> {
    let setup = setup_trial(cfg, trial)?;
    let problem = &setup.problem;
    let oracle = oracle_spec(cfg, problem);
    let seed = setup.seeds.algorithm;
    let alg = &cfg.algorithm;
    let psi_beta =
        |p: &Problem| -> Result<f64> { Ok(alg.psi_beta.unwrap_or(zone_s::sampling_params(&p.smoothness)?.beta)) };
    match alg.name {
        AlgorithmName::ZoneM | AlgorithmName::ZoneMInc => {
            let topo = setup.topology.as_ref().expect("mesh trial");
            let theory = mesh_theory(topo, problem, alg.delta);
            let schedule = match (alg.name, alg.rho) {
                (AlgorithmName::ZoneMInc, _) => PenaltySchedule::Increasing,
                (_, Some(rho)) => {
                    if alg.penalty == PenaltyMode::Theoretical && rho <= theory.rho_min {
                        return Err(Error::Validation(format!(
                            "rho {rho} is not above the theoretical minimum {}",
                            theory.rho_min
                        )));
                    }
                    PenaltySchedule::Constant(rho)
                }
                (_, None) => PenaltySchedule::Constant(theory.rho),
            };
            let mode: StepMode = alg.mode.into();
            let mcfg = MnetConfig {
                schedule,
                oracle,
                horizon: cfg.horizon,
                stride: cfg.stride,
                mode,
                potential: matches!(schedule, PenaltySchedule::Constant(_)).then(|| theory.weights()),
                seed,
            };
            Ok(zone_m::run(problem, topo, &mcfg)?.trace)
        }
        AlgorithmName::ZoneS | AlgorithmName::ZoneSInc => {
            let mut scfg = SnetConfig::theoretical(problem, oracle, cfg.horizon, seed)?;
            scfg.stride = cfg.stride;
            scfg.psi_beta = psi_beta(problem)?;
            if alg.name == AlgorithmName::ZoneSInc {
                scfg.schedule = SnetSchedule::Increasing;
            }
            Ok(zone_s::run(problem, &scfg)?.trace)
        }
        AlgorithmName::Rgf => {
            let topo = setup.topology.as_ref().expect("mesh trial");
            let bcfg = BaselineConfig {
                kind: BaselineKind::Rgf,
                oracle,
                step: 1.0,
                horizon: cfg.horizon,
                stride: cfg.stride,
                psi_beta: 1.0,
                seed,
            };
            Ok(baselines::run_rgf(problem, topo, &bcfg)?.trace)
        }
        AlgorithmName::ZoGd | AlgorithmName::ZoSgd => {
            let (kind, default_step) = if alg.name == AlgorithmName::ZoGd {
                (BaselineKind::ZoGd, baselines::zo_gd_stepsize(problem))
            } else {
                (BaselineKind::ZoSgd, baselines::zo_sgd_stepsize(problem))
            };
            let horizon = baseline_horizon(cfg, problem.n_agents);
            if horizon == 0 {
                return Err(Error::Validation(
                    "oracle budget does not cover a single iteration".into(),
                ));
            }
            let bcfg = BaselineConfig {
                kind,
                oracle,
                step: alg.step.unwrap_or(default_step),
                horizon,
                stride: cfg.stride,
                psi_beta: psi_beta(problem)?,
                seed,
            };
            Ok(baselines::run_centralized(problem, &bcfg)?.trace)
        }
    }
}

/// Per-iteration means over the trials that completed.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub iter: usize,
    pub trials: usize,
    pub opt_gap: Option<f64>,
    pub cons_vio: Option<f64>,
    pub phi: Option<f64>,
    pub psi: Option<f64>,
    pub potential: Option<f64>,
    pub oracle_calls: f64,
}

pub const SUMMARY_HEADER: [&str; 8] = [
    "iter",
    "trials",
    "opt_gap",
    "cons_vio",
    "phi",
    "psi",
    "potential",
    "oracle_calls",
];

pub fn summarize(results: &[TrialResult]) -> Vec<SummaryRow> {
    let done: Vec<&TrialResult> = results.iter().filter(|r| r.aborted.is_none()).collect();
    let Some(first) = done.first() else { return Vec::new() };
    let k = done.len() as f64;
    (0..first.records.len())
        .map(|idx| {
            let rows: Vec<&TraceRecord> = done.iter().map(|t| &t.records[idx]).collect();
            let mean = |pick: fn(&TraceRecord) -> Option<f64>| -> Option<f64> {
                rows.iter().map(|r| pick(r)).sum::<Option<f64>>().map(|s| s / k)
            };
            SummaryRow {
                iter: rows[0].iter,
                trials: done.len(),
                opt_gap: mean(|r| r.opt_gap),
                cons_vio: mean(|r| r.cons_vio),
                phi: mean(|r| r.phi),
                psi: mean(|r| r.psi),
                potential: mean(|r| r.potential),
                oracle_calls: rows.iter().map(|r| r.oracle_calls as f64).sum::<f64>() / k,
            }
        })
        .collect()
}

fn field(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

pub fn write_summary<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.iter.to_string(),
            r.trials.to_string(),
            field(r.opt_gap),
            field(r.cons_vio),
            field(r.phi),
            field(r.psi),
            field(r.potential),
            format!("{:e}", r.oracle_calls),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub results: Vec<TrialResult>,
    pub summary: Vec<SummaryRow>,
    pub csv_path: Option<PathBuf>,
    pub summary_path: Option<PathBuf>,
}

impl ExperimentReport {
    pub fn aborted(&self) -> usize {
        self.results.iter().filter(|r| r.aborted.is_some()).count()
    }

    pub fn records(&self) -> impl Iterator<Item = &TraceRecord> {
        self.results.iter().flat_map(|r| r.records.iter())
    }
}

/// `dir/stem_suffix.csv` next to `path`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
    path.with_file_name(format!("{stem}{suffix}.csv"))
}

/// Run all trials (in parallel, assembled in trial order) and write the
/// trace and summary CSVs when an output path is configured.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let results: Vec<TrialResult> = (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, t)).collect();
    let summary = summarize(&results);
    let mut report = ExperimentReport {
        results,
        summary,
        csv_path: None,
        summary_path: None,
    };
    if let Some(path) = &cfg.output {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let records: Vec<TraceRecord> = report.records().cloned().collect();
        metrics::write_csv(&records, fs::File::create(path)?)?;
        let summary_path = sibling(path, "_summary");
        write_summary(&report.summary, fs::File::create(&summary_path)?)?;
        report.csv_path = Some(path.clone());
        report.summary_path = Some(summary_path);
    }
    Ok(report)
}

/// Final trial means of one sweep point.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub agents: usize,
    pub aborted: usize,
    pub last: Option<SummaryRow>,
}

/// Repeat an experiment for each network size. Outputs go to
/// `stem_N<n>.csv` plus a combined `stem_sweep.csv`.
pub fn sweep(cfg: &ExperimentConfig, agents: &[usize]) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &n in agents {
        let mut point = cfg.clone();
        point.topology = cfg.topology.with_agents(n);
        point.output = cfg.output.as_ref().map(|p| sibling(p, &format!("_N{n}")));
        let report = run_experiment(&point)?;
        rows.push(SweepRow {
            agents: n,
            aborted: report.aborted(),
            last: report.summary.last().cloned(),
        });
    }
    if let Some(path) = &cfg.output {
        let mut w = csv::Writer::from_writer(fs::File::create(sibling(path, "_sweep"))?);
        w.write_record([
            "agents",
            "aborted",
            "iter",
            "opt_gap",
            "cons_vio",
            "phi",
            "psi",
            "oracle_calls",
        ])?;
        for r in &rows {
            let last = r.last.clone();
            w.write_record([
                r.agents.to_string(),
                r.aborted.to_string(),
                last.as_ref().map(|l| l.iter.to_string()).unwrap_or_default(),
                field(last.as_ref().and_then(|l| l.opt_gap)),
                field(last.as_ref().and_then(|l| l.cons_vio)),
                field(last.as_ref().and_then(|l| l.phi)),
                field(last.as_ref().and_then(|l| l.psi)),
                last.as_ref()
                    .map(|l| format!("{:e}", l.oracle_calls))
                    .unwrap_or_default(),
            ])?;
        }
        w.flush()?;
    }
    Ok(rows)
}

/// Spectral quantities and theoretical mesh parameters of trial 0's graph.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectra {
    pub n_agents: usize,
    pub n_edges: usize,
    pub resamples: usize,
    pub sigma_min: f64,
    pub norm_lplus: f64,
    pub l_hat: f64,
    pub theory: MnetTheory,
}

pub fn spectra(cfg: &ExperimentConfig) -> Result<Spectra> {
    let setup = setup_trial(cfg, 0)?;
    let topo = setup
        .topology
        .ok_or_else(|| Error::Validation("spectra need a mesh topology".into()))?;
    let ops = GraphOperators::derive(&topo);
    let l_hat = setup.problem.total_smoothness();
    Ok(Spectra {
        n_agents: topo.n_agents(),
        n_edges: topo.n_edges(),
        resamples: topo.resamples(),
        sigma_min: ops.sigma_min,
        norm_lplus: ops.norm_lplus,
        l_hat,
        theory: zone_m::theoretical_params(&ops, l_hat, cfg.algorithm.delta),
    })
}
