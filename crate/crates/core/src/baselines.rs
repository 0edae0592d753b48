//! Comparison methods: decentralized gradient-free consensus (RGF) over a
//! mesh, and centralized zeroth-order gradient descent in full-batch
//! (ZO-GD) and single-sample (ZO-SGD) flavors.
//!
//! Estimates are keyed exactly as in [`crate::zone_m`] and [`crate::zone_s`],
//! so runs with the same seed share directions and noise wherever the
//! algorithms query the same agent at the same round.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Topology;
use crate::metrics::{self, TraceRecord};
use crate::problems::Problem;
use crate::prox;
use crate::streams::{Purpose, StreamKey};
use crate::szo::{self, EstimatorKey, OracleSpec};
use crate::zone_m::{MnetState, StepMode, DIVERGENCE_LIMIT};
use crate::zone_s;
use crate::Stacked;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaselineKind {
    Rgf,
    ZoGd,
    ZoSgd,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineConfig {
    pub kind: BaselineKind,
    pub oracle: OracleSpec,
    /// Constant step for ZO-GD/ZO-SGD; RGF always uses `1/√r`.
    pub step: f64,
    pub horizon: usize,
    pub stride: usize,
    /// Step used by the recorded prox-gradient gap.
    pub psi_beta: f64,
    pub seed: u64,
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        self.oracle.validate()?;
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::Validation(format!("step must be positive, got {}", self.step)));
        }
        if self.horizon == 0 || self.stride == 0 {
            return Err(Error::Validation("horizon and stride must be at least 1".into()));
        }
        Ok(())
    }
}

/// `1/(4L(M+4))` with `L = Σ L_i`.
pub fn zo_gd_stepsize(problem: &Problem) -> f64 {
    1.0 / (4.0 * problem.total_smoothness() * (problem.dim as f64 + 4.0))
}

/// `1/(2L(M+4))` with `L = Σ L_i`.
pub fn zo_sgd_stepsize(problem: &Problem) -> f64 {
    1.0 / (2.0 * problem.total_smoothness() * (problem.dim as f64 + 4.0))
}

/// Metropolis–Hastings weights `1/(1 + max(d_i, d_j))` on edges, with the
/// remainder on the diagonal.
pub fn metropolis_weights(topo: &Topology) -> DMatrix<f64> {
    let n = topo.n_agents();
    let d = topo.degrees();
    let mut w = DMatrix::zeros(n, n);
    for &(i, j) in topo.edges() {
        let v = 1.0 / (1.0 + d[i].max(d[j]) as f64);
        w[(i, j)] = v;
        w[(j, i)] = v;
    }
    for i in 0..n {
        w[(i, i)] = 1.0 - w.row(i).sum();
    }
    w
}

fn guard(values: impl Iterator<Item = f64>, iter: usize) -> Result<()> {
    let magnitude = values.fold(0.0_f64, |a, v| if v.is_finite() { a.max(v.abs()) } else { f64::NAN });
    if magnitude.is_nan() || magnitude > DIVERGENCE_LIMIT {
        return Err(Error::NumericalOverflow { iter, magnitude });
    }
    Ok(())
}

/// `z_i⁺ = Σ_j Ŵ_ij z_j − G_i(z_i)/√r` for round `r ≥ 1`. Returns the new
/// iterate and the oracle calls spent.
pub fn rgf_step(
    z: &Stacked,
    problem: &Problem,
    weights: &DMatrix<f64>,
    r: usize,
    cfg: &BaselineConfig,
) -> Result<(Stacked, u64)> {
    assert!(r >= 1, "rounds are counted from 1");
    let (g, calls) = szo::estimate_rows(&problem.locals, z, &cfg.oracle, cfg.seed, r - 1)?;
    let next = weights * z - g / (r as f64).sqrt();
    guard(next.iter().copied(), r)?;
    Ok((next, calls))
}

/// `prox(x − η Σ_i Ḡ_i(x))`, estimates keyed by round `r`.
pub fn zo_gd_step(x: &[f64], problem: &Problem, r: usize, cfg: &BaselineConfig) -> Result<(Vec<f64>, u64)> {
    let mut direction = vec![0.0; x.len()];
    let mut calls = 0;
    for (i, f) in problem.locals.iter().enumerate() {
        let s = szo::estimate(f, x, &cfg.oracle, EstimatorKey::new(cfg.seed, i, r))?;
        calls += s.evals;
        direction.iter_mut().zip(&s.value).for_each(|(d, g)| *d += g);
    }
    Ok((descend(x, &direction, problem, r, cfg.step)?, calls))
}

/// `prox(x − η N Ḡ_i(x))` for one uniformly drawn agent and a single sample.
pub fn zo_sgd_step(x: &[f64], problem: &Problem, r: usize, cfg: &BaselineConfig) -> Result<(Vec<f64>, u64)> {
    let n = problem.n_agents;
    let i = StreamKey::new(cfg.seed, 0, r, Purpose::Selection)
        .rng()
        .random_range(0..n);
    let spec = OracleSpec {
        batch: 1,
        ..cfg.oracle.clone()
    };
    let s = szo::estimate(&problem.locals[i], x, &spec, EstimatorKey::new(cfg.seed, i, r))?;
    let direction: Vec<f64> = s.value.iter().map(|g| n as f64 * g).collect();
    Ok((descend(x, &direction, problem, r, cfg.step)?, s.evals))
}

fn descend(x: &[f64], direction: &[f64], problem: &Problem, r: usize, step: f64) -> Result<Vec<f64>> {
    let moved: Vec<f64> = x.iter().zip(direction).map(|(a, d)| a - step * d).collect();
    let next = prox::apply(problem.nonsmooth.prox_kind(), &moved);
    guard(next.iter().copied(), r + 1)?;
    Ok(next)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineOutput {
    pub trace: Vec<TraceRecord>,
    /// Final iterate: stacked for RGF, a single row otherwise.
    pub iterate: Stacked,
    pub oracle_calls: u64,
}

fn should_record(r: usize, cfg: &BaselineConfig) -> bool {
    r.is_multiple_of(cfg.stride) || r == cfg.horizon
}

/// RGF from the same `z⁰` as the mesh method with this seed.
pub fn run_rgf(problem: &Problem, topo: &Topology, cfg: &BaselineConfig) -> Result<BaselineOutput> {
    cfg.validate()?;
    let weights = metropolis_weights(topo);
    let mut z = MnetState::initialize(topo, StepMode::Distributed, cfg.seed).z;
    let mut calls = 0;
    let record = |z: &Stacked, r: usize, calls: u64| {
        let (opt_gap, cons_vio) = metrics::mnet_gap(z, topo, problem);
        TraceRecord {
            iter: r,
            opt_gap: Some(opt_gap),
            cons_vio: Some(cons_vio),
            oracle_calls: calls,
            ..Default::default()
        }
    };
    let mut trace = vec![record(&z, 0, 0)];
    for r in 1..=cfg.horizon {
        let (next, c) = rgf_step(&z, problem, &weights, r, cfg)?;
        z = next;
        calls += c;
        if should_record(r, cfg) {
            trace.push(record(&z, r, calls));
        }
    }
    Ok(BaselineOutput {
        trace,
        iterate: z,
        oracle_calls: calls,
    })
}

/// ZO-GD or ZO-SGD from the same `x⁰` as the star method with this seed.
pub fn run_centralized(problem: &Problem, cfg: &BaselineConfig) -> Result<BaselineOutput> {
    cfg.validate()?;
    let mut x = zone_s::initial_point(problem, cfg.seed);
    let mut calls = 0;
    let record = |x: &[f64], r: usize, calls: u64| TraceRecord {
        iter: r,
        psi: Some(metrics::psi_gap(x, problem, cfg.psi_beta)),
        oracle_calls: calls,
        ..Default::default()
    };
    let mut trace = vec![record(&x, 0, 0)];
    for r in 0..cfg.horizon {
        let (next, c) = match cfg.kind {
            BaselineKind::ZoGd => zo_gd_step(&x, problem, r, cfg)?,
            BaselineKind::ZoSgd => zo_sgd_step(&x, problem, r, cfg)?,
            BaselineKind::Rgf => return Err(Error::Validation("RGF needs a mesh topology".into())),
        };
        x = next;
        calls += c;
        if should_record(r + 1, cfg) {
            trace.push(record(&x, r + 1, calls));
        }
    }
    Ok(BaselineOutput {
        trace,
        iterate: Stacked::from_row_slice(1, x.len(), &x),
        oracle_calls: calls,
    })
}
