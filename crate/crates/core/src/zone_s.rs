//! Zeroth-order primal-dual method over star networks.
//!
//! A central controller holds `x` and the nonsmooth term. Every round it
//! samples a single agent, which estimates its local gradient at `x` and
//! updates its own primal/dual pair; all other agents copy `x`. The
//! controller then minimizes the augmented Lagrangian over `x` in closed form
//! through the prox of the nonsmooth term.
//!
//! Because the sampled agent's dual ends up equal to minus its latest
//! estimate, each agent `i` is fully described by its anchor `y_i` (the last
//! `x` it saw) and the estimate taken there.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::metrics::{self, TraceRecord};
use crate::problems::Problem;
use crate::prox;
use crate::streams::{Purpose, StreamKey};
use crate::szo::{self, EstimatorKey, OracleSpec};
use crate::zone_m::DIVERGENCE_LIMIT;
use crate::Stacked;

/// Scale in `ρ_i = √(5.5 L_i) Σ_j √(5.5 L_j)`.
pub const PENALTY_FACTOR: f64 = 5.5;

/// Sampling probabilities, penalties and step scales.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingParams {
    pub p: Vec<f64>,
    pub rho: Vec<f64>,
    pub alpha: Vec<f64>,
    /// `1/Σρ_i`.
    pub beta: f64,
}

/// Theoretical parameters from per-agent smoothness constants.
pub fn sampling_params(smoothness: &[f64]) -> Result<SamplingParams> {
    if smoothness.is_empty() || smoothness.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::Validation("smoothness constants must be positive".into()));
    }
    let roots: Vec<f64> = smoothness.iter().map(|l| l.sqrt()).collect();
    let root_sum: f64 = roots.iter().sum();
    let p: Vec<f64> = roots.iter().map(|r| r / root_sum).collect();
    let scaled_sum: f64 = smoothness.iter().map(|l| (PENALTY_FACTOR * l).sqrt()).sum();
    let rho: Vec<f64> = smoothness
        .iter()
        .map(|l| (PENALTY_FACTOR * l).sqrt() * scaled_sum)
        .collect();
    let beta = 1.0 / rho.iter().sum::<f64>();
    Ok(SamplingParams {
        alpha: p.clone(),
        p,
        rho,
        beta,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SnetSchedule {
    #[default]
    Theoretical,
    /// Every `ρ_i = √(r+1)` at the step producing iterate `r+1`; `α` and `p`
    /// keep their theoretical values.
    Increasing,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SnetConfig {
    pub params: SamplingParams,
    pub schedule: SnetSchedule,
    pub oracle: OracleSpec,
    pub horizon: usize,
    pub stride: usize,
    /// Step used by the recorded prox-gradient gap.
    pub psi_beta: f64,
    pub seed: u64,
}

impl SnetConfig {
    /// Theoretical parameters for `problem`, recording `Ψ` with their `β`.
    pub fn theoretical(problem: &Problem, oracle: OracleSpec, horizon: usize, seed: u64) -> Result<Self> {
        let params = sampling_params(&problem.smoothness)?;
        Ok(Self {
            psi_beta: params.beta,
            params,
            schedule: SnetSchedule::Theoretical,
            oracle,
            horizon,
            stride: 1,
            seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.oracle.validate()?;
        let sum: f64 = self.params.p.iter().sum();
        if self.params.p.iter().any(|&p| p <= 0.0) || (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!(
                "sampling probabilities must be positive and sum to 1, got {sum}"
            )));
        }
        if self.horizon == 0 || self.stride == 0 {
            return Err(Error::Validation("horizon and stride must be at least 1".into()));
        }
        if self.psi_beta.is_nan() || self.psi_beta <= 0.0 {
            return Err(Error::Validation("psi_beta must be positive".into()));
        }
        Ok(())
    }

    /// Penalties and `β` in effect at step `r`.
    pub fn penalties_at(&self, r: usize) -> (Vec<f64>, f64) {
        match self.schedule {
            SnetSchedule::Theoretical => (self.params.rho.clone(), self.params.beta),
            SnetSchedule::Increasing => {
                let n = self.params.p.len();
                let rho = ((r + 1) as f64).sqrt();
                (vec![rho; n], 1.0 / (rho * n as f64))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SnetState {
    pub x: Vec<f64>,
    /// Row `i` is `z_i`.
    pub z: Stacked,
    pub lambda: Stacked,
    pub y: Stacked,
    pub g_anchor: Stacked,
    pub iter: usize,
    pub oracle_calls: u64,
}

/// `x⁰ ~ N(0, I)` projected onto the feasible set.
pub fn initial_point(problem: &Problem, seed: u64) -> Vec<f64> {
    let mut rng = StreamKey::new(seed, 0, 0, Purpose::Init).rng();
    let raw: Vec<f64> = (0..problem.dim).map(|_| rng.sample(StandardNormal)).collect();
    prox::apply(problem.nonsmooth.prox_kind(), &raw)
}

impl SnetState {
    /// `y_i = z_i = x⁰` and `λ_i⁰ = −Ḡ_i(x⁰)`, costing one estimate per agent.
    pub fn initialize(problem: &Problem, x0: Vec<f64>, cfg: &SnetConfig) -> Result<Self> {
        let n = problem.n_agents;
        let xs = Stacked::from_fn(n, x0.len(), |_, m| x0[m]);
        let (g, calls) = szo::estimate_rows(&problem.locals, &xs, &cfg.oracle, cfg.seed, 0)?;
        Ok(Self {
            x: x0,
            z: xs.clone(),
            lambda: -&g,
            y: xs,
            g_anchor: g,
            iter: 0,
            oracle_calls: calls,
        })
    }
}

/// Index of the first cumulative probability exceeding `u ∈ [0, 1)`.
pub fn pick(p: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}

/// The agent sampled at step `r`.
pub fn select_agent(p: &[f64], seed: u64, r: usize) -> usize {
    let u: f64 = StreamKey::new(seed, 0, r, Purpose::Selection).rng().random();
    pick(p, u)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    pub agent: usize,
    /// Argument of the prox at this step.
    pub u: Vec<f64>,
    /// `max_m |u − (x − βv)|` with `v` rebuilt from the anchors.
    pub direction_residual: f64,
}

/// Advance `state` by one round.
pub fn step(state: &mut SnetState, problem: &Problem, cfg: &SnetConfig) -> Result<StepReport> {
    step_with_dual_scale(state, problem, cfg, 1.0)
}

/// Step whose dual update uses `scale · α_i` instead of `α_i`. Only a
/// validation mutation uses a scale other than one.
pub(crate) fn step_with_dual_scale(
    state: &mut SnetState,
    problem: &Problem,
    cfg: &SnetConfig,
    dual_scale: f64,
) -> Result<StepReport> {
    let r = state.iter;
    let (rho, beta) = cfg.penalties_at(r);
    let i = select_agent(&cfg.params.p, cfg.seed, r);
    let alpha = cfg.params.alpha[i];
    let x = state.x.clone();
    let sample = szo::estimate(
        &problem.locals[i],
        &x,
        &cfg.oracle,
        EstimatorKey::new(cfg.seed, i, r + 1),
    )?;
    state.oracle_calls += sample.evals;
    let g = &sample.value;
    let m = x.len();

    let lambda_old = state.lambda.clone();
    let anchor_old = state.g_anchor.clone();
    let scale = 1.0 / (alpha * rho[i]);
    for j in 0..problem.n_agents {
        state.z.row_mut(j).copy_from_slice(&x);
    }
    for k in 0..m {
        state.z[(i, k)] = x[k] - scale * (lambda_old[(i, k)] + g[k]);
        state.lambda[(i, k)] = lambda_old[(i, k)] + dual_scale * alpha * rho[i] * (state.z[(i, k)] - x[k]);
    }

    // u = β(Σρ_j z_j + Σλ_j^r), with the duals from before this round
    let mut u = vec![0.0; m];
    for j in 0..problem.n_agents {
        for k in 0..m {
            u[k] += rho[j] * state.z[(j, k)] + lambda_old[(j, k)];
        }
    }
    u.iter_mut().for_each(|v| *v *= beta);

    // v = Σ_j anchor_j + (1/α_i)(Ḡ − anchor_i)
    let mut residual: f64 = 0.0;
    for k in 0..m {
        let total: f64 = (0..problem.n_agents).map(|j| anchor_old[(j, k)]).sum();
        let v = total + (g[k] - anchor_old[(i, k)]) / alpha;
        residual = residual.max((u[k] - (x[k] - beta * v)).abs());
    }

    let next = prox::apply(problem.nonsmooth.prox_kind(), &u);
    let magnitude = next
        .iter()
        .fold(0.0_f64, |a, v| if v.is_finite() { a.max(v.abs()) } else { f64::NAN });
    if magnitude.is_nan() || magnitude > DIVERGENCE_LIMIT {
        return Err(Error::NumericalOverflow { iter: r + 1, magnitude });
    }
    state.y.row_mut(i).copy_from_slice(&x);
    state.g_anchor.row_mut(i).copy_from_slice(g);
    state.x = next;
    state.iter += 1;
    Ok(StepReport {
        agent: i,
        u,
        direction_residual: residual,
    })
}

/// `max_i ‖λ_i + Ḡ_i(y_i)‖`.
pub fn dual_invariant_residual(state: &SnetState) -> f64 {
    (&state.lambda + &state.g_anchor)
        .row_iter()
        .map(|row| row.norm())
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SnetOutput {
    pub trace: Vec<TraceRecord>,
    pub u: usize,
    pub x: Vec<f64>,
    pub final_state: SnetState,
}

/// Uniform draw from `{1, …, T}`.
pub fn sample_output_index(seed: u64, horizon: usize) -> usize {
    StreamKey::new(seed, 0, 0, Purpose::Output)
        .rng()
        .random_range(1..=horizon)
}

fn record(state: &SnetState, problem: &Problem, cfg: &SnetConfig) -> TraceRecord {
    let spread: f64 = (0..problem.n_agents)
        .map(|j| {
            state
                .z
                .row(j)
                .iter()
                .zip(&state.x)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
        })
        .sum();
    TraceRecord {
        iter: state.iter,
        cons_vio: Some(spread),
        psi: Some(metrics::psi_gap(&state.x, problem, cfg.psi_beta)),
        oracle_calls: state.oracle_calls,
        ..Default::default()
    }
}

pub fn run(problem: &Problem, cfg: &SnetConfig) -> Result<SnetOutput> {
    cfg.validate()?;
    let state = SnetState::initialize(problem, initial_point(problem, cfg.seed), cfg)?;
    run_from(state, problem, cfg, sample_output_index(cfg.seed, cfg.horizon))
}

pub fn run_from(mut state: SnetState, problem: &Problem, cfg: &SnetConfig, u: usize) -> Result<SnetOutput> {
    let mut trace = vec![record(&state, problem, cfg)];
    let mut output = state.x.clone();
    for r in 0..cfg.horizon {
        step(&mut state, problem, cfg)?;
        if r + 1 == u {
            output = state.x.clone();
        }
        if (r + 1) % cfg.stride == 0 || r + 1 == cfg.horizon {
            trace.push(record(&state, problem, cfg));
        }
    }
    Ok(SnetOutput {
        trace,
        u,
        x: output,
        final_state: state,
    })
}
