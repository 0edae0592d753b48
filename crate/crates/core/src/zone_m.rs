//! Zeroth-order primal-dual method over mesh networks.
//!
//! Each round every agent forms a mini-batch gradient estimate of its local
//! objective and takes a linearized augmented-Lagrangian step. The method is
//! available in two forms that produce the same iterates:
//!
//! * [`StepMode::Matrix`] keeps the edge duals `λ` and applies the primal
//!   and dual updates with the incidence operator.
//! * [`StepMode::Distributed`] eliminates `λ` and runs a two-step recursion
//!   in which agent `i` only reads its own last two iterates, the averages of
//!   its neighbors' last two iterates and its last two estimates.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::graph::{GraphOperators, Topology};
use crate::metrics::{self, TraceRecord};
use crate::problems::Problem;
use crate::streams::{Purpose, StreamKey};
use crate::szo::{self, OracleSpec};
use crate::Stacked;

/// Iterates whose sup-norm exceeds this abort the trial.
pub const DIVERGENCE_LIMIT: f64 = 1e8;

/// Margin applied to strict lower bounds on `c` and `ρ`.
pub const THEORY_MARGIN: f64 = 1.01;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PenaltySchedule {
    Constant(f64),
    /// `ρ_r = √(r+1)` at the step that produces iterate `r+1`.
    Increasing,
}

impl PenaltySchedule {
    pub fn rho_at(&self, r: usize) -> f64 {
        match *self {
            PenaltySchedule::Constant(rho) => rho,
            PenaltySchedule::Increasing => ((r + 1) as f64).sqrt(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum StepMode {
    #[default]
    Matrix,
    Distributed,
}

/// Constants of the potential function, `P = L_ρ + c·V` with
/// `V = (ρ/2)(‖Az‖² + ‖z − z_prev‖²_B)` and `B = L⁺ + (k/(cρ))I`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialWeights {
    pub c: f64,
    pub k: f64,
}

/// Parameters that satisfy the descent conditions of the potential function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MnetTheory {
    pub c: f64,
    pub b: f64,
    pub d: f64,
    pub rho_min: f64,
    /// `THEORY_MARGIN · rho_min`, the penalty used in theoretical mode.
    pub rho: f64,
    pub k: f64,
    /// Coefficient of `σ̃²/J` in the per-step descent slack.
    pub c3: f64,
}

impl MnetTheory {
    pub fn weights(&self) -> PotentialWeights {
        PotentialWeights { c: self.c, k: self.k }
    }
}

/// `(b, d, ρ_min)` for a given `c`.
pub fn rho_lower_bound(c: f64, sigma_min: f64, l_hat: f64, delta: f64) -> (f64, f64, f64) {
    let b = -l_hat * (l_hat + 4.0 * c + 1.0) - 3.0;
    let d = -12.0 * l_hat * l_hat / sigma_min;
    let root = (-b + (b * b - 8.0 * d).sqrt()) / 4.0;
    (b, d, root.max(delta).max(l_hat / 2.0))
}

pub fn theoretical_params(ops: &GraphOperators, l_hat: f64, delta: f64) -> MnetTheory {
    let sigma = ops.sigma_min;
    let c = THEORY_MARGIN * 6.0 * ops.norm_lplus / sigma;
    let (b, d, rho_min) = rho_lower_bound(c, sigma, l_hat, delta);
    let rho = THEORY_MARGIN * rho_min;
    let k = 2.0 * (6.0 * l_hat * l_hat / (rho * sigma) + 1.5 * c * l_hat);
    let c3 = 9.0 / (rho * sigma) + (3.0 + 6.0 * c * l_hat) / (2.0 * l_hat * l_hat);
    MnetTheory {
        c,
        b,
        d,
        rho_min,
        rho,
        k,
        c3,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MnetConfig {
    pub schedule: PenaltySchedule,
    pub oracle: OracleSpec,
    pub horizon: usize,
    /// Record metrics every `stride` iterations (and at the last one).
    pub stride: usize,
    pub mode: StepMode,
    /// Record the potential in matrix mode.
    pub potential: Option<PotentialWeights>,
    pub seed: u64,
}

impl MnetConfig {
    pub fn validate(&self) -> Result<()> {
        self.oracle.validate()?;
        if let PenaltySchedule::Constant(rho) = self.schedule {
            if !(rho > 0.0 && rho.is_finite()) {
                return Err(Error::Validation(format!("penalty must be positive, got {rho}")));
            }
        }
        if self.horizon == 0 || self.stride == 0 {
            return Err(Error::Validation("horizon and stride must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MnetState {
    pub z: Stacked,
    pub z_prev: Stacked,
    /// Edge duals; kept in matrix mode only.
    pub lambda: Option<Stacked>,
    pub lambda_prev: Option<Stacked>,
    pub g_prev: Stacked,
    pub iter: usize,
    pub rho_prev: f64,
    pub oracle_calls: u64,
}

impl MnetState {
    /// `z⁰ ~ N(0, I)` per coordinate, `λ⁰ = 0`.
    pub fn initialize(topo: &Topology, mode: StepMode, seed: u64) -> Self {
        let (n, m) = (topo.n_agents(), topo.dim_m());
        let mut z = Stacked::zeros(n, m);
        for i in 0..n {
            let mut rng = StreamKey::new(seed, i, 0, Purpose::Init).rng();
            for k in 0..m {
                z[(i, k)] = rng.sample(StandardNormal);
            }
        }
        Self::from_initial(topo, z, mode)
    }

    pub fn from_initial(topo: &Topology, z: Stacked, mode: StepMode) -> Self {
        let lambda = match mode {
            StepMode::Matrix => Some(Stacked::zeros(topo.n_edges(), topo.dim_m())),
            StepMode::Distributed => None,
        };
        Self {
            z_prev: z.clone(),
            g_prev: Stacked::zeros(z.nrows(), z.ncols()),
            z,
            lambda_prev: lambda.clone(),
            lambda,
            iter: 0,
            rho_prev: 0.0,
            oracle_calls: 0,
        }
    }
}

fn check_finite(z: &Stacked, iter: usize) -> Result<()> {
    let magnitude = z
        .iter()
        .fold(0.0_f64, |acc, v| if v.is_nan() { f64::NAN } else { acc.max(v.abs()) });
    if magnitude.is_nan() || magnitude > DIVERGENCE_LIMIT {
        return Err(Error::NumericalOverflow { iter, magnitude });
    }
    Ok(())
}

/// One round. `g` holds this round's estimates at `state.z`.
fn apply_step(state: &mut MnetState, g: Stacked, topo: &Topology, rho: f64, mode: StepMode) -> Result<()> {
    let next = match mode {
        StepMode::Matrix => matrix_update(state, &g, topo, rho),
        StepMode::Distributed => distributed_update(state, &g, topo, rho),
    };
    check_finite(&next, state.iter + 1)?;
    if let Some(lambda) = state.lambda.as_mut() {
        let az = topo.incidence_apply(&next);
        let updated = &*lambda + az * rho;
        state.lambda_prev = Some(std::mem::replace(lambda, updated));
    }
    state.z_prev = std::mem::replace(&mut state.z, next);
    state.g_prev = g;
    state.rho_prev = rho;
    state.iter += 1;
    Ok(())
}

/// `z − (1/(2ρ))D⁻¹[G + Aᵀλ + ρAᵀAz]`.
fn matrix_update(state: &MnetState, g: &Stacked, topo: &Topology, rho: f64) -> Stacked {
    let lambda = state.lambda.as_ref().expect("matrix mode keeps the dual");
    let mut grad = g + topo.incidence_transpose_apply(lambda);
    grad += topo.incidence_transpose_apply(&topo.incidence_apply(&state.z)) * rho;
    let mut next = state.z.clone();
    for (i, &d) in topo.degrees().iter().enumerate() {
        let scale = 1.0 / (2.0 * rho * d as f64);
        for m in 0..next.ncols() {
            next[(i, m)] -= scale * grad[(i, m)];
        }
    }
    next
}

fn neighbor_average(topo: &Topology, z: &Stacked, i: usize, m: usize) -> f64 {
    let nbrs = topo.neighbors(i);
    nbrs.iter().map(|&j| z[(j, m)]).sum::<f64>() / nbrs.len() as f64
}

/// Per-agent recursion. With `κ = ρ_{r−1}/ρ_r` and `a_i`, `a'_i` the
/// neighbor averages of `z^r`, `z^{r−1}`:
///
/// `z_i⁺ = z_i + κ(z_i − z'_i) − ((1+κ)/2)(z_i − a_i) + (κ/2)(z'_i − a'_i) − ΔG_i/(2ρ d_i)`
///
/// which for constant `ρ` is `z_i⁺ = z_i + a_i − (z'_i + a'_i)/2 − ΔG_i/(2ρ d_i)`.
/// The first round has no past iterate and uses `λ⁰ = 0` directly.
fn distributed_update(state: &MnetState, g: &Stacked, topo: &Topology, rho: f64) -> Stacked {
    let (z, zp) = (&state.z, &state.z_prev);
    let mut next = Stacked::zeros(z.nrows(), z.ncols());
    for i in 0..z.nrows() {
        let step = 1.0 / (2.0 * rho * topo.degrees()[i] as f64);
        for m in 0..z.ncols() {
            let a = neighbor_average(topo, z, i, m);
            next[(i, m)] = if state.iter == 0 {
                z[(i, m)] - 0.5 * (z[(i, m)] - a) - step * g[(i, m)]
            } else {
                let kappa = state.rho_prev / rho;
                let a_prev = neighbor_average(topo, zp, i, m);
                let dg = g[(i, m)] - state.g_prev[(i, m)];
                z[(i, m)] + kappa * (z[(i, m)] - zp[(i, m)]) - 0.5 * (1.0 + kappa) * (z[(i, m)] - a)
                    + 0.5 * kappa * (zp[(i, m)] - a_prev)
                    - step * dg
            };
        }
    }
    next
}

/// Advance `state` by one round.
pub fn step(state: &mut MnetState, problem: &Problem, topo: &Topology, cfg: &MnetConfig) -> Result<()> {
    let r = state.iter;
    let rho = cfg.schedule.rho_at(r);
    let (g, calls) = szo::estimate_rows(&problem.locals, &state.z, &cfg.oracle, cfg.seed, r)?;
    state.oracle_calls += calls;
    apply_step(state, g, topo, rho, cfg.mode)
}

/// Potential value split into its parts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Potential {
    pub total: f64,
    pub lagrangian: f64,
    pub v: f64,
}

/// `P = L_ρ(z, λ) + c·V` at a matrix-mode state, with true function values.
pub fn potential(state: &MnetState, problem: &Problem, topo: &Topology, rho: f64, w: PotentialWeights) -> Potential {
    let lambda = state.lambda.as_ref().expect("potential needs the dual");
    let az = topo.incidence_apply(&state.z);
    let az_sq = az.norm_squared();
    let lagrangian = problem.stacked_value(&state.z) + lambda.dot(&az) + 0.5 * rho * az_sq;
    let diff = &state.z - &state.z_prev;
    // L⁺ = D + adjacency
    let mut lplus_diff = topo.neighbor_sum(&diff);
    for (i, &d) in topo.degrees().iter().enumerate() {
        for m in 0..diff.ncols() {
            lplus_diff[(i, m)] += d as f64 * diff[(i, m)];
        }
    }
    let b_norm = diff.dot(&lplus_diff) + w.k / (w.c * rho) * diff.norm_squared();
    let v = 0.5 * rho * (az_sq + b_norm);
    Potential {
        total: lagrangian + w.c * v,
        lagrangian,
        v,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MnetOutput {
    pub trace: Vec<TraceRecord>,
    /// Index of the returned iterate.
    pub u: usize,
    pub z: Stacked,
    pub lambda: Option<Stacked>,
    pub final_state: MnetState,
}

/// Uniform draw from `{0, …, T−1}` on the output stream.
pub fn sample_output_index(seed: u64, horizon: usize) -> usize {
    StreamKey::new(seed, 0, 0, Purpose::Output)
        .rng()
        .random_range(0..horizon)
}

fn record(state: &MnetState, problem: &Problem, topo: &Topology, cfg: &MnetConfig) -> TraceRecord {
    let (opt_gap, cons_vio) = metrics::mnet_gap(&state.z, topo, problem);
    let mut rec = TraceRecord {
        iter: state.iter,
        opt_gap: Some(opt_gap),
        cons_vio: Some(cons_vio),
        oracle_calls: state.oracle_calls,
        ..Default::default()
    };
    if let (Some(lambda_prev), StepMode::Matrix) = (&state.lambda_prev, cfg.mode) {
        let rho = cfg.schedule.rho_at(state.iter.saturating_sub(1));
        rec.phi = Some(metrics::phi_gap(&state.z, lambda_prev, rho, topo, problem));
        if let Some(w) = cfg.potential.filter(|_| state.iter > 0) {
            rec.potential = Some(potential(state, problem, topo, rho, w).total);
        }
    }
    rec
}

/// Run `T` rounds from `z⁰ ~ N(0, I)`.
pub fn run(problem: &Problem, topo: &Topology, cfg: &MnetConfig) -> Result<MnetOutput> {
    let state = MnetState::initialize(topo, cfg.mode, cfg.seed);
    run_from(state, problem, topo, cfg, sample_output_index(cfg.seed, cfg.horizon))
}

/// Run `T` rounds from `state`, returning iterate `u` alongside the trace.
pub fn run_from(
    mut state: MnetState,
    problem: &Problem,
    topo: &Topology,
    cfg: &MnetConfig,
    u: usize,
) -> Result<MnetOutput> {
    cfg.validate()?;
    let mut trace = vec![record(&state, problem, topo, cfg)];
    let mut output = (state.z.clone(), state.lambda.clone());
    for r in 0..cfg.horizon {
        step(&mut state, problem, topo, cfg)?;
        if r + 1 == u {
            output = (state.z.clone(), state.lambda.clone());
        }
        if (r + 1) % cfg.stride == 0 || r + 1 == cfg.horizon {
            trace.push(record(&state, problem, topo, cfg));
        }
    }
    Ok(MnetOutput {
        trace,
        u,
        z: output.0,
        lambda: output.1,
        final_state: state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{flatten, kron_identity};
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix, DVector};

    fn fig1() -> Topology {
        Topology::from_edges(4, 1, &[(0, 1), (0, 3), (2, 3)]).unwrap()
    }

    fn config(mode: StepMode, schedule: PenaltySchedule) -> MnetConfig {
        MnetConfig {
            schedule,
            oracle: OracleSpec::new(0.01, 0.05, 20),
            horizon: 50,
            stride: 1,
            mode,
            potential: None,
            seed: 11,
        }
    }

    fn max_diff(a: &Stacked, b: &Stacked) -> f64 {
        (a - b).amax()
    }

    #[test]
    fn theoretical_examples() {
        let (b, d, rho_min) = rho_lower_bound(10.0, 1.0, 1.0, 1e-3);
        assert_eq!((b, d), (-45.0, -12.0));
        assert_abs_diff_eq!(b * b - 8.0 * d, 2121.0);
        assert_abs_diff_eq!(rho_min, (45.0 + 2121f64.sqrt()) / 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rho_min, 22.764, epsilon = 1e-3);

        let (_, _, rho_min) = rho_lower_bound(10.0, 1.0, 1e-12, 5.0);
        assert_eq!(rho_min, 5.0);

        let path = Topology::from_edges(3, 1, &[(0, 1), (1, 2)]).unwrap();
        let theory = theoretical_params(&GraphOperators::derive(&path), 1.0, 1e-3);
        assert_abs_diff_eq!(theory.c, 18.18, epsilon = 1e-10);
        assert!(theory.k > 0.0 && theory.rho > theory.rho_min);
    }

    #[test]
    fn forms_agree_on_fig1_graph() {
        let topo = fig1();
        let problem = Problem::make_sigmoid_log(4, 2);
        for schedule in [PenaltySchedule::Constant(3.0), PenaltySchedule::Increasing] {
            let mut a = MnetState::initialize(&topo, StepMode::Matrix, 11);
            let mut b = MnetState::initialize(&topo, StepMode::Distributed, 11);
            let (ca, cb) = (
                config(StepMode::Matrix, schedule),
                config(StepMode::Distributed, schedule),
            );
            for _ in 0..50 {
                step(&mut a, &problem, &topo, &ca).unwrap();
                step(&mut b, &problem, &topo, &cb).unwrap();
                assert!(max_diff(&a.z, &b.z) <= 1e-10, "{schedule:?} r={}", a.iter);
            }
            assert_eq!(a.oracle_calls, b.oracle_calls);
        }
    }

    #[test]
    fn first_dual_is_penalized_residual() {
        let topo = fig1();
        let problem = Problem::make_sigmoid_log(4, 2);
        let cfg = config(StepMode::Matrix, PenaltySchedule::Constant(2.5));
        let mut state = MnetState::initialize(&topo, StepMode::Matrix, 3);
        step(&mut state, &problem, &topo, &cfg).unwrap();
        let expected = topo.incidence_apply(&state.z) * 2.5;
        assert_eq!(state.lambda.unwrap(), expected);
    }

    #[test]
    fn dual_stays_in_incidence_range() {
        let topo = Topology::random_geometric(8, 1, 0.6, 4).unwrap();
        let ops = GraphOperators::derive(&topo);
        let a = &ops.incidence;
        // projector onto col(A): A (AᵀA)⁺ Aᵀ
        let pinv = (a.transpose() * a).pseudo_inverse(1e-10).unwrap();
        let projector = a * pinv * a.transpose();
        let problem = Problem::make_sigmoid_log(8, 9);
        let cfg = config(StepMode::Matrix, PenaltySchedule::Constant(4.0));
        let mut state = MnetState::initialize(&topo, StepMode::Matrix, 5);
        for _ in 0..30 {
            step(&mut state, &problem, &topo, &cfg).unwrap();
            let lambda = flatten(state.lambda.as_ref().unwrap());
            let residual = (&lambda - &projector * &lambda).amax();
            assert!(residual <= 1e-10, "residual {residual}");
        }
    }

    #[test]
    fn extra_identity_holds_for_constant_penalty() {
        let topo = Topology::random_geometric(6, 2, 0.7, 1).unwrap();
        let ops = GraphOperators::derive(&topo);
        let w = kron_identity(&ops.mixing, 2);
        let dinv = kron_identity(&ops.degree.map(|d| if d > 0.0 { 1.0 / d } else { 0.0 }), 2);
        let id = DMatrix::<f64>::identity(12, 12);
        let rho = 1.7;
        let problem = Problem::make_sparse_quadratic(6, 2, 1.0, 8);
        let cfg = config(StepMode::Distributed, PenaltySchedule::Constant(rho));
        let mut state = MnetState::initialize(&topo, StepMode::Distributed, 2);
        for _ in 0..10 {
            let before = state.clone();
            step(&mut state, &problem, &topo, &cfg).unwrap();
            if before.iter == 0 {
                continue;
            }
            let dg = flatten(&state.g_prev) - flatten(&before.g_prev);
            let (z, zp) = (flatten(&before.z), flatten(&before.z_prev));
            let expected = &z + &w * &z - (&id + &w) * &zp * 0.5 - &dinv * dg / (2.0 * rho);
            assert!((flatten(&state.z) - expected).amax() <= 1e-12);
        }
    }

    #[test]
    fn consensus_is_a_fixed_point_of_the_recursion() {
        let topo = fig1();
        let z = Stacked::from_element(4, 1, 0.37);
        let mut state = MnetState::from_initial(&topo, z.clone(), StepMode::Distributed);
        state.iter = 5;
        state.rho_prev = 2.0;
        state.g_prev = Stacked::from_column_slice(4, 1, &[0.1, -0.2, 0.3, 0.4]);
        let g = state.g_prev.clone();
        apply_step(&mut state, g, &topo, 2.0, StepMode::Distributed).unwrap();
        assert_eq!(state.z, z);
    }

    #[test]
    fn potential_special_cases() {
        let topo = fig1();
        let problem = Problem::make_sigmoid_log(4, 6);
        let w = PotentialWeights { c: 3.0, k: 2.0 };
        let consensus = MnetState::from_initial(&topo, Stacked::from_element(4, 1, 0.2), StepMode::Matrix);
        let p = potential(&consensus, &problem, &topo, 5.0, w);
        assert_abs_diff_eq!(p.total, problem.stacked_value(&consensus.z), epsilon = 1e-14);

        let z = Stacked::from_column_slice(4, 1, &[0.3, -1.0, 0.5, 2.0]);
        let spread = MnetState::from_initial(&topo, z.clone(), StepMode::Matrix);
        let az = topo.incidence_apply(&z).norm_squared();
        let p = potential(&spread, &problem, &topo, 5.0, w);
        assert_abs_diff_eq!(p.total, problem.stacked_value(&z) + 2.5 * 4.0 * az, epsilon = 1e-12);
    }

    #[test]
    fn potential_matches_dense_definition() {
        let topo = Topology::random_geometric(5, 2, 0.8, 3).unwrap();
        let ops = GraphOperators::derive(&topo);
        let problem = Problem::make_sparse_quadratic(5, 2, 2.0, 1);
        let cfg = config(StepMode::Matrix, PenaltySchedule::Constant(2.0));
        let mut state = MnetState::initialize(&topo, StepMode::Matrix, 8);
        for _ in 0..4 {
            step(&mut state, &problem, &topo, &cfg).unwrap();
        }
        let (rho, c, k) = (2.0, 7.0, 3.0);
        let a = kron_identity(&ops.incidence, 2);
        let lplus = kron_identity(&ops.signless_laplacian, 2);
        let b = lplus + DMatrix::<f64>::identity(10, 10) * (k / (c * rho));
        let z: DVector<f64> = flatten(&state.z);
        let dz = &z - flatten(&state.z_prev);
        let lam = flatten(state.lambda.as_ref().unwrap());
        let az = &a * &z;
        let g: f64 = (0..5)
            .map(|i| problem.locals[i].value(&[state.z[(i, 0)], state.z[(i, 1)]]))
            .sum();
        let lagr = g + lam.dot(&az) + rho / 2.0 * az.norm_squared();
        let v = rho / 2.0 * (az.norm_squared() + dz.dot(&(&b * &dz)));
        let p = potential(&state, &problem, &topo, rho, PotentialWeights { c, k });
        assert_abs_diff_eq!(p.total, lagr + c * v, epsilon = 1e-10);
    }

    #[test]
    fn output_zero_returns_initial_pair() {
        let topo = fig1();
        let problem = Problem::make_sigmoid_log(4, 2);
        let mut cfg = config(StepMode::Matrix, PenaltySchedule::Constant(3.0));
        cfg.horizon = 1;
        let init = MnetState::initialize(&topo, StepMode::Matrix, cfg.seed);
        let out = run_from(init.clone(), &problem, &topo, &cfg, 0).unwrap();
        assert_eq!(out.z, init.z);
        assert_eq!(out.lambda.unwrap(), Stacked::zeros(3, 1));
        assert_eq!(out.trace.len(), 2);
        assert_eq!(sample_output_index(cfg.seed, 1), 0);
    }

    #[test]
    fn divergence_is_reported() {
        let topo = fig1();
        let mut state = MnetState::initialize(&topo, StepMode::Matrix, 1);
        let g = Stacked::from_element(4, 1, 1e12);
        let err = apply_step(&mut state, g, &topo, 1e-3, StepMode::Matrix).unwrap_err();
        assert!(matches!(err, Error::NumericalOverflow { iter: 1, .. }));
    }

    #[test]
    fn trace_counts_oracle_calls() {
        let topo = fig1();
        let problem = Problem::make_sigmoid_log(4, 2);
        let mut cfg = config(StepMode::Matrix, PenaltySchedule::Constant(3.0));
        cfg.stride = 7;
        let out = run(&problem, &topo, &cfg).unwrap();
        let iters: Vec<usize> = out.trace.iter().map(|t| t.iter).collect();
        assert_eq!(iters, vec![0, 7, 14, 21, 28, 35, 42, 49, 50]);
        let last = out.trace.last().unwrap();
        assert_eq!(last.oracle_calls, 50 * 4 * 2 * 20);
        assert!(last.phi.is_some() && last.psi.is_none());
    }
}
