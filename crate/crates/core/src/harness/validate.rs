//! Fast invariant suite behind the `validate` subcommand.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{GraphOperators, Topology};
use crate::problems::Problem;
use crate::prox;
use crate::szo::{self, EstimatorKey, OracleSpec, Reference};
use crate::zone_m::{self, MnetConfig, MnetState, PenaltySchedule, StepMode};
use crate::zone_s::{self, SnetConfig};

/// Deliberate defects used to check that the suite can fail.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Flip the sign of the signless Laplacian.
    SignlessLaplacianSign,
    /// Scale `α_i` by 1.1 in the star method's dual update only.
    DualStepScale,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {:<22} {}", self.name, self.detail)
    }
}

pub fn validate_suite() -> Vec<Check> {
    validate_suite_with(None)
}

pub fn validate_suite_with(fault: Option<Fault>) -> Vec<Check> {
    vec![
        graph_identities(fault),
        estimator_moments(),
        form_equivalence(),
        prox_oracle(),
        dual_compact_form(fault),
    ]
}

fn graph_identities(fault: Option<Fault>) -> Check {
    let mut worst: f64 = 0.0;
    let mut exact = true;
    for topo in [
        Topology::from_edges(3, 1, &[(0, 1), (1, 2)]).expect("path graph"),
        Topology::random_geometric(12, 1, 0.5, 1).expect("connected graph"),
    ] {
        let mut ops = GraphOperators::derive(&topo);
        if fault == Some(Fault::SignlessLaplacianSign) {
            ops.signless_laplacian = -ops.signless_laplacian;
        }
        let n = topo.n_agents();
        exact &= &ops.signless_laplacian + &ops.signed_laplacian == &ops.degree * 2.0;
        let row_sums = ops.mixing.column_sum();
        worst = worst.max(row_sums.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max));
        let inv_degree = DMatrix::from_diagonal(&ops.degree.diagonal().map(|d| 1.0 / d));
        let half = &inv_degree * &ops.signless_laplacian * 0.5;
        let average = (DMatrix::identity(n, n) + &ops.mixing) * 0.5;
        worst = worst.max((half - average).amax());
    }
    let path = GraphOperators::derive(&Topology::from_edges(3, 1, &[(0, 1), (1, 2)]).expect("path graph"));
    let spectra = (path.sigma_min - 1.0).abs().max((path.norm_lplus - 3.0).abs());
    let passed = exact && worst <= 1e-12 && spectra <= 1e-10;
    Check {
        name: "graph identities",
        passed,
        detail: format!("L⁺+L⁻=2D exact: {exact}, max deviation {worst:.1e}, path spectra error {spectra:.1e}"),
    }
}

fn estimator_moments() -> Check {
    let p = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
    let field = Reference::Quadratic { p: p.clone() };
    let z = [0.7, -0.4];
    let (mu, reps, batch) = (0.1, 4000, 10);
    let (_, grad) = szo::smoothed_reference(&field, &z, mu);
    let norm_p = p.symmetric_eigenvalues().amax();
    let spec =
        OracleSpec::new(0.01, mu, batch).with_constants(norm_p * (DVector::from_row_slice(&z).norm() + 1.0), norm_p, 2);
    let mut sum = [0.0; 2];
    let mut sq = [0.0; 2];
    let mut err_sq = 0.0;
    for r in 0..reps {
        let g = szo::estimate(&field, &z, &spec, EstimatorKey::new(3, 0, r))
            .expect("finite quadratic")
            .value;
        for k in 0..2 {
            let d = g[k] - grad[k];
            sum[k] += d;
            sq[k] += d * d;
            err_sq += d * d;
        }
    }
    let n = reps as f64;
    let mut z_max: f64 = 0.0;
    for k in 0..2 {
        let mean = sum[k] / n;
        let se = ((sq[k] / n - mean * mean) / n).sqrt();
        z_max = z_max.max(mean.abs() / se);
    }
    let mse = err_sq / n;
    let bound = szo::variance_bound(&spec);
    Check {
        name: "estimator moments",
        passed: z_max <= 4.0 && mse <= bound,
        detail: format!("bias {z_max:.2} s.e., E‖Ḡ−∇ψ‖² {mse:.3} ≤ {bound:.3}"),
    }
}

fn form_equivalence() -> Check {
    let topo = Topology::from_edges(4, 1, &[(0, 1), (0, 3), (2, 3)]).expect("figure graph");
    let problem = Problem::make_sigmoid_log(4, 1);
    let cfg = |mode| MnetConfig {
        schedule: PenaltySchedule::Constant(5.0),
        oracle: OracleSpec::new(0.01, 0.05, 50),
        horizon: 50,
        stride: 1,
        mode,
        potential: None,
        seed: 9,
    };
    let (cm, cd) = (cfg(StepMode::Matrix), cfg(StepMode::Distributed));
    let mut a = MnetState::initialize(&topo, StepMode::Matrix, 9);
    let mut b = MnetState::initialize(&topo, StepMode::Distributed, 9);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        if let Err(e) = zone_m::step(&mut a, &problem, &topo, &cm).and(zone_m::step(&mut b, &problem, &topo, &cd)) {
            return Check {
                name: "form equivalence",
                passed: false,
                detail: e.to_string(),
            };
        }
        worst = worst.max((&a.z - &b.z).amax());
    }
    Check {
        name: "form equivalence",
        passed: worst <= 1e-10,
        detail: format!("max divergence {worst:.1e} over 50 rounds"),
    }
}

fn prox_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for k in 0..12 {
        let (dim, step) = if k % 2 == 0 { (2, 0.01) } else { (3, 0.02) };
        let radius = (rng.random_range(10..60) as f64) * step;
        let u: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect();
        let fast = prox::project_l1_ball(&u, radius);
        let grid = prox::brute_force_project(radius, &u, step).expect("dimension ≤ 3");
        let gap = fast.iter().zip(&grid).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(gap / step);
    }
    Check {
        name: "prox oracle",
        passed: worst <= 2.0,
        detail: format!("max deviation {worst:.2} grid steps"),
    }
}

fn dual_compact_form(fault: Option<Fault>) -> Check {
    let problem = Problem::make_sparse_quadratic(5, 6, 2.0, 4);
    let scale = if fault == Some(Fault::DualStepScale) { 1.1 } else { 1.0 };
    let run = || -> crate::Result<(f64, f64)> {
        let cfg = SnetConfig::theoretical(&problem, OracleSpec::new(0.01, 0.05, 10), 50, 6)?;
        let mut state = zone_s::SnetState::initialize(&problem, zone_s::initial_point(&problem, 6), &cfg)?;
        let (mut dual, mut direction): (f64, f64) = (0.0, 0.0);
        for _ in 0..50 {
            let report = zone_s::step_with_dual_scale(&mut state, &problem, &cfg, scale)?;
            dual = dual.max(zone_s::dual_invariant_residual(&state));
            direction = direction.max(report.direction_residual);
        }
        Ok((dual, direction))
    };
    match run() {
        Ok((dual, direction)) => Check {
            name: "dual compact form",
            passed: dual <= 1e-12 && direction <= 1e-12,
            detail: format!("dual residual {dual:.1e}, direction residual {direction:.1e}"),
        },
        Err(e) => Check {
            name: "dual compact form",
            passed: false,
            detail: e.to_string(),
        },
    }
}
