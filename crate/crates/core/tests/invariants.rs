use nalgebra::DMatrix;
use proptest::prelude::*;

use zoneopt::baselines::metropolis_weights;
use zoneopt::graph::{GraphOperators, Topology};
use zoneopt::problems::Problem;
use zoneopt::szo::OracleSpec;
use zoneopt::zone_m::{self, MnetConfig, PenaltySchedule, StepMode};
use zoneopt::zone_s::{self, SnetConfig, SnetSchedule, SnetState};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn laplacians_and_mixing_agree(n in 5usize..30, seed in any::<u64>()) {
        let topo = Topology::random_geometric(n, 1, 0.6, seed).unwrap();
        let ops = GraphOperators::derive(&topo);
        prop_assert_eq!(&ops.signless_laplacian + &ops.signed_laplacian, &ops.degree * 2.0);
        let inv_degree = DMatrix::from_diagonal(&ops.degree.diagonal().map(|d| 1.0 / d));
        let half = &inv_degree * &ops.signless_laplacian * 0.5;
        let average = (DMatrix::identity(n, n) + &ops.mixing) * 0.5;
        prop_assert!((half - average).amax() <= 1e-12);
        prop_assert!(ops.sigma_min > 0.0);
        prop_assert!(ops.norm_lplus <= 2.0 * *topo.degrees().iter().max().unwrap() as f64 + 1e-9);
    }

    #[test]
    fn metropolis_weights_are_doubly_stochastic(n in 3usize..25, seed in any::<u64>()) {
        let topo = Topology::random_geometric(n, 1, 0.6, seed).unwrap();
        let w = metropolis_weights(&topo);
        prop_assert!((&w - w.transpose()).amax() == 0.0);
        prop_assert!(w.column_sum().iter().all(|s| (s - 1.0).abs() <= 1e-12));
        prop_assert!(w.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn mesh_forms_agree(seed in any::<u64>(), rho in 2.0f64..50.0, increasing in any::<bool>()) {
        let topo = Topology::random_geometric(6, 1, 0.6, seed).unwrap();
        let problem = Problem::make_sigmoid_log(6, seed ^ 1);
        let schedule = if increasing { PenaltySchedule::Increasing } else { PenaltySchedule::Constant(rho) };
        let cfg = |mode| MnetConfig {
            schedule,
            oracle: OracleSpec::new(0.01, 0.05, 5),
            horizon: 30,
            stride: 30,
            mode,
            potential: None,
            seed,
        };
        let a = zone_m::run(&problem, &topo, &cfg(StepMode::Matrix)).unwrap();
        let b = zone_m::run(&problem, &topo, &cfg(StepMode::Distributed)).unwrap();
        prop_assert!((&a.final_state.z - &b.final_state.z).amax() <= 1e-10);
        prop_assert_eq!(a.final_state.oracle_calls, b.final_state.oracle_calls);
    }

    #[test]
    fn star_dual_stays_compact(seed in any::<u64>(), n in 1usize..6, increasing in any::<bool>()) {
        let problem = Problem::make_sparse_quadratic(n, 4, 2.0, seed);
        let mut cfg = SnetConfig::theoretical(&problem, OracleSpec::new(0.01, 0.05, 3), 40, seed).unwrap();
        if increasing {
            cfg.schedule = SnetSchedule::Increasing;
        }
        let mut state = SnetState::initialize(&problem, zone_s::initial_point(&problem, seed), &cfg).unwrap();
        for _ in 0..cfg.horizon {
            let report = zone_s::step(&mut state, &problem, &cfg).unwrap();
            prop_assert!(zone_s::dual_invariant_residual(&state) <= 1e-12);
            prop_assert!(report.direction_residual <= 1e-12);
            prop_assert!(state.x.iter().map(|v| v.abs()).sum::<f64>() <= 2.0 + 1e-9);
        }
    }
}
