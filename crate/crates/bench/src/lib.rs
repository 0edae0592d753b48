//! Fixtures shared by the benchmarks.

use zoneopt::graph::Topology;
use zoneopt::problems::Problem;
use zoneopt::Stacked;

/// Connected geometric graph used by the mesh benchmarks.
pub fn mesh(n_agents: usize) -> Topology {
    Topology::random_geometric(n_agents, 1, 0.5, 1).expect("connected at this radius")
}

/// Sparse quadratic at the dimensions of the star-network experiments.
pub fn quadratic(n_agents: usize, dim: usize) -> Problem {
    Problem::make_sparse_quadratic(n_agents, dim, 5.0, 1)
}

/// Deterministic stacked iterate with entries in `[-1, 1]`.
pub fn iterate(rows: usize, cols: usize) -> Stacked {
    Stacked::from_fn(rows, cols, |i, j| ((i * 31 + j * 17) % 97) as f64 / 48.5 - 1.0)
}
