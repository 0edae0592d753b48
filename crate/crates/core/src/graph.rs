//! Network topologies and the matrix operators derived from them.
//!
//! Nodes are 0-based in the API. The plain-text edge-list format is 1-based:
//! the first line holds `N M`, every further line one edge `i j`.
//!
//! Extended operators (`Ã ⊗ I_M` and friends) are never stored. An iterate is
//! kept as an `N × M` matrix whose row `i` is agent `i`'s copy, and the
//! extended operator acts on it as the plain `N × N` (or `E × N`) matrix does.

use std::collections::VecDeque;
use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use crate::error::{Error, Result};
use crate::streams::{Purpose, StreamKey};
use crate::Stacked;

/// Maximum number of resamples for a disconnected random geometric graph.
pub const MAX_RESAMPLES: usize = 1000;

/// An undirected, connected, unweighted network.
#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    n_agents: usize,
    dim_m: usize,
    /// Sorted `(i, j)` pairs with `i < j`.
    edges: Vec<(usize, usize)>,
    degrees: Vec<usize>,
    neighbors: Vec<Vec<usize>>,
    resamples: usize,
}

impl Topology {
    /// Build a topology from an edge list. Pairs may be given in either
    /// orientation and may repeat; they are canonicalized to `i < j`.
    pub fn from_edges(n_agents: usize, dim_m: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n_agents < 2 {
            return Err(Error::Validation("a mesh network needs at least two agents".into()));
        }
        if dim_m == 0 {
            return Err(Error::Validation("per-agent dimension must be positive".into()));
        }
        let mut canon = Vec::with_capacity(edges.len());
        for &(i, j) in edges {
            if i == j {
                return Err(Error::InvalidEdge(i, j, "self-loop"));
            }
            if i >= n_agents || j >= n_agents {
                return Err(Error::InvalidEdge(i, j, "node index out of range"));
            }
            canon.push((i.min(j), i.max(j)));
        }
        canon.sort_unstable();
        canon.dedup();

        let mut neighbors = vec![Vec::new(); n_agents];
        for &(i, j) in &canon {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        let degrees: Vec<usize> = neighbors.iter().map(Vec::len).collect();

        let reachable = reachable_from_first(&neighbors);
        if reachable < n_agents {
            return Err(Error::DisconnectedGraph { reachable, n_agents });
        }

        Ok(Self {
            n_agents,
            dim_m,
            edges: canon,
            degrees,
            neighbors,
            resamples: 0,
        })
    }

    /// Sample nodes uniformly on the unit square and join pairs closer than
    /// `radius`. Disconnected samples are redrawn from the next sub-stream.
    pub fn random_geometric(n_agents: usize, dim_m: usize, radius: f64, seed: u64) -> Result<Self> {
        if radius.is_nan() || radius <= 0.0 {
            return Err(Error::Validation(format!("radius must be positive, got {radius}")));
        }
        for attempt in 0..=MAX_RESAMPLES {
            let mut rng = StreamKey::new(seed, 0, attempt, Purpose::Geometry).rng();
            let points: Vec<(f64, f64)> = (0..n_agents)
                .map(|_| (rng.random::<f64>(), rng.random::<f64>()))
                .collect();
            let mut edges = Vec::new();
            for i in 0..n_agents {
                for j in (i + 1)..n_agents {
                    let (dx, dy) = (points[i].0 - points[j].0, points[i].1 - points[j].1);
                    if (dx * dx + dy * dy).sqrt() < radius {
                        edges.push((i, j));
                    }
                }
            }
            match Self::from_edges(n_agents, dim_m, &edges) {
                Ok(mut topo) => {
                    topo.resamples = attempt;
                    return Ok(topo);
                }
                Err(Error::DisconnectedGraph { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(Error::ConnectivityRetryExhausted(MAX_RESAMPLES))
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn dim_m(&self) -> usize {
        self.dim_m
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// Number of disconnected samples discarded by [`Topology::random_geometric`].
    pub fn resamples(&self) -> usize {
        self.resamples
    }

    /// Same graph with a different per-agent dimension.
    pub fn with_dim(&self, dim_m: usize) -> Self {
        Self { dim_m, ..self.clone() }
    }

    /// `A z`: row `k` is `z_i - z_j` for edge `k = (i, j)`.
    pub fn incidence_apply(&self, z: &Stacked) -> Stacked {
        let mut out = Stacked::zeros(self.edges.len(), z.ncols());
        for (k, &(i, j)) in self.edges.iter().enumerate() {
            for m in 0..z.ncols() {
                out[(k, m)] = z[(i, m)] - z[(j, m)];
            }
        }
        out
    }

    /// `Aᵀ λ` for an edge-stacked `λ`.
    pub fn incidence_transpose_apply(&self, lambda: &Stacked) -> Stacked {
        let mut out = Stacked::zeros(self.n_agents, lambda.ncols());
        for (k, &(i, j)) in self.edges.iter().enumerate() {
            for m in 0..lambda.ncols() {
                out[(i, m)] += lambda[(k, m)];
                out[(j, m)] -= lambda[(k, m)];
            }
        }
        out
    }

    /// Row `i` is `Σ_{j ∈ N_i} z_j`.
    pub fn neighbor_sum(&self, z: &Stacked) -> Stacked {
        let mut out = Stacked::zeros(self.n_agents, z.ncols());
        for i in 0..self.n_agents {
            for &j in &self.neighbors[i] {
                for m in 0..z.ncols() {
                    out[(i, m)] += z[(j, m)];
                }
            }
        }
        out
    }

    /// Serialize as a 1-based edge list.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("{} {}\n", self.n_agents, self.dim_m);
        for &(i, j) in &self.edges {
            let _ = writeln!(s, "{} {}", i + 1, j + 1);
        }
        s
    }

    /// Parse the 1-based edge-list format written by [`Topology::to_edge_list`].
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (line, header) = lines.next().ok_or_else(|| Error::Parse {
            line: 1,
            field: "header".into(),
            message: "missing `N M` header".into(),
        })?;
        let [n, m] = parse_pair(header, line, "header")?;
        let mut edges = Vec::new();
        for (line, l) in lines {
            let [i, j] = parse_pair(l, line, "edge")?;
            if i == 0 || j == 0 {
                return Err(Error::Parse {
                    line,
                    field: "edge".into(),
                    message: "node indices are 1-based".into(),
                });
            }
            edges.push((i - 1, j - 1));
        }
        Self::from_edges(n, m, &edges)
    }
}

fn parse_pair(text: &str, line: usize, field: &str) -> Result<[usize; 2]> {
    let err = |message: String| Error::Parse {
        line,
        field: field.into(),
        message,
    };
    let parts: Vec<&str> = text.split_whitespace().collect();
    if parts.len() != 2 {
        return Err(err(format!("expected two integers, found `{text}`")));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|e| err(format!("`{s}`: {e}")));
    Ok([parse(parts[0])?, parse(parts[1])?])
}

fn reachable_from_first(neighbors: &[Vec<usize>]) -> usize {
    let mut seen = vec![false; neighbors.len()];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = queue.pop_front() {
        for &w in &neighbors[v] {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                queue.push_back(w);
            }
        }
    }
    count
}

/// Dense `N × N` operators of a topology and their spectral constants.
///
/// `sigma_min` is the smallest nonzero eigenvalue of `ÃᵀÃ` and `norm_lplus`
/// the spectral norm of the signless Laplacian. Both are unchanged by the
/// Kronecker extension with `I_M`, which only replicates eigenvalues.
#[derive(Clone, Debug)]
pub struct GraphOperators {
    /// `E × N` signed incidence, `+1` on the smaller endpoint.
    pub incidence: DMatrix<f64>,
    pub degree: DMatrix<f64>,
    /// `L⁻ = ÃᵀÃ`.
    pub signed_laplacian: DMatrix<f64>,
    /// `L⁺ = 2D − ÃᵀÃ`.
    pub signless_laplacian: DMatrix<f64>,
    /// `W = ½ D⁻¹ (L⁺ − L⁻)`, the neighbor-averaging matrix.
    pub mixing: DMatrix<f64>,
    pub sigma_min: f64,
    pub norm_lplus: f64,
}

impl GraphOperators {
    pub fn derive(topo: &Topology) -> Self {
        let n = topo.n_agents();
        let mut incidence = DMatrix::zeros(topo.n_edges(), n);
        for (k, &(i, j)) in topo.edges().iter().enumerate() {
            incidence[(k, i)] = 1.0;
            incidence[(k, j)] = -1.0;
        }
        let degree = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            n,
            topo.degrees().iter().map(|&d| d as f64),
        ));
        let signed_laplacian = incidence.transpose() * &incidence;
        let signless_laplacian = &degree * 2.0 - &signed_laplacian;
        let inv_degree = DMatrix::from_diagonal(&degree.diagonal().map(|d| 1.0 / d));
        let mixing = (&inv_degree * (&signless_laplacian - &signed_laplacian)) * 0.5;

        let lminus_eigs = SymmetricEigen::new(signed_laplacian.clone()).eigenvalues;
        let lplus_eigs = SymmetricEigen::new(signless_laplacian.clone()).eigenvalues;
        let scale = lminus_eigs.amax().max(1.0);
        let sigma_min = lminus_eigs
            .iter()
            .copied()
            .filter(|&v| v > 1e-9 * scale)
            .fold(f64::INFINITY, f64::min);
        let norm_lplus = lplus_eigs.amax();

        Self {
            incidence,
            degree,
            signed_laplacian,
            signless_laplacian,
            mixing,
            sigma_min,
            norm_lplus,
        }
    }
}

/// `mat ⊗ I_m`, materialized. Only meant for checks at small sizes.
pub fn kron_identity(mat: &DMatrix<f64>, m: usize) -> DMatrix<f64> {
    mat.kronecker(&DMatrix::identity(m, m))
}

/// Stack an `N × M` iterate into the `NM` vector `(z_1; …; z_N)`.
pub fn flatten(z: &Stacked) -> nalgebra::DVector<f64> {
    nalgebra::DVector::from_iterator(z.len(), z.transpose().iter().copied())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn path3() -> Topology {
        Topology::from_edges(3, 1, &[(0, 1), (1, 2)]).unwrap()
    }

    /// Direct `(ÃᵀÃ)_{ab} = Σ_k Ã_{ka} Ã_{kb}` from the edge list.
    fn laplacian_by_hand(topo: &Topology) -> DMatrix<f64> {
        let n = topo.n_agents();
        let mut rows = vec![vec![0.0; n]; topo.n_edges()];
        for (k, &(i, j)) in topo.edges().iter().enumerate() {
            rows[k][i] = 1.0;
            rows[k][j] = -1.0;
        }
        DMatrix::from_fn(n, n, |a, b| rows.iter().map(|r| r[a] * r[b]).sum())
    }

    #[test]
    fn figure_one_mesh_degrees_and_incidence() {
        let topo = Topology::from_edges(4, 1, &[(0, 1), (0, 3), (2, 3)]).unwrap();
        assert_eq!(topo.degrees(), &[2, 1, 1, 2]);
        let ops = GraphOperators::derive(&topo);
        let expected = DMatrix::from_row_slice(3, 4, &[1., -1., 0., 0., 1., 0., 0., -1., 0., 0., 1., -1.]);
        assert_eq!(ops.incidence, expected);
    }

    #[test]
    fn small_graph_degrees() {
        assert_eq!(Topology::from_edges(2, 1, &[(0, 1)]).unwrap().degrees(), &[1, 1]);
        let tri = Topology::from_edges(3, 1, &[(0, 1), (0, 2), (1, 2)]).unwrap();
        assert_eq!(tri.degrees(), &[2, 2, 2]);
    }

    #[test]
    fn edges_are_canonicalized() {
        let topo = Topology::from_edges(3, 1, &[(2, 1), (1, 0), (0, 1)]).unwrap();
        assert_eq!(topo.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(matches!(
            Topology::from_edges(3, 1, &[(1, 1)]),
            Err(Error::InvalidEdge(..))
        ));
        assert!(matches!(
            Topology::from_edges(3, 1, &[(0, 3)]),
            Err(Error::InvalidEdge(..))
        ));
        assert!(matches!(
            Topology::from_edges(4, 1, &[(0, 1), (2, 3)]),
            Err(Error::DisconnectedGraph {
                reachable: 2,
                n_agents: 4
            })
        ));
    }

    #[test]
    fn path_graph_operators() {
        let ops = GraphOperators::derive(&path3());
        let lminus = DMatrix::from_row_slice(3, 3, &[1., -1., 0., -1., 2., -1., 0., -1., 1.]);
        let lplus = DMatrix::from_row_slice(3, 3, &[1., 1., 0., 1., 2., 1., 0., 1., 1.]);
        let w = DMatrix::from_row_slice(3, 3, &[0., 1., 0., 0.5, 0., 0.5, 0., 1., 0.]);
        assert_eq!(ops.signed_laplacian, lminus);
        assert_eq!(ops.signed_laplacian, laplacian_by_hand(&path3()));
        assert_eq!(ops.signless_laplacian, lplus);
        assert_eq!(ops.mixing, w);
        // char. polynomial of L⁻ is -(λ)(λ-1)(λ-3)
        assert_abs_diff_eq!(ops.sigma_min, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(ops.norm_lplus, 3.0, epsilon = 1e-10);
    }

    #[test]
    fn triangle_is_complete_for_large_radius() {
        for seed in 0..5 {
            let topo = Topology::random_geometric(3, 1, 1.5, seed).unwrap();
            assert_eq!(topo.edges(), &[(0, 1), (0, 2), (1, 2)]);
            assert_eq!(topo.resamples(), 0);
        }
    }

    #[test]
    fn benchmark_scale_geometric_graphs_connect() {
        let a = Topology::random_geometric(20, 1, 0.6, 7).unwrap();
        let b = Topology::random_geometric(10, 1, 0.5, 1).unwrap();
        assert_eq!(a.n_agents(), 20);
        assert_eq!(b.n_agents(), 10);
        assert!(a.degrees().iter().all(|&d| d >= 1));
        assert_eq!(a, Topology::random_geometric(20, 1, 0.6, 7).unwrap());
    }

    #[test]
    fn tiny_radius_exhausts_retries() {
        assert!(matches!(
            Topology::random_geometric(6, 1, 1e-6, 0),
            Err(Error::ConnectivityRetryExhausted(MAX_RESAMPLES))
        ));
    }

    #[test]
    fn edge_list_text_format() {
        let topo = Topology::from_edges(4, 2, &[(0, 1), (0, 3), (2, 3)]).unwrap();
        let text = topo.to_edge_list();
        assert_eq!(text, "4 2\n1 2\n1 4\n3 4\n");
        assert_eq!(Topology::from_edge_list(&text).unwrap(), topo);
        let err = Topology::from_edge_list("4 2\n1 2\n1 x\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!(Topology::from_edge_list("3 1\n0 1\n").is_err());
    }

    #[test]
    fn blockwise_application_matches_kronecker() {
        let topo = Topology::from_edges(4, 3, &[(0, 1), (0, 3), (2, 3), (1, 2)]).unwrap();
        let ops = GraphOperators::derive(&topo);
        let z = Stacked::from_fn(4, 3, |i, m| (i * 3 + m) as f64 * 0.7 - 2.0);
        let a_ext = kron_identity(&ops.incidence, 3);
        let az = topo.incidence_apply(&z);
        let dense = &a_ext * flatten(&z);
        assert_eq!(flatten(&az), dense);
        let lambda = Stacked::from_fn(4, 3, |k, m| (k as f64) - (m as f64) * 0.3);
        assert_eq!(
            flatten(&topo.incidence_transpose_apply(&lambda)),
            a_ext.transpose() * flatten(&lambda)
        );
        assert_eq!(&ops.incidence * &z, az);
    }
}
