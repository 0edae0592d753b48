//! Stationarity measures, evaluated with analytic gradients.
//!
//! None of these touch the stochastic oracle.

use std::io::Write;

use nalgebra::DVector;

use crate::error::Result;
use crate::graph::Topology;
use crate::problems::Problem;
use crate::prox;
use crate::Stacked;

/// Column order of trace CSV files.
pub const CSV_HEADER: [&str; 9] = [
    "trial",
    "iter",
    "opt_gap",
    "cons_vio",
    "phi",
    "psi",
    "potential",
    "oracle_calls",
    "wall_seconds",
];

/// One recorded iteration of one trial. Metrics that do not apply to the
/// algorithm are `None` and written as empty CSV fields.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TraceRecord {
    pub trial: usize,
    pub iter: usize,
    pub opt_gap: Option<f64>,
    pub cons_vio: Option<f64>,
    pub phi: Option<f64>,
    pub psi: Option<f64>,
    pub potential: Option<f64>,
    /// Cumulative oracle calls up to this iteration.
    pub oracle_calls: u64,
    pub wall_seconds: Option<f64>,
}

fn field(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

impl TraceRecord {
    pub fn csv_fields(&self) -> [String; 9] {
        [
            self.trial.to_string(),
            self.iter.to_string(),
            field(self.opt_gap),
            field(self.cons_vio),
            field(self.phi),
            field(self.psi),
            field(self.potential),
            self.oracle_calls.to_string(),
            field(self.wall_seconds),
        ]
    }

    /// The metric columns in header order.
    pub fn metrics(&self) -> [Option<f64>; 5] {
        [self.opt_gap, self.cons_vio, self.phi, self.psi, self.potential]
    }
}

pub fn write_csv<W: Write>(records: &[TraceRecord], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(CSV_HEADER)?;
    for r in records {
        writer.write_record(r.csv_fields())?;
    }
    writer.flush()?;
    Ok(())
}

fn frobenius_sq(m: &Stacked) -> f64 {
    m.iter().map(|v| v * v).sum()
}

/// `(‖Σ_i ∇f_i(z_i)‖² + ‖Az‖², ‖Az‖²)`.
pub fn mnet_gap(z: &Stacked, topo: &Topology, problem: &Problem) -> (f64, f64) {
    let grads = problem.stacked_gradient(z);
    let summed: f64 = grads.row_sum().iter().map(|v| v * v).sum();
    let cons = frobenius_sq(&topo.incidence_apply(z));
    (summed + cons, cons)
}

/// `‖∇g(z) + Aᵀλ + ρAᵀAz‖² + ‖Az‖²`.
pub fn phi_gap(z: &Stacked, lambda: &Stacked, rho: f64, topo: &Topology, problem: &Problem) -> f64 {
    let az = topo.incidence_apply(z);
    let lagrangian_grad = problem.stacked_gradient(z)
        + topo.incidence_transpose_apply(lambda)
        + topo.incidence_transpose_apply(&az) * rho;
    frobenius_sq(&lagrangian_grad) + frobenius_sq(&az)
}

/// `(1/β²)‖x − prox_h(x − β∇f(x))‖²` with `f = Σ f_i`.
pub fn psi_gap(x: &[f64], problem: &Problem, beta: f64) -> f64 {
    let grad = problem.sum_gradient(x);
    let trial: Vec<f64> = x.iter().zip(grad.iter()).map(|(xi, gi)| xi - beta * gi).collect();
    let projected = prox::apply(problem.nonsmooth.prox_kind(), &trial);
    let diff: f64 = x.iter().zip(&projected).map(|(a, b)| (a - b).powi(2)).sum();
    diff / (beta * beta)
}

/// Column-wise mean of a stacked iterate, as a vector.
pub fn consensus_mean(z: &Stacked) -> DVector<f64> {
    z.row_mean().transpose()
}
