//! Benchmark objectives with oracle access and analytic gradients.
//!
//! Analytic gradients exist for measurement only. The algorithms see the
//! locals exclusively through [`crate::szo::estimate`].

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::prox::ProxKind;
use crate::streams::{Purpose, StreamKey};
use crate::szo::ScalarField;
use crate::Stacked;

/// Half-width of the interval on which sigmoid-log constants are computed.
pub const SIGMOID_LOG_REGION: f64 = 10.0;
const SIGMOID_LOG_GRID_STEP: f64 = 1e-3;
/// Safety factor applied to the grid maximum of |f''|.
const SMOOTHNESS_MARGIN: f64 = 1.2;
/// Default δ for the lower-boundedness condition on `g + δ/2 ‖Az‖²`.
pub const DEFAULT_DELTA: f64 = 1e-3;

/// One agent's smooth objective.
#[derive(Clone, Debug, PartialEq)]
pub enum LocalObjective {
    /// `a·sig(z) + b·log(1 + z²)` on a scalar.
    SigmoidLog { a: f64, b: f64 },
    /// `xᵀΓx − γᵀx` with symmetric, possibly indefinite `Γ`.
    Quadratic {
        curvature: DMatrix<f64>,
        linear: DVector<f64>,
    },
}

/// Dot product with four independent accumulators.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl LocalObjective {
    pub fn dim(&self) -> usize {
        match self {
            LocalObjective::SigmoidLog { .. } => 1,
            LocalObjective::Quadratic { linear, .. } => linear.len(),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            LocalObjective::SigmoidLog { a, b } => {
                let z = x[0];
                a * sigmoid(z) + b * (1.0 + z * z).ln()
            }
            LocalObjective::Quadratic { curvature, linear } => {
                let m = linear.len();
                let quad: f64 = curvature
                    .as_slice()
                    .chunks_exact(m)
                    .zip(x)
                    .map(|(col, xj)| dot(col, x) * xj)
                    .sum();
                quad - dot(linear.as_slice(), x)
            }
        }
    }

    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            LocalObjective::SigmoidLog { a, b } => {
                let z = x[0];
                let s = sigmoid(z);
                out[0] = a * s * (1.0 - s) + 2.0 * b * z / (1.0 + z * z);
            }
            LocalObjective::Quadratic { curvature, linear } => {
                let m = linear.len();
                for (i, o) in out.iter_mut().enumerate().take(m) {
                    *o = -linear[i];
                }
                for (j, &xj) in x.iter().enumerate().take(m) {
                    let xj = 2.0 * xj;
                    let col = curvature.column(j);
                    for i in 0..m {
                        out[i] += col[i] * xj;
                    }
                }
            }
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.gradient_into(x, &mut out);
        out
    }
}

impl ScalarField for LocalObjective {
    fn dim(&self) -> usize {
        LocalObjective::dim(self)
    }

    fn value(&self, z: &[f64]) -> f64 {
        LocalObjective::value(self, z)
    }
}

/// Nonsmooth part `h` held by a star network's controller.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Nonsmooth {
    None,
    /// Indicator of `{x : ‖x‖₁ ≤ radius}`.
    L1Ball {
        radius: f64,
    },
}

impl Nonsmooth {
    pub fn prox_kind(&self) -> ProxKind {
        match *self {
            Nonsmooth::None => ProxKind::Identity,
            Nonsmooth::L1Ball { radius } => ProxKind::L1Ball { radius },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemKind {
    SigmoidLog,
    SparseQuadratic,
}

/// `N` local objectives plus the constants the theory needs.
#[derive(Clone, Debug)]
pub struct Problem {
    pub kind: ProblemKind,
    pub n_agents: usize,
    pub dim: usize,
    pub locals: Vec<LocalObjective>,
    /// `K_i`: bound on `‖∇f_i‖` over the evaluation region.
    pub grad_bounds: Vec<f64>,
    /// `L_i`: Lipschitz constant of `∇f_i` over the evaluation region.
    pub smoothness: Vec<f64>,
    pub nonsmooth: Nonsmooth,
    /// Constant that makes the sum nonnegative on the evaluation region.
    pub lower_bound_shift: f64,
    /// δ of the condition `g(z) + δ/2 ‖Az‖² ≥ 0`.
    pub delta: f64,
}

impl Problem {
    /// Scalar consensus problem with `a_i, b_i ~ N(0, 1)`.
    pub fn make_sigmoid_log(n_agents: usize, seed: u64) -> Self {
        let locals: Vec<LocalObjective> = (0..n_agents)
            .map(|i| {
                let mut rng = StreamKey::new(seed, i, 0, Purpose::Coefficients).rng();
                LocalObjective::SigmoidLog {
                    a: rng.sample(StandardNormal),
                    b: rng.sample(StandardNormal),
                }
            })
            .collect();
        Self::sigmoid_log_from(locals)
    }

    /// Sigmoid-log problem from explicit coefficient pairs.
    pub fn sigmoid_log_from_coefficients(coefficients: &[(f64, f64)]) -> Self {
        Self::sigmoid_log_from(
            coefficients
                .iter()
                .map(|&(a, b)| LocalObjective::SigmoidLog { a, b })
                .collect(),
        )
    }

    fn sigmoid_log_from(locals: Vec<LocalObjective>) -> Self {
        let steps = (2.0 * SIGMOID_LOG_REGION / SIGMOID_LOG_GRID_STEP).round() as usize;
        let grid = (0..=steps).map(|k| -SIGMOID_LOG_REGION + k as f64 * SIGMOID_LOG_GRID_STEP);
        let grid: Vec<f64> = grid.collect();
        let mut grad_bounds = Vec::with_capacity(locals.len());
        let mut smoothness = Vec::with_capacity(locals.len());
        let mut shift = 0.0;
        for local in &locals {
            let LocalObjective::SigmoidLog { a, b } = *local else {
                unreachable!()
            };
            grad_bounds.push(a.abs() / 4.0 + b.abs());
            let mut max_curv: f64 = 0.0;
            let mut min_val = f64::INFINITY;
            for &z in &grid {
                let s = sigmoid(z);
                let z2 = z * z;
                let curv = a * s * (1.0 - s) * (1.0 - 2.0 * s) + 2.0 * b * (1.0 - z2) / ((1.0 + z2) * (1.0 + z2));
                max_curv = max_curv.max(curv.abs());
                min_val = min_val.min(local.value(&[z]));
            }
            smoothness.push(SMOOTHNESS_MARGIN * max_curv);
            shift -= min_val;
        }
        Self {
            kind: ProblemKind::SigmoidLog,
            n_agents: locals.len(),
            dim: 1,
            locals,
            grad_bounds,
            smoothness,
            nonsmooth: Nonsmooth::None,
            lower_bound_shift: shift,
            delta: DEFAULT_DELTA,
        }
    }

    /// `f_i(x) = xᵀΓ_i x − γ_iᵀx` over the ℓ1 ball of radius `ell`.
    ///
    /// `Γ_i = (G + Gᵀ)/2` with `G_ab ~ N(0, 1)/√M`, hence indefinite;
    /// `γ_i ~ N(0, I)`.
    pub fn make_sparse_quadratic(n_agents: usize, dim_m: usize, ell: f64, seed: u64) -> Self {
        let scale = 1.0 / (dim_m as f64).sqrt();
        let locals = (0..n_agents)
            .map(|i| {
                let mut rng = StreamKey::new(seed, i, 0, Purpose::Coefficients).rng();
                let g = DMatrix::from_fn(dim_m, dim_m, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
                let curvature = (&g + g.transpose()) * 0.5;
                let linear = DVector::from_fn(dim_m, |_, _| rng.sample(StandardNormal));
                LocalObjective::Quadratic { curvature, linear }
            })
            .collect();
        Self::quadratic_from(locals, ell)
    }

    /// Quadratic locals over an ℓ1 ball, constants derived from `Γ_i`, `γ_i`.
    pub fn quadratic_from(locals: Vec<LocalObjective>, ell: f64) -> Self {
        let mut grad_bounds = Vec::with_capacity(locals.len());
        let mut smoothness = Vec::with_capacity(locals.len());
        let mut shift = 0.0;
        let dim = locals.first().map_or(0, LocalObjective::dim);
        for local in &locals {
            let LocalObjective::Quadratic { curvature, linear } = local else {
                unreachable!()
            };
            let norm = SymmetricEigen::new(curvature.clone()).eigenvalues.amax();
            smoothness.push(2.0 * norm);
            grad_bounds.push(2.0 * norm * ell + linear.norm());
            shift += norm * ell * ell + linear.amax() * ell;
        }
        Self {
            kind: ProblemKind::SparseQuadratic,
            n_agents: locals.len(),
            dim,
            locals,
            grad_bounds,
            smoothness,
            nonsmooth: Nonsmooth::L1Ball { radius: ell },
            lower_bound_shift: shift,
            delta: DEFAULT_DELTA,
        }
    }

    /// `Σ L_i`, used as the smoothness constant of the sum.
    pub fn total_smoothness(&self) -> f64 {
        self.smoothness.iter().sum()
    }

    /// `Σ_i f_i(z_i)` for an agent-stacked iterate.
    pub fn stacked_value(&self, z: &Stacked) -> f64 {
        let mut row = vec![0.0; self.dim];
        (0..self.n_agents)
            .map(|i| {
                copy_row(z, i, &mut row);
                self.locals[i].value(&row)
            })
            .sum()
    }

    /// Row `i` is `∇f_i(z_i)`.
    pub fn stacked_gradient(&self, z: &Stacked) -> Stacked {
        let mut out = Stacked::zeros(self.n_agents, self.dim);
        let mut row = vec![0.0; self.dim];
        let mut grad = vec![0.0; self.dim];
        for i in 0..self.n_agents {
            copy_row(z, i, &mut row);
            self.locals[i].gradient_into(&row, &mut grad);
            for m in 0..self.dim {
                out[(i, m)] = grad[m];
            }
        }
        out
    }

    /// `Σ_i f_i(x)` at a shared point.
    pub fn sum_value(&self, x: &[f64]) -> f64 {
        self.locals.iter().map(|f| f.value(x)).sum()
    }

    /// `Σ_i ∇f_i(x)` at a shared point.
    pub fn sum_gradient(&self, x: &[f64]) -> DVector<f64> {
        let mut total = DVector::zeros(self.dim);
        let mut grad = vec![0.0; self.dim];
        for f in &self.locals {
            f.gradient_into(x, &mut grad);
            for m in 0..self.dim {
                total[m] += grad[m];
            }
        }
        total
    }
}

/// Copy row `i` of a stacked iterate into `out`.
pub fn copy_row(z: &Stacked, i: usize, out: &mut [f64]) {
    for (m, o) in out.iter_mut().enumerate() {
        *o = z[(i, m)];
    }
}
