//! Stochastic zeroth-order oracle and Gaussian-smoothing gradient estimates.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::problems::LocalObjective;
use crate::streams::{Purpose, StreamKey};
use crate::Stacked;

/// A deterministic scalar function that the oracle perturbs.
pub trait ScalarField {
    fn dim(&self) -> usize;
    fn value(&self, z: &[f64]) -> f64;
}

/// Adapter turning a closure into a [`ScalarField`].
pub struct FnField<F> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> f64> ScalarField for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, z: &[f64]) -> f64 {
        (self.f)(z)
    }
}

/// How the two oracle calls of one estimator sample draw their noise.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NoiseCoupling {
    /// Both calls see the same draw. With additive noise it cancels exactly.
    Shared,
    /// Each call draws fresh noise.
    #[default]
    Independent,
}

/// Oracle parameters, plus the constants entering the variance bound.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleSpec {
    /// Standard deviation of the additive Gaussian value noise.
    pub noise_std: f64,
    /// Smoothing radius μ.
    pub smoothing: f64,
    /// Mini-batch size J.
    pub batch: usize,
    pub coupling: NoiseCoupling,
    /// Gradient bound K.
    pub grad_bound: f64,
    /// Smoothness constant L̂.
    pub smoothness: f64,
    /// Ambient dimension Q of the smoothed function.
    pub dim: usize,
}

impl OracleSpec {
    /// Sampling parameters only; the variance-bound constants are zero.
    pub fn new(noise_std: f64, smoothing: f64, batch: usize) -> Self {
        Self {
            noise_std,
            smoothing,
            batch,
            coupling: NoiseCoupling::default(),
            grad_bound: 0.0,
            smoothness: 0.0,
            dim: 0,
        }
    }

    pub fn with_coupling(mut self, coupling: NoiseCoupling) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn with_constants(mut self, grad_bound: f64, smoothness: f64, dim: usize) -> Self {
        self.grad_bound = grad_bound;
        self.smoothness = smoothness;
        self.dim = dim;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.smoothing.is_nan() || self.smoothing <= 0.0 {
            return Err(Error::Validation(format!(
                "smoothing must be positive, got {}",
                self.smoothing
            )));
        }
        if self.batch == 0 {
            return Err(Error::Validation("batch size must be at least 1".into()));
        }
        if self.noise_std.is_nan() || self.noise_std < 0.0 {
            return Err(Error::Validation(format!(
                "noise std must be >= 0, got {}",
                self.noise_std
            )));
        }
        Ok(())
    }

    /// `σ̃² = 2Q[K² + σ² + μ²L̂²Q]`.
    pub fn sigma_tilde_sq(&self) -> f64 {
        let q = self.dim as f64;
        let mu = self.smoothing;
        let l = self.smoothness;
        2.0 * q * (self.grad_bound.powi(2) + self.noise_std.powi(2) + mu * mu * l * l * q)
    }
}

/// Upper bound `σ̃²/J` on `E‖Ḡ − ∇ψ_μ‖²`.
pub fn variance_bound(spec: &OracleSpec) -> f64 {
    spec.sigma_tilde_sq() / spec.batch as f64
}

/// One mini-batch gradient estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorSample {
    pub value: Vec<f64>,
    /// Oracle calls consumed, always `2J`.
    pub evals: u64,
}

/// Identifies the random streams of one estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EstimatorKey {
    pub seed: u64,
    pub agent: usize,
    pub iter: usize,
}

impl EstimatorKey {
    pub fn new(seed: u64, agent: usize, iter: usize) -> Self {
        Self { seed, agent, iter }
    }

    fn stream(&self, purpose: Purpose) -> StreamKey {
        StreamKey::new(self.seed, self.agent, self.iter, purpose)
    }
}

/// A single noisy oracle value `f(z) + ξ`, `ξ ~ N(0, σ²)`.
pub fn evaluate<F, R>(f: &F, z: &[f64], noise_std: f64, rng: &mut R) -> Result<f64>
where
    F: ScalarField + ?Sized,
    R: Rng + ?Sized,
{
    let v = f.value(z);
    if !v.is_finite() {
        return Err(Error::DomainError);
    }
    let xi: f64 = rng.sample(StandardNormal);
    Ok(v + noise_std * xi)
}

/// Mini-batch estimate `Ḡ = (1/J) Σ_j [H(z + μφ_j) − H(z)]/μ · φ_j`.
///
/// Directions come from the `Direction` stream of `key` and noise from the
/// `Noise` stream, so the directions do not depend on σ or on the coupling.
/// The difference of the two noisy values is formed as
/// `(f(z+μφ) − f(z)) + (ξ₁ − ξ₀)`; under shared coupling the noise part is an
/// exact zero.
pub fn estimate<F>(f: &F, z: &[f64], spec: &OracleSpec, key: EstimatorKey) -> Result<EstimatorSample>
where
    F: ScalarField + ?Sized,
{
    let dim = z.len();
    let mu = spec.smoothing;
    let mut directions = key.stream(Purpose::Direction).rng();
    let mut noise = key.stream(Purpose::Noise).rng();

    let base = f.value(z);
    if !base.is_finite() {
        return Err(Error::DomainError);
    }
    let mut phi = vec![0.0; dim];
    let mut probe = vec![0.0; dim];
    let mut acc = vec![0.0; dim];
    for _ in 0..spec.batch {
        for m in 0..dim {
            phi[m] = directions.sample(StandardNormal);
            probe[m] = z[m] + mu * phi[m];
        }
        let shifted = f.value(&probe);
        if !shifted.is_finite() {
            return Err(Error::DomainError);
        }
        let (xi_shifted, xi_base): (f64, f64) = match spec.coupling {
            NoiseCoupling::Shared => {
                let xi = spec.noise_std * noise.sample::<f64, _>(StandardNormal);
                (xi, xi)
            }
            NoiseCoupling::Independent => (
                spec.noise_std * noise.sample::<f64, _>(StandardNormal),
                spec.noise_std * noise.sample::<f64, _>(StandardNormal),
            ),
        };
        let weight = ((shifted - base) + (xi_shifted - xi_base)) / mu;
        for m in 0..dim {
            acc[m] += weight * phi[m];
        }
    }
    let inv_j = 1.0 / spec.batch as f64;
    acc.iter_mut().for_each(|a| *a *= inv_j);
    Ok(EstimatorSample {
        value: acc,
        evals: 2 * spec.batch as u64,
    })
}

/// Estimates for every row of an agent-stacked iterate, row `i` using
/// `fields[i]` and the streams of agent `i` at `iter`.
///
/// Returns the stacked estimates and the total oracle calls.
pub fn estimate_rows<F>(fields: &[F], z: &Stacked, spec: &OracleSpec, seed: u64, iter: usize) -> Result<(Stacked, u64)>
where
    F: ScalarField + Sync,
{
    let samples: Vec<EstimatorSample> = (0..z.nrows())
        .into_par_iter()
        .map(|i| {
            let row: Vec<f64> = z.row(i).iter().copied().collect();
            estimate(&fields[i], &row, spec, EstimatorKey::new(seed, i, iter))
        })
        .collect::<Result<_>>()?;
    let mut out = Stacked::zeros(z.nrows(), z.ncols());
    let mut calls = 0;
    for (i, s) in samples.iter().enumerate() {
        out.row_mut(i).copy_from_slice(&s.value);
        calls += s.evals;
    }
    Ok((out, calls))
}

/// Function families whose Gaussian smoothing has a closed form.
#[derive(Clone, Debug, PartialEq)]
pub enum Reference {
    /// `cᵀz`.
    Linear { c: DVector<f64> },
    /// `½ zᵀPz` with symmetric `P`.
    Quadratic { p: DMatrix<f64> },
}

impl Reference {
    pub fn value(&self, z: &[f64]) -> f64 {
        let z = DVector::from_column_slice(z);
        match self {
            Reference::Linear { c } => c.dot(&z),
            Reference::Quadratic { p } => 0.5 * z.dot(&(p * &z)),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Reference::Linear { c } => c.len(),
            Reference::Quadratic { p } => p.nrows(),
        }
    }
}

impl ScalarField for Reference {
    fn dim(&self) -> usize {
        Reference::dim(self)
    }

    fn value(&self, z: &[f64]) -> f64 {
        Reference::value(self, z)
    }
}

impl TryFrom<&LocalObjective> for Reference {
    type Error = Error;

    /// `xᵀΓx − γᵀx` is `½xᵀ(2Γ)x` plus a linear part, which smoothing leaves
    /// alone; only pure linear or pure quadratic locals map to a reference.
    fn try_from(obj: &LocalObjective) -> Result<Self> {
        match obj {
            LocalObjective::Quadratic { curvature, linear } if linear.iter().all(|&g| g == 0.0) => {
                Ok(Reference::Quadratic { p: curvature * 2.0 })
            }
            LocalObjective::Quadratic { curvature, linear } if curvature.iter().all(|&g| g == 0.0) => {
                Ok(Reference::Linear { c: -linear })
            }
            LocalObjective::Quadratic { .. } => Err(Error::UnsupportedKind("mixed quadratic")),
            LocalObjective::SigmoidLog { .. } => Err(Error::UnsupportedKind("sigmoid-log")),
        }
    }
}

/// Exact `(ψ_μ(z), ∇ψ_μ(z))` for a reference family.
///
/// Affine functions are unchanged by smoothing; a quadratic `½zᵀPz` gains the
/// constant `(μ²/2) tr P` and keeps its gradient `Pz`.
pub fn smoothed_reference(kind: &Reference, z: &[f64], mu: f64) -> (f64, Vec<f64>) {
    let zv = DVector::from_column_slice(z);
    match kind {
        Reference::Linear { c } => (c.dot(&zv), c.iter().copied().collect()),
        Reference::Quadratic { p } => {
            let grad = p * &zv;
            (
                0.5 * zv.dot(&grad) + 0.5 * mu * mu * p.trace(),
                grad.iter().copied().collect(),
            )
        }
    }
}
