//! Experiment configuration files.
//!
//! A config is a TOML document with top-level run settings and three tables:
//!
//! ```toml
//! master_seed = 7
//! trials = 20            # ≥ 1
//! horizon = 1000         # T ≥ 1
//! batch = 1000           # J, default T
//! smoothing = 0.0316     # μ, default 1/√T
//! noise_std = 0.01
//! noise_coupling = "independent"   # or "shared"
//! stride = 10            # record every `stride` iterations
//! output = "runs/table1.csv"
//! record_wall_time = false
//!
//! [topology]
//! kind = "mnet"          # or "snet"
//! agents = 10
//! radius = 0.5           # mnet only
//! seed = 3               # optional; drawn per trial when absent
//!
//! [problem]
//! kind = "sigmoid_log"   # or "sparse_quadratic" with `dim` and `ell`
//! seed = 4               # optional; drawn per trial when absent
//!
//! [algorithm]
//! name = "zone_m"        # zone_m | zone_m_inc | zone_s | zone_s_inc | rgf | zo_gd | zo_sgd
//! penalty = "theoretical"   # or "manual"; zone_m only
//! rho = 40.0             # zone_m: must exceed ρ_min unless penalty = "manual"
//! mode = "distributed"   # zone_m: "matrix" also records Φ and the potential
//! delta = 0.001
//! step = 1e-4            # zo_gd / zo_sgd, default from the smoothness constants
//! oracle_budget = 2020000   # zo_gd / zo_sgd: overrides `horizon`
//! psi_beta = 6e-4        # step inside Ψ, default the star method's β
//! ```
//!
//! Every omitted field is resolved to a concrete value by [`load_config`];
//! [`ExperimentConfig::to_toml`] echoes the resolved document.

use std::ops::Range;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::error::{Error, Result};
use crate::graph::{GraphOperators, Topology};
use crate::problems::Problem;
use crate::szo::NoiseCoupling;
use crate::zone_m::{self, StepMode};

pub const DEFAULT_NOISE_STD: f64 = 0.01;
pub const DEFAULT_RADIUS: f64 = 0.5;
pub const DEFAULT_TRIALS: usize = 20;
pub const DEFAULT_QUADRATIC_DIM: usize = 100;
pub const DEFAULT_QUADRATIC_ELL: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmName {
    ZoneM,
    ZoneMInc,
    ZoneS,
    ZoneSInc,
    Rgf,
    ZoGd,
    ZoSgd,
}

impl AlgorithmName {
    pub fn on_mesh(self) -> bool {
        matches!(
            self,
            AlgorithmName::ZoneM | AlgorithmName::ZoneMInc | AlgorithmName::Rgf
        )
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyMode {
    #[default]
    Theoretical,
    Manual,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    Shared,
    #[default]
    Independent,
}

impl From<Coupling> for NoiseCoupling {
    fn from(c: Coupling) -> Self {
        match c {
            Coupling::Shared => NoiseCoupling::Shared,
            Coupling::Independent => NoiseCoupling::Independent,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Matrix,
    #[default]
    Distributed,
}

impl From<Mode> for StepMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Matrix => StepMode::Matrix,
            Mode::Distributed => StepMode::Distributed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TopologySpec {
    Mnet {
        agents: usize,
        radius: f64,
        seed: Option<u64>,
    },
    Snet {
        agents: usize,
    },
}

impl TopologySpec {
    pub fn agents(&self) -> usize {
        match *self {
            TopologySpec::Mnet { agents, .. } | TopologySpec::Snet { agents } => agents,
        }
    }

    pub fn with_agents(&self, n: usize) -> Self {
        match self.clone() {
            TopologySpec::Mnet { radius, seed, .. } => TopologySpec::Mnet {
                agents: n,
                radius,
                seed,
            },
            TopologySpec::Snet { .. } => TopologySpec::Snet { agents: n },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemSpec {
    SigmoidLog { seed: Option<u64> },
    SparseQuadratic { dim: usize, ell: f64, seed: Option<u64> },
}

impl ProblemSpec {
    pub fn build(&self, n_agents: usize, fallback_seed: u64) -> Problem {
        match *self {
            ProblemSpec::SigmoidLog { seed } => Problem::make_sigmoid_log(n_agents, seed.unwrap_or(fallback_seed)),
            ProblemSpec::SparseQuadratic { dim, ell, seed } => {
                Problem::make_sparse_quadratic(n_agents, dim, ell, seed.unwrap_or(fallback_seed))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlgorithmSpec {
    pub name: AlgorithmName,
    pub penalty: PenaltyMode,
    pub rho: Option<f64>,
    pub mode: Mode,
    pub delta: f64,
    pub step: Option<f64>,
    pub oracle_budget: Option<u64>,
    pub psi_beta: Option<f64>,
}

/// A fully resolved experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub trials: usize,
    pub horizon: usize,
    pub batch: usize,
    pub smoothing: f64,
    pub noise_std: f64,
    pub noise_coupling: Coupling,
    pub stride: usize,
    pub output: Option<PathBuf>,
    pub record_wall_time: bool,
    pub topology: TopologySpec,
    pub problem: ProblemSpec,
    pub algorithm: AlgorithmSpec,
}

impl ExperimentConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    master_seed: Option<u64>,
    trials: Option<Spanned<i64>>,
    horizon: Spanned<i64>,
    batch: Option<Spanned<i64>>,
    smoothing: Option<Spanned<f64>>,
    noise_std: Option<Spanned<f64>>,
    #[serde(default)]
    noise_coupling: Coupling,
    stride: Option<Spanned<i64>>,
    output: Option<PathBuf>,
    #[serde(default)]
    record_wall_time: bool,
    topology: Spanned<RawTopology>,
    problem: Option<RawProblem>,
    algorithm: Option<RawAlgorithm>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
enum TopologyKind {
    Mnet,
    Snet,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTopology {
    kind: Option<TopologyKind>,
    agents: Spanned<i64>,
    radius: Option<Spanned<f64>>,
    seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum ProblemKindName {
    SigmoidLog,
    SparseQuadratic,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    kind: ProblemKindName,
    seed: Option<u64>,
    dim: Option<Spanned<i64>>,
    ell: Option<Spanned<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlgorithm {
    name: AlgorithmName,
    #[serde(default)]
    penalty: PenaltyMode,
    rho: Option<Spanned<f64>>,
    #[serde(default)]
    mode: Mode,
    delta: Option<Spanned<f64>>,
    step: Option<Spanned<f64>>,
    oracle_budget: Option<u64>,
    psi_beta: Option<Spanned<f64>>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// The key assigned on the line containing `span`, if any.
fn key_at(text: &str, span: &Range<usize>) -> String {
    let start = text[..span.start.min(text.len())].rfind('\n').map_or(0, |i| i + 1);
    let line = text[start..].lines().next().unwrap_or("");
    match line.split_once('=') {
        Some((key, _)) => key.trim().to_string(),
        None => line.trim().trim_matches(['[', ']']).to_string(),
    }
}

struct Validator<'a> {
    text: &'a str,
}

impl Validator<'_> {
    fn fail<T>(&self, span: Range<usize>, field: &str, message: impl Into<String>) -> Result<T> {
        Err(Error::Validation(format!(
            "line {}: {field}: {}",
            line_of(self.text, span.start),
            message.into()
        )))
    }

    fn count(&self, v: &Spanned<i64>, field: &str, min: i64) -> Result<usize> {
        if *v.get_ref() < min {
            return self.fail(v.span(), field, format!("must be at least {min}, got {}", v.get_ref()));
        }
        Ok(*v.get_ref() as usize)
    }

    fn positive(&self, v: &Spanned<f64>, field: &str) -> Result<f64> {
        let x = *v.get_ref();
        if !(x > 0.0 && x.is_finite()) {
            return self.fail(v.span(), field, format!("must be positive, got {x}"));
        }
        Ok(x)
    }
}

/// Parse and validate a config, resolving every default.
pub fn load_config(text: &str) -> Result<ExperimentConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let span = e.span().unwrap_or(0..0);
        Error::Parse {
            line: line_of(text, span.start),
            field: key_at(text, &span),
            message: e.message().to_string(),
        }
    })?;
    let v = Validator { text };

    let horizon = v.count(&raw.horizon, "horizon", 1)?;
    let trials = match &raw.trials {
        Some(t) => v.count(t, "trials", 1)?,
        None => DEFAULT_TRIALS,
    };
    let batch = match &raw.batch {
        Some(b) => v.count(b, "batch", 1)?,
        None => horizon,
    };
    let smoothing = match &raw.smoothing {
        Some(s) => v.positive(s, "smoothing")?,
        None => 1.0 / (horizon as f64).sqrt(),
    };
    let noise_std = match &raw.noise_std {
        Some(s) if *s.get_ref() < 0.0 => return v.fail(s.span(), "noise_std", "must be nonnegative"),
        Some(s) => *s.get_ref(),
        None => DEFAULT_NOISE_STD,
    };
    let stride = match &raw.stride {
        Some(s) => v.count(s, "stride", 1)?,
        None => 1,
    };

    let topo_span = raw.topology.span();
    let rt = raw.topology.into_inner();
    let agents = v.count(&rt.agents, "agents", 1)?;
    let topology = match rt.kind.unwrap_or(TopologyKind::Mnet) {
        TopologyKind::Mnet => {
            if agents < 2 {
                return v.fail(rt.agents.span(), "agents", "a mesh needs at least 2 agents");
            }
            let radius = match &rt.radius {
                Some(r) => v.positive(r, "radius")?,
                None => DEFAULT_RADIUS,
            };
            TopologySpec::Mnet {
                agents,
                radius,
                seed: rt.seed,
            }
        }
        TopologyKind::Snet => {
            if let Some(r) = &rt.radius {
                return v.fail(r.span(), "radius", "only meaningful for kind = \"mnet\"");
            }
            TopologySpec::Snet { agents }
        }
    };
    let mesh = matches!(topology, TopologySpec::Mnet { .. });

    let problem = match raw.problem {
        None if mesh => ProblemSpec::SigmoidLog { seed: None },
        None => ProblemSpec::SparseQuadratic {
            dim: DEFAULT_QUADRATIC_DIM,
            ell: DEFAULT_QUADRATIC_ELL,
            seed: None,
        },
        Some(p) => match p.kind {
            ProblemKindName::SigmoidLog => {
                if let Some(d) = &p.dim {
                    return v.fail(d.span(), "dim", "sigmoid_log is one-dimensional");
                }
                if let Some(e) = &p.ell {
                    return v.fail(e.span(), "ell", "sigmoid_log has no constraint");
                }
                ProblemSpec::SigmoidLog { seed: p.seed }
            }
            ProblemKindName::SparseQuadratic => {
                let dim = match &p.dim {
                    Some(d) => v.count(d, "dim", 1)?,
                    None => DEFAULT_QUADRATIC_DIM,
                };
                let ell = match &p.ell {
                    Some(e) => v.positive(e, "ell")?,
                    None => DEFAULT_QUADRATIC_ELL,
                };
                if mesh {
                    return v.fail(topo_span, "topology", "the constrained quadratic needs kind = \"snet\"");
                }
                ProblemSpec::SparseQuadratic { dim, ell, seed: p.seed }
            }
        },
    };

    let algorithm = match raw.algorithm {
        None => AlgorithmSpec {
            name: if mesh {
                AlgorithmName::ZoneM
            } else {
                AlgorithmName::ZoneS
            },
            penalty: PenaltyMode::Theoretical,
            rho: None,
            mode: Mode::Distributed,
            delta: crate::problems::DEFAULT_DELTA,
            step: None,
            oracle_budget: None,
            psi_beta: None,
        },
        Some(a) => {
            if a.name.on_mesh() != mesh {
                return v.fail(
                    topo_span,
                    "topology",
                    format!("{:?} needs the other topology kind", a.name),
                );
            }
            let rho = a.rho.as_ref().map(|r| v.positive(r, "rho")).transpose()?;
            if rho.is_some() && a.name != AlgorithmName::ZoneM {
                let span = a.rho.as_ref().unwrap().span();
                return v.fail(span, "rho", "a constant penalty only applies to zone_m");
            }
            let delta = match &a.delta {
                Some(d) => v.positive(d, "delta")?,
                None => crate::problems::DEFAULT_DELTA,
            };
            let step = a.step.as_ref().map(|s| v.positive(s, "step")).transpose()?;
            let psi_beta = a.psi_beta.as_ref().map(|s| v.positive(s, "psi_beta")).transpose()?;
            if let (
                Some(r),
                PenaltyMode::Theoretical,
                TopologySpec::Mnet {
                    agents,
                    radius,
                    seed: Some(gs),
                },
            ) = (rho, a.penalty, &topology)
            {
                if let Some(problem_seed) = problem_seed(&problem) {
                    let topo = Topology::random_geometric(*agents, 1, *radius, *gs)?;
                    let built = problem.build(*agents, problem_seed);
                    let theory =
                        zone_m::theoretical_params(&GraphOperators::derive(&topo), built.total_smoothness(), delta);
                    if r <= theory.rho_min {
                        let span = a.rho.as_ref().unwrap().span();
                        return v.fail(
                            span,
                            "rho",
                            format!("{r} is not above the theoretical minimum {:.6}", theory.rho_min),
                        );
                    }
                }
            }
            AlgorithmSpec {
                name: a.name,
                penalty: a.penalty,
                rho,
                mode: a.mode,
                delta,
                step,
                oracle_budget: a.oracle_budget,
                psi_beta,
            }
        }
    };

    Ok(ExperimentConfig {
        master_seed: raw.master_seed.unwrap_or(0),
        trials,
        horizon,
        batch,
        smoothing,
        noise_std,
        noise_coupling: raw.noise_coupling,
        stride,
        output: raw.output,
        record_wall_time: raw.record_wall_time,
        topology,
        problem,
        algorithm,
    })
}

fn problem_seed(p: &ProblemSpec) -> Option<u64> {
    match *p {
        ProblemSpec::SigmoidLog { seed } | ProblemSpec::SparseQuadratic { seed, .. } => seed,
    }
}
