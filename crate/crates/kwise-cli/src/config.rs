//! Experiment configuration: schema-validated JSON in, with defaults for
//! every knob, plus the labeled seed-derivation rule that makes adding
//! trials never perturb existing ones.

use anyhow::{bail, Context};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

// ---------------------------------------------------------------------------
// Top-level config
// ---------------------------------------------------------------------------

/// Output flavor for `emit`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

/// One experiment: a kind with its parameters, the master seed all
/// randomness derives from, and optional output routing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Label used in seed derivation and file names; defaults to the kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
    pub experiment: ExperimentParams,
}

impl ExperimentConfig {
    pub fn new(seed: u64, experiment: ExperimentParams) -> Self {
        ExperimentConfig { id: None, seed, out: None, format: None, experiment }
    }

    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        serde_json::from_str(text).context("config does not match the schema")
    }

    pub fn kind(&self) -> &'static str {
        self.experiment.kind()
    }

    pub fn effective_id(&self) -> &str {
        self.id.as_deref().unwrap_or_else(|| self.kind())
    }
}

/// Kind-specific parameters, tagged so configs read
/// `{"kind": "learn", "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase")]
pub enum ExperimentParams {
    Learn(LearnParams),
    Dimension(DimensionParams),
    Reduce(ReduceParams),
    Cspdnf(CspdnfParams),
    Collision(CollisionParams),
    Simulate(SimulateParams),
}

impl ExperimentParams {
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentParams::Learn(_) => "learn",
            ExperimentParams::Dimension(_) => "dimension",
            ExperimentParams::Reduce(_) => "reduce",
            ExperimentParams::Cspdnf(_) => "cspdnf",
            ExperimentParams::Collision(_) => "collision",
            ExperimentParams::Simulate(_) => "simulate",
        }
    }

    /// Built-in defaults for a bare subcommand with no --config.
    pub fn default_for(kind: &str) -> anyhow::Result<Self> {
        Ok(match kind {
            "learn" => ExperimentParams::Learn(LearnParams::default()),
            "dimension" => ExperimentParams::Dimension(DimensionParams::default()),
            "reduce" => ExperimentParams::Reduce(ReduceParams::default()),
            "cspdnf" => ExperimentParams::Cspdnf(CspdnfParams::default()),
            "collision" => ExperimentParams::Collision(CollisionParams::default()),
            "simulate" => ExperimentParams::Simulate(SimulateParams::default()),
            other => bail!("unknown experiment kind {other:?}"),
        })
    }
}

// ---------------------------------------------------------------------------
// Per-kind parameters
// ---------------------------------------------------------------------------

/// Hyperplane-learner sweep over randomized instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnParams {
    pub p: u32,
    pub k: usize,
    /// Error budget ε, as "num/den".
    pub eps: String,
    pub trials: usize,
    /// Oracle policies cycled across trials:
    /// exact | extremal+ | extremal- | alternating | perturb.
    pub policies: Vec<String>,
}

impl Default for LearnParams {
    fn default() -> Self {
        LearnParams {
            p: 3,
            k: 1,
            eps: "1/8".into(),
            trials: 20,
            policies: vec![
                "exact".into(),
                "extremal+".into(),
                "extremal-".into(),
                "perturb".into(),
            ],
        }
    }
}

/// One (p, ℓ, k) cell of the lower-bound grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridCell {
    pub p: u32,
    pub l: usize,
    pub k: usize,
}

/// Average-correlation / statistical-dimension calculations on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DimensionParams {
    pub grid: Vec<GridCell>,
    pub delta: f64,
    /// Skip the cross-check against pairwise enumeration when a cell needs
    /// more than this many big-rational terms.
    pub enumeration_budget: u128,
}

impl Default for DimensionParams {
    fn default() -> Self {
        let mut grid = Vec::new();
        for k in [1usize, 2] {
            for p in [2u32, 3, 5] {
                grid.push(GridCell { p, l: 2, k });
            }
        }
        DimensionParams { grid, delta: 0.05, enumeration_budget: 2_000_000 }
    }
}

/// Flat-decision distinguisher trials plus a multiplicative-weights
/// estimation sub-run per trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReduceParams {
    pub k: usize,
    /// Promised k-wise gap τ, as "num/den".
    pub tau: String,
    /// Flatness bound γ of the two-point fixture, as "num/den".
    pub gamma: String,
    pub delta: f64,
    pub trials: usize,
    /// Also run the estimator on the Bernoulli fixture each trial.
    pub mw: bool,
    pub mw_tau: String,
    pub mw_delta: f64,
}

impl Default for ReduceParams {
    fn default() -> Self {
        ReduceParams {
            k: 2,
            tau: "1".into(),
            gamma: "2".into(),
            delta: 0.05,
            trials: 20,
            mw: true,
            mw_tau: "1/20".into(),
            mw_delta: 0.05,
        }
    }
}

/// Planted-constraint to DNF reduction verification sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CspdnfParams {
    /// Variable count per block; clamped up to each predicate's arity.
    pub n: usize,
    pub sigmas_per_predicate: usize,
    /// xor2 | and2 | or2 | parity3 | maj3
    pub predicates: Vec<String>,
    /// Check complexity(parity_t) = t for t up to this bound.
    pub parity_complexity_max: usize,
    /// Flip every literal of a fixed balanced instance per predicate and
    /// demand a violation each time.
    pub mutation: bool,
}

impl Default for CspdnfParams {
    fn default() -> Self {
        CspdnfParams {
            n: 5,
            sigmas_per_predicate: 6,
            predicates: vec![
                "xor2".into(),
                "and2".into(),
                "or2".into(),
                "parity3".into(),
                "maj3".into(),
            ],
            parity_complexity_max: 4,
            mutation: true,
        }
    }
}

/// Collision-probability estimation over named benchmark distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CollisionParams {
    pub tau: String,
    pub delta: f64,
    pub runs_per_benchmark: usize,
    /// uniform16 | point_mass | half_quarter_quarter | bernoulli_quarter |
    /// spike_nine_tenths
    pub benchmarks: Vec<String>,
    /// Demanded per-benchmark rate of runs landing within τ.
    pub required_hit_rate: f64,
}

impl Default for CollisionParams {
    fn default() -> Self {
        CollisionParams {
            tau: "1/10".into(),
            delta: 0.1,
            runs_per_benchmark: 2,
            benchmarks: vec![
                "uniform16".into(),
                "point_mass".into(),
                "half_quarter_quarter".into(),
                "bernoulli_quarter".into(),
                "spike_nine_tenths".into(),
            ],
            required_hit_rate: 0.9,
        }
    }
}

/// Exact real-vs-simulated output-law comparison for extraction programs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateParams {
    pub beta: String,
    /// constant | and_low_bits | parity_low_bits | adaptive_equal
    pub programs: Vec<String>,
    /// uniform2 | uniform4 | skewed
    pub distributions: Vec<String>,
}

impl Default for SimulateParams {
    fn default() -> Self {
        SimulateParams {
            beta: "1/20".into(),
            programs: vec![
                "constant".into(),
                "and_low_bits".into(),
                "parity_low_bits".into(),
                "adaptive_equal".into(),
            ],
            distributions: vec!["uniform4".into(), "skewed".into()],
        }
    }
}

// ---------------------------------------------------------------------------
// Seed derivation
// ---------------------------------------------------------------------------

/// Labeled seed split: the stream for (experiment-id, trial-index, role) is
/// the first eight little-endian bytes of
/// SHA-256(id ‖ 0x00 ‖ seed_le ‖ trial_le ‖ 0x00 ‖ role).
pub fn split_seed(master: u64, experiment_id: &str, trial_index: u64, role: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(experiment_id.as_bytes());
    h.update([0u8]);
    h.update(master.to_le_bytes());
    h.update(trial_index.to_le_bytes());
    h.update([0u8]);
    h.update(role.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is long enough"))
}

/// The ChaCha stream for one (trial, role) slot.
pub fn trial_rng(master: u64, experiment_id: &str, trial_index: u64, role: &str) -> ChaCha12Rng {
    use rand::SeedableRng;
    ChaCha12Rng::seed_from_u64(split_seed(master, experiment_id, trial_index, role))
}

// ---------------------------------------------------------------------------
