//! Reports: typed per-trial records, aggregate checks, and the JSON/CSV
//! emitters. Everything inside `Payload` is deterministic for a fixed
//! config — wall-clock lives outside it, so payload bytes can be compared
//! or hashed across runs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, OutputFormat};

// ---------------------------------------------------------------------------
// Trial records
// ---------------------------------------------------------------------------

/// One learner run: instance style, policy, and the exact outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnTrial {
    pub trial: usize,
    pub style: String,
    pub policy: String,
    /// Target parameter a, colon-separated coordinates.
    pub parameter: String,
    /// Exact disagreement mass, "num/den".
    pub error: String,
    pub queries: usize,
    pub budget: usize,
    pub one_sided: bool,
    pub branch: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnAggregates {
    pub max_error: String,
    pub eps: String,
    pub all_within_budget: bool,
    pub all_one_sided: bool,
}

/// One grid cell's lower-bound numbers with its cross-check flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionTrial {
    pub p: u32,
    pub l: usize,
    pub k: usize,
    pub rho: String,
    pub kappa1_bound: f64,
    pub dimension: f64,
    pub query_bound: f64,
    pub counts_verified: bool,
    /// None when the pairwise enumeration exceeded the configured budget.
    pub rho_matches_enumeration: Option<bool>,
}

/// One distinguisher round trip (member session + reference session) with
/// an optional estimator sub-run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReduceTrial {
    pub trial: usize,
    pub member_decision: String,
    pub reference_decision: String,
    pub member_queries: usize,
    pub reference_queries: usize,
    pub q_prime: usize,
    pub mw_value: Option<f64>,
    pub mw_truth: Option<String>,
    pub mw_abs_error: Option<f64>,
    pub mw_queries: Option<usize>,
    pub mw_within_tau: Option<bool>,
}

/// One (predicate, assignment) reduction verification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CspdnfTrial {
    pub predicate: String,
    pub t: usize,
    pub n: usize,
    pub sigma: String,
    pub checked_tuples: usize,
    pub term_count: usize,
    pub violations: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CspdnfAggregates {
    /// complexity(parity_t) for t = 1..=max.
    pub parity_complexity: Vec<usize>,
    /// None when the mutation sweep was disabled.
    pub all_mutations_caught: Option<bool>,
    pub mutations_checked: usize,
}

/// One collision estimation run against one benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionTrial {
    pub benchmark: String,
    pub run: usize,
    pub exact: String,
    pub value: f64,
    pub abs_error: f64,
    pub hit: bool,
    pub queries: usize,
    pub query_budget: usize,
    /// Exact sign-table identity check; None when the support is too large
    /// to enumerate all sign functions.
    pub identity_exact: Option<bool>,
}

/// One extraction program simulated against one distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateTrial {
    pub program: String,
    pub distribution: String,
    pub n: usize,
    pub b: usize,
    /// Exact total-variation distance, "num/den".
    pub tv: String,
    pub within_beta: bool,
    pub worst_case_queries: usize,
    pub query_budget: usize,
    pub coin_fallbacks: usize,
}

/// Kind-tagged result block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Results {
    Learn { trials: Vec<LearnTrial>, aggregates: LearnAggregates },
    Dimension { trials: Vec<DimensionTrial> },
    Reduce { trials: Vec<ReduceTrial> },
    Cspdnf { trials: Vec<CspdnfTrial>, aggregates: CspdnfAggregates },
    Collision { trials: Vec<CollisionTrial> },
    Simulate { trials: Vec<SimulateTrial> },
}

impl Results {
    pub fn trial_count(&self) -> usize {
        match self {
            Results::Learn { trials, .. } => trials.len(),
            Results::Dimension { trials } => trials.len(),
            Results::Reduce { trials } => trials.len(),
            Results::Cspdnf { trials, .. } => trials.len(),
            Results::Collision { trials } => trials.len(),
            Results::Simulate { trials } => trials.len(),
        }
    }
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

/// A named pass/fail verdict derived from the config's thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: String) -> Self {
        Check { name: name.into(), passed, detail }
    }
}

/// The deterministic part of a report: everything but wall-clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Payload {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub results: Results,
    pub checks: Vec<Check>,
}

impl Payload {
    /// Canonical bytes used for reproducibility comparison and hashing.
    pub fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("payload serializes")
    }

    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.to_bytes());
        let d = h.finalize();
        d.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn all_checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Payload plus its hash and the one non-reproducible field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub payload: Payload,
    pub payload_sha256: String,
    pub wall_clock_ms: u64,
}

impl Report {
    pub fn new(payload: Payload, wall_clock_ms: u64) -> Self {
        let payload_sha256 = payload.digest();
        Report { payload, payload_sha256, wall_clock_ms }
    }
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

/// Renders the report in the requested format: the full report as JSON, or
/// the per-trial rows flattened to CSV.
pub fn render(report: &Report, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => {
            let mut text = serde_json::to_string_pretty(report).expect("report serializes");
            text.push('\n');
            text
        }
        OutputFormat::Csv => csv_text(&report.payload.results),
    }
}

/// Writes the rendered report under `dir` and returns the paths written.
pub fn emit(report: &Report, format: OutputFormat, dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    let name = match format {
        OutputFormat::Json => format!("{}-report.json", report.payload.config.effective_id()),
        OutputFormat::Csv => format!("{}-trials.csv", report.payload.config.effective_id()),
    };
    let path = dir.join(name);
    fs::write(&path, render(report, format))
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(vec![path])
}

/// One CSV cell: quote only when the delimiter or quotes force it.
fn csv_cell(value: &str) -> String {
    if value.contains(',') || value.contains('"') || value.contains('\n') {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}

fn csv_line(cells: &[String]) -> String {
    cells.iter().map(|c| csv_cell(c)).collect::<Vec<_>>().join(",")
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

/// Flattens per-trial rows; the header depends on the experiment kind.
pub fn csv_text(results: &Results) -> String {
    let (header, rows): (Vec<&str>, Vec<Vec<String>>) = match results {
        Results::Learn { trials, .. } => (
            vec![
                "trial", "style", "policy", "parameter", "error", "queries", "budget",
                "one_sided", "branch",
            ],
            trials
                .iter()
                .map(|t| {
                    vec![
                        t.trial.to_string(),
                        t.style.clone(),
                        t.policy.clone(),
                        t.parameter.clone(),
                        t.error.clone(),
                        t.queries.to_string(),
                        t.budget.to_string(),
                        t.one_sided.to_string(),
                        opt(&t.branch),
                    ]
                })
                .collect(),
        ),
        Results::Dimension { trials } => (
            vec![
                "p", "l", "k", "rho", "kappa1_bound", "dimension", "query_bound",
                "counts_verified", "rho_matches_enumeration",
            ],
            trials
                .iter()
                .map(|t| {
                    vec![
                        t.p.to_string(),
                        t.l.to_string(),
                        t.k.to_string(),
                        t.rho.clone(),
                        t.kappa1_bound.to_string(),
                        t.dimension.to_string(),
                        t.query_bound.to_string(),
                        t.counts_verified.to_string(),
                        opt(&t.rho_matches_enumeration),
                    ]
                })
                .collect(),
        ),
        Results::Reduce { trials } => (
            vec![
                "trial", "member_decision", "reference_decision", "member_queries",
                "reference_queries", "q_prime", "mw_value", "mw_truth", "mw_abs_error",
                "mw_queries", "mw_within_tau",
            ],
            trials
                .iter()
                .map(|t| {
                    vec![
                        t.trial.to_string(),
                        t.member_decision.clone(),
                        t.reference_decision.clone(),
                        t.member_queries.to_string(),
                        t.reference_queries.to_string(),
                        t.q_prime.to_string(),
                        opt(&t.mw_value),
                        opt(&t.mw_truth),
                        opt(&t.mw_abs_error),
                        opt(&t.mw_queries),
                        opt(&t.mw_within_tau),
                    ]
                })
                .collect(),
        ),
        Results::Cspdnf { trials, .. } => (
            vec![
                "predicate", "t", "n", "sigma", "checked_tuples", "term_count", "violations",
                "passed",
            ],
            trials
                .iter()
                .map(|t| {
                    vec![
                        t.predicate.clone(),
                        t.t.to_string(),
                        t.n.to_string(),
                        t.sigma.clone(),
                        t.checked_tuples.to_string(),
                        t.term_count.to_string(),
                        t.violations.to_string(),
                        t.passed.to_string(),
                    ]
                })
                .collect(),
        ),
        Results::Collision { trials } => (
            vec![
                "benchmark", "run", "exact", "value", "abs_error", "hit", "queries",
                "query_budget", "identity_exact",
            ],
            trials
                .iter()
                .map(|t| {
                    vec![
                        t.benchmark.clone(),
                        t.run.to_string(),
                        t.exact.clone(),
                        t.value.to_string(),
                        t.abs_error.to_string(),
                        t.hit.to_string(),
                        t.queries.to_string(),
                        t.query_budget.to_string(),
                        opt(&t.identity_exact),
                    ]
                })
                .collect(),
        ),
        Results::Simulate { trials } => (
            vec![
                "program", "distribution", "n", "b", "tv", "within_beta",
                "worst_case_queries", "query_budget", "coin_fallbacks",
            ],
            trials
                .iter()
                .map(|t| {
                    vec![
                        t.program.clone(),
                        t.distribution.clone(),
                        t.n.to_string(),
                        t.b.to_string(),
                        t.tv.clone(),
                        t.within_beta.to_string(),
                        t.worst_case_queries.to_string(),
                        t.query_budget.to_string(),
                        t.coin_fallbacks.to_string(),
                    ]
                })
                .collect(),
        ),
    };
    let mut out = String::new();
    out.push_str(&csv_line(&header.iter().map(|h| h.to_string()).collect::<Vec<_>>()));
    out.push('\n');
    for row in rows {
        out.push_str(&csv_line(&row));
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
