//! Tolerance-respecting statistical-query oracle sessions.
//!
//! A session wraps a distribution with an arity, an exact rational tolerance,
//! and a response policy, and keeps a full transcript of what was asked. The
//! `Exact` policy answers with the exact rational expectation — this matters
//! because downstream tolerances can be as small as 2^{-1701}, far below any
//! float. The adversarial policies are deterministic worst-case falsifiers:
//! every answer they emit still satisfies |v − D^k[φ]| ≤ τ (checked by exact
//! rational comparison in the test suite), except `Empirical`, whose guarantee
//! is only probabilistic and which is therefore kept out of the
//! correctness-guaranteed suites.

use std::hash::Hash;
use std::sync::Arc;

use num::bigint::BigInt;
use num::traits::{One, Signed, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::dist::{for_each_tuple, FiniteDistribution, Query, DEFAULT_ENUM_GUARD};
use crate::rat::{rat_str, Rat};
use crate::{Error, Result};

/// Sign rule for the extremal falsifier policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremalRule {
    Plus,
    Minus,
    /// +τ on even query indices, −τ on odd ones.
    Alternating,
}

/// How a session turns exact expectations into answers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OraclePolicy {
    /// The exact rational expectation.
    Exact,
    /// Exact value shifted by the full tolerance according to the rule.
    Extremal(ExtremalRule),
    /// Exact value plus a seeded uniform offset in [−τ, +τ).
    Perturb { seed: u64 },
    /// Mean of `samples_per_query` fresh k-tuple draws; only a Hoeffding
    /// guarantee, no hard tolerance bound.
    Empirical { samples_per_query: usize, seed: u64 },
}

impl std::fmt::Display for OraclePolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OraclePolicy::Exact => write!(f, "exact"),
            OraclePolicy::Extremal(ExtremalRule::Plus) => write!(f, "extremal+"),
            OraclePolicy::Extremal(ExtremalRule::Minus) => write!(f, "extremal-"),
            OraclePolicy::Extremal(ExtremalRule::Alternating) => write!(f, "extremal~"),
            OraclePolicy::Perturb { seed } => write!(f, "perturb({seed})"),
            OraclePolicy::Empirical { samples_per_query, seed } => {
                write!(f, "empirical({samples_per_query},{seed})")
            }
        }
    }
}

/// A k-ary function into bit strings of length at most `b`, for sampling
/// sessions.
#[derive(Clone)]
pub struct BitQuery<T> {
    arity: usize,
    eval: Arc<dyn Fn(&[&T]) -> Vec<bool> + Send + Sync>,
}

impl<T> BitQuery<T> {
    pub fn new(
        arity: usize,
        eval: impl Fn(&[&T]) -> Vec<bool> + Send + Sync + 'static,
    ) -> Self {
        BitQuery { arity, eval: Arc::new(eval) }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn eval(&self, tuple: &[&T]) -> Vec<bool> {
        (self.eval)(tuple)
    }
}

/// One transcript line: which query (by evaluation-table digest), what was
/// answered, under which policy.
#[derive(Debug, Clone, Serialize)]
pub struct TranscriptEntry {
    pub index: usize,
    pub query_digest: String,
    pub answer_as_rational: String,
    pub policy: String,
}

/// Accounting snapshot for budget assertions.
#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub query_count: usize,
    pub tolerance: String,
    pub policy: String,
    pub transcript_digest: String,
    pub samples_used: u64,
}

enum SessionMode {
    Stat,
    BitSample { b: usize },
}

/// A single-writer oracle session. Queries must be serialized per session;
/// distinct sessions are independent.
pub struct OracleSession<T> {
    dist: FiniteDistribution<T>,
    arity: usize,
    tolerance: Rat,
    policy: OraclePolicy,
    mode: SessionMode,
    transcript: Vec<TranscriptEntry>,
    rng: Option<ChaCha12Rng>,
    guard: u128,
    sample_cap: Option<u64>,
    samples_used: u64,
}

impl<T: Clone + Eq + Hash> OracleSession<T> {
    /// A STAT session answering arity-`k` queries within tolerance `tau`.
    pub fn stat(
        dist: FiniteDistribution<T>,
        k: usize,
        tau: Rat,
        policy: OraclePolicy,
    ) -> Result<Self> {
        if !tau.is_positive() {
            return Err(Error::Range("tolerance must be positive".into()));
        }
        if k == 0 {
            return Err(Error::Invalid("arity must be at least 1".into()));
        }
        let rng = match &policy {
            OraclePolicy::Perturb { seed } => Some(ChaCha12Rng::seed_from_u64(*seed)),
            OraclePolicy::Empirical { seed, .. } => Some(ChaCha12Rng::seed_from_u64(*seed)),
            _ => None,
        };
        Ok(OracleSession {
            dist,
            arity: k,
            tolerance: tau,
            policy,
            mode: SessionMode::Stat,
            transcript: Vec::new(),
            rng,
            guard: DEFAULT_ENUM_GUARD,
            sample_cap: None,
            samples_used: 0,
        })
    }

    /// A b-bit sampling session: each call draws one fresh k-tuple.
    pub fn bbit(dist: FiniteDistribution<T>, k: usize, b: usize, seed: u64) -> Result<Self> {
        if k == 0 || b == 0 {
            return Err(Error::Invalid("arity and bit width must be at least 1".into()));
        }
        Ok(OracleSession {
            dist,
            arity: k,
            tolerance: Rat::one(), // unused in sampling mode
            policy: OraclePolicy::Exact,
            mode: SessionMode::BitSample { b },
            transcript: Vec::new(),
            rng: Some(ChaCha12Rng::seed_from_u64(seed)),
            guard: DEFAULT_ENUM_GUARD,
            sample_cap: None,
            samples_used: 0,
        })
    }

    /// Cap the total number of k-tuple draws an `Empirical` or b-bit session
    /// may consume; exceeding it fails with `BudgetExhausted`.
    pub fn with_sample_cap(mut self, cap: u64) -> Self {
        self.sample_cap = Some(cap);
        self
    }

    /// Override the enumeration guard (number of support^k terms).
    pub fn with_guard(mut self, guard: u128) -> Self {
        self.guard = guard;
        self
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn tolerance(&self) -> &Rat {
        &self.tolerance
    }

    pub fn policy(&self) -> &OraclePolicy {
        &self.policy
    }

    pub fn distribution(&self) -> &FiniteDistribution<T> {
        &self.dist
    }

    pub fn query_count(&self) -> usize {
        self.transcript.len()
    }

    pub fn transcript(&self) -> &[TranscriptEntry] {
        &self.transcript
    }

    /// Answers an arity-k statistical query within the session tolerance.
    pub fn stat_query(&mut self, q: &Query<T>) -> Result<Rat> {
        if !matches!(self.mode, SessionMode::Stat) {
            return Err(Error::Invalid("stat_query on a b-bit sampling session".into()));
        }
        if q.arity() != self.arity {
            return Err(Error::Shape(format!(
                "query arity {} but session arity {}",
                q.arity(),
                self.arity
            )));
        }
        // One enumeration pass computes the exact expectation and digests the
        // full evaluation table.
        let mut hasher = Sha256::new();
        hasher.update(format!("stat:{}\n", self.arity).as_bytes());
        let mut exact = Rat::zero();
        for_each_tuple(&self.dist, self.arity, self.guard, |tuple, mass| {
            let v = q.eval_checked(tuple)?;
            hasher.update(rat_str(&v).as_bytes());
            hasher.update(b"\n");
            if !mass.is_zero() {
                exact += v * mass;
            }
            Ok(())
        })?;
        let digest = hex(&hasher.finalize());
        let answer = match &self.policy {
            OraclePolicy::Exact => exact,
            OraclePolicy::Extremal(rule) => {
                let plus = match rule {
                    ExtremalRule::Plus => true,
                    ExtremalRule::Minus => false,
                    ExtremalRule::Alternating => self.transcript.len() % 2 == 0,
                };
                if plus {
                    exact + &self.tolerance
                } else {
                    exact - &self.tolerance
                }
            }
            OraclePolicy::Perturb { .. } => {
                let a = self.rng.as_mut().expect("perturb rng").next_u64();
                let two64 = BigInt::one() << 64;
                let offset = Rat::new(BigInt::from(a) * 2 - &two64, two64) * &self.tolerance;
                exact + offset
            }
            OraclePolicy::Empirical { samples_per_query, .. } => {
                let m = *samples_per_query;
                self.charge_samples(m as u64)?;
                let rng = self.rng.as_mut().expect("empirical rng");
                let mut sum = Rat::zero();
                for _ in 0..m {
                    let tuple: Vec<T> =
                        (0..self.arity).map(|_| self.dist.sample_one(rng)).collect();
                    let refs: Vec<&T> = tuple.iter().collect();
                    sum += q.eval_checked(&refs)?;
                }
                sum / Rat::new(BigInt::from(m), BigInt::one())
            }
        };
        self.push_entry(digest, rat_str(&answer));
        Ok(answer)
    }

    /// Draws one fresh k-tuple and returns φ of it (≤ b bits).
    pub fn bbit_sample(&mut self, q: &BitQuery<T>) -> Result<Vec<bool>> {
        let b = match self.mode {
            SessionMode::BitSample { b } => b,
            SessionMode::Stat => {
                return Err(Error::Invalid("bbit_sample on a stat session".into()))
            }
        };
        if q.arity() != self.arity {
            return Err(Error::Shape(format!(
                "query arity {} but session arity {}",
                q.arity(),
                self.arity
            )));
        }
        self.charge_samples(1)?;
        // Digest the evaluation table, then draw.
        let mut hasher = Sha256::new();
        hasher.update(format!("bbit:{}:{}\n", self.arity, b).as_bytes());
        for_each_tuple(&self.dist, self.arity, self.guard, |tuple, _| {
            let bits = q.eval(tuple);
            if bits.len() > b {
                return Err(Error::Range(format!(
                    "query emitted {} bits, session allows {b}",
                    bits.len()
                )));
            }
            hasher.update(bits_str(&bits).as_bytes());
            hasher.update(b"\n");
            Ok(())
        })?;
        let digest = hex(&hasher.finalize());
        let rng = self.rng.as_mut().expect("bbit rng");
        let tuple: Vec<T> = (0..self.arity).map(|_| self.dist.sample_one(rng)).collect();
        let refs: Vec<&T> = tuple.iter().collect();
        let bits = q.eval(&refs);
        // answer recorded as the bit string read as a binary integer
        let mut enc = BigInt::zero();
        for &bit in &bits {
            enc = enc * 2 + if bit { 1 } else { 0 };
        }
        self.push_entry(digest, format!("{enc}/1"));
        Ok(bits)
    }

    /// Accounting snapshot; the transcript digest is a hash over all entries.
    pub fn audit(&self) -> AuditReport {
        let mut hasher = Sha256::new();
        for e in &self.transcript {
            hasher.update(e.query_digest.as_bytes());
            hasher.update(b":");
            hasher.update(e.answer_as_rational.as_bytes());
            hasher.update(b"\n");
        }
        AuditReport {
            query_count: self.transcript.len(),
            tolerance: rat_str(&self.tolerance),
            policy: self.policy.to_string(),
            transcript_digest: hex(&hasher.finalize()),
            samples_used: self.samples_used,
        }
    }

    /// The transcript as JSON lines.
    pub fn transcript_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.transcript {
            out.push_str(&serde_json::to_string(e).expect("transcript entry serializes"));
            out.push('\n');
        }
        out
    }

    fn charge_samples(&mut self, n: u64) -> Result<()> {
        if let Some(cap) = self.sample_cap {
            if self.samples_used + n > cap {
                return Err(Error::BudgetExhausted(format!(
                    "sample cap {cap} would be exceeded ({} used, {n} requested)",
                    self.samples_used
                )));
            }
        }
        self.samples_used += n;
        Ok(())
    }

    fn push_entry(&mut self, query_digest: String, answer: String) {
        let index = self.transcript.len();
        self.transcript.push(TranscriptEntry {
            index,
            query_digest,
            answer_as_rational: answer,
            policy: self.policy.to_string(),
        });
    }
}

fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

fn bits_str(bits: &[bool]) -> String {
    bits.iter().map(|&x| if x { '1' } else { '0' }).collect()
}
