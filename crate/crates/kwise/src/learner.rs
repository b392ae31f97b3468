//! The (k+1)-wise statistical-query PAC learner for hyperplane indicators
//! over F_p^{k+1}, with its tolerance schedule, subspace recovery procedure,
//! and the structural witness search that underpins its analysis.
//!
//! The tolerance is τ = (ε/2^{c(k+2)})^{(k+1)^{k+3}} — doubly exponentially
//! small in k — so every threshold comparison here is exact rational
//! arithmetic; τ is carried as an explicit power of its base so that the
//! fractional powers τ^{1/(k+1)^j} appearing in the thresholds are again
//! exact integer powers of the same base.

use std::collections::HashSet;

use num::traits::{One, Signed, Zero};

use crate::dist::{for_each_tuple, FiniteDistribution, LabeledPoint, Query, Sign};
use crate::fp_linalg::{
    affine_slice, decode_subspace, encode_subspace, encoded_len, hyperplane_indicator, is_prime,
    AffineSubspace, FpMatrix, Subspace,
};
use crate::oracle::OracleSession;
use crate::rat::{pow2, rat, rpow, Rat};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Parameters and tolerance schedule
// ---------------------------------------------------------------------------

/// Learner inputs: arity index k, field size p, target error ε, and the
/// schedule constant c (smallest feasible one unless overridden).
#[derive(Debug, Clone)]
pub struct LearnerParams {
    k: usize,
    p: u32,
    eps: Rat,
    c: u32,
}

/// The tolerance τ and the branch thresholds τ_1 ≥ … ≥ τ_{k+1}.
#[derive(Debug, Clone)]
pub struct Schedule {
    pub k: usize,
    pub c: u32,
    pub tau: Rat,
    /// taus[i-1] = τ_i = 2^{c(k+2−i)} · k · τ^{1/(k+1)^{k+2−i}}.
    pub taus: Vec<Rat>,
}

fn validate_common(k: usize, p: u32, eps: &Rat) -> Result<()> {
    if k == 0 {
        return Err(Error::Invalid("k must be at least 1".into()));
    }
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if !eps.is_positive() || *eps >= Rat::one() {
        return Err(Error::Range("target error must lie in (0, 1)".into()));
    }
    Ok(())
}

impl LearnerParams {
    /// Picks the smallest feasible schedule constant via exact search.
    pub fn new(k: usize, p: u32, eps: Rat) -> Result<Self> {
        validate_common(k, p, &eps)?;
        let c = select_constant(k, &eps);
        Ok(LearnerParams { k, p, eps, c })
    }

    /// Uses an explicit constant, which must satisfy the schedule constraints.
    pub fn with_constant(k: usize, p: u32, eps: Rat, c: u32) -> Result<Self> {
        validate_common(k, p, &eps)?;
        if c == 0 || !schedule_constraints_ok(k, &eps, c) {
            return Err(Error::Invalid(format!("constant {c} violates the schedule constraints")));
        }
        Ok(LearnerParams { k, p, eps, c })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn eps(&self) -> &Rat {
        &self.eps
    }

    pub fn c(&self) -> u32 {
        self.c
    }

    pub fn schedule(&self) -> Schedule {
        schedule(self.k, &self.eps, self.c)
    }
}

/// The exact schedule for a given constant.
pub fn schedule(k: usize, eps: &Rat, c: u32) -> Schedule {
    // base = ε / 2^{c(k+2)};  τ = base^{(k+1)^{k+3}};
    // τ^{1/(k+1)^{k+2−i}} = base^{(k+1)^{i+1}} exactly.
    let base = eps / pow2((c as i64) * (k as i64 + 2));
    let kp1 = (k + 1) as u64;
    let tau = rpow(&base, kp1.pow(k as u32 + 3));
    let mut taus = Vec::with_capacity(k + 1);
    for i in 1..=(k + 1) {
        let root = rpow(&base, kp1.pow(i as u32 + 1));
        let t = pow2((c as i64) * ((k + 2 - i) as i64)) * rat(k as i64, 1) * root;
        taus.push(t);
    }
    Schedule { k, c, tau, taus }
}

/// True when the constant satisfies all four exact constraint families
/// (k-th roots compared by raising both sides to the k-th power).
pub fn schedule_constraints_ok(k: usize, eps: &Rat, c: u32) -> bool {
    let s = schedule(k, eps, c);
    let kk = rat(k as i64, 1);
    let kp1 = rat(k as i64 + 1, 1);
    let eps_k1 = rpow(eps, k as u64 + 1);
    // 2(k+1)τ₁ + 4(k+1)τ/ε^{k+1} < 1
    let lhs = rat(2, 1) * &kp1 * &s.taus[0] + rat(4, 1) * &kp1 * &s.tau / &eps_k1;
    if lhs >= Rat::one() {
        return false;
    }
    // τ ≤ ε^{k+1}/2
    if s.tau > eps_k1 / rat(2, 1) {
        return false;
    }
    // (k+1)·(4k)^{1/k}·τ_{i+1}^{1/k} ≤ τ_i/4  ⇔  (k+1)^k·4k·τ_{i+1} ≤ (τ_i/4)^k
    for i in 1..=k {
        let lhs = rpow(&kp1, k as u64) * rat(4, 1) * &kk * &s.taus[i];
        let rhs = rpow(&(&s.taus[i - 1] / rat(4, 1)), k as u64);
        if lhs > rhs {
            return false;
        }
    }
    // (4k)^{1/k}·τ_i^{1/k} ≤ ε^k  ⇔  4k·τ_i ≤ ε^{k²}
    let eps_kk = rpow(eps, (k * k) as u64);
    for t in &s.taus {
        if rat(4, 1) * &kk * t > eps_kk {
            return false;
        }
    }
    true
}

/// Smallest positive integer constant passing all schedule constraints.
/// Terminates: every constraint's left side shrinks geometrically in c.
pub fn select_constant(k: usize, eps: &Rat) -> u32 {
    let mut c = 1;
    while !schedule_constraints_ok(k, eps, c) {
        c += 1;
    }
    c
}

// ---------------------------------------------------------------------------
// Hypotheses
// ---------------------------------------------------------------------------

/// Learner output: either the constant −1 function or the ±1 indicator of an
/// affine subspace of F_p^{k+1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Hypothesis {
    AllNegative,
    AffineIndicator(AffineSubspace),
}

impl Hypothesis {
    pub fn classify(&self, z: &[u32]) -> i8 {
        match self {
            Hypothesis::AllNegative => -1,
            Hypothesis::AffineIndicator(v) => {
                if v.contains(z) {
                    1
                } else {
                    -1
                }
            }
        }
    }
}

/// Exact disagreement mass Pr_{z∼P}[h(z) ≠ f_a(z)].
pub fn hypothesis_error(
    h: &Hypothesis,
    marg: &FiniteDistribution<Vec<u32>>,
    a: &[u32],
    p: u32,
) -> Result<Rat> {
    let mut err = Rat::zero();
    for (z, pr) in marg.iter() {
        if z.len() != a.len() {
            return Err(Error::Shape("point and parameter dimensions differ".into()));
        }
        if h.classify(z) != hyperplane_indicator(a, z, p)? {
            err += pr;
        }
    }
    Ok(err)
}

// ---------------------------------------------------------------------------
// The learner
// ---------------------------------------------------------------------------

/// Result of a learning run, with enough accounting for budget assertions.
#[derive(Debug, Clone)]
pub struct LearnOutcome {
    pub hypothesis: Hypothesis,
    /// Rank branch taken, or `None` when the all-negative early exit fired.
    pub branch: Option<usize>,
    pub queries: usize,
}

fn all_positive(tuple: &[&LabeledPoint]) -> bool {
    tuple.iter().all(|(_, b)| *b == Sign::Plus)
}

/// Rows of the tuple's point matrix, each lifted with a trailing 1.
fn lifted_rows(tuple: &[&LabeledPoint]) -> Vec<Vec<u32>> {
    tuple
        .iter()
        .map(|(z, _)| {
            let mut row = z.clone();
            row.push(1);
            row
        })
        .collect()
}

fn rank_of_tuple(tuple: &[&LabeledPoint], p: u32) -> usize {
    let m = FpMatrix::from_rows(p, &lifted_rows(tuple)).expect("support rows are valid");
    m.rank()
}

/// Runs the learner against a (k+1)-wise session over labeled examples.
///
/// The session distribution must be a labeled distribution over
/// F_p^{k+1} × {±1} and the session tolerance must equal the schedule's τ.
pub fn learn(
    s: &mut OracleSession<LabeledPoint>,
    params: &LearnerParams,
) -> Result<LearnOutcome> {
    let k = params.k;
    let p = params.p;
    let sched = params.schedule();
    if s.arity() != k + 1 {
        return Err(Error::Shape(format!(
            "session arity {} but learner needs {}",
            s.arity(),
            k + 1
        )));
    }
    if s.tolerance() != &sched.tau {
        return Err(Error::Invalid("session tolerance differs from the schedule's τ".into()));
    }
    for ((z, _), _) in s.distribution().iter() {
        if z.len() != k + 1 || z.iter().any(|&x| x >= p) {
            return Err(Error::Shape("support point outside F_p^{k+1}".into()));
        }
    }

    let start = s.query_count();
    // Positive-label rate; exit all-negative when it cannot exceed ε.
    let w = s.stat_query(&Query::indicator(k + 1, |t: &[&LabeledPoint]| {
        t[0].1 == Sign::Plus
    }))?;
    if w <= params.eps.clone() - &sched.tau {
        return Ok(LearnOutcome {
            hypothesis: Hypothesis::AllNegative,
            branch: None,
            queries: s.query_count() - start,
        });
    }

    let v = s.stat_query(&Query::indicator(k + 1, |t: &[&LabeledPoint]| all_positive(t)))?;
    if !v.is_positive() {
        return Err(Error::OracleViolation(format!(
            "all-positive mass estimate {} is not positive although the \
             positive rate exceeded ε − τ; cannot divide",
            crate::rat::rat_str(&v)
        )));
    }

    for i in (1..=(k + 1)).rev() {
        let q_i = Query::indicator(k + 1, move |t: &[&LabeledPoint]| {
            all_positive(t) && rank_of_tuple(t, p) == i
        });
        let v_i = s.stat_query(&q_i)?;
        // v_i/v ≥ τ_i without dividing
        if v_i >= &sched.taus[i - 1] * &v {
            let vhat = recover_subspace(s, params, &sched, i, &v, &v_i)?;
            return Ok(LearnOutcome {
                hypothesis: Hypothesis::AffineIndicator(vhat),
                branch: Some(i),
                queries: s.query_count() - start,
            });
        }
    }
    Err(Error::OracleViolation(
        "no rank branch met its threshold and the early exit did not fire; \
         some answer must have violated the tolerance contract"
            .into(),
    ))
}

/// The recovery procedure: reads off the m_i = (k+2)·i·⌈log₂ p⌉ bits of the
/// concentrated subspace with one query per bit, thresholding each at 9/10,
/// then decodes and slices to an affine subspace of F_p^{k+1}.
pub fn recover_subspace(
    s: &mut OracleSession<LabeledPoint>,
    params: &LearnerParams,
    sched: &Schedule,
    i: usize,
    v: &Rat,
    v_i: &Rat,
) -> Result<AffineSubspace> {
    let k = params.k;
    let p = params.p;
    if i == 0 || i > k + 1 {
        return Err(Error::Range(format!("branch index {i} outside [1, {}]", k + 1)));
    }
    if !v.is_positive() || !v_i.is_positive() {
        return Err(Error::Invalid("recovery needs positive v and v_i".into()));
    }
    if v_i < &(&sched.taus[i - 1] * v) {
        return Err(Error::Invalid("recovery invoked without v_i/v ≥ τ_i".into()));
    }
    let m_i = encoded_len(p, k, i);
    let mut bits = Vec::with_capacity(m_i);
    for j in 1..=m_i {
        let q_ij = Query::indicator(k + 1, move |t: &[&LabeledPoint]| {
            if !all_positive(t) {
                return false;
            }
            let m = FpMatrix::from_rows(p, &lifted_rows(t)).expect("support rows are valid");
            let span = m.canonical_span();
            if span.dim() != i {
                return false;
            }
            let enc = encode_subspace(&span, k).expect("rank ≥ 1 span encodes");
            enc[j - 1]
        });
        let u_ij = s.stat_query(&q_ij)?;
        // u_{i,j}/v_i ≥ 9/10 without dividing
        bits.push(&u_ij * rat(10, 1) >= v_i * rat(9, 1));
    }
    let what = decode_subspace(&bits, p, k, i)?;
    affine_slice(&what)
}

// ---------------------------------------------------------------------------
// Structural witness search
// ---------------------------------------------------------------------------

/// Outcome of the subspace-concentration check: a witness subspace capturing
/// all but miss ≤ ξ^{1/k} of the mass, or an exact refutation of the rank
/// hypothesis.
#[derive(Debug, Clone)]
pub enum StructureOutcome {
    Witness { subspace: Subspace, miss: Rat },
    Refuted { rank_le_prob: Rat },
}

/// Exact Pr over `draws` i.i.d. rows from q of the stacked matrix having
/// rank ≤ i, by full enumeration.
pub fn rank_le_prob(
    q: &FiniteDistribution<Vec<u32>>,
    p: u32,
    draws: usize,
    i: usize,
    guard: u128,
) -> Result<Rat> {
    let mut acc = Rat::zero();
    for_each_tuple(q, draws, guard, |tuple, mass| {
        if mass.is_zero() {
            return Ok(());
        }
        let rows: Vec<Vec<u32>> = tuple.iter().map(|z| (*z).clone()).collect();
        if FpMatrix::from_rows(p, &rows)?.rank() <= i {
            acc += mass;
        }
        Ok(())
    })?;
    Ok(acc)
}

/// Minimal-miss subspace of dimension ≤ max_dim, searching spans of support
/// subsets of size ≤ max_dim. This search is lossless: for any subspace W,
/// span(W ∩ support) keeps exactly the captured mass and is spanned by at
/// most max_dim support points.
pub fn best_witness(
    q: &FiniteDistribution<Vec<u32>>,
    p: u32,
    max_dim: usize,
) -> Result<(Subspace, Rat)> {
    let n = q.len();
    if n == 0 {
        return Err(Error::Invalid("empty distribution".into()));
    }
    let ambient = q.support()[0].len();
    let d = max_dim.min(n);
    if d == 0 {
        return Err(Error::Invalid("witness dimension must be at least 1".into()));
    }
    let mut count = 1u128;
    let mut binom = 1u128;
    for j in 1..=d {
        binom = binom.saturating_mul((n - j + 1) as u128) / j as u128;
        count = count.saturating_add(binom);
    }
    if count > 200_000 {
        return Err(Error::GuardExceeded { needed: count, limit: 200_000 });
    }

    let miss_of = |w: &Subspace| -> Rat {
        let mut miss = Rat::zero();
        for (z, pr) in q.iter() {
            if !w.contains(z) {
                miss += pr;
            }
        }
        miss
    };

    let mut seen: HashSet<Subspace> = HashSet::new();
    let mut best: Option<(Subspace, Rat)> = None;
    // iterate subsets of size 1..=d in lexicographic order
    let mut stack: Vec<usize> = vec![0];
    while let Some(&top) = stack.last() {
        if top < n {
            if stack.len() <= d {
                let rows: Vec<Vec<u32>> = stack.iter().map(|&ix| q.support()[ix].clone()).collect();
                let m = FpMatrix::from_rows(p, &rows)?;
                if m.cols() != ambient {
                    return Err(Error::Shape("inconsistent point dimensions".into()));
                }
                let span = m.canonical_span();
                if span.dim() >= 1 && seen.insert(span.clone()) {
                    let miss = miss_of(&span);
                    if best.as_ref().map_or(true, |(_, b)| miss < *b) {
                        best = Some((span, miss));
                    }
                }
            }
            if stack.len() < d {
                stack.push(top + 1);
            } else {
                *stack.last_mut().unwrap() += 1;
            }
        } else {
            stack.pop();
            if let Some(last) = stack.last_mut() {
                *last += 1;
            }
        }
    }
    best.ok_or_else(|| Error::Invalid("no candidate subspace found".into()))
}

/// Verifies Pr_{q^{k+1}}[rank ≤ i] ≥ 1 − ξ exactly, then searches for a
/// dimension-≤ i subspace missing at most ξ^{1/k} of the mass (the
/// comparison miss ≤ ξ^{1/k} is performed as miss^k ≤ ξ).
pub fn structure_witness(
    q: &FiniteDistribution<Vec<u32>>,
    p: u32,
    i: usize,
    xi: &Rat,
    k: usize,
    guard: u128,
) -> Result<StructureOutcome> {
    if k == 0 {
        return Err(Error::Invalid("k must be at least 1".into()));
    }
    if xi.is_negative() || *xi > Rat::one() {
        return Err(Error::Range("ξ must lie in [0, 1]".into()));
    }
    let prob = rank_le_prob(q, p, k + 1, i, guard)?;
    if prob < Rat::one() - xi {
        return Ok(StructureOutcome::Refuted { rank_le_prob: prob });
    }
    let (subspace, miss) = best_witness(q, p, i)?;
    if rpow(&miss, k as u64) <= *xi {
        Ok(StructureOutcome::Witness { subspace, miss })
    } else {
        Err(Error::Invalid(format!(
            "rank hypothesis holds (prob {}) yet no dimension-{i} subspace \
             misses at most ξ^(1/{k}); best miss {}",
            crate::rat::rat_str(&prob),
            crate::rat::rat_str(&miss)
        )))
    }
}
