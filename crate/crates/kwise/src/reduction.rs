//! Reducing k-wise statistical queries to unary ones over flat families:
//! the hybrid decomposition of a k-wise gap, randomly sampled unary slices
//! of a k-ary query, a decision procedure that detects a promised k-wise
//! gap using only unary queries, and a multiplicative-weights estimator
//! that answers k-wise expectation queries to within τ the same way.
//!
//! A family is γ-flat around a center D̄ when every member inflates no
//! event's mass by more than γ relative to D̄; that single certificate is
//! what lets prefix coordinates be sampled without knowing which member the
//! oracle holds, at a γ^{k−1} price in witness density.

use std::fmt::Debug;
use std::hash::Hash;

use num::traits::{One, Signed, Zero};
use rand::Rng;
use serde::Serialize;

use crate::dist::{
    expectation_k, expectation_mixed, for_each_tuple, FiniteDistribution, Query,
    DEFAULT_ENUM_GUARD,
};
use crate::oracle::OracleSession;
use crate::rat::{rat_str, rint, to_f64, Rat};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Hybrid contexts and parameters
// ---------------------------------------------------------------------------

/// One sampled hybrid slot: position j together with the fixed prefix
/// (length j−1) and suffix (length k−j) that turn a k-ary query into a
/// unary one.
#[derive(Debug, Clone)]
pub struct HybridContext<T> {
    pub j: usize,
    pub prefix: Vec<T>,
    pub suffix: Vec<T>,
}

impl<T> HybridContext<T> {
    pub fn new(k: usize, j: usize, prefix: Vec<T>, suffix: Vec<T>) -> Result<Self> {
        if j == 0 || j > k {
            return Err(Error::Range(format!("slot {j} outside [1, {k}]")));
        }
        if prefix.len() != j - 1 || suffix.len() != k - j {
            return Err(Error::Shape(format!(
                "slot {j} of {k} with prefix length {} and suffix length {}",
                prefix.len(),
                suffix.len()
            )));
        }
        Ok(HybridContext { j, prefix, suffix })
    }
}

/// Which flatness certificate sizes the repetition count: plain max
/// divergence, approximate max divergence, or Rényi divergence of order α.
/// Each yields a floor on the per-draw witness probability; the repetition
/// count is 3·ln(1/δ) divided by that floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlatnessCertificate {
    MaxDivergence,
    ApproxMax,
    Renyi { alpha: f64 },
}

/// Distinguisher parameters: arity k, promised k-wise gap τ, flatness bound
/// γ, failure probability δ, and the derived repetition count and unary
/// tolerance τ/(4k).
#[derive(Debug, Clone)]
pub struct ReductionParams {
    k: usize,
    tau: Rat,
    gamma: Rat,
    delta: f64,
    certificate: FlatnessCertificate,
}

impl ReductionParams {
    pub fn new(k: usize, tau: Rat, gamma: Rat, delta: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::Invalid("arity must be at least 1".into()));
        }
        if !tau.is_positive() {
            return Err(Error::Range("gap τ must be positive".into()));
        }
        if gamma < Rat::one() {
            return Err(Error::Range("flatness bound γ must be at least 1".into()));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Range(format!("δ = {delta} outside (0, 1)")));
        }
        Ok(ReductionParams {
            k,
            tau,
            gamma,
            delta,
            certificate: FlatnessCertificate::MaxDivergence,
        })
    }

    /// Swap in an approximate-max or Rényi certificate (resizes q′ only).
    pub fn with_certificate(mut self, certificate: FlatnessCertificate) -> Result<Self> {
        if let FlatnessCertificate::Renyi { alpha } = certificate {
            if alpha <= 1.0 {
                return Err(Error::Range(format!("Rényi order {alpha} must exceed 1")));
            }
        }
        self.certificate = certificate;
        Ok(self)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn tau(&self) -> &Rat {
        &self.tau
    }

    pub fn gamma(&self) -> &Rat {
        &self.gamma
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// The tolerance the unary oracle session must be opened with: τ/(4k).
    pub fn unary_tolerance(&self) -> Rat {
        &self.tau / rint(4 * self.k as i64)
    }

    /// The per-draw probability that a sampled unary query witnesses the
    /// promised gap, under the active certificate.
    pub fn witness_floor(&self) -> f64 {
        let t = to_f64(&self.tau);
        let k = self.k as f64;
        let g = to_f64(&self.gamma).powi(self.k as i32 - 1);
        match self.certificate {
            FlatnessCertificate::MaxDivergence => t / (4.0 * k * g),
            FlatnessCertificate::ApproxMax => t / (8.0 * k * g),
            FlatnessCertificate::Renyi { alpha } => {
                (t / (4.0 * k)).powf(alpha / (alpha - 1.0)) / g
            }
        }
    }

    /// Number of sampled unary queries per invocation:
    /// ⌈12k·γ^{k−1}·ln(1/δ)/τ⌉ for the max-divergence certificate, and the
    /// analogous 3·ln(1/δ)/floor for the other certificates.
    pub fn q_prime(&self) -> usize {
        let lninv = (1.0 / self.delta).ln();
        let t = to_f64(&self.tau);
        let k = self.k as f64;
        let g = to_f64(&self.gamma).powi(self.k as i32 - 1);
        let raw = match self.certificate {
            FlatnessCertificate::MaxDivergence => 12.0 * k * g * lninv / t,
            FlatnessCertificate::ApproxMax => 24.0 * k * g * lninv / t,
            FlatnessCertificate::Renyi { alpha } => {
                3.0 * lninv * g * (4.0 * k / t).powf(alpha / (alpha - 1.0))
            }
        };
        raw.ceil().max(1.0) as usize
    }
}

// ---------------------------------------------------------------------------
// Hybrid decomposition
// ---------------------------------------------------------------------------

/// The k+1 hybrid expectations H_i = E[q] with the first i coordinates
/// drawn from `d` and the rest from `d0`; H_0 = d0ᵏ[q], H_k = dᵏ[q].
pub fn hybrid_values<T: Clone + Eq + Hash>(
    d: &FiniteDistribution<T>,
    d0: &FiniteDistribution<T>,
    q: &Query<T>,
) -> Result<Vec<Rat>> {
    let k = q.arity();
    if k == 0 {
        return Err(Error::Invalid("zero-arity query".into()));
    }
    let mut values = Vec::with_capacity(k + 1);
    for i in 0..=k {
        let mut dists: Vec<&FiniteDistribution<T>> = Vec::with_capacity(k);
        dists.extend(std::iter::repeat(d).take(i));
        dists.extend(std::iter::repeat(d0).take(k - i));
        values.push(expectation_mixed(&dists, q)?);
    }
    Ok(values)
}

/// The k exact hybrid gaps |H_j − H_{j−1}|. Their sum dominates the
/// endpoint gap |dᵏ[q] − d0ᵏ[q]|, so at least one exceeds it divided by k.
pub fn hybrid_gaps<T: Clone + Eq + Hash>(
    d: &FiniteDistribution<T>,
    d0: &FiniteDistribution<T>,
    q: &Query<T>,
) -> Result<Vec<Rat>> {
    let values = hybrid_values(d, d0, q)?;
    Ok(values.windows(2).map(|w| (&w[1] - &w[0]).abs()).collect())
}

/// Samples a unary slice of `q`: slot j uniform in [k], prefix drawn from
/// `center`^{j−1}, suffix from `d0`^{k−j} (prefix coordinates first, in
/// order, then suffix coordinates). Returns the sliced query together with
/// the context that produced it.
pub fn sample_unary_query<T, R>(
    q: &Query<T>,
    center: &FiniteDistribution<T>,
    d0: &FiniteDistribution<T>,
    rng: &mut R,
) -> Result<(Query<T>, HybridContext<T>)>
where
    T: Clone + Eq + Hash + Send + Sync + 'static,
    R: Rng,
{
    let k = q.arity();
    if k == 0 {
        return Err(Error::Invalid("zero-arity query".into()));
    }
    let j = rng.gen_range(1..=k);
    let prefix: Vec<T> = (0..j - 1).map(|_| center.sample_one(rng)).collect();
    let suffix: Vec<T> = (0..k - j).map(|_| d0.sample_one(rng)).collect();
    let ctx = HybridContext::new(k, j, prefix.clone(), suffix.clone())?;
    let inner = q.clone();
    let sliced = Query::new(1, move |x: &[&T]| {
        let mut tuple: Vec<&T> = Vec::with_capacity(k);
        tuple.extend(prefix.iter());
        tuple.push(x[0]);
        tuple.extend(suffix.iter());
        inner.eval(&tuple)
    });
    Ok((sliced, ctx))
}

/// Exact probability, over slot j uniform in [k], prefix ~ `prefix_src`^{j−1}
/// and suffix ~ `d0`^{k−j}, that the sliced query separates `d` from `d0` by
/// more than `threshold`:  |d[q(pre,·,suf)] − d0[q(pre,·,suf)]| > threshold.
pub fn witness_probability<T: Clone + Eq + Hash>(
    q: &Query<T>,
    d: &FiniteDistribution<T>,
    prefix_src: &FiniteDistribution<T>,
    d0: &FiniteDistribution<T>,
    threshold: &Rat,
    guard: u128,
) -> Result<Rat> {
    let k = q.arity();
    if k == 0 {
        return Err(Error::Invalid("zero-arity query".into()));
    }
    let mut acc = Rat::zero();
    for j in 1..=k {
        let prefixes = tuple_space(prefix_src, j - 1, guard)?;
        let suffixes = tuple_space(d0, k - j, guard)?;
        for (pre, mp) in &prefixes {
            for (suf, ms) in &suffixes {
                let dev = slice_deviation(q, pre, suf, d, d0);
                if &dev > threshold {
                    acc += mp * ms;
                }
            }
        }
    }
    Ok(acc / rint(k as i64))
}

/// |d[q(pre,·,suf)] − d0[q(pre,·,suf)]| by direct summation.
fn slice_deviation<T: Clone + Eq + Hash>(
    q: &Query<T>,
    pre: &[T],
    suf: &[T],
    d: &FiniteDistribution<T>,
    d0: &FiniteDistribution<T>,
) -> Rat {
    let eval = |dist: &FiniteDistribution<T>| -> Rat {
        let mut e = Rat::zero();
        for (x, pr) in dist.iter() {
            let mut tuple: Vec<&T> = Vec::with_capacity(pre.len() + 1 + suf.len());
            tuple.extend(pre.iter());
            tuple.push(x);
            tuple.extend(suf.iter());
            e += q.eval(&tuple) * pr;
        }
        e
    };
    (eval(d) - eval(d0)).abs()
}

/// All tuples of `d.support()^n` with their product masses; a single empty
/// tuple of mass 1 when n = 0.
fn tuple_space<T: Clone + Eq + Hash>(
    d: &FiniteDistribution<T>,
    n: usize,
    guard: u128,
) -> Result<Vec<(Vec<T>, Rat)>> {
    if n == 0 {
        return Ok(vec![(Vec::new(), Rat::one())]);
    }
    let mut out = Vec::new();
    for_each_tuple(d, n, guard, |tuple, mass| {
        out.push((tuple.iter().map(|x| (*x).clone()).collect(), mass.clone()));
        Ok(())
    })?;
    Ok(out)
}

// ---------------------------------------------------------------------------
// Unary distinguisher
// ---------------------------------------------------------------------------

/// The distinguisher's verdict on the unknown distribution behind the
/// oracle session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Member,
    Reference,
}

/// Outcome of one distinguisher invocation: the verdict, the first context
/// whose answer crossed the threshold (if any), and the queries spent.
#[derive(Debug, Clone)]
pub struct DistinguisherOutcome<T> {
    pub decision: Decision,
    pub deviating: Option<HybridContext<T>>,
    pub queries: usize,
}

/// JSON descriptor of a distinguisher run.
#[derive(Debug, Clone, Serialize)]
pub struct DistinguisherRun {
    pub k: usize,
    pub tau: String,
    pub gamma: String,
    pub delta: f64,
    pub q_prime: usize,
    pub decision: String,
    pub deviating_query_context: Option<String>,
}

/// Decides whether the session's hidden distribution is the reference `d0`
/// or a family member whose k-wise gap on `q` is promised to exceed τ.
///
/// Draws exactly q′ sampled unary slices and declares a member iff some
/// answer deviates from the exactly-computed d0 expectation by strictly
/// more than τ/(4k). That threshold separates the two guarantees: a true
/// slice gap above τ/(2k) forces a deviation above τ/(4k) through any
/// tolerance-respecting oracle, while under D = d0 no answer can exceed it.
/// The full budget is always spent so the query count is q′ exactly.
pub fn unary_distinguisher<T, R>(
    q: &Query<T>,
    center: &FiniteDistribution<T>,
    d0: &FiniteDistribution<T>,
    params: &ReductionParams,
    s: &mut OracleSession<T>,
    rng: &mut R,
) -> Result<DistinguisherOutcome<T>>
where
    T: Clone + Eq + Hash + Send + Sync + 'static,
    R: Rng,
{
    if q.arity() != params.k() {
        return Err(Error::Shape(format!(
            "query arity {} but parameters say k = {}",
            q.arity(),
            params.k()
        )));
    }
    if s.arity() != 1 {
        return Err(Error::Shape(format!(
            "distinguisher needs a unary oracle session, got arity {}",
            s.arity()
        )));
    }
    let threshold = params.unary_tolerance();
    if s.tolerance() != &threshold {
        return Err(Error::Invalid(format!(
            "session tolerance {} but the reduction requires τ/(4k) = {}",
            rat_str(s.tolerance()),
            rat_str(&threshold)
        )));
    }
    let q_prime = params.q_prime();
    let before = s.query_count();
    let mut deviating: Option<HybridContext<T>> = None;
    for _ in 0..q_prime {
        let (sliced, ctx) = sample_unary_query(q, center, d0, rng)?;
        let answer = s.stat_query(&sliced)?;
        let reference = expectation_k(d0, &sliced)?;
        if (answer - reference).abs() > threshold && deviating.is_none() {
            deviating = Some(ctx);
        }
    }
    let decision = if deviating.is_some() { Decision::Member } else { Decision::Reference };
    Ok(DistinguisherOutcome { decision, deviating, queries: s.query_count() - before })
}

/// Serializable descriptor for a finished run.
pub fn distinguisher_run<T: Debug>(
    params: &ReductionParams,
    outcome: &DistinguisherOutcome<T>,
) -> DistinguisherRun {
    DistinguisherRun {
        k: params.k(),
        tau: rat_str(params.tau()),
        gamma: rat_str(params.gamma()),
        delta: params.delta(),
        q_prime: params.q_prime(),
        decision: match outcome.decision {
            Decision::Member => "member".into(),
            Decision::Reference => "reference".into(),
        },
        deviating_query_context: outcome.deviating.as_ref().map(|c| format!("{c:?}")),
    }
}

// ---------------------------------------------------------------------------
// Multiplicative-weights estimator
// ---------------------------------------------------------------------------

/// Result of the multiplicative-weights estimation: the value, how many
/// reweighting rounds ran, and how many oracle queries were spent.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MwEstimate {
    pub value: f64,
    pub updates: usize,
    pub queries: usize,
}

/// Estimates Dᵏ[q] within τ using only unary queries at tolerance τ/(6k),
/// for any D that is γ-flat around `center`.
///
/// Maintains a candidate distribution over support(center), initialized at
/// the center. Each round draws sampled unary slices — prefix from the
/// center (the flatness certificate covers the unknown D), suffix from the
/// *candidate* — and compares the oracle's answer with the candidate's own
/// expectation. A deviation beyond τ/(3k) certifies a real gap of at least
/// τ/(6k), and the candidate is reweighted by exp(±η·q′(x)) toward the
/// oracle; η is the certified gap so each update cuts KL(D‖candidate) by at
/// least half the gap squared. When ⌈ln((cap+1)/δ)·4kγ^{k−1}/τ⌉ consecutive
/// draws show no deviation, the candidate's k-fold expectation is returned:
/// a surviving k-wise gap above τ would have produced a witness with
/// probability at least τ/(4kγ^{k−1}) per draw.
///
/// More than ⌈32k²·ln γ/τ²⌉ updates exceed the KL budget an actually γ-flat
/// member allows, so that round cap fails with `NonConvergence`.
pub fn estimate_kwise_mw<T, R>(
    q: &Query<T>,
    center: &FiniteDistribution<T>,
    gamma: &Rat,
    tau: &Rat,
    delta: f64,
    s: &mut OracleSession<T>,
    rng: &mut R,
) -> Result<MwEstimate>
where
    T: Clone + Eq + Hash + Send + Sync + 'static,
    R: Rng,
{
    let k = q.arity();
    if k == 0 {
        return Err(Error::Invalid("zero-arity query".into()));
    }
    if s.arity() != 1 {
        return Err(Error::Shape(format!(
            "estimator needs a unary oracle session, got arity {}",
            s.arity()
        )));
    }
    if gamma < &Rat::one() {
        return Err(Error::Range("flatness bound γ must be at least 1".into()));
    }
    if !tau.is_positive() {
        return Err(Error::Range("tolerance τ must be positive".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Range(format!("δ = {delta} outside (0, 1)")));
    }
    // expectations live in [−1, 1], so any answer is already within τ > 2
    if tau > &rint(2) {
        let value = to_f64(&expectation_k(center, q)?);
        return Ok(MwEstimate { value, updates: 0, queries: 0 });
    }
    let oracle_tol = tau / rint(6 * k as i64);
    if s.tolerance() != &oracle_tol {
        return Err(Error::Invalid(format!(
            "session tolerance {} but the estimator requires τ/(6k) = {}",
            rat_str(s.tolerance()),
            rat_str(&oracle_tol)
        )));
    }
    let theta = tau / rint(3 * k as i64);
    let tau_f = to_f64(tau);
    let k_f = k as f64;
    let gamma_f = to_f64(gamma);
    let ln_gamma = gamma_f.ln().max(0.0);
    let cap = (32.0 * k_f * k_f * ln_gamma / (tau_f * tau_f)).ceil() as usize;
    let accept_run = ((((cap + 1) as f64) / delta).ln() * 4.0 * k_f
        * gamma_f.powi(k as i32 - 1)
        / tau_f)
        .ceil()
        .max(1.0) as usize;

    let support = center.support().to_vec();
    let mut weights: Vec<f64> = (0..center.len()).map(|i| to_f64(center.prob(i))).collect();
    let before = s.query_count();
    let mut updates = 0usize;
    let mut consecutive = 0usize;
    while consecutive < accept_run {
        let (sliced, _ctx) = sample_hybrid_against_candidate(q, center, &support, &weights, rng)?;
        let answer = s.stat_query(&sliced)?;
        // the candidate's own expectation of the slice, as the exact binary
        // rational of its f64 value so the threshold comparison is exact
        let mut cand = 0.0f64;
        for (i, x) in support.iter().enumerate() {
            cand += weights[i] * to_f64(&sliced.eval(&[x]));
        }
        let cand_rat = Rat::from_float(cand)
            .ok_or_else(|| Error::NonConvergence("candidate expectation became non-finite".into()))?;
        let gap = (&answer - &cand_rat).abs();
        if gap > theta {
            updates += 1;
            if updates > cap {
                return Err(Error::NonConvergence(format!(
                    "{updates} reweighting rounds exceed the KL budget of a γ-flat member \
                     (γ = {}, τ = {})",
                    rat_str(gamma),
                    rat_str(tau)
                )));
            }
            let certified = to_f64(&gap) - to_f64(&oracle_tol);
            let eta = certified.max(tau_f / (12.0 * k_f)).min(1.0);
            let toward = if (answer - cand_rat).is_positive() { 1.0 } else { -1.0 };
            let mut total = 0.0f64;
            for (i, x) in support.iter().enumerate() {
                weights[i] *= (eta * toward * to_f64(&sliced.eval(&[x]))).exp();
                total += weights[i];
            }
            if !(total.is_finite() && total > 0.0) {
                return Err(Error::NonConvergence("candidate weights degenerated".into()));
            }
            for w in &mut weights {
                *w /= total;
            }
            consecutive = 0;
        } else {
            consecutive += 1;
        }
    }
    let value = candidate_power_expectation(q, &support, &weights)?;
    Ok(MwEstimate { value, updates, queries: s.query_count() - before })
}

/// Samples a unary slice with prefix ~ center^{j−1} and suffix drawn from
/// the current candidate weights.
fn sample_hybrid_against_candidate<T, R>(
    q: &Query<T>,
    center: &FiniteDistribution<T>,
    support: &[T],
    weights: &[f64],
    rng: &mut R,
) -> Result<(Query<T>, HybridContext<T>)>
where
    T: Clone + Eq + Hash + Send + Sync + 'static,
    R: Rng,
{
    let k = q.arity();
    let j = rng.gen_range(1..=k);
    let prefix: Vec<T> = (0..j - 1).map(|_| center.sample_one(rng)).collect();
    let suffix: Vec<T> = (0..k - j)
        .map(|_| {
            let u: f64 = rng.gen::<f64>();
            let mut acc = 0.0;
            for (i, w) in weights.iter().enumerate() {
                acc += w;
                if u < acc {
                    return support[i].clone();
                }
            }
            support[support.len() - 1].clone()
        })
        .collect();
    let ctx = HybridContext::new(k, j, prefix.clone(), suffix.clone())?;
    let inner = q.clone();
    let sliced = Query::new(1, move |x: &[&T]| {
        let mut tuple: Vec<&T> = Vec::with_capacity(k);
        tuple.extend(prefix.iter());
        tuple.push(x[0]);
        tuple.extend(suffix.iter());
        inner.eval(&tuple)
    });
    Ok((sliced, ctx))
}

/// The candidate's k-fold expectation of `q`, in floating point.
fn candidate_power_expectation<T: Clone + Eq + Hash>(
    q: &Query<T>,
    support: &[T],
    weights: &[f64],
) -> Result<f64> {
    let k = q.arity();
    let n = support.len();
    let terms = (n as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    if terms > DEFAULT_ENUM_GUARD {
        return Err(Error::GuardExceeded { needed: terms, limit: DEFAULT_ENUM_GUARD });
    }
    let mut idx = vec![0usize; k];
    let mut acc = 0.0f64;
    loop {
        let mut mass = 1.0f64;
        let mut tuple: Vec<&T> = Vec::with_capacity(k);
        for &i in &idx {
            mass *= weights[i];
            tuple.push(&support[i]);
        }
        if mass != 0.0 {
            acc += mass * to_f64(&q.eval(&tuple));
        }
        let mut j = k;
        loop {
            if j == 0 {
                return Ok(acc);
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < n {
                break;
            }
            idx[j] = 0;
        }
    }
}

/// Ten times the theoretical query budget γ^{k−1}·k³·ln(1/δ)/τ³ — the
/// envelope the estimator's audited query count is asserted against.
pub fn budget_envelope(k: usize, gamma: &Rat, tau: &Rat, delta: f64) -> f64 {
    let lninv = (1.0 / delta).ln().max(1.0);
    10.0 * to_f64(gamma).powi(k as i32 - 1) * (k as f64).powi(3) * lninv
        / to_f64(tau).powi(3)
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{bernoulli, planted_hyperplane, uniform_labeled, LabeledPoint};
    use crate::oracle::{ExtremalRule, OraclePolicy};
    use crate::rat::rat;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    /// +1 iff both coordinates equal 1, else −1.
    fn both_ones() -> Query<u32> {
        Query::new(2, |x: &[&u32]| {
            if *x[0] == 1 && *x[1] == 1 {
                rint(1)
            } else {
                rint(-1)
            }
        })
    }

    /// (2x₁−1)(2x₂−1) on bits.
    fn bit_product() -> Query<u32> {
        Query::new(2, |x: &[&u32]| {
            rint(2 * *x[0] as i64 - 1) * rint(2 * *x[1] as i64 - 1)
        })
    }

    fn fair_coin() -> FiniteDistribution<u32> {
        bernoulli(rat(1, 2)).unwrap()
    }

    // -- hybrid decomposition ------------------------------------------------

    #[test]
    fn hybrid_values_interpolate_point_mass_against_fair_coin() {
        let d = FiniteDistribution::point_mass(1u32);
        let d0 = fair_coin();
        let q = both_ones();
        let values = hybrid_values(&d, &d0, &q).unwrap();
        assert_eq!(values, vec![rat(-1, 2), rint(0), rint(1)]);
        let gaps = hybrid_gaps(&d, &d0, &q).unwrap();
        assert_eq!(gaps, vec![rat(1, 2), rint(1)]);
        // endpoint gap 3/2 is covered by the gap sum, and some single gap
        // carries at least its k-th share
        let endpoint = (&values[2] - &values[0]).abs();
        assert_eq!(endpoint, rat(3, 2));
        assert!(gaps.iter().sum::<Rat>() >= endpoint);
        assert!(gaps.iter().max().unwrap() >= &(endpoint / rint(2)));
    }

    #[test]
    fn hybrid_gaps_vanish_when_member_equals_reference() {
        let d0 = fair_coin();
        let q = both_ones();
        for gap in hybrid_gaps(&d0.clone(), &d0, &q).unwrap() {
            assert_eq!(gap, Rat::zero());
        }
    }

    #[test]
    fn hybrid_values_reject_zero_arity() {
        let d0 = fair_coin();
        let q = Query::new(0, |_: &[&u32]| Rat::zero());
        assert!(hybrid_values(&d0.clone(), &d0, &q).is_err());
    }

    proptest! {
        // telescoping: the endpoints are the pure product expectations and
        // the largest gap is at least the endpoint gap over k
        #[test]
        fn hybrid_endpoints_and_pigeonhole(
            dm in proptest::collection::vec(1i64..6, 3),
            d0m in proptest::collection::vec(1i64..6, 3),
            table in proptest::collection::vec(-2i64..=2, 9),
        ) {
            let mk = |m: &[i64]| {
                let total: i64 = m.iter().sum();
                FiniteDistribution::new(
                    m.iter().enumerate().map(|(i, &w)| (i as u32, rat(w, total))).collect(),
                ).unwrap()
            };
            let d = mk(&dm);
            let d0 = mk(&d0m);
            let t = table.clone();
            let q = Query::new(2, move |x: &[&u32]| {
                rat(t[(*x[0] * 3 + *x[1]) as usize], 2)
            });
            let values = hybrid_values(&d, &d0, &q).unwrap();
            prop_assert_eq!(values[0].clone(), expectation_k(&d0, &q).unwrap());
            prop_assert_eq!(values[2].clone(), expectation_k(&d, &q).unwrap());
            let gaps = hybrid_gaps(&d, &d0, &q).unwrap();
            let endpoint = (&values[2] - &values[0]).abs();
            prop_assert!(gaps.iter().max().unwrap() * rint(2) >= endpoint);
        }
    }

    // -- sampled unary slices ------------------------------------------------

    #[test]
    fn sliced_query_agrees_with_reassembled_tuple() {
        let d0 = fair_coin();
        let center = bernoulli(rat(3, 4)).unwrap();
        let q = Query::new(3, |x: &[&u32]| {
            rint((*x[0] as i64) * 4 + (*x[1] as i64) * 2 + (*x[2] as i64) - 3)
                / rint(4)
        });
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..40 {
            let (sliced, ctx) = sample_unary_query(&q, &center, &d0, &mut rng).unwrap();
            assert_eq!(sliced.arity(), 1);
            assert_eq!(ctx.prefix.len(), ctx.j - 1);
            assert_eq!(ctx.suffix.len(), 3 - ctx.j);
            for x in [0u32, 1] {
                let mut tuple: Vec<&u32> = ctx.prefix.iter().collect();
                tuple.push(&x);
                tuple.extend(ctx.suffix.iter());
                assert_eq!(sliced.eval(&[&x]), q.eval(&tuple));
            }
        }
    }

    #[test]
    fn unary_query_slices_to_itself() {
        let d0 = fair_coin();
        let q = Query::new(1, |x: &[&u32]| rint(2 * *x[0] as i64 - 1));
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let (sliced, ctx) = sample_unary_query(&q, &d0.clone(), &d0, &mut rng).unwrap();
        assert_eq!(ctx.j, 1);
        assert!(ctx.prefix.is_empty() && ctx.suffix.is_empty());
        for x in [0u32, 1] {
            assert_eq!(sliced.eval(&[&x]), q.eval(&[&x]));
        }
    }

    #[test]
    fn hybrid_context_validates_lengths() {
        assert!(HybridContext::new(3, 2, vec![1u32], vec![0]).is_ok());
        assert!(HybridContext::new(3, 0, vec![], vec![0, 0]).is_err());
        assert!(HybridContext::new(3, 4, vec![1, 1, 1], vec![]).is_err());
        assert!(HybridContext::new(3, 2, vec![], vec![0]).is_err());
    }

    // -- witness probability -------------------------------------------------

    #[test]
    fn witness_probability_of_planted_pair_query() {
        let d = FiniteDistribution::point_mass(1u32);
        let d0 = fair_coin();
        let q = both_ones();
        // slot 1 witnesses only when the suffix lands on 1 (half the time);
        // slot 2 always does, since the prefix is forced to 1
        let wp = witness_probability(&q, &d, &d, &d0, &rat(1, 4), 1 << 20).unwrap();
        assert_eq!(wp, rat(3, 4));
    }

    #[test]
    fn witness_probability_survives_prefix_resampling() {
        // moving the prefix source from the member to a γ-flat center costs
        // at most the γ^{k−1} density factor
        let d = bernoulli(rat(3, 4)).unwrap();
        let center = fair_coin();
        let d0 = fair_coin();
        let q = both_ones();
        let threshold = rat(1, 8);
        let wp_member = witness_probability(&q, &d, &d, &d0, &threshold, 1 << 20).unwrap();
        let wp_center = witness_probability(&q, &d, &center, &d0, &threshold, 1 << 20).unwrap();
        assert_eq!(wp_member, rat(5, 8));
        assert_eq!(wp_center, rat(1, 2));
        let gamma = rat(3, 2);
        assert!(wp_center >= wp_member / gamma);
        // and the resampled probability still clears the certified floor
        let params = ReductionParams::new(2, rat(1, 2), rat(3, 2), 0.05).unwrap();
        assert!(to_f64(&wp_center) >= params.witness_floor());
    }

    // -- parameters ----------------------------------------------------------

    #[test]
    fn repetition_counts_for_each_certificate() {
        let base = ReductionParams::new(2, rint(1), rint(1), 0.05).unwrap();
        assert_eq!(base.q_prime(), 72);
        let approx = base
            .clone()
            .with_certificate(FlatnessCertificate::ApproxMax)
            .unwrap();
        assert_eq!(approx.q_prime(), 144);
        let renyi = base
            .clone()
            .with_certificate(FlatnessCertificate::Renyi { alpha: 2.0 })
            .unwrap();
        assert_eq!(renyi.q_prime(), 576);
        assert_eq!(base.unary_tolerance(), rat(1, 8));
    }

    #[test]
    fn parameter_validation() {
        assert!(ReductionParams::new(0, rint(1), rint(1), 0.05).is_err());
        assert!(ReductionParams::new(2, rint(0), rint(1), 0.05).is_err());
        assert!(ReductionParams::new(2, rint(1), rat(1, 2), 0.05).is_err());
        assert!(ReductionParams::new(2, rint(1), rint(1), 0.0).is_err());
        assert!(ReductionParams::new(2, rint(1), rint(1), 1.0).is_err());
        let p = ReductionParams::new(2, rint(1), rint(1), 0.05).unwrap();
        assert!(p
            .clone()
            .with_certificate(FlatnessCertificate::Renyi { alpha: 1.0 })
            .is_err());
    }

    // -- distinguisher -------------------------------------------------------

    fn tolerance_respecting_policies() -> Vec<OraclePolicy> {
        vec![
            OraclePolicy::Exact,
            OraclePolicy::Extremal(ExtremalRule::Plus),
            OraclePolicy::Extremal(ExtremalRule::Minus),
            OraclePolicy::Extremal(ExtremalRule::Alternating),
            OraclePolicy::Perturb { seed: 11 },
        ]
    }

    #[test]
    fn distinguisher_never_flags_the_reference() {
        let d0 = fair_coin();
        let q = both_ones();
        let params = ReductionParams::new(2, rint(1), rat(3, 2), 0.2).unwrap();
        for policy in tolerance_respecting_policies() {
            let mut s = OracleSession::stat(
                d0.clone(),
                1,
                params.unary_tolerance(),
                policy.clone(),
            )
            .unwrap();
            let mut rng = ChaCha12Rng::seed_from_u64(3);
            let out =
                unary_distinguisher(&q, &d0.clone(), &d0, &params, &mut s, &mut rng).unwrap();
            assert_eq!(out.decision, Decision::Reference, "policy {policy}");
            assert!(out.deviating.is_none());
            assert_eq!(out.queries, params.q_prime());
        }
    }

    #[test]
    fn distinguisher_flags_a_planted_member_across_seeds() {
        let d = FiniteDistribution::point_mass(1u32);
        let d0 = fair_coin();
        let q = both_ones();
        let params = ReductionParams::new(2, rint(1), rint(1), 0.05).unwrap();
        let mut hits = 0;
        for seed in 0..50u64 {
            let mut s = OracleSession::stat(
                d.clone(),
                1,
                params.unary_tolerance(),
                OraclePolicy::Exact,
            )
            .unwrap();
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let out = unary_distinguisher(&q, &d.clone(), &d0, &params, &mut s, &mut rng).unwrap();
            assert_eq!(out.queries, params.q_prime());
            if out.decision == Decision::Member {
                assert!(out.deviating.is_some());
                hits += 1;
            }
        }
        assert_eq!(hits, 50);
    }

    #[test]
    fn distinguisher_rejects_mismatched_sessions() {
        let d0 = fair_coin();
        let q = both_ones();
        let params = ReductionParams::new(2, rint(1), rint(1), 0.05).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        // wrong session arity
        let mut s2 =
            OracleSession::stat(d0.clone(), 2, params.unary_tolerance(), OraclePolicy::Exact)
                .unwrap();
        assert!(matches!(
            unary_distinguisher(&q, &d0.clone(), &d0, &params, &mut s2, &mut rng),
            Err(Error::Shape(_))
        ));
        // wrong session tolerance
        let mut s3 =
            OracleSession::stat(d0.clone(), 1, rat(1, 3), OraclePolicy::Exact).unwrap();
        assert!(matches!(
            unary_distinguisher(&q, &d0.clone(), &d0, &params, &mut s3, &mut rng),
            Err(Error::Invalid(_))
        ));
        // query arity disagrees with k
        let q1 = Query::new(1, |x: &[&u32]| rint(2 * *x[0] as i64 - 1));
        let mut s1 =
            OracleSession::stat(d0.clone(), 1, params.unary_tolerance(), OraclePolicy::Exact)
                .unwrap();
        assert!(matches!(
            unary_distinguisher(&q1, &d0.clone(), &d0, &params, &mut s1, &mut rng),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn distinguisher_run_serializes() {
        let d = FiniteDistribution::point_mass(1u32);
        let d0 = fair_coin();
        let q = both_ones();
        let params = ReductionParams::new(2, rint(1), rint(1), 0.05).unwrap();
        let mut s = OracleSession::stat(
            d.clone(),
            1,
            params.unary_tolerance(),
            OraclePolicy::Exact,
        )
        .unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let out = unary_distinguisher(&q, &d, &d0, &params, &mut s, &mut rng).unwrap();
        let run = distinguisher_run(&params, &out);
        let json: serde_json::Value =
            serde_json::from_str(&serde_json::to_string(&run).unwrap()).unwrap();
        assert_eq!(json["k"], 2);
        assert_eq!(json["tau"], "1/1");
        assert_eq!(json["q_prime"], 72);
        assert_eq!(json["decision"], "member");
        assert!(json["deviating_query_context"].is_string());
    }

    // -- multiplicative weights ----------------------------------------------

    #[test]
    fn mw_is_quiet_when_member_is_the_center() {
        let center = fair_coin();
        let tau = rat(1, 2);
        let tol = &tau / rint(12);
        let mut s =
            OracleSession::stat(center.clone(), 1, tol, OraclePolicy::Exact).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let q = bit_product();
        let est =
            estimate_kwise_mw(&q, &center, &rat(3, 2), &tau, 0.1, &mut s, &mut rng).unwrap();
        assert_eq!(est.updates, 0);
        assert!(est.value.abs() < 1e-12);
        assert!((est.queries as f64) <= budget_envelope(2, &rat(3, 2), &tau, 0.1));
    }

    #[test]
    fn mw_recovers_planted_bernoulli_bias() {
        let d = bernoulli(rat(3, 4)).unwrap();
        let center = fair_coin();
        let gamma = rat(3, 2);
        let tau = rat(1, 20);
        let tol = &tau / rint(12);
        let q = bit_product();
        for seed in 0..5u64 {
            let mut s =
                OracleSession::stat(d.clone(), 1, tol.clone(), OraclePolicy::Exact).unwrap();
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let est =
                estimate_kwise_mw(&q, &center, &gamma, &tau, 0.05, &mut s, &mut rng).unwrap();
            assert!(
                (est.value - 0.25).abs() <= to_f64(&tau),
                "seed {seed}: value {} strays from 1/4",
                est.value
            );
            assert!((est.queries as f64) <= budget_envelope(2, &gamma, &tau, 0.05));
        }
    }

    #[test]
    fn mw_recovers_a_planted_hyperplane_statistic() {
        let d = planted_hyperplane(&[1, 0], 2).unwrap();
        let center = uniform_labeled(2, 2).unwrap();
        let gamma = rint(2);
        let tau = rat(1, 20);
        let tol = &tau / rint(12);
        // labels agree exactly when the points sit on the same side, so this
        // correlates label product with coincidence
        let q = Query::new(2, |x: &[&LabeledPoint]| {
            let sgn = (x[0].1.value() * x[1].1.value()) as i64;
            if x[0].0 == x[1].0 {
                rint(sgn)
            } else {
                rint(-sgn)
            }
        });
        let truth = to_f64(&expectation_k(&d, &q).unwrap());
        let mut s = OracleSession::stat(d.clone(), 1, tol, OraclePolicy::Exact).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let est = estimate_kwise_mw(&q, &center, &gamma, &tau, 0.05, &mut s, &mut rng).unwrap();
        assert!(
            (est.value - truth).abs() <= to_f64(&tau),
            "value {} strays from {truth}",
            est.value
        );
        assert!((est.queries as f64) <= budget_envelope(2, &gamma, &tau, 0.05));
    }

    #[test]
    fn mw_short_circuits_when_tolerance_exceeds_range() {
        let center = fair_coin();
        let mut s =
            OracleSession::stat(center.clone(), 1, rat(1, 4), OraclePolicy::Exact).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let q = both_ones();
        let est = estimate_kwise_mw(&q, &center, &rint(2), &rint(3), 0.1, &mut s, &mut rng)
            .unwrap();
        assert_eq!(est.queries, 0);
        assert_eq!(est.updates, 0);
        assert_eq!(est.value, -0.5);
    }

    #[test]
    fn mw_reports_nonconvergence_outside_the_flat_family() {
        // γ = 1 promises the member IS the center; a genuinely different
        // member forces an update the KL budget cannot pay for
        let d = bernoulli(rat(3, 4)).unwrap();
        let center = fair_coin();
        let tau = rat(1, 2);
        let tol = &tau / rint(12);
        let mut s = OracleSession::stat(d, 1, tol, OraclePolicy::Exact).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let q = bit_product();
        assert!(matches!(
            estimate_kwise_mw(&q, &center, &rint(1), &tau, 0.1, &mut s, &mut rng),
            Err(Error::NonConvergence(_))
        ));
    }

    #[test]
    fn mw_validates_session_tolerance() {
        let center = fair_coin();
        let mut s =
            OracleSession::stat(center.clone(), 1, rat(1, 7), OraclePolicy::Exact).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let q = bit_product();
        assert!(matches!(
            estimate_kwise_mw(&q, &center, &rint(2), &rat(1, 2), 0.1, &mut s, &mut rng),
            Err(Error::Invalid(_))
        ));
    }
}
