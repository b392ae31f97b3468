//! Low-communication algorithms replayed through unary statistical
//! queries: adaptive bit-extraction programs and their ground-truth
//! execution, the query simulation that replaces each extracted bit with a
//! conditional-probability coin (with exact output-law enumeration for
//! total-variation audits), a collision-probability estimator built on
//! random sign functions, and the protocol → estimate pipeline that
//! majority-amplifies a shared-randomness protocol before simulating it.

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;
use std::sync::Arc;

use num::bigint::BigInt;
use num::traits::{One, Signed, Zero};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::dist::{for_each_tuple, FiniteDistribution, Query};
use crate::oracle::OracleSession;
use crate::rat::{pow2, rat_str, rint, to_f64, Rat};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Bit-extraction programs
// ---------------------------------------------------------------------------

/// Bits extracted so far, one string per sample, in extraction order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    bits: Vec<Vec<u8>>,
}

impl Transcript {
    pub fn new(n: usize) -> Self {
        Transcript { bits: vec![Vec::new(); n] }
    }

    pub fn n(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self, sample: usize) -> &[u8] {
        &self.bits[sample]
    }

    pub fn count(&self, sample: usize) -> usize {
        self.bits[sample].len()
    }

    pub fn total(&self) -> usize {
        self.bits.iter().map(Vec::len).sum()
    }

    pub fn push(&mut self, sample: usize, bit: u8) {
        self.bits[sample].push(bit);
    }
}

/// What a program wants next, given the transcript so far.
pub enum ExtractionStep<T> {
    /// One more bit of sample `index`, computed from its value.
    Extract {
        index: usize,
        bit: Arc<dyn Fn(&T) -> u8 + Send + Sync>,
    },
    /// A ±1 answer; the run is over.
    Output(i8),
}

/// An adaptive program over n virtual samples that may extract at most b
/// bits from each. The step function sees only the global transcript, so
/// the same program runs on real samples or inside the query simulation.
#[derive(Clone)]
pub struct ExtractionProgram<T> {
    n: usize,
    b: usize,
    step: Arc<dyn Fn(&Transcript) -> ExtractionStep<T> + Send + Sync>,
}

impl<T> ExtractionProgram<T> {
    pub fn new(
        n: usize,
        b: usize,
        step: impl Fn(&Transcript) -> ExtractionStep<T> + Send + Sync + 'static,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Range("a program needs at least one sample".into()));
        }
        Ok(ExtractionProgram { n, b, step: Arc::new(step) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn b(&self) -> usize {
        self.b
    }

    fn next(&self, t: &Transcript) -> ExtractionStep<T> {
        (self.step)(t)
    }
}

impl<T> std::fmt::Debug for ExtractionProgram<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ExtractionProgram(n={}, b={})", self.n, self.b)
    }
}

/// Runs a program on real samples: the ground truth the simulation is
/// audited against. Enforces the per-sample budget and the ±1 output range.
pub fn run_extraction<T>(
    program: &ExtractionProgram<T>,
    samples: &[T],
) -> Result<(i8, Transcript)> {
    if samples.len() != program.n() {
        return Err(Error::Shape(format!(
            "{} samples for a program over {}",
            samples.len(),
            program.n()
        )));
    }
    let mut transcript = Transcript::new(program.n());
    loop {
        match program.next(&transcript) {
            ExtractionStep::Extract { index, bit } => {
                if index >= program.n() {
                    return Err(Error::Range(format!("sample index {index} out of range")));
                }
                if transcript.count(index) >= program.b() {
                    return Err(Error::BudgetExhausted(format!(
                        "sample {index} already gave {} bits",
                        program.b()
                    )));
                }
                let v = bit(&samples[index]);
                if v > 1 {
                    return Err(Error::Invalid(format!("extracted non-bit value {v}")));
                }
                transcript.push(index, v);
            }
            ExtractionStep::Output(v) => {
                if v != 1 && v != -1 {
                    return Err(Error::Invalid(format!("program output {v} is not ±1")));
                }
                return Ok((v, transcript));
            }
        }
    }
}

/// Exact output law of a program on i.i.d. samples from `d`, by
/// enumerating all sample tuples.
pub fn extraction_output_distribution<T: Clone + Eq + Hash>(
    program: &ExtractionProgram<T>,
    d: &FiniteDistribution<T>,
    guard: u128,
) -> Result<FiniteDistribution<i8>> {
    let mut acc: BTreeMap<i8, Rat> = BTreeMap::new();
    let mut failure: Option<Error> = None;
    for_each_tuple(d, program.n(), guard, |tuple, mass| {
        if failure.is_some() {
            return Ok(());
        }
        let samples: Vec<T> = tuple.iter().map(|x| (*x).clone()).collect();
        match run_extraction(program, &samples) {
            Ok((out, _)) => *acc.entry(out).or_insert_with(Rat::zero) += mass,
            Err(e) => failure = Some(e),
        }
        Ok(())
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    FiniteDistribution::new(acc.into_iter().collect())
}

// ---------------------------------------------------------------------------
// Query simulation of extraction
// ---------------------------------------------------------------------------

/// The tolerance the simulation needs from its unary session:
/// β / (2^{b+1} · n).
pub fn extraction_tolerance(beta: &Rat, b: usize, n: usize) -> Rat {
    beta / (pow2(b as i64 + 1) * rint(n as i64))
}

/// Oracle spend and fallback count of one simulated run.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SimulationAudit {
    pub queries: usize,
    pub coin_fallbacks: usize,
}

/// Replays a program without samples: each requested bit becomes a coin
/// whose bias is p̂/q̂, where p̂ estimates Pr[new bit = 1 ∧ this sample's
/// prior bits match the transcript] and q̂ estimates Pr[prior bits match].
/// A first bit needs no q̂ query (the empty prefix has probability exactly
/// 1), so a run spends at most 2·b·n queries. Whenever q̂ ≤ 2·tolerance
/// the conditional is too uncertain and a fair coin is used instead.
///
/// Coin draws compare a 64-bit uniform rational against the exact bias, so
/// the realized law matches the enumerated one up to 2⁻⁶⁴ per bit.
pub fn simulate_extraction_sq<T, R>(
    program: &ExtractionProgram<T>,
    s: &mut OracleSession<T>,
    beta: &Rat,
    rng: &mut R,
) -> Result<(i8, SimulationAudit)>
where
    T: Clone + Eq + Hash + Send + Sync + 'static,
    R: Rng,
{
    if s.arity() != 1 {
        return Err(Error::Shape(format!(
            "simulation needs a unary oracle session, got arity {}",
            s.arity()
        )));
    }
    if !beta.is_positive() {
        return Err(Error::Range("β must be positive".into()));
    }
    let tol = extraction_tolerance(beta, program.b(), program.n());
    if s.tolerance() != &tol {
        return Err(Error::Invalid(format!(
            "session tolerance {} but the simulation requires β/(2^{{b+1}}·n) = {}",
            rat_str(s.tolerance()),
            rat_str(&tol)
        )));
    }
    let threshold = rint(2) * &tol;
    let mut transcript = Transcript::new(program.n());
    let mut extractors: Vec<Vec<Arc<dyn Fn(&T) -> u8 + Send + Sync>>> =
        vec![Vec::new(); program.n()];
    let before = s.query_count();
    let mut coin_fallbacks = 0usize;
    loop {
        match program.next(&transcript) {
            ExtractionStep::Extract { index, bit } => {
                if index >= program.n() {
                    return Err(Error::Range(format!("sample index {index} out of range")));
                }
                if transcript.count(index) >= program.b() {
                    return Err(Error::BudgetExhausted(format!(
                        "sample {index} already gave {} bits",
                        program.b()
                    )));
                }
                let prior_fns = extractors[index].clone();
                let prior_bits = transcript.bits(index).to_vec();
                let q_hat = if prior_bits.is_empty() {
                    Rat::one()
                } else {
                    let fns = prior_fns.clone();
                    let bits = prior_bits.clone();
                    s.stat_query(&Query::indicator(1, move |x: &[&T]| {
                        fns.iter().zip(&bits).all(|(f, &w)| f(x[0]) == w)
                    }))?
                };
                let drawn = if q_hat <= threshold {
                    coin_fallbacks += 1;
                    u8::from(rng.gen::<bool>())
                } else {
                    let fns = prior_fns;
                    let bits = prior_bits;
                    let new_bit = bit.clone();
                    let p_hat = s.stat_query(&Query::indicator(1, move |x: &[&T]| {
                        new_bit(x[0]) == 1
                            && fns.iter().zip(&bits).all(|(f, &w)| f(x[0]) == w)
                    }))?;
                    let bias = clamp_unit(p_hat / &q_hat);
                    let u = Rat::new(BigInt::from(rng.next_u64()), BigInt::one() << 64);
                    u8::from(u < bias)
                };
                transcript.push(index, drawn);
                extractors[index].push(bit);
            }
            ExtractionStep::Output(v) => {
                if v != 1 && v != -1 {
                    return Err(Error::Invalid(format!("program output {v} is not ±1")));
                }
                let audit =
                    SimulationAudit { queries: s.query_count() - before, coin_fallbacks };
                return Ok((v, audit));
            }
        }
    }
}

fn clamp_unit(x: Rat) -> Rat {
    if x.is_negative() {
        Rat::zero()
    } else if x > Rat::one() {
        Rat::one()
    } else {
        x
    }
}

/// The simulation's output law plus tree-walk bookkeeping.
#[derive(Debug, Clone)]
pub struct SimulatedLaw {
    pub distribution: FiniteDistribution<i8>,
    pub coin_fallbacks: usize,
    pub worst_case_queries: usize,
}

/// The exact output law of `simulate_extraction_sq` under the exact-answer
/// policy, by walking the tree of coin outcomes: at each requested bit the
/// conditional bias (or the fair-coin fallback, on prefixes of probability
/// ≤ 2·tolerance) is computed in closed form and both outcomes are
/// explored with their exact weights.
pub fn simulated_output_distribution<T: Clone + Eq + Hash>(
    program: &ExtractionProgram<T>,
    d: &FiniteDistribution<T>,
    beta: &Rat,
) -> Result<SimulatedLaw> {
    if !beta.is_positive() {
        return Err(Error::Range("β must be positive".into()));
    }
    let tol = extraction_tolerance(beta, program.b(), program.n());
    let threshold = rint(2) * &tol;
    let mut acc: BTreeMap<i8, Rat> = BTreeMap::new();
    let mut fallbacks = 0usize;
    let mut worst = 0usize;
    struct Frame<T> {
        transcript: Transcript,
        extractors: Vec<Vec<Arc<dyn Fn(&T) -> u8 + Send + Sync>>>,
        mass: Rat,
        queries: usize,
    }
    let mut stack = vec![Frame {
        transcript: Transcript::new(program.n()),
        extractors: vec![Vec::new(); program.n()],
        mass: Rat::one(),
        queries: 0,
    }];
    while let Some(frame) = stack.pop() {
        match program.next(&frame.transcript) {
            ExtractionStep::Output(v) => {
                if v != 1 && v != -1 {
                    return Err(Error::Invalid(format!("program output {v} is not ±1")));
                }
                worst = worst.max(frame.queries);
                *acc.entry(v).or_insert_with(Rat::zero) += &frame.mass;
            }
            ExtractionStep::Extract { index, bit } => {
                if index >= program.n() {
                    return Err(Error::Range(format!("sample index {index} out of range")));
                }
                if frame.transcript.count(index) >= program.b() {
                    return Err(Error::BudgetExhausted(format!(
                        "sample {index} already gave {} bits",
                        program.b()
                    )));
                }
                let prior_fns = &frame.extractors[index];
                let prior_bits = frame.transcript.bits(index);
                let q_exact = if prior_bits.is_empty() {
                    Rat::one()
                } else {
                    let mut e = Rat::zero();
                    for (x, pr) in d.iter() {
                        if prior_fns.iter().zip(prior_bits).all(|(f, &w)| f(x) == w) {
                            e += pr;
                        }
                    }
                    e
                };
                let spent = frame.queries + if prior_bits.is_empty() { 1 } else { 2 };
                let bias = if q_exact <= threshold {
                    fallbacks += 1;
                    Rat::new(BigInt::one(), BigInt::from(2))
                } else {
                    let mut p_exact = Rat::zero();
                    for (x, pr) in d.iter() {
                        if bit(x) == 1
                            && prior_fns.iter().zip(prior_bits).all(|(f, &w)| f(x) == w)
                        {
                            p_exact += pr;
                        }
                    }
                    clamp_unit(p_exact / &q_exact)
                };
                for outcome in [1u8, 0u8] {
                    let weight = if outcome == 1 {
                        bias.clone()
                    } else {
                        Rat::one() - &bias
                    };
                    if weight.is_zero() {
                        continue;
                    }
                    let mut transcript = frame.transcript.clone();
                    transcript.push(index, outcome);
                    let mut extractors = frame.extractors.clone();
                    extractors[index].push(bit.clone());
                    stack.push(Frame {
                        transcript,
                        extractors,
                        mass: &frame.mass * weight,
                        queries: spent,
                    });
                }
            }
        }
    }
    let distribution = FiniteDistribution::new(acc.into_iter().collect())?;
    Ok(SimulatedLaw { distribution, coin_fallbacks: fallbacks, worst_case_queries: worst })
}

// ---------------------------------------------------------------------------
// Program catalog
// ---------------------------------------------------------------------------

/// Named example programs over u32 samples, also resolvable from
/// configuration files.
pub fn catalog_program(name: &str) -> Result<ExtractionProgram<u32>> {
    let low: Arc<dyn Fn(&u32) -> u8 + Send + Sync> = Arc::new(|x| (x & 1) as u8);
    let high: Arc<dyn Fn(&u32) -> u8 + Send + Sync> = Arc::new(|x| (x >> 1 & 1) as u8);
    match name {
        "constant" => ExtractionProgram::new(1, 0, |_| ExtractionStep::Output(1)),
        "and_low_bits" => ExtractionProgram::new(2, 1, move |t: &Transcript| match t.total() {
            0 => ExtractionStep::Extract { index: 0, bit: low.clone() },
            1 => ExtractionStep::Extract { index: 1, bit: low.clone() },
            _ => ExtractionStep::Output(if t.bits(0)[0] == 1 && t.bits(1)[0] == 1 {
                1
            } else {
                -1
            }),
        }),
        "parity_low_bits" => {
            ExtractionProgram::new(3, 1, move |t: &Transcript| match t.total() {
                i @ 0..=2 => ExtractionStep::Extract { index: i, bit: low.clone() },
                _ => {
                    let ones: u8 = (0..3).map(|i| t.bits(i)[0]).sum();
                    ExtractionStep::Output(if ones % 2 == 0 { 1 } else { -1 })
                }
            })
        }
        "adaptive_equal" => {
            ExtractionProgram::new(2, 2, move |t: &Transcript| match t.total() {
                0 => ExtractionStep::Extract { index: 0, bit: low.clone() },
                1 => ExtractionStep::Extract { index: 1, bit: low.clone() },
                2 if t.bits(0)[0] != t.bits(1)[0] => ExtractionStep::Output(-1),
                2 => ExtractionStep::Extract { index: 0, bit: high.clone() },
                3 => ExtractionStep::Extract { index: 1, bit: high.clone() },
                _ => ExtractionStep::Output(if t.bits(0)[1] == t.bits(1)[1] {
                    1
                } else {
                    -1
                }),
            })
        }
        other => Err(Error::Parse(format!("unknown program {other:?}"))),
    }
}

// ---------------------------------------------------------------------------
// Collision probability
// ---------------------------------------------------------------------------

/// Pr[(x₁, x₂) ~ D² collide] = Σ_x D(x)².
pub fn collision_exact<T: Clone + Eq + Hash>(d: &FiniteDistribution<T>) -> Rat {
    d.iter().map(|(_, pr)| pr * pr).sum()
}

/// Exact mean of D[s]² over all 2^|X| sign functions s: X → {±1}, which
/// equals the collision probability because cross terms cancel pairwise.
pub fn sign_function_mean_square<T: Clone + Eq + Hash>(d: &FiniteDistribution<T>) -> Result<Rat> {
    let n = d.len();
    if n > 12 {
        return Err(Error::GuardExceeded { needed: 1u128 << n, limit: 1 << 12 });
    }
    let probs: Vec<&Rat> = d.iter().map(|(_, pr)| pr).collect();
    let mut sum = Rat::zero();
    for mask in 0..1usize << n {
        let mut v = Rat::zero();
        for (i, pr) in probs.iter().enumerate() {
            if mask >> i & 1 == 1 {
                v += *pr;
            } else {
                v -= *pr;
            }
        }
        sum += &v * &v;
    }
    Ok(sum / pow2(n as i64))
}

/// The deterministic part of the estimator's error budget: with query
/// tolerance τ′ = τ/8, each answer square overshoots by at most
/// 2τ′ + τ′².
pub fn collision_envelope(tau: &Rat) -> Rat {
    let t = tau / rint(8);
    rint(2) * &t + &t * &t
}

/// Collision estimate with its audit trail.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CollisionEstimate {
    pub value: f64,
    pub mean_square: f64,
    pub tables: usize,
    pub queries: usize,
}

/// Estimates Σ_x D(x)² within τ with probability 1 − δ: draws
/// m = ⌈8·ln(2/δ)/τ²⌉ uniformly random sign tables over the domain,
/// queries each one, and returns the mean of the squared answers minus
/// the tolerance envelope. One query per table.
pub fn estimate_collision_sq<T, R>(
    s: &mut OracleSession<T>,
    tau: &Rat,
    delta: f64,
    rng: &mut R,
) -> Result<CollisionEstimate>
where
    T: Clone + Eq + Hash + Send + Sync + 'static,
    R: Rng,
{
    if s.arity() != 1 {
        return Err(Error::Shape(format!(
            "collision estimator needs a unary session, got arity {}",
            s.arity()
        )));
    }
    if !tau.is_positive() {
        return Err(Error::Range("τ must be positive".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Range(format!("δ = {delta} outside (0, 1)")));
    }
    let expected = tau / rint(8);
    if s.tolerance() != &expected {
        return Err(Error::Invalid(format!(
            "session tolerance {} but the estimator requires τ/8 = {}",
            rat_str(s.tolerance()),
            rat_str(&expected)
        )));
    }
    let domain: Vec<T> = s.distribution().support().to_vec();
    let tf = to_f64(tau);
    let m = (8.0 * (2.0 / delta).ln() / (tf * tf)).ceil().max(1.0) as usize;
    let before = s.query_count();
    let mut square_sum = Rat::zero();
    for _ in 0..m {
        let table: HashMap<T, i8> = domain
            .iter()
            .map(|x| (x.clone(), if rng.gen::<bool>() { 1 } else { -1 }))
            .collect();
        let q = Query::new(1, move |x: &[&T]| rint(table[x[0]] as i64));
        let u = s.stat_query(&q)?;
        square_sum += &u * &u;
    }
    let mean_square = to_f64(&(square_sum / rint(m as i64)));
    let value = mean_square - to_f64(&collision_envelope(tau));
    Ok(CollisionEstimate { value, mean_square, tables: m, queries: s.query_count() - before })
}

// ---------------------------------------------------------------------------
// Communication protocols
// ---------------------------------------------------------------------------

/// A public-coin k-party protocol with at most b broadcast bits per party.
/// Fixing the shared randomness to a seed yields a deterministic
/// bit-extraction program over the k inputs (one virtual sample per
/// party), which is how the protocol is both executed and simulated.
#[derive(Clone)]
pub struct ProtocolSpec<T> {
    k: usize,
    b: usize,
    make: Arc<dyn Fn(u64) -> ExtractionProgram<T> + Send + Sync>,
}

impl<T> ProtocolSpec<T> {
    pub fn new(
        k: usize,
        b: usize,
        make: impl Fn(u64) -> ExtractionProgram<T> + Send + Sync + 'static,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::Range("a protocol needs at least one party".into()));
        }
        Ok(ProtocolSpec { k, b, make: Arc::new(make) })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn b(&self) -> usize {
        self.b
    }

    /// The deterministic protocol with shared randomness fixed to `seed`.
    pub fn program(&self, seed: u64) -> ExtractionProgram<T> {
        (self.make)(seed)
    }
}

impl<T> std::fmt::Debug for ProtocolSpec<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ProtocolSpec(k={}, b={})", self.k, self.b)
    }
}

/// Majority vote of `reps` independent runs of the protocol, as a single
/// protocol with budget reps·b per party. The composed program replays
/// each inner run against its own slice of the transcript, so adaptive
/// inner protocols compose correctly.
pub fn amplify<T>(spec: &ProtocolSpec<T>, reps: usize) -> Result<ProtocolSpec<T>>
where
    T: 'static,
{
    if reps == 0 || reps % 2 == 0 {
        return Err(Error::Invalid(format!("majority needs an odd repetition count, got {reps}")));
    }
    let inner_make = spec.make.clone();
    let k = spec.k;
    let b = spec.b;
    ProtocolSpec::new(k, reps * b, move |master: u64| {
        let mut seeder = ChaCha12Rng::seed_from_u64(master);
        let programs: Vec<ExtractionProgram<T>> =
            (0..reps).map(|_| inner_make(seeder.next_u64())).collect();
        let step = move |t: &Transcript| -> ExtractionStep<T> {
            let n = t.n();
            let mut offsets = vec![0usize; n];
            let mut vote = 0i32;
            for program in &programs {
                let mut sliced = Transcript::new(n);
                let mut consumed = offsets.clone();
                loop {
                    match program.next(&sliced) {
                        ExtractionStep::Extract { index, bit } => {
                            if consumed[index] < t.count(index) {
                                sliced.push(index, t.bits(index)[consumed[index]]);
                                consumed[index] += 1;
                            } else {
                                // the next bit the composition still needs
                                return ExtractionStep::Extract { index, bit };
                            }
                        }
                        ExtractionStep::Output(v) => {
                            vote += v as i32;
                            offsets = consumed;
                            break;
                        }
                    }
                }
            }
            ExtractionStep::Output(if vote > 0 { 1 } else { -1 })
        };
        ExtractionProgram::new(k, reps * b, step).expect("amplified program shape")
    })
}

/// Odd repetition count driving the per-run failure probability of a
/// 2/3-correct protocol below τ/8: the smallest odd r ≥ 18·ln(8/τ).
pub fn majority_repetitions(tau: &Rat) -> usize {
    let raw = (18.0 * (8.0 / to_f64(tau)).ln()).ceil().max(1.0) as usize;
    if raw % 2 == 0 {
        raw + 1
    } else {
        raw
    }
}

/// Result of the protocol → estimate pipeline.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProtocolEstimate {
    pub value: f64,
    pub queries: usize,
    pub averaging_reps: usize,
    pub majority_reps: usize,
    pub coin_fallbacks: usize,
}

/// Estimates Dᵏ[q] within τ for a query the protocol computes with
/// success probability ≥ 2/3 on every input: amplifies the protocol by
/// majority vote, fixes fresh shared randomness per repetition, simulates
/// each run with unary queries at tolerance (τ/8)/(2^{b′+1}·k), and
/// averages ⌈8·ln(2/δ)/τ²⌉ simulated ±1 outputs.
pub fn protocol_to_sq_estimate<T, R>(
    spec: &ProtocolSpec<T>,
    q: &Query<T>,
    s: &mut OracleSession<T>,
    tau: &Rat,
    delta: f64,
    rng: &mut R,
) -> Result<ProtocolEstimate>
where
    T: Clone + Eq + Hash + Send + Sync + 'static,
    R: Rng,
{
    if q.arity() != spec.k() {
        return Err(Error::Shape(format!(
            "query arity {} for a {}-party protocol",
            q.arity(),
            spec.k()
        )));
    }
    if !tau.is_positive() {
        return Err(Error::Range("τ must be positive".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Range(format!("δ = {delta} outside (0, 1)")));
    }
    let reps = majority_repetitions(tau);
    let amplified = amplify(spec, reps)?;
    let beta = tau / rint(8);
    let expected = extraction_tolerance(&beta, amplified.b(), amplified.k());
    if s.tolerance() != &expected {
        return Err(Error::Invalid(format!(
            "session tolerance {} but the pipeline requires {}",
            rat_str(s.tolerance()),
            rat_str(&expected)
        )));
    }
    let tf = to_f64(tau);
    let m = (8.0 * (2.0 / delta).ln() / (tf * tf)).ceil().max(1.0) as usize;
    let before = s.query_count();
    let mut sum = 0i64;
    let mut coin_fallbacks = 0usize;
    for _ in 0..m {
        let program = amplified.program(rng.next_u64());
        let (out, audit) = simulate_extraction_sq(&program, s, &beta, rng)?;
        sum += out as i64;
        coin_fallbacks += audit.coin_fallbacks;
    }
    Ok(ProtocolEstimate {
        value: sum as f64 / m as f64,
        queries: s.query_count() - before,
        averaging_reps: m,
        majority_reps: reps,
        coin_fallbacks,
    })
}

/// Two-party equality: the shared randomness picks two random bit tables
/// over the domain, each party broadcasts both of its hash bits, and the
/// output is +1 exactly when all bits match. Distinct inputs collide with
/// probability 1/4, so one run succeeds with probability 3/4.
pub fn equality_protocol<T>(domain: Vec<T>) -> Result<ProtocolSpec<T>>
where
    T: Clone + Eq + Hash + Send + Sync + 'static,
{
    if domain.is_empty() {
        return Err(Error::Shape("empty domain".into()));
    }
    ProtocolSpec::new(2, 2, move |seed: u64| {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let tables: Vec<Arc<HashMap<T, u8>>> = (0..2)
            .map(|_| {
                Arc::new(
                    domain
                        .iter()
                        .map(|x| (x.clone(), u8::from(rng.gen::<bool>())))
                        .collect::<HashMap<T, u8>>(),
                )
            })
            .collect();
        let step = move |t: &Transcript| -> ExtractionStep<T> {
            let hash = |which: usize| {
                let table = tables[which].clone();
                let f: Arc<dyn Fn(&T) -> u8 + Send + Sync> =
                    Arc::new(move |x: &T| table[x]);
                f
            };
            match t.total() {
                0 => ExtractionStep::Extract { index: 0, bit: hash(0) },
                1 => ExtractionStep::Extract { index: 1, bit: hash(0) },
                2 => ExtractionStep::Extract { index: 0, bit: hash(1) },
                3 => ExtractionStep::Extract { index: 1, bit: hash(1) },
                _ => ExtractionStep::Output(
                    if t.bits(0)[0] == t.bits(1)[0] && t.bits(0)[1] == t.bits(1)[1] {
                        1
                    } else {
                        -1
                    },
                ),
            }
        };
        ExtractionProgram::new(2, 2, step).expect("equality program shape")
    })
}

// ---------------------------------------------------------------------------
