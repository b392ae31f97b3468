//! Planted constraint satisfaction and its reduction to DNF learning:
//! ±1 predicates with exact Fourier spectra, planted-assignment sample
//! distributions, the indicator-block encoding of index tuples, the DNF
//! that simulates a predicate under that encoding, and exhaustive
//! verification that the simulation is exact.
//!
//! Conventions (asserted at every boundary): predicate inputs and outputs
//! live in {±1}; parity and XOR are the ±1 *product*, so an odd number of
//! −1 inputs yields −1. Assignments are stored as bits with +1 ↔ 1. Indices
//! in tuples are 1-based.

use std::collections::HashSet;

use num::traits::{One, Zero};
use rand::Rng;
use serde::Serialize;

use crate::dist::{FiniteDistribution, LabeledDistribution, Sign, DEFAULT_ENUM_GUARD};
use crate::rat::{rat, rint, Rat};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Predicates and Fourier spectra
// ---------------------------------------------------------------------------

/// A predicate P: {±1}^t → {±1}, stored as its truth table. Entry `i` is
/// the value at the input whose j-th coordinate (1-based) is +1 exactly
/// when bit j−1 of `i` is set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Predicate {
    t: usize,
    table: Vec<i8>,
}

impl Predicate {
    pub fn new(t: usize, table: Vec<i8>) -> Result<Self> {
        if t == 0 || t > 20 {
            return Err(Error::Range(format!("arity {t} outside [1, 20]")));
        }
        if table.len() != 1 << t {
            return Err(Error::Shape(format!(
                "truth table has {} entries for arity {t}",
                table.len()
            )));
        }
        if table.iter().any(|&v| v != 1 && v != -1) {
            return Err(Error::Invalid("truth table entries must be ±1".into()));
        }
        Ok(Predicate { t, table })
    }

    pub fn from_fn(t: usize, f: impl Fn(&[i8]) -> i8) -> Result<Self> {
        if t == 0 || t > 20 {
            return Err(Error::Range(format!("arity {t} outside [1, 20]")));
        }
        let table = (0..1usize << t)
            .map(|i| {
                let signs: Vec<i8> =
                    (0..t).map(|j| if i >> j & 1 == 1 { 1 } else { -1 }).collect();
                f(&signs)
            })
            .collect();
        Predicate::new(t, table)
    }

    pub fn arity(&self) -> usize {
        self.t
    }

    pub fn table(&self) -> &[i8] {
        &self.table
    }

    /// Value at a ±1 input vector.
    pub fn eval(&self, signs: &[i8]) -> i8 {
        assert_eq!(signs.len(), self.t, "input length vs predicate arity");
        let mut idx = 0usize;
        for (j, &s) in signs.iter().enumerate() {
            debug_assert!(s == 1 || s == -1);
            if s == 1 {
                idx |= 1 << j;
            }
        }
        self.table[idx]
    }

    pub fn is_constant(&self) -> bool {
        self.table.iter().all(|&v| v == self.table[0])
    }
}

/// XOR on two ±1 inputs: the product, −1 iff exactly one input is −1.
pub fn xor2() -> Predicate {
    Predicate::from_fn(2, |x| x[0] * x[1]).unwrap()
}

/// AND on two ±1 inputs: +1 only at (+1, +1).
pub fn and2() -> Predicate {
    Predicate::from_fn(2, |x| if x[0] == 1 && x[1] == 1 { 1 } else { -1 }).unwrap()
}

/// OR on two ±1 inputs: −1 only at (−1, −1).
pub fn or2() -> Predicate {
    Predicate::from_fn(2, |x| if x[0] == 1 || x[1] == 1 { 1 } else { -1 }).unwrap()
}

/// Parity of t inputs as a ±1 product.
pub fn parity(t: usize) -> Result<Predicate> {
    Predicate::from_fn(t, |x| x.iter().product())
}

/// Majority of three ±1 inputs.
pub fn maj3() -> Predicate {
    Predicate::from_fn(3, |x| if x.iter().map(|&v| v as i32).sum::<i32>() > 0 { 1 } else { -1 })
        .unwrap()
}

/// The constant predicate.
pub fn constant(t: usize, value: i8) -> Result<Predicate> {
    if value != 1 && value != -1 {
        return Err(Error::Invalid("constant value must be ±1".into()));
    }
    Predicate::from_fn(t, |_| value)
}

/// Exact Fourier coefficients of a predicate, indexed by subset bitmask:
/// `coefficient(m)` is the mean of P(x)·Π_{j: bit j of m} x_j.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSpectrum {
    t: usize,
    coefficients: Vec<Rat>,
}

impl FourierSpectrum {
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn coefficient(&self, mask: usize) -> &Rat {
        &self.coefficients[mask]
    }

    pub fn coefficients(&self) -> &[Rat] {
        &self.coefficients
    }

    /// (mask, coefficient) over the nonzero part of the spectrum.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, &Rat)> {
        self.coefficients
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
    }

    /// Σ_S coefficient² — exactly 1 for any ±1-valued predicate.
    pub fn parseval_sum(&self) -> Rat {
        self.coefficients.iter().map(|c| c * c).sum()
    }
}

/// The character expansion of a predicate, computed by a fast transform
/// and returned as exact rationals.
pub fn fourier(p: &Predicate) -> Result<FourierSpectrum> {
    let t = p.arity();
    let n = 1usize << t;
    let mut w: Vec<i64> = p.table.iter().map(|&v| v as i64).collect();
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(2 * h) {
            for i in block..block + h {
                let (a, b) = (w[i], w[i + h]);
                w[i] = a + b;
                w[i + h] = a - b;
            }
        }
        h *= 2;
    }
    // the butterfly pairs characters with the set-bit convention
    // (−1)^{|S ∩ x|}; our inputs put −1 on *unset* bits, which flips the
    // sign once per element of S
    let coefficients = w
        .iter()
        .enumerate()
        .map(|(mask, &v)| {
            let sign = if (mask.count_ones() & 1) == 1 { -1 } else { 1 };
            rat(sign * v, n as i64)
        })
        .collect();
    Ok(FourierSpectrum { t, coefficients })
}

/// The two degree readings of a spectrum: the lowest degree carrying a
/// nonzero coefficient (zero for biased predicates) and the lowest
/// *positive* such degree (the one hardness statements use).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Complexity {
    pub r_literal: usize,
    pub r_positive: usize,
}

pub fn complexity(p: &Predicate) -> Result<Complexity> {
    if p.is_constant() {
        return Err(Error::Invalid(
            "constant predicate has no positive-degree coefficient".into(),
        ));
    }
    let spec = fourier(p)?;
    let mut r_literal = usize::MAX;
    let mut r_positive = usize::MAX;
    for (mask, _) in spec.nonzero() {
        let deg = mask.count_ones() as usize;
        r_literal = r_literal.min(deg);
        if deg >= 1 {
            r_positive = r_positive.min(deg);
        }
    }
    Ok(Complexity { r_literal, r_positive })
}

// ---------------------------------------------------------------------------
// Assignments and planted distributions
// ---------------------------------------------------------------------------

/// A planted assignment over n variables, stored as bits with +1 ↔ 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    bits: Vec<u8>,
}

impl Assignment {
    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::Invalid("assignment bits must be 0 or 1".into()));
        }
        if bits.is_empty() {
            return Err(Error::Shape("empty assignment".into()));
        }
        Ok(Assignment { bits })
    }

    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::Invalid("assignment signs must be ±1".into()));
        }
        Assignment::from_bits(signs.iter().map(|&s| u8::from(s == 1)).collect())
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Bit at 1-based position ℓ.
    pub fn bit(&self, l: usize) -> u8 {
        self.bits[l - 1]
    }

    /// Sign at 1-based position ℓ.
    pub fn sign(&self, l: usize) -> i8 {
        if self.bits[l - 1] == 1 {
            1
        } else {
            -1
        }
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }
}

/// All ordered t-tuples of distinct 1-based indices in [n].
fn distinct_tuples(n: usize, t: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut current: Vec<u32> = Vec::with_capacity(t);
    let mut used = vec![false; n + 1];
    fn rec(
        n: usize,
        t: usize,
        current: &mut Vec<u32>,
        used: &mut Vec<bool>,
        out: &mut Vec<Vec<u32>>,
    ) {
        if current.len() == t {
            out.push(current.clone());
            return;
        }
        for i in 1..=n {
            if !used[i] {
                used[i] = true;
                current.push(i as u32);
                rec(n, t, current, used, out);
                current.pop();
                used[i] = false;
            }
        }
    }
    rec(n, t, &mut current, &mut used, &mut out);
    out
}

fn falling_factorial(n: usize, t: usize) -> u128 {
    (0..t).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128))
}

/// The sample distribution of a planted instance: a uniform ordered
/// t-tuple of distinct indices, labeled by the predicate's value on the
/// assignment there — or, in null mode, by an independent fair coin.
pub fn planted_distribution(
    p: &Predicate,
    sigma: &Assignment,
    n: usize,
    null: bool,
) -> Result<LabeledDistribution> {
    let t = p.arity();
    if sigma.len() != n {
        return Err(Error::Shape(format!(
            "assignment length {} for n = {n}",
            sigma.len()
        )));
    }
    if n < t {
        return Err(Error::Range(format!("n = {n} below arity {t}")));
    }
    let count = falling_factorial(n, t);
    if count.saturating_mul(if null { 2 } else { 1 }) > DEFAULT_ENUM_GUARD {
        return Err(Error::GuardExceeded { needed: count, limit: DEFAULT_ENUM_GUARD });
    }
    let mass = Rat::one() / Rat::from_integer((count as i64).into());
    let mut pairs = Vec::new();
    for tuple in distinct_tuples(n, t) {
        if null {
            let half = &mass / rint(2);
            pairs.push(((tuple.clone(), Sign::Plus), half.clone()));
            pairs.push(((tuple, Sign::Minus), half));
        } else {
            let signs: Vec<i8> = tuple.iter().map(|&i| sigma.sign(i as usize)).collect();
            let label = Sign::from_value(p.eval(&signs))?;
            pairs.push(((tuple, label), mass.clone()));
        }
    }
    FiniteDistribution::new(pairs)
}

/// A planted instance bundled with its exact sample distribution.
#[derive(Debug, Clone)]
pub struct PlantedInstance {
    pub predicate: Predicate,
    pub n: usize,
    pub sigma: Assignment,
    pub distribution: LabeledDistribution,
}

impl PlantedInstance {
    pub fn new(predicate: Predicate, sigma: Assignment, n: usize) -> Result<Self> {
        let distribution = planted_distribution(&predicate, &sigma, n, false)?;
        Ok(PlantedInstance { predicate, n, sigma, distribution })
    }
}

// ---------------------------------------------------------------------------
// Tuple encoding and DNF construction
// ---------------------------------------------------------------------------

/// Concatenated indicator blocks: a t·n bit vector whose (j, ℓ) entry
/// (position n(j−1)+ℓ, both 1-based) is 1 exactly when i_j = ℓ.
pub fn encode_tuple(tuple: &[u32], n: usize) -> Result<Vec<u8>> {
    let t = tuple.len();
    let mut seen = HashSet::with_capacity(t);
    let mut out = vec![0u8; t * n];
    for (j, &i) in tuple.iter().enumerate() {
        if i == 0 || i as usize > n {
            return Err(Error::Range(format!("index {i} outside [1, {n}]")));
        }
        if !seen.insert(i) {
            return Err(Error::Invalid(format!("repeated index {i} in tuple")));
        }
        out[n * j + (i as usize - 1)] = 1;
    }
    Ok(out)
}

/// A disjunction of conjunctions over t·n Boolean variables. Literals are
/// signed 1-based variable indices: +v requires the variable to be 1, −v
/// requires 0. The empty formula is identically −1; an empty term is
/// identically satisfied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DNFFormula {
    pub num_vars: usize,
    pub terms: Vec<Vec<i64>>,
}

impl DNFFormula {
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// ±1 value on a bit vector.
    pub fn eval(&self, x: &[u8]) -> i8 {
        assert_eq!(x.len(), self.num_vars, "input length vs variable count");
        for term in &self.terms {
            let sat = term.iter().all(|&lit| {
                let v = x[lit.unsigned_abs() as usize - 1];
                if lit > 0 {
                    v == 1
                } else {
                    v == 0
                }
            });
            if sat {
                return 1;
            }
        }
        -1
    }

    /// A copy with one literal's polarity flipped — for checking that the
    /// exhaustive verification actually has teeth.
    pub fn flip_literal(&self, term: usize, literal: usize) -> Result<DNFFormula> {
        let mut out = self.clone();
        let lit = out
            .terms
            .get_mut(term)
            .and_then(|t| t.get_mut(literal))
            .ok_or_else(|| Error::Range(format!("no literal ({term}, {literal})")))?;
        *lit = -*lit;
        Ok(out)
    }
}

/// The DNF that reproduces `p` on the planted assignment `sigma` through
/// the indicator encoding. The j-th predicate input equals +1 exactly when
/// block j avoids every 0-position of sigma, so each satisfying pattern of
/// `p` becomes one all-negative conjunction; there are at most 2^t.
pub fn build_dnf(p: &Predicate, sigma: &Assignment, n: usize) -> Result<DNFFormula> {
    let t = p.arity();
    if sigma.len() != n {
        return Err(Error::Shape(format!(
            "assignment length {} for n = {n}",
            sigma.len()
        )));
    }
    let mut terms = Vec::new();
    for (idx, &value) in p.table.iter().enumerate() {
        if value != 1 {
            continue;
        }
        let mut term: Vec<i64> = Vec::new();
        for j in 0..t {
            let want_plus = idx >> j & 1 == 1;
            for l in 1..=n {
                let blocks = if want_plus { sigma.bit(l) == 0 } else { sigma.bit(l) == 1 };
                if blocks {
                    term.push(-((n * j + l) as i64));
                }
            }
        }
        term.sort_unstable();
        terms.push(term);
    }
    terms.sort();
    terms.dedup();
    Ok(DNFFormula { num_vars: t * n, terms })
}

// ---------------------------------------------------------------------------
// Reduction verification
// ---------------------------------------------------------------------------

/// One disagreement between the predicate and the DNF simulation.
#[derive(Debug, Clone, Serialize)]
pub struct ReductionViolation {
    pub tuple: Vec<u32>,
    pub predicate_value: i8,
    pub dnf_value: i8,
}

/// Outcome of checking the simulation identity on every distinct tuple.
#[derive(Debug, Clone, Serialize)]
pub struct ReductionReport {
    pub t: usize,
    pub n: usize,
    pub checked_tuples: usize,
    pub term_count: usize,
    pub violations: Vec<ReductionViolation>,
}

impl ReductionReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// All tuples on which `dnf` disagrees with the predicate through the
/// encoding.
pub fn reduction_violations(
    p: &Predicate,
    sigma: &Assignment,
    n: usize,
    dnf: &DNFFormula,
) -> Result<Vec<ReductionViolation>> {
    let mut violations = Vec::new();
    for tuple in distinct_tuples(n, p.arity()) {
        let signs: Vec<i8> = tuple.iter().map(|&i| sigma.sign(i as usize)).collect();
        let predicate_value = p.eval(&signs);
        let dnf_value = dnf.eval(&encode_tuple(&tuple, n)?);
        if predicate_value != dnf_value {
            violations.push(ReductionViolation { tuple, predicate_value, dnf_value });
        }
    }
    Ok(violations)
}

/// Builds the DNF for (p, sigma, n) and checks the simulation identity on
/// every distinct tuple. Exhaustive by design, so the grid is kept small.
pub fn verify_reduction(p: &Predicate, sigma: &Assignment, n: usize) -> Result<ReductionReport> {
    let t = p.arity();
    if n > 8 || t > 3 {
        return Err(Error::GuardExceeded {
            needed: falling_factorial(n, t),
            limit: falling_factorial(8, 3),
        });
    }
    if sigma.len() != n {
        return Err(Error::Shape(format!(
            "assignment length {} for n = {n}",
            sigma.len()
        )));
    }
    if n < t {
        return Err(Error::Range(format!("n = {n} below arity {t}")));
    }
    let dnf = build_dnf(p, sigma, n)?;
    let violations = reduction_violations(p, sigma, n, &dnf)?;
    Ok(ReductionReport {
        t,
        n,
        checked_tuples: falling_factorial(n, t) as usize,
        term_count: dnf.term_count(),
        violations,
    })
}

// ---------------------------------------------------------------------------
// Stated lower-bound arithmetic
// ---------------------------------------------------------------------------

/// The concrete numbers a hardness statement instantiates to: the query
/// arity k = n^{1−α}, the tolerance (2/n^α)^{r/2}·k/4, and the query-count
/// exponent n^{1−α}. Arithmetic only — no experiment is run at this scale.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LowerBoundNumbers {
    pub t: usize,
    pub r: usize,
    pub n: u64,
    pub alpha: f64,
    pub k: f64,
    pub tolerance: f64,
    pub query_exponent: f64,
}

pub fn lower_bound_numbers(t: usize, r: usize, n: u64, alpha: f64) -> Result<LowerBoundNumbers> {
    if n == 0 {
        return Err(Error::Range("n must be positive".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Range(format!("α = {alpha} outside (0, 1)")));
    }
    let nf = n as f64;
    let k = nf.powf(1.0 - alpha);
    let tolerance = (2.0 / nf.powf(alpha)).powf(r as f64 / 2.0) * k / 4.0;
    Ok(LowerBoundNumbers { t, r, n, alpha, k, tolerance, query_exponent: k })
}

// ---------------------------------------------------------------------------
// Instance files
// ---------------------------------------------------------------------------

/// A planted instance plus drawn samples, as written to disk.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceFile {
    pub predicate: Predicate,
    pub sigma: Assignment,
    pub n: usize,
    pub samples: Vec<(Vec<u32>, Sign)>,
}

/// Header `t=.. n=.. sigma=<bits> table=<hex>` (hex mask of +1 rows, low
/// bit = row 0), then one `i₁ … i_t label` line per sample.
pub fn format_instance(file: &InstanceFile) -> String {
    let t = file.predicate.arity();
    let sigma: String = file.sigma.bits().iter().map(|b| char::from(b'0' + b)).collect();
    let digits = (1usize << t).div_ceil(4).max(1);
    let mut hex = String::with_capacity(digits);
    for d in (0..digits).rev() {
        let mut nibble = 0u8;
        for b in 0..4 {
            let row = 4 * d + b;
            if row < file.predicate.table().len() && file.predicate.table()[row] == 1 {
                nibble |= 1 << b;
            }
        }
        hex.push(char::from_digit(nibble as u32, 16).unwrap());
    }
    let mut out = format!("t={t} n={} sigma={sigma} table={hex}\n", file.n);
    for (tuple, label) in &file.samples {
        let idx: Vec<String> = tuple.iter().map(|i| i.to_string()).collect();
        out.push_str(&format!("{} {}\n", idx.join(" "), label.value()));
    }
    out
}

pub fn parse_instance(text: &str) -> Result<InstanceFile> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty instance file".into()))?;
    let mut t = None;
    let mut n = None;
    let mut sigma = None;
    let mut hex = None;
    for field in header.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad header field {field:?}")))?;
        match key {
            "t" => t = Some(value.parse::<usize>().map_err(|_| bad(field))?),
            "n" => n = Some(value.parse::<usize>().map_err(|_| bad(field))?),
            "sigma" => sigma = Some(value.to_string()),
            "table" => hex = Some(value.to_string()),
            _ => return Err(Error::Parse(format!("unknown header key {key:?}"))),
        }
    }
    let (t, n, sigma, hex) = match (t, n, sigma, hex) {
        (Some(t), Some(n), Some(s), Some(h)) => (t, n, s, h),
        _ => return Err(Error::Parse("header needs t, n, sigma, table".into())),
    };
    let bits: Vec<u8> = sigma
        .chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(Error::Parse(format!("bad sigma character {c:?}"))),
        })
        .collect::<Result<_>>()?;
    if bits.len() != n {
        return Err(Error::Parse(format!("sigma has {} bits for n = {n}", bits.len())));
    }
    let rows = 1usize
        .checked_shl(t as u32)
        .filter(|_| t <= 20)
        .ok_or_else(|| Error::Parse(format!("arity {t} too large")))?;
    let mut table = vec![-1i8; rows];
    let digits: Vec<u32> = hex
        .chars()
        .map(|c| c.to_digit(16).ok_or_else(|| Error::Parse(format!("bad hex digit {c:?}"))))
        .collect::<Result<_>>()?;
    for (d, &nibble) in digits.iter().rev().enumerate() {
        for b in 0..4 {
            let row = 4 * d + b;
            if nibble >> b & 1 == 1 {
                if row >= rows {
                    return Err(Error::Parse("truth table wider than 2^t".into()));
                }
                table[row] = 1;
            }
        }
    }
    let predicate = Predicate::new(t, table)?;
    let sigma = Assignment::from_bits(bits)?;
    let mut samples = Vec::new();
    for line in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != t + 1 {
            return Err(Error::Parse(format!(
                "sample line {line:?} has {} fields, expected {}",
                fields.len(),
                t + 1
            )));
        }
        let tuple: Vec<u32> = fields[..t]
            .iter()
            .map(|f| f.parse::<u32>().map_err(|_| bad(f)))
            .collect::<Result<_>>()?;
        encode_tuple(&tuple, n)?;
        let label = match fields[t] {
            "1" | "+1" => Sign::Plus,
            "-1" => Sign::Minus,
            other => return Err(Error::Parse(format!("bad label {other:?}"))),
        };
        samples.push((tuple, label));
    }
    Ok(InstanceFile { predicate, sigma, n, samples })
}

fn bad(field: &str) -> Error {
    Error::Parse(format!("bad numeric field {field:?}"))
}

/// Draws m samples from a planted (or null) distribution for file export.
pub fn draw_samples<R: Rng>(
    dist: &LabeledDistribution,
    m: usize,
    rng: &mut R,
) -> Vec<(Vec<u32>, Sign)> {
    (0..m).map(|_| dist.sample_one(rng)).collect()
}

// ---------------------------------------------------------------------------
