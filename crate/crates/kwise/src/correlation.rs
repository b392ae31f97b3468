//! Average-correlation calculators for the planted-hyperplane family: exact
//! pair correlations (closed form and brute-force enumeration), the moment
//! identities behind them, pair counts by intersection pattern, the average
//! correlation ρ, the discrimination bound κ̄₁ ≤ 4√ρ, and the query lower
//! bound (1−δ)√d − 1 that follows.
//!
//! Everything before the final square root is exact rational arithmetic; the
//! closed forms are cross-checked against enumeration in the tests, point by
//! point, so a slip in either path cannot hide.

use std::collections::HashSet;

use num::traits::{One, Signed, Zero};
use num::BigInt;
use serde::Serialize;

use crate::dist::{planted_hyperplane, LabeledDistribution, DEFAULT_ENUM_GUARD};
use crate::fp_linalg::is_prime;
use crate::rat::{rat, rat_str, rint, rpow, to_f64, Rat};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Distribution families
// ---------------------------------------------------------------------------

/// A finite family of labeled distributions with a prior over members.
///
/// The prior weights enter the average discrimination κ̄₁; the average
/// correlation ρ always averages uniformly over ordered member pairs.
#[derive(Debug, Clone)]
pub struct DistributionFamily {
    members: Vec<LabeledDistribution>,
    weights: Vec<Rat>,
}

impl DistributionFamily {
    pub fn new(members: Vec<LabeledDistribution>, weights: Vec<Rat>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Invalid("empty distribution family".into()));
        }
        if members.len() != weights.len() {
            return Err(Error::Shape(format!(
                "{} members but {} weights",
                members.len(),
                weights.len()
            )));
        }
        let mut total = Rat::zero();
        for w in &weights {
            if w.is_negative() {
                return Err(Error::Invalid("negative family weight".into()));
            }
            total += w;
        }
        if !total.is_one() {
            return Err(Error::Invalid(format!(
                "family weights sum to {}, not 1",
                rat_str(&total)
            )));
        }
        Ok(DistributionFamily { members, weights })
    }

    /// Uniform prior over the given members.
    pub fn uniform(members: Vec<LabeledDistribution>) -> Result<Self> {
        let n = members.len();
        if n == 0 {
            return Err(Error::Invalid("empty distribution family".into()));
        }
        let w = rat(1, n as i64);
        DistributionFamily::new(members, vec![w; n])
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[LabeledDistribution] {
        &self.members
    }

    pub fn weights(&self) -> &[Rat] {
        &self.weights
    }

    pub fn member(&self, i: usize) -> &LabeledDistribution {
        &self.members[i]
    }
}

/// How two hyperplanes relate: identical, parallel with no common point, or
/// meeting in a codimension-2 slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PairKind {
    Equal,
    ParallelDistinct,
    Intersecting,
}

/// Classifies the pair (a, a′) of hyperplane parameters. The hyperplane for
/// a = (w, b) is the graph z_ℓ = ⟨w, z₁..z_{ℓ−1}⟩ + b, so two parameters give
/// the same plane only when equal, and disjoint planes exactly when the
/// slopes agree but the offsets differ.
pub fn classify_pair(a: &[u32], a_prime: &[u32], p: u32) -> Result<PairKind> {
    if a.len() != a_prime.len() || a.is_empty() {
        return Err(Error::Shape(format!(
            "parameter lengths {} vs {}",
            a.len(),
            a_prime.len()
        )));
    }
    let l = a.len();
    let same_slope = (0..l - 1).all(|i| a[i] % p == a_prime[i] % p);
    if same_slope {
        if a[l - 1] % p == a_prime[l - 1] % p {
            Ok(PairKind::Equal)
        } else {
            Ok(PairKind::ParallelDistinct)
        }
    } else {
        Ok(PairKind::Intersecting)
    }
}

/// The full planted family {D_a : a ∈ F_p^ℓ} with a uniform prior, together
/// with the parameter vectors in enumeration order.
pub fn hyperplane_family(p: u32, l: usize) -> Result<(DistributionFamily, Vec<Vec<u32>>)> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if l == 0 {
        return Err(Error::Invalid("zero-dimensional hyperplane family".into()));
    }
    let count = (p as u128).checked_pow(l as u32).unwrap_or(u128::MAX);
    // each member also stores p^ℓ support points, so the family costs p^{2ℓ}
    if count.saturating_mul(count) > DEFAULT_ENUM_GUARD {
        return Err(Error::GuardExceeded {
            needed: count.saturating_mul(count),
            limit: DEFAULT_ENUM_GUARD,
        });
    }
    let mut params = Vec::with_capacity(count as usize);
    let mut members = Vec::with_capacity(count as usize);
    let mut a = vec![0u32; l];
    loop {
        params.push(a.clone());
        members.push(planted_hyperplane(&a, p)?);
        let mut i = l;
        loop {
            if i == 0 {
                let family = DistributionFamily::uniform(members)?;
                return Ok((family, params));
            }
            i -= 1;
            a[i] += 1;
            if a[i] < p {
                break;
            }
            a[i] = 0;
        }
    }
}

// ---------------------------------------------------------------------------
// Pair correlations
// ---------------------------------------------------------------------------

/// Exact D₀ᵏ[D̂·D̂′] by enumeration over support(d0)ᵏ, where
/// D̂(x) = Dᵏ(x)/D₀ᵏ(x) − 1 is the centered density ratio.
///
/// Both members must be supported inside support(d0); anything else makes
/// the ratio meaningless and is rejected.
pub fn pair_correlation_enumerated(
    da: &LabeledDistribution,
    da_prime: &LabeledDistribution,
    d0: &LabeledDistribution,
    k: usize,
    guard: u128,
) -> Result<Rat> {
    if k == 0 {
        return Err(Error::Invalid("pair correlation needs k ≥ 1".into()));
    }
    let ratio_a = density_ratios(da, d0)?;
    let ratio_b = density_ratios(da_prime, d0)?;
    // index odometer rather than for_each_tuple: the ratio lookups want
    // support indices, not points, and this keeps them O(1) per coordinate
    let mut acc = Rat::zero();
    let n = d0.len();
    let total = (n as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    if total > guard {
        return Err(Error::GuardExceeded { needed: total, limit: guard });
    }
    let mut idx = vec![0usize; k];
    loop {
        let mut mass = Rat::one();
        let mut prod_a = Rat::one();
        let mut prod_b = Rat::one();
        for &i in &idx {
            mass *= d0.prob(i);
            prod_a *= &ratio_a[i];
            prod_b *= &ratio_b[i];
        }
        acc += mass * (prod_a - Rat::one()) * (prod_b - Rat::one());
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

/// Per-point density ratios D(x)/D₀(x) aligned with d0's support order.
/// Errors if some mass of `d` sits outside support(d0).
fn density_ratios(d: &LabeledDistribution, d0: &LabeledDistribution) -> Result<Vec<Rat>> {
    for (pt, pr) in d.iter() {
        if !pr.is_zero() && d0.index_of(pt).is_none() {
            return Err(Error::Invalid(
                "family member puts mass outside the reference support".into(),
            ));
        }
    }
    let mut ratios = Vec::with_capacity(d0.len());
    for (pt, pr0) in d0.iter() {
        if pr0.is_zero() {
            return Err(Error::Invalid("reference distribution has a zero-mass support point".into()));
        }
        ratios.push(d.mass_of(pt) / pr0);
    }
    Ok(ratios)
}

/// Closed-form D₀ᵏ[D̂_a·D̂_{a′}] for planted hyperplanes, by case:
///
/// * equal planes:        (p²/(2(p−1)))ᵏ − 1
/// * parallel, disjoint:  ((1/2)·(1−2/p)/(1−1/p)²)ᵏ − 1
/// * intersecting:        0
///
/// Each case is the k-th power of the single-coordinate ratio moment,
/// recentered; the tests verify all three against enumeration on a grid.
pub fn pair_correlation_closed(
    a: &[u32],
    a_prime: &[u32],
    p: u32,
    l: usize,
    k: usize,
) -> Result<Rat> {
    let (_, pair) = intermediate_moments(a, a_prime, p, l, k)?;
    // D̂·D̂′ expands to the pair ratio moment minus 1: the single ratio
    // moments are both exactly 1 because each member is a distribution.
    let two_pl = rint(2) * rpow(&rint(p as i64), l as u64);
    let scale = rpow(&two_pl, 2 * k as u64);
    Ok(scale * pair - Rat::one())
}

/// The single and pair moments E_{D₀ᵏ}[D_aᵏ] and E_{D₀ᵏ}[D_aᵏ·D_{a′}ᵏ]
/// (densities integrated against the reference), in closed form:
///
/// * single: 1/(2ᵏ·p^{kℓ}) regardless of a
/// * pair, equal planes:  (1/2ᵏ)·(β²/p + (1−1/p)·α²)ᵏ
/// * pair, parallel:      (1/2ᵏ)·((1−2/p)·α²)ᵏ
/// * pair, intersecting:  (1/2ᵏ)·(β²/p² + (1−2/p+1/p²)·α²)ᵏ = 1/(2²ᵏ·p^{2kℓ})
///
/// with α = 1/(2(p^ℓ−p^{ℓ−1})) and β = 1/(2p^{ℓ−1}).
pub fn intermediate_moments(
    a: &[u32],
    a_prime: &[u32],
    p: u32,
    l: usize,
    k: usize,
) -> Result<(Rat, Rat)> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if a.len() != l || a_prime.len() != l || l == 0 {
        return Err(Error::Shape(format!(
            "parameters of length {} and {} in dimension {l}",
            a.len(),
            a_prime.len()
        )));
    }
    if k == 0 {
        return Err(Error::Invalid("moments need k ≥ 1".into()));
    }
    let pr = rint(p as i64);
    let alpha = crate::dist::planted_alpha(p, l);
    let beta = crate::dist::planted_beta(p, l);
    let one = Rat::one();
    let single_coord = rat(1, 2) / rpow(&pr, l as u64);
    let single = rpow(&single_coord, k as u64);
    let pair_coord = match classify_pair(a, a_prime, p)? {
        PairKind::Equal => {
            (&beta * &beta / &pr + (&one - rat(1, p as i64)) * &alpha * &alpha) / rint(2)
        }
        PairKind::ParallelDistinct => {
            ((&one - rat(2, p as i64)) * &alpha * &alpha) / rint(2)
        }
        PairKind::Intersecting => {
            let p2 = &pr * &pr;
            (&beta * &beta / &p2
                + (&one - rat(2, p as i64) + Rat::one() / &p2) * &alpha * &alpha)
                / rint(2)
        }
    };
    Ok((single, rpow(&pair_coord, k as u64)))
}

// ---------------------------------------------------------------------------
// Pair counts
// ---------------------------------------------------------------------------

/// How many ordered parameter pairs (a, a′) ∈ (F_p^ℓ)² fall in each
/// intersection pattern, and whether the closed counts were re-derived by
/// exhaustive point-set comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PairCounts {
    pub equal: u128,
    pub parallel_distinct: u128,
    pub intersecting: u128,
    /// true when the exhaustive cross-check ran; false when it was skipped
    /// because p^{2ℓ} exceeded the guard (the closed counts still stand).
    pub verified: bool,
}

/// Closed pair counts (p^ℓ, p^ℓ(p−1), p^{2ℓ}−p^{ℓ+1}), cross-checked by
/// enumerating every pair and comparing actual point sets when that is
/// affordable under `guard`.
pub fn hyperplane_pair_counts(p: u32, l: usize, guard: u128) -> Result<PairCounts> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if l == 0 {
        return Err(Error::Invalid("zero-dimensional hyperplane family".into()));
    }
    let pl = (p as u128).checked_pow(l as u32).ok_or(Error::Range("p^ℓ overflows".into()))?;
    let total = pl.checked_mul(pl).ok_or(Error::Range("p^{2ℓ} overflows".into()))?;
    let closed = PairCounts {
        equal: pl,
        parallel_distinct: pl * (p as u128 - 1),
        intersecting: total - pl * p as u128,
        verified: false,
    };
    if total > guard {
        return Ok(closed);
    }
    let params = all_params(p, l);
    let sets: Vec<HashSet<Vec<u32>>> = params.iter().map(|a| plane_points(a, p)).collect();
    let mut counts = [0u128; 3];
    for sa in &sets {
        for sb in &sets {
            if sa == sb {
                counts[0] += 1;
            } else if sa.is_disjoint(sb) {
                counts[1] += 1;
            } else {
                counts[2] += 1;
            }
        }
    }
    if counts != [closed.equal, closed.parallel_distinct, closed.intersecting] {
        return Err(Error::Invalid(format!(
            "pair-count closed forms disagree with enumeration: got {counts:?}"
        )));
    }
    Ok(PairCounts { verified: true, ..closed })
}

/// Every parameter vector in F_p^ℓ, lexicographic.
fn all_params(p: u32, l: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut a = vec![0u32; l];
    loop {
        out.push(a.clone());
        let mut i = l;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            a[i] += 1;
            if a[i] < p {
                break;
            }
            a[i] = 0;
        }
    }
}

/// The point set of the plane z_ℓ = ⟨w, x⟩ + b for a = (w, b).
fn plane_points(a: &[u32], p: u32) -> HashSet<Vec<u32>> {
    let l = a.len();
    let mut set = HashSet::new();
    let mut x = vec![0u32; l - 1];
    loop {
        let mut y = a[l - 1] % p;
        for i in 0..l - 1 {
            y = (y + a[i] * x[i]) % p;
        }
        let mut z = x.clone();
        z.push(y);
        set.insert(z);
        let mut i = l - 1;
        loop {
            if i == 0 {
                return set;
            }
            i -= 1;
            x[i] += 1;
            if x[i] < p {
                break;
            }
            x[i] = 0;
        }
    }
}

// ---------------------------------------------------------------------------
// Average correlation and discrimination
// ---------------------------------------------------------------------------

/// Which computation path `rho` takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhoMode {
    /// Enumerate every ordered pair's correlation over support(d0)ᵏ.
    Enumerated,
    /// Combine the closed pair correlations with the closed pair counts;
    /// valid only for the full planted-hyperplane family.
    Closed,
}

/// The average correlation ρ = (1/|𝒟|²)·Σ_{D,D′} |D₀ᵏ[D̂·D̂′]|, exactly.
///
/// The average is uniform over ordered pairs regardless of the family prior.
pub fn rho(
    family: &DistributionFamily,
    d0: &LabeledDistribution,
    k: usize,
    mode: RhoMode,
) -> Result<Rat> {
    match mode {
        RhoMode::Enumerated => {
            let n = family.len();
            let mut acc = Rat::zero();
            for i in 0..n {
                for j in 0..n {
                    acc += pair_correlation_enumerated(
                        family.member(i),
                        family.member(j),
                        d0,
                        k,
                        DEFAULT_ENUM_GUARD,
                    )?
                    .abs();
                }
            }
            Ok(acc / rint((n * n) as i64))
        }
        RhoMode::Closed => {
            let (p, l) = infer_field(d0)?;
            let expected = (p as u128).pow(l as u32);
            if family.len() as u128 != expected {
                return Err(Error::Invalid(format!(
                    "closed mode needs the full hyperplane family ({expected} members, got {})",
                    family.len()
                )));
            }
            hyperplane_rho_closed(p, l, k)
        }
    }
}

/// Closed-form ρ for the full planted family: pair counts weight the three
/// case values. Exact, and cheap even for p in the thousands.
pub fn hyperplane_rho_closed(p: u32, l: usize, k: usize) -> Result<Rat> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if l == 0 || k == 0 {
        return Err(Error::Invalid("need ℓ ≥ 1 and k ≥ 1".into()));
    }
    let counts = hyperplane_pair_counts(p, l, 0)?; // closed counts only
    let pr = rint(p as i64);
    // equal: (p²/(2(p−1)))ᵏ − 1
    let equal_base = &pr * &pr / (rint(2) * (&pr - Rat::one()));
    let equal_val = rpow(&equal_base, k as u64) - Rat::one();
    // parallel distinct: ((1/2)(1−2/p)/(1−1/p)²)ᵏ − 1
    let par_base = rat(1, 2) * (Rat::one() - rat(2, p as i64))
        / rpow(&(Rat::one() - rat(1, p as i64)), 2);
    let par_val = rpow(&par_base, k as u64) - Rat::one();
    let total = rpow(&pr, 2 * l as u64);
    let acc = Rat::from_integer(BigInt::from(counts.equal)) * equal_val.abs()
        + Rat::from_integer(BigInt::from(counts.parallel_distinct)) * par_val.abs();
    Ok(acc / total)
}

/// Reads (p, ℓ) off the uniform reference: ℓ from the point length, p from
/// the coordinate range, insisting the support is all of F_p^ℓ × {±1}.
fn infer_field(d0: &LabeledDistribution) -> Result<(u32, usize)> {
    let first = d0
        .support()
        .first()
        .ok_or_else(|| Error::Invalid("empty reference distribution".into()))?;
    let l = first.0.len();
    let mut max_coord = 0u32;
    for (pt, _) in d0.iter() {
        if pt.0.len() != l {
            return Err(Error::Shape("mixed point dimensions in reference".into()));
        }
        max_coord = max_coord.max(pt.0.iter().copied().max().unwrap_or(0));
    }
    let p = max_coord + 1;
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let expected = 2 * (p as u128).pow(l as u32);
    if d0.len() as u128 != expected {
        return Err(Error::Invalid(format!(
            "reference support has {} points; full field needs {expected}",
            d0.len()
        )));
    }
    Ok((p, l))
}

/// Exact average discrimination sup_φ E_{D∼μ} |Dᵏ[φ] − D₀ᵏ[φ]| over ±1
/// queries φ on support(d0)ᵏ, by brute force over all sign vectors.
///
/// The objective is a μ-average of absolute values of linear functions of φ,
/// hence convex on the cube [−1,1]^N — so the supremum over all bounded
/// queries is attained at a vertex and the vertex sweep below is exact, not
/// a heuristic. Guarded by N = |support(d0)|ᵏ ≤ 20.
pub fn kappa1_bar_bruteforce(
    family: &DistributionFamily,
    d0: &LabeledDistribution,
    k: usize,
) -> Result<Rat> {
    if k == 0 {
        return Err(Error::Invalid("discrimination needs k ≥ 1".into()));
    }
    let n = (d0.len() as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    if n > 20 {
        return Err(Error::GuardExceeded { needed: n, limit: 20 });
    }
    let n = n as usize;
    // diff[m][t] = D_mᵏ(x_t) − D₀ᵏ(x_t) over the tuple enumeration order
    let mut diffs: Vec<Vec<Rat>> = Vec::with_capacity(family.len());
    for member in family.members() {
        let ratios = density_ratios(member, d0)?;
        let mut row = Vec::with_capacity(n);
        collect_tuple_masses(d0, &ratios, k, &mut row)?;
        diffs.push(row);
    }
    // Gray-code sweep over sign vectors: flip one coordinate per step and
    // update each member's inner product ⟨φ, diff⟩ incrementally.
    let mut signs = vec![Rat::one(); n];
    let mut inner: Vec<Rat> = diffs.iter().map(|row| row.iter().sum()).collect();
    let weights = family.weights();
    let objective = |inner: &[Rat]| -> Rat {
        inner
            .iter()
            .zip(weights)
            .map(|(v, w)| v.abs() * w)
            .sum()
    };
    let mut best = objective(&inner);
    let steps = 1u64 << n;
    for step in 1..steps {
        let bit = step.trailing_zeros() as usize;
        let flip_to_minus = signs[bit].is_one();
        for (m, row) in diffs.iter().enumerate() {
            if flip_to_minus {
                inner[m] -= rint(2) * &row[bit];
            } else {
                inner[m] += rint(2) * &row[bit];
            }
        }
        signs[bit] = if flip_to_minus { -Rat::one() } else { Rat::one() };
        let val = objective(&inner);
        if val > best {
            best = val;
        }
    }
    Ok(best)
}

/// Fills `out` with (Dᵏ − D₀ᵏ) evaluated at every tuple of support(d0)ᵏ in
/// odometer order, where D's tuple density is the ratio product times d0's.
fn collect_tuple_masses(
    d0: &LabeledDistribution,
    ratios: &[Rat],
    k: usize,
    out: &mut Vec<Rat>,
) -> Result<()> {
    let n = d0.len();
    let mut idx = vec![0usize; k];
    loop {
        let mut mass0 = Rat::one();
        let mut prod = Rat::one();
        for &i in &idx {
            mass0 *= d0.prob(i);
            prod *= &ratios[i];
        }
        out.push(&mass0 * &prod - mass0);
        let mut j = k;
        loop {
            if j == 0 {
                return Ok(());
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

// ---------------------------------------------------------------------------
// Query lower bound
// ---------------------------------------------------------------------------

/// κ̄₁ bound, statistical dimension, and query lower bound for the planted
/// family at (p, ℓ, k): κ̄₁ ≤ 4√ρ, d = 1/(4√ρ), bound = (1−δ)√d − 1.
///
/// ρ is computed exactly; floats enter only at the final square roots.
pub fn sq_query_lower_bound(p: u32, l: usize, k: usize, delta: f64) -> Result<(f64, f64, f64)> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::Range(format!("δ = {delta} outside (0, 1/2)")));
    }
    let rho_exact = hyperplane_rho_closed(p, l, k)?;
    let kappa_bound = 4.0 * to_f64(&rho_exact).sqrt();
    if kappa_bound <= 0.0 {
        return Err(Error::Invalid("degenerate family: ρ = 0".into()));
    }
    let d = 1.0 / kappa_bound;
    let bound = (1.0 - delta) * d.sqrt() - 1.0;
    Ok((kappa_bound, d, bound))
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

/// One intersection pattern's contribution to ρ.
#[derive(Debug, Clone, Serialize)]
pub struct CaseCorrelation {
    pub kind: PairKind,
    pub count: u128,
    /// the signed pair correlation for this case, as "num/den"
    pub value: String,
}

/// The full lower-bound calculation for one (p, ℓ, k, δ): per-case pair
/// correlations with their multiplicities, ρ, and the derived bounds.
/// Rationals serialize as "num/den" strings.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationReport {
    pub p: u32,
    pub l: usize,
    pub k: usize,
    pub delta: f64,
    pub cases: Vec<CaseCorrelation>,
    pub rho: String,
    pub kappa1_bound: f64,
    pub dimension: f64,
    pub query_bound: f64,
}

/// Builds the closed-form report for the planted family.
pub fn correlation_report(p: u32, l: usize, k: usize, delta: f64) -> Result<CorrelationReport> {
    let counts = hyperplane_pair_counts(p, l, 0)?;
    let pr = rint(p as i64);
    let equal_base = &pr * &pr / (rint(2) * (&pr - Rat::one()));
    let equal_val = rpow(&equal_base, k as u64) - Rat::one();
    let par_base = rat(1, 2) * (Rat::one() - rat(2, p as i64))
        / rpow(&(Rat::one() - rat(1, p as i64)), 2);
    let par_val = rpow(&par_base, k as u64) - Rat::one();
    let cases = vec![
        CaseCorrelation {
            kind: PairKind::Equal,
            count: counts.equal,
            value: rat_str(&equal_val),
        },
        CaseCorrelation {
            kind: PairKind::ParallelDistinct,
            count: counts.parallel_distinct,
            value: rat_str(&par_val),
        },
        CaseCorrelation {
            kind: PairKind::Intersecting,
            count: counts.intersecting,
            value: rat_str(&Rat::zero()),
        },
    ];
    let rho_exact = hyperplane_rho_closed(p, l, k)?;
    let (kappa1_bound, dimension, query_bound) = sq_query_lower_bound(p, l, k, delta)?;
    Ok(CorrelationReport {
        p,
        l,
        k,
        delta,
        cases,
        rho: rat_str(&rho_exact),
        kappa1_bound,
        dimension,
        query_bound,
    })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
