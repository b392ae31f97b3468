//! Exact finite discrete distributions and k-ary query expectations.
//!
//! A distribution stores its support together with exact rational masses, so
//! every expectation, conditional, and density ratio below is computed
//! without rounding. Divergences are the only place a logarithm (and hence a
//! float) appears, and it is taken of an exactly-computed rational at the end.

use std::collections::HashMap;
use std::hash::Hash;
use std::sync::Arc;

use num::bigint::BigInt;
use num::traits::{One, Signed, Zero};

use crate::fp_linalg::hyperplane_indicator;
use crate::rat::{ln_rat, rat, to_f64, Rat};
use crate::{Error, Result};

/// Default cap on the number of terms a product-space enumeration may touch.
pub const DEFAULT_ENUM_GUARD: u128 = 10_000_000;

/// ±1 label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub fn value(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn from_value(v: i8) -> Result<Sign> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            _ => Err(Error::Invalid(format!("label must be ±1, got {v}"))),
        }
    }
}

/// A labeled example: a point of F_p^ℓ together with a ±1 label.
pub type LabeledPoint = (Vec<u32>, Sign);

/// Distribution over labeled examples.
pub type LabeledDistribution = FiniteDistribution<LabeledPoint>;

// ---------------------------------------------------------------------------
// FiniteDistribution
// ---------------------------------------------------------------------------

/// A probability distribution with finite support and exact rational masses.
///
/// Equality is point-set equality (support order does not matter), but
/// iteration, product enumeration, and inverse-CDF sampling all follow the
/// stored support order deterministically.
#[derive(Debug, Clone)]
pub struct FiniteDistribution<T> {
    support: Vec<T>,
    probs: Vec<Rat>,
    index: HashMap<T, usize>,
}

impl<T: Clone + Eq + Hash> FiniteDistribution<T> {
    pub fn new(pairs: Vec<(T, Rat)>) -> Result<Self> {
        let mut support = Vec::with_capacity(pairs.len());
        let mut probs = Vec::with_capacity(pairs.len());
        let mut index = HashMap::with_capacity(pairs.len());
        let mut total = Rat::zero();
        for (point, prob) in pairs {
            if prob.is_negative() {
                return Err(Error::Range("negative probability".into()));
            }
            if index.insert(point.clone(), support.len()).is_some() {
                return Err(Error::Invalid("duplicate support point".into()));
            }
            total += &prob;
            support.push(point);
            probs.push(prob);
        }
        if total != Rat::one() {
            return Err(Error::Range(format!(
                "probabilities sum to {}, not 1",
                crate::rat::rat_str(&total)
            )));
        }
        Ok(FiniteDistribution { support, probs, index })
    }

    pub fn uniform(points: Vec<T>) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::Invalid("uniform over empty set".into()));
        }
        let w = Rat::new(BigInt::one(), BigInt::from(n));
        Self::new(points.into_iter().map(|p| (p, w.clone())).collect())
    }

    pub fn point_mass(point: T) -> Self {
        Self::new(vec![(point, Rat::one())]).unwrap()
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn support(&self) -> &[T] {
        &self.support
    }

    pub fn prob(&self, i: usize) -> &Rat {
        &self.probs[i]
    }

    /// Mass of a point (zero if absent from the support).
    pub fn mass_of(&self, t: &T) -> Rat {
        match self.index.get(t) {
            Some(&i) => self.probs[i].clone(),
            None => Rat::zero(),
        }
    }

    pub fn index_of(&self, t: &T) -> Option<usize> {
        self.index.get(t).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, &Rat)> {
        self.support.iter().zip(self.probs.iter())
    }

    /// Pushforward along `f`, merging masses that land on the same point.
    pub fn push_forward<U: Clone + Eq + Hash>(
        &self,
        mut f: impl FnMut(&T) -> U,
    ) -> FiniteDistribution<U> {
        let mut order: Vec<U> = Vec::new();
        let mut acc: HashMap<U, Rat> = HashMap::new();
        for (t, pr) in self.iter() {
            let u = f(t);
            match acc.get_mut(&u) {
                Some(m) => *m += pr,
                None => {
                    order.push(u.clone());
                    acc.insert(u, pr.clone());
                }
            }
        }
        let pairs = order.into_iter().map(|u| {
            let m = acc.remove(&u).unwrap();
            (u, m)
        });
        FiniteDistribution::new(pairs.collect()).expect("pushforward preserves total mass")
    }

    /// The k-fold product distribution, points in support-lexicographic order.
    pub fn power(&self, k: usize) -> Result<FiniteDistribution<Vec<T>>> {
        let mut pairs = Vec::new();
        for_each_tuple(self, k, DEFAULT_ENUM_GUARD, |tuple, mass| {
            pairs.push((tuple.iter().map(|&t| t.clone()).collect::<Vec<T>>(), mass.clone()));
            Ok(())
        })?;
        FiniteDistribution::new(pairs)
    }

    /// One inverse-CDF draw over the stored support order.
    pub fn sample_one<R: rand::RngCore>(&self, rng: &mut R) -> T {
        let u = Rat::new(BigInt::from(rng.next_u64()), BigInt::one() << 64);
        let mut cum = Rat::zero();
        for (t, pr) in self.iter() {
            cum += pr;
            if u < cum {
                return t.clone();
            }
        }
        self.support.last().expect("nonempty support").clone()
    }

    /// `m` i.i.d. draws; deterministic given the generator state.
    pub fn sample<R: rand::RngCore>(&self, rng: &mut R, m: usize) -> Vec<T> {
        (0..m).map(|_| self.sample_one(rng)).collect()
    }
}

impl<T: Clone + Eq + Hash> PartialEq for FiniteDistribution<T> {
    fn eq(&self, other: &Self) -> bool {
        self.iter().all(|(t, pr)| other.mass_of(t) == *pr)
            && other.iter().all(|(t, pr)| self.mass_of(t) == *pr)
    }
}

impl<T: Clone + Eq + Hash> Eq for FiniteDistribution<T> {}

/// Bernoulli over {0, 1} with the given probability of 1.
pub fn bernoulli(prob_one: Rat) -> Result<FiniteDistribution<u32>> {
    if prob_one.is_negative() || prob_one > Rat::one() {
        return Err(Error::Range("Bernoulli parameter outside [0,1]".into()));
    }
    FiniteDistribution::new(vec![(0, Rat::one() - &prob_one), (1, prob_one)])
}

// ---------------------------------------------------------------------------
// Queries and product expectations
// ---------------------------------------------------------------------------

/// A k-ary query: a function from k-tuples of domain points into [−1, +1].
/// The range is enforced lazily wherever the query is evaluated.
#[derive(Clone)]
pub struct Query<T> {
    arity: usize,
    eval: Arc<dyn Fn(&[&T]) -> Rat + Send + Sync>,
}

impl<T> Query<T> {
    pub fn new(
        arity: usize,
        eval: impl Fn(&[&T]) -> Rat + Send + Sync + 'static,
    ) -> Self {
        Query { arity, eval: Arc::new(eval) }
    }

    /// {0,1}-valued indicator query.
    pub fn indicator(
        arity: usize,
        pred: impl Fn(&[&T]) -> bool + Send + Sync + 'static,
    ) -> Self {
        Query::new(arity, move |t| if pred(t) { Rat::one() } else { Rat::zero() })
    }

    /// ±1-valued predicate query.
    pub fn pm1(
        arity: usize,
        pred: impl Fn(&[&T]) -> bool + Send + Sync + 'static,
    ) -> Self {
        Query::new(arity, move |t| if pred(t) { Rat::one() } else { -Rat::one() })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn eval(&self, tuple: &[&T]) -> Rat {
        debug_assert_eq!(tuple.len(), self.arity);
        (self.eval)(tuple)
    }

    /// Range-checked evaluation.
    pub fn eval_checked(&self, tuple: &[&T]) -> Result<Rat> {
        let v = self.eval(tuple);
        if v.abs() > Rat::one() {
            return Err(Error::Range(format!(
                "query value {} outside [-1, 1]",
                crate::rat::rat_str(&v)
            )));
        }
        Ok(v)
    }
}

impl<T> std::fmt::Debug for Query<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Query(arity={})", self.arity)
    }
}

/// Visits every tuple of `support^k` with its exact product mass.
///
/// The visitor receives a reference tuple and the mass; exploration order is
/// lexicographic in support indices, with prefix products reused so the cost
/// per tuple is O(1) rational multiplications amortized.
pub fn for_each_tuple<T, F>(
    d: &FiniteDistribution<T>,
    k: usize,
    guard: u128,
    f: F,
) -> Result<()>
where
    T: Clone + Eq + Hash,
    F: FnMut(&[&T], &Rat) -> Result<()>,
{
    let dists: Vec<&FiniteDistribution<T>> = std::iter::repeat(d).take(k).collect();
    for_each_tuple_mixed(&dists, guard, f)
}

/// As [`for_each_tuple`] but with one (possibly different) distribution per
/// coordinate — the hybrid-argument enumerator.
pub fn for_each_tuple_mixed<T, F>(
    dists: &[&FiniteDistribution<T>],
    guard: u128,
    mut f: F,
) -> Result<()>
where
    T: Clone + Eq + Hash,
    F: FnMut(&[&T], &Rat) -> Result<()>,
{
    let k = dists.len();
    if k == 0 {
        return Err(Error::Invalid("zero-arity enumeration".into()));
    }
    let mut terms = 1u128;
    for d in dists {
        if d.is_empty() {
            return Err(Error::Invalid("empty distribution in product".into()));
        }
        terms = terms.saturating_mul(d.len() as u128);
    }
    if terms > guard {
        return Err(Error::GuardExceeded { needed: terms, limit: guard });
    }
    let mut idx = vec![0usize; k];
    // prefix[j] = product of masses of coordinates < j
    let mut prefix: Vec<Rat> = Vec::with_capacity(k + 1);
    prefix.push(Rat::one());
    for j in 0..k {
        let m = prefix[j].clone() * dists[j].prob(idx[j]);
        prefix.push(m);
    }
    loop {
        {
            let tuple: Vec<&T> = (0..k).map(|j| &dists[j].support()[idx[j]]).collect();
            f(&tuple, &prefix[k])?;
        }
        // odometer increment; recompute prefix products from the changed digit
        let mut j = k;
        loop {
            if j == 0 {
                return Ok(());
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < dists[j].len() {
                break;
            }
            idx[j] = 0;
        }
        for t in j..k {
            prefix[t + 1] = prefix[t].clone() * dists[t].prob(idx[t]);
        }
    }
}

/// Exact D^k[q] by full enumeration (guard: default 10^7 terms).
pub fn expectation_k<T: Clone + Eq + Hash>(
    d: &FiniteDistribution<T>,
    q: &Query<T>,
) -> Result<Rat> {
    expectation_k_guarded(d, q, DEFAULT_ENUM_GUARD)
}

pub fn expectation_k_guarded<T: Clone + Eq + Hash>(
    d: &FiniteDistribution<T>,
    q: &Query<T>,
    guard: u128,
) -> Result<Rat> {
    let mut acc = Rat::zero();
    for_each_tuple(d, q.arity(), guard, |tuple, mass| {
        if !mass.is_zero() {
            acc += q.eval_checked(tuple)? * mass;
        }
        Ok(())
    })?;
    Ok(acc)
}

/// Exact E[q] when coordinate j is drawn from `dists[j]` (mixed product).
pub fn expectation_mixed<T: Clone + Eq + Hash>(
    dists: &[&FiniteDistribution<T>],
    q: &Query<T>,
) -> Result<Rat> {
    if dists.len() != q.arity() {
        return Err(Error::Shape(format!(
            "{} coordinate distributions for arity-{} query",
            dists.len(),
            q.arity()
        )));
    }
    let mut acc = Rat::zero();
    for_each_tuple_mixed(dists, DEFAULT_ENUM_GUARD, |tuple, mass| {
        if !mass.is_zero() {
            acc += q.eval_checked(tuple)? * mass;
        }
        Ok(())
    })?;
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Planted and labeled distributions
// ---------------------------------------------------------------------------

/// The planted hyperplane distribution D_a over F_p^ℓ × {±1}: density
/// α = 1/(2(p^ℓ − p^{ℓ−1})) with label −1 off the hyperplane and
/// β = 1/(2 p^{ℓ−1}) with label +1 on it.
pub fn planted_hyperplane(a: &[u32], p: u32) -> Result<LabeledDistribution> {
    let l = a.len();
    if l == 0 {
        return Err(Error::Invalid("empty hyperplane parameter".into()));
    }
    if !crate::fp_linalg::is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let total = (p as u128).checked_pow(l as u32).unwrap_or(u128::MAX);
    if total > DEFAULT_ENUM_GUARD {
        return Err(Error::GuardExceeded { needed: total, limit: DEFAULT_ENUM_GUARD });
    }
    let on_count = BigInt::from(total as u64 / p as u64);
    let off_count = BigInt::from(total as u64) - &on_count;
    let alpha = Rat::new(BigInt::one(), BigInt::from(2) * off_count);
    let beta = Rat::new(BigInt::one(), BigInt::from(2) * on_count);
    let mut pairs = Vec::with_capacity(total as usize);
    let mut z = vec![0u32; l];
    loop {
        if hyperplane_indicator(a, &z, p)? == 1 {
            pairs.push(((z.clone(), Sign::Plus), beta.clone()));
        } else {
            pairs.push(((z.clone(), Sign::Minus), alpha.clone()));
        }
        let mut i = l;
        loop {
            if i == 0 {
                return FiniteDistribution::new(pairs);
            }
            i -= 1;
            z[i] += 1;
            if z[i] < p {
                break;
            }
            z[i] = 0;
        }
    }
}

/// α = 1/(2(p^ℓ − p^{ℓ−1})): the off-hyperplane density of D_a.
pub fn planted_alpha(p: u32, l: usize) -> Rat {
    let pl = BigInt::from(p).pow(l as u32);
    let pl1 = BigInt::from(p).pow(l as u32 - 1);
    Rat::new(BigInt::one(), BigInt::from(2) * (pl - pl1))
}

/// β = 1/(2 p^{ℓ−1}): the on-hyperplane density of D_a.
pub fn planted_beta(p: u32, l: usize) -> Rat {
    Rat::new(BigInt::one(), BigInt::from(2) * BigInt::from(p).pow(l as u32 - 1))
}

/// Labels each point of `marg` by the hyperplane indicator for `a`:
/// the distribution of (z, f_a(z)) with z ~ marg.
pub fn labeled_by_hyperplane(
    marg: &FiniteDistribution<Vec<u32>>,
    a: &[u32],
    p: u32,
) -> Result<LabeledDistribution> {
    let mut pairs = Vec::with_capacity(marg.len());
    for (z, pr) in marg.iter() {
        let s = Sign::from_value(hyperplane_indicator(a, z, p)?)?;
        pairs.push(((z.clone(), s), pr.clone()));
    }
    FiniteDistribution::new(pairs)
}

/// The uniform reference D_0 over F_p^ℓ × {±1}.
pub fn uniform_labeled(p: u32, l: usize) -> Result<LabeledDistribution> {
    let total = (p as u128).checked_pow(l as u32).unwrap_or(u128::MAX);
    if total * 2 > DEFAULT_ENUM_GUARD {
        return Err(Error::GuardExceeded { needed: total * 2, limit: DEFAULT_ENUM_GUARD });
    }
    let mut points = Vec::with_capacity(2 * total as usize);
    let mut z = vec![0u32; l];
    loop {
        points.push((z.clone(), Sign::Plus));
        points.push((z.clone(), Sign::Minus));
        let mut i = l;
        loop {
            if i == 0 {
                return FiniteDistribution::uniform(points);
            }
            i -= 1;
            z[i] += 1;
            if z[i] < p {
                break;
            }
            z[i] = 0;
        }
    }
}

/// Drops labels, merging masses per point.
pub fn marginal(ld: &LabeledDistribution) -> FiniteDistribution<Vec<u32>> {
    ld.push_forward(|(z, _)| z.clone())
}

/// Conditions on label +1 and lifts each point with an appended 1:
/// the distribution of (z₁,…,z_{k+1},1) given b = +1.
pub fn condition_positive(ld: &LabeledDistribution) -> Result<FiniteDistribution<Vec<u32>>> {
    let mut total = Rat::zero();
    for ((_, s), pr) in ld.iter() {
        if *s == Sign::Plus {
            total += pr;
        }
    }
    if total.is_zero() {
        return Err(Error::Invalid("zero positive mass; cannot condition on b = +1".into()));
    }
    let mut pairs = Vec::new();
    for ((z, s), pr) in ld.iter() {
        if *s == Sign::Plus && !pr.is_zero() {
            let mut lifted = z.clone();
            lifted.push(1);
            pairs.push((lifted, pr / &total));
        }
    }
    FiniteDistribution::new(pairs)
}

/// Exact Bayes error: Σ_z min(mass(z,+1), mass(z,−1)).
pub fn bayes_error(ld: &LabeledDistribution) -> Rat {
    let mut by_z: HashMap<&Vec<u32>, (Rat, Rat)> = HashMap::new();
    for ((z, s), pr) in ld.iter() {
        let e = by_z.entry(z).or_insert_with(|| (Rat::zero(), Rat::zero()));
        match s {
            Sign::Plus => e.0 += pr,
            Sign::Minus => e.1 += pr,
        }
    }
    let mut err = Rat::zero();
    for (_, (plus, minus)) in by_z {
        err += plus.min(minus);
    }
    err
}

// ---------------------------------------------------------------------------
// Divergences and flatness
// ---------------------------------------------------------------------------

/// Divergence selector. `ApproxMax(δ)` requires δ ∈ [0,1); `Renyi(α)`
/// requires α > 1 (exact when α is an integer, `f64` powers otherwise).
#[derive(Debug, Clone, PartialEq)]
pub enum Divergence {
    Max,
    ApproxMax(Rat),
    Renyi(Rat),
    Kl,
}

/// Largest density ratio d(x)/center(x) over the support of `d`, or `None`
/// if `d` puts mass outside the support of `center` (= infinite ratio).
pub fn max_density_ratio<T: Clone + Eq + Hash>(
    d: &FiniteDistribution<T>,
    center: &FiniteDistribution<T>,
) -> Option<Rat> {
    let mut best: Option<Rat> = None;
    for (t, pr) in d.iter() {
        if pr.is_zero() {
            continue;
        }
        let c = center.mass_of(t);
        if c.is_zero() {
            return None;
        }
        let ratio = pr / &c;
        if best.as_ref().map_or(true, |b| ratio > *b) {
            best = Some(ratio);
        }
    }
    Some(best.unwrap_or_else(Rat::one))
}

/// sup over events E of (d(E) − δ)/center(E), exactly, or `None` if infinite.
/// The optimum over a finite domain is attained on a superlevel set of the
/// density ratio, so ranking points by ratio and scanning prefixes is exact.
pub fn approx_max_ratio<T: Clone + Eq + Hash>(
    d: &FiniteDistribution<T>,
    center: &FiniteDistribution<T>,
    delta: &Rat,
) -> Result<Option<Rat>> {
    if delta.is_negative() || *delta >= Rat::one() {
        return Err(Error::Invalid("approx-max δ must lie in [0,1)".into()));
    }
    // Mass of d outside center's support comes "for free" in any event.
    let mut free = Rat::zero();
    let mut ranked: Vec<(Rat, Rat)> = Vec::new(); // (d-mass, center-mass), ratio-ranked
    for (t, pr) in d.iter() {
        if pr.is_zero() {
            continue;
        }
        let c = center.mass_of(t);
        if c.is_zero() {
            free += pr;
        } else {
            ranked.push((pr.clone(), c));
        }
    }
    if free > *delta {
        return Ok(None);
    }
    ranked.sort_by(|(d1, c1), (d2, c2)| (d2 * c1).cmp(&(d1 * c2))); // ratio descending
    let mut best: Option<Rat> = None;
    let mut dsum = free - delta;
    let mut csum = Rat::zero();
    for (dm, cm) in ranked {
        dsum += dm;
        csum += cm;
        let val = &dsum / &csum;
        if best.as_ref().map_or(true, |b| val > *b) {
            best = Some(val);
        }
    }
    match best {
        Some(b) if b.is_positive() => Ok(Some(b)),
        // No event with positive value and positive center mass exists only
        // when d ⊆ center-null set entirely, handled above; fall back to the
        // full-support event value.
        _ => Ok(best),
    }
}

/// Σ_x d(x)^α / center(x)^{α−1} for integer α ≥ 2 — the exact inner sum of
/// the Rényi divergence, exposed so the product rule can be tested exactly.
pub fn renyi_power_sum<T: Clone + Eq + Hash>(
    d: &FiniteDistribution<T>,
    center: &FiniteDistribution<T>,
    alpha: u64,
) -> Result<Option<Rat>> {
    if alpha < 2 {
        return Err(Error::Invalid("integer Rényi order must be ≥ 2".into()));
    }
    let mut acc = Rat::zero();
    for (t, pr) in d.iter() {
        if pr.is_zero() {
            continue;
        }
        let c = center.mass_of(t);
        if c.is_zero() {
            return Ok(None);
        }
        acc += crate::rat::rpow(pr, alpha) / crate::rat::rpow(&c, alpha - 1);
    }
    Ok(Some(acc))
}

/// Divergence of `d` from `center`, as an extended real (`f64::INFINITY` when
/// `d` escapes the support of `center`).
pub fn divergence<T: Clone + Eq + Hash>(
    d: &FiniteDistribution<T>,
    center: &FiniteDistribution<T>,
    kind: &Divergence,
) -> Result<f64> {
    match kind {
        Divergence::Max => Ok(match max_density_ratio(d, center) {
            None => f64::INFINITY,
            Some(r) => ln_rat(&r),
        }),
        Divergence::ApproxMax(delta) => Ok(match approx_max_ratio(d, center, delta)? {
            None => f64::INFINITY,
            Some(r) => {
                if r.is_positive() {
                    ln_rat(&r)
                } else {
                    f64::NEG_INFINITY
                }
            }
        }),
        Divergence::Renyi(alpha) => {
            if *alpha <= Rat::one() {
                return Err(Error::Invalid("Rényi order must exceed 1".into()));
            }
            let a = to_f64(alpha);
            if alpha.is_integer() {
                let n = alpha.to_integer();
                let n: u64 = n.try_into().map_err(|_| Error::Invalid("Rényi order too large".into()))?;
                match renyi_power_sum(d, center, n)? {
                    None => Ok(f64::INFINITY),
                    Some(s) => Ok(ln_rat(&s) / (a - 1.0)),
                }
            } else {
                // Non-integer order: exact ratios, f64 powers.
                let mut acc = 0.0f64;
                for (t, pr) in d.iter() {
                    if pr.is_zero() {
                        continue;
                    }
                    let c = center.mass_of(t);
                    if c.is_zero() {
                        return Ok(f64::INFINITY);
                    }
                    acc += to_f64(pr) * to_f64(&(pr / &c)).powf(a - 1.0);
                }
                Ok(acc.ln() / (a - 1.0))
            }
        }
        Divergence::Kl => {
            let mut acc = 0.0f64;
            for (t, pr) in d.iter() {
                if pr.is_zero() {
                    continue;
                }
                let c = center.mass_of(t);
                if c.is_zero() {
                    return Ok(f64::INFINITY);
                }
                acc += to_f64(pr) * ln_rat(&(pr / &c));
            }
            Ok(acc)
        }
    }
}

/// sup over the family of divergence(D, center, kind): the flatness radius
/// of the family at the given center.
pub fn flatness_radius<T: Clone + Eq + Hash>(
    family: &[FiniteDistribution<T>],
    center: &FiniteDistribution<T>,
    kind: &Divergence,
) -> Result<f64> {
    if family.is_empty() {
        return Err(Error::Invalid("empty family".into()));
    }
    let mut sup = f64::NEG_INFINITY;
    for d in family {
        sup = sup.max(divergence(d, center, kind)?);
    }
    Ok(sup)
}

/// Exact total variation distance.
pub fn tv_distance<T: Clone + Eq + Hash>(
    d1: &FiniteDistribution<T>,
    d2: &FiniteDistribution<T>,
) -> Rat {
    let mut acc = Rat::zero();
    for (t, pr) in d1.iter() {
        acc += (pr - d2.mass_of(t)).abs();
    }
    for (t, pr) in d2.iter() {
        if d1.index_of(t).is_none() {
            acc += pr.abs();
        }
    }
    acc / rat(2, 1)
}

// ---------------------------------------------------------------------------
// Fixture format
// ---------------------------------------------------------------------------
//
// One support point per line: comma-separated components, whitespace, then
// the mass as `numerator/denominator`. Labeled points append the ±1 label as
// the final component, e.g. `0,2,-1 1/12`. Blank lines and `#` comments are
// ignored.

pub fn format_point_fixture(d: &FiniteDistribution<Vec<u32>>) -> String {
    let mut out = String::new();
    for (z, pr) in d.iter() {
        let comps: Vec<String> = z.iter().map(u32::to_string).collect();
        out.push_str(&format!("{} {}\n", comps.join(","), crate::rat::rat_str(pr)));
    }
    out
}

pub fn parse_point_fixture(text: &str) -> Result<FiniteDistribution<Vec<u32>>> {
    let mut pairs = Vec::new();
    for line in fixture_lines(text) {
        let (point, pr) = split_fixture_line(line)?;
        let z = point
            .split(',')
            .map(|c| c.trim().parse::<u32>().map_err(|_| bad_point(line)))
            .collect::<Result<Vec<u32>>>()?;
        pairs.push((z, pr));
    }
    FiniteDistribution::new(pairs)
}

pub fn format_labeled_fixture(d: &LabeledDistribution) -> String {
    let mut out = String::new();
    for ((z, s), pr) in d.iter() {
        let mut comps: Vec<String> = z.iter().map(u32::to_string).collect();
        comps.push(format!("{:+}", s.value()));
        out.push_str(&format!("{} {}\n", comps.join(","), crate::rat::rat_str(pr)));
    }
    out
}

pub fn parse_labeled_fixture(text: &str) -> Result<LabeledDistribution> {
    let mut pairs = Vec::new();
    for line in fixture_lines(text) {
        let (point, pr) = split_fixture_line(line)?;
        let comps: Vec<&str> = point.split(',').collect();
        if comps.len() < 2 {
            return Err(bad_point(line));
        }
        let label: i8 = comps[comps.len() - 1].trim().parse().map_err(|_| bad_point(line))?;
        let z = comps[..comps.len() - 1]
            .iter()
            .map(|c| c.trim().parse::<u32>().map_err(|_| bad_point(line)))
            .collect::<Result<Vec<u32>>>()?;
        pairs.push(((z, Sign::from_value(label)?), pr));
    }
    FiniteDistribution::new(pairs)
}

fn fixture_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'))
}

fn split_fixture_line(line: &str) -> Result<(&str, Rat)> {
    let mut it = line.split_whitespace();
    let point = it.next().ok_or_else(|| bad_point(line))?;
    let pr = crate::rat::parse_rat(it.next().ok_or_else(|| bad_point(line))?)?;
    if it.next().is_some() {
        return Err(bad_point(line));
    }
    Ok((point, pr))
}

fn bad_point(line: &str) -> Error {
    Error::Parse(format!("bad fixture line {line:?}"))
}
