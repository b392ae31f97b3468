//! Workbench acceptance checks. Each test pins one end-to-end guarantee and
//! prints a single `[criterion N] PASS/FAIL` line (visible with
//! `--nocapture`) before asserting. Criterion 4's tightness claim is
//! reported but not asserted: its exact law is computed here and the
//! claimed probability bound does not hold for it, so the line records
//! FAIL while the machinery itself is still verified strictly.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use num::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use kwise::comm::{
    catalog_program, collision_exact, estimate_collision_sq, extraction_output_distribution,
    sign_function_mean_square, simulated_output_distribution,
};
use kwise::correlation::{
    classify_pair, hyperplane_family, hyperplane_pair_counts, hyperplane_rho_closed,
    intermediate_moments, kappa1_bar_bruteforce, pair_correlation_closed,
    pair_correlation_enumerated, rho, sq_query_lower_bound, PairKind, RhoMode,
};
use kwise::csp_dnf::{
    and2, build_dnf, complexity, maj3, or2, parity, reduction_violations, verify_reduction,
    xor2, Assignment, Predicate,
};
use kwise::dist::{
    bernoulli, expectation_k, labeled_by_hyperplane, max_density_ratio, planted_hyperplane,
    tv_distance, uniform_labeled, FiniteDistribution, LabeledDistribution, LabeledPoint, Query,
};
use kwise::fp_linalg::{encoded_len, hyperplane_indicator, FpMatrix};
use kwise::learner::{
    hypothesis_error, learn, rank_le_prob, structure_witness, LearnerParams, StructureOutcome,
};
use kwise::oracle::{ExtremalRule, OraclePolicy, OracleSession};
use kwise::rat::{rat, rat_str, rint, rpow, to_f64, Rat};
use kwise::reduction::{
    budget_envelope, estimate_kwise_mw, hybrid_gaps, hybrid_values, unary_distinguisher,
    witness_probability, Decision, ReductionParams,
};

// ---------------------------------------------------------------------------
// Harness helpers
// ---------------------------------------------------------------------------

fn verdict(criterion: usize, pass: bool, detail: &str) {
    println!(
        "[criterion {criterion}] {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

/// Runs `count` jobs across the available cores, results in index order.
fn run_parallel<T: Send>(count: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(count.max(1));
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<T>>> = (0..count).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= count {
                    break;
                }
                let out = f(i);
                *slots[i].lock().expect("slot") = Some(out);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("slot").expect("job ran"))
        .collect()
}

fn all_points(p: u32, l: usize) -> Vec<Vec<u32>> {
    let mut pts = Vec::new();
    let mut z = vec![0u32; l];
    loop {
        pts.push(z.clone());
        let mut i = l;
        loop {
            if i == 0 {
                return pts;
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

fn weighted_dist<T: Clone + Eq + std::hash::Hash>(
    pts: Vec<T>,
    rng: &mut ChaCha12Rng,
) -> FiniteDistribution<T> {
    let weights: Vec<i64> = (0..pts.len()).map(|_| rng.gen_range(1..7)).collect();
    let total: i64 = weights.iter().sum();
    FiniteDistribution::new(
        pts.into_iter()
            .zip(weights)
            .map(|(t, w)| (t, rat(w, total)))
            .collect(),
    )
    .expect("positive weights")
}

// ---------------------------------------------------------------------------
// Criterion 1: the learner on planted hyperplane labelings
// ---------------------------------------------------------------------------

/// Marginal styles cycled over trials; styles 1 and 2 pin the degenerate
/// supports (a single point, an affine line).
fn learn_instance(
    style: usize,
    p: u32,
    l: usize,
    rng: &mut ChaCha12Rng,
) -> (FiniteDistribution<Vec<u32>>, Vec<u32>) {
    let a: Vec<u32> = (0..l).map(|_| rng.gen_range(0..p)).collect();
    let all = all_points(p, l);
    let marg = match style % 5 {
        0 => FiniteDistribution::uniform(all).expect("nonempty"),
        1 => {
            let ix = rng.gen_range(0..all.len());
            FiniteDistribution::point_mass(all[ix].clone())
        }
        2 => {
            let u: Vec<u32> = (0..l).map(|_| rng.gen_range(0..p)).collect();
            let mut v = vec![0u32; l];
            while v.iter().all(|&x| x == 0) {
                v = (0..l).map(|_| rng.gen_range(0..p)).collect();
            }
            let mut pts: Vec<Vec<u32>> = (0..p)
                .map(|t| (0..l).map(|i| (u[i] + t * v[i]) % p).collect())
                .collect();
            pts.sort();
            pts.dedup();
            weighted_dist(pts, rng)
        }
        3 => {
            let pts: Vec<Vec<u32>> = all
                .into_iter()
                .filter(|z| hyperplane_indicator(&a, z, p).expect("lengths") == 1)
                .collect();
            FiniteDistribution::uniform(pts).expect("planes are nonempty")
        }
        _ => {
            let pts: Vec<Vec<u32>> = all.into_iter().filter(|_| rng.gen_range(0..3) > 0).collect();
            let pts = if pts.is_empty() { vec![vec![0; l]] } else { pts };
            weighted_dist(pts, rng)
        }
    };
    (marg, a)
}

#[test]
fn criterion_01_learner_error_budget_one_sided() {
    let eps = rat(1, 8);
    let settings = [(3u32, 1usize), (5, 1), (2, 2)];
    let mut issues: Vec<String> = Vec::new();
    let mut total_runs = 0usize;

    for (si, &(p, k)) in settings.iter().enumerate() {
        let lp = LearnerParams::new(k, p, eps.clone()).expect("valid parameters");
        let tau = lp.schedule().tau;
        let budget = 2 + (k + 1) + encoded_len(p, k, k + 1);
        let field = all_points(p, k + 1);

        let outcomes = run_parallel(20, |t| {
            let mut rng =
                ChaCha12Rng::seed_from_u64(0xAC01_0000 + ((si as u64) << 32) + t as u64);
            let (marg, a) = learn_instance(t, p, k + 1, &mut rng);
            let ld = labeled_by_hyperplane(&marg, &a, p).expect("labeling");
            let mut bad: Vec<String> = Vec::new();
            for pol in 0..4usize {
                let policy = match pol {
                    0 => OraclePolicy::Exact,
                    1 => OraclePolicy::Extremal(ExtremalRule::Plus),
                    2 => OraclePolicy::Extremal(ExtremalRule::Minus),
                    _ => OraclePolicy::Perturb {
                        seed: 0x5EED_0000 + ((si as u64) << 24) + ((t as u64) << 4) + pol as u64,
                    },
                };
                let mut session = OracleSession::stat(ld.clone(), k + 1, tau.clone(), policy)
                    .expect("session");
                let out = match learn(&mut session, &lp) {
                    Ok(o) => o,
                    Err(e) => {
                        bad.push(format!("p={p} k={k} trial={t} policy={pol}: learn failed: {e}"));
                        continue;
                    }
                };
                if out.queries > budget {
                    bad.push(format!(
                        "p={p} k={k} trial={t} policy={pol}: {} queries over budget {budget}",
                        out.queries
                    ));
                }
                let err = hypothesis_error(&out.hypothesis, &marg, &a, p).expect("error");
                if err > eps {
                    bad.push(format!(
                        "p={p} k={k} trial={t} policy={pol}: error {} > 1/8",
                        rat_str(&err)
                    ));
                }
                for z in &field {
                    if out.hypothesis.classify(z) == 1
                        && hyperplane_indicator(&a, z, p).expect("lengths") != 1
                    {
                        bad.push(format!(
                            "p={p} k={k} trial={t} policy={pol}: positive prediction off the plane at {z:?}"
                        ));
                        break;
                    }
                }
            }
            bad
        });
        total_runs += 20 * 4;
        issues.extend(outcomes.into_iter().flatten());
    }

    let pass = issues.is_empty();
    verdict(
        1,
        pass,
        &format!(
            "exact error ≤ 1/8, one-sided predictions, queries within budget on {total_runs} runs \
             over (p,k) ∈ {{(3,1),(5,1),(2,2)}} × 4 oracle policies"
        ),
    );
    assert!(pass, "{issues:?}");
}

// ---------------------------------------------------------------------------
// Criterion 2: closed pair correlations and moments across the grid
// ---------------------------------------------------------------------------

/// Independent enumeration of the reference moments: odometer over
/// support(d0)^k, accumulating ∏d0·∏D_a and ∏d0·∏D_a·∏D_{a'}.
fn enumerated_moments(
    da: &LabeledDistribution,
    db: &LabeledDistribution,
    d0: &LabeledDistribution,
    k: usize,
) -> (Rat, Rat) {
    let wa: Vec<Rat> = d0.support().iter().map(|x| da.mass_of(x)).collect();
    let wb: Vec<Rat> = d0.support().iter().map(|x| db.mass_of(x)).collect();
    let n = d0.len();
    let mut idx = vec![0usize; k];
    let mut single = Rat::zero();
    let mut pair = Rat::zero();
    loop {
        let mut mass = Rat::one();
        let mut pa = Rat::one();
        let mut pb = Rat::one();
        for &i in &idx {
            mass *= d0.prob(i);
            pa *= &wa[i];
            pb *= &wb[i];
        }
        let first = &mass * &pa;
        single += &first;
        pair += first * pb;
        let mut j = k;
        loop {
            if j == 0 {
                return (single, pair);
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

fn pick_spread(bucket: &[(usize, usize)], want: usize) -> Vec<(usize, usize)> {
    if bucket.is_empty() {
        return Vec::new();
    }
    let want = want.min(bucket.len());
    (0..want)
        .map(|i| bucket[i * bucket.len() / want])
        .collect()
}

#[test]
fn criterion_02_pair_correlation_matches_enumeration() {
    let mut cells = Vec::new();
    for &p in &[2u32, 3, 5] {
        for &l in &[2usize, 3] {
            for &k in &[1usize, 2] {
                cells.push((p, l, k));
            }
        }
    }

    let issues: Vec<String> = run_parallel(cells.len(), |ci| {
        let (p, l, k) = cells[ci];
        let mut bad = Vec::new();
        let counts = hyperplane_pair_counts(p, l, 1 << 30).expect("counts");
        let pl = (p as u128).pow(l as u32);
        if !counts.verified {
            bad.push(format!("({p},{l}): closed pair counts not re-derived"));
        }
        if counts.equal != pl
            || counts.parallel_distinct != pl * (p as u128 - 1)
            || counts.intersecting != pl * pl - pl * p as u128
        {
            bad.push(format!("({p},{l}): pair counts off: {counts:?}"));
        }

        let (family, params) = hyperplane_family(p, l).expect("family");
        let d0 = uniform_labeled(p, l).expect("reference");
        let mut buckets: [Vec<(usize, usize)>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        for i in 0..params.len() {
            for j in 0..params.len() {
                let slot = match classify_pair(&params[i], &params[j], p).expect("classify") {
                    PairKind::Equal => 0,
                    PairKind::ParallelDistinct => 1,
                    PairKind::Intersecting => 2,
                };
                buckets[slot].push((i, j));
            }
        }
        for bucket in &buckets {
            for &(i, j) in &pick_spread(bucket, 4) {
                let closed =
                    pair_correlation_closed(&params[i], &params[j], p, l, k).expect("closed");
                let en = pair_correlation_enumerated(
                    family.member(i),
                    family.member(j),
                    &d0,
                    k,
                    1 << 20,
                )
                .expect("enumerated");
                if closed != en {
                    bad.push(format!(
                        "({p},{l},{k}) pair {:?}/{:?}: closed {} ≠ enumerated {}",
                        params[i],
                        params[j],
                        rat_str(&closed),
                        rat_str(&en)
                    ));
                }
                let (single_c, pair_c) =
                    intermediate_moments(&params[i], &params[j], p, l, k).expect("moments");
                let (single_e, pair_e) =
                    enumerated_moments(family.member(i), family.member(j), &d0, k);
                if single_c != single_e || pair_c != pair_e {
                    bad.push(format!(
                        "({p},{l},{k}) pair {:?}/{:?}: moments closed ({}, {}) ≠ enumerated ({}, {})",
                        params[i],
                        params[j],
                        rat_str(&single_c),
                        rat_str(&pair_c),
                        rat_str(&single_e),
                        rat_str(&pair_e)
                    ));
                }
            }
        }
        bad
    })
    .into_iter()
    .flatten()
    .collect();

    let pass = issues.is_empty();
    verdict(
        2,
        pass,
        "closed pair correlations, moments, and pair counts equal exhaustive enumeration on \
         p ∈ {2,3,5}, ℓ ∈ {2,3}, k ∈ {1,2}",
    );
    assert!(pass, "{issues:?}");
}

// ---------------------------------------------------------------------------
// Criterion 3: correlation dimension and query scaling
// ---------------------------------------------------------------------------

#[test]
fn criterion_03_dimension_bounds_and_scaling() {
    let mut issues: Vec<String> = Vec::new();

    for &(p, l, k) in &[(2u32, 2usize, 1usize), (3, 2, 1), (2, 2, 2)] {
        let (family, _) = hyperplane_family(p, l).expect("family");
        let d0 = uniform_labeled(p, l).expect("reference");
        let en = rho(&family, &d0, k, RhoMode::Enumerated).expect("enumerated ρ");
        let cl = rho(&family, &d0, k, RhoMode::Closed).expect("closed ρ");
        if en != cl {
            issues.push(format!(
                "ρ({p},{l},{k}): enumerated {} ≠ closed {}",
                rat_str(&en),
                rat_str(&cl)
            ));
        }
    }

    // discrimination bound at (2,2,1): κ̄₁ ≤ 4√ρ, squared to stay exact
    {
        let (family, _) = hyperplane_family(2, 2).expect("family");
        let d0 = uniform_labeled(2, 2).expect("reference");
        let kappa = kappa1_bar_bruteforce(&family, &d0, 1).expect("κ̄₁");
        let r = hyperplane_rho_closed(2, 2, 1).expect("ρ");
        if &kappa * &kappa > rint(16) * &r {
            issues.push(format!(
                "κ̄₁ = {} exceeds 4√ρ with ρ = {}",
                rat_str(&kappa),
                rat_str(&r)
            ));
        }
    }

    // ρ·p^{ℓ−k} stays bounded by 4 far beyond the enumerable range
    for &p in &[11u32, 101, 1009] {
        let r = hyperplane_rho_closed(p, 2, 1).expect("ρ");
        if r * rint(p as i64) > rint(4) {
            issues.push(format!("ρ·p exceeds 4 at p = {p}"));
        }
    }

    // dimension grows like √p: least-squares slope of ln d against ln p
    let primes = [11u32, 31, 101, 311, 1009];
    let pts: Vec<(f64, f64)> = primes
        .iter()
        .map(|&p| {
            let (_, d, _) = sq_query_lower_bound(p, 2, 1, 0.05).expect("bound");
            ((p as f64).ln(), d.ln())
        })
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|(x, _)| x).sum::<f64>() / n;
    let my = pts.iter().map(|(_, y)| y).sum::<f64>() / n;
    let slope = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum::<f64>();
    if (slope - 0.5).abs() > 0.05 {
        issues.push(format!("log-log dimension slope {slope:.4} outside 0.50 ± 0.05"));
    }

    let pass = issues.is_empty();
    verdict(
        3,
        pass,
        &format!(
            "ρ enumerated = closed, κ̄₁ ≤ 4√ρ, ρ·p ≤ 4 up to p = 1009, dimension slope {slope:.3}"
        ),
    );
    assert!(pass, "{issues:?}");
}

// ---------------------------------------------------------------------------
// Criterion 4: structure witnesses, and the tightness construction's law
// ---------------------------------------------------------------------------

/// A homogenized point: z with a trailing 1, as the row distribution of the
/// sampled linear systems produces them.
fn slice_point(z: &[u32]) -> Vec<u32> {
    let mut v = z.to_vec();
    v.push(1);
    v
}

/// Query distribution over slice points whose span has dimension exactly i
/// (an affine set of dimension i−1), with an optional outlier that bumps
/// the span dimension by one.
fn concentrated_slice_query(
    p: u32,
    l: usize,
    i: usize,
    outlier: bool,
    rng: &mut ChaCha12Rng,
) -> FiniteDistribution<Vec<u32>> {
    let z0: Vec<u32> = (0..l).map(|_| rng.gen_range(0..p)).collect();
    let dirs: Vec<Vec<u32>> = loop {
        let cand: Vec<Vec<u32>> = (0..i - 1)
            .map(|_| (0..l).map(|_| rng.gen_range(0..p)).collect())
            .collect();
        if i == 1 || FpMatrix::from_rows(p, &cand).expect("rows").rank() == i - 1 {
            break cand;
        }
    };
    // the affine set z0 + span(dirs), by coefficient odometer
    let mut affine: Vec<Vec<u32>> = Vec::new();
    let mut coeff = vec![0u32; i - 1];
    loop {
        let mut pt = z0.clone();
        for (c, dir) in coeff.iter().zip(&dirs) {
            for (x, y) in pt.iter_mut().zip(dir) {
                *x = (*x + c * y) % p;
            }
        }
        affine.push(pt);
        let mut j = i - 1;
        let mut done = false;
        loop {
            if j == 0 {
                done = true;
                break;
            }
            j -= 1;
            coeff[j] += 1;
            if coeff[j] < p {
                break;
            }
            coeff[j] = 0;
        }
        if done {
            break;
        }
    }
    affine.sort();
    affine.dedup();
    let mut pts: Vec<Vec<u32>> = Vec::new();
    while pts.len() < affine.len().min(4) {
        let cand = slice_point(&affine[rng.gen_range(0..affine.len())]);
        if !pts.contains(&cand) {
            pts.push(cand);
        }
    }
    if outlier {
        loop {
            let cand: Vec<u32> = (0..l).map(|_| rng.gen_range(0..p)).collect();
            if !affine.contains(&cand) {
                pts.push(slice_point(&cand));
                break;
            }
        }
    }
    weighted_dist(pts, rng)
}

#[test]
fn criterion_04_structure_witness_and_tightness_law() {
    // (a) witness search on 100 row-distribution instances: points carry a
    // trailing 1, as the sampled linear systems do
    let settings = [(2u32, 1usize), (2, 2), (3, 1), (3, 2)];
    let per_trial: Vec<Vec<String>> = run_parallel(100, |t| {
        let (p, k) = settings[t / 25];
        let l = k + 1;
        let mut rng = ChaCha12Rng::seed_from_u64(0xD1A6_0000 + t as u64);
        let i = 1 + t % k;
        let q = if t % 2 == 0 {
            concentrated_slice_query(p, l, i, t % 4 == 2, &mut rng)
        } else {
            let all = all_points(p, l);
            let m = rng.gen_range(2..=5.min(all.len()));
            let mut pts = Vec::new();
            while pts.len() < m {
                let cand = slice_point(&all[rng.gen_range(0..all.len())]);
                if !pts.contains(&cand) {
                    pts.push(cand);
                }
            }
            weighted_dist(pts, &mut rng)
        };
        let prob = rank_le_prob(&q, p, k + 1, i, 1 << 22).expect("rank law");
        let xi = Rat::one() - &prob;
        match structure_witness(&q, p, i, &xi, k, 1 << 22) {
            Ok(StructureOutcome::Witness { subspace, miss }) => {
                let mut bad = Vec::new();
                if subspace.dim() > i {
                    bad.push(format!("trial {t}: witness dimension {} > {i}", subspace.dim()));
                }
                let mut captured = Rat::zero();
                for (x, m) in q.iter() {
                    if subspace.contains(x) {
                        captured += m;
                    }
                }
                if Rat::one() - captured != miss {
                    bad.push(format!("trial {t}: reported miss {} disagrees", rat_str(&miss)));
                }
                if rpow(&miss, k as u64) > xi {
                    bad.push(format!(
                        "trial {t}: miss^k = {} exceeds ξ = {}",
                        rat_str(&rpow(&miss, k as u64)),
                        rat_str(&xi)
                    ));
                }
                bad
            }
            other => vec![format!("trial {t}: no witness ({other:?}) at ξ = {}", rat_str(&xi))],
        }
    });
    let witness_hits = per_trial.iter().filter(|v| v.is_empty()).count();
    let issues: Vec<String> = per_trial.into_iter().flatten().collect();
    let witnesses_ok = issues.is_empty();

    // (b) the skewed-basis construction: mass 1−α on e₁ and α/(k−1) on each
    // other basis vector of F₂^k, k = 10, α = 1/5. The span dimension of
    // k i.i.d. draws is the number of distinct basis vectors drawn, so its
    // law is an occupancy chain computed here exactly.
    let k = 10usize;
    let mut dp: HashMap<(u8, u8), Rat> = HashMap::new();
    dp.insert((0, 0), Rat::one());
    for _ in 0..k {
        let mut next: HashMap<(u8, u8), Rat> = HashMap::new();
        for ((e1, j), m) in &dp {
            let mut add = |key: (u8, u8), v: Rat| {
                *next.entry(key).or_insert_with(Rat::zero) += v;
            };
            add((1, *j), m * rat(4, 5));
            if *j > 0 {
                add((*e1, *j), m * rat(*j as i64, 45));
            }
            if (*j as usize) < k - 1 {
                add((*e1, *j + 1), m * rat((k - 1 - *j as usize) as i64, 45));
            }
        }
        dp = next;
    }
    let exact_le4: Rat = dp
        .iter()
        .filter(|((e1, j), _)| e1 + j <= 4)
        .map(|(_, m)| m.clone())
        .sum();
    let exact = to_f64(&exact_le4);

    // Monte Carlo of the same law through the actual rank computation
    let mut pairs: Vec<(Vec<u32>, Rat)> = Vec::new();
    for b in 0..k {
        let mut e = vec![0u32; k];
        e[b] = 1;
        pairs.push((e, if b == 0 { rat(4, 5) } else { rat(1, 45) }));
    }
    let skewed = FiniteDistribution::new(pairs).expect("masses sum to one");
    let mut rng = ChaCha12Rng::seed_from_u64(0x7160_0001);
    let trials = 10_000usize;
    let mut hits = 0usize;
    for _ in 0..trials {
        let rows: Vec<Vec<u32>> = (0..k).map(|_| skewed.sample_one(&mut rng)).collect();
        if FpMatrix::from_rows(2, &rows).expect("rows").rank() <= 4 {
            hits += 1;
        }
    }
    let freq = hits as f64 / trials as f64;
    let sigma = (exact * (1.0 - exact) / trials as f64).sqrt();
    let mc_consistent = (freq - exact).abs() <= 3.0 * sigma;
    let target = 1.0 - (-(k as f64)).exp();
    let claim_holds = exact >= target - 3.0 * sigma;

    verdict(
        4,
        witnesses_ok && mc_consistent && claim_holds,
        &format!(
            "witness search {witness_hits}/100; tightness claim does not hold: span-dimension \
             ≤ 4 has exact probability {exact:.4} (simulated {freq:.4}), below the claimed \
             {target:.5}"
        ),
    );
    assert!(witnesses_ok, "{issues:?}");
    assert!(
        mc_consistent,
        "simulated frequency {freq} drifts from the exact law {exact} (σ = {sigma})"
    );
    // claim_holds is reported, not asserted: the exact law itself shows the
    // claimed probability bound is unattainable for this construction.
}

// ---------------------------------------------------------------------------
// Criterion 5: hybrid telescoping and the witness floor
// ---------------------------------------------------------------------------

#[test]
fn criterion_05_hybrid_identities_and_witness_floor() {
    let floor_checked = AtomicUsize::new(0);
    let issues: Vec<String> = run_parallel(1000, |t| {
        let mut rng = ChaCha12Rng::seed_from_u64(0x11BD_0000 + t as u64);
        let k = 1 + t % 3;
        let m = 2 + (t / 3) % 3;
        let mut points: Vec<u32> = Vec::new();
        while points.len() < m {
            let cand = rng.gen_range(0..8u32);
            if !points.contains(&cand) {
                points.push(cand);
            }
        }
        let d0 = weighted_dist(points.clone(), &mut rng);
        let sub = 1 + rng.gen_range(0..m);
        let d = weighted_dist(points[..sub].to_vec(), &mut rng);

        let mut table: HashMap<Vec<u32>, Rat> = HashMap::new();
        let mut idx = vec![0usize; k];
        'outer: loop {
            let key: Vec<u32> = idx.iter().map(|&i| points[i]).collect();
            table.insert(key, rat(rng.gen_range(-8..=8), 8));
            let mut j = k;
            loop {
                if j == 0 {
                    break 'outer;
                }
                j -= 1;
                idx[j] += 1;
                if idx[j] < m {
                    break;
                }
                idx[j] = 0;
            }
        }
        let q = Query::new(k, move |tup: &[&u32]| {
            let key: Vec<u32> = tup.iter().map(|x| **x).collect();
            table.get(&key).cloned().expect("total table")
        });

        let mut bad = Vec::new();
        let hv = hybrid_values(&d, &d0, &q).expect("hybrids");
        if hv[0] != expectation_k(&d0, &q).expect("H₀") {
            bad.push(format!("trial {t}: H₀ is not the reference expectation"));
        }
        if hv[k] != expectation_k(&d, &q).expect("H_k") {
            bad.push(format!("trial {t}: H_k is not the member expectation"));
        }
        let gaps = hybrid_gaps(&d, &d0, &q).expect("gaps");
        for i in 0..k {
            if gaps[i] != (&hv[i + 1] - &hv[i]).abs() {
                bad.push(format!("trial {t}: gap {i} disagrees with its hybrid step"));
            }
        }
        let total = (&hv[k] - &hv[0]).abs();
        let max_gap = gaps.iter().cloned().max().unwrap_or_else(Rat::zero);
        if max_gap * rint(k as i64) < total {
            bad.push(format!("trial {t}: no hybrid step carries a 1/k share of the gap"));
        }

        // witness floor, enumerated exactly on the small instances
        if t < 120 && k <= 2 && !total.is_zero() {
            floor_checked.fetch_add(1, Ordering::Relaxed);
            let gamma = max_density_ratio(&d, &d0).expect("nested supports");
            let threshold = &total / rint(4 * k as i64);
            let wp = witness_probability(&q, &d, &d0, &d0, &threshold, 1 << 22)
                .expect("witness probability");
            let floor = &total / (rint(4 * k as i64) * rpow(&gamma, k as u64 - 1));
            if wp < floor {
                bad.push(format!(
                    "trial {t}: witness probability {} under the floor {}",
                    rat_str(&wp),
                    rat_str(&floor)
                ));
            }
        }
        bad
    })
    .into_iter()
    .flatten()
    .collect();

    let floors = floor_checked.load(Ordering::Relaxed);
    let pass = issues.is_empty() && floors >= 60;
    verdict(
        5,
        pass,
        &format!(
            "hybrid endpoints, per-step gaps, and the 1/k pigeonhole hold on 1000 instances; \
             witness floor τ/(4k·γ^(k−1)) verified exactly on {floors}"
        ),
    );
    assert!(pass, "{issues:?} (floors checked: {floors})");
}

// ---------------------------------------------------------------------------
// Criterion 6: flat-distribution decision completeness and soundness
// ---------------------------------------------------------------------------

#[test]
fn criterion_06_flat_decision_completeness_soundness() {
    let rp = ReductionParams::new(2, rint(1), rint(2), 0.05).expect("parameters");
    let q_prime_independent = (12.0 * 2.0 * 2.0 * (1.0_f64 / 0.05).ln()).ceil() as usize;
    let d0 = FiniteDistribution::uniform(vec![0u32, 1]).expect("two points");
    let member = FiniteDistribution::point_mass(0u32);
    let q = Query::pm1(2, |t: &[&u32]| t.iter().all(|x| **x == 0));
    let mut issues: Vec<String> = Vec::new();

    if rp.q_prime() != q_prime_independent {
        issues.push(format!(
            "query count {} disagrees with ⌈12kγ^(k−1)ln(1/δ)/τ⌉ = {q_prime_independent}",
            rp.q_prime()
        ));
    }

    // completeness: the reference itself is never flagged, under any policy
    let policies = [
        OraclePolicy::Exact,
        OraclePolicy::Extremal(ExtremalRule::Plus),
        OraclePolicy::Extremal(ExtremalRule::Minus),
        OraclePolicy::Extremal(ExtremalRule::Alternating),
        OraclePolicy::Perturb { seed: 0xFA1A },
    ];
    for (pi, policy) in policies.iter().enumerate() {
        for s in 0..8u64 {
            let mut session =
                OracleSession::stat(d0.clone(), 1, rp.unary_tolerance(), policy.clone())
                    .expect("session");
            let mut rng = ChaCha12Rng::seed_from_u64(0xC0_0000 + (pi as u64) * 100 + s);
            let out = unary_distinguisher(&q, &d0, &d0, &rp, &mut session, &mut rng)
                .expect("run");
            if out.decision != Decision::Reference {
                issues.push(format!("policy {pi} seed {s}: flagged the reference"));
            }
            if out.queries != rp.q_prime() {
                issues.push(format!("policy {pi} seed {s}: {} ≠ q′", out.queries));
            }
        }
    }

    // soundness: a deviating member is flagged in ≥ 1−δ of 200 trials
    let flags: Vec<bool> = run_parallel(200, |t| {
        let mut session =
            OracleSession::stat(member.clone(), 1, rp.unary_tolerance(), OraclePolicy::Exact)
                .expect("session");
        let mut rng = ChaCha12Rng::seed_from_u64(0x50_0000 + t as u64);
        let out = unary_distinguisher(&q, &d0, &d0, &rp, &mut session, &mut rng).expect("run");
        assert_eq!(out.queries, rp.q_prime(), "trial {t} query count");
        out.decision == Decision::Member
    });
    let flagged = flags.iter().filter(|&&f| f).count();
    if (flagged as f64) < 0.95 * 200.0 {
        issues.push(format!("only {flagged}/200 deviating members flagged"));
    }

    let pass = issues.is_empty();
    verdict(
        6,
        pass,
        &format!(
            "reference never flagged over 40 policy runs; member flagged {flagged}/200; \
             every run used exactly q′ = {} queries",
            rp.q_prime()
        ),
    );
    assert!(pass, "{issues:?}");
}

// ---------------------------------------------------------------------------
// Criterion 7: multiplicative-weights estimation of k-wise expectations
// ---------------------------------------------------------------------------

fn mw_fixture_runs(
    name: &str,
    runs: usize,
    k: usize,
    member: &FiniteDistribution<LabeledPoint>,
    center: &FiniteDistribution<LabeledPoint>,
    gamma: &Rat,
    q: &Query<LabeledPoint>,
    tau: &Rat,
    delta: f64,
    seed_base: u64,
) -> (usize, usize, Vec<String>) {
    let truth = to_f64(&expectation_k(member, q).expect("truth"));
    let envelope = budget_envelope(k, gamma, tau, delta);
    let outcomes = run_parallel(runs, |r| {
        let mut session = OracleSession::stat(
            member.clone(),
            1,
            tau / rint(6 * k as i64),
            OraclePolicy::Exact,
        )
        .expect("session");
        let mut rng = ChaCha12Rng::seed_from_u64(seed_base + r as u64);
        let est = estimate_kwise_mw(q, center, gamma, tau, delta, &mut session, &mut rng)
            .expect("estimate");
        let hit = (est.value - truth).abs() <= to_f64(tau);
        (hit, est.queries)
    });
    let hits = outcomes.iter().filter(|(h, _)| *h).count();
    let mut issues = Vec::new();
    let mut max_queries = 0usize;
    for (_, queries) in &outcomes {
        max_queries = max_queries.max(*queries);
        if (*queries as f64) > envelope {
            issues.push(format!("{name}: {queries} queries exceed the envelope {envelope:.0}"));
        }
    }
    if hits * 100 < runs * 95 {
        issues.push(format!("{name}: only {hits}/{runs} estimates within τ"));
    }
    (hits, max_queries, issues)
}

#[test]
fn criterion_07_mw_estimator_accuracy_and_budget() {
    let tau = rat(1, 20);
    let delta = 0.05;

    // two-point fixture, wrapped into labeled points so both fixtures share
    // one code path: coin value as the coordinate, label ignored
    let wrap = |d: &FiniteDistribution<u32>| -> FiniteDistribution<LabeledPoint> {
        FiniteDistribution::new(
            d.iter()
                .map(|(x, m)| ((vec![*x], kwise::dist::Sign::Plus), m.clone()))
                .collect(),
        )
        .expect("wrapped")
    };
    let bern_member = wrap(&bernoulli(rat(3, 4)).expect("valid"));
    let bern_center = wrap(&bernoulli(rat(1, 2)).expect("valid"));
    let bern_q = Query::new(2, |t: &[&LabeledPoint]| {
        t.iter().map(|(z, _)| rint(z[0] as i64)).product()
    });
    let (bern_hits, bern_q_max, mut issues) = mw_fixture_runs(
        "bernoulli",
        100,
        2,
        &bern_member,
        &bern_center,
        &rat(3, 2),
        &bern_q,
        &tau,
        delta,
        0x3100_0000,
    );

    // planted hyperplane against the uniform labeled reference
    let planted = planted_hyperplane(&[1, 0], 2).expect("planted");
    let unif = uniform_labeled(2, 2).expect("reference");
    let gamma = max_density_ratio(&planted, &unif).expect("finite ratio");
    let plane_q = Query::new(2, |t: &[&LabeledPoint]| {
        let (z1, s1) = t[0];
        let (z2, s2) = t[1];
        if z1 == z2 {
            rint((s1.value() * s2.value()) as i64)
        } else {
            Rat::zero()
        }
    });
    let (plane_hits, plane_q_max, plane_issues) = mw_fixture_runs(
        "hyperplane",
        100,
        2,
        &planted,
        &unif,
        &gamma,
        &plane_q,
        &tau,
        delta,
        0x3200_0000,
    );
    issues.extend(plane_issues);

    let pass = issues.is_empty();
    verdict(
        7,
        pass,
        &format!(
            "estimates within τ = 1/20 on {bern_hits}/100 coin runs and {plane_hits}/100 \
             hyperplane runs; worst budgets {bern_q_max} and {plane_q_max} queries"
        ),
    );
    assert!(pass, "{issues:?}");
}

// ---------------------------------------------------------------------------
// Criterion 8: constraint-pattern reduction, mutations, complexity
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_csp_dnf_reduction_exhaustive() {
    let preds: Vec<(&str, Predicate, usize)> = vec![
        ("xor2", xor2(), 2),
        ("and2", and2(), 2),
        ("or2", or2(), 2),
        ("parity3", parity(3).expect("arity"), 3),
        ("maj3", maj3(), 3),
    ];
    let mut issues: Vec<String> = Vec::new();

    // every assignment, every n up to 6
    let jobs: Vec<(usize, usize)> = preds
        .iter()
        .enumerate()
        .flat_map(|(pi, &(_, _, lo))| (lo..=6).map(move |n| (pi, n)))
        .collect();
    let job_issues: Vec<String> = run_parallel(jobs.len(), |ji| {
        let (pi, n) = jobs[ji];
        let (name, pred, _) = &preds[pi];
        let mut bad = Vec::new();
        for bits in 0..(1u32 << n) {
            let sigma =
                Assignment::from_bits((0..n).map(|i| ((bits >> i) & 1) as u8).collect())
                    .expect("bits");
            let report = verify_reduction(pred, &sigma, n).expect("verify");
            if !report.passed() {
                bad.push(format!(
                    "{name} n={n} σ={bits:0n$b}: {} violations",
                    report.violations.len()
                ));
            }
        }
        bad
    })
    .into_iter()
    .flatten()
    .collect();
    issues.extend(job_issues);

    // every literal flip of every built formula must be caught
    let mut flips = 0usize;
    for (name, pred, arity) in &preds {
        let n = arity * 2;
        let sigma = Assignment::from_bits((0..n).map(|i| (i % 2) as u8).collect()).expect("bits");
        let dnf = build_dnf(pred, &sigma, n).expect("build");
        for (ti, term) in dnf.terms.iter().enumerate() {
            for li in 0..term.len() {
                let mutant = dnf.flip_literal(ti, li).expect("flip");
                if reduction_violations(pred, &sigma, n, &mutant)
                    .expect("violations")
                    .is_empty()
                {
                    issues.push(format!("{name}: flipping term {ti} literal {li} goes unnoticed"));
                }
                flips += 1;
            }
        }
    }

    // the parity family needs all of its literals
    let mut complexities = Vec::new();
    for t in 1..=4usize {
        let c = complexity(&parity(t).expect("arity")).expect("complexity");
        complexities.push(c.r_literal);
        if c.r_literal != t {
            issues.push(format!("complexity(parity_{t}) = {} ≠ {t}", c.r_literal));
        }
    }

    let pass = issues.is_empty();
    verdict(
        8,
        pass,
        &format!(
            "reduction exact for all assignments up to n = 6; {flips} literal flips all \
             caught; parity complexities {complexities:?}"
        ),
    );
    assert!(pass, "{issues:?}");
}

// ---------------------------------------------------------------------------
// Criterion 9: collision probability from random sign queries
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_collision_estimates_and_sign_identity() {
    let tau = rat(1, 20);
    let delta = 0.1_f64;
    let budget = (8.0 * (2.0 / delta).ln() / (to_f64(&tau) * to_f64(&tau))).ceil() as usize;
    let benchmarks: Vec<(&str, FiniteDistribution<u32>)> = vec![
        ("uniform16", FiniteDistribution::uniform((0u32..16).collect()).expect("nonempty")),
        ("point_mass", FiniteDistribution::point_mass(7u32)),
        (
            "half_quarter_quarter",
            FiniteDistribution::new(vec![(0u32, rat(1, 2)), (1, rat(1, 4)), (2, rat(1, 4))])
                .expect("masses"),
        ),
        ("bernoulli_quarter", bernoulli(rat(1, 4)).expect("valid")),
        (
            "spike_nine_tenths",
            FiniteDistribution::new(vec![(0u32, rat(9, 10)), (1, rat(1, 10))]).expect("masses"),
        ),
    ];
    let mut issues: Vec<String> = Vec::new();

    // the averaged square over all sign functions is the collision
    // probability, exactly, for supports up to 12 points
    let mut rng = ChaCha12Rng::seed_from_u64(0x51C9);
    let twelve = weighted_dist((0u32..12).collect::<Vec<_>>(), &mut rng);
    for (name, d) in benchmarks
        .iter()
        .map(|(n, d)| (*n, d))
        .chain(std::iter::once(("random12", &twelve)))
    {
        if d.len() > 12 {
            continue;
        }
        let mean_square = sign_function_mean_square(d).expect("identity");
        if mean_square != collision_exact(d) {
            issues.push(format!("{name}: sign-table mean square ≠ collision probability"));
        }
    }

    // estimation accuracy per benchmark
    let mut rates = Vec::new();
    for (bi, (name, d)) in benchmarks.iter().enumerate() {
        let exact = to_f64(&collision_exact(d));
        let outcomes = run_parallel(100, |r| {
            let mut session =
                OracleSession::stat(d.clone(), 1, &tau / rint(8), OraclePolicy::Exact)
                    .expect("session");
            let mut rng =
                ChaCha12Rng::seed_from_u64(0xC011_0000 + (bi as u64) * 1000 + r as u64);
            let est = estimate_collision_sq(&mut session, &tau, delta, &mut rng).expect("run");
            ((est.value - exact).abs() <= to_f64(&tau), est.queries)
        });
        let hits = outcomes.iter().filter(|(h, _)| *h).count();
        if outcomes.iter().any(|(_, q)| *q > budget) {
            issues.push(format!("{name}: a run exceeded the {budget}-query budget"));
        }
        if hits < 90 {
            issues.push(format!("{name}: only {hits}/100 runs within τ"));
        }
        rates.push(format!("{name} {hits}/100"));
    }

    let pass = issues.is_empty();
    verdict(
        9,
        pass,
        &format!(
            "within τ = 1/20 on {}; sign identity exact up to 12-point supports; \
             ≤ {budget} queries per run",
            rates.join(", ")
        ),
    );
    assert!(pass, "{issues:?}");
}

// ---------------------------------------------------------------------------
// Criterion 10: simulated extraction transcripts match the real law
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_extraction_simulation_exact_tv() {
    let beta = rat(1, 20);
    let programs = ["and_low_bits", "parity_low_bits", "adaptive_equal"];
    let dists: Vec<(&str, FiniteDistribution<u32>)> = vec![
        ("uniform4", FiniteDistribution::uniform(vec![0u32, 1, 2, 3]).expect("nonempty")),
        (
            "skewed4",
            FiniteDistribution::new(vec![
                (0u32, rat(1, 2)),
                (1, rat(1, 4)),
                (2, rat(1, 8)),
                (3, rat(1, 8)),
            ])
            .expect("masses"),
        ),
        (
            "spiked2",
            FiniteDistribution::new(vec![(0u32, rat(199, 200)), (1, rat(1, 200))])
                .expect("masses"),
        ),
    ];
    let mut issues: Vec<String> = Vec::new();
    let mut worst_tv = Rat::zero();

    for prog_name in &programs {
        let program = catalog_program(prog_name).expect("catalog");
        for (dist_name, d) in &dists {
            let real =
                extraction_output_distribution(&program, d, 1 << 20).expect("real law");
            let law = simulated_output_distribution(&program, d, &beta).expect("simulated law");
            let tv = tv_distance(&law.distribution, &real);
            if tv > beta {
                issues.push(format!(
                    "{prog_name} on {dist_name}: exact TV {} exceeds β",
                    rat_str(&tv)
                ));
            }
            if tv > worst_tv {
                worst_tv = tv;
            }
            let budget = 2 * program.b() * program.n();
            if law.worst_case_queries > budget {
                issues.push(format!(
                    "{prog_name} on {dist_name}: {} queries exceed 2bn = {budget}",
                    law.worst_case_queries
                ));
            }
        }
    }

    let pass = issues.is_empty();
    verdict(
        10,
        pass,
        &format!(
            "exact simulated-vs-real TV ≤ 1/20 (worst {}) for 3 programs × 3 input laws, \
             within 2bn queries",
            rat_str(&worst_tv)
        ),
    );
    assert!(pass, "{issues:?}");
}

// ---------------------------------------------------------------------------
// Criterion 11: byte-level report determinism
// ---------------------------------------------------------------------------

#[test]
fn criterion_11_reports_are_byte_reproducible() {
    let configs = [
        r#"{"id":"det-learn","seed":11,"experiment":{"kind":"learn","params":{"trials":4}}}"#,
        r#"{"id":"det-dimension","seed":11,"experiment":{"kind":"dimension","params":{"grid":[{"p":2,"l":2,"k":1},{"p":3,"l":2,"k":1}]}}}"#,
        r#"{"id":"det-reduce","seed":11,"experiment":{"kind":"reduce","params":{"trials":2}}}"#,
        r#"{"id":"det-cspdnf","seed":11,"experiment":{"kind":"cspdnf","params":{"sigmas_per_predicate":2}}}"#,
        r#"{"id":"det-collision","seed":11,"experiment":{"kind":"collision","params":{"tau":"1/5","runs_per_benchmark":1}}}"#,
        r#"{"id":"det-simulate","seed":11,"experiment":{"kind":"simulate","params":{}}}"#,
    ];
    let mut issues: Vec<String> = Vec::new();

    for text in &configs {
        let cfg = kwise_cli::ExperimentConfig::from_json(text).expect("config");
        let first = kwise_cli::run_experiment(&cfg).expect("first run");
        let second = kwise_cli::run_experiment(&cfg).expect("second run");
        if first.payload.to_bytes() != second.payload.to_bytes() {
            issues.push(format!("{}: payload bytes differ across reruns", cfg.effective_id()));
        }
        if first.payload_sha256 != second.payload_sha256 {
            issues.push(format!("{}: payload digests differ", cfg.effective_id()));
        }
    }

    // and the seed actually matters where sampling is involved
    let base = kwise_cli::ExperimentConfig::from_json(
        r#"{"id":"det-collision","seed":11,"experiment":{"kind":"collision","params":{"tau":"1/5","runs_per_benchmark":1}}}"#,
    )
    .expect("config");
    let mut reseeded = base.clone();
    reseeded.seed = 12;
    let a = kwise_cli::run_experiment(&base).expect("run");
    let b = kwise_cli::run_experiment(&reseeded).expect("run");
    if a.payload_sha256 == b.payload_sha256 {
        issues.push("different seeds produced identical payloads".into());
    }

    let pass = issues.is_empty();
    verdict(
        11,
        pass,
        "identical config and seed reproduce report payloads byte for byte across all six \
         experiment kinds",
    );
    assert!(pass, "{issues:?}");
}
