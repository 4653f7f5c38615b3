//! Named invariant suites: each suite runs a battery of exact, seeded
//! checks over the other modules and reports one pass/fail line per check.
//! All randomness is drawn from fixed seeds, so a suite's output is a pure
//! function of the library version.

use std::collections::HashSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ap::{ap_enumerate, ap_importance_estimate, DFContext};
use crate::bernoulli::{
    joint_frequency_check, ow_equivariance_check, ow_pushforward_check, BaseMeasure, Verdict,
};
use crate::error::{Error, Result};
use crate::fin::{canonical_pair_maps, split_finite, FinPartition};
use crate::group::{multiply, Automorphism, Group, GroupElement, GroupSpec};
use crate::partition::ModelPartition;
use crate::sofic::{build_folner_approx, build_quotient_approx, SymMap};
use crate::space::ModelSpace;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub suite: String,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(suite: &str, name: &str, passed: bool, detail: String) -> CheckResult {
        CheckResult { suite: suite.into(), name: name.into(), passed, detail }
    }
}

pub const SUITE_NAMES: &[&str] = &[
    "group-laws",
    "rohlin-metric",
    "nesting",
    "coarsening",
    "splitting",
    "auto",
    "estimator",
    "ow",
    "concentration",
    "quality",
];

/// Run one named suite. Unknown names are a configuration error.
pub fn run_suite(name: &str) -> Result<Vec<CheckResult>> {
    match name {
        "group-laws" => suite_group_laws(),
        "rohlin-metric" => suite_rohlin_metric(),
        "nesting" => suite_nesting(),
        "coarsening" => suite_coarsening(),
        "splitting" => suite_splitting(),
        "auto" => suite_auto(),
        "estimator" => suite_estimator(),
        "ow" => suite_ow(),
        "concentration" => suite_concentration(),
        "quality" => suite_quality(),
        other => Err(Error::Config(format!(
            "unknown suite '{other}'; known suites: {}",
            SUITE_NAMES.join(", ")
        ))),
    }
}

pub fn run_all() -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for name in SUITE_NAMES {
        out.extend(run_suite(name)?);
    }
    Ok(out)
}

fn check(out: &mut Vec<CheckResult>, suite: &str, name: &str, passed: bool, detail: String) {
    out.push(CheckResult::new(suite, name, passed, detail));
}

// ---------------------------------------------------------------------------
// group-laws

fn suite_group_laws() -> Result<Vec<CheckResult>> {
    let suite = "group-laws";
    let mut out = Vec::new();
    let groups = vec![
        Group::new(GroupSpec::Integers)?,
        Group::new(GroupSpec::IntegerLattice { d: 2 })?,
        Group::new(GroupSpec::Free { rank: 2 })?,
        Group::new(GroupSpec::Cyclic { n: 12 })?,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut assoc_ok = true;
    let mut id_ok = true;
    let mut inv_ok = true;
    for g in &groups {
        let ball = g.ball(3);
        for _ in 0..200 {
            let a = &ball[rng.random_range(0..ball.len())];
            let b = &ball[rng.random_range(0..ball.len())];
            let c = &ball[rng.random_range(0..ball.len())];
            let lhs = multiply(&multiply(a, b)?, c)?;
            let rhs = multiply(a, &multiply(b, c)?)?;
            assoc_ok &= lhs == rhs;
            let e = g.identity();
            id_ok &= multiply(a, &e)? == *a && multiply(&e, a)? == *a;
            inv_ok &= multiply(a, &crate::group::inverse(a))? == e;
        }
    }
    check(&mut out, suite, "associativity (4 groups x 200 triples)", assoc_ok, String::new());
    check(&mut out, suite, "identity laws", id_ok, String::new());
    check(&mut out, suite, "inverse law", inv_ok, String::new());

    // Balls are symmetric and nested.
    let mut ball_ok = true;
    for g in &groups {
        for r in 0..3u32 {
            let b0: HashSet<_> = g.ball(r).into_iter().collect();
            let b1 = g.ball(r + 1);
            ball_ok &= b0.iter().all(|x| b1.contains(x));
            ball_ok &= b0.iter().all(|x| b0.contains(&crate::group::inverse(x)));
        }
    }
    check(&mut out, suite, "balls nested and inverse-closed", ball_ok, String::new());

    // Automorphisms preserve products.
    let z = &groups[0];
    let neg = Automorphism::Negation;
    let mut auto_ok = true;
    for _ in 0..100 {
        let a = z.int(rng.random_range(-5..=5))?;
        let b = z.int(rng.random_range(-5..=5))?;
        auto_ok &= neg.apply(&multiply(&a, &b)?)? == multiply(&neg.apply(&a)?, &neg.apply(&b)?)?;
    }
    check(&mut out, suite, "negation is a homomorphism on Z", auto_ok, String::new());
    Ok(out)
}

// ---------------------------------------------------------------------------
// rohlin-metric

fn random_partition(
    space: &ModelSpace,
    window: &[GroupElement],
    u: usize,
    rng: &mut ChaCha8Rng,
) -> Result<ModelPartition> {
    let k = space.alphabet_size().expect("Bernoulli space");
    let n = k.pow(window.len() as u32);
    // Guarantee surjectivity onto {0..u-1} so atom counts are as declared.
    let labels: Vec<u32> = (0..n)
        .map(|i| if i < u { i as u32 } else { rng.random_range(0..u as u32) })
        .collect();
    ModelPartition::from_labels(space, window.to_vec(), labels, u)
}

fn suite_rohlin_metric() -> Result<Vec<CheckResult>> {
    let suite = "rohlin-metric";
    let mut out = Vec::new();
    let z = Group::new(GroupSpec::Integers)?;
    let space = ModelSpace::bernoulli(z.clone(), vec![0.5, 0.3, 0.2])?;
    let window = [z.int(0)?, z.int(1)?];
    let mut rng = ChaCha8Rng::seed_from_u64(202);

    let mut chain_worst = 0.0f64;
    let mut sym_exact = true;
    let mut tri_worst = 0.0f64;
    let mut iso_exact = true;
    let mut join_worst = 0.0f64;
    for _ in 0..200 {
        let a = random_partition(&space, &window, 3, &mut rng)?;
        let b = random_partition(&space, &window, 2, &mut rng)?;
        let c = random_partition(&space, &window, 2, &mut rng)?;
        // chain rule H(α∨β) = H(α) + H(β|α)
        let joined = a.join(&b)?;
        chain_worst =
            chain_worst.max((joined.entropy() - a.entropy() - b.conditional_entropy(&a)?).abs());
        // symmetry is exact by construction
        sym_exact &= a.rohlin_distance(&b)? == b.rohlin_distance(&a)?;
        // triangle inequality
        let excess = a.rohlin_distance(&c)? - a.rohlin_distance(&b)? - b.rohlin_distance(&c)?;
        tri_worst = tri_worst.max(excess);
        // translation is an exact isometry
        let t = z.int(1)?;
        iso_exact &= a.translate(&t)?.rohlin_distance(&b.translate(&t)?)? == a.rohlin_distance(&b)?;
        // join continuity d(α∨β, α'∨β') ≤ d(α,α') + d(β,β')
        let a2 = random_partition(&space, &window, 3, &mut rng)?;
        let b2 = random_partition(&space, &window, 2, &mut rng)?;
        let lhs = a.join(&b)?.rohlin_distance(&a2.join(&b2)?)?;
        let bound = a.rohlin_distance(&a2)? + b.rohlin_distance(&b2)?;
        join_worst = join_worst.max(lhs - bound);
    }
    check(
        &mut out,
        suite,
        "chain rule H(a v b) = H(a) + H(b|a) within 1e-12",
        chain_worst <= 1e-12,
        format!("worst deviation {chain_worst:.3e}"),
    );
    check(&mut out, suite, "Rohlin symmetry exact", sym_exact, String::new());
    check(
        &mut out,
        suite,
        "Rohlin triangle inequality within 1e-9",
        tri_worst <= 1e-9,
        format!("worst excess {tri_worst:.3e}"),
    );
    check(&mut out, suite, "translation isometry exact", iso_exact, String::new());
    check(
        &mut out,
        suite,
        "join continuity within 1e-9",
        join_worst <= 1e-9,
        format!("worst excess {join_worst:.3e}"),
    );
    Ok(out)
}

// ---------------------------------------------------------------------------
// nesting

struct RandomInstance {
    sigma: SymMap,
    alpha: ModelPartition,
    f_small: Vec<GroupElement>,
    f_large: Vec<GroupElement>,
}

fn random_instance(rng: &mut ChaCha8Rng) -> Result<RandomInstance> {
    let z = Group::new(GroupSpec::Integers)?;
    let m = rng.random_range(4..=10usize);
    let u = rng.random_range(2..=3usize);
    let sigma = build_quotient_approx(&z, &[m as u64])?.pop().expect("one map");
    let space = ModelSpace::uniform_bernoulli(z.clone(), u)?;
    let window = vec![z.int(0)?];
    let labels: Vec<u32> = (0..u as u32).collect();
    let alpha = ModelPartition::from_labels(&space, window, labels, u)?;
    let f_small = vec![z.int(0)?];
    let f_large = vec![z.int(0)?, z.int(1)?];
    Ok(RandomInstance { sigma, alpha, f_small, f_large })
}

fn listing_set(listing: &[FinPartition]) -> HashSet<Vec<u32>> {
    listing.iter().map(|p| p.labels().to_vec()).collect()
}

fn suite_nesting() -> Result<Vec<CheckResult>> {
    let suite = "nesting";
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut eps_violations = 0usize;
    let mut f_violations = 0usize;
    for _ in 0..100 {
        let inst = random_instance(&mut rng)?;
        let eps_hi = rng.random_range(0.2..0.6);
        let eps_lo = eps_hi * rng.random_range(0.2..0.9);
        let cap = Some(usize::MAX);
        let (_, hi) = ap_enumerate(&inst.sigma, &inst.alpha, &inst.f_small, eps_hi, cap)?;
        let (_, lo) = ap_enumerate(&inst.sigma, &inst.alpha, &inst.f_small, eps_lo, cap)?;
        let hi = listing_set(&hi.expect("listing"));
        let lo = listing_set(&lo.expect("listing"));
        if !lo.is_subset(&hi) {
            eps_violations += 1;
        }
        let (_, small) = ap_enumerate(&inst.sigma, &inst.alpha, &inst.f_small, eps_hi, cap)?;
        let (_, large) = ap_enumerate(&inst.sigma, &inst.alpha, &inst.f_large, eps_hi, cap)?;
        let small = listing_set(&small.expect("listing"));
        let large = listing_set(&large.expect("listing"));
        if !large.is_subset(&small) {
            f_violations += 1;
        }
    }
    check(
        &mut out,
        suite,
        "eps-nesting AP(e2) within AP(e1) on 100 instances",
        eps_violations == 0,
        format!("{eps_violations} violations"),
    );
    check(
        &mut out,
        suite,
        "F-nesting AP(F2) within AP(F1) on 100 instances",
        f_violations == 0,
        format!("{f_violations} violations"),
    );
    Ok(out)
}

// ---------------------------------------------------------------------------
// coarsening

/// ln m!/(n_1!...n_u!) via a lgamma-free exact-ish log-factorial table.
fn ln_multinomial(m: usize, counts: &[usize]) -> f64 {
    let mut lf = vec![0.0f64; m + 1];
    for i in 2..=m {
        lf[i] = lf[i - 1] + (i as f64).ln();
    }
    lf[m] - counts.iter().map(|&c| lf[c]).sum::<f64>()
}

/// Maximum log-multinomial over compositions of m with all frequencies
/// within eps of the target measures. Returns None when no composition
/// qualifies.
fn max_admissible_ln_multinomial(m: usize, mu: &[f64], eps: f64) -> Option<f64> {
    let u = mu.len();
    let mut best: Option<f64> = None;
    let mut counts = vec![0usize; u];
    fn rec(
        i: usize,
        left: usize,
        m: usize,
        mu: &[f64],
        eps: f64,
        counts: &mut Vec<usize>,
        best: &mut Option<f64>,
    ) {
        if i + 1 == mu.len() {
            counts[i] = left;
            if (left as f64 / m as f64 - mu[i]).abs() <= eps {
                let v = ln_multinomial(m, counts);
                *best = Some(best.map_or(v, |b| b.max(v)));
            }
            return;
        }
        for n in 0..=left {
            if (n as f64 / m as f64 - mu[i]).abs() <= eps {
                counts[i] = n;
                rec(i + 1, left - n, m, mu, eps, counts, best);
            }
        }
    }
    rec(0, m, m, mu, eps, &mut counts, &mut best);
    best
}

fn suite_coarsening() -> Result<Vec<CheckResult>> {
    let suite = "coarsening";
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let z = Group::new(GroupSpec::Integers)?;

    // Containment: Phi maps every enumerated member of AP(alpha) into
    // AP(beta) for beta a coarsening of alpha (same F, same eps).
    let mut violations = 0usize;
    let mut members = 0usize;
    for _ in 0..100 {
        let inst = random_instance(&mut rng)?;
        let u = inst.alpha.atom_count();
        // random surjective grouping onto v < u atoms (or identity at u=2)
        let v = if u > 2 { 2 } else { 1 };
        let grouping: Vec<u32> =
            (0..u).map(|i| if i < v { i as u32 } else { rng.random_range(0..v as u32) }).collect();
        let beta = inst.alpha.coarsen(&grouping)?;
        let eps = rng.random_range(0.15..0.5);
        let (_, listing) =
            ap_enumerate(&inst.sigma, &inst.alpha, &inst.f_large, eps, Some(usize::MAX))?;
        let ctx_beta =
            DFContext::new(&inst.sigma, &beta, &inst.f_large, beta.atom_count())?;
        for abar in listing.expect("listing") {
            members += 1;
            let phi = abar.coarsen(&grouping)?;
            let padded = phi.pad_to(beta.atom_count())?;
            if ctx_beta.df(padded.labels()) > eps {
                violations += 1;
            }
        }
    }
    check(
        &mut out,
        suite,
        "coarsening containment on 100 instances",
        violations == 0,
        format!("{violations} violations over {members} enumerated members"),
    );

    // Stirling-instantiated counting inequality at m <= 12:
    //   ln|AP(alpha)| <= u ln(3 m eps) + max ln multinomial + ln|AP(beta)|
    // where the max runs over atom-size compositions admissible at eps.
    // (The multinomial bound absorbs the exp((H(alpha)-H(beta)+delta)m)
    // factor with delta evaluated exactly.)
    let mut stirling_ok = true;
    let mut stirling_detail = String::new();
    for (m, eps) in [(8usize, 0.2f64), (10, 0.25), (12, 0.15), (9, 0.3), (11, 0.2)] {
        let sigma = build_quotient_approx(&z, &[m as u64])?.pop().expect("one map");
        let space = ModelSpace::uniform_bernoulli(z.clone(), 3)?;
        let alpha =
            ModelPartition::from_labels(&space, vec![z.int(0)?], vec![0, 1, 2], 3)?;
        let grouping = vec![0u32, 0, 1];
        let beta = alpha.coarsen(&grouping)?;
        let f = vec![z.int(0)?, z.int(1)?];
        let (ca, _) = ap_enumerate(&sigma, &alpha, &f, eps, None)?;
        let (cb, _) = ap_enumerate(&sigma, &beta, &f, eps, None)?;
        let u = alpha.atom_count();
        let mu = alpha.atom_measures();
        let slack = match max_admissible_ln_multinomial(m, &mu, eps) {
            Some(v) => v,
            None => 0.0,
        };
        let rhs = u as f64 * (3.0 * m as f64 * eps).ln() + slack + cb.log_count;
        let ok = ca.log_count <= rhs + 1e-9;
        stirling_ok &= ok;
        stirling_detail.push_str(&format!(
            "m={m} eps={eps}: ln|AP(a)|={:.4} <= {:.4}; ",
            ca.log_count, rhs
        ));
    }
    check(
        &mut out,
        suite,
        "Stirling counting inequality at m <= 12",
        stirling_ok,
        stirling_detail,
    );
    Ok(out)
}

// ---------------------------------------------------------------------------
// splitting

fn random_fin(m: usize, v: usize, rng: &mut ChaCha8Rng) -> FinPartition {
    let labels: Vec<u32> =
        (0..m).map(|i| if i < v { i as u32 } else { rng.random_range(0..v as u32) }).collect();
    FinPartition::new(m, v, labels).expect("valid labels")
}

fn suite_splitting() -> Result<Vec<CheckResult>> {
    let suite = "splitting";
    let mut out = Vec::new();
    let z = Group::new(GroupSpec::Integers)?;
    let mut rng = ChaCha8Rng::seed_from_u64(505);

    // Psi injectivity: distinct finite partitions map to distinct splittings.
    let mut collisions = 0usize;
    for _ in 0..50 {
        let m = rng.random_range(6..=12usize);
        let v = 2;
        let sigma = build_quotient_approx(&z, &[m as u64])?.pop().expect("one map");
        let t = z.int(rng.random_range(1..=2i64))?;
        let (x_map, y_map) = canonical_pair_maps(v);
        let b1 = random_fin(m, v, &mut rng);
        let mut b2 = random_fin(m, v, &mut rng);
        while b2.labels() == b1.labels() {
            b2 = random_fin(m, v, &mut rng);
        }
        let s1 = split_finite(&sigma, &b1, &t, &x_map, &y_map)?;
        let s2 = split_finite(&sigma, &b2, &t, &x_map, &y_map)?;
        if s1.labels() == s2.labels() {
            collisions += 1;
        }
    }
    check(
        &mut out,
        suite,
        "splitting map injective on 50 random pairs",
        collisions == 0,
        format!("{collisions} collisions"),
    );

    // Cardinality comparison |AP(beta: F u Ft, eps)| <=
    // |AP(beta v t.beta: F, eps + 5|F| eps_sigma)| with certified eps_sigma.
    let mut cmp_ok = true;
    let mut detail = String::new();
    let cases: Vec<(SymMap, Vec<GroupElement>, GroupElement, f64, &str)> = vec![
        (
            build_quotient_approx(&z, &[8])?.pop().expect("one"),
            vec![z.int(0)?, z.int(1)?],
            z.int(1)?,
            0.1,
            "quotient m=8",
        ),
        (
            build_quotient_approx(&z, &[10])?.pop().expect("one"),
            vec![z.int(0)?, z.int(1)?],
            z.int(2)?,
            0.3,
            "quotient m=10",
        ),
        (
            build_folner_approx(&z, &[8])?.pop().expect("one"),
            vec![z.int(0)?],
            z.int(1)?,
            0.25,
            "Folner window 8",
        ),
    ];
    for (sigma, f_set, t, eps, label) in cases {
        let space = ModelSpace::uniform_bernoulli(z.clone(), 2)?;
        let beta = ModelPartition::canonical_bernoulli(&space)?;
        let mut f_union = f_set.clone();
        for f in &f_set {
            let ft = multiply(f, &t)?;
            if !f_union.contains(&ft) {
                f_union.push(ft);
            }
        }
        // certify sigma over everything the comparison touches
        let mut cert = f_union.clone();
        if !cert.contains(&t) {
            cert.push(t.clone());
        }
        let eps_sigma = sigma.good_set(&cert)?.epsilon;
        let joined = beta.join_all_pairs(&beta.translate(&t)?)?;
        let (lhs, _) = ap_enumerate(&sigma, &beta, &f_union, eps, None)?;
        let relaxed = eps + 5.0 * f_set.len() as f64 * eps_sigma;
        let (rhs, _) = ap_enumerate(&sigma, &joined, &f_set, relaxed, None)?;
        let ok = lhs.count <= rhs.count;
        cmp_ok &= ok;
        detail.push_str(&format!(
            "{label}: |AP(beta)|={} <= |AP(join)|={} (eps_sigma={eps_sigma}); ",
            lhs.count, rhs.count
        ));
    }
    check(&mut out, suite, "splitting cardinality comparison", cmp_ok, detail);
    Ok(out)
}

// ---------------------------------------------------------------------------
// auto

fn suite_auto() -> Result<Vec<CheckResult>> {
    let suite = "auto";
    let mut out = Vec::new();
    let z = Group::new(GroupSpec::Integers)?;
    let sigma = build_quotient_approx(&z, &[8])?.pop().expect("one map");
    let space = ModelSpace::uniform_bernoulli(z.clone(), 2)?;
    let alpha = ModelPartition::canonical_bernoulli(&space)?;
    let neg = Automorphism::Negation;
    let f_set = vec![z.int(0)?, z.int(1)?];
    // a^{-1}(F) listed so its image under a enumerates F in order
    let f_twisted: Vec<GroupElement> =
        f_set.iter().map(|f| neg.inverse().apply(f)).collect::<Result<_>>()?;
    let recomposed = sigma.compose_with_automorphism(&neg)?;

    let plain = DFContext::new(&sigma, &alpha, &f_set, 2)?;
    let twisted = DFContext::new_twisted(&recomposed, &alpha, &f_twisted, 2, Some(&neg))?;
    let m = sigma.degree();
    let mut equal = true;
    let mut members = 0usize;
    for eps in [0.1f64, 0.25, 0.5] {
        for code in 0..(1u64 << m) {
            let labels: Vec<u32> = (0..m).map(|p| ((code >> (m - 1 - p)) & 1) as u32).collect();
            let in_plain = plain.df(&labels) <= eps;
            let in_twisted = twisted.df(&labels) <= eps;
            equal &= in_plain == in_twisted;
            members += usize::from(in_plain);
        }
    }
    check(
        &mut out,
        suite,
        "AP(sigma, a: F) = AP(sigma o neg, a: neg F) elementwise at m=8",
        equal,
        format!("{members} memberships compared across 3 eps values"),
    );
    Ok(out)
}

// ---------------------------------------------------------------------------
// estimator

fn suite_estimator() -> Result<Vec<CheckResult>> {
    let suite = "estimator";
    let mut out = Vec::new();
    let z = Group::new(GroupSpec::Integers)?;
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut within = 0usize;
    let total = 20usize;
    for i in 0..total {
        let m = rng.random_range(6..=10usize);
        let sigma = build_quotient_approx(&z, &[m as u64])?.pop().expect("one map");
        let space = ModelSpace::uniform_bernoulli(z.clone(), 2)?;
        let alpha = ModelPartition::canonical_bernoulli(&space)?;
        let f = vec![z.int(0)?];
        let eps = rng.random_range(0.15..0.5);
        let (exact, _) = ap_enumerate(&sigma, &alpha, &f, eps, None)?;
        let est = ap_importance_estimate(&sigma, &alpha, &f, eps, 4000, 700 + i as u64)?;
        let stderr = est.stderr.unwrap_or(f64::INFINITY);
        if (est.log_count - exact.log_count).abs() <= 3.0 * stderr {
            within += 1;
        }
    }
    check(
        &mut out,
        suite,
        "log-estimate within 3 stderr of exact on >= 19/20 instances",
        within >= 19,
        format!("{within}/{total} within 3 stderr"),
    );

    // All-accept case: eps >= 2 accepts every labeling, estimate = u^m.
    let sigma = build_quotient_approx(&z, &[4])?.pop().expect("one map");
    let space = ModelSpace::uniform_bernoulli(z.clone(), 2)?;
    let alpha = ModelPartition::canonical_bernoulli(&space)?;
    let est = ap_importance_estimate(&sigma, &alpha, &[z.int(0)?], 2.0, 64, 9)?;
    let ok = (est.count - 16.0).abs() <= 1e-9;
    check(
        &mut out,
        suite,
        "all-accept case returns exactly u^m",
        ok,
        format!("estimate {} vs 16", est.count),
    );
    Ok(out)
}

// ---------------------------------------------------------------------------
// ow

fn suite_ow() -> Result<Vec<CheckResult>> {
    let suite = "ow";
    let mut out = Vec::new();
    let uniform = BaseMeasure::uniform(2)?;
    for radius in [0u32, 1] {
        let r = ow_pushforward_check(radius, &uniform)?;
        check(
            &mut out,
            suite,
            &format!("pushforward TV = 0 at radius {radius}"),
            r.verdict == Verdict::Pass && r.statistic == 0.0,
            format!("TV = {}", r.statistic),
        );
    }
    let biased = BaseMeasure::new(vec![0.7, 0.3])?;
    let r = ow_pushforward_check(1, &biased)?;
    check(
        &mut out,
        suite,
        "biased base negative control reports TV > 0",
        r.statistic > 0.0,
        format!("TV = {}", r.statistic),
    );
    let r = ow_equivariance_check(1)?;
    check(
        &mut out,
        suite,
        "equivariance exhaustive at radius 1",
        r.verdict == Verdict::Pass,
        r.details.to_string(),
    );
    Ok(out)
}

// ---------------------------------------------------------------------------
// concentration

fn suite_concentration() -> Result<Vec<CheckResult>> {
    let suite = "concentration";
    let mut out = Vec::new();
    let z = Group::new(GroupSpec::Integers)?;
    let sigma = build_quotient_approx(&z, &[64])?.pop().expect("one map");
    let abar = FinPartition::new(64, 2, (0..64).map(|v| (v % 2) as u32).collect())?;
    let kappa = BaseMeasure::uniform(2)?;
    let r = joint_frequency_check(&sigma, &abar, &kappa, &[z.identity()], 0.2, 10_000, 11)?;
    check(
        &mut out,
        suite,
        "joint frequency Chebyshev bound at m=64, 1e4 samples",
        r.verdict == Verdict::Pass,
        r.details.to_string(),
    );
    Ok(out)
}

// ---------------------------------------------------------------------------
// quality

fn suite_quality() -> Result<Vec<CheckResult>> {
    let suite = "quality";
    let mut out = Vec::new();
    let z = Group::new(GroupSpec::Integers)?;

    // Quotient maps are exact on balls whenever m > 2*radius.
    let mut exact_ok = true;
    let mut detail = String::new();
    for (m, radius) in [(8u64, 2u32), (12, 3), (16, 4)] {
        let sigma = build_quotient_approx(&z, &[m])?.pop().expect("one map");
        let rep = sigma.good_set(&z.ball(radius))?;
        exact_ok &= rep.epsilon == 0.0;
        detail.push_str(&format!("m={m} ball({radius}): eps={}; ", rep.epsilon));
    }
    check(&mut out, suite, "quotient builders exact on balls (m > 2r)", exact_ok, detail);

    // Folner windows 8, 16, 32 give strictly decreasing eps for F=ball(2).
    let sigmas = build_folner_approx(&z, &[8, 16, 32])?;
    let f = z.ball(2);
    let eps: Vec<f64> =
        sigmas.iter().map(|s| s.good_set(&f).map(|r| r.epsilon)).collect::<Result<_>>()?;
    let strict = eps.windows(2).all(|w| w[1] < w[0]);
    check(
        &mut out,
        suite,
        "Folner eps strictly decreasing over windows 8,16,32",
        strict,
        format!("eps = {eps:?}"),
    );
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_is_config_error() {
        assert!(matches!(run_suite("nope"), Err(Error::Config(_))));
    }

    #[test]
    fn all_suites_pass() {
        let results = run_all().unwrap();
        assert!(results.len() >= 15);
        for r in &results {
            assert!(r.passed, "{} / {} failed: {}", r.suite, r.name, r.detail);
        }
    }

    #[test]
    fn suites_deterministic() {
        let fmt = |rs: &[CheckResult]| {
            rs.iter()
                .map(|r| format!("{}|{}|{}|{}", r.suite, r.name, r.passed, r.detail))
                .collect::<Vec<_>>()
                .join("\n")
        };
        let a = fmt(&run_suite("rohlin-metric").unwrap());
        let b = fmt(&run_suite("rohlin-metric").unwrap());
        assert_eq!(a, b);
    }
}
