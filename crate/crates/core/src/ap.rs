//! The counting engine: d_F between a model partition and a partition of
//! {1..m} under σ, exact enumeration and importance-sampled estimation of
//! the approximating-partition sets AP(σ,α:F,ε), and rate curves.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::fin::FinPartition;
use crate::group::{Automorphism, GroupElement};
use crate::partition::{check_pattern_budget, ModelPartition};
use crate::sofic::SymMap;

/// Default cap on exact enumeration: u^m evaluations.
pub const ENUM_BUDGET: u64 = 1 << 27;

/// Everything fixed about (σ, α, F): the model-side pattern measures
/// μ(A_φ), which are β̄-independent, and the σ-side inverse images. After
/// construction, d_F per labeling is pure counting over {1..m}.
pub struct DFContext {
    m: usize,
    u: usize,

    mu_model: Vec<f64>,
    mu_total: f64,
    inv: Vec<Vec<u32>>,
}

impl DFContext {
    pub fn new(
        sigma: &SymMap,
        alpha: &ModelPartition,
        f_set: &[GroupElement],
        u_pad: usize,
    ) -> Result<DFContext> {
        DFContext::new_twisted(sigma, alpha, f_set, u_pad, None)
    }

    /// Context for the recomposed system σ∘a: the σ side evaluates the
    /// composed map at f while the model side translates by a(f), so that
    /// both pattern statistics range over a(F) in matching order.
    pub fn new_twisted(
        sigma: &SymMap,
        alpha: &ModelPartition,
        f_set: &[GroupElement],
        u_pad: usize,
        auto: Option<&Automorphism>,
    ) -> Result<DFContext> {
        if f_set.is_empty() {
            return Err(Error::Precondition("empty F".into()));
        }
        let u = u_pad.max(alpha.atom_count());
        let patterns = check_pattern_budget(u, f_set.len())?;
        let mut inv = Vec::with_capacity(f_set.len());
        for f in f_set {
            inv.push(sigma.image(f)?.inverse().images().to_vec());
        }
        let translated: Vec<ModelPartition> = f_set
            .iter()
            .map(|f| {
                let g = match auto {
                    Some(a) => a.apply(f)?,
                    None => f.clone(),
                };
                alpha.translate(&g)
            })
            .collect::<Result<_>>()?;
        let mut mu_model = vec![0.0f64; patterns];
        crate::partition::pattern_measures(&translated, u, &mut mu_model)?;
        let mu_total = mu_model.iter().sum();
        Ok(DFContext {
            m: sigma.degree(),
            u,

            mu_model,
            mu_total,
            inv,
        })
    }

    pub fn degree(&self) -> usize {
        self.m
    }

    pub fn atom_count(&self) -> usize {
        self.u
    }

    /// d_F(α, β̄) for a labeling of {1..m} into (at most) u atoms.
    pub fn df(&self, labels: &[u32]) -> f64 {
        debug_assert_eq!(labels.len(), self.m);
        let mut pats: Vec<usize> = Vec::with_capacity(self.m);
        for v in 0..self.m {
            let mut pat = 0usize;
            for inv_f in &self.inv {
                pat = pat * self.u + labels[inv_f[v] as usize] as usize;
            }
            pats.push(pat);
        }
        pats.sort_unstable();
        // Σ_φ |μ(A_φ) − ζ(B_φ)| = Σ_unhit μ + Σ_hit |μ − cnt/m|
        let mut d = self.mu_total;
        let mut i = 0;
        while i < self.m {
            let pat = pats[i];
            let mut cnt = 1usize;
            while i + cnt < self.m && pats[i + cnt] == pat {
                cnt += 1;
            }
            let mu = self.mu_model[pat];
            d += (mu - cnt as f64 / self.m as f64).abs() - mu;
            i += cnt;
        }
        d
    }

    fn labels_of(&self, code: u64) -> Vec<u32> {
        let mut labels = vec![0u32; self.m];
        let mut c = code;
        for p in (0..self.m).rev() {
            labels[p] = (c % self.u as u64) as u32;
            c /= self.u as u64;
        }
        labels
    }
}

/// d_F(σ, α, β̄ : F), padding the smaller atom count with empty atoms.
pub fn df_sigma(
    sigma: &SymMap,
    alpha: &ModelPartition,
    beta: &FinPartition,
    f_set: &[GroupElement],
) -> Result<f64> {
    if beta.degree() != sigma.degree() {
        return Err(Error::Precondition("degree mismatch".into()));
    }
    let ctx = DFContext::new(sigma, alpha, f_set, beta.atom_count())?;
    Ok(ctx.df(beta.labels()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountMode {
    Exact,
    Sampled,
}

impl CountMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            CountMode::Exact => "exact",
            CountMode::Sampled => "sampled",
        }
    }
}

#[derive(Debug, Clone)]
pub struct APCount {
    pub mode: CountMode,
    pub count: f64,
    pub log_count: f64,
    /// Standard error of log_count (sampled mode).
    pub stderr: Option<f64>,
}

impl APCount {
    pub fn to_json(&self) -> Value {
        json!({
            "mode": self.mode.as_str(),
            "count": self.count,
            "log_count": if self.log_count.is_finite() {
                json!(self.log_count)
            } else {
                json!("-inf")
            },
            "stderr": self.stderr,
        })
    }
}

/// Exact |AP(σ,α:F,ε)| by base-u enumeration over the points of {1..m},
/// sharded across workers with an integer merge (bit-identical regardless
/// of worker count). Optionally lists the members when they fit in `cap`.
pub fn ap_enumerate(
    sigma: &SymMap,
    alpha: &ModelPartition,
    f_set: &[GroupElement],
    eps: f64,
    list_cap: Option<usize>,
) -> Result<(APCount, Option<Vec<FinPartition>>)> {
    let ctx = DFContext::new(sigma, alpha, f_set, alpha.atom_count())?;
    ap_enumerate_ctx(&ctx, eps, list_cap)
}

pub fn ap_enumerate_ctx(
    ctx: &DFContext,
    eps: f64,
    list_cap: Option<usize>,
) -> Result<(APCount, Option<Vec<FinPartition>>)> {
    let total = (ctx.u as u64)
        .checked_pow(ctx.m as u32)
        .filter(|&t| t <= ENUM_BUDGET)
        .ok_or_else(|| {
            Error::Budget(format!(
                "{}^{} labelings exceed the exact budget; use importance sampling",
                ctx.u, ctx.m
            ))
        })?;
    if eps < 0.0 {
        let count = APCount {
            mode: CountMode::Exact,
            count: 0.0,
            log_count: f64::NEG_INFINITY,
            stderr: None,
        };
        return Ok((count, list_cap.map(|_| vec![])));
    }
    let shards: u64 = 256.min(total).max(1);
    let results: Vec<(u64, Vec<u64>)> = (0..shards)
        .into_par_iter()
        .map(|s| {
            let lo = total * s / shards;
            let hi = total * (s + 1) / shards;
            let mut n = 0u64;
            let mut hits: Vec<u64> = Vec::new();
            for code in lo..hi {
                if ctx.df(&ctx.labels_of(code)) <= eps {
                    n += 1;
                    if let Some(cap) = list_cap {
                        if hits.len() <= cap {
                            hits.push(code);
                        }
                    }
                }
            }
            (n, hits)
        })
        .collect();
    let count: u64 = results.iter().map(|(n, _)| n).sum();
    let listing = match list_cap {
        Some(cap) if (count as usize) <= cap => Some(
            results
                .iter()
                .flat_map(|(_, hits)| hits.iter())
                .map(|&code| {
                    FinPartition::new(ctx.m, ctx.u, ctx.labels_of(code))
                        .expect("enumerated labeling is valid")
                })
                .collect(),
        ),
        Some(_) => None,
        None => None,
    };
    let ap = APCount {
        mode: CountMode::Exact,
        count: count as f64,
        log_count: if count == 0 { f64::NEG_INFINITY } else { (count as f64).ln() },
        stderr: None,
    };
    Ok((ap, listing))
}

/// Unbiased importance-sampling estimate of |AP|: points are labeled
/// independently with the atom measures of α as the proposal, so that
/// 1{d_F ≤ ε}/Π_v μ(A_{label v}) has expectation |AP|. The standard
/// error of the log-estimate comes from a leave-one-out jackknife.
/// Sample i draws from a counter-based stream keyed by (seed, i), so the
/// result depends only on (seed, n_samples), never on worker count.
pub fn ap_importance_estimate(
    sigma: &SymMap,
    alpha: &ModelPartition,
    f_set: &[GroupElement],
    eps: f64,
    n_samples: usize,
    seed: u64,
) -> Result<APCount> {
    if n_samples == 0 {
        return Err(Error::Precondition("need at least one sample".into()));
    }
    let measures = alpha.atom_measures();
    if measures.iter().any(|&m| m <= 0.0) {
        return Err(Error::Precondition("degenerate proposal".into()));
    }
    let ctx = DFContext::new(sigma, alpha, f_set, alpha.atom_count())?;
    let log_mu: Vec<f64> = measures.iter().map(|&m| m.ln()).collect();
    let values: Vec<f64> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64 + 1);
            let mut labels = vec![0u32; ctx.m];
            let mut log_w = 0.0f64;
            for l in labels.iter_mut() {
                let x: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = measures.len() - 1;
                for (j, &mu) in measures.iter().enumerate() {
                    acc += mu;
                    if x < acc {
                        pick = j;
                        break;
                    }
                }
                *l = pick as u32;
                log_w += log_mu[pick];
            }
            if eps >= 0.0 && ctx.df(&labels) <= eps {
                (-log_w).exp()
            } else {
                0.0
            }
        })
        .collect();
    let n = n_samples as f64;
    let sum: f64 = values.iter().sum();
    let estimate = sum / n;
    let log_count = if estimate > 0.0 { estimate.ln() } else { f64::NEG_INFINITY };
    let stderr = if n_samples < 2 || estimate <= 0.0 {
        None
    } else {
        let thetas: Vec<f64> = values
            .iter()
            .map(|&v| {
                let rest = sum - v;
                if rest > 0.0 {
                    (rest / (n - 1.0)).ln()
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        if thetas.iter().any(|t| !t.is_finite()) {
            Some(f64::INFINITY)
        } else {
            let mean = thetas.iter().sum::<f64>() / n;
            let var = thetas.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>();
            Some(((n - 1.0) / n * var).sqrt())
        }
    };
    Ok(APCount { mode: CountMode::Sampled, count: estimate, log_count, stderr })
}

#[derive(Debug, Clone, Copy)]
pub enum RateMode {
    Exact,
    Sampled { n_samples: usize, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct RateEntry {
    pub i: usize,
    pub m: usize,
    pub epsilon: f64,
    pub f_radius: Option<u32>,
    pub log_count: f64,
    pub rate: f64,
    pub mode: String,
    pub stderr: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RateCurve {
    pub entries: Vec<RateEntry>,
}

/// One AP rate log|AP(σᵢ,α:F,ε)|/mᵢ per approximation, with per-entry
/// failures recorded in place instead of aborting the curve.
pub fn rate_curve(
    sigmas: &[SymMap],
    alpha: &ModelPartition,
    f_set: &[GroupElement],
    f_radius: Option<u32>,
    eps: f64,
    mode: RateMode,
) -> RateCurve {
    let entries = sigmas
        .iter()
        .enumerate()
        .map(|(idx, sigma)| {
            let m = sigma.degree();
            let outcome = match mode {
                RateMode::Exact => ap_enumerate(sigma, alpha, f_set, eps, None).map(|(c, _)| c),
                RateMode::Sampled { n_samples, seed } => {
                    ap_importance_estimate(sigma, alpha, f_set, eps, n_samples, seed)
                }
            };
            match outcome {
                Ok(c) => RateEntry {
                    i: idx + 1,
                    m,
                    epsilon: eps,
                    f_radius,
                    log_count: c.log_count,
                    rate: c.log_count / m as f64,
                    mode: c.mode.as_str().to_string(),
                    stderr: c.stderr,
                    error: None,
                },
                Err(e) => RateEntry {
                    i: idx + 1,
                    m,
                    epsilon: eps,
                    f_radius,
                    log_count: f64::NAN,
                    rate: f64::NAN,
                    mode: "error".to_string(),
                    stderr: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    RateCurve { entries }
}

/// Format with 12 significant digits; infinities and NaN by name.
pub fn fmt12(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        let s = format!("{x:.11e}");
        // prettify exact small integers and simple decimals
        if x == x.trunc() && x.abs() < 1e12 {
            format!("{x}")
        } else {
            s
        }
    }
}

pub fn curve_csv(entries: &[RateEntry]) -> String {
    let mut out = String::from("i,m,epsilon,F_radius,log_count,rate,mode,stderr\n");
    for e in entries {
        let radius = e.f_radius.map(|r| r.to_string()).unwrap_or_default();
        let stderr = e.stderr.map(fmt12).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            e.i,
            e.m,
            fmt12(e.epsilon),
            radius,
            fmt12(e.log_count),
            fmt12(e.rate),
            e.mode,
            stderr
        ));
    }
    out
}

pub fn curve_json(entries: &[RateEntry]) -> Value {
    Value::Array(
        entries
            .iter()
            .map(|e| {
                json!({
                    "i": e.i,
                    "m": e.m,
                    "epsilon": e.epsilon,
                    "F_radius": e.f_radius,
                    "log_count": if e.log_count.is_finite() { json!(e.log_count) }
                        else { json!(fmt12(e.log_count)) },
                    "rate": if e.rate.is_finite() { json!(e.rate) }
                        else { json!(fmt12(e.rate)) },
                    "mode": e.mode,
                    "stderr": e.stderr,
                    "error": e.error,
                })
            })
            .collect(),
    )
}

#[derive(Debug, Clone)]
pub struct HReport {
    pub tail_window: usize,
    /// tail_max[f_idx][eps_idx]: the finite-scale proxy for
    /// limsup (1/mᵢ)·log|AP|, a maximum over the last `tail_window` scales.
    pub tail_max: Vec<Vec<f64>>,
    /// The liminf-flavored companion, for inspecting both conventions.
    pub tail_min: Vec<Vec<f64>>,
    pub headline: f64,
    pub entries: Vec<RateEntry>,
    pub note: String,
}

/// Tail-max rates over (F, ε) schedules. The headline is the value at the
/// largest F and smallest ε — a finite-scale proxy, not a limit.
pub fn h_report(
    sigmas: &[SymMap],
    alpha: &ModelPartition,
    f_schedule: &[Vec<GroupElement>],
    f_radii: Option<&[u32]>,
    eps_schedule: &[f64],
    mode: RateMode,
    tail_window: usize,
) -> Result<HReport> {
    if sigmas.is_empty() || f_schedule.is_empty() || eps_schedule.is_empty() {
        return Err(Error::Precondition("empty schedule".into()));
    }
    if tail_window == 0 {
        return Err(Error::Precondition("tail window must be positive".into()));
    }
    for w in f_schedule.windows(2) {
        if !w[0].iter().all(|g| w[1].contains(g)) {
            return Err(Error::Precondition("F schedule must be nested increasing".into()));
        }
    }
    if eps_schedule.iter().any(|&e| e <= 0.0) {
        return Err(Error::Precondition("ε schedule must be positive".into()));
    }
    if eps_schedule.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::Precondition("ε schedule must be non-increasing".into()));
    }
    let mut tail_max = vec![vec![f64::NAN; eps_schedule.len()]; f_schedule.len()];
    let mut tail_min = vec![vec![f64::NAN; eps_schedule.len()]; f_schedule.len()];
    let mut entries = Vec::new();
    for (fi, f_set) in f_schedule.iter().enumerate() {
        let radius = f_radii.map(|r| r[fi]);
        for (ei, &eps) in eps_schedule.iter().enumerate() {
            let curve = rate_curve(sigmas, alpha, f_set, radius, eps, mode);
            let tail: Vec<f64> = curve
                .entries
                .iter()
                .rev()
                .take(tail_window)
                .filter(|e| e.error.is_none())
                .map(|e| e.rate)
                .collect();
            if !tail.is_empty() {
                tail_max[fi][ei] = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                tail_min[fi][ei] = tail.iter().cloned().fold(f64::INFINITY, f64::min);
            }
            entries.extend(curve.entries);
        }
    }
    let headline = tail_max[f_schedule.len() - 1][eps_schedule.len() - 1];
    Ok(HReport {
        tail_window,
        tail_max,
        tail_min,
        headline,
        entries,
        note: format!(
            "finite-scale proxy: tail-max of the last {tail_window} scales, not a limit"
        ),
    })
}

impl HReport {
    pub fn to_json(&self) -> Value {
        let grid = |m: &Vec<Vec<f64>>| {
            Value::Array(
                m.iter()
                    .map(|row| {
                        Value::Array(
                            row.iter()
                                .map(|&x| {
                                    if x.is_finite() { json!(x) } else { json!(fmt12(x)) }
                                })
                                .collect(),
                        )
                    })
                    .collect(),
            )
        };
        json!({
            "tail_window": self.tail_window,
            "tail_max": grid(&self.tail_max),
            "tail_min": grid(&self.tail_min),
            "headline": if self.headline.is_finite() { json!(self.headline) }
                else { json!(fmt12(self.headline)) },
            "note": self.note,
            "entries": curve_json(&self.entries),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{Group, GroupSpec};
    use crate::partition::df_model;
    use crate::sofic::build_quotient_approx;
    use crate::space::ModelSpace;

    fn z() -> Group {
        Group::new(GroupSpec::Integers).unwrap()
    }

    fn uniform2_canonical() -> ModelPartition {
        let s = ModelSpace::uniform_bernoulli(z(), 2).unwrap();
        ModelPartition::canonical_bernoulli(&s).unwrap()
    }

    fn binom(n: u64, k: u64) -> u64 {
        (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
    }

    /// Oracle for uniform K=2, F={e}: d = 2|k/m − ½|, so the count is the
    /// binomial sum over sizes k with 2|k/m − ½| ≤ ε.
    fn binomial_oracle(m: u64, eps: f64) -> u64 {
        (0..=m).filter(|&k| (2.0 * (k as f64 / m as f64 - 0.5)).abs() <= eps).map(|k| binom(m, k)).sum()
    }

    #[test]
    fn df_hand_examples() {
        let alpha = uniform2_canonical();
        let sigma = &build_quotient_approx(&z(), &[8]).unwrap()[0];
        let f = vec![z().identity()];
        let beta = FinPartition::new(8, 2, vec![0, 0, 0, 1, 1, 1, 1, 1]).unwrap();
        assert_eq!(df_sigma(sigma, &alpha, &beta, &f).unwrap(), 0.25);
        let exact = FinPartition::new(8, 2, vec![0, 0, 0, 0, 1, 1, 1, 1]).unwrap();
        assert_eq!(df_sigma(sigma, &alpha, &exact, &f).unwrap(), 0.0);
    }

    #[test]
    fn df_bounded_by_two() {
        use rand::{Rng, SeedableRng};
        let alpha = uniform2_canonical();
        let sigma = &build_quotient_approx(&z(), &[8]).unwrap()[0];
        let f = z().ball(1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let beta =
                FinPartition::new(8, 2, (0..8).map(|_| rng.random_range(0..2)).collect()).unwrap();
            let d = df_sigma(sigma, &alpha, &beta, &f).unwrap();
            assert!((0.0..=2.0).contains(&d));
        }
    }

    #[test]
    fn enumerate_binomial_oracles() {
        let alpha = uniform2_canonical();
        let f = vec![z().identity()];
        for (m, eps, expect) in [
            (8u64, 0.25, 182u64),
            (8, 0.1, 70),
            (12, 0.1, 924),
            (16, 0.1, 12870),
        ] {
            assert_eq!(binomial_oracle(m, eps), expect, "oracle self-check");
            let sigma = &build_quotient_approx(&z(), &[m]).unwrap()[0];
            let (c, _) = ap_enumerate(sigma, &alpha, &f, eps, None).unwrap();
            assert_eq!(c.count, expect as f64, "m={m} eps={eps}");
        }
    }

    #[test]
    fn enumerate_edge_cases() {
        let alpha = uniform2_canonical();
        let sigma = &build_quotient_approx(&z(), &[4]).unwrap()[0];
        let f = vec![z().identity()];
        let (all, list) = ap_enumerate(sigma, &alpha, &f, 2.0, Some(100)).unwrap();
        assert_eq!(all.count, 16.0);
        assert_eq!(list.unwrap().len(), 16);
        let (none, _) = ap_enumerate(sigma, &alpha, &f, -0.5, None).unwrap();
        assert_eq!(none.count, 0.0);
        assert_eq!(none.log_count, f64::NEG_INFINITY);
        // listing withheld when over the cap
        let (_, no_list) = ap_enumerate(sigma, &alpha, &f, 2.0, Some(5)).unwrap();
        assert!(no_list.is_none());
    }

    #[test]
    fn enumerate_budget() {
        let alpha = uniform2_canonical();
        let sigma = &build_quotient_approx(&z(), &[64]).unwrap()[0];
        let f = vec![z().identity()];
        let err = ap_enumerate(sigma, &alpha, &f, 0.1, None);
        assert!(matches!(err, Err(Error::Budget(_))));
    }

    #[test]
    fn nesting_in_eps_and_f() {
        let alpha = uniform2_canonical();
        let sigma = &build_quotient_approx(&z(), &[8]).unwrap()[0];
        let f1 = vec![z().identity()];
        let f2 = z().ball(1);
        let count = |f: &[GroupElement], eps: f64| {
            ap_enumerate(sigma, &alpha, f, eps, Some(1 << 16)).unwrap()
        };
        let (_, small) = count(&f1, 0.1);
        let (_, large) = count(&f1, 0.3);
        let (small, large) = (small.unwrap(), large.unwrap());
        assert!(small.iter().all(|b| large.contains(b)));
        let (_, wide) = count(&f2, 0.3);
        let wide = wide.unwrap();
        assert!(wide.iter().all(|b| large.contains(b)), "F-nesting");
    }

    #[test]
    fn df_sigma_consistent_with_model_df() {
        // σ a faithful quotient on a window where the model is exact:
        // the empirical partition of frequencies matches the model one
        let alpha = uniform2_canonical();
        let sigma = &build_quotient_approx(&z(), &[8]).unwrap()[0];
        let f = z().ball(1);
        // alternating labeling on ℤ/8: patterns (x_{v-1},x_v,x_{v+1})
        // alternate (0,1,0)/(1,0,1); model gives each ⅛
        let alternating = FinPartition::new(8, 2, vec![0, 1, 0, 1, 0, 1, 0, 1]).unwrap();
        let d = df_sigma(sigma, &alpha, &alternating, &f).unwrap();
        // both patterns hit with frequency ½ against model ⅛ each;
        // six patterns unseen with model mass ⅛ each
        let expect = 2.0 * (0.5 - 0.125) + 6.0 * 0.125;
        assert!((d - expect).abs() < 1e-12);
        // model-to-model distance of α to itself stays zero for reference
        assert_eq!(df_model(&alpha, &alpha, &f).unwrap(), 0.0);
    }

    #[test]
    fn importance_all_accept_is_exact() {
        let alpha = uniform2_canonical();
        let sigma = &build_quotient_approx(&z(), &[4]).unwrap()[0];
        let f = vec![z().identity()];
        let est = ap_importance_estimate(sigma, &alpha, &f, 2.0, 50, 7).unwrap();
        assert!((est.count - 16.0).abs() < 1e-9, "count {}", est.count);
        assert!(est.stderr.unwrap() < 1e-12);
    }

    #[test]
    fn importance_matches_oracle() {
        let alpha = uniform2_canonical();
        let sigma = &build_quotient_approx(&z(), &[8]).unwrap()[0];
        let f = vec![z().identity()];
        let mut within = 0;
        for seed in 0..20 {
            let est = ap_importance_estimate(sigma, &alpha, &f, 0.25, 4000, seed).unwrap();
            let gap = (est.log_count - 182f64.ln()).abs();
            if gap <= 3.0 * est.stderr.unwrap() {
                within += 1;
            }
        }
        assert!(within >= 19, "only {within}/20 within 3 stderr");
    }

    #[test]
    fn importance_edge_cases() {
        let alpha = uniform2_canonical();
        let sigma = &build_quotient_approx(&z(), &[4]).unwrap()[0];
        let f = vec![z().identity()];
        let neg = ap_importance_estimate(sigma, &alpha, &f, -1.0, 100, 0).unwrap();
        assert_eq!(neg.count, 0.0);
        assert_eq!(neg.log_count, f64::NEG_INFINITY);
        // deterministic in the seed
        let a = ap_importance_estimate(sigma, &alpha, &f, 0.5, 500, 42).unwrap();
        let b = ap_importance_estimate(sigma, &alpha, &f, 0.5, 500, 42).unwrap();
        assert_eq!(a.count, b.count);
        let c = ap_importance_estimate(sigma, &alpha, &f, 0.5, 500, 43).unwrap();
        assert_ne!(a.count, c.count);
        // degenerate proposal rejected
        let s = ModelSpace::bernoulli(z(), vec![1.0, 0.0]).unwrap();
        let bad = ModelPartition::canonical_bernoulli(&s).unwrap();
        assert!(matches!(
            ap_importance_estimate(sigma, &bad, &f, 0.5, 10, 0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn rate_curve_examples() {
        let alpha = uniform2_canonical();
        let sigmas = build_quotient_approx(&z(), &[8, 12, 16]).unwrap();
        let f = vec![z().identity()];
        let curve = rate_curve(&sigmas, &alpha, &f, Some(0), 0.1, RateMode::Exact);
        let rates: Vec<f64> = curve.entries.iter().map(|e| e.rate).collect();
        assert!(rates[0] < rates[1] && rates[1] < rates[2], "{rates:?}");
        assert!((rates[2] - 2f64.ln()).abs() < 0.2);
        for (e, expect) in curve.entries.iter().zip([70f64, 924.0, 12870.0]) {
            assert_eq!(e.log_count, expect.ln());
            assert_eq!(e.rate, expect.ln() / e.m as f64);
        }
        // trivial α: exactly one labeling at every scale
        let triv = crate::partition::ModelPartition::trivial(alpha.space());
        let tcurve = rate_curve(&sigmas, &triv, &f, Some(0), 0.1, RateMode::Exact);
        assert!(tcurve.entries.iter().all(|e| e.rate == 0.0));
        // larger ε ⇒ pointwise no smaller
        let wide = rate_curve(&sigmas, &alpha, &f, Some(0), 0.3, RateMode::Exact);
        for (a, b) in curve.entries.iter().zip(&wide.entries) {
            assert!(b.rate >= a.rate);
        }
    }

    #[test]
    fn rate_curve_records_errors_per_entry() {
        let alpha = uniform2_canonical();
        let sigmas = build_quotient_approx(&z(), &[8, 64]).unwrap();
        let f = vec![z().identity()];
        let curve = rate_curve(&sigmas, &alpha, &f, Some(0), 0.1, RateMode::Exact);
        assert!(curve.entries[0].error.is_none());
        assert!(curve.entries[1].error.is_some());
        assert_eq!(curve.entries[1].mode, "error");
    }

    #[test]
    fn h_report_examples() {
        let alpha = uniform2_canonical();
        let sigmas = build_quotient_approx(&z(), &[8, 12, 16]).unwrap();
        let f_sched = vec![vec![z().identity()]];
        let report =
            h_report(&sigmas, &alpha, &f_sched, Some(&[0]), &[0.1], RateMode::Exact, 3).unwrap();
        assert!((report.headline - 2f64.ln()).abs() < 0.2);
        // single σ, single F, single ε: headline is that rate
        let single = h_report(
            &sigmas[..1],
            &alpha,
            &f_sched,
            Some(&[0]),
            &[0.1],
            RateMode::Exact,
            3,
        )
        .unwrap();
        assert_eq!(single.headline, 70f64.ln() / 8.0);
        // trivial α: headline 0
        let triv = crate::partition::ModelPartition::trivial(alpha.space());
        let t = h_report(&sigmas, &triv, &f_sched, Some(&[0]), &[0.1], RateMode::Exact, 3).unwrap();
        assert_eq!(t.headline, 0.0);
    }

    #[test]
    fn h_report_monotone_in_schedules() {
        let alpha = uniform2_canonical();
        let sigmas = build_quotient_approx(&z(), &[8, 12]).unwrap();
        let f_sched = vec![vec![z().identity()], z().ball(1)];
        let eps_sched = [0.5, 0.25];
        let report = h_report(
            &sigmas,
            &alpha,
            &f_sched,
            Some(&[0, 1]),
            &eps_sched,
            RateMode::Exact,
            2,
        )
        .unwrap();
        // non-increasing down the F schedule, non-decreasing in ε
        for ei in 0..eps_sched.len() {
            assert!(report.tail_max[1][ei] <= report.tail_max[0][ei] + 1e-15);
        }
        for fi in 0..f_sched.len() {
            assert!(report.tail_max[fi][1] <= report.tail_max[fi][0] + 1e-15);
        }
        assert!(report.note.contains("proxy"));
    }

    #[test]
    fn h_report_schedule_validation() {
        let alpha = uniform2_canonical();
        let sigmas = build_quotient_approx(&z(), &[8]).unwrap();
        let not_nested = vec![z().ball(1), vec![z().identity()]];
        assert!(h_report(&sigmas, &alpha, &not_nested, None, &[0.1], RateMode::Exact, 3).is_err());
        let f_sched = vec![vec![z().identity()]];
        assert!(h_report(&sigmas, &alpha, &f_sched, None, &[0.1, 0.2], RateMode::Exact, 3).is_err());
        assert!(h_report(&sigmas, &alpha, &f_sched, None, &[], RateMode::Exact, 3).is_err());
    }

    #[test]
    fn csv_shape() {
        let alpha = uniform2_canonical();
        let sigmas = build_quotient_approx(&z(), &[8]).unwrap();
        let f = vec![z().identity()];
        let curve = rate_curve(&sigmas, &alpha, &f, Some(0), 0.1, RateMode::Exact);
        let csv = curve_csv(&curve.entries);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "i,m,epsilon,F_radius,log_count,rate,mode,stderr");
        let row = lines.next().unwrap();
        assert!(row.starts_with("1,8,"));
        assert!(row.contains(",exact,"));
    }
}
