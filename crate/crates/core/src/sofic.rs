//! Sofic approximations: maps σ from a group into Sym(m), not assumed to
//! be homomorphisms, together with exact good-set certification.

use std::collections::HashMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::group::{
    decode_nf, encode_nf, multiply, Automorphism, Group, GroupElement, GroupSpec, Nf,
};
use crate::perm::Perm;

/// A map σ: G → Sym(m) with a rule for producing images on demand.
#[derive(Debug, Clone)]
pub struct SymMap {
    m: usize,
    group: Group,
    eval: Evaluator,
}

#[derive(Debug, Clone)]
enum Evaluator {
    /// Explicit finite table; undefined outside it.
    Table(Arc<HashMap<GroupElement, Perm>>),
    /// ℤ → ℤ/m: σ(k) is rotation by k.
    ZQuotient,
    /// ℤᵈ → (ℤ/n)ᵈ acting on points indexed row-major; degree nᵈ.
    LatticeQuotient { n: u64 },
    /// Regular action of a finite group on its own (sorted) element list.
    Regular { elements: Arc<Vec<GroupElement>>, index: Arc<HashMap<GroupElement, usize>> },
    /// Følner window rule: f ↦ gf where defined, canonical completion
    /// elsewhere (unmatched sources in ascending order are sent to
    /// unmatched targets in descending order).
    Folner { window: Arc<Vec<GroupElement>>, index: Arc<HashMap<GroupElement, usize>> },
    /// Free group: generator images extended to words by composition.
    FreeWords { gens: Arc<Vec<Perm>> },
    /// σ∘a for an automorphism a.
    Composed { inner: Box<SymMap>, auto: Automorphism },
}

/// Good-set certificate for a finite F ⊂ G.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxReport {
    pub f_set: Vec<GroupElement>,
    /// 0-based indices of points satisfying the two good-set conditions.
    pub good_set: Vec<usize>,
    pub epsilon: f64,
}

impl SymMap {
    pub fn degree(&self) -> usize {
        self.m
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    /// Image permutation of g, or an error when the evaluator cannot
    /// produce one.
    pub fn image(&self, g: &GroupElement) -> Result<Perm> {
        if g.spec() != self.group.spec() {
            return Err(Error::GroupMismatch);
        }
        match &self.eval {
            Evaluator::Table(t) => {
                t.get(g).cloned().ok_or_else(|| Error::SigmaUndefined(g.to_string()))
            }
            Evaluator::ZQuotient => match g.nf() {
                Nf::Int(k) => Ok(Perm::rotation(self.m, *k)),
                _ => unreachable!(),
            },
            Evaluator::LatticeQuotient { n } => match g.nf() {
                Nf::Vec(v) => Ok(lattice_rotation(self.m, *n, v)),
                _ => unreachable!(),
            },
            Evaluator::Regular { elements, index } => {
                let mut images = Vec::with_capacity(self.m);
                for p in elements.iter() {
                    images.push(index[&multiply(g, p)?] as u32);
                }
                Perm::from_images(images)
            }
            Evaluator::Folner { window, index } => folner_image(self.m, window, index, g),
            Evaluator::FreeWords { gens } => match g.nf() {
                Nf::Word(w) => {
                    let mut p = Perm::identity(self.m);
                    // homomorphic extension: σ(l₁…lₙ) = σ(l₁)∘…∘σ(lₙ)
                    for &l in w {
                        let gp = &gens[(l.unsigned_abs() - 1) as usize];
                        let letter = if l > 0 { gp.clone() } else { gp.inverse() };
                        p = p.compose(&letter);
                    }
                    Ok(p)
                }
                _ => unreachable!(),
            },
            Evaluator::Composed { inner, auto } => inner.image(&auto.apply(g)?),
        }
    }

    /// Exact computation of V(F) and ε = 1 − |V(F)|/m.
    pub fn good_set(&self, f_set: &[GroupElement]) -> Result<ApproxReport> {
        let mut images: HashMap<&GroupElement, Perm> = HashMap::new();
        for f in f_set {
            images.insert(f, self.image(f)?);
        }
        let mut products: HashMap<(usize, usize), Perm> = HashMap::new();
        for (i, f1) in f_set.iter().enumerate() {
            for (j, f2) in f_set.iter().enumerate() {
                products.insert((i, j), self.image(&multiply(f1, f2)?)?);
            }
        }
        let mut good = vec![true; self.m];
        for (i, f1) in f_set.iter().enumerate() {
            let p1 = &images[f1];
            for (j, f2) in f_set.iter().enumerate() {
                let p2 = &images[f2];
                let p12 = &products[&(i, j)];
                for (v, ok) in good.iter_mut().enumerate() {
                    if p1.apply(p2.apply(v)) != p12.apply(v) {
                        *ok = false;
                    }
                    if f1 != f2 && p1.apply(v) == p2.apply(v) {
                        *ok = false;
                    }
                }
            }
        }
        let good_set: Vec<usize> = good
            .iter()
            .enumerate()
            .filter_map(|(v, &ok)| ok.then_some(v))
            .collect();
        let epsilon = 1.0 - good_set.len() as f64 / self.m as f64;
        Ok(ApproxReport { f_set: f_set.to_vec(), good_set, epsilon })
    }

    /// σ∘a: image(g) = self.image(a(g)).
    pub fn compose_with_automorphism(&self, auto: &Automorphism) -> Result<SymMap> {
        auto.validate(self.group.spec())?;
        Ok(SymMap {
            m: self.m,
            group: self.group.clone(),
            eval: Evaluator::Composed { inner: Box::new(self.clone()), auto: auto.clone() },
        })
    }

    pub fn from_table(group: Group, m: usize, table: HashMap<GroupElement, Perm>) -> Result<SymMap> {
        for p in table.values() {
            if p.degree() != m {
                return Err(Error::Config("table image degree mismatch".into()));
            }
        }
        let mut table = table;
        table.insert(group.identity(), Perm::identity(m));
        Ok(SymMap { m, group, eval: Evaluator::Table(Arc::new(table)) })
    }

    /// Serialize with images for a declared support set (1-based images).
    pub fn to_json(&self, support: &[GroupElement]) -> Result<Value> {
        let mut entries = Vec::new();
        let mut support: Vec<GroupElement> = support.to_vec();
        support.sort();
        support.dedup();
        for g in &support {
            let img = self.image(g)?;
            entries.push(json!({
                "element": encode_nf(g.nf()),
                "image": img.images().iter().map(|&i| i as u64 + 1).collect::<Vec<_>>(),
            }));
        }
        Ok(json!({
            "m": self.m,
            "group": self.group.spec(),
            "entries": entries,
        }))
    }

    pub fn from_json(v: &Value) -> Result<SymMap> {
        let bad = |msg: &str| Error::Config(format!("symmap json: {msg}"));
        let m = v.get("m").and_then(Value::as_u64).ok_or_else(|| bad("missing m"))? as usize;
        let spec: GroupSpec =
            serde_json::from_value(v.get("group").cloned().ok_or_else(|| bad("missing group"))?)?;
        let group = Group::new(spec)?;
        let mut table = HashMap::new();
        for e in v.get("entries").and_then(Value::as_array).ok_or_else(|| bad("missing entries"))? {
            let nf = decode_nf(
                group.spec(),
                e.get("element").ok_or_else(|| bad("entry missing element"))?,
            )?;
            let img: Vec<u32> = e
                .get("image")
                .and_then(Value::as_array)
                .ok_or_else(|| bad("entry missing image"))?
                .iter()
                .map(|x| {
                    let i = x.as_u64().ok_or_else(|| bad("bad image entry"))?;
                    if i == 0 || i > m as u64 {
                        return Err(bad("image index out of range"));
                    }
                    Ok(i as u32 - 1)
                })
                .collect::<Result<_>>()?;
            table.insert(group.element(nf)?, Perm::from_images(img)?);
        }
        SymMap::from_table(group, m, table)
    }
}

impl ApproxReport {
    pub fn to_json(&self) -> Value {
        json!({
            "F": self.f_set.iter().map(|g| encode_nf(g.nf())).collect::<Vec<_>>(),
            "good_set": self.good_set.iter().map(|&v| v as u64 + 1).collect::<Vec<_>>(),
            "epsilon": self.epsilon,
        })
    }
}

fn lattice_rotation(m: usize, n: u64, shift: &[i64]) -> Perm {
    let d = shift.len();
    let n_us = n as usize;
    let mut images = Vec::with_capacity(m);
    for p in 0..m {
        // row-major coordinates of point p
        let mut q = 0usize;
        let mut rem = p;
        let mut stride = m / n_us;
        for s in shift.iter().take(d) {
            let c = rem / stride;
            rem %= stride;
            let c2 = (c as i64 + s).rem_euclid(n as i64) as usize;
            q += c2 * stride;
            if stride >= n_us {
                stride /= n_us;
            }
        }
        images.push(q as u32);
    }
    Perm::from_images(images).expect("translation is a bijection")
}

fn folner_image(
    m: usize,
    window: &[GroupElement],
    index: &HashMap<GroupElement, usize>,
    g: &GroupElement,
) -> Result<Perm> {
    let mut images: Vec<Option<u32>> = vec![None; m];
    let mut hit = vec![false; m];
    for (i, f) in window.iter().enumerate() {
        let target = multiply(g, f)?;
        if let Some(&t) = index.get(&target) {
            images[i] = Some(t as u32);
            hit[t] = true;
        }
    }
    let free_targets: Vec<u32> =
        hit.iter().enumerate().filter_map(|(t, &h)| (!h).then_some(t as u32)).collect();
    let mut next = free_targets.len();
    let mut out = Vec::with_capacity(m);
    for img in images {
        match img {
            Some(t) => out.push(t),
            None => {
                next -= 1;
                out.push(free_targets[next]);
            }
        }
    }
    Perm::from_images(out)
}

/// Canonical homomorphisms onto finite quotients: ℤ → ℤ/mᵢ, ℤᵈ → (ℤ/nᵢ)ᵈ,
/// and a finite group acting regularly on itself.
pub fn build_quotient_approx(group: &Group, schedule: &[u64]) -> Result<Vec<SymMap>> {
    if schedule.is_empty() {
        return Err(Error::Config("empty quotient schedule".into()));
    }
    if !schedule.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Config("quotient schedule must be strictly increasing".into()));
    }
    match group.spec() {
        GroupSpec::Integers => Ok(schedule
            .iter()
            .map(|&mi| SymMap { m: mi as usize, group: group.clone(), eval: Evaluator::ZQuotient })
            .collect()),
        GroupSpec::IntegerLattice { d } => schedule
            .iter()
            .map(|&n| {
                let m = (n as usize).checked_pow(*d as u32).ok_or_else(|| {
                    Error::Budget(format!("lattice quotient degree {n}^{d} overflows"))
                })?;
                Ok(SymMap { m, group: group.clone(), eval: Evaluator::LatticeQuotient { n } })
            })
            .collect(),
        GroupSpec::Cyclic { .. } | GroupSpec::Symmetric { .. } => {
            let elements = Arc::new(group.all_elements()?);
            let index = Arc::new(crate::group::sorted_index(&elements));
            Ok(vec![SymMap {
                m: elements.len(),
                group: group.clone(),
                eval: Evaluator::Regular { elements, index },
            }])
        }
        _ => Err(Error::Unsupported(format!(
            "no quotient builder for {:?}",
            group.spec()
        ))),
    }
}

/// Følner-window approximations for the amenable built-ins. The schedule
/// gives window side lengths: [0,L) for ℤ, the box [0,L)ᵈ for ℤᵈ, and the
/// whole group for finite kinds.
pub fn build_folner_approx(group: &Group, window_schedule: &[u64]) -> Result<Vec<SymMap>> {
    if !group.spec().is_amenable_builtin() {
        return Err(Error::Unsupported("no Følner schedule".into()));
    }
    if window_schedule.is_empty() {
        return Err(Error::Config("empty window schedule".into()));
    }
    window_schedule
        .iter()
        .map(|&len| {
            let mut window = folner_window(group, group.spec(), len)?;
            window.sort();
            let index = crate::group::sorted_index(&window);
            Ok(SymMap {
                m: window.len(),
                group: group.clone(),
                eval: Evaluator::Folner { window: Arc::new(window), index: Arc::new(index) },
            })
        })
        .collect()
}

fn folner_window(group: &Group, spec: &GroupSpec, len: u64) -> Result<Vec<GroupElement>> {
    if len == 0 {
        return Err(Error::Config("window length must be positive".into()));
    }
    match spec {
        GroupSpec::Integers => {
            Ok((0..len as i64).map(|k| group.element(Nf::Int(k)).unwrap()).collect())
        }
        GroupSpec::IntegerLattice { d } => {
            let mut out = vec![vec![]];
            for _ in 0..*d {
                let mut next = Vec::new();
                for v in &out {
                    for k in 0..len as i64 {
                        let mut w = v.clone();
                        w.push(k);
                        next.push(w);
                    }
                }
                out = next;
            }
            out.into_iter().map(|v| group.element(Nf::Vec(v))).collect()
        }
        GroupSpec::Cyclic { .. } | GroupSpec::Symmetric { .. } => group.all_elements(),
        GroupSpec::DirectProduct { factors } => {
            let mut windows: Vec<Vec<Nf>> = Vec::new();
            for f in factors {
                let sub = Group::new(f.clone())?;
                let w = folner_window(&sub, f, len)?;
                windows.push(w.into_iter().map(|g| g.nf().clone()).collect());
            }
            let mut tuples: Vec<Vec<Nf>> = vec![vec![]];
            for w in &windows {
                let mut next = Vec::new();
                for t in &tuples {
                    for nf in w {
                        let mut t2 = t.clone();
                        t2.push(nf.clone());
                        next.push(t2);
                    }
                }
                tuples = next;
            }
            tuples.into_iter().map(|t| group.element(Nf::Tuple(t))).collect()
        }
        GroupSpec::Free { .. } => Err(Error::Unsupported("no Følner schedule".into())),
    }
}

/// Independent uniformly random generator permutations, extended to words
/// by composition. Deterministic given the seed.
pub fn build_random_free_approx(group: &Group, m: usize, seed: u64) -> Result<SymMap> {
    let rank = match group.spec() {
        GroupSpec::Free { rank } => *rank,
        _ => return Err(Error::Unsupported("random approximation requires a free group".into())),
    };
    if m == 0 {
        return Err(Error::Config("degree must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gens: Vec<Perm> = (0..rank).map(|_| Perm::random(m, &mut rng)).collect();
    Ok(SymMap { m, group: group.clone(), eval: Evaluator::FreeWords { gens: Arc::new(gens) } })
}
