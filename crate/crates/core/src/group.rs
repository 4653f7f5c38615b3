//! Concrete countable groups with exact normal forms.
//!
//! Elements are immutable values with structural equality and hashing, so
//! they can serve as keys in σ-tables and as window coordinates. Normal
//! forms are chosen per kind: reduced words for free groups, integer
//! vectors for lattices, residues for cyclic groups, image tables for
//! symmetric groups, tuples for direct products.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which concrete group a spec describes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum GroupSpec {
    Integers,
    IntegerLattice { d: usize },
    Free { rank: usize },
    Cyclic { n: u64 },
    Symmetric { n: usize },
    DirectProduct { factors: Vec<GroupSpec> },
}

/// Canonical encoding of a group element. Two elements are equal iff their
/// encodings are identical.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Nf {
    Int(i64),
    Vec(Vec<i64>),
    /// Reduced word; letter `k > 0` is generator `k-1`, `-k` its inverse.
    Word(Vec<i8>),
    Res(u64),
    /// Image table of a permutation of {0..n-1}.
    Perm(Vec<u8>),
    Tuple(Vec<Nf>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    spec: Arc<GroupSpec>,
    nf: Nf,
}

impl GroupSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            GroupSpec::Integers => Ok(()),
            GroupSpec::IntegerLattice { d } if *d >= 1 => Ok(()),
            GroupSpec::Free { rank } if *rank >= 1 => Ok(()),
            GroupSpec::Cyclic { n } if *n >= 1 => Ok(()),
            GroupSpec::Symmetric { n } if *n >= 1 && *n <= 20 => Ok(()),
            GroupSpec::DirectProduct { factors } if !factors.is_empty() => {
                factors.iter().try_for_each(|f| f.validate())
            }
            _ => Err(Error::Config(format!("invalid group spec: {self:?}"))),
        }
    }

    /// Is this group finite (and if so, how large)?
    pub fn order(&self) -> Option<u64> {
        match self {
            GroupSpec::Integers | GroupSpec::IntegerLattice { .. } | GroupSpec::Free { .. } => None,
            GroupSpec::Cyclic { n } => Some(*n),
            GroupSpec::Symmetric { n } => {
                let mut f = 1u64;
                for i in 2..=(*n as u64) {
                    f = f.checked_mul(i)?;
                }
                Some(f)
            }
            GroupSpec::DirectProduct { factors } => {
                let mut o = 1u64;
                for f in factors {
                    o = o.checked_mul(f.order()?)?;
                }
                Some(o)
            }
        }
    }

    pub fn is_amenable_builtin(&self) -> bool {
        match self {
            GroupSpec::Integers | GroupSpec::IntegerLattice { .. } => true,
            GroupSpec::Cyclic { .. } | GroupSpec::Symmetric { .. } => true,
            GroupSpec::Free { rank } => *rank <= 1,
            GroupSpec::DirectProduct { factors } => factors.iter().all(|f| f.is_amenable_builtin()),
        }
    }
}

/// A group together with its distinguished generating set.
#[derive(Debug, Clone)]
pub struct Group {
    spec: Arc<GroupSpec>,
}

impl PartialEq for Group {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}
impl Eq for Group {}

impl Group {
    pub fn new(spec: GroupSpec) -> Result<Group> {
        spec.validate()?;
        Ok(Group { spec: Arc::new(spec) })
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn spec_arc(&self) -> Arc<GroupSpec> {
        Arc::clone(&self.spec)
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement { spec: Arc::clone(&self.spec), nf: identity_nf(&self.spec) }
    }

    /// Distinguished generators, in a fixed order.
    pub fn generators(&self) -> Vec<GroupElement> {
        generator_nfs(&self.spec)
            .into_iter()
            .map(|nf| GroupElement { spec: Arc::clone(&self.spec), nf })
            .collect()
    }

    pub fn element(&self, nf: Nf) -> Result<GroupElement> {
        check_nf(&self.spec, &nf)?;
        Ok(GroupElement { spec: Arc::clone(&self.spec), nf })
    }

    /// Integer shortcut for ℤ.
    pub fn int(&self, k: i64) -> Result<GroupElement> {
        self.element(Nf::Int(k))
    }

    /// All elements expressible as words of length ≤ radius in the
    /// generators and their inverses. Contains the identity and is closed
    /// under inverse.
    pub fn ball(&self, radius: u32) -> Vec<GroupElement> {
        let mut gens = self.generators();
        let inverses: Vec<GroupElement> = gens.iter().map(|g| inverse(g)).collect();
        gens.extend(inverses);
        let mut seen: HashSet<GroupElement> = HashSet::new();
        let mut queue = VecDeque::new();
        let e = self.identity();
        seen.insert(e.clone());
        queue.push_back((e, 0u32));
        while let Some((g, d)) = queue.pop_front() {
            if d == radius {
                continue;
            }
            for s in &gens {
                let h = multiply(&g, s).expect("same owner");
                if seen.insert(h.clone()) {
                    queue.push_back((h, d + 1));
                }
            }
        }
        let mut out: Vec<GroupElement> = seen.into_iter().collect();
        out.sort();
        out
    }

    /// All elements of a finite group, sorted.
    pub fn all_elements(&self) -> Result<Vec<GroupElement>> {
        let order = self
            .spec
            .order()
            .ok_or_else(|| Error::Unsupported("infinite group has no element list".into()))?;
        let mut r = 1;
        loop {
            let b = self.ball(r);
            if b.len() as u64 == order {
                return Ok(b);
            }
            if r > 64 {
                return Err(Error::Unsupported("generator set does not exhaust group".into()));
            }
            r += 1;
        }
    }
}

impl GroupElement {
    pub fn nf(&self) -> &Nf {
        &self.nf
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn group(&self) -> Group {
        Group { spec: Arc::clone(&self.spec) }
    }

    pub fn is_identity(&self) -> bool {
        self.nf == identity_nf(&self.spec)
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", encode_nf(&self.nf))
    }
}

fn identity_nf(spec: &GroupSpec) -> Nf {
    match spec {
        GroupSpec::Integers => Nf::Int(0),
        GroupSpec::IntegerLattice { d } => Nf::Vec(vec![0; *d]),
        GroupSpec::Free { .. } => Nf::Word(vec![]),
        GroupSpec::Cyclic { .. } => Nf::Res(0),
        GroupSpec::Symmetric { n } => Nf::Perm((0..*n as u8).collect()),
        GroupSpec::DirectProduct { factors } => {
            Nf::Tuple(factors.iter().map(identity_nf).collect())
        }
    }
}

fn generator_nfs(spec: &GroupSpec) -> Vec<Nf> {
    match spec {
        GroupSpec::Integers => vec![Nf::Int(1)],
        GroupSpec::IntegerLattice { d } => (0..*d)
            .map(|i| {
                let mut v = vec![0; *d];
                v[i] = 1;
                Nf::Vec(v)
            })
            .collect(),
        GroupSpec::Free { rank } => (1..=*rank as i8).map(|k| Nf::Word(vec![k])).collect(),
        GroupSpec::Cyclic { n } => {
            if *n == 1 {
                vec![Nf::Res(0)]
            } else {
                vec![Nf::Res(1)]
            }
        }
        GroupSpec::Symmetric { n } => {
            let n = *n;
            if n == 1 {
                return vec![Nf::Perm(vec![0])];
            }
            // transposition (0 1) and the n-cycle
            let mut t: Vec<u8> = (0..n as u8).collect();
            t.swap(0, 1);
            let c: Vec<u8> = (0..n).map(|i| ((i + 1) % n) as u8).collect();
            if n == 2 {
                vec![Nf::Perm(t)]
            } else {
                vec![Nf::Perm(t), Nf::Perm(c)]
            }
        }
        GroupSpec::DirectProduct { factors } => {
            let mut out = Vec::new();
            for (i, f) in factors.iter().enumerate() {
                for g in generator_nfs(f) {
                    let mut tuple: Vec<Nf> = factors.iter().map(identity_nf).collect();
                    tuple[i] = g;
                    out.push(Nf::Tuple(tuple));
                }
            }
            out
        }
    }
}

fn check_nf(spec: &GroupSpec, nf: &Nf) -> Result<()> {
    let ok = match (spec, nf) {
        (GroupSpec::Integers, Nf::Int(_)) => true,
        (GroupSpec::IntegerLattice { d }, Nf::Vec(v)) => v.len() == *d,
        (GroupSpec::Free { rank }, Nf::Word(w)) => {
            w.iter().all(|&l| l != 0 && (l.unsigned_abs() as usize) <= *rank)
                && w.windows(2).all(|p| p[0] != -p[1])
        }
        (GroupSpec::Cyclic { n }, Nf::Res(r)) => r < n,
        (GroupSpec::Symmetric { n }, Nf::Perm(p)) => {
            p.len() == *n && {
                let mut seen = vec![false; *n];
                p.iter().all(|&i| {
                    let i = i as usize;
                    i < *n && !std::mem::replace(&mut seen[i], true)
                })
            }
        }
        (GroupSpec::DirectProduct { factors }, Nf::Tuple(t)) => {
            t.len() == factors.len()
                && factors.iter().zip(t).all(|(f, n)| check_nf(f, n).is_ok())
        }
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!("normal form {nf:?} invalid for {spec:?}")))
    }
}

fn mul_nf(spec: &GroupSpec, a: &Nf, b: &Nf) -> Nf {
    match (spec, a, b) {
        (GroupSpec::Integers, Nf::Int(x), Nf::Int(y)) => Nf::Int(x + y),
        (GroupSpec::IntegerLattice { .. }, Nf::Vec(x), Nf::Vec(y)) => {
            Nf::Vec(x.iter().zip(y).map(|(a, b)| a + b).collect())
        }
        (GroupSpec::Free { .. }, Nf::Word(x), Nf::Word(y)) => {
            let mut w = x.clone();
            for &l in y {
                if w.last() == Some(&-l) {
                    w.pop();
                } else {
                    w.push(l);
                }
            }
            Nf::Word(w)
        }
        (GroupSpec::Cyclic { n }, Nf::Res(x), Nf::Res(y)) => Nf::Res((x + y) % n),
        (GroupSpec::Symmetric { .. }, Nf::Perm(x), Nf::Perm(y)) => {
            // (xy)(i) = x(y(i))
            Nf::Perm(y.iter().map(|&i| x[i as usize]).collect())
        }
        (GroupSpec::DirectProduct { factors }, Nf::Tuple(x), Nf::Tuple(y)) => Nf::Tuple(
            factors
                .iter()
                .zip(x.iter().zip(y))
                .map(|(f, (a, b))| mul_nf(f, a, b))
                .collect(),
        ),
        _ => unreachable!("normal form checked at construction"),
    }
}

fn inv_nf(spec: &GroupSpec, a: &Nf) -> Nf {
    match (spec, a) {
        (GroupSpec::Integers, Nf::Int(x)) => Nf::Int(-x),
        (GroupSpec::IntegerLattice { .. }, Nf::Vec(x)) => Nf::Vec(x.iter().map(|a| -a).collect()),
        (GroupSpec::Free { .. }, Nf::Word(x)) => Nf::Word(x.iter().rev().map(|&l| -l).collect()),
        (GroupSpec::Cyclic { n }, Nf::Res(x)) => Nf::Res((n - x) % n),
        (GroupSpec::Symmetric { .. }, Nf::Perm(x)) => {
            let mut p = vec![0u8; x.len()];
            for (i, &j) in x.iter().enumerate() {
                p[j as usize] = i as u8;
            }
            Nf::Perm(p)
        }
        (GroupSpec::DirectProduct { factors }, Nf::Tuple(x)) => {
            Nf::Tuple(factors.iter().zip(x).map(|(f, a)| inv_nf(f, a)).collect())
        }
        _ => unreachable!("normal form checked at construction"),
    }
}

/// Canonical normal form of `gh`.
pub fn multiply(g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
    if g.spec != h.spec {
        return Err(Error::GroupMismatch);
    }
    Ok(GroupElement { spec: Arc::clone(&g.spec), nf: mul_nf(&g.spec, &g.nf, &h.nf) })
}

pub fn inverse(g: &GroupElement) -> GroupElement {
    GroupElement { spec: Arc::clone(&g.spec), nf: inv_nf(&g.spec, &g.nf) }
}

/// {ab : a∈A, b∈B}, deduplicated by normal form and sorted.
pub fn product_set(a: &[GroupElement], b: &[GroupElement]) -> Result<Vec<GroupElement>> {
    let mut out = BTreeSet::new();
    for x in a {
        for y in b {
            out.insert(multiply(x, y)?);
        }
    }
    Ok(out.into_iter().collect())
}

/// Is F connected in the left-Cayley graph of (G, S)? Edges join g and sg
/// for s ∈ S, taken as undirected.
pub fn is_s_connected(f_set: &[GroupElement], s_set: &[GroupElement]) -> Result<bool> {
    if f_set.is_empty() {
        return Ok(true);
    }
    Ok(s_connected_order(f_set, s_set, &f_set[0])?.len() == f_set.len())
}

/// BFS order of F from `start` in the left-Cayley graph; every prefix of
/// the returned list is S-connected. Stops at the reachable component.
pub fn s_connected_order(
    f_set: &[GroupElement],
    s_set: &[GroupElement],
    start: &GroupElement,
) -> Result<Vec<GroupElement>> {
    let members: HashSet<&GroupElement> = f_set.iter().collect();
    if !members.contains(start) {
        return Err(Error::Precondition("start element not in F".into()));
    }
    let mut steps: Vec<GroupElement> = Vec::new();
    for s in s_set {
        steps.push(s.clone());
        steps.push(inverse(s));
    }
    let mut order = vec![start.clone()];
    let mut seen: HashSet<GroupElement> = HashSet::from([start.clone()]);
    let mut qi = 0;
    while qi < order.len() {
        let g = order[qi].clone();
        qi += 1;
        for s in &steps {
            let h = multiply(s, &g)?;
            if members.contains(&h) && seen.insert(h.clone()) {
                order.push(h);
            }
        }
    }
    Ok(order)
}

/// An automorphism of one of the built-in groups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Automorphism {
    Identity,
    /// g ↦ g⁻¹ on abelian kinds (ℤ, ℤᵈ, cyclic).
    Negation,
    /// Permute lattice coordinates.
    CoordPermutation { perm: Vec<usize> },
    /// Permute the free generators; `perm[i]` is the image of generator i.
    FreeGeneratorPermutation { perm: Vec<usize> },
}

impl Automorphism {
    pub fn validate(&self, spec: &GroupSpec) -> Result<()> {
        let ok = match self {
            Automorphism::Identity => true,
            Automorphism::Negation => matches!(
                spec,
                GroupSpec::Integers | GroupSpec::IntegerLattice { .. } | GroupSpec::Cyclic { .. }
            ),
            Automorphism::CoordPermutation { perm } => {
                matches!(spec, GroupSpec::IntegerLattice { d } if is_perm(perm, *d))
            }
            Automorphism::FreeGeneratorPermutation { perm } => {
                matches!(spec, GroupSpec::Free { rank } if is_perm(perm, *rank))
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Precondition(format!("{self:?} is not an automorphism of {spec:?}")))
        }
    }

    pub fn apply(&self, g: &GroupElement) -> Result<GroupElement> {
        self.validate(&g.spec)?;
        let nf = match (self, &g.nf) {
            (Automorphism::Identity, nf) => nf.clone(),
            (Automorphism::Negation, _) => inv_nf(&g.spec, &g.nf),
            (Automorphism::CoordPermutation { perm }, Nf::Vec(v)) => {
                let mut w = vec![0; v.len()];
                for (i, &p) in perm.iter().enumerate() {
                    w[p] = v[i];
                }
                Nf::Vec(w)
            }
            (Automorphism::FreeGeneratorPermutation { perm }, Nf::Word(w)) => Nf::Word(
                w.iter()
                    .map(|&l| {
                        let img = (perm[(l.unsigned_abs() - 1) as usize] + 1) as i8;
                        if l > 0 {
                            img
                        } else {
                            -img
                        }
                    })
                    .collect(),
            ),
            _ => unreachable!("validated above"),
        };
        Ok(GroupElement { spec: Arc::clone(&g.spec), nf })
    }

    pub fn inverse(&self) -> Automorphism {
        match self {
            Automorphism::Identity => Automorphism::Identity,
            Automorphism::Negation => Automorphism::Negation,
            Automorphism::CoordPermutation { perm } => {
                Automorphism::CoordPermutation { perm: invert_usize_perm(perm) }
            }
            Automorphism::FreeGeneratorPermutation { perm } => {
                Automorphism::FreeGeneratorPermutation { perm: invert_usize_perm(perm) }
            }
        }
    }
}

fn is_perm(p: &[usize], n: usize) -> bool {
    p.len() == n && {
        let mut seen = vec![false; n];
        p.iter().all(|&i| i < n && !std::mem::replace(&mut seen[i], true))
    }
}

fn invert_usize_perm(p: &[usize]) -> Vec<usize> {
    let mut q = vec![0; p.len()];
    for (i, &j) in p.iter().enumerate() {
        q[j] = i;
    }
    q
}

// ---- serialization of elements ----

/// Encode a normal form as a JSON value: integers as numbers, vectors and
/// image tables as arrays, free words as letter strings ("abA" with
/// capitals for inverses), tuples as arrays.
pub fn encode_nf(nf: &Nf) -> serde_json::Value {
    use serde_json::Value;
    match nf {
        Nf::Int(k) => Value::from(*k),
        Nf::Res(r) => Value::from(*r),
        Nf::Vec(v) => Value::from(v.clone()),
        Nf::Perm(p) => Value::from(p.iter().map(|&i| i as u64 + 1).collect::<Vec<_>>()),
        Nf::Word(w) => Value::from(word_to_string(w)),
        Nf::Tuple(t) => Value::from(t.iter().map(encode_nf).collect::<Vec<_>>()),
    }
}

pub fn decode_nf(spec: &GroupSpec, v: &serde_json::Value) -> Result<Nf> {
    let bad = || Error::Config(format!("cannot decode element {v} for {spec:?}"));
    let nf = match spec {
        GroupSpec::Integers => Nf::Int(v.as_i64().ok_or_else(bad)?),
        GroupSpec::Cyclic { .. } => Nf::Res(v.as_u64().ok_or_else(bad)?),
        GroupSpec::IntegerLattice { .. } => Nf::Vec(
            v.as_array()
                .ok_or_else(bad)?
                .iter()
                .map(|x| x.as_i64().ok_or_else(bad))
                .collect::<Result<_>>()?,
        ),
        GroupSpec::Symmetric { .. } => Nf::Perm(
            v.as_array()
                .ok_or_else(bad)?
                .iter()
                .map(|x| Ok(x.as_u64().ok_or_else(bad)? as u8 - 1))
                .collect::<Result<_>>()?,
        ),
        GroupSpec::Free { .. } => Nf::Word(word_from_string(v.as_str().ok_or_else(bad)?)?),
        GroupSpec::DirectProduct { factors } => Nf::Tuple(
            factors
                .iter()
                .zip(v.as_array().ok_or_else(bad)?)
                .map(|(f, x)| decode_nf(f, x))
                .collect::<Result<_>>()?,
        ),
    };
    check_nf(spec, &nf)?;
    Ok(nf)
}

fn word_to_string(w: &[i8]) -> String {
    w.iter()
        .map(|&l| {
            let c = (b'a' + (l.unsigned_abs() - 1)) as char;
            if l > 0 {
                c
            } else {
                c.to_ascii_uppercase()
            }
        })
        .collect()
}

fn word_from_string(s: &str) -> Result<Vec<i8>> {
    s.chars()
        .map(|c| {
            if c.is_ascii_lowercase() {
                Ok((c as u8 - b'a' + 1) as i8)
            } else if c.is_ascii_uppercase() {
                Ok(-((c as u8 - b'A' + 1) as i8))
            } else {
                Err(Error::Config(format!("bad word character {c:?}")))
            }
        })
        .collect()
}

/// Deterministic enumeration map for elements of a finite group and a
/// membership index, both in sorted normal-form order.
pub fn sorted_index(elements: &[GroupElement]) -> HashMap<GroupElement, usize> {
    elements.iter().cloned().enumerate().map(|(i, g)| (g, i)).collect()
}
