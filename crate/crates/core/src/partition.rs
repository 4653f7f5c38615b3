//! Ordered partitions of model G-systems: joins, translates, coarsenings,
//! splittings, entropy and the Rohlin metric, plus the window pseudo-metric
//! d_F used for pattern counting.
//!
//! Floating point is kept reproducible the hard way: every configuration
//! weight multiplies its factors in sorted order, and every atom/cell
//! measure sums its configuration weights in sorted order. Translation
//! permutes those multisets without changing them, so translates preserve
//! measures, entropies and the Rohlin metric bit-for-bit.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::group::{decode_nf, encode_nf, inverse, multiply, Group, GroupElement};
use crate::space::{Backend, ModelSpace, CONFIG_BUDGET};

#[derive(Debug, Clone)]
pub struct ModelPartition {
    space: Arc<ModelSpace>,
    /// Sorted coordinate window (Bernoulli backend; empty for finite
    /// G-sets and for the trivial partition).
    window: Vec<GroupElement>,
    /// Row-major over K^window with window[0] most significant, or one
    /// entry per point of a finite G-set. Values in 0..u.
    labels: Vec<u32>,
    u: usize,
}

fn sorted_sum(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs.iter().sum()
}

fn sorted_product(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs.iter().product()
}

fn check_window_budget(k: usize, len: usize) -> Result<usize> {
    let mut n: usize = 1;
    for _ in 0..len {
        n = n
            .checked_mul(k)
            .filter(|&n| n <= CONFIG_BUDGET)
            .ok_or_else(|| Error::Budget(format!("window of {len} coordinates over {k} symbols")))?;
    }
    Ok(n)
}

/// One enumeration frame shared by all partitions entering an operation:
/// either the configurations of a common Bernoulli window, or the points
/// of a finite G-set.
enum Frame<'a> {
    Bernoulli { window: Vec<GroupElement>, k: usize, weights: &'a [f64] },
    Points { weights: &'a [f64] },
}

impl<'a> Frame<'a> {
    fn over(parts: &[&'a ModelPartition]) -> Result<Frame<'a>> {
        let first = parts.first().ok_or_else(|| Error::Precondition("no partitions".into()))?;
        for p in &parts[1..] {
            if !first.space.same_space(&p.space) {
                return Err(Error::SpaceMismatch);
            }
        }
        match first.space.backend() {
            Backend::Bernoulli { weights } => {
                let mut window: Vec<GroupElement> = Vec::new();
                for p in parts {
                    window.extend(p.window.iter().cloned());
                }
                window.sort();
                window.dedup();
                check_window_budget(weights.len(), window.len())?;
                Ok(Frame::Bernoulli { window, k: weights.len(), weights })
            }
            Backend::FiniteGSet { weights, .. } => Ok(Frame::Points { weights }),
        }
    }

    fn n_configs(&self) -> usize {
        match self {
            Frame::Bernoulli { window, k, .. } => k.pow(window.len() as u32),
            Frame::Points { weights } => weights.len(),
        }
    }

    /// Reader for a partition's label at a frame configuration.
    fn reader(&self, p: &'a ModelPartition) -> Reader<'a> {
        match self {
            Frame::Bernoulli { window, k, .. } => {
                let positions: Vec<usize> = p
                    .window
                    .iter()
                    .map(|w| window.binary_search(w).expect("window not embedded in frame"))
                    .collect();
                let mut strides = vec![1usize; positions.len()];
                for i in (0..positions.len().saturating_sub(1)).rev() {
                    strides[i] = strides[i + 1] * k;
                }
                Reader { positions, strides, labels: &p.labels }
            }
            Frame::Points { .. } => Reader {
                positions: vec![0],
                strides: vec![0],
                labels: &p.labels,
            },
        }
    }

    /// Visit every configuration with its digits (Bernoulli) or point
    /// index, and its canonically computed weight.
    fn for_each(&self, mut visit: impl FnMut(usize, &[usize], f64)) {
        match self {
            Frame::Bernoulli { window, k, weights } => {
                let len = window.len();
                let mut digits = vec![0usize; len];
                let total = self.n_configs();
                for c in 0..total {
                    let w = sorted_product(digits.iter().map(|&d| weights[d]).collect());
                    visit(c, &digits, w);
                    for p in (0..len).rev() {
                        digits[p] += 1;
                        if digits[p] < *k {
                            break;
                        }
                        digits[p] = 0;
                    }
                }
            }
            Frame::Points { weights } => {
                for (c, &w) in weights.iter().enumerate() {
                    visit(c, &[c], w);
                }
            }
        }
    }
}

struct Reader<'a> {
    positions: Vec<usize>,
    strides: Vec<usize>,
    labels: &'a [u32],
}

impl Reader<'_> {
    fn label(&self, c: usize, digits: &[usize]) -> usize {
        if self.strides.first() == Some(&0) {
            return self.labels[c] as usize;
        }
        let mut idx = 0usize;
        for (p, &pos) in self.positions.iter().enumerate() {
            idx += digits[pos] * self.strides[p];
        }
        self.labels[idx] as usize
    }
}

impl ModelPartition {
    fn build(
        space: Arc<ModelSpace>,
        mut window: Vec<GroupElement>,
        labels: Vec<u32>,
        u: usize,
    ) -> ModelPartition {
        window.dedup();
        debug_assert!(window.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(labels.iter().all(|&l| (l as usize) < u));
        ModelPartition { space, window, labels, u }
    }

    /// The partition {B_k = {x | x(e) = k}} of a Bernoulli space.
    pub fn canonical_bernoulli(space: &ModelSpace) -> Result<ModelPartition> {
        let k = space
            .alphabet_size()
            .ok_or_else(|| Error::Unsupported("canonical partition needs a Bernoulli space".into()))?;
        Ok(ModelPartition::build(
            Arc::new(space.clone()),
            vec![space.group().identity()],
            (0..k as u32).collect(),
            k,
        ))
    }

    /// One atom covering everything.
    pub fn trivial(space: &ModelSpace) -> ModelPartition {
        let labels = match space.backend() {
            Backend::Bernoulli { .. } => vec![0],
            Backend::FiniteGSet { weights, .. } => vec![0; weights.len()],
        };
        ModelPartition::build(Arc::new(space.clone()), vec![], labels, 1)
    }

    /// Assemble from explicit labels over a window (Bernoulli backend).
    pub fn from_labels(
        space: &ModelSpace,
        window: Vec<GroupElement>,
        labels: Vec<u32>,
        u: usize,
    ) -> Result<ModelPartition> {
        match space.backend() {
            Backend::Bernoulli { weights } => {
                let mut idx: Vec<usize> = (0..window.len()).collect();
                idx.sort_by(|&a, &b| window[a].cmp(&window[b]));
                let sorted: Vec<GroupElement> = idx.iter().map(|&i| window[i].clone()).collect();
                if sorted.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::Config("duplicate window coordinate".into()));
                }
                let n = check_window_budget(weights.len(), window.len())?;
                if labels.len() != n {
                    return Err(Error::Config(format!(
                        "expected {n} labels, got {}",
                        labels.len()
                    )));
                }
                if u == 0 || labels.iter().any(|&l| l as usize >= u) {
                    return Err(Error::Config("label out of range".into()));
                }
                // reorder row-major data to the sorted window
                let k = weights.len();
                let relabeled = permute_axes(&labels, k, &idx);
                Ok(ModelPartition::build(Arc::new(space.clone()), sorted, relabeled, u))
            }
            Backend::FiniteGSet { weights, .. } => {
                if !window.is_empty() {
                    return Err(Error::Config("finite G-set partitions take no window".into()));
                }
                if labels.len() != weights.len() {
                    return Err(Error::Config("one label per point required".into()));
                }
                if u == 0 || labels.iter().any(|&l| l as usize >= u) {
                    return Err(Error::Config("label out of range".into()));
                }
                Ok(ModelPartition::build(Arc::new(space.clone()), vec![], labels, u))
            }
        }
    }

    pub fn space(&self) -> &ModelSpace {
        &self.space
    }

    pub fn window(&self) -> &[GroupElement] {
        &self.window
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn atom_count(&self) -> usize {
        self.u
    }

    /// Atom measures; canonical summation makes these exactly
    /// translation-invariant.
    pub fn atom_measures(&self) -> Vec<f64> {
        let frame = Frame::over(&[self]).expect("single-partition frame");
        let reader = frame.reader(self);
        let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); self.u];
        frame.for_each(|c, digits, w| buckets[reader.label(c, digits)].push(w));
        buckets.into_iter().map(sorted_sum).collect()
    }

    /// gα: atom i of the result is g·(atom i), so the labeling of the
    /// result reads coordinate g·w wherever this one reads w.
    pub fn translate(&self, g: &GroupElement) -> Result<ModelPartition> {
        if g.spec() != self.space.group().spec() {
            return Err(Error::GroupMismatch);
        }
        match self.space.backend() {
            Backend::Bernoulli { weights } => {
                let moved: Vec<GroupElement> =
                    self.window.iter().map(|w| multiply(g, w)).collect::<Result<_>>()?;
                let mut idx: Vec<usize> = (0..moved.len()).collect();
                idx.sort_by(|&a, &b| moved[a].cmp(&moved[b]));
                let window: Vec<GroupElement> = idx.iter().map(|&i| moved[i].clone()).collect();
                let labels = permute_axes(&self.labels, weights.len(), &idx);
                Ok(ModelPartition::build(self.space.clone(), window, labels, self.u))
            }
            Backend::FiniteGSet { elements, index, .. } => {
                let ginv = inverse(g);
                let mut labels = Vec::with_capacity(self.labels.len());
                for q in elements.iter() {
                    labels.push(self.labels[index[&multiply(&ginv, q)?]]);
                }
                Ok(ModelPartition::build(self.space.clone(), vec![], labels, self.u))
            }
        }
    }

    /// α∨β with atoms the positive-measure intersections A_i∩B_j in
    /// lexicographic (i,j) order.
    pub fn join(&self, other: &ModelPartition) -> Result<ModelPartition> {
        self.join_impl(other, false)
    }

    /// α∨β keeping all u·v pairs, empty ones included, with atom (i,j)
    /// at index i·v + j. Pattern-counting maps need this fixed indexing.
    pub fn join_all_pairs(&self, other: &ModelPartition) -> Result<ModelPartition> {
        self.join_impl(other, true)
    }

    fn join_impl(&self, other: &ModelPartition, keep_empty: bool) -> Result<ModelPartition> {
        let frame = Frame::over(&[self, other])?;
        let ra = frame.reader(self);
        let rb = frame.reader(other);
        let mut pairs: Vec<u32> = Vec::with_capacity(frame.n_configs());
        let mut seen: BTreeMap<u32, u32> = BTreeMap::new();
        frame.for_each(|c, digits, w| {
            let pair = (ra.label(c, digits) * other.u + rb.label(c, digits)) as u32;
            pairs.push(pair);
            if w > 0.0 {
                seen.entry(pair).or_insert(0);
            }
        });
        let (labels, u) = if keep_empty {
            (pairs, self.u * other.u)
        } else {
            for (rank, (_, v)) in seen.iter_mut().enumerate() {
                *v = rank as u32;
            }
            // configs of weight zero land in the nearest surviving cell;
            // they carry no measure so the choice is immaterial
            let relabel =
                |p: u32| *seen.get(&p).unwrap_or_else(|| seen.values().next().expect("nonempty"));
            (pairs.into_iter().map(relabel).collect(), seen.len().max(1))
        };
        let window = match &frame {
            Frame::Bernoulli { window, .. } => window.clone(),
            Frame::Points { .. } => vec![],
        };
        Ok(ModelPartition::build(self.space.clone(), window, labels, u))
    }

    /// α^F = ⋁_{f∈F} fα, joined in sorted element order.
    pub fn windowed_join(&self, f_set: &[GroupElement]) -> Result<ModelPartition> {
        if f_set.is_empty() {
            return Err(Error::Precondition("empty window set".into()));
        }
        let mut fs = f_set.to_vec();
        fs.sort();
        fs.dedup();
        let mut acc = self.translate(&fs[0])?;
        for f in &fs[1..] {
            acc = acc.join(&self.translate(f)?)?;
        }
        Ok(acc)
    }

    /// Union atoms according to `grouping` (old index → new index), which
    /// must be surjective onto 0..v.
    pub fn coarsen(&self, grouping: &[u32]) -> Result<ModelPartition> {
        if grouping.len() != self.u {
            return Err(Error::Precondition("grouping arity mismatch".into()));
        }
        let v = grouping.iter().map(|&g| g as usize + 1).max().unwrap_or(1);
        let mut hit = vec![false; v];
        for &g in grouping {
            hit[g as usize] = true;
        }
        if !hit.iter().all(|&h| h) {
            return Err(Error::Precondition("grouping not surjective".into()));
        }
        let labels = self.labels.iter().map(|&l| grouping[l as usize]).collect();
        Ok(ModelPartition::build(self.space.clone(), self.window.clone(), labels, v))
    }

    /// Does every atom of self sit inside an atom of other (up to measure
    /// zero)?
    pub fn refines(&self, other: &ModelPartition) -> Result<bool> {
        let frame = Frame::over(&[self, other])?;
        let ra = frame.reader(self);
        let rb = frame.reader(other);
        let mut target: Vec<Option<usize>> = vec![None; self.u];
        let mut ok = true;
        frame.for_each(|c, digits, w| {
            if w <= 0.0 || !ok {
                return;
            }
            let i = ra.label(c, digits);
            let j = rb.label(c, digits);
            match target[i] {
                None => target[i] = Some(j),
                Some(prev) => {
                    if prev != j {
                        ok = false;
                    }
                }
            }
        });
        Ok(ok)
    }

    /// Equality up to measure zero and relabeling-preserving cell identity:
    /// mutual refinement.
    pub fn equivalent(&self, other: &ModelPartition) -> Result<bool> {
        Ok(self.refines(other)? && other.refines(self)?)
    }

    /// Shannon entropy in nats; empty atoms contribute nothing.
    pub fn entropy(&self) -> f64 {
        self.atom_measures()
            .iter()
            .map(|&m| if m > 0.0 { -m * m.ln() } else { 0.0 })
            .sum()
    }

    fn cell_weight_lists(&self, other: &ModelPartition) -> Result<Vec<Vec<f64>>> {
        let frame = Frame::over(&[self, other])?;
        let ra = frame.reader(self);
        let rb = frame.reader(other);
        let mut cells: Vec<Vec<f64>> = vec![Vec::new(); self.u * other.u];
        frame.for_each(|c, digits, w| {
            cells[ra.label(c, digits) * other.u + rb.label(c, digits)].push(w);
        });
        Ok(cells)
    }

    /// H(α|β) = Σ_B μ(B)·H(α restricted to B).
    pub fn conditional_entropy(&self, other: &ModelPartition) -> Result<f64> {
        let cells = self.cell_weight_lists(other)?;
        let mut total = 0.0;
        for j in 0..other.u {
            let mut all: Vec<f64> = Vec::new();
            for i in 0..self.u {
                all.extend_from_slice(&cells[i * other.u + j]);
            }
            let mu_b = sorted_sum(all);
            if mu_b <= 0.0 {
                continue;
            }
            let mut h_b = 0.0;
            for i in 0..self.u {
                let mu = sorted_sum(cells[i * other.u + j].clone());
                if mu > 0.0 {
                    let p = mu / mu_b;
                    h_b -= p * p.ln();
                }
            }
            total += mu_b * h_b;
        }
        Ok(total)
    }

    /// Per positive cell A_i∩B_j of α∨β, the value −log μ(A_i|B_j);
    /// integrating against μ reproduces the conditional entropy.
    pub fn information_function(&self, other: &ModelPartition) -> Result<Vec<(usize, usize, f64)>> {
        let cells = self.cell_weight_lists(other)?;
        let mut out = Vec::new();
        for j in 0..other.u {
            let mut all: Vec<f64> = Vec::new();
            for i in 0..self.u {
                all.extend_from_slice(&cells[i * other.u + j]);
            }
            let mu_b = sorted_sum(all);
            for i in 0..self.u {
                let mu = sorted_sum(cells[i * other.u + j].clone());
                if mu > 0.0 {
                    out.push((i, j, -(mu / mu_b).ln()));
                }
            }
        }
        out.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        Ok(out)
    }

    /// Rohlin distance d(α,β) = H(α|β) + H(β|α).
    pub fn rohlin_distance(&self, other: &ModelPartition) -> Result<f64> {
        Ok(self.conditional_entropy(other)? + other.conditional_entropy(self)?)
    }

    /// α ∨ sξ for a coarsening ξ of α.
    pub fn simple_splitting(&self, xi: &ModelPartition, s: &GroupElement) -> Result<ModelPartition> {
        if !self.refines(xi)? {
            return Err(Error::Precondition("ξ not a coarsening".into()));
        }
        self.join(&xi.translate(s)?)
    }

    /// The explicit chain α = α₀ ≤ … ≤ α∨β^F in which every step is a
    /// simple S-splitting, built by peeling F back to {e} along a
    /// left-Cayley spanning tree.
    pub fn splitting_chain(
        &self,
        beta: &ModelPartition,
        f_set: &[GroupElement],
        s_set: &[GroupElement],
    ) -> Result<Vec<ModelPartition>> {
        if !self.refines(beta)? {
            return Err(Error::Precondition("β must be a coarsening of α".into()));
        }
        let e = self.space.group().identity();
        if !f_set.contains(&e) {
            return Err(Error::Precondition("F must contain the identity".into()));
        }
        // BFS from e recording, for each reached f, a step s∈S∪S⁻¹ and an
        // earlier parent with f = s·parent
        let mut steps: Vec<GroupElement> = Vec::new();
        for s in s_set {
            steps.push(s.clone());
            steps.push(inverse(s));
        }
        let mut order: Vec<(GroupElement, Option<(GroupElement, GroupElement)>)> =
            vec![(e.clone(), None)];
        let mut seen: Vec<GroupElement> = vec![e];
        let mut qi = 0;
        while qi < order.len() {
            let g = order[qi].0.clone();
            qi += 1;
            for s in &steps {
                let h = multiply(s, &g)?;
                if f_set.contains(&h) && !seen.contains(&h) {
                    seen.push(h.clone());
                    order.push((h, Some((s.clone(), g.clone()))));
                }
            }
        }
        if order.len() != f_set.len() {
            return Err(Error::Precondition("F is not S-connected".into()));
        }
        let mut chain = vec![self.clone()];
        let mut current = self.clone();
        for (_, witness) in &order[1..] {
            let (s, parent) = witness.as_ref().expect("non-root has a witness");
            let xi = beta.translate(parent)?;
            current = current.simple_splitting(&xi, s)?;
            chain.push(current.clone());
        }
        Ok(chain)
    }

    /// α×β on the product space with the diagonal action; atom (i,j) gets
    /// index i·v + j and measure μ(A_i)·μ(B_j).
    pub fn product_partition(&self, other: &ModelPartition) -> Result<ModelPartition> {
        let pspace = ModelSpace::product(&self.space, &other.space)?;
        let ka = self.space.alphabet_size().expect("product is Bernoulli-only");
        let kb = other.space.alphabet_size().expect("product is Bernoulli-only");
        let mut window: Vec<GroupElement> = self.window.to_vec();
        window.extend(other.window.iter().cloned());
        window.sort();
        window.dedup();
        let k = ka * kb;
        let n = check_window_budget(k, window.len())?;
        let pos_a: Vec<usize> = self
            .window
            .iter()
            .map(|w| window.binary_search(w).expect("embedded"))
            .collect();
        let pos_b: Vec<usize> = other
            .window
            .iter()
            .map(|w| window.binary_search(w).expect("embedded"))
            .collect();
        let mut labels = Vec::with_capacity(n);
        let mut digits = vec![0usize; window.len()];
        for _ in 0..n {
            let mut ia = 0usize;
            for &p in &pos_a {
                ia = ia * ka + digits[p] / kb;
            }
            let mut ib = 0usize;
            for &p in &pos_b {
                ib = ib * kb + digits[p] % kb;
            }
            labels.push((self.labels[ia] as usize * other.u + other.labels[ib] as usize) as u32);
            for p in (0..window.len()).rev() {
                digits[p] += 1;
                if digits[p] < k {
                    break;
                }
                digits[p] = 0;
            }
        }
        Ok(ModelPartition::build(Arc::new(pspace), window, labels, self.u * other.u))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "space": self.space.to_json(),
            "window": self.window.iter().map(|g| encode_nf(g.nf())).collect::<Vec<_>>(),
            "labels": self.labels.iter().map(|&l| l as u64 + 1).collect::<Vec<_>>(),
            "u": self.u,
        })
    }

    pub fn from_json(v: &Value) -> Result<ModelPartition> {
        let bad = |msg: &str| Error::Config(format!("partition json: {msg}"));
        let space =
            ModelSpace::from_json(v.get("space").ok_or_else(|| bad("missing space"))?)?;
        let group = Group::new(space.group().spec().clone())?;
        let window: Vec<GroupElement> = v
            .get("window")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing window"))?
            .iter()
            .map(|e| group.element(decode_nf(group.spec(), e)?))
            .collect::<Result<_>>()?;
        let u = v.get("u").and_then(Value::as_u64).ok_or_else(|| bad("missing u"))? as usize;
        let labels: Vec<u32> = v
            .get("labels")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing labels"))?
            .iter()
            .map(|x| {
                let l = x.as_u64().ok_or_else(|| bad("bad label"))?;
                if l == 0 || l > u as u64 {
                    return Err(bad("label out of range"));
                }
                Ok(l as u32 - 1)
            })
            .collect::<Result<_>>()?;
        ModelPartition::from_labels(&space, window, labels, u)
    }
}

/// Reindex a row-major array over `len` axes of arity k so that axis i of
/// the output is axis perm[i] of the input.
fn permute_axes(labels: &[u32], k: usize, perm: &[usize]) -> Vec<u32> {
    let len = perm.len();
    if len == 0 {
        return labels.to_vec();
    }
    let mut strides = vec![1usize; len];
    for i in (0..len - 1).rev() {
        strides[i] = strides[i + 1] * k;
    }
    let mut out = Vec::with_capacity(labels.len());
    let mut digits = vec![0usize; len];
    for _ in 0..labels.len() {
        let mut idx = 0usize;
        for (p, &src) in perm.iter().enumerate() {
            idx += digits[p] * strides[src];
        }
        out.push(labels[idx]);
        for p in (0..len).rev() {
            digits[p] += 1;
            if digits[p] < k {
                break;
            }
            digits[p] = 0;
        }
    }
    out
}

/// d_F(α,β) = Σ_{φ:F→{1..u}} |μ(∩_f f·A_φ(f)) − μ(∩_f f·B_φ(f))|, with the
/// shorter partition padded by empty atoms.
pub fn df_model(
    alpha: &ModelPartition,
    beta: &ModelPartition,
    f_set: &[GroupElement],
) -> Result<f64> {
    if !alpha.space.same_space(&beta.space) {
        return Err(Error::SpaceMismatch);
    }
    if f_set.is_empty() {
        return Err(Error::Precondition("empty F".into()));
    }
    let u = alpha.u.max(beta.u);
    let patterns = check_pattern_budget(u, f_set.len())?;
    let ta: Vec<ModelPartition> =
        f_set.iter().map(|f| alpha.translate(f)).collect::<Result<_>>()?;
    let tb: Vec<ModelPartition> = f_set.iter().map(|f| beta.translate(f)).collect::<Result<_>>()?;
    let all: Vec<&ModelPartition> = ta.iter().chain(tb.iter()).collect();
    let frame = Frame::over(&all)?;
    let readers_a: Vec<Reader> = ta.iter().map(|p| frame.reader(p)).collect();
    let readers_b: Vec<Reader> = tb.iter().map(|p| frame.reader(p)).collect();
    let mut mu_a = vec![0.0f64; patterns];
    let mut mu_b = vec![0.0f64; patterns];
    frame.for_each(|c, digits, w| {
        let mut pa = 0usize;
        let mut pb = 0usize;
        for (ra, rb) in readers_a.iter().zip(&readers_b) {
            pa = pa * u + ra.label(c, digits);
            pb = pb * u + rb.label(c, digits);
        }
        mu_a[pa] += w;
        mu_b[pb] += w;
    });
    Ok(mu_a.iter().zip(&mu_b).map(|(a, b)| (a - b).abs()).sum())
}

/// Accumulate μ(A_φ) over patterns φ read from already-translated
/// partitions, into a dense base-u array indexed most-significant-first.
pub(crate) fn pattern_measures(parts: &[ModelPartition], u: usize, out: &mut [f64]) -> Result<()> {
    let refs: Vec<&ModelPartition> = parts.iter().collect();
    let frame = Frame::over(&refs)?;
    let readers: Vec<Reader> = parts.iter().map(|p| frame.reader(p)).collect();
    frame.for_each(|c, digits, w| {
        let mut pat = 0usize;
        for r in &readers {
            pat = pat * u + r.label(c, digits);
        }
        out[pat] += w;
    });
    Ok(())
}

pub(crate) fn check_pattern_budget(u: usize, f_len: usize) -> Result<usize> {
    let mut n: usize = 1;
    for _ in 0..f_len {
        n = n
            .checked_mul(u)
            .filter(|&n| n <= (1 << 20))
            .ok_or_else(|| Error::Budget(format!("{u}^{f_len} patterns")))?;
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{GroupSpec, Nf};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn z() -> Group {
        Group::new(GroupSpec::Integers).unwrap()
    }

    fn uniform2() -> ModelSpace {
        ModelSpace::uniform_bernoulli(z(), 2).unwrap()
    }

    fn random_partition(
        space: &ModelSpace,
        coords: &[i64],
        u: usize,
        rng: &mut ChaCha8Rng,
    ) -> ModelPartition {
        let g = space.group().clone();
        let window: Vec<GroupElement> = coords.iter().map(|&c| g.int(c).unwrap()).collect();
        let k = space.alphabet_size().unwrap();
        let n = k.pow(window.len() as u32);
        // force surjectivity so the atom count is honest
        let labels: Vec<u32> = (0..n)
            .map(|i| if i < u { i as u32 } else { rng.random_range(0..u as u32) })
            .collect();
        ModelPartition::from_labels(space, window, labels, u).unwrap()
    }

    #[test]
    fn canonical_measures() {
        let s = ModelSpace::bernoulli(z(), vec![0.25, 0.75]).unwrap();
        let a = ModelPartition::canonical_bernoulli(&s).unwrap();
        assert_eq!(a.atom_measures(), vec![0.25, 0.75]);
        let s4 = ModelSpace::uniform_bernoulli(z(), 4).unwrap();
        let a4 = ModelPartition::canonical_bernoulli(&s4).unwrap();
        assert_eq!(a4.atom_measures(), vec![0.25; 4]);
    }

    #[test]
    fn entropy_examples() {
        let a = ModelPartition::canonical_bernoulli(&uniform2()).unwrap();
        assert!((a.entropy() - 2.0f64.ln()).abs() < 1e-15);
        let s4 = ModelSpace::uniform_bernoulli(z(), 4).unwrap();
        let a4 = ModelPartition::canonical_bernoulli(&s4).unwrap();
        assert!((a4.entropy() - 4.0f64.ln()).abs() < 1e-15);
        assert_eq!(ModelPartition::trivial(&uniform2()).entropy(), 0.0);
    }

    #[test]
    fn translate_examples() {
        let s = uniform2();
        let a = ModelPartition::canonical_bernoulli(&s).unwrap();
        let g = z().int(1).unwrap();
        let ta = a.translate(&g).unwrap();
        assert_eq!(ta.window(), &[g.clone()]);
        assert_eq!(ta.atom_measures(), a.atom_measures());
        let back = ta.translate(&inverse(&g)).unwrap();
        assert_eq!(back.labels(), a.labels());
        assert_eq!(back.window(), a.window());
        let te = a.translate(&z().identity()).unwrap();
        assert_eq!(te.labels(), a.labels());
    }

    #[test]
    fn join_examples() {
        let s = uniform2();
        let a = ModelPartition::canonical_bernoulli(&s).unwrap();
        let self_join = a.join(&a).unwrap();
        assert_eq!(self_join.atom_count(), 2);
        assert!(self_join.equivalent(&a).unwrap());
        let with_trivial = a.join(&ModelPartition::trivial(&s)).unwrap();
        assert!(with_trivial.equivalent(&a).unwrap());
        let shifted = a.translate(&z().int(1).unwrap()).unwrap();
        let j = a.join(&shifted).unwrap();
        assert_eq!(j.atom_count(), 4);
        assert_eq!(j.atom_measures(), vec![0.25; 4]);
        assert!(j.refines(&a).unwrap());
        assert!(j.refines(&shifted).unwrap());
    }

    #[test]
    fn windowed_join_examples() {
        let a = ModelPartition::canonical_bernoulli(&uniform2()).unwrap();
        let e_only = a.windowed_join(&[z().identity()]).unwrap();
        assert!(e_only.equivalent(&a).unwrap());
        let f: Vec<_> = vec![z().int(0).unwrap(), z().int(1).unwrap()];
        let j = a.windowed_join(&f).unwrap();
        assert_eq!(j.atom_count(), 4);
        assert_eq!(j.atom_measures(), vec![0.25; 4]);
        let f3: Vec<_> = (0..3).map(|k| z().int(k).unwrap()).collect();
        let j3 = a.windowed_join(&f3).unwrap();
        assert!(j3.atom_count() <= a.atom_count().pow(3));
        assert!(a.windowed_join(&[]).is_err());
    }

    #[test]
    fn nesting_of_windowed_joins() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = uniform2();
        let a = random_partition(&s, &[0, 1], 3, &mut rng);
        let f1 = z().ball(1);
        let f2 = z().ball(2);
        let j1 = a.windowed_join(&f1).unwrap();
        let j2 = a.windowed_join(&f2).unwrap();
        assert!(j2.refines(&j1).unwrap());
    }

    #[test]
    fn coarsen_examples() {
        let s4 = ModelSpace::uniform_bernoulli(z(), 4).unwrap();
        let a = ModelPartition::canonical_bernoulli(&s4).unwrap();
        let same = a.coarsen(&[0, 1, 2, 3]).unwrap();
        assert!(same.equivalent(&a).unwrap());
        let triv = a.coarsen(&[0, 0, 0, 0]).unwrap();
        assert_eq!(triv.entropy(), 0.0);
        let halves = a.coarsen(&[0, 0, 1, 1]).unwrap();
        assert_eq!(halves.atom_measures(), vec![0.5, 0.5]);
        assert!(a.refines(&halves).unwrap());
        assert!(a.coarsen(&[0, 0, 2, 2]).is_err());
        assert!(a.coarsen(&[0, 1]).is_err());
    }

    #[test]
    fn refines_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = uniform2();
        let a = random_partition(&s, &[0, 1], 3, &mut rng);
        let b = random_partition(&s, &[1, 2], 2, &mut rng);
        assert!(a.refines(&ModelPartition::trivial(&s)).unwrap());
        let j = a.join(&b).unwrap();
        assert!(j.refines(&a).unwrap());
        assert!(j.refines(&b).unwrap());
        assert!(!a.refines(&j).unwrap() || a.equivalent(&j).unwrap());
    }

    #[test]
    fn conditional_entropy_examples() {
        let a = ModelPartition::canonical_bernoulli(&uniform2()).unwrap();
        assert_eq!(a.conditional_entropy(&a).unwrap(), 0.0);
        let triv = ModelPartition::trivial(&uniform2());
        assert!((a.conditional_entropy(&triv).unwrap() - a.entropy()).abs() < 1e-15);
        let b = a.translate(&z().int(1).unwrap()).unwrap();
        assert!((a.conditional_entropy(&b).unwrap() - 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn chain_rule_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let s = ModelSpace::bernoulli(z(), vec![0.2, 0.3, 0.5]).unwrap();
        for _ in 0..20 {
            let a = random_partition(&s, &[0, 1], 4, &mut rng);
            let b = random_partition(&s, &[1, 2], 3, &mut rng);
            let lhs = a.join(&b).unwrap().entropy();
            let rhs = a.entropy() + b.conditional_entropy(&a).unwrap();
            assert!((lhs - rhs).abs() < 1e-12, "chain rule gap {}", (lhs - rhs).abs());
        }
    }

    #[test]
    fn monotone_conditioning() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let s = uniform2();
        for _ in 0..10 {
            let a = random_partition(&s, &[0, 1], 3, &mut rng);
            let b2 = random_partition(&s, &[1, 2], 4, &mut rng);
            let b1 = b2.coarsen(&[0, 1, 1, 0]).unwrap();
            // b2 refines b1, so conditioning on b2 can only lose entropy
            assert!(
                a.conditional_entropy(&b2).unwrap() <= a.conditional_entropy(&b1).unwrap() + 1e-12
            );
        }
    }

    #[test]
    fn information_function_examples() {
        let a = ModelPartition::canonical_bernoulli(&uniform2()).unwrap();
        let triv = ModelPartition::trivial(&uniform2());
        for (_, _, v) in a.information_function(&triv).unwrap() {
            assert!((v - 2.0f64.ln()).abs() < 1e-15);
        }
        // α ≤ β: I ≡ 0
        let j = a.join(&a.translate(&z().int(1).unwrap()).unwrap()).unwrap();
        for (_, _, v) in a.information_function(&j).unwrap() {
            assert!(v.abs() < 1e-15);
        }
        // independent uniform: log 2 on all four cells, integral = H(α|β)
        let b = a.translate(&z().int(1).unwrap()).unwrap();
        let cells = a.information_function(&b).unwrap();
        assert_eq!(cells.len(), 4);
        for (_, _, v) in &cells {
            assert!((v - 2.0f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn rohlin_examples_and_axioms() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let s = uniform2();
        let a = ModelPartition::canonical_bernoulli(&s).unwrap();
        assert_eq!(a.rohlin_distance(&a).unwrap(), 0.0);
        let b = a.translate(&z().int(1).unwrap()).unwrap();
        assert!((a.rohlin_distance(&b).unwrap() - 2.0 * 2.0f64.ln()).abs() < 1e-12);
        let triv = ModelPartition::trivial(&s);
        assert!((a.rohlin_distance(&triv).unwrap() - a.entropy()).abs() < 1e-15);
        for _ in 0..15 {
            let x = random_partition(&s, &[0, 1], 3, &mut rng);
            let y = random_partition(&s, &[1, 2], 3, &mut rng);
            let w = random_partition(&s, &[0, 2], 3, &mut rng);
            // symmetry is exact, not approximate
            assert_eq!(x.rohlin_distance(&y).unwrap(), y.rohlin_distance(&x).unwrap());
            let dxy = x.rohlin_distance(&y).unwrap();
            let dyw = y.rohlin_distance(&w).unwrap();
            let dxw = x.rohlin_distance(&w).unwrap();
            assert!(dxw <= dxy + dyw + 1e-9);
            assert!(dxy >= 0.0);
        }
        // zero iff equivalent
        let c = a.join(&a).unwrap();
        assert_eq!(a.rohlin_distance(&c).unwrap(), 0.0);
        assert!(a.equivalent(&c).unwrap());
        assert!(a.rohlin_distance(&b).unwrap() > 0.0 && !a.equivalent(&b).unwrap());
    }

    #[test]
    fn join_continuity_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let s = uniform2();
        for _ in 0..10 {
            let a = random_partition(&s, &[0, 1], 3, &mut rng);
            let a2 = random_partition(&s, &[0, 1], 3, &mut rng);
            let b = random_partition(&s, &[1, 2], 2, &mut rng);
            let b2 = random_partition(&s, &[1, 2], 2, &mut rng);
            let lhs = a.join(&b).unwrap().rohlin_distance(&a2.join(&b2).unwrap()).unwrap();
            let rhs =
                a.rohlin_distance(&a2).unwrap() + b.rohlin_distance(&b2).unwrap();
            assert!(lhs <= rhs + 1e-9, "{lhs} > {rhs}");
        }
    }

    #[test]
    fn translate_is_exact_isometry() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let s = ModelSpace::bernoulli(z(), vec![0.1, 0.2, 0.7]).unwrap();
        let g = z().int(3).unwrap();
        for _ in 0..10 {
            let a = random_partition(&s, &[0, 1], 4, &mut rng);
            let b = random_partition(&s, &[1, 2], 3, &mut rng);
            let d = a.rohlin_distance(&b).unwrap();
            let dg = a.translate(&g).unwrap().rohlin_distance(&b.translate(&g).unwrap()).unwrap();
            assert_eq!(d, dg, "isometry must hold bit-for-bit");
            assert_eq!(a.entropy(), a.translate(&g).unwrap().entropy());
        }
    }

    #[test]
    fn df_examples() {
        let s = uniform2();
        let a = ModelPartition::canonical_bernoulli(&s).unwrap();
        let f1 = vec![z().identity()];
        assert_eq!(df_model(&a, &a, &f1).unwrap(), 0.0);
        // swap of equal-measure atoms is invisible at F={e}
        let swapped = a.coarsen(&[1, 0]).unwrap();
        assert_eq!(df_model(&a, &swapped, &f1).unwrap(), 0.0);
        // F={e} reduces to the total-variation-style sum of measure gaps
        let s2 = ModelSpace::bernoulli(z(), vec![0.25, 0.75]).unwrap();
        let c = ModelPartition::canonical_bernoulli(&s2).unwrap();
        let cs = c.coarsen(&[1, 0]).unwrap();
        assert!((df_model(&c, &cs, &f1).unwrap() - 1.0).abs() < 1e-15);
        // zero again over a wider F when β = α
        assert_eq!(df_model(&a, &a, &z().ball(1)).unwrap(), 0.0);
    }

    #[test]
    fn df_separates_and_grows_with_f() {
        let s = uniform2();
        let a = ModelPartition::canonical_bernoulli(&s).unwrap();
        // d_F is blind to shifting: α and 1·α induce the same iid pattern
        // distribution over every F
        let shifted = a.translate(&z().int(1).unwrap()).unwrap();
        let f = vec![z().int(0).unwrap(), z().int(1).unwrap()];
        assert_eq!(df_model(&a, &shifted, &f).unwrap(), 0.0);
        // the AND of two coordinates has marginal (¾,¼) vs (½,½):
        // F={e} already sees total gap ½, and larger F only refines it
        let and2 =
            ModelPartition::from_labels(&s, f.clone(), vec![0, 0, 0, 1], 2).unwrap();
        let d_e = df_model(&a, &and2, &[z().identity()]).unwrap();
        assert!((d_e - 0.5).abs() < 1e-15);
        assert!(df_model(&a, &and2, &f).unwrap() >= d_e - 1e-15);
    }

    #[test]
    fn simple_splitting_examples() {
        let s = uniform2();
        let a = ModelPartition::canonical_bernoulli(&s).unwrap();
        let triv = ModelPartition::trivial(&s);
        let g = z().int(1).unwrap();
        let with_triv = a.simple_splitting(&triv, &g).unwrap();
        assert!(with_triv.equivalent(&a).unwrap());
        let at_e = a.simple_splitting(&a, &z().identity()).unwrap();
        assert!(at_e.equivalent(&a).unwrap());
        let split = a.simple_splitting(&a, &g).unwrap();
        assert_eq!(split.atom_count(), 4);
        assert_eq!(split.atom_measures(), vec![0.25; 4]);
        assert!(split.refines(&a).unwrap());
        // σ sits between α and α∨sα
        assert!(a.join(&a.translate(&g).unwrap()).unwrap().refines(&split).unwrap());
        // a finer partition is not a coarsening
        let fine = a.join(&a.translate(&g).unwrap()).unwrap();
        assert!(matches!(a.simple_splitting(&fine, &g), Err(Error::Precondition(_))));
    }

    #[test]
    fn splitting_chain_examples() {
        let s = uniform2();
        let a = ModelPartition::canonical_bernoulli(&s).unwrap();
        let gens = vec![z().int(1).unwrap()];
        let chain = a.splitting_chain(&a, &[z().identity()], &gens).unwrap();
        assert_eq!(chain.len(), 1);
        assert!(chain[0].equivalent(&a).unwrap());
        let f2 = vec![z().int(0).unwrap(), z().int(1).unwrap()];
        let chain2 = a.splitting_chain(&a, &f2, &gens).unwrap();
        assert_eq!(chain2.len(), 2);
        assert!(chain2[1].equivalent(&a.windowed_join(&f2).unwrap()).unwrap());
        let f3: Vec<_> = (0..3).map(|k| z().int(k).unwrap()).collect();
        let chain3 = a.splitting_chain(&a, &f3, &gens).unwrap();
        assert_eq!(chain3.len(), 3);
        assert!(chain3[2].equivalent(&a.windowed_join(&f3).unwrap()).unwrap());
        for w in chain3.windows(2) {
            assert!(w[1].refines(&w[0]).unwrap());
        }
        // disconnected F is rejected
        let gap = vec![z().int(0).unwrap(), z().int(2).unwrap()];
        assert!(matches!(a.splitting_chain(&a, &gap, &gens), Err(Error::Precondition(_))));
        // e must be present
        let no_e = vec![z().int(1).unwrap(), z().int(2).unwrap()];
        assert!(matches!(a.splitting_chain(&a, &no_e, &gens), Err(Error::Precondition(_))));
    }

    #[test]
    fn product_partition_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let s = uniform2();
        let a = ModelPartition::canonical_bernoulli(&s).unwrap();
        let p = a.product_partition(&a).unwrap();
        assert_eq!(p.atom_count(), 4);
        assert_eq!(p.atom_measures(), vec![0.25; 4]);
        assert!((p.entropy() - 2.0 * 2.0f64.ln()).abs() < 1e-12);
        let triv = ModelPartition::trivial(&s);
        let pa = a.product_partition(&triv).unwrap();
        assert_eq!(pa.atom_measures(), a.atom_measures());
        for _ in 0..20 {
            let x = random_partition(&s, &[0, 1], 3, &mut rng);
            let y = random_partition(&s, &[1, 2], 2, &mut rng);
            let h = x.product_partition(&y).unwrap().entropy();
            assert!((h - x.entropy() - y.entropy()).abs() < 1e-12);
        }
    }

    #[test]
    fn finite_gset_basics() {
        let c4 = Group::new(GroupSpec::Cyclic { n: 4 }).unwrap();
        let s = ModelSpace::regular_gset(c4.clone()).unwrap();
        let a = ModelPartition::from_labels(&s, vec![], vec![0, 0, 1, 1], 2).unwrap();
        assert_eq!(a.atom_measures(), vec![0.5, 0.5]);
        let g = c4.element(Nf::Res(1)).unwrap();
        let ta = a.translate(&g).unwrap();
        assert_eq!(ta.atom_measures(), vec![0.5, 0.5]);
        assert_eq!(ta.translate(&inverse(&g)).unwrap().labels(), a.labels());
        let j = a.join(&ta).unwrap();
        assert!(j.refines(&a).unwrap());
        assert!((a.rohlin_distance(&ta).unwrap() - ta.rohlin_distance(&a).unwrap()).abs() == 0.0);
        assert!(df_model(&a, &a, &[c4.identity()]).unwrap() == 0.0);
    }

    #[test]
    fn json_round_trip_with_unsorted_window() {
        let s = uniform2();
        let a = ModelPartition::canonical_bernoulli(&s).unwrap();
        let j = a.windowed_join(&[z().int(0).unwrap(), z().int(1).unwrap()]).unwrap();
        let v = j.to_json();
        let back = ModelPartition::from_json(&v).unwrap();
        assert_eq!(back.labels(), j.labels());
        assert_eq!(back.window(), j.window());
        // a window listed out of order reorders labels consistently
        let manual = json!({
            "space": s.to_json(),
            "window": [1, 0],
            "labels": [1, 3, 2, 4],
            "u": 4,
        });
        let m = ModelPartition::from_json(&manual).unwrap();
        assert_eq!(m.window(), j.window());
        assert_eq!(m.labels(), &[0, 1, 2, 3]);
    }

    #[test]
    fn window_budget_enforced() {
        let s = ModelSpace::uniform_bernoulli(z(), 8192).unwrap();
        let a = ModelPartition::canonical_bernoulli(&s).unwrap();
        let f: Vec<_> = (0..2).map(|k| z().int(k).unwrap()).collect();
        assert!(matches!(a.windowed_join(&f), Err(Error::Budget(_))));
    }
}
