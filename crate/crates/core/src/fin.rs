//! Ordered partitions of the finite set {1..m}, the σ-side objects of
//! pattern counting, with the coarsening map Φ and the splitting map Ψ.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::sofic::SymMap;

/// An ordered partition of {1..m} into u atoms, empty atoms allowed.
/// Labels are 0-based internally, 1-based on the wire.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FinPartition {
    m: usize,
    u: usize,
    labels: Vec<u32>,
}

impl FinPartition {
    pub fn new(m: usize, u: usize, labels: Vec<u32>) -> Result<FinPartition> {
        if m == 0 || u == 0 {
            return Err(Error::Config("degenerate partition shape".into()));
        }
        if labels.len() != m {
            return Err(Error::Config("one label per point required".into()));
        }
        if labels.iter().any(|&l| l as usize >= u) {
            return Err(Error::Config("label out of range".into()));
        }
        Ok(FinPartition { m, u, labels })
    }

    pub fn degree(&self) -> usize {
        self.m
    }

    pub fn atom_count(&self) -> usize {
        self.u
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn atom_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.u];
        for &l in &self.labels {
            sizes[l as usize] += 1;
        }
        sizes
    }

    /// ζ-measures |B̄_i|/m; the integer sizes sum to m, so these sum to 1
    /// exactly after the single division.
    pub fn zeta_measures(&self) -> Vec<f64> {
        self.atom_sizes().iter().map(|&s| s as f64 / self.m as f64).collect()
    }

    /// Reinterpret with a larger atom count (pad with empty atoms).
    pub fn pad_to(&self, u: usize) -> Result<FinPartition> {
        if u < self.u {
            return Err(Error::Precondition("cannot pad downward".into()));
        }
        FinPartition::new(self.m, u, self.labels.clone())
    }

    /// Φ: union atoms according to `grouping` (surjective onto 0..v).
    pub fn coarsen(&self, grouping: &[u32]) -> Result<FinPartition> {
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
        FinPartition::new(self.m, v, labels)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "m": self.m,
            "u": self.u,
            "labels": self.labels.iter().map(|&l| l as u64 + 1).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<FinPartition> {
        let bad = |msg: &str| Error::Config(format!("finite partition json: {msg}"));
        let m = v.get("m").and_then(Value::as_u64).ok_or_else(|| bad("missing m"))? as usize;
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
        FinPartition::new(m, u, labels)
    }
}

/// The canonical pair indexing i ↦ (i/v, i mod v) used by Ψ.
pub fn canonical_pair_maps(v: usize) -> (Vec<u32>, Vec<u32>) {
    let mut x = Vec::with_capacity(v * v);
    let mut y = Vec::with_capacity(v * v);
    for j in 0..v as u32 {
        for k in 0..v as u32 {
            x.push(j);
            y.push(k);
        }
    }
    (x, y)
}

/// Ψ: Ā_i = B̄_{x(i)} ∩ σ(t)·B̄_{y(i)}, where i ↦ (x(i), y(i)) must cover
/// each pair of {1..v}² exactly once. Injective in β̄ for fixed (σ, t).
pub fn split_finite(
    sigma: &SymMap,
    beta: &FinPartition,
    t: &GroupElement,
    x_map: &[u32],
    y_map: &[u32],
) -> Result<FinPartition> {
    if sigma.degree() != beta.m {
        return Err(Error::Precondition("degree mismatch".into()));
    }
    let v = beta.u;
    if x_map.len() != v * v || y_map.len() != v * v {
        return Err(Error::Precondition("pair maps must index v² atoms".into()));
    }
    let mut pair_index = vec![u32::MAX; v * v];
    for i in 0..v * v {
        let (x, y) = (x_map[i] as usize, y_map[i] as usize);
        if x >= v || y >= v || pair_index[x * v + y] != u32::MAX {
            return Err(Error::Precondition("pair maps do not cover all pairs once".into()));
        }
        pair_index[x * v + y] = i as u32;
    }
    let inv_t = sigma.image(t)?.inverse();
    let labels = (0..beta.m)
        .map(|p| {
            let j = beta.labels[p] as usize;
            let k = beta.labels[inv_t.apply(p)] as usize;
            pair_index[j * v + k]
        })
        .collect();
    FinPartition::new(beta.m, v * v, labels)
}
