//! Finite model G-systems: Bernoulli cylinder spaces over a finite base
//! alphabet, and finite G-sets carried by the regular action.

use std::collections::HashMap;
use std::sync::Arc;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::group::{Group, GroupElement, GroupSpec};

/// Hard cap on enumerated configurations: |K|^|window| must stay below.
pub const CONFIG_BUDGET: usize = 1 << 24;

pub const MEASURE_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub enum Backend {
    /// Product measure κ^G restricted to finite windows.
    Bernoulli { weights: Vec<f64> },
    /// Finite point set with the regular action and invariant weights.
    FiniteGSet {
        elements: Arc<Vec<GroupElement>>,
        index: Arc<HashMap<GroupElement, usize>>,
        weights: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct ModelSpace {
    group: Group,
    backend: Backend,
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::Config("empty weight vector".into()));
    }
    if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
        return Err(Error::Config("weights must be finite and nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > MEASURE_TOL {
        return Err(Error::Config(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

impl ModelSpace {
    pub fn bernoulli(group: Group, weights: Vec<f64>) -> Result<ModelSpace> {
        check_weights(&weights)?;
        Ok(ModelSpace { group, backend: Backend::Bernoulli { weights } })
    }

    pub fn uniform_bernoulli(group: Group, k: usize) -> Result<ModelSpace> {
        if k == 0 {
            return Err(Error::Config("alphabet must be nonempty".into()));
        }
        ModelSpace::bernoulli(group, vec![1.0 / k as f64; k])
    }

    /// The regular action of a finite group on itself with uniform weights,
    /// the only weighting invariant under that action.
    pub fn regular_gset(group: Group) -> Result<ModelSpace> {
        let elements = group.all_elements()?;
        let n = elements.len();
        let index = crate::group::sorted_index(&elements);
        Ok(ModelSpace {
            group,
            backend: Backend::FiniteGSet {
                elements: Arc::new(elements),
                index: Arc::new(index),
                weights: vec![1.0 / n as f64; n],
            },
        })
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn alphabet_size(&self) -> Option<usize> {
        match &self.backend {
            Backend::Bernoulli { weights } => Some(weights.len()),
            Backend::FiniteGSet { .. } => None,
        }
    }

    /// Structural identity: same owner, same backend shape and weights.
    pub fn same_space(&self, other: &ModelSpace) -> bool {
        if self.group.spec() != other.group.spec() {
            return false;
        }
        match (&self.backend, &other.backend) {
            (Backend::Bernoulli { weights: a }, Backend::Bernoulli { weights: b }) => a == b,
            (
                Backend::FiniteGSet { weights: a, elements: ea, .. },
                Backend::FiniteGSet { weights: b, elements: eb, .. },
            ) => a == b && ea == eb,
            _ => false,
        }
    }

    /// Product of two Bernoulli spaces over the same group: the base
    /// alphabet is K₁×K₂ coded as a·|K₂|+b, the diagonal action is again a
    /// shift, and the base measure is the product weight.
    pub fn product(a: &ModelSpace, b: &ModelSpace) -> Result<ModelSpace> {
        if a.group.spec() != b.group.spec() {
            return Err(Error::GroupMismatch);
        }
        match (&a.backend, &b.backend) {
            (Backend::Bernoulli { weights: wa }, Backend::Bernoulli { weights: wb }) => {
                let mut weights = Vec::with_capacity(wa.len() * wb.len());
                for x in wa {
                    for y in wb {
                        weights.push(x * y);
                    }
                }
                ModelSpace::bernoulli(a.group.clone(), weights)
            }
            _ => Err(Error::Unsupported("product requires Bernoulli backends".into())),
        }
    }

    pub fn to_json(&self) -> Value {
        match &self.backend {
            Backend::Bernoulli { weights } => json!({
                "backend": "bernoulli",
                "group": self.group.spec(),
                "weights": weights,
            }),
            Backend::FiniteGSet { weights, .. } => json!({
                "backend": "finite-gset",
                "group": self.group.spec(),
                "weights": weights,
            }),
        }
    }

    pub fn from_json(v: &Value) -> Result<ModelSpace> {
        let bad = |msg: &str| Error::Config(format!("space json: {msg}"));
        let spec: GroupSpec =
            serde_json::from_value(v.get("group").cloned().ok_or_else(|| bad("missing group"))?)?;
        let group = Group::new(spec)?;
        let weights: Vec<f64> = serde_json::from_value(
            v.get("weights").cloned().ok_or_else(|| bad("missing weights"))?,
        )?;
        match v.get("backend").and_then(Value::as_str) {
            Some("bernoulli") => ModelSpace::bernoulli(group, weights),
            Some("finite-gset") => ModelSpace::regular_gset(group),
            _ => Err(bad("unknown backend")),
        }
    }
}
