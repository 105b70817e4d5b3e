use std::fmt;
use std::sync::Arc;

use rustc_hash::FxHashMap;
use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Entries smaller than this in magnitude are dropped after arithmetic.
pub const ZERO_EPS: f64 = 1e-12;
/// A subtraction leaving an entry below this is a remove-without-add bug.
pub const NEGATIVE_EPS: f64 = -1e-9;

/// Sparse map from a namespaced dimension key to a weight.
///
/// The squared norm is maintained alongside the entries. For the
/// integer-valued vectors the pipeline produces this is exact.
#[derive(Clone, Default)]
pub struct SparseVector {
    entries: FxHashMap<Arc<str>, f64>,
    norm_sq: f64,
}

impl SparseVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<K: Into<Arc<str>>>(pairs: impl IntoIterator<Item = (K, f64)>) -> Self {
        let mut v = Self::new();
        for (k, w) in pairs {
            v.add_entry(k.into(), w);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &str) -> f64 {
        self.entries.get(key).copied().unwrap_or(0.0)
    }

    pub fn contains_key(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Arc<str>, f64)> {
        self.entries.iter().map(|(k, w)| (k, *w))
    }

    pub fn keys(&self) -> impl Iterator<Item = &Arc<str>> {
        self.entries.keys()
    }

    /// Entries in ascending key order.
    pub fn sorted(&self) -> Vec<(&Arc<str>, f64)> {
        let mut items: Vec<_> = self.iter().collect();
        items.sort_unstable_by(|a, b| a.0.cmp(b.0));
        items
    }

    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq.sqrt()
    }

    /// Recompute the squared norm from the entries.
    pub fn norm_sq_exact(&self) -> f64 {
        self.entries.values().map(|w| w * w).sum()
    }

    /// Add `w` to the entry for `key`. Returns the new weight.
    pub fn add_entry(&mut self, key: Arc<str>, w: f64) -> f64 {
        if w == 0.0 {
            return self.get(&key);
        }
        let old = self.get(&key);
        let new = old + w;
        if new.abs() < ZERO_EPS {
            self.entries.remove(&key);
        } else {
            self.entries.insert(key, new);
        }
        self.norm_sq += new * new - old * old;
        if self.entries.is_empty() || self.norm_sq < 0.0 {
            self.norm_sq = if self.entries.is_empty() { 0.0 } else { self.norm_sq_exact() };
        }
        new
    }

    pub fn add_assign(&mut self, other: &SparseVector) {
        self.entries.reserve(other.len());
        for (k, w) in other.iter() {
            self.add_entry(k.clone(), w);
        }
    }

    /// Subtract a vector that was previously added.
    pub fn sub_assign(&mut self, other: &SparseVector) -> Result<()> {
        for (k, w) in other.iter() {
            let new = self.add_entry(k.clone(), -w);
            if new < NEGATIVE_EPS {
                return Err(Error::Consistency(format!(
                    "subtraction left dimension {k} at {new}; it was never added"
                )));
            }
        }
        Ok(())
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        small.iter().map(|(k, w)| w * large.get(k)).sum()
    }
}

impl PartialEq for SparseVector {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl fmt::Debug for SparseVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.sorted()).finish()
    }
}

/// `dot(u, v) / (|u| |v|)`, or 0 when either vector is empty.
pub fn cosine(u: &SparseVector, v: &SparseVector) -> f64 {
    if u.is_empty() || v.is_empty() {
        return 0.0;
    }
    let denom = u.norm() * v.norm();
    if denom == 0.0 {
        return 0.0;
    }
    (u.dot(v) / denom).clamp(0.0, 1.0)
}

pub fn vec_add(u: &SparseVector, v: &SparseVector) -> SparseVector {
    let mut out = u.clone();
    out.add_assign(v);
    out
}

pub fn vec_sub(u: &SparseVector, v: &SparseVector) -> Result<SparseVector> {
    let mut out = u.clone();
    out.sub_assign(v)?;
    Ok(out)
}

impl Serialize for SparseVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let items = self.sorted();
        let mut map = serializer.serialize_map(Some(items.len()))?;
        for (k, w) in items {
            map.serialize_entry(k.as_ref(), &w)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for SparseVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = SparseVector;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map of dimension key to weight")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> std::result::Result<SparseVector, A::Error> {
                let mut v = SparseVector::new();
                while let Some((k, w)) = access.next_entry::<String, f64>()? {
                    v.add_entry(Arc::from(k), w);
                }
                Ok(v)
            }
        }
        deserializer.deserialize_map(V)
    }
}
