//! Clusters, centroids, running similarity statistics and the sliding-window
//! cluster state shared by the sequential and parallel clusterers.

mod sequential;
mod snapshot;

pub use sequential::{run_sequential, SequentialClusterer, StepReport};
pub use snapshot::{load_bootstrap, read_snapshots, write_snapshots, ClusterSnapshot};

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protomeme::{cosine, Marker, Protomeme, SparseVector, TID_PREFIX};

/// Clustering parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Params {
    /// Number of clusters.
    pub k: usize,
    /// Time-step length in seconds.
    pub step_seconds: i64,
    /// Window length in steps.
    pub window_steps: u64,
    /// Outlier threshold in standard deviations.
    pub nsigma: f64,
    pub seed: u64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            k: 20,
            step_seconds: 30,
            window_steps: 6,
            nsigma: 2.0,
            seed: 42,
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.step_seconds <= 0 {
            return Err(Error::Config("step length must be positive".into()));
        }
        if self.window_steps == 0 {
            return Err(Error::Config("window must be at least 1 step".into()));
        }
        if !self.nsigma.is_finite() || self.nsigma < 0.0 {
            return Err(Error::Config("nsigma must be a non-negative number".into()));
        }
        Ok(())
    }
}

/// Welford running mean and population variance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OnlineStats {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl OnlineStats {
    pub fn add(&mut self, x: f64) -> Result<()> {
        if !x.is_finite() {
            return Err(Error::NonFinite(x));
        }
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
        Ok(())
    }

    pub fn sigma(&self) -> f64 {
        if self.count <= 1 {
            0.0
        } else {
            (self.m2 / self.count as f64).sqrt()
        }
    }

    pub fn threshold(&self, nsigma: f64) -> f64 {
        self.mean - nsigma * self.sigma()
    }

    /// A similarity at or below `μ - nσ` marks an outlier.
    pub fn is_outlier(&self, sim: f64, nsigma: f64) -> bool {
        sim <= self.threshold(nsigma)
    }
}

/// Sums of the member vectors plus the member count. The mean is never
/// materialised: cosine against the sum equals cosine against the mean.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Centroid {
    pub tid: SparseVector,
    pub uid: SparseVector,
    pub content: SparseVector,
    pub diffusion: SparseVector,
    pub count: usize,
}

impl Centroid {
    pub fn vectors(&self) -> [&SparseVector; 4] {
        [&self.tid, &self.uid, &self.content, &self.diffusion]
    }

    pub fn add(&mut self, p: &Protomeme) {
        self.tid.add_assign(&p.v_tid);
        self.uid.add_assign(&p.v_uid);
        self.content.add_assign(&p.v_content);
        self.diffusion.add_assign(&p.v_diffusion);
        self.count += 1;
    }

    pub fn remove(&mut self, p: &Protomeme) -> Result<()> {
        if self.count == 0 {
            return Err(Error::Consistency("removing from an empty centroid".into()));
        }
        self.tid.sub_assign(&p.v_tid)?;
        self.uid.sub_assign(&p.v_uid)?;
        self.content.sub_assign(&p.v_content)?;
        self.diffusion.sub_assign(&p.v_diffusion)?;
        self.count -= 1;
        if self.count == 0 {
            *self = Centroid::default();
        }
        Ok(())
    }

    /// Maximum of the four per-space cosines; 0 for an empty centroid.
    pub fn similarity(&self, p: &Protomeme) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        p.vectors()
            .iter()
            .zip(self.vectors())
            .map(|(pv, cv)| cosine(pv, cv))
            .fold(0.0, f64::max)
    }

    pub fn from_members<'a>(members: impl IntoIterator<Item = &'a Protomeme>) -> Self {
        let mut c = Centroid::default();
        for p in members {
            c.add(p);
        }
        c
    }
}

#[derive(Debug, Clone)]
pub struct Cluster {
    pub uid: u64,
    pub members: VecDeque<Arc<Protomeme>>,
    pub centroid: Centroid,
    pub last_update_ts: Option<i64>,
    markers: FxHashMap<Marker, u32>,
}

impl Cluster {
    pub fn new(uid: u64) -> Self {
        Self {
            uid,
            members: VecDeque::new(),
            centroid: Centroid::default(),
            last_update_ts: None,
            markers: FxHashMap::default(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn add(&mut self, p: Arc<Protomeme>) {
        self.centroid.add(&p);
        self.last_update_ts = Some(self.last_update_ts.map_or(p.ending_ts, |ts| ts.max(p.ending_ts)));
        *self.markers.entry(p.marker.clone()).or_default() += 1;
        self.members.push_back(p);
    }

    pub fn marker_count(&self, m: &Marker) -> u32 {
        self.markers.get(m).copied().unwrap_or(0)
    }

    /// Distinct live markers, sorted.
    pub fn live_markers(&self) -> Vec<Marker> {
        let mut v: Vec<Marker> = self.markers.keys().cloned().collect();
        v.sort();
        v
    }

    pub fn tweet_ids(&self) -> BTreeSet<String> {
        self.members.iter().flat_map(|p| p.tweet_ids()).collect()
    }

    /// Remove members generated at or before `cutoff_step`. Returns the
    /// markers whose count in this cluster dropped to zero.
    fn expire(&mut self, cutoff_step: u64) -> Result<Vec<Marker>> {
        let mut gone = Vec::new();
        let mut removed = false;
        while self.members.front().is_some_and(|p| p.step_index <= cutoff_step) {
            let p = self.members.pop_front().expect("front checked");
            removed = true;
            self.centroid.remove(&p)?;
            let n = self
                .markers
                .get_mut(&p.marker)
                .ok_or_else(|| Error::Consistency(format!("marker {} missing from cluster {}", p.marker, self.uid)))?;
            *n -= 1;
            if *n == 0 {
                self.markers.remove(&p.marker);
                gone.push(p.marker.clone());
            }
        }
        if removed {
            self.last_update_ts = self.members.iter().map(|p| p.ending_ts).max();
        }
        Ok(gone)
    }
}

/// Read access needed to make an assignment decision.
pub trait ClusterView {
    fn num_slots(&self) -> usize;
    fn slot_uid(&self, slot: usize) -> u64;
    fn slot_centroid(&self, slot: usize) -> &Centroid;
    fn marker_slot(&self, marker: &Marker) -> Option<usize>;
    fn stats(&self) -> &OnlineStats;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Assignment {
    MarkerHit { uid: u64, slot: usize, sim: f64 },
    Nearest { uid: u64, slot: usize, sim: f64 },
    Outlier { best_sim: f64 },
}

impl Assignment {
    /// The value this decision contributes to the running statistics.
    pub fn stats_value(&self) -> f64 {
        match *self {
            Assignment::MarkerHit { sim, .. } | Assignment::Nearest { sim, .. } => sim,
            Assignment::Outlier { best_sim } => best_sim,
        }
    }

    pub fn target(&self) -> Option<(u64, usize)> {
        match *self {
            Assignment::MarkerHit { uid, slot, .. } | Assignment::Nearest { uid, slot, .. } => Some((uid, slot)),
            Assignment::Outlier { .. } => None,
        }
    }
}

/// Highest-similarity non-empty slot, lowest slot on ties.
pub fn nearest<V: ClusterView + ?Sized>(view: &V, p: &Protomeme) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for slot in 0..view.num_slots() {
        let c = view.slot_centroid(slot);
        if c.count == 0 {
            continue;
        }
        let sim = c.similarity(p);
        if best.map_or(true, |(_, b)| sim > b) {
            best = Some((slot, sim));
        }
    }
    best
}

/// Decide where a protomeme goes without mutating anything.
pub fn assign<V: ClusterView + ?Sized>(view: &V, p: &Protomeme, nsigma: f64) -> Assignment {
    if let Some(slot) = view.marker_slot(&p.marker) {
        return Assignment::MarkerHit {
            uid: view.slot_uid(slot),
            slot,
            sim: view.slot_centroid(slot).similarity(p),
        };
    }
    match nearest(view, p) {
        None => Assignment::Outlier { best_sim: 0.0 },
        Some((_, sim)) if view.stats().is_outlier(sim, nsigma) => Assignment::Outlier { best_sim: sim },
        Some((slot, sim)) => Assignment::Nearest {
            uid: view.slot_uid(slot),
            slot,
            sim,
        },
    }
}

/// Outcome of choosing which K of the existing slots plus new clusters
/// survive.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Survivors {
    /// `(slot, new_index)`: the slot is evicted and receives that new cluster.
    pub replacements: Vec<(usize, usize)>,
    /// New clusters that did not make the cut.
    pub discarded: Vec<usize>,
}

/// Keep the K candidates with the latest update times.
///
/// Order: ts descending (empty = oldest), existing before new on ties,
/// among tied existing slots the lower slot goes first, among tied new
/// clusters the earlier one is kept. Evicted slots, ascending, receive the
/// surviving new clusters in creation order.
pub fn select_survivors(existing: &[Option<i64>], new: &[i64]) -> Survivors {
    if new.is_empty() {
        return Survivors::default();
    }
    #[derive(Clone, Copy)]
    enum Cand {
        Old(usize),
        New(usize),
    }
    let key = |c: &Cand| match *c {
        Cand::Old(s) => (existing[s], 0u8, usize::MAX - s),
        Cand::New(i) => (Some(new[i]), 1u8, i),
    };
    let mut all: Vec<Cand> = (0..existing.len()).map(Cand::Old).chain((0..new.len()).map(Cand::New)).collect();
    all.sort_by(|a, b| {
        let (ta, ga, ia) = key(a);
        let (tb, gb, ib) = key(b);
        tb.cmp(&ta).then(ga.cmp(&gb)).then(ia.cmp(&ib))
    });
    let keep = existing.len();
    let mut evicted: Vec<usize> = Vec::new();
    let mut kept_new: Vec<usize> = Vec::new();
    let mut discarded: Vec<usize> = Vec::new();
    for (rank, c) in all.iter().enumerate() {
        match (*c, rank < keep) {
            (Cand::Old(_), true) => {}
            (Cand::Old(s), false) => evicted.push(s),
            (Cand::New(i), true) => kept_new.push(i),
            (Cand::New(i), false) => discarded.push(i),
        }
    }
    evicted.sort_unstable();
    kept_new.sort_unstable();
    discarded.sort_unstable();
    Survivors {
        replacements: evicted.into_iter().zip(kept_new).collect(),
        discarded,
    }
}

/// K cluster slots, the marker map, the window position and the running
/// statistics.
#[derive(Debug, Clone)]
pub struct ClusterState {
    pub slots: Vec<Cluster>,
    marker_map: FxHashMap<Marker, u64>,
    uid_slot: FxHashMap<u64, usize>,
    pub current_step: Option<u64>,
    pub stats: OnlineStats,
    next_uid: u64,
    pub window: u64,
    /// Set once the cold-start seeding has happened.
    pub initialized: bool,
    history: Option<BTreeMap<u64, BTreeSet<String>>>,
}

impl ClusterState {
    /// K empty slots holding uids `0..K`.
    pub fn new(k: usize, window: u64) -> Self {
        let slots: Vec<Cluster> = (0..k as u64).map(Cluster::new).collect();
        let uid_slot = (0..k).map(|s| (s as u64, s)).collect();
        Self {
            slots,
            marker_map: FxHashMap::default(),
            uid_slot,
            current_step: None,
            stats: OnlineStats::default(),
            next_uid: k as u64,
            window,
            initialized: false,
            history: None,
        }
    }

    /// Record, per cluster uid, every tweet id ever added.
    pub fn enable_history(&mut self) {
        if self.history.is_none() {
            let mut h: BTreeMap<u64, BTreeSet<String>> = BTreeMap::new();
            for c in &self.slots {
                if !c.is_empty() {
                    h.insert(c.uid, c.tweet_ids());
                }
            }
            self.history = Some(h);
        }
    }

    pub fn disable_history(&mut self) {
        self.history = None;
    }

    pub fn history(&self) -> Option<&BTreeMap<u64, BTreeSet<String>>> {
        self.history.as_ref()
    }

    pub fn k(&self) -> usize {
        self.slots.len()
    }

    pub fn next_uid(&self) -> u64 {
        self.next_uid
    }

    pub fn slot_of(&self, uid: u64) -> Option<usize> {
        self.uid_slot.get(&uid).copied()
    }

    pub fn marker_target(&self, m: &Marker) -> Option<u64> {
        self.marker_map.get(m).copied()
    }

    pub fn marker_map(&self) -> &FxHashMap<Marker, u64> {
        &self.marker_map
    }

    /// Marker-map entries pointing at `uid`, sorted.
    pub fn markers_of(&self, uid: u64) -> Vec<Marker> {
        let Some(slot) = self.slot_of(uid) else {
            return Vec::new();
        };
        let mut v: Vec<Marker> = self.slots[slot]
            .markers
            .keys()
            .filter(|m| self.marker_map.get(*m) == Some(&uid))
            .cloned()
            .collect();
        v.sort();
        v
    }

    pub fn live_protomemes(&self) -> usize {
        self.slots.iter().map(Cluster::len).sum()
    }

    pub fn last_update_times(&self) -> Vec<Option<i64>> {
        self.slots.iter().map(|c| c.last_update_ts).collect()
    }

    pub fn add_to_slot(&mut self, slot: usize, p: Arc<Protomeme>) {
        let uid = self.slots[slot].uid;
        self.marker_map.insert(p.marker.clone(), uid);
        if let Some(h) = self.history.as_mut() {
            h.entry(uid).or_default().extend(p.tweet_ids());
        }
        self.slots[slot].add(p);
    }

    /// Evict whatever occupies `slot` and install a new cluster built from
    /// `members`. Returns the new uid.
    pub fn install_new(&mut self, slot: usize, members: impl IntoIterator<Item = Arc<Protomeme>>) -> u64 {
        let uid = self.next_uid;
        self.install_with_uid(slot, uid, members);
        uid
    }

    /// As [`install_new`](Self::install_new) with a uid chosen elsewhere.
    pub fn install_with_uid(&mut self, slot: usize, uid: u64, members: impl IntoIterator<Item = Arc<Protomeme>>) {
        let old = &self.slots[slot];
        let old_uid = old.uid;
        for m in old.markers.keys() {
            if self.marker_map.get(m) == Some(&old_uid) {
                self.marker_map.remove(m);
            }
        }
        self.uid_slot.remove(&old_uid);
        self.next_uid = self.next_uid.max(uid + 1);
        self.slots[slot] = Cluster::new(uid);
        self.uid_slot.insert(uid, slot);
        for p in members {
            self.add_to_slot(slot, p);
        }
    }

    /// Place a lone outlier by the shared survivor rule. Returns the slot it
    /// took, or `None` when it was discarded.
    pub fn replace_with_singleton(&mut self, p: Arc<Protomeme>) -> Option<usize> {
        let sel = select_survivors(&self.last_update_times(), &[p.ending_ts]);
        let (slot, _) = *sel.replacements.first()?;
        self.install_new(slot, [p]);
        Some(slot)
    }

    /// Slide the window so that it ends at `new_step`, dropping members
    /// generated at or before `new_step - l`.
    pub fn expire_to(&mut self, new_step: u64) -> Result<usize> {
        if let Some(cur) = self.current_step {
            if new_step < cur {
                return Err(Error::Consistency(format!("window moved backwards from {cur} to {new_step}")));
            }
            if new_step == cur {
                return Ok(0);
            }
        }
        self.current_step = Some(new_step);
        let Some(cutoff) = new_step.checked_sub(self.window) else {
            return Ok(0);
        };
        let before = self.live_protomemes();
        for slot in 0..self.slots.len() {
            let gone = self.slots[slot].expire(cutoff)?;
            let uid = self.slots[slot].uid;
            for m in gone {
                if self.marker_map.get(&m) == Some(&uid) {
                    self.marker_map.remove(&m);
                }
            }
        }
        Ok(before - self.live_protomemes())
    }

    /// Non-empty clusters as snapshots, by slot.
    pub fn snapshots(&self) -> Vec<ClusterSnapshot> {
        self.slots.iter().filter(|c| !c.is_empty()).map(ClusterSnapshot::of).collect()
    }

    /// Verify every structural invariant, rebuilding centroids from members.
    pub fn check_invariants(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Consistency(msg));
        for (m, uid) in &self.marker_map {
            let Some(slot) = self.slot_of(*uid) else {
                return fail(format!("marker {m} points at dead uid {uid}"));
            };
            if self.slots[slot].marker_count(m) == 0 {
                return fail(format!("marker {m} mapped to cluster {uid} which has no such member"));
            }
        }
        for (slot, c) in self.slots.iter().enumerate() {
            if self.slot_of(c.uid) != Some(slot) {
                return fail(format!("uid index wrong for slot {slot}"));
            }
            let rebuilt = Centroid::from_members(c.members.iter().map(|p| p.as_ref()));
            if rebuilt.count != c.centroid.count {
                return fail(format!("slot {slot}: count drifted"));
            }
            for (a, b) in rebuilt.vectors().iter().zip(c.centroid.vectors()) {
                let keys: BTreeSet<&str> = a.keys().chain(b.keys()).map(|k| k.as_ref()).collect();
                for k in keys {
                    if (a.get(k) - b.get(k)).abs() > 1e-9 {
                        return fail(format!("slot {slot}: centroid entry {k} drifted"));
                    }
                }
                if (a.norm_sq_exact() - b.norm_sq()).abs() > 1e-9 * (1.0 + a.norm_sq_exact()) {
                    return fail(format!("slot {slot}: squared norm drifted"));
                }
            }
            if c.last_update_ts != c.members.iter().map(|p| p.ending_ts).max() {
                return fail(format!("slot {slot}: last update time wrong"));
            }
            if let Some(cur) = self.current_step {
                if c.members.iter().any(|p| p.step_index + self.window <= cur) {
                    return fail(format!("slot {slot}: member outside the window"));
                }
            }
        }
        Ok(())
    }
}

impl ClusterView for ClusterState {
    fn num_slots(&self) -> usize {
        self.slots.len()
    }

    fn slot_uid(&self, slot: usize) -> u64 {
        self.slots[slot].uid
    }

    fn slot_centroid(&self, slot: usize) -> &Centroid {
        &self.slots[slot].centroid
    }

    fn marker_slot(&self, marker: &Marker) -> Option<usize> {
        self.marker_map.get(marker).and_then(|uid| self.slot_of(*uid))
    }

    fn stats(&self) -> &OnlineStats {
        &self.stats
    }
}

/// Strip the namespace from a tweet-id dimension key.
pub fn tweet_id_of(key: &str) -> &str {
    key.strip_prefix(TID_PREFIX).unwrap_or(key)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protomeme::MarkerKind;

    fn proto(marker: &str, step: u64, ts: i64, words: &[&str]) -> Arc<Protomeme> {
        Arc::new(Protomeme {
            marker: Marker::new(MarkerKind::Hashtag, marker),
            v_tid: SparseVector::from_pairs([(format!("t:{marker}{ts}"), 1.0)]),
            v_uid: SparseVector::from_pairs([(format!("u:{marker}"), 1.0)]),
            v_content: SparseVector::from_pairs(words.iter().map(|w| (format!("w:{w}"), 1.0))),
            v_diffusion: SparseVector::from_pairs([(format!("u:{marker}"), 1.0)]),
            created_ts: ts,
            ending_ts: ts,
            step_index: step,
        })
    }

    #[test]
    fn welford_examples() {
        let mut s = OnlineStats::default();
        s.add(0.5).unwrap();
        assert_eq!((s.mean, s.sigma()), (0.5, 0.0));
        s.add(0.7).unwrap();
        assert!((s.mean - 0.6).abs() < 1e-15 && (s.sigma() - 0.1).abs() < 1e-12);
        let mut s = OnlineStats::default();
        for x in [1.0, 2.0, 3.0, 4.0] {
            s.add(x).unwrap();
        }
        assert!((s.mean - 2.5).abs() < 1e-15 && (s.sigma() - 1.118_034).abs() < 1e-6);
        assert!(s.add(f64::NAN).is_err());
        assert!(s.add(f64::INFINITY).is_err());
    }

    #[test]
    fn outlier_boundary() {
        let s = OnlineStats {
            count: 2,
            mean: 0.6,
            m2: 0.02,
        };
        assert!((s.sigma() - 0.1).abs() < 1e-12);
        assert!(s.is_outlier(0.35, 2.0));
        assert!(!s.is_outlier(0.45, 2.0));
        let cold = OnlineStats::default();
        assert!(cold.is_outlier(0.0, 2.0));
        assert!(!cold.is_outlier(0.01, 2.0));
    }

    #[test]
    fn centroid_growth_and_self_similarity() {
        let mut c = Cluster::new(0);
        let a = proto("a", 0, 1, &["x", "y", "z"]);
        c.add(a.clone());
        assert_eq!(c.centroid.count, 1);
        assert_eq!(c.centroid.similarity(&a), 1.0);
        c.add(proto("b", 0, 2, &["z", "q"]));
        assert_eq!(c.centroid.content.len(), 3 + 2 - 1);
        assert_eq!(c.last_update_ts, Some(2));
        assert_eq!(Centroid::default().similarity(&a), 0.0);
    }

    #[test]
    fn similarity_is_max_of_spaces() {
        let p = proto("a", 0, 1, &["x"]);
        let mut c = Centroid::default();
        c.add(&proto("zz", 0, 9, &["x", "y", "w", "v"]));
        // only content overlaps: cos = 1 / (1 * 2)
        assert!((c.similarity(&p) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn survivor_rule() {
        // empty slot preferred, lowest index
        let s = select_survivors(&[Some(5), None, None, Some(1)], &[10]);
        assert_eq!(s.replacements, vec![(1, 0)]);
        // least recently updated
        let s = select_survivors(&[Some(10), Some(5), Some(8)], &[20]);
        assert_eq!(s.replacements, vec![(1, 0)]);
        // ties among existing: lower slot evicted
        let s = select_survivors(&[Some(5), Some(5), Some(8)], &[20]);
        assert_eq!(s.replacements, vec![(0, 0)]);
        // not newer than every slot: discarded
        let s = select_survivors(&[Some(5), Some(9)], &[5]);
        assert!(s.replacements.is_empty());
        assert_eq!(s.discarded, vec![0]);
        // several new clusters, earlier kept on ties
        let s = select_survivors(&[Some(1), Some(2), Some(3)], &[7, 7, 7]);
        assert_eq!(s.replacements, vec![(0, 0), (1, 1), (2, 2)]);
        let s = select_survivors(&[Some(1), Some(2), Some(9)], &[7, 8, 7]);
        assert_eq!(s.replacements, vec![(0, 0), (1, 1)]);
        assert_eq!(s.discarded, vec![2]);
    }

    #[test]
    fn marker_hit_short_circuits() {
        let mut st = ClusterState::new(3, 6);
        st.add_to_slot(2, proto("a", 0, 1, &["x"]));
        st.add_to_slot(0, proto("b", 0, 1, &["y"]));
        let p = proto("a", 1, 40, &["y"]);
        assert_eq!(assign(&st, &p, 2.0), Assignment::MarkerHit { uid: 2, slot: 2, sim: 1.0 });
    }

    #[test]
    fn nearest_ties_go_to_lower_slot() {
        let mut st = ClusterState::new(3, 6);
        st.add_to_slot(1, proto("a", 0, 1, &["x"]));
        st.add_to_slot(2, proto("b", 0, 1, &["x"]));
        let p = proto("c", 0, 1, &["x"]);
        assert_eq!(assign(&st, &p, 2.0), Assignment::Nearest { uid: 1, slot: 1, sim: 1.0 });
    }

    #[test]
    fn empty_state_is_outlier() {
        let st = ClusterState::new(3, 6);
        let p = proto("c", 0, 1, &["x"]);
        assert_eq!(assign(&st, &p, 2.0), Assignment::Outlier { best_sim: 0.0 });
    }

    #[test]
    fn expiry_window_arithmetic() {
        let mut st = ClusterState::new(2, 6);
        st.expire_to(0).unwrap();
        st.add_to_slot(0, proto("a", 0, 1, &["x"]));
        st.add_to_slot(1, proto("b", 0, 1, &["x"]));
        st.expire_to(5).unwrap();
        st.add_to_slot(1, proto("c", 5, 160, &["x"]));
        assert_eq!(st.live_protomemes(), 3);
        st.expire_to(6).unwrap();
        assert_eq!(st.live_protomemes(), 1);
        assert!(st.slots[0].is_empty());
        assert_eq!(st.slots[0].last_update_ts, None);
        assert_eq!(st.slots[0].centroid, Centroid::default());
        assert_eq!(st.marker_target(&Marker::new(MarkerKind::Hashtag, "a")), None);
        assert_eq!(st.marker_target(&Marker::new(MarkerKind::Hashtag, "c")), Some(1));
        st.check_invariants().unwrap();
        assert!(st.expire_to(3).is_err());
    }

    #[test]
    fn replacement_purges_markers() {
        let mut st = ClusterState::new(2, 6);
        st.add_to_slot(0, proto("a", 0, 1, &["x"]));
        st.add_to_slot(1, proto("b", 0, 5, &["x"]));
        let slot = st.replace_with_singleton(proto("c", 0, 9, &["q"]));
        assert_eq!(slot, Some(0));
        assert_eq!(st.slots[0].uid, 2);
        assert_eq!(st.marker_target(&Marker::new(MarkerKind::Hashtag, "a")), None);
        assert_eq!(st.marker_target(&Marker::new(MarkerKind::Hashtag, "c")), Some(2));
        assert_eq!(st.slot_of(0), None);
        st.check_invariants().unwrap();
    }
}
