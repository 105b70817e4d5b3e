use std::collections::VecDeque;
use std::hash::{Hash, Hasher};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rustc_hash::{FxHashMap, FxHasher};

use super::coordinator::CoordIn;
use super::messages::{deserialize_sync, CentroidEntry, DeltaEntry, SyncMessage, TupleKind, WorkTuple};
use super::route::route;
use crate::cluster::{assign, Assignment, Centroid, ClusterState, ClusterView, OnlineStats};
use crate::error::{Error, Result};
use crate::protomeme::{Marker, Protomeme};

/// A protomeme as emitted by the generator.
#[derive(Debug, Clone)]
pub struct GenProto {
    pub seq: u64,
    pub batch_seq: u64,
    pub protomeme: Arc<Protomeme>,
}

/// Apply one batch's top-K outcome to a full cluster state.
pub fn apply_delta_entries(state: &mut ClusterState, entries: &[DeltaEntry]) -> Result<()> {
    if entries.len() != state.k() {
        return Err(Error::Consistency(format!("{} entries for {} slots", entries.len(), state.k())));
    }
    for (i, e) in entries.iter().enumerate() {
        if e.slot != i {
            return Err(Error::Consistency(format!("entry {i} addresses slot {}", e.slot)));
        }
        if e.is_new {
            state.install_with_uid(e.slot, e.cluster_uid, e.added_protomemes.iter().cloned());
        } else {
            if state.slots[e.slot].uid != e.cluster_uid {
                return Err(Error::Consistency(format!(
                    "slot {} holds uid {} but the delta names {}",
                    e.slot, state.slots[e.slot].uid, e.cluster_uid
                )));
            }
            for p in &e.added_protomemes {
                state.add_to_slot(e.slot, p.clone());
            }
        }
        if state.slots[e.slot].last_update_ts != e.last_update_ts {
            return Err(Error::Consistency(format!("slot {}: last update time disagrees after apply", e.slot)));
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TableSlot {
    pub uid: u64,
    pub centroid: Centroid,
    pub last_update_ts: Option<i64>,
}

/// Centroids without members, as held by full-centroids workers.
#[derive(Debug, Clone, Default)]
pub struct CentroidTable {
    pub slots: Vec<TableSlot>,
    marker_map: FxHashMap<Marker, usize>,
    pub stats: OnlineStats,
    pub current_step: Option<u64>,
}

impl CentroidTable {
    pub fn from_state(state: &ClusterState) -> Self {
        let slots = state
            .slots
            .iter()
            .map(|c| TableSlot {
                uid: c.uid,
                centroid: c.centroid.clone(),
                last_update_ts: c.last_update_ts,
            })
            .collect();
        let marker_map = state
            .marker_map()
            .iter()
            .filter_map(|(m, uid)| state.slot_of(*uid).map(|s| (m.clone(), s)))
            .collect();
        Self {
            slots,
            marker_map,
            stats: state.stats,
            current_step: state.current_step,
        }
    }

    pub fn apply(&mut self, entries: Vec<CentroidEntry>, stats: OnlineStats, current_step: u64) -> Result<()> {
        self.marker_map.clear();
        self.slots.clear();
        for (i, e) in entries.into_iter().enumerate() {
            if e.slot != i {
                return Err(Error::Consistency(format!("entry {i} addresses slot {}", e.slot)));
            }
            for m in e.markers {
                self.marker_map.insert(m, i);
            }
            self.slots.push(TableSlot {
                uid: e.cluster_uid,
                centroid: e.centroid,
                last_update_ts: e.last_update_ts,
            });
        }
        self.stats = stats;
        self.current_step = Some(current_step);
        Ok(())
    }

    fn markers_per_slot(&self) -> Vec<usize> {
        let mut n = vec![0; self.slots.len()];
        for s in self.marker_map.values() {
            n[*s] += 1;
        }
        n
    }
}

impl ClusterView for CentroidTable {
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
        self.marker_map.get(marker).copied()
    }

    fn stats(&self) -> &OnlineStats {
        &self.stats
    }
}

/// What a worker compares protomemes against.
#[derive(Debug, Clone)]
pub enum WorkerView {
    /// Full member lists; expires locally.
    Delta(ClusterState),
    /// Centroids only; the coordinator expires.
    Centroids(CentroidTable),
}

impl WorkerView {
    pub fn as_view(&self) -> &dyn ClusterView {
        match self {
            WorkerView::Delta(s) => s,
            WorkerView::Centroids(t) => t,
        }
    }

    fn current_step(&self) -> Option<u64> {
        match self {
            WorkerView::Delta(s) => s.current_step,
            WorkerView::Centroids(t) => t.current_step,
        }
    }

    /// Cheap digest of everything an assignment decision can read.
    pub fn fingerprint(&self) -> u64 {
        let view = self.as_view();
        let mut h = FxHasher::default();
        let markers = match self {
            WorkerView::Delta(s) => {
                let mut n = vec![0usize; s.k()];
                for uid in s.marker_map().values() {
                    if let Some(slot) = s.slot_of(*uid) {
                        n[slot] += 1;
                    }
                }
                n
            }
            WorkerView::Centroids(t) => t.markers_per_slot(),
        };
        for slot in 0..view.num_slots() {
            view.slot_uid(slot).hash(&mut h);
            let c = view.slot_centroid(slot);
            c.count.hash(&mut h);
            for v in c.vectors() {
                v.len().hash(&mut h);
                v.norm_sq().to_bits().hash(&mut h);
            }
            markers[slot].hash(&mut h);
        }
        match self {
            WorkerView::Delta(s) => s.slots.iter().for_each(|c| c.last_update_ts.hash(&mut h)),
            WorkerView::Centroids(t) => t.slots.iter().for_each(|c| c.last_update_ts.hash(&mut h)),
        }
        let st = view.stats();
        (st.count, st.mean.to_bits(), st.m2.to_bits()).hash(&mut h);
        self.current_step().hash(&mut h);
        h.finish()
    }

    pub fn uids(&self) -> Vec<u64> {
        let v = self.as_view();
        (0..v.num_slots()).map(|s| v.slot_uid(s)).collect()
    }

    pub fn centroids(&self) -> Vec<Centroid> {
        let v = self.as_view();
        (0..v.num_slots()).map(|s| v.slot_centroid(s).clone()).collect()
    }
}

/// Post-sync global state as seen by one worker.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchTrace {
    pub batch_seq: u64,
    pub uids: Vec<u64>,
    pub centroids: Vec<Centroid>,
    pub stats: OnlineStats,
}

#[derive(Debug, Clone)]
pub struct WorkerBatchRecord {
    pub batch_seq: u64,
    pub tuples: usize,
    pub compute: Duration,
    pub apply: Duration,
    pub applied_at: Instant,
    pub fingerprint: u64,
}

pub struct Worker {
    pub id: usize,
    workers: usize,
    nsigma: f64,
    pub view: WorkerView,
    cur_batch: u64,
    stash: VecDeque<GenProto>,
    compute: Duration,
    tuples: usize,
    pub records: Vec<WorkerBatchRecord>,
    pub trace: Option<Vec<BatchTrace>>,
    stopped: bool,
}

impl Worker {
    pub fn new(id: usize, workers: usize, nsigma: f64, view: WorkerView, trace: bool) -> Self {
        Self {
            id,
            workers,
            nsigma,
            view,
            cur_batch: 0,
            stash: VecDeque::new(),
            compute: Duration::ZERO,
            tuples: 0,
            records: Vec::new(),
            trace: trace.then(Vec::new),
            stopped: false,
        }
    }

    /// Whether the worker may take another protomeme from its input.
    pub fn accepting(&self) -> bool {
        self.stash.is_empty() && !self.stopped
    }

    pub fn stopped(&self) -> bool {
        self.stopped
    }

    pub fn current_batch(&self) -> u64 {
        self.cur_batch
    }

    pub fn on_proto(&mut self, g: GenProto, out: &mut dyn FnMut(CoordIn)) -> Result<()> {
        if route(&g.protomeme.marker, self.workers) != self.id {
            return Err(Error::Consistency(format!(
                "protomeme {} routed to worker {} but hashes elsewhere",
                g.protomeme.marker, self.id
            )));
        }
        if g.batch_seq < self.cur_batch {
            return Err(Error::Consistency(format!(
                "worker {} got batch {} after syncing batch {}",
                self.id,
                g.batch_seq,
                self.cur_batch - 1
            )));
        }
        if g.batch_seq > self.cur_batch || !self.stash.is_empty() {
            self.stash.push_back(g);
            return Ok(());
        }
        self.process(g, out)
    }

    fn process(&mut self, g: GenProto, out: &mut dyn FnMut(CoordIn)) -> Result<()> {
        let start = Instant::now();
        let p = g.protomeme;
        if let WorkerView::Delta(state) = &mut self.view {
            if state.current_step.map_or(true, |c| p.step_index > c) {
                state.expire_to(p.step_index)?;
            }
        }
        let decision = assign(self.view.as_view(), &p, self.nsigma);
        let (kind, target_uid) = match decision {
            Assignment::MarkerHit { uid, .. } | Assignment::Nearest { uid, .. } => (TupleKind::Pmadd, Some(uid)),
            Assignment::Outlier { .. } => (TupleKind::Outlier, None),
        };
        self.compute += start.elapsed();
        self.tuples += 1;
        out(CoordIn::Tuple(WorkTuple {
            kind,
            seq: g.seq,
            batch_seq: g.batch_seq,
            protomeme: p,
            target_uid,
            sim: decision.stats_value(),
            worker_id: self.id,
        }));
        Ok(())
    }

    pub fn on_sync(&mut self, bytes: &[u8], out: &mut dyn FnMut(CoordIn)) -> Result<()> {
        let msg = deserialize_sync(bytes)?;
        let b = msg.batch_seq();
        if let SyncMessage::Stop { .. } = msg {
            self.stopped = true;
            return Ok(());
        }
        if b != self.cur_batch {
            return Err(Error::Consistency(format!(
                "worker {} at batch {} received sync for batch {b}",
                self.id, self.cur_batch
            )));
        }
        let start = Instant::now();
        match (msg, &mut self.view) {
            (SyncMessage::SyncInit { .. }, _) => {
                out(CoordIn::SyncReq {
                    worker: self.id,
                    batch_seq: b,
                });
                return Ok(());
            }
            (
                SyncMessage::CDelta {
                    current_step,
                    entries,
                    stats,
                    ..
                },
                WorkerView::Delta(state),
            ) => {
                apply_delta_entries(state, &entries)?;
                state.stats = stats.into();
                state.expire_to(current_step)?;
            }
            (
                SyncMessage::Centroids {
                    current_step,
                    entries,
                    stats,
                    ..
                },
                WorkerView::Centroids(table),
            ) => table.apply(entries, stats.into(), current_step)?,
            _ => {
                return Err(Error::Consistency(format!(
                    "worker {} got a sync message of the wrong strategy for batch {b}",
                    self.id
                )))
            }
        }
        let apply = start.elapsed();
        self.records.push(WorkerBatchRecord {
            batch_seq: b,
            tuples: std::mem::take(&mut self.tuples),
            compute: std::mem::take(&mut self.compute),
            apply,
            applied_at: Instant::now(),
            fingerprint: self.view.fingerprint(),
        });
        if let Some(t) = self.trace.as_mut() {
            t.push(BatchTrace {
                batch_seq: b,
                uids: self.view.uids(),
                centroids: self.view.centroids(),
                stats: *self.view.as_view().stats(),
            });
        }
        self.cur_batch += 1;
        while self.stash.front().is_some_and(|g| g.batch_seq == self.cur_batch) {
            let g = self.stash.pop_front().expect("front checked");
            self.process(g, out)?;
        }
        Ok(())
    }
}
