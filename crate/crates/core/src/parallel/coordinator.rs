use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rustc_hash::FxHashMap;

use super::bus::{Bus, Payload};
use super::messages::{
    serialize_sync, CentroidEntry, DeltaEntry, SyncMessage, TupleKind, WorkTuple, SYNC_TOPIC,
};
use super::worker::apply_delta_entries;
use super::Strategy;
use crate::cluster::{select_survivors, Centroid, ClusterState, OnlineStats};
use crate::error::{Error, Result};
use crate::protomeme::Protomeme;

/// Everything the coordinator can receive.
#[derive(Debug, Clone)]
pub enum CoordIn {
    /// Announced by the generator before the batch's protomemes.
    BatchStart {
        batch_seq: u64,
        step: u64,
        first_seq: u64,
        size: usize,
    },
    Tuple(WorkTuple),
    SyncReq {
        worker: usize,
        batch_seq: u64,
    },
    /// No batch after `last_batch`; the stream's last step is `final_step`.
    End {
        final_step: Option<u64>,
        last_batch: u64,
    },
}

#[derive(Debug, Clone, Copy)]
struct BatchInfo {
    step: u64,
    first_seq: u64,
    size: usize,
}

/// Per-slot bookkeeping kept instead of member lists.
#[derive(Debug, Clone)]
struct SlotMeta {
    uid: u64,
    ts: Option<i64>,
    /// Live member count per generation step.
    step_counts: BTreeMap<u64, usize>,
}

#[derive(Debug, Clone)]
struct OutlierCluster {
    centroid: Centroid,
    members: Vec<Arc<Protomeme>>,
    ts: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Collecting,
    AwaitReq,
    AwaitNext,
    Done,
}

#[derive(Debug, Clone)]
pub struct CoordBatchRecord {
    pub batch_seq: u64,
    pub step: u64,
    pub tuples: usize,
    pub message_bytes: usize,
    pub syncinit_at: Instant,
    /// Time to select, apply and serialise the sync message.
    pub build: Duration,
    pub live_protomemes: usize,
    pub new_clusters: usize,
    pub discarded_outliers: usize,
}

enum Store {
    Meta(Vec<SlotMeta>, FxHashMap<u64, usize>),
    Full(Box<ClusterState>),
}

pub struct Coordinator {
    strategy: Strategy,
    workers: usize,
    nsigma: f64,
    window: u64,
    store: Store,
    stats: OnlineStats,
    next_uid: u64,
    current_step: u64,
    batches: BTreeMap<u64, BatchInfo>,
    pending: BTreeMap<u64, WorkTuple>,
    cur: u64,
    processed: usize,
    next_seq: u64,
    deltas: Vec<Vec<Arc<Protomeme>>>,
    delta_ts: Vec<Option<i64>>,
    outliers: Vec<OutlierCluster>,
    reqs: BTreeSet<usize>,
    phase: Phase,
    end: Option<(Option<u64>, u64)>,
    syncinit_at: Option<Instant>,
    pub records: Vec<CoordBatchRecord>,
}

impl Coordinator {
    pub fn new(strategy: Strategy, workers: usize, nsigma: f64, bootstrap: &ClusterState) -> Result<Self> {
        let current_step = bootstrap
            .current_step
            .ok_or_else(|| Error::Config("bootstrap state has not seen any step".into()))?;
        let k = bootstrap.k();
        let store = match strategy {
            Strategy::ClusterDelta => {
                let meta: Vec<SlotMeta> = bootstrap
                    .slots
                    .iter()
                    .map(|c| {
                        let mut step_counts = BTreeMap::new();
                        for p in &c.members {
                            *step_counts.entry(p.step_index).or_insert(0) += 1;
                        }
                        SlotMeta {
                            uid: c.uid,
                            ts: c.last_update_ts,
                            step_counts,
                        }
                    })
                    .collect();
                let index = meta.iter().enumerate().map(|(s, m)| (m.uid, s)).collect();
                Store::Meta(meta, index)
            }
            Strategy::FullCentroids => Store::Full(Box::new(bootstrap.clone())),
        };
        let mut batches = BTreeMap::new();
        batches.insert(
            0,
            BatchInfo {
                step: current_step,
                first_seq: 0,
                size: 0,
            },
        );
        Ok(Self {
            strategy,
            workers,
            nsigma,
            window: bootstrap.window,
            store,
            stats: bootstrap.stats,
            next_uid: bootstrap.next_uid(),
            current_step,
            batches,
            pending: BTreeMap::new(),
            cur: 0,
            processed: 0,
            next_seq: 0,
            deltas: vec![Vec::new(); k],
            delta_ts: vec![None; k],
            outliers: Vec::new(),
            reqs: BTreeSet::new(),
            phase: Phase::Collecting,
            end: None,
            syncinit_at: None,
            records: Vec::new(),
        })
    }

    pub fn done(&self) -> bool {
        self.phase == Phase::Done
    }

    /// The batch currently being collected or synchronised.
    pub fn current_batch(&self) -> u64 {
        self.cur
    }

    pub fn stats(&self) -> OnlineStats {
        self.stats
    }

    /// The coordinator's full state (full-centroids only).
    pub fn into_state(self) -> Option<ClusterState> {
        match self.store {
            Store::Full(s) => Some(*s),
            Store::Meta(..) => None,
        }
    }

    fn k(&self) -> usize {
        self.deltas.len()
    }

    pub fn on_input(&mut self, msg: CoordIn, bus: &dyn Bus) -> Result<()> {
        match msg {
            CoordIn::BatchStart {
                batch_seq,
                step,
                first_seq,
                size,
            } => {
                if size == 0 || self.batches.insert(batch_seq, BatchInfo { step, first_seq, size }).is_some() {
                    return Err(Error::Consistency(format!("bad announcement for batch {batch_seq}")));
                }
            }
            CoordIn::Tuple(t) => {
                if t.seq < self.next_seq || self.pending.insert(t.seq, t).is_some() {
                    return Err(Error::Consistency("duplicate work tuple".into()));
                }
            }
            CoordIn::SyncReq { worker, batch_seq } => {
                if batch_seq != self.cur || self.phase != Phase::AwaitReq || !self.reqs.insert(worker) {
                    return Err(Error::Consistency(format!(
                        "unexpected SYNCREQ from worker {worker} for batch {batch_seq}"
                    )));
                }
            }
            CoordIn::End {
                final_step,
                last_batch,
            } => self.end = Some((final_step, last_batch)),
        }
        self.pump(bus)
    }

    fn publish(&self, bus: &dyn Bus, m: &SyncMessage) -> Result<usize> {
        let bytes: Payload = serialize_sync(m)?.into();
        let n = bytes.len();
        bus.publish(SYNC_TOPIC, bytes)?;
        Ok(n)
    }

    fn pump(&mut self, bus: &dyn Bus) -> Result<()> {
        loop {
            match self.phase {
                Phase::Collecting => {
                    let Some(info) = self.batches.get(&self.cur).copied() else {
                        return Ok(());
                    };
                    if self.processed == 0 && info.size > 0 && self.next_seq != info.first_seq {
                        return Err(Error::Consistency(format!("batch {} does not start at seq {}", self.cur, self.next_seq)));
                    }
                    while self.processed < info.size {
                        let Some(t) = self.pending.remove(&self.next_seq) else {
                            break;
                        };
                        if t.batch_seq != self.cur {
                            return Err(Error::Consistency(format!("tuple {} is not in batch {}", t.seq, self.cur)));
                        }
                        self.on_tuple(t)?;
                        self.next_seq += 1;
                        self.processed += 1;
                    }
                    if self.processed < info.size {
                        return Ok(());
                    }
                    self.syncinit_at = Some(Instant::now());
                    self.publish(bus, &SyncMessage::SyncInit { batch_seq: self.cur })?;
                    self.phase = Phase::AwaitReq;
                }
                Phase::AwaitReq => {
                    if self.reqs.len() < self.workers {
                        return Ok(());
                    }
                    self.phase = Phase::AwaitNext;
                }
                Phase::AwaitNext => {
                    let (step, last) = if let Some(next) = self.batches.get(&(self.cur + 1)) {
                        (next.step, false)
                    } else {
                        match self.end {
                            Some((final_step, last_batch)) if last_batch == self.cur => {
                                (final_step.unwrap_or(self.current_step).max(self.current_step), true)
                            }
                            Some((_, last_batch)) if last_batch < self.cur => {
                                return Err(Error::Consistency("stream ended before the current batch".into()))
                            }
                            _ => return Ok(()),
                        }
                    };
                    self.sync(step, bus)?;
                    if last {
                        self.publish(bus, &SyncMessage::Stop { batch_seq: self.cur })?;
                        self.phase = Phase::Done;
                        return Ok(());
                    }
                    self.cur += 1;
                    self.processed = 0;
                    self.reqs.clear();
                    self.phase = Phase::Collecting;
                }
                Phase::Done => return Ok(()),
            }
        }
    }

    fn slot_of(&self, uid: u64) -> Option<usize> {
        match &self.store {
            Store::Meta(_, index) => index.get(&uid).copied(),
            Store::Full(s) => s.slot_of(uid),
        }
    }

    fn on_tuple(&mut self, t: WorkTuple) -> Result<()> {
        match t.kind {
            TupleKind::Pmadd => {
                let uid = t
                    .target_uid
                    .ok_or_else(|| Error::Consistency("PMADD without a target".into()))?;
                let slot = self
                    .slot_of(uid)
                    .ok_or_else(|| Error::Consistency(format!("PMADD targets unknown cluster {uid}")))?;
                let ts = &mut self.delta_ts[slot];
                *ts = Some(ts.map_or(t.protomeme.ending_ts, |v| v.max(t.protomeme.ending_ts)));
                self.deltas[slot].push(t.protomeme);
            }
            TupleKind::Outlier => {
                let p = t.protomeme;
                let mut best: Option<(usize, f64)> = None;
                for (i, oc) in self.outliers.iter().enumerate() {
                    let sim = oc.centroid.similarity(&p);
                    if best.map_or(true, |(_, b)| sim > b) {
                        best = Some((i, sim));
                    }
                }
                match best {
                    Some((i, sim)) if !self.stats.is_outlier(sim, self.nsigma) => {
                        let oc = &mut self.outliers[i];
                        oc.centroid.add(&p);
                        oc.ts = oc.ts.max(p.ending_ts);
                        oc.members.push(p);
                    }
                    _ => {
                        let mut centroid = Centroid::default();
                        centroid.add(&p);
                        self.outliers.push(OutlierCluster {
                            centroid,
                            ts: p.ending_ts,
                            members: vec![p],
                        });
                    }
                }
            }
        }
        self.stats.add(t.sim)
    }

    /// Choose the surviving K clusters, broadcast them, and move the window
    /// to `step`.
    fn sync(&mut self, step: u64, bus: &dyn Bus) -> Result<()> {
        let start = Instant::now();
        let k = self.k();
        let base: Vec<Option<i64>> = match &self.store {
            Store::Meta(meta, _) => meta.iter().map(|m| m.ts).collect(),
            Store::Full(s) => s.last_update_times(),
        };
        let existing: Vec<Option<i64>> = base.iter().zip(&self.delta_ts).map(|(a, b)| (*a).max(*b)).collect();
        let new_ts: Vec<i64> = self.outliers.iter().map(|o| o.ts).collect();
        let sel = select_survivors(&existing, &new_ts);
        let replaced: BTreeMap<usize, usize> = sel.replacements.iter().copied().collect();

        let mut outliers: Vec<Option<OutlierCluster>> = std::mem::take(&mut self.outliers).into_iter().map(Some).collect();
        let mut entries = Vec::with_capacity(k);
        for slot in 0..k {
            let added = std::mem::take(&mut self.deltas[slot]);
            if let Some(&i) = replaced.get(&slot) {
                let oc = outliers[i].take().expect("each new cluster placed once");
                let uid = self.next_uid;
                self.next_uid += 1;
                entries.push(DeltaEntry {
                    slot,
                    cluster_uid: uid,
                    is_new: true,
                    added_protomemes: oc.members,
                    last_update_ts: Some(oc.ts),
                });
            } else {
                let uid = match &self.store {
                    Store::Meta(meta, _) => meta[slot].uid,
                    Store::Full(s) => s.slots[slot].uid,
                };
                entries.push(DeltaEntry {
                    slot,
                    cluster_uid: uid,
                    is_new: false,
                    added_protomemes: added,
                    last_update_ts: existing[slot],
                });
            }
        }
        self.delta_ts = vec![None; k];
        let batch_step = self.batches[&self.cur].step;
        let stats_payload = self.stats.into();

        let (message, live) = match &mut self.store {
            Store::Meta(meta, index) => {
                for e in &entries {
                    let m = &mut meta[e.slot];
                    if e.is_new {
                        index.remove(&m.uid);
                        index.insert(e.cluster_uid, e.slot);
                        *m = SlotMeta {
                            uid: e.cluster_uid,
                            ts: e.last_update_ts,
                            step_counts: BTreeMap::new(),
                        };
                    }
                    m.ts = e.last_update_ts;
                    if !e.added_protomemes.is_empty() {
                        *m.step_counts.entry(batch_step).or_insert(0) += e.added_protomemes.len();
                    }
                }
                if let Some(cutoff) = step.checked_sub(self.window) {
                    for m in meta.iter_mut() {
                        m.step_counts.retain(|s, _| *s > cutoff);
                        if m.step_counts.is_empty() {
                            m.ts = None;
                        }
                    }
                }
                let live = meta.iter().flat_map(|m| m.step_counts.values()).sum();
                let msg = SyncMessage::CDelta {
                    batch_seq: self.cur,
                    current_step: step,
                    entries,
                    stats: stats_payload,
                };
                (msg, live)
            }
            Store::Full(state) => {
                apply_delta_entries(state, &entries)?;
                state.stats = self.stats;
                state.expire_to(step)?;
                let centroid_entries = state
                    .slots
                    .iter()
                    .enumerate()
                    .map(|(slot, c)| CentroidEntry {
                        slot,
                        cluster_uid: c.uid,
                        centroid: c.centroid.clone(),
                        last_update_ts: c.last_update_ts,
                        markers: state.markers_of(c.uid),
                    })
                    .collect();
                let msg = SyncMessage::Centroids {
                    batch_seq: self.cur,
                    current_step: step,
                    entries: centroid_entries,
                    stats: stats_payload,
                };
                (msg, state.live_protomemes())
            }
        };
        self.current_step = step;
        let bytes = self.publish(bus, &message)?;
        let info = self.batches.remove(&self.cur).expect("current batch announced");
        self.records.push(CoordBatchRecord {
            batch_seq: self.cur,
            step: info.step,
            tuples: info.size,
            message_bytes: bytes,
            syncinit_at: self.syncinit_at.take().unwrap_or(start),
            build: start.elapsed(),
            live_protomemes: live,
            new_clusters: sel.replacements.len(),
            discarded_outliers: sel.discarded.len(),
        });
        Ok(())
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }
}
