use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Cluster, ClusterState, OnlineStats};
use crate::error::{Error, Result};
use crate::protomeme::{Marker, Protomeme};

/// One line of the cluster snapshot format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterSnapshot {
    pub cluster_uid: u64,
    pub marker_list: Vec<Marker>,
    pub tweet_ids: Vec<String>,
    pub last_update_ts: Option<i64>,
}

impl ClusterSnapshot {
    pub fn of(c: &Cluster) -> Self {
        Self {
            cluster_uid: c.uid,
            marker_list: c.live_markers(),
            tweet_ids: c.tweet_ids().into_iter().collect(),
            last_update_ts: c.last_update_ts,
        }
    }
}

pub fn write_snapshots<W: Write>(snaps: &[ClusterSnapshot], mut out: W) -> Result<()> {
    for s in snaps {
        serde_json::to_writer(&mut out, s)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_snapshots<R: BufRead>(reader: R) -> Result<Vec<ClusterSnapshot>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Rebuild a cluster state from snapshots plus the protomemes regenerated
/// from the same history (in step order).
///
/// A protomeme belongs to the first snapshot, in file order, that lists its
/// marker and contains all its tweets. Snapshots fill slots in file order;
/// remaining slots start empty. The result is expired to `current_step`.
pub fn load_bootstrap(
    snaps: &[ClusterSnapshot],
    protos: &[Arc<Protomeme>],
    k: usize,
    window: u64,
    stats: OnlineStats,
    current_step: u64,
) -> Result<ClusterState> {
    if snaps.len() > k {
        return Err(Error::Config(format!("{} bootstrap clusters exceed k = {k}", snaps.len())));
    }
    let mut seen = BTreeSet::new();
    if let Some(dup) = snaps.iter().find(|s| !seen.insert(s.cluster_uid)) {
        return Err(Error::Config(format!("duplicate cluster uid {}", dup.cluster_uid)));
    }
    let max_uid = snaps.iter().map(|s| s.cluster_uid).max().map_or(0, |u| u + 1);
    let mut state = ClusterState::new(0, window);
    state.next_uid = max_uid;
    let markers: Vec<BTreeSet<&Marker>> = snaps.iter().map(|s| s.marker_list.iter().collect()).collect();
    let tweets: Vec<BTreeSet<&str>> = snaps.iter().map(|s| s.tweet_ids.iter().map(String::as_str).collect()).collect();

    for s in snaps {
        state.uid_slot.insert(s.cluster_uid, state.slots.len());
        state.slots.push(Cluster::new(s.cluster_uid));
    }
    while state.slots.len() < k {
        let uid = state.next_uid;
        state.next_uid += 1;
        state.uid_slot.insert(uid, state.slots.len());
        state.slots.push(Cluster::new(uid));
    }
    let mut ordered: Vec<&Arc<Protomeme>> = protos.iter().collect();
    ordered.sort_by_key(|p| p.step_index);
    for p in ordered {
        let ids = p.tweet_ids();
        let home = (0..snaps.len())
            .find(|&i| markers[i].contains(&p.marker) && ids.iter().all(|t| tweets[i].contains(t.as_str())));
        if let Some(slot) = home {
            state.add_to_slot(slot, p.clone());
        }
    }
    state.stats = stats;
    state.initialized = true;
    state.expire_to(current_step)?;

    let mut by_uid: BTreeMap<u64, &ClusterSnapshot> = BTreeMap::new();
    for s in snaps {
        by_uid.insert(s.cluster_uid, s);
    }
    for c in &state.slots[..snaps.len()] {
        let want = by_uid[&c.uid];
        let got: Vec<String> = c.tweet_ids().into_iter().collect();
        if got != want.tweet_ids {
            return Err(Error::Consistency(format!(
                "bootstrap cluster {} could not be rebuilt from the supplied history",
                c.uid
            )));
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::SequentialClusterer;
    use crate::cluster::Params;
    use crate::ingest::{synth_stream, bucket_all, SynthConfig};

    #[test]
    fn snapshot_round_trip_and_bootstrap() {
        let (tweets, _) = synth_stream(&SynthConfig {
            num_memes: 4,
            tweets_total: 300,
            duration: 300,
            ..Default::default()
        })
        .unwrap();
        let steps = bucket_all(tweets, 30).unwrap();
        let params = Params {
            k: 5,
            ..Params::default()
        };
        let mut seq = SequentialClusterer::new(params.clone()).unwrap();
        let mut all = Vec::new();
        let mut regen = crate::protomeme::ProtomemeGenerator::new(params.window_steps, Default::default());
        for b in &steps {
            seq.process_step(b).unwrap();
            all.extend(regen.generate(b));
        }
        let snaps = seq.state.snapshots();
        let mut buf = Vec::new();
        write_snapshots(&snaps, &mut buf).unwrap();
        let back = read_snapshots(buf.as_slice()).unwrap();
        assert_eq!(back, snaps);

        let last = steps.last().unwrap().step_index;
        let rebuilt = load_bootstrap(&back, &all, 5, params.window_steps, seq.state.stats, last).unwrap();
        rebuilt.check_invariants().unwrap();
        assert_eq!(rebuilt.snapshots(), snaps);
    }
}
