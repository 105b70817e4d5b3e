use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cluster::{Centroid, OnlineStats};
use crate::error::Result;
use crate::protomeme::{Marker, Protomeme};

/// Name of the broadcast topic carrying sync messages.
pub const SYNC_TOPIC: &str = "clusters.info.sync";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TupleKind {
    Pmadd,
    Outlier,
}

/// A worker's verdict on one protomeme.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkTuple {
    pub kind: TupleKind,
    /// Generator sequence number.
    pub seq: u64,
    pub batch_seq: u64,
    pub protomeme: Arc<Protomeme>,
    /// Present for PMADD.
    pub target_uid: Option<u64>,
    /// The value fed to the running statistics.
    pub sim: f64,
    pub worker_id: usize,
}

/// Running statistics as broadcast to workers. `sigma` is redundant with
/// `m2` and kept for readers of the wire format.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatsPayload {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
    pub sigma: f64,
}

impl From<OnlineStats> for StatsPayload {
    fn from(s: OnlineStats) -> Self {
        Self {
            count: s.count,
            mean: s.mean,
            m2: s.m2,
            sigma: s.sigma(),
        }
    }
}

impl From<StatsPayload> for OnlineStats {
    fn from(s: StatsPayload) -> Self {
        Self {
            count: s.count,
            mean: s.mean,
            m2: s.m2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaEntry {
    pub slot: usize,
    pub cluster_uid: u64,
    pub is_new: bool,
    pub added_protomemes: Vec<Arc<Protomeme>>,
    pub last_update_ts: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidEntry {
    pub slot: usize,
    pub cluster_uid: u64,
    /// Member vector sums and count.
    pub centroid: Centroid,
    pub last_update_ts: Option<i64>,
    /// Markers the marker map routes to this cluster.
    pub markers: Vec<Marker>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum SyncMessage {
    #[serde(rename = "SYNCINIT")]
    SyncInit { batch_seq: u64 },
    #[serde(rename = "CDELTA")]
    CDelta {
        batch_seq: u64,
        /// Step the receivers must expire their window to.
        current_step: u64,
        entries: Vec<DeltaEntry>,
        stats: StatsPayload,
    },
    #[serde(rename = "CENTROIDS")]
    Centroids {
        batch_seq: u64,
        current_step: u64,
        entries: Vec<CentroidEntry>,
        stats: StatsPayload,
    },
    #[serde(rename = "STOP")]
    Stop { batch_seq: u64 },
}

impl SyncMessage {
    pub fn batch_seq(&self) -> u64 {
        match self {
            SyncMessage::SyncInit { batch_seq }
            | SyncMessage::CDelta { batch_seq, .. }
            | SyncMessage::Centroids { batch_seq, .. }
            | SyncMessage::Stop { batch_seq } => *batch_seq,
        }
    }
}

/// Canonical compact JSON: sorted keys, no whitespace.
pub fn serialize_sync(m: &SyncMessage) -> Result<Vec<u8>> {
    Ok(serde_json::to_vec(&serde_json::to_value(m)?)?)
}

pub fn deserialize_sync(bytes: &[u8]) -> Result<SyncMessage> {
    Ok(serde_json::from_slice(bytes)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protomeme::{MarkerKind, SparseVector};

    fn proto() -> Arc<Protomeme> {
        Arc::new(Protomeme {
            marker: Marker::new(MarkerKind::Url, "http://a/b"),
            v_tid: SparseVector::from_pairs([("t:1", 1.0)]),
            v_uid: SparseVector::from_pairs([("u:9", 1.0)]),
            v_content: SparseVector::from_pairs([("w:x", 2.0), ("w:a", 1.0)]),
            v_diffusion: SparseVector::from_pairs([("u:9", 1.0), ("u:3", 1.0)]),
            created_ts: 5,
            ending_ts: 7,
            step_index: 0,
        })
    }

    fn fixtures() -> Vec<SyncMessage> {
        let mut stats = OnlineStats::default();
        for x in [0.1, 0.35, 0.9] {
            stats.add(x).unwrap();
        }
        let mut c = Centroid::default();
        c.add(&proto());
        vec![
            SyncMessage::SyncInit { batch_seq: 3 },
            SyncMessage::Stop { batch_seq: 4 },
            SyncMessage::CDelta {
                batch_seq: 3,
                current_step: 2,
                entries: vec![
                    DeltaEntry {
                        slot: 0,
                        cluster_uid: 11,
                        is_new: false,
                        added_protomemes: vec![],
                        last_update_ts: None,
                    },
                    DeltaEntry {
                        slot: 1,
                        cluster_uid: 12,
                        is_new: true,
                        added_protomemes: vec![proto()],
                        last_update_ts: Some(7),
                    },
                ],
                stats: stats.into(),
            },
            SyncMessage::Centroids {
                batch_seq: 3,
                current_step: 2,
                entries: vec![CentroidEntry {
                    slot: 0,
                    cluster_uid: 12,
                    centroid: c,
                    last_update_ts: Some(7),
                    markers: vec![proto().marker.clone()],
                }],
                stats: stats.into(),
            },
        ]
    }

    #[test]
    fn round_trip_is_byte_exact() {
        for m in fixtures() {
            let bytes = serialize_sync(&m).unwrap();
            let back = deserialize_sync(&bytes).unwrap();
            assert_eq!(back, m);
            assert_eq!(serialize_sync(&back).unwrap(), bytes);
            let stats: Option<OnlineStats> = match &back {
                SyncMessage::CDelta { stats, .. } | SyncMessage::Centroids { stats, .. } => Some((*stats).into()),
                _ => None,
            };
            if let Some(s) = stats {
                assert_eq!(s.sigma().to_bits(), StatsPayload::from(s).sigma.to_bits());
            }
        }
    }

    #[test]
    fn syncinit_is_small_and_keys_sorted() {
        let bytes = serialize_sync(&SyncMessage::SyncInit { batch_seq: 123456 }).unwrap();
        assert!(bytes.len() < 100);
        assert_eq!(bytes, br#"{"batch_seq":123456,"kind":"SYNCINIT"}"#);
    }
}
