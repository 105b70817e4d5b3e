use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// Measurements for one synchronised batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchMetrics {
    pub batch_seq: u64,
    pub step: u64,
    pub tuples: usize,
    pub message_bytes: usize,
    pub sync_time_s: f64,
    /// Busiest worker's time spent deciding assignments.
    pub compute_time_s: f64,
    pub live_protomemes: usize,
    pub new_clusters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub strategy: String,
    pub workers: usize,
    pub batch_size: usize,
    pub deterministic: bool,
    /// Wall clock of the whole run.
    pub total_time_s: f64,
    pub batches: Vec<BatchMetrics>,
}

/// Totals derived from the per-batch rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub batches: usize,
    pub tuples: usize,
    pub compute_time_s: f64,
    pub sync_time_s: f64,
    pub comp_over_sync_ratio: f64,
    pub avg_message_bytes: f64,
    pub avg_sync_time_s: f64,
    pub total_time_s: f64,
}

impl MetricsReport {
    pub fn aggregates(&self) -> Aggregates {
        let n = self.batches.len();
        let compute: f64 = self.batches.iter().map(|b| b.compute_time_s).sum();
        let sync: f64 = self.batches.iter().map(|b| b.sync_time_s).sum();
        let bytes: usize = self.batches.iter().map(|b| b.message_bytes).sum();
        let per = |x: f64| if n == 0 { 0.0 } else { x / n as f64 };
        Aggregates {
            batches: n,
            tuples: self.batches.iter().map(|b| b.tuples).sum(),
            compute_time_s: compute,
            sync_time_s: sync,
            comp_over_sync_ratio: if sync > 0.0 { compute / sync } else { 0.0 },
            avg_message_bytes: per(bytes as f64),
            avg_sync_time_s: per(sync),
            total_time_s: self.total_time_s,
        }
    }

    /// The same report with every clock reading zeroed, for comparing runs.
    pub fn without_timings(&self) -> Self {
        let mut r = self.clone();
        r.total_time_s = 0.0;
        for b in &mut r.batches {
            b.sync_time_s = 0.0;
            b.compute_time_s = 0.0;
        }
        r
    }

    pub fn to_json(&self) -> Value {
        json!({ "report": self, "aggregates": self.aggregates() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(i: u64, bytes: usize, sync: f64, comp: f64) -> BatchMetrics {
        BatchMetrics {
            batch_seq: i,
            step: 0,
            tuples: 10,
            message_bytes: bytes,
            sync_time_s: sync,
            compute_time_s: comp,
            live_protomemes: 0,
            new_clusters: 0,
        }
    }

    #[test]
    fn aggregates_recompute_from_rows() {
        let r = MetricsReport {
            strategy: "cluster-delta".into(),
            workers: 2,
            batch_size: 10,
            deterministic: true,
            total_time_s: 3.0,
            batches: vec![row(1, 100, 0.5, 2.0), row(2, 300, 0.5, 1.0)],
        };
        let a = r.aggregates();
        assert_eq!(a.tuples, 20);
        assert_eq!(a.avg_message_bytes, 200.0);
        assert_eq!(a.comp_over_sync_ratio, 3.0);
        let back: MetricsReport = serde_json::from_value(r.to_json()["report"].clone()).unwrap();
        assert_eq!(back.aggregates(), a);
        assert_eq!(r.without_timings().batches[0].sync_time_s, 0.0);
    }
}
