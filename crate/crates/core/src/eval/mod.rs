//! Comparing clusterings and reporting benchmark runs.

mod metrics;

pub use metrics::{Aggregates, BatchMetrics, MetricsReport};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cluster::ClusterSnapshot;
use crate::error::{Error, Result};

/// A possibly overlapping set of named clusters of tweet ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cover {
    pub clusters: Vec<(String, BTreeSet<String>)>,
}

impl Cover {
    /// Empty clusters are dropped.
    pub fn new<N: Into<String>>(clusters: impl IntoIterator<Item = (N, BTreeSet<String>)>) -> Self {
        Self {
            clusters: clusters
                .into_iter()
                .filter(|(_, s)| !s.is_empty())
                .map(|(n, s)| (n.into(), s))
                .collect(),
        }
    }

    pub fn from_snapshots(snaps: &[ClusterSnapshot]) -> Self {
        Self::new(
            snaps
                .iter()
                .map(|s| (s.cluster_uid.to_string(), s.tweet_ids.iter().cloned().collect())),
        )
    }

    pub fn from_uid_map(map: &BTreeMap<u64, BTreeSet<String>>) -> Self {
        Self::new(map.iter().map(|(u, s)| (u.to_string(), s.clone())))
    }

    pub fn from_named(map: &BTreeMap<String, BTreeSet<String>>) -> Self {
        Self::new(map.iter().map(|(n, s)| (n.clone(), s.clone())))
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn elements(&self) -> BTreeSet<&str> {
        self.clusters.iter().flat_map(|(_, s)| s.iter().map(String::as_str)).collect()
    }

    fn sets(&self) -> BTreeSet<&BTreeSet<String>> {
        self.clusters.iter().map(|(_, s)| s).collect()
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CoverLine {
    Snapshot { cluster_uid: u64, tweet_ids: Vec<String> },
    Named { cluster_id: String, tweet_ids: Vec<String> },
}

/// Read a cover from JSONL in either the cluster-snapshot format or the
/// ground-truth format (`cluster_id`, `tweet_ids`).
pub fn read_cover<R: BufRead>(reader: R) -> Result<Cover> {
    let mut clusters = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: CoverLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        let (name, ids) = match parsed {
            CoverLine::Snapshot { cluster_uid, tweet_ids } => (cluster_uid.to_string(), tweet_ids),
            CoverLine::Named { cluster_id, tweet_ids } => (cluster_id, tweet_ids),
        };
        if ids.iter().any(String::is_empty) {
            return Err(Error::Schema {
                line: i + 1,
                field: "tweet_ids".into(),
            });
        }
        clusters.push((name, ids.into_iter().collect()));
    }
    Ok(Cover::new(clusters))
}

fn h(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// Normalised conditional entropy of `x` given `y`, averaged over the
/// clusters of `x`. Sets are given as sorted element indices.
fn conditional_norm(x: &[Vec<usize>], y: &[Vec<usize>], n: usize) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let nf = n as f64;
    let mut total = 0.0;
    for xk in x {
        let px = xk.len() as f64 / nf;
        let hx = h(px) + h(1.0 - px);
        if hx <= 0.0 {
            continue;
        }
        let mut best: Option<f64> = None;
        for yl in y {
            let c11 = intersection_len(xk, yl) as f64;
            let c10 = xk.len() as f64 - c11;
            let c01 = yl.len() as f64 - c11;
            let c00 = nf - xk.len() as f64 - yl.len() as f64 + c11;
            if h(c11 / nf) + h(c00 / nf) <= h(c01 / nf) + h(c10 / nf) {
                continue;
            }
            // Summed per cell as -p(x,y) log p(x|y) so identical clusters give exactly 0.
            let (y1, y0) = (yl.len() as f64, nf - yl.len() as f64);
            let cell = |c: f64, cy: f64| if c > 0.0 { -(c / nf) * (c / cy).log2() } else { 0.0 };
            let cond = (cell(c11, y1) + cell(c01, y1) + cell(c10, y0) + cell(c00, y0)).max(0.0);
            best = Some(best.map_or(cond, |b: f64| b.min(cond)));
        }
        total += best.unwrap_or(hx) / hx;
    }
    total / x.len() as f64
}

fn intersection_len(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Overlapping-cover NMI of Lancichinetti, Fortunato and Kertész, over the
/// union of both covers' elements.
pub fn lfk_nmi(a: &Cover, b: &Cover) -> f64 {
    let universe: BTreeSet<&str> = a.elements().into_iter().chain(b.elements()).collect();
    let n = universe.len();
    if n == 0 {
        return 1.0;
    }
    let index: BTreeMap<&str, usize> = universe.iter().enumerate().map(|(i, e)| (*e, i)).collect();
    let encode = |c: &Cover| -> Vec<Vec<usize>> {
        c.clusters
            .iter()
            .map(|(_, s)| s.iter().map(|e| index[e.as_str()]).collect())
            .collect()
    };
    let (x, y) = (encode(a), encode(b));
    let nmi = 1.0 - 0.5 * (conditional_norm(&x, &y, n) + conditional_norm(&y, &x, n));
    nmi.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairDiff {
    pub a: Option<String>,
    pub b: Option<String>,
    pub only_in_a: Vec<String>,
    pub only_in_b: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExactComparison {
    pub equal: bool,
    pub diffs: Vec<PairDiff>,
}

impl ExactComparison {
    pub fn report(&self) -> String {
        if self.equal {
            return "covers are identical\n".into();
        }
        let mut s = String::new();
        for d in &self.diffs {
            let _ = writeln!(
                s,
                "{} vs {}: only in a {:?}, only in b {:?}",
                d.a.as_deref().unwrap_or("-"),
                d.b.as_deref().unwrap_or("-"),
                d.only_in_a,
                d.only_in_b
            );
        }
        s
    }
}

/// Set-of-sets equality. Unmatched clusters are paired greedily by overlap
/// to describe the difference.
pub fn compare_exact(a: &Cover, b: &Cover) -> ExactComparison {
    let (sa, sb) = (a.sets(), b.sets());
    if sa == sb {
        return ExactComparison {
            equal: true,
            diffs: Vec::new(),
        };
    }
    let mut left: Vec<&(String, BTreeSet<String>)> = a.clusters.iter().filter(|(_, s)| !sb.contains(s)).collect();
    let mut right: Vec<&(String, BTreeSet<String>)> = b.clusters.iter().filter(|(_, s)| !sa.contains(s)).collect();
    let mut diffs = Vec::new();
    while !left.is_empty() && !right.is_empty() {
        let mut best = (0, 0, 0usize);
        for (i, (_, x)) in left.iter().enumerate() {
            for (j, (_, y)) in right.iter().enumerate() {
                let o = x.intersection(y).count();
                if o > best.2 {
                    best = (i, j, o);
                }
            }
        }
        let (na, x) = left.remove(best.0);
        let (nb, y) = right.remove(best.1);
        diffs.push(PairDiff {
            a: Some(na.clone()),
            b: Some(nb.clone()),
            only_in_a: x.difference(y).cloned().collect(),
            only_in_b: y.difference(x).cloned().collect(),
        });
    }
    for (n, s) in left {
        diffs.push(PairDiff {
            a: Some(n.clone()),
            b: None,
            only_in_a: s.iter().cloned().collect(),
            only_in_b: Vec::new(),
        });
    }
    for (n, s) in right {
        diffs.push(PairDiff {
            a: None,
            b: Some(n.clone()),
            only_in_a: Vec::new(),
            only_in_b: s.iter().cloned().collect(),
        });
    }
    ExactComparison {
        equal: diffs.is_empty() && a.len() == b.len(),
        diffs,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub strategy: String,
    pub workers: usize,
    pub batch_size: usize,
    pub comp_over_sync_ratio: f64,
    pub avg_sync_time_s: f64,
    pub avg_message_bytes: f64,
    pub total_time_s: f64,
    pub speedup_vs_1worker: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

/// One row per run. Speedup is relative to the 1-worker run of the same
/// strategy and batch size, when there is one.
pub fn bench_report(runs: &[MetricsReport]) -> BenchReport {
    let rows = runs
        .iter()
        .map(|r| {
            let agg = r.aggregates();
            let baseline = runs
                .iter()
                .find(|o| o.workers == 1 && o.strategy == r.strategy && o.batch_size == r.batch_size);
            let speedup = baseline.and_then(|b| {
                (runs.len() > 1 && r.total_time_s > 0.0).then(|| {
                    if std::ptr::eq(b, r) {
                        1.0
                    } else {
                        b.total_time_s / r.total_time_s
                    }
                })
            });
            BenchRow {
                strategy: r.strategy.clone(),
                workers: r.workers,
                batch_size: r.batch_size,
                comp_over_sync_ratio: agg.comp_over_sync_ratio,
                avg_sync_time_s: agg.avg_sync_time_s,
                avg_message_bytes: agg.avg_message_bytes,
                total_time_s: agg.total_time_s,
                speedup_vs_1worker: speedup,
            }
        })
        .collect();
    BenchReport { rows }
}

impl BenchReport {
    pub fn has_speedup(&self) -> bool {
        self.rows.iter().any(|r| r.speedup_vs_1worker.is_some())
    }

    pub fn to_table(&self) -> String {
        let mut header = vec!["strategy", "workers", "batch", "comp/sync", "sync s/batch", "avg msg bytes", "total s"];
        if self.has_speedup() {
            header.push("speedup");
        }
        let mut cells: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
        for r in &self.rows {
            let mut row = vec![
                r.strategy.clone(),
                r.workers.to_string(),
                r.batch_size.to_string(),
                format!("{:.2}", r.comp_over_sync_ratio),
                format!("{:.6}", r.avg_sync_time_s),
                format!("{:.1}", r.avg_message_bytes),
                format!("{:.3}", r.total_time_s),
            ];
            if self.has_speedup() {
                row.push(r.speedup_vs_1worker.map_or("-".into(), |s| format!("{s:.2}")));
            }
            cells.push(row);
        }
        let widths: Vec<usize> = (0..cells[0].len())
            .map(|c| cells.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &cells {
            let line: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(c, v)| if c == 0 { format!("{v:<w$}", w = widths[c]) } else { format!("{v:>w$}", w = widths[c]) })
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, runs: &[MetricsReport]) -> Value {
        json!({
            "rows": self.rows,
            "runs": runs.iter().map(MetricsReport::to_json).collect::<Vec<_>>(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cover(sets: &[&[u32]]) -> Cover {
        Cover::new(
            sets.iter()
                .enumerate()
                .map(|(i, s)| (i.to_string(), s.iter().map(|e| e.to_string()).collect())),
        )
    }

    #[test]
    fn identical_covers_score_one() {
        let a = cover(&[&[1, 2, 3, 4], &[5, 6, 7, 8]]);
        assert_eq!(lfk_nmi(&a, &a), 1.0);
        let overlapping = cover(&[&[1, 2, 3], &[3, 4, 5], &[6]]);
        assert_eq!(lfk_nmi(&overlapping, &overlapping), 1.0);
    }

    #[test]
    fn one_moved_element_scores_between() {
        let a = cover(&[&[1, 2, 3, 4], &[5, 6, 7, 8]]);
        let b = cover(&[&[1, 2, 3], &[4, 5, 6, 7, 8]]);
        let v = lfk_nmi(&a, &b);
        assert!(v > 0.0 && v < 1.0, "{v}");
        assert!((v - lfk_nmi(&b, &a)).abs() < 1e-12);
    }

    #[test]
    fn unrelated_covers_score_near_zero() {
        let a = cover(&[&[1, 2, 3, 4], &[5, 6, 7, 8]]);
        let b = cover(&[&[1, 3, 5, 7], &[2, 4, 6, 8]]);
        assert!(lfk_nmi(&a, &b) < 1e-12);
        let c = cover(&[&[1, 2]]);
        let d = cover(&[&[3, 4]]);
        assert!(lfk_nmi(&c, &d) < 0.05);
    }

    #[test]
    fn exact_comparison_uses_set_semantics() {
        let a = cover(&[&[1, 2], &[3]]);
        let b = cover(&[&[3], &[2, 1]]);
        assert!(compare_exact(&a, &b).equal);
        let c = cover(&[&[1], &[2, 3]]);
        let cmp = compare_exact(&a, &c);
        assert!(!cmp.equal);
        assert!(cmp.report().contains("\"2\""));
    }

    #[test]
    fn read_both_formats() {
        let text = "{\"cluster_uid\":4,\"marker_list\":[],\"tweet_ids\":[\"a\",\"b\"],\"last_update_ts\":1}\n\
                    {\"cluster_id\":\"m1\",\"tweet_ids\":[\"c\"]}\n\
                    {\"cluster_id\":\"empty\",\"tweet_ids\":[]}\n";
        let c = read_cover(text.as_bytes()).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.clusters[0].0, "4");
    }

    #[test]
    fn single_run_has_no_speedup() {
        let run = MetricsReport {
            strategy: "cluster-delta".into(),
            workers: 2,
            batch_size: 1,
            deterministic: true,
            total_time_s: 1.0,
            batches: vec![],
        };
        let r = bench_report(&[run.clone()]);
        assert!(!r.has_speedup());
        let one = MetricsReport { workers: 1, total_time_s: 2.0, ..run.clone() };
        let r = bench_report(&[one, run]);
        assert_eq!(r.rows[0].speedup_vs_1worker, Some(1.0));
        assert_eq!(r.rows[1].speedup_vs_1worker, Some(2.0));
        assert_eq!(r.to_table().lines().count(), 3);
    }
}
