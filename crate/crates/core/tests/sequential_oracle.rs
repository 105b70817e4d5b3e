//! A second, deliberately naive implementation of the sequential clusterer:
//! members in plain vectors, centroids and statistics recomputed from
//! scratch on every use, marker routing found by scanning members.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use memestream::cluster::{ClusterSnapshot, Params, SequentialClusterer};
use memestream::ingest::{bucket_all, synth_stream, SynthConfig, TimeStepBatch};
use memestream::protomeme::{Marker, Protomeme, ProtomemeGenerator, SparseVector};
use memestream::textproc::TextOptions;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Vector = BTreeMap<String, f64>;

fn to_map(v: &SparseVector) -> Vector {
    v.iter().map(|(k, x)| (k.to_string(), x)).collect()
}

fn cos(a: &Vector, b: &Vector) -> f64 {
    let dot: f64 = a.iter().filter_map(|(k, x)| b.get(k).map(|y| x * y)).sum();
    let na: f64 = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(0.0, 1.0)
    }
}

struct Slot {
    uid: u64,
    members: Vec<Arc<Protomeme>>,
}

impl Slot {
    fn ts(&self) -> Option<i64> {
        self.members.iter().map(|p| p.ending_ts).max()
    }

    fn sim(&self, p: &Protomeme) -> f64 {
        if self.members.is_empty() {
            return 0.0;
        }
        let mut sums = [Vector::new(), Vector::new(), Vector::new(), Vector::new()];
        for m in &self.members {
            for (acc, v) in sums.iter_mut().zip(m.vectors()) {
                for (k, x) in v.iter() {
                    *acc.entry(k.to_string()).or_insert(0.0) += x;
                }
            }
        }
        p.vectors()
            .iter()
            .zip(&sums)
            .map(|(v, c)| cos(&to_map(v), c))
            .fold(0.0, f64::max)
    }
}

struct Oracle {
    params: Params,
    slots: Vec<Slot>,
    next_uid: u64,
    fed: Vec<f64>,
    started: bool,
    generator: ProtomemeGenerator,
}

impl Oracle {
    fn new(params: Params) -> Self {
        Self {
            slots: (0..params.k as u64).map(|uid| Slot { uid, members: vec![] }).collect(),
            next_uid: params.k as u64,
            fed: vec![],
            started: false,
            generator: ProtomemeGenerator::new(params.window_steps, TextOptions::default()),
            params,
        }
    }

    fn threshold(&self) -> f64 {
        let n = self.fed.len() as f64;
        if self.fed.is_empty() {
            return 0.0;
        }
        let mean = self.fed.iter().sum::<f64>() / n;
        let var = self.fed.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        mean - self.params.nsigma * var.sqrt()
    }

    fn holder_of(&self, m: &Marker) -> Option<usize> {
        let holders: Vec<usize> = (0..self.slots.len())
            .filter(|&s| self.slots[s].members.iter().any(|p| &p.marker == m))
            .collect();
        assert!(holders.len() <= 1, "marker {m} live in several clusters");
        holders.first().copied()
    }

    fn step(&mut self, batch: &TimeStepBatch) {
        let l = self.params.window_steps;
        for s in &mut self.slots {
            s.members.retain(|p| p.step_index + l > batch.step_index);
        }
        let mut protos = self.generator.generate(batch);
        if !self.started && !protos.is_empty() {
            self.started = true;
            let mut rng = ChaCha8Rng::seed_from_u64(self.params.seed);
            let mut idx = sample(&mut rng, protos.len(), self.params.k.min(protos.len())).into_vec();
            idx.sort();
            for (slot, &i) in idx.iter().enumerate() {
                self.slots[slot].members.push(protos[i].clone());
            }
            let picked: BTreeSet<usize> = idx.into_iter().collect();
            protos = protos.into_iter().enumerate().filter(|(i, _)| !picked.contains(i)).map(|(_, p)| p).collect();
        }
        for p in protos {
            if let Some(s) = self.holder_of(&p.marker) {
                self.fed.push(self.slots[s].sim(&p));
                self.slots[s].members.push(p);
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for (s, slot) in self.slots.iter().enumerate() {
                if slot.members.is_empty() {
                    continue;
                }
                let sim = slot.sim(&p);
                if best.map_or(true, |(_, b)| sim > b) {
                    best = Some((s, sim));
                }
            }
            let threshold = self.threshold();
            match best {
                Some((s, sim)) if sim > threshold => {
                    self.fed.push(sim);
                    self.slots[s].members.push(p);
                }
                other => {
                    self.fed.push(other.map_or(0.0, |(_, sim)| sim));
                    // Least recently updated slot, empty first, lowest index on ties;
                    // replaced only if strictly older than the newcomer.
                    let victim = (0..self.slots.len()).min_by_key(|&s| (self.slots[s].ts(), s)).unwrap();
                    if self.slots[victim].ts().map_or(true, |t| t < p.ending_ts) {
                        self.slots[victim] = Slot {
                            uid: self.next_uid,
                            members: vec![p],
                        };
                        self.next_uid += 1;
                    }
                }
            }
        }
    }

    fn snapshots(&self) -> Vec<ClusterSnapshot> {
        self.slots
            .iter()
            .filter(|s| !s.members.is_empty())
            .map(|s| ClusterSnapshot {
                cluster_uid: s.uid,
                marker_list: s.members.iter().map(|p| p.marker.clone()).collect::<BTreeSet<_>>().into_iter().collect(),
                tweet_ids: s.members.iter().flat_map(|p| p.tweet_ids()).collect::<BTreeSet<_>>().into_iter().collect(),
                last_update_ts: s.ts(),
            })
            .collect()
    }
}

fn check(cfg: SynthConfig, params: Params) {
    let (tweets, _) = synth_stream(&cfg).unwrap();
    let steps = bucket_all(tweets, params.step_seconds).unwrap();
    let mut fast = SequentialClusterer::new(params.clone()).unwrap();
    let mut slow = Oracle::new(params);
    for b in &steps {
        fast.process_step(b).unwrap();
        slow.step(b);
        assert_eq!(fast.state.snapshots(), slow.snapshots(), "diverged at step {}", b.step_index);
        fast.state.check_invariants().unwrap();
    }
    let n = slow.fed.len() as f64;
    let mean = slow.fed.iter().sum::<f64>() / n;
    assert_eq!(fast.state.stats.count as usize, slow.fed.len());
    assert!((fast.state.stats.mean - mean).abs() <= 1e-12 * mean.abs().max(1.0));
}

#[test]
fn matches_naive_reimplementation_default_params() {
    check(
        SynthConfig {
            tweets_total: 1500,
            duration: 900,
            ..Default::default()
        },
        Params::default(),
    );
}

#[test]
fn matches_naive_reimplementation_with_churn() {
    // Few clusters, short window and a loose threshold force outliers and
    // replacements.
    check(
        SynthConfig {
            tweets_total: 1200,
            num_memes: 12,
            duration: 600,
            seed: 9,
            ..Default::default()
        },
        Params {
            k: 4,
            step_seconds: 20,
            window_steps: 2,
            nsigma: 0.5,
            seed: 3,
        },
    );
}

#[test]
fn matches_naive_reimplementation_large_k() {
    check(
        SynthConfig {
            tweets_total: 800,
            num_memes: 40,
            duration: 400,
            seed: 5,
            ..Default::default()
        },
        Params {
            k: 60,
            step_seconds: 30,
            window_steps: 3,
            nsigma: 1.0,
            seed: 11,
        },
    );
}
