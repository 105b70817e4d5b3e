//! The sequential sliding-window clusterer.

use std::sync::Arc;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{assign, Assignment, ClusterSnapshot, ClusterState, Params};
use crate::error::Result;
use crate::ingest::TimeStepBatch;
use crate::protomeme::{Protomeme, ProtomemeGenerator};
use crate::textproc::TextOptions;

/// Counters for one processed step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepReport {
    pub step_index: u64,
    pub protomemes: usize,
    pub seeded: usize,
    pub marker_hits: usize,
    pub nearest: usize,
    pub outliers: usize,
    /// Outliers that did not displace any cluster.
    pub discarded: usize,
    pub expired: usize,
}

impl std::ops::AddAssign for StepReport {
    fn add_assign(&mut self, o: Self) {
        self.step_index = o.step_index;
        self.protomemes += o.protomemes;
        self.seeded += o.seeded;
        self.marker_hits += o.marker_hits;
        self.nearest += o.nearest;
        self.outliers += o.outliers;
        self.discarded += o.discarded;
        self.expired += o.expired;
    }
}

/// Step-at-a-time driver around [`ClusterState`].
#[derive(Debug, Clone)]
pub struct SequentialClusterer {
    pub params: Params,
    pub state: ClusterState,
    pub generator: ProtomemeGenerator,
    pub totals: StepReport,
}

impl SequentialClusterer {
    pub fn new(params: Params) -> Result<Self> {
        Self::with_text_options(params, TextOptions::default())
    }

    pub fn with_text_options(params: Params, opts: TextOptions) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            state: ClusterState::new(params.k, params.window_steps),
            generator: ProtomemeGenerator::new(params.window_steps, opts),
            params,
            totals: StepReport::default(),
        })
    }

    /// Seed slots `0..K` with K distinct protomemes drawn by the seeded RNG.
    /// Returns the unused protomemes in their original order.
    fn cold_start(&mut self, protos: Vec<Arc<Protomeme>>) -> (Vec<Arc<Protomeme>>, usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.params.seed);
        let amount = self.params.k.min(protos.len());
        let mut picked = sample(&mut rng, protos.len(), amount).into_vec();
        picked.sort_unstable();
        let mut chosen = vec![false; protos.len()];
        for (slot, &i) in picked.iter().enumerate() {
            chosen[i] = true;
            self.state.add_to_slot(slot, protos[i].clone());
        }
        self.state.initialized = true;
        let rest = protos.into_iter().zip(chosen).filter(|(_, c)| !c).map(|(p, _)| p).collect();
        (rest, amount)
    }

    /// Process one protomeme against the current state.
    pub fn process(&mut self, p: Arc<Protomeme>, report: &mut StepReport) -> Result<Assignment> {
        let decision = assign(&self.state, &p, self.params.nsigma);
        self.state.stats.add(decision.stats_value())?;
        match decision {
            Assignment::MarkerHit { slot, .. } => {
                report.marker_hits += 1;
                self.state.add_to_slot(slot, p);
            }
            Assignment::Nearest { slot, .. } => {
                report.nearest += 1;
                self.state.add_to_slot(slot, p);
            }
            Assignment::Outlier { .. } => {
                report.outliers += 1;
                if self.state.replace_with_singleton(p).is_none() {
                    report.discarded += 1;
                }
            }
        }
        Ok(decision)
    }

    pub fn process_step(&mut self, batch: &TimeStepBatch) -> Result<StepReport> {
        let mut report = StepReport {
            step_index: batch.step_index,
            ..Default::default()
        };
        report.expired = self.state.expire_to(batch.step_index)?;
        let mut protos = self.generator.generate(batch);
        report.protomemes = protos.len();
        if !self.state.initialized && !protos.is_empty() {
            let (rest, seeded) = self.cold_start(protos);
            report.seeded = seeded;
            protos = rest;
        }
        for p in protos {
            self.process(p, &mut report)?;
        }
        self.totals += report;
        Ok(report)
    }
}

/// Run the whole stream, returning the final state and the snapshot of the
/// non-empty clusters after every step.
pub fn run_sequential<'a>(
    steps: impl IntoIterator<Item = &'a TimeStepBatch>,
    params: &Params,
) -> Result<(ClusterState, Vec<Vec<ClusterSnapshot>>)> {
    let mut seq = SequentialClusterer::new(params.clone())?;
    let mut per_step = Vec::new();
    for batch in steps {
        seq.process_step(batch)?;
        per_step.push(seq.state.snapshots());
    }
    if seq.totals.protomemes == 0 {
        log::warn!("stream produced no protomemes; returning the empty initial state");
    }
    Ok((seq.state, per_step))
}
