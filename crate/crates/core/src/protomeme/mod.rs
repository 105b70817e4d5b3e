//! Protomemes: groups of tweets from one time step that share a marker,
//! represented by four sparse vectors.

mod vector;

pub use vector::{cosine, vec_add, vec_sub, SparseVector, NEGATIVE_EPS, ZERO_EPS};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::ingest::{TimeStepBatch, Tweet};
use crate::textproc::{extract_entities_with, TextOptions};

pub const TID_PREFIX: &str = "t:";
pub const UID_PREFIX: &str = "u:";
pub const WORD_PREFIX: &str = "w:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkerKind {
    Hashtag,
    Mention,
    Url,
    Phrase,
}

impl MarkerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MarkerKind::Hashtag => "hashtag",
            MarkerKind::Mention => "mention",
            MarkerKind::Url => "url",
            MarkerKind::Phrase => "phrase",
        }
    }
}

/// The entity shared by every tweet of a protomeme.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Marker {
    pub kind: MarkerKind,
    pub value: String,
}

impl Marker {
    pub fn new(kind: MarkerKind, value: impl Into<String>) -> Self {
        Self {
            kind,
            value: value.into(),
        }
    }
}

impl fmt::Display for Marker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind.as_str(), self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Protomeme {
    pub marker: Marker,
    pub v_tid: SparseVector,
    pub v_uid: SparseVector,
    pub v_content: SparseVector,
    pub v_diffusion: SparseVector,
    pub created_ts: i64,
    pub ending_ts: i64,
    pub step_index: u64,
}

impl Protomeme {
    pub fn vectors(&self) -> [&SparseVector; 4] {
        [&self.v_tid, &self.v_uid, &self.v_content, &self.v_diffusion]
    }

    /// Member tweet ids, ascending.
    pub fn tweet_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .v_tid
            .keys()
            .map(|k| k.strip_prefix(TID_PREFIX).unwrap_or(k).to_string())
            .collect();
        ids.sort_unstable();
        ids
    }
}

/// Tweet id → users who retweeted it, with the step each entry was last
/// touched so stale entries can be pruned.
#[derive(Debug, Clone, Default)]
pub struct RetweetIndex {
    entries: FxHashMap<String, (BTreeSet<String>, u64)>,
}

impl RetweetIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn retweeters(&self, tweet_id: &str) -> impl Iterator<Item = &String> {
        self.entries.get(tweet_id).into_iter().flat_map(|(users, _)| users.iter())
    }

    /// Record this batch's retweets, then evict entries untouched for
    /// `window + 1` steps.
    pub fn index_batch(&mut self, batch: &TimeStepBatch, window: u64) {
        for tweet in &batch.tweets {
            if let Some(source) = &tweet.retweet_of {
                let entry = self.entries.entry(source.clone()).or_default();
                entry.0.insert(tweet.author_id.clone());
                entry.1 = batch.step_index;
            }
        }
        let step = batch.step_index;
        self.entries.retain(|_, (_, touched)| *touched + window + 1 > step);
    }
}

#[derive(Default)]
struct Builder {
    tids: BTreeSet<String>,
    uids: BTreeSet<String>,
    words: BTreeMap<String, u32>,
    diffusion: BTreeSet<String>,
    created: i64,
    ending: i64,
}

fn binary<'a>(prefix: &str, keys: impl IntoIterator<Item = &'a String>) -> SparseVector {
    SparseVector::from_pairs(keys.into_iter().map(|k| (format!("{prefix}{k}"), 1.0)))
}

/// Build one protomeme per distinct marker in the batch, sorted by marker.
///
/// `unmarked` is incremented for each tweet carrying no marker at all.
pub fn generate_protomemes(
    batch: &TimeStepBatch,
    index: &RetweetIndex,
    opts: TextOptions,
    unmarked: &mut u64,
) -> Vec<Protomeme> {
    let mut groups: BTreeMap<Marker, Builder> = BTreeMap::new();
    for tweet in &batch.tweets {
        let e = extract_entities_with(tweet, opts);
        let markers = e
            .hashtags
            .iter()
            .map(|h| Marker::new(MarkerKind::Hashtag, h.as_str()))
            .chain(e.mention_ids.iter().map(|m| Marker::new(MarkerKind::Mention, m.as_str())))
            .chain(e.urls.iter().map(|u| Marker::new(MarkerKind::Url, u.as_str())))
            .chain(e.phrase.iter().map(|p| Marker::new(MarkerKind::Phrase, p.as_str())));
        let mut any = false;
        for marker in markers {
            any = true;
            let b = groups.entry(marker).or_insert_with(|| Builder {
                created: tweet.created_at,
                ending: tweet.created_at,
                ..Default::default()
            });
            add_tweet(b, tweet, &e.mention_ids, &e.content_tokens, index);
        }
        if !any {
            *unmarked += 1;
        }
    }
    groups
        .into_iter()
        .map(|(marker, b)| Protomeme {
            marker,
            v_tid: binary(TID_PREFIX, &b.tids),
            v_uid: binary(UID_PREFIX, &b.uids),
            v_content: SparseVector::from_pairs(
                b.words.iter().map(|(w, n)| (format!("{WORD_PREFIX}{w}"), f64::from(*n))),
            ),
            v_diffusion: binary(UID_PREFIX, &b.diffusion),
            created_ts: b.created,
            ending_ts: b.ending,
            step_index: batch.step_index,
        })
        .collect()
}

fn add_tweet(b: &mut Builder, tweet: &Tweet, mentions: &BTreeSet<String>, words: &[String], index: &RetweetIndex) {
    b.tids.insert(tweet.tweet_id.clone());
    b.uids.insert(tweet.author_id.clone());
    b.diffusion.insert(tweet.author_id.clone());
    b.diffusion.extend(mentions.iter().cloned());
    b.diffusion.extend(index.retweeters(&tweet.tweet_id).cloned());
    for w in words {
        *b.words.entry(w.clone()).or_default() += 1;
    }
    b.created = b.created.min(tweet.created_at);
    b.ending = b.ending.max(tweet.created_at);
}

/// Generator-side state: the retweet index plus counters.
#[derive(Debug, Clone)]
pub struct ProtomemeGenerator {
    index: RetweetIndex,
    window: u64,
    opts: TextOptions,
    unmarked_tweets: u64,
    generated: u64,
}

impl ProtomemeGenerator {
    pub fn new(window: u64, opts: TextOptions) -> Self {
        Self {
            index: RetweetIndex::new(),
            window,
            opts,
            unmarked_tweets: 0,
            generated: 0,
        }
    }

    pub fn generate(&mut self, batch: &TimeStepBatch) -> Vec<Arc<Protomeme>> {
        self.index.index_batch(batch, self.window);
        let out = generate_protomemes(batch, &self.index, self.opts, &mut self.unmarked_tweets);
        self.generated += out.len() as u64;
        out.into_iter().map(Arc::new).collect()
    }

    pub fn unmarked_tweets(&self) -> u64 {
        self.unmarked_tweets
    }

    pub fn generated(&self) -> u64 {
        self.generated
    }

    pub fn index(&self) -> &RetweetIndex {
        &self.index
    }
}
