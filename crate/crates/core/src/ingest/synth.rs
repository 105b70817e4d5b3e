//! Planted-meme synthetic streams with a known ground-truth cover.
//!
//! Each meme owns disjoint pools of hashtags, mentioned users, URLs and topic
//! words, plus a community of authors. Tweets draw all their entities from a
//! single meme, so the generating meme is an unambiguous label.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Tweet;
use crate::error::{Error, Result};

/// Meme id → tweet ids generated from it.
pub type GroundTruth = BTreeMap<String, BTreeSet<String>>;

const HASHTAGS_PER_MEME: usize = 3;
const MENTIONS_PER_MEME: usize = 4;
const URLS_PER_MEME: usize = 2;
const FILLER: [&str; 8] = ["the", "is", "a", "of", "and", "to", "in", "for"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub num_memes: usize,
    pub tweets_total: usize,
    /// Seconds covered by the stream.
    pub duration: i64,
    pub vocab_size: usize,
    pub users: usize,
    pub retweet_prob: f64,
    pub mention_prob: f64,
    pub hashtag_prob: f64,
    pub url_prob: f64,
    /// Chance that a content word comes from the vocabulary shared by all
    /// memes rather than the meme's own.
    pub shared_word_prob: f64,
    /// Epoch seconds of the first possible tweet.
    pub start_ts: i64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            num_memes: 30,
            tweets_total: 10_000,
            duration: 3600,
            vocab_size: 600,
            users: 5000,
            retweet_prob: 0.2,
            mention_prob: 0.3,
            hashtag_prob: 0.5,
            url_prob: 0.15,
            shared_word_prob: 0.1,
            start_ts: 1_363_464_000,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("retweet_prob", self.retweet_prob),
            ("mention_prob", self.mention_prob),
            ("hashtag_prob", self.hashtag_prob),
            ("url_prob", self.url_prob),
            ("shared_word_prob", self.shared_word_prob),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must lie in [0,1], got {p}")));
            }
        }
        if self.num_memes == 0 || self.tweets_total < self.num_memes {
            return Err(Error::Config("need 1 <= num_memes <= tweets_total".into()));
        }
        if self.duration <= 0 || self.vocab_size == 0 || self.users == 0 {
            return Err(Error::Config("duration, vocab_size and users must be positive".into()));
        }
        if self.start_ts <= 0 {
            return Err(Error::Config("start_ts must be positive".into()));
        }
        Ok(())
    }
}

/// Relative popularity of each meme (mildly skewed, 1/sqrt(rank)).
pub fn meme_weights(num_memes: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..num_memes).map(|i| 1.0 / ((i + 1) as f64).sqrt()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

fn syllable(i: usize) -> &'static str {
    const SYL: [&str; 70] = [
        "ba", "be", "bi", "bo", "bu", "da", "de", "di", "do", "du", "fa", "fe", "fi", "fo", "fu", "ga", "ge", "gi",
        "go", "gu", "ka", "ke", "ki", "ko", "ku", "la", "le", "li", "lo", "lu", "ma", "me", "mi", "mo", "mu", "na",
        "ne", "ni", "no", "nu", "pa", "pe", "pi", "po", "pu", "ra", "re", "ri", "ro", "ru", "sa", "se", "si", "so",
        "su", "ta", "te", "ti", "to", "tu", "va", "ve", "vi", "vo", "vu", "za", "ze", "zi", "zo", "zu",
    ];
    SYL[i % SYL.len()]
}

/// Deterministic pseudo-word for a vocabulary index; ends in a consonant so
/// the Porter stemmer leaves it mostly intact.
fn word(index: usize) -> String {
    let mut w = String::new();
    let mut i = index;
    for _ in 0..3 {
        w.push_str(syllable(i % 70));
        i /= 70;
    }
    w.push('k');
    w
}

struct Meme {
    hashtags: Vec<String>,
    mentions: Vec<(String, String)>,
    urls: Vec<String>,
    topic_words: Vec<usize>,
}

fn build_memes(cfg: &SynthConfig) -> (Vec<Meme>, Vec<usize>) {
    let shared = (cfg.vocab_size / 5).max(1);
    let per_meme = ((cfg.vocab_size - shared.min(cfg.vocab_size)) / cfg.num_memes).max(4);
    let memes = (0..cfg.num_memes)
        .map(|m| Meme {
            hashtags: (0..HASHTAGS_PER_MEME).map(|j| format!("meme{m}tag{j}")).collect(),
            mentions: (0..MENTIONS_PER_MEME)
                .map(|j| (format!("{}", 9_000_000 + m * 100 + j), format!("m{m}_{j}")))
                .collect(),
            urls: (0..URLS_PER_MEME).map(|j| format!("http://ex.am/{m}/{j}")).collect(),
            topic_words: (0..per_meme).map(|j| shared + m * per_meme + j).collect(),
        })
        .collect();
    (memes, (0..shared).collect())
}

fn author_for(rng: &mut ChaCha8Rng, meme: usize, cfg: &SynthConfig) -> String {
    // community of meme m = users m, m + M, m + 2M, ...
    let community = cfg.users.saturating_sub(meme).div_ceil(cfg.num_memes);
    let user = if community > 0 && rng.gen_bool(0.7) {
        meme + cfg.num_memes * rng.gen_range(0..community)
    } else {
        rng.gen_range(0..cfg.users)
    };
    format!("{}", 100_000 + user)
}

/// Generate a time-sorted tweet stream and the meme each tweet came from.
pub fn synth_stream(cfg: &SynthConfig) -> Result<(Vec<Tweet>, GroundTruth)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (memes, shared_words) = build_memes(cfg);
    let picker = WeightedIndex::new(meme_weights(cfg.num_memes)).expect("weights are positive");

    let mut draws: Vec<(i64, usize)> = (0..cfg.tweets_total)
        .map(|_| {
            let meme = picker.sample(&mut rng);
            let ts = cfg.start_ts + rng.gen_range(0..cfg.duration);
            (ts, meme)
        })
        .collect();
    draws.sort_by_key(|&(ts, _)| ts);

    let mut tweets: Vec<Tweet> = Vec::with_capacity(cfg.tweets_total);
    let mut by_meme: Vec<Vec<usize>> = vec![Vec::new(); cfg.num_memes];
    let mut truth = GroundTruth::new();

    for (i, &(ts, m)) in draws.iter().enumerate() {
        let meme = &memes[m];
        let tweet_id = format!("{}", 500_000_000 + i);
        let author_id = author_for(&mut rng, m, cfg);

        let tweet = if !by_meme[m].is_empty() && rng.gen_bool(cfg.retweet_prob) {
            let original = &tweets[by_meme[m][rng.gen_range(0..by_meme[m].len())]];
            let source_id = original.retweet_of.clone().unwrap_or_else(|| original.tweet_id.clone());
            Tweet {
                tweet_id: tweet_id.clone(),
                author_id,
                created_at: ts,
                text: original.text.clone(),
                hashtags: original.hashtags.clone(),
                mention_ids: original.mention_ids.clone(),
                urls: original.urls.clone(),
                retweet_of: Some(source_id),
            }
        } else {
            let mut parts: Vec<String> = Vec::new();
            let mut hashtags = Vec::new();
            let mut mention_ids = Vec::new();
            let mut urls = Vec::new();
            if rng.gen_bool(cfg.mention_prob) {
                let (id, screen) = &meme.mentions[rng.gen_range(0..meme.mentions.len())];
                parts.push(format!("@{screen}"));
                mention_ids.push(id.clone());
            }
            let n_words = rng.gen_range(3..=6);
            for _ in 0..n_words {
                let w = if !rng.gen_bool(cfg.shared_word_prob) {
                    meme.topic_words[rng.gen_range(0..meme.topic_words.len())]
                } else {
                    shared_words[rng.gen_range(0..shared_words.len())]
                };
                parts.push(word(w));
                if rng.gen_bool(0.25) {
                    parts.push(FILLER[rng.gen_range(0..FILLER.len())].to_string());
                }
            }
            if rng.gen_bool(cfg.hashtag_prob) {
                let tag = &meme.hashtags[rng.gen_range(0..meme.hashtags.len())];
                parts.push(format!("#{tag}"));
                hashtags.push(tag.clone());
            }
            if rng.gen_bool(cfg.url_prob) {
                let url = &meme.urls[rng.gen_range(0..meme.urls.len())];
                parts.push(url.clone());
                urls.push(url.clone());
            }
            Tweet {
                tweet_id: tweet_id.clone(),
                author_id,
                created_at: ts,
                text: parts.join(" "),
                hashtags,
                mention_ids,
                urls,
                retweet_of: None,
            }
        };
        by_meme[m].push(tweets.len());
        truth.entry(format!("meme{m}")).or_default().insert(tweet_id);
        tweets.push(tweet);
    }
    Ok((tweets, truth))
}

/// Write a ground-truth cover as `{"cluster_id", "tweet_ids"}` lines.
pub fn write_ground_truth<W: Write>(truth: &GroundTruth, mut out: W) -> Result<()> {
    for (id, tweets) in truth {
        let line = serde_json::json!({ "cluster_id": id, "tweet_ids": tweets });
        writeln!(out, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            num_memes: 5,
            tweets_total: 400,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let a = synth_stream(&small()).unwrap();
        let b = synth_stream(&small()).unwrap();
        assert_eq!(a, b);
        let c = synth_stream(&SynthConfig { seed: 7, ..small() }).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn single_meme_is_one_cluster() {
        let (tweets, truth) = synth_stream(&SynthConfig {
            num_memes: 1,
            tweets_total: 50,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(truth.len(), 1);
        assert_eq!(truth.values().next().unwrap().len(), tweets.len());
    }

    #[test]
    fn sorted_unique_and_in_range() {
        let cfg = small();
        let (tweets, truth) = synth_stream(&cfg).unwrap();
        assert!(tweets.windows(2).all(|w| w[0].created_at <= w[1].created_at));
        let ids: BTreeSet<_> = tweets.iter().map(|t| &t.tweet_id).collect();
        assert_eq!(ids.len(), tweets.len());
        assert!(tweets
            .iter()
            .all(|t| t.created_at >= cfg.start_ts && t.created_at < cfg.start_ts + cfg.duration));
        let covered: usize = truth.values().map(|s| s.len()).sum();
        assert_eq!(covered, tweets.len());
    }

    #[test]
    fn rejects_bad_config() {
        assert!(SynthConfig { retweet_prob: 1.5, ..small() }.validate().is_err());
        assert!(SynthConfig { tweets_total: 2, ..small() }.validate().is_err());
    }
}
