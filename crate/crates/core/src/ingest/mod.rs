//! Tweet ingestion: Twitter-schema JSON lines, time-step bucketing, and a
//! synthetic planted-meme stream generator.

mod synth;

pub use synth::{meme_weights, synth_stream, write_ground_truth, GroundTruth, SynthConfig};

use std::io::BufRead;

use chrono::DateTime;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Twitter's `created_at` layout, e.g. `Sat Mar 16 20:40:13 +0000 2013`.
const TWITTER_TIME_FORMAT: &str = "%a %b %d %H:%M:%S %z %Y";

/// Default tolerance for out-of-order tweets, in seconds.
pub const DEFAULT_SLACK_SECS: i64 = 5;

/// The subset of a Twitter status object the pipeline uses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tweet {
    pub tweet_id: String,
    pub author_id: String,
    /// Epoch seconds, UTC.
    pub created_at: i64,
    pub text: String,
    pub hashtags: Vec<String>,
    pub mention_ids: Vec<String>,
    pub urls: Vec<String>,
    pub retweet_of: Option<String>,
}

/// All tweets whose timestamp falls in `[step_start, step_start + step_len)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeStepBatch {
    pub step_index: u64,
    pub step_start: i64,
    pub tweets: Vec<Tweet>,
}

fn lookup<'a>(obj: &'a Value, path: &[&str]) -> Option<&'a Value> {
    path.iter().try_fold(obj, |v, key| v.get(key))
}

/// Look a field up at the top level first, then under `entities`. The
/// example object of the Streaming API documentation nests `user` and
/// `retweeted_status` inside `entities`, so both placements are accepted.
fn lookup_either<'a>(obj: &'a Value, path: &[&str]) -> Option<&'a Value> {
    lookup(obj, path).or_else(|| {
        let entities = obj.get("entities")?;
        lookup(entities, path)
    })
}

fn required_str(obj: &Value, path: &[&str], line: usize, field: &'static str) -> Result<String> {
    match lookup_either(obj, path) {
        Some(Value::String(s)) if !s.is_empty() => Ok(s.clone()),
        _ => Err(Error::Schema { line, field }),
    }
}

fn parse_created_at(value: Option<&Value>, line: usize) -> Result<i64> {
    let err = || Error::Schema {
        line,
        field: "created_at",
    };
    let secs = match value {
        Some(Value::Number(n)) => n.as_i64().ok_or_else(err)?,
        Some(Value::String(s)) => match s.trim().parse::<i64>() {
            Ok(v) => v,
            Err(_) => DateTime::parse_from_str(s.trim(), TWITTER_TIME_FORMAT)
                .map_err(|_| err())?
                .timestamp(),
        },
        _ => return Err(err()),
    };
    if secs <= 0 {
        return Err(err());
    }
    Ok(secs)
}

fn entity_strings(obj: &Value, list: &str, keys: &[&str]) -> Vec<String> {
    let Some(Value::Array(items)) = lookup(obj, &["entities", list]) else {
        return Vec::new();
    };
    items
        .iter()
        .filter_map(|item| {
            keys.iter().find_map(|k| match item.get(*k) {
                Some(Value::String(s)) if !s.is_empty() => Some(s.clone()),
                _ => None,
            })
        })
        .collect()
}

/// Parse one JSON line of a Twitter-schema stream. `line_no` is used in
/// error messages only.
pub fn parse_tweet(line: &str, line_no: usize) -> Result<Tweet> {
    let obj: Value = serde_json::from_str(line).map_err(|e| Error::Parse {
        line: line_no,
        message: e.to_string(),
    })?;
    if !obj.is_object() {
        return Err(Error::Parse {
            line: line_no,
            message: "expected a JSON object".into(),
        });
    }

    let tweet_id = required_str(&obj, &["id_str"], line_no, "id_str")?;
    let text = match obj.get("text") {
        Some(Value::String(s)) => s.clone(),
        _ => {
            return Err(Error::Schema {
                line: line_no,
                field: "text",
            })
        }
    };
    let created_at = parse_created_at(obj.get("created_at"), line_no)?;
    let author_id = required_str(&obj, &["user", "id_str"], line_no, "user.id_str")?;

    let hashtags = entity_strings(&obj, "hashtags", &["text"]);
    let mention_ids = entity_strings(&obj, "user_mentions", &["id_str"]);
    let urls = entity_strings(&obj, "urls", &["expanded_url", "url"]);
    let retweet_of = match lookup_either(&obj, &["retweeted_status", "id_str"]) {
        Some(Value::String(s)) if !s.is_empty() => Some(s.clone()),
        _ => None,
    };

    Ok(Tweet {
        tweet_id,
        author_id,
        created_at,
        text,
        hashtags,
        mention_ids,
        urls,
        retweet_of,
    })
}

/// Encode a tweet back into the Twitter schema (integer `created_at`).
pub fn serialize_tweet(tweet: &Tweet) -> String {
    let retweeted = match &tweet.retweet_of {
        Some(id) => json!({ "id_str": id }),
        None => Value::Null,
    };
    let value = json!({
        "id_str": tweet.tweet_id,
        "text": tweet.text,
        "created_at": tweet.created_at,
        "user": { "id_str": tweet.author_id },
        "entities": {
            "hashtags": tweet.hashtags.iter().map(|h| json!({ "text": h })).collect::<Vec<_>>(),
            "user_mentions": tweet.mention_ids.iter().map(|m| json!({ "id_str": m })).collect::<Vec<_>>(),
            "urls": tweet.urls.iter().map(|u| json!({ "url": u, "expanded_url": u })).collect::<Vec<_>>(),
        },
        "retweeted_status": retweeted,
    });
    value.to_string()
}

/// Read every non-blank line of a JSONL reader as a tweet.
pub fn read_tweets<R: BufRead>(reader: R) -> Result<Vec<Tweet>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_tweet(&line, i + 1)?);
    }
    Ok(out)
}

/// Buckets a time-ordered tweet sequence into consecutive time steps.
///
/// A tweet at or past the end of the open step flushes it, together with any
/// empty steps in between. A tweet that precedes the open step start by more
/// than `slack` seconds is dropped; one within the slack is placed in the
/// open step with its timestamp clamped to the step start.
#[derive(Debug)]
pub struct StepBucketer {
    step_len: i64,
    window_start: i64,
    slack: i64,
    open_index: u64,
    open: Vec<Tweet>,
    seen_any: bool,
    late_dropped: u64,
    late_clamped: u64,
}

impl StepBucketer {
    pub fn new(step_len: i64, window_start: i64) -> Result<Self> {
        Self::with_slack(step_len, window_start, DEFAULT_SLACK_SECS)
    }

    pub fn with_slack(step_len: i64, window_start: i64, slack: i64) -> Result<Self> {
        if step_len <= 0 {
            return Err(Error::Config("step length must be positive".into()));
        }
        if slack < 0 {
            return Err(Error::Config("slack must be non-negative".into()));
        }
        Ok(Self {
            step_len,
            window_start,
            slack,
            open_index: 0,
            open: Vec::new(),
            seen_any: false,
            late_dropped: 0,
            late_clamped: 0,
        })
    }

    fn step_start(&self, index: u64) -> i64 {
        self.window_start + index as i64 * self.step_len
    }

    fn take_open(&mut self) -> TimeStepBatch {
        TimeStepBatch {
            step_index: self.open_index,
            step_start: self.step_start(self.open_index),
            tweets: std::mem::take(&mut self.open),
        }
    }

    /// Feed one tweet; returns the batches it closed, oldest first.
    pub fn push(&mut self, mut tweet: Tweet) -> Vec<TimeStepBatch> {
        let mut closed = Vec::new();
        let open_start = self.step_start(self.open_index);
        if tweet.created_at < open_start {
            if open_start - tweet.created_at > self.slack {
                self.late_dropped += 1;
                return closed;
            }
            tweet.created_at = open_start;
            self.late_clamped += 1;
        }
        self.seen_any = true;
        let target = ((tweet.created_at - self.window_start) / self.step_len) as u64;
        while self.open_index < target {
            closed.push(self.take_open());
            self.open_index += 1;
        }
        self.open.push(tweet);
        closed
    }

    /// Flush the open step. Returns `None` if no tweet was ever accepted.
    pub fn finish(&mut self) -> Option<TimeStepBatch> {
        if !self.seen_any {
            return None;
        }
        self.seen_any = false;
        Some(self.take_open())
    }

    pub fn late_dropped(&self) -> u64 {
        self.late_dropped
    }

    pub fn late_clamped(&self) -> u64 {
        self.late_clamped
    }
}

/// Iterator adapter over [`StepBucketer`].
pub struct StepStream<I> {
    source: I,
    bucketer: StepBucketer,
    ready: std::collections::VecDeque<TimeStepBatch>,
    done: bool,
}

impl<I: Iterator<Item = Tweet>> Iterator for StepStream<I> {
    type Item = TimeStepBatch;

    fn next(&mut self) -> Option<TimeStepBatch> {
        loop {
            if let Some(b) = self.ready.pop_front() {
                return Some(b);
            }
            if self.done {
                return None;
            }
            match self.source.next() {
                Some(t) => self.ready.extend(self.bucketer.push(t)),
                None => {
                    self.done = true;
                    self.ready.extend(self.bucketer.finish());
                }
            }
        }
    }
}

impl<I> StepStream<I> {
    pub fn late_dropped(&self) -> u64 {
        self.bucketer.late_dropped()
    }
}

/// Bucket `source` into time steps of `step_len` seconds starting at
/// `window_start`.
pub fn stream_steps<I>(source: I, step_len: i64, window_start: i64) -> Result<StepStream<I::IntoIter>>
where
    I: IntoIterator<Item = Tweet>,
{
    Ok(StepStream {
        source: source.into_iter(),
        bucketer: StepBucketer::new(step_len, window_start)?,
        ready: Default::default(),
        done: false,
    })
}

/// Convenience: bucket a whole tweet vector, aligning the window to the
/// first tweet's timestamp.
pub fn bucket_all(tweets: Vec<Tweet>, step_len: i64) -> Result<Vec<TimeStepBatch>> {
    let start = tweets.first().map(|t| t.created_at).unwrap_or(0);
    Ok(stream_steps(tweets, step_len, start)?.collect())
}
