//! Parse Streaming API status objects and cut them into 30-second steps.

use memestream::ingest::{parse_tweet, StepBucketer};

const LINES: &[&str] = &[
    r#"{"id_str":"1","text":"Lovin @SpikeLee supporting the VCU Rams!! #HAVOC","created_at":"Sat Mar 16 20:40:13 +0000 2013","user":{"id_str":"241622902"},"entities":{"hashtags":[{"text":"HAVOC"}],"user_mentions":[{"id_str":"254218516"}],"urls":[]}}"#,
    r#"{"id_str":"2","text":"rams win #HAVOC","created_at":"Sat Mar 16 20:40:31 +0000 2013","user":{"id_str":"17"},"entities":{"hashtags":[{"text":"HAVOC"}]}}"#,
    r#"{"id_str":"3","text":"RT rams win #HAVOC","created_at":"Sat Mar 16 20:40:28 +0000 2013","user":{"id_str":"18"},"retweeted_status":{"id_str":"2"}}"#,
    r#"{"id_str":"4","text":"final four http://t.co/x","created_at":"Sat Mar 16 20:41:20 +0000 2013","user":{"id_str":"19"},"entities":{"urls":[{"url":"http://t.co/x","expanded_url":"http://espn.com/vcu"}]}}"#,
];

fn main() -> memestream::Result<()> {
    let tweets = LINES
        .iter()
        .enumerate()
        .map(|(i, l)| parse_tweet(l, i + 1))
        .collect::<memestream::Result<Vec<_>>>()?;
    let start = tweets[0].created_at - tweets[0].created_at % 30;
    let mut bucketer = StepBucketer::new(30, start)?;
    let mut steps = Vec::new();
    for t in tweets {
        steps.extend(bucketer.push(t));
    }
    steps.extend(bucketer.finish());
    for s in &steps {
        let ids: Vec<&str> = s.tweets.iter().map(|t| t.tweet_id.as_str()).collect();
        println!("step {} starting {}: {:?}", s.step_index, s.step_start, ids);
    }
    println!("late tweets clamped {}, dropped {}", bucketer.late_clamped(), bucketer.late_dropped());
    Ok(())
}
