//! One protomeme per marker, with its four vectors.

use memestream::ingest::{TimeStepBatch, Tweet};
use memestream::protomeme::ProtomemeGenerator;
use memestream::textproc::TextOptions;

fn tweet(id: &str, author: &str, text: &str, tags: &[&str], rt: Option<&str>) -> Tweet {
    Tweet {
        tweet_id: id.into(),
        author_id: author.into(),
        created_at: 100,
        text: text.into(),
        hashtags: tags.iter().map(|s| s.to_string()).collect(),
        mention_ids: vec![],
        urls: vec![],
        retweet_of: rt.map(Into::into),
    }
}

fn main() {
    let batch = TimeStepBatch {
        step_index: 0,
        step_start: 90,
        tweets: vec![
            tweet("1", "ann", "rams upset the favourites #havoc", &["havoc"], None),
            tweet("2", "bob", "what a game #havoc #ncaa", &["havoc", "ncaa"], None),
            tweet("3", "cat", "RT what a game", &[], Some("2")),
        ],
    };
    let mut generator = ProtomemeGenerator::new(6, TextOptions::default());
    for p in generator.generate(&batch) {
        println!("{}", p.marker);
        for (name, v) in ["tweets", "users", "content", "diffusion"].iter().zip(p.vectors()) {
            let entries: Vec<String> = v.sorted().iter().map(|(k, x)| format!("{k}={x}")).collect();
            println!("  {name:<9} {}", entries.join(" "));
        }
    }
    println!("tweets without any marker: {}", generator.unmarked_tweets());
}
