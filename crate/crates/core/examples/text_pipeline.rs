use memestream::ingest::Tweet;
use memestream::textproc::{extract_entities, is_stopword, stem, tokenize};

fn main() {
    let text = "Loving the #MarchMadness upsets!! @espn says the Rams are running http://espn.com/vcu.";
    for tok in tokenize(text) {
        println!("{:?} {}", tok.kind, tok.text);
    }
    for w in ["running", "upsets", "generalization", "the", "rams"] {
        println!("{w:>15} -> {:<10} stopword={}", stem(w), is_stopword(w));
    }

    let tweet = Tweet {
        tweet_id: "1".into(),
        author_id: "42".into(),
        created_at: 0,
        text: text.into(),
        hashtags: vec!["MarchMadness".into()],
        mention_ids: vec!["2557521".into()],
        urls: vec!["http://espn.com/vcu".into()],
        retweet_of: None,
    };
    let e = extract_entities(&tweet);
    println!("hashtags {:?}\nmentions {:?}\nurls {:?}", e.hashtags, e.mention_ids, e.urls);
    println!("phrase {:?}\ncontent {:?}", e.phrase, e.content_tokens);
}
