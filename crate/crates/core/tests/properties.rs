use std::collections::BTreeMap;

use memestream::cluster::{select_survivors, OnlineStats};
use memestream::ingest::{bucket_all, StepBucketer, Tweet};
use memestream::parallel::route;
use memestream::protomeme::{cosine, Marker, MarkerKind, SparseVector};
use proptest::prelude::*;

fn tweet(i: usize, ts: i64) -> Tweet {
    Tweet {
        tweet_id: i.to_string(),
        author_id: "a".into(),
        created_at: ts,
        text: String::new(),
        hashtags: vec![],
        mention_ids: vec![],
        urls: vec![],
        retweet_of: None,
    }
}

fn sparse() -> impl Strategy<Value = Vec<(u8, u8)>> {
    prop::collection::vec((0u8..40, 1u8..5), 0..25)
}

fn build(pairs: &[(u8, u8)]) -> SparseVector {
    let mut v = SparseVector::new();
    for (k, x) in pairs {
        v.add_entry(format!("w:{k}").into(), *x as f64);
    }
    v
}

proptest! {
    #[test]
    fn sorted_tweets_land_in_exactly_one_matching_step(
        gaps in prop::collection::vec(0i64..50, 1..200),
        step in 1i64..60,
    ) {
        let mut ts = 1_000;
        let tweets: Vec<Tweet> = gaps.iter().enumerate().map(|(i, g)| { ts += g; tweet(i, ts) }).collect();
        let n = tweets.len();
        let steps = bucket_all(tweets.clone(), step).unwrap();
        let mut seen = 0;
        for (i, b) in steps.iter().enumerate() {
            prop_assert_eq!(b.step_index, i as u64);
            prop_assert_eq!(b.step_start, 1_000 + gaps[0] + i as i64 * step);
            for t in &b.tweets {
                prop_assert!(t.created_at >= b.step_start && t.created_at < b.step_start + step);
            }
            seen += b.tweets.len();
        }
        prop_assert_eq!(seen, n);
        prop_assert!(!steps.last().unwrap().tweets.is_empty());
    }

    #[test]
    fn late_tweets_are_clamped_or_dropped(
        offsets in prop::collection::vec(-20i64..40, 1..100),
        slack in 0i64..10,
    ) {
        let mut b = StepBucketer::with_slack(10, 0, slack).unwrap();
        let mut out = Vec::new();
        let mut clock = 0;
        for (i, off) in offsets.iter().enumerate() {
            clock = (clock + off.max(&0) / 4).max(0);
            out.extend(b.push(tweet(i, (clock + off).max(0))));
        }
        out.extend(b.finish());
        let kept: usize = out.iter().map(|s| s.tweets.len()).sum();
        prop_assert_eq!(kept as u64 + b.late_dropped(), offsets.len() as u64);
        for s in &out {
            for t in &s.tweets {
                prop_assert!(t.created_at >= s.step_start && t.created_at < s.step_start + 10);
            }
        }
    }

    #[test]
    fn add_then_subtract_restores_the_vector(a in sparse(), b in sparse()) {
        let (va, vb) = (build(&a), build(&b));
        let mut v = va.clone();
        v.add_assign(&vb);
        prop_assert!((v.norm_sq() - v.norm_sq_exact()).abs() < 1e-9);
        v.sub_assign(&vb).unwrap();
        prop_assert_eq!(&v, &va);
        prop_assert!((v.norm_sq() - va.norm_sq_exact()).abs() < 1e-9);
    }

    #[test]
    fn cosine_is_symmetric_bounded_and_one_on_itself(a in sparse(), b in sparse()) {
        let (va, vb) = (build(&a), build(&b));
        let c = cosine(&va, &vb);
        prop_assert!((0.0..=1.0).contains(&c));
        prop_assert_eq!(c, cosine(&vb, &va));
        if !va.is_empty() {
            prop_assert!((cosine(&va, &va) - 1.0).abs() < 1e-12);
        }
        let mut scaled = va.clone();
        scaled.add_assign(&va);
        prop_assert!((cosine(&scaled, &vb) - c).abs() < 1e-12);
    }

    #[test]
    fn welford_matches_two_pass(xs in prop::collection::vec(0.0f64..1.0, 1..300)) {
        let mut s = OnlineStats::default();
        for x in &xs {
            s.add(*x).unwrap();
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        prop_assert!((s.mean - mean).abs() <= 1e-12 * mean.abs().max(1e-3));
        prop_assert!((s.sigma() - var.sqrt()).abs() <= 1e-9);
    }

    #[test]
    fn survivors_are_the_k_latest(
        existing in prop::collection::vec(prop::option::of(0i64..20), 1..10),
        new in prop::collection::vec(0i64..20, 0..10),
    ) {
        let sel = select_survivors(&existing, &new);
        let mut ts: Vec<Option<i64>> = existing.clone();
        for (slot, i) in &sel.replacements {
            ts[*slot] = Some(new[*i]);
        }
        // Every dropped candidate is no newer than every kept one.
        let kept_min = ts.iter().min().copied().flatten();
        let evicted: BTreeMap<usize, ()> = sel.replacements.iter().map(|(s, _)| (*s, ())).collect();
        for s in evicted.keys() {
            prop_assert!(existing[*s] <= kept_min);
        }
        for i in &sel.discarded {
            prop_assert!(Some(new[*i]) <= kept_min);
        }
        prop_assert_eq!(sel.replacements.len() + sel.discarded.len(), new.len());
    }

    #[test]
    fn routing_is_stable_and_in_range(value in "[a-z#@:/.]{0,20}", workers in 1usize..17) {
        for kind in [MarkerKind::Hashtag, MarkerKind::Mention, MarkerKind::Url, MarkerKind::Phrase] {
            let m = Marker::new(kind, value.clone());
            let w = route(&m, workers);
            prop_assert!(w < workers);
            prop_assert_eq!(w, route(&m.clone(), workers));
            prop_assert_eq!(route(&m, 1), 0);
        }
    }
}
