//! Tokenization, stopping, stemming and marker extraction.

mod porter;
mod stopwords;

pub use porter::stem;
pub use stopwords::{is_stopword, STOPWORDS};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::ingest::Tweet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Word,
    Hashtag,
    Mention,
    Url,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub kind: TokenKind,
    /// Lowercased, with the `#`/`@` prefix removed.
    pub text: String,
}

impl Token {
    fn new(kind: TokenKind, text: impl Into<String>) -> Self {
        Self { kind, text: text.into() }
    }
}

fn is_edge_punct(c: char) -> bool {
    !c.is_alphanumeric()
}

/// Characters stripped from the end of a url token. Slashes are part of the
/// url and stay.
fn is_url_trailer(c: char) -> bool {
    matches!(c, '.' | ',' | ';' | ':' | '!' | '?' | ')' | ']' | '}' | '"' | '\'' | '…' | '>')
}

fn classify(raw: &str) -> Option<Token> {
    let lower = raw.to_lowercase();
    let head = lower.trim_start_matches(|c: char| is_edge_punct(c) && c != '#' && c != '@');

    if head.starts_with("http://") || head.starts_with("https://") {
        let url = head.trim_end_matches(is_url_trailer);
        return Some(Token::new(TokenKind::Url, url));
    }
    let (kind, body) = if let Some(rest) = head.strip_prefix('#') {
        (TokenKind::Hashtag, rest.trim_start_matches('#'))
    } else if let Some(rest) = head.strip_prefix('@') {
        (TokenKind::Mention, rest.trim_start_matches('@'))
    } else {
        (TokenKind::Word, head)
    };
    let body = body.trim_matches(is_edge_punct);
    if body.is_empty() {
        None
    } else {
        Some(Token::new(kind, body))
    }
}

/// Split on Unicode whitespace, strip edge punctuation (keeping `#`/`@`
/// prefixes), lowercase and classify.
pub fn tokenize(text: &str) -> Vec<Token> {
    text.split_whitespace().filter_map(classify).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TextOptions {
    /// Sort content tokens before joining them into the phrase marker.
    pub phrase_sorted: bool,
}

/// The marker-bearing entities of one tweet.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EntitySet {
    pub hashtags: BTreeSet<String>,
    pub mention_ids: BTreeSet<String>,
    pub urls: BTreeSet<String>,
    pub phrase: Option<String>,
    /// Stemmed non-stopword word tokens, in text order, with repeats.
    pub content_tokens: Vec<String>,
}

pub fn extract_entities(tweet: &Tweet) -> EntitySet {
    extract_entities_with(tweet, TextOptions::default())
}

pub fn extract_entities_with(tweet: &Tweet, opts: TextOptions) -> EntitySet {
    let mut out = EntitySet {
        hashtags: tweet
            .hashtags
            .iter()
            .map(|h| h.trim_start_matches('#').to_lowercase())
            .filter(|h| !h.is_empty())
            .collect(),
        mention_ids: tweet.mention_ids.iter().filter(|m| !m.is_empty()).cloned().collect(),
        urls: tweet.urls.iter().map(|u| u.to_lowercase()).collect(),
        ..Default::default()
    };
    for token in tokenize(&tweet.text) {
        match token.kind {
            TokenKind::Hashtag => {
                out.hashtags.insert(token.text);
            }
            TokenKind::Url => {
                out.urls.insert(token.text);
            }
            TokenKind::Mention => {}
            TokenKind::Word => {
                if !is_stopword(&token.text) {
                    out.content_tokens.push(stem(&token.text));
                }
            }
        }
    }
    if !out.content_tokens.is_empty() {
        let phrase = if opts.phrase_sorted {
            let mut sorted = out.content_tokens.clone();
            sorted.sort();
            sorted.join(" ")
        } else {
            out.content_tokens.join(" ")
        };
        out.phrase = Some(phrase);
    }
    out
}
