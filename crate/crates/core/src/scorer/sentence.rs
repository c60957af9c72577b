//! Sentence-pair packing.
//!
//! `sentence_a = keyword ⟂ description` and `sentence_b = relation ⟂ value`,
//! where the separator is `" ⟂ "` and any `\` or `⟂` inside a field is
//! backslash-escaped, so the four fields can always be recovered.

use serde::{Deserialize, Serialize};

use super::{RelationQuery, ScorerError};

pub const SEPARATOR: char = '⟂';
/// Per-sentence cap, in characters, on the assembled (escaped) sentence.
pub const MAX_SENTENCE_CHARS: usize = 512;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SentencePair {
    pub sentence_a: String,
    pub sentence_b: String,
}

fn escaped_len(c: char) -> usize {
    if c == '\\' || c == SEPARATOR {
        2
    } else {
        1
    }
}

fn escape_into(out: &mut String, s: &str) {
    for c in s.chars() {
        if c == '\\' || c == SEPARATOR {
            out.push('\\');
        }
        out.push(c);
    }
}

/// Joins two fields, cutting the tail of `second` (then of `first`) until the
/// sentence fits in [`MAX_SENTENCE_CHARS`].
fn join_capped(first: &str, second: &str) -> String {
    const SEP_LEN: usize = 3;
    let first_len: usize = first.chars().map(escaped_len).sum();
    let budget = MAX_SENTENCE_CHARS.saturating_sub(SEP_LEN);

    let (first_keep, second_budget) = if first_len <= budget {
        (first.chars().count(), budget - first_len)
    } else {
        let mut used = 0;
        let mut keep = 0;
        for c in first.chars() {
            if used + escaped_len(c) > budget {
                break;
            }
            used += escaped_len(c);
            keep += 1;
        }
        (keep, 0)
    };
    let mut used = 0;
    let mut second_keep = 0;
    for c in second.chars() {
        if used + escaped_len(c) > second_budget {
            break;
        }
        used += escaped_len(c);
        second_keep += 1;
    }

    let mut out = String::new();
    escape_into(&mut out, &first.chars().take(first_keep).collect::<String>());
    out.push(' ');
    out.push(SEPARATOR);
    out.push(' ');
    escape_into(&mut out, &second.chars().take(second_keep).collect::<String>());
    out
}

/// Splits an assembled sentence back into its two fields.
pub(crate) fn split_sentence(s: &str) -> Result<(String, String), ScorerError> {
    let mut first = String::new();
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => match chars.next() {
                Some(n) => first.push(n),
                None => return Err(ScorerError::MalformedPair("dangling escape".into())),
            },
            SEPARATOR => {
                if !first.ends_with(' ') {
                    return Err(ScorerError::MalformedPair("separator without space".into()));
                }
                first.pop();
                let rest: String = chars.collect();
                let rest = rest
                    .strip_prefix(' ')
                    .ok_or_else(|| ScorerError::MalformedPair("separator without space".into()))?;
                let mut second = String::new();
                let mut it = rest.chars();
                while let Some(c) = it.next() {
                    if c == '\\' {
                        match it.next() {
                            Some(n) => second.push(n),
                            None => return Err(ScorerError::MalformedPair("dangling escape".into())),
                        }
                    } else if c == SEPARATOR {
                        return Err(ScorerError::MalformedPair("unescaped separator".into()));
                    } else {
                        second.push(c);
                    }
                }
                return Ok((first, second));
            }
            c => first.push(c),
        }
    }
    Err(ScorerError::MalformedPair("missing separator".into()))
}

pub fn make_sentence_pair(
    q: &RelationQuery,
    k_text: &str,
    v_text: &str,
) -> Result<SentencePair, ScorerError> {
    if k_text.is_empty() {
        return Err(ScorerError::EmptyRelationText);
    }
    Ok(SentencePair {
        sentence_a: join_capped(&q.keyword, &q.description),
        sentence_b: join_capped(k_text, v_text),
    })
}

impl SentencePair {
    /// `(keyword, description, relation text, value text)`.
    pub fn fields(&self) -> Result<(String, String, String, String), ScorerError> {
        let (k, d) = split_sentence(&self.sentence_a)?;
        let (r, v) = split_sentence(&self.sentence_b)?;
        Ok((k, d, r, v))
    }
}
