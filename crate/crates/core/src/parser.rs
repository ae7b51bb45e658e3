//! Decomposition of raw model generations.
//!
//! A generation is split on its first two `<SEP>` markers into NER mentions,
//! entity translations and the tagged translation. Anything that does not fit
//! the grammar is still parsed and flagged through [`Structure`], so scoring
//! degrades instead of failing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::builder::{ENTITY_CLOSE, ENTITY_OPEN, SEP};
use crate::text::normalize_whitespace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    WellFormed,
    MissingSeparator,
    RaggedParts,
    UnbalancedTags,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedGeneration {
    pub ner_mentions: Vec<String>,
    pub entity_translations: Vec<String>,
    pub tagged_translation: String,
    pub clean_translation: String,
    pub predicted_entities: Vec<(String, String)>,
    pub structure: Structure,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("malformed generation: {0:?}")]
    MalformedGeneration(Structure),
}

/// Lenient parse; never fails.
pub fn parse_generation(text: &str) -> ParsedGeneration {
    let (first, rest) = match text.split_once(SEP) {
        Some((p1, rest)) => (Some(p1), rest),
        None => (None, text),
    };
    let split = first.and_then(|p1| rest.split_once(SEP).map(|(p2, p3)| (p1, p2, p3)));

    let (ner_mentions, entity_translations, tagged) = match split {
        Some((p1, p2, p3)) => (split_mentions(p1), split_mentions(p2), p3),
        None => (Vec::new(), Vec::new(), text),
    };

    let structure = if split.is_none() {
        Structure::MissingSeparator
    } else if ner_mentions.len() != entity_translations.len() {
        Structure::RaggedParts
    } else if !tags_balanced(tagged) {
        Structure::UnbalancedTags
    } else {
        Structure::WellFormed
    };

    let predicted_entities = if ner_mentions.len() == entity_translations.len() {
        ner_mentions
            .iter()
            .cloned()
            .zip(entity_translations.iter().cloned())
            .collect()
    } else {
        Vec::new()
    };

    ParsedGeneration {
        clean_translation: clean_translation(tagged),
        tagged_translation: normalize_whitespace(tagged),
        ner_mentions,
        entity_translations,
        predicted_entities,
        structure,
    }
}

/// Strict parse: anything but [`Structure::WellFormed`] is an error.
pub fn parse_generation_strict(text: &str) -> Result<ParsedGeneration, ParseError> {
    let parsed = parse_generation(text);
    match parsed.structure {
        Structure::WellFormed => Ok(parsed),
        other => Err(ParseError::MalformedGeneration(other)),
    }
}

fn split_mentions(part: &str) -> Vec<String> {
    let part = normalize_whitespace(part);
    if part.is_empty() {
        return Vec::new();
    }
    part.split('|').map(normalize_whitespace).collect()
}

fn tags_balanced(text: &str) -> bool {
    let mut open = false;
    let mut rest = text;
    loop {
        let next_open = rest.find(ENTITY_OPEN);
        let next_close = rest.find(ENTITY_CLOSE);
        let (at, is_open) = match (next_open, next_close) {
            (None, None) => return !open,
            (Some(o), Some(c)) if o < c => (o, true),
            (Some(o), None) => (o, true),
            (_, Some(c)) => (c, false),
        };
        if open == is_open {
            return false;
        }
        open = is_open;
        let len = if is_open {
            ENTITY_OPEN.len()
        } else {
            ENTITY_CLOSE.len()
        };
        rest = &rest[at + len..];
    }
}

/// Final translation: separators and tags removed, whitespace canonical.
fn clean_translation(part: &str) -> String {
    let mut text = part.replace(SEP, " ");
    // removing one literal can splice a new one together; repeat until none remain
    loop {
        text = strip_entity_tags(&text).0;
        if ![SEP, ENTITY_OPEN, ENTITY_CLOSE]
            .iter()
            .any(|m| text.contains(m))
        {
            return text;
        }
        text = text.replace(SEP, " ");
    }
}

/// Removes `<entity>` / `</entity>` markers and canonicalizes whitespace.
///
/// The single space padding inside a tag (`<entity> X </entity>`) is removed
/// together with the marker. Returns the cleaned text and the byte spans of the
/// formerly tagged mentions in it. Unbalanced markers are dropped as well;
/// their spans are best effort.
pub fn strip_entity_tags(text: &str) -> (String, Vec<(usize, usize)>) {
    let (mut cleaned, mut spans) = strip_once(text);
    while cleaned.contains(ENTITY_OPEN) || cleaned.contains(ENTITY_CLOSE) {
        (cleaned, spans) = strip_once(&cleaned);
    }
    (cleaned, spans)
}

#[derive(Clone, Copy)]
enum Marker {
    Open(usize),
    Close(usize),
}

fn strip_once(text: &str) -> (String, Vec<(usize, usize)>) {
    let mut raw = String::with_capacity(text.len());
    let mut markers = Vec::new();
    let mut i = 0;
    while i < text.len() {
        let rest = &text[i..];
        if rest.starts_with(ENTITY_OPEN) {
            markers.push(Marker::Open(raw.len()));
            i += ENTITY_OPEN.len();
            if let Some(c) = text[i..].chars().next().filter(|c| c.is_whitespace()) {
                i += c.len_utf8();
            }
        } else if rest.starts_with(ENTITY_CLOSE) {
            if let Some(c) = raw.chars().next_back().filter(|c| c.is_whitespace()) {
                raw.truncate(raw.len() - c.len_utf8());
            }
            markers.push(Marker::Close(raw.len()));
            i += ENTITY_CLOSE.len();
        } else {
            let c = rest.chars().next().expect("non-empty remainder");
            raw.push(c);
            i += c.len_utf8();
        }
    }

    // start_at[p]: cleaned offset of the first kept char at raw offset >= p
    // end_at[p]: cleaned offset just past the last kept char at raw offset < p
    let n = raw.len();
    let mut cleaned = String::with_capacity(n);
    let mut start_at = vec![usize::MAX; n + 1];
    let mut end_at = vec![0; n + 1];
    let mut pending_space = false;
    for (p, c) in raw.char_indices() {
        end_at[p] = cleaned.len();
        if c.is_whitespace() {
            pending_space = true;
            continue;
        }
        if pending_space && !cleaned.is_empty() {
            cleaned.push(' ');
        }
        pending_space = false;
        start_at[p] = cleaned.len();
        cleaned.push(c);
    }
    end_at[n] = cleaned.len();
    start_at[n] = cleaned.len();
    for p in (0..n).rev() {
        if start_at[p] == usize::MAX {
            start_at[p] = start_at[p + 1];
        }
    }
    // non-boundary and whitespace positions inherit from the left
    for p in 1..=n {
        if !raw.is_char_boundary(p) {
            end_at[p] = end_at[p - 1];
        }
    }

    let mut spans = Vec::new();
    let mut stack = Vec::new();
    for marker in markers {
        match marker {
            Marker::Open(p) => stack.push(p.min(n)),
            Marker::Close(p) => {
                if let Some(o) = stack.pop() {
                    let (start, end) = (start_at[o], end_at[p.min(n)]);
                    if start < end {
                        spans.push((start, end));
                    }
                }
            }
        }
    }
    spans.sort_unstable();
    (cleaned, spans)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EXAMPLE: &str = "Europe | Allied Forces <SEP> Europa | alliierten Streitkräfte <SEP> Wer war der \
        Oberbefehlshaber der <entity> alliierten Streitkräfte </entity> in <entity> Europa </entity>?";

    /// Character scan that deletes every tag literal with one inner padding
    /// space, then collapses whitespace. Written independently of `strip_once`.
    fn oracle_strip(text: &str) -> String {
        let chars: Vec<char> = text.chars().collect();
        let open: Vec<char> = ENTITY_OPEN.chars().collect();
        let close: Vec<char> = ENTITY_CLOSE.chars().collect();
        let mut out: Vec<char> = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            if chars[i..].starts_with(&open) {
                i += open.len();
                if i < chars.len() && chars[i].is_whitespace() {
                    i += 1;
                }
            } else if chars[i..].starts_with(&close) {
                if out.last().is_some_and(|c| c.is_whitespace()) {
                    out.pop();
                }
                i += close.len();
            } else {
                out.push(chars[i]);
                i += 1;
            }
        }
        let s: String = out.into_iter().collect();
        s.split_whitespace().collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn parses_reference_example() {
        let p = parse_generation(EXAMPLE);
        assert_eq!(p.structure, Structure::WellFormed);
        assert_eq!(p.ner_mentions, ["Europe", "Allied Forces"]);
        assert_eq!(p.entity_translations, ["Europa", "alliierten Streitkräfte"]);
        assert_eq!(
            p.clean_translation,
            "Wer war der Oberbefehlshaber der alliierten Streitkräfte in Europa?"
        );
        assert_eq!(p.predicted_entities.len(), 2);
        assert_eq!(
            p.predicted_entities[0],
            ("Europe".to_string(), "Europa".to_string())
        );
        assert!(p.tagged_translation.contains("<entity> Europa </entity>?"));
    }

    #[test]
    fn plain_text_is_missing_separator() {
        let p = parse_generation("Bonjour le monde.");
        assert_eq!(p.structure, Structure::MissingSeparator);
        assert_eq!(p.clean_translation, "Bonjour le monde.");
        assert!(p.ner_mentions.is_empty() && p.entity_translations.is_empty());
        let p = parse_generation("A <SEP> only one");
        assert_eq!(p.structure, Structure::MissingSeparator);
        assert_eq!(p.clean_translation, "A only one");
    }

    #[test]
    fn ragged_parts_drop_pairs() {
        let p = parse_generation("A | B <SEP> X <SEP> ok");
        assert_eq!(p.structure, Structure::RaggedParts);
        assert!(p.predicted_entities.is_empty());
        assert_eq!(p.clean_translation, "ok");
    }

    #[test]
    fn extra_separators_stay_in_translation_part() {
        let p = parse_generation("a <SEP> b <SEP> eins <SEP> zwei");
        assert_eq!(p.structure, Structure::WellFormed);
        assert_eq!(p.clean_translation, "eins zwei");
    }

    #[test]
    fn unbalanced_tags_are_flagged() {
        let p = parse_generation("a <SEP> b <SEP> <entity> a <entity> b </entity>");
        assert_eq!(p.structure, Structure::UnbalancedTags);
        assert_eq!(p.clean_translation, "a b");
        let p = parse_generation("a <SEP> b <SEP> x </entity> y");
        assert_eq!(p.structure, Structure::UnbalancedTags);
    }

    #[test]
    fn strips_reference_substring() {
        let (clean, spans) = strip_entity_tags("der <entity> alliierten Streitkräfte </entity> in");
        assert_eq!(clean, "der alliierten Streitkräfte in");
        assert_eq!(spans.len(), 1);
        assert_eq!(&clean[spans[0].0..spans[0].1], "alliierten Streitkräfte");
    }

    #[test]
    fn untagged_text_is_only_collapsed() {
        let (clean, spans) = strip_entity_tags("  kein   Tag  hier ");
        assert_eq!(clean, "kein Tag hier");
        assert!(spans.is_empty());
    }

    #[test]
    fn unbalanced_strip_matches_oracle() {
        let input = "<entity> a <entity> b </entity>";
        let (clean, spans) = strip_entity_tags(input);
        assert_eq!(clean, "a b");
        assert_eq!(clean, oracle_strip(input));
        assert_eq!(spans, vec![(2, 3)]);
    }

    #[test]
    fn spliced_markers_are_removed_too() {
        let p = parse_generation("<ent<entity>ity> x <SE<SEP>P>");
        for m in [SEP, ENTITY_OPEN, ENTITY_CLOSE] {
            assert!(!p.clean_translation.contains(m));
        }
    }

    #[test]
    fn strict_mode_rejects_drift() {
        assert!(parse_generation_strict(EXAMPLE).is_ok());
        assert_eq!(
            parse_generation_strict("x"),
            Err(ParseError::MalformedGeneration(Structure::MissingSeparator))
        );
    }

    fn tagged_text() -> impl Strategy<Value = String> {
        proptest::collection::vec(
            prop_oneof![
                Just("<entity>".to_string()),
                Just("</entity>".to_string()),
                Just("<SEP>".to_string()),
                Just(" ".to_string()),
                Just("|".to_string()),
                "[a-zäß?]{1,4}",
            ],
            0..20,
        )
        .prop_map(|parts| parts.concat())
    }

    proptest! {
        #[test]
        fn never_panics(s in "\\PC*") {
            let p = parse_generation(&s);
            for m in [SEP, ENTITY_OPEN, ENTITY_CLOSE] {
                prop_assert!(!p.clean_translation.contains(m));
            }
        }

        #[test]
        fn strip_is_idempotent(s in tagged_text()) {
            let (once, _) = strip_entity_tags(&s);
            let (twice, spans) = strip_entity_tags(&once);
            prop_assert_eq!(&twice, &once);
            prop_assert!(spans.is_empty());
        }

        #[test]
        fn strip_agrees_with_char_scan(s in tagged_text()) {
            // single-pass inputs only: the oracle does not iterate
            let once = oracle_strip(&s);
            prop_assume!(!once.contains(ENTITY_OPEN) && !once.contains(ENTITY_CLOSE));
            prop_assert_eq!(strip_entity_tags(&s).0, once);
        }

        #[test]
        fn well_formed_implies_parallel_lists(s in tagged_text()) {
            let p = parse_generation(&s);
            if p.structure == Structure::WellFormed {
                prop_assert_eq!(p.ner_mentions.len(), p.entity_translations.len());
            }
        }
    }
}
