//! Small string helpers shared by the builder, parser and metrics.

/// Collapses every run of whitespace to a single ASCII space and trims both ends.
pub fn normalize_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Whitespace tokens together with their byte ranges in `text`.
pub fn whitespace_tokens(text: &str) -> Vec<(usize, usize)> {
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                tokens.push((s, i));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        tokens.push((s, text.len()));
    }
    tokens
}

/// Byte offsets of every (possibly overlapping) occurrence of `needle`.
pub fn occurrences<'a>(haystack: &'a str, needle: &'a str) -> impl Iterator<Item = usize> + 'a {
    let mut from = 0;
    std::iter::from_fn(move || {
        if needle.is_empty() || from > haystack.len() {
            return None;
        }
        let pos = from + haystack[from..].find(needle)?;
        // advance by one char so overlapping matches are still visited
        let step = haystack[pos..].chars().next().map_or(1, char::len_utf8);
        from = pos + step;
        Some(pos)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collapses_and_trims() {
        assert_eq!(normalize_whitespace("  a \t b\n\nc  "), "a b c");
        assert_eq!(normalize_whitespace(""), "");
        assert_eq!(normalize_whitespace(" \n "), "");
    }

    #[test]
    fn token_offsets() {
        let text = "Wer  war\tEuropa?";
        let toks = whitespace_tokens(text);
        let words: Vec<&str> = toks.iter().map(|&(s, e)| &text[s..e]).collect();
        assert_eq!(words, ["Wer", "war", "Europa?"]);
    }

    #[test]
    fn overlapping_occurrences() {
        assert_eq!(occurrences("aaa", "aa").collect::<Vec<_>>(), [0, 1]);
        assert_eq!(occurrences("äbäb", "äb").collect::<Vec<_>>(), [0, 3]);
        assert_eq!(occurrences("abc", "").count(), 0);
    }
}
