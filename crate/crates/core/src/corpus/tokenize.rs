//! Whitespace-plus-punctuation tokenization.
//!
//! Every punctuation character becomes its own token; runs of other
//! non-whitespace characters form words. Annotation files must be produced
//! over exactly this tokenization.

fn is_punctuation(c: char) -> bool {
    if c.is_ascii() {
        c.is_ascii_punctuation()
    } else {
        !c.is_alphanumeric() && !c.is_whitespace() && !c.is_control()
    }
}

/// Byte ranges of the tokens in `text`.
pub fn token_offsets(text: &str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() || is_punctuation(c) {
            if let Some(s) = start.take() {
                out.push((s, i));
            }
            if !c.is_whitespace() {
                out.push((i, i + c.len_utf8()));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s, text.len()));
    }
    out
}

pub fn tokenize(text: &str) -> Vec<String> {
    token_offsets(text)
        .into_iter()
        .map(|(s, e)| text[s..e].to_string())
        .collect()
}

/// Tokenizes `text` treating each byte offset in `boundaries` as a forced
/// token boundary. Offsets must be sorted and on char boundaries.
pub fn token_offsets_with_boundaries(text: &str, boundaries: &[usize]) -> Vec<(usize, usize)> {
    let mut cuts = vec![0];
    cuts.extend(boundaries.iter().copied());
    cuts.push(text.len());
    cuts.windows(2)
        .flat_map(|w| {
            token_offsets(&text[w[0]..w[1]])
                .into_iter()
                .map(move |(s, e)| (s + w[0], e + w[0]))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_punctuation() {
        assert_eq!(
            tokenize("The system, as described above."),
            vec!["The", "system", ",", "as", "described", "above", "."]
        );
        assert_eq!(tokenize("don't"), vec!["don", "'", "t"]);
        assert_eq!(tokenize("  "), Vec::<String>::new());
    }

    #[test]
    fn boundaries_split_words() {
        let text = "foobar baz";
        let offs = token_offsets_with_boundaries(text, &[3]);
        assert_eq!(offs, vec![(0, 3), (3, 6), (7, 10)]);
    }
}
