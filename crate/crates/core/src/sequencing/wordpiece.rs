//! Greedy longest-match-first WordPiece segmentation for uncased models.

use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use super::vocab::{is_reserved, Vocabulary, UNK};

const CONTINUATION: &str = "##";
const MAX_WORD_CHARS: usize = 100;

/// Lowercases, decomposes and strips combining marks.
pub fn normalize(word: &str) -> String {
    word.to_lowercase()
        .nfd()
        .filter(|c| !is_combining_mark(*c))
        .collect()
}

fn split_punctuation(word: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in word.chars() {
        let punct = if c.is_ascii() {
            c.is_ascii_punctuation()
        } else {
            !c.is_alphanumeric() && !c.is_whitespace()
        };
        if c.is_whitespace() || punct {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            if punct {
                out.push(c.to_string());
            }
        } else {
            cur.push(c);
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Segments one normalized word. Returns `[UNK]` when no segmentation
/// covers the whole word.
pub fn segment_word(word: &str, vocab: &Vocabulary) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    if chars.len() > MAX_WORD_CHARS {
        return vec![UNK.to_string()];
    }
    let mut pieces = Vec::new();
    let mut start = 0;
    while start < chars.len() {
        let mut end = chars.len();
        let mut found = None;
        while start < end {
            let mut piece: String = chars[start..end].iter().collect();
            if start > 0 {
                piece.insert_str(0, CONTINUATION);
            }
            if vocab.contains(&piece) {
                found = Some(piece);
                break;
            }
            end -= 1;
        }
        match found {
            Some(p) => pieces.push(p),
            None => return vec![UNK.to_string()],
        }
        start = end;
    }
    pieces
}

/// Subword segmentation of a token list. Reserved markers pass through
/// unsplit; everything else is lowercased, accent-stripped and split on
/// punctuation before greedy matching.
pub fn wordpiece_tokenize<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary) -> Vec<String> {
    let mut out = Vec::new();
    for t in tokens {
        let t = t.as_ref();
        if is_reserved(t) {
            out.push(t.to_string());
            continue;
        }
        for w in split_punctuation(&normalize(t)) {
            out.extend(segment_word(&w, vocab));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> Vocabulary {
        Vocabulary::from_tokens([
            "[PAD]", "[UNK]", "[CLS]", "[SEP]", "moved", "un", "##aff", "##afford", "##able",
            "##ord", "a", "##ff", "cafe", "'", "s",
        ])
    }

    #[test]
    fn known_word_is_one_piece() {
        assert_eq!(wordpiece_tokenize(&["Moved"], &vocab()), ["moved"]);
    }

    #[test]
    fn longest_prefix_wins() {
        assert_eq!(
            wordpiece_tokenize(&["unaffordable"], &vocab()),
            ["un", "##afford", "##able"]
        );
    }

    #[test]
    fn unmatched_remainder_is_unk() {
        assert_eq!(wordpiece_tokenize(&["unx"], &vocab()), ["[UNK]"]);
        assert_eq!(wordpiece_tokenize(&["zebra", "moved"], &vocab()), ["[UNK]", "moved"]);
    }

    #[test]
    fn markers_pass_through() {
        let v = vocab();
        assert_eq!(wordpiece_tokenize(&["e11", "#", "$", "e22"], &v), ["e11", "#", "$", "e22"]);
    }

    #[test]
    fn accents_and_punctuation() {
        assert_eq!(wordpiece_tokenize(&["Café's"], &vocab()), ["cafe", "'", "s"]);
        assert!(wordpiece_tokenize::<&str>(&[], &vocab()).is_empty());
    }
}
