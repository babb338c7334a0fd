//! Segmentations frozen from the reference uncased BERT tokenizer
//! (`transformers.BertTokenizer`, do_lower_case=True) over the vocabulary
//! stored next to them.

use indicator_re::sequencing::{wordpiece_tokenize, Vocabulary};
use serde::Deserialize;

#[derive(Deserialize)]
struct Case {
    word: String,
    pieces: Vec<String>,
}

#[derive(Deserialize)]
struct Oracle {
    vocab: Vec<String>,
    cases: Vec<Case>,
}

#[test]
fn matches_reference_tokenizer() {
    let oracle: Oracle =
        serde_json::from_str(include_str!("data/wordpiece_oracle.json")).unwrap();
    let vocab = Vocabulary::from_tokens(oracle.vocab);
    assert_eq!(vocab.appended_reserved(), 0);
    assert!(oracle.cases.len() > 30);
    for case in &oracle.cases {
        assert_eq!(
            wordpiece_tokenize(&[case.word.as_str()], &vocab),
            case.pieces,
            "word {:?}",
            case.word
        );
    }
}

#[test]
fn markers_are_never_split() {
    let oracle: Oracle =
        serde_json::from_str(include_str!("data/wordpiece_oracle.json")).unwrap();
    let vocab = Vocabulary::from_tokens(oracle.vocab);
    let got = wordpiece_tokenize(&["e11", "Playing", "e12", "#", "$"], &vocab);
    assert_eq!(got, ["e11", "play", "##ing", "e12", "#", "$"]);
}
