//! A small separable corpus for smoke tests and examples.
//!
//! Every class draws its entities from the same noun pool; only the words
//! between the entities tell the classes apart.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{parse_label, AnnotatedInstance, AnnotatedToken, RelationLabel, Span};

const DETERMINERS: [&str; 3] = ["the", "a", "this"];
const ADJECTIVES: [&str; 5] = ["old", "big", "small", "red", "new"];
const NOUNS: [&str; 16] = [
    "box", "letter", "engine", "storm", "report", "wheel", "virus", "jar", "book", "fire",
    "door", "car", "paper", "coin", "lamp", "house",
];
const TAILS: [(&str, &str); 3] = [("yesterday", "NN"), ("today", "NN"), ("again", "RB")];

/// Label name and the phrases that express it, as `(word, POS)` lists.
const CLASSES: [(&str, &[&[(&str, &str)]]); 4] = [
    (
        "Cause-Effect(e1,e2)",
        &[&[("caused", "VBD")], &[("triggered", "VBD")], &[("produced", "VBD"), ("a", "DT")]],
    ),
    (
        "Content-Container(e1,e2)",
        &[&[("was", "VBD"), ("inside", "IN")], &[("sat", "VBD"), ("in", "IN")], &[("is", "VBZ"), ("stored", "VBN"), ("in", "IN")]],
    ),
    (
        "Component-Whole(e1,e2)",
        &[&[("belongs", "VBZ"), ("to", "TO")], &[("hangs", "VBZ"), ("from", "IN")], &[("fits", "VBZ"), ("into", "IN")]],
    ),
    (
        "Message-Topic(e1,e2)",
        &[&[("discusses", "VBZ")], &[("describes", "VBZ")], &[("talks", "VBZ"), ("about", "IN")]],
    ),
];

/// The four labels used by [`synthetic_corpus`], in class order.
pub fn synthetic_labels() -> Vec<RelationLabel> {
    CLASSES.iter().map(|(name, _)| parse_label(name).unwrap()).collect()
}

/// `per_class` instances of each of four classes, shuffled, ids from 1.
pub fn synthetic_corpus(per_class: usize, seed: u64) -> Vec<AnnotatedInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut plan: Vec<usize> = (0..CLASSES.len()).flat_map(|c| std::iter::repeat_n(c, per_class)).collect();
    plan.shuffle(&mut rng);
    plan.into_iter()
        .enumerate()
        .map(|(i, class)| instance(i as u32 + 1, class, &mut rng))
        .collect()
}

fn instance(id: u32, class: usize, rng: &mut ChaCha8Rng) -> AnnotatedInstance {
    let (label, phrases) = CLASSES[class];
    let mut words: Vec<(&str, &str)> = Vec::new();
    let noun_phrase = |words: &mut Vec<(&str, &str)>, rng: &mut ChaCha8Rng| -> Span {
        words.push((DETERMINERS[rng.gen_range(0..DETERMINERS.len())], "DT"));
        if rng.gen_bool(0.5) {
            words.push((ADJECTIVES[rng.gen_range(0..ADJECTIVES.len())], "JJ"));
        }
        words.push((NOUNS[rng.gen_range(0..NOUNS.len())], "NN"));
        Span::new(words.len() - 1, words.len())
    };
    let e1 = noun_phrase(&mut words, rng);
    words.extend_from_slice(phrases[rng.gen_range(0..phrases.len())]);
    let e2 = noun_phrase(&mut words, rng);
    if rng.gen_bool(0.5) {
        words.push(TAILS[rng.gen_range(0..TAILS.len())]);
    }
    words.push((".", "."));
    let tokens = words
        .iter()
        .enumerate()
        .map(|(i, (w, pos))| AnnotatedToken::new(*w, *pos, i))
        .collect();
    AnnotatedInstance::from_tokens(id, tokens, e1, e2, parse_label(label).unwrap())
        .expect("generated spans are valid")
}
