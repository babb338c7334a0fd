//! Subword tokenization, marker insertion and aggregate-sequence assembly.

mod assemble;
mod vocab;
mod wordpiece;

pub use assemble::{
    assemble, assemble_mode, insert_entity_markers, insert_indicator_markers, AggregateSequence,
    IndicatorSpan, InputMode, MarkerIndices, SpanOptions,
};
pub use vocab::{
    is_reserved, Vocabulary, CLS, E1_END, E1_START, E2_END, E2_START, INDICATOR_END,
    INDICATOR_START, PAD, RESERVED, SEP, UNK,
};
pub use wordpiece::{normalize, segment_word, wordpiece_tokenize};
