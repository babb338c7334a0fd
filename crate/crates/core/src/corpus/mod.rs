//! SemEval-2010 Task 8 corpus files and companion token annotations.

mod annotation;
mod label;
mod semeval;
pub mod tokenize;

use serde::{Deserialize, Serialize};

pub use annotation::{
    annotation_block, attach_annotations, from_tagged_text, attach_blocks, parse_annotation_file,
    parse_annotation_str, write_annotation_file, AnnotatedInstance, AnnotatedToken,
    AnnotationBlock,
};
pub use label::{parse_label, Direction, Relation, RelationLabel, NUM_LABELS, OTHER_ID};
pub use semeval::{parse_semeval_file, parse_semeval_str, write_semeval_file, RawInstance};

/// Half-open index range `start..end`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn contains(&self, i: usize) -> bool {
        (self.start..self.end).contains(&i)
    }

    pub fn iter(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }
}
