//! Corpus to model inputs: annotation, indicator extraction, marker
//! insertion and assembly, plus the JSON-lines dataset format.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{attach_annotations, parse_semeval_file, AnnotatedInstance, RelationLabel};
use crate::error::{Error, Result};
use crate::indicator::{extract_indicator, IndicatorConfig, RemovalRecord, RemovalRule};
use crate::sequencing::{
    assemble_mode, insert_entity_markers, insert_indicator_markers, normalize, AggregateSequence,
    InputMode, Vocabulary, RESERVED,
};

/// One instance with both marker-augmented token sequences.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreparedInstance {
    pub id: u32,
    pub label: RelationLabel,
    /// Sentence tokens with `e11 e12 e21 e22`.
    pub sentence: Vec<String>,
    /// Indicator tokens as `e1 # interior $ e2`.
    pub indicator: Vec<String>,
    pub trace: Vec<RemovalRecord>,
}

impl PreparedInstance {
    pub fn new(instance: &AnnotatedInstance, cfg: &IndicatorConfig) -> Self {
        let indicator = extract_indicator(instance, cfg);
        PreparedInstance {
            id: instance.id(),
            label: instance.raw.label,
            sentence: insert_entity_markers(instance),
            indicator: insert_indicator_markers(&indicator),
            trace: indicator.trace,
        }
    }

    /// Indicator text without the `#`/`$` markers.
    pub fn indicator_text(&self) -> String {
        self.indicator
            .iter()
            .filter(|t| *t != "#" && *t != "$")
            .cloned()
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn assemble(
        &self,
        mode: InputMode,
        vocab: &Vocabulary,
        max_len: usize,
    ) -> Result<AggregateSequence> {
        let layout = match mode {
            InputMode::SentenceTwice => InputMode::Both,
            m => m,
        };
        Ok(assemble_mode(self.id, layout, &self.sentence, &self.indicator, vocab, max_len)?
            .with_label(self.label.id()))
    }
}

pub fn prepare_all(instances: &[AnnotatedInstance], cfg: &IndicatorConfig) -> Vec<PreparedInstance> {
    instances.iter().map(|i| PreparedInstance::new(i, cfg)).collect()
}

pub fn assemble_all(
    prepared: &[PreparedInstance],
    mode: InputMode,
    vocab: &Vocabulary,
    max_len: usize,
) -> Result<Vec<AggregateSequence>> {
    prepared.iter().map(|p| p.assemble(mode, vocab, max_len)).collect()
}

/// Parses a corpus file and pairs it with its annotation file.
pub fn load_corpus(corpus: &Path, annotations: &Path) -> Result<Vec<AnnotatedInstance>> {
    attach_annotations(parse_semeval_file(corpus)?, annotations)
}

/// Tokens removed by each rule, over a dataset.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleCounts {
    pub instances: usize,
    pub entity_disambiguation: usize,
    pub principal_component: usize,
    pub unrelated_entity: usize,
}

pub fn rule_counts(prepared: &[PreparedInstance]) -> RuleCounts {
    let mut c = RuleCounts {
        instances: prepared.len(),
        ..RuleCounts::default()
    };
    for r in prepared.iter().flat_map(|p| &p.trace) {
        match r.rule {
            RemovalRule::EntityDisambiguation => c.entity_disambiguation += 1,
            RemovalRule::PrincipalComponent => c.principal_component += 1,
            RemovalRule::UnrelatedEntity => c.unrelated_entity += 1,
        }
    }
    c
}

/// Whole-word vocabulary over the normalized words of `prepared`: reserved
/// tokens first, then words by descending frequency (ties alphabetical).
/// Used when no pretrained subword vocabulary is supplied.
pub fn word_vocabulary(prepared: &[PreparedInstance]) -> Vocabulary {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for p in prepared {
        for t in p.sentence.iter().chain(&p.indicator) {
            if !RESERVED.contains(&t.as_str()) {
                *counts.entry(normalize(t)).or_default() += 1;
            }
        }
    }
    let mut words: Vec<(String, usize)> = counts.into_iter().filter(|(w, _)| !w.is_empty()).collect();
    words.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Vocabulary::from_tokens(
        RESERVED
            .iter()
            .map(|s| s.to_string())
            .chain(words.into_iter().map(|(w, _)| w)),
    )
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for row in rows {
        serde_json::to_writer(&mut w, row)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::parse(i + 1, e.to_string()))?);
    }
    Ok(out)
}
