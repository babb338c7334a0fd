//! Token annotation files: one block per instance, blocks separated by blank
//! lines, one `<surface><TAB><POS><TAB><NER>` line per token.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::label::RelationLabel;
use super::semeval::RawInstance;
use super::Span;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedToken {
    pub surface: String,
    /// Penn Treebank part-of-speech tag.
    pub pos: String,
    /// IOB2 entity label, `O` outside entities.
    pub ner: String,
    pub index: usize,
}

impl AnnotatedToken {
    pub fn new(surface: impl Into<String>, pos: impl Into<String>, index: usize) -> Self {
        AnnotatedToken {
            surface: surface.into(),
            pos: pos.into(),
            ner: "O".to_string(),
            index,
        }
    }
}

/// A corpus instance paired with per-token annotations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedInstance {
    pub raw: RawInstance,
    pub tokens: Vec<AnnotatedToken>,
}

impl AnnotatedInstance {
    /// Pairs `raw` with annotation rows `(pos, ner)`; the counts must agree.
    pub fn new(raw: RawInstance, rows: Vec<(String, String)>) -> Result<Self> {
        if rows.len() != raw.tokens.len() {
            return Err(Error::Alignment {
                id: raw.id,
                message: format!(
                    "sentence has {} tokens but annotation block has {} lines",
                    raw.tokens.len(),
                    rows.len()
                ),
            });
        }
        let tokens = raw
            .tokens
            .iter()
            .zip(rows)
            .enumerate()
            .map(|(index, (surface, (pos, ner)))| AnnotatedToken {
                surface: surface.clone(),
                pos,
                ner,
                index,
            })
            .collect();
        Ok(AnnotatedInstance { raw, tokens })
    }

    pub fn id(&self) -> u32 {
        self.raw.id
    }

    /// Builds an instance directly from annotated tokens. The text is the
    /// space-joined surfaces; `index` fields are renumbered.
    pub fn from_tokens(
        id: u32,
        mut tokens: Vec<AnnotatedToken>,
        e1: Span,
        e2: Span,
        label: RelationLabel,
    ) -> Result<Self> {
        if e1.is_empty() || e2.is_empty() || e1.end > e2.start || e2.end > tokens.len() {
            return Err(Error::Alignment {
                id,
                message: format!("invalid entity spans {e1:?} {e2:?} for {} tokens", tokens.len()),
            });
        }
        let mut text = String::new();
        let mut offsets = Vec::with_capacity(tokens.len());
        for (i, t) in tokens.iter_mut().enumerate() {
            if i > 0 {
                text.push(' ');
            }
            let start = text.len();
            text.push_str(&t.surface);
            offsets.push((start, text.len()));
            t.index = i;
        }
        let raw = RawInstance {
            id,
            tokens: tokens.iter().map(|t| t.surface.clone()).collect(),
            e1,
            e2,
            e1_bytes: Span::new(offsets[e1.start].0, offsets[e1.end - 1].1),
            e2_bytes: Span::new(offsets[e2.start].0, offsets[e2.end - 1].1),
            text,
            label,
            comment: None,
        };
        Ok(AnnotatedInstance { raw, tokens })
    }
}

/// Builds an instance from `word/POS` or `word/POS/NER` items separated by
/// spaces, with `<e1>`, `</e1>`, `<e2>`, `</e2>` as standalone items.
///
/// ```
/// use indicator_re::corpus::{from_tagged_text, RelationLabel};
/// let inst = from_tagged_text(
///     1,
///     "My/PRP$ new/JJ <e1> boss/NN </e1> moved/VBD into/IN his/PRP$ <e2> office/NN </e2>",
///     RelationLabel::OTHER,
/// )
/// .unwrap();
/// assert_eq!(inst.raw.e2.start, 6);
/// ```
pub fn from_tagged_text(id: u32, text: &str, label: RelationLabel) -> Result<AnnotatedInstance> {
    let bad = |m: String| Error::Alignment { id, message: m };
    let mut tokens = Vec::new();
    let mut marks = [None; 4];
    for item in text.split_whitespace() {
        if let Some(k) = ["<e1>", "</e1>", "<e2>", "</e2>"].iter().position(|m| *m == item) {
            marks[k] = Some(tokens.len());
            continue;
        }
        let is_ner = |n: &str| n == "O" || n.starts_with("B-") || n.starts_with("I-");
        let (rest, last) = item
            .rsplit_once('/')
            .ok_or_else(|| bad(format!("item `{item}` is not `word/POS`")))?;
        let (surface, pos, ner) = match rest.rsplit_once('/') {
            Some((w, p)) if is_ner(last) && !w.is_empty() => (w, p, last),
            _ => (rest, last, "O"),
        };
        if surface.is_empty() || pos.is_empty() {
            return Err(bad(format!("item `{item}` is not `word/POS`")));
        }
        let mut t = AnnotatedToken::new(surface, pos, tokens.len());
        t.ner = ner.to_string();
        tokens.push(t);
    }
    let get = |k: usize| marks[k].ok_or_else(|| bad("missing entity marker".to_string()));
    let e1 = Span::new(get(0)?, get(1)?.max(get(0)?));
    let e2 = Span::new(get(2)?, get(3)?.max(get(2)?));
    AnnotatedInstance::from_tokens(id, tokens, e1, e2, label)
}

/// One parsed annotation block: `(surface, pos, ner)` per line.
pub type AnnotationBlock = Vec<(String, String, String)>;

pub fn parse_annotation_str(content: &str) -> Result<Vec<AnnotationBlock>> {
    let mut blocks = Vec::new();
    let mut current: AnnotationBlock = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !current.is_empty() {
                blocks.push(std::mem::take(&mut current));
            }
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 || fields.iter().any(|f| f.is_empty()) {
            return Err(Error::parse(
                i + 1,
                "expected `<surface><TAB><POS><TAB><NER>`",
            ));
        }
        current.push((
            fields[0].to_string(),
            fields[1].to_string(),
            fields[2].to_string(),
        ));
    }
    if !current.is_empty() {
        blocks.push(current);
    }
    Ok(blocks)
}

pub fn parse_annotation_file(path: impl AsRef<Path>) -> Result<Vec<AnnotationBlock>> {
    let path = path.as_ref();
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_annotation_str(&content)
}

/// Pairs instances with annotation blocks in order.
pub fn attach_blocks(
    instances: Vec<RawInstance>,
    blocks: Vec<AnnotationBlock>,
) -> Result<Vec<AnnotatedInstance>> {
    let n_blocks = blocks.len();
    let n_instances = instances.len();
    let mut blocks = blocks.into_iter();
    let mut out = Vec::with_capacity(n_instances);
    for raw in instances {
        let block = blocks.next().ok_or_else(|| Error::Alignment {
            id: raw.id,
            message: format!("missing annotation block ({n_blocks} blocks for {n_instances} instances)"),
        })?;
        let rows = block.into_iter().map(|(_, pos, ner)| (pos, ner)).collect();
        out.push(AnnotatedInstance::new(raw, rows)?);
    }
    if n_blocks > n_instances {
        return Err(Error::Alignment {
            id: out.last().map(|a| a.id()).unwrap_or(0),
            message: format!("{} annotation blocks left over", n_blocks - n_instances),
        });
    }
    Ok(out)
}

pub fn attach_annotations(
    instances: Vec<RawInstance>,
    annotations: impl AsRef<Path>,
) -> Result<Vec<AnnotatedInstance>> {
    attach_blocks(instances, parse_annotation_file(annotations)?)
}

/// Renders the annotation block for one instance.
pub fn annotation_block(tokens: &[AnnotatedToken]) -> String {
    let mut s = String::new();
    for t in tokens {
        s.push_str(&format!("{}\t{}\t{}\n", t.surface, t.pos, t.ner));
    }
    s
}

pub fn write_annotation_file(path: impl AsRef<Path>, instances: &[AnnotatedInstance]) -> Result<()> {
    let path = path.as_ref();
    let body = instances
        .iter()
        .map(|a| annotation_block(&a.tokens))
        .collect::<Vec<_>>()
        .join("\n");
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::semeval::parse_semeval_str;

    const RECORDS: &str = "1\t\"A <e1>cat</e1> in a <e2>box</e2>.\"\nContent-Container(e1,e2)\nComment:\n\n2\t\"<e1>Rain</e1> causes <e2>floods</e2>.\"\nCause-Effect(e1,e2)\nComment:\n\n";

    fn block(words: &[(&str, &str)]) -> String {
        words
            .iter()
            .map(|(w, t)| format!("{w}\t{t}\tO\n"))
            .collect()
    }

    #[test]
    fn attaches_matching_blocks() {
        let raw = parse_semeval_str(RECORDS).unwrap();
        let ann = format!(
            "{}\n{}",
            block(&[("A", "DT"), ("cat", "NN"), ("in", "IN"), ("a", "DT"), ("box", "NN"), (".", ".")]),
            block(&[("Rain", "NN"), ("causes", "VBZ"), ("floods", "NNS"), (".", ".")])
        );
        let out = attach_blocks(raw, parse_annotation_str(&ann).unwrap()).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].tokens[1].pos, "NN");
        assert_eq!(out[1].tokens[1].surface, "causes");
        assert!(out[1].tokens.iter().enumerate().all(|(i, t)| t.index == i));
    }

    #[test]
    fn short_block_is_an_alignment_error() {
        let raw = parse_semeval_str(RECORDS).unwrap();
        let ann = format!(
            "{}\n{}",
            block(&[("A", "DT"), ("cat", "NN"), ("in", "IN"), ("a", "DT"), ("box", "NN"), (".", ".")]),
            block(&[("Rain", "NN"), ("causes", "VBZ"), ("floods", "NNS")])
        );
        match attach_blocks(raw, parse_annotation_str(&ann).unwrap()) {
            Err(Error::Alignment { id, .. }) => assert_eq!(id, 2),
            other => panic!("expected alignment error, got {other:?}"),
        }
    }

    #[test]
    fn empty_annotations_are_an_error() {
        let raw = parse_semeval_str(RECORDS).unwrap();
        assert!(matches!(
            attach_blocks(raw, parse_annotation_str("").unwrap()),
            Err(Error::Alignment { id: 1, .. })
        ));
    }

    #[test]
    fn malformed_line_is_rejected() {
        assert!(parse_annotation_str("cat\tNN\n").is_err());
    }
}
