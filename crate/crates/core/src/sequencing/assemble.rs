use serde::{Deserialize, Serialize};

use super::vocab::{
    Vocabulary, E1_END, E1_START, E2_END, E2_START, INDICATOR_END, INDICATOR_START,
};
use super::wordpiece::wordpiece_tokenize;
use crate::corpus::{AnnotatedInstance, Span};
use crate::error::{Error, Result};
use crate::indicator::IndicatorSequence;

/// Which segments the encoder sees.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InputMode {
    /// Sentence segment plus indicator segment.
    #[default]
    Both,
    /// Sentence segment only.
    Sentence,
    /// Indicator segment only.
    Indicator,
    /// Sentence routed to both branches of the recurrent+convolutional encoder.
    SentenceTwice,
}

impl InputMode {
    pub fn has_sentence(self) -> bool {
        !matches!(self, InputMode::Indicator)
    }

    pub fn has_indicator(self) -> bool {
        !matches!(self, InputMode::Sentence)
    }

    pub fn name(self) -> &'static str {
        match self {
            InputMode::Both => "both",
            InputMode::Sentence => "sentence",
            InputMode::Indicator => "indicator",
            InputMode::SentenceTwice => "sentence-twice",
        }
    }
}

impl std::str::FromStr for InputMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "both" => Ok(InputMode::Both),
            "sentence" => Ok(InputMode::Sentence),
            "indicator" => Ok(InputMode::Indicator),
            "sentence-twice" => Ok(InputMode::SentenceTwice),
            _ => Err(Error::Config(format!("unknown input mode `{s}`"))),
        }
    }
}

/// Positions of `e11`, `e12`, `e21`, `e22`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkerIndices {
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub q: usize,
}

/// The indicator segment `start..start+len` and the positions of `#` and `$` inside it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndicatorSpan {
    pub start: usize,
    pub len: usize,
    pub hash: usize,
    pub dollar: usize,
}

/// Which marker rows the averaging heads include.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SpanOptions {
    /// Average `e11..=e12` rather than the rows strictly between them.
    pub include_entity_markers: bool,
    /// Keep the `#` and `$` rows in the indicator average.
    pub include_indicator_markers: bool,
}

/// `[CLS] sentence [SEP] indicator [SEP] [PAD]...` as ids, with every index
/// the representation heads need.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregateSequence {
    pub id: u32,
    pub ids: Vec<u32>,
    pub segment_ids: Vec<u8>,
    #[serde(rename = "mask")]
    pub attention_mask: Vec<u8>,
    /// Absent when the sentence segment is omitted.
    pub markers: Option<MarkerIndices>,
    /// Absent when the indicator segment is omitted.
    pub indicator: Option<IndicatorSpan>,
    pub truncated: bool,
    pub label: Option<usize>,
}

impl AggregateSequence {
    /// Number of non-padding positions.
    pub fn content_len(&self) -> usize {
        self.attention_mask.iter().filter(|&&m| m == 1).count()
    }

    pub fn with_label(mut self, label: usize) -> Self {
        self.label = Some(label);
        self
    }

    /// Sentence subwords between `[CLS]` and the first `[SEP]`.
    pub fn sentence_segment(&self) -> Option<Span> {
        self.markers?;
        let end = self.indicator.map(|s| s.start - 1).unwrap_or(self.content_len() - 1);
        Some(Span::new(1, end))
    }

    pub fn indicator_segment(&self) -> Option<Span> {
        self.indicator.map(|s| Span::new(s.start, s.start + s.len))
    }

    /// Rows averaged for `e1`.
    pub fn e1_rows(&self, opts: SpanOptions) -> Vec<usize> {
        match (self.markers, self.indicator) {
            (Some(k), _) => marker_rows(k.m, k.n, opts.include_entity_markers),
            (None, Some(s)) => (s.start..s.hash).collect(),
            (None, None) => Vec::new(),
        }
    }

    /// Rows averaged for `e2`.
    pub fn e2_rows(&self, opts: SpanOptions) -> Vec<usize> {
        match (self.markers, self.indicator) {
            (Some(k), _) => marker_rows(k.p, k.q, opts.include_entity_markers),
            (None, Some(s)) => (s.dollar + 1..s.start + s.len).collect(),
            (None, None) => Vec::new(),
        }
    }

    /// Rows averaged for the indicator; empty without an indicator segment.
    pub fn indicator_rows(&self, opts: SpanOptions) -> Vec<usize> {
        match self.indicator {
            Some(s) => (s.start..s.start + s.len)
                .filter(|&i| opts.include_indicator_markers || (i != s.hash && i != s.dollar))
                .collect(),
            None => Vec::new(),
        }
    }

    /// Content ids, padding stripped.
    pub fn content_ids(&self) -> &[u32] {
        &self.ids[..self.content_len()]
    }
}

fn marker_rows(open: usize, close: usize, inclusive: bool) -> Vec<usize> {
    if inclusive {
        (open..=close).collect()
    } else {
        (open + 1..close).collect()
    }
}

/// Sentence tokens with `e11`/`e12` around `e1` and `e21`/`e22` around `e2`.
pub fn insert_entity_markers(instance: &AnnotatedInstance) -> Vec<String> {
    let (e1, e2) = (instance.raw.e1, instance.raw.e2);
    let mut out = Vec::with_capacity(instance.raw.tokens.len() + 4);
    for (i, t) in instance.raw.tokens.iter().enumerate() {
        if i == e1.start {
            out.push(E1_START.to_string());
        }
        if i == e2.start {
            out.push(E2_START.to_string());
        }
        out.push(t.clone());
        if i + 1 == e1.end {
            out.push(E1_END.to_string());
        }
        if i + 1 == e2.end {
            out.push(E2_END.to_string());
        }
    }
    out
}

/// Indicator tokens as `e1 # interior $ e2`.
pub fn insert_indicator_markers(indicator: &IndicatorSequence) -> Vec<String> {
    let surf = |ts: &[crate::corpus::AnnotatedToken]| {
        ts.iter().map(|t| t.surface.clone()).collect::<Vec<_>>()
    };
    let mut out = surf(indicator.entity1());
    out.push(INDICATOR_START.to_string());
    out.extend(surf(indicator.interior()));
    out.push(INDICATOR_END.to_string());
    out.extend(surf(indicator.entity2()));
    out
}

fn find_from(pieces: &[String], token: &str, from: usize) -> Option<usize> {
    pieces[from.min(pieces.len())..]
        .iter()
        .position(|p| p == token)
        .map(|i| i + from)
}

fn sentence_markers(id: u32, pieces: &[String]) -> Result<MarkerIndices> {
    let missing = |m: &str| Error::Alignment {
        id,
        message: format!("marker `{m}` missing from sentence segment"),
    };
    let m = find_from(pieces, E1_START, 0).ok_or_else(|| missing(E1_START))?;
    let n = find_from(pieces, E1_END, m + 1).ok_or_else(|| missing(E1_END))?;
    let p = find_from(pieces, E2_START, n + 1).ok_or_else(|| missing(E2_START))?;
    let q = find_from(pieces, E2_END, p + 1).ok_or_else(|| missing(E2_END))?;
    Ok(MarkerIndices { m, n, p, q })
}

fn indicator_markers(id: u32, pieces: &[String]) -> Result<(usize, usize)> {
    let hash = find_from(pieces, INDICATOR_START, 0);
    let dollar = pieces.iter().rposition(|p| p == INDICATOR_END);
    match (hash, dollar) {
        (Some(h), Some(d)) if h < d && h > 0 && d + 1 < pieces.len() => Ok((h, d)),
        _ => Err(Error::Alignment {
            id,
            message: "indicator segment must read `e1 # ... $ e2`".to_string(),
        }),
    }
}

/// Drops sentence subwords until the segment fits `budget`: first from the
/// right end after `e22`, then from the left end before `e11`.
fn truncate_sentence(
    id: u32,
    pieces: &mut Vec<String>,
    markers: &mut MarkerIndices,
    budget: usize,
    needed: usize,
    max_len: usize,
) -> Result<bool> {
    if pieces.len() <= budget {
        return Ok(false);
    }
    let core = markers.q - markers.m + 1;
    if core > budget {
        return Err(Error::Length {
            id,
            needed: needed - pieces.len() + core,
            max_len,
        });
    }
    let keep_right = budget.max(markers.q + 1).min(pieces.len());
    pieces.truncate(keep_right);
    if pieces.len() > budget {
        let drop = pieces.len() - budget;
        pieces.drain(..drop);
        markers.m -= drop;
        markers.n -= drop;
        markers.p -= drop;
        markers.q -= drop;
    }
    Ok(true)
}

/// Tokenizes and assembles one instance for `mode`.
///
/// Layout: `[CLS] sentence [SEP] indicator [SEP]` padded to `max_len`, with
/// the segment not used by `mode` omitted. Only the sentence segment is
/// ever truncated; markers and the indicator are always kept.
pub fn assemble_mode<S: AsRef<str>>(
    id: u32,
    mode: InputMode,
    sentence: &[S],
    indicator: &[S],
    vocab: &Vocabulary,
    max_len: usize,
) -> Result<AggregateSequence> {
    let mut sent = if mode.has_sentence() {
        Some(wordpiece_tokenize(sentence, vocab))
    } else {
        None
    };
    let ind = if mode.has_indicator() {
        Some(wordpiece_tokenize(indicator, vocab))
    } else {
        None
    };

    let ind_len = ind.as_ref().map_or(0, |v| v.len() + 1);
    let sent_len = sent.as_ref().map_or(0, |v| v.len() + 1);
    let needed = 1 + sent_len + ind_len;

    let mut markers = match &sent {
        Some(s) => Some(sentence_markers(id, s)?),
        None => None,
    };
    let mut truncated = false;
    if let (Some(s), Some(k)) = (sent.as_mut(), markers.as_mut()) {
        let budget = max_len.saturating_sub(2 + ind_len);
        truncated = truncate_sentence(id, s, k, budget, needed, max_len)?;
    } else if needed > max_len {
        return Err(Error::Length {
            id,
            needed,
            max_len,
        });
    }

    let mut ids = vec![vocab.cls()];
    let mut segment_ids = vec![0u8];
    if let (Some(s), Some(k)) = (&sent, markers.as_mut()) {
        ids.extend(vocab.ids(s));
        ids.push(vocab.sep());
        segment_ids.resize(ids.len(), 0);
        k.m += 1;
        k.n += 1;
        k.p += 1;
        k.q += 1;
    }
    let mut indicator_span = None;
    if let Some(pieces) = &ind {
        let (hash, dollar) = indicator_markers(id, pieces)?;
        let start = ids.len();
        let seg = if sent.is_some() { 1 } else { 0 };
        ids.extend(vocab.ids(pieces));
        ids.push(vocab.sep());
        segment_ids.resize(ids.len(), seg);
        indicator_span = Some(IndicatorSpan {
            start,
            len: pieces.len(),
            hash: start + hash,
            dollar: start + dollar,
        });
    }
    debug_assert!(ids.len() <= max_len);
    let content = ids.len();
    ids.resize(max_len, vocab.pad());
    segment_ids.resize(max_len, 0);
    let mut attention_mask = vec![1u8; content];
    attention_mask.resize(max_len, 0);

    Ok(AggregateSequence {
        id,
        ids,
        segment_ids,
        attention_mask,
        markers,
        indicator: indicator_span,
        truncated,
        label: None,
    })
}

/// Full two-segment assembly.
pub fn assemble<S: AsRef<str>>(
    id: u32,
    sentence: &[S],
    indicator: &[S],
    vocab: &Vocabulary,
    max_len: usize,
) -> Result<AggregateSequence> {
    assemble_mode(id, InputMode::Both, sentence, indicator, vocab, max_len)
}
