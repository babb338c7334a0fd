//! Reader and writer for the SemEval-2010 Task 8 distribution format.
//!
//! Each record is four lines:
//!
//! ```text
//! 1<TAB>"The system as described above has its greatest application in an arrayed <e1>configuration</e1> of antenna <e2>elements</e2>."
//! Component-Whole(e2,e1)
//! Comment: Not a collection: there is structure here, organisation.
//!
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::label::{parse_label, RelationLabel};
use super::tokenize::token_offsets_with_boundaries;
use super::Span;
use crate::error::{Error, Result};

/// One parsed corpus record with entity tags stripped from the text.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawInstance {
    pub id: u32,
    /// Sentence text without the inline entity tags.
    pub text: String,
    /// Tokens of `text`, with the tag positions acting as token boundaries.
    pub tokens: Vec<String>,
    pub e1: Span,
    pub e2: Span,
    /// Byte ranges of the tagged entities within `text`.
    pub e1_bytes: Span,
    pub e2_bytes: Span,
    pub label: RelationLabel,
    pub comment: Option<String>,
}

impl RawInstance {
    /// Text with the `<e1>`/`<e2>` tags reinserted.
    pub fn tagged_text(&self) -> String {
        let t = &self.text;
        let (a, b, c, d) = (
            self.e1_bytes.start,
            self.e1_bytes.end,
            self.e2_bytes.start,
            self.e2_bytes.end,
        );
        format!(
            "{}<e1>{}</e1>{}<e2>{}</e2>{}",
            &t[..a],
            &t[a..b],
            &t[b..c],
            &t[c..d],
            &t[d..]
        )
    }

    /// Serializes the record back to the four-line distribution format.
    pub fn to_record(&self) -> String {
        let comment = match &self.comment {
            Some(c) => format!("Comment: {c}"),
            None => "Comment:".to_string(),
        };
        format!(
            "{}\t\"{}\"\n{}\n{}\n\n",
            self.id,
            self.tagged_text(),
            self.label,
            comment
        )
    }
}

const TAGS: [&str; 4] = ["<e1>", "</e1>", "<e2>", "</e2>"];

/// Strips the four entity tags, returning the clean text and the byte offset
/// (in the clean text) at which each tag stood.
fn strip_tags(sentence: &str, line: usize) -> Result<(String, [usize; 4])> {
    let mut clean = String::with_capacity(sentence.len());
    let mut found: [Option<usize>; 4] = [None; 4];
    let mut rest = sentence;
    while let Some(lt) = rest.find('<') {
        clean.push_str(&rest[..lt]);
        rest = &rest[lt..];
        match TAGS.iter().position(|tag| rest.starts_with(tag)) {
            Some(k) => {
                if found[k].is_some() {
                    return Err(Error::parse(line, format!("duplicate {} tag", TAGS[k])));
                }
                found[k] = Some(clean.len());
                rest = &rest[TAGS[k].len()..];
            }
            None => {
                clean.push('<');
                rest = &rest[1..];
            }
        }
    }
    clean.push_str(rest);

    let mut offsets = [0usize; 4];
    for (k, f) in found.iter().enumerate() {
        offsets[k] = f.ok_or_else(|| Error::parse(line, format!("missing {} tag", TAGS[k])))?;
    }
    if offsets[0] > offsets[1] || offsets[2] > offsets[3] {
        return Err(Error::parse(line, "entity closing tag precedes opening tag"));
    }
    if offsets[1] > offsets[2] {
        return Err(Error::parse(line, "e2 must follow e1 in the sentence"));
    }
    Ok((clean, offsets))
}

fn parse_sentence_line(text: &str, line: usize) -> Result<(u32, String)> {
    let (id, rest) = text
        .split_once(['\t', ' '])
        .ok_or_else(|| Error::parse(line, "expected `<id><TAB>\"<sentence>\"`"))?;
    let id: u32 = id
        .trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("invalid instance id `{id}`")))?;
    if id == 0 {
        return Err(Error::parse(line, "instance id must be positive"));
    }
    let rest = rest.trim();
    if rest.len() < 2 || !rest.starts_with('"') || !rest.ends_with('"') {
        return Err(Error::parse(line, "sentence must be enclosed in double quotes"));
    }
    Ok((id, rest[1..rest.len() - 1].to_string()))
}

fn build_instance(
    id: u32,
    sentence: &str,
    label: RelationLabel,
    comment: Option<String>,
    line: usize,
) -> Result<RawInstance> {
    let (text, offs) = strip_tags(sentence, line)?;
    let spans = token_offsets_with_boundaries(&text, &offs);
    let token_span = |start: usize, end: usize| {
        let first = spans.iter().position(|&(s, _)| s >= start);
        let last = spans.iter().rposition(|&(_, e)| e <= end);
        match (first, last) {
            (Some(f), Some(l)) if f <= l && spans[f].0 < end => Ok(Span::new(f, l + 1)),
            _ => Err(Error::parse(line, "empty entity span")),
        }
    };
    let e1 = token_span(offs[0], offs[1])?;
    let e2 = token_span(offs[2], offs[3])?;
    if e1.end > e2.start {
        return Err(Error::parse(line, "e1 must end before e2 begins"));
    }
    let tokens = spans.iter().map(|&(s, e)| text[s..e].to_string()).collect();
    Ok(RawInstance {
        id,
        tokens,
        e1,
        e2,
        e1_bytes: Span::new(offs[0], offs[1]),
        e2_bytes: Span::new(offs[2], offs[3]),
        text,
        label,
        comment,
    })
}

/// Parses the contents of a SemEval distribution file.
pub fn parse_semeval_str(content: &str) -> Result<Vec<RawInstance>> {
    let lines: Vec<&str> = content.lines().map(|l| l.trim_end_matches('\r')).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        if lines[i].trim().is_empty() {
            i += 1;
            continue;
        }
        let line_no = i + 1;
        let (id, sentence) = parse_sentence_line(lines[i], line_no)?;
        let label_line = lines
            .get(i + 1)
            .ok_or_else(|| Error::parse(line_no + 1, "missing relation label line"))?;
        let label = parse_label(label_line).map_err(|e| Error::parse(line_no + 1, e.to_string()))?;
        let comment_line = lines
            .get(i + 2)
            .ok_or_else(|| Error::parse(line_no + 2, "missing `Comment:` line"))?;
        let comment = comment_line
            .strip_prefix("Comment:")
            .ok_or_else(|| Error::parse(line_no + 2, "expected `Comment:` line"))?
            .trim();
        let comment = (!comment.is_empty()).then(|| comment.to_string());
        if let Some(l) = lines.get(i + 3) {
            if !l.trim().is_empty() {
                return Err(Error::parse(line_no + 3, "expected blank line after record"));
            }
        }
        out.push(build_instance(id, &sentence, label, comment, line_no)?);
        i += 4;
    }
    Ok(out)
}

pub fn parse_semeval_file(path: impl AsRef<Path>) -> Result<Vec<RawInstance>> {
    let path = path.as_ref();
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_semeval_str(&content)
}

pub fn write_semeval_file(path: impl AsRef<Path>, instances: &[RawInstance]) -> Result<()> {
    let path = path.as_ref();
    let body: String = instances.iter().map(RawInstance::to_record).collect();
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::label::{Direction, Relation};

    const FIRST_TRAIN: &str = "1\t\"The system as described above has its greatest application in an arrayed <e1>configuration</e1> of antenna <e2>elements</e2>.\"\nComponent-Whole(e2,e1)\nComment: Not a collection: there is structure here, organisation.\n\n";

    #[test]
    fn parses_first_training_record() {
        let v = parse_semeval_str(FIRST_TRAIN).unwrap();
        assert_eq!(v.len(), 1);
        let r = &v[0];
        assert_eq!(r.id, 1);
        assert_eq!(r.tokens[r.e1.start..r.e1.end], ["configuration"]);
        assert_eq!(r.tokens[r.e2.start..r.e2.end], ["elements"]);
        assert_eq!(r.label.relation(), Relation::ComponentWhole);
        assert_eq!(r.label.direction(), Direction::E2ToE1);
        assert!(r.text.ends_with("of antenna elements."));
        assert_eq!(r.tokens.last().unwrap(), ".");
        assert_eq!(
            r.comment.as_deref(),
            Some("Not a collection: there is structure here, organisation.")
        );
    }

    #[test]
    fn other_label_has_no_direction() {
        let rec = "7\t\"The <e1>girl</e1> saw a <e2>tree</e2>.\"\nOther\nComment:\n\n";
        let v = parse_semeval_str(rec).unwrap();
        assert_eq!(v[0].label, RelationLabel::OTHER);
        assert_eq!(v[0].comment, None);
    }

    #[test]
    fn missing_closing_tag_is_an_error_naming_the_line() {
        let rec = "\n\n3\t\"A <e1>b</e1> c <e2>d.\"\nOther\nComment:\n\n";
        match parse_semeval_str(rec) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("</e2>"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_records_are_rejected() {
        for rec in [
            "1\tThe <e1>a</e1> b <e2>c</e2>.\nOther\nComment:\n\n",
            "1\t\"The <e1>a</e1> b <e2>c</e2>.\"\nFoo-Bar(e1,e2)\nComment:\n\n",
            "1\t\"The <e1>a</e1> b <e2>c</e2>.\"\nOther\nNote:\n\n",
            "1\t\"The <e2>a</e2> b <e1>c</e1>.\"\nOther\nComment:\n\n",
            "x\t\"The <e1>a</e1> b <e2>c</e2>.\"\nOther\nComment:\n\n",
            "1\t\"The <e1></e1> b <e2>c</e2>.\"\nOther\nComment:\n\n",
        ] {
            assert!(parse_semeval_str(rec).is_err(), "{rec}");
        }
    }

    #[test]
    fn tags_force_token_boundaries() {
        let rec = "2\t\"<e1>sun</e1><e2>light</e2> is warm.\"\nOther\nComment:\n\n";
        let r = &parse_semeval_str(rec).unwrap()[0];
        assert_eq!(r.tokens[..2], ["sun", "light"]);
        assert_eq!(r.e1, Span::new(0, 1));
        assert_eq!(r.e2, Span::new(1, 2));
    }

    #[test]
    fn record_round_trip() {
        let v = parse_semeval_str(FIRST_TRAIN).unwrap();
        assert_eq!(v[0].to_record(), FIRST_TRAIN);
        let again = parse_semeval_str(&v[0].to_record()).unwrap();
        assert_eq!(again, v);
    }

    #[test]
    fn tolerates_crlf_and_missing_trailing_blank() {
        let rec = "5\t\"A <e1>b</e1> of <e2>c</e2>.\"\r\nMember-Collection(e2,e1)\r\nComment:";
        let v = parse_semeval_str(rec).unwrap();
        assert_eq!(v[0].id, 5);
    }
}
