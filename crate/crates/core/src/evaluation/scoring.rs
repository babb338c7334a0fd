use serde::{Deserialize, Serialize};

use crate::corpus::{Relation, RelationLabel, NUM_LABELS};
use crate::error::{Error, Result};

/// Counts and percentages for one relation, both directions pooled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub relation: String,
    /// Predictions with the right relation and the right direction.
    pub true_positives: usize,
    /// Predictions of this relation in either direction.
    pub predicted: usize,
    /// Gold instances of this relation in either direction.
    pub gold: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Directional scores for the nine real relations, `Other` excluded.
/// Rows are in alphabetical order; every value is a percentage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub rows: Vec<ClassRow>,
    pub macro_f1: f64,
    pub instances: usize,
}

impl ClassReport {
    pub fn row(&self, relation: Relation) -> Option<&ClassRow> {
        self.rows.iter().find(|r| r.relation == relation.name())
    }
}

/// Relations sorted by name, the order used in reports.
pub fn report_order() -> Vec<Relation> {
    let mut rels = Relation::REAL.to_vec();
    rels.sort_by_key(|r| r.name());
    rels
}

fn percent(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// The official SemEval-2010 Task 8 score: a true positive needs the same
/// relation and direction, while precision and recall denominators count
/// the relation in either direction.
pub fn score_official(gold: &[RelationLabel], pred: &[RelationLabel]) -> Result<ClassReport> {
    if gold.len() != pred.len() {
        return Err(Error::Scorer(format!(
            "{} gold labels but {} predictions",
            gold.len(),
            pred.len()
        )));
    }
    let n = Relation::REAL.len();
    let (mut tp, mut npred, mut ngold) = (vec![0; n], vec![0; n], vec![0; n]);
    for (g, p) in gold.iter().zip(pred) {
        if let Some(k) = g.relation().index() {
            ngold[k] += 1;
        }
        if let Some(k) = p.relation().index() {
            npred[k] += 1;
            if g == p {
                tp[k] += 1;
            }
        }
    }
    let rows: Vec<ClassRow> = report_order()
        .into_iter()
        .map(|rel| {
            let k = rel.index().unwrap();
            let precision = percent(tp[k], npred[k]);
            let recall = percent(tp[k], ngold[k]);
            ClassRow {
                relation: rel.name().to_string(),
                true_positives: tp[k],
                predicted: npred[k],
                gold: ngold[k],
                precision,
                recall,
                f1: harmonic(precision, recall),
            }
        })
        .collect();
    let macro_f1 = rows.iter().map(|r| r.f1).sum::<f64>() / n as f64;
    Ok(ClassReport {
        rows,
        macro_f1,
        instances: gold.len(),
    })
}

/// [`score_official`] over dense label ids.
pub fn score_ids(gold: &[usize], pred: &[usize]) -> Result<ClassReport> {
    let conv = |ids: &[usize]| -> Result<Vec<RelationLabel>> {
        ids.iter()
            .map(|&i| {
                RelationLabel::from_id(i).ok_or_else(|| Error::Label(format!("label id {i}")))
            })
            .collect()
    };
    score_official(&conv(gold)?, &conv(pred)?)
}

/// Gold x predicted counts over all 19 labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(gold: &[RelationLabel], pred: &[RelationLabel]) -> Result<Self> {
        if gold.len() != pred.len() {
            return Err(Error::Scorer("gold and prediction lengths differ".into()));
        }
        let mut counts = vec![vec![0; NUM_LABELS]; NUM_LABELS];
        for (g, p) in gold.iter().zip(pred) {
            counts[g.id()][p.id()] += 1;
        }
        Ok(ConfusionMatrix { counts })
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn get(&self, gold: RelationLabel, pred: RelationLabel) -> usize {
        self.counts[gold.id()][pred.id()]
    }

    /// Rows and columns labelled by id; the key lists each id's label.
    pub fn render(&self) -> String {
        let mut out = String::from("gold\\pred");
        for j in 0..NUM_LABELS {
            out.push_str(&format!("{j:>5}"));
        }
        out.push('\n');
        for (i, row) in self.counts.iter().enumerate() {
            out.push_str(&format!("{i:>9}"));
            for c in row {
                out.push_str(&format!("{c:>5}"));
            }
            out.push('\n');
        }
        for label in RelationLabel::all() {
            out.push_str(&format!("{:>3} = {label}\n", label.id()));
        }
        out
    }
}
