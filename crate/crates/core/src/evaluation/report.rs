use serde::{Deserialize, Serialize};

use super::scoring::ClassReport;

impl ClassReport {
    /// Aligned `Relation  P  R  F1` table with the macro-F1 last.
    pub fn render(&self) -> String {
        let mut out = format!(
            "{:<20}{:>9}{:>9}{:>9}\n",
            "Relation", "P", "R", "F1"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<20}{:>9.2}{:>9.2}{:>9.2}\n",
                r.relation, r.precision, r.recall, r.f1
            ));
        }
        out.push_str(&format!("{:<20}{:>27.2}\n", "Macro-F1", self.macro_f1));
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// One relation scored by two runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub relation: String,
    pub precision: (f64, f64),
    pub recall: (f64, f64),
    pub f1: (f64, f64),
}

impl ComparisonRow {
    /// `(ΔP, ΔR, ΔF1)`, candidate minus baseline.
    pub fn deltas(&self) -> (f64, f64, f64) {
        (
            self.precision.1 - self.precision.0,
            self.recall.1 - self.recall.0,
            self.f1.1 - self.f1.0,
        )
    }
}

/// Per-relation P/R/F1 of a baseline run next to a candidate run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub baseline: String,
    pub candidate: String,
    pub rows: Vec<ComparisonRow>,
    pub macro_f1: (f64, f64),
}

impl Comparison {
    pub fn new(
        baseline_name: &str,
        baseline: &ClassReport,
        candidate_name: &str,
        candidate: &ClassReport,
    ) -> Self {
        let rows = baseline
            .rows
            .iter()
            .zip(&candidate.rows)
            .map(|(a, b)| {
                debug_assert_eq!(a.relation, b.relation);
                ComparisonRow {
                    relation: a.relation.clone(),
                    precision: (a.precision, b.precision),
                    recall: (a.recall, b.recall),
                    f1: (a.f1, b.f1),
                }
            })
            .collect();
        Comparison {
            baseline: baseline_name.to_string(),
            candidate: candidate_name.to_string(),
            rows,
            macro_f1: (baseline.macro_f1, candidate.macro_f1),
        }
    }

    pub fn render(&self) -> String {
        let (a, b) = (&self.baseline, &self.candidate);
        let mut out = format!(
            "{:<20}{:>9}{:>9}{:>8}{:>9}{:>9}{:>8}{:>9}{:>9}{:>8}\n",
            "Relation",
            format!("P {a}"),
            format!("P {b}"),
            "dP",
            format!("R {a}"),
            format!("R {b}"),
            "dR",
            format!("F1 {a}"),
            format!("F1 {b}"),
            "dF1"
        );
        for r in &self.rows {
            let (dp, dr, df) = r.deltas();
            out.push_str(&format!(
                "{:<20}{:>9.2}{:>9.2}{:>+8.2}{:>9.2}{:>9.2}{:>+8.2}{:>9.2}{:>9.2}{:>+8.2}\n",
                r.relation,
                r.precision.0,
                r.precision.1,
                dp,
                r.recall.0,
                r.recall.1,
                dr,
                r.f1.0,
                r.f1.1,
                df
            ));
        }
        out.push_str(&format!(
            "{:<20}{:>68.2}{:>9.2}{:>+8.2}\n",
            "Macro-F1",
            self.macro_f1.0,
            self.macro_f1.1,
            self.macro_f1.1 - self.macro_f1.0
        ));
        out
    }
}
