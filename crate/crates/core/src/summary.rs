//! The per-universe decision table written as `summary.csv`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::enumerate::Universe;
use crate::spec::MultiverseSpec;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionColumn {
    pub name: String,
    pub options: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SummaryRow {
    pub uid: usize,
    /// Option index per column; `None` where the decision is inactive.
    pub choices: Vec<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SummaryTable {
    pub decisions: Vec<DecisionColumn>,
    pub rows: Vec<SummaryRow>,
}

#[derive(Debug, thiserror::Error)]
pub enum SummaryError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("summary header does not match the decisions: {0}")]
    Header(String),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
}

/// Builds the summary table for a set of universes.
pub fn build_summary(spec: &MultiverseSpec, universes: &[Universe]) -> SummaryTable {
    SummaryTable {
        decisions: spec
            .decisions
            .iter()
            .map(|d| DecisionColumn {
                name: d.name.clone(),
                options: d.options.clone(),
            })
            .collect(),
        rows: universes
            .iter()
            .map(|u| SummaryRow {
                uid: u.id,
                choices: u.choices(spec),
            })
            .collect(),
    }
}

impl SummaryTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.decisions.iter().position(|d| d.name == name)
    }

    pub fn row(&self, uid: usize) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.uid == uid)
    }

    pub fn value(&self, row: &SummaryRow, column: usize) -> Option<&str> {
        row.choices[column].map(|i| self.decisions[column].options[i].as_str())
    }

    /// Writes `uid,<decision names...>` followed by one row per universe.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["uid".to_owned()];
        header.extend(self.decisions.iter().map(|d| d.name.clone()));
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.uid.to_string()];
            rec.extend((0..self.decisions.len()).map(|c| self.value(row, c).unwrap_or("").to_owned()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a table written by [`SummaryTable::write_csv`]; option indices are
    /// recovered from the supplied decision columns.
    pub fn read_csv<R: Read>(input: R, decisions: Vec<DecisionColumn>) -> Result<Self, SummaryError> {
        let mut r = csv::Reader::from_reader(input);
        let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
        let expected: Vec<&str> = std::iter::once("uid")
            .chain(decisions.iter().map(|d| d.name.as_str()))
            .collect();
        if header != expected {
            return Err(SummaryError::Header(header.join(",")));
        }
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let bad = |message: String| SummaryError::Row { row: i + 1, message };
            let uid = rec[0]
                .parse()
                .map_err(|_| bad(format!("invalid uid `{}`", &rec[0])))?;
            let mut choices = Vec::with_capacity(decisions.len());
            for (c, d) in decisions.iter().enumerate() {
                let cell = &rec[c + 1];
                choices.push(if cell.is_empty() {
                    None
                } else {
                    Some(
                        d.options
                            .iter()
                            .position(|o| o == cell)
                            .ok_or_else(|| bad(format!("`{cell}` is not an option of `{}`", d.name)))?,
                    )
                });
            }
            rows.push(SummaryRow { uid, choices });
        }
        Ok(SummaryTable { decisions, rows })
    }
}
