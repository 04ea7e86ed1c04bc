//! Range summaries per (size, proportion) cell and sample-size queries.
//!
//! Only OK rows contribute. Replicates of one family are averaged first, then
//! the minimum, maximum and best family are taken over families. The best
//! family is decided on full-precision values; exact ties go to the earlier
//! family in canonical order and set the tie flag.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::gridrunner::{prop_bp, CellResult};
use crate::models::Family;

/// Header of the summary CSV.
pub const SUMMARY_HEADER: [&str; 11] = [
    "n",
    "prop_pos",
    "n_families",
    "f1_min",
    "f1_max",
    "f1_best",
    "f1_tie",
    "auc_min",
    "auc_max",
    "auc_best",
    "auc_tie",
];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("proportion {0} does not occur in the results")]
    UnknownProportion(String),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("summary row {row}: {reason}")]
    BadRow { row: usize, reason: String },
    #[error("summary file is missing column {0:?}")]
    MissingColumn(String),
}

/// Range of one metric over the families of a cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeSummary {
    pub min: f64,
    pub max: f64,
    pub best: Family,
    /// Another family reached exactly the same maximum.
    pub tie: bool,
}

impl RangeSummary {
    /// `"0.87 - 0.91 [LSVC]"`: two decimals, best family in brackets.
    pub fn label(&self) -> String {
        format!("{:.2} - {:.2} [{}]", self.min, self.max, self.best)
    }

    fn from_values(values: &[(Family, f64)]) -> Option<Self> {
        let (&(first_f, first_v), rest) = values.split_first()?;
        let mut s = RangeSummary {
            min: first_v,
            max: first_v,
            best: first_f,
            tie: false,
        };
        for &(f, v) in rest {
            s.min = s.min.min(v);
            if v > s.max {
                s.max = v;
                s.best = f;
                s.tie = false;
            } else if v == s.max {
                s.tie = true;
            }
        }
        Some(s)
    }
}

/// Summary of one (size, proportion) cell. `f1` is `None` when no family
/// finished OK there.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub n: usize,
    pub prop_pos: f64,
    /// Families with an OK row.
    pub n_families: usize,
    pub f1: Option<RangeSummary>,
    pub auc: Option<RangeSummary>,
}

impl CellSummary {
    pub fn is_empty(&self) -> bool {
        self.f1.is_none()
    }
}

/// `0.9` -> `"90/10"`.
pub fn proportion_label(p: f64) -> String {
    let a = (p * 100.0).round() as i64;
    format!("{a}/{}", 100 - a)
}

/// Parses `"90/10"`, `"0.9"` or `"90"` into a class-1 fraction.
pub fn parse_proportion(s: &str) -> Option<f64> {
    let s = s.trim();
    let p = match s.split_once('/') {
        Some((a, b)) => {
            let (a, b): (f64, f64) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
            if a < 0.0 || b < 0.0 || a + b <= 0.0 {
                return None;
            }
            a / (a + b)
        }
        None => {
            let v: f64 = s.parse().ok()?;
            if v > 1.0 {
                v / 100.0
            } else {
                v
            }
        }
    };
    (0.0..=1.0).contains(&p).then_some(p)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// One summary per (n, prop) present in `results`, ordered by `n` then
/// proportion, both descending. Cells without any OK row come back empty.
pub fn summarize_cells(results: &[CellResult]) -> Vec<CellSummary> {
    type Key = (std::cmp::Reverse<usize>, std::cmp::Reverse<u64>);
    let mut cells: BTreeMap<Key, (f64, BTreeMap<Family, (Vec<f64>, Vec<f64>)>)> = BTreeMap::new();
    for r in results {
        let key = (std::cmp::Reverse(r.n), std::cmp::Reverse(prop_bp(r.prop_pos)));
        let entry = cells.entry(key).or_insert_with(|| (r.prop_pos, BTreeMap::new()));
        if !r.status.is_ok() {
            continue;
        }
        let Some(f1) = r.f1_weighted else { continue };
        let fam = entry.1.entry(r.family).or_default();
        fam.0.push(f1);
        if let Some(auc) = r.auc {
            fam.1.push(auc);
        }
    }
    cells
        .into_iter()
        .map(|((std::cmp::Reverse(n), _), (prop_pos, fams))| {
            let f1: Vec<(Family, f64)> = fams.iter().map(|(&f, (v, _))| (f, mean(v))).collect();
            let auc: Vec<(Family, f64)> = fams
                .iter()
                .filter(|(_, (_, a))| !a.is_empty())
                .map(|(&f, (_, a))| (f, mean(a)))
                .collect();
            CellSummary {
                n,
                prop_pos,
                n_families: fams.len(),
                f1: RangeSummary::from_values(&f1),
                auc: RangeSummary::from_values(&auc),
            }
        })
        .collect()
}

/// Answer to a minimum-size query.
#[derive(Debug, Clone, PartialEq)]
pub struct Recommendation {
    pub n: usize,
    pub family: Family,
    pub f1: f64,
}

/// Smallest `n` at `prop_pos` where some family reaches `target_f1`, with the
/// best family there. `Ok(None)` when no size qualifies.
pub fn recommend_min_n(
    results: &[CellResult],
    target_f1: f64,
    prop_pos: f64,
) -> Result<Option<Recommendation>, ReportError> {
    let bp = prop_bp(prop_pos);
    if !results.iter().any(|r| prop_bp(r.prop_pos) == bp) {
        return Err(ReportError::UnknownProportion(proportion_label(prop_pos)));
    }
    let best = summarize_cells(results)
        .into_iter()
        .filter(|s| prop_bp(s.prop_pos) == bp)
        .filter_map(|s| s.f1.map(|f| (s.n, f)))
        .filter(|(_, f)| f.max >= target_f1)
        .min_by_key(|(n, _)| *n)
        .map(|(n, f)| Recommendation {
            n,
            family: f.best,
            f1: f.max,
        });
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Markdown,
}

impl std::str::FromStr for TableFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(TableFormat::Csv),
            "md" | "markdown" => Ok(TableFormat::Markdown),
            other => Err(format!("unknown table format {other:?} (expected csv or md)")),
        }
    }
}

pub fn emit_table(summaries: &[CellSummary], format: TableFormat) -> String {
    match format {
        TableFormat::Csv => emit_csv(summaries),
        TableFormat::Markdown => emit_markdown(summaries),
    }
}

fn emit_csv(summaries: &[CellSummary]) -> String {
    let mut out = SUMMARY_HEADER.join(",");
    out.push('\n');
    let range = |r: &Option<RangeSummary>| match r {
        Some(r) => format!("{},{},{},{}", r.min, r.max, r.best, u8::from(r.tie)),
        None => ",,,".to_string(),
    };
    for s in summaries {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            s.n,
            s.prop_pos,
            s.n_families,
            range(&s.f1),
            range(&s.auc)
        );
    }
    out
}

/// Sizes as rows, proportions as columns; each cell holds the AUC range
/// over the F1 range. A `*` marks a best family tied with another.
fn emit_markdown(summaries: &[CellSummary]) -> String {
    let props: BTreeSet<std::cmp::Reverse<u64>> = summaries
        .iter()
        .map(|s| std::cmp::Reverse(prop_bp(s.prop_pos)))
        .collect();
    let props: Vec<u64> = props.into_iter().map(|r| r.0).collect();
    let mut rows: BTreeMap<std::cmp::Reverse<usize>, BTreeMap<u64, &CellSummary>> = BTreeMap::new();
    for s in summaries {
        rows.entry(std::cmp::Reverse(s.n))
            .or_default()
            .insert(prop_bp(s.prop_pos), s);
    }
    let mut out = String::from("| Sample size |");
    for &p in &props {
        let _ = write!(out, " {} |", proportion_label(p as f64 / 10_000.0));
    }
    out.push_str("\n|---|");
    out.push_str(&"---|".repeat(props.len()));
    out.push('\n');
    let cell_text = |r: &Option<RangeSummary>| match r {
        Some(r) => format!("{}{}", r.label(), if r.tie { "*" } else { "" }),
        None => "n/a".to_string(),
    };
    for (std::cmp::Reverse(n), by_prop) in &rows {
        let _ = write!(out, "| {n} |");
        for p in &props {
            match by_prop.get(p) {
                Some(s) if !s.is_empty() => {
                    let _ = write!(out, " {}<br>{} |", cell_text(&s.auc), cell_text(&s.f1));
                }
                _ => out.push_str(" - |"),
            }
        }
        out.push('\n');
    }
    out
}

/// Parses the CSV produced by [`emit_table`].
pub fn read_summaries(text: &str) -> Result<Vec<CellSummary>, ReportError> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let mut col = [0usize; 11];
    for (k, name) in SUMMARY_HEADER.iter().enumerate() {
        col[k] = headers
            .iter()
            .position(|h| h == *name)
            .ok_or_else(|| ReportError::MissingColumn(name.to_string()))?;
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let get = |k: usize| rec.get(col[k]).unwrap_or("");
        let bad = |what: &str| ReportError::BadRow {
            row,
            reason: format!("cannot parse {what}"),
        };
        let range = |base: usize, what: &str| -> Result<Option<RangeSummary>, ReportError> {
            if get(base).is_empty() {
                return Ok(None);
            }
            Ok(Some(RangeSummary {
                min: get(base).parse().map_err(|_| bad(what))?,
                max: get(base + 1).parse().map_err(|_| bad(what))?,
                best: get(base + 2).parse().map_err(|_| bad(what))?,
                tie: get(base + 3) == "1",
            }))
        };
        out.push(CellSummary {
            n: get(0).parse().map_err(|_| bad("n"))?,
            prop_pos: get(1).parse().map_err(|_| bad("prop_pos"))?,
            n_families: get(2).parse().map_err(|_| bad("n_families"))?,
            f1: range(3, "f1")?,
            auc: range(7, "auc")?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridrunner::CellStatus;

    fn cell(family: Family, n: usize, p: f64, f1: f64, auc: f64) -> CellResult {
        CellResult {
            family,
            n,
            prop_pos: p,
            replicate: 0,
            seed: 0,
            status: CellStatus::Ok,
            f1_weighted: Some(f1),
            ci_lo: Some(f1 - 0.05),
            ci_hi: Some(f1 + 0.05),
            auc: Some(auc),
            n_train: 0,
            n_test: 0,
            ms: None,
        }
    }

    #[test]
    fn single_family_range_is_a_point() {
        let s = summarize_cells(&[cell(Family::KNN, 200, 0.5, 0.61, 0.7)]);
        let f1 = s[0].f1.as_ref().unwrap();
        assert_eq!((f1.min, f1.max, f1.best, f1.tie), (0.61, 0.61, Family::KNN, false));
    }

    #[test]
    fn ties_go_to_canonical_order() {
        let s = summarize_cells(&[
            cell(Family::SVC, 200, 0.5, 0.8, 0.7),
            cell(Family::LR, 200, 0.5, 0.8, 0.9),
            cell(Family::NB, 200, 0.5, 0.5, 0.6),
        ]);
        let f1 = s[0].f1.as_ref().unwrap();
        assert_eq!(f1.best, Family::LR);
        assert!(f1.tie);
        assert_eq!(f1.label(), "0.50 - 0.80 [LR]");
        assert_eq!(s[0].auc.as_ref().unwrap().best, Family::LR);
    }

    #[test]
    fn non_ok_rows_are_ignored() {
        let mut bad = cell(Family::LR, 200, 0.99, 0.99, 0.99);
        bad.status = CellStatus::Degenerate;
        let s = summarize_cells(&[bad]);
        assert!(s[0].is_empty());
        assert_eq!(emit_table(&s, TableFormat::Markdown).lines().nth(2), Some("| 200 | - |"));
    }

    #[test]
    fn proportion_parsing() {
        assert_eq!(parse_proportion("90/10"), Some(0.9));
        assert_eq!(parse_proportion("0.5"), Some(0.5));
        assert_eq!(parse_proportion("70"), Some(0.7));
        assert_eq!(parse_proportion("x/y"), None);
        assert_eq!(proportion_label(0.6), "60/40");
    }

    #[test]
    fn empty_input_emits_header_only() {
        assert_eq!(emit_table(&[], TableFormat::Csv), format!("{}\n", SUMMARY_HEADER.join(",")));
        assert_eq!(emit_table(&[], TableFormat::Markdown), "| Sample size |\n|---|\n");
    }

    #[test]
    fn recommend_basic() {
        let r = vec![
            cell(Family::LR, 1000, 0.5, 0.8, 0.9),
            cell(Family::NB, 500, 0.5, 0.7, 0.8),
            cell(Family::LR, 200, 0.5, 0.6, 0.7),
        ];
        let rec = recommend_min_n(&r, 0.7, 0.5).unwrap().unwrap();
        assert_eq!((rec.n, rec.family), (500, Family::NB));
        assert_eq!(recommend_min_n(&r, 0.0, 0.5).unwrap().unwrap().n, 200);
        assert_eq!(recommend_min_n(&r, 0.95, 0.5).unwrap(), None);
        assert!(recommend_min_n(&r, 0.7, 0.9).is_err());
    }
}
