use std::fmt;

use serde::{Deserialize, Serialize};

use super::formats::{Qrels, RunFile, Topics};
use super::metrics::per_topic_precision;
use super::report::display_label;
use super::ttest::{paired_ttest, TTest, TTestError};

/// Row run versus column run at one cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonCell {
    pub row_tag: String,
    pub col_tag: String,
    pub cutoff: usize,
    /// Share of topics where the row run is strictly better, in percent.
    pub win_pct: f64,
    /// Share of topics where the column run is strictly better, in percent.
    pub loss_pct: f64,
    /// Relative difference of mean precision, in percent; `None` when the
    /// column run's mean is zero.
    pub improvement_pct: Option<f64>,
    pub ttest: TTest,
}

fn round_pct(x: f64) -> i64 {
    x.round() as i64
}

/// Renders `win/loss improvement%`, with a trailing `*` when significant.
pub fn format_cell(win: i64, loss: i64, improvement: Option<i64>, significant: bool) -> String {
    let imp = match improvement {
        Some(i) => format!("{i}%"),
        None => "n/a".to_string(),
    };
    let mark = if significant { "*" } else { "" };
    format!("{win}/{loss} {imp}{mark}")
}

impl fmt::Display for ComparisonCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_cell(
            round_pct(self.win_pct),
            round_pct(self.loss_pct),
            self.improvement_pct.map(round_pct),
            self.ttest.significant,
        ))
    }
}

pub fn compare_runs(
    row: &RunFile,
    col: &RunFile,
    qrels: &Qrels,
    topics: &Topics,
    cutoff: usize,
) -> Result<ComparisonCell, TTestError> {
    let a: Vec<f64> = per_topic_precision(row, qrels, topics, cutoff);
    let b: Vec<f64> = per_topic_precision(col, qrels, topics, cutoff);
    let n = a.len() as f64;
    let wins = a.iter().zip(&b).filter(|(x, y)| x > y).count() as f64;
    let losses = a.iter().zip(&b).filter(|(x, y)| x < y).count() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let improvement_pct = if mean_b == 0.0 {
        None
    } else {
        Some(100.0 * (mean_a - mean_b) / mean_b)
    };
    let ttest = paired_ttest(&a, &b)?;
    Ok(ComparisonCell {
        row_tag: row.run_tag.clone(),
        col_tag: col.run_tag.clone(),
        cutoff,
        win_pct: 100.0 * wins / n,
        loss_pct: 100.0 * losses / n,
        improvement_pct,
        ttest,
    })
}

/// Rows against columns at one cutoff. In triangular form row `i` is only
/// compared with columns before it, mirroring a lower-triangular table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonMatrix {
    pub cutoff: usize,
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub cells: Vec<Vec<Option<ComparisonCell>>>,
}

impl ComparisonMatrix {
    pub fn build(
        rows: &[&RunFile],
        cols: &[&RunFile],
        qrels: &Qrels,
        topics: &Topics,
        cutoff: usize,
        triangular: bool,
    ) -> Result<Self, TTestError> {
        let mut cells = Vec::with_capacity(rows.len());
        for (i, r) in rows.iter().enumerate() {
            let mut line = Vec::with_capacity(cols.len());
            for (j, c) in cols.iter().enumerate() {
                if triangular && j > i {
                    line.push(None);
                } else {
                    line.push(Some(compare_runs(r, c, qrels, topics, cutoff)?));
                }
            }
            cells.push(line);
        }
        Ok(Self {
            cutoff,
            rows: rows.iter().map(|r| r.run_tag.clone()).collect(),
            cols: cols.iter().map(|r| r.run_tag.clone()).collect(),
            cells,
        })
    }

    /// Every run against every earlier run: rows are runs 2..n, columns
    /// runs 1..n-1.
    pub fn pairwise(runs: &[&RunFile], qrels: &Qrels, topics: &Topics, cutoff: usize) -> Result<Self, TTestError> {
        if runs.len() < 2 {
            return Self::build(runs, runs, qrels, topics, cutoff, true);
        }
        Self::build(&runs[1..], &runs[..runs.len() - 1], qrels, topics, cutoff, true)
    }

    pub fn render(&self) -> String {
        let header = format!("p@{}", self.cutoff);
        let mut grid: Vec<Vec<String>> = Vec::new();
        grid.push(
            std::iter::once(header)
                .chain(self.cols.iter().map(|c| display_label(c)))
                .collect(),
        );
        for (r, line) in self.rows.iter().zip(&self.cells) {
            grid.push(
                std::iter::once(display_label(r))
                    .chain(line.iter().map(|c| c.as_ref().map(|c| c.to_string()).unwrap_or_default()))
                    .collect(),
            );
        }
        let ncols = grid[0].len();
        let widths: Vec<usize> = (0..ncols)
            .map(|j| grid.iter().map(|row| row[j].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in grid {
            let cells: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::formats::{parse_qrels, parse_topics, RunEntry};

    #[test]
    fn cell_format_shape() {
        assert_eq!(format_cell(40, 20, Some(18), false), "40/20 18%");
        assert_eq!(format_cell(21, 38, Some(-19), false), "21/38 -19%");
        assert_eq!(format_cell(0, 0, None, false), "0/0 n/a");
        assert_eq!(format_cell(56, 12, Some(47), true), "56/12 47%*");
    }

    fn fixture() -> (RunFile, RunFile, Qrels, Topics) {
        let topics = parse_topics("t1\ta\nt2\tb\nt3\tc\n").unwrap();
        let qrels = parse_qrels("t1\tgood\thigh\nt2\tgood\thigh\nt3\tgood\thigh\n").unwrap();
        let e = |p: &str| vec![RunEntry { person_id: p.into(), score: 1.0 }];
        let mut a = RunFile::new("a");
        a.topics.insert("t1".into(), e("good"));
        a.topics.insert("t2".into(), e("bad"));
        a.topics.insert("t3".into(), e("good"));
        let mut b = RunFile::new("b");
        b.topics.insert("t1".into(), e("bad"));
        b.topics.insert("t2".into(), e("bad"));
        b.topics.insert("t3".into(), e("good"));
        (a, b, qrels, topics)
    }

    #[test]
    fn hand_computed_cell() {
        let (a, b, qrels, topics) = fixture();
        let cell = compare_runs(&a, &b, &qrels, &topics, 1).unwrap();
        assert_eq!(cell.to_string(), "33/0 100%");
        assert!(!cell.ttest.significant);
    }

    #[test]
    fn identical_runs() {
        let (a, _, qrels, topics) = fixture();
        let cell = compare_runs(&a, &a, &qrels, &topics, 1).unwrap();
        assert_eq!(cell.to_string(), "0/0 0%");
        assert_eq!(cell.ttest.p_value, 1.0);
    }

    #[test]
    fn matrix_render() {
        let (a, b, qrels, topics) = fixture();
        let m = ComparisonMatrix::pairwise(&[&b, &a], &qrels, &topics, 1).unwrap();
        let text = m.render();
        assert_eq!(text, "p@1  B\nA    33/0 100%\n");
    }
}
