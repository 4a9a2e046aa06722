//! BD results of several test codecs against one anchor, per metric.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{bd, BdOptions, BdResult, Metric, RdCurve};
use crate::{Error, Result};

/// Ranking of a cell within its column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mark {
    #[default]
    None,
    Best,
    Second,
}

impl Mark {
    fn suffix(self) -> &'static str {
        match self {
            Mark::None => "",
            Mark::Best => "*",
            Mark::Second => "+",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BdCell {
    pub metric: Metric,
    pub result: Option<BdResult>,
    /// Why the cell is unavailable.
    pub error: Option<String>,
    pub rate_mark: Mark,
    pub distortion_mark: Mark,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BdRow {
    pub codec: String,
    pub cells: Vec<BdCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BdTable {
    pub anchor: String,
    pub metrics: Vec<Metric>,
    pub options: BdOptions,
    pub rows: Vec<BdRow>,
}

/// Computes every `(test codec, metric)` cell against the anchor curves.
///
/// Failed cells are kept as unavailable. Within each column the lowest
/// BD-rate and the highest BD-distortion are marked best, the runner-up second.
pub fn bd_table(anchors: &[RdCurve], tests: &[RdCurve], metrics: &[Metric], options: BdOptions) -> Result<BdTable> {
    let anchor = anchors
        .first()
        .ok_or_else(|| Error::Empty("no anchor curve".into()))?
        .codec
        .clone();
    if metrics.is_empty() {
        return Err(Error::Empty("no metrics requested".into()));
    }
    let mut codecs: Vec<&str> = Vec::new();
    for t in tests {
        if !codecs.contains(&t.codec.as_str()) {
            codecs.push(&t.codec);
        }
    }
    if codecs.is_empty() {
        return Err(Error::Empty("no test curves".into()));
    }
    let mut rows: Vec<BdRow> = codecs
        .iter()
        .map(|&codec| BdRow {
            codec: codec.to_string(),
            cells: metrics
                .iter()
                .map(|&metric| {
                    let a = anchors.iter().find(|c| c.metric == metric);
                    let t = tests.iter().find(|c| c.codec == codec && c.metric == metric);
                    let outcome = match (a, t) {
                        (None, _) => Err(format!("no {metric} anchor curve")),
                        (_, None) => Err(format!("no {metric} curve")),
                        (Some(a), Some(t)) => bd(a, t, options).map_err(|e| e.to_string()),
                    };
                    let (result, error) = match outcome {
                        Ok(r) => (Some(r), None),
                        Err(e) => (None, Some(e)),
                    };
                    BdCell {
                        metric,
                        result,
                        error,
                        rate_mark: Mark::None,
                        distortion_mark: Mark::None,
                    }
                })
                .collect(),
        })
        .collect();

    for col in 0..metrics.len() {
        mark_column(&mut rows, col, |r| -r.bd_rate_percent, |c, m| c.rate_mark = m);
        mark_column(&mut rows, col, |r| r.bd_distortion, |c, m| c.distortion_mark = m);
    }
    Ok(BdTable {
        anchor,
        metrics: metrics.to_vec(),
        options,
        rows,
    })
}

/// Marks the highest and second-highest `score` in one column.
fn mark_column(rows: &mut [BdRow], col: usize, score: impl Fn(&BdResult) -> f64, set: impl Fn(&mut BdCell, Mark)) {
    let mut ranked: Vec<(usize, f64)> = rows
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.cells[col].result.as_ref().map(|res| (i, score(res))))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    for (k, mark) in [Mark::Best, Mark::Second].into_iter().enumerate() {
        if let Some(&(i, _)) = ranked.get(k) {
            set(&mut rows[i].cells[col], mark);
        }
    }
}

/// Placeholder for unavailable cells.
pub const UNAVAILABLE: &str = "--";

impl BdTable {
    pub fn cell(&self, codec: &str, metric: Metric) -> Option<&BdCell> {
        let col = self.metrics.iter().position(|&m| m == metric)?;
        self.rows.iter().find(|r| r.codec == codec).map(|r| &r.cells[col])
    }

    /// Fixed-width text; `*` marks the best value per column, `+` the second.
    pub fn to_text(&self) -> String {
        let mut header = vec!["codec".to_string()];
        for m in &self.metrics {
            header.push(format!("{m} BD-BR (%)"));
            header.push(format!("{m} BD-D"));
        }
        let mut lines = vec![header];
        for r in &self.rows {
            let mut line = vec![r.codec.clone()];
            for c in &r.cells {
                match &c.result {
                    Some(res) => {
                        line.push(format!("{:.2}{}", res.bd_rate_percent, c.rate_mark.suffix()));
                        line.push(format!("{:.4}{}", res.bd_distortion, c.distortion_mark.suffix()));
                    }
                    None => {
                        line.push(UNAVAILABLE.into());
                        line.push(UNAVAILABLE.into());
                    }
                }
            }
            lines.push(line);
        }
        let widths: Vec<usize> = (0..lines[0].len())
            .map(|k| lines.iter().map(|l| l[k].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = format!(
            "anchor: {}  interpolation: {}  transform: {}\n",
            self.anchor,
            self.options.interpolation.name(),
            self.options.transform.name()
        );
        for l in &lines {
            let cells: Vec<String> = l
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(k, (s, &w))| if k == 0 { format!("{s:<w$}") } else { format!("{s:>w$}") })
                .collect();
            let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        }
        out.push_str("* best, + second best, -- unavailable\n");
        out
    }

    /// One row per cell: `codec,metric,bd_rate_percent,bd_distortion,rate_mark,distortion_mark,method,note`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "codec",
            "metric",
            "bd_rate_percent",
            "bd_distortion",
            "rate_mark",
            "distortion_mark",
            "method",
            "note",
        ])?;
        let mark = |m: Mark| match m {
            Mark::None => "",
            Mark::Best => "best",
            Mark::Second => "second",
        };
        for r in &self.rows {
            for c in &r.cells {
                let (rate, dist, method) = match &c.result {
                    Some(res) => (
                        format!("{:.6}", res.bd_rate_percent),
                        format!("{:.6}", res.bd_distortion),
                        res.method.clone(),
                    ),
                    None => (UNAVAILABLE.into(), UNAVAILABLE.into(), String::new()),
                };
                w.write_record([
                    r.codec.as_str(),
                    c.metric.name(),
                    &rate,
                    &dist,
                    mark(c.rate_mark),
                    mark(c.distortion_mark),
                    &method,
                    c.error.as_deref().unwrap_or(""),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}
