//! `codec,metric,rate_bpp,distortion` curve files. Lines starting with `#` are
//! comments.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Metric, RdCurve, RdPoint};
use crate::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    codec: String,
    metric: String,
    rate_bpp: f64,
    distortion: f64,
}

/// Groups rows by `(codec, metric)` in order of first appearance.
///
/// Curves with invalid points are rejected; curves with fewer than three
/// points are kept so callers can report them.
pub fn read_curves<R: Read>(input: R) -> Result<Vec<RdCurve>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut groups: Vec<(String, Metric, Vec<RdPoint>)> = Vec::new();
    for row in rdr.deserialize::<Row>() {
        let row = row?;
        let metric: Metric = row.metric.parse()?;
        let point = RdPoint {
            rate: row.rate_bpp,
            distortion: row.distortion,
        };
        match groups.iter_mut().find(|(c, m, _)| *c == row.codec && *m == metric) {
            Some(g) => g.2.push(point),
            None => groups.push((row.codec, metric, vec![point])),
        }
    }
    if groups.is_empty() {
        return Err(Error::Empty("curve file has no rows".into()));
    }
    groups
        .into_iter()
        .map(|(codec, metric, points)| RdCurve::new(codec, metric, points))
        .collect()
}

pub fn read_curves_file(path: impl AsRef<Path>) -> Result<Vec<RdCurve>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_curves(std::io::BufReader::new(file))
}

pub fn write_curves<W: Write>(out: W, curves: &[RdCurve]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for c in curves {
        for p in c.points() {
            w.serialize(Row {
                codec: c.codec.clone(),
                metric: c.metric.name().to_string(),
                rate_bpp: p.rate,
                distortion: p.distortion,
            })?;
        }
    }
    if curves.iter().all(|c| c.is_empty()) {
        w.write_record(["codec", "metric", "rate_bpp", "distortion"])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
