use std::collections::BTreeMap;
use std::io::Read;

use crate::error::{Error, Result};

/// Spread of one metric of one technique across combinations.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SummaryRow {
    pub technique: String,
    pub metric: String,
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

/// Reads a long-format comparison table and summarizes every
/// (technique, metric) pair. Rows come out sorted by technique, then metric.
pub fn summarize<R: Read>(table: R) -> Result<Vec<SummaryRow>> {
    let mut rdr = csv::Reader::from_reader(table);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            offset: 0,
            message: format!("csv header: {e}"),
        })?
        .clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            offset: 0,
            message: format!("missing column `{name}`"),
        })
    };
    let (ti, mi, vi) = (col("technique")?, col("metric")?, col("value")?);
    let mut groups: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::Parse {
            offset: e.position().map_or(0, |p| p.byte() as usize),
            message: e.to_string(),
        })?;
        let value: f64 = row[vi].parse().map_err(|_| Error::Parse {
            offset: row.position().map_or(0, |p| p.byte() as usize),
            message: format!("bad value `{}`", &row[vi]),
        })?;
        groups
            .entry((row[ti].to_string(), row[mi].to_string()))
            .or_default()
            .push(value);
    }
    Ok(groups
        .into_iter()
        .map(|((technique, metric), mut v)| {
            v.sort_by(f64::total_cmp);
            let n = v.len();
            let median = if n % 2 == 1 {
                v[n / 2]
            } else {
                0.5 * (v[n / 2 - 1] + v[n / 2])
            };
            SummaryRow {
                technique,
                metric,
                count: n,
                mean: v.iter().sum::<f64>() / n as f64,
                median,
                min: v[0],
                max: v[n - 1],
            }
        })
        .collect())
}

/// Fixed-width text rendering of [`summarize`] output.
pub fn format_summary(rows: &[SummaryRow]) -> String {
    let mut out = format!(
        "{:<22} {:<12} {:>5} {:>12} {:>12} {:>12} {:>12}\n",
        "technique", "metric", "n", "mean", "median", "min", "max"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<22} {:<12} {:>5} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}\n",
            r.technique, r.metric, r.count, r.mean, r.median, r.min, r.max
        ));
    }
    out
}
