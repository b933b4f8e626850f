//! Monitor time series as CSV.
//!
//! Columns are `t`, then `s` when any record carries the unnormalized clock,
//! then [`COLUMNS`]. Values use 17 significant digits so every `f64`
//! round-trips; undefined cells are empty.

use crate::estimates::{MonitorRecord, COLUMNS};
use crate::{Error, Result};

/// Parsed CSV: a header and rows of optional values.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_records(records: &[MonitorRecord]) -> String {
    let with_s = records.iter().any(|r| r.s.is_some());
    let mut out = String::from("t");
    if with_s {
        out.push_str(",s");
    }
    for c in COLUMNS {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    let cell = |v: Option<f64>| v.map(format_value).unwrap_or_default();
    for r in records {
        out.push_str(&format_value(r.t));
        if with_s {
            out.push(',');
            out.push_str(&cell(r.s));
        }
        for v in r.values() {
            out.push(',');
            out.push_str(&cell(v));
        }
        out.push('\n');
    }
    out
}

impl Series {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Series("no header row".into()))?;
        let columns: Vec<String> = header.split(',').map(|c| c.trim().to_string()).collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != columns.len() {
                return Err(Error::Series(format!("row {} has {} cells, header has {}", i + 1, cells.len(), columns.len())));
            }
            let row = cells
                .iter()
                .map(|c| match c.trim() {
                    "" => Ok(None),
                    c => c.parse::<f64>().map(Some).map_err(|_| Error::Series(format!("row {}: bad number {c:?}", i + 1))),
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(Self { columns, rows })
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let i = self.index(name).ok_or_else(|| Error::Series(format!("no column {name:?}")))?;
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Rebuilds monitor records from a series written by [`write_records`].
    pub fn records(&self) -> Result<Vec<MonitorRecord>> {
        let t = self.column("t")?;
        let s = self.index("s").map(|i| self.rows.iter().map(|r| r[i]).collect::<Vec<_>>());
        let cols = COLUMNS.iter().map(|c| self.column(c)).collect::<Result<Vec<_>>>()?;
        (0..self.rows.len())
            .map(|i| {
                let mut v = [None; 18];
                for (slot, col) in v.iter_mut().zip(&cols) {
                    *slot = col[i];
                }
                let t = t[i].ok_or_else(|| Error::Series(format!("row {} has no t", i + 1)))?;
                let s = s.as_ref().and_then(|s| s[i]);
                MonitorRecord::from_values(t, s, &v).ok_or_else(|| Error::Series(format!("row {} misses a required column", i + 1)))
            })
            .collect()
    }

    /// `(s, max(|r_sup|, |r_inf|))` pairs of an unnormalized series.
    pub fn curvature_decay(&self) -> Result<Vec<(f64, f64)>> {
        if self.index("s").is_none() {
            return Err(Error::Series("series has no s column; write it in the unnormalized frame".into()));
        }
        let (s, hi, lo) = (self.column("s")?, self.column("r_sup")?, self.column("r_inf")?);
        Ok((0..self.rows.len())
            .filter_map(|i| Some((s[i]?, hi[i]?.abs().max(lo[i]?.abs()))))
            .collect())
    }
}
