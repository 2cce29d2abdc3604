//! Per-update convergence records and their CSV serialization.
//!
//! One row per inner update, plus an initial row for the starting image.
//! Columns: `epoch,inner,rho,restarted,objective,rmsd,seconds`. Floats are
//! written with Rust's shortest round-trip formatting, so a write/read
//! cycle reproduces values bitwise.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct LogRow {
    pub epoch: usize,
    pub inner: usize,
    pub rho: f64,
    pub restarted: bool,
    pub objective: f64,
    pub rmsd: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceLog {
    rows: Vec<LogRow>,
}

pub const CSV_HEADER: &str = "epoch,inner,rho,restarted,objective,rmsd,seconds";

impl ConvergenceLog {
    pub fn new() -> Self {
        ConvergenceLog { rows: Vec::new() }
    }

    pub fn push(&mut self, row: LogRow) {
        if let Some(last) = self.rows.last() {
            debug_assert!(row.seconds >= last.seconds, "time column must be monotone");
        }
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[LogRow] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// RMS-difference samples at epoch boundaries: the initial row plus the
    /// last inner update of each epoch. Index `k` is the value after `k`
    /// epochs.
    pub fn end_of_epoch_rmsd(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            let last_of_epoch = self
                .rows
                .get(i + 1)
                .map(|next| next.epoch != row.epoch)
                .unwrap_or(true);
            if last_of_epoch {
                out.push(row.rmsd);
            }
        }
        out
    }

    /// Sequential update numbers (0-based over non-initial rows) at which a
    /// restart fired.
    pub fn restart_updates(&self) -> Vec<usize> {
        self.rows
            .iter()
            .skip(1)
            .enumerate()
            .filter(|(_, r)| r.restarted)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.epoch,
                r.inner,
                r.rho,
                if r.restarted { 1 } else { 0 },
                r.objective,
                r.rmsd,
                r.seconds
            ));
        }
        s
    }

    pub fn from_csv_str(content: &str) -> Result<Self> {
        let mut lines = content.lines();
        match lines.next() {
            Some(h) if h.trim() == CSV_HEADER => {}
            _ => {
                return Err(Error::MalformedFile {
                    path: "<csv>".into(),
                    reason: format!("expected header '{CSV_HEADER}'"),
                })
            }
        }
        let mut log = ConvergenceLog::new();
        for (ln, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 7 {
                return Err(Error::MalformedFile {
                    path: "<csv>".into(),
                    reason: format!("line {}: expected 7 fields", ln + 2),
                });
            }
            let parse_err = |what: &str| Error::MalformedFile {
                path: "<csv>".into(),
                reason: format!("line {}: bad {what}", ln + 2),
            };
            log.rows.push(LogRow {
                epoch: fields[0].parse().map_err(|_| parse_err("epoch"))?,
                inner: fields[1].parse().map_err(|_| parse_err("inner"))?,
                rho: fields[2].parse().map_err(|_| parse_err("rho"))?,
                restarted: match fields[3] {
                    "0" => false,
                    "1" => true,
                    _ => return Err(parse_err("restarted")),
                },
                objective: fields[4].parse().map_err(|_| parse_err("objective"))?,
                rmsd: fields[5].parse().map_err(|_| parse_err("rmsd"))?,
                seconds: fields[6].parse().map_err(|_| parse_err("seconds"))?,
            });
        }
        Ok(log)
    }
}
