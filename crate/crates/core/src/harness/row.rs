use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

pub const CSV_COLUMNS: [&str; 14] = [
    "mode",
    "N",
    "K_bond",
    "h_field",
    "epsilon_abs",
    "phi",
    "observable",
    "value",
    "std_error",
    "theory_paper",
    "theory_errorprop",
    "finite_size_metric",
    "seed",
    "wall_time",
];

/// One CSV record. Optional cells are written empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub mode: String,
    pub n: usize,
    pub k_bond: f64,
    pub h_field: f64,
    pub epsilon_abs: f64,
    pub phi: f64,
    pub observable: String,
    pub value: f64,
    pub std_error: f64,
    pub theory_paper: Option<f64>,
    pub theory_errorprop: Option<f64>,
    pub finite_size_metric: Option<f64>,
    pub seed: u64,
    pub wall_time: f64,
}

impl ExperimentRow {
    /// Every written numeric cell finite; an infinite finite-size metric is left empty.
    pub fn check(&self) -> Result<()> {
        let required = [
            ("K_bond", self.k_bond),
            ("h_field", self.h_field),
            ("epsilon_abs", self.epsilon_abs),
            ("phi", self.phi),
            ("value", self.value),
            ("std_error", self.std_error),
            ("wall_time", self.wall_time),
        ];
        let optional = [("theory_paper", self.theory_paper), ("theory_errorprop", self.theory_errorprop)];
        for (name, v) in required.into_iter().chain(optional.into_iter().filter_map(|(n, v)| v.map(|v| (n, v)))) {
            if !v.is_finite() {
                return Err(Error::Divergence {
                    time: 0.0,
                    detail: format!("{} row `{}` has non-finite {name}", self.mode, self.observable),
                });
            }
        }
        if self.std_error < 0.0 {
            return Err(Error::Fit(format!("negative standard error in `{}`", self.observable)));
        }
        if self.observable.contains([',', '\n', '"']) {
            return Err(Error::InvalidSpec(format!("observable name `{}` is not CSV-safe", self.observable)));
        }
        Ok(())
    }

    pub fn to_csv_line(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut s = String::new();
        let _ = write!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{:.6}",
            self.mode,
            self.n,
            self.k_bond,
            self.h_field,
            self.epsilon_abs,
            self.phi,
            self.observable,
            self.value,
            self.std_error,
            opt(self.theory_paper),
            opt(self.theory_errorprop),
            opt(self.finite_size_metric.filter(|m| m.is_finite())),
            self.seed,
            self.wall_time
        );
        s
    }
}

/// Single writer for the result file: comment header, column line, then rows in order.
pub struct CsvSink<W: Write> {
    out: W,
    rows: usize,
}

impl<W: Write> CsvSink<W> {
    pub fn new(mut out: W, header: &[String]) -> Result<Self> {
        for line in header {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "{}", CSV_COLUMNS.join(","))?;
        Ok(Self { out, rows: 0 })
    }

    pub fn write_row(&mut self, row: &ExperimentRow) -> Result<()> {
        row.check()?;
        writeln!(self.out, "{}", row.to_csv_line())?;
        self.rows += 1;
        Ok(())
    }

    pub fn comment(&mut self, line: &str) -> Result<()> {
        writeln!(self.out, "# {line}")?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row() -> ExperimentRow {
        ExperimentRow {
            mode: "exact".into(),
            n: 8,
            k_bond: 2.0,
            h_field: 0.0,
            epsilon_abs: 0.0,
            phi: 0.0,
            observable: "sum_g".into(),
            value: 5.5,
            std_error: 0.0,
            theory_paper: None,
            theory_errorprop: Some(1.25),
            finite_size_metric: Some(f64::INFINITY),
            seed: 3,
            wall_time: 0.5,
        }
    }

    #[test]
    fn line_layout() {
        let line = row().to_csv_line();
        assert_eq!(line, "exact,8,2,0,0,0,sum_g,5.5,0,,1.25,,3,0.500000");
        assert_eq!(line.split(',').count(), CSV_COLUMNS.len());
    }

    #[test]
    fn rejects_non_finite_cells() {
        let mut r = row();
        r.value = f64::NAN;
        assert!(r.check().is_err());
        let mut r = row();
        r.std_error = -1.0;
        assert!(r.check().is_err());
    }

    #[test]
    fn sink_writes_header_then_rows() {
        let mut sink = CsvSink::new(Vec::new(), &["a".into()]).unwrap();
        sink.write_row(&row()).unwrap();
        let text = String::from_utf8(sink.into_inner()).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "# a");
        assert_eq!(lines[1], CSV_COLUMNS.join(","));
        assert_eq!(lines.len(), 3);
    }
}
