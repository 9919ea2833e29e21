//! Result emission. Rows are written in the order given, fields in
//! declaration order, so identical inputs give identical bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    /// `.json` means JSON, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => OutputFormat::Json,
            _ => OutputFormat::Csv,
        }
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::arg(format!("unknown output format {other:?}"))),
        }
    }
}

pub fn write_results<T: Serialize, W: Write>(rows: &[T], out: W, format: OutputFormat) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for row in rows {
                w.serialize(row).map_err(crate::oracle::csv_err)?;
            }
            w.flush().map_err(|e| Error::Format(e.to_string()))
        }
        OutputFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, rows).map_err(|e| Error::Format(e.to_string()))?;
            out.write_all(b"\n").map_err(|e| Error::Format(e.to_string()))
        }
    }
}

/// Writes `rows` to `path`, replacing any existing file.
pub fn emit_results<T: Serialize>(rows: &[T], path: &Path, format: OutputFormat) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut buf = BufWriter::new(file);
    write_results(rows, &mut buf, format).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    buf.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::stats::{CellLabel, SummaryStats, TrialOutcome};

    fn row() -> SummaryStats {
        let label = CellLabel {
            k: 4,
            d: 8,
            lipschitz: 1.0,
            radius: 1.0,
            algo: "random-search".into(),
            budget: 4,
            seed: 9,
        };
        let o = TrialOutcome {
            first_success_value: Some(2),
            first_success_cert: None,
            e_holds: true,
            g_all: true,
            lemma1_counterexample: false,
            lemma2_counterexample: false,
            diagnostic_flags: 0,
            chain_violations: 0,
            final_output_value: -0.1,
        };
        SummaryStats::from_outcomes(label, &[o])
    }

    #[test]
    fn csv_leads_with_the_summary_columns() {
        let mut out = Vec::new();
        write_results(&[row()], &mut out, OutputFormat::Csv).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with(
            "k,d,L,B,algo,trials,budget,success_frac_value,success_frac_cert,P_E_hat,P_E_bound,seed,"
        ));
        assert!(text.lines().nth(1).unwrap().starts_with("4,8,1.0,1.0,random-search,1,4,1.0,0.0,1.0,"));
    }

    #[test]
    fn json_is_an_array_of_objects() {
        let mut out = Vec::new();
        write_results(&[row(), row()], &mut out, OutputFormat::Json).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
        assert_eq!(v.as_array().unwrap().len(), 2);
        assert_eq!(v[0]["P_E_hat"], 1.0);
    }

    #[test]
    fn io_errors_name_the_path() {
        let err = emit_results(&[row()], Path::new("/nonexistent-dir/x.csv"), OutputFormat::Csv)
            .unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x.csv"));
    }
}
