//! Output records and their CSV/JSON encodings.

use std::io::Write;

use serde::{Deserialize, Serialize};

/// One grid point across all engines. Field order is the column order.
///
/// Cells an engine did not produce, or that are not finite, are `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub alpha: f64,
    pub kappa: f64,
    #[serde(rename = "A_tilde")]
    pub a_tilde: f64,
    pub zeta: u8,
    pub realized_alpha: Option<f64>,
    pub phase: Option<String>,
    pub c0_theory: Option<f64>,
    pub c0_sim: Option<f64>,
    pub c0_sim_err: Option<f64>,
    pub c0_kernel: Option<f64>,
    pub sigma_theory: Option<f64>,
    pub sigma_sim: Option<f64>,
    pub sigma_sim_err: Option<f64>,
    pub sigma_fl_theory: Option<f64>,
    pub lambda_theory: Option<f64>,
    pub lambda_sim: Option<f64>,
    #[serde(rename = "Lambda_theory")]
    pub growth_theory: Option<f64>,
    #[serde(rename = "Lambda_sim")]
    pub growth_sim: Option<f64>,
    pub chi: Option<f64>,
    pub chi_hat_plus: Option<f64>,
    pub chi_hat_minus: Option<f64>,
    pub bid_mean_theory: Option<f64>,
    pub bid_mean_sim: Option<f64>,
    pub bid_staggered_theory: Option<f64>,
    pub bid_staggered_sim: Option<f64>,
    pub n_agents: Option<usize>,
    pub t_equilibrate: Option<usize>,
    pub t_measure: Option<usize>,
    pub seed_count: Option<usize>,
    pub sigma_fl_sim: Option<f64>,
    pub sigma_fl_kernel: Option<f64>,
    pub lambda_kernel: Option<f64>,
    #[serde(rename = "Lambda_kernel")]
    pub growth_kernel: Option<f64>,
    pub bid_mean_kernel: Option<f64>,
    pub bid_staggered_kernel: Option<f64>,
    pub frozen_fraction: Option<f64>,
    pub error: Option<String>,
}

/// Boundary curves at one point of a phase-diagram sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRow {
    pub kappa: f64,
    #[serde(rename = "A_tilde")]
    pub a_tilde: f64,
    pub zeta: u8,
    pub alpha_c1: f64,
    pub alpha_c2: f64,
}

/// `Some(x)` only for finite `x`.
pub fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub fn opt_finite(x: Option<f64>) -> Option<f64> {
    x.and_then(finite)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format '{other}' (csv or json)")),
        }
    }
}

/// Writes `rows` as CSV with a leading `#` comment line, or as a JSON array.
pub fn write_rows<W: Write, R: Serialize>(
    out: W,
    rows: &[R],
    format: Format,
    header_comment: &str,
) -> anyhow::Result<()> {
    match format {
        Format::Csv => {
            let mut out = out;
            writeln!(out, "# {header_comment}")?;
            let mut w = csv::Writer::from_writer(out);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, rows)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Reads back what [`write_rows`] produced.
pub fn read_rows<R: for<'de> Deserialize<'de>>(text: &str, format: Format) -> anyhow::Result<Vec<R>> {
    match format {
        Format::Csv => {
            let body: String = text
                .lines()
                .filter(|l| !l.starts_with('#'))
                .map(|l| format!("{l}\n"))
                .collect();
            let mut r = csv::Reader::from_reader(body.as_bytes());
            Ok(r.deserialize().collect::<Result<_, _>>()?)
        }
        Format::Json => Ok(serde_json::from_str(text)?),
    }
}

/// Column names in output order.
pub fn result_columns() -> Vec<String> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.serialize(ResultRow::default()).expect("in-memory write");
        w.flush().expect("in-memory flush");
    }
    let text = String::from_utf8(buf).expect("utf-8 header");
    text.lines()
        .next()
        .unwrap_or_default()
        .split(',')
        .map(str::to_owned)
        .collect()
}
