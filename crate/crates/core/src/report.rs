//! Report files: `suite.json`, `suite.csv` and `weights/*.csv`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::geometry::DomainKind;
use crate::verify::IdentityReport;

pub const SCHEMA_VERSION: &str = "1";

/// Collar points whose right-hand integrand exceeds this are flagged.
pub const SUP_LIMIT: f64 = 1e8;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("cannot encode {path}: {message}")]
    Encode { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteCell {
    #[serde(flatten)]
    pub identity: IdentityReport,
    /// Largest `|δ^k ω η|` over collar samples.
    pub collar_sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema_version: String,
    pub domain: DomainKind,
    pub seed: u64,
    pub passed: usize,
    pub failed: usize,
    /// Every cell passed and every collar sup stayed below [`SUP_LIMIT`].
    pub all_pass: bool,
    pub cells: Vec<SuiteCell>,
}

impl SuiteReport {
    pub fn new(domain: DomainKind, seed: u64, cells: Vec<SuiteCell>) -> Self {
        let passed = cells.iter().filter(|c| c.identity.pass).count();
        let bounded = cells
            .iter()
            .all(|c| c.collar_sup.is_finite() && c.collar_sup <= SUP_LIMIT);
        SuiteReport {
            schema_version: SCHEMA_VERSION.into(),
            domain,
            seed,
            passed,
            failed: cells.len() - passed,
            all_pass: passed == cells.len() && bounded,
            cells,
        }
    }

    /// The report with timings zeroed, for comparing runs.
    pub fn without_timings(&self) -> Self {
        let mut r = self.clone();
        for c in &mut r.cells {
            c.identity.runtime_seconds = 0.0;
        }
        r
    }
}

/// `re+imi` with shortest round-trip digits.
pub fn format_complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{}{}i", z.re, sign, z.im.abs())
}

pub const CSV_HEADER: [&str; 12] = [
    "domain",
    "k",
    "g",
    "eta",
    "variant",
    "lhs",
    "lhs_source",
    "rhs",
    "rhs_error_estimate",
    "abs_err",
    "rel_err",
    "pass",
];

pub fn csv_row(r: &IdentityReport) -> [String; 12] {
    [
        r.domain.to_string(),
        r.k.to_string(),
        r.g.clone(),
        r.eta.clone(),
        r.variant.as_str().to_string(),
        format_complex(r.lhs),
        r.lhs_source.as_str().to_string(),
        format_complex(r.rhs),
        r.rhs_error_estimate.to_string(),
        r.abs_err.to_string(),
        r.rel_err.to_string(),
        r.pass.to_string(),
    ]
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ReportError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| ReportError::Encode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<(), ReportError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let encode = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(source) => ReportError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => ReportError::Encode {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    };
    let mut w = csv::Writer::from_path(path).map_err(encode)?;
    w.write_record(header).map_err(encode)?;
    for row in rows {
        w.write_record(row).map_err(encode)?;
    }
    w.flush().map_err(io_err(path))
}

/// Writes `suite.json` and `suite.csv` into `dir`, creating it if needed.
pub fn emit_reports(report: &SuiteReport, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let json = dir.join("suite.json");
    write_json(&json, report)?;
    let csv = dir.join("suite.csv");
    write_csv(
        &csv,
        &CSV_HEADER,
        report.cells.iter().map(|c| csv_row(&c.identity)),
    )?;
    Ok(vec![json, csv])
}

/// A value of `δ^k ω` at polar coordinates in the `z₁` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSample {
    pub r: f64,
    pub theta: f64,
    pub value: Complex64,
}

pub fn write_weight_csv(path: &Path, samples: &[WeightSample]) -> Result<(), ReportError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    write_csv(
        path,
        &["r", "theta", "re", "im"],
        samples.iter().map(|s| {
            [
                s.r.to_string(),
                s.theta.to_string(),
                s.value.re.to_string(),
                s.value.im.to_string(),
            ]
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::LhsSource;
    use crate::weights::Variant;

    pub(crate) fn sample_cell() -> SuiteCell {
        SuiteCell {
            identity: IdentityReport {
                domain: DomainKind::Disc,
                k: 2,
                g: "conj_pow:1".into(),
                eta: "sing:1.5".into(),
                variant: Variant::Corrected,
                lhs: Complex64::new(0.75 * std::f64::consts::PI, 0.0),
                lhs_source: LhsSource::ClosedForm,
                lhs_error_estimate: 0.0,
                rhs: Complex64::new(2.356194490192345, -1.0e-17),
                rhs_error_estimate: 1.1e-7,
                abs_err: 1.0e-12,
                rel_err: 4.2e-13,
                tolerance: 1e-4,
                converged: true,
                pass: true,
                runtime_seconds: 0.25,
            },
            collar_sup: 12.5,
        }
    }

    #[test]
    fn complex_formatting() {
        assert_eq!(format_complex(Complex64::new(1.5, -2.0)), "1.5-2i");
        assert_eq!(format_complex(Complex64::new(0.1, 0.0)), "0.1+0i");
        assert_eq!(format_complex(Complex64::new(-1.0, -0.0)), "-1-0i");
    }

    #[test]
    fn empty_report_is_an_empty_array() {
        let dir = tempfile::tempdir().unwrap();
        let r = SuiteReport::new(DomainKind::Disc, 1, vec![]);
        assert!(r.all_pass);
        emit_reports(&r, dir.path()).unwrap();
        let v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("suite.json")).unwrap())
                .unwrap();
        assert_eq!(v["cells"], serde_json::json!([]));
        assert_eq!(v["schema_version"], "1");
        let csv = fs::read_to_string(dir.path().join("suite.csv")).unwrap();
        assert_eq!(csv.lines().count(), 1);
    }

    #[test]
    fn one_cell_gives_one_twelve_column_row() {
        let dir = tempfile::tempdir().unwrap();
        let r = SuiteReport::new(DomainKind::Disc, 1, vec![sample_cell()]);
        emit_reports(&r, dir.path()).unwrap();
        let mut rd = csv::Reader::from_path(dir.path().join("suite.csv")).unwrap();
        let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].len(), 12);
        assert_eq!(rd.headers().unwrap().len(), 12);
        assert_eq!(&rows[0][7], "2.356194490192345-0.00000000000000001i");
    }

    #[test]
    fn json_round_trip_is_exact() {
        let r = SuiteReport::new(DomainKind::Disc, 7, vec![sample_cell()]);
        let text = serde_json::to_string(&r).unwrap();
        let back: SuiteReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(
            back.cells[0].identity.rhs.im.to_bits(),
            r.cells[0].identity.rhs.im.to_bits()
        );
    }

    #[test]
    fn io_errors_surface() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain");
        fs::write(&file, "x").unwrap();
        let r = SuiteReport::new(DomainKind::Disc, 1, vec![]);
        let err = emit_reports(&r, &file.join("sub")).unwrap_err();
        assert!(matches!(err, ReportError::Io { .. }), "{err}");
    }
}
