//! Run configuration in TOML.
//!
//! ```toml
//! domain = "disc"
//! seed = 1
//!
//! [collar]
//! inner = 0.05
//! outer = 0.15
//!
//! [suite]
//! k = [1, 2, 3]
//! g = ["one", "conj_pow:1"]
//! eta = ["const", "sing:1.5"]
//! variant = ["corrected"]
//!
//! [quadrature]
//! max_subdiv = 4000
//!
//! [tolerance]
//! smooth = 1e-8
//! ```
//!
//! Every key is optional. Unknown keys are rejected, and errors name the
//! key path.

use std::path::PathBuf;

use serde::Deserialize;

use crate::catalog::{GKind, HoloTestFunction};
use crate::geometry::{DomainKind, DEFAULT_COLLAR_INNER, DEFAULT_COLLAR_OUTER};
use crate::quadrature::QuadratureConfig;
use crate::verify::{CellSpec, Harness, Tolerances, VerifyError};
use crate::weights::Variant;

/// Largest supported order.
pub const MAX_K: u32 = 4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("config error at `{path}`: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    domain: Option<String>,
    seed: Option<u64>,
    #[serde(default)]
    collar: RawCollar,
    #[serde(default)]
    suite: RawSuite,
    #[serde(default)]
    quadrature: RawQuadrature,
    #[serde(default)]
    tolerance: RawTolerance,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCollar {
    inner: Option<f64>,
    outer: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSuite {
    k: Option<Vec<u32>>,
    g: Option<Vec<String>>,
    eta: Option<Vec<String>>,
    variant: Option<Vec<String>>,
    collar_samples: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQuadrature {
    tol_rel: Option<f64>,
    tol_abs: Option<f64>,
    max_subdiv: Option<usize>,
    base_rule: Option<usize>,
    grading: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerance {
    smooth: Option<f64>,
    singular: Option<f64>,
    ball: Option<f64>,
    abs: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    weights: Option<bool>,
}

/// Quadrature settings of a run. Tolerances left unset follow the pass
/// tolerance of each cell.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSettings {
    pub tol_rel: Option<f64>,
    pub tol_abs: Option<f64>,
    pub max_subdivisions: usize,
    pub base_rule: usize,
    pub grading: f64,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        let q = QuadratureConfig::default();
        QuadratureSettings {
            tol_rel: None,
            tol_abs: None,
            max_subdivisions: q.max_subdivisions,
            base_rule: q.base_rule,
            grading: q.grading,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub domain: DomainKind,
    pub seed: u64,
    pub collar_inner: f64,
    pub collar_outer: f64,
    pub k: Vec<u32>,
    pub g: Vec<GKind>,
    pub eta: Vec<HoloTestFunction>,
    pub variants: Vec<Variant>,
    /// Collar points for the sup of the right-hand integrand.
    pub collar_samples: usize,
    pub quadrature: QuadratureSettings,
    pub tolerances: Tolerances,
    pub output_dir: Option<PathBuf>,
    pub dump_weights: bool,
}

impl RunConfig {
    /// The default matrix for a domain.
    pub fn defaults(domain: DomainKind) -> Self {
        let (k, g, eta): (Vec<u32>, Vec<&str>, Vec<&str>) = match domain {
            DomainKind::Disc => (
                vec![1, 2, 3],
                vec!["one", "conj_pow:1", "conj_pow:2", "exp_x1"],
                vec![
                    "const", "pow:1", "pow:2", "pow:3", "exp", "rat2", "sing:1.5", "sing:1.9",
                ],
            ),
            DomainKind::Ball => (vec![1], vec!["one"], vec!["const", "mono:2,0", "mono:1,1"]),
        };
        RunConfig {
            domain,
            seed: 1,
            collar_inner: DEFAULT_COLLAR_INNER,
            collar_outer: DEFAULT_COLLAR_OUTER,
            k,
            g: g.iter().map(|s| s.parse().expect("catalog id")).collect(),
            eta: eta
                .iter()
                .map(|s| HoloTestFunction::parse(s, domain).expect("catalog id"))
                .collect(),
            variants: vec![Variant::Corrected],
            collar_samples: 200,
            quadrature: QuadratureSettings::default(),
            tolerances: Tolerances::default(),
            output_dir: None,
            dump_weights: false,
        }
    }

    /// Cells in configured order: k, then g, then η, then variant.
    pub fn cells(&self) -> Vec<CellSpec> {
        let mut cells = Vec::new();
        for &k in &self.k {
            for &g in &self.g {
                for eta in &self.eta {
                    for &variant in &self.variants {
                        cells.push(CellSpec {
                            k,
                            g,
                            eta: eta.clone(),
                            variant,
                        });
                    }
                }
            }
        }
        cells
    }

    pub fn quadrature_config(&self) -> QuadratureConfig {
        let q = &self.quadrature;
        let base = QuadratureConfig::default();
        QuadratureConfig {
            rel_tol: q.tol_rel.unwrap_or(base.rel_tol),
            abs_tol: q.tol_abs.unwrap_or(base.abs_tol),
            max_subdivisions: q.max_subdivisions,
            base_rule: q.base_rule,
            grading: q.grading,
            ..base
        }
    }

    pub fn harness(&self) -> Result<Harness, VerifyError> {
        let overridden = self.quadrature.tol_rel.is_some() || self.quadrature.tol_abs.is_some();
        Ok(
            Harness::new(self.domain, self.collar_inner, self.collar_outer)?
                .with_quadrature(self.quadrature_config(), overridden)
                .with_tolerances(self.tolerances),
        )
    }
}

fn positive(path: &str, x: f64) -> Result<f64, ConfigError> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(ConfigError::new(
            path,
            format!("must be positive and finite, got {x}"),
        ))
    }
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::new("", e.to_string()))?;
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::new(path, e.into_inner().to_string().trim_end())
    })?;
    resolve(raw)
}

fn resolve(raw: RawConfig) -> Result<RunConfig, ConfigError> {
    let domain = match &raw.domain {
        Some(d) => d
            .parse::<DomainKind>()
            .map_err(|e| ConfigError::new("domain", e.to_string()))?,
        None => DomainKind::Disc,
    };
    let mut cfg = RunConfig::defaults(domain);
    if let Some(seed) = raw.seed {
        cfg.seed = seed;
    }

    if let Some(x) = raw.collar.inner {
        cfg.collar_inner = positive("collar.inner", x)?;
    }
    if let Some(x) = raw.collar.outer {
        cfg.collar_outer = positive("collar.outer", x)?;
    }
    if !(cfg.collar_inner < cfg.collar_outer && cfg.collar_outer < 0.5) {
        return Err(ConfigError::new(
            "collar",
            format!(
                "need inner < outer < 0.5, got inner = {}, outer = {}",
                cfg.collar_inner, cfg.collar_outer
            ),
        ));
    }

    let s = raw.suite;
    if let Some(ks) = s.k {
        for (i, &k) in ks.iter().enumerate() {
            if !(1..=MAX_K).contains(&k) {
                return Err(ConfigError::new(
                    format!("suite.k[{i}]"),
                    format!("order {k} outside 1..={MAX_K}"),
                ));
            }
        }
        cfg.k = ks;
    }
    if let Some(gs) = s.g {
        cfg.g = gs
            .iter()
            .enumerate()
            .map(|(i, id)| {
                id.parse::<GKind>()
                    .map_err(|e| ConfigError::new(format!("suite.g[{i}]"), e.to_string()))
            })
            .collect::<Result<_, _>>()?;
    }
    if let Some(etas) = s.eta {
        cfg.eta = etas
            .iter()
            .enumerate()
            .map(|(i, id)| {
                let path = format!("suite.eta[{i}]");
                let eta = HoloTestFunction::parse(id, domain)
                    .map_err(|e| ConfigError::new(path.clone(), e.to_string()))?;
                if !eta.l1 {
                    return Err(ConfigError::new(
                        path,
                        format!("eta '{id}' is not integrable"),
                    ));
                }
                Ok(eta)
            })
            .collect::<Result<_, _>>()?;
    }
    if let Some(vs) = s.variant {
        cfg.variants = vs
            .iter()
            .enumerate()
            .map(|(i, id)| {
                id.parse::<Variant>()
                    .map_err(|e| ConfigError::new(format!("suite.variant[{i}]"), e.to_string()))
            })
            .collect::<Result<_, _>>()?;
    }
    if let Some(n) = s.collar_samples {
        if n == 0 {
            return Err(ConfigError::new("suite.collar_samples", "must be positive"));
        }
        cfg.collar_samples = n;
    }

    let q = raw.quadrature;
    if let Some(x) = q.tol_rel {
        cfg.quadrature.tol_rel = Some(positive("quadrature.tol_rel", x)?);
    }
    if let Some(x) = q.tol_abs {
        cfg.quadrature.tol_abs = Some(positive("quadrature.tol_abs", x)?);
    }
    if let Some(n) = q.max_subdiv {
        cfg.quadrature.max_subdivisions = n;
    }
    if let Some(n) = q.base_rule {
        cfg.quadrature.base_rule = n;
    }
    if let Some(x) = q.grading {
        cfg.quadrature.grading = x;
    }
    cfg.quadrature_config()
        .validate()
        .map_err(|e| ConfigError::new("quadrature", e.to_string()))?;

    let t = raw.tolerance;
    if let Some(x) = t.smooth {
        cfg.tolerances.smooth = positive("tolerance.smooth", x)?;
    }
    if let Some(x) = t.singular {
        cfg.tolerances.singular = positive("tolerance.singular", x)?;
    }
    if let Some(x) = t.ball {
        cfg.tolerances.ball = positive("tolerance.ball", x)?;
    }
    if let Some(x) = t.abs {
        cfg.tolerances.abs = Some(positive("tolerance.abs", x)?);
    }

    cfg.output_dir = raw.output.dir;
    cfg.dump_weights = raw.output.weights.unwrap_or(false);
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_the_default_disc_suite() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, RunConfig::defaults(DomainKind::Disc));
        assert_eq!(cfg.cells().len(), 3 * 4 * 8);
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config("domain = \"ball\"\n").unwrap();
        assert_eq!(cfg.domain, DomainKind::Ball);
        assert_eq!(cfg.collar_inner, DEFAULT_COLLAR_INNER);
        assert_eq!(cfg.tolerances, Tolerances::default());
        assert_eq!(cfg.k, vec![1]);
    }

    #[test]
    fn unknown_eta_names_id_and_path() {
        let err = parse_config("[suite]\neta = [\"const\", \"bogus:3\"]\n").unwrap_err();
        assert_eq!(err.path, "suite.eta[1]");
        assert!(err.to_string().contains("bogus:3"), "{err}");
    }

    #[test]
    fn negative_tolerance_is_rejected() {
        let err = parse_config("[tolerance]\nsmooth = -1e-8\n").unwrap_err();
        assert_eq!(err.path, "tolerance.smooth");
    }

    #[test]
    fn unknown_key_is_rejected_with_path() {
        let err = parse_config("[quadrature]\ntol = 1e-3\n").unwrap_err();
        assert_eq!(err.path, "quadrature.tol");
        assert!(err.message.contains("tol"), "{err}");
        let err = parse_config("[suite]\nk = [\"one\"]\n").unwrap_err();
        assert_eq!(err.path, "suite.k[0]");
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = parse_config("seed = 1\n[suite\n").unwrap_err();
        assert!(err.message.contains("line 2"), "{err}");
    }

    #[test]
    fn empty_matrix_is_valid() {
        let cfg = parse_config("[suite]\nk = []\n").unwrap();
        assert!(cfg.cells().is_empty());
    }

    #[test]
    fn non_integrable_eta_and_bad_order_are_rejected() {
        assert_eq!(
            parse_config("[suite]\neta = [\"sing:2.5\"]\n")
                .unwrap_err()
                .path,
            "suite.eta[0]"
        );
        assert_eq!(
            parse_config("[suite]\nk = [5]\n").unwrap_err().path,
            "suite.k[0]"
        );
    }
}
