//! `holoweight` command-line driver.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use holoweight::bergman::{smoothing_check, DiscBergmanBasis, DEFAULT_MAX_MODE};
use holoweight::catalog::GKind;
use holoweight::config::{parse_config, RunConfig};
use holoweight::field::sexpr;
use holoweight::geometry::{DomainKind, DEFAULT_COLLAR_INNER, DEFAULT_COLLAR_OUTER};
use holoweight::report::{emit_reports, format_complex, write_json, write_weight_csv};
use holoweight::selftest::{self_test, SelfTestOptions};
use holoweight::verify::{run_suite, Harness, Tolerances};
use holoweight::weights::Variant;

const OUT_ENV: &str = "HOLOWEIGHT_OUT_DIR";
const DEFAULT_OUT: &str = "holoweight-out";

#[derive(Parser)]
#[command(
    name = "holoweight",
    version,
    about = "Boundary-vanishing weights for holomorphic integrals"
)]
struct Cli {
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Tol {
    /// Relative pass tolerance, replacing the per-class defaults.
    #[arg(long)]
    tol_rel: Option<f64>,
    /// Absolute pass tolerance for cells whose left side vanishes.
    #[arg(long)]
    tol_abs: Option<f64>,
    /// Subdivision budget of the adaptive cubature.
    #[arg(long)]
    max_subdiv: Option<usize>,
}

impl Tol {
    fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        if let Some(t) = self.tol_rel {
            check_positive("--tol-rel", t)?;
            cfg.tolerances = Tolerances {
                smooth: t,
                singular: t,
                ball: t,
                abs: cfg.tolerances.abs,
            };
        }
        if let Some(t) = self.tol_abs {
            check_positive("--tol-abs", t)?;
            cfg.tolerances.abs = Some(t);
        }
        if let Some(n) = self.max_subdiv {
            if n == 0 {
                bail!("--max-subdiv must be at least 1");
            }
            cfg.quadrature.max_subdivisions = n;
        }
        Ok(())
    }
}

fn check_positive(flag: &str, x: f64) -> Result<()> {
    if !(x.is_finite() && x > 0.0) {
        bail!("{flag} must be positive and finite, got {x}");
    }
    Ok(())
}

#[derive(Subcommand)]
enum Command {
    /// Checks the identity for one (k, g, η) cell.
    Verify {
        #[arg(long, default_value = "disc")]
        domain: DomainKind,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        g: String,
        #[arg(long)]
        eta: String,
        #[arg(long, default_value = "corrected")]
        variant: Variant,
        #[command(flatten)]
        tol: Tol,
        /// Writes the cell report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Runs a matrix of cells and writes suite.json and suite.csv.
    Suite {
        /// TOML run description; the disc defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory; falls back to $HOLOWEIGHT_OUT_DIR, then the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        tol: Tol,
    },
    /// Samples δ^k ω on a polar grid of the z₁ plane.
    WeightDump {
        #[arg(long, default_value = "disc")]
        domain: DomainKind,
        #[arg(long)]
        k: u32,
        #[arg(long, default_value = "one")]
        g: String,
        #[arg(long, default_value = "corrected")]
        variant: Variant,
        #[arg(long, default_value_t = 65)]
        radii: usize,
        #[arg(long, default_value_t = 64)]
        angles: usize,
        /// CSV destination.
        #[arg(long)]
        out: PathBuf,
        /// Also writes the expression as an s-expression.
        #[arg(long)]
        sexpr: Option<PathBuf>,
    },
    /// Ratios of projected to weighted norms for z̄^j·g on the disc.
    BergmanCheck {
        #[arg(long, default_value = "pow:2")]
        g: String,
        #[arg(long, default_value_t = 1)]
        k: u32,
        #[arg(long, default_value_t = 1)]
        k2: u32,
        #[arg(long, default_value_t = 40)]
        jmax: u32,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Fast invariant checks.
    SelfTest {
        /// Writes the check list as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot start thread pool")?;
    }
    match cli.command {
        Command::Verify {
            domain,
            k,
            g,
            eta,
            variant,
            tol,
            report,
        } => verify(domain, k, &g, &eta, variant, &tol, report.as_deref()),
        Command::Suite { config, out, tol } => suite(config.as_deref(), out, &tol),
        Command::WeightDump {
            domain,
            k,
            g,
            variant,
            radii,
            angles,
            out,
            sexpr,
        } => {
            let g: GKind = g.parse()?;
            let mut h = Harness::new(domain, DEFAULT_COLLAR_INNER, DEFAULT_COLLAR_OUTER)?;
            let grid = h.weight_grid(k, g, variant, radii, angles)?;
            write_weight_csv(&out, &grid)?;
            if let Some(path) = sexpr {
                let w = h.weighted(k, g, variant)?;
                write_text(&path, &sexpr::dump(h.pool(), w))?;
            }
            println!("wrote {} samples to {}", grid.len(), out.display());
            Ok(true)
        }
        Command::BergmanCheck {
            g,
            k,
            k2,
            jmax,
            report,
        } => {
            let h = Harness::new(DomainKind::Disc, DEFAULT_COLLAR_INNER, DEFAULT_COLLAR_OUTER)?;
            let basis = DiscBergmanBasis::new(DEFAULT_MAX_MODE.max(jmax as usize + 8));
            let cfg = h.quadrature_for(1e-8, Vec::new());
            let r = smoothing_check(&basis, h.domain(), &g, k, k2, jmax, &cfg)?;
            for row in &r.rows {
                println!("j={:<3} ratio={:.6e}", row.j, row.ratio);
            }
            match r.tail_max {
                Some(t) => println!("head_max={:.6e} tail_max={:.6e}", r.head_max, t),
                None => println!("head_max={:.6e}", r.head_max),
            }
            println!("{}", if r.bounded { "BOUNDED" } else { "UNBOUNDED" });
            if let Some(path) = report {
                write_json(&path, &r)?;
            }
            Ok(r.bounded)
        }
        Command::SelfTest { report } => {
            let r = self_test(&SelfTestOptions::default())?;
            for c in &r.checks {
                let tag = if c.pass { "PASS" } else { "FAIL" };
                println!("{tag} {} ({:.3e} <= {:.1e})", c.name, c.value, c.threshold);
            }
            if let Some(path) = report {
                write_json(&path, &r)?;
            }
            Ok(r.pass)
        }
    }
}

fn verify(
    domain: DomainKind,
    k: u32,
    g: &str,
    eta: &str,
    variant: Variant,
    tol: &Tol,
    report: Option<&Path>,
) -> Result<bool> {
    let mut cfg = RunConfig::defaults(domain);
    tol.apply(&mut cfg)?;
    let mut h = cfg.harness()?;
    let r = h.verify_identity(k, g, eta, variant)?;
    println!(
        "{} k={} g={} eta={} variant={} lhs={} rhs={} rel_err={:.3e} tol={:.1e} ({:.2}s)",
        if r.pass { "PASS" } else { "FAIL" },
        r.k,
        r.g,
        r.eta,
        r.variant,
        format_complex(r.lhs),
        format_complex(r.rhs),
        r.rel_err,
        r.tolerance,
        r.runtime_seconds
    );
    if let Some(path) = report {
        write_json(path, &r)?;
    }
    Ok(r.pass)
}

fn suite(config: Option<&Path>, out: Option<PathBuf>, tol: &Tol) -> Result<bool> {
    let mut cfg = match config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            parse_config(&text).with_context(|| format!("in {}", path.display()))?
        }
        None => RunConfig::defaults(DomainKind::Disc),
    };
    tol.apply(&mut cfg)?;
    let dir = out
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let report = run_suite(&cfg)?;
    let written = emit_reports(&report, &dir)?;
    if cfg.dump_weights {
        let mut h = cfg.harness()?;
        for &k in &cfg.k {
            for &g in &cfg.g {
                for &variant in &cfg.variants {
                    let grid = h.weight_grid(k, g, variant, 65, 64)?;
                    let name = format!("k{k}_{}_{variant}.csv", g.to_string().replace(':', "_"));
                    write_weight_csv(&dir.join("weights").join(name), &grid)?;
                }
            }
        }
    }
    for c in &report.cells {
        let r = &c.identity;
        println!(
            "{} k={} g={} eta={} variant={} rel_err={:.3e}",
            if r.pass { "PASS" } else { "FAIL" },
            r.k,
            r.g,
            r.eta,
            r.variant,
            r.rel_err
        );
    }
    println!(
        "{} passed, {} failed; reports in {}",
        report.passed,
        report.failed,
        written[0].parent().unwrap_or(&dir).display()
    );
    Ok(report.all_pass)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)
            .with_context(|| format!("cannot create {}", parent.display()))?;
    }
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}
