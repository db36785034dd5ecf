//! Holomorphic test functions `η` and smooth multipliers `g`.
//!
//! Both are selected by short ids:
//!
//! | η id       | function                        | domains    |
//! |------------|---------------------------------|------------|
//! | `const`    | 1                               | disc, ball |
//! | `pow:m`    | `z^m` (`z₁^m` on the ball)      | disc, ball |
//! | `mono:m,p` | `z₁^m z₂^p`                     | ball       |
//! | `exp`      | `e^z`                           | disc       |
//! | `rat2`     | `1/(z − 2)`                     | disc       |
//! | `sing:a`   | `(1 − z)^{−a}`, principal branch | disc       |
//!
//! | g id         | function     |
//! |--------------|--------------|
//! | `one`        | 1            |
//! | `conj_pow:p` | `z̄^p` (`z̄₁^p`) |
//! | `pow:q`      | `z^q` (`z₁^q`) |
//! | `exp_x1`     | `e^{x₁}`     |

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::field::{ExprPool, FieldExpr, Tape};
use crate::geometry::{DomainKind, DomainModel};
use crate::quadrature::Sample;

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const MAX_DEGREE: u32 = 64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CatalogError {
    #[error("unknown eta id '{0}'")]
    UnknownEta(String),
    #[error("unknown g id '{0}'")]
    UnknownG(String),
    #[error("'{id}' is not available on the {domain}")]
    Unsupported { id: String, domain: DomainKind },
}

fn parse_degree(s: &str) -> Option<u32> {
    s.parse::<u32>().ok().filter(|&m| m <= MAX_DEGREE)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaKind {
    Const,
    Pow(u32),
    Mono(u32, u32),
    Exp,
    Rat2,
    Sing(f64),
}

impl FromStr for EtaKind {
    type Err = CatalogError;

    fn from_str(id: &str) -> Result<Self, Self::Err> {
        let unknown = || CatalogError::UnknownEta(id.to_string());
        let kind = match id {
            "const" => EtaKind::Const,
            "exp" => EtaKind::Exp,
            "rat2" => EtaKind::Rat2,
            _ => {
                let (head, arg) = id.split_once(':').ok_or_else(unknown)?;
                match head {
                    "pow" => EtaKind::Pow(parse_degree(arg).ok_or_else(unknown)?),
                    "mono" => {
                        let (m, p) = arg.split_once(',').ok_or_else(unknown)?;
                        EtaKind::Mono(
                            parse_degree(m).ok_or_else(unknown)?,
                            parse_degree(p).ok_or_else(unknown)?,
                        )
                    }
                    "sing" => {
                        let a: f64 = arg.parse().map_err(|_| unknown())?;
                        if !(a > 0.0 && a < 8.0) {
                            return Err(unknown());
                        }
                        EtaKind::Sing(a)
                    }
                    _ => return Err(unknown()),
                }
            }
        };
        Ok(kind)
    }
}

/// A holomorphic function on the domain, possibly unbounded at one boundary
/// point.
#[derive(Debug, Clone, PartialEq)]
pub struct HoloTestFunction {
    pub id: String,
    pub kind: EtaKind,
    /// Boundary points where `η` is unbounded.
    pub singularities: Vec<Complex64>,
    pub l1: bool,
    pub l2: bool,
}

impl HoloTestFunction {
    pub fn parse(id: &str, domain: DomainKind) -> Result<Self, CatalogError> {
        let kind: EtaKind = id.parse()?;
        let ok = !matches!(
            (kind, domain),
            (EtaKind::Mono(..), DomainKind::Disc)
                | (
                    EtaKind::Exp | EtaKind::Rat2 | EtaKind::Sing(_),
                    DomainKind::Ball
                )
        );
        if !ok {
            return Err(CatalogError::Unsupported {
                id: id.to_string(),
                domain,
            });
        }
        let (singularities, l1, l2) = match kind {
            EtaKind::Sing(a) => (vec![ONE], a < 2.0, a < 1.0),
            _ => (Vec::new(), true, true),
        };
        Ok(HoloTestFunction {
            id: id.to_string(),
            kind,
            singularities,
            l1,
            l2,
        })
    }

    /// `η` at a quadrature node. Near its singularity the node's exact
    /// offset is used, so `1 − z` keeps full relative precision.
    pub fn eval(&self, s: &Sample<'_>) -> Complex64 {
        match self.kind {
            EtaKind::Sing(a) => (-s.offset_from(ONE)).powf(-a),
            EtaKind::Mono(m, p) => {
                let z2 = Complex64::new(s.x[2], s.x[3]);
                s.z().powu(m) * z2.powu(p)
            }
            _ => self.eval_z(s.z()),
        }
    }

    /// `η(z)` for the one-variable kinds. `Mono` reads `z` as `z₁` with
    /// `z₂ = 0`.
    pub fn eval_z(&self, z: Complex64) -> Complex64 {
        match self.kind {
            EtaKind::Const => ONE,
            EtaKind::Pow(m) => z.powu(m),
            EtaKind::Mono(m, p) => {
                if p == 0 {
                    z.powu(m)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            EtaKind::Exp => z.exp(),
            EtaKind::Rat2 => (z - 2.0).inv(),
            EtaKind::Sing(a) => (ONE - z).powf(-a),
        }
    }

    /// Complex derivative `η′(z)`; `None` for functions of two variables.
    pub fn deriv(&self, z: Complex64) -> Option<Complex64> {
        Some(match self.kind {
            EtaKind::Const => Complex64::new(0.0, 0.0),
            EtaKind::Pow(0) => Complex64::new(0.0, 0.0),
            EtaKind::Pow(m) => z.powu(m - 1) * m as f64,
            EtaKind::Mono(..) => return None,
            EtaKind::Exp => z.exp(),
            EtaKind::Rat2 => -(z - 2.0).powu(2).inv(),
            EtaKind::Sing(a) => (ONE - z).powf(-a - 1.0) * a,
        })
    }

    /// `η′` at a quadrature node, using the exact offset near a singularity.
    pub fn deriv_at(&self, s: &Sample<'_>) -> Option<Complex64> {
        match self.kind {
            EtaKind::Sing(a) => Some((-s.offset_from(ONE)).powf(-a - 1.0) * a),
            _ => self.deriv(s.z()),
        }
    }

    /// Taylor coefficient `a_m` at the origin (of `z₁^m` on the ball).
    pub fn taylor_coeff(&self, m: u32) -> Option<Complex64> {
        let re = |x: f64| Some(Complex64::new(x, 0.0));
        match self.kind {
            EtaKind::Const => re(if m == 0 { 1.0 } else { 0.0 }),
            EtaKind::Pow(k) => re(if m == k { 1.0 } else { 0.0 }),
            EtaKind::Mono(k, 0) => re(if m == k { 1.0 } else { 0.0 }),
            EtaKind::Mono(..) => re(0.0),
            EtaKind::Exp => re((1..=m).fold(1.0, |acc, j| acc / j as f64)),
            EtaKind::Rat2 => re(-0.5f64.powi(m as i32 + 1)),
            // binomial series: c_m = c_{m-1}(a + m − 1)/m
            EtaKind::Sing(a) => {
                re((1..=m).fold(1.0, |acc, j| acc * (a + j as f64 - 1.0) / j as f64))
            }
        }
    }

    pub fn value_at_origin(&self) -> Complex64 {
        self.eval_z(Complex64::new(0.0, 0.0))
    }
}

impl fmt::Display for HoloTestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id)
    }
}

/// The default battery for a domain.
pub fn catalog(domain: DomainKind) -> Vec<HoloTestFunction> {
    let ids: Vec<String> = match domain {
        DomainKind::Disc => ["const"]
            .into_iter()
            .map(String::from)
            .chain((1..=6).map(|m| format!("pow:{m}")))
            .chain(["exp", "rat2", "sing:0.5", "sing:1.5", "sing:1.9"].map(String::from))
            .collect(),
        DomainKind::Ball => std::iter::once("const".to_string())
            .chain(
                (0..=3u32)
                    .flat_map(|t| (0..=t).map(move |p| (t - p, p)))
                    .skip(1)
                    .map(|(m, p)| format!("mono:{m},{p}")),
            )
            .collect(),
    };
    ids.iter()
        .map(|id| HoloTestFunction::parse(id, domain).expect("catalog ids parse"))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GKind {
    One,
    ConjPow(u32),
    Pow(u32),
    ExpX1,
}

impl FromStr for GKind {
    type Err = CatalogError;

    fn from_str(id: &str) -> Result<Self, Self::Err> {
        let unknown = || CatalogError::UnknownG(id.to_string());
        match id {
            "one" => Ok(GKind::One),
            "exp_x1" => Ok(GKind::ExpX1),
            _ => {
                let (head, arg) = id.split_once(':').ok_or_else(unknown)?;
                let n = parse_degree(arg).ok_or_else(unknown)?;
                match head {
                    "conj_pow" => Ok(GKind::ConjPow(n)),
                    "pow" => Ok(GKind::Pow(n)),
                    _ => Err(unknown()),
                }
            }
        }
    }
}

impl fmt::Display for GKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GKind::One => f.write_str("one"),
            GKind::ConjPow(p) => write!(f, "conj_pow:{p}"),
            GKind::Pow(q) => write!(f, "pow:{q}"),
            GKind::ExpX1 => f.write_str("exp_x1"),
        }
    }
}

impl GKind {
    pub fn to_expr(self, pool: &mut ExprPool) -> FieldExpr {
        let x1 = pool.coord(1);
        let x2 = pool.coord(2);
        match self {
            GKind::One => pool.one(),
            GKind::ConjPow(p) | GKind::Pow(p) => {
                let sign = if matches!(self, GKind::ConjPow(_)) {
                    -1.0
                } else {
                    1.0
                };
                let iy = pool.scale(Complex64::new(0.0, sign), x2);
                let z = pool.add(x1, iy);
                if p == 0 {
                    pool.one()
                } else {
                    pool.power(z, p)
                }
            }
            GKind::ExpX1 => pool.exp(x1),
        }
    }

    pub fn eval(self, x: &[f64]) -> Complex64 {
        let z = Complex64::new(x[0], x[1]);
        match self {
            GKind::One => ONE,
            GKind::ConjPow(p) => z.conj().powu(p),
            GKind::Pow(q) => z.powu(q),
            GKind::ExpX1 => Complex64::new(x[0].exp(), 0.0),
        }
    }
}

/// `∫_Ω η·g dV` in closed form where one is known.
///
/// For `g = 1` and `g = z^q` the integrand is holomorphic, so the mean value
/// property gives `vol·(ηg)(0)`. For `g = z̄^p` orthogonality of monomials
/// leaves one Taylor coefficient: `π a_p/(p+1)` on the disc and
/// `π² p!/(p+2)!·a_p` on the ball.
pub fn reference_integral(
    eta: &HoloTestFunction,
    g: GKind,
    domain: DomainKind,
) -> Option<Complex64> {
    let vol = domain.volume();
    match g {
        GKind::One => Some(eta.value_at_origin() * vol),
        GKind::Pow(q) => Some(if q == 0 {
            eta.value_at_origin() * vol
        } else {
            Complex64::new(0.0, 0.0)
        }),
        GKind::ConjPow(p) => {
            let a = eta.taylor_coeff(p)?;
            let norm = match domain {
                DomainKind::Disc => PI / (p as f64 + 1.0),
                DomainKind::Ball => PI * PI / ((p as f64 + 1.0) * (p as f64 + 2.0)),
            };
            Some(a * norm)
        }
        GKind::ExpX1 => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolomorphyReport {
    /// `max |Nη − iTη|` with `η_x = η′`, `η_y = iη′`.
    pub max_residual: f64,
    /// The same with `η_x`, `η_y` from central differences of `η`.
    pub max_residual_fd: f64,
    pub samples: usize,
}

/// Checks `Nη = iTη` at collar samples of the disc.
pub fn holomorphy_relation_check(
    eta: &HoloTestFunction,
    pool: &ExprPool,
    domain: &DomainModel,
    samples: usize,
    seed: u64,
) -> Option<HolomorphyReport> {
    if domain.kind() != DomainKind::Disc {
        return None;
    }
    eta.deriv(Complex64::new(0.0, 0.0))?;
    let tape = Tape::compile(pool, domain.gradient());
    let points = domain.sample_collar(samples, seed).ok()?;
    let h = 1e-5;
    let mut grad = [Complex64::new(0.0, 0.0); 2];
    let (mut worst, mut worst_fd) = (0.0f64, 0.0f64);
    for p in &points {
        tape.eval_into(p, &mut grad).ok()?;
        let (dx, dy) = (grad[0].re, grad[1].re);
        let z = Complex64::new(p[0], p[1]);
        let d = eta.deriv(z)?;
        let (ex, ey) = (d, Complex64::i() * d);
        let n = ex * dx + ey * dy;
        let t = ex * dy - ey * dx;
        worst = worst.max((n - Complex64::i() * t).norm());
        let ex = (eta.eval_z(z + h) - eta.eval_z(z - h)) / (2.0 * h);
        let ey = (eta.eval_z(z + Complex64::new(0.0, h)) - eta.eval_z(z - Complex64::new(0.0, h)))
            / (2.0 * h);
        let n = ex * dx + ey * dy;
        let t = ex * dy - ey * dx;
        worst_fd = worst_fd.max((n - Complex64::i() * t).norm());
    }
    Some(HolomorphyReport {
        max_residual: worst,
        max_residual_fd: worst_fd,
        samples: points.len(),
    })
}
