//! Series and quadrature identities that follow from equating two
//! representations of the same exit density.
//!
//! Each entry has a left side computed at a truncation level with an error
//! bound, and a right side in closed form. `evaluate` raises the truncation
//! until the bound is below half the tolerance.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::series::{eta, richardson, richardson_start, Extrapolated, RICHARDSON_LEVELS};

/// Truncation level tried first by `evaluate`.
pub const START_TERMS: usize = 1024;
/// Truncation level past which `evaluate` gives up.
pub const MAX_TERMS: usize = 1_000_000;
/// Default verification tolerance.
pub const DEFAULT_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityKind {
    Series,
    Quadrature,
    Limit,
}

/// Left side at one truncation level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub bound: Option<f64>,
    pub terms: usize,
}

impl From<Extrapolated> for Estimate {
    fn from(e: Extrapolated) -> Self {
        Estimate { value: e.value, bound: Some(e.error), terms: e.terms }
    }
}

/// Outcome of checking one identity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub id: String,
    pub params: BTreeMap<String, f64>,
    pub kind: IdentityKind,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub n_used: usize,
    pub tail_bound: Option<f64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub printed_rhs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<&'static str>,
}

/// `g(a) = (π/4)(1 + tan(πa/4))/(1 − tan(πa/4)) = (π/4)·tan(π(1+a)/4)`.
pub fn g(a: f64) -> f64 {
    FRAC_PI_4 * (1.0 + (FRAC_PI_4 * a).tan()) / (1.0 - (FRAC_PI_4 * a).tan())
}

/// `g^{(order)}` as `(π/4)^{order+1}·P(tan(π(1+a)/4))`, with `P₀ = t` and
/// `P_{m+1} = (1+t²)·P_m′`.
#[derive(Debug, Clone, PartialEq)]
pub struct TanDerivative {
    order: u32,
    /// Coefficients of `P` in increasing degree.
    coeffs: Vec<f64>,
}

impl TanDerivative {
    /// The `order`-th derivative of `g`, `0 ≤ order ≤ 11`.
    pub fn new(order: u32) -> Result<Self> {
        if order > 11 {
            return Err(Error::OutOfRange(format!("derivative order must lie in 0..=11, got {order}")));
        }
        let mut p = vec![0.0, 1.0];
        for _ in 0..order {
            let dp: Vec<f64> = p.iter().enumerate().skip(1).map(|(i, c)| i as f64 * c).collect();
            let mut next = vec![0.0; dp.len() + 2];
            for (i, c) in dp.iter().enumerate() {
                next[i] += c;
                next[i + 2] += c;
            }
            p = next;
        }
        Ok(TanDerivative { order, coeffs: p })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, a: f64) -> f64 {
        self.eval_complex(Complex64::new(a, 0.0)).re
    }

    pub fn eval_complex(&self, a: Complex64) -> Complex64 {
        let t = (FRAC_PI_4 * (a + 1.0)).tan();
        let p = self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * t + c);
        p * FRAC_PI_4.powi(self.order as i32 + 1)
    }
}

/// `g^{(r−1)}` for `1 ≤ r ≤ 12`.
pub fn tan_derivative(r: u32) -> Result<TanDerivative> {
    if !(1..=12).contains(&r) {
        return Err(Error::OutOfRange(format!("r must lie in 1..=12, got {r}")));
    }
    TanDerivative::new(r - 1)
}

/// `Δ_r = Σ_{k≥1} (−1)^{k−1}/k^r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EtaValue {
    pub r: u32,
    pub value: f64,
    pub error: f64,
}

impl EtaValue {
    pub fn new(r: u32) -> Result<Self> {
        if r == 0 {
            return Err(Error::OutOfRange("eta needs r >= 1".into()));
        }
        let e = eta(r);
        Ok(EtaValue { r, value: e.value, error: e.error })
    }
}

/// A catalog identity with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Identity {
    Basel,
    LatticeCosec { theta: f64 },
    PuncturedEquality { a: f64, theta: f64 },
    Mapleton1,
    Mapleton2,
    Mapleton3,
    StripEquality { a: f64, y: f64 },
    SechSeries { y: f64 },
    Leibniz,
    Mei { a: f64 },
    MeiDeriv { a: f64, r: u32 },
    OddBlocks { q: u32, r: u32 },
    EvenBlocks { q: u32, r: u32 },
    AllBlocks { q: u32, r: u32 },
    HalfstripX0 { alpha: f64, beta: f64 },
    Clea { alpha: f64 },
    Ima2 { x: f64 },
    SegmentAlpha0 { x: f64 },
    RectangleSechCsch { k: f64 },
    SechFourier { r: f64 },
    CocoDiagnostic { r: f64 },
}

/// Identifiers in catalog order.
pub const IDS: [&str; 21] = [
    "basel",
    "lattice_cosec",
    "punctured_equality",
    "mapleton_1",
    "mapleton_2",
    "mapleton_3",
    "strip_equality",
    "sech_series",
    "leibniz",
    "mei",
    "mei_deriv",
    "odd_blocks",
    "even_blocks",
    "all_blocks",
    "halfstrip_x0",
    "clea",
    "ima2",
    "segment_alpha0",
    "rectangle_sech_csch",
    "sech_fourier",
    "coco_diagnostic",
];

/// Parameter names and defaults of an identity.
pub fn default_params(id: &str) -> Result<Vec<(&'static str, f64)>> {
    Ok(match id {
        "basel" | "mapleton_1" | "mapleton_2" | "mapleton_3" | "leibniz" => vec![],
        "lattice_cosec" => vec![("theta", 1.0)],
        "punctured_equality" => vec![("a", (-1.0f64).exp()), ("theta", 0.7)],
        "strip_equality" => vec![("a", 0.3), ("y", 0.5)],
        "sech_series" => vec![("y", 0.5)],
        "mei" => vec![("a", 0.3)],
        "mei_deriv" => vec![("a", 0.0), ("r", 2.0)],
        "odd_blocks" | "even_blocks" | "all_blocks" => vec![("q", 2.0), ("r", 1.0)],
        "halfstrip_x0" => vec![("alpha", 0.3), ("beta", 0.7)],
        "clea" => vec![("alpha", 0.5)],
        "ima2" | "segment_alpha0" => vec![("x", 0.3)],
        "rectangle_sech_csch" => vec![("k", 1.0)],
        "sech_fourier" | "coco_diagnostic" => vec![("r", 1.0)],
        _ => return Err(Error::Unknown(format!("identity {id:?}"))),
    })
}

fn open_unit(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v.abs() < 1.0 {
        Ok(v)
    } else {
        Err(Error::OutOfRange(format!("{name} must lie in (-1, 1), got {v}")))
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::OutOfRange(format!("{name} must be positive, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::OutOfRange(format!("{name} must be finite, got {v}")))
    }
}

fn integer(name: &str, v: f64, lo: u32, hi: u32) -> Result<u32> {
    if v.fract() == 0.0 && v >= lo as f64 && v <= hi as f64 {
        Ok(v as u32)
    } else {
        Err(Error::OutOfRange(format!("{name} must be an integer in {lo}..={hi}, got {v}")))
    }
}

fn odd_power(v: f64) -> Result<u32> {
    let r = integer("r", v, 1, 11)?;
    if r % 2 == 1 {
        Ok(r)
    } else {
        Err(Error::OutOfRange(format!("block identities need odd r, got {r}")))
    }
}

impl Identity {
    /// Build from an id and named parameters; missing parameters take defaults.
    pub fn from_params(id: &str, given: &BTreeMap<String, f64>) -> Result<Self> {
        let defaults = default_params(id)?;
        if let Some(extra) = given.keys().find(|k| !defaults.iter().any(|(n, _)| n == k)) {
            return Err(Error::OutOfRange(format!("identity {id} has no parameter {extra:?}")));
        }
        let p = |name: &str| {
            given.get(name).copied().unwrap_or_else(|| {
                defaults.iter().find(|(n, _)| *n == name).map(|(_, v)| *v).expect("parameter listed in defaults")
            })
        };
        Ok(match id {
            "basel" => Identity::Basel,
            "lattice_cosec" => {
                let theta = finite("theta", p("theta"))?;
                if (theta / (2.0 * PI)).fract().abs() < 1e-12 {
                    return Err(Error::OutOfRange("theta must not be a multiple of 2π".into()));
                }
                Identity::LatticeCosec { theta }
            }
            "punctured_equality" => {
                let a = p("a");
                if !(a > 0.0 && a < 1.0) {
                    return Err(Error::OutOfRange(format!("a must lie in (0, 1), got {a}")));
                }
                Identity::PuncturedEquality { a, theta: finite("theta", p("theta"))? }
            }
            "mapleton_1" => Identity::Mapleton1,
            "mapleton_2" => Identity::Mapleton2,
            "mapleton_3" => Identity::Mapleton3,
            "strip_equality" => Identity::StripEquality { a: open_unit("a", p("a"))?, y: finite("y", p("y"))? },
            "sech_series" => Identity::SechSeries { y: finite("y", p("y"))? },
            "leibniz" => Identity::Leibniz,
            "mei" => Identity::Mei { a: open_unit("a", p("a"))? },
            "mei_deriv" => Identity::MeiDeriv { a: open_unit("a", p("a"))?, r: integer("r", p("r"), 1, 12)? },
            "odd_blocks" => Identity::OddBlocks { q: integer("q", p("q"), 1, 1000)?, r: odd_power(p("r"))? },
            "even_blocks" => Identity::EvenBlocks { q: integer("q", p("q"), 2, 1000)?, r: odd_power(p("r"))? },
            "all_blocks" => Identity::AllBlocks { q: integer("q", p("q"), 1, 1000)?, r: odd_power(p("r"))? },
            "halfstrip_x0" => {
                Identity::HalfstripX0 { alpha: open_unit("alpha", p("alpha"))?, beta: positive("beta", p("beta"))? }
            }
            "clea" => {
                let alpha = open_unit("alpha", p("alpha"))?;
                if alpha == 0.0 {
                    return Err(Error::OutOfRange("alpha must be nonzero".into()));
                }
                Identity::Clea { alpha }
            }
            "ima2" => Identity::Ima2 { x: open_unit("x", p("x"))? },
            "segment_alpha0" => {
                let x = open_unit("x", p("x"))?;
                if x == 0.0 {
                    return Err(Error::OutOfRange("x must be nonzero".into()));
                }
                Identity::SegmentAlpha0 { x }
            }
            "rectangle_sech_csch" => {
                let k = p("k");
                if !(0.05..=20.0).contains(&k) {
                    return Err(Error::OutOfRange(format!("k must lie in [0.05, 20], got {k}")));
                }
                Identity::RectangleSechCsch { k }
            }
            "sech_fourier" => {
                let r = finite("r", p("r"))?;
                if r.abs() > 20.0 {
                    return Err(Error::OutOfRange(format!("|r| must be at most 20, got {r}")));
                }
                Identity::SechFourier { r }
            }
            "coco_diagnostic" => Identity::CocoDiagnostic { r: positive("r", p("r"))? },
            _ => unreachable!("default_params rejects unknown ids"),
        })
    }

    pub fn id(&self) -> &'static str {
        match self {
            Identity::Basel => "basel",
            Identity::LatticeCosec { .. } => "lattice_cosec",
            Identity::PuncturedEquality { .. } => "punctured_equality",
            Identity::Mapleton1 => "mapleton_1",
            Identity::Mapleton2 => "mapleton_2",
            Identity::Mapleton3 => "mapleton_3",
            Identity::StripEquality { .. } => "strip_equality",
            Identity::SechSeries { .. } => "sech_series",
            Identity::Leibniz => "leibniz",
            Identity::Mei { .. } => "mei",
            Identity::MeiDeriv { .. } => "mei_deriv",
            Identity::OddBlocks { .. } => "odd_blocks",
            Identity::EvenBlocks { .. } => "even_blocks",
            Identity::AllBlocks { .. } => "all_blocks",
            Identity::HalfstripX0 { .. } => "halfstrip_x0",
            Identity::Clea { .. } => "clea",
            Identity::Ima2 { .. } => "ima2",
            Identity::SegmentAlpha0 { .. } => "segment_alpha0",
            Identity::RectangleSechCsch { .. } => "rectangle_sech_csch",
            Identity::SechFourier { .. } => "sech_fourier",
            Identity::CocoDiagnostic { .. } => "coco_diagnostic",
        }
    }

    pub fn params(&self) -> BTreeMap<String, f64> {
        let list: Vec<(&str, f64)> = match *self {
            Identity::Basel
            | Identity::Mapleton1
            | Identity::Mapleton2
            | Identity::Mapleton3
            | Identity::Leibniz => vec![],
            Identity::LatticeCosec { theta } => vec![("theta", theta)],
            Identity::PuncturedEquality { a, theta } => vec![("a", a), ("theta", theta)],
            Identity::StripEquality { a, y } => vec![("a", a), ("y", y)],
            Identity::SechSeries { y } => vec![("y", y)],
            Identity::Mei { a } => vec![("a", a)],
            Identity::MeiDeriv { a, r } => vec![("a", a), ("r", r as f64)],
            Identity::OddBlocks { q, r } | Identity::EvenBlocks { q, r } | Identity::AllBlocks { q, r } => {
                vec![("q", q as f64), ("r", r as f64)]
            }
            Identity::HalfstripX0 { alpha, beta } => vec![("alpha", alpha), ("beta", beta)],
            Identity::Clea { alpha } => vec![("alpha", alpha)],
            Identity::Ima2 { x } | Identity::SegmentAlpha0 { x } => vec![("x", x)],
            Identity::RectangleSechCsch { k } => vec![("k", k)],
            Identity::SechFourier { r } | Identity::CocoDiagnostic { r } => vec![("r", r)],
        };
        list.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    pub fn kind(&self) -> IdentityKind {
        match self {
            Identity::SechFourier { .. } => IdentityKind::Quadrature,
            Identity::Clea { .. } | Identity::CocoDiagnostic { .. } => IdentityKind::Limit,
            _ => IdentityKind::Series,
        }
    }

    /// Left side at truncation level `n` (about `n` terms).
    pub fn lhs(&self, n: usize) -> Result<Estimate> {
        let n = n.max(2);
        Ok(match *self {
            Identity::Basel => {
                // order-one Euler–Maclaurin tail, remainder below |f'(n)|/12
                let s = neumaier((1..=n).map(|k| 1.0 / (k as f64 * k as f64)));
                let nf = n as f64;
                Estimate { value: s + 1.0 / nf - 0.5 / (nf * nf), bound: Some(1.0 / (6.0 * nf.powi(3))), terms: n }
            }
            Identity::LatticeCosec { theta } => inverse_square_lattice(theta, 2.0 * PI, n),
            Identity::PuncturedEquality { a, theta } => {
                let b = -a.ln();
                cauchy_sum(theta, b, 2.0 * PI, n, 1.0 / PI)
            }
            Identity::Mapleton1 => cauchy_sum(0.0, 1.0, 2.0 * PI, n, 1.0),
            Identity::Mapleton2 => cauchy_sum(PI, 1.0, 2.0 * PI, n, 1.0),
            Identity::Mapleton3 => cauchy_sum(0.0, 1.0, PI, n, 1.0),
            Identity::StripEquality { a, y } => {
                let f = |c: f64| c / (PI * (c * c + y * y));
                accelerated(|j| f(4.0 * j as f64 + 1.0 - a) - f(4.0 * j as f64 + 3.0 + a), richardson_start(0.0, y), n)
            }
            Identity::SechSeries { y } => {
                let f = |c: f64| c / (c * c + y * y);
                accelerated(|j| f(4.0 * j as f64 + 1.0) - f(4.0 * j as f64 + 3.0), richardson_start(0.0, y), n)
            }
            Identity::Leibniz => accelerated(|j| 1.0 / (4 * j + 1) as f64 - 1.0 / (4 * j + 3) as f64, 16, n),
            Identity::Mei { a } => {
                accelerated(|j| 1.0 / (4.0 * j as f64 + 1.0 - a) - 1.0 / (4.0 * j as f64 + 3.0 + a), 16, n)
            }
            Identity::MeiDeriv { a, r } => {
                let fact = factorial(r - 1);
                let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
                let p = r as i32;
                accelerated(
                    |j| fact * ((4.0 * j as f64 + 1.0 - a).powi(-p) + sign * (4.0 * j as f64 + 3.0 + a).powi(-p)),
                    16,
                    n,
                )
            }
            Identity::OddBlocks { q, r } => blocks(q, r, |m, i| (2 * m * q + 2 * i + 1) as f64, 0..q, n),
            Identity::EvenBlocks { q, r } => blocks(q, r, |m, i| (2 * m * q + 2 * i) as f64, 1..q, n),
            Identity::AllBlocks { q, r } => blocks(q, r, |m, i| (m * q + i) as f64, 1..q + 1, n),
            Identity::HalfstripX0 { alpha, beta } => halfstrip_x0_lhs(alpha, beta, n).into(),
            Identity::Clea { alpha } => clea_lhs(alpha, n),
            Identity::Ima2 { x } => {
                let f = |c: f64| 1.0 / (c * c);
                accelerated(|j| f(4.0 * j as f64 + 1.0 + x) + f(4.0 * j as f64 + 3.0 - x), 16, n)
            }
            Identity::SegmentAlpha0 { x } => inverse_square_lattice(x, 2.0, n),
            Identity::RectangleSechCsch { k } => {
                // alternating with decreasing terms: the first omitted term bounds the tail
                let term = |m: usize| sech(PI * k * m as f64);
                let s = 0.5 + neumaier((1..=n).map(|m| if m % 2 == 1 { -term(m) } else { term(m) }));
                Estimate { value: s, bound: Some(term(n + 1)), terms: n }
            }
            Identity::SechFourier { r } => sech_fourier_lhs(r)?,
            Identity::CocoDiagnostic { .. } => {
                return Err(Error::Unsupported(
                    "coco_diagnostic has no convergent left side; use identities::coco_diagnostic".into(),
                ))
            }
        })
    }

    /// Closed-form right side.
    pub fn rhs(&self) -> Result<f64> {
        Ok(match *self {
            Identity::Basel => PI * PI / 6.0,
            Identity::LatticeCosec { theta } => 1.0 / (2.0 * (1.0 - theta.cos())),
            Identity::PuncturedEquality { a, theta } => (1.0 - a * a) / (2.0 * PI * (1.0 + a * a - 2.0 * a * theta.cos())),
            Identity::Mapleton1 => 0.5 / 0.5f64.tanh(),
            Identity::Mapleton2 => 0.5 * 0.5f64.tanh(),
            Identity::Mapleton3 => 1.0 / 1f64.tanh(),
            Identity::StripEquality { a, y } => {
                let t = (FRAC_PI_4 * a).tan();
                let th = (FRAC_PI_4 * y).tanh();
                let d = 1.0 + th * th;
                let re = 1.0 - t * (1.0 - th * th) / d;
                let im = t * 2.0 * th / d;
                sech(FRAC_PI_2 * y) * (1.0 - t * t) / (4.0 * (re * re + im * im))
            }
            Identity::SechSeries { y } => FRAC_PI_4 * sech(FRAC_PI_2 * y),
            Identity::Leibniz => FRAC_PI_4,
            Identity::Mei { a } => g(a),
            Identity::MeiDeriv { a, r } => tan_derivative(r)?.eval(a),
            Identity::OddBlocks { q, r } => {
                let d = tan_derivative(r)?;
                let s: f64 = (0..q).map(|k| d.eval((q as f64 - 1.0 - 2.0 * k as f64) / q as f64)).sum();
                s / (factorial(r - 1) * (q as f64).powi(r as i32))
            }
            Identity::EvenBlocks { q, r } => even_block_rhs(q, r)?,
            Identity::AllBlocks { q, r } => {
                let qr = (q as f64).powi(r as i32);
                EtaValue::new(r)?.value / qr + 2f64.powi(r as i32) * even_block_rhs(q, r)?
            }
            Identity::HalfstripX0 { alpha, beta } => {
                let sh = (FRAC_PI_2 * beta).sinh();
                let sa = (FRAC_PI_2 * alpha).sin();
                0.5 * sh * (FRAC_PI_2 * alpha).cos() / (sh * sh + sa * sa)
            }
            Identity::Clea { alpha } => {
                let s = (FRAC_PI_2 * alpha).sin();
                PI * PI * (FRAC_PI_2 * alpha).cos() / (4.0 * s * s)
            }
            Identity::Ima2 { x } => PI * PI / (8.0 * (1.0 + (FRAC_PI_2 * x).sin())),
            Identity::SegmentAlpha0 { x } => {
                let (s, c) = (FRAC_PI_2 * x).sin_cos();
                let w = 1.0 / c + s / c;
                PI * PI * c * (1.0 + w * w) / (8.0 * s * s * w)
            }
            Identity::RectangleSechCsch { k } => {
                let term = |j: usize| 1.0 / ((2 * j + 1) as f64 * PI / (2.0 * k)).sinh();
                let mut s = 0.0;
                for j in 0.. {
                    let t = term(j);
                    s += if j % 2 == 0 { t } else { -t };
                    if t < 1e-18 * s.abs() {
                        break;
                    }
                }
                s / k
            }
            Identity::SechFourier { r } => 2.0 * sech(r),
            Identity::CocoDiagnostic { .. } => {
                return Err(Error::Unsupported("the coco right side diverges".into()));
            }
        })
    }

    /// Error bound of the left side at truncation `n`.
    pub fn tail_bound(&self, n: usize) -> Result<Option<f64>> {
        self.lhs(n).map(|e| e.bound)
    }

    /// Printed constant that differs from the computed right side.
    pub fn printed_rhs(&self) -> Option<(f64, &'static str)> {
        match *self {
            Identity::OddBlocks { q: 4, r: 1 } => Some((
                PI * (2.0 + 2f64.sqrt()).sqrt(),
                "the commonly printed value pi*sqrt(2+sqrt(2)) is 4 times the series limit",
            )),
            _ => None,
        }
    }

    fn note(&self) -> Option<&'static str> {
        match self {
            Identity::Mapleton1 | Identity::Mapleton2 | Identity::Mapleton3 => {
                Some("left side summed without the 1/pi factor, which would scale the sum by 1/pi")
            }
            _ => self.printed_rhs().map(|(_, n)| n),
        }
    }
}

/// Check one identity: raise the truncation until the bound is at most
/// `tol/2`, then compare with the right side.
pub fn evaluate(id: &str, params: &BTreeMap<String, f64>, tol: f64) -> Result<Report> {
    evaluate_identity(&Identity::from_params(id, params)?, tol)
}

pub fn evaluate_identity(identity: &Identity, tol: f64) -> Result<Report> {
    if !(tol > 0.0) {
        return Err(Error::OutOfRange(format!("tolerance must be positive, got {tol}")));
    }
    let rhs = identity.rhs()?;
    let mut n = START_TERMS;
    let est = loop {
        let est = identity.lhs(n)?;
        match est.bound {
            Some(b) if b <= tol / 2.0 => break est,
            None => break est,
            Some(b) if 2 * n > MAX_TERMS => return Err(Error::Series { terms: est.terms, bound: b }),
            Some(_) => n *= 2,
        }
    };
    let residual = (est.value - rhs).abs();
    Ok(Report {
        id: identity.id().to_string(),
        params: identity.params(),
        kind: identity.kind(),
        lhs: est.value,
        rhs,
        residual,
        n_used: est.terms,
        tail_bound: est.bound,
        pass: residual <= tol,
        printed_rhs: identity.printed_rhs().map(|(v, _)| v),
        note: identity.note(),
    })
}

/// Every catalog identity with a convergent left side, at default parameters.
pub fn catalog() -> Vec<Identity> {
    IDS.iter()
        .filter(|id| **id != "coco_diagnostic")
        .map(|id| Identity::from_params(id, &BTreeMap::new()).expect("defaults are valid"))
        .collect()
}

/// Evidence that the reflection sum for the annulus diverges.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CocoReport {
    pub r: f64,
    /// `1/(2π e^r)`, the limit of the scaled term magnitudes.
    pub term_limit: f64,
    /// `|term_n|/term_limit − 1` at `n = 50`.
    pub term_limit_gap: f64,
    /// Scaled magnitude partial sums `Σ_{n<N} |term_n|` for `N = 10², 10⁴`.
    pub partial_small: f64,
    pub partial_large: f64,
    /// Signed partial sums at `N = 10⁴` and `10⁴ + 1`; their gap stays near `2·term_limit`.
    pub signed_even: f64,
    pub signed_odd: f64,
    /// `Σ_k sech(π²k/r)/(4r e^r)`, finite.
    pub left_side: f64,
    pub terms_vanish: bool,
}

/// `n`-th scaled term `(−1)^n coth((2n+1)r/2)/(2π e^r)` of the right side.
pub fn coco_term(r: f64, n: usize) -> f64 {
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    sign / (((2 * n + 1) as f64 * r / 2.0).tanh() * 2.0 * PI * r.exp())
}

pub fn coco_diagnostic(r: f64) -> Result<CocoReport> {
    positive("r", r)?;
    let term_limit = 1.0 / (2.0 * PI * r.exp());
    let magnitude = |upto: usize| neumaier((0..upto).map(|n| coco_term(r, n).abs()));
    let signed = |upto: usize| neumaier((0..upto).map(|n| coco_term(r, n)));
    let mut left = 0.0;
    for k in 0i64.. {
        let t = sech(PI * PI * k as f64 / r);
        left += if k == 0 { t } else { 2.0 * t };
        if t < 1e-18 * left {
            break;
        }
    }
    let term_limit_gap = coco_term(r, 50).abs() / term_limit - 1.0;
    let (signed_even, signed_odd) = (signed(10_000), signed(10_001));
    Ok(CocoReport {
        r,
        term_limit,
        term_limit_gap,
        partial_small: magnitude(100),
        partial_large: magnitude(10_000),
        signed_even,
        signed_odd,
        left_side: left / (4.0 * r * r.exp()),
        terms_vanish: (signed_odd - signed_even).abs() < 0.5 * term_limit,
    })
}

fn sech(x: f64) -> f64 {
    1.0 / x.cosh()
}

fn factorial(m: u32) -> f64 {
    (1..=m).map(f64::from).product()
}

fn neumaier<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for t in it {
        let s = sum + t;
        comp += if sum.abs() >= t.abs() { (sum - s) + t } else { (t - s) + sum };
        sum = s;
    }
    sum + comp
}

/// Richardson-extrapolated `Σ_{j≥0} g(j)` using about `n` terms.
fn accelerated<G: Fn(usize) -> f64>(g: G, start: usize, n: usize) -> Estimate {
    let n0 = start.max(n >> (RICHARDSON_LEVELS - 1));
    richardson(g, n0, RICHARDSON_LEVELS).into()
}

/// `Σ_{m≥0} (−1)^m Σ_{i∈range} 1/den(m,i)^r`, summed in pairs of blocks.
fn blocks<D: Fn(u32, u32) -> f64>(q: u32, r: u32, den: D, range: std::ops::Range<u32>, n: usize) -> Estimate {
    let p = r as i32;
    let block = |m: u32| -> f64 { range.clone().map(|i| den(m, i).powi(-p)).sum() };
    let start = 16usize.max(64 / q as usize);
    accelerated(|j| block(2 * j as u32) - block(2 * j as u32 + 1), start, n / q as usize)
}

fn even_block_rhs(q: u32, r: u32) -> Result<f64> {
    let d = tan_derivative(r)?;
    let s: f64 = (1..q).map(|k| d.eval((q as f64 - 2.0 * k as f64) / q as f64)).sum();
    Ok(s / (factorial(r - 1) * (q as f64).powi(r as i32)))
}

/// `Σ_{k∈ℤ} 1/(u + s k)²`: terms `|k| ≤ n` plus midpoint integral tails.
fn inverse_square_lattice(u: f64, s: f64, n: usize) -> Estimate {
    let direct = neumaier((-(n as i64)..=n as i64).map(|k| (u + s * k as f64).powi(-2)));
    let t = s * (n as f64 + 0.5);
    let tails = 1.0 / (s * (t + u)) + 1.0 / (s * (t - u));
    // midpoint remainder is below |f'|/24 per side, f' taken in k
    let bound = (2.0 * s / (t + u).powi(3) + 2.0 * s / (t - u).powi(3)) / 24.0;
    Estimate { value: direct + tails, bound: Some(bound), terms: 2 * n + 1 }
}

/// `factor·π·Σ_k cauchy(0, b, u + s k)` with the lattice integral tail.
fn cauchy_sum(u: f64, b: f64, s: f64, n: usize, factor: f64) -> Estimate {
    let e = crate::series::cauchy_lattice(0.0, b, s, u, n);
    let f = factor * PI;
    Estimate { value: f * e.value, bound: Some(f * e.error), terms: e.terms }
}

/// `(1/π)(c(α) − (c(α−2)+c(α+2)) + (c(α−4)+c(α+4)) − …)`, `c(u) = β/(β²+u²)`.
fn halfstrip_x0_lhs(alpha: f64, beta: f64, n: usize) -> Extrapolated {
    let c = |u: f64| beta / (PI * (beta * beta + u * u));
    let block = |m: usize| {
        if m == 0 {
            c(alpha)
        } else {
            let d = 2.0 * m as f64;
            c(alpha - d) + c(alpha + d)
        }
    };
    let n0 = richardson_start(alpha, beta).max(n >> (RICHARDSON_LEVELS - 1));
    richardson(|j| block(2 * j) - block(2 * j + 1), n0, RICHARDSON_LEVELS)
}

/// Step in `β` for the small-parameter limit.
const LIMIT_STEP: f64 = 1e-3;

/// `lim_{β→0} (π/β)·halfstrip_x0(α, β)`, from the values at `β = h, h/2`.
///
/// The scaled sum is even in `β`, so one Richardson step leaves an `O(h⁴)` error.
fn clea_lhs(alpha: f64, n: usize) -> Estimate {
    let h = LIMIT_STEP;
    let at = |b: f64| {
        let e = halfstrip_x0_lhs(alpha, b, n);
        (PI * e.value / b, PI * e.error / b, e.terms)
    };
    let (f1, e1, _) = at(h);
    let (f2, e2, terms) = at(h / 2.0);
    let value = (4.0 * f2 - f1) / 3.0;
    let correction = (value - f2).abs();
    let d = alpha.abs().min(2.0 - alpha.abs());
    let bound = (4.0 * e2 + e1) / 3.0 + correction * (h / d).powi(2);
    Estimate { value, bound: Some(bound), terms }
}

/// `∫_ℝ cos(rθ) sech(πθ/2) dθ`; the imaginary part vanishes by symmetry.
fn sech_fourier_lhs(r: f64) -> Result<Estimate> {
    const CUT: f64 = 40.0;
    let q = integrate(|t| 2.0 * (r * t).cos() * sech(FRAC_PI_2 * t), 0.0, CUT, 1e-13, 1e-13)?;
    // |∫_{CUT}^∞| ≤ 2∫ 2e^{−πθ/2} = (8/π)e^{−π·CUT/2}
    let tail = 8.0 / PI * (-FRAC_PI_2 * CUT).exp();
    Ok(Estimate { value: q.value, bound: Some(q.error + tail), terms: q.evals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::LN_2;

    fn run(id: &str, params: &[(&str, f64)], tol: f64) -> Report {
        let map = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        evaluate(id, &map, tol).unwrap()
    }

    #[test]
    fn every_default_entry_passes() {
        for identity in catalog() {
            let r = evaluate_identity(&identity, DEFAULT_TOL).unwrap();
            assert!(r.pass, "{r:?}");
            if let Some(b) = r.tail_bound {
                assert!(b <= DEFAULT_TOL / 2.0, "{r:?}");
            }
        }
    }

    #[test]
    fn basel_value() {
        let r = run("basel", &[], 1e-8);
        assert_abs_diff_eq!(r.rhs, 1.6449340668, epsilon = 1e-10);
        assert!(r.residual <= 1e-8);
    }

    #[test]
    fn tan_derivative_base_cases() {
        let d = tan_derivative(1).unwrap();
        assert_abs_diff_eq!(d.eval(0.0), FRAC_PI_4, epsilon = 1e-15);
        for a in [-0.7, -0.2, 0.0, 0.4, 0.9] {
            assert_abs_diff_eq!(d.eval(a), g(a), epsilon = 1e-12);
        }
        assert!(tan_derivative(0).is_err());
        assert!(tan_derivative(13).is_err());
    }

    #[test]
    fn tan_derivative_matches_complex_step() {
        let h = 1e-20;
        for order in 0..11 {
            let lo = TanDerivative::new(order).unwrap();
            let hi = TanDerivative::new(order + 1).unwrap();
            for a in [-0.5, 0.0, 0.3] {
                let cs = lo.eval_complex(Complex64::new(a, h)).im / h;
                let exact = hi.eval(a);
                assert!((cs - exact).abs() <= 1e-8 * exact.abs().max(1.0), "order {order} a {a}: {cs} vs {exact}");
            }
        }
    }

    #[test]
    fn mei_deriv_even_orders_have_positive_terms() {
        // the summands of the left side at a fixed j
        for r in 1..=6u32 {
            let a = 0.4;
            let terms: Vec<f64> = (1..=6)
                .map(|j: i32| {
                    let c = (2 * j - 1) as f64 + if j % 2 == 0 { a } else { -a };
                    let sign = if (r as i32 * (j + 1)) % 2 == 0 { 1.0 } else { -1.0 };
                    sign / c.powi(r as i32)
                })
                .collect();
            if r % 2 == 0 {
                assert!(terms.iter().all(|t| *t > 0.0));
            } else {
                assert!(terms.windows(2).all(|w| w[0] * w[1] < 0.0));
            }
        }
    }

    #[test]
    fn eta_values() {
        assert_eq!(EtaValue::new(1).unwrap().value, LN_2);
        assert_abs_diff_eq!(EtaValue::new(2).unwrap().value, PI * PI / 12.0, epsilon = 1e-14);
        assert!(EtaValue::new(3).unwrap().error < 1e-14);
    }

    #[test]
    fn blocks_recombine() {
        // all = 2^r·even + Δ_r/q^r, where 2^r·even sums the non-multiples of q
        for (q, r) in [(2u32, 1u32), (3, 1), (3, 3), (4, 5)] {
            let p = |id: &str| {
                let m = [("q".to_string(), q as f64), ("r".to_string(), r as f64)].into_iter().collect();
                evaluate(id, &m, 1e-10).unwrap().lhs
            };
            let recombined = 2f64.powi(r as i32) * p("even_blocks") + EtaValue::new(r).unwrap().value / (q as f64).powi(r as i32);
            assert_abs_diff_eq!(p("all_blocks"), recombined, epsilon = 1e-9);
        }
    }

    #[test]
    fn cosec_lattice_limit_gives_one_twelfth() {
        let theta = 1e-3;
        let r = run("lattice_cosec", &[("theta", theta)], 1e-7);
        let limit = r.lhs - 1.0 / (theta * theta);
        assert_abs_diff_eq!(limit, 1.0 / 12.0, epsilon = 1e-5);
    }

    #[test]
    fn q4_printed_constant_is_four_times_the_limit() {
        let r = run("odd_blocks", &[("q", 4.0), ("r", 1.0)], 1e-9);
        assert!(r.pass);
        assert_abs_diff_eq!(r.printed_rhs.unwrap() / r.lhs, 4.0, epsilon = 1e-8);
    }

    #[test]
    fn bad_parameters_are_rejected() {
        let m = |k: &str, v: f64| [(k.to_string(), v)].into_iter().collect::<BTreeMap<_, _>>();
        assert!(matches!(evaluate("nope", &BTreeMap::new(), 1e-7), Err(Error::Unknown(_))));
        assert!(evaluate("mei", &m("a", 1.0), 1e-7).is_err());
        assert!(evaluate("odd_blocks", &m("r", 2.0), 1e-7).is_err());
        assert!(evaluate("basel", &m("x", 2.0), 1e-7).is_err());
        assert!(evaluate("coco_diagnostic", &BTreeMap::new(), 1e-7).is_err());
    }

    #[test]
    fn unreachable_tolerance_reports_cap() {
        assert!(matches!(evaluate("basel", &BTreeMap::new(), 1e-30), Err(Error::Series { .. })));
    }

    #[test]
    fn coco_terms_do_not_vanish() {
        let c = coco_diagnostic(1.0).unwrap();
        assert!(c.term_limit_gap.abs() < 1e-20);
        assert!(c.term_limit >= 1.0 / (2.0 * PI * 1f64.exp()) - 1e-15);
        assert!(!c.terms_vanish);
        assert!(c.left_side.is_finite());
        let (n, d) = (1000usize, 0.01);
        let grow: f64 = (n..2 * n).map(|k| coco_term(1.0, k).abs()).sum();
        assert!(grow >= n as f64 * (1.0 - d) * c.term_limit);
    }
}
