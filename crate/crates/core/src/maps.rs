//! Analytic maps with derivatives and closed-form inverse branches.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{c, sqrt_upper, BoundaryCurve, Complex};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "map", rename_all = "snake_case")]
pub enum AnalyticMap {
    /// `(az + b)/(cz + d)`
    Mobius { a: Complex, b: Complex, c: Complex, d: Complex },
    /// `ψ_a(z) = (z − a)/(1 − āz)`
    DiskAutomorphism { a: Complex },
    /// `u + vz`
    ScaleTranslate { u: Complex, v: Complex },
    /// `(z − i)/(z + i)`
    Cayley,
    /// `e^{iz}`
    ExpI,
    /// `e^{rz}`
    ExpR { r: f64 },
    /// `tan(πz/4)`
    TanQuarter,
    /// `sin(πz/2)`
    SinHalf,
    /// principal `z^p`
    Power { p: f64 },
    Square,
    /// `(1 + z)/(1 − z)`
    Phi,
    /// square root with values in `H ∪ [0, ∞)`
    SqrtUpper,
    /// `outer ∘ inner`
    Compose { outer: Box<AnalyticMap>, inner: Box<AnalyticMap> },
}

/// A preimage lying on a source curve, with its arclength parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preimage {
    pub z: Complex,
    pub s: f64,
}

const LOCATE_TOL: f64 = 1e-9;
const ROUND_TRIP_TOL: f64 = 1e-9;

fn singular(map: &AnalyticMap, z: Complex) -> Error {
    Error::Singular { map: map.label(), re: z.re, im: z.im }
}

/// `tan` that stays finite for large imaginary parts.
fn tan_stable(z: Complex) -> Complex {
    let (x2, y2) = (2.0 * z.re, 2.0 * z.im);
    let ch = y2.cosh();
    c(x2.sin() / ch, y2.tanh()) / (1.0 + x2.cos() / ch)
}

impl AnalyticMap {
    pub fn mobius(a: Complex, b: Complex, c: Complex, d: Complex) -> Result<Self> {
        if (a * d - b * c).norm() == 0.0 {
            return Err(Error::OutOfRange("mobius map needs ad − bc ≠ 0".into()));
        }
        Ok(AnalyticMap::Mobius { a, b, c, d })
    }

    pub fn disk_automorphism(a: Complex) -> Result<Self> {
        if a.norm() >= 1.0 {
            return Err(Error::OutOfRange(format!("disk automorphism needs |a| < 1, got {a}")));
        }
        Ok(AnalyticMap::DiskAutomorphism { a })
    }

    pub fn scale_translate(u: Complex, v: Complex) -> Result<Self> {
        if v.norm() == 0.0 {
            return Err(Error::OutOfRange("scale_translate needs v ≠ 0".into()));
        }
        Ok(AnalyticMap::ScaleTranslate { u, v })
    }

    pub fn exp_r(r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::OutOfRange(format!("exp_r needs r > 0, got {r}")));
        }
        Ok(AnalyticMap::ExpR { r })
    }

    pub fn power(p: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::OutOfRange(format!("power needs p > 0, got {p}")));
        }
        Ok(AnalyticMap::Power { p })
    }

    /// `outer ∘ inner`.
    pub fn compose(outer: AnalyticMap, inner: AnalyticMap) -> Self {
        AnalyticMap::Compose { outer: Box::new(outer), inner: Box::new(inner) }
    }

    /// Compose a chain applied left to right: `chain([f, g, h]) = h ∘ g ∘ f`.
    pub fn chain(maps: impl IntoIterator<Item = AnalyticMap>) -> Option<Self> {
        maps.into_iter().reduce(|inner, outer| AnalyticMap::compose(outer, inner))
    }

    pub fn label(&self) -> String {
        match self {
            AnalyticMap::Mobius { .. } => "mobius".into(),
            AnalyticMap::DiskAutomorphism { a } => format!("psi[{a}]"),
            AnalyticMap::ScaleTranslate { u, v } => format!("scale_translate[{u},{v}]"),
            AnalyticMap::Cayley => "cayley".into(),
            AnalyticMap::ExpI => "exp_i".into(),
            AnalyticMap::ExpR { r } => format!("exp_r[{r}]"),
            AnalyticMap::TanQuarter => "tan_quarter".into(),
            AnalyticMap::SinHalf => "sin_half".into(),
            AnalyticMap::Power { p } => format!("power[{p}]"),
            AnalyticMap::Square => "square".into(),
            AnalyticMap::Phi => "phi".into(),
            AnalyticMap::SqrtUpper => "sqrt_upper".into(),
            AnalyticMap::Compose { outer, inner } => format!("{}∘{}", outer.label(), inner.label()),
        }
    }

    /// True when the map is one-to-one on its domain of analyticity.
    pub fn is_injective(&self) -> bool {
        match self {
            AnalyticMap::ExpI | AnalyticMap::ExpR { .. } | AnalyticMap::TanQuarter | AnalyticMap::SinHalf => {
                false
            }
            AnalyticMap::Square => false,
            AnalyticMap::Power { p } => *p <= 1.0,
            AnalyticMap::Compose { outer, inner } => outer.is_injective() && inner.is_injective(),
            _ => true,
        }
    }

    pub fn eval(&self, z: Complex) -> Result<Complex> {
        let i = Complex::i();
        let one = c(1.0, 0.0);
        let nonzero = |den: Complex| if den.norm() == 0.0 { Err(singular(self, z)) } else { Ok(den) };
        let w = match self {
            AnalyticMap::Mobius { a, b, c: cc, d } => (a * z + b) / nonzero(cc * z + d)?,
            AnalyticMap::DiskAutomorphism { a } => (z - a) / nonzero(one - a.conj() * z)?,
            AnalyticMap::ScaleTranslate { u, v } => u + v * z,
            AnalyticMap::Cayley => (z - i) / nonzero(z + i)?,
            AnalyticMap::ExpI => (i * z).exp(),
            AnalyticMap::ExpR { r } => (z * *r).exp(),
            AnalyticMap::TanQuarter => {
                let t = tan_stable(z * FRAC_PI_4);
                if !t.re.is_finite() || !t.im.is_finite() {
                    return Err(singular(self, z));
                }
                t
            }
            AnalyticMap::SinHalf => (z * FRAC_PI_2).sin(),
            AnalyticMap::Power { p } => {
                if z.norm() == 0.0 {
                    c(0.0, 0.0)
                } else {
                    Complex::from_polar(z.norm().powf(*p), z.arg() * p)
                }
            }
            AnalyticMap::Square => z * z,
            AnalyticMap::Phi => (one + z) / nonzero(one - z)?,
            AnalyticMap::SqrtUpper => sqrt_upper(z),
            AnalyticMap::Compose { outer, inner } => outer.eval(inner.eval(z)?)?,
        };
        Ok(w)
    }

    pub fn deriv(&self, z: Complex) -> Result<Complex> {
        let i = Complex::i();
        let one = c(1.0, 0.0);
        let nonzero = |den: Complex| if den.norm() == 0.0 { Err(singular(self, z)) } else { Ok(den) };
        let d = match self {
            AnalyticMap::Mobius { a, b, c: cc, d } => {
                let den = nonzero(cc * z + d)?;
                (a * d - b * cc) / (den * den)
            }
            AnalyticMap::DiskAutomorphism { a } => {
                let den = nonzero(one - a.conj() * z)?;
                (1.0 - a.norm_sqr()) / (den * den)
            }
            AnalyticMap::ScaleTranslate { v, .. } => *v,
            AnalyticMap::Cayley => {
                let den = nonzero(z + i)?;
                2.0 * i / (den * den)
            }
            AnalyticMap::ExpI => i * (i * z).exp(),
            AnalyticMap::ExpR { r } => *r * (z * *r).exp(),
            AnalyticMap::TanQuarter => {
                let t = self.eval(z)?;
                FRAC_PI_4 * (one + t * t)
            }
            AnalyticMap::SinHalf => FRAC_PI_2 * (z * FRAC_PI_2).cos(),
            AnalyticMap::Power { p } => {
                if z.norm() == 0.0 {
                    if *p == 1.0 {
                        one
                    } else if *p > 1.0 {
                        c(0.0, 0.0)
                    } else {
                        return Err(singular(self, z));
                    }
                } else {
                    Complex::from_polar(p * z.norm().powf(p - 1.0), z.arg() * (p - 1.0))
                }
            }
            AnalyticMap::Square => 2.0 * z,
            AnalyticMap::Phi => {
                let den = nonzero(one - z)?;
                2.0 / (den * den)
            }
            AnalyticMap::SqrtUpper => 0.5 / nonzero(sqrt_upper(z))?,
            AnalyticMap::Compose { outer, inner } => outer.deriv(inner.eval(z)?)? * inner.deriv(z)?,
        };
        Ok(d)
    }

    /// All inverse-branch values of `w` with lattice index `|k| ≤ index_bound`.
    /// Points outside the map's domain are dropped by the caller's round-trip check.
    pub fn candidates(&self, w: Complex, index_bound: usize) -> Vec<Complex> {
        let i = Complex::i();
        let one = c(1.0, 0.0);
        let kb = index_bound as i64;
        let finite = |z: Complex| z.re.is_finite() && z.im.is_finite();
        let out: Vec<Complex> = match self {
            AnalyticMap::Mobius { a, b, c: cc, d } => vec![(d * w - b) / (a - cc * w)],
            AnalyticMap::DiskAutomorphism { a } => vec![(w + a) / (one + a.conj() * w)],
            AnalyticMap::ScaleTranslate { u, v } => vec![(w - u) / v],
            AnalyticMap::Cayley => vec![i * (one + w) / (one - w)],
            AnalyticMap::ExpI => {
                if w.norm() == 0.0 {
                    vec![]
                } else {
                    let base = c(w.arg(), -w.norm().ln());
                    (-kb..=kb).map(|k| base + 2.0 * PI * k as f64).collect()
                }
            }
            AnalyticMap::ExpR { r } => {
                if w.norm() == 0.0 {
                    vec![]
                } else {
                    let base = c(w.norm().ln(), w.arg());
                    (-kb..=kb).map(|k| (base + c(0.0, 2.0 * PI * k as f64)) / *r).collect()
                }
            }
            AnalyticMap::TanQuarter => {
                let base = w.atan() * (4.0 / PI);
                (-kb..=kb).map(|k| base + 4.0 * k as f64).collect()
            }
            AnalyticMap::SinHalf => {
                let mut roots = vec![sin_half_root(w)];
                if w.im == 0.0 {
                    roots.push(roots[0].conj());
                }
                roots
                    .into_iter()
                    .flat_map(|zeta| {
                        (-kb..=kb).map(move |k| {
                            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                            zeta * sign + 2.0 * k as f64
                        })
                    })
                    .collect()
            }
            AnalyticMap::Power { p } => {
                if w.norm() == 0.0 {
                    vec![c(0.0, 0.0)]
                } else {
                    let rho = w.norm().powf(1.0 / p);
                    (-kb..=kb)
                        .map(|k| (w.arg() + 2.0 * PI * k as f64) / p)
                        .filter(|t| *t > -PI && *t <= PI)
                        .map(|t| Complex::from_polar(rho, t))
                        .collect()
                }
            }
            AnalyticMap::Square => {
                let s = w.sqrt();
                vec![s, -s]
            }
            AnalyticMap::Phi => vec![(w - one) / (w + one)],
            AnalyticMap::SqrtUpper => vec![w * w],
            AnalyticMap::Compose { outer, inner } => outer
                .candidates(w, index_bound)
                .into_iter()
                .flat_map(|v| inner.candidates(v, index_bound))
                .collect(),
        };
        out.into_iter().filter(|z| finite(*z)).collect()
    }

    /// Preimages of `w` on curve `c`, sorted by arclength, duplicates removed.
    pub fn preimages_on(&self, w: Complex, curve: &BoundaryCurve, index_bound: usize) -> Vec<Preimage> {
        let mut found: Vec<Preimage> = self
            .candidates(w, index_bound)
            .into_iter()
            .filter(|z| match self.eval(*z) {
                Ok(fz) => (fz - w).norm() <= ROUND_TRIP_TOL * (1.0 + w.norm()),
                Err(_) => false,
            })
            .filter_map(|z| curve.locate(z, LOCATE_TOL).map(|s| Preimage { z: curve.point_at(s), s }))
            .collect();
        found.sort_by(|a, b| a.s.total_cmp(&b.s));
        found.dedup_by(|a, b| (a.s - b.s).abs() <= 1e-12 * (1.0 + a.s.abs()));
        found
    }
}

/// A root `ζ` of `sin(πζ/2) = w`, with `Re ζ ∈ [−1, 1]` and the branch fixed
/// explicitly on the real cuts `|w| > 1`.
fn sin_half_root(w: Complex) -> Complex {
    if w.im == 0.0 && w.re.abs() > 1.0 {
        let y = (2.0 / PI) * w.re.abs().acosh();
        return c(w.re.signum(), y);
    }
    w.asin() * (2.0 / PI)
}
