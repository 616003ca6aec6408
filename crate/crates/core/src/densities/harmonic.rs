use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Complex;

/// A harmonic test function for Dynkin checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "h", content = "q", rename_all = "snake_case")]
pub enum HarmonicTestFn {
    One,
    /// `Re z^q`, `1 ≤ q ≤ 6`
    RePow(u32),
    /// `Im z^q`, `1 ≤ q ≤ 6`
    ImPow(u32),
    /// `log|z|`, harmonic away from 0
    LogAbs,
}

impl HarmonicTestFn {
    pub fn re_pow(q: u32) -> Result<Self> {
        Self::check(q).map(|_| HarmonicTestFn::RePow(q))
    }

    pub fn im_pow(q: u32) -> Result<Self> {
        Self::check(q).map(|_| HarmonicTestFn::ImPow(q))
    }

    fn check(q: u32) -> Result<()> {
        if (1..=6).contains(&q) {
            Ok(())
        } else {
            Err(Error::OutOfRange(format!("power must lie in 1..=6, got {q}")))
        }
    }

    /// Every catalog entry, in a fixed order.
    pub fn catalog() -> Vec<Self> {
        std::iter::once(HarmonicTestFn::One)
            .chain((1..=6).map(HarmonicTestFn::RePow))
            .chain((1..=6).map(HarmonicTestFn::ImPow))
            .chain(std::iter::once(HarmonicTestFn::LogAbs))
            .collect()
    }

    pub fn label(&self) -> String {
        match self {
            HarmonicTestFn::One => "1".into(),
            HarmonicTestFn::RePow(q) => format!("re_z{q}"),
            HarmonicTestFn::ImPow(q) => format!("im_z{q}"),
            HarmonicTestFn::LogAbs => "log_abs".into(),
        }
    }

    pub fn parse(label: &str) -> Result<Self> {
        let unknown = || Error::Unknown(format!("harmonic function {label:?}"));
        match label {
            "1" | "one" => Ok(HarmonicTestFn::One),
            "log_abs" => Ok(HarmonicTestFn::LogAbs),
            _ => {
                let (ctor, q): (fn(u32) -> Result<Self>, &str) = if let Some(q) = label.strip_prefix("re_z") {
                    (Self::re_pow, q)
                } else if let Some(q) = label.strip_prefix("im_z") {
                    (Self::im_pow, q)
                } else {
                    return Err(unknown());
                };
                ctor(q.parse().map_err(|_| unknown())?)
            }
        }
    }

    pub fn eval(&self, z: Complex) -> f64 {
        match *self {
            HarmonicTestFn::One => 1.0,
            HarmonicTestFn::RePow(q) => z.powu(q).re,
            HarmonicTestFn::ImPow(q) => z.powu(q).im,
            HarmonicTestFn::LogAbs => z.norm().ln(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::c;

    #[test]
    fn discrete_laplacian_vanishes() {
        let lap = |f: &HarmonicTestFn, z: Complex, h: f64| {
            (f.eval(z + h) + f.eval(z - h) + f.eval(z + c(0.0, h)) + f.eval(z - c(0.0, h)) - 4.0 * f.eval(z)) / (h * h)
        };
        for f in HarmonicTestFn::catalog() {
            for z in [c(0.3, 0.4), c(-1.2, 0.7), c(0.9, -1.5)] {
                // five-point stencil with its h² error extrapolated away
                let h = 1e-2;
                let l = (4.0 * lap(&f, z, h) - lap(&f, z, 2.0 * h)) / 3.0;
                assert!(l.abs() < 1e-6, "{f:?} at {z}: {l}");
            }
        }
    }

    #[test]
    fn labels_round_trip() {
        for f in HarmonicTestFn::catalog() {
            assert_eq!(HarmonicTestFn::parse(&f.label()).unwrap(), f);
        }
        assert!(HarmonicTestFn::parse("re_z7").is_err());
    }
}
