//! Stopping sequences on vertical lines and the alternating reflection series
//! built from them.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::densities::formulas::{self as f, Side};
use crate::error::{Error, Result};
use crate::series::{cauchy, Extrapolated};

/// The first time `Re B` has visited `b₁`, then `b₂`, … in order, from `Re B₀ = start`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoppingSequence {
    start: f64,
    levels: Vec<f64>,
}

impl StoppingSequence {
    pub fn new(start: f64, levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::OutOfRange("a stopping sequence needs at least one level".into()));
        }
        let all_finite = start.is_finite() && levels.iter().all(|b| b.is_finite());
        let distinct = std::iter::once(&start).chain(&levels).zip(&levels).all(|(p, q)| p != q);
        if !all_finite || !distinct {
            return Err(Error::OutOfRange(format!("levels must be finite with distinct neighbors: {start} {levels:?}")));
        }
        Ok(Self { start, levels })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }
}

/// Total variation `Σ|b_j − b_{j−1}|`: the Cauchy scale of `B` at the
/// sequence's stopping time on the final line.
pub fn collapse(seq: &StoppingSequence) -> f64 {
    std::iter::once(&seq.start).chain(&seq.levels).zip(&seq.levels).map(|(p, q)| (q - p).abs()).sum()
}

/// Which reflection series, with the start parameters it depends on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeriesKind {
    /// Line `Re z = 1` of `|Re z| < 1`, real start `a`; evaluated at height `y`.
    StripRight { a: f64 },
    /// Line `Re z = −1`.
    StripLeft { a: f64 },
    /// Bottom edge of the half-strip from `α + iβ`; evaluated at `x`.
    HalfstripBottom { alpha: f64, beta: f64 },
    /// Side `Re z = 1` of the rectangle of half-height `k` from `α + iβ`, as
    /// reflected strip densities; evaluated at height `y`.
    RectangleVertical { alpha: f64, beta: f64, k: f64 },
    /// The same side as rotated half-strip densities.
    RectangleHorizontal { alpha: f64, beta: f64, k: f64 },
}

/// Names accepted by [`SeriesKind::from_name`].
pub const SERIES_NAMES: [&str; 5] =
    ["halfstrip_bottom", "rectangle_horizontal", "rectangle_vertical", "strip_left", "strip_right"];

impl SeriesKind {
    /// Build a kind from its name and a parameter list in the field order.
    pub fn from_name(name: &str, params: &[f64]) -> Result<Self> {
        let need = |n: usize| {
            if params.len() == n {
                Ok(())
            } else {
                Err(Error::OutOfRange(format!("{name} takes {n} parameters, got {}", params.len())))
            }
        };
        let kind = match name.parse::<SeriesName>()? {
            SeriesName::StripRight => {
                need(1)?;
                SeriesKind::StripRight { a: params[0] }
            }
            SeriesName::StripLeft => {
                need(1)?;
                SeriesKind::StripLeft { a: params[0] }
            }
            SeriesName::HalfstripBottom => {
                need(2)?;
                SeriesKind::HalfstripBottom { alpha: params[0], beta: params[1] }
            }
            SeriesName::RectangleVertical => {
                need(3)?;
                SeriesKind::RectangleVertical { alpha: params[0], beta: params[1], k: params[2] }
            }
            SeriesName::RectangleHorizontal => {
                need(3)?;
                SeriesKind::RectangleHorizontal { alpha: params[0], beta: params[1], k: params[2] }
            }
        };
        Ok(kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SeriesName {
    StripRight,
    StripLeft,
    HalfstripBottom,
    RectangleVertical,
    RectangleHorizontal,
}

impl FromStr for SeriesName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strip_right" => Ok(SeriesName::StripRight),
            "strip_left" => Ok(SeriesName::StripLeft),
            "halfstrip_bottom" => Ok(SeriesName::HalfstripBottom),
            "rectangle_vertical" => Ok(SeriesName::RectangleVertical),
            "rectangle_horizontal" => Ok(SeriesName::RectangleHorizontal),
            "annulus" => Err(Error::Unsupported(
                "the annulus reflection terms do not vanish; use the identities diagnostic instead".into(),
            )),
            other => Err(Error::Unsupported(format!("no reflection series named {other:?}"))),
        }
    }
}

/// One kernel of a reflection series. What `scale` and `center` mean depends
/// on the series kind; see [`ReflectionSeries::kernel`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub sign: i8,
    pub scale: f64,
    pub center: f64,
}

/// An alternating series of kernels, generated lazily.
///
/// Consecutive terms with the same sign form one block; block sums alternate
/// in sign and decrease, so consecutive block partial sums bracket the limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectionSeries {
    kind: SeriesKind,
}

pub fn build_series(kind: SeriesKind) -> Result<ReflectionSeries> {
    let bad = || Err(Error::OutOfRange(format!("parameters outside the domain: {kind:?}")));
    match kind {
        SeriesKind::StripRight { a } | SeriesKind::StripLeft { a } if !(a.abs() < 1.0) => bad(),
        SeriesKind::HalfstripBottom { alpha, beta } if !(alpha.abs() < 1.0 && beta > 0.0 && beta.is_finite()) => bad(),
        SeriesKind::RectangleVertical { alpha, beta, k } | SeriesKind::RectangleHorizontal { alpha, beta, k }
            if !(k > 0.0 && k.is_finite() && alpha.abs() < 1.0 && beta.abs() < k) =>
        {
            bad()
        }
        _ => Ok(ReflectionSeries { kind }),
    }
}

/// `0, 1, −1, 2, −2, …`
fn zigzag(n: usize) -> i64 {
    let h = n.div_ceil(2) as i64;
    if n % 2 == 1 {
        h
    } else {
        -h
    }
}

fn parity_sign(m: i64) -> i8 {
    if m.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

impl ReflectionSeries {
    pub fn kind(&self) -> SeriesKind {
        self.kind
    }

    /// The `n`-th term, `n ≥ 0`.
    pub fn term(&self, n: usize) -> Term {
        match self.kind {
            SeriesKind::StripRight { a } | SeriesKind::RectangleHorizontal { alpha: a, .. } => {
                self.strip_term(a, 1.0, n)
            }
            SeriesKind::StripLeft { a } => self.strip_term(a, -1.0, n),
            SeriesKind::HalfstripBottom { alpha, beta } => {
                let m = zigzag(n);
                let s = parity_sign(m);
                Term { sign: s, scale: beta, center: s as f64 * (alpha - 2.0 * m as f64) }
            }
            SeriesKind::RectangleVertical { beta, k, .. } => {
                let m = zigzag(n);
                let s = parity_sign(m);
                Term { sign: s, scale: 1.0, center: s as f64 * (beta - 2.0 * m as f64 * k) }
            }
        }
    }

    fn strip_term(&self, a: f64, last: f64, n: usize) -> Term {
        // collapse of the alternating levels b₁, …, b_j = last: |b₁ − a| + 2(j − 1)
        let first = if n % 2 == 0 { last } else { -last };
        let scale = (first - a).abs() + 2.0 * n as f64;
        let center = match self.kind {
            SeriesKind::RectangleHorizontal { beta, .. } => beta,
            _ => 0.0,
        };
        Term { sign: if n % 2 == 0 { 1 } else { -1 }, scale, center }
    }

    /// Lazy iterator over all terms.
    pub fn terms(&self) -> impl Iterator<Item = Term> + Clone + '_ {
        (0..).map(move |n| self.term(n))
    }

    /// Value of one kernel at `point` (height or abscissa, by kind).
    pub fn kernel(&self, t: Term, point: f64) -> f64 {
        let v = match self.kind {
            SeriesKind::StripRight { .. } | SeriesKind::StripLeft { .. } | SeriesKind::HalfstripBottom { .. } => {
                cauchy(t.center, t.scale, point)
            }
            SeriesKind::RectangleVertical { alpha, .. } => f::strip_conformal(Side::Right, alpha, point - t.center),
            SeriesKind::RectangleHorizontal { k, .. } => {
                f::halfstrip_bottom(t.center / k, t.scale / k, point / k) / k
            }
        };
        t.sign as f64 * v
    }

    /// Signed block sums at `point`: runs of equal-sign terms merged.
    pub fn blocks(&self, point: f64) -> impl Iterator<Item = f64> + '_ {
        let mut terms = self.terms().peekable();
        std::iter::from_fn(move || {
            let first = terms.next()?;
            let mut sum = self.kernel(first, point);
            while let Some(t) = terms.next_if(|t| t.sign == first.sign) {
                sum += self.kernel(t, point);
            }
            Some(sum)
        })
    }

    /// Limit of the series at `point`, extrapolated where convergence is algebraic.
    pub fn limit(&self, point: f64) -> Extrapolated {
        let exact = |(value, error, terms): (f64, f64, usize)| Extrapolated { value, error, terms };
        match self.kind {
            SeriesKind::StripRight { a } => f::strip_reflection(Side::Right, a, point),
            SeriesKind::StripLeft { a } => f::strip_reflection(Side::Left, a, point),
            SeriesKind::HalfstripBottom { alpha, beta } => f::halfstrip_bottom_reflection(alpha, beta, point),
            SeriesKind::RectangleVertical { alpha, beta, k } => {
                exact(f::rectangle_vertical(alpha, beta, k, point, None))
            }
            SeriesKind::RectangleHorizontal { alpha, beta, k } => {
                exact(f::rectangle_horizontal(alpha, beta, k, point, None))
            }
        }
    }
}

/// Bracketed evaluation of a reflection series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bracket {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Partial sum of the first `n` blocks with the bracket formed by the partial
/// sums of `n − 1` and `n` blocks.
pub fn eval_series(series: &ReflectionSeries, point: f64, n: usize) -> Result<Bracket> {
    if n < 2 {
        return Err(Error::OutOfRange(format!("need at least 2 blocks, got {n}")));
    }
    let mut prev = 0.0;
    let mut sum = 0.0;
    for b in series.blocks(point).take(n) {
        prev = sum;
        sum += b;
    }
    Ok(Bracket { value: sum, lower: prev.min(sum), upper: prev.max(sum) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn seq(start: f64, levels: &[f64]) -> StoppingSequence {
        StoppingSequence::new(start, levels.to_vec()).unwrap()
    }

    #[test]
    fn collapse_examples() {
        assert_eq!(collapse(&seq(0.0, &[1.0])), 1.0);
        assert_eq!(collapse(&seq(0.0, &[-1.0, 1.0])), 3.0);
        assert_eq!(collapse(&seq(0.0, &[1.0, -1.0, 1.0])), 5.0);
        assert_eq!(collapse(&seq(0.0, &[0.5, 1.0])), collapse(&seq(0.0, &[1.0])));
    }

    #[test]
    fn strip_scales_are_collapsed_sequences() {
        for (kind, last) in [(SeriesKind::StripRight { a: 0.3 }, 1.0), (SeriesKind::StripLeft { a: 0.3 }, -1.0)] {
            let s = build_series(kind).unwrap();
            for (n, t) in s.terms().take(8).enumerate() {
                let levels: Vec<f64> = (0..=n).map(|i| if (n - i) % 2 == 0 { last } else { -last }).collect();
                assert_abs_diff_eq!(t.scale, collapse(&seq(0.3, &levels)), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn invalid_sequences() {
        assert!(StoppingSequence::new(0.0, vec![]).is_err());
        assert!(StoppingSequence::new(0.0, vec![1.0, 1.0]).is_err());
        assert!(StoppingSequence::new(1.0, vec![1.0]).is_err());
    }

    #[test]
    fn strip_right_terms() {
        let s = build_series(SeriesKind::StripRight { a: 0.0 }).unwrap();
        let t: Vec<_> = s.terms().take(4).map(|t| (t.sign, t.scale)).collect();
        assert_eq!(t, vec![(1, 1.0), (-1, 3.0), (1, 5.0), (-1, 7.0)]);
        let a = 0.3;
        let s = build_series(SeriesKind::StripRight { a }).unwrap();
        for (n, t) in s.terms().take(6).enumerate() {
            assert_abs_diff_eq!(t.scale, f::strip_reflection_scale(Side::Right, a, n + 1), epsilon = 1e-15);
        }
    }

    #[test]
    fn halfstrip_centers() {
        let (al, x) = (0.3, -0.2);
        let s = build_series(SeriesKind::HalfstripBottom { alpha: al, beta: 0.7 }).unwrap();
        let signs: Vec<i8> = s.terms().take(5).map(|t| t.sign).collect();
        assert_eq!(signs, vec![1, -1, -1, 1, 1]);
        // each kernel equals the start kernel evaluated at the reflected point
        let reflected = [x, 2.0 - x, -2.0 - x, 4.0 + x, -4.0 + x];
        for (t, z) in s.terms().zip(reflected) {
            assert_abs_diff_eq!(cauchy(t.center, t.scale, x), cauchy(al, 0.7, z), epsilon = 1e-15);
        }
    }

    #[test]
    fn rectangle_vertical_centers() {
        let (k, y) = (1.0, 0.3);
        let s = build_series(SeriesKind::RectangleVertical { alpha: 0.0, beta: 0.0, k }).unwrap();
        let reflected = [y, 2.0 * k - y, -2.0 * k - y, 4.0 * k + y, -4.0 * k + y];
        for (t, z) in s.terms().zip(reflected) {
            assert_abs_diff_eq!((y - t.center).abs(), z.abs(), epsilon = 1e-15);
        }
    }

    #[test]
    fn leibniz_at_the_center() {
        let s = build_series(SeriesKind::StripRight { a: 0.0 }).unwrap();
        let b = eval_series(&s, 0.0, 100_000).unwrap();
        assert!(b.lower <= 0.25 && 0.25 <= b.upper);
        assert_abs_diff_eq!(0.5 * (b.lower + b.upper), 0.25, epsilon = 1e-10);
        assert_abs_diff_eq!(s.limit(0.0).value, 0.25, epsilon = 1e-13);
    }

    #[test]
    fn brackets_hold() {
        let kinds = [
            SeriesKind::StripRight { a: 0.4 },
            SeriesKind::StripLeft { a: -0.7 },
            SeriesKind::HalfstripBottom { alpha: 0.3, beta: 0.7 },
            SeriesKind::RectangleVertical { alpha: 0.2, beta: -0.3, k: 0.8 },
            SeriesKind::RectangleHorizontal { alpha: 0.2, beta: -0.3, k: 0.8 },
        ];
        for kind in kinds {
            let s = build_series(kind).unwrap();
            for p in [-0.5, 0.0, 0.6] {
                let lim = s.limit(p).value;
                for n in 2..40 {
                    let b = eval_series(&s, p, n).unwrap();
                    assert!(b.lower - 1e-15 <= lim && lim <= b.upper + 1e-15, "{kind:?} p={p} n={n}");
                }
            }
        }
    }

    #[test]
    fn refuses_annulus() {
        assert!(matches!(SeriesKind::from_name("annulus", &[]), Err(Error::Unsupported(_))));
        assert!(SeriesKind::from_name("strip_right", &[0.1]).is_ok());
        assert!(build_series(SeriesKind::StripRight { a: 1.0 }).is_err());
    }
}
