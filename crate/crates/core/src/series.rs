//! Summation helpers: Richardson extrapolation of smooth series, Cauchy
//! lattice sums with an integral tail, and the alternating zeta values.

use std::f64::consts::PI;

/// A series value together with an error estimate and the number of terms used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrapolated {
    pub value: f64,
    pub error: f64,
    pub terms: usize,
}

/// Sum `Σ_{n≥0} g(n)` where `g` is smooth in `n` and its partial sums have an
/// asymptotic expansion in powers of `1/N`.
///
/// Partial sums are taken at `N = n0·2^k`, `k < levels`, and combined in a
/// Richardson table. The error is the gap between the last two diagonal entries.
pub fn richardson<G: Fn(usize) -> f64>(g: G, n0: usize, levels: usize) -> Extrapolated {
    assert!(n0 >= 1 && levels >= 2);
    let mut partials = Vec::with_capacity(levels);
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut n = 0;
    for k in 0..levels {
        let upto = n0 << k;
        while n < upto {
            // Neumaier compensated summation
            let t = g(n);
            let s = sum + t;
            comp += if sum.abs() >= t.abs() { (sum - s) + t } else { (t - s) + sum };
            sum = s;
            n += 1;
        }
        partials.push(sum + comp);
    }
    let mut row = partials;
    let mut diag = vec![*row.last().expect("levels >= 2")];
    for m in 1..levels {
        let f = (1u64 << m) as f64;
        row = row.windows(2).map(|w| (f * w[1] - w[0]) / (f - 1.0)).collect();
        diag.push(*row.last().expect("row shrinks by one per level"));
    }
    let value = diag[diag.len() - 1];
    let error = (value - diag[diag.len() - 2]).abs() + 4.0 * f64::EPSILON * value.abs();
    Extrapolated { value, error, terms: n }
}

/// Level count and starting size used by the density and identity code.
pub const RICHARDSON_LEVELS: usize = 10;

/// Starting size that puts the first partial sum past the bump of a Cauchy
/// kernel of width `scale` centered at `center`.
pub fn richardson_start(center: f64, scale: f64) -> usize {
    16usize.max((2.0 * (center.abs() + scale.abs())).ceil() as usize)
}

/// Cauchy kernel `(1/π)·b/(b² + (x−c)²)`.
#[inline]
pub fn cauchy(center: f64, scale: f64, x: f64) -> f64 {
    let d = x - center;
    scale / (PI * (scale * scale + d * d))
}

/// `Σ_{j∈ℤ} cauchy(center, scale, offset + spacing·j)`, with the terms
/// `|j| ≤ k` summed directly and the remainder replaced by the integral
/// beyond `|j| = k + 1/2` (midpoint Euler–Maclaurin).
pub fn cauchy_lattice(center: f64, scale: f64, spacing: f64, offset: f64, k: usize) -> Extrapolated {
    let sum: f64 = (-(k as i64)..=k as i64)
        .map(|j| cauchy(center, scale, offset + spacing * j as f64))
        .sum();
    let t = spacing * (k as f64 + 0.5);
    let u = offset - center;
    let upper = scale.atan2(t + u) / (PI * spacing);
    let lower = scale.atan2(t - u) / (PI * spacing);
    // first midpoint correction f'(T)/24 per side, derivative taken in j
    let slope = |v: f64| -2.0 * scale * v * spacing / (PI * (scale * scale + v * v).powi(2));
    let corr = (slope(t + u) + slope(t - u)) / 24.0;
    let jt = (t - u.abs()) / spacing;
    let err = if jt > 1.0 { corr.abs() / (jt * jt) } else { f64::INFINITY };
    Extrapolated { value: sum + upper + lower + corr, error: err, terms: 2 * k + 1 }
}

/// Integral of `cauchy(center, scale, ·)` over `(-∞, x]`.
#[inline]
pub fn cauchy_cdf(center: f64, scale: f64, x: f64) -> f64 {
    0.5 + ((x - center) / scale).atan() / PI
}

/// Alternating zeta value `Δ_r = Σ_{k≥1} (−1)^{k−1}/k^r`.
///
/// `Δ_1 = ln 2`; larger `r` are summed with Richardson extrapolation on pairs.
pub fn eta(r: u32) -> Extrapolated {
    assert!(r >= 1, "eta needs r >= 1");
    if r == 1 {
        return Extrapolated { value: std::f64::consts::LN_2, error: 0.0, terms: 0 };
    }
    let p = r as i32;
    richardson(
        |n| {
            let a = (2 * n + 1) as f64;
            a.powi(-p) - (a + 1.0).powi(-p)
        },
        16,
        RICHARDSON_LEVELS,
    )
}
