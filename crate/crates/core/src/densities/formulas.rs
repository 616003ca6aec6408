//! Pointwise density formulas and their antiderivatives. Every function takes
//! plain reals; validation happens in the constructors of [`super::Density`].

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::geometry::{c, sqrt_upper, Complex};
use crate::series::{cauchy, cauchy_cdf, cauchy_lattice, richardson, Extrapolated, RICHARDSON_LEVELS};

/// Which of the two vertical sides `Re z = ∓1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => -1.0,
            Side::Right => 1.0,
        }
    }
}

// ---------------------------------------------------------------- disk

/// Poisson kernel of the unit disk for a start at radius `rho` on the
/// positive axis, as a density in the angle `x`.
pub fn poisson_disk(rho: f64, x: f64) -> f64 {
    (1.0 - rho * rho) / (2.0 * PI * (1.0 - 2.0 * rho * x.cos() + rho * rho))
}

/// Continuous antiderivative of [`poisson_disk`] with value 0 at `x = 0`; it
/// grows by exactly 1 over every period.
pub fn poisson_disk_antideriv(rho: f64, x: f64) -> f64 {
    let n = (x / (2.0 * PI)).round();
    let t = x - 2.0 * PI * n;
    let g = ((1.0 + rho) * (t / 2.0).sin()).atan2((1.0 - rho) * (t / 2.0).cos()) / PI;
    g + n
}

// ---------------------------------------------------------------- strip |Re z| < 1

/// Exit density of the strip on the side line, as a function of height `y`,
/// for a real start `a`. Conformal form through `tan(πz/4)`.
pub fn strip_conformal(side: Side, a: f64, y: f64) -> f64 {
    let t = (PI * a / 4.0).tan();
    let sech = 1.0 / (FRAC_PI_2 * y).cosh();
    let th = (FRAC_PI_2 * y).tanh();
    let re = 1.0 - side.sign() * t * sech;
    let im = t * th;
    sech * (1.0 - t * t) / (4.0 * (re * re + im * im))
}

/// Angle on the unit circle of the image of the side point under `tan(πz/4)`.
fn strip_side_angle(side: Side, y: f64) -> f64 {
    let psi = 2.0 * (PI * y / 4.0).tanh().atan();
    match side {
        Side::Right => psi,
        Side::Left => PI - psi,
    }
}

/// Harmonic measure of `{side + iη : η ≤ y}`, increasing in `y`.
pub fn strip_conformal_cdf(side: Side, a: f64, y: f64) -> f64 {
    let t = (PI * a / 4.0).tan();
    let ang = strip_side_angle(side, y);
    // the start maps to t on the real axis; a negative t is radius |t| at angle π
    let (rho, center) = if t >= 0.0 { (t, 0.0) } else { (-t, PI) };
    let g = |x: f64| poisson_disk_antideriv(rho, x - center);
    match side {
        Side::Right => g(ang) - g(-FRAC_PI_2),
        Side::Left => g(1.5 * PI) - g(ang),
    }
}

/// Mass of a side line from a real start: `(1 ± a)/2`.
pub fn strip_side_mass(side: Side, a: f64) -> f64 {
    0.5 * (1.0 + side.sign() * a)
}

/// Scale of the `j`-th reflected half-plane kernel (`j ≥ 1`) on the given side.
pub fn strip_reflection_scale(side: Side, a: f64, j: usize) -> f64 {
    let a = side.sign() * a;
    let sgn = if j % 2 == 0 { 1.0 } else { -1.0 };
    (2 * j - 1) as f64 + sgn * a
}

fn line_kernel(scale: f64, y: f64) -> f64 {
    cauchy(0.0, scale, y)
}

fn richardson_start_for(y: f64) -> usize {
    16usize.max(y.abs().min(1e4).ceil() as usize)
}

/// Alternating reflection series of the strip, extrapolated to its limit.
pub fn strip_reflection(side: Side, a: f64, y: f64) -> Extrapolated {
    let a = side.sign() * a;
    let g = |n: usize| {
        let m = 4.0 * n as f64;
        line_kernel(m + 1.0 - a, y) - line_kernel(m + 3.0 + a, y)
    };
    richardson(g, richardson_start_for(y), RICHARDSON_LEVELS)
}

/// Raw partial sum of `n` reflection terms, with the first omitted term as bound.
pub fn strip_reflection_partial(side: Side, a: f64, y: f64, n: usize) -> (f64, f64) {
    let term = |j: usize| {
        let sgn = if j % 2 == 1 { 1.0 } else { -1.0 };
        sgn * line_kernel(strip_reflection_scale(side, a, j), y)
    };
    let sum = (1..=n).map(term).sum();
    (sum, term(n + 1).abs())
}

/// Term-wise arctan antiderivative of the reflection series, anchored at the
/// half mass for `y = 0`.
pub fn strip_reflection_cdf(side: Side, a: f64, y: f64) -> Extrapolated {
    let b = side.sign() * a;
    let g = |n: usize| {
        let m = 4.0 * n as f64;
        ((y / (m + 1.0 - b)).atan() - (y / (m + 3.0 + b)).atan()) / PI
    };
    let e = richardson(g, richardson_start_for(y), RICHARDSON_LEVELS);
    Extrapolated { value: 0.5 * strip_side_mass(side, a) + e.value, ..e }
}

// ---------------------------------------------------------------- half-strip |Re z|<1, Im z>0

struct HalfStripStart {
    cos_a: f64,
    sin_a: f64,
    sinh_b: f64,
    inv_sinh_b: f64,
    coth_b: f64,
    cosh_b: f64,
}

impl HalfStripStart {
    fn new(alpha: f64, beta: f64) -> Self {
        let hb = FRAC_PI_2 * beta;
        let sinh_b = hb.sinh();
        Self {
            cos_a: (FRAC_PI_2 * alpha).cos(),
            sin_a: (FRAC_PI_2 * alpha).sin(),
            sinh_b,
            inv_sinh_b: 1.0 / sinh_b,
            coth_b: 1.0 / hb.tanh(),
            cosh_b: hb.cosh(),
        }
    }
}

/// Bottom-edge exit density of the half-strip at `x ∈ (−1, 1)`.
pub fn halfstrip_bottom(alpha: f64, beta: f64, x: f64) -> f64 {
    let h = HalfStripStart::new(alpha, beta);
    let sx = (FRAC_PI_2 * x).sin();
    let cx = (FRAC_PI_2 * x).cos();
    // numerator and denominator divided by sinh²(πβ/2) to stay finite for large β
    let inv = h.inv_sinh_b;
    let den = 1.0 + (h.sin_a * h.sin_a + sx * sx) * inv * inv - 2.0 * h.coth_b * h.sin_a * sx * inv;
    0.5 * h.cos_a * cx * inv / den
}

/// Side-ray exit density of the half-strip at `±1 + iy`, `y > 0`.
pub fn halfstrip_side(side: Side, alpha: f64, beta: f64, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let h = HalfStripStart::new(alpha, beta);
    let hy = FRAC_PI_2 * y;
    let inv_ch = 1.0 / hy.cosh();
    let th = hy.tanh();
    let den = (h.sinh_b * h.sinh_b + h.sin_a * h.sin_a) * inv_ch * inv_ch + 1.0
        - side.sign() * 2.0 * h.cosh_b * h.sin_a * inv_ch;
    0.5 * h.sinh_b * h.cos_a * th * inv_ch / den
}

/// Image of the half-strip start under `sin(πz/2)`: `(Re, Im)`.
pub fn halfstrip_image(alpha: f64, beta: f64) -> (f64, f64) {
    let h = HalfStripStart::new(alpha, beta);
    (h.cosh_b * h.sin_a, h.sinh_b * h.cos_a)
}

pub fn halfstrip_bottom_cdf(alpha: f64, beta: f64, x: f64) -> f64 {
    let (u, v) = halfstrip_image(alpha, beta);
    let x = x.clamp(-1.0, 1.0);
    cauchy_cdf(u, v, (FRAC_PI_2 * x).sin()) - cauchy_cdf(u, v, -1.0)
}

/// Mass of the side ray below height `y`.
pub fn halfstrip_side_cdf(side: Side, alpha: f64, beta: f64, y: f64) -> f64 {
    let (u, v) = halfstrip_image(alpha, beta);
    let ch = (FRAC_PI_2 * y.max(0.0)).cosh();
    match side {
        Side::Right => cauchy_cdf(u, v, ch) - cauchy_cdf(u, v, 1.0),
        Side::Left => cauchy_cdf(u, v, -1.0) - cauchy_cdf(u, v, -ch),
    }
}

/// Reflected half-plane kernels for the bottom edge: `z_m = 2m + (−1)^m x` with
/// sign `(−1)^{|m|}`, summed in pairs of `|m|` and extrapolated.
pub fn halfstrip_bottom_reflection(alpha: f64, beta: f64, x: f64) -> Extrapolated {
    let g = |j: usize| -> f64 {
        if j == 0 {
            return cauchy(alpha, beta, x);
        }
        let sgn = if j % 2 == 0 { 1.0 } else { -1.0 };
        let m = 2.0 * j as f64;
        sgn * (cauchy(alpha, beta, m + sgn * x) + cauchy(alpha, beta, -m + sgn * x))
    };
    let pair = |n: usize| g(2 * n) + g(2 * n + 1);
    let n0 = 16usize.max((alpha.abs() + beta).min(1e4).ceil() as usize);
    richardson(pair, n0, RICHARDSON_LEVELS)
}

// ---------------------------------------------------------------- segment [−1, 1]

/// `(α, β)` with `β > 0` and `sin(π(α + iβ)/2) = ω`.
pub fn segment_lift(omega: Complex) -> (f64, f64) {
    let zeta = if omega.im == 0.0 && omega.re.abs() > 1.0 {
        c(omega.re.signum(), (2.0 / PI) * omega.re.abs().acosh())
    } else {
        omega.asin() * (2.0 / PI)
    };
    let zeta = if zeta.im < 0.0 { c(2.0, 0.0) - zeta } else { zeta };
    (zeta.re, zeta.im)
}

fn phi(z: Complex) -> Complex {
    (1.0 + z) / (1.0 - z)
}

/// Hitting density of `[−1, 1]` at `x̄` (both sides combined) through the chain
/// `φ` then the square root onto the upper half-plane.
pub fn segment_closed(omega: Complex, xbar: f64) -> f64 {
    if xbar.abs() >= 1.0 {
        return 0.0;
    }
    let s = sqrt_upper(phi(omega));
    let v = (1.0 + xbar) / (1.0 - xbar);
    let r = v.sqrt();
    let ray = (cauchy(s.re, s.im, r) + cauchy(s.re, s.im, -r)) / (2.0 * r);
    2.0 / ((1.0 - xbar) * (1.0 - xbar)) * ray
}

/// The covering sum: half-plane kernels at every preimage of `x̄` under
/// `sin(πz/2)`, divided by `|f′| = (π/2)cos(πx/2)`.
pub fn segment_covering(alpha: f64, beta: f64, xbar: f64, k: usize) -> Extrapolated {
    if xbar.abs() >= 1.0 {
        return Extrapolated { value: 0.0, error: 0.0, terms: 0 };
    }
    let x = (2.0 / PI) * xbar.asin();
    let jac = FRAC_PI_2 * (FRAC_PI_2 * x).cos();
    let even = cauchy_lattice(alpha, beta, 4.0, x, k);
    let odd = cauchy_lattice(alpha, beta, 4.0, 2.0 - x, k);
    Extrapolated { value: (even.value + odd.value) / jac, error: (even.error + odd.error) / jac, terms: even.terms + odd.terms }
}

/// Cumulative mass of the covering sum over `[−1, x̄]`.
pub fn segment_covering_cdf(alpha: f64, beta: f64, xbar: f64, k: usize) -> f64 {
    let xbar = xbar.clamp(-1.0, 1.0);
    let x = (2.0 / PI) * xbar.asin();
    lattice_interval_mass(alpha, beta, 4.0, -1.0, x, k) + lattice_interval_mass(alpha, beta, 4.0, 2.0 - x, 3.0, k)
}

/// `Σ_j [F(hi + p·j) − F(lo + p·j)]` for the Cauchy cdf `F`, with the far
/// lattice replaced by the uniform share of the tail mass.
pub fn lattice_interval_mass(center: f64, scale: f64, spacing: f64, lo: f64, hi: f64, k: usize) -> f64 {
    let kk = k as i64;
    let body: f64 = (-kk..=kk)
        .map(|j| {
            let o = spacing * j as f64;
            cauchy_cdf(center, scale, hi + o) - cauchy_cdf(center, scale, lo + o)
        })
        .sum();
    let frac = (hi - lo) / spacing;
    let edge = spacing * (k as f64 + 0.5);
    let mid = 0.5 * (lo + hi);
    let tail = (1.0 - cauchy_cdf(center, scale, mid + edge)) + cauchy_cdf(center, scale, mid - edge);
    body + frac * tail
}

// ---------------------------------------------------------------- rectangle |Re z|<1, |Im z|<k

/// Right-side density of the rectangle as a sum of reflected strip densities.
/// `n = None` sums until the terms fall below double precision.
pub fn rectangle_vertical(alpha: f64, beta: f64, k: f64, y: f64, n: Option<usize>) -> (f64, f64, usize) {
    let term = |m: i64| {
        let sgn = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let ym = 2.0 * m as f64 * k + sgn * y - beta;
        sgn * strip_conformal(Side::Right, alpha, ym)
    };
    let pair = |m: i64| if m == 0 { term(0) } else { term(m) + term(-m) };
    sum_until(pair, n)
}

/// Right-side density of the rectangle as a sum of rotated and scaled
/// half-strip bottom densities, one per reflected vertical line.
pub fn rectangle_horizontal(alpha: f64, beta: f64, k: f64, y: f64, n: Option<usize>) -> (f64, f64, usize) {
    let term = |j: i64| {
        let j = j + 1;
        let sgn = if j % 2 == 0 { 1.0 } else { -1.0 };
        let dist = (2 * j - 1) as f64 + sgn * alpha;
        -sgn * halfstrip_bottom(beta / k, dist / k, y / k) / k
    };
    sum_until(term, n)
}

/// Sum `term(0), term(1), …` either for exactly `n` terms or until a term is
/// negligible; returns `(sum, first omitted |term|, terms used)`.
fn sum_until<F: Fn(i64) -> f64>(term: F, n: Option<usize>) -> (f64, f64, usize) {
    const CAP: usize = 100_000;
    let mut sum = 0.0;
    let mut used = 0;
    loop {
        let t = term(used as i64);
        match n {
            Some(limit) if used >= limit => return (sum, t.abs(), used),
            None if used >= 2 && t.abs() <= 1e-18 * sum.abs().max(1e-300) => return (sum, t.abs(), used),
            None if used >= CAP => return (sum, t.abs(), used),
            _ => {}
        }
        sum += t;
        used += 1;
    }
}

// ---------------------------------------------------------------- annulus e^{−r} < |z| < e^{r}

/// Number of lattice terms on each side that makes the annulus sum exact in
/// double precision.
pub fn annulus_auto_truncation(r: f64) -> usize {
    (4.1 * r).ceil() as usize + 1
}

/// Exit density on the circle `|z| = e^{±r}` at angle `θ`, arclength measure,
/// from the real start `a`; the lattice is `|k| ≤ kmax`.
pub fn annulus(side: Side, a: f64, r: f64, theta: f64, kmax: usize) -> f64 {
    let alpha = a.ln() / r;
    let kk = kmax as i64;
    let sum: f64 = (-kk..=kk)
        .map(|k| strip_conformal(side, alpha, (theta + 2.0 * PI * k as f64) / r))
        .sum();
    sum / (r * (side.sign() * r).exp())
}

/// Mass of the arc `θ' ∈ [−π, θ]`.
pub fn annulus_cdf(side: Side, a: f64, r: f64, theta: f64, kmax: usize) -> f64 {
    let alpha = a.ln() / r;
    let kk = kmax as i64;
    (-kk..=kk)
        .map(|k| {
            let o = 2.0 * PI * k as f64;
            strip_conformal_cdf(side, alpha, (theta + o) / r) - strip_conformal_cdf(side, alpha, (-PI + o) / r)
        })
        .sum()
}

// ---------------------------------------------------------------- winding stopping times

/// Per-ray density for the symmetric winding time `±rπ`, radial coordinate `y`.
pub fn winding_symmetric(r: f64, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let q = y.powf(1.0 / (2.0 * r));
    1.0 / (2.0 * PI * r * y * (q + 1.0 / q))
}

pub fn winding_symmetric_cdf(r: f64, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    y.powf(1.0 / (2.0 * r)).atan() / PI
}

/// Which ray of the asymmetric winding time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ray {
    /// argument `+r1·π`
    Upper,
    /// argument `−r2·π`
    Lower,
}

/// Density on one ray of the asymmetric winding time `{r1·π, −r2·π}`.
pub fn winding_asymmetric(ray: Ray, r1: f64, r2: f64, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let p = r1 + r2;
    let theta = FRAC_PI_2 * (r2 - r1) / p;
    let t = y.powf(1.0 / p);
    let d = match ray {
        Ray::Upper => t - theta.sin(),
        Ray::Lower => -t - theta.sin(),
    };
    theta.cos() / (PI * p * y.powf(1.0 - 1.0 / p) * (theta.cos().powi(2) + d * d))
}

pub fn winding_asymmetric_cdf(ray: Ray, r1: f64, r2: f64, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let p = r1 + r2;
    let theta = FRAC_PI_2 * (r2 - r1) / p;
    let t = y.powf(1.0 / p);
    match ray {
        Ray::Upper => (((t - theta.sin()) / theta.cos()).atan() + theta) / PI,
        Ray::Lower => (((t + theta.sin()) / theta.cos()).atan() - theta) / PI,
    }
}

/// Density of `|B|` when the continuous argument first reaches `r`.
pub fn prescribed_arg(r: f64, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let l = y.ln();
    r / (PI * y * (r * r + l * l))
}

pub fn prescribed_arg_cdf(r: f64, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    0.5 + (y.ln() / r).atan() / PI
}

// ---------------------------------------------------------------- double ray and homotopy time

/// Hitting density of `(−∞,−1] ∪ [1,∞)` from 0, both sides combined.
pub fn double_ray(w: f64) -> f64 {
    let a = w.abs();
    if a <= 1.0 {
        return 0.0;
    }
    1.0 / (PI * a * (a * a - 1.0).sqrt())
}

/// Mass of the left ray below `x ≤ −1` or of the right ray between 1 and `x`.
pub fn double_ray_cdf(right: bool, x: f64) -> f64 {
    if right {
        if x <= 1.0 {
            0.0
        } else {
            (1.0 / x).acos() / PI
        }
    } else if x >= -1.0 {
        0.5
    } else {
        (1.0 / -x).asin() / PI
    }
}

fn homotopy_u(w: f64) -> f64 {
    (2.0 / PI) * w.asin()
}

/// Raw partial sum `Σ_{0<|n|≤K}` of the homotopy density at `w ∈ (−1, 1)`.
pub fn homotopy_partial(w: f64, k: usize) -> f64 {
    if w.abs() >= 1.0 {
        return 0.0;
    }
    let u = homotopy_u(w);
    let f = |t: f64| 1.0 / (t.abs() * (t * t - 1.0).sqrt());
    let sum: f64 = (1..=k as i64).map(|n| f(u + 2.0 * n as f64) + f(u - 2.0 * n as f64)).sum();
    2.0 / (PI * PI * (1.0 - w * w).sqrt()) * sum
}

/// Tail `Σ_{|n|>K}` of the homotopy density using `1/(t√(t²−1)) ≈ 1/t²`.
pub fn homotopy_tail(w: f64, k: usize) -> f64 {
    if w.abs() >= 1.0 {
        return 0.0;
    }
    let u = homotopy_u(w);
    let kk = k as f64;
    let tail = 0.25 * (trigamma(kk + 1.0 + 0.5 * u) + trigamma(kk + 1.0 - 0.5 * u));
    2.0 / (PI * PI * (1.0 - w * w).sqrt()) * tail
}

/// Mass of `(−1, w]`: term-wise arccot antiderivatives plus a digamma tail.
pub fn homotopy_cdf(w: f64, k: usize) -> f64 {
    if w <= -1.0 {
        return 0.0;
    }
    let w = w.min(1.0);
    let u = homotopy_u(w);
    // (1/π)·asin(1/|t|) = (1/π)·arccot√(t²−1)
    let f = |t: f64| (1.0 / t.abs()).asin() / PI;
    let body: f64 = (1..=k as i64)
        .map(|n| {
            let m = 2.0 * n as f64;
            (f(m - 1.0) - f(u + m)) + (f(u - m) - f(-1.0 - m))
        })
        .sum();
    let kk = k as f64;
    let up = digamma(kk + 1.0 + 0.5 * u) - digamma(kk + 0.5);
    let down = digamma(kk + 1.5) - digamma(kk + 1.0 - 0.5 * u);
    body + (up + down) / (2.0 * PI)
}

fn digamma(x: f64) -> f64 {
    statrs::function::gamma::digamma(x)
}

/// `ψ′(x)` for `x > 0` by upward recurrence and the asymptotic series.
pub fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 12.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let x2 = 1.0 / (x * x);
    acc + 1.0 / x + 0.5 * x2 + x2 / x * (1.0 / 6.0 - x2 * (1.0 / 30.0 - x2 * (1.0 / 42.0 - x2 / 30.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn poisson_antiderivative_matches() {
        let (rho, h) = (0.6, 1e-6);
        for j in -30..30 {
            let x = j as f64 * 0.37;
            let fd = (poisson_disk_antideriv(rho, x + h) - poisson_disk_antideriv(rho, x - h)) / (2.0 * h);
            assert_abs_diff_eq!(fd, poisson_disk(rho, x), epsilon = 1e-8);
        }
        assert_abs_diff_eq!(poisson_disk_antideriv(rho, PI) - poisson_disk_antideriv(rho, -PI), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn strip_center_value() {
        assert_abs_diff_eq!(strip_conformal(Side::Right, 0.0, 0.0), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn strip_reflection_matches_conformal() {
        for &(a, y) in &[(0.0, 0.0), (0.3, 0.7), (-0.9, 5.0), (0.95, -20.0), (0.5, 60.0)] {
            for side in [Side::Left, Side::Right] {
                let r = strip_reflection(side, a, y);
                assert_abs_diff_eq!(r.value, strip_conformal(side, a, y), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn strip_cdfs_agree_and_differentiate() {
        let h = 1e-5;
        for side in [Side::Left, Side::Right] {
            for &(a, y) in &[(0.3, 0.7), (-0.6, -2.0), (0.0, 0.0)] {
                let c1 = strip_conformal_cdf(side, a, y);
                let c2 = strip_reflection_cdf(side, a, y).value;
                assert_abs_diff_eq!(c1, c2, epsilon = 1e-11);
                let fd = (strip_conformal_cdf(side, a, y + h) - strip_conformal_cdf(side, a, y - h)) / (2.0 * h);
                assert_abs_diff_eq!(fd, strip_conformal(side, a, y), epsilon = 1e-8);
            }
            assert_abs_diff_eq!(strip_conformal_cdf(side, 0.4, 1e3), strip_side_mass(side, 0.4), epsilon = 1e-14);
        }
    }

    #[test]
    fn halfstrip_forms_agree() {
        for &(al, be, x) in &[(0.3, 0.7, -0.2), (-0.8, 0.1, 0.9), (0.0, 3.0, 0.5)] {
            let r = halfstrip_bottom_reflection(al, be, x);
            assert_abs_diff_eq!(r.value, halfstrip_bottom(al, be, x), epsilon = 1e-11);
        }
        assert_abs_diff_eq!(halfstrip_bottom(0.0, 1.0, 0.0), 0.5 / (PI / 2.0).sinh(), epsilon = 1e-15);
    }

    #[test]
    fn halfstrip_side_is_strip_difference() {
        for &(al, be, y) in &[(0.3, 0.7, 1.2), (-0.5, 2.0, 0.3)] {
            for side in [Side::Left, Side::Right] {
                let diff = strip_conformal(side, al, y - be) - strip_conformal(side, al, -y - be);
                assert_abs_diff_eq!(halfstrip_side(side, al, be, y), diff, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn segment_forms_agree() {
        let omega = (c(-1.0, 1.0) * FRAC_PI_2).sin();
        let (al, be) = segment_lift(omega);
        assert_abs_diff_eq!(al, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(be, 1.0, epsilon = 1e-12);
        for &xb in &[0.0, -0.7, 0.5, 0.95] {
            let cov = segment_covering(al, be, xb, 1000).value;
            assert_abs_diff_eq!(cov, segment_closed(omega, xb), epsilon = 1e-11);
        }
    }

    #[test]
    fn rectangle_forms_agree() {
        for &(al, be, k, y) in &[(0.0, 0.0, 1.0, 0.0), (0.3, 0.2, 0.5, 0.1), (-0.4, 0.9, 1.5, -1.1)] {
            let v = rectangle_vertical(al, be, k, y, None).0;
            let h = rectangle_horizontal(al, be, k, y, None).0;
            assert_abs_diff_eq!(v, h, epsilon = 1e-13);
        }
    }

    #[test]
    fn annulus_simplified_value() {
        let want: f64 = (-3..=3).map(|k: i32| 1.0 / (PI * PI * k as f64).cosh()).sum::<f64>() / (4.0 * 1f64.exp());
        assert_abs_diff_eq!(annulus(Side::Right, 1.0, 1.0, 0.0, 3), want, epsilon = 1e-15);
    }

    #[test]
    fn winding_examples() {
        for r in [0.5, 1.0, 2.0] {
            assert_abs_diff_eq!(2.0 * winding_symmetric_cdf(r, 1.0), 0.5, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(prescribed_arg(1.0, 1.0), 1.0 / PI, epsilon = 1e-15);
        let (r1, r2) = (0.7, 1.6);
        let m = winding_asymmetric_cdf(Ray::Upper, r1, r2, f64::MAX) + winding_asymmetric_cdf(Ray::Lower, r1, r2, f64::MAX);
        assert_abs_diff_eq!(m, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn homotopy_examples() {
        assert_abs_diff_eq!(homotopy_partial(0.0, 1), 2.0 / (PI * PI * 3f64.sqrt()), epsilon = 1e-15);
        assert_abs_diff_eq!(homotopy_cdf(1.0, 10_000), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(homotopy_cdf(0.0, 10_000), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(double_ray(2.0), 1.0 / (2.0 * PI * 3f64.sqrt()), epsilon = 1e-15);
    }

    #[test]
    fn trigamma_values() {
        assert_abs_diff_eq!(trigamma(1.0), PI * PI / 6.0, epsilon = 1e-13);
        assert_abs_diff_eq!(trigamma(0.5), PI * PI / 2.0, epsilon = 1e-12);
    }
}
