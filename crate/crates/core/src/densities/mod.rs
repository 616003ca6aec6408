//! The closed-form exit density catalog.
//!
//! A [`Density`] is an immutable description of the law of `B_τ` for a fixed
//! start and stopping time, evaluable on each boundary curve in arclength.

pub mod formulas;
mod harmonic;

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{c, BoundaryCurve, Complex, CurveShape, Domain};
use crate::quadrature::{integrate, integrate_split};
use crate::series::{cauchy, cauchy_cdf, cauchy_lattice};

pub use formulas::{Ray, Side};
pub use harmonic::HarmonicTestFn;

use formulas as f;

/// Quadrature target used for cdf and mass fallbacks.
pub const QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum StripForm {
    Conformal,
    /// Alternating half-plane kernel series; `terms: None` is its extrapolated limit.
    Reflection { terms: Option<usize> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HalfStripForm {
    Conformal,
    /// Bottom edge as an alternating sum of reflected half-plane kernels.
    Reflection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentForm {
    /// Through `φ` and the upper square root onto the ray `[0, ∞)`.
    Closed,
    /// Half-plane kernels at all preimages under `sin(πz/2)`.
    Covering,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum RectangleForm {
    /// Reflected strip densities; `terms: None` sums to double precision.
    Vertical { terms: Option<usize> },
    /// Reflected half-strip densities.
    Horizontal { terms: Option<usize> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "winding", rename_all = "snake_case")]
pub enum WindingKind {
    /// First exit of the continuous argument from `(−rπ, rπ)`.
    Symmetric { r: f64 },
    /// First exit of the continuous argument from `(−r2·π, r1·π)`.
    Asymmetric { r1: f64, r2: f64 },
    /// First time the continuous argument reaches `r` (radians).
    Prescribed { r: f64 },
}

/// Parameters of a catalog density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "density", rename_all = "snake_case")]
pub enum DensityKind {
    Disk { a: Complex, m: f64 },
    HalfPlane { a: Complex },
    PuncturedDisk { a: Complex, k: usize },
    Strip { a: f64, form: StripForm },
    HalfStrip { alpha: f64, beta: f64, form: HalfStripForm },
    Segment { omega: Complex, form: SegmentForm, k: usize },
    Rectangle { alpha: f64, beta: f64, k: f64, form: RectangleForm },
    Annulus { a: f64, r: f64, k: usize },
    Winding { kind: WindingKind },
    HomotopySegment { k: usize },
    DoubleRay,
}

/// Serializable summary of a density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityDescription {
    pub equation_tag: String,
    pub domain: Option<Domain>,
    pub start: Complex,
    pub params: DensityKind,
    pub truncation: Option<usize>,
}

/// Exit density of a stopping time; values are per unit arclength on each curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    kind: DensityKind,
    domain: Option<Domain>,
    curves: Vec<BoundaryCurve>,
    start: Complex,
}

/// Default lattice truncation for the positive Cauchy sums.
pub const DEFAULT_LATTICE_K: usize = 1000;

fn range(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::OutOfRange(msg()))
    }
}

fn finite_c(z: Complex) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

pub fn disk_density(a: Complex, m: f64) -> Result<Density> {
    range(m > 0.0 && m.is_finite() && finite_c(a), || format!("radius {m} and start {a} must be finite, radius positive"))?;
    if a.norm() == m {
        return Err(Error::StartOnBoundary);
    }
    let domain = if a.norm() < m { Domain::Disk { radius: m } } else { Domain::ExteriorDisk { radius: m } };
    Ok(Density::new(DensityKind::Disk { a, m }, Some(domain), a))
}

pub fn halfplane_density(a: Complex) -> Result<Density> {
    range(a.im > 0.0 && finite_c(a), || format!("start {a} must lie in the upper half-plane"))?;
    Ok(Density::new(DensityKind::HalfPlane { a }, Some(Domain::upper_half_plane()), a))
}

pub fn punctured_disk_density(a: Complex, k: usize) -> Result<Density> {
    let r = a.norm();
    range(r > 0.0 && r < 1.0, || format!("start {a} must satisfy 0 < |a| < 1"))?;
    Ok(Density::new(DensityKind::PuncturedDisk { a, k }, Some(Domain::PuncturedDisk), a))
}

pub fn strip_density(a: f64, form: StripForm) -> Result<Density> {
    range(a.abs() < 1.0, || format!("start {a} must satisfy |a| < 1"))?;
    if let StripForm::Reflection { terms: Some(0) } = form {
        return Err(Error::OutOfRange("reflection form needs at least one term".into()));
    }
    Ok(Density::new(DensityKind::Strip { a, form }, Some(Domain::strip(1.0)), c(a, 0.0)))
}

pub fn halfstrip_density(alpha: f64, beta: f64, form: HalfStripForm) -> Result<Density> {
    range(alpha.abs() < 1.0 && beta > 0.0 && beta < 200.0, || {
        format!("start ({alpha}, {beta}) must satisfy |alpha| < 1 and 0 < beta < 200")
    })?;
    Ok(Density::new(DensityKind::HalfStrip { alpha, beta, form }, Some(Domain::HalfStrip), c(alpha, beta)))
}

pub fn segment_density(omega: Complex, form: SegmentForm, k: usize) -> Result<Density> {
    range(finite_c(omega), || format!("start {omega} must be finite"))?;
    if omega.im == 0.0 && omega.re.abs() <= 1.0 {
        return Err(Error::StartOnBoundary);
    }
    Ok(Density::new(DensityKind::Segment { omega, form, k }, Some(Domain::Segment), omega))
}

pub fn rectangle_density(alpha: f64, beta: f64, k: f64, form: RectangleForm) -> Result<Density> {
    range(k > 0.0 && k.is_finite(), || format!("half height {k} must be positive"))?;
    range(alpha.abs() < 1.0 && beta.abs() < k, || format!("start ({alpha}, {beta}) must lie inside the rectangle"))?;
    if let RectangleForm::Vertical { terms: Some(0) } | RectangleForm::Horizontal { terms: Some(0) } = form {
        return Err(Error::OutOfRange("reflection forms need at least one term".into()));
    }
    Ok(Density::new(DensityKind::Rectangle { alpha, beta, k, form }, Some(Domain::rectangle(k)), c(alpha, beta)))
}

/// `k = None` picks the truncation at which the lattice is exact in double precision.
pub fn annulus_density(a: f64, r: f64, k: Option<usize>) -> Result<Density> {
    range(r > 0.0 && r.is_finite(), || format!("log radius {r} must be positive"))?;
    range(a > (-r).exp() && a < r.exp(), || format!("start {a} must lie strictly between e^-r and e^r"))?;
    let k = k.unwrap_or_else(|| f::annulus_auto_truncation(r));
    Ok(Density::new(DensityKind::Annulus { a, r, k }, Some(Domain::annulus(r)), c(a, 0.0)))
}

pub fn winding_density(kind: WindingKind) -> Result<Density> {
    let ok = |r: f64| r > 0.0 && r.is_finite();
    let valid = match kind {
        WindingKind::Symmetric { r } | WindingKind::Prescribed { r } => ok(r),
        WindingKind::Asymmetric { r1, r2 } => ok(r1) && ok(r2),
    };
    range(valid, || format!("winding parameters must be positive: {kind:?}"))?;
    Ok(Density::new(DensityKind::Winding { kind }, None, c(1.0, 0.0)))
}

pub fn homotopy_segment_density(k: usize) -> Result<Density> {
    range(k >= 1, || "truncation must be at least 1".into())?;
    Ok(Density::new(DensityKind::HomotopySegment { k }, Some(Domain::Segment), c(0.0, 0.0)))
}

/// Hitting density of `(−∞,−1] ∪ [1,∞)` from 0.
pub fn double_ray_density() -> Density {
    Density::new(DensityKind::DoubleRay, Some(Domain::DoubleRay), c(0.0, 0.0))
}

fn is_integer(x: f64) -> bool {
    (x - x.round()).abs() < 1e-12
}

fn winding_curves(kind: WindingKind) -> Vec<BoundaryCurve> {
    match kind {
        WindingKind::Symmetric { r } if is_integer(r) => vec![BoundaryCurve::ray(0, "ray", r * PI)],
        WindingKind::Symmetric { r } => {
            vec![BoundaryCurve::ray(0, "upper", r * PI), BoundaryCurve::ray(1, "lower", -r * PI)]
        }
        WindingKind::Asymmetric { r1, r2 } if is_integer((r1 + r2) / 2.0) => {
            vec![BoundaryCurve::ray(0, "ray", r1 * PI)]
        }
        WindingKind::Asymmetric { r1, r2 } => {
            vec![BoundaryCurve::ray(0, "upper", r1 * PI), BoundaryCurve::ray(1, "lower", -r2 * PI)]
        }
        WindingKind::Prescribed { r } => vec![BoundaryCurve::ray(0, "ray", r)],
    }
}

impl Density {
    fn new(kind: DensityKind, domain: Option<Domain>, start: Complex) -> Self {
        let curves = match kind {
            DensityKind::Winding { kind } => winding_curves(kind),
            _ => domain.expect("non-winding densities carry a domain").curves(),
        };
        Self { kind, domain, curves, start }
    }

    pub fn kind(&self) -> &DensityKind {
        &self.kind
    }

    /// Region whose exit is described; `None` for winding times.
    pub fn domain(&self) -> Option<Domain> {
        self.domain
    }

    pub fn start(&self) -> Complex {
        self.start
    }

    pub fn curves(&self) -> &[BoundaryCurve] {
        &self.curves
    }

    pub fn curve(&self, id: usize) -> Result<&BoundaryCurve> {
        self.curves.get(id).ok_or_else(|| Error::OutOfRange(format!("curve id {id} not present")))
    }

    /// Stable name of the formula in use.
    pub fn equation_tag(&self) -> &'static str {
        match self.kind {
            DensityKind::Disk { .. } => "poisson_kernel",
            DensityKind::HalfPlane { .. } => "cauchy_kernel",
            DensityKind::PuncturedDisk { .. } => "wrapped_cauchy_lattice",
            DensityKind::Strip { form: StripForm::Conformal, .. } => "strip_tan_quarter",
            DensityKind::Strip { .. } => "strip_alternating_kernels",
            DensityKind::HalfStrip { form: HalfStripForm::Conformal, .. } => "halfstrip_sin_half",
            DensityKind::HalfStrip { .. } => "halfstrip_alternating_kernels",
            DensityKind::Segment { form: SegmentForm::Closed, .. } => "segment_sqrt_chain",
            DensityKind::Segment { .. } => "segment_covering_sum",
            DensityKind::Rectangle { form: RectangleForm::Vertical { .. }, .. } => "rectangle_strip_reflections",
            DensityKind::Rectangle { .. } => "rectangle_halfstrip_reflections",
            DensityKind::Annulus { .. } => "annulus_strip_lattice",
            DensityKind::Winding { kind: WindingKind::Symmetric { .. } } => "winding_symmetric",
            DensityKind::Winding { kind: WindingKind::Asymmetric { .. } } => "winding_asymmetric",
            DensityKind::Winding { kind: WindingKind::Prescribed { .. } } => "winding_prescribed",
            DensityKind::HomotopySegment { .. } => "homotopy_segment_sum",
            DensityKind::DoubleRay => "double_ray",
        }
    }

    /// Truncation parameter of series-defined densities.
    pub fn truncation(&self) -> Option<usize> {
        match self.kind {
            DensityKind::PuncturedDisk { k, .. }
            | DensityKind::Annulus { k, .. }
            | DensityKind::HomotopySegment { k } => Some(k),
            DensityKind::Segment { form: SegmentForm::Covering, k, .. } => Some(k),
            DensityKind::Strip { form: StripForm::Reflection { terms }, .. } => terms,
            DensityKind::Rectangle { form: RectangleForm::Vertical { terms }, .. }
            | DensityKind::Rectangle { form: RectangleForm::Horizontal { terms }, .. } => terms,
            _ => None,
        }
    }

    pub fn describe(&self) -> DensityDescription {
        DensityDescription {
            equation_tag: self.equation_tag().to_string(),
            domain: self.domain,
            start: self.start,
            params: self.kind,
            truncation: self.truncation(),
        }
    }

    /// Density with respect to arclength at parameter `s` of curve `curve_id`;
    /// zero off the curve's parameter range.
    pub fn value(&self, curve_id: usize, s: f64) -> Result<f64> {
        let curve = self.curve(curve_id)?;
        let (lo, hi) = curve.s_range();
        if matches!(curve.shape, CurveShape::Point { .. }) || s.is_nan() || s < lo || s > hi {
            return Ok(0.0);
        }
        Ok(self.value_unchecked(curve, s).max(0.0))
    }

    fn value_unchecked(&self, curve: &BoundaryCurve, s: f64) -> f64 {
        let id = curve.id;
        match self.kind {
            DensityKind::Disk { a, m } => {
                let theta = s / m;
                let (rho, center) = if a.norm() < m { (a.norm() / m, a.arg()) } else { (m / a.norm(), a.arg()) };
                f::poisson_disk(rho, theta - center) / m
            }
            DensityKind::HalfPlane { a } => cauchy(a.re, a.im, s),
            DensityKind::PuncturedDisk { a, k } => Self::punctured_lattice(a, s, k),
            DensityKind::Strip { a, form } => {
                let side = if id == 0 { Side::Left } else { Side::Right };
                match form {
                    StripForm::Conformal => f::strip_conformal(side, a, s),
                    StripForm::Reflection { terms: None } => f::strip_reflection(side, a, s).value,
                    StripForm::Reflection { terms: Some(n) } => f::strip_reflection_partial(side, a, s, n).0,
                }
            }
            DensityKind::HalfStrip { alpha, beta, form } => match (id, form) {
                (0, HalfStripForm::Conformal) => f::halfstrip_bottom(alpha, beta, s),
                (0, HalfStripForm::Reflection) => f::halfstrip_bottom_reflection(alpha, beta, s).value,
                (1, _) => f::halfstrip_side(Side::Left, alpha, beta, s),
                _ => f::halfstrip_side(Side::Right, alpha, beta, s),
            },
            DensityKind::Segment { omega, form, k } => match form {
                SegmentForm::Closed => f::segment_closed(omega, s),
                SegmentForm::Covering => {
                    let (al, be) = f::segment_lift(omega);
                    f::segment_covering(al, be, s, k).value
                }
            },
            DensityKind::Rectangle { alpha, beta, k, form } => Self::rectangle_side(id, alpha, beta, k, form, s),
            DensityKind::Annulus { a, r, k } => {
                let (side, radius) = if id == 0 { (Side::Left, (-r).exp()) } else { (Side::Right, r.exp()) };
                f::annulus(side, a, r, s / radius, k)
            }
            DensityKind::Winding { kind } => Self::winding_value(kind, self.curves.len(), id, s),
            DensityKind::HomotopySegment { k } => f::homotopy_partial(s, k) + f::homotopy_tail(s, k),
            DensityKind::DoubleRay => f::double_ray(s),
        }
    }

    fn punctured_lattice(a: Complex, theta: f64, k: usize) -> f64 {
        cauchy_lattice(a.arg(), -a.norm().ln(), 2.0 * PI, theta, k).value
    }

    /// Single homotopy class `k` of the punctured-disk density at angle `θ`.
    pub fn punctured_term(a: Complex, k: i64, theta: f64) -> f64 {
        cauchy(a.arg(), -a.norm().ln(), theta + 2.0 * PI * k as f64)
    }

    /// Raw partial sum over `|k| ≤ K` without the integral tail.
    pub fn punctured_partial(a: Complex, theta: f64, kmax: usize) -> f64 {
        let kk = kmax as i64;
        (-kk..=kk).map(|k| Self::punctured_term(a, k, theta)).sum()
    }

    fn rectangle_right(alpha: f64, beta: f64, k: f64, form: RectangleForm, y: f64) -> f64 {
        match form {
            RectangleForm::Vertical { terms } => f::rectangle_vertical(alpha, beta, k, y, terms).0,
            RectangleForm::Horizontal { terms } => f::rectangle_horizontal(alpha, beta, k, y, terms).0,
        }
    }

    // other sides: rotate the side onto Re z = 1 and rescale to half-width 1
    fn rectangle_side(id: usize, alpha: f64, beta: f64, k: f64, form: RectangleForm, s: f64) -> f64 {
        match id {
            0 => Self::rectangle_right(-beta / k, alpha / k, 1.0 / k, form, s / k) / k,
            1 => Self::rectangle_right(alpha, beta, k, form, s),
            2 => Self::rectangle_right(beta / k, -alpha / k, 1.0 / k, form, -s / k) / k,
            _ => Self::rectangle_right(-alpha, beta, k, form, s),
        }
    }

    fn winding_value(kind: WindingKind, ncurves: usize, id: usize, y: f64) -> f64 {
        match kind {
            WindingKind::Symmetric { r } => {
                let per_ray = f::winding_symmetric(r, y);
                if ncurves == 1 {
                    2.0 * per_ray
                } else {
                    per_ray
                }
            }
            WindingKind::Asymmetric { r1, r2 } => {
                let up = || f::winding_asymmetric(Ray::Upper, r1, r2, y);
                let down = || f::winding_asymmetric(Ray::Lower, r1, r2, y);
                match (ncurves, id) {
                    (1, _) => up() + down(),
                    (_, 0) => up(),
                    _ => down(),
                }
            }
            WindingKind::Prescribed { r } => f::prescribed_arg(r, y),
        }
    }

    /// Mass of the part of curve `curve_id` with parameter `≤ s`.
    pub fn cdf(&self, curve_id: usize, s: f64) -> Result<f64> {
        let curve = *self.curve(curve_id)?;
        if matches!(curve.shape, CurveShape::Point { .. }) {
            return Ok(0.0);
        }
        let (lo, hi) = curve.s_range();
        if s.is_nan() {
            return Err(Error::OutOfRange("cdf argument is NaN".into()));
        }
        if s <= lo {
            return Ok(0.0);
        }
        let s = s.min(hi);
        if let Some(v) = self.cdf_closed(&curve, s) {
            return Ok(v);
        }
        self.cdf_quadrature(&curve, s)
    }

    /// True iff `cdf` on this curve avoids quadrature.
    pub fn has_closed_cdf(&self, curve_id: usize) -> Result<bool> {
        let curve = *self.curve(curve_id)?;
        let (lo, hi) = curve.s_range();
        let mid = if lo.is_finite() && hi.is_finite() { 0.5 * (lo + hi) } else { lo.max(hi.min(1.0)) };
        Ok(matches!(curve.shape, CurveShape::Point { .. }) || self.cdf_closed(&curve, mid).is_some())
    }

    fn cdf_closed(&self, curve: &BoundaryCurve, s: f64) -> Option<f64> {
        let id = curve.id;
        let v = match self.kind {
            DensityKind::Disk { a, m } => {
                let (rho, center) = if a.norm() < m { (a.norm() / m, a.arg()) } else { (m / a.norm(), a.arg()) };
                f::poisson_disk_antideriv(rho, s / m - center) - f::poisson_disk_antideriv(rho, -PI - center)
            }
            DensityKind::HalfPlane { a } => cauchy_cdf(a.re, a.im, s),
            DensityKind::PuncturedDisk { a, k } => {
                f::lattice_interval_mass(a.arg(), -a.norm().ln(), 2.0 * PI, -PI, s, k)
            }
            DensityKind::Strip { a, form } => {
                let side = if id == 0 { Side::Left } else { Side::Right };
                match form {
                    StripForm::Conformal => f::strip_conformal_cdf(side, a, s),
                    _ if s.is_infinite() => f::strip_side_mass(side, a),
                    StripForm::Reflection { terms: None } => f::strip_reflection_cdf(side, a, s).value,
                    StripForm::Reflection { terms: Some(_) } => return None,
                }
            }
            DensityKind::HalfStrip { alpha, beta, form } => match (id, form) {
                (0, HalfStripForm::Reflection) => return None,
                (0, _) => f::halfstrip_bottom_cdf(alpha, beta, s),
                (1, _) => f::halfstrip_side_cdf(Side::Left, alpha, beta, s),
                _ => f::halfstrip_side_cdf(Side::Right, alpha, beta, s),
            },
            DensityKind::Segment { omega, form: SegmentForm::Covering, k } => {
                let (al, be) = f::segment_lift(omega);
                f::segment_covering_cdf(al, be, s, k)
            }
            DensityKind::Annulus { a, r, k } => {
                let (side, radius) = if id == 0 { (Side::Left, (-r).exp()) } else { (Side::Right, r.exp()) };
                f::annulus_cdf(side, a, r, s / radius, k)
            }
            DensityKind::Winding { kind } => {
                let merged = self.curves.len() == 1;
                match kind {
                    WindingKind::Symmetric { r } => f::winding_symmetric_cdf(r, s) * if merged { 2.0 } else { 1.0 },
                    WindingKind::Asymmetric { r1, r2 } => {
                        let up = f::winding_asymmetric_cdf(Ray::Upper, r1, r2, s);
                        let down = f::winding_asymmetric_cdf(Ray::Lower, r1, r2, s);
                        match (merged, id) {
                            (true, _) => up + down,
                            (false, 0) => up,
                            _ => down,
                        }
                    }
                    WindingKind::Prescribed { r } => f::prescribed_arg_cdf(r, s),
                }
            }
            DensityKind::HomotopySegment { k } => f::homotopy_cdf(s, k),
            DensityKind::DoubleRay => f::double_ray_cdf(id == 1, s),
            DensityKind::Segment { .. } | DensityKind::Rectangle { .. } => return None,
        };
        Some(v)
    }

    fn cdf_quadrature(&self, curve: &BoundaryCurve, s: f64) -> Result<f64> {
        let (lo, _) = curve.s_range();
        if let DensityKind::Segment { .. } = self.kind {
            // x̄ = sin(πx/2) removes the inverse square root at the endpoints
            let g = |x: f64| {
                let xb = (FRAC_PI_2 * x).sin();
                self.value_unchecked(curve, xb) * FRAC_PI_2 * (FRAC_PI_2 * x).cos()
            };
            let top = (2.0 / PI) * s.clamp(-1.0, 1.0).asin();
            return integrate(g, -1.0, top, QUAD_TOL, 0.0).map(|q| q.value);
        }
        let g = |t: f64| self.value_unchecked(curve, t);
        let peak = curve.nearest(self.start).0;
        integrate_split(g, lo, s, &[peak], QUAD_TOL, 0.0).map(|q| q.value)
    }

    /// Total mass of curve `curve_id`.
    pub fn mass(&self, curve_id: usize) -> Result<f64> {
        let (_, hi) = self.curve(curve_id)?.s_range();
        self.cdf(curve_id, hi)
    }

    /// Sum of the masses of all curves.
    pub fn total_mass(&self) -> Result<f64> {
        (0..self.curves.len()).map(|id| self.mass(id)).sum()
    }

    /// `∫ g(point) dρ` over curve `curve_id` by adaptive quadrature.
    pub fn integrate_against<G: Fn(Complex) -> f64>(&self, curve_id: usize, g: G) -> Result<f64> {
        let curve = *self.curve(curve_id)?;
        if matches!(curve.shape, CurveShape::Point { .. }) {
            return Ok(0.0);
        }
        let (lo, hi) = curve.s_range();
        if let DensityKind::Segment { .. } | DensityKind::HomotopySegment { .. } = self.kind {
            let f = |x: f64| {
                let xb = (FRAC_PI_2 * x).sin();
                g(curve.point_at(xb)) * self.value_unchecked(&curve, xb) * FRAC_PI_2 * (FRAC_PI_2 * x).cos()
            };
            return integrate(f, -1.0, 1.0, QUAD_TOL, 0.0).map(|q| q.value);
        }
        let f = |s: f64| g(curve.point_at(s)) * self.value_unchecked(&curve, s);
        let peak = curve.nearest(self.start).0;
        integrate_split(f, lo, hi, &[peak], QUAD_TOL, 0.0).map(|q| q.value)
    }
}

/// `|∫ h dρ − h(start)|` over every boundary curve.
pub fn dynkin_check(d: &Density, h: HarmonicTestFn) -> Result<f64> {
    let total: f64 = (0..d.curves().len())
        .map(|id| d.integrate_against(id, |z| h.eval(z)))
        .sum::<Result<f64>>()?;
    Ok((total - h.eval(d.start())).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn disk_examples() {
        let d = disk_density(c(0.0, 0.0), 1.0).unwrap();
        assert_abs_diff_eq!(d.value(0, 1.3).unwrap(), 1.0 / (2.0 * PI), epsilon = 1e-15);
        let d = disk_density(c(0.5, 0.0), 1.0).unwrap();
        // (1 − 1/4)/(2π·(1/2)²)
        assert_abs_diff_eq!(d.value(0, 0.0).unwrap(), 3.0 / (2.0 * PI), epsilon = 1e-15);
        let d = disk_density(c(2.0, 0.0), 1.0).unwrap();
        assert_abs_diff_eq!(d.value(0, PI - 1e-12).unwrap(), 1.0 / (6.0 * PI), epsilon = 1e-12);
        assert!(matches!(disk_density(c(0.0, 1.0), 1.0), Err(Error::StartOnBoundary)));
    }

    #[test]
    fn scaled_disk_matches_formula() {
        let (a, m, theta) = (c(0.4, -0.9), 1.7, 0.8);
        let d = disk_density(a, m).unwrap();
        let want = (m * m - a.norm_sqr()) / (2.0 * PI * m * (m - a.conj() * Complex::from_polar(1.0, theta)).norm_sqr());
        assert_abs_diff_eq!(d.value(0, m * theta).unwrap(), want, epsilon = 1e-14);
        assert_abs_diff_eq!(d.mass(0).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn halfplane_examples() {
        let d = halfplane_density(c(0.0, 1.0)).unwrap();
        assert_abs_diff_eq!(d.value(0, 0.0).unwrap(), 1.0 / PI, epsilon = 1e-15);
        assert_abs_diff_eq!(d.cdf(0, 0.0).unwrap(), 0.5, epsilon = 1e-15);
        let d = halfplane_density(c(2.0, 3.0)).unwrap();
        assert_abs_diff_eq!(d.value(0, 2.0).unwrap(), 1.0 / (3.0 * PI), epsilon = 1e-15);
        assert!(halfplane_density(c(0.0, 0.0)).is_err());
    }

    #[test]
    fn punctured_examples() {
        let a = (-1f64).exp();
        let d = punctured_disk_density(c(a, 0.0), DEFAULT_LATTICE_K).unwrap();
        let want = (1.0 - a * a) / (2.0 * PI * (1.0 + a * a - 2.0 * a));
        assert_abs_diff_eq!(d.value(0, 0.0).unwrap(), want, epsilon = 1e-13);
        let raw = Density::punctured_partial(c(0.5, 0.0), 0.0, 0);
        assert_abs_diff_eq!(raw, 1.0 / (PI * 2f64.ln()), epsilon = 1e-15);
        assert_abs_diff_eq!(d.value(0, 0.7).unwrap(), d.value(0, -0.7).unwrap(), epsilon = 1e-15);
        assert_abs_diff_eq!(d.mass(0).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(d.mass(1).unwrap(), 0.0);
        assert!(punctured_disk_density(c(0.0, 0.0), 3).is_err());
    }

    #[test]
    fn strip_examples() {
        let d = strip_density(0.0, StripForm::Conformal).unwrap();
        assert_abs_diff_eq!(d.value(1, 0.0).unwrap(), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(d.mass(1).unwrap(), 0.5, epsilon = 1e-15);
        let r = strip_density(0.0, StripForm::Reflection { terms: None }).unwrap();
        assert_abs_diff_eq!(r.value(1, 0.0).unwrap(), 0.25, epsilon = 1e-13);
        assert!(strip_density(1.0, StripForm::Conformal).is_err());
    }

    #[test]
    fn reflection_partial_tail_bound() {
        let (sum, bound) = f::strip_reflection_partial(Side::Right, 0.2, 0.4, 50);
        let exact = f::strip_conformal(Side::Right, 0.2, 0.4);
        assert!((sum - exact).abs() <= bound);
    }

    #[test]
    fn halfstrip_examples() {
        let d = halfstrip_density(0.0, 1.0, HalfStripForm::Conformal).unwrap();
        assert_abs_diff_eq!(d.value(0, 0.0).unwrap(), 0.5 / FRAC_PI_2.sinh(), epsilon = 1e-15);
        assert_abs_diff_eq!(d.value(0, 0.4).unwrap(), d.value(0, -0.4).unwrap(), epsilon = 1e-15);
        let r = halfstrip_density(0.3, 0.7, HalfStripForm::Reflection).unwrap();
        let cf = halfstrip_density(0.3, 0.7, HalfStripForm::Conformal).unwrap();
        assert_abs_diff_eq!(r.value(0, -0.2).unwrap(), cf.value(0, -0.2).unwrap(), epsilon = 1e-10);
        assert_abs_diff_eq!(cf.total_mass().unwrap(), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn segment_examples() {
        let omega = (c(-1.0, 1.0) * FRAC_PI_2).sin();
        let a = segment_density(omega, SegmentForm::Closed, 0).unwrap();
        let b = segment_density(omega, SegmentForm::Covering, DEFAULT_LATTICE_K).unwrap();
        assert_abs_diff_eq!(a.value(0, 0.0).unwrap(), b.value(0, 0.0).unwrap(), epsilon = 1e-10);
        assert_abs_diff_eq!(a.mass(0).unwrap(), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(b.mass(0).unwrap(), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(double_ray_density().value(1, 2.0).unwrap(), 1.0 / (2.0 * PI * 3f64.sqrt()), epsilon = 1e-15);
        assert!(matches!(segment_density(c(0.5, 0.0), SegmentForm::Closed, 0), Err(Error::StartOnBoundary)));
    }

    #[test]
    fn rectangle_examples() {
        let v = rectangle_density(0.0, 0.0, 1.0, RectangleForm::Vertical { terms: Some(25) }).unwrap();
        let h = rectangle_density(0.0, 0.0, 1.0, RectangleForm::Horizontal { terms: Some(25) }).unwrap();
        assert_abs_diff_eq!(v.value(1, 0.0).unwrap(), h.value(1, 0.0).unwrap(), epsilon = 1e-9);
        // the square from its center exits each side with probability 1/4
        for id in 0..4 {
            assert_abs_diff_eq!(v.mass(id).unwrap(), 0.25, epsilon = 1e-10);
        }
        let d = rectangle_density(0.3, -0.2, 0.7, RectangleForm::Vertical { terms: None }).unwrap();
        let e = rectangle_density(0.3, -0.2, 0.7, RectangleForm::Horizontal { terms: None }).unwrap();
        for id in 0..4 {
            assert_abs_diff_eq!(d.value(id, 0.1).unwrap(), e.value(id, 0.1).unwrap(), epsilon = 1e-12);
        }
        assert_abs_diff_eq!(d.total_mass().unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn annulus_examples() {
        let d = annulus_density(1.0, 1.0, Some(3)).unwrap();
        let e = 1f64.exp();
        let want: f64 = (-3..=3).map(|k: i32| 1.0 / (PI * PI * k as f64).cosh()).sum::<f64>() / (4.0 * e);
        assert_abs_diff_eq!(d.value(1, 0.0).unwrap(), want, epsilon = 1e-15);
        assert_abs_diff_eq!(d.total_mass().unwrap(), 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(d.value(0, 0.2).unwrap(), d.value(0, -0.2).unwrap(), epsilon = 1e-15);
        let g = annulus_density(1.5, 1.0, None).unwrap();
        assert_abs_diff_eq!(g.mass(1).unwrap(), 0.5 * (1.0 + 1.5f64.ln()), epsilon = 1e-13);
    }

    #[test]
    fn winding_examples() {
        for r in [0.5, 1.0, 1.5, 3.0] {
            let d = winding_density(WindingKind::Symmetric { r }).unwrap();
            let below: f64 = (0..d.curves().len()).map(|id| d.cdf(id, 1.0).unwrap()).sum();
            assert_abs_diff_eq!(below, 0.5, epsilon = 1e-15);
            let eps: f64 = 0.01;
            let small: f64 = (0..d.curves().len()).map(|id| d.cdf(id, eps).unwrap()).sum();
            assert_abs_diff_eq!(small, 2.0 / PI * eps.powf(0.5 / r).atan(), epsilon = 1e-15);
        }
        let p = winding_density(WindingKind::Prescribed { r: 2.0 }).unwrap();
        assert_abs_diff_eq!(p.value(0, 1.0).unwrap(), 1.0 / (2.0 * PI), epsilon = 1e-15);
        let m = winding_density(WindingKind::Asymmetric { r1: 0.5, r2: 1.5 }).unwrap();
        assert_eq!(m.curves().len(), 1);
        assert_abs_diff_eq!(m.mass(0).unwrap(), 1.0, epsilon = 1e-14);
        assert!(winding_density(WindingKind::Symmetric { r: 0.0 }).is_err());
    }

    #[test]
    fn asymmetric_reduces_to_symmetric() {
        let a = winding_density(WindingKind::Asymmetric { r1: 0.7, r2: 0.7 }).unwrap();
        let s = winding_density(WindingKind::Symmetric { r: 0.7 }).unwrap();
        for y in [0.1, 1.0, 4.0] {
            assert_abs_diff_eq!(a.value(0, y).unwrap(), s.value(0, y).unwrap(), epsilon = 1e-15);
            assert_abs_diff_eq!(a.value(1, y).unwrap(), s.value(1, y).unwrap(), epsilon = 1e-15);
        }
    }

    #[test]
    fn homotopy_examples() {
        let d = homotopy_segment_density(10_000).unwrap();
        assert_abs_diff_eq!(d.cdf(0, 1.0).unwrap() - d.cdf(0, -1.0).unwrap(), 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(d.value(0, 0.3).unwrap(), d.value(0, -0.3).unwrap(), epsilon = 1e-15);
        assert!(homotopy_segment_density(0).is_err());
    }

    #[test]
    fn dynkin_examples() {
        let d = disk_density(c(0.5, 0.0), 1.0).unwrap();
        assert!(dynkin_check(&d, HarmonicTestFn::RePow(1)).unwrap() <= 1e-8);
        assert!(dynkin_check(&d, HarmonicTestFn::One).unwrap() <= 1e-12);
        let a = annulus_density(1.0, 1.0, None).unwrap();
        assert!(dynkin_check(&a, HarmonicTestFn::RePow(1)).unwrap() <= 1e-8);
    }

    #[test]
    fn description_round_trips() {
        let d = rectangle_density(0.1, 0.2, 1.5, RectangleForm::Horizontal { terms: Some(9) }).unwrap();
        let json = serde_json::to_string(&d.describe()).unwrap();
        let back: DensityDescription = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d.describe());
        assert_eq!(back.truncation, Some(9));
    }
}
