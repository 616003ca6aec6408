//! Complex helpers, arclength-parameterized boundary curves and the catalog of
//! planar domains.
//!
//! Every curve is parameterized by arclength `s`. Circles use `s = R·θ` with
//! `θ ∈ [-π, π)`; straight pieces use the signed coordinate along their
//! direction, so a vertical line `x0 + iy` has `s = y` and the real axis has
//! `s = x`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use num_complex::Complex64 as Complex;

/// Shorthand constructor.
#[inline]
pub fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

/// Square root whose values lie in the closed upper half-plane `H ∪ [0, ∞)`.
pub fn sqrt_upper(z: Complex) -> Complex {
    let s = z.sqrt();
    if s.im < 0.0 || (s.im == 0.0 && s.re < 0.0) {
        -s
    } else {
        s
    }
}

/// Principal logarithm, `arg ∈ (-π, π]`.
pub fn log_principal(z: Complex) -> Result<Complex> {
    if z == Complex::new(0.0, 0.0) {
        return Err(Error::Singular { map: "log".into(), re: 0.0, im: 0.0 });
    }
    Ok(Complex::new(z.norm().ln(), z.arg()))
}

/// Wrap an angle into `[-π, π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let t = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if t >= PI {
        t - 2.0 * PI
    } else {
        t
    }
}

/// Geometric shape of one boundary component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum CurveShape {
    /// `center + R e^{iθ}`, `s = Rθ ∈ [-πR, πR)`.
    Circle { center: Complex, radius: f64 },
    /// `origin + s·dir` with `|dir| = 1` and `s ∈ [s_min, s_max]` (either end may be infinite).
    Straight { origin: Complex, dir: Complex, s_min: f64, s_max: f64 },
    /// Isolated boundary point (the puncture of the punctured disk).
    Point { at: Complex },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryCurve {
    pub id: usize,
    pub label: &'static str,
    pub shape: CurveShape,
}

impl BoundaryCurve {
    pub fn circle(id: usize, label: &'static str, center: Complex, radius: f64) -> Self {
        Self { id, label, shape: CurveShape::Circle { center, radius } }
    }

    pub fn straight(
        id: usize,
        label: &'static str,
        origin: Complex,
        dir: Complex,
        s_min: f64,
        s_max: f64,
    ) -> Self {
        let dir = dir / dir.norm();
        Self { id, label, shape: CurveShape::Straight { origin, dir, s_min, s_max } }
    }

    /// Ray from the origin at angle `phi`, parameterized by the distance to 0.
    pub fn ray(id: usize, label: &'static str, phi: f64) -> Self {
        Self::straight(id, label, c(0.0, 0.0), Complex::from_polar(1.0, phi), 0.0, f64::INFINITY)
    }

    pub fn point(id: usize, label: &'static str, at: Complex) -> Self {
        Self { id, label, shape: CurveShape::Point { at } }
    }

    pub fn s_range(&self) -> (f64, f64) {
        match self.shape {
            CurveShape::Circle { radius, .. } => (-PI * radius, PI * radius),
            CurveShape::Straight { s_min, s_max, .. } => (s_min, s_max),
            CurveShape::Point { .. } => (0.0, 0.0),
        }
    }

    pub fn length(&self) -> f64 {
        let (a, b) = self.s_range();
        b - a
    }

    pub fn is_bounded(&self) -> bool {
        self.length().is_finite()
    }

    pub fn point_at(&self, s: f64) -> Complex {
        match self.shape {
            CurveShape::Circle { center, radius } => center + Complex::from_polar(radius, s / radius),
            CurveShape::Straight { origin, dir, .. } => origin + dir * s,
            CurveShape::Point { at } => at,
        }
    }

    /// Unit tangent `d point / ds`.
    pub fn tangent_at(&self, s: f64) -> Complex {
        match self.shape {
            CurveShape::Circle { radius, .. } => Complex::i() * Complex::from_polar(1.0, s / radius),
            CurveShape::Straight { dir, .. } => dir,
            CurveShape::Point { .. } => c(0.0, 0.0),
        }
    }

    /// Closest point of the curve: `(s, distance)`. Ties resolve to the lowest `s`.
    pub fn nearest(&self, z: Complex) -> (f64, f64) {
        match self.shape {
            CurveShape::Circle { center, radius } => {
                let d = z - center;
                if d.norm() == 0.0 {
                    return (-PI * radius, radius);
                }
                let theta = wrap_angle(d.arg());
                (radius * theta, (d.norm() - radius).abs())
            }
            CurveShape::Straight { origin, dir, s_min, s_max } => {
                let along = ((z - origin) * dir.conj()).re;
                let s = along.clamp(s_min, s_max);
                (s, (z - (origin + dir * s)).norm())
            }
            CurveShape::Point { at } => (0.0, (z - at).norm()),
        }
    }

    /// Parameter of `z` if it lies on the curve within `tol`.
    pub fn locate(&self, z: Complex, tol: f64) -> Option<f64> {
        let (s, d) = self.nearest(z);
        (d <= tol * (1.0 + z.norm())).then_some(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// `Im z > 0`
    Upper,
    /// `Im z < 0`
    Lower,
    /// `Re z > 0`
    Right,
    /// `Re z < 0`
    Left,
}

/// The supported regions (or target sets, for `Segment` and `DoubleRay`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Disk { radius: f64 },
    ExteriorDisk { radius: f64 },
    HalfPlane { orientation: Orientation },
    /// `|Re z| < half_width`
    Strip { half_width: f64 },
    /// `|Re z| < 1, Im z > 0`
    HalfStrip,
    /// `|Re z| < 1, |Im z| < half_height`
    Rectangle { half_height: f64 },
    /// `e^{-r} < |z| < e^{r}`
    Annulus { log_radius: f64 },
    /// `0 < |z| < 1`
    PuncturedDisk,
    /// complement of `[-1, 1]`
    Segment,
    /// complement of `(-∞, -1] ∪ [1, ∞)`
    DoubleRay,
}

impl Domain {
    pub fn disk(radius: f64) -> Self {
        Domain::Disk { radius }
    }

    pub fn strip(half_width: f64) -> Self {
        Domain::Strip { half_width }
    }

    pub fn rectangle(half_height: f64) -> Self {
        Domain::Rectangle { half_height }
    }

    pub fn annulus(log_radius: f64) -> Self {
        Domain::Annulus { log_radius }
    }

    pub fn upper_half_plane() -> Self {
        Domain::HalfPlane { orientation: Orientation::Upper }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::OutOfRange(format!("{what} must be positive and finite, got {v}")));
        match *self {
            Domain::Disk { radius } | Domain::ExteriorDisk { radius } if !(radius > 0.0 && radius.is_finite()) => {
                bad("radius", radius)
            }
            Domain::Strip { half_width } if !(half_width > 0.0 && half_width.is_finite()) => {
                bad("half_width", half_width)
            }
            Domain::Rectangle { half_height } if !(half_height > 0.0 && half_height.is_finite()) => {
                bad("half_height", half_height)
            }
            Domain::Annulus { log_radius } if !(log_radius > 0.0 && log_radius.is_finite()) => {
                bad("log_radius", log_radius)
            }
            _ => Ok(()),
        }
    }

    /// Boundary components in `curve_id` order.
    pub fn curves(&self) -> Vec<BoundaryCurve> {
        let o = c(0.0, 0.0);
        let i = Complex::i();
        let one = c(1.0, 0.0);
        let inf = f64::INFINITY;
        match *self {
            Domain::Disk { radius } | Domain::ExteriorDisk { radius } => {
                vec![BoundaryCurve::circle(0, "circle", o, radius)]
            }
            Domain::HalfPlane { orientation } => {
                let dir = match orientation {
                    Orientation::Upper | Orientation::Lower => one,
                    Orientation::Right | Orientation::Left => i,
                };
                vec![BoundaryCurve::straight(0, "line", o, dir, -inf, inf)]
            }
            Domain::Strip { half_width } => vec![
                BoundaryCurve::straight(0, "left", c(-half_width, 0.0), i, -inf, inf),
                BoundaryCurve::straight(1, "right", c(half_width, 0.0), i, -inf, inf),
            ],
            Domain::HalfStrip => vec![
                BoundaryCurve::straight(0, "bottom", o, one, -1.0, 1.0),
                BoundaryCurve::straight(1, "left", c(-1.0, 0.0), i, 0.0, inf),
                BoundaryCurve::straight(2, "right", c(1.0, 0.0), i, 0.0, inf),
            ],
            Domain::Rectangle { half_height: k } => vec![
                BoundaryCurve::straight(0, "bottom", c(0.0, -k), one, -1.0, 1.0),
                BoundaryCurve::straight(1, "right", c(1.0, 0.0), i, -k, k),
                BoundaryCurve::straight(2, "top", c(0.0, k), one, -1.0, 1.0),
                BoundaryCurve::straight(3, "left", c(-1.0, 0.0), i, -k, k),
            ],
            Domain::Annulus { log_radius } => vec![
                BoundaryCurve::circle(0, "inner", o, (-log_radius).exp()),
                BoundaryCurve::circle(1, "outer", o, log_radius.exp()),
            ],
            Domain::PuncturedDisk => vec![
                BoundaryCurve::circle(0, "circle", o, 1.0),
                BoundaryCurve::point(1, "puncture", o),
            ],
            Domain::Segment => vec![BoundaryCurve::straight(0, "segment", o, one, -1.0, 1.0)],
            Domain::DoubleRay => vec![
                BoundaryCurve::straight(0, "left", o, one, -inf, -1.0),
                BoundaryCurve::straight(1, "right", o, one, 1.0, inf),
            ],
        }
    }

    pub fn curve(&self, id: usize) -> Result<BoundaryCurve> {
        self.curves()
            .into_iter()
            .nth(id)
            .ok_or_else(|| Error::OutOfRange(format!("curve id {id} not present on {self:?}")))
    }

    /// True iff `z` is interior.
    pub fn contains(&self, z: Complex) -> bool {
        let (x, y) = (z.re, z.im);
        match *self {
            Domain::Disk { radius } => z.norm() < radius,
            Domain::ExteriorDisk { radius } => z.norm() > radius,
            Domain::HalfPlane { orientation } => match orientation {
                Orientation::Upper => y > 0.0,
                Orientation::Lower => y < 0.0,
                Orientation::Right => x > 0.0,
                Orientation::Left => x < 0.0,
            },
            Domain::Strip { half_width } => x.abs() < half_width,
            Domain::HalfStrip => x.abs() < 1.0 && y > 0.0,
            Domain::Rectangle { half_height } => x.abs() < 1.0 && y.abs() < half_height,
            Domain::Annulus { log_radius } => {
                let r = z.norm();
                r > (-log_radius).exp() && r < log_radius.exp()
            }
            Domain::PuncturedDisk => {
                let r = z.norm();
                r > 0.0 && r < 1.0
            }
            Domain::Segment => !(y == 0.0 && x.abs() <= 1.0),
            Domain::DoubleRay => !(y == 0.0 && x.abs() >= 1.0),
        }
    }

    /// Closest boundary point `(curve_id, s, distance)`; ties go to the lowest
    /// `curve_id`, then the lowest `s`.
    pub fn nearest_boundary(&self, z: Complex) -> (usize, f64, f64) {
        let mut best = (usize::MAX, f64::INFINITY, f64::INFINITY);
        for curve in self.curves() {
            let (s, d) = curve.nearest(z);
            if d < best.2 {
                best = (curve.id, s, d);
            }
        }
        best
    }

    /// Distance from an interior point to the boundary.
    pub fn inradius(&self, z: Complex) -> Result<f64> {
        if !self.contains(z) {
            return Err(Error::NotInterior { re: z.re, im: z.im });
        }
        Ok(self.nearest_boundary(z).2)
    }

    /// Distance to the boundary, positive inside and negative outside.
    pub fn signed_distance(&self, z: Complex) -> f64 {
        let d = self.nearest_boundary(z).2;
        if self.contains(z) {
            d
        } else {
            -d
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn contains_examples() {
        assert!(Domain::disk(1.0).contains(c(0.0, 0.0)));
        assert!(!Domain::strip(1.0).contains(c(1.0, 5.0)));
        assert!(Domain::annulus(1.0).contains(c(1.0, 0.0)));
        assert!(!Domain::PuncturedDisk.contains(c(0.0, 0.0)));
        assert!(!Domain::Segment.contains(c(0.3, 0.0)));
        assert!(Domain::Segment.contains(c(1.5, 0.0)));
        assert!(Domain::DoubleRay.contains(c(0.0, 0.0)));
        assert!(!Domain::DoubleRay.contains(c(-3.0, 0.0)));
    }

    #[test]
    fn inradius_examples() {
        assert_abs_diff_eq!(Domain::disk(1.0).inradius(c(0.0, 0.0)).unwrap(), 1.0);
        assert_abs_diff_eq!(Domain::strip(1.0).inradius(c(0.25, 0.0)).unwrap(), 0.75);
        assert_abs_diff_eq!(Domain::rectangle(0.5).inradius(c(0.0, 0.0)).unwrap(), 0.5);
        assert!(Domain::strip(1.0).inradius(c(2.0, 0.0)).is_err());
    }

    #[test]
    fn nearest_boundary_examples() {
        let (id, s, d) = Domain::disk(1.0).nearest_boundary(c(0.9, 0.0));
        assert_eq!(id, 0);
        assert_abs_diff_eq!(s, 0.0);
        assert_abs_diff_eq!(d, 0.1, epsilon = 1e-15);

        let (id, s, d) = Domain::strip(1.0).nearest_boundary(c(0.5, 2.0));
        assert_eq!(id, 1);
        assert_abs_diff_eq!(s, 2.0);
        assert_abs_diff_eq!(d, 0.5);
    }

    #[test]
    fn nearest_boundary_tie_breaks_by_curve_then_s() {
        // equidistant from bottom, right and top sides
        let (id, s, d) = Domain::rectangle(0.5).nearest_boundary(c(0.5, 0.0));
        assert_eq!(id, 0);
        assert_abs_diff_eq!(s, 0.5);
        assert_abs_diff_eq!(d, 0.5);
        // the disk center is equidistant from every circle point
        let (id, s, _) = Domain::disk(2.0).nearest_boundary(c(0.0, 0.0));
        assert_eq!(id, 0);
        assert_abs_diff_eq!(s, -2.0 * PI);
    }

    #[test]
    fn point_at_is_unit_speed() {
        let domains = [
            Domain::disk(2.5),
            Domain::strip(1.0),
            Domain::HalfStrip,
            Domain::rectangle(0.7),
            Domain::annulus(0.8),
            Domain::DoubleRay,
        ];
        let h = 1e-6;
        for d in domains {
            for curve in d.curves() {
                let (a, b) = curve.s_range();
                let (a, b) = (a.max(-5.0), b.min(5.0));
                for j in 1..20 {
                    let s = a + (b - a) * j as f64 / 20.0;
                    let speed = (curve.point_at(s + h) - curve.point_at(s - h)).norm() / (2.0 * h);
                    assert_abs_diff_eq!(speed, 1.0, epsilon = 1e-8);
                    let step = (curve.point_at(s + 0.3) - curve.point_at(s)).norm();
                    assert!(step <= 0.3 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn sqrt_upper_branch() {
        let s = sqrt_upper(c(-4.0, 0.0));
        assert_abs_diff_eq!(s.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.im, 2.0);
        assert_abs_diff_eq!(sqrt_upper(c(9.0, 0.0)).re, 3.0);
        assert!(sqrt_upper(c(0.3, -1.0)).im > 0.0);
    }

    #[test]
    fn boundary_points_locate_back() {
        for d in [Domain::rectangle(1.3), Domain::annulus(0.4), Domain::HalfStrip] {
            for curve in d.curves() {
                let (a, b) = curve.s_range();
                let s = 0.5 * (a.max(-3.0) + b.min(3.0));
                let z = curve.point_at(s);
                let (id, s2, dist) = d.nearest_boundary(z);
                assert!(dist < 1e-12);
                assert_eq!(d.curve(id).unwrap().point_at(s2), z);
            }
        }
    }
}
