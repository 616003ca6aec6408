//! Pushforward of exit densities through analytic maps.
//!
//! A density on source curves is carried to a target curve either through a
//! forward map `f` (summing over every preimage, `ρ(z)/|f′(z)|`) or through the
//! inverse `g = f⁻¹` of an injective map (`ρ(g(w))·|g′(w)|`).

use std::f64::consts::{FRAC_PI_2, PI};

use crate::densities::{
    self as dens, formulas, Density, HalfStripForm, SegmentForm, StripForm, WindingKind, DEFAULT_LATTICE_K,
};
use crate::error::{Error, Result};
use crate::geometry::{c, sqrt_upper, BoundaryCurve, Complex};
use crate::maps::AnalyticMap;
use crate::quadrature::integrate_split;

/// Anything that has a density per unit arclength on a set of curves.
pub trait CurveDensity {
    fn curves(&self) -> Vec<BoundaryCurve>;
    fn density_at(&self, curve_id: usize, s: f64) -> Result<f64>;
}

impl CurveDensity for Density {
    fn curves(&self) -> Vec<BoundaryCurve> {
        Density::curves(self).to_vec()
    }

    fn density_at(&self, curve_id: usize, s: f64) -> Result<f64> {
        self.value(curve_id, s)
    }
}

/// How the source is carried to the target.
#[derive(Debug, Clone, PartialEq)]
pub enum Mapping {
    /// `f` from source to target; every preimage contributes.
    Forward(AnalyticMap),
    /// `g` from target to source, one-to-one.
    Inverse(AnalyticMap),
}

/// Value of a push together with the truncation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PushValue {
    /// Limit as the preimage index bound grows.
    pub value: f64,
    /// Raw sum over preimages with index `|k| ≤ index_bound`.
    pub partial: f64,
    /// `|value − partial|`: the mass of the omitted preimages.
    pub tail: f64,
    /// Extrapolation error estimate.
    pub error: f64,
}

#[derive(Debug, Clone)]
pub struct Pushforward<S> {
    source: S,
    mapping: Mapping,
    target: BoundaryCurve,
    index_bound: usize,
}

const EXTRAPOLATION_LEVELS: usize = 4;
const DEFAULT_INDEX_BOUND: usize = 64;

fn sample_params(curve: &BoundaryCurve, n: usize) -> Vec<f64> {
    let (lo, hi) = curve.s_range();
    (0..n)
        .map(|j| {
            let t = (j as f64 + 0.5) / n as f64;
            match (lo.is_finite(), hi.is_finite()) {
                (true, true) => lo + (hi - lo) * t,
                (true, false) => lo + t / (1.0 - t),
                (false, true) => hi - t / (1.0 - t),
                (false, false) => (PI * (t - 0.5)).tan(),
            }
        })
        .collect()
}

impl<S: CurveDensity> Pushforward<S> {
    /// Build a push and spot-check that source curves land on the target.
    pub fn new(source: S, mapping: Mapping, target: BoundaryCurve, index_bound: usize) -> Result<Self> {
        if index_bound == 0 {
            return Err(Error::OutOfRange("index bound must be positive".into()));
        }
        let p = Self { source, mapping, target, index_bound };
        p.check_support()?;
        Ok(p)
    }

    pub fn forward(source: S, f: AnalyticMap, target: BoundaryCurve) -> Result<Self> {
        Self::new(source, Mapping::Forward(f), target, DEFAULT_INDEX_BOUND)
    }

    pub fn inverse(source: S, g: AnalyticMap, target: BoundaryCurve) -> Result<Self> {
        Self::new(source, Mapping::Inverse(g), target, DEFAULT_INDEX_BOUND)
    }

    pub fn target(&self) -> &BoundaryCurve {
        &self.target
    }

    pub fn source(&self) -> &S {
        &self.source
    }

    pub fn index_bound(&self) -> usize {
        self.index_bound
    }

    fn check_support(&self) -> Result<()> {
        let tol = 1e-7;
        let off = |z: Complex| Error::OutOfRange(format!("{z} does not lie on the expected curve"));
        match &self.mapping {
            Mapping::Forward(f) => {
                // points of source curves either land on the target or miss it entirely;
                // at least one source curve must land
                let mut landed = false;
                for curve in self.source.curves().iter().filter(|c| c.length() > 0.0) {
                    for s in sample_params(curve, 7) {
                        if let Ok(w) = f.eval(curve.point_at(s)) {
                            landed |= self.target.locate(w, tol).is_some();
                        }
                    }
                }
                if landed {
                    Ok(())
                } else {
                    Err(off(self.target.point_at(0.0)))
                }
            }
            Mapping::Inverse(g) => {
                let curves = self.source.curves();
                for s in sample_params(&self.target, 7) {
                    let z = g.eval(self.target.point_at(s))?;
                    if !curves.iter().any(|c| c.locate(z, tol).is_some()) {
                        return Err(off(z));
                    }
                }
                Ok(())
            }
        }
    }

    fn forward_sum(&self, f: &AnalyticMap, w: Complex, bound: usize) -> Result<f64> {
        let mut total = 0.0;
        let mut comp = 0.0;
        for curve in self.source.curves() {
            for pre in f.preimages_on(w, &curve, bound) {
                let d = f.deriv(pre.z)?.norm();
                if d == 0.0 {
                    return Err(Error::BranchPoint { map: f.label() });
                }
                let t = self.source.density_at(curve.id, pre.s)? / d;
                let s = total + t;
                comp += if total.abs() >= t.abs() { (total - s) + t } else { (t - s) + total };
                total = s;
            }
        }
        Ok(total + comp)
    }

    /// Density on the target at arclength `s`.
    pub fn push(&self, s: f64) -> Result<PushValue> {
        let w = self.target.point_at(s);
        match &self.mapping {
            Mapping::Inverse(g) => {
                let z = g.eval(w)?;
                let jac = g.deriv(w)?.norm();
                let curves = self.source.curves();
                let tol = 1e-9;
                let hit = curves.iter().find_map(|c| c.locate(z, tol).map(|t| (c.id, t)));
                let value = match hit {
                    Some((id, t)) => self.source.density_at(id, t)? * jac,
                    None => 0.0,
                };
                Ok(PushValue { value, partial: value, tail: 0.0, error: 0.0 })
            }
            Mapping::Forward(f) if f.is_injective() => {
                let value = self.forward_sum(f, w, self.index_bound)?;
                Ok(PushValue { value, partial: value, tail: 0.0, error: 0.0 })
            }
            Mapping::Forward(f) => {
                // the omitted preimages form a smooth tail in 1/K; extrapolate K → ∞
                let mut row = (0..EXTRAPOLATION_LEVELS)
                    .map(|j| self.forward_sum(f, w, self.index_bound << j))
                    .collect::<Result<Vec<f64>>>()?;
                let partial = row[0];
                let mut diag = vec![row[row.len() - 1]];
                for m in 1..EXTRAPOLATION_LEVELS {
                    let q = (1u64 << m) as f64;
                    row = row.windows(2).map(|v| (q * v[1] - v[0]) / (q - 1.0)).collect();
                    diag.push(row[row.len() - 1]);
                }
                let value = diag[diag.len() - 1];
                let error = (value - diag[diag.len() - 2]).abs() + 4.0 * f64::EPSILON * value.abs();
                Ok(PushValue { value, partial, tail: (value - partial).abs(), error })
            }
        }
    }
}

impl<S: CurveDensity> CurveDensity for Pushforward<S> {
    fn curves(&self) -> Vec<BoundaryCurve> {
        vec![BoundaryCurve { id: 0, ..self.target }]
    }

    fn density_at(&self, curve_id: usize, s: f64) -> Result<f64> {
        if curve_id != 0 {
            return Err(Error::OutOfRange(format!("a push has one curve, got id {curve_id}")));
        }
        let (lo, hi) = self.target.s_range();
        if s < lo || s > hi {
            return Ok(0.0);
        }
        self.push(s).map(|p| p.value)
    }
}

/// Total mass of the pushed density on the target curve.
pub fn push_mass_check<S: CurveDensity>(p: &Pushforward<S>) -> Result<f64> {
    let (lo, hi) = p.target.s_range();
    let f = |s: f64| p.push(s).map(|v| v.value).unwrap_or(f64::NAN);
    let q = integrate_split(f, lo, hi, &[0.0], 1e-9, 0.0)?;
    if q.value.is_nan() {
        return Err(Error::Quadrature { estimate: q.value, error: q.error });
    }
    Ok(q.value)
}

/// A catalog density paired with the push that should reproduce it on one curve.
pub struct CatalogPush {
    pub id: &'static str,
    pub push: Pushforward<Density>,
    pub reference: Density,
    pub reference_curve: usize,
}

impl CatalogPush {
    /// Target arclength parameters at which the two sides are compared.
    pub fn sample_points(&self, n: usize) -> Vec<f64> {
        let curve = self.push.target();
        let (lo, hi) = curve.s_range();
        let near = curve.nearest(self.reference.start()).0;
        (0..n)
            .map(|j| {
                let t = (j as f64 + 0.5) / n as f64;
                match (lo.is_finite(), hi.is_finite()) {
                    (true, true) => lo + (hi - lo) * t,
                    // spread over a few widths of the peak without reaching far tails
                    (true, false) => lo + 8.0 * t / (1.0 - 0.9 * t),
                    (false, true) => hi - 8.0 * t / (1.0 - 0.9 * t),
                    (false, false) => near + 4.0 * (0.95 * PI * (t - 0.5)).tan(),
                }
            })
            .collect()
    }

    /// Largest `|push − reference|` over `n` sample points.
    pub fn max_discrepancy(&self, n: usize) -> Result<f64> {
        self.sample_points(n).into_iter().try_fold(0.0f64, |acc, s| {
            let pushed = self.push.push(s)?.value;
            let want = self.reference.value(self.reference_curve, s)?;
            Ok(acc.max((pushed - want).abs()))
        })
    }
}

fn entry(
    id: &'static str,
    source: Density,
    mapping: Mapping,
    reference: Density,
    reference_curve: usize,
) -> Result<CatalogPush> {
    let target = *reference.curve(reference_curve)?;
    let push = Pushforward::new(source, mapping, target, DEFAULT_INDEX_BOUND)?;
    Ok(CatalogPush { id, push, reference, reference_curve })
}

/// `(1 + z)/(1 − z)`
fn phi_map() -> Result<AnalyticMap> {
    AnalyticMap::mobius(c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0))
}

/// `(z − 1)/(z + 1)`, the inverse of `φ`.
fn phi_inverse_map() -> Result<AnalyticMap> {
    AnalyticMap::mobius(c(1.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0))
}

fn scale(v: Complex) -> Result<AnalyticMap> {
    AnalyticMap::scale_translate(c(0.0, 0.0), v)
}

/// Every catalog density reproduced as a push of a simpler density.
pub fn catalog() -> Result<Vec<CatalogPush>> {
    let mut out = Vec::new();
    let fwd = Mapping::Forward;
    let inv = Mapping::Inverse;

    // disk from a: the uniform law from 0 carried by the automorphism sending 0 to a
    let a = c(0.3, 0.4);
    out.push(entry(
        "disk_automorphism",
        dens::disk_density(c(0.0, 0.0), 1.0)?,
        fwd(AnalyticMap::disk_automorphism(-a)?),
        dens::disk_density(a, 1.0)?,
        0,
    )?);
    let (a, m) = (c(-0.5, 0.9), 1.7);
    out.push(entry(
        "disk_scaled",
        dens::disk_density(a / m, 1.0)?,
        fwd(scale(c(m, 0.0))?),
        dens::disk_density(a, m)?,
        0,
    )?);
    let (a, m) = (c(1.2, -2.0), 0.8);
    out.push(entry(
        "disk_exterior",
        dens::disk_density(m / a, 1.0)?,
        fwd(AnalyticMap::mobius(c(0.0, 0.0), c(m, 0.0), c(1.0, 0.0), c(0.0, 0.0))?),
        dens::disk_density(a, m)?,
        0,
    )?);
    let a = c(0.5, 2.0);
    let cayley_a = (a - Complex::i()) / (a + Complex::i());
    out.push(entry(
        "disk_cayley",
        dens::halfplane_density(a)?,
        fwd(AnalyticMap::Cayley),
        dens::disk_density(cayley_a, 1.0)?,
        0,
    )?);

    // punctured disk: half-plane kernels summed over the covering e^{iz}
    let a = c(0.25, 0.2);
    out.push(entry(
        "punctured_disk",
        dens::halfplane_density(c(a.arg(), -a.norm().ln()))?,
        fwd(AnalyticMap::ExpI),
        dens::punctured_disk_density(a, DEFAULT_LATTICE_K)?,
        0,
    )?);

    // strip: disk law pulled back through tan(πz/4), compared with the reflection series
    let a = 0.3;
    for side in 0..2 {
        out.push(entry(
            if side == 0 { "strip_left" } else { "strip_right" },
            dens::disk_density(c((PI * a / 4.0).tan(), 0.0), 1.0)?,
            inv(AnalyticMap::TanQuarter),
            dens::strip_density(a, StripForm::Reflection { terms: None })?,
            side,
        )?);
    }

    // half-strip: half-plane law pulled back through sin(πz/2)
    let (al, be) = (0.3, 0.7);
    let (u, v) = formulas::halfstrip_image(al, be);
    for (id, name) in [(0, "halfstrip_bottom"), (1, "halfstrip_left"), (2, "halfstrip_right")] {
        out.push(entry(
            name,
            dens::halfplane_density(c(u, v))?,
            inv(AnalyticMap::SinHalf),
            dens::halfstrip_density(al, be, HalfStripForm::Reflection)?,
            id,
        )?);
    }

    // segment: covering sum through sin(πz/2) and the chain square then φ⁻¹
    let omega = c(0.4, 0.6);
    let (al, be) = formulas::segment_lift(omega);
    out.push(entry(
        "segment_covering",
        dens::halfplane_density(c(al, be))?,
        fwd(AnalyticMap::SinHalf),
        dens::segment_density(omega, SegmentForm::Closed, 0)?,
        0,
    )?);
    let s0 = sqrt_upper((1.0 + omega) / (1.0 - omega));
    out.push(entry(
        "segment_chain",
        dens::halfplane_density(s0)?,
        fwd(AnalyticMap::chain([AnalyticMap::Square, phi_inverse_map()?]).expect("nonempty chain")),
        dens::segment_density(omega, SegmentForm::Covering, DEFAULT_LATTICE_K)?,
        0,
    )?);

    // annulus: the strip law carried by e^{rz}
    let (a, r): (f64, f64) = (1.4, 1.0);
    for side in 0..2 {
        out.push(entry(
            if side == 0 { "annulus_inner" } else { "annulus_outer" },
            dens::strip_density(a.ln() / r, StripForm::Conformal)?,
            fwd(AnalyticMap::exp_r(r)?),
            dens::annulus_density(a, r, None)?,
            side,
        )?);
    }

    // winding times: the half-plane law from i carried by powers
    let to_right = scale(c(0.0, -1.0))?;
    for r in [0.5, 1.0, 1.7] {
        let density = dens::winding_density(WindingKind::Symmetric { r })?;
        let map = AnalyticMap::chain([to_right.clone(), AnalyticMap::power(2.0 * r)?]).expect("nonempty chain");
        for id in 0..density.curves().len() {
            out.push(entry("winding_symmetric", dens::halfplane_density(Complex::i())?, fwd(map.clone()), density.clone(), id)?);
        }
    }
    let (r1, r2) = (0.6, 1.1);
    let p = r1 + r2;
    let theta = FRAC_PI_2 * (r2 - r1) / p;
    let map = AnalyticMap::chain([
        to_right.clone(),
        AnalyticMap::power(p)?,
        scale(Complex::from_polar(1.0, -FRAC_PI_2 * (r2 - r1)))?,
    ])
    .expect("nonempty chain");
    let density = dens::winding_density(WindingKind::Asymmetric { r1, r2 })?;
    for id in 0..2 {
        out.push(entry(
            "winding_asymmetric",
            dens::halfplane_density(Complex::i() * Complex::from_polar(1.0, theta))?,
            fwd(map.clone()),
            density.clone(),
            id,
        )?);
    }
    let r = 1.0;
    out.push(entry(
        "winding_prescribed",
        dens::halfplane_density(c(0.0, r))?,
        fwd(AnalyticMap::chain([AnalyticMap::scale_translate(c(0.0, r), c(-1.0, 0.0))?, AnalyticMap::exp_r(1.0)?])
            .expect("nonempty chain")),
        dens::winding_density(WindingKind::Prescribed { r })?,
        0,
    )?);

    // double ray from 0 and the homotopy time built on it
    for id in 0..2 {
        out.push(entry(
            "double_ray",
            dens::halfplane_density(Complex::i())?,
            fwd(AnalyticMap::chain([AnalyticMap::Square, phi_map()?]).expect("nonempty chain")),
            dens::double_ray_density(),
            id,
        )?);
    }
    out.push(entry(
        "homotopy_segment",
        dens::double_ray_density(),
        fwd(AnalyticMap::SinHalf),
        dens::homotopy_segment_density(10_000)?,
        0,
    )?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cayley_from_i_is_uniform() {
        let src = dens::halfplane_density(Complex::i()).unwrap();
        let circle = BoundaryCurve::circle(0, "circle", c(0.0, 0.0), 1.0);
        let p = Pushforward::forward(src, AnalyticMap::Cayley, circle).unwrap();
        for s in [-3.0, -1.0, 0.1, 0.5, 2.9] {
            assert_abs_diff_eq!(p.push(s).unwrap().value, 1.0 / (2.0 * PI), epsilon = 1e-14);
        }
        assert_abs_diff_eq!(push_mass_check(&p).unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn exp_i_term_by_term() {
        let a = c(0.3, 0.1);
        let src = dens::halfplane_density(c(a.arg(), -a.norm().ln())).unwrap();
        let circle = BoundaryCurve::circle(0, "circle", c(0.0, 0.0), 1.0);
        let p = Pushforward::new(src, Mapping::Forward(AnalyticMap::ExpI), circle, 5).unwrap();
        let v = p.push(0.4).unwrap();
        assert_abs_diff_eq!(v.partial, Density::punctured_partial(a, 0.4, 5), epsilon = 1e-15);
        assert!(v.tail > 0.0);
    }

    #[test]
    fn double_ray_building_block() {
        let src = dens::halfplane_density(Complex::i()).unwrap();
        let right = *dens::double_ray_density().curve(1).unwrap();
        let f = AnalyticMap::chain([AnalyticMap::Square, phi_map().unwrap()]).unwrap();
        let p = Pushforward::forward(src, f, right).unwrap();
        assert_abs_diff_eq!(p.push(2.0).unwrap().value, 1.0 / (2.0 * PI * 3f64.sqrt()), epsilon = 1e-14);
    }

    #[test]
    fn catalog_reproduces_densities() {
        for e in catalog().unwrap() {
            let d = e.max_discrepancy(50).unwrap();
            assert!(d <= 1e-9, "{}: {d:e}", e.id);
        }
    }

    #[test]
    fn mass_checks() {
        let disk = dens::disk_density(c(0.0, 0.0), 1.0).unwrap();
        let circle = *disk.curve(0).unwrap();
        let p = Pushforward::forward(disk, AnalyticMap::disk_automorphism(c(0.2, -0.5)).unwrap(), circle).unwrap();
        assert_abs_diff_eq!(push_mass_check(&p).unwrap(), 1.0, epsilon = 1e-7);

        let strip = dens::strip_density(0.2, StripForm::Conformal).unwrap();
        let ann = dens::annulus_density(0.2_f64.exp(), 1.0, None).unwrap();
        let total: f64 = (0..2)
            .map(|id| {
                let p = Pushforward::forward(strip.clone(), AnalyticMap::exp_r(1.0).unwrap(), *ann.curve(id).unwrap())
                    .unwrap();
                push_mass_check(&p).unwrap()
            })
            .sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-7);

        let w = dens::winding_density(WindingKind::Symmetric { r: 0.75 }).unwrap();
        let map = AnalyticMap::chain([scale(c(0.0, -1.0)).unwrap(), AnalyticMap::power(1.5).unwrap()]).unwrap();
        let total: f64 = (0..2)
            .map(|id| {
                let p = Pushforward::forward(dens::halfplane_density(Complex::i()).unwrap(), map.clone(), *w.curve(id).unwrap())
                    .unwrap();
                push_mass_check(&p).unwrap()
            })
            .sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-7);
    }

    #[test]
    fn composition_is_coherent() {
        // H from 1+2i, then square onto C∖[0,∞), then φ⁻¹ onto C∖[−1,1]
        let src = dens::halfplane_density(c(1.0, 2.0)).unwrap();
        let ray = BoundaryCurve::straight(0, "ray", c(0.0, 0.0), c(1.0, 0.0), 0.0, f64::INFINITY);
        let seg = BoundaryCurve::straight(0, "segment", c(0.0, 0.0), c(1.0, 0.0), -1.0, 1.0);
        let step1 = Pushforward::forward(src.clone(), AnalyticMap::Square, ray).unwrap();
        let step2 = Pushforward::forward(step1, phi_inverse_map().unwrap(), seg).unwrap();
        let both = AnalyticMap::compose(phi_inverse_map().unwrap(), AnalyticMap::Square);
        let once = Pushforward::forward(src, both, seg).unwrap();
        for s in [-0.9, -0.3, 0.0, 0.6, 0.99] {
            assert_abs_diff_eq!(step2.push(s).unwrap().value, once.push(s).unwrap().value, epsilon = 1e-10);
        }
    }

    #[test]
    fn wrong_target_is_rejected() {
        let src = dens::halfplane_density(Complex::i()).unwrap();
        let off = BoundaryCurve::circle(0, "circle", c(0.0, 0.0), 3.0);
        assert!(Pushforward::forward(src, AnalyticMap::Cayley, off).is_err());
    }
}
