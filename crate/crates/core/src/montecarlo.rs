//! Path simulation of planar Brownian motion up to exit and winding
//! stopping times, and the statistics that compare samples with densities.
//!
//! Both schemes move by exact disk-exit jumps while the stopping set is far
//! away. A jump disk never contains a point whose winding is tracked, so the
//! argument change over a jump is the principal argument of the displacement
//! ratio. Near the stopping set the Euler scheme switches to Gaussian steps of
//! variance `step` per coordinate. Walk-on-spheres keeps jumping and stops
//! within `boundary_tol` of the boundary.

use std::collections::BTreeMap;
use std::f64::consts::{E, PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::densities::{
    annulus_density, disk_density, double_ray_density, halfplane_density, halfstrip_density, homotopy_segment_density,
    punctured_disk_density, rectangle_density, segment_density, strip_density, winding_density, Density, DensityKind,
    HalfStripForm, RectangleForm, SegmentForm, StripForm, WindingKind, DEFAULT_LATTICE_K,
};
use crate::error::{Error, Result};
use crate::geometry::{c, Complex, Domain};

/// Fraction of the distance to a tracked point used as a jump radius.
const SINGULAR_FRACTION: f64 = 0.9;
/// Gaussian step size relative to the distance to a tracked point.
const RELATIVE_STEP: f64 = 0.01;
/// Gaussian steps are used within this many step sizes of the stopping set.
const EULER_ZONE: f64 = 10.0;
/// Smallest relative Gaussian step for the scale-free winding walks.
const MIN_RELATIVE_STEP: f64 = 1e-9;
/// Segment hitting: beyond this radius the path is returned to `REENTRY_RADIUS`.
const FAR_RADIUS: f64 = 16.0;
const REENTRY_RADIUS: f64 = 4.0;
/// Homotopy rule: beyond this radius the walk continues in log-polar form.
const LOG_POLAR_RADIUS: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Euler,
    WalkOnSpheres,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathConfig {
    /// Time increment `h` of a Gaussian step.
    pub step: f64,
    pub max_steps: u64,
    /// Walk-on-spheres stopping distance `ε`.
    pub boundary_tol: f64,
    pub seed: u64,
    pub scheme: Scheme,
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig { step: 1e-4, max_steps: 10_000_000, boundary_tol: 1e-6, seed: 0, scheme: Scheme::Euler }
    }
}

impl PathConfig {
    pub fn with_scheme(self, scheme: Scheme) -> Self {
        PathConfig { scheme, ..self }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        PathConfig { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::OutOfRange(format!("step must be positive, got {}", self.step)));
        }
        if !(self.boundary_tol > 0.0 && self.boundary_tol.is_finite()) {
            return Err(Error::OutOfRange(format!("boundary_tol must be positive, got {}", self.boundary_tol)));
        }
        if self.max_steps == 0 {
            return Err(Error::OutOfRange("max_steps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StoppingRule {
    Exit { domain: Domain },
    /// Continuous argument leaves `(−rπ, rπ)`.
    WindingSym { r: f64 },
    /// Continuous argument leaves `(−r2·π, r1·π)`.
    WindingAsym { r1: f64, r2: f64 },
    /// Continuous argument reaches `r` radians.
    PrescribedArg { r: f64 },
    HitSegment,
    HitDoubleRay,
    /// First crossing of `(−1, 1)` by a path that has wound around `−1` or `1`.
    HomotopySegment,
}

impl StoppingRule {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::OutOfRange(format!("{name} must be positive, got {v}")))
            }
        };
        match *self {
            StoppingRule::Exit { domain } => domain.validate(),
            StoppingRule::WindingSym { r } => pos("r", r),
            StoppingRule::WindingAsym { r1, r2 } => pos("r1", r1).and(pos("r2", r2)),
            StoppingRule::PrescribedArg { r } => {
                if r != 0.0 && r.is_finite() {
                    Ok(())
                } else {
                    Err(Error::OutOfRange(format!("r must be nonzero, got {r}")))
                }
            }
            _ => Ok(()),
        }
    }

    /// The region whose exit time this rule is, if any.
    pub fn exit_domain(&self) -> Option<Domain> {
        match *self {
            StoppingRule::Exit { domain } => Some(domain),
            StoppingRule::HitSegment => Some(Domain::Segment),
            StoppingRule::HitDoubleRay => Some(Domain::DoubleRay),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            StoppingRule::Exit { .. } => "exit",
            StoppingRule::WindingSym { .. } => "winding_sym",
            StoppingRule::WindingAsym { .. } => "winding_asym",
            StoppingRule::PrescribedArg { .. } => "prescribed_arg",
            StoppingRule::HitSegment => "hit_segment",
            StoppingRule::HitDoubleRay => "hit_double_ray",
            StoppingRule::HomotopySegment => "homotopy_segment",
        }
    }
}

/// Where and how a path stopped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StopSample {
    pub stop_point: Complex,
    /// `ln|stop_point|`, finite even when `stop_point` overflows.
    pub log_modulus: f64,
    /// Continuous argument at the stop around the tracked point (`0`, or `−1`
    /// for the homotopy rule); the principal argument when nothing is tracked.
    pub arg: f64,
    /// Sheet of the continuous argument: `(arg − Arg(stop))/2π` when a point
    /// is tracked, otherwise 0.
    pub winding_index: i64,
    pub steps_used: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Simulation {
    pub n_paths: usize,
    pub samples: Vec<StopSample>,
    /// Paths that used `max_steps` without stopping.
    pub abandoned: usize,
}

impl Simulation {
    pub fn abandonment_rate(&self) -> f64 {
        self.abandoned as f64 / self.n_paths.max(1) as f64
    }
}

/// Simulate `n_paths` independent paths. Path `i` draws from a ChaCha stream
/// keyed by `(seed, i)`, so results do not depend on evaluation order.
pub fn simulate(start: Complex, rule: StoppingRule, cfg: &PathConfig, n_paths: usize) -> Result<Simulation> {
    check_inputs(start, &rule, cfg)?;
    let mut samples = Vec::with_capacity(n_paths);
    let mut abandoned = 0;
    for i in 0..n_paths {
        match run_path(start, &rule, cfg, i as u64) {
            Some(s) => samples.push(s),
            None => abandoned += 1,
        }
    }
    Ok(Simulation { n_paths, samples, abandoned })
}

/// One path; `None` if it was abandoned.
pub fn simulate_path(start: Complex, rule: StoppingRule, cfg: &PathConfig, index: u64) -> Result<Option<StopSample>> {
    check_inputs(start, &rule, cfg)?;
    Ok(run_path(start, &rule, cfg, index))
}

fn check_inputs(start: Complex, rule: &StoppingRule, cfg: &PathConfig) -> Result<()> {
    cfg.validate()?;
    rule.validate()?;
    if !(start.re.is_finite() && start.im.is_finite()) {
        return Err(Error::OutOfRange("start must be finite".into()));
    }
    if cfg.scheme == Scheme::WalkOnSpheres && rule.exit_domain().is_none() {
        return Err(Error::Unsupported(format!("walk on spheres needs an exit rule, got {}", rule.label())));
    }
    match *rule {
        StoppingRule::Exit { domain } if !domain.contains(start) => Err(Error::NotInterior { re: start.re, im: start.im }),
        StoppingRule::HitSegment | StoppingRule::HitDoubleRay => {
            if rule.exit_domain().is_some_and(|d| d.contains(start)) {
                Ok(())
            } else {
                Err(Error::StartOnBoundary)
            }
        }
        StoppingRule::WindingSym { .. } | StoppingRule::WindingAsym { .. } | StoppingRule::PrescribedArg { .. } => {
            let (lo, hi) = arg_window(rule);
            let phi = start.arg();
            if start.norm() == 0.0 {
                Err(Error::StartOnBoundary)
            } else if phi <= lo || phi >= hi {
                Err(Error::StartOnBoundary)
            } else {
                Ok(())
            }
        }
        StoppingRule::HomotopySegment if (start - 1.0).norm() == 0.0 || (start + 1.0).norm() == 0.0 => {
            Err(Error::StartOnBoundary)
        }
        _ => Ok(()),
    }
}

fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn run_path(start: Complex, rule: &StoppingRule, cfg: &PathConfig, index: u64) -> Option<StopSample> {
    let mut rng = path_rng(cfg.seed, index);
    match *rule {
        StoppingRule::WindingSym { .. } | StoppingRule::WindingAsym { .. } | StoppingRule::PrescribedArg { .. } => {
            walk_winding(start, arg_window(rule), cfg, &mut rng)
        }
        StoppingRule::HomotopySegment => walk_homotopy(start, cfg, &mut rng),
        _ => walk_exit(start, rule.exit_domain().expect("exit rule"), cfg, &mut rng),
    }
}

fn arg_window(rule: &StoppingRule) -> (f64, f64) {
    match *rule {
        StoppingRule::WindingSym { r } => (-r * PI, r * PI),
        StoppingRule::WindingAsym { r1, r2 } => (-r2 * PI, r1 * PI),
        StoppingRule::PrescribedArg { r } if r > 0.0 => (f64::NEG_INFINITY, r),
        StoppingRule::PrescribedArg { r } => (r, f64::INFINITY),
        _ => (f64::NEG_INFINITY, f64::INFINITY),
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> Complex {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn on_circle(rng: &mut ChaCha8Rng) -> Complex {
    Complex::from_polar(1.0, TAU * rng.gen::<f64>())
}

/// Principal argument of `a/b`.
fn arg_ratio(a: Complex, b: Complex) -> f64 {
    (a * b.conj()).arg()
}

fn sample(stop: Complex, arg: f64, tracked: bool, steps: u64) -> StopSample {
    let winding_index = if tracked { ((arg - stop.arg()) / TAU).round() as i64 } else { 0 };
    StopSample { stop_point: stop, log_modulus: stop.norm().ln(), arg, winding_index, steps_used: steps }
}

/// Hitting point of the circle `|w| = radius` for a path started at `z`
/// outside it: rejection sampling from the exterior Poisson kernel.
fn exterior_hit(z: Complex, radius: f64, rng: &mut ChaCha8Rng) -> Complex {
    let r = z.norm();
    // kernel ∝ 1/|z − w|², largest at the nearest point of the circle
    let floor = (r - radius) * (r - radius);
    loop {
        let w = on_circle(rng) * radius;
        if rng.gen::<f64>() * (z - w).norm_sqr() <= floor {
            return w;
        }
    }
}

/// Point of the stopping set closest to `z`.
fn project(target: &Domain, z: Complex) -> Complex {
    let (id, s, _) = target.nearest_boundary(z);
    target.curves()[id].point_at(s)
}

/// Crossing point of the step `z0 → z1` for the slit targets.
fn slit_crossing(target: &Domain, z0: Complex, z1: Complex) -> Option<Complex> {
    if z0.im * z1.im > 0.0 || (z0.im == 0.0 && z1.im == 0.0) {
        return None;
    }
    let t = z0.im / (z0.im - z1.im);
    let p = c(z0.re + t * (z1.re - z0.re), 0.0);
    (!target.contains(p)).then_some(p)
}

fn walk_exit(start: Complex, domain: Domain, cfg: &PathConfig, rng: &mut ChaCha8Rng) -> Option<StopSample> {
    let target = match domain {
        Domain::PuncturedDisk => Domain::disk(1.0),
        d => d,
    };
    let log_band = match domain {
        Domain::PuncturedDisk => Some((f64::NEG_INFINITY, 0.0)),
        Domain::Annulus { log_radius } => Some((-log_radius, log_radius)),
        _ => None,
    };
    let tracked = log_band.is_some();
    let slit = matches!(domain, Domain::Segment | Domain::DoubleRay);
    let sd = cfg.step.sqrt();
    let mut z = start;
    let mut phi = start.arg();
    let mut steps = 0u64;
    let stop = |p: Complex, z: Complex, phi: f64, steps: u64| {
        let phi = if tracked { phi + arg_ratio(p, z) } else { p.arg() };
        Some(sample(p, phi, tracked, steps))
    };
    loop {
        if steps >= cfg.max_steps {
            return None;
        }
        steps += 1;
        if domain == Domain::Segment && z.norm() > FAR_RADIUS {
            z = exterior_hit(z, REENTRY_RADIUS, rng);
            continue;
        }
        let dt = target.nearest_boundary(z).2;
        let ds = if tracked { z.norm() } else { f64::INFINITY };
        let sigma = sd.min(RELATIVE_STEP * ds);
        let jump = match cfg.scheme {
            Scheme::WalkOnSpheres => {
                if dt < cfg.boundary_tol {
                    return stop(project(&target, z), z, phi, steps);
                }
                true
            }
            Scheme::Euler => dt >= EULER_ZONE * sigma,
        };
        if jump {
            if let Some((lo, hi)) = log_band {
                // disk exits in (ln|z|, arg) coordinates, where the domain is a
                // band; |z| may underflow here, so z is rebuilt only near the boundary
                let mut l = z.norm().ln();
                loop {
                    let u = on_circle(rng) * (l - lo).min(hi - l);
                    phi += u.im;
                    l += u.re;
                    let r = l.exp();
                    let dt = (hi.exp() - r).min(r - lo.exp());
                    let near = match cfg.scheme {
                        Scheme::WalkOnSpheres => dt < cfg.boundary_tol,
                        Scheme::Euler => dt < EULER_ZONE * sd.min(RELATIVE_STEP * r),
                    };
                    if near || steps >= cfg.max_steps {
                        break;
                    }
                    steps += 1;
                }
                z = Complex::from_polar(l.exp(), phi);
                continue;
            }
            let z1 = z + on_circle(rng) * dt.min(SINGULAR_FRACTION * ds);
            if !slit && !target.contains(z1) {
                return stop(project(&target, z1), z, phi, steps);
            }
            if tracked {
                phi += arg_ratio(z1, z);
            }
            z = z1;
            continue;
        }
        let z1 = z + gaussian(rng) * sigma;
        if slit {
            if let Some(p) = slit_crossing(&target, z, z1) {
                return stop(p, z, phi, steps);
            }
        } else if !target.contains(z1) {
            let out = target.nearest_boundary(z1).2;
            let t = dt / (dt + out);
            return stop(project(&target, z + (z1 - z) * t), z, phi, steps);
        }
        // excursion to the boundary and back within the step
        let d1 = target.nearest_boundary(z1).2;
        if rng.gen::<f64>() < (-2.0 * dt * d1 / (sigma * sigma)).exp() {
            let w = (z * d1 + z1 * dt) / (dt + d1);
            return stop(project(&target, w), z, phi, steps);
        }
        if tracked {
            phi += arg_ratio(z1, z);
        }
        z = z1;
    }
}

/// Winding rules in log-polar form: the state is `(ln|z|, continuous arg)`,
/// and each move multiplies `z` by `w`, so the walk never overflows.
fn walk_winding(start: Complex, (lo, hi): (f64, f64), cfg: &PathConfig, rng: &mut ChaCha8Rng) -> Option<StopSample> {
    let ln_sd = 0.5 * cfg.step.ln();
    let mut l = start.norm().ln();
    let mut phi = start.arg();
    let mut steps = 0u64;
    let finish = |l: f64, phi: f64, steps: u64| {
        let stop = Complex::from_polar(l.exp(), phi);
        // sheet whose principal branch is (−π, π]
        let winding_index = ((phi - PI) / TAU).ceil() as i64;
        Some(StopSample { stop_point: stop, log_modulus: l, arg: phi, winding_index, steps_used: steps })
    };
    loop {
        if steps >= cfg.max_steps {
            return None;
        }
        steps += 1;
        let (delta, psi) = if phi - lo < hi - phi { (phi - lo, lo) } else { (hi - phi, hi) };
        let sigma = (ln_sd - l).exp().clamp(MIN_RELATIVE_STEP, RELATIVE_STEP);
        if delta >= EULER_ZONE * sigma {
            // exit law of a disk in (ln|z|, arg) coordinates, where the path is
            // a time-changed Brownian motion
            let u = on_circle(rng) * delta;
            l += u.re;
            phi += u.im;
            continue;
        }
        // distances below are relative to |z|
        let dt = delta.min(PI / 2.0).sin();
        let w = 1.0 + gaussian(rng) * sigma;
        let phi1 = phi + w.arg();
        if phi1 <= lo || phi1 >= hi {
            let target = if phi1 <= lo { lo } else { hi };
            let u = Complex::from_polar(1.0, target - phi);
            let cross = |a: Complex| (u.conj() * a).im;
            let t = cross(c(1.0, 0.0)) / (cross(c(1.0, 0.0)) - cross(w));
            let p = 1.0 + (w - 1.0) * t;
            return finish(l + p.norm().ln(), target, steps);
        }
        let delta1 = (psi - phi1).abs();
        let d1 = w.norm() * delta1.min(PI / 2.0).sin();
        if rng.gen::<f64>() < (-2.0 * dt * d1 / (sigma * sigma)).exp() {
            let q = (d1 + w * dt) / (dt + d1);
            let along = (q * Complex::from_polar(1.0, phi - psi)).re;
            if along > 0.0 {
                return finish(l + along.ln(), psi, steps);
            }
        }
        l += w.norm().ln();
        phi = phi1;
    }
}

/// A point stored as `anchor + w` with `anchor ∈ {−1, 0, 1}`, so that its
/// offset from a nearby endpoint keeps full relative precision.
#[derive(Debug, Clone, Copy)]
struct Anchored {
    anchor: f64,
    w: Complex,
}

impl Anchored {
    /// `z − e` for `e ∈ {−1, 0, 1}`.
    fn from(&self, e: f64) -> Complex {
        if self.anchor == e {
            self.w
        } else {
            self.w + (self.anchor - e)
        }
    }

    fn plane(&self) -> Complex {
        self.from(0.0)
    }

    fn rebase(self) -> Self {
        for e in [-1.0, 1.0] {
            if self.anchor == 0.0 && self.from(e).norm() < 0.25 {
                return Anchored { anchor: e, w: self.from(e) };
            }
        }
        if self.anchor != 0.0 && self.w.norm() > 0.5 {
            return Anchored { anchor: 0.0, w: self.plane() };
        }
        self
    }

    fn endpoint_distance(&self) -> f64 {
        self.from(-1.0).norm().min(self.from(1.0).norm())
    }

    fn segment_distance(&self) -> f64 {
        let (m, p) = (self.from(-1.0), self.from(1.0));
        if m.re < 0.0 {
            m.norm()
        } else if p.re > 0.0 {
            p.norm()
        } else {
            m.im.abs()
        }
    }

    /// Point of `(−1, 1)` nearest to `self`, kept off the endpoints.
    fn nearest_on_segment(&self) -> Anchored {
        let margin = 1e-6 * self.endpoint_distance().min(1.0);
        let (lo, hi) = (-1.0 - self.anchor, 1.0 - self.anchor);
        Anchored { anchor: self.anchor, w: c(self.w.re.clamp(lo + margin, hi - margin), 0.0) }
    }
}

/// Continuous arguments around `−1` (`pm`) and `1` (`pp`).
#[derive(Debug, Clone, Copy)]
struct Sheets {
    pm: f64,
    pp: f64,
}

impl Sheets {
    fn advance(&mut self, z: &Anchored, z1: &Anchored) {
        self.pm += arg_ratio(z1.from(-1.0), z.from(-1.0));
        self.pp += arg_ratio(z1.from(1.0), z.from(1.0));
    }

    /// Sheet indices `(n₋, n₊)` of a point `x` of the segment reached from `z`
    /// by a short move.
    fn at(&self, z: &Anchored, x: &Anchored) -> (i64, i64) {
        let m = self.pm + arg_ratio(x.from(-1.0), z.from(-1.0));
        let p = self.pp + arg_ratio(x.from(1.0), z.from(1.0));
        ((m / TAU).round() as i64, ((p - PI) / TAU).round() as i64)
    }

    fn armed(&self, z: &Anchored, x: &Anchored) -> bool {
        self.at(z, x) != (0, 0)
    }
}

/// Homotopy rule: stop at the first crossing of `(−1, 1)` on a sheet other
/// than the starting one.
fn walk_homotopy(start: Complex, cfg: &PathConfig, rng: &mut ChaCha8Rng) -> Option<StopSample> {
    let sd = cfg.step.sqrt();
    let mut z = Anchored { anchor: 0.0, w: start }.rebase();
    let mut sh = Sheets { pm: (start + 1.0).arg(), pp: (start - 1.0).arg() };
    let mut steps = 0u64;
    let far = LOG_POLAR_RADIUS.ln();
    let finish = |x: Anchored, z: &Anchored, sh: &Sheets, steps: u64| {
        let arg = sh.pm + arg_ratio(x.from(-1.0), z.from(-1.0));
        let p = x.plane();
        Some(StopSample {
            stop_point: p,
            log_modulus: p.re.abs().ln(),
            arg,
            winding_index: (arg / TAU).round() as i64,
            steps_used: steps,
        })
    };
    loop {
        if steps >= cfg.max_steps {
            return None;
        }
        steps += 1;
        if z.plane().norm() > LOG_POLAR_RADIUS * E {
            // ±1 look like one point from here; track the argument around 0
            // and jump by disk exits in (ln|z|, arg) coordinates
            let zp = z.plane();
            let mut l = zp.norm().ln();
            let mut phi = sh.pm - arg_ratio(zp + 1.0, zp);
            while l > far + 0.5 {
                if steps >= cfg.max_steps {
                    return None;
                }
                steps += 1;
                let u = on_circle(rng) * (l - far);
                l += u.re;
                phi += u.im;
            }
            let zp = Complex::from_polar(l.exp(), phi);
            z = Anchored { anchor: 0.0, w: zp };
            sh = Sheets { pm: phi + arg_ratio(zp + 1.0, zp), pp: phi + arg_ratio(zp - 1.0, zp) };
            continue;
        }
        let ds = z.endpoint_distance();
        let armed = sh.armed(&z, &z.nearest_on_segment());
        let dt = if armed { z.segment_distance() } else { f64::INFINITY };
        let sigma = sd.min(RELATIVE_STEP * ds);
        if dt >= EULER_ZONE * sigma {
            let z1 = Anchored { w: z.w + on_circle(rng) * dt.min(SINGULAR_FRACTION * ds), ..z };
            sh.advance(&z, &z1);
            z = z1.rebase();
            continue;
        }
        let z1 = Anchored { w: z.w + gaussian(rng) * sigma, ..z };
        let (y0, y1) = (z.w.im, z1.w.im);
        if y0 * y1 <= 0.0 && !(y0 == 0.0 && y1 == 0.0) {
            let t = y0 / (y0 - y1);
            let x = Anchored { w: c(z.w.re + t * (z1.w.re - z.w.re), 0.0), ..z };
            let inside = x.from(-1.0).re > 0.0 && x.from(1.0).re < 0.0;
            if inside && sh.armed(&z, &x) {
                return finish(x, &z, &sh, steps);
            }
        }
        if armed {
            let d1 = z1.segment_distance();
            if rng.gen::<f64>() < (-2.0 * dt * d1 / (sigma * sigma)).exp() {
                let mid = Anchored { w: (z.w * d1 + z1.w * dt) / (dt + d1), ..z };
                let x = mid.nearest_on_segment();
                if sh.armed(&z, &x) {
                    return finish(x, &z, &sh, steps);
                }
            }
        }
        sh.advance(&z, &z1);
        z = z1.rebase();
    }
}

// ------------------------------------------------------------------ statistics

/// Kolmogorov–Smirnov distance `sup |F_N − F|` between the empirical CDF of
/// `values` and `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(values: &[f64], cdf: F) -> Result<f64> {
    if values.len() < 100 {
        return Err(Error::OutOfRange(format!("need at least 100 samples, got {}", values.len())));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::OutOfRange("samples contain NaN".into()));
    }
    let mut xs = values.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    Ok(xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max))
}

/// Asymptotic 1% critical value of the KS statistic, `1.628/√N`.
pub fn ks_critical(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

/// Which part of the boundary a KS comparison uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "on", content = "curve", rename_all = "snake_case")]
pub enum Conditioning {
    /// All curves, ordered by curve id and then by arclength.
    Whole,
    /// One curve, with its mass normalized to 1.
    Curve(usize),
}

/// Probability integral transform of the samples under `density`: values
/// that are uniform on `[0, 1]` when the samples follow the density.
pub fn pit_values(samples: &[StopSample], density: &Density, cond: Conditioning) -> Result<Vec<f64>> {
    if let DensityKind::Winding { .. } = density.kind() {
        return winding_pit(samples, density, cond);
    }
    let curves = density.curves();
    let masses: Vec<f64> = (0..curves.len()).map(|id| density.mass(id)).collect::<Result<_>>()?;
    let mut by_curve: Vec<Vec<(f64, usize)>> = vec![Vec::new(); curves.len()];
    for (i, smp) in samples.iter().enumerate() {
        let (id, s, _) = curves
            .iter()
            .map(|cv| {
                let (s, d) = cv.nearest(smp.stop_point);
                (cv.id, s, d)
            })
            .fold((0, 0.0, f64::INFINITY), |best, x| if x.2 < best.2 { x } else { best });
        by_curve[id].push((s, i));
    }
    let mut out = vec![f64::NAN; samples.len()];
    let mut offset = 0.0;
    for (id, list) in by_curve.iter_mut().enumerate() {
        list.sort_by(|a, b| a.0.total_cmp(&b.0));
        let closed = density.has_closed_cdf(id)?;
        let mut prev: Option<(f64, f64)> = None;
        for &(s, i) in list.iter() {
            let f = match (closed, prev) {
                (false, Some((s0, f0))) if s > s0 => {
                    let curve = *density.curve(id)?;
                    let g = |t: f64| density.value(curve.id, t).unwrap_or(0.0);
                    f0 + crate::quadrature::integrate(g, s0, s, 1e-13, 1e-10)?.value
                }
                (false, Some((_, f0))) => f0,
                _ => density.cdf(id, s)?,
            };
            prev = Some((s, f));
            out[i] = match cond {
                Conditioning::Whole => offset + f,
                Conditioning::Curve(j) if j == id => f / masses[id],
                Conditioning::Curve(_) => f64::NAN,
            };
        }
        offset += masses[id];
    }
    if let Conditioning::Curve(j) = cond {
        if j >= curves.len() {
            return Err(Error::OutOfRange(format!("curve id {j} not present")));
        }
    }
    Ok(out.into_iter().filter(|v| !v.is_nan()).collect())
}

/// Winding densities live on rays that may coincide in the plane; the ray is
/// read from the continuous argument instead of the position.
fn winding_pit(samples: &[StopSample], density: &Density, cond: Conditioning) -> Result<Vec<f64>> {
    let merged = density.curves().len() == 1;
    let ray_of = |s: &StopSample| if merged || s.arg >= 0.0 { 0 } else { 1 };
    let y = |s: &StopSample| s.log_modulus.exp();
    match cond {
        Conditioning::Whole if merged => samples.iter().map(|s| density.cdf(0, y(s))).collect(),
        Conditioning::Whole => {
            // lower ray first, matching `arg` order
            let lower = density.mass(1)?;
            samples
                .iter()
                .map(|s| match ray_of(s) {
                    0 => Ok(lower + density.cdf(0, y(s))?),
                    _ => density.cdf(1, y(s)),
                })
                .collect()
        }
        Conditioning::Curve(j) => {
            let m = density.mass(j)?;
            samples.iter().filter(|s| ray_of(s) == j).map(|s| Ok(density.cdf(j, y(s))? / m)).collect()
        }
    }
}

/// Per-class frequencies of `winding_index`, `|k| ≤ kmax`, with the rest
/// lumped into `beyond`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassFrequencies {
    pub classes: BTreeMap<i64, f64>,
    pub beyond: f64,
    pub n: usize,
}

pub fn winding_class_frequencies(samples: &[StopSample], kmax: i64) -> ClassFrequencies {
    let n = samples.len();
    let mut classes: BTreeMap<i64, f64> = (-kmax..=kmax).map(|k| (k, 0.0)).collect();
    let mut beyond = 0.0;
    let w = 1.0 / n.max(1) as f64;
    for s in samples {
        match classes.get_mut(&s.winding_index) {
            Some(f) => *f += w,
            None => beyond += w,
        }
    }
    ClassFrequencies { classes, beyond, n }
}

// ------------------------------------------------------------------ gates

/// KS inflation for discretization bias.
pub const KS_INFLATION: f64 = 1.2;
/// Largest tolerated abandonment rate.
pub const MAX_ABANDONMENT: f64 = 1e-3;
/// Paths per gate in the full run.
pub const GATE_PATHS: usize = 100_000;

/// A density together with the simulation that should reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub id: &'static str,
    pub density: Density,
    pub rule: StoppingRule,
    pub scheme: Scheme,
    pub conditioning: Conditioning,
}

pub const GATE_IDS: [&str; 15] = [
    "annulus_outer",
    "disk",
    "double_ray",
    "halfplane",
    "halfstrip",
    "hit_segment",
    "homotopy_segment",
    "prescribed_arg_1",
    "punctured_disk",
    "rectangle",
    "strip_right",
    "winding_asym_1_2",
    "winding_sym_0.5",
    "winding_sym_1",
    "winding_sym_2",
];

pub fn gate(id: &str) -> Result<Gate> {
    let exit = |d: &Density| StoppingRule::Exit { domain: d.domain().expect("exit densities carry a domain") };
    let winding = |kind: WindingKind| -> Result<(Density, StoppingRule)> {
        let rule = match kind {
            WindingKind::Symmetric { r } => StoppingRule::WindingSym { r },
            WindingKind::Asymmetric { r1, r2 } => StoppingRule::WindingAsym { r1, r2 },
            WindingKind::Prescribed { r } => StoppingRule::PrescribedArg { r },
        };
        Ok((winding_density(kind)?, rule))
    };
    let wos = Scheme::WalkOnSpheres;
    let (density, rule, scheme, conditioning) = match id {
        "disk" => {
            let d = disk_density(c(0.5, 0.0), 1.0)?;
            (d.clone(), exit(&d), wos, Conditioning::Whole)
        }
        "halfplane" => {
            let d = halfplane_density(Complex::i())?;
            (d.clone(), exit(&d), wos, Conditioning::Whole)
        }
        "strip_right" => {
            let d = strip_density(0.3, StripForm::Conformal)?;
            (d.clone(), exit(&d), wos, Conditioning::Curve(1))
        }
        "halfstrip" => {
            let d = halfstrip_density(0.3, 0.5, HalfStripForm::Conformal)?;
            (d.clone(), exit(&d), wos, Conditioning::Whole)
        }
        "rectangle" => {
            let d = rectangle_density(0.0, 0.0, 1.0, RectangleForm::Vertical { terms: None })?;
            (d.clone(), exit(&d), wos, Conditioning::Whole)
        }
        "annulus_outer" => {
            let d = annulus_density(1.0, 1.0, None)?;
            (d.clone(), exit(&d), wos, Conditioning::Curve(1))
        }
        "punctured_disk" => {
            let d = punctured_disk_density(c((-1.0f64).exp(), 0.0), DEFAULT_LATTICE_K)?;
            (d.clone(), exit(&d), Scheme::Euler, Conditioning::Whole)
        }
        "hit_segment" => {
            let d = segment_density(c(0.0, 2.0), SegmentForm::Covering, DEFAULT_LATTICE_K)?;
            (d, StoppingRule::HitSegment, wos, Conditioning::Whole)
        }
        "double_ray" => (double_ray_density(), StoppingRule::HitDoubleRay, wos, Conditioning::Whole),
        "homotopy_segment" => {
            let d = homotopy_segment_density(DEFAULT_LATTICE_K)?;
            (d, StoppingRule::HomotopySegment, Scheme::Euler, Conditioning::Whole)
        }
        "winding_sym_0.5" | "winding_sym_1" | "winding_sym_2" => {
            let r = id["winding_sym_".len()..].parse().expect("numeric suffix");
            let (d, rule) = winding(WindingKind::Symmetric { r })?;
            (d, rule, Scheme::Euler, Conditioning::Whole)
        }
        "winding_asym_1_2" => {
            let (d, rule) = winding(WindingKind::Asymmetric { r1: 1.0, r2: 2.0 })?;
            (d, rule, Scheme::Euler, Conditioning::Whole)
        }
        "prescribed_arg_1" => {
            let (d, rule) = winding(WindingKind::Prescribed { r: 1.0 })?;
            (d, rule, Scheme::Euler, Conditioning::Whole)
        }
        _ => return Err(Error::Unknown(id.to_string())),
    };
    let id = GATE_IDS.iter().find(|g| **g == id).expect("listed gate");
    Ok(Gate { id, density, rule, scheme, conditioning })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateReport {
    pub id: String,
    pub scheme: Scheme,
    pub n_paths: usize,
    pub n_used: usize,
    pub ks: f64,
    pub threshold: f64,
    pub abandoned: usize,
    pub abandonment_rate: f64,
    pub mean_steps: f64,
    pub pass: bool,
}

/// Simulate the gate and compare with its density. `cfg.scheme` is ignored in
/// favour of the gate's scheme.
pub fn run_gate(gate: &Gate, cfg: &PathConfig, n_paths: usize) -> Result<GateReport> {
    let cfg = cfg.with_scheme(gate.scheme);
    let start = gate.density.start();
    let sim = simulate(start, gate.rule, &cfg, n_paths)?;
    let pit = pit_values(&sim.samples, &gate.density, gate.conditioning)?;
    let ks = ks_statistic(&pit, |u| u.clamp(0.0, 1.0))?;
    let threshold = KS_INFLATION * ks_critical(pit.len());
    let summary = summarize(&sim, start, gate.rule, &cfg);
    Ok(GateReport {
        id: gate.id.to_string(),
        scheme: gate.scheme,
        n_paths,
        n_used: pit.len(),
        ks,
        threshold,
        abandoned: sim.abandoned,
        abandonment_rate: summary.abandonment_rate,
        mean_steps: summary.mean_steps,
        pass: ks <= threshold && summary.abandonment_rate < MAX_ABANDONMENT,
    })
}

// ------------------------------------------------------------------ export

/// `re,im,winding_index,steps` rows with a header line.
pub fn samples_csv(samples: &[StopSample]) -> String {
    let mut out = String::from("re,im,winding_index,steps\n");
    for s in samples {
        out.push_str(&format!("{},{},{},{}\n", s.stop_point.re, s.stop_point.im, s.winding_index, s.steps_used));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub rule: StoppingRule,
    pub start: Complex,
    pub config: PathConfig,
    pub n_paths: usize,
    pub stopped: usize,
    pub abandoned: usize,
    pub abandonment_rate: f64,
    pub mean_steps: f64,
}

pub fn summarize(sim: &Simulation, start: Complex, rule: StoppingRule, cfg: &PathConfig) -> Summary {
    let stopped = sim.samples.len();
    let mean_steps = sim.samples.iter().map(|s| s.steps_used as f64).sum::<f64>() / stopped.max(1) as f64;
    Summary {
        rule,
        start,
        config: *cfg,
        n_paths: sim.n_paths,
        stopped,
        abandoned: sim.abandoned,
        abandonment_rate: sim.abandonment_rate(),
        mean_steps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::cauchy_cdf;

    const N: usize = 4000;

    fn cfg(scheme: Scheme) -> PathConfig {
        PathConfig::default().with_scheme(scheme).with_seed(7)
    }

    #[test]
    fn same_seed_same_samples() {
        let rule = StoppingRule::WindingSym { r: 1.0 };
        let a = simulate(c(1.0, 0.0), rule, &cfg(Scheme::Euler), 200).unwrap();
        let b = simulate(c(1.0, 0.0), rule, &cfg(Scheme::Euler), 200).unwrap();
        assert_eq!(a, b);
        let other = simulate(c(1.0, 0.0), rule, &cfg(Scheme::Euler).with_seed(8), 200).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn paths_do_not_depend_on_batch() {
        let rule = StoppingRule::Exit { domain: Domain::upper_half_plane() };
        let sim = simulate(Complex::i(), rule, &cfg(Scheme::Euler), 50).unwrap();
        let one = simulate_path(Complex::i(), rule, &cfg(Scheme::Euler), 37).unwrap().unwrap();
        assert_eq!(sim.samples[37], one);
    }

    #[test]
    fn disk_exit_is_uniform_under_both_schemes() {
        let rule = StoppingRule::Exit { domain: Domain::disk(1.0) };
        let mut angles = Vec::new();
        for scheme in [Scheme::Euler, Scheme::WalkOnSpheres] {
            let sim = simulate(c(0.0, 0.0), rule, &cfg(scheme), N).unwrap();
            assert_eq!(sim.abandoned, 0);
            for s in &sim.samples {
                assert!((s.stop_point.norm() - 1.0).abs() < 1e-9);
            }
            let th: Vec<f64> = sim.samples.iter().map(|s| s.stop_point.arg()).collect();
            let d = ks_statistic(&th, |t| (t + PI) / TAU).unwrap();
            assert!(d <= KS_INFLATION * ks_critical(N), "{scheme:?}: {d}");
            angles.push(th);
        }
        // two-sample distance within the combined tolerance
        let (mut a, b) = (angles[0].clone(), &angles[1]);
        a.sort_by(f64::total_cmp);
        let ecdf = |t: f64| a.partition_point(|&x| x <= t) as f64 / a.len() as f64;
        let d = ks_statistic(b, ecdf).unwrap();
        assert!(d <= KS_INFLATION * ks_critical(N) * 2f64.sqrt(), "{d}");
    }

    #[test]
    fn halfplane_exit_is_cauchy() {
        let rule = StoppingRule::Exit { domain: Domain::upper_half_plane() };
        let sim = simulate(Complex::i(), rule, &cfg(Scheme::Euler), N).unwrap();
        let xs: Vec<f64> = sim.samples.iter().map(|s| s.stop_point.re).collect();
        let d = ks_statistic(&xs, |x| cauchy_cdf(0.0, 1.0, x)).unwrap();
        assert!(d <= KS_INFLATION * ks_critical(N), "{d}");
        let shifted = ks_statistic(&xs, |x| cauchy_cdf(2.0, 1.0, x)).unwrap();
        assert!(shifted > 0.2, "{shifted}");
    }

    #[test]
    fn ks_at_the_median_is_one_half() {
        let xs = vec![0.0; 100];
        let d = ks_statistic(&xs, |x| cauchy_cdf(0.0, 1.0, x)).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
        assert!(ks_statistic(&xs[..99], |x| x).is_err());
    }

    #[test]
    fn unit_modulus_is_median_of_symmetric_winding() {
        let sim = simulate(c(1.0, 0.0), StoppingRule::WindingSym { r: 1.0 }, &cfg(Scheme::Euler), N).unwrap();
        assert_eq!(sim.abandoned, 0);
        let p = sim.samples.iter().filter(|s| s.log_modulus <= 0.0).count() as f64 / N as f64;
        assert!((p - 0.5).abs() <= 3.0 * (0.25 / N as f64).sqrt(), "{p}");
        for s in &sim.samples {
            assert!((s.arg.abs() - PI).abs() < 1e-12);
        }
    }

    #[test]
    fn punctured_classes_are_symmetric_and_sum_to_one() {
        let rule = StoppingRule::Exit { domain: Domain::PuncturedDisk };
        let sim = simulate(c(0.3, 0.0), rule, &cfg(Scheme::Euler), N).unwrap();
        let f = winding_class_frequencies(&sim.samples, 3);
        let total: f64 = f.classes.values().sum::<f64>() + f.beyond;
        assert!((total - 1.0).abs() < 1e-12);
        for k in 1..=3 {
            let (a, b) = (f.classes[&k], f.classes[&-k]);
            let sd = ((a + b) / N as f64).sqrt();
            assert!((a - b).abs() <= 3.0 * sd + 1.0 / N as f64, "k={k}: {a} vs {b}");
        }
    }

    #[test]
    fn walk_on_spheres_stops_near_the_boundary() {
        let d = Domain::rectangle(0.5);
        let sim = simulate(c(0.2, 0.1), StoppingRule::Exit { domain: d }, &cfg(Scheme::WalkOnSpheres), 500).unwrap();
        for s in &sim.samples {
            assert!(d.nearest_boundary(s.stop_point).2 < 1e-12);
        }
        assert!(sim.samples.iter().all(|s| s.steps_used < 10_000));
    }

    #[test]
    fn homotopy_stops_lie_on_the_segment() {
        let sim = simulate(c(0.0, 0.0), StoppingRule::HomotopySegment, &cfg(Scheme::Euler), 300).unwrap();
        assert_eq!(sim.abandoned, 0);
        assert!(sim.samples.iter().all(|s| s.stop_point.im == 0.0 && s.stop_point.re.abs() < 1.0));
    }

    #[test]
    fn exterior_hits_follow_the_poisson_kernel() {
        // mean of the hitting point from z outside |w| = R is R²/conj(z)
        let mut rng = path_rng(3, 0);
        let z = c(8.0, 5.0);
        let n = 20_000;
        let mean = (0..n).map(|_| exterior_hit(z, REENTRY_RADIUS, &mut rng)).sum::<Complex>() / n as f64;
        let expect = REENTRY_RADIUS * REENTRY_RADIUS / z.conj();
        assert!((mean - expect).norm() < 0.05, "{mean} vs {expect}");
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let c0 = PathConfig::default();
        assert!(simulate(c(2.0, 0.0), StoppingRule::Exit { domain: Domain::disk(1.0) }, &c0, 1).is_err());
        assert!(simulate(c(0.5, 0.0), StoppingRule::HitSegment, &c0, 1).is_err());
        assert!(simulate(c(-1.0, 0.0), StoppingRule::WindingSym { r: 1.0 }, &c0, 1).is_err());
        let wos = c0.with_scheme(Scheme::WalkOnSpheres);
        assert!(simulate(c(1.0, 0.0), StoppingRule::WindingSym { r: 1.0 }, &wos, 1).is_err());
        assert!(simulate(c(0.0, 0.0), StoppingRule::Exit { domain: Domain::disk(1.0) }, &PathConfig { step: 0.0, ..c0 }, 1)
            .is_err());
        assert!(gate("nope").is_err());
    }

    #[test]
    fn small_gates_pass() {
        for id in ["disk", "strip_right", "winding_sym_0.5", "prescribed_arg_1"] {
            let g = gate(id).unwrap();
            let r = run_gate(&g, &PathConfig::default(), N).unwrap();
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn csv_has_header_and_rows() {
        let sim = simulate(c(0.0, 0.0), StoppingRule::Exit { domain: Domain::disk(1.0) }, &PathConfig::default(), 3).unwrap();
        let csv = samples_csv(&sim.samples);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("re,im,winding_index,steps\n"));
    }
}
