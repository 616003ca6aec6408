//! Density ids accepted on the command line, with their parameters.

use std::collections::BTreeMap;

use planar_stopping::densities::{
    annulus_density, disk_density, double_ray_density, halfplane_density, halfstrip_density, homotopy_segment_density,
    punctured_disk_density, rectangle_density, segment_density, strip_density, winding_density, Density,
    HalfStripForm, HarmonicTestFn, RectangleForm, SegmentForm, StripForm, WindingKind, DEFAULT_LATTICE_K,
};
use planar_stopping::error::{Error, Result};
use planar_stopping::geometry::c;

pub struct Entry {
    pub id: &'static str,
    /// Parameter names with defaults.
    pub params: &'static [(&'static str, f64)],
    pub truncated: bool,
}

const E_INV: f64 = 0.367_879_441_171_442_33;

/// Sorted by id.
pub const DENSITIES: &[Entry] = &[
    Entry { id: "annulus", params: &[("a", 1.0), ("r", 1.0)], truncated: true },
    Entry { id: "disk", params: &[("a", 0.5), ("a_im", 0.0), ("m", 1.0)], truncated: false },
    Entry { id: "double_ray", params: &[], truncated: false },
    Entry { id: "halfplane", params: &[("a", 0.0), ("a_im", 1.0)], truncated: false },
    Entry { id: "halfstrip", params: &[("alpha", 0.3), ("beta", 0.5)], truncated: false },
    Entry { id: "halfstrip_reflection", params: &[("alpha", 0.3), ("beta", 0.5)], truncated: false },
    Entry { id: "homotopy_segment", params: &[], truncated: true },
    Entry { id: "prescribed_arg", params: &[("r", 1.0)], truncated: false },
    Entry { id: "punctured_disk", params: &[("a", E_INV), ("a_im", 0.0)], truncated: true },
    Entry { id: "rectangle", params: &[("alpha", 0.0), ("beta", 0.0), ("k", 1.0)], truncated: true },
    Entry { id: "rectangle_horizontal", params: &[("alpha", 0.0), ("beta", 0.0), ("k", 1.0)], truncated: true },
    Entry { id: "segment", params: &[("a", 0.0), ("a_im", 2.0)], truncated: false },
    Entry { id: "segment_covering", params: &[("a", 0.0), ("a_im", 2.0)], truncated: true },
    Entry { id: "strip", params: &[("a", 0.3)], truncated: false },
    Entry { id: "strip_reflection", params: &[("a", 0.3)], truncated: true },
    Entry { id: "winding_asym", params: &[("r1", 1.0), ("r2", 2.0)], truncated: false },
    Entry { id: "winding_sym", params: &[("r", 1.0)], truncated: false },
];

pub fn entry(id: &str) -> Result<&'static Entry> {
    DENSITIES.iter().find(|e| e.id == id).ok_or_else(|| Error::Unknown(id.to_string()))
}

/// Merge `given` over the defaults of `entry`, rejecting unknown names.
pub fn resolve(entry: &Entry, given: &BTreeMap<String, f64>) -> Result<BTreeMap<&'static str, f64>> {
    if let Some(bad) = given.keys().find(|k| !entry.params.iter().any(|(n, _)| n == k)) {
        return Err(Error::Unsupported(format!("unknown parameter `{bad}` for `{}`", entry.id)));
    }
    Ok(entry.params.iter().map(|&(n, d)| (n, given.get(n).copied().unwrap_or(d))).collect())
}

pub fn build(id: &str, given: &BTreeMap<String, f64>, trunc: Option<usize>) -> Result<Density> {
    let entry = entry(id)?;
    if trunc.is_some() && !entry.truncated {
        return Err(Error::Unsupported(format!("`{id}` takes no truncation")));
    }
    let p = resolve(entry, given)?;
    let k = trunc.unwrap_or(DEFAULT_LATTICE_K);
    let start = || c(p["a"], p["a_im"]);
    match id {
        "annulus" => annulus_density(p["a"], p["r"], trunc),
        "disk" => disk_density(start(), p["m"]),
        "double_ray" => Ok(double_ray_density()),
        "halfplane" => halfplane_density(start()),
        "halfstrip" => halfstrip_density(p["alpha"], p["beta"], HalfStripForm::Conformal),
        "halfstrip_reflection" => halfstrip_density(p["alpha"], p["beta"], HalfStripForm::Reflection),
        "homotopy_segment" => homotopy_segment_density(k),
        "prescribed_arg" => winding_density(WindingKind::Prescribed { r: p["r"] }),
        "punctured_disk" => punctured_disk_density(start(), k),
        "rectangle" => rectangle_density(p["alpha"], p["beta"], p["k"], RectangleForm::Vertical { terms: trunc }),
        "rectangle_horizontal" => {
            rectangle_density(p["alpha"], p["beta"], p["k"], RectangleForm::Horizontal { terms: trunc })
        }
        "segment" => segment_density(start(), SegmentForm::Closed, k),
        "segment_covering" => segment_density(start(), SegmentForm::Covering, k),
        "strip" => strip_density(p["a"], StripForm::Conformal),
        "strip_reflection" => strip_density(p["a"], StripForm::Reflection { terms: trunc }),
        "winding_asym" => winding_density(WindingKind::Asymmetric { r1: p["r1"], r2: p["r2"] }),
        "winding_sym" => winding_density(WindingKind::Symmetric { r: p["r"] }),
        _ => unreachable!("every registry entry is handled"),
    }
}

/// Test functions checked by default: `Re z`, `Im z`, `Re z²`, and `log|z|`
/// where it is harmonic on the closure of the domain.
pub fn default_harmonics(id: &str) -> Vec<HarmonicTestFn> {
    let mut hs = vec![HarmonicTestFn::RePow(1), HarmonicTestFn::ImPow(1), HarmonicTestFn::RePow(2)];
    if id == "annulus" {
        hs.push(HarmonicTestFn::LogAbs);
    }
    hs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_and_buildable() {
        assert!(DENSITIES.windows(2).all(|w| w[0].id < w[1].id));
        for e in DENSITIES {
            build(e.id, &BTreeMap::new(), None).unwrap();
        }
    }

    #[test]
    fn unknown_parameter_is_rejected() {
        let given = BTreeMap::from([("zz".to_string(), 1.0)]);
        assert!(build("disk", &given, None).is_err());
        assert!(build("disk", &BTreeMap::new(), Some(3)).is_err());
    }
}
