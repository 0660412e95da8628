//! Planes, ellipses, strut/plane sections and their angular trimming.
//!
//! An ellipse is parametrized as `o + a·sin t + b·cos t`. Sections produced
//! here orient `b` along `d × a` (with `d` the outward strut axis), which makes
//! `t` grow with the right-handed angle about the inward axis.

pub mod interval;

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::Matrix3;

use crate::lattice::StrutEnd;
use crate::{Error, Result, Vec3};

/// Oriented plane, `normal` of unit length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Plane {
    pub point: Vec3,
    pub normal: Vec3,
}

impl Plane {
    pub fn new(point: Vec3, normal: Vec3) -> Self {
        Self { point, normal: normal.normalize() }
    }

    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(&(p - self.point))
    }

    /// Same plane with the same orientation, up to `tol` in offset.
    pub fn coincides(&self, other: &Plane, tol: f64) -> bool {
        other.normal.dot(&self.normal) > 1.0 - 1e-12 && self.signed_distance(&other.point).abs() <= tol
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ellipse {
    pub center: Vec3,
    pub a: Vec3,
    pub b: Vec3,
}

impl Ellipse {
    pub fn point(&self, t: f64) -> Vec3 {
        self.center + self.a * t.sin() + self.b * t.cos()
    }

    pub fn tangent(&self, t: f64) -> Vec3 {
        self.a * t.cos() - self.b * t.sin()
    }

    /// Unit normal of the supporting plane, `a × b` normalized.
    pub fn normal(&self) -> Vec3 {
        self.a.cross(&self.b).normalize()
    }
}

/// A strut/plane section; `near_tangent` warns that the plane is within
/// 1e-4 rad of becoming parallel to a ruling, where the ellipse blows up.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Section {
    pub ellipse: Ellipse,
    pub near_tangent: bool,
}

/// Portion of an ellipse kept on the negative side of a plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ArcRange {
    Empty,
    Full,
    /// `t1` in `[0, 2π)`, `t1 < t2 < t1 + 2π`.
    Span { t1: f64, t2: f64 },
}

/// Rodrigues rotation matrix for `angle` about the unit `axis`.
pub fn rot_about(axis: &Vec3, angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    let k = axis.cross_matrix();
    Matrix3::identity() + k * s + k * k * (1.0 - c)
}

/// Plane containing the intersection of two strut surfaces that share a node.
///
/// Along the axis of strut `i`, the surface satisfies
/// `(x_i + r·sin α_i) / cos α_i = dist`, so where both surfaces meet the
/// linear relation `q·(u_i/c_i - u_j/c_j) + r(tan α_i - tan α_j) = 0` holds.
/// The returned normal points away from strut `i`, so its interior lies on
/// the negative side.
pub fn auxiliary_plane(i: &StrutEnd, j: &StrutEnd) -> Result<Plane> {
    counters::bump(&counters::PLANES);
    if i.node != j.node {
        return Err(Error::InvalidParams(format!(
            "struts {} and {} do not share a node",
            i.strut, j.strut
        )));
    }
    let n_raw = i.inward / i.cos_alpha - j.inward / j.cos_alpha;
    let len = n_raw.norm();
    if len < 1e-9 {
        return Err(Error::DegeneratePair(i.strut, j.strut));
    }
    let offset = i.radius * (i.tan_alpha() - j.tan_alpha());
    let point = i.center - n_raw * (offset / (len * len));
    Ok(Plane { point, normal: -n_raw / len })
}

/// Intersection of a strut end's surface with a plane.
///
/// The major axis lies in the plane spanned by the strut axis and the plane
/// normal; its endpoints are where the two meridian rulings in that plane
/// cross. The minor semi-axis follows from the cone radius at the center.
pub fn intersect_strut_plane(end: &StrutEnd, plane: &Plane) -> Result<Section> {
    counters::bump(&counters::SECTIONS);
    let unbounded = || Error::UnboundedSection { strut: end.strut };
    let n = plane.normal;
    let u = end.inward;
    let nu = n.dot(&u);
    let sin_a = end.sin_alpha;
    if nu.abs() <= sin_a.abs() + 1e-14 {
        return Err(unbounded());
    }
    let n_perp = n - u * nu;
    let nw = n_perp.norm();
    let w = if nw < 1e-12 { end.e1 } else { n_perp / nw };
    let nw = if nw < 1e-12 { 0.0 } else { nw };

    let base = n.dot(&(end.center - plane.point));
    let r = end.radius;
    let c = end.cos_alpha;
    let mut ends = [Vec3::zeros(); 2];
    for (k, s) in [1.0, -1.0].into_iter().enumerate() {
        let den = nu + s * nw * sin_a / c;
        let x = -(base + s * nw * r / c) / den;
        let rim = r + x * sin_a;
        if rim <= 0.0 || !x.is_finite() {
            return Err(unbounded());
        }
        ends[k] = end.center + u * x + w * (s * rim / c);
    }
    let center = 0.5 * (ends[0] + ends[1]);
    let a = 0.5 * (ends[0] - ends[1]);
    let q = center - end.center;
    let x0 = q.dot(&u);
    let rho0_sq = (q - u * x0).norm_squared();
    let rho_at = (r + x0 * sin_a) / c;
    let b_len = (rho_at * rho_at - rho0_sq).max(0.0).sqrt();
    let b = end.outward().cross(&a).normalize() * b_len;

    let tilt = nu.abs().min(1.0).acos();
    let near_tangent = (FRAC_PI_2 - sin_a.abs().asin()) - tilt < 1e-4;
    Ok(Section { ellipse: Ellipse { center, a, b }, near_tangent })
}

/// Range of `t` for which the ellipse lies on the negative side of `plane`.
pub fn arc_range(ellipse: &Ellipse, plane: &Plane) -> ArcRange {
    counters::bump(&counters::RANGES);
    let n = plane.normal;
    let a = n.dot(&ellipse.a);
    let b = n.dot(&ellipse.b);
    let c0 = n.dot(&(plane.point - ellipse.center));
    let r = a.hypot(b);
    let scale = ellipse.a.norm().max(ellipse.b.norm()).max(1e-300);
    if r <= 1e-14 * scale {
        return if c0 >= 0.0 { ArcRange::Full } else { ArcRange::Empty };
    }
    if c0 >= r {
        return ArcRange::Full;
    }
    if c0 <= -r {
        return ArcRange::Empty;
    }
    let psi = b.atan2(a);
    let beta = (c0 / r).asin();
    let t1 = (PI - beta - psi).rem_euclid(TAU);
    let t1 = if t1 >= TAU { 0.0 } else { t1 };
    ArcRange::Span { t1, t2: t1 + PI + 2.0 * beta }
}

/// Process-wide invocation counts of the geometry kernels.
pub mod counters {
    use std::sync::atomic::{AtomicU64, Ordering};

    pub(crate) static PLANES: AtomicU64 = AtomicU64::new(0);
    pub(crate) static SECTIONS: AtomicU64 = AtomicU64::new(0);
    pub(crate) static RANGES: AtomicU64 = AtomicU64::new(0);

    #[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
    pub struct KernelCounts {
        pub auxiliary_plane: u64,
        pub intersect_strut_plane: u64,
        pub arc_range: u64,
    }

    impl KernelCounts {
        pub fn total(&self) -> u64 {
            self.auxiliary_plane + self.intersect_strut_plane + self.arc_range
        }
    }

    pub(crate) fn bump(c: &AtomicU64) {
        c.fetch_add(1, Ordering::Relaxed);
    }

    pub fn snapshot() -> KernelCounts {
        KernelCounts {
            auxiliary_plane: PLANES.load(Ordering::Relaxed),
            intersect_strut_plane: SECTIONS.load(Ordering::Relaxed),
            arc_range: RANGES.load(Ordering::Relaxed),
        }
    }

    pub fn reset() {
        for c in [&PLANES, &SECTIONS, &RANGES] {
            c.store(0, Ordering::Relaxed);
        }
    }
}
