//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::TAU;

use metamesh::conic::{auxiliary_plane, Ellipse, Plane};
use metamesh::lattice::{synth_lattice, Lattice, RandomParams, StrutEnd, SynthKind};
use metamesh::metamesh::{cap_plane, ArcLoop};
use metamesh::Vec3;

/// Point on the strut surface at angle `phi` about the inward axis, `x`
/// along the axis from the node center.
pub fn ruling_point(end: &StrutEnd, phi: f64, x: f64) -> Vec3 {
    let rho = (end.radius + x * end.sin_alpha) / end.cos_alpha;
    end.center + end.inward * x + end.radial(phi) * rho
}

/// Trimming planes of one end, neighbors by ascending id, cap last.
pub fn planes(l: &Lattice, end: &StrutEnd) -> Vec<(Option<u32>, Plane)> {
    let mut out: Vec<(Option<u32>, Plane)> = l
        .neighbors_at(end.strut, end.end)
        .into_iter()
        .map(|j| {
            let s = l.strut(j);
            let je = if s.nodes[0] == end.node { 0 } else { 1 };
            (Some(j), auxiliary_plane(end, &l.strut_end(j, je)).expect("non-degenerate pair"))
        })
        .collect();
    out.push((None, cap_plane(end)));
    out
}

/// Which plane bounds the surface along the ruling at `phi`, and where.
///
/// Each plane meets the ruling at one `x` (solved linearly); the boundary is
/// the first plane, in candidate order, whose crossing lies inside every other
/// half-space.
pub fn boundary_at(end: &StrutEnd, planes: &[(Option<u32>, Plane)], phi: f64, tol: f64) -> Option<(usize, Vec3)> {
    for (k, (_, pl)) in planes.iter().enumerate() {
        let p0 = ruling_point(end, phi, 0.0);
        let p1 = ruling_point(end, phi, 1.0);
        let (g0, g1) = (pl.signed_distance(&p0), pl.signed_distance(&p1) - pl.signed_distance(&p0));
        if g1.abs() < 1e-14 {
            continue;
        }
        let x = -g0 / g1;
        if end.radius + x * end.sin_alpha <= 0.0 {
            continue;
        }
        let p = ruling_point(end, phi, x);
        if planes.iter().enumerate().all(|(m, (_, q))| m == k || q.signed_distance(&p) <= tol) {
            return Some((k, p));
        }
    }
    None
}

fn arc_angles(end: &StrutEnd, lp: &ArcLoop, k: usize) -> (f64, f64) {
    let a = &lp.arcs[k];
    let s = end.angle_of(&a.start());
    let ext = if a.is_full() { TAU } else { (end.angle_of(&a.end()) - s).rem_euclid(TAU) };
    (s, ext)
}

/// Compares a computed arc loop against dense sampling of the ruling oracle.
/// Checks the number of boundary runs, the label inside each arc, and every
/// junction vertex (located by bisection) to `vertex_tol`.
pub fn check_loop(l: &Lattice, end: &StrutEnd, lp: &ArcLoop, samples: usize, vertex_tol: f64) -> Result<(), String> {
    let pl = planes(l, end);
    let tol = 1e-12 * l.r_max();
    let mut labels = Vec::with_capacity(samples);
    for i in 0..samples {
        // Offset so symmetric lattices never sample exactly at a junction.
        let phi = TAU * (i as f64 + 0.3819) / samples as f64;
        match boundary_at(end, &pl, phi, tol) {
            Some((k, _)) => labels.push(pl[k].0),
            None => return Err(format!("no boundary at phi {phi}")),
        }
    }
    let runs = if labels.iter().all(|x| *x == labels[0]) {
        1
    } else {
        (0..samples).filter(|&i| labels[i] != labels[(i + 1) % samples]).count()
    };
    let spacing = TAU / samples as f64;
    let n = lp.arcs.len();
    let tiny = (0..n).filter(|&k| arc_angles(end, lp, k).1 < 2.0 * spacing).count();
    if runs > n || runs + tiny < n {
        return Err(format!("oracle has {runs} runs, loop has {n} arcs ({tiny} tiny)"));
    }
    for (k, arc) in lp.arcs.iter().enumerate() {
        for f in [0.25, 0.5, 0.75] {
            let phi = end.angle_of(&arc.point(arc.t1 + (arc.t2 - arc.t1) * f));
            let got = boundary_at(end, &pl, phi, tol).map(|(k, _)| pl[k].0);
            if got != Some(arc.neighbor) {
                return Err(format!("arc {k} ({:?}) at phi {phi}: oracle says {got:?}", arc.neighbor));
            }
        }
    }
    if n > 1 {
        for k in 0..n {
            let (s0, e0) = arc_angles(end, lp, k);
            let (s1, e1) = arc_angles(end, lp, (k + 1) % n);
            let lo_phi = s0 + 0.5 * e0;
            let mut hi_phi = s1 + 0.5 * e1;
            while hi_phi <= lo_phi {
                hi_phi += TAU;
            }
            let label = lp.arcs[k].neighbor;
            let (mut lo, mut hi) = (lo_phi, hi_phi);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                match boundary_at(end, &pl, mid, tol) {
                    Some((m, _)) if pl[m].0 == label => lo = mid,
                    _ => hi = mid,
                }
            }
            let p = boundary_at(end, &pl, lo, tol).map(|(_, p)| p).ok_or("lost boundary")?;
            let d = (p - lp.junctions[k]).norm();
            if d > vertex_tol {
                return Err(format!("junction {k}: oracle differs by {d:e}"));
            }
        }
    }
    Ok(())
}

/// Largest distance from dense samples of `e` over `[ta, tb]` to the chord.
pub fn dense_deviation(e: &Ellipse, ta: f64, tb: f64, pa: Vec3, pb: Vec3, samples: usize) -> f64 {
    let d = pb - pa;
    let len = d.norm();
    (0..=samples)
        .map(|i| {
            let q = e.point(ta + (tb - ta) * i as f64 / samples as f64) - pa;
            if len < 1e-300 {
                q.norm()
            } else {
                let u = d / len;
                (q - u * q.dot(&u)).norm()
            }
        })
        .fold(0.0, f64::max)
}

pub fn random_lattice(seed: u64, nodes: usize) -> Lattice {
    synth_lattice(&SynthKind::Random(RandomParams { seed, nodes, ..Default::default() })).unwrap()
}

pub fn diamond(cells: usize, radius: f64, seed: u64) -> Lattice {
    synth_lattice(&SynthKind::Diamond { cells: [cells; 3], cell: 1.0, radius, jitter: 0.1, seed }).unwrap()
}

/// A small assortment of lattice shapes.
pub fn test_lattices() -> Vec<Lattice> {
    let mut v = vec![
        synth_lattice(&SynthKind::Grid { dims: [3, 3, 3], pitch: 1.0, radius: 0.12 }).unwrap(),
        synth_lattice(&SynthKind::Star { arms: 10, length: 1.0, radius: 0.15, tip_radius: 0.08 }).unwrap(),
        diamond(3, 0.08, 1),
    ];
    v.extend((0..4).map(|s| random_lattice(100 + s, 60)));
    v
}

fn rand_unit(rng: &mut impl rand::Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

/// A random arc inside the quantizer ranges of `cfg`, shaped like a strut
/// section: minor axis along `axis × a`, and `|axis × a| >= |b|`.
pub fn random_arc(rng: &mut impl rand::Rng, cfg: &metamesh::codec::QuantConfig) -> (metamesh::metamesh::Arc, metamesh::codec::NodeFrame) {
    let frame = metamesh::codec::NodeFrame { origin: rand_unit(rng) * rng.gen_range(0.0..5.0), axis: rand_unit(rng) };
    let (alo, ahi) = cfg.a_range();
    let (blo, bhi) = cfg.b_range();
    let (_, chi) = cfg.c_range();
    let ar = rng.gen_range(alo..ahi);
    let br = rng.gen_range(blo..bhi.min(ar));
    // Strut sections lean `a` toward the axis by at most acos(br / ar).
    let lean = rng.gen_range(0.0..(br / ar).acos()) * if rng.gen() { 1.0 } else { -1.0 };
    let perp = frame.axis.cross(&rand_unit(rng)).normalize();
    let a = (perp * lean.cos() + frame.axis * lean.sin()) * ar;
    let b = frame.axis.cross(&a).normalize() * br;
    let center = frame.origin + rand_unit(rng) * rng.gen_range(0.0..chi);
    let t1 = rng.gen_range(0.0..TAU);
    let t2 = t1 + rng.gen_range(1e-3..=TAU);
    let arc = metamesh::metamesh::Arc { ellipse: Ellipse { center, a, b }, t1, t2, neighbor: Some(0) };
    (arc, frame)
}

/// Outcome of checking one subdivided loop against the exact arcs.
#[derive(Debug, Default)]
pub struct ChordCheck {
    /// Largest segment deviation from the exact arc minus `CE · r`, mm.
    pub worst_excess: f64,
    pub segments: usize,
    /// Arcs where one segment fewer still met the bound.
    pub not_minimal: usize,
    pub ring_mismatch: bool,
}

/// Subdivides `decoded` at chord error `ce` and measures every segment
/// against dense samples of the matching `exact` arc. Minimality is checked
/// by re-sampling each arc with one segment fewer.
pub fn check_chords(end: &StrutEnd, exact: &ArcLoop, decoded: &ArcLoop, ce: f64, samples: usize) -> ChordCheck {
    use metamesh::triangulate::{arc_extent, arc_segments, param_at_angle, subdivide_loop};
    let tol = ce * end.radius;
    let mut out = ChordCheck { worst_excess: f64::NEG_INFINITY, ..Default::default() };
    let ring = subdivide_loop(end, decoded, ce);
    let mut total = 0;
    for (k, arc) in decoded.arcs.iter().enumerate() {
        let (phi_s, dphi) = arc_extent(end, decoded, k);
        let params = |n: usize| -> Vec<f64> {
            let mut v = vec![arc.t1];
            v.extend((1..n).map(|i| param_at_angle(end, arc, phi_s + dphi * i as f64 / n as f64)));
            v.push(arc.t2);
            v
        };
        let n = arc_segments(end, decoded, k, ce);
        total += n;
        let per = (samples / n).max(8);
        let ts = params(n);
        for w in ts.windows(2) {
            let d = dense_deviation(&exact.arcs[k].ellipse, w[0], w[1], arc.point(w[0]), arc.point(w[1]), per);
            out.worst_excess = out.worst_excess.max(d - tol);
            out.segments += 1;
        }
        if n > 1 {
            let ts = params(n - 1);
            let per = (samples / (n - 1)).max(8);
            let worst = ts
                .windows(2)
                .map(|w| dense_deviation(&arc.ellipse, w[0], w[1], arc.point(w[0]), arc.point(w[1]), per))
                .fold(0.0, f64::max);
            if worst <= tol * (1.0 - 1e-6) {
                out.not_minimal += 1;
            }
        }
    }
    out.ring_mismatch = total != ring.points.len();
    out
}
