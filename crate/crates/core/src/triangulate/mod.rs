//! Chord-error-driven triangulation of a decoded metamesh.
//!
//! Each arc is subdivided uniformly in the angle about the strut axis, with
//! the fewest segments whose chords stay within `CE · r` of the arc. The two
//! end rings of a strut are stitched into a band by an angular sweep. Cap arc
//! vertices around a node are chained into hole contours and filled with a
//! fan to the barycenter projected onto the nodal sphere.

pub mod stl;

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::io::{Seek, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

pub use stl::{read_stl, write_stl, StlWriter, Triangle};

use crate::conic::Ellipse;
use crate::lattice::{Lattice, Node, StrutEnd};
use crate::metamesh::{Arc, ArcLoop};
use crate::store::MetaMeshStore;
use crate::{Error, Result, Vec3};

/// Chord error as a fraction of the strut end radius.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize)]
pub struct ChordError(f64);

impl ChordError {
    pub fn new(v: f64) -> Result<Self> {
        if v > 0.0 && v <= 1.0 {
            Ok(Self(v))
        } else {
            Err(Error::InvalidParams(format!("chord error {v} must lie in (0, 1]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Segments needed for an angular extent `t2 - t1` on a circle at chord
/// error `ce`: `floor((t2 - t1) / (2 acos(1 - ce))) + 1`.
pub fn subdiv_count(t1: f64, t2: f64, ce: f64) -> usize {
    let step = 2.0 * (1.0 - ce).clamp(-1.0, 1.0).acos();
    ((t2 - t1).max(0.0) / step).floor() as usize + 1
}

/// `n + 1` uniform parameters from `t1` to `t2`, endpoints exact.
pub fn subdiv_params(t1: f64, t2: f64, n: usize) -> Vec<f64> {
    let n = n.max(1);
    let mut out: Vec<f64> = (0..=n).map(|i| t1 + (t2 - t1) * i as f64 / n as f64).collect();
    out[n] = t2;
    out
}

/// Parameter of the point of `arc` at angle `phi` about the end's axis,
/// unwrapped into `[arc.t1, arc.t2]`.
pub fn param_at_angle(end: &StrutEnd, arc: &Arc, phi: f64) -> f64 {
    let e = &arc.ellipse;
    let (s, c) = phi.sin_cos();
    let e2 = end.e2();
    let tangential = e2 * c - end.e1 * s;
    let radial = end.e1 * c + e2 * s;
    let (al, be, ga) = (tangential.dot(&e.a), tangential.dot(&e.b), tangential.dot(&(e.center - end.center)));
    let r = al.hypot(be);
    let span = arc.t2 - arc.t1;
    if r < 1e-300 {
        return arc.t1;
    }
    let psi = be.atan2(al);
    let base = (-ga / r).clamp(-1.0, 1.0).asin();
    let mut best: Option<(f64, f64)> = None;
    for root in [base - psi, std::f64::consts::PI - base - psi] {
        let side = radial.dot(&(e.point(root) - end.center));
        let t = arc.t1 + (root - arc.t1).rem_euclid(TAU);
        let t = if t > arc.t2 && t - TAU >= arc.t1 - 1e-9 { t - TAU } else { t };
        let outside = if t > arc.t2 { t - arc.t2 } else { 0.0 };
        // Prefer the root on the `phi` side of the axis, then the one inside the arc.
        let score = if side > 0.0 { 0.0 } else { 10.0 } + outside;
        if best.is_none_or(|(s, _)| score < s) {
            best = Some((score, t));
        }
    }
    best.unwrap().1.clamp(arc.t1, arc.t1 + span)
}

/// Largest distance between the ellipse over `[ta, tb]` and the chord joining its ends.
pub fn segment_deviation(e: &Ellipse, ta: f64, tb: f64) -> f64 {
    let (pa, pb) = (e.point(ta), e.point(tb));
    let chord = pb - pa;
    let len = chord.norm();
    if len < 1e-15 {
        return (e.point(0.5 * (ta + tb)) - pa).norm();
    }
    let m = e.normal().cross(&chord);
    let m = m / m.norm();
    let (a, b, c) = (m.dot(&e.a), m.dot(&e.b), m.dot(&(e.center - pa)));
    let f = |t: f64| (a * t.sin() + b * t.cos() + c).abs();
    let base = a.atan2(b);
    let pi = std::f64::consts::PI;
    let k0 = ((ta - base) / pi).floor() as i64;
    let k1 = ((tb - base) / pi).ceil() as i64;
    let mut worst: f64 = 0.0;
    for k in k0..=k1 {
        let t = base + k as f64 * pi;
        if t > ta && t < tb {
            worst = worst.max(f(t));
        }
    }
    worst
}

/// Vertices around one strut end, in increasing angle about its inward axis.
/// `hole[i]` flags the segment from vertex `i` to vertex `i + 1`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Ring {
    pub points: Vec<Vec3>,
    pub angles: Vec<f64>,
    pub hole: Vec<bool>,
    /// Largest chord deviation of any segment, mm.
    pub max_deviation: f64,
}

struct ArcSampling {
    n: usize,
    interior: Vec<f64>,
    deviation: f64,
}

fn sample_arc(end: &StrutEnd, arc: &Arc, phi_s: f64, dphi: f64, n: usize) -> ArcSampling {
    let mut ts = Vec::with_capacity(n + 1);
    ts.push(arc.t1);
    for i in 1..n {
        ts.push(param_at_angle(end, arc, phi_s + dphi * i as f64 / n as f64));
    }
    ts.push(arc.t2);
    let deviation = ts.windows(2).map(|w| segment_deviation(&arc.ellipse, w[0], w[1])).fold(0.0, f64::max);
    ts.pop();
    ts.remove(0);
    ArcSampling { n, interior: ts, deviation }
}

/// Fewest uniform-angle segments whose chords all stay within `tol`,
/// searching from the closed-form count. The bound is treated as strict (with
/// a relative margin) so that exact ties resolve the same way as the
/// closed-form count on a circle.
fn fit_arc(end: &StrutEnd, arc: &Arc, phi_s: f64, dphi: f64, ce: f64, tol: f64) -> ArcSampling {
    const MAX_SEGMENTS: usize = 1 << 12;
    let tol = tol * (1.0 - 1e-9);
    let seed = subdiv_count(0.0, dphi, ce).min(MAX_SEGMENTS);
    let mut cur = sample_arc(end, arc, phi_s, dphi, seed);
    if cur.deviation <= tol {
        while cur.n > 1 {
            let fewer = sample_arc(end, arc, phi_s, dphi, cur.n - 1);
            if fewer.deviation > tol {
                break;
            }
            cur = fewer;
        }
    } else {
        while cur.deviation > tol && cur.n < MAX_SEGMENTS {
            cur = sample_arc(end, arc, phi_s, dphi, cur.n + 1);
        }
    }
    cur
}

/// Segment count chosen for one arc of a loop at chord error `ce`.
pub fn arc_segments(end: &StrutEnd, lp: &ArcLoop, k: usize, ce: f64) -> usize {
    let (phi_s, dphi) = arc_extent(end, lp, k);
    fit_arc(end, &lp.arcs[k], phi_s, dphi, ce, ce * end.radius).n
}

/// Start angle and angular extent of arc `k`, between its bounding junctions.
pub fn arc_extent(end: &StrutEnd, lp: &ArcLoop, k: usize) -> (f64, f64) {
    let n = lp.arcs.len();
    let start = lp.junctions[(k + n - 1) % n];
    let phi_s = end.angle_of(&start);
    if n == 1 || lp.arcs[k].is_full() {
        return (phi_s, TAU);
    }
    (phi_s, (end.angle_of(&lp.junctions[k]) - phi_s).rem_euclid(TAU))
}

pub fn subdivide_loop(end: &StrutEnd, lp: &ArcLoop, ce: f64) -> Ring {
    let tol = ce * end.radius;
    let n = lp.arcs.len();
    let mut ring = Ring::default();
    for (k, arc) in lp.arcs.iter().enumerate() {
        let start = lp.junctions[(k + n - 1) % n];
        let (phi_s, dphi) = arc_extent(end, lp, k);
        let fit = fit_arc(end, arc, phi_s, dphi, ce, tol);
        ring.max_deviation = ring.max_deviation.max(fit.deviation);
        ring.points.push(start);
        ring.angles.push(phi_s);
        ring.hole.push(arc.hole_flag());
        for (i, t) in fit.interior.iter().enumerate() {
            ring.points.push(arc.point(*t));
            ring.angles.push((phi_s + dphi * (i + 1) as f64 / fit.n as f64).rem_euclid(TAU));
            ring.hole.push(arc.hole_flag());
        }
    }
    ring
}

/// Zig-zag band between two rings whose angles are measured in the same
/// frame (ascending, cyclic). Produces `n0 + n1` triangles.
pub fn stitch(r0: &[Vec3], a0: &[f64], r1: &[Vec3], a1: &[f64]) -> Vec<Triangle> {
    let (n0, n1) = (r0.len(), r1.len());
    if n0 == 0 || n1 == 0 {
        return Vec::new();
    }
    let start = |a: &[f64]| (0..a.len()).min_by(|&i, &j| a[i].total_cmp(&a[j])).unwrap();
    let (s0, s1) = (start(a0), start(a1));
    let ang = |a: &[f64], s: usize, i: usize| {
        let n = a.len();
        let base = a[s];
        let v = a[(s + i) % n];
        let mut u = if v < base { v + TAU } else { v };
        u += TAU * (i / n) as f64;
        u
    };
    let p0 = |i: usize| r0[(s0 + i) % n0];
    let p1 = |j: usize| r1[(s1 + j) % n1];
    let mut out = Vec::with_capacity(n0 + n1);
    let (mut i, mut j) = (0, 0);
    while i < n0 || j < n1 {
        let adv0 = if i == n0 {
            false
        } else if j == n1 {
            true
        } else {
            ang(a0, s0, i + 1) <= ang(a1, s1, j + 1)
        };
        if adv0 {
            out.push(Triangle([p0(i), p0(i + 1), p1(j)]));
            i += 1;
        } else {
            out.push(Triangle([p0(i), p1(j + 1), p1(j)]));
            j += 1;
        }
    }
    out
}

/// Lateral band of one strut. Ring 1 is re-expressed in ring 0's angular
/// frame before stitching; faces are wound to point away from the axis.
pub fn triangulate_strut(end0: &StrutEnd, ring0: &Ring, ring1: &Ring) -> Vec<Triangle> {
    let n1 = ring1.points.len();
    let pts1: Vec<Vec3> = (0..n1).rev().map(|i| ring1.points[i]).collect();
    let ang1: Vec<f64> = (0..n1).rev().map(|i| (-ring1.angles[i]).rem_euclid(TAU)).collect();
    let mut tris = stitch(&ring0.points, &ring0.angles, &pts1, &ang1);
    let (o, u) = (end0.center, end0.inward);
    for t in &mut tris {
        let c = t.centroid() - o;
        let radial = c - u * c.dot(&u);
        if t.normal().dot(&radial) < 0.0 {
            *t = t.flipped();
        }
    }
    tris
}

/// Maximal runs of consecutive hole segments, as vertex chains. A ring made
/// entirely of hole segments yields one closed run.
pub fn hole_runs(ring: &Ring) -> (Vec<Vec<Vec3>>, Option<Vec<Vec3>>) {
    let n = ring.points.len();
    if n == 0 || !ring.hole.iter().any(|&h| h) {
        return (Vec::new(), None);
    }
    if ring.hole.iter().all(|&h| h) {
        return (Vec::new(), Some(ring.points.clone()));
    }
    let first = (0..n).find(|&i| !ring.hole[i]).unwrap();
    let mut runs = Vec::new();
    let mut cur: Vec<Vec3> = Vec::new();
    for step in 1..=n {
        let i = (first + step) % n;
        if ring.hole[i] {
            if cur.is_empty() {
                cur.push(ring.points[i]);
            }
            cur.push(ring.points[(i + 1) % n]);
        } else if !cur.is_empty() {
            runs.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        runs.push(cur);
    }
    (runs, None)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HoleContour {
    pub node: u32,
    pub points: Vec<Vec3>,
}

/// Chains open hole runs around `node` into closed contours, joining the
/// nearest endpoint (either orientation) within `HOLE_JOIN_REL · radius`.
/// A chain with nothing left in reach closes on itself if its ends are within
/// `HOLE_CLOSE_REL · radius`; this covers holes partly bounded by a neighbor's
/// band rather than by cap arcs. Endpoints closer
/// than `1e-9 · tol` are merged; others are kept so the fan also covers the
/// gap between neighboring runs. A short chain that cannot close on its own
/// is spliced into the contour edge whose ends it best matches.
pub fn detect_holes(node: u32, runs: Vec<Vec<Vec3>>, closed: Vec<Vec<Vec3>>, radius: f64) -> Result<Vec<HoleContour>> {
    let tol = HOLE_JOIN_REL * radius;
    let self_tol = HOLE_CLOSE_REL * radius;
    let same = 1e-9 * tol;
    let mut out: Vec<HoleContour> = closed.into_iter().map(|points| HoleContour { node, points }).collect();
    let mut stuck = Vec::new();
    let mut left = runs;
    while !left.is_empty() {
        let mut chain = left.remove(0);
        loop {
            let head = chain[0];
            let tail = *chain.last().unwrap();
            let gap = (tail - head).norm();
            // A two-point chain only closes on itself when nothing else is in
            // reach; it then bounds no area and yields no fan.
            let close = if chain.len() > 2 { gap } else { f64::INFINITY };
            let mut best: Option<(f64, usize, bool)> = None;
            for (k, run) in left.iter().enumerate() {
                for (rev, p) in [(false, run[0]), (true, *run.last().unwrap())] {
                    let d = (p - tail).norm();
                    if best.is_none_or(|(bd, _, _)| d < bd) {
                        best = Some((d, k, rev));
                    }
                }
            }
            match best {
                Some((d, k, rev)) if d <= tol && d < close => {
                    let mut run = left.remove(k);
                    if rev {
                        run.reverse();
                    }
                    chain.extend(run.into_iter().skip(usize::from(d <= same)));
                }
                _ if close <= tol || (gap <= self_tol && best.is_none_or(|(d, ..)| d > tol)) => {
                    if gap <= same {
                        chain.pop();
                    }
                    out.push(HoleContour { node, points: chain });
                    break;
                }
                _ => {
                    stuck.push(chain);
                    break;
                }
            }
        }
    }
    for chain in stuck {
        let (head, tail) = (chain[0], *chain.last().unwrap());
        let mut best: Option<(f64, usize, usize, bool)> = None;
        for (ci, c) in out.iter().enumerate() {
            let m = c.points.len();
            for k in 0..m {
                let (p, q) = (c.points[k], c.points[(k + 1) % m]);
                for (rev, a, b) in [(false, head, tail), (true, tail, head)] {
                    let (da, db) = ((p - a).norm(), (q - b).norm());
                    if da <= tol && db <= tol && best.is_none_or(|(s, ..)| da + db < s) {
                        best = Some((da + db, ci, k, rev));
                    }
                }
            }
        }
        let Some((_, ci, k, rev)) = best else {
            return Err(Error::OpenContour { node });
        };
        let mut chain = chain;
        if rev {
            chain.reverse();
        }
        out[ci].points.splice(k + 1..k + 1, chain);
    }
    Ok(out)
}

/// Newell normal of a closed polygon.
fn newell(points: &[Vec3]) -> Vec3 {
    let mut n = Vec3::zeros();
    for (k, p) in points.iter().enumerate() {
        let q = points[(k + 1) % points.len()];
        n += Vec3::new((p.y - q.y) * (p.z + q.z), (p.z - q.z) * (p.x + q.x), (p.x - q.x) * (p.y + q.y));
    }
    n
}

/// Fan from each contour edge to the barycenter pushed onto the nodal sphere.
/// When the barycenter sits at the sphere center the contour normal is used
/// instead, pointing away from `away_from`. Returns the fan and whether the
/// fallback was taken.
pub fn fill_hole(c: &HoleContour, node: &Node, away_from: Vec3) -> (Vec<Triangle>, bool) {
    let m = c.points.len();
    if m < 3 {
        return (Vec::new(), false);
    }
    let o = node.center;
    let b = c.points.iter().sum::<Vec3>() / m as f64;
    let d = b - o;
    let (apex, fallback) = if d.norm() > 1e-9 * node.radius {
        (o + d / d.norm() * node.radius, false)
    } else {
        let mut n = newell(&c.points);
        if n.norm() == 0.0 {
            n = -away_from;
        }
        if n.dot(&away_from) > 0.0 {
            n = -n;
        }
        log::debug!("node {}: hole barycenter at the center, using the contour normal", c.node);
        (o + n.normalize() * node.radius, true)
    };
    let tris = (0..m)
        .map(|k| {
            let t = Triangle([c.points[k], c.points[(k + 1) % m], apex]);
            if t.normal().dot(&(t.centroid() - o)) < 0.0 {
                t.flipped()
            } else {
                t
            }
        })
        .collect();
    (tris, fallback)
}

/// Open hole runs at one end, plus the closed run when the whole ring is hole.
pub type HoleRuns = (Vec<Vec<Vec3>>, Option<Vec<Vec3>>);

/// Everything one strut contributes, computed without reference to any
/// other strut.
#[derive(Clone, Debug)]
pub struct StrutPiece {
    pub band: Vec<Triangle>,
    /// Open and closed hole runs at each end.
    pub runs: [HoleRuns; 2],
    pub max_deviation: f64,
    pub max_relative_deviation: f64,
}

pub fn strut_piece(lattice: &Lattice, strut: u32, loops: &[ArcLoop; 2], ce: f64) -> StrutPiece {
    let ends = [lattice.strut_end(strut, 0), lattice.strut_end(strut, 1)];
    let rings = [subdivide_loop(&ends[0], &loops[0], ce), subdivide_loop(&ends[1], &loops[1], ce)];
    let max_deviation = rings[0].max_deviation.max(rings[1].max_deviation);
    let max_relative_deviation = (rings[0].max_deviation / ends[0].radius).max(rings[1].max_deviation / ends[1].radius);
    StrutPiece {
        band: triangulate_strut(&ends[0], &rings[0], &rings[1]),
        runs: [hole_runs(&rings[0]), hole_runs(&rings[1])],
        max_deviation,
        max_relative_deviation,
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TriReport {
    pub chord_error: f64,
    pub struts: u64,
    pub triangles: u64,
    pub band_triangles: u64,
    pub cap_triangles: u64,
    pub hole_contours: u64,
    pub hole_fallbacks: u64,
    pub quarantined: Vec<u32>,
    pub open_contours: Vec<u32>,
    /// Largest chord deviation from the decoded arcs, mm.
    pub max_chord_deviation: f64,
    /// The same, divided by the end radius.
    pub max_relative_deviation: f64,
}

impl TriReport {
    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let s = serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(path, s)?;
        Ok(())
    }
}

/// Streaming triangulator. Struts must be fed in increasing id order; a
/// node's cap fans are emitted right after the band of the highest-id strut
/// incident to it.
pub struct Triangulator<'a> {
    lattice: &'a Lattice,
    ce: f64,
    open_runs: HashMap<u32, Vec<Vec<Vec3>>>,
    closed_runs: HashMap<u32, Vec<Vec<Vec3>>>,
    report: TriReport,
}

/// Endpoint joining tolerance for hole runs, relative to the node radius.
pub const HOLE_JOIN_REL: f64 = 0.25;
/// Gap across which an isolated hole run may close on itself.
pub const HOLE_CLOSE_REL: f64 = 1.0;

impl<'a> Triangulator<'a> {
    pub fn new(lattice: &'a Lattice, ce: ChordError) -> Self {
        Self {
            lattice,
            ce: ce.value(),
            open_runs: HashMap::new(),
            closed_runs: HashMap::new(),
            report: TriReport { chord_error: ce.value(), ..Default::default() },
        }
    }

    pub fn strut(&mut self, strut: u32, loops: Option<&[ArcLoop; 2]>, out: &mut Vec<Triangle>) {
        let piece = loops.map(|l| strut_piece(self.lattice, strut, l, self.ce));
        self.absorb(strut, piece, out);
    }

    /// Struts of one batch, in increasing id order. Bands are built in
    /// parallel; caps and output order stay sequential.
    pub fn batch(&mut self, items: &[(u32, Option<[ArcLoop; 2]>)], out: &mut Vec<Triangle>) {
        let pieces: Vec<Option<StrutPiece>> = items
            .par_iter()
            .map(|(s, l)| l.as_ref().map(|l| strut_piece(self.lattice, *s, l, self.ce)))
            .collect();
        for ((s, _), piece) in items.iter().zip(pieces) {
            self.absorb(*s, piece, out);
        }
    }

    fn absorb(&mut self, strut: u32, piece: Option<StrutPiece>, out: &mut Vec<Triangle>) {
        self.report.struts += 1;
        let nodes = self.lattice.strut(strut).nodes;
        match piece {
            Some(p) => {
                self.report.max_chord_deviation = self.report.max_chord_deviation.max(p.max_deviation);
                self.report.max_relative_deviation = self.report.max_relative_deviation.max(p.max_relative_deviation);
                self.report.band_triangles += p.band.len() as u64;
                out.extend(p.band);
                for (e, (runs, closed)) in p.runs.into_iter().enumerate() {
                    if !runs.is_empty() {
                        self.open_runs.entry(nodes[e]).or_default().extend(runs);
                    }
                    if let Some(c) = closed {
                        self.closed_runs.entry(nodes[e]).or_default().push(c);
                    }
                }
            }
            None => self.report.quarantined.push(strut),
        }
        for node in nodes {
            if self.lattice.last_incident(node) == Some(strut) {
                self.flush_node(node, out);
            }
        }
    }

    fn flush_node(&mut self, node: u32, out: &mut Vec<Triangle>) {
        let runs = self.open_runs.remove(&node).unwrap_or_default();
        let closed = self.closed_runs.remove(&node).unwrap_or_default();
        if runs.is_empty() && closed.is_empty() {
            return;
        }
        let n = self.lattice.node(node);
        match detect_holes(node, runs, closed, n.radius) {
            Ok(contours) => {
                let away: Vec3 = self
                    .lattice
                    .adjacency(node)
                    .iter()
                    .map(|&s| {
                        let e = if self.lattice.strut(s).nodes[0] == node { 0 } else { 1 };
                        self.lattice.strut_end(s, e).inward
                    })
                    .sum();
                for c in &contours {
                    let (fan, fallback) = fill_hole(c, n, away);
                    self.report.cap_triangles += fan.len() as u64;
                    self.report.hole_fallbacks += fallback as u64;
                    out.extend(fan);
                }
                self.report.hole_contours += contours.len() as u64;
            }
            Err(e) => {
                log::warn!("{e}");
                self.report.open_contours.push(node);
            }
        }
    }

    pub fn finish(mut self) -> TriReport {
        self.report.triangles = self.report.band_triangles + self.report.cap_triangles;
        self.report.open_contours.sort_unstable();
        self.report
    }
}

/// Triangulates every strut of a cached metamesh at one chord error,
/// streaming to `sink`.
pub fn triangulate_store<W: Write + Seek>(store: &MetaMeshStore, ce: ChordError, sink: W) -> Result<(W, TriReport)> {
    const STRUTS_PER_STEP: u32 = 4096;
    let mut writer = StlWriter::new(sink)?;
    let mut tri = Triangulator::new(&store.lattice, ce);
    let mut buf = Vec::new();
    let n = store.num_struts() as u32;
    for lo in (0..n).step_by(STRUTS_PER_STEP as usize) {
        let items: Vec<(u32, Option<[ArcLoop; 2]>)> =
            (lo..(lo + STRUTS_PER_STEP).min(n)).into_par_iter().map(|s| (s, store.decode_loops(s))).collect();
        tri.batch(&items, &mut buf);
        writer.write(&buf)?;
        buf.clear();
    }
    let report = tri.finish();
    Ok((writer.finish()?, report))
}

/// Output path for chord error `ce`; with several errors the value is
/// inserted before the extension.
pub fn output_path(base: &Path, ce: f64, several: bool) -> PathBuf {
    if !several {
        return base.to_path_buf();
    }
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = base.extension().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "stl".into());
    base.with_file_name(format!("{stem}_ce{ce}.{ext}"))
}

/// Sidecar report path next to an STL file.
pub fn report_path(stl: &Path) -> PathBuf {
    stl.with_extension("json")
}

/// One STL (and JSON report) per chord error, all decoded from the same cache.
pub fn triangulate_all(store: &MetaMeshStore, errors: &[ChordError], out: &Path) -> Result<Vec<TriReport>> {
    if errors.is_empty() {
        return Err(Error::InvalidParams("at least one chord error is required".into()));
    }
    let several = errors.len() > 1;
    let mut reports = Vec::with_capacity(errors.len());
    for &ce in errors {
        let path = output_path(out, ce.value(), several);
        let f = std::io::BufWriter::with_capacity(1 << 20, std::fs::File::create(&path)?);
        let (_, report) = triangulate_store(store, ce, f)?;
        report.write_json(report_path(&path))?;
        reports.push(report);
    }
    Ok(reports)
}
