//! Per-strut arc loops: each strut end is bounded by arcs of the sections
//! with its neighbors' auxiliary planes, plus whatever survives of the end
//! cap circle (a hole, filled later at triangulation time).
//!
//! Construction runs in four phases that the warp engine dispatches lane by
//! lane: candidate planes, their sections, trimming, and loop assembly.

use std::f64::consts::TAU;

use crate::conic::interval::{self, Span};
use crate::conic::{arc_range, auxiliary_plane, intersect_strut_plane, ArcRange, Ellipse, Plane};
use crate::lattice::{Lattice, StrutEnd};
use crate::{Error, Result, Vec3};

/// Arcs shorter than this (in the ellipse parameter) are discarded.
pub const MIN_ARC: f64 = 1e-12;

/// Junction coincidence tolerance relative to the largest node radius.
pub const JOIN_REL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arc {
    pub ellipse: Ellipse,
    pub t1: f64,
    pub t2: f64,
    /// The neighbor whose auxiliary plane carries this arc; `None` for cap arcs.
    pub neighbor: Option<u32>,
}

impl Arc {
    pub fn hole_flag(&self) -> bool {
        self.neighbor.is_none()
    }

    pub fn point(&self, t: f64) -> Vec3 {
        self.ellipse.point(t)
    }

    pub fn start(&self) -> Vec3 {
        self.ellipse.point(self.t1)
    }

    pub fn end(&self) -> Vec3 {
        self.ellipse.point(self.t2)
    }

    pub fn is_full(&self) -> bool {
        self.t2 - self.t1 >= TAU - MIN_ARC
    }

    pub fn range(&self) -> ArcRange {
        if self.is_full() {
            ArcRange::Full
        } else {
            ArcRange::Span { t1: self.t1, t2: self.t2 }
        }
    }
}

/// Closed loop of arcs at one strut end, ordered by increasing angle about
/// the inward axis. `junctions[k]` is where `arcs[k]` meets `arcs[k + 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ArcLoop {
    pub strut: u32,
    pub end: u8,
    pub arcs: Vec<Arc>,
    pub junctions: Vec<Vec3>,
}

impl ArcLoop {
    pub fn has_holes(&self) -> bool {
        self.arcs.iter().any(Arc::hole_flag)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Quarantine {
    pub strut: u32,
    pub reason: String,
}

/// Arc loops for every strut. Struts whose loops could not be built are
/// `None` and listed in `quarantined`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetaMesh {
    pub loops: Vec<Option<[ArcLoop; 2]>>,
    pub quarantined: Vec<Quarantine>,
}

impl MetaMesh {
    pub fn build(lattice: &Lattice) -> Self {
        Self::from_results((0..lattice.num_struts() as u32).map(|s| metamesh_strut(lattice, s)))
    }

    pub fn from_results(results: impl IntoIterator<Item = Result<[ArcLoop; 2]>>) -> Self {
        let mut mesh = MetaMesh::default();
        for (s, r) in results.into_iter().enumerate() {
            match r {
                Ok(l) => mesh.loops.push(Some(l)),
                Err(e) => {
                    log::warn!("strut {s} quarantined: {e}");
                    mesh.quarantined.push(Quarantine { strut: s as u32, reason: e.to_string() });
                    mesh.loops.push(None);
                }
            }
        }
        mesh
    }

    pub fn num_arcs(&self) -> usize {
        self.loops.iter().flatten().map(|l| l[0].arcs.len() + l[1].arcs.len()).sum()
    }

    pub fn num_vertices(&self) -> usize {
        self.loops.iter().flatten().map(|l| l[0].junctions.len() + l[1].junctions.len()).sum()
    }

    /// One trimmed lateral surface per meshed strut.
    pub fn num_faces(&self) -> usize {
        self.loops.iter().flatten().count()
    }
}

/// A plane bounding one strut end: a neighbor's auxiliary plane or the cap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub neighbor: Option<u32>,
    pub plane: Plane,
}

/// Circle where the strut surface meets the plane through the node
/// perpendicular to the axis.
pub fn end_section_circle(end: &StrutEnd) -> Ellipse {
    let rho = end.end_radius();
    let a = end.e1 * rho;
    let b = end.outward().cross(&end.e1) * rho;
    Ellipse { center: end.center, a, b }
}

pub fn cap_plane(end: &StrutEnd) -> Plane {
    Plane { point: end.center, normal: end.outward() }
}

/// Phase 1 for a single neighbor.
pub fn neighbor_candidate(lattice: &Lattice, end: &StrutEnd, neighbor: u32) -> Result<Candidate> {
    let s = lattice.strut(neighbor);
    let their_end = if s.nodes[0] == end.node { 0 } else { 1 };
    let plane = auxiliary_plane(end, &lattice.strut_end(neighbor, their_end))?;
    Ok(Candidate { neighbor: Some(neighbor), plane })
}

/// Phase 1: neighbor planes in ascending strut id, then the cap plane.
pub fn candidate_planes(lattice: &Lattice, end: &StrutEnd) -> Result<Vec<Candidate>> {
    let mut out = Vec::with_capacity(lattice.neighbor_count(end.strut, end.end) + 1);
    for n in lattice.neighbors_at(end.strut, end.end) {
        out.push(neighbor_candidate(lattice, end, n)?);
    }
    out.push(Candidate { neighbor: None, plane: cap_plane(end) });
    Ok(out)
}

/// Phase 2: the candidate's section ellipse.
pub fn candidate_section(end: &StrutEnd, cand: &Candidate) -> Result<Ellipse> {
    match cand.neighbor {
        None => Ok(end_section_circle(end)),
        Some(_) => intersect_strut_plane(end, &cand.plane).map(|s| {
            if s.near_tangent {
                log::debug!("strut {} end {}: near-tangent section", end.strut, end.end);
            }
            s.ellipse
        }),
    }
}

fn range_spans(r: ArcRange) -> Vec<Span> {
    match r {
        ArcRange::Empty => Vec::new(),
        ArcRange::Full => vec![Span::full()],
        ArcRange::Span { t1, t2 } => vec![Span { start: t1, end: t2 }],
    }
}

/// Phase 3: the parts of candidate `k`'s ellipse inside every other half-space.
///
/// Where two candidates share a plane, the earlier one keeps the arc.
pub fn trim_candidate(k: usize, ellipse: &Ellipse, cands: &[Candidate], tie_tol: f64) -> Vec<Span> {
    let mut spans = vec![Span::full()];
    for (m, other) in cands.iter().enumerate() {
        if m == k {
            continue;
        }
        if other.plane.coincides(&cands[k].plane, tie_tol) {
            if m < k {
                return Vec::new();
            }
            continue;
        }
        spans = interval::intersect(&spans, &range_spans(arc_range(ellipse, &other.plane)), MIN_ARC);
        if spans.is_empty() {
            break;
        }
    }
    spans
}

/// Phase 4: order the surviving arcs and check that they close up.
pub fn assemble_loop(
    end: &StrutEnd,
    cands: &[Candidate],
    ellipses: &[Ellipse],
    spans: &[Vec<Span>],
    r_max: f64,
) -> Result<ArcLoop> {
    let mut arcs: Vec<(f64, Arc)> = Vec::new();
    for ((cand, ellipse), list) in cands.iter().zip(ellipses).zip(spans) {
        for s in list {
            let arc = Arc { ellipse: *ellipse, t1: s.start, t2: s.end, neighbor: cand.neighbor };
            arcs.push((end.angle_of(&ellipse.point(s.mid())), arc));
        }
    }
    if arcs.is_empty() {
        return Err(Error::DegenerateLoop { strut: end.strut, end: end.end });
    }
    arcs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let arcs: Vec<Arc> = arcs.into_iter().map(|(_, a)| a).collect();

    let eps = JOIN_REL * r_max;
    let mut junctions = Vec::with_capacity(arcs.len());
    let mut extent = 0.0;
    for (k, arc) in arcs.iter().enumerate() {
        let next = &arcs[(k + 1) % arcs.len()];
        let (p, q) = (arc.end(), next.start());
        let gap = (p - q).norm();
        if gap > eps {
            return Err(Error::OpenLoop {
                strut: end.strut,
                end: end.end,
                msg: format!("gap {gap:e} after arc {k}"),
            });
        }
        junctions.push(p);
        extent += if arc.is_full() {
            TAU
        } else {
            (end.angle_of(&p) - end.angle_of(&arc.start())).rem_euclid(TAU)
        };
    }
    if (extent - TAU).abs() > 1e-6 {
        return Err(Error::OpenLoop {
            strut: end.strut,
            end: end.end,
            msg: format!("angular extents sum to {extent}"),
        });
    }
    Ok(ArcLoop { strut: end.strut, end: end.end, arcs, junctions })
}

/// Builds the loop at one end from an explicit candidate list (the cap last).
pub fn build_arc_loop(end: &StrutEnd, cands: &[Candidate], r_max: f64) -> Result<ArcLoop> {
    let ellipses = cands.iter().map(|c| candidate_section(end, c)).collect::<Result<Vec<_>>>()?;
    let tie = tie_tolerance(r_max);
    let spans: Vec<_> = ellipses.iter().enumerate().map(|(k, e)| trim_candidate(k, e, cands, tie)).collect();
    assemble_loop(end, cands, &ellipses, &spans, r_max)
}

pub fn tie_tolerance(r_max: f64) -> f64 {
    1e-9 * r_max
}

pub fn arc_loop_at(lattice: &Lattice, strut: u32, end: u8) -> Result<ArcLoop> {
    let e = lattice.strut_end(strut, end);
    build_arc_loop(&e, &candidate_planes(lattice, &e)?, lattice.r_max())
}

pub fn metamesh_strut(lattice: &Lattice, strut: u32) -> Result<[ArcLoop; 2]> {
    Ok([arc_loop_at(lattice, strut, 0)?, arc_loop_at(lattice, strut, 1)?])
}
