//! Lattice graph: nodal spheres, struts between them, and node→strut adjacency.

mod ltc;
mod synth;

pub use ltc::{parse_lattice, read_lattice, serialize_lattice, write_lattice, LTC_MAGIC};
pub use synth::{synth_lattice, RandomParams, SynthKind};

use std::collections::HashSet;

use crate::{Error, Result, Vec3};

/// A nodal sphere. Its radius doubles as the end radius of every incident strut.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    pub center: Vec3,
    pub radius: f64,
}

/// A strut between two distinct nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Strut {
    pub nodes: [u32; 2],
}

impl Strut {
    pub fn new(i0: u32, i1: u32) -> Self {
        Self { nodes: [i0, i1] }
    }
}

/// Derived geometry of one strut.
#[derive(Clone, Copy, Debug)]
pub struct StrutGeom {
    pub v0: Vec3,
    pub v1: Vec3,
    pub r0: f64,
    pub r1: f64,
    /// Unit direction from `v1` toward `v0`.
    pub d: Vec3,
    pub length: f64,
    /// Cone half-angle, `asin(|r1 - r0| / length)`; zero for cylinders.
    pub alpha: f64,
}

impl StrutGeom {
    pub fn is_cylinder(&self) -> bool {
        self.r0 == self.r1
    }
}

/// One end of a strut seen from its node: the local frame every geometry
/// kernel works in.
///
/// The strut surface is the cone tangent to both nodal spheres. With `x` the
/// axial coordinate measured from the node along [`StrutEnd::inward`] and
/// `rho` the distance from the axis, the surface is
/// `rho * cos(alpha) - x * sin(alpha) - r = 0`, where `alpha` is signed per
/// end (`sin(alpha) = (r_far - r) / length`).
#[derive(Clone, Copy, Debug)]
pub struct StrutEnd {
    pub strut: u32,
    pub end: u8,
    pub node: u32,
    pub center: Vec3,
    pub radius: f64,
    pub far: Vec3,
    pub length: f64,
    /// Unit axis pointing from this node into the strut.
    pub inward: Vec3,
    pub sin_alpha: f64,
    pub cos_alpha: f64,
    /// Reference direction perpendicular to the axis; shared by both ends of
    /// a strut so angular coordinates can be compared between the two loops.
    pub e1: Vec3,
}

impl StrutEnd {
    /// `d`: unit direction pointing out of the strut through this node.
    pub fn outward(&self) -> Vec3 {
        -self.inward
    }

    pub fn tan_alpha(&self) -> f64 {
        self.sin_alpha / self.cos_alpha
    }

    /// Radius of the surface in the end-section plane through the node center.
    pub fn end_radius(&self) -> f64 {
        self.radius / self.cos_alpha
    }

    /// Second frame axis, `inward × e1`; angles grow right-handed about `inward`.
    pub fn e2(&self) -> Vec3 {
        self.inward.cross(&self.e1)
    }

    /// Signed distance (exact along the meridian) from `p` to the cone surface.
    pub fn surface_residual(&self, p: &Vec3) -> f64 {
        let q = p - self.center;
        let x = q.dot(&self.inward);
        let rho = (q - self.inward * x).norm();
        rho * self.cos_alpha - x * self.sin_alpha - self.radius
    }

    /// Angular coordinate of `p` around the axis, in `[0, 2π)`.
    pub fn angle_of(&self, p: &Vec3) -> f64 {
        let q = p - self.center;
        let a = q.dot(&self.e2()).atan2(q.dot(&self.e1));
        if a < 0.0 {
            a + std::f64::consts::TAU
        } else {
            a
        }
    }

    /// Unit radial direction at angle `phi`.
    pub fn radial(&self, phi: f64) -> Vec3 {
        self.e1 * phi.cos() + self.e2() * phi.sin()
    }
}

/// Deterministic unit vector perpendicular to `u`.
pub(crate) fn perpendicular(u: &Vec3) -> Vec3 {
    let helper = if u.x.abs() <= u.y.abs() && u.x.abs() <= u.z.abs() {
        Vec3::x()
    } else if u.y.abs() <= u.z.abs() {
        Vec3::y()
    } else {
        Vec3::z()
    };
    u.cross(&helper).normalize()
}

/// Validated lattice with CSR adjacency. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    nodes: Vec<Node>,
    struts: Vec<Strut>,
    r_min: f64,
    r_max: f64,
    adj_offsets: Vec<usize>,
    adj: Vec<u32>,
}

impl Lattice {
    /// Builds a lattice whose radius bounds are taken from the nodes.
    pub fn from_parts(nodes: Vec<Node>, struts: Vec<Strut>) -> Result<Self> {
        let (lo, hi) = nodes.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), n| {
            (lo.min(n.radius), hi.max(n.radius))
        });
        let (lo, hi) = if nodes.is_empty() { (0.0, 0.0) } else { (lo, hi) };
        Self::new(nodes, struts, lo, hi)
    }

    pub fn new(nodes: Vec<Node>, struts: Vec<Strut>, r_min: f64, r_max: f64) -> Result<Self> {
        if nodes.len() > u32::MAX as usize || struts.len() > u32::MAX as usize {
            return Err(Error::InvalidLattice("more than 2^32 nodes or struts".into()));
        }
        if !(r_min.is_finite() && r_max.is_finite()) || r_min > r_max {
            return Err(Error::InvalidLattice(format!("bad radius bounds [{r_min}, {r_max}]")));
        }
        for (i, n) in nodes.iter().enumerate() {
            check_node(n).map_err(|m| Error::InvalidLattice(format!("node {i}: {m}")))?;
            if n.radius < r_min || n.radius > r_max {
                return Err(Error::InvalidLattice(format!(
                    "node {i}: radius {} outside header bounds [{r_min}, {r_max}]",
                    n.radius
                )));
            }
        }
        let mut seen = HashSet::with_capacity(struts.len());
        for (i, s) in struts.iter().enumerate() {
            check_strut(s, &nodes).map_err(|m| Error::InvalidLattice(format!("strut {i}: {m}")))?;
            let key = (s.nodes[0].min(s.nodes[1]), s.nodes[0].max(s.nodes[1]));
            if !seen.insert(key) {
                return Err(Error::InvalidLattice(format!("strut {i}: duplicate of an earlier strut")));
            }
        }

        let mut degree = vec![0usize; nodes.len() + 1];
        for s in &struts {
            degree[s.nodes[0] as usize + 1] += 1;
            degree[s.nodes[1] as usize + 1] += 1;
        }
        for i in 1..degree.len() {
            degree[i] += degree[i - 1];
        }
        let adj_offsets = degree;
        let mut fill = adj_offsets.clone();
        let mut adj = vec![0u32; 2 * struts.len()];
        // Struts are visited in id order, so each node's list comes out sorted.
        for (id, s) in struts.iter().enumerate() {
            for &n in &s.nodes {
                adj[fill[n as usize]] = id as u32;
                fill[n as usize] += 1;
            }
        }
        Ok(Self { nodes, struts, r_min, r_max, adj_offsets, adj })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn struts(&self) -> &[Strut] {
        &self.struts
    }

    pub fn node(&self, id: u32) -> &Node {
        &self.nodes[id as usize]
    }

    pub fn strut(&self, id: u32) -> &Strut {
        &self.struts[id as usize]
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_struts(&self) -> usize {
        self.struts.len()
    }

    /// Header lower bound on node radii.
    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    /// Header upper bound on node radii.
    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Sorted ids of the struts incident to `node`.
    pub fn adjacency(&self, node: u32) -> &[u32] {
        let n = node as usize;
        &self.adj[self.adj_offsets[n]..self.adj_offsets[n + 1]]
    }

    /// Struts sharing the node at `end` of `strut`, excluding `strut`, ascending.
    pub fn neighbors_at(&self, strut: u32, end: u8) -> Vec<u32> {
        let node = self.struts[strut as usize].nodes[end as usize];
        self.adjacency(node).iter().copied().filter(|&s| s != strut).collect()
    }

    /// Number of neighbors at `end` without allocating.
    pub fn neighbor_count(&self, strut: u32, end: u8) -> usize {
        let node = self.struts[strut as usize].nodes[end as usize];
        self.adjacency(node).len() - 1
    }

    /// The id of the highest-numbered strut incident to `node`, if any.
    pub fn last_incident(&self, node: u32) -> Option<u32> {
        self.adjacency(node).last().copied()
    }

    pub fn strut_geom(&self, id: u32) -> StrutGeom {
        let s = self.struts[id as usize];
        let (a, b) = (self.nodes[s.nodes[0] as usize], self.nodes[s.nodes[1] as usize]);
        let diff = a.center - b.center;
        let length = diff.norm();
        StrutGeom {
            v0: a.center,
            v1: b.center,
            r0: a.radius,
            r1: b.radius,
            d: diff / length,
            length,
            alpha: ((b.radius - a.radius).abs() / length).asin(),
        }
    }

    /// Local frame of `strut` at `end`.
    pub fn strut_end(&self, strut: u32, end: u8) -> StrutEnd {
        let s = self.struts[strut as usize];
        let here = self.nodes[s.nodes[end as usize] as usize];
        let there = self.nodes[s.nodes[1 - end as usize] as usize];
        let axis0 = {
            let a = self.nodes[s.nodes[0] as usize].center;
            let b = self.nodes[s.nodes[1] as usize].center;
            (b - a).normalize()
        };
        let diff = there.center - here.center;
        let length = diff.norm();
        let sin_alpha = (there.radius - here.radius) / length;
        StrutEnd {
            strut,
            end,
            node: s.nodes[end as usize],
            center: here.center,
            radius: here.radius,
            far: there.center,
            length,
            inward: diff / length,
            sin_alpha,
            cos_alpha: (1.0 - sin_alpha * sin_alpha).sqrt(),
            e1: perpendicular(&axis0),
        }
    }
}

fn check_node(n: &Node) -> std::result::Result<(), String> {
    if !(n.center.iter().all(|c| c.is_finite()) && n.radius.is_finite()) {
        return Err("non-finite coordinate".into());
    }
    if n.radius <= 0.0 {
        return Err(format!("radius {} must be > 0", n.radius));
    }
    Ok(())
}

fn check_strut(s: &Strut, nodes: &[Node]) -> std::result::Result<(), String> {
    let [i0, i1] = s.nodes;
    if i0 as usize >= nodes.len() || i1 as usize >= nodes.len() {
        return Err(format!("dangling node index ({i0}, {i1}) with {} nodes", nodes.len()));
    }
    if i0 == i1 {
        return Err("both ends on the same node".into());
    }
    let (a, b) = (nodes[i0 as usize], nodes[i1 as usize]);
    let length = (a.center - b.center).norm();
    if length <= 0.0 {
        return Err("zero length".into());
    }
    if (a.radius - b.radius).abs() >= length {
        return Err("radius difference exceeds length; no tangent cone exists".into());
    }
    Ok(())
}
