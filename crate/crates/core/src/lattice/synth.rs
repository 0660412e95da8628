//! Deterministic synthetic lattices for tests, examples and benchmarks.
//!
//! Every coordinate and radius is rounded to f32 before the lattice is built,
//! so a synthesized lattice survives an LTC round trip unchanged.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Lattice, Node, Strut};
use crate::{Error, Result, Vec3};

#[derive(Clone, Debug)]
pub struct RandomParams {
    pub seed: u64,
    pub nodes: usize,
    pub pitch: f64,
    /// Node radii are drawn uniformly from this range, in units of `pitch`.
    pub radius_frac: (f64, f64),
    /// Candidate struts connect nodes closer than this many pitches.
    pub reach: f64,
    pub keep_prob: f64,
    /// Minimum angle between two struts meeting at a node, degrees.
    pub min_angle_deg: f64,
    /// Node jitter as a fraction of the pitch.
    pub jitter: f64,
}

impl Default for RandomParams {
    fn default() -> Self {
        Self {
            seed: 1,
            nodes: 64,
            pitch: 1.0,
            radius_frac: (0.07, 0.11),
            reach: 1.5,
            keep_prob: 0.6,
            min_angle_deg: 40.0,
            jitter: 0.15,
        }
    }
}

#[derive(Clone, Debug)]
pub enum SynthKind {
    /// Cubic grid of `dims` nodes with struts along the three axes.
    Grid { dims: [usize; 3], pitch: f64, radius: f64 },
    /// One hub node with `arms` struts spread quasi-uniformly over the sphere.
    /// Tip nodes get `tip_radius`, so arms are cones when it differs from `radius`.
    Star { arms: usize, length: f64, radius: f64, tip_radius: f64 },
    /// Jittered grid with random nearby connections filtered by strut angle.
    Random(RandomParams),
    /// Jittered diamond-cubic network: degree-4 nodes with roughly
    /// tetrahedral strut angles, resembling trabecular bone.
    Diamond { cells: [usize; 3], cell: f64, radius: f64, jitter: f64, seed: u64 },
}

fn f32r(v: f64) -> f64 {
    v as f32 as f64
}

fn mk_node(p: Vec3, r: f64) -> Node {
    Node { center: Vec3::new(f32r(p.x), f32r(p.y), f32r(p.z)), radius: f32r(r) }
}

pub fn synth_lattice(kind: &SynthKind) -> Result<Lattice> {
    match kind {
        SynthKind::Grid { dims, pitch, radius } => grid(*dims, *pitch, *radius),
        SynthKind::Star { arms, length, radius, tip_radius } => star(*arms, *length, *radius, *tip_radius),
        SynthKind::Random(p) => random(p),
        SynthKind::Diamond { cells, cell, radius, jitter, seed } => diamond(*cells, *cell, *radius, *jitter, *seed),
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("{name} must be positive, got {v}")))
    }
}

fn grid(dims: [usize; 3], pitch: f64, radius: f64) -> Result<Lattice> {
    positive("pitch", pitch)?;
    positive("radius", radius)?;
    if dims.contains(&0) {
        return Err(Error::InvalidParams("grid dimensions must be >= 1".into()));
    }
    let [nx, ny, nz] = dims;
    let id = |i: usize, j: usize, k: usize| (i + nx * (j + ny * k)) as u32;
    let mut nodes = Vec::with_capacity(nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                nodes.push(mk_node(Vec3::new(i as f64, j as f64, k as f64) * pitch, radius));
            }
        }
    }
    let mut struts = Vec::new();
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                if i + 1 < nx {
                    struts.push(Strut::new(id(i, j, k), id(i + 1, j, k)));
                }
                if j + 1 < ny {
                    struts.push(Strut::new(id(i, j, k), id(i, j + 1, k)));
                }
                if k + 1 < nz {
                    struts.push(Strut::new(id(i, j, k), id(i, j, k + 1)));
                }
            }
        }
    }
    Lattice::from_parts(nodes, struts)
}

fn star(arms: usize, length: f64, radius: f64, tip_radius: f64) -> Result<Lattice> {
    positive("length", length)?;
    positive("radius", radius)?;
    positive("tip_radius", tip_radius)?;
    if arms == 0 {
        return Err(Error::InvalidParams("star needs at least one arm".into()));
    }
    let mut nodes = vec![mk_node(Vec3::zeros(), radius)];
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    for k in 0..arms {
        let dir = if arms == 1 {
            Vec3::z()
        } else {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / arms as f64;
            let rho = (1.0 - z * z).sqrt();
            let a = golden * k as f64;
            Vec3::new(rho * a.cos(), rho * a.sin(), z)
        };
        nodes.push(mk_node(dir * length, tip_radius));
    }
    let struts = (0..arms).map(|k| Strut::new(0, k as u32 + 1)).collect();
    Lattice::from_parts(nodes, struts)
}

fn random(p: &RandomParams) -> Result<Lattice> {
    positive("pitch", p.pitch)?;
    positive("reach", p.reach)?;
    let (lo, hi) = p.radius_frac;
    if !(lo > 0.0 && hi >= lo && hi < 0.5) {
        return Err(Error::InvalidParams(format!("bad radius range ({lo}, {hi})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let side = (p.nodes as f64).cbrt().ceil().max(1.0) as usize;
    let mut nodes = Vec::with_capacity(p.nodes);
    'fill: for k in 0..side {
        for j in 0..side {
            for i in 0..side {
                if nodes.len() == p.nodes {
                    break 'fill;
                }
                let jit = Vec3::new(
                    rng.gen_range(-1.0..=1.0),
                    rng.gen_range(-1.0..=1.0),
                    rng.gen_range(-1.0..=1.0),
                ) * (p.jitter * p.pitch);
                let c = Vec3::new(i as f64, j as f64, k as f64) * p.pitch + jit;
                nodes.push(mk_node(c, rng.gen_range(lo..=hi) * p.pitch));
            }
        }
    }

    let mut candidates = Vec::new();
    let reach = p.reach * p.pitch;
    for a in 0..nodes.len() {
        for b in a + 1..nodes.len() {
            if (nodes[a].center - nodes[b].center).norm() < reach {
                candidates.push((a as u32, b as u32));
            }
        }
    }
    candidates.shuffle(&mut rng);

    let cos_min = p.min_angle_deg.to_radians().cos();
    let mut incident: Vec<Vec<Vec3>> = vec![Vec::new(); nodes.len()];
    let mut struts = Vec::new();
    for (a, b) in candidates {
        if !rng.gen_bool(p.keep_prob.clamp(0.0, 1.0)) {
            continue;
        }
        let u = (nodes[b as usize].center - nodes[a as usize].center).normalize();
        let ok_a = incident[a as usize].iter().all(|w| w.dot(&u) < cos_min);
        let ok_b = incident[b as usize].iter().all(|w| w.dot(&-u) < cos_min);
        if ok_a && ok_b {
            incident[a as usize].push(u);
            incident[b as usize].push(-u);
            struts.push(Strut::new(a, b));
        }
    }
    Lattice::from_parts(nodes, struts)
}

fn diamond(cells: [usize; 3], cell: f64, radius: f64, jitter: f64, seed: u64) -> Result<Lattice> {
    positive("cell", cell)?;
    positive("radius", radius)?;
    if cells.contains(&0) {
        return Err(Error::InvalidParams("diamond needs at least one cell per axis".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = cell / 4.0;
    let bond = q * 3f64.sqrt();
    let lim = [4 * cells[0] as i64, 4 * cells[1] as i64, 4 * cells[2] as i64];
    // Sites in quarter-cell units: FCC sites have all-even coordinates summing
    // to a multiple of 4; the second sublattice is offset by (1, 1, 1).
    let mut index: HashMap<[i64; 3], u32> = HashMap::new();
    let mut nodes = Vec::new();
    let mut sites = Vec::new();
    for z in 0..lim[2] {
        for y in 0..lim[1] {
            for x in 0..lim[0] {
                let s = [x, y, z];
                let fcc = s.iter().all(|c| c % 2 == 0) && (x + y + z) % 4 == 0;
                let shifted = s.iter().all(|c| c % 2 == 1) && (x + y + z - 3) % 4 == 0;
                if fcc || shifted {
                    let jit = Vec3::new(
                        rng.gen_range(-1.0..=1.0),
                        rng.gen_range(-1.0..=1.0),
                        rng.gen_range(-1.0..=1.0),
                    ) * (jitter * bond);
                    let c = Vec3::new(x as f64, y as f64, z as f64) * q + jit;
                    index.insert(s, nodes.len() as u32);
                    nodes.push(mk_node(c, radius));
                    sites.push((s, shifted));
                }
            }
        }
    }
    let mut struts = Vec::new();
    for &(s, shifted) in &sites {
        if !shifted {
            continue;
        }
        let me = index[&s];
        for off in [[-1, -1, -1], [-1, 1, 1], [1, -1, 1], [1, 1, -1]] {
            let t = [s[0] + off[0], s[1] + off[1], s[2] + off[2]];
            if let Some(&other) = index.get(&t) {
                struts.push(Strut::new(other.min(me), other.max(me)));
            }
        }
    }
    struts.sort_by_key(|s| s.nodes);
    // Drop isolated corner sites so every node carries at least one strut.
    let mut used = vec![false; nodes.len()];
    for s in &struts {
        used[s.nodes[0] as usize] = true;
        used[s.nodes[1] as usize] = true;
    }
    let mut remap = vec![u32::MAX; nodes.len()];
    let mut kept = Vec::new();
    for (i, n) in nodes.into_iter().enumerate() {
        if used[i] {
            remap[i] = kept.len() as u32;
            kept.push(n);
        }
    }
    for s in &mut struts {
        s.nodes = [remap[s.nodes[0] as usize], remap[s.nodes[1] as usize]];
    }
    Lattice::from_parts(kept, struts)
}
