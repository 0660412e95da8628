//! Fixed-point arc compression.
//!
//! An arc is packed into 128 bits: the major axis `a` and the center offset
//! from the node in spherical coordinates (`n` radial bits, `m` polar bits,
//! `m + 1` azimuthal bits), the minor axis length in `n` bits, and both
//! parameter endpoints in `t_bits` bits each. The minor axis direction is not
//! stored; it is rebuilt as `unit(d × a')` from the strut's outward axis `d`.
//! Arcs outside the quantizer ranges fall back to 352-bit [`EscapeRecord`]s.

use std::f64::consts::{PI, TAU};

use crate::conic::Ellipse;
use crate::metamesh::Arc;
use crate::{Error, Result, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuantConfig {
    pub n: u8,
    pub m: u8,
    pub t_bits: u8,
    pub r_min: f64,
    pub r_max: f64,
}

impl QuantConfig {
    pub fn new(n: u8, m: u8, r_min: f64, r_max: f64) -> Result<Self> {
        if !(r_min > 0.0 && r_max >= r_min && r_max.is_finite()) {
            return Err(Error::Config(format!("bad radius range [{r_min}, {r_max}]")));
        }
        let t_bits = t_bits_for(n as u32, m as u32)
            .ok_or_else(|| Error::Config(format!("(n={n}, m={m}) leaves no room for t within 128 bits")))?;
        Ok(Self { n, m, t_bits, r_min, r_max })
    }

    /// Bits used by the geometric fields.
    pub fn geometry_bits(&self) -> u32 {
        geometry_bits(self.n as u32, self.m as u32)
    }

    pub fn total_bits(&self) -> u32 {
        self.geometry_bits() + 2 * self.t_bits as u32
    }

    pub fn a_range(&self) -> (f64, f64) {
        (self.r_min, 4.0 * self.r_max)
    }

    pub fn b_range(&self) -> (f64, f64) {
        (0.1 * self.r_min, self.r_max)
    }

    pub fn c_range(&self) -> (f64, f64) {
        (0.0, self.r_max)
    }

    /// Worst-case point error of a decoded arc, in mm.
    pub fn error_bound(&self) -> f64 {
        error_bound(self.n, self.m) * self.r_max
    }
}

fn geometry_bits(n: u32, m: u32) -> u32 {
    3 * n + 4 * m + 2
}

fn t_bits_for(n: u32, m: u32) -> Option<u8> {
    let geom = geometry_bits(n, m);
    if geom >= 128 {
        return None;
    }
    let t = ((128 - geom) / 2).min(24);
    (t >= 8).then_some(t as u8)
}

/// Closed-form error bound for `(n, m)` as a multiple of `R_max`.
pub fn error_bound(n: u8, m: u8) -> f64 {
    let rad = 2f64.powi(2 * n as i32 + 2);
    let ang = 32.0 * PI * PI / 2f64.powi(2 * m as i32 + 2);
    (17.0 / rad + ang).sqrt() + (1.0 / rad + ang).sqrt()
}

/// Cheapest `(n, m)` whose bound is at most `target · R_max`; ties prefer smaller `n`.
pub fn choose_bits(target: f64, r_min: f64, r_max: f64) -> Result<QuantConfig> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(Error::Config(format!("target {target} outside (0, 1]")));
    }
    let mut best: Option<(u32, u8, u8)> = None;
    for n in 1..=40u8 {
        for m in 1..=30u8 {
            if t_bits_for(n as u32, m as u32).is_none() || error_bound(n, m) > target {
                continue;
            }
            let cost = geometry_bits(n as u32, m as u32);
            if best.is_none_or(|(c, bn, _)| cost < c || (cost == c && n < bn)) {
                best = Some((cost, n, m));
            }
        }
    }
    let (_, n, m) = best.ok_or_else(|| Error::Config(format!("target {target} is infeasible within 128 bits")))?;
    QuantConfig::new(n, m, r_min, r_max)
}

/// A packed 128-bit arc record.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CompressedArc(pub u128);

/// Uncompressed fallback: `a`, `b`, center offset, `t1`, `t2` as 11 f32.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EscapeRecord(pub [f32; 11]);

impl EscapeRecord {
    pub fn to_bytes(&self) -> [u8; 44] {
        let mut out = [0u8; 44];
        for (k, v) in self.0.iter().enumerate() {
            out[4 * k..4 * k + 4].copy_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(b: &[u8; 44]) -> Self {
        let mut v = [0f32; 11];
        for (k, x) in v.iter_mut().enumerate() {
            *x = f32::from_le_bytes(b[4 * k..4 * k + 4].try_into().unwrap());
        }
        Self(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Encoded {
    Packed(CompressedArc),
    Escape(EscapeRecord),
}

/// The strut end an arc belongs to: node center and outward axis `d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeFrame {
    pub origin: Vec3,
    pub axis: Vec3,
}

impl From<&crate::lattice::StrutEnd> for NodeFrame {
    fn from(e: &crate::lattice::StrutEnd) -> Self {
        Self { origin: e.center, axis: e.outward() }
    }
}

fn quantize(v: f64, lo: f64, hi: f64, bits: u8) -> u128 {
    let cells = 1u128 << bits;
    let f = ((v - lo) / (hi - lo) * cells as f64).floor();
    if f <= 0.0 {
        0
    } else {
        (f as u128).min(cells - 1)
    }
}

fn dequantize(q: u128, lo: f64, hi: f64, bits: u8) -> f64 {
    lo + (q as f64 + 0.5) * (hi - lo) / (1u128 << bits) as f64
}

fn spherical(v: &Vec3) -> (f64, f64, f64) {
    let r = v.norm();
    if r == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let theta = (v.z / r).clamp(-1.0, 1.0).acos();
    let phi = v.y.atan2(v.x).rem_euclid(TAU);
    (r, theta, phi)
}

fn cartesian(r: f64, theta: f64, phi: f64) -> Vec3 {
    let (st, ct) = theta.sin_cos();
    Vec3::new(r * st * phi.cos(), r * st * phi.sin(), r * ct)
}

struct Packer {
    word: u128,
    at: u32,
}

impl Packer {
    fn put(&mut self, v: u128, bits: u8) {
        self.word |= v << self.at;
        self.at += bits as u32;
    }
}

struct Unpacker {
    word: u128,
    at: u32,
}

impl Unpacker {
    fn get(&mut self, bits: u8) -> u128 {
        let v = (self.word >> self.at) & ((1u128 << bits) - 1);
        self.at += bits as u32;
        v
    }
}

fn in_range(v: f64, (lo, hi): (f64, f64)) -> bool {
    v >= lo && v <= hi
}

fn minor_direction(axis: &Vec3, a: &Vec3) -> Vec3 {
    let c = axis.cross(a);
    let len = c.norm();
    if len > 1e-300 && len.is_finite() {
        c / len
    } else {
        crate::lattice::perpendicular(&if a.norm() > 0.0 { *a } else { *axis })
    }
}

pub fn escape_record(arc: &Arc, frame: &NodeFrame) -> EscapeRecord {
    let e = &arc.ellipse;
    let c = e.center - frame.origin;
    EscapeRecord([
        e.a.x as f32, e.a.y as f32, e.a.z as f32,
        e.b.x as f32, e.b.y as f32, e.b.z as f32,
        c.x as f32, c.y as f32, c.z as f32,
        arc.t1 as f32, arc.t2 as f32,
    ])
}

/// Packs an arc, or returns an escape record when it falls outside the
/// quantizer ranges, its minor axis is not along `d × a`, or `a` leans so far
/// toward `d` that no strut section could produce it.
pub fn encode_arc(arc: &Arc, cfg: &QuantConfig, frame: &NodeFrame) -> Encoded {
    let e = &arc.ellipse;
    let offset = e.center - frame.origin;
    let (ar, at, ap) = spherical(&e.a);
    let br = e.b.norm();
    let (cr, ct, cp) = spherical(&offset);
    let dir = frame.axis.cross(&e.a);
    // Sections of a strut satisfy |d × a| >= |b|. Closer to the axis, the
    // rebuilt minor direction would magnify the direction error of `a`. The
    // 1% slack lets already-quantized arcs re-encode.
    let aligned = dir.norm() >= 0.99 * br && dir.norm() > 0.0 && e.b.dot(&dir) >= (1.0 - 1e-9) * br * dir.norm();
    if !(in_range(ar, cfg.a_range()) && in_range(br, cfg.b_range()) && in_range(cr, cfg.c_range()) && aligned)
        || !(arc.t2 > arc.t1 && arc.t2 - arc.t1 <= TAU + 1e-12)
    {
        return Encoded::Escape(escape_record(arc, frame));
    }
    let (n, m, tb) = (cfg.n, cfg.m, cfg.t_bits);
    let q1 = quantize(arc.t1.rem_euclid(TAU), 0.0, TAU, tb);
    let extent = arc.t2 - arc.t1;
    let full = extent >= TAU - 1e-12;
    let mut q2 = if full { q1 } else { quantize(arc.t2.rem_euclid(TAU), 0.0, TAU, tb) };
    // Both ends in one cell: the arc is either shorter than a cell or misses
    // less than a cell of the full turn. Only the short case needs a bump.
    if !full && q2 == q1 && extent < PI {
        q2 = (q1 + 1) % (1u128 << tb);
    }
    let mut p = Packer { word: 0, at: 0 };
    let (alo, ahi) = cfg.a_range();
    p.put(quantize(ar, alo, ahi, n), n);
    p.put(quantize(at, 0.0, PI, m), m);
    p.put(quantize(ap, 0.0, TAU, m + 1), m + 1);
    let (blo, bhi) = cfg.b_range();
    p.put(quantize(br, blo, bhi, n), n);
    let (clo, chi) = cfg.c_range();
    p.put(quantize(cr, clo, chi, n), n);
    p.put(quantize(ct, 0.0, PI, m), m);
    p.put(quantize(cp, 0.0, TAU, m + 1), m + 1);
    p.put(q1, tb);
    p.put(q2, tb);
    debug_assert!(p.at <= 128);
    Encoded::Packed(CompressedArc(p.word))
}

pub fn decode_arc(rec: &CompressedArc, cfg: &QuantConfig, frame: &NodeFrame, neighbor: Option<u32>) -> Arc {
    let (n, m, tb) = (cfg.n, cfg.m, cfg.t_bits);
    let mut u = Unpacker { word: rec.0, at: 0 };
    let (alo, ahi) = cfg.a_range();
    let ar = dequantize(u.get(n), alo, ahi, n);
    let at = dequantize(u.get(m), 0.0, PI, m);
    let ap = dequantize(u.get(m + 1), 0.0, TAU, m + 1);
    let (blo, bhi) = cfg.b_range();
    let br = dequantize(u.get(n), blo, bhi, n);
    let (clo, chi) = cfg.c_range();
    let cr = dequantize(u.get(n), clo, chi, n);
    let ct = dequantize(u.get(m), 0.0, PI, m);
    let cp = dequantize(u.get(m + 1), 0.0, TAU, m + 1);
    let (q1, q2) = (u.get(tb), u.get(tb));
    let t1 = dequantize(q1, 0.0, TAU, tb);
    let mut t2 = dequantize(q2, 0.0, TAU, tb);
    if q2 <= q1 {
        t2 += TAU;
    }
    let a = cartesian(ar, at, ap);
    let b = minor_direction(&frame.axis, &a) * br;
    let center = frame.origin + cartesian(cr, ct, cp);
    Arc { ellipse: Ellipse { center, a, b }, t1, t2, neighbor }
}

pub fn decode_escape(rec: &EscapeRecord, frame: &NodeFrame, neighbor: Option<u32>) -> Arc {
    let v = rec.0.map(|x| x as f64);
    Arc {
        ellipse: Ellipse {
            a: Vec3::new(v[0], v[1], v[2]),
            b: Vec3::new(v[3], v[4], v[5]),
            center: frame.origin + Vec3::new(v[6], v[7], v[8]),
        },
        t1: v[9],
        t2: v[10],
        neighbor,
    }
}
