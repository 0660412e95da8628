//! LTC1 binary lattice format, little-endian:
//! magic `LTC1`, u64 node count, u64 strut count, f32 r_min, f32 r_max,
//! nodes as `(f32 x, f32 y, f32 z, f32 r)`, struts as `(u64 i0, u64 i1)`.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use super::{Lattice, Node, Strut};
use crate::{Error, Result, Vec3};

pub const LTC_MAGIC: &[u8; 4] = b"LTC1";
const HEADER: usize = 28;
const NODE_REC: usize = 16;
const STRUT_REC: usize = 16;

fn perr(offset: usize, msg: impl Into<String>) -> Error {
    Error::Parse { offset: offset as u64, msg: msg.into() }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> Option<[u8; N]> {
        let out = self.buf.get(self.pos..self.pos + N)?.try_into().ok()?;
        self.pos += N;
        Some(out)
    }
    fn f32(&mut self) -> Option<f32> {
        self.take::<4>().map(f32::from_le_bytes)
    }
    fn u64(&mut self) -> Option<u64> {
        self.take::<8>().map(u64::from_le_bytes)
    }
}

/// Parses an LTC1 buffer. Errors carry the byte offset of the offending field or record.
pub fn parse_lattice(buf: &[u8]) -> Result<Lattice> {
    let mut c = Cursor { buf, pos: 0 };
    let magic = c.take::<4>().ok_or_else(|| perr(0, "truncated header"))?;
    if &magic != LTC_MAGIC {
        return Err(perr(0, "bad magic, expected LTC1"));
    }
    let n_nodes = c.u64().ok_or_else(|| perr(4, "truncated header"))?;
    let n_struts = c.u64().ok_or_else(|| perr(12, "truncated header"))?;
    let r_min = c.f32().ok_or_else(|| perr(20, "truncated header"))?;
    let r_max = c.f32().ok_or_else(|| perr(24, "truncated header"))?;
    if !(r_min.is_finite() && r_max.is_finite()) || r_min <= 0.0 || r_min > r_max {
        return Err(perr(20, format!("bad radius bounds [{r_min}, {r_max}]")));
    }
    if n_nodes > u32::MAX as u64 || n_struts > u32::MAX as u64 {
        return Err(perr(4, "counts exceed 2^32"));
    }

    let node_bytes = n_nodes as usize * NODE_REC;
    if buf.len() < HEADER + node_bytes {
        return Err(perr(buf.len(), format!("node count mismatch: header says {n_nodes}")));
    }
    let mut nodes = Vec::with_capacity(n_nodes as usize);
    for i in 0..n_nodes as usize {
        let at = c.pos;
        let (x, y, z, r) = (c.f32().unwrap(), c.f32().unwrap(), c.f32().unwrap(), c.f32().unwrap());
        if !(x.is_finite() && y.is_finite() && z.is_finite() && r.is_finite()) {
            return Err(perr(at, format!("node {i}: non-finite value")));
        }
        if r <= 0.0 {
            return Err(perr(at + 12, format!("node {i}: radius {r} must be > 0")));
        }
        if r < r_min || r > r_max {
            return Err(perr(at + 12, format!("node {i}: radius {r} outside [{r_min}, {r_max}]")));
        }
        nodes.push(Node { center: Vec3::new(x as f64, y as f64, z as f64), radius: r as f64 });
    }

    let rest = buf.len() - c.pos;
    let want = n_struts as usize * STRUT_REC;
    if rest != want {
        let found = rest / STRUT_REC;
        let msg = if rest.is_multiple_of(STRUT_REC) {
            format!("strut count mismatch: header says {n_struts}, body holds {found}")
        } else {
            format!("strut count mismatch: header says {n_struts}, body holds {found} and a partial record")
        };
        return Err(perr(c.pos + want.min(rest), msg));
    }
    let mut struts = Vec::with_capacity(n_struts as usize);
    let mut seen = HashSet::with_capacity(n_struts as usize);
    for i in 0..n_struts as usize {
        let at = c.pos;
        let (i0, i1) = (c.u64().unwrap(), c.u64().unwrap());
        if i0 >= n_nodes || i1 >= n_nodes {
            return Err(perr(at, format!("strut {i}: dangling node index ({i0}, {i1})")));
        }
        if i0 == i1 {
            return Err(perr(at, format!("strut {i}: zero-length (both ends on node {i0})")));
        }
        let (a, b) = (&nodes[i0 as usize], &nodes[i1 as usize]);
        let length = (a.center - b.center).norm();
        if length == 0.0 {
            return Err(perr(at, format!("strut {i}: zero-length (coincident nodes)")));
        }
        if (a.radius - b.radius).abs() >= length {
            return Err(perr(at, format!("strut {i}: radius difference exceeds length")));
        }
        if !seen.insert((i0.min(i1), i0.max(i1))) {
            return Err(perr(at, format!("strut {i}: duplicate strut ({i0}, {i1})")));
        }
        struts.push(Strut::new(i0 as u32, i1 as u32));
    }
    Lattice::new(nodes, struts, r_min as f64, r_max as f64)
        .map_err(|e| perr(0, e.to_string()))
}

/// Encodes a lattice as LTC1. Coordinates are narrowed to f32.
pub fn serialize_lattice(lattice: &Lattice) -> Vec<u8> {
    let mut out = Vec::with_capacity(
        HEADER + lattice.num_nodes() * NODE_REC + lattice.num_struts() * STRUT_REC,
    );
    out.extend_from_slice(LTC_MAGIC);
    out.extend_from_slice(&(lattice.num_nodes() as u64).to_le_bytes());
    out.extend_from_slice(&(lattice.num_struts() as u64).to_le_bytes());
    out.extend_from_slice(&(lattice.r_min() as f32).to_le_bytes());
    out.extend_from_slice(&(lattice.r_max() as f32).to_le_bytes());
    for n in lattice.nodes() {
        for v in [n.center.x, n.center.y, n.center.z, n.radius] {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    for s in lattice.struts() {
        out.extend_from_slice(&(s.nodes[0] as u64).to_le_bytes());
        out.extend_from_slice(&(s.nodes[1] as u64).to_le_bytes());
    }
    out
}

pub fn read_lattice(path: impl AsRef<Path>) -> Result<Lattice> {
    let mut buf = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut buf)?;
    parse_lattice(&buf)
}

pub fn write_lattice(lattice: &Lattice, path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(&serialize_lattice(lattice))?;
    f.flush()?;
    Ok(())
}
