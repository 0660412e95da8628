//! The encoded metamesh and its `MMC1` cache file.
//!
//! File layout, little-endian:
//!
//! | field | size |
//! |---|---|
//! | magic `MMC1`, u32 version | 8 |
//! | n, m, t_bits, reserved (u8 each) | 4 |
//! | f32 r_min, f32 r_max | 8 |
//! | u32 element width | 4 |
//! | u64 struts, u64 arcs, u64 escapes | 24 |
//! | u64 lattice length, LTC1 lattice bytes | 8 + L |
//! | index prefix, (struts + 1) × u32 | |
//! | arcs in loop 0, struts × u32 | |
//! | flags, struts × u8 (bit 0: quarantined) | |
//! | neighbor per arc, arcs × u32 (`u32::MAX` for cap arcs) | |
//! | lane arrays, arcs × 16 bytes | |
//! | escapes, each u32 arc id + 44 bytes | |

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::codec::{decode_arc, decode_escape, encode_arc, CompressedArc, Encoded, EscapeRecord, NodeFrame, QuantConfig};
use crate::lattice::{parse_lattice, serialize_lattice, Lattice};
use crate::metamesh::{Arc, ArcLoop, MetaMesh};
use crate::soa::{build_index, IndexRegion, SoABuffer, RECORD_BYTES};
use crate::{Error, Result};

pub const MMC_MAGIC: &[u8; 4] = b"MMC1";
pub const MMC_VERSION: u32 = 1;
pub const NO_NEIGHBOR: u32 = u32::MAX;
const FLAG_QUARANTINED: u8 = 1;

/// Encoded arcs of one strut: loop 0 first, then loop 1.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedStrut {
    pub loop0_len: u32,
    pub records: Vec<Encoded>,
    pub neighbors: Vec<u32>,
}

impl EncodedStrut {
    pub fn quarantined() -> Self {
        Self { loop0_len: 0, records: Vec::new(), neighbors: Vec::new() }
    }
}

pub fn encode_strut(lattice: &Lattice, cfg: &QuantConfig, loops: &[ArcLoop; 2]) -> EncodedStrut {
    let mut out = EncodedStrut { loop0_len: loops[0].arcs.len() as u32, records: Vec::new(), neighbors: Vec::new() };
    for lp in loops {
        let frame = NodeFrame::from(&lattice.strut_end(lp.strut, lp.end));
        for arc in &lp.arcs {
            out.records.push(encode_arc(arc, cfg, &frame));
            out.neighbors.push(arc.neighbor.unwrap_or(NO_NEIGHBOR));
        }
    }
    out
}

/// Decodes arcs of one strut straight from its encoded records.
pub fn decode_strut(lattice: &Lattice, cfg: &QuantConfig, strut: u32, enc: &EncodedStrut) -> [ArcLoop; 2] {
    let split = enc.loop0_len as usize;
    [0usize, 1].map(|end| {
        let frame = NodeFrame::from(&lattice.strut_end(strut, end as u8));
        let slots = if end == 0 { 0..split } else { split..enc.records.len() };
        let arcs: Vec<Arc> = slots
            .map(|k| {
                let nb = (enc.neighbors[k] != NO_NEIGHBOR).then_some(enc.neighbors[k]);
                match &enc.records[k] {
                    Encoded::Packed(c) => decode_arc(c, cfg, &frame, nb),
                    Encoded::Escape(e) => decode_escape(e, &frame, nb),
                }
            })
            .collect();
        ArcLoop { strut, end: end as u8, junctions: arcs.iter().map(Arc::end).collect(), arcs }
    })
}

#[derive(Debug)]
pub struct MetaMeshStore {
    pub cfg: QuantConfig,
    pub lattice: Lattice,
    pub index: IndexRegion,
    pub loop0_len: Vec<u32>,
    pub flags: Vec<u8>,
    pub neighbors: Vec<u32>,
    pub data: SoABuffer,
    pub escapes: BTreeMap<u32, EscapeRecord>,
}

impl MetaMeshStore {
    /// Lays out already-encoded struts. `None` marks a quarantined strut.
    pub fn assemble(
        lattice: Lattice,
        cfg: QuantConfig,
        element: usize,
        struts: &[Option<EncodedStrut>],
    ) -> Result<Self> {
        let counts: Vec<u32> = struts.iter().map(|s| s.as_ref().map_or(0, |e| e.records.len() as u32)).collect();
        let index = build_index(&counts, u32::MAX as u64)?;
        let data = SoABuffer::new(element, index.total())?;
        let mut store = Self {
            cfg,
            lattice,
            loop0_len: Vec::with_capacity(struts.len()),
            flags: Vec::with_capacity(struts.len()),
            neighbors: Vec::with_capacity(index.total()),
            data,
            escapes: BTreeMap::new(),
            index,
        };
        for (s, enc) in struts.iter().enumerate() {
            let Some(enc) = enc else {
                store.loop0_len.push(0);
                store.flags.push(FLAG_QUARANTINED);
                continue;
            };
            store.loop0_len.push(enc.loop0_len);
            store.flags.push(0);
            store.neighbors.extend_from_slice(&enc.neighbors);
            let base = store.index.range(s as u32).start;
            let recs: Vec<CompressedArc> = enc
                .records
                .iter()
                .enumerate()
                .map(|(k, r)| match r {
                    Encoded::Packed(c) => *c,
                    Encoded::Escape(e) => {
                        store.escapes.insert((base + k) as u32, *e);
                        CompressedArc(0)
                    }
                })
                .collect();
            store.data.write_arcs(&store.index, s as u32, &recs)?;
        }
        Ok(store)
    }

    pub fn encode(lattice: &Lattice, mesh: &MetaMesh, cfg: QuantConfig, element: usize) -> Result<Self> {
        let struts: Vec<_> = mesh.loops.iter().map(|l| l.as_ref().map(|l| encode_strut(lattice, &cfg, l))).collect();
        Self::assemble(lattice.clone(), cfg, element, &struts)
    }

    pub fn num_struts(&self) -> usize {
        self.loop0_len.len()
    }

    pub fn num_arcs(&self) -> usize {
        self.index.total()
    }

    pub fn is_quarantined(&self, strut: u32) -> bool {
        self.flags[strut as usize] & FLAG_QUARANTINED != 0
    }

    pub fn quarantined(&self) -> Vec<u32> {
        (0..self.num_struts() as u32).filter(|&s| self.is_quarantined(s)).collect()
    }

    /// Decodes both loops of `strut`; junctions are the decoded arc ends.
    pub fn decode_loops(&self, strut: u32) -> Option<[ArcLoop; 2]> {
        if self.is_quarantined(strut) {
            return None;
        }
        let range = self.index.range(strut);
        let split = range.start + self.loop0_len[strut as usize] as usize;
        let mut out = [range.start..split, split..range.end].into_iter().enumerate().map(|(end, slots)| {
            let frame = NodeFrame::from(&self.lattice.strut_end(strut, end as u8));
            let arcs: Vec<Arc> = slots
                .map(|slot| {
                    let nb = self.neighbors[slot];
                    let nb = (nb != NO_NEIGHBOR).then_some(nb);
                    match self.escapes.get(&(slot as u32)) {
                        Some(e) => decode_escape(e, &frame, nb),
                        None => decode_arc(&self.data.load(slot), &self.cfg, &frame, nb),
                    }
                })
                .collect();
            let junctions = arcs.iter().map(Arc::end).collect();
            ArcLoop { strut, end: end as u8, arcs, junctions }
        });
        Some([out.next().unwrap(), out.next().unwrap()])
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        let lattice = serialize_lattice(&self.lattice);
        w.write_all(MMC_MAGIC)?;
        w.write_all(&MMC_VERSION.to_le_bytes())?;
        w.write_all(&[self.cfg.n, self.cfg.m, self.cfg.t_bits, 0])?;
        w.write_all(&(self.cfg.r_min as f32).to_le_bytes())?;
        w.write_all(&(self.cfg.r_max as f32).to_le_bytes())?;
        w.write_all(&(self.data.element_width() as u32).to_le_bytes())?;
        for v in [self.num_struts(), self.num_arcs(), self.escapes.len()] {
            w.write_all(&(v as u64).to_le_bytes())?;
        }
        w.write_all(&(lattice.len() as u64).to_le_bytes())?;
        w.write_all(&lattice)?;
        let mut buf = Vec::with_capacity(8 * self.num_struts() + 4 * self.num_arcs());
        for v in self.index.prefix().iter().chain(&self.loop0_len) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        buf.extend_from_slice(&self.flags);
        for v in &self.neighbors {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        w.write_all(&self.data.lane_bytes())?;
        for (id, e) in &self.escapes {
            w.write_all(&id.to_le_bytes())?;
            w.write_all(&e.to_bytes())?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader { buf, pos: 0 };
        if r.bytes(4)? != MMC_MAGIC {
            return Err(Error::Parse { offset: 0, msg: "bad magic, expected MMC1".into() });
        }
        let version = r.u32()?;
        if version != MMC_VERSION {
            return Err(Error::Parse { offset: 4, msg: format!("unsupported version {version}") });
        }
        let bits = r.bytes(4)?;
        let (n, m, t_bits) = (bits[0], bits[1], bits[2]);
        let (r_min, r_max) = (r.f32()? as f64, r.f32()? as f64);
        let cfg = QuantConfig::new(n, m, r_min, r_max).map_err(|e| Error::Parse { offset: 8, msg: e.to_string() })?;
        if cfg.t_bits != t_bits {
            return Err(Error::Parse { offset: 10, msg: format!("t_bits {t_bits} does not match (n, m)") });
        }
        let element = r.u32()? as usize;
        let (struts, arcs, escapes) = (r.u64()? as usize, r.u64()? as usize, r.u64()? as usize);
        let lat_len = r.u64()? as usize;
        let lattice_at = r.pos;
        let lattice = parse_lattice(r.bytes(lat_len)?).map_err(|e| match e {
            Error::Parse { offset, msg } => Error::Parse { offset: offset + lattice_at as u64, msg },
            other => other,
        })?;
        if lattice.num_struts() != struts {
            return Err(Error::Parse { offset: 24, msg: "strut count mismatch with embedded lattice".into() });
        }
        let prefix = (0..=struts).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let index = IndexRegion::from_prefix(prefix).map_err(|e| Error::Parse { offset: r.pos as u64, msg: e.to_string() })?;
        if index.total() != arcs {
            return Err(Error::Parse { offset: r.pos as u64, msg: "index total does not match arc count".into() });
        }
        let loop0_len = (0..struts).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let flags = r.bytes(struts)?.to_vec();
        let neighbors = (0..arcs).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let data_at = r.pos;
        let data = SoABuffer::from_lane_bytes(element, arcs, r.bytes(arcs * RECORD_BYTES)?)
            .map_err(|e| Error::Parse { offset: data_at as u64, msg: e.to_string() })?;
        let mut table = BTreeMap::new();
        for _ in 0..escapes {
            let id = r.u32()?;
            let rec: [u8; 44] = r.bytes(44)?.try_into().unwrap();
            table.insert(id, EscapeRecord::from_bytes(&rec));
        }
        if r.pos != buf.len() {
            return Err(Error::Parse { offset: r.pos as u64, msg: "trailing bytes".into() });
        }
        Ok(Self { cfg, lattice, index, loop0_len, flags, neighbors, data, escapes: table })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn bytes(&mut self, n: usize) -> Result<&'a [u8]> {
        let out = self
            .buf
            .get(self.pos..self.pos.saturating_add(n))
            .ok_or_else(|| Error::Parse { offset: self.pos as u64, msg: "truncated cache file".into() })?;
        self.pos += n;
        Ok(out)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes(8)?.try_into().unwrap()))
    }
    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.bytes(4)?.try_into().unwrap()))
    }
}
