//! Binary STL: 80-byte header, u32 triangle count, 50-byte records
//! (normal and three vertices as f32 triples, u16 attribute).

use std::io::{Seek, SeekFrom, Write};

use crate::{Error, Result, Vec3};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Triangle(pub [Vec3; 3]);

impl Triangle {
    /// Unit normal from right-hand winding; zero for degenerate triangles.
    pub fn normal(&self) -> Vec3 {
        let [a, b, c] = self.0;
        let n = (b - a).cross(&(c - a));
        let len = n.norm();
        if len > 0.0 {
            n / len
        } else {
            Vec3::zeros()
        }
    }

    pub fn flipped(&self) -> Self {
        let [a, b, c] = self.0;
        Triangle([a, c, b])
    }

    pub fn centroid(&self) -> Vec3 {
        (self.0[0] + self.0[1] + self.0[2]) / 3.0
    }

    pub fn area(&self) -> f64 {
        let [a, b, c] = self.0;
        0.5 * (b - a).cross(&(c - a)).norm()
    }
}

pub const STL_HEADER: usize = 80;
pub const STL_RECORD: usize = 50;

fn record(t: &Triangle) -> [u8; STL_RECORD] {
    let mut out = [0u8; STL_RECORD];
    let n = t.normal();
    let mut at = 0;
    for v in std::iter::once(&n).chain(t.0.iter()) {
        for c in v.iter() {
            out[at..at + 4].copy_from_slice(&(*c as f32).to_le_bytes());
            at += 4;
        }
    }
    out
}

/// Streams triangles to a seekable sink and patches the count on finish.
pub struct StlWriter<W: Write + Seek> {
    sink: W,
    count: u64,
}

impl<W: Write + Seek> StlWriter<W> {
    pub fn new(mut sink: W) -> Result<Self> {
        let mut header = [0u8; STL_HEADER];
        let tag = b"metamesh binary STL";
        header[..tag.len()].copy_from_slice(tag);
        sink.write_all(&header)?;
        sink.write_all(&0u32.to_le_bytes())?;
        Ok(Self { sink, count: 0 })
    }

    pub fn write(&mut self, tris: &[Triangle]) -> Result<()> {
        let mut buf = Vec::with_capacity(tris.len() * STL_RECORD);
        for t in tris {
            buf.extend_from_slice(&record(t));
        }
        self.sink.write_all(&buf)?;
        self.count += tris.len() as u64;
        Ok(())
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn finish(mut self) -> Result<W> {
        let count = u32::try_from(self.count)
            .map_err(|_| Error::Config(format!("{} triangles exceed the STL u32 count", self.count)))?;
        self.sink.flush()?;
        self.sink.seek(SeekFrom::Start(STL_HEADER as u64))?;
        self.sink.write_all(&count.to_le_bytes())?;
        self.sink.seek(SeekFrom::End(0))?;
        self.sink.flush()?;
        Ok(self.sink)
    }
}

pub fn write_stl(tris: &[Triangle], path: impl AsRef<std::path::Path>) -> Result<()> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut w = StlWriter::new(f)?;
    w.write(tris)?;
    w.finish()?;
    Ok(())
}

/// One STL facet as stored: normal, then three vertices.
pub type StlFacet = ([f32; 3], [[f32; 3]; 3]);

/// Parses a binary STL into its facets.
pub fn read_stl(buf: &[u8]) -> Result<Vec<StlFacet>> {
    if buf.len() < STL_HEADER + 4 {
        return Err(Error::Parse { offset: buf.len() as u64, msg: "truncated STL header".into() });
    }
    let count = u32::from_le_bytes(buf[80..84].try_into().unwrap()) as usize;
    if buf.len() != STL_HEADER + 4 + count * STL_RECORD {
        return Err(Error::Parse { offset: 80, msg: format!("STL size does not match count {count}") });
    }
    let f = |at: usize| f32::from_le_bytes(buf[at..at + 4].try_into().unwrap());
    Ok((0..count)
        .map(|k| {
            let base = STL_HEADER + 4 + k * STL_RECORD;
            let v = |j: usize| [f(base + 12 * j), f(base + 12 * j + 4), f(base + 12 * j + 8)];
            (v(0), [v(1), v(2), v(3)])
        })
        .collect())
}
