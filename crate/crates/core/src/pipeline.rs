//! Batched, stage-overlapped lattice → STL pipeline.
//!
//! Four stages run on their own threads: ingest cuts the lattice into
//! batches, the metamesh stage computes and encodes each batch chunk by chunk
//! (a helper thread computes chunk `j + 1` while chunk `j` is encoded), the
//! triangulate stage decodes and meshes each batch once per chord error, and
//! the writer appends to one STL sink per chord error. Stages hand batches
//! over bounded channels. The triangulate → write channel is a rendezvous,
//! so at most two batches of triangles exist at once.
//!
//! Batch size follows `N_batch = floor(S_buffer / (S_triangle · N_strut))`.
//! After the first batch, `N_strut` is replaced by the observed average.

use std::io::{self, Seek, SeekFrom, Write};
use std::ops::Range;
use std::sync::mpsc::{sync_channel, Receiver, SyncSender};
use std::thread;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::QuantConfig;
use crate::lattice::Lattice;
use crate::metamesh::ArcLoop;
use crate::store::{decode_strut, EncodedStrut, MetaMeshStore};
use crate::triangulate::{ChordError, StlWriter, TriReport, Triangle, Triangulator};
use crate::warp::{execute_range, EngineConfig, ExecStats};
use crate::{Error, Result};

pub const DEFAULT_BUFFER_BYTES: u64 = 4_000_000;
/// Binary STL record size.
pub const STL_TRIANGLE_BYTES: u64 = 50;
pub const DEFAULT_TRIANGLES_PER_STRUT: u64 = 20;
pub const DEFAULT_CHUNKS: u32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub buffer_bytes: u64,
    pub triangle_bytes: u64,
    pub triangles_per_strut: u64,
    /// Struts per batch.
    pub batch_struts: u64,
    pub chunks: u32,
}

/// Applies the batch-size formula with the default chunk count.
pub fn batch_size(buffer_bytes: u64, triangle_bytes: u64, triangles_per_strut: u64) -> Result<BatchConfig> {
    BatchConfig::new(buffer_bytes, triangle_bytes, triangles_per_strut, DEFAULT_CHUNKS)
}

impl BatchConfig {
    pub fn new(buffer_bytes: u64, triangle_bytes: u64, triangles_per_strut: u64, chunks: u32) -> Result<Self> {
        if buffer_bytes == 0 || triangle_bytes == 0 || triangles_per_strut == 0 || chunks == 0 {
            return Err(Error::Config("batch parameters must all be positive".into()));
        }
        let per_strut = triangle_bytes.saturating_mul(triangles_per_strut);
        if buffer_bytes < per_strut {
            return Err(Error::Config(format!(
                "buffer of {buffer_bytes} bytes cannot hold one strut ({per_strut} bytes)"
            )));
        }
        Ok(Self { buffer_bytes, triangle_bytes, triangles_per_strut, batch_struts: buffer_bytes / per_strut, chunks })
    }

    /// Recomputed for a new triangles-per-strut estimate. A strut larger than
    /// the buffer still gets a batch of its own.
    pub fn retuned(&self, triangles_per_strut: u64) -> Self {
        let t = triangles_per_strut.max(1);
        let batch_struts = (self.buffer_bytes / self.triangle_bytes.saturating_mul(t)).max(1);
        Self { triangles_per_strut: t, batch_struts, ..*self }
    }

    pub fn chunk_struts(&self) -> u64 {
        self.batch_struts.div_ceil(self.chunks as u64).max(1)
    }

    /// Splits a batch into at most `chunks` consecutive ranges; only the last may be short.
    pub fn chunk_ranges(&self, batch: Range<u32>) -> Vec<Range<u32>> {
        let step = self.chunk_struts().min(u32::MAX as u64) as u32;
        let mut out = Vec::new();
        let mut lo = batch.start;
        while lo < batch.end {
            let hi = lo.saturating_add(step).min(batch.end);
            out.push(lo..hi);
            lo = hi;
        }
        out
    }
}

impl Default for BatchConfig {
    fn default() -> Self {
        Self::new(DEFAULT_BUFFER_BYTES, STL_TRIANGLE_BYTES, DEFAULT_TRIANGLES_PER_STRUT, DEFAULT_CHUNKS).unwrap()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    #[default]
    Pipelined,
    Serial,
}

#[derive(Clone, Debug, Default)]
pub struct PipelineConfig {
    pub batch: BatchConfig,
    pub engine: EngineConfig,
    pub schedule: Schedule,
    /// Retune the batch size from the first batch's triangle count.
    pub adaptive: bool,
    /// Keep the encoded metamesh so it can be saved as a cache.
    pub keep_cache: bool,
}

/// Time one stage spent working, waiting for input, and waiting to hand off.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct StageStats {
    pub busy_secs: f64,
    pub starved_secs: f64,
    pub blocked_secs: f64,
    pub wall_secs: f64,
    pub batches: u64,
}

impl StageStats {
    pub fn stall_secs(&self) -> f64 {
        self.starved_secs + self.blocked_secs
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct PipelineStats {
    pub schedule: Option<Schedule>,
    pub batch: Option<BatchConfig>,
    /// Batch configuration in effect after retuning.
    pub final_batch: Option<BatchConfig>,
    pub batches: u64,
    pub chunks: u64,
    pub struts: u64,
    pub triangles: u64,
    pub bytes_written: u64,
    /// Largest triangle payload of one batch, summed over chord errors.
    pub peak_batch_bytes: u64,
    pub wall_secs: f64,
    pub ingest: StageStats,
    pub metamesh: StageStats,
    pub triangulate: StageStats,
    pub write: StageStats,
    /// Share of wall time the triangulate stage spent waiting on the writer.
    pub write_stall_fraction: f64,
    pub exec: ExecStats,
    pub reports: Vec<TriReport>,
}

pub struct PipelineOutput<W> {
    pub sinks: Vec<W>,
    pub stats: PipelineStats,
    pub store: Option<MetaMeshStore>,
}

/// A seekable sink that discards bytes and only tracks the length written.
#[derive(Clone, Copy, Debug, Default)]
pub struct CountingSink {
    pos: u64,
    len: u64,
}

impl CountingSink {
    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

impl Write for CountingSink {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.pos += buf.len() as u64;
        self.len = self.len.max(self.pos);
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

impl Seek for CountingSink {
    fn seek(&mut self, to: SeekFrom) -> io::Result<u64> {
        self.pos = match to {
            SeekFrom::Start(p) => p,
            SeekFrom::End(d) => self.len.saturating_add_signed(d),
            SeekFrom::Current(d) => self.pos.saturating_add_signed(d),
        };
        Ok(self.pos)
    }
}

struct MeshedBatch {
    range: Range<u32>,
    encoded: Vec<Option<EncodedStrut>>,
    chunks: u64,
    stats: ExecStats,
}

struct TriBatch {
    per_error: Vec<Vec<Triangle>>,
}

/// Computes and encodes one batch, overlapping the compute of the next
/// chunk with the encoding of the current one when `overlap` is set.
fn metamesh_batch(
    lattice: &Lattice,
    cfg: &QuantConfig,
    engine: &EngineConfig,
    chunks: Vec<Range<u32>>,
    overlap: bool,
) -> Result<MeshedBatch> {
    let range = chunks.first().map_or(0, |c| c.start)..chunks.last().map_or(0, |c| c.end);
    let mut out = MeshedBatch { range, encoded: Vec::new(), chunks: chunks.len() as u64, stats: ExecStats::default() };
    let mut absorb = |run: crate::warp::ChunkRun| {
        let t = Instant::now();
        out.encoded.extend(run.encode(lattice, cfg));
        let mut s = run.stats;
        s.encode_secs += t.elapsed().as_secs_f64();
        out.stats.merge(&s);
    };
    if !overlap || chunks.len() < 2 {
        for c in chunks {
            absorb(execute_range(lattice, c, engine)?);
        }
        return Ok(out);
    }
    thread::scope(|scope| {
        let (tx, rx) = sync_channel(1);
        scope.spawn(move || {
            for c in chunks {
                let r = execute_range(lattice, c, engine);
                let failed = r.is_err();
                if tx.send(r).is_err() || failed {
                    break;
                }
            }
        });
        for run in rx {
            absorb(run?);
        }
        Ok::<(), Error>(())
    })?;
    Ok(out)
}

fn decode_batch(lattice: &Lattice, cfg: &QuantConfig, b: &MeshedBatch) -> Vec<(u32, Option<[ArcLoop; 2]>)> {
    b.encoded
        .par_iter()
        .enumerate()
        .map(|(k, e)| {
            let s = b.range.start + k as u32;
            (s, e.as_ref().map(|e| decode_strut(lattice, cfg, s, e)))
        })
        .collect()
}

fn triangulate_batch(tris: &mut [Triangulator<'_>], items: &[(u32, Option<[ArcLoop; 2]>)]) -> TriBatch {
    TriBatch {
        per_error: tris
            .iter_mut()
            .map(|t| {
                let mut v = Vec::new();
                t.batch(items, &mut v);
                v
            })
            .collect(),
    }
}

fn observed_per_strut(b: &TriBatch, struts: usize) -> u64 {
    let total: usize = b.per_error.iter().map(Vec::len).sum();
    (total as u64).div_ceil(struts.max(1) as u64).max(1)
}

fn batch_bytes(b: &TriBatch) -> u64 {
    b.per_error.iter().map(|v| v.len() as u64 * STL_TRIANGLE_BYTES).sum()
}

fn timed_recv<T>(rx: &Receiver<T>, starved: &mut Duration) -> Option<T> {
    let t = Instant::now();
    let v = rx.recv().ok();
    *starved += t.elapsed();
    v
}

fn timed_send<T>(tx: &SyncSender<T>, v: T, blocked: &mut Duration) -> bool {
    let t = Instant::now();
    let ok = tx.send(v).is_ok();
    *blocked += t.elapsed();
    ok
}

fn finish_stage(start: Instant, starved: Duration, blocked: Duration, batches: u64) -> StageStats {
    let wall = start.elapsed();
    StageStats {
        busy_secs: wall.saturating_sub(starved + blocked).as_secs_f64(),
        starved_secs: starved.as_secs_f64(),
        blocked_secs: blocked.as_secs_f64(),
        wall_secs: wall.as_secs_f64(),
        batches,
    }
}

/// Runs the whole pipeline, writing one STL per chord error to the matching sink.
pub fn run<W: Write + Seek + Send>(
    lattice: &Lattice,
    cfg: &QuantConfig,
    errors: &[ChordError],
    sinks: Vec<W>,
    pcfg: &PipelineConfig,
) -> Result<PipelineOutput<W>> {
    if errors.is_empty() {
        return Err(Error::InvalidParams("at least one chord error is required".into()));
    }
    if errors.len() != sinks.len() {
        return Err(Error::InvalidParams(format!("{} chord errors but {} sinks", errors.len(), sinks.len())));
    }
    pcfg.engine.element_width()?;
    let start = Instant::now();
    let mut out = match pcfg.schedule {
        Schedule::Serial => run_serial(lattice, cfg, errors, sinks, pcfg)?,
        Schedule::Pipelined => run_pipelined(lattice, cfg, errors, sinks, pcfg)?,
    };
    let s = &mut out.stats;
    s.schedule = Some(pcfg.schedule);
    s.batch = Some(pcfg.batch);
    s.wall_secs = start.elapsed().as_secs_f64();
    s.struts = lattice.num_struts() as u64;
    s.triangles = s.reports.iter().map(|r| r.triangles).sum();
    s.write_stall_fraction = if s.wall_secs > 0.0 { s.triangulate.blocked_secs / s.wall_secs } else { 0.0 };
    Ok(out)
}

fn open_writers<W: Write + Seek>(sinks: Vec<W>) -> Result<Vec<StlWriter<W>>> {
    sinks.into_iter().map(|s| StlWriter::new(s).map_err(|e| sink_error(0, e))).collect()
}

fn sink_error(batches: usize, e: Error) -> Error {
    match e {
        Error::Io(source) => Error::Sink { batches, source },
        other => other,
    }
}

fn write_batch<W: Write + Seek>(writers: &mut [StlWriter<W>], b: &TriBatch, done: usize) -> Result<u64> {
    let mut bytes = 0;
    for (w, tris) in writers.iter_mut().zip(&b.per_error) {
        w.write(tris).map_err(|e| sink_error(done, e))?;
        bytes += tris.len() as u64 * STL_TRIANGLE_BYTES;
    }
    Ok(bytes)
}

fn finish_writers<W: Write + Seek>(writers: Vec<StlWriter<W>>, done: usize) -> Result<Vec<W>> {
    writers.into_iter().map(|w| w.finish().map_err(|e| sink_error(done, e))).collect()
}

fn build_store(
    lattice: &Lattice,
    cfg: &QuantConfig,
    engine: &EngineConfig,
    encoded: Option<Vec<Option<EncodedStrut>>>,
) -> Result<Option<MetaMeshStore>> {
    encoded.map(|e| MetaMeshStore::assemble(lattice.clone(), *cfg, engine.element_width()?, &e)).transpose()
}

fn run_serial<W: Write + Seek + Send>(
    lattice: &Lattice,
    cfg: &QuantConfig,
    errors: &[ChordError],
    sinks: Vec<W>,
    pcfg: &PipelineConfig,
) -> Result<PipelineOutput<W>> {
    let mut stats = PipelineStats::default();
    let mut writers = open_writers(sinks)?;
    let mut tris: Vec<Triangulator<'_>> = errors.iter().map(|&ce| Triangulator::new(lattice, ce)).collect();
    let mut cache = pcfg.keep_cache.then(Vec::new);
    let mut batch = pcfg.batch;
    let total = lattice.num_struts() as u32;
    let mut lo = 0u32;
    let mut bytes = 0;
    let (mut busy_m, mut busy_t, mut busy_w) = (Duration::ZERO, Duration::ZERO, Duration::ZERO);
    while lo < total {
        let hi = lo.saturating_add(batch.batch_struts.min(u32::MAX as u64) as u32).min(total);
        let t = Instant::now();
        let meshed = metamesh_batch(lattice, cfg, &pcfg.engine, batch.chunk_ranges(lo..hi), false)?;
        busy_m += t.elapsed();
        let t = Instant::now();
        let items = decode_batch(lattice, cfg, &meshed);
        let tb = triangulate_batch(&mut tris, &items);
        busy_t += t.elapsed();
        if stats.batches == 0 && pcfg.adaptive {
            batch = batch.retuned(observed_per_strut(&tb, items.len()));
        }
        stats.peak_batch_bytes = stats.peak_batch_bytes.max(batch_bytes(&tb));
        let t = Instant::now();
        bytes += write_batch(&mut writers, &tb, stats.batches as usize)?;
        busy_w += t.elapsed();
        stats.exec.merge(&meshed.stats);
        stats.chunks += meshed.chunks;
        if let Some(c) = cache.as_mut() {
            c.extend(meshed.encoded);
        }
        stats.batches += 1;
        lo = hi;
    }
    let sinks = finish_writers(writers, stats.batches as usize)?;
    let stage = |busy: Duration| StageStats {
        busy_secs: busy.as_secs_f64(),
        wall_secs: busy.as_secs_f64(),
        batches: stats.batches,
        ..Default::default()
    };
    stats.metamesh = stage(busy_m);
    stats.triangulate = stage(busy_t);
    stats.write = stage(busy_w);
    stats.ingest = stage(Duration::ZERO);
    stats.bytes_written = bytes;
    stats.final_batch = Some(batch);
    stats.reports = tris.into_iter().map(Triangulator::finish).collect();
    let store = build_store(lattice, cfg, &pcfg.engine, cache)?;
    Ok(PipelineOutput { sinks, stats, store })
}

fn run_pipelined<W: Write + Seek + Send>(
    lattice: &Lattice,
    cfg: &QuantConfig,
    errors: &[ChordError],
    sinks: Vec<W>,
    pcfg: &PipelineConfig,
) -> Result<PipelineOutput<W>> {
    let total = lattice.num_struts() as u32;
    let (batch_tx, batch_rx) = sync_channel::<Vec<Range<u32>>>(2);
    let (mesh_tx, mesh_rx) = sync_channel::<Result<MeshedBatch>>(2);
    let (tri_tx, tri_rx) = sync_channel::<TriBatch>(0);
    let (tune_tx, tune_rx) = sync_channel::<u64>(1);
    let adaptive = pcfg.adaptive;

    thread::scope(|scope| {
        let ingest = scope.spawn(move || {
            let start = Instant::now();
            let (starved, mut blocked) = (Duration::ZERO, Duration::ZERO);
            let mut batch = pcfg.batch;
            let mut lo = 0u32;
            let mut n = 0u64;
            while lo < total {
                let hi = lo.saturating_add(batch.batch_struts.min(u32::MAX as u64) as u32).min(total);
                if !timed_send(&batch_tx, batch.chunk_ranges(lo..hi), &mut blocked) {
                    break;
                }
                n += 1;
                lo = hi;
                if n == 1 && adaptive && lo < total {
                    // Waiting for the first batch's triangle count keeps batch
                    // boundaries independent of thread timing.
                    let t = Instant::now();
                    if let Ok(per_strut) = tune_rx.recv() {
                        batch = batch.retuned(per_strut);
                    }
                    blocked += t.elapsed();
                }
            }
            (finish_stage(start, starved, blocked, n), batch)
        });

        let mesher = scope.spawn(move || {
            let start = Instant::now();
            let (mut starved, mut blocked) = (Duration::ZERO, Duration::ZERO);
            let mut n = 0;
            while let Some(chunks) = timed_recv(&batch_rx, &mut starved) {
                let r = metamesh_batch(lattice, cfg, &pcfg.engine, chunks, true);
                let failed = r.is_err();
                if !timed_send(&mesh_tx, r, &mut blocked) || failed {
                    break;
                }
                n += 1;
            }
            finish_stage(start, starved, blocked, n)
        });

        let triangulator = scope.spawn(move || -> Result<_> {
            let start = Instant::now();
            let (mut starved, mut blocked) = (Duration::ZERO, Duration::ZERO);
            let mut tris: Vec<Triangulator<'_>> = errors.iter().map(|&ce| Triangulator::new(lattice, ce)).collect();
            let mut exec = ExecStats::default();
            let mut cache = pcfg.keep_cache.then(Vec::new);
            let (mut n, mut chunks, mut peak) = (0u64, 0u64, 0u64);
            while let Some(meshed) = timed_recv(&mesh_rx, &mut starved) {
                let meshed = meshed?;
                let items = decode_batch(lattice, cfg, &meshed);
                let tb = triangulate_batch(&mut tris, &items);
                if n == 0 && adaptive {
                    let _ = tune_tx.try_send(observed_per_strut(&tb, items.len()));
                }
                peak = peak.max(batch_bytes(&tb));
                exec.merge(&meshed.stats);
                chunks += meshed.chunks;
                if let Some(c) = cache.as_mut() {
                    c.extend(meshed.encoded);
                }
                n += 1;
                if !timed_send(&tri_tx, tb, &mut blocked) {
                    break;
                }
            }
            drop(tune_tx);
            let reports: Vec<TriReport> = tris.into_iter().map(Triangulator::finish).collect();
            Ok((finish_stage(start, starved, blocked, n), exec, cache, chunks, peak, reports))
        });

        let writer = scope.spawn(move || -> Result<_> {
            let start = Instant::now();
            let (mut starved, blocked) = (Duration::ZERO, Duration::ZERO);
            let mut writers = open_writers(sinks)?;
            let (mut n, mut bytes) = (0usize, 0u64);
            while let Some(tb) = timed_recv(&tri_rx, &mut starved) {
                bytes += write_batch(&mut writers, &tb, n)?;
                n += 1;
            }
            let sinks = finish_writers(writers, n)?;
            Ok((finish_stage(start, starved, blocked, n as u64), sinks, bytes))
        });

        let (ingest_stats, final_batch) = ingest.join().expect("ingest stage panicked");
        let mesh_stats = mesher.join().expect("metamesh stage panicked");
        let tri_result = triangulator.join().expect("triangulate stage panicked");
        let write_result = writer.join().expect("write stage panicked");
        let (write_stats, sinks, bytes) = write_result?;
        let (tri_stats, exec, cache, chunks, peak, reports) = tri_result?;
        let stats = PipelineStats {
            final_batch: Some(final_batch),
            batches: tri_stats.batches,
            chunks,
            bytes_written: bytes,
            peak_batch_bytes: peak,
            ingest: ingest_stats,
            metamesh: mesh_stats,
            triangulate: tri_stats,
            write: write_stats,
            exec,
            reports,
            ..Default::default()
        };
        let store = build_store(lattice, cfg, &pcfg.engine, cache)?;
        Ok(PipelineOutput { sinks, stats, store })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{synth_lattice, SynthKind};
    use std::io::Cursor;

    #[test]
    fn batch_formula() {
        let b = batch_size(4_000_000, 50, 20).unwrap();
        assert_eq!(b.batch_struts, 4000);
        assert_eq!(b.chunk_ranges(0..4000), vec![0..1000, 1000..2000, 2000..3000, 3000..4000]);
        assert_eq!(batch_size(1000, 50, 20).unwrap().batch_struts, 1);
        assert_eq!(batch_size(8_000_000, 50, 20).unwrap().batch_struts, 8000);
        assert!(matches!(batch_size(999, 50, 20), Err(Error::Config(_))));
        let b = BatchConfig::new(1000, 50, 1, 3).unwrap();
        assert_eq!(b.chunk_ranges(0..20).iter().map(|r| r.len()).collect::<Vec<_>>(), vec![7, 7, 6]);
        assert_eq!(b.retuned(1000).batch_struts, 1);
    }

    #[test]
    fn counting_sink_tracks_patched_header() {
        let mut w = StlWriter::new(CountingSink::default()).unwrap();
        w.write(&[Triangle([crate::Vec3::x(), crate::Vec3::y(), crate::Vec3::z()])]).unwrap();
        assert_eq!(w.finish().unwrap().len(), 134);
    }

    #[test]
    fn pipelined_matches_serial() {
        let l = synth_lattice(&SynthKind::Grid { dims: [3, 3, 2], pitch: 1.0, radius: 0.1 }).unwrap();
        let cfg = QuantConfig::new(12, 15, l.r_min(), l.r_max()).unwrap();
        let ces = [ChordError::new(0.02).unwrap(), ChordError::new(0.1).unwrap()];
        let go = |schedule, buffer| {
            let pcfg = PipelineConfig {
                batch: BatchConfig::new(buffer, 50, 20, 3).unwrap(),
                schedule,
                adaptive: true,
                ..Default::default()
            };
            let sinks = vec![Cursor::new(Vec::new()), Cursor::new(Vec::new())];
            let out = run(&l, &cfg, &ces, sinks, &pcfg).unwrap();
            (out.sinks.into_iter().map(Cursor::into_inner).collect::<Vec<_>>(), out.stats)
        };
        let (serial, _) = go(Schedule::Serial, 4_000_000);
        let (piped, stats) = go(Schedule::Pipelined, 3000);
        assert_eq!(serial, piped);
        assert!(stats.batches > 1);
        assert!(serial[0].len() > serial[1].len());
        for s in [stats.ingest, stats.metamesh, stats.triangulate, stats.write] {
            assert!((s.busy_secs + s.stall_secs() - s.wall_secs).abs() < 1e-6);
        }
    }

    #[test]
    fn sink_failure_reports_batches() {
        struct Failing(usize);
        impl Write for Failing {
            fn write(&mut self, b: &[u8]) -> io::Result<usize> {
                if self.0 == 0 {
                    return Err(io::Error::other("disk full"));
                }
                self.0 -= 1;
                Ok(b.len())
            }
            fn flush(&mut self) -> io::Result<()> {
                Ok(())
            }
        }
        impl Seek for Failing {
            fn seek(&mut self, _: SeekFrom) -> io::Result<u64> {
                Ok(0)
            }
        }
        let l = synth_lattice(&SynthKind::Grid { dims: [3, 3, 1], pitch: 1.0, radius: 0.1 }).unwrap();
        let cfg = QuantConfig::new(12, 15, l.r_min(), l.r_max()).unwrap();
        let pcfg = PipelineConfig { batch: BatchConfig::new(1000, 50, 20, 1).unwrap(), ..Default::default() };
        let r = run(&l, &cfg, &[ChordError::new(0.05).unwrap()], vec![Failing(3)], &pcfg);
        assert!(matches!(r, Err(Error::Sink { batches, .. }) if batches > 0), "{:?}", r.err());
    }
}
