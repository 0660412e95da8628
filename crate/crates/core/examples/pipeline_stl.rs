//! Runs the batched pipeline on a diamond lattice at two chord errors and
//! writes one STL per error.
//!
//! `cargo run --release --example pipeline_stl -- [cells] [out-dir]`
//! (the output directory defaults to the system temp dir)

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use metamesh::codec::choose_bits;
use metamesh::lattice::{synth_lattice, SynthKind};
use metamesh::pipeline::{run, PipelineConfig};
use metamesh::triangulate::{output_path, ChordError};

fn main() -> metamesh::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let cells: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(8);
    let dir = args.get(2).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    let l = synth_lattice(&SynthKind::Diamond { cells: [cells; 3], cell: 1.0, radius: 0.08, jitter: 0.1, seed: 3 })?;
    let cfg = choose_bits(0.001, l.r_min(), l.r_max())?;
    let errors = [ChordError::new(0.02)?, ChordError::new(0.06)?];
    let paths: Vec<PathBuf> = errors.iter().map(|c| output_path(&dir.join("diamond.stl"), c.value(), true)).collect();
    let sinks = paths.iter().map(|p| Ok(BufWriter::new(File::create(p)?))).collect::<metamesh::Result<Vec<_>>>()?;
    let out = run(&l, &cfg, &errors, sinks, &PipelineConfig { adaptive: true, ..Default::default() })?;
    let s = &out.stats;
    println!("{} struts in {} batches ({} chunks), {:.2} s", l.num_struts(), s.batches, s.chunks, s.wall_secs);
    for (p, r) in paths.iter().zip(&s.reports) {
        println!("  {}: {} triangles ({:.1}/strut)", p.display(), r.triangles, r.triangles as f64 / r.struts as f64);
    }
    for (name, st) in [("ingest", s.ingest), ("metamesh", s.metamesh), ("triangulate", s.triangulate), ("write", s.write)] {
        println!("  {name:>11}: busy {:.3} s, starved {:.3} s, blocked {:.3} s", st.busy_secs, st.starved_secs, st.blocked_secs);
    }
    Ok(())
}
