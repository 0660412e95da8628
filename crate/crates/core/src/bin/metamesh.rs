use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use metamesh::codec::{choose_bits, QuantConfig};
use metamesh::lattice::read_lattice;
use metamesh::pipeline::{run, BatchConfig, PipelineConfig, Schedule, DEFAULT_BUFFER_BYTES, STL_TRIANGLE_BYTES};
use metamesh::store::MetaMeshStore;
use metamesh::triangulate::{output_path, report_path, triangulate_all, ChordError};
use metamesh::warp::{execute, EngineConfig, ExecMode};
use metamesh::{Error, Result};

#[derive(Parser)]
#[command(version, about = "Meta-mesh strut lattices and triangulate them to binary STL")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the arc-loop cache of a lattice, optionally triangulating it in the same pass.
    Metamesh(MetameshArgs),
    /// Triangulate a cached metamesh at one or more chord errors.
    Triangulate(TriangulateArgs),
}

#[derive(Args)]
struct EngineArgs {
    #[arg(long, default_value_t = 32)]
    warp_width: u32,
    #[arg(long, default_value = "warp")]
    exec_mode: ExecMode,
    /// Write run statistics as JSON.
    #[arg(long)]
    stats_json: Option<PathBuf>,
}

#[derive(Args)]
struct MetameshArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    cache: PathBuf,
    /// Worst-case arc reconstruction error as a fraction of the largest radius.
    #[arg(long, default_value_t = 0.001)]
    error_target: f64,
    /// Chord errors to triangulate at while meta-meshing (needs --out).
    #[arg(long = "chord-error")]
    chord_errors: Vec<f64>,
    #[arg(long, requires = "chord_errors")]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    chunks: u32,
    #[arg(long, default_value_t = DEFAULT_BUFFER_BYTES)]
    buffer_bytes: u64,
    /// Run the pipeline stages one after another instead of overlapped.
    #[arg(long)]
    serial: bool,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Args)]
struct TriangulateArgs {
    #[arg(long)]
    cache: PathBuf,
    #[arg(long = "chord-error", required = true)]
    chord_errors: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    stats_json: Option<PathBuf>,
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(v).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(path, s)?;
    Ok(())
}

fn chord_errors(v: &[f64]) -> Result<Vec<ChordError>> {
    v.iter().map(|&c| ChordError::new(c)).collect()
}

fn engine(a: &EngineArgs) -> EngineConfig {
    EngineConfig { mode: a.exec_mode, width: a.warp_width, ..Default::default() }
}

fn metamesh_cmd(a: MetameshArgs) -> Result<()> {
    let lattice = read_lattice(&a.input)?;
    let cfg: QuantConfig = choose_bits(a.error_target, lattice.r_min(), lattice.r_max())?;
    log::info!("{} nodes, {} struts, n={} m={}", lattice.num_nodes(), lattice.num_struts(), cfg.n, cfg.m);
    let engine = engine(&a.engine);
    let Some(out) = a.out else {
        let (store, stats) = execute(&lattice, &cfg, &engine)?;
        store.save(&a.cache)?;
        eprintln!("{} arcs, {} quarantined struts", store.num_arcs(), stats.quarantined);
        if let Some(p) = &a.engine.stats_json {
            write_json(p, &stats)?;
        }
        return Ok(());
    };
    let errors = chord_errors(&a.chord_errors)?;
    let paths: Vec<PathBuf> = errors.iter().map(|c| output_path(&out, c.value(), errors.len() > 1)).collect();
    let sinks = paths
        .iter()
        .map(|p| Ok(BufWriter::with_capacity(1 << 20, File::create(p)?)))
        .collect::<Result<Vec<_>>>()?;
    let pcfg = PipelineConfig {
        batch: BatchConfig::new(a.buffer_bytes, STL_TRIANGLE_BYTES, 20, a.chunks)?,
        engine,
        schedule: if a.serial { Schedule::Serial } else { Schedule::Pipelined },
        adaptive: true,
        keep_cache: true,
    };
    let result = run(&lattice, &cfg, &errors, sinks, &pcfg)?;
    if let Some(store) = &result.store {
        store.save(&a.cache)?;
    }
    for (p, r) in paths.iter().zip(&result.stats.reports) {
        r.write_json(report_path(p))?;
        eprintln!("{}: {} triangles", p.display(), r.triangles);
    }
    if let Some(p) = &a.engine.stats_json {
        write_json(p, &result.stats)?;
    }
    Ok(())
}

fn triangulate_cmd(a: TriangulateArgs) -> Result<()> {
    let store = MetaMeshStore::load(&a.cache)?;
    let errors = chord_errors(&a.chord_errors)?;
    let reports = triangulate_all(&store, &errors, &a.out)?;
    for r in &reports {
        eprintln!("chord error {}: {} triangles, {} open contours", r.chord_error, r.triangles, r.open_contours.len());
    }
    if let Some(p) = &a.stats_json {
        write_json(p, &reports)?;
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let result = match Cli::parse().cmd {
        Cmd::Metamesh(a) => metamesh_cmd(a),
        Cmd::Triangulate(a) => triangulate_cmd(a),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
