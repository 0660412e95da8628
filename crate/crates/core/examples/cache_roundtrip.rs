//! Saves a metamesh cache, reloads it and triangulates it at three chord
//! errors without touching the geometry kernels again.

use metamesh::codec::choose_bits;
use metamesh::conic::counters;
use metamesh::lattice::{synth_lattice, SynthKind};
use metamesh::store::MetaMeshStore;
use metamesh::triangulate::{triangulate_all, ChordError};
use metamesh::warp::{execute, EngineConfig};

fn main() -> metamesh::Result<()> {
    let dir = std::env::temp_dir();
    let cache = dir.join("metamesh_example.mmc");
    let l = synth_lattice(&SynthKind::Grid { dims: [5, 5, 5], pitch: 1.0, radius: 0.12 })?;
    let cfg = choose_bits(0.001, l.r_min(), l.r_max())?;
    let (store, _) = execute(&l, &cfg, &EngineConfig::default())?;
    store.save(&cache)?;
    println!("cache: {} struts, {} arcs, {} bytes", store.num_struts(), store.num_arcs(), std::fs::metadata(&cache)?.len());

    let loaded = MetaMeshStore::load(&cache)?;
    let before = counters::snapshot();
    let errors = [ChordError::new(0.01)?, ChordError::new(0.03)?, ChordError::new(0.1)?];
    let reports = triangulate_all(&loaded, &errors, &dir.join("metamesh_example.stl"))?;
    let after = counters::snapshot();
    for r in &reports {
        println!("chord error {:>5}: {:>7} triangles", r.chord_error, r.triangles);
    }
    println!("geometry kernel calls while triangulating: {}", after.total() - before.total());
    Ok(())
}
