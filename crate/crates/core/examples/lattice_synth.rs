//! Generates the built-in synthetic lattices and writes one as `.ltc`.
//!
//! `cargo run --example lattice_synth -- [out.ltc] [cells] [radius]`

use metamesh::lattice::{read_lattice, synth_lattice, write_lattice, RandomParams, SynthKind};

fn main() -> metamesh::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let out = args.get(1).map(std::path::PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("diamond.ltc"));
    let cells: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(6);
    let radius: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0.08);

    let kinds = [
        ("grid", SynthKind::Grid { dims: [4, 4, 4], pitch: 1.0, radius: 0.12 }),
        ("star", SynthKind::Star { arms: 8, length: 1.0, radius: 0.1, tip_radius: 0.06 }),
        ("random", SynthKind::Random(RandomParams { seed: 1, ..Default::default() })),
    ];
    for (name, kind) in &kinds {
        let l = synth_lattice(kind)?;
        println!("{name:>8}: {} nodes, {} struts", l.num_nodes(), l.num_struts());
    }

    let diamond = synth_lattice(&SynthKind::Diamond { cells: [cells; 3], cell: 1.0, radius, jitter: 0.1, seed: 7 })?;
    write_lattice(&diamond, &out)?;
    let back = read_lattice(&out)?;
    assert_eq!(back.num_struts(), diamond.num_struts());
    println!(" diamond: {} nodes, {} struts -> {}", diamond.num_nodes(), diamond.num_struts(), out.display());
    Ok(())
}
