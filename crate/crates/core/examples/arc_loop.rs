//! Builds the arc loops of every strut around one node and prints them.

use metamesh::lattice::{synth_lattice, RandomParams, SynthKind};
use metamesh::metamesh::{arc_loop_at, MetaMesh};

fn main() -> metamesh::Result<()> {
    let l = synth_lattice(&SynthKind::Random(RandomParams { seed: 4, nodes: 40, ..Default::default() }))?;
    let node = (0..l.num_nodes() as u32).max_by_key(|&n| l.adjacency(n).len()).unwrap();
    println!("node {node}: {} incident struts", l.adjacency(node).len());
    for &s in l.adjacency(node) {
        let end = if l.strut(s).nodes[0] == node { 0 } else { 1 };
        let lp = arc_loop_at(&l, s, end)?;
        let arcs: Vec<String> = lp
            .arcs
            .iter()
            .map(|a| match a.neighbor {
                Some(j) => format!("s{j}:{:.3}", a.t2 - a.t1),
                None => format!("cap:{:.3}", a.t2 - a.t1),
            })
            .collect();
        println!("  strut {s:>3} end {end}: {}", arcs.join("  "));
    }
    let mesh = MetaMesh::build(&l);
    println!(
        "whole lattice: {} arcs, {} vertices, {} faces, {} quarantined",
        mesh.num_arcs(),
        mesh.num_vertices(),
        mesh.num_faces(),
        mesh.quarantined.len()
    );
    Ok(())
}
