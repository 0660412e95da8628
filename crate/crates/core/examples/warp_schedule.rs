//! Packs a skewed strut workload into 32-lane groups and runs the three
//! execution modes on a real lattice.

use metamesh::codec::choose_bits;
use metamesh::lattice::{synth_lattice, SynthKind};
use metamesh::warp::{execute, schedule, schedule_one_per_group, synthetic_workloads, EngineConfig, ExecMode};

fn main() -> metamesh::Result<()> {
    let w = synthetic_workloads(1, 10_000);
    let small = w.iter().filter(|x| x.total() < 16).count() as f64 / w.len() as f64;
    let packed = schedule(&w, 32);
    let naive = schedule_one_per_group(&w, 32);
    println!("{:.0}% of struts under 16 arcs", small * 100.0);
    println!("sort-and-scan: {} groups, utilization {:.3}", packed.groups.len(), packed.utilization());
    println!("one per group: {} groups, utilization {:.3}", naive.groups.len(), naive.utilization());

    let l = synth_lattice(&SynthKind::Diamond { cells: [4, 4, 4], cell: 1.0, radius: 0.08, jitter: 0.1, seed: 2 })?;
    let cfg = choose_bits(0.001, l.r_min(), l.r_max())?;
    let mut bytes = Vec::new();
    for mode in [ExecMode::Warp, ExecMode::Thread, ExecMode::Serial] {
        let (store, st) = execute(&l, &cfg, &EngineConfig { mode, ..Default::default() })?;
        println!(
            "{mode:?}: {} transactions, {} divergent groups, utilization {:.3}",
            st.transactions, st.divergence_events, st.lane_utilization
        );
        bytes.push(store.to_bytes());
    }
    assert!(bytes.windows(2).all(|p| p[0] == p[1]));
    println!("all modes produced identical caches");
    Ok(())
}
