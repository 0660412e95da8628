//! Intersects a strut with the auxiliary plane it shares with a neighbor and
//! reports the resulting ellipse and the arc range the plane keeps.

use metamesh::conic::{arc_range, auxiliary_plane, intersect_strut_plane};
use metamesh::lattice::{synth_lattice, SynthKind};

fn main() -> metamesh::Result<()> {
    let l = synth_lattice(&SynthKind::Star { arms: 3, length: 1.0, radius: 0.1, tip_radius: 0.07 })?;
    let e0 = l.strut_end(0, 0);
    let e1 = l.strut_end(1, 0);
    let plane = auxiliary_plane(&e0, &e1)?;
    let section = intersect_strut_plane(&e0, &plane)?;
    let el = section.ellipse;
    println!("plane through {:.4?} normal {:.4?}", plane.point, plane.normal);
    println!("ellipse center {:.4?}\n  |a| = {:.5}  |b| = {:.5}", el.center, el.a.norm(), el.b.norm());
    let worst = (0..64)
        .map(|k| {
            let p = el.point(k as f64 * std::f64::consts::TAU / 64.0);
            e0.surface_residual(&p).abs().max(e1.surface_residual(&p).abs())
        })
        .fold(0.0, f64::max);
    println!("max residual on both strut surfaces: {worst:.2e}");

    let cap = metamesh::metamesh::cap_plane(&e0);
    println!("range kept by the cap plane: {:?}", arc_range(&el, &cap));
    Ok(())
}
