//! Encodes every arc of a lattice into 128-bit records and measures the
//! reconstruction error against the quantizer's bound.

use metamesh::codec::{choose_bits, decode_arc, decode_escape, encode_arc, Encoded, NodeFrame};
use metamesh::lattice::{synth_lattice, RandomParams, SynthKind};
use metamesh::metamesh::MetaMesh;

fn main() -> metamesh::Result<()> {
    let l = synth_lattice(&SynthKind::Random(RandomParams { seed: 9, nodes: 120, ..Default::default() }))?;
    let cfg = choose_bits(0.001, l.r_min(), l.r_max())?;
    println!("n = {}, m = {}, t bits = {}, bound = {:.3e} mm", cfg.n, cfg.m, cfg.t_bits, cfg.error_bound());
    let mesh = MetaMesh::build(&l);
    let (mut packed, mut escaped, mut worst) = (0usize, 0usize, 0.0f64);
    for (s, loops) in mesh.loops.iter().enumerate() {
        let Some(loops) = loops else { continue };
        for (e, lp) in loops.iter().enumerate() {
            let frame = NodeFrame::from(&l.strut_end(s as u32, e as u8));
            for arc in &lp.arcs {
                let back = match encode_arc(arc, &cfg, &frame) {
                    Encoded::Packed(r) => {
                        packed += 1;
                        decode_arc(&r, &cfg, &frame, arc.neighbor)
                    }
                    Encoded::Escape(r) => {
                        escaped += 1;
                        decode_escape(&r, &frame, arc.neighbor)
                    }
                };
                for k in 0..=16 {
                    let t = arc.t1 + (arc.t2 - arc.t1) * k as f64 / 16.0;
                    let tb = back.t1 + (back.t2 - back.t1) * k as f64 / 16.0;
                    worst = worst.max((arc.point(t) - back.point(tb)).norm());
                }
            }
        }
    }
    println!("{packed} packed, {escaped} escaped, worst point error {worst:.3e} mm");
    println!("bytes: {} packed vs {} uncompressed", packed * 16, (packed + escaped) * 44);
    Ok(())
}
