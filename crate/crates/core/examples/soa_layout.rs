//! Prefix index and structure-of-arrays buffer for per-strut arc records.

use metamesh::codec::CompressedArc;
use metamesh::soa::{blelloch_scan, build_index, element_width, SoABuffer};

fn main() -> metamesh::Result<()> {
    let counts = [5u32, 10, 17, 15];
    let idx = build_index(&counts, 1 << 20)?;
    println!("counts {counts:?} -> prefix {:?}", idx.prefix());
    println!("scan of 1..=8: {:?}", blelloch_scan(&[1, 2, 3, 4, 5, 6, 7, 8]));

    let element = element_width(128, 32)?;
    println!("element width for 128-byte lines and 32 lanes: {element} bytes");
    let buf = SoABuffer::new(element, idx.total())?;
    for s in 0..counts.len() as u32 {
        let recs: Vec<CompressedArc> =
            (0..idx.count(s)).map(|k| CompressedArc(((s as u128) << 64) | k as u128)).collect();
        buf.write_arcs(&idx, s, &recs)?;
    }
    let r = buf.read_arcs(&idx, 2);
    println!("strut 2 holds {} records; first = {:#x}", r.len(), r[0].0);
    println!(
        "{} lane arrays; slot 7 of array 1 is at byte {}",
        buf.num_lane_arrays(),
        buf.element_address(1, 7)
    );
    Ok(())
}
