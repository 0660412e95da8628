mod common;

use std::f64::consts::TAU;

use metamesh::conic::{arc_range, auxiliary_plane, intersect_strut_plane, ArcRange, Ellipse, Plane};
use metamesh::lattice::{Lattice, Node, Strut};
use metamesh::metamesh::metamesh_strut;
use metamesh::Vec3;
use proptest::prelude::*;

#[test]
fn loops_match_ruling_oracle() {
    for l in common::test_lattices() {
        for s in 0..l.num_struts() as u32 {
            let loops = metamesh_strut(&l, s).unwrap();
            for (e, lp) in loops.iter().enumerate() {
                let end = l.strut_end(s, e as u8);
                common::check_loop(&l, &end, lp, 2048, 1e-6 * l.r_max())
                    .unwrap_or_else(|m| panic!("strut {s} end {e}: {m}"));
            }
        }
    }
}

fn unit(v: [f64; 3]) -> Vec3 {
    let v = Vec3::new(v[0], v[1], v[2]);
    if v.norm() < 1e-3 {
        Vec3::x()
    } else {
        v.normalize()
    }
}

fn inside(e: &Ellipse, p: &Plane, t: f64) -> bool {
    p.signed_distance(&e.point(t)) <= 0.0
}

proptest! {
    #[test]
    fn arc_range_agrees_with_samples(
        a in prop::array::uniform3(-1.0f64..1.0),
        b in prop::array::uniform3(-1.0f64..1.0),
        n in prop::array::uniform3(-1.0f64..1.0),
        off in -1.2f64..1.2,
    ) {
        let a = unit(a) * 0.3;
        let b0 = unit(b);
        let b = (b0 - a.normalize() * b0.dot(&a.normalize())).try_normalize(1e-6).unwrap_or(a.normalize().cross(&Vec3::z()).normalize()) * 0.2;
        let e = Ellipse { center: Vec3::new(0.1, -0.2, 0.3), a, b };
        let plane = Plane::new(e.center + unit(n) * off * 0.3, unit(n));
        let r = arc_range(&e, &plane);
        let samples = 2000;
        let tol = TAU / samples as f64;
        for i in 0..samples {
            let t = TAU * i as f64 / samples as f64;
            let expect = inside(&e, &plane, t);
            let got = match r {
                ArcRange::Empty => false,
                ArcRange::Full => true,
                ArcRange::Span { t1, t2 } => {
                    let u = t1 + (t - t1).rem_euclid(TAU);
                    if (u - t1).abs() < tol || (u - t2).abs() < tol || (u - t1 - TAU).abs() < tol {
                        continue;
                    }
                    u <= t2
                }
            };
            prop_assert_eq!(got, expect, "t = {}", t);
        }
    }

    #[test]
    fn pair_sections_lie_on_both_cones(
        d1 in prop::array::uniform3(-1.0f64..1.0),
        d2 in prop::array::uniform3(-1.0f64..1.0),
        len in 0.6f64..2.0,
        r in prop::array::uniform3(0.05f64..0.2),
    ) {
        let (u1, u2) = (unit(d1), unit(d2));
        prop_assume!(u1.dot(&u2) < 0.7);
        let nodes = vec![
            Node { center: Vec3::zeros(), radius: r[0] },
            Node { center: u1 * len, radius: r[1] },
            Node { center: u2 * len, radius: r[2] },
        ];
        let l = Lattice::from_parts(nodes, vec![Strut::new(0, 1), Strut::new(0, 2)]).unwrap();
        let (i, j) = (l.strut_end(0, 0), l.strut_end(1, 0));
        let plane = auxiliary_plane(&i, &j).unwrap();
        if let Ok(sec) = intersect_strut_plane(&i, &plane) {
            for k in 0..64 {
                let p = sec.ellipse.point(k as f64 * TAU / 64.0);
                prop_assert!(i.surface_residual(&p).abs() < 1e-9);
                prop_assert!(j.surface_residual(&p).abs() < 1e-9);
                prop_assert!(plane.signed_distance(&p).abs() < 1e-9);
            }
        }
    }
}

