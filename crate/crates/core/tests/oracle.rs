mod common;

use common::{assemble_k1, modes, rel_diff, triangle_rule, two_triangle_mesh};
use mixest::assembly::Discretization;
use mixest::mesh::make_unit_square;

#[test]
fn reference_modes_are_orthonormal() {
    let rule = triangle_rule();
    for i in 0..3 {
        for j in 0..3 {
            let g: f64 = rule.iter().map(|(p, w)| w * modes(p[0], p[1])[i] * modes(p[0], p[1])[j]).sum();
            assert!((g - f64::from(u8::from(i == j))).abs() < 1e-13, "({i},{j}) {g}");
        }
    }
}

#[test]
fn matrices_match_reference_assembly_on_two_triangles() {
    let mesh = two_triangle_mesh();
    let disc = Discretization::new(&mesh, 1).unwrap();
    let o = assemble_k1(&mesh);
    for (name, lib, ora) in [("A", &disc.a, &o.a), ("B", &disc.b, &o.b), ("M", &disc.m, &o.m)] {
        let d = rel_diff(lib, ora);
        assert!(d < 1e-10, "{name}: {d:e}");
    }
}

#[test]
fn matrices_match_reference_assembly_on_structured_mesh() {
    let mesh = make_unit_square(2).unwrap();
    let disc = Discretization::new(&mesh, 1).unwrap();
    let o = assemble_k1(&mesh);
    assert!(rel_diff(&disc.a, &o.a) < 1e-10);
    assert!(rel_diff(&disc.b, &o.b) < 1e-10);
    assert!(rel_diff(&disc.m, &o.m) < 1e-10);
}
