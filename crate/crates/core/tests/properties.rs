//! Randomized invariants. None of them needs an exact solution.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mixest::eigensolve::EigenOptions;
use mixest::experiments::{lsq_slope, rates};
use mixest::femcore::HdivFamily;
use mixest::mesh::{make_lshape, make_unit_square, Mesh};
use mixest::postprocess::PostProcessor;
use mixest::verify::{mesh_checks, random_element};

fn refine_randomly(mut mesh: Mesh, picks: &[Vec<usize>]) -> Mesh {
    for step in picks {
        let nt = mesh.num_triangles();
        let marked: Vec<usize> = step.iter().map(|i| i % nt).collect();
        mesh = mesh.refine_adaptive(&marked).unwrap();
    }
    mesh
}

fn marks() -> impl Strategy<Value = Vec<Vec<usize>>> {
    prop::collection::vec(prop::collection::vec(0usize..10_000, 1..6), 1..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn moment_matrices_are_well_conditioned(seed in any::<u64>(), k in 1usize..=3, s in prop::array::uniform3(any::<bool>())) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_element(&mut rng);
        let signs = s.map(|b| if b { 1i8 } else { -1 });
        for f in [HdivFamily::bdm(k).unwrap(), HdivFamily::reduced(k).unwrap()] {
            let c = f.scaled_condition(&g, signs);
            prop_assert!(c < 1e8, "k={} condition {:e}", k, c);
        }
    }

    #[test]
    fn bisection_keeps_mesh_valid(picks in marks(), square in any::<bool>()) {
        let start = if square { make_unit_square(2).unwrap() } else { make_lshape(1).unwrap() };
        let mut mesh = start.clone();
        for step in &picks {
            let nt = mesh.num_triangles();
            let marked: Vec<usize> = step.iter().map(|i| i % nt).collect();
            let fine = mesh.refine_adaptive(&marked).unwrap();
            prop_assert!(fine.is_conforming());
            prop_assert!((fine.total_area() - start.total_area()).abs() < 1e-12);
            prop_assert!(fine.min_angle() >= 0.5 * start.min_angle());
            // every marked element is split
            prop_assert!(fine.num_triangles() >= nt + marked.iter().collect::<std::collections::BTreeSet<_>>().len());
            mesh = fine;
        }
    }

    #[test]
    fn text_format_round_trips(picks in marks()) {
        let mesh = refine_randomly(make_lshape(1).unwrap(), &picks);
        let back = Mesh::from_text(&mesh.to_text()).unwrap();
        prop_assert_eq!(back.vertices(), mesh.vertices());
        prop_assert_eq!(back.triangles(), mesh.triangles());
    }

    #[test]
    fn rates_of_power_laws(rate in 0.5f64..9.0, c in 1e-6f64..1e3) {
        let v: Vec<Option<f64>> = (0..5).map(|i| Some(c * 2f64.powf(-rate * i as f64))).collect();
        for r in rates(&v).into_iter().skip(1) {
            prop_assert!((r.unwrap() - rate).abs() < 1e-9);
        }
        let x: Vec<f64> = (0..5).map(|i| 4f64.powi(i)).collect();
        let y: Vec<f64> = x.iter().map(|n| c * n.powf(-rate / 2.0)).collect();
        prop_assert!((lsq_slope(&x, &y).unwrap() + rate / 2.0).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn invariants_on_random_graded_meshes(picks in marks(), k in 1usize..=2) {
        let mesh = refine_randomly(make_lshape(1).unwrap(), &picks);
        let pp = PostProcessor::new(k).unwrap();
        for c in mesh_checks("random", &mesh, k, &pp, EigenOptions::default()).unwrap() {
            prop_assert!(c.passed, "{}", c);
        }
    }

    #[test]
    fn averaging_is_idempotent(picks in marks()) {
        let mesh = refine_randomly(make_unit_square(2).unwrap(), &picks);
        let pp = PostProcessor::new(1).unwrap();
        let disc = mixest::assembly::Discretization::new(&mesh, 1).unwrap();
        let (sol, _) = mixest::eigensolve::solve_eigenpair(&disc, EigenOptions::default()).unwrap();
        let post = pp.run(&mesh, &disc, &sol).unwrap();
        let (nodal, again) = pp.oswald_average(&mesh, &post.u_star2);
        for (a, b) in nodal.coeffs.iter().zip(&post.u_star2_nodal.coeffs) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in again.coeffs.iter().zip(&post.u_star2.coeffs) {
            prop_assert!((a - b).abs() < 1e-11);
        }
    }
}
