use mixest::assembly::{build_dofmap, Discretization, SpaceTag};
use mixest::eigensolve::{solve_eigenpair, EigenOptions};
use mixest::experiments::{run_square_study, StudyOptions};
use mixest::mesh::{make_lshape, make_unit_square};

#[test]
fn dof_counts() {
    let mesh = make_unit_square(4).unwrap();
    assert_eq!(mesh.num_triangles(), 32);
    let disc = Discretization::new(&mesh, 1).unwrap();
    assert_eq!(disc.n_u(), 96);
    assert_eq!(disc.n_sigma(), 264);
    let two = make_unit_square(1).unwrap();
    assert_eq!(build_dofmap(&two, SpaceTag::Lagrange(3)).n_dofs(), 16);
}

#[test]
fn eigen_solver_budget_and_residual() {
    for k in 1..=3 {
        let mesh = make_unit_square(4).unwrap();
        let disc = Discretization::new(&mesh, k).unwrap();
        let (sol, _) = solve_eigenpair(&disc, EigenOptions::default()).unwrap();
        assert!(sol.iterations <= 60, "k={k}: {}", sol.iterations);
        assert!(sol.residual <= 1e-9 * sol.lambda_h);
    }
}

#[test]
fn bisection_angle_bound_on_corner_refinement() {
    let mut mesh = make_lshape(2).unwrap();
    let initial = mesh.min_angle();
    for _ in 0..12 {
        let corner: Vec<usize> =
            (0..mesh.num_triangles()).filter(|&t| mesh.triangle_points(t).iter().any(|p| p.norm() < 1e-12)).collect();
        mesh = mesh.refine_adaptive(&corner).unwrap();
        assert!(mesh.is_conforming());
        assert!(mesh.min_angle() >= 0.5 * initial);
    }
}

#[test]
fn superconvergence_and_auxiliary_problem() {
    let rows = run_square_study(1, 3, &StudyOptions::default()).unwrap();
    for r in &rows {
        assert!(r.superconv_proj_err.unwrap() < r.err_u2_l2.unwrap() * 10.0);
        assert!(r.aux_proj_err.unwrap() > 0.0);
    }
    let eff = rows.last().unwrap().eff.unwrap();
    assert!((eff - 1.0).abs() < 0.03, "{eff}");
}
