use wentzell_core::dynamics::{project_initial_data, steady_state, Semigroup};
use wentzell_core::gamma_limit::{clamped_spectrum, sign_structure};
use wentzell_core::oracle::{clamped_beam_eigenvalues, compare_fem_oracle, find_wentzell_eigenvalues_1d, BeamParams};
use wentzell_core::{DiscreteWentzellOperator, FieldSpec, Mesh, ProblemData};

#[test]
fn fem_second_eigenvalue_matches_first_positive_root_without_gamma() {
    let params = BeamParams::new(1.0, 1.0, 1.0, 0.0).unwrap();
    let oracle = find_wentzell_eigenvalues_1d(&params, 3, 1e6).unwrap();
    assert_eq!(oracle[0], 0.0);
    let mesh = Mesh::interval(0.0, 1.0, 256).unwrap();
    let op = DiscreteWentzellOperator::build(&mesh, &ProblemData::constant(1.0, 1.0, 0.0, 0.5)).unwrap();
    let fem = op.solve_spectrum(3).unwrap().eigenvalues;
    assert!((fem[1] - oracle[1]).abs() < 1e-3 * oracle[1]);
    assert!((fem[2] - oracle[2]).abs() < 1e-3 * oracle[2]);
}

#[test]
fn fem_and_oracle_agree_for_general_constants() {
    let params = BeamParams::new(2.0, 0.7, 1.8, 3.0).unwrap();
    let table = compare_fem_oracle(&[64, 128, 256], &params, 4).unwrap();
    for k in 0..4 {
        assert!(table.errors[2][k] < 1e-3, "mode {k}: {:e}", table.errors[2][k]);
        assert!(table.errors[1][k] > table.errors[2][k]);
    }
    assert!(table.orders[1][1] > 1.5);
}

#[test]
fn fem_and_oracle_move_together_in_gamma() {
    let mesh = Mesh::interval(0.0, 1.0, 128).unwrap();
    let base = DiscreteWentzellOperator::build(&mesh, &ProblemData::constant(1.0, 1.0, 0.5, 0.5)).unwrap();
    let mut previous: Option<(Vec<f64>, Vec<f64>)> = None;
    for gamma in [0.5, 2.0, 8.0, 32.0] {
        let fem = base.with_gamma(FieldSpec::constant(gamma)).unwrap().solve_spectrum(3).unwrap().eigenvalues;
        let oracle =
            find_wentzell_eigenvalues_1d(&BeamParams::new(1.0, 1.0, 1.0, gamma).unwrap(), 3, 1e6).unwrap();
        for (f, o) in fem.iter().zip(&oracle) {
            assert!((f - o).abs() < 1e-2 * o);
        }
        if let Some((pf, po)) = &previous {
            for k in 0..3 {
                assert!(fem[k] >= pf[k] && oracle[k] >= po[k]);
            }
        }
        previous = Some((fem, oracle));
    }
}

#[test]
fn discrete_clamped_beam_converges_to_analytic_roots() {
    let exact = clamped_beam_eigenvalues(1.0, 1.0, 2);
    let mut errors = Vec::new();
    for n in [64, 128] {
        let spectrum = clamped_spectrum(&Mesh::interval(0.0, 1.0, n).unwrap(), 1.0, 2).unwrap();
        errors.push((spectrum.eigenvalues[0] - exact[0]).abs() / exact[0]);
        let census = sign_structure(&spectrum.eigenvector(0), spectrum.product_mass());
        assert!(census.single_sign() && census.zero == 2);
    }
    assert!(errors[1] < 1e-3 && errors[0] / errors[1] > 3.0);
}

#[test]
fn independent_boundary_datum_evolves_towards_mean() {
    let mesh = Mesh::unit_square(8).unwrap();
    let op = DiscreteWentzellOperator::build(&mesh, &ProblemData::constant(1.0, 1.0, 0.0, 0.5)).unwrap();
    // Interior datum zero, boundary datum one: f2 is not the trace of f1.
    let f = project_initial_data(&op, &FieldSpec::constant(0.0), &FieldSpec::constant(1.0)).unwrap();
    let mean = steady_state(&op, &f).unwrap();
    assert!((mean[0] - 4.0 / 5.0).abs() < 1e-12);
    let spectrum = op.solve_spectrum(op.node_count()).unwrap();
    let semigroup = Semigroup::new(&spectrum).unwrap();
    let late = semigroup.apply(&f, 40.0 / spectrum.eigenvalues[1]).unwrap();
    assert!((late.into_inner() - mean.into_inner()).amax() < 1e-12);
}
