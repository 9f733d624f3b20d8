//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails or overruns its time budget.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wentzell_core::dynamics::{
    decay_envelope_with, geometric_time_grid, growth_check, nonpositivity_search, uniform_eventual_positivity,
    Semigroup, ENVELOPE_SLACK, WITNESS_THRESHOLD,
};
use wentzell_core::gamma_limit::{run_gamma_sweep, GammaSweepConfig};
use wentzell_core::geometry::boundary_measure;
use wentzell_core::oracle::{clamped_beam_eigenvalues, compare_fem_oracle, BeamParams};
use wentzell_core::spectral::{kernel_classify, relative_spread};
use wentzell_core::{
    DiscreteWentzellOperator, Error, FieldSpec, KernelClass, Mesh, ProblemData, ProductFunction, Result,
    SpectralDecomposition,
};

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Outcome {
            passed,
            detail: detail.into(),
        }
    }
}

type Criterion = fn() -> Result<Outcome>;

fn operator(mesh: &Mesh, gamma: f64) -> Result<DiscreteWentzellOperator> {
    DiscreteWentzellOperator::build(mesh, &ProblemData::constant(1.0, 1.0, gamma, 0.5))
}

fn full_spectrum(op: &DiscreteWentzellOperator) -> Result<SpectralDecomposition> {
    let spectrum = op.solve_spectrum(op.node_count())?;
    spectrum.verify()?;
    Ok(spectrum)
}

fn random_vector(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

fn oracle_agreement() -> Result<Outcome> {
    let params = BeamParams::new(1.0, 1.0, 1.0, 1.0)?;
    let table = compare_fem_oracle(&[256, 512], &params, 4)?;
    let worst = table.errors[1].iter().copied().fold(0.0, f64::max);
    let ratio = table.errors[0][1] / table.errors[1][1];
    Ok(Outcome::new(
        worst <= 0.01 && ratio >= 3.0,
        format!("max rel error at n=512 {worst:.3e} (<= 1e-2), lambda_2 error ratio 256/512 {ratio:.3} (>= 3)"),
    ))
}

fn kernel_trichotomy() -> Result<Outcome> {
    let mut passed = true;
    let mut notes = Vec::new();
    for (name, mesh) in [("interval n=256", Mesh::interval(0.0, 1.0, 256)?), ("square n=24", Mesh::unit_square(24)?)] {
        let zero = operator(&mesh, 0.0)?.solve_spectrum(2)?;
        let (l1, l2) = (zero.eigenvalues[0], zero.eigenvalues[1]);
        let spread = relative_spread(&zero.eigenvector(0));
        let kernel_ok = l1.abs() <= 1e-9 * l2 && spread <= 1e-6;
        let positive = operator(&mesh, 1.0)?.solve_spectrum(2)?;
        let negative = operator(&mesh, -1.0)?.solve_spectrum(2)?;
        let classes = [kernel_classify(&zero)?, kernel_classify(&positive)?, kernel_classify(&negative)?];
        let ok = kernel_ok
            && positive.eigenvalues[0] > 0.0
            && negative.eigenvalues[0] < 0.0
            && classes
                == [
                    KernelClass::ZeroEigenvalueConstantKernel,
                    KernelClass::StrictlyPositive,
                    KernelClass::NegativeFirstEigenvalue,
                ];
        passed &= ok;
        notes.push(format!(
            "{name}: |l1|/l2 {:.1e}, spread {spread:.1e}, l1(g=1) {:.4}, l1(g=-1) {:.4}",
            l1.abs() / l2,
            positive.eigenvalues[0],
            negative.eigenvalues[0]
        ));
    }
    Ok(Outcome::new(passed, notes.join("; ")))
}

fn semiboundedness() -> Result<Outcome> {
    let linear_gamma = FieldSpec::polynomial(vec![(1.0, 1, 0), (-0.5, 0, 0)]);
    let cases = [
        (Mesh::interval(0.0, 1.0, 64)?, ProblemData::constant(1.0, 1.0, 0.0, 0.5)),
        (Mesh::interval(0.0, 2.0, 64)?, ProblemData::constant(2.0, 0.5, -1.0, 0.5)),
        (Mesh::unit_square(8)?, ProblemData::constant(1.0, 1.0, 1.0, 0.5).with_gamma(linear_gamma)),
        (
            Mesh::polygonal_disk(4, 12)?,
            ProblemData::constant(1.0, 2.0, -2.0, 0.5).with_alpha(FieldSpec::polynomial(vec![(1.0, 0, 0), (1.0, 2, 0)])),
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_margin = f64::INFINITY;
    for (mesh, data) in &cases {
        let op = DiscreteWentzellOperator::build(mesh, data)?;
        let floor = op.gamma_floor();
        for _ in 0..200 {
            // Perturbations of the constant at scales 1e-6..1 reach quotients
            // close to the boundary average of gamma as well as large ones.
            let epsilon = 10f64.powf(-rng.random_range(0.0..6.0));
            let u = random_vector(op.node_count(), &mut rng) * epsilon + DVector::from_element(op.node_count(), 1.0);
            worst_margin = worst_margin.min(op.rayleigh_quotient(&u)? - floor);
        }
    }
    Ok(Outcome::new(
        worst_margin >= -1e-9,
        format!("min (Rayleigh - gamma_0) over 4 x 200 vectors {worst_margin:.3e} (>= -1e-9)"),
    ))
}

/// Mean with respect to dx on the domain and unweighted dS on the boundary.
fn unweighted_mean(op: &DiscreteWentzellOperator, f: &DVector<f64>) -> DVector<f64> {
    let ones = DVector::from_element(f.len(), 1.0);
    let interior = op.mass.bilinear(&ones, f);
    let boundary = op.boundary_unit.bilinear(&ones, f);
    let measure = op.mesh().measure() + boundary_measure(op.mesh(), &FieldSpec::constant(1.0));
    ones * ((interior + boundary) / measure)
}

fn decay_envelope() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_zero: f64 = 0.0;
    let mut worst_positive: f64 = 0.0;
    let mut worst_growth: f64 = 0.0;
    let mut negative = true;
    for mesh in [Mesh::interval(0.0, 1.0, 256)?, Mesh::unit_square(16)?] {
        let op = operator(&mesh, 0.0)?;
        let spectrum = full_spectrum(&op)?;
        let semigroup = Semigroup::new(&spectrum)?;
        let l2 = spectrum.eigenvalues[1];
        let times = geometric_time_grid(1e-4 / l2, 10.0 / l2, 60)?;
        for _ in 0..100 {
            let f = random_vector(op.node_count(), &mut rng);
            let report = decay_envelope_with(&semigroup, &f, &unweighted_mean(&op, &f), l2, &times)?;
            worst_zero = worst_zero.max(report.max_ratio);
        }

        let op = operator(&mesh, 1.0)?;
        let spectrum = full_spectrum(&op)?;
        let semigroup = Semigroup::new(&spectrum)?;
        let l1 = spectrum.eigenvalues[0];
        let times = geometric_time_grid(1e-4 / l1, 10.0 / l1, 60)?;
        let zero = DVector::zeros(op.node_count());
        for _ in 0..100 {
            let f = random_vector(op.node_count(), &mut rng);
            worst_positive = worst_positive.max(decay_envelope_with(&semigroup, &f, &zero, l1, &times)?.max_ratio);
        }

        let spectrum = full_spectrum(&operator(&mesh, -1.0)?)?;
        let l1 = spectrum.eigenvalues[0];
        negative &= l1 < 0.0;
        let times: Vec<f64> = (0..=20).map(|i| i as f64 * 0.25 / l1.abs()).collect();
        worst_growth = worst_growth.max(growth_check(&spectrum, &times)?.max_relative_error);
    }
    Ok(Outcome::new(
        worst_zero <= 1.0 + ENVELOPE_SLACK && worst_positive <= 1.0 + ENVELOPE_SLACK && negative && worst_growth <= 1e-10,
        format!(
            "max ratio gamma=0 {worst_zero:.6}, gamma=1 {worst_positive:.6} (<= 1 + 1e-10); \
             growth rel error {worst_growth:.2e} (<= 1e-10), lambda_1 < 0: {negative}"
        ),
    ))
}

fn semigroup_law() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_law: f64 = 0.0;
    let mut worst_identity: f64 = 0.0;
    for (mesh, gamma) in [(Mesh::interval(0.0, 1.0, 128)?, 0.0), (Mesh::unit_square(12)?, 0.5)] {
        let op = operator(&mesh, gamma)?;
        let spectrum = full_spectrum(&op)?;
        let semigroup = Semigroup::new(&spectrum)?;
        let scale = 1.0 / spectrum.eigenvalues.iter().copied().find(|&l| l > 1e-6).unwrap_or(1.0);
        for _ in 0..20 {
            let f = random_vector(op.node_count(), &mut rng);
            let (t, s) = (rng.random_range(0.0..scale), rng.random_range(0.0..scale));
            let norm = op.h_norm(&f);
            let joint = semigroup.apply(&f, t + s)?.into_inner();
            let split = semigroup.apply(&semigroup.apply(&f, s)?.0, t)?.into_inner();
            worst_law = worst_law.max(op.h_norm(&(joint - split)) / norm);
            let back = semigroup.apply(&f, 0.0)?.into_inner();
            worst_identity = worst_identity.max(op.h_norm(&(back - &f)) / norm);
        }
    }
    Ok(Outcome::new(
        worst_law <= 1e-10 && worst_identity <= 1e-10,
        format!("semigroup law {worst_law:.2e}, identity {worst_identity:.2e} (<= 1e-10)"),
    ))
}

fn green_identity() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for mesh in [Mesh::interval(0.0, 1.0, 256)?, Mesh::unit_square(16)?] {
        let op = operator(&mesh, 0.0)?;
        let nb = op.boundary_nodes().len();
        for _ in 0..50 {
            let u = random_vector(op.node_count(), &mut rng);
            let v = random_vector(op.node_count(), &mut rng);
            let z_u = op.laplacian_datum_with_flux(&u, &random_vector(nb, &mut rng))?;
            let z_v = op.laplacian_datum_with_flux(&v, &random_vector(nb, &mut rng))?;
            let green = op.green_identity_residual(&u, &z_u, &v, &z_v)?;
            worst = worst.max(green.residual / green.scale);
        }
    }
    Ok(Outcome::new(worst <= 1e-9, format!("max residual / scale {worst:.2e} (<= 1e-9)")))
}

fn nonpositivity_witness() -> Result<Outcome> {
    let mesh = Mesh::interval(0.0, 1.0, 512)?;
    let op = operator(&mesh, 0.0)?;
    let spectrum = full_spectrum(&op)?;
    let n = op.node_count();
    let l2 = spectrum.eigenvalues[1];
    let times = geometric_time_grid(1e-12, 0.1 / l2, 60)?;
    let hats: Vec<ProductFunction> = (0..n).map(|i| ProductFunction::hat(n, i)).collect();
    let report = nonpositivity_search(&spectrum, &hats, &times)?;
    let Some(witness) = report.positivity else {
        return Ok(Outcome::new(false, format!("no positivity witness among {} hats x {} times", n, times.len())));
    };
    let mut linf = match report.linf {
        Some(w) => format!("L-inf witness: hat {} at t = {:.3e}, sup {:.6}", w.candidate, w.t, w.value),
        None => format!("no L-inf witness among {n} hats x {} times", times.len()),
    };
    if report.linf.is_none() {
        let indicator = ProductFunction::from_fn(&mesh, |x| if x[0] <= 0.5 { 1.0 } else { 0.0 });
        let extended = nonpositivity_search(&spectrum, &[indicator], &times)?;
        linf.push_str(&match extended.linf {
            Some(w) => format!("; indicator of [0, 1/2] at t = {:.3e}, sup {:.6} > 1 + 1e-6", w.t, w.value),
            None => "; indicator of [0, 1/2] also none".into(),
        });
    }
    Ok(Outcome::new(
        witness.value <= -WITNESS_THRESHOLD * witness.reference,
        format!("hat {} at t = {:.3e}: min {:.3e} (<= -1e-6); {linf}", witness.candidate, witness.t, witness.value),
    ))
}

fn eventual_positivity() -> Result<Outcome> {
    let mesh = Mesh::interval(0.0, 1.0, 128)?;
    let spectrum = full_spectrum(&operator(&mesh, 0.0)?)?;
    let l2 = spectrum.eigenvalues[1];
    let times = geometric_time_grid(1e-6 / l2, 50.0 / l2, 200)?;
    let report = uniform_eventual_positivity(&spectrum, &times)?;
    let settled = report.per_node.iter().filter(|t| t.is_some()).count();
    let detail = match (report.max_t0, report.worst_node) {
        (Some(t0), Some(node)) => format!(
            "{settled}/{} hats settle; max t0 = {t0:.4e} (lambda_2 t0 = {:.3}) at node {node}",
            report.per_node.len(),
            t0 * l2
        ),
        _ => format!("only {settled}/{} hats settle on the grid", report.per_node.len()),
    };
    Ok(Outcome::new(report.max_t0.is_some(), detail))
}

fn gamma_sweep() -> Result<Outcome> {
    let ladder: Vec<f64> = (0..=6).map(|p| 10f64.powi(p)).collect();
    let report = run_gamma_sweep(&GammaSweepConfig::new(Mesh::interval(0.0, 1.0, 512)?, ladder, 1))?;
    let k1: f64 = 4.7300407;
    let target = k1.powi(4);
    let oracle = clamped_beam_eigenvalues(1.0, 1.0, 1)[0];
    let last = report.rungs.last().expect("nonempty ladder").lambda1;
    let relative = (last - target).abs() / target;
    let ok = report.lambda1_strictly_increasing()
        && relative <= 0.05
        && report.all_bounds_hold()
        && (oracle - target).abs() <= 1e-4 * target;
    Ok(Outcome::new(
        ok,
        format!(
            "lambda_1: {}; lambda_1(1e6) = {last:.4} vs {target:.4} (rel {relative:.2e} <= 5e-2); trace bounds hold: {}",
            report.rungs.iter().map(|r| format!("{:.3}", r.lambda1)).collect::<Vec<_>>().join(" < "),
            report.all_bounds_hold()
        ),
    ))
}

fn gamma_monotonicity() -> Result<Outcome> {
    let ladder = [-1.0, 0.0, 1.0, 10.0];
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for mesh in [Mesh::interval(0.0, 1.0, 128)?, Mesh::unit_square(16)?] {
        let base = operator(&mesh, ladder[0])?;
        let mut previous: Option<Vec<f64>> = None;
        for &g in &ladder {
            let values = full_spectrum(&base.with_gamma(FieldSpec::constant(g))?)?.eigenvalues;
            if let Some(prev) = &previous {
                for (a, b) in prev.iter().zip(&values) {
                    worst = worst.max((a - b) / a.abs().max(1.0));
                    checked += 1;
                }
            }
            previous = Some(values);
        }
    }
    Ok(Outcome::new(
        worst <= 1e-10,
        format!("{checked} consecutive pairs; max relative decrease {worst:.2e} (<= 1e-10)"),
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion, Option<f64>); 10] = [
        ("oracle agreement (1D)", oracle_agreement, Some(30.0)),
        ("kernel trichotomy", kernel_trichotomy, Some(60.0)),
        ("semiboundedness", semiboundedness, None),
        ("decay envelope / stability / growth", decay_envelope, None),
        ("semigroup law and identity", semigroup_law, None),
        ("discrete Green identity", green_identity, None),
        ("non-positivity witness", nonpositivity_witness, Some(60.0)),
        ("eventual positivity", eventual_positivity, Some(120.0)),
        ("gamma sweep", gamma_sweep, Some(120.0)),
        ("monotonicity in gamma", gamma_monotonicity, None),
    ];
    let mut failures = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run().unwrap_or_else(|e: Error| Outcome::new(false, format!("error: {e}")));
        let secs = start.elapsed().as_secs_f64();
        let in_time = budget.is_none_or(|b| secs <= b);
        let passed = outcome.passed && in_time;
        failures += usize::from(!passed);
        let budget = budget.map(|b| format!(" / {b:.0}s")).unwrap_or_default();
        println!(
            "criterion {:>2} {:<38} {} ({}; {secs:.1}s{budget})",
            i + 1,
            name,
            if passed { "PASS" } else { "FAIL" },
            outcome.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
