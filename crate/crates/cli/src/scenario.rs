//! Dispatch of a scenario to the core modules, with outputs written to one
//! directory and built-in checks collected into a [`RunReport`].

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use wentzell_core::dynamics::{
    decay_envelope_check, eventual_positivity_time, geometric_time_grid, growth_check, kernel_coefficient,
    nonpositivity_search, project_initial_data, uniform_eventual_positivity, Semigroup, ENVELOPE_SLACK,
};
use wentzell_core::export::{
    comparison_csv, eigenvectors_json, evolution_csv, format_float, gamma_sweep_csv, oracle_csv, snapshots_json,
    spectrum_csv, CsvTable,
};
use wentzell_core::gamma_limit::{clamped_spectrum, run_gamma_sweep, sign_structure, GammaSweepConfig};
use wentzell_core::oracle::{compare_fem_oracle, find_wentzell_roots_1d, scan_limit, BeamParams};
use wentzell_core::spectral::{kernel_classify, relative_spread};
use wentzell_core::{DiscreteWentzellOperator, FieldSpec, KernelClass, Mesh, ProductFunction, SpectralDecomposition};

use crate::config::{
    DomainSpec, EvolveParams, ExpectedKernel, Experiment, GammaSweepParams, GreenCheckParams, InitialData,
    OracleCompareParams, PositivityParams, ScenarioConfig, SpectrumParams, TimeGridSpec, TimeUnit,
};
use crate::error::{CliError, Context};
use crate::plot::{emit_svg_plot, Axes, Series};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub phase: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub config: ScenarioConfig,
    pub seed: u64,
    pub timings: Vec<Timing>,
    pub outputs: Vec<String>,
    pub checks: Vec<Check>,
    /// Exploratory observations that do not affect the outcome.
    pub notes: Vec<String>,
    pub passed: bool,
}

struct Run {
    out_dir: PathBuf,
    report: RunReport,
    rng: ChaCha8Rng,
}

impl Run {
    fn timed<T>(&mut self, phase: &str, f: impl FnOnce(&mut Self) -> Result<T, CliError>) -> Result<T, CliError> {
        let start = Instant::now();
        let out = f(self);
        self.report.timings.push(Timing {
            phase: phase.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let path = self.out_dir.join(name);
        self.report.outputs.push(path.display().to_string());
        path
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.path(name);
        std::fs::write(&path, contents).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    fn write_csv(&mut self, name: &str, table: &CsvTable) -> Result<(), CliError> {
        self.write(name, &table.render())
    }

    fn plot(&mut self, name: &str, series: &[Series], axes: &Axes) -> Result<(), CliError> {
        let path = self.path(name);
        emit_svg_plot(series, axes, &path)
    }

    fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.report.checks.push(Check {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }

    fn note(&mut self, note: impl Into<String>) {
        self.report.notes.push(note.into());
    }

    fn random_vector(&mut self, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| self.rng.random_range(-1.0..1.0))
    }
}

/// Runs `config` and writes its outputs into `out_dir`. Deterministic for a
/// fixed `(config, seed)` apart from the timings.
pub fn run_scenario(config: &ScenarioConfig, out_dir: &Path, seed: u64) -> Result<RunReport, CliError> {
    config.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|source| CliError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    let mut run = Run {
        out_dir: out_dir.to_path_buf(),
        report: RunReport {
            config: config.clone(),
            seed,
            timings: Vec::new(),
            outputs: Vec::new(),
            checks: Vec::new(),
            notes: Vec::new(),
            passed: false,
        },
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    let mesh = config.domain.mesh()?;
    match config.experiment {
        Experiment::Spectrum => spectrum(&mut run, config, &mesh)?,
        Experiment::Evolve => evolve(&mut run, config, &mesh)?,
        Experiment::GammaSweep => gamma_sweep(&mut run, config, &mesh)?,
        Experiment::Positivity => positivity(&mut run, config, &mesh)?,
        Experiment::OracleCompare => oracle_compare(&mut run, config)?,
        Experiment::GreenCheck => green_check(&mut run, config, &mesh)?,
    }
    run.report.passed = run.report.checks.iter().all(|c| c.passed);
    Ok(run.report)
}

fn build(run: &mut Run, config: &ScenarioConfig, mesh: &Mesh) -> Result<DiscreteWentzellOperator, CliError> {
    run.timed("assemble", |_| DiscreteWentzellOperator::build(mesh, &config.problem()).context("assembling operator"))
}

fn solve(
    run: &mut Run,
    op: &DiscreteWentzellOperator,
    eigencount: Option<usize>,
) -> Result<SpectralDecomposition, CliError> {
    let k = eigencount.unwrap_or(op.node_count());
    let spectrum = run.timed("eigensolve", |_| op.solve_spectrum(k).context("solving spectrum"))?;
    let verified = spectrum.verify();
    run.check(
        "eigenpairs verified",
        verified.is_ok(),
        format!(
            "max residual {:.2e}, orthonormality defect {:.2e}{}",
            spectrum.max_residual(),
            spectrum.orthonormality_defect(),
            verified.err().map(|e| format!(" ({e})")).unwrap_or_default()
        ),
    );
    Ok(spectrum)
}

fn time_grid(spec: &TimeGridSpec, spectrum: &SpectralDecomposition) -> Result<Vec<f64>, CliError> {
    let scale = match spec.unit {
        TimeUnit::Absolute => 1.0,
        TimeUnit::Lambda1 | TimeUnit::Lambda2 => {
            let index = if spec.unit == TimeUnit::Lambda1 { 0 } else { 1 };
            let lambda = spectrum.eigenvalues.get(index).copied().unwrap_or(f64::NAN);
            if !(lambda > 0.0) {
                return Err(CliError::Config(format!(
                    "times: unit {:?} needs a positive eigenvalue, found {lambda}",
                    spec.unit
                )));
            }
            1.0 / lambda
        }
    };
    let mut grid = geometric_time_grid(spec.start * scale, spec.stop * scale, spec.points)
        .map_err(|e| CliError::Config(format!("times: {e}")))?;
    if spec.include_zero {
        grid.insert(0, 0.0);
    }
    Ok(grid)
}

fn class_name(class: KernelClass) -> &'static str {
    match class {
        KernelClass::ZeroEigenvalueConstantKernel => "zero",
        KernelClass::StrictlyPositive => "positive",
        KernelClass::NegativeFirstEigenvalue => "negative",
    }
}

fn spectrum(run: &mut Run, config: &ScenarioConfig, mesh: &Mesh) -> Result<(), CliError> {
    let params: SpectrumParams = config.params()?;
    let base = build(run, config, mesh)?;
    let variants: Vec<Option<f64>> = match &params.gamma_ladder {
        Some(ladder) if ladder.is_empty() => return Err(CliError::Config("params.gamma_ladder: empty".into())),
        Some(ladder) => ladder.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    if let Some(expect) = &params.expect {
        if expect.len() != variants.len() {
            return Err(CliError::Config(format!(
                "params.expect: {} entries for {} solves",
                expect.len(),
                variants.len()
            )));
        }
    }

    let mut series = Vec::new();
    let mut previous: Option<(f64, Vec<f64>)> = None;
    for (i, gamma) in variants.iter().enumerate() {
        let op = match gamma {
            Some(g) => base.with_gamma(FieldSpec::constant(*g)).context("rebuilding for gamma")?,
            None => base.clone(),
        };
        let spectrum = solve(run, &op, params.eigencount)?;
        let suffix = if variants.len() > 1 { format!("_g{i}") } else { String::new() };
        run.write_csv(&format!("spectrum{suffix}.csv"), &spectrum_csv(&spectrum))?;
        if params.eigenvectors > 0 {
            let json = eigenvectors_json(&spectrum, params.eigenvectors).context("encoding eigenvectors")?;
            run.write(&format!("eigenvectors{suffix}.json"), &json)?;
        }
        let label = gamma.map(|g| format!("gamma = {g}")).unwrap_or_else(|| "spectrum".into());
        if spectrum.len() >= 2 {
            let spread = relative_spread(&spectrum.eigenvector(0));
            match kernel_classify(&spectrum) {
                Ok(class) => {
                    let detail = format!(
                        "{label}: lambda_1 = {}, lambda_2 = {}, class {}, constant first eigenvector {}",
                        format_float(spectrum.eigenvalues[0]),
                        format_float(spectrum.eigenvalues[1]),
                        class_name(class),
                        class == KernelClass::ZeroEigenvalueConstantKernel
                    );
                    let expected = params.expect.as_ref().map(|e| e[i]);
                    let passed = match expected {
                        None => true,
                        Some(ExpectedKernel::Zero) => class == KernelClass::ZeroEigenvalueConstantKernel,
                        Some(ExpectedKernel::Positive) => class == KernelClass::StrictlyPositive,
                        Some(ExpectedKernel::Negative) => class == KernelClass::NegativeFirstEigenvalue,
                    };
                    run.check("kernel classification", passed, format!("{detail} (spread {spread:.1e})"));
                }
                Err(e) => run.check("kernel classification", false, format!("{label}: {e}")),
            }
        }
        if let (Some(g), Some((g_prev, prev))) = (gamma, &previous) {
            if g > g_prev {
                let worst = prev
                    .iter()
                    .zip(&spectrum.eigenvalues)
                    .map(|(a, b)| (a - b) / a.abs().max(1.0))
                    .fold(f64::NEG_INFINITY, f64::max);
                run.check(
                    "eigenvalues nondecreasing in gamma",
                    worst <= 1e-10,
                    format!("gamma {g_prev} -> {g}: max relative decrease {worst:.2e}"),
                );
            }
        }
        series.push(Series::new(
            label,
            spectrum.eigenvalues.iter().enumerate().map(|(k, &l)| ((k + 1) as f64, l)).collect(),
        ));
        previous = Some((gamma.unwrap_or(f64::NAN), spectrum.eigenvalues.clone()));
    }

    if params.rayleigh_samples > 0 {
        let floor = base.gamma_floor();
        let mut worst = f64::INFINITY;
        for _ in 0..params.rayleigh_samples {
            let epsilon = 10f64.powf(-run.rng.random_range(0.0..6.0));
            let u = run.random_vector(base.node_count()) * epsilon + DVector::from_element(base.node_count(), 1.0);
            worst = worst.min(base.rayleigh_quotient(&u).context("rayleigh quotient")? - floor);
        }
        run.check(
            "rayleigh quotient bounded below by gamma_0",
            worst >= -1e-9,
            format!("{} samples, min margin {worst:.3e}, gamma_0 = {floor}", params.rayleigh_samples),
        );
    }

    let positive = series.iter().flat_map(|s| &s.points).any(|p| p.1 > 0.0);
    run.plot(
        "spectrum.svg",
        &series,
        &Axes {
            title: "Eigenvalues".into(),
            x_label: "k".into(),
            y_label: "lambda_k".into(),
            x_log: false,
            y_log: positive,
        },
    )
}

fn initial_data(
    run: &mut Run,
    op: &DiscreteWentzellOperator,
    initial: &InitialData,
    samples: usize,
) -> Result<Vec<DVector<f64>>, CliError> {
    let n = op.node_count();
    match initial {
        InitialData::Fields { interior, boundary } => {
            Ok(vec![project_initial_data(op, interior, boundary).context("projecting initial data")?.into_inner()])
        }
        InitialData::Random => Ok((0..samples.max(1)).map(|_| run.random_vector(n)).collect()),
        InitialData::Hat { node } if *node < n => Ok(vec![ProductFunction::hat(n, *node).into_inner()]),
        InitialData::Hat { node } => Err(CliError::Config(format!("params.initial.node: {node} >= {n} nodes"))),
    }
}

fn evolve(run: &mut Run, config: &ScenarioConfig, mesh: &Mesh) -> Result<(), CliError> {
    let params: EvolveParams = config.params()?;
    let op = build(run, config, mesh)?;
    let spectrum = solve(run, &op, params.eigencount)?;
    let times = time_grid(&params.times, &spectrum)?;
    let data = initial_data(run, &op, &params.initial, params.samples)?;
    let semigroup = Semigroup::new(&spectrum).context("semigroup")?;
    let f = &data[0];
    let evolution = run.timed("evolve", |_| semigroup.evolve(f, &times).context("evolving"))?;
    run.write_csv("evolution.csv", &evolution_csv(&evolution))?;
    if params.snapshots {
        let json = snapshots_json(&evolution).context("encoding snapshots")?;
        run.write("snapshots.json", &json)?;
    }

    if op.gamma_floor() == 0.0 && spectrum.is_complete() {
        run.check(
            "contractive",
            evolution.is_contractive(1e-12),
            format!("H-norm from {} to {}", evolution.h_norm[0], evolution.h_norm[evolution.len() - 1]),
        );
    }
    let class = kernel_classify(&spectrum).context("classifying kernel")?;
    let mut mean = DVector::zeros(f.len());
    let mut rate = spectrum.eigenvalues[0];
    if spectrum.is_complete() {
        match class {
            KernelClass::ZeroEigenvalueConstantKernel | KernelClass::StrictlyPositive => {
                let mut worst: f64 = 0.0;
                for g in &data {
                    worst = worst.max(decay_envelope_check(&spectrum, g, &times).context("decay envelope")?.max_ratio);
                }
                run.check(
                    "decay envelope",
                    worst <= 1.0 + ENVELOPE_SLACK,
                    format!("{} initial data, max ratio {worst:.12}", data.len()),
                );
            }
            KernelClass::NegativeFirstEigenvalue => {
                let report = growth_check(&spectrum, &times).context("growth check")?;
                run.check(
                    "growth at the first eigenvalue",
                    report.holds(),
                    format!("lambda_1 = {}, max relative error {:.2e}", report.lambda1, report.max_relative_error),
                );
            }
        }
    }
    if class == KernelClass::ZeroEigenvalueConstantKernel {
        let c = kernel_coefficient(&op.product_mass, f);
        mean = DVector::from_element(f.len(), c);
        rate = spectrum.eigenvalues[1];
        if config.gamma.as_constant() == Some(0.0) {
            let ones = DVector::from_element(f.len(), 1.0);
            let before = op.h_inner(&ones, f);
            let drift = evolution
                .snapshots
                .iter()
                .map(|u| (op.h_inner(&ones, u) - before).abs())
                .fold(0.0, f64::max);
            run.check(
                "mass conserved",
                drift <= 1e-10 * op.h_norm(f).max(before.abs()),
                format!("max drift of <1, T(t) f>_H {drift:.2e}"),
            );
        }
    }
    if params.law_samples > 0 && spectrum.is_complete() {
        let horizon = 1.0 / spectrum.eigenvalues.iter().copied().find(|l| *l > 1e-6).unwrap_or(1.0);
        let (mut law, mut identity): (f64, f64) = (0.0, 0.0);
        for _ in 0..params.law_samples {
            let g = run.random_vector(f.len());
            let (t, s) = (run.rng.random_range(0.0..horizon), run.rng.random_range(0.0..horizon));
            let norm = op.h_norm(&g);
            let joint = semigroup.apply(&g, t + s).context("semigroup")?.into_inner();
            let inner = semigroup.apply(&g, s).context("semigroup")?.into_inner();
            let split = semigroup.apply(&inner, t).context("semigroup")?.into_inner();
            law = law.max(op.h_norm(&(joint - split)) / norm);
            let back = semigroup.apply(&g, 0.0).context("semigroup")?.into_inner();
            identity = identity.max(op.h_norm(&(back - &g)) / norm);
        }
        run.check(
            "semigroup law and identity",
            law <= 1e-10 && identity <= 1e-10,
            format!("{} samples: law {law:.2e}, identity {identity:.2e}", params.law_samples),
        );
    }

    let norm = op.h_norm(&(f - &mean));
    let deviation: Vec<(f64, f64)> = evolution
        .times
        .iter()
        .zip(&evolution.snapshots)
        .map(|(&t, u)| (t, op.h_norm(&(&u.0 - &mean))))
        .collect();
    let envelope: Vec<(f64, f64)> = evolution.times.iter().map(|&t| (t, norm * (-rate * t).exp())).collect();
    run.plot(
        "evolution.svg",
        &[
            Series::new("|T(t) f - mean|_H", deviation),
            Series::new("envelope", envelope).dashed(),
        ],
        &Axes {
            title: "Distance to the limit".into(),
            x_label: "t".into(),
            y_label: "H-norm".into(),
            x_log: false,
            y_log: true,
        },
    )
}

fn gamma_sweep(run: &mut Run, config: &ScenarioConfig, mesh: &Mesh) -> Result<(), CliError> {
    let params: GammaSweepParams = config.params()?;
    let alpha = config
        .alpha
        .as_constant()
        .ok_or_else(|| CliError::Config("alpha: the sweep needs a constant alpha".into()))?;
    if config.beta.as_constant() != Some(1.0) {
        return Err(CliError::Config("beta: the sweep fixes beta = 1".into()));
    }
    let sweep = GammaSweepConfig {
        mesh: mesh.clone(),
        alpha,
        eta: config.eta,
        ladder: params.ladder.clone(),
        eigencount: params.eigencount,
    };
    sweep.validate().map_err(|e| CliError::Config(format!("params: {e}")))?;
    let report = run.timed("sweep", |_| run_gamma_sweep(&sweep).context("gamma sweep"))?;
    run.write_csv("gamma_sweep.csv", &gamma_sweep_csv(&report))?;

    let lambdas: Vec<String> = report.rungs.iter().map(|r| format!("{:.6}", r.lambda1)).collect();
    run.check("lambda_1 nondecreasing", report.lambda1_nondecreasing(), lambdas.join(", "));
    run.note(format!("lambda_1 strictly increasing: {}", report.lambda1_strictly_increasing()));
    run.check(
        "trace bound",
        report.all_bounds_hold(),
        "|e_1 on boundary|^2 <= lambda_1 / g + 1e-10 at every rung",
    );
    run.check(
        "below discrete clamped",
        report.below_discrete_clamped(),
        format!("discrete clamped lambda_1 = {}", format_float(report.discrete_clamped[0])),
    );
    let target = report.clamped_reference[0];
    let last = report.rungs.last().expect("validated ladder").lambda1;
    if let Some(tolerance) = params.target_tolerance {
        let relative = (last - target).abs() / target;
        run.check(
            "last rung near clamped target",
            relative <= tolerance,
            format!("lambda_1 = {last} vs {target} ({:?}), relative {relative:.3e}", report.clamped_source),
        );
    }
    if mesh.dimension == 2 {
        let clamped = clamped_spectrum(mesh, alpha, 1).context("clamped spectrum")?;
        let census = sign_structure(&clamped.eigenvector(0), clamped.product_mass());
        run.note(format!(
            "clamped first mode census: {} positive, {} negative, {} zero, min {:e}, max {:e}",
            census.positive, census.negative, census.zero, census.min, census.max
        ));
    }

    run.plot(
        "gamma_sweep.svg",
        &[
            Series::new("lambda_1", report.rungs.iter().map(|r| (r.g, r.lambda1)).collect()),
            Series::new(
                "clamped target",
                vec![(params.ladder[0], target), (*params.ladder.last().expect("nonempty"), target)],
            )
            .dashed(),
        ],
        &Axes {
            title: "First eigenvalue along the gamma ladder".into(),
            x_label: "g".into(),
            y_label: "lambda_1".into(),
            x_log: true,
            y_log: false,
        },
    )
}

fn positivity(run: &mut Run, config: &ScenarioConfig, mesh: &Mesh) -> Result<(), CliError> {
    let params: PositivityParams = config.params()?;
    if params.witness_times.is_none() && params.eventual_times.is_none() {
        return Err(CliError::Config("params: give witness_times and/or eventual_times".into()));
    }
    let op = build(run, config, mesh)?;
    let spectrum = solve(run, &op, None)?;
    let n = op.node_count();
    let hats: Vec<ProductFunction> = (0..n).map(|i| ProductFunction::hat(n, i)).collect();

    if let Some(spec) = &params.witness_times {
        let times = time_grid(spec, &spectrum)?;
        let report = run.timed("witness search", |_| {
            nonpositivity_search(&spectrum, &hats, &times).context("non-positivity search")
        })?;
        let mut table = CsvTable::new(&["kind", "family", "candidate", "t", "value", "reference"]);
        let mut push = |kind: &str, family: &str, w: &wentzell_core::dynamics::Witness| {
            table.push(vec![
                kind.into(),
                family.into(),
                w.candidate.to_string(),
                format_float(w.t),
                format_float(w.value),
                format_float(w.reference),
            ])
        };
        if let Some(w) = &report.positivity {
            push("positivity", "hat", w);
        }
        if let Some(w) = &report.linf {
            push("linf", "hat", w);
        }
        let mut linf = report.linf;
        if linf.is_none() && params.indicator {
            let mid = 0.5 * (mesh.nodes.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min)
                + mesh.nodes.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max));
            let indicator = ProductFunction::from_fn(mesh, |x| if x[0] <= mid { 1.0 } else { 0.0 });
            let extra = nonpositivity_search(&spectrum, &[indicator], &times).context("indicator search")?;
            if let Some(w) = &extra.linf {
                push("linf", "indicator", w);
            }
            linf = extra.linf;
        }
        let detail = match &report.positivity {
            Some(w) => format!("hat {} at t = {:e}: min {:e}", w.candidate, w.t, w.value),
            None => format!("none among {} hats x {} times", n, times.len()),
        };
        run.check("positivity witness", report.positivity.is_some(), detail);
        run.note(match linf {
            Some(w) => format!("L-inf witness: sup {:.9} at t = {:e}", w.value, w.t),
            None => format!(
                "no L-inf witness among {n} hats{} x {} times",
                if params.indicator { " and the half-domain indicator" } else { "" },
                times.len()
            ),
        });
        run.write_csv("positivity_witness.csv", &table)?;
    }

    if let Some(spec) = &params.eventual_times {
        let times = time_grid(spec, &spectrum)?;
        let report = run.timed("eventual positivity", |_| {
            uniform_eventual_positivity(&spectrum, &times).context("eventual positivity")
        })?;
        let mut table = CsvTable::new(&["node", "t0", "epsilon0"]);
        for (i, t0) in report.per_node.iter().enumerate() {
            let epsilon0 = 0.5 * kernel_coefficient(&op.product_mass, &hats[i]);
            table.push(vec![i.to_string(), t0.map(format_float).unwrap_or_default(), format_float(epsilon0)]);
        }
        run.write_csv("eventual_positivity.csv", &table)?;
        let settled = report.per_node.iter().filter(|t| t.is_some()).count();
        run.check(
            "uniform eventual positivity",
            report.max_t0.is_some(),
            format!("{settled}/{n} hats settle; max t0 {:?} at node {:?}", report.max_t0, report.worst_node),
        );
        if let Some(node) = report.worst_node {
            let trajectory = eventual_positivity_time(&spectrum, &hats[node], &times).context("worst hat")?;
            let positive_times: Vec<(f64, f64)> = trajectory
                .times
                .iter()
                .copied()
                .zip(trajectory.min_values.iter().copied())
                .filter(|p| p.0 > 0.0)
                .collect();
            let (first, last) = (positive_times[0].0, positive_times[positive_times.len() - 1].0);
            run.plot(
                "eventual_positivity.svg",
                &[
                    Series::new(format!("min T(t) hat_{node}"), positive_times),
                    Series::new("epsilon_0", vec![(first, trajectory.epsilon0), (last, trajectory.epsilon0)]).dashed(),
                ],
                &Axes {
                    title: "Minimum nodal value of the slowest hat".into(),
                    x_label: "t".into(),
                    y_label: "min".into(),
                    x_log: true,
                    y_log: false,
                },
            )?;
        }
    }
    Ok(())
}

fn oracle_compare(run: &mut Run, config: &ScenarioConfig) -> Result<(), CliError> {
    let params: OracleCompareParams = config.params()?;
    let DomainSpec::Interval { a, b, .. } = config.domain else {
        return Err(CliError::Config("domain: oracle-compare needs an interval".into()));
    };
    let constant = |name: &str, f: &FieldSpec| {
        f.as_constant()
            .ok_or_else(|| CliError::Config(format!("{name}: the oracle needs constant coefficients")))
    };
    let beam = BeamParams::new(
        b - a,
        constant("alpha", &config.alpha)?,
        constant("beta", &config.beta)?,
        constant("gamma", &config.gamma)?,
    )
    .map_err(|e| CliError::Config(e.to_string()))?;
    if params.sizes.is_empty() || params.count == 0 {
        return Err(CliError::Config("params: sizes and count must be nonempty".into()));
    }
    let roots = run.timed("oracle", |_| {
        find_wentzell_roots_1d(&beam, params.count, scan_limit(&beam, params.count)).context("oracle roots")
    })?;
    run.write_csv("oracle.csv", &oracle_csv(&roots))?;
    let table = run.timed("fem", |_| compare_fem_oracle(&params.sizes, &beam, params.count).context("comparison"))?;
    run.write_csv("comparison.csv", &comparison_csv(&table))?;

    let last = table.errors.len() - 1;
    let worst = table.errors[last].iter().copied().fold(0.0, f64::max);
    run.check(
        "finest mesh within tolerance",
        worst <= params.tolerance,
        format!("n = {}: max error {worst:.3e} <= {}", table.sizes[last], params.tolerance),
    );
    if let Some(min_ratio) = params.min_ratio {
        if table.sizes.len() >= 2 && params.count >= 2 {
            let ratio = table.errors[last - 1][1] / table.errors[last][1];
            run.check(
                "lambda_2 error ratio",
                ratio >= min_ratio,
                format!("n = {} -> {}: {ratio:.3} >= {min_ratio}", table.sizes[last - 1], table.sizes[last]),
            );
        } else {
            return Err(CliError::Config("params.min_ratio needs two sizes and count >= 2".into()));
        }
    }
    let series: Vec<Series> = (0..params.count)
        .map(|k| {
            Series::new(
                format!("lambda_{}", k + 1),
                table.sizes.iter().zip(&table.errors).map(|(&n, e)| (n as f64, e[k])).collect(),
            )
        })
        .collect();
    let axes = Axes {
        title: "FEM error against the oracle".into(),
        x_label: "n".into(),
        y_label: "relative error".into(),
        x_log: true,
        y_log: true,
    };
    run.plot("comparison.svg", &series, &axes)
}

fn green_check(run: &mut Run, config: &ScenarioConfig, mesh: &Mesh) -> Result<(), CliError> {
    let params: GreenCheckParams = config.params()?;
    let op = build(run, config, mesh)?;
    let nb = op.boundary_nodes().len();
    let mut table = CsvTable::new(&["pair", "residual", "scale", "ratio"]);
    let mut ratios = Vec::with_capacity(params.pairs);
    for pair in 0..params.pairs {
        let u = run.random_vector(op.node_count());
        let v = run.random_vector(op.node_count());
        let (gu, gv) = (run.random_vector(nb), run.random_vector(nb));
        let z_u = op.laplacian_datum_with_flux(&u, &gu).context("laplacian datum")?;
        let z_v = op.laplacian_datum_with_flux(&v, &gv).context("laplacian datum")?;
        let green = op.green_identity_residual(&u, &z_u, &v, &z_v).context("green identity")?;
        let ratio = green.residual / green.scale;
        ratios.push(((pair + 1) as f64, ratio));
        table.push(vec![
            (pair + 1).to_string(),
            format_float(green.residual),
            format_float(green.scale),
            format_float(ratio),
        ]);
    }
    run.write_csv("green.csv", &table)?;
    let worst = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    run.check(
        "green identity",
        worst <= params.tolerance,
        format!("{} pairs, max residual / scale {worst:.2e} <= {:e}", params.pairs, params.tolerance),
    );
    if ratios.iter().any(|r| r.1 > 0.0) {
        run.plot(
            "green.svg",
            &[Series::new("residual / scale", ratios)],
            &Axes {
                title: "Discrete Green identity".into(),
                x_label: "pair".into(),
                y_label: "relative residual".into(),
                x_log: false,
                y_log: true,
            },
        )?;
    }
    Ok(())
}
