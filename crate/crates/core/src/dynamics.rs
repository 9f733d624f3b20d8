//! The semigroup `T(t) = exp(-t A)` evaluated by spectral expansion,
//!
//! ```text
//! T(t) f = sum_k exp(-lambda_k t) <f, e_k>_H e_k,
//! ```
//!
//! together with probes of its long-time behaviour: decay envelopes,
//! growth for a negative first eigenvalue, and nodal positivity.
//!
//! With the full discrete spectrum the expansion is exact for the discrete
//! operator. A truncated spectrum reports the tail bound
//! `exp(-lambda_kmax t) |f - P f|_H`, where `P` projects onto the computed
//! modes.

use nalgebra::{DMatrix, DVector};

use crate::coefficients::FieldSpec;
use crate::error::{Error, Result};
use crate::fem::{assemble_boundary_load, assemble_load, SymmetricSparseMatrix};
use crate::geometry::Point;
use crate::spectral::{
    kernel_classify, sparse_times_dense, DiscreteWentzellOperator, KernelClass, ProductFunction,
    SpectralDecomposition,
};

/// Slack on the decay and growth envelopes.
pub const ENVELOPE_SLACK: f64 = 1e-10;
/// A nodal value below `-WITNESS_THRESHOLD * |f|_inf` witnesses non-positivity;
/// a sup-norm above `(1 + WITNESS_THRESHOLD) |f|_inf` witnesses growth in `L^inf`.
pub const WITNESS_THRESHOLD: f64 = 1e-6;

/// `H`-orthogonal projection of `(f1, f2)` onto the discrete space: solves
/// `M_H c = load` with `load_i = int f1 phi_i dx + int f2 phi_i / beta dS`.
/// The boundary datum need not be the trace of `f1`.
pub fn project_initial_data(op: &DiscreteWentzellOperator, f1: &FieldSpec, f2: &FieldSpec) -> Result<ProductFunction> {
    f1.validate()?;
    f2.validate()?;
    let degree = f1.degree().max(f2.degree()) + 1;
    project_initial_data_with(op, degree, |x| f1.evaluate(x), |x| f2.evaluate(x))
}

/// [`project_initial_data`] for closures, integrated with rules exact to
/// polynomial degree `degree`.
pub fn project_initial_data_with(
    op: &DiscreteWentzellOperator,
    degree: usize,
    f1: impl Fn(Point) -> f64,
    f2: impl Fn(Point) -> f64,
) -> Result<ProductFunction> {
    let mesh = op.mesh();
    let beta = &op.data().beta;
    let load = assemble_load(mesh, degree, f1)
        + assemble_boundary_load(mesh, degree + beta.degree(), |x| f2(x) / beta.evaluate(x));
    if load.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInitialDatum("load vector is not finite".into()));
    }
    Ok(ProductFunction(op.solve_product_mass(&load)?))
}

/// `(1^T M_H f) / (1^T M_H 1)`: the coefficient of the `H`-orthogonal
/// projection of `f` onto the constants.
pub fn kernel_coefficient(product_mass: &SymmetricSparseMatrix, f: &DVector<f64>) -> f64 {
    let ones = DVector::from_element(product_mass.dim(), 1.0);
    let m1 = product_mass.mul_vec(&ones);
    m1.dot(f) / m1.sum()
}

/// Limit of `T(t) f` as `t -> inf` for `gamma == 0`: the `H`-orthogonal
/// projection onto the constants. For `beta == 1` the coefficient is
/// `(int f1 dx + int f2 dS) / (|Omega| + |Gamma|)`.
pub fn steady_state(op: &DiscreteWentzellOperator, f: &DVector<f64>) -> Result<ProductFunction> {
    if op.data().gamma.as_constant() != Some(0.0) {
        return Err(Error::Precondition(
            "steady state is the constant projection only for gamma == 0".into(),
        ));
    }
    if f.len() != op.node_count() {
        return Err(Error::DimensionMismatch {
            expected: op.node_count(),
            got: f.len(),
        });
    }
    let c = kernel_coefficient(&op.product_mass, f);
    Ok(ProductFunction(DVector::from_element(f.len(), c)))
}

/// `n` times from `t_min` to `t_max` with constant ratio.
pub fn geometric_time_grid(t_min: f64, t_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(t_min > 0.0 && t_max >= t_min && t_max.is_finite()) || n == 0 {
        return Err(Error::Precondition(format!(
            "geometric grid needs 0 < t_min <= t_max and n >= 1, got ({t_min}, {t_max}, {n})"
        )));
    }
    if n == 1 {
        return Ok(vec![t_min]);
    }
    let ratio = (t_max / t_min).ln() / (n - 1) as f64;
    let mut grid: Vec<f64> = (0..n).map(|i| t_min * (ratio * i as f64).exp()).collect();
    grid[n - 1] = t_max;
    Ok(grid)
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::NegativeTime(t));
    }
    Ok(())
}

fn check_nonnegative(f: &DVector<f64>) -> Result<()> {
    if let Some(i) = f.iter().position(|&v| !(v >= 0.0)) {
        return Err(Error::InvalidInitialDatum(format!("negative value {} at node {i}", f[i])));
    }
    if f.amax() == 0.0 {
        return Err(Error::InvalidInitialDatum("datum is identically zero".into()));
    }
    Ok(())
}

/// Spectral evaluation of `T(t)` from a fixed decomposition.
#[derive(Debug, Clone)]
pub struct Semigroup<'a> {
    spectrum: &'a SpectralDecomposition,
    /// `M_H E`; the expansion coefficients of `f` are `(M_H E)^T f`.
    weighted_modes: DMatrix<f64>,
}

impl<'a> Semigroup<'a> {
    pub fn new(spectrum: &'a SpectralDecomposition) -> Result<Self> {
        if spectrum.is_empty() {
            return Err(Error::Precondition("semigroup needs at least one eigenpair".into()));
        }
        let weighted_modes = sparse_times_dense(spectrum.product_mass(), &spectrum.eigenvectors);
        Ok(Semigroup {
            spectrum,
            weighted_modes,
        })
    }

    pub fn spectrum(&self) -> &SpectralDecomposition {
        self.spectrum
    }

    fn check_len(&self, f: &DVector<f64>) -> Result<()> {
        if f.len() != self.spectrum.node_count() {
            return Err(Error::DimensionMismatch {
                expected: self.spectrum.node_count(),
                got: f.len(),
            });
        }
        Ok(())
    }

    /// `<f, e_k>_H` for every computed mode.
    pub fn coefficients(&self, f: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(f)?;
        Ok(self.weighted_modes.tr_mul(f))
    }

    /// `sum_k exp(-lambda_k t) c_k e_k`.
    pub fn apply_coefficients(&self, c: &DVector<f64>, t: f64) -> Result<ProductFunction> {
        check_time(t)?;
        let damped = DVector::from_iterator(
            c.len(),
            c.iter().zip(&self.spectrum.eigenvalues).map(|(c, l)| c * (-l * t).exp()),
        );
        Ok(ProductFunction(&self.spectrum.eigenvectors * damped))
    }

    pub fn apply(&self, f: &DVector<f64>, t: f64) -> Result<ProductFunction> {
        check_time(t)?;
        let c = self.coefficients(f)?;
        self.apply_coefficients(&c, t)
    }

    /// Upper bound on `|T(t) f - T_kmax(t) f|_H`; zero for a complete spectrum.
    pub fn tail_bound(&self, f: &DVector<f64>, t: f64) -> Result<f64> {
        check_time(t)?;
        if self.spectrum.is_complete() {
            return Ok(0.0);
        }
        let c = self.coefficients(f)?;
        let remainder = f - &self.spectrum.eigenvectors * &c;
        let last = *self.spectrum.eigenvalues.last().expect("nonempty spectrum");
        Ok((-last * t).exp() * self.spectrum.h_norm(&remainder))
    }

    pub fn evolve(&self, f: &DVector<f64>, times: &[f64]) -> Result<EvolutionResult> {
        let c = self.coefficients(f)?;
        let mut result = EvolutionResult::default();
        for &t in times {
            let u = self.apply_coefficients(&c, t)?;
            result.times.push(t);
            result.h_norm.push(self.spectrum.h_norm(&u));
            result.min_value.push(u.min());
            result.max_value.push(u.max());
            result.sup_norm.push(u.amax());
            result.tail_bound.push(self.tail_bound(f, t)?);
            result.snapshots.push(u);
        }
        Ok(result)
    }

    /// Minimum nodal value of `T(t) f` for a nonnegative, nonzero `f`.
    pub fn positivity_probe(&self, f: &DVector<f64>, t: f64) -> Result<PositivityProbe> {
        check_nonnegative(f)?;
        let u = self.apply(f, t)?;
        let argmin = u.argmin().0;
        Ok(PositivityProbe {
            min_value: u[argmin],
            argmin,
        })
    }
}

/// `T(t) f` from the given decomposition.
pub fn semigroup_apply(spectrum: &SpectralDecomposition, f: &DVector<f64>, t: f64) -> Result<ProductFunction> {
    Semigroup::new(spectrum)?.apply(f, t)
}

/// Trajectory of `T(t) f` with per-time diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub snapshots: Vec<ProductFunction>,
    pub h_norm: Vec<f64>,
    pub min_value: Vec<f64>,
    pub max_value: Vec<f64>,
    pub sup_norm: Vec<f64>,
    /// Truncation bound on `|T(t) f - T_kmax(t) f|_H`.
    pub tail_bound: Vec<f64>,
}

impl EvolutionResult {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// True when the `H`-norm never increases along an ascending time grid
    /// by more than `slack` relative to its initial value.
    pub fn is_contractive(&self, slack: f64) -> bool {
        let scale = self.h_norm.first().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
        self.h_norm.windows(2).all(|w| w[1] <= w[0] + slack * scale)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositivityProbe {
    pub min_value: f64,
    pub argmin: usize,
}

/// `T(t) f` at one time; see [`Semigroup::positivity_probe`].
pub fn positivity_probe(spectrum: &SpectralDecomposition, f: &DVector<f64>, t: f64) -> Result<PositivityProbe> {
    Semigroup::new(spectrum)?.positivity_probe(f, t)
}

/// Ratios `|T(t) f - mean|_H exp(rate t) / |f|_H` along a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeReport {
    pub rate: f64,
    pub times: Vec<f64>,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
}

impl EnvelopeReport {
    pub fn holds(&self) -> bool {
        self.max_ratio <= 1.0 + ENVELOPE_SLACK
    }
}

/// Envelope ratios against an explicit limit `mean` and decay `rate`.
pub fn decay_envelope_with(
    semigroup: &Semigroup<'_>,
    f: &DVector<f64>,
    mean: &DVector<f64>,
    rate: f64,
    times: &[f64],
) -> Result<EnvelopeReport> {
    let c = semigroup.coefficients(f)?;
    let norm = semigroup.spectrum().h_norm(f);
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    let mut ratios = Vec::with_capacity(times.len());
    for &t in times {
        let u = semigroup.apply_coefficients(&c, t)?.into_inner() - mean;
        ratios.push(semigroup.spectrum().h_norm(&u) * (rate * t).exp() / norm);
    }
    Ok(EnvelopeReport {
        rate,
        times: times.to_vec(),
        max_ratio: ratios.iter().copied().fold(0.0, f64::max),
        ratios,
    })
}

/// Decay envelope selected from the kernel class: rate `lambda_2` towards
/// the constant projection when `lambda_1 = 0`, rate `lambda_1` towards zero
/// when `lambda_1 > 0`.
pub fn decay_envelope_check(
    spectrum: &SpectralDecomposition,
    f: &DVector<f64>,
    times: &[f64],
) -> Result<EnvelopeReport> {
    let semigroup = Semigroup::new(spectrum)?;
    semigroup.check_len(f)?;
    match kernel_classify(spectrum)? {
        KernelClass::ZeroEigenvalueConstantKernel => {
            let c = kernel_coefficient(spectrum.product_mass(), f);
            let mean = DVector::from_element(f.len(), c);
            decay_envelope_with(&semigroup, f, &mean, spectrum.eigenvalues[1], times)
        }
        KernelClass::StrictlyPositive => {
            let mean = DVector::zeros(f.len());
            decay_envelope_with(&semigroup, f, &mean, spectrum.eigenvalues[0], times)
        }
        KernelClass::NegativeFirstEigenvalue => Err(Error::Precondition(
            "decay envelope needs lambda_1 >= 0".into(),
        )),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    pub lambda1: f64,
    pub times: Vec<f64>,
    /// `|T(t) e_1|_H / |e_1|_H` computed by expansion.
    pub measured: Vec<f64>,
    /// `exp(-lambda_1 t)`.
    pub predicted: Vec<f64>,
    /// `max_k exp(-lambda_k t)` over the computed modes.
    pub operator_norm: Vec<f64>,
    pub max_relative_error: f64,
}

impl GrowthReport {
    pub fn holds(&self) -> bool {
        self.max_relative_error <= ENVELOPE_SLACK
    }
}

/// Checks `|T(t)| = exp(-lambda_1 t)`, attained at `e_1`, for `lambda_1 < 0`.
pub fn growth_check(spectrum: &SpectralDecomposition, times: &[f64]) -> Result<GrowthReport> {
    let semigroup = Semigroup::new(spectrum)?;
    let lambda1 = spectrum.eigenvalues[0];
    if lambda1 >= 0.0 {
        return Err(Error::Precondition(format!("growth check needs lambda_1 < 0, got {lambda1}")));
    }
    let e1 = spectrum.eigenvector(0);
    let base = spectrum.h_norm(&e1);
    let mut report = GrowthReport {
        lambda1,
        times: times.to_vec(),
        measured: Vec::with_capacity(times.len()),
        predicted: Vec::with_capacity(times.len()),
        operator_norm: Vec::with_capacity(times.len()),
        max_relative_error: 0.0,
    };
    for &t in times {
        let measured = spectrum.h_norm(&semigroup.apply(&e1, t)?.0) / base;
        let predicted = (-lambda1 * t).exp();
        let operator_norm = spectrum.eigenvalues.iter().map(|l| (-l * t).exp()).fold(0.0, f64::max);
        let error = ((measured - predicted).abs()).max((operator_norm - predicted).abs()) / predicted;
        report.max_relative_error = report.max_relative_error.max(error);
        report.measured.push(measured);
        report.predicted.push(predicted);
        report.operator_norm.push(operator_norm);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventualPositivity {
    /// Smallest grid time from which the minimum stays above `epsilon0`.
    pub t0: Option<f64>,
    /// Half the kernel-projection coefficient of `f`.
    pub epsilon0: f64,
    pub times: Vec<f64>,
    pub min_values: Vec<f64>,
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::Precondition("empty time grid".into()));
    }
    for &t in times {
        check_time(t)?;
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("time grid must be strictly increasing".into()));
    }
    Ok(())
}

fn require_constant_kernel(spectrum: &SpectralDecomposition) -> Result<()> {
    match kernel_classify(spectrum)? {
        KernelClass::ZeroEigenvalueConstantKernel => Ok(()),
        other => Err(Error::Precondition(format!(
            "eventual positivity is probed for a constant kernel, found {other:?}"
        ))),
    }
}

impl Semigroup<'_> {
    fn eventual_positivity(&self, f: &DVector<f64>, times: &[f64]) -> Result<EventualPositivity> {
        check_nonnegative(f)?;
        let epsilon0 = 0.5 * kernel_coefficient(self.spectrum.product_mass(), f);
        let c = self.coefficients(f)?;
        let mut min_values = Vec::with_capacity(times.len());
        for &t in times {
            min_values.push(self.apply_coefficients(&c, t)?.min());
        }
        let mut t0 = None;
        for (k, &m) in min_values.iter().enumerate().rev() {
            if m < epsilon0 {
                break;
            }
            t0 = Some(times[k]);
        }
        Ok(EventualPositivity {
            t0,
            epsilon0,
            times: times.to_vec(),
            min_values,
        })
    }
}

/// First grid time after which `min T(t) f >= epsilon0` on the rest of the
/// grid, for `gamma == 0` and nonnegative nonzero `f`.
pub fn eventual_positivity_time(
    spectrum: &SpectralDecomposition,
    f: &DVector<f64>,
    times: &[f64],
) -> Result<EventualPositivity> {
    check_grid(times)?;
    require_constant_kernel(spectrum)?;
    Semigroup::new(spectrum)?.eventual_positivity(f, times)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformPositivity {
    /// `t0` of the hat function at each node.
    pub per_node: Vec<Option<f64>>,
    /// Largest `t0` over the family, `None` if some hat never settles.
    pub max_t0: Option<f64>,
    pub worst_node: Option<usize>,
}

/// [`eventual_positivity_time`] for every nodal hat function.
pub fn uniform_eventual_positivity(spectrum: &SpectralDecomposition, times: &[f64]) -> Result<UniformPositivity> {
    check_grid(times)?;
    require_constant_kernel(spectrum)?;
    let semigroup = Semigroup::new(spectrum)?;
    let n = spectrum.node_count();
    let mut per_node = Vec::with_capacity(n);
    for i in 0..n {
        per_node.push(semigroup.eventual_positivity(&ProductFunction::hat(n, i), times)?.t0);
    }
    let mut worst: Option<(usize, f64)> = None;
    let mut settled = true;
    for (i, t0) in per_node.iter().enumerate() {
        match t0 {
            Some(t) if worst.is_none_or(|(_, w)| *t > w) => worst = Some((i, *t)),
            Some(_) => {}
            None => settled = false,
        }
    }
    Ok(UniformPositivity {
        max_t0: if settled { worst.map(|w| w.1) } else { None },
        worst_node: worst.map(|w| w.0),
        per_node,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    /// Index into the candidate family.
    pub candidate: usize,
    pub t: f64,
    /// Minimum nodal value (positivity) or sup-norm (`L^inf`) of `T(t) f`.
    pub value: f64,
    /// `|f|_inf`.
    pub reference: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonpositivityReport {
    pub positivity: Option<Witness>,
    pub linf: Option<Witness>,
    pub candidates: usize,
    pub times: usize,
}

/// Scans `family x times` for the first `(f, t)` with
/// `min T(t) f <= -WITNESS_THRESHOLD |f|_inf`, and independently for one with
/// `|T(t) f|_inf > (1 + WITNESS_THRESHOLD) |f|_inf`. Finding neither is a
/// valid outcome.
pub fn nonpositivity_search(
    spectrum: &SpectralDecomposition,
    family: &[ProductFunction],
    times: &[f64],
) -> Result<NonpositivityReport> {
    for &t in times {
        check_time(t)?;
    }
    let semigroup = Semigroup::new(spectrum)?;
    let mut report = NonpositivityReport {
        positivity: None,
        linf: None,
        candidates: family.len(),
        times: times.len(),
    };
    for (i, f) in family.iter().enumerate() {
        check_nonnegative(f)?;
        let reference = f.amax();
        let c = semigroup.coefficients(f)?;
        for &t in times {
            if report.positivity.is_some() && report.linf.is_some() {
                return Ok(report);
            }
            let u = semigroup.apply_coefficients(&c, t)?;
            let (min, sup) = (u.min(), u.amax());
            if report.positivity.is_none() && min <= -WITNESS_THRESHOLD * reference {
                report.positivity = Some(Witness {
                    candidate: i,
                    t,
                    value: min,
                    reference,
                });
            }
            if report.linf.is_none() && sup > (1.0 + WITNESS_THRESHOLD) * reference {
                report.linf = Some(Witness {
                    candidate: i,
                    t,
                    value: sup,
                    reference,
                });
            }
        }
    }
    Ok(report)
}
