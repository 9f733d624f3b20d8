//! The large-`gamma` limit: a ladder of constant `gamma = g_n` with
//! `beta = 1`, the first eigenvalue along it, and the clamped problem
//! (`u = 0` and `d_nu u = 0` on the boundary) as the limit target.
//!
//! For `beta = 1` and an `H`-normalised first eigenvector `e_1`,
//! `lambda_1 = |alpha^{1/2} Delta_h e_1|^2 + g_n |e_1|_Gamma|^2`, so the
//! squared boundary trace norm is at most `lambda_1 / g_n`.

use nalgebra::DVector;

use crate::coefficients::{FieldSpec, ProblemData};
use crate::dynamics::kernel_coefficient;
use crate::error::{Error, Result};
use crate::fem::SymmetricSparseMatrix;
use crate::geometry::Mesh;
use crate::oracle::clamped_beam_eigenvalues;
use crate::spectral::{DiscreteWentzellOperator, SpectralDecomposition};

/// Slack on the trace bound and on monotonicity along the ladder.
pub const SWEEP_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct GammaSweepConfig {
    pub mesh: Mesh,
    /// Constant `alpha`; `beta` is fixed to 1.
    pub alpha: f64,
    pub eta: f64,
    /// Strictly increasing positive values `g_1 < g_2 < ...`.
    pub ladder: Vec<f64>,
    pub eigencount: usize,
}

impl GammaSweepConfig {
    pub fn new(mesh: Mesh, ladder: Vec<f64>, eigencount: usize) -> Self {
        GammaSweepConfig {
            mesh,
            alpha: 1.0,
            eta: 0.5,
            ladder,
            eigencount,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ladder.is_empty() {
            return Err(Error::Precondition("empty gamma ladder".into()));
        }
        if self.ladder.iter().any(|&g| !(g > 0.0) || !g.is_finite()) {
            return Err(Error::Precondition("gamma ladder must be positive and finite".into()));
        }
        if self.ladder.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Precondition("gamma ladder must be strictly increasing".into()));
        }
        if self.eigencount == 0 {
            return Err(Error::Precondition("eigencount must be at least 1".into()));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::Precondition(format!("alpha must be positive, got {}", self.alpha)));
        }
        Ok(())
    }
}

/// Where the clamped target comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClampedSource {
    /// Roots of `cos k cosh k = 1` on an interval.
    Analytic,
    /// The discrete clamped problem on the sweep mesh.
    Discrete,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RungRecord {
    pub g: f64,
    pub eigenvalues: Vec<f64>,
    pub lambda1: f64,
    /// `|e_1|_Gamma|_{Gamma, beta}` for the `H`-normalised `e_1`.
    pub trace_norm: f64,
    /// `lambda_1 / g + SWEEP_SLACK`, the bound on `trace_norm^2`.
    pub bound_rhs: f64,
    /// `clamped_reference[0] - lambda_1`.
    pub gap: f64,
}

impl RungRecord {
    pub fn bound_holds(&self) -> bool {
        self.trace_norm * self.trace_norm <= self.bound_rhs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaSweepReport {
    pub rungs: Vec<RungRecord>,
    /// Limit target used for the gap column.
    pub clamped_reference: Vec<f64>,
    pub clamped_source: ClampedSource,
    /// The discrete clamped eigenvalues on the same mesh.
    pub discrete_clamped: Vec<f64>,
}

impl GammaSweepReport {
    pub fn lambda1_nondecreasing(&self) -> bool {
        self.rungs
            .windows(2)
            .all(|w| w[1].lambda1 >= w[0].lambda1 - SWEEP_SLACK * w[0].lambda1.abs().max(1.0))
    }

    pub fn lambda1_strictly_increasing(&self) -> bool {
        self.rungs.windows(2).all(|w| w[1].lambda1 > w[0].lambda1)
    }

    pub fn all_bounds_hold(&self) -> bool {
        self.rungs.iter().all(RungRecord::bound_holds)
    }

    /// Every Wentzell eigenvalue lies below the matching discrete clamped one.
    pub fn below_discrete_clamped(&self) -> bool {
        self.rungs.iter().all(|r| {
            r.eigenvalues
                .iter()
                .zip(&self.discrete_clamped)
                .all(|(w, c)| *w <= c + SWEEP_SLACK * c.abs().max(1.0))
        })
    }
}

fn base_data(alpha: f64, eta: f64, gamma: f64) -> ProblemData {
    ProblemData::constant(alpha, 1.0, gamma, eta)
}

/// Solves the spectrum at every rung, reusing the `gamma`-independent
/// factorisations across rungs.
pub fn run_gamma_sweep(config: &GammaSweepConfig) -> Result<GammaSweepReport> {
    config.validate()?;
    let base = DiscreteWentzellOperator::build(&config.mesh, &base_data(config.alpha, config.eta, config.ladder[0]))?;
    let clamped = base.solve_clamped_spectrum(config.eigencount.min(config.mesh.interior_nodes().len()))?;
    let discrete_clamped = clamped.eigenvalues.clone();
    let (clamped_reference, clamped_source) = if config.mesh.dimension == 1 {
        let length = config.mesh.measure();
        (clamped_beam_eigenvalues(config.alpha, length, config.eigencount), ClampedSource::Analytic)
    } else {
        (discrete_clamped.clone(), ClampedSource::Discrete)
    };

    let mut rungs = Vec::with_capacity(config.ladder.len());
    for (rung, &g) in config.ladder.iter().enumerate() {
        let wrap = |source: Error| Error::Rung {
            rung,
            g,
            source: Box::new(source),
        };
        let op = base.with_gamma(FieldSpec::constant(g)).map_err(wrap)?;
        let spectrum = op.solve_spectrum(config.eigencount).map_err(wrap)?;
        let e1 = spectrum.eigenvector(0);
        let lambda1 = spectrum.eigenvalues[0];
        rungs.push(RungRecord {
            g,
            lambda1,
            trace_norm: op.boundary_inv_beta.bilinear(&e1, &e1).max(0.0).sqrt(),
            bound_rhs: lambda1 / g + SWEEP_SLACK,
            gap: clamped_reference[0] - lambda1,
            eigenvalues: spectrum.eigenvalues,
        });
    }
    Ok(GammaSweepReport {
        rungs,
        clamped_reference,
        clamped_source,
        discrete_clamped,
    })
}

/// The discrete clamped problem on any mesh: boundary values pinned to
/// zero, the Neumann condition kept in the discrete Laplacian.
pub fn clamped_spectrum(mesh: &Mesh, alpha: f64, eigencount: usize) -> Result<SpectralDecomposition> {
    let op = DiscreteWentzellOperator::build(mesh, &base_data(alpha, alpha.min(1.0), 0.0))?;
    op.solve_clamped_spectrum(eigencount)
}

/// First `eigencount` discrete clamped-plate eigenvalues on a 2D mesh.
pub fn clamped_reference_2d(mesh: &Mesh, alpha: f64, eigencount: usize) -> Result<Vec<f64>> {
    if mesh.dimension != 2 {
        return Err(Error::Precondition(format!(
            "clamped reference expects a 2D mesh, got dimension {}",
            mesh.dimension
        )));
    }
    Ok(clamped_spectrum(mesh, alpha, eigencount)?.eigenvalues)
}

/// Nodal sign census of an eigenvector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignCensus {
    pub positive: usize,
    pub negative: usize,
    /// Nodes with `|v| <= 1e-12 |v|_inf`, e.g. pinned boundary nodes.
    pub zero: usize,
    pub min: f64,
    pub max: f64,
}

impl SignCensus {
    pub fn single_sign(&self) -> bool {
        self.positive == 0 || self.negative == 0
    }
}

/// Sign census after flipping `v` so that its `H`-pairing with the constants
/// is nonnegative.
pub fn sign_structure(eigenvector: &DVector<f64>, product_mass: &SymmetricSparseMatrix) -> SignCensus {
    let flip = if kernel_coefficient(product_mass, eigenvector) < 0.0 { -1.0 } else { 1.0 };
    let v = eigenvector * flip;
    let cutoff = 1e-12 * v.amax();
    SignCensus {
        positive: v.iter().filter(|&&x| x > cutoff).count(),
        negative: v.iter().filter(|&&x| x < -cutoff).count(),
        zero: v.iter().filter(|&&x| x.abs() <= cutoff).count(),
        min: v.min(),
        max: v.max(),
    }
}
