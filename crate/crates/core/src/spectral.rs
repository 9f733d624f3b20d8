//! The discrete Wentzell bi-Laplacian on `L^2(Omega) x L^2(Gamma, beta^-1 dS)`.
//!
//! A single P1 nodal vector represents the pair `(u1, u2)`: its boundary
//! entries are the trace `u2 = tr u1`. The fourth-order form is evaluated in
//! mixed fashion,
//!
//! ```text
//! a(u, v) = (W u)^T M_alpha (W v) + u^T B_{gamma/beta} v,    W = -M^{-1} K,
//! ```
//!
//! where `W` is the variational Neumann Laplacian (the Neumann condition is
//! natural in `K`). The product-space inner product is `M_H = M + B_{1/beta}`.
//!
//! Eigenpairs of `A e = lambda M_H e` are computed from a Gram factor of the
//! shifted form, `A - gamma_0 M_H = G^T G`, as squared singular values of
//! `G L^{-T}` with `M_H = L L^T`. The bi-Laplacian squares the condition
//! number of `K`, so reducing `L^{-1} A L^{-T}` explicitly would lose the
//! small eigenvalues to rounding; the singular value route keeps them to
//! absolute accuracy `eps * sigma_max`, i.e. `eps * sqrt(lambda_max)` on
//! `sqrt(lambda)`.

use std::ops::{Deref, DerefMut, Range};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::coefficients::{validate_hypothesis, FieldSpec, ProblemData};
use crate::error::{Error, Result};
use crate::fem::{
    assemble_boundary_mass, assemble_boundary_mass_with, assemble_mass, assemble_stiffness, SymmetricSparseMatrix,
};
use crate::geometry::Mesh;

/// Largest node count handled by the dense pipeline.
pub const DEFAULT_NODE_CAP: usize = 8192;
/// Relative eigen-residual accepted by [`SpectralDecomposition::verify`].
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-8;
/// Deviation from `M_H`-orthonormality accepted by [`SpectralDecomposition::verify`].
pub const ORTHONORMALITY_TOL: f64 = 1e-10;
/// `|lambda_1| <= ZERO_BAND * max(lambda_2, 1)` counts as a zero eigenvalue.
pub const ZERO_BAND: f64 = 1e-9;
/// Relative component spread below which a vector counts as constant.
pub const CONSTANT_SPREAD_TOL: f64 = 1e-6;
/// Relative interior residual accepted for a Laplacian datum.
pub const LAPLACIAN_DATUM_TOL: f64 = 1e-8;
const SVD_MAX_ITERATIONS: usize = 10_000;

/// Nodal coefficients of `(u1, u2)`; the boundary component is the
/// restriction to boundary nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductFunction(pub DVector<f64>);

impl ProductFunction {
    pub fn new(coefficients: DVector<f64>) -> Self {
        ProductFunction(coefficients)
    }

    pub fn ones(n: usize) -> Self {
        ProductFunction(DVector::from_element(n, 1.0))
    }

    pub fn zeros(n: usize) -> Self {
        ProductFunction(DVector::zeros(n))
    }

    /// Unit nodal hat function at node `i`.
    pub fn hat(n: usize, i: usize) -> Self {
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        ProductFunction(v)
    }

    pub fn from_fn(mesh: &Mesh, f: impl Fn([f64; 2]) -> f64) -> Self {
        ProductFunction(DVector::from_iterator(mesh.node_count(), mesh.nodes.iter().map(|&x| f(x))))
    }

    /// Values on the given boundary nodes.
    pub fn trace(&self, boundary_nodes: &[usize]) -> DVector<f64> {
        DVector::from_iterator(boundary_nodes.len(), boundary_nodes.iter().map(|&i| self.0[i]))
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }
}

impl Deref for ProductFunction {
    type Target = DVector<f64>;
    fn deref(&self) -> &DVector<f64> {
        &self.0
    }
}

impl DerefMut for ProductFunction {
    fn deref_mut(&mut self) -> &mut DVector<f64> {
        &mut self.0
    }
}

impl From<DVector<f64>> for ProductFunction {
    fn from(v: DVector<f64>) -> Self {
        ProductFunction(v)
    }
}

/// The discrete pair (form, product-space inner product) and the matrices
/// it is built from.
#[derive(Clone)]
pub struct DiscreteWentzellOperator {
    mesh: Mesh,
    data: ProblemData,
    /// `M`.
    pub mass: SymmetricSparseMatrix,
    /// `K`.
    pub stiffness: SymmetricSparseMatrix,
    /// `M_alpha`.
    pub mass_alpha: SymmetricSparseMatrix,
    /// `B_{gamma/beta}`.
    pub boundary_gamma_beta: SymmetricSparseMatrix,
    /// `B_{1/beta}`.
    pub boundary_inv_beta: SymmetricSparseMatrix,
    /// `B_1`, the unweighted boundary pairing used for fluxes.
    pub boundary_unit: SymmetricSparseMatrix,
    /// `M_H = M + B_{1/beta}`.
    pub product_mass: SymmetricSparseMatrix,
    /// Dense `A_form`.
    pub form: DMatrix<f64>,
    neumann_laplacian: DMatrix<f64>,
    mass_factor: Cholesky<f64, Dyn>,
    product_factor: Cholesky<f64, Dyn>,
    alpha_factor: Cholesky<f64, Dyn>,
    boundary_nodes: Vec<usize>,
    /// `M^{-1} E` with `E` the boundary-node injection.
    inv_mass_boundary: DMatrix<f64>,
    /// Cholesky factor of `E^T M^{-1} E`.
    boundary_schur: Cholesky<f64, Dyn>,
    unit_boundary_block: Cholesky<f64, Dyn>,
    inv_beta_boundary_block: Cholesky<f64, Dyn>,
    gamma_floor: f64,
}

impl std::fmt::Debug for DiscreteWentzellOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiscreteWentzellOperator")
            .field("nodes", &self.mesh.node_count())
            .field("boundary_nodes", &self.boundary_nodes.len())
            .field("gamma_floor", &self.gamma_floor)
            .finish_non_exhaustive()
    }
}

impl DiscreteWentzellOperator {
    /// Assembles the operator after checking the coefficient hypothesis.
    pub fn build(mesh: &Mesh, data: &ProblemData) -> Result<Self> {
        Self::build_with_cap(mesh, data, DEFAULT_NODE_CAP)
    }

    pub fn build_with_cap(mesh: &Mesh, data: &ProblemData, node_cap: usize) -> Result<Self> {
        mesh.validate()?;
        validate_hypothesis(mesh, data)?;
        let n = mesh.node_count();
        if n > node_cap {
            return Err(Error::Precondition(format!("{n} nodes exceed the dense cap of {node_cap}")));
        }

        let one = FieldSpec::constant(1.0);
        let mass = assemble_mass(mesh, &one);
        let stiffness = assemble_stiffness(mesh)?;
        let mass_alpha = assemble_mass(mesh, &data.alpha);
        let boundary_unit = assemble_boundary_mass(mesh, &one);

        let mass_factor = Cholesky::new(mass.to_dense()).ok_or(Error::Factorization("M"))?;
        let alpha_factor = Cholesky::new(mass_alpha.to_dense()).ok_or(Error::Factorization("M_alpha"))?;

        // W = -M^{-1} K through the factorisation; M^{-1} itself is never formed.
        let neumann_laplacian = -mass_factor.solve(&stiffness.to_dense());

        let boundary_nodes = mesh.boundary_nodes();
        let nb = boundary_nodes.len();
        let mut injection = DMatrix::zeros(n, nb);
        for (k, &i) in boundary_nodes.iter().enumerate() {
            injection[(i, k)] = 1.0;
        }
        let inv_mass_boundary = mass_factor.solve(&injection);
        let schur = DMatrix::from_fn(nb, nb, |r, c| inv_mass_boundary[(boundary_nodes[r], c)]);
        let boundary_schur = Cholesky::new(symmetrize(schur)).ok_or(Error::Factorization("E^T M^-1 E"))?;
        let unit_boundary_block = Cholesky::new(boundary_unit.submatrix(&boundary_nodes, &boundary_nodes))
            .ok_or(Error::Factorization("B_1"))?;

        let mut op = DiscreteWentzellOperator {
            mesh: mesh.clone(),
            data: data.clone(),
            product_mass: mass.clone(),
            mass,
            stiffness,
            mass_alpha,
            boundary_gamma_beta: boundary_unit.clone(),
            boundary_inv_beta: boundary_unit.clone(),
            boundary_unit,
            form: DMatrix::zeros(0, 0),
            neumann_laplacian,
            product_factor: mass_factor.clone(),
            mass_factor,
            alpha_factor,
            boundary_nodes,
            inv_mass_boundary,
            boundary_schur,
            unit_boundary_block: unit_boundary_block.clone(),
            inv_beta_boundary_block: unit_boundary_block,
            gamma_floor: 0.0,
        };
        op.assemble_boundary_terms()?;
        Ok(op)
    }

    /// Same operator with a different `gamma`, reusing every `gamma`-independent
    /// factorisation.
    pub fn with_gamma(&self, gamma: FieldSpec) -> Result<Self> {
        gamma.validate()?;
        let mut op = self.clone();
        op.data = self.data.with_gamma(gamma);
        op.assemble_boundary_terms()?;
        Ok(op)
    }

    fn assemble_boundary_terms(&mut self) -> Result<()> {
        let degree = self.data.boundary_degree();
        let (beta, gamma) = (self.data.beta.clone(), self.data.gamma.clone());
        self.boundary_inv_beta = assemble_boundary_mass_with(&self.mesh, degree, |x| 1.0 / beta.evaluate(x));
        self.boundary_gamma_beta =
            assemble_boundary_mass_with(&self.mesh, degree, |x| gamma.evaluate(x) / beta.evaluate(x));
        self.product_mass = self.mass.add(&self.boundary_inv_beta);
        self.product_factor = Cholesky::new(self.product_mass.to_dense()).ok_or(Error::Factorization("M_H"))?;
        self.inv_beta_boundary_block = Cholesky::new(
            self.boundary_inv_beta.submatrix(&self.boundary_nodes, &self.boundary_nodes),
        )
        .ok_or(Error::Factorization("B_{1/beta}"))?;
        self.gamma_floor = self.data.gamma_floor(&self.mesh);

        let weighted = sparse_times_dense(&self.mass_alpha, &self.neumann_laplacian);
        let mut form = self.neumann_laplacian.tr_mul(&weighted);
        for i in 0..form.nrows() {
            for (j, v) in self.boundary_gamma_beta.row(i) {
                form[(i, j)] += v;
            }
        }
        self.form = symmetrize(form);
        Ok(())
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn data(&self) -> &ProblemData {
        &self.data
    }

    pub fn node_count(&self) -> usize {
        self.mesh.node_count()
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    /// `gamma_0 = min{min gamma, 0}` over boundary quadrature points.
    pub fn gamma_floor(&self) -> f64 {
        self.gamma_floor
    }

    /// Dense `W = -M^{-1} K`.
    pub fn neumann_laplacian_matrix(&self) -> &DMatrix<f64> {
        &self.neumann_laplacian
    }

    fn check_len(&self, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.node_count() {
            return Err(Error::DimensionMismatch {
                expected: self.node_count(),
                got: v.len(),
            });
        }
        Ok(())
    }

    fn check_boundary_len(&self, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.boundary_nodes.len() {
            return Err(Error::DimensionMismatch {
                expected: self.boundary_nodes.len(),
                got: v.len(),
            });
        }
        Ok(())
    }

    /// `c` with `M_H c = rhs`.
    pub fn solve_product_mass(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(rhs)?;
        Ok(self.product_factor.solve(rhs))
    }

    /// `z` with `M z = -K u`: the discrete Neumann Laplacian of `u`.
    pub fn discrete_neumann_laplacian(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(u)?;
        Ok(-self.mass_factor.solve(&self.stiffness.mul_vec(u)))
    }

    /// Laplacian datum of `u` whose Neumann trace is the boundary vector
    /// `flux`: `z = M^{-1}(E B_1 flux - K u)`.
    pub fn laplacian_datum_with_flux(&self, u: &DVector<f64>, flux: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(u)?;
        self.check_boundary_len(flux)?;
        let load = self.embed_boundary(&self.boundary_block_mul(&self.boundary_unit, flux)) - self.stiffness.mul_vec(u);
        Ok(self.mass_factor.solve(&load))
    }

    /// `u^T M_H v`.
    pub fn h_inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        self.product_mass.bilinear(u, v)
    }

    pub fn h_norm(&self, u: &DVector<f64>) -> f64 {
        self.h_inner(u, u).max(0.0).sqrt()
    }

    /// `a(u, u)` evaluated through the mixed factorisation.
    pub fn quadratic_form(&self, u: &DVector<f64>) -> Result<f64> {
        let z = self.discrete_neumann_laplacian(u)?;
        Ok(self.mass_alpha.bilinear(&z, &z) + self.boundary_gamma_beta.bilinear(u, u))
    }

    /// `a(u, v)`.
    pub fn bilinear_form(&self, u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        let zu = self.discrete_neumann_laplacian(u)?;
        let zv = self.discrete_neumann_laplacian(v)?;
        Ok(self.mass_alpha.bilinear(&zu, &zv) + self.boundary_gamma_beta.bilinear(u, v))
    }

    /// `A_form u` evaluated through solves: `-K M^{-1} M_alpha z + B u`.
    pub fn apply_form(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        let z = self.discrete_neumann_laplacian(u)?;
        let w = self.mass_factor.solve(&self.mass_alpha.mul_vec(&z));
        Ok(-self.stiffness.mul_vec(&w) + self.boundary_gamma_beta.mul_vec(u))
    }

    pub fn rayleigh_quotient(&self, u: &DVector<f64>) -> Result<f64> {
        self.check_len(u)?;
        let denom = self.h_inner(u, u);
        if !(denom > 0.0) {
            return Err(Error::ZeroVector);
        }
        Ok(self.quadratic_form(u)? / denom)
    }

    /// Variational Neumann trace `g` of `u` given its Laplacian datum `z`:
    /// `B_1 g = (M z + K u)` on boundary rows. The interior rows must vanish.
    /// Returned in the order of [`Self::boundary_nodes`].
    pub fn boundary_flux_recovery(&self, u: &DVector<f64>, z: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(u)?;
        self.check_len(z)?;
        let mz = self.mass.mul_vec(z);
        let ku = self.stiffness.mul_vec(u);
        let residual = &mz + &ku;
        let scale = 1.0 + mz.amax() + ku.amax();
        let mask = self.mesh.boundary_mask();
        let interior = (0..residual.len())
            .filter(|&i| !mask[i])
            .map(|i| residual[i].abs())
            .fold(0.0, f64::max);
        if interior > LAPLACIAN_DATUM_TOL * scale {
            return Err(Error::NotLaplacianDatum(interior / scale));
        }
        let boundary_rows = DVector::from_iterator(
            self.boundary_nodes.len(),
            self.boundary_nodes.iter().map(|&i| residual[i]),
        );
        Ok(self.unit_boundary_block.solve(&boundary_rows))
    }

    /// Discrete form of Green's second identity,
    /// `<z_u, v> - <u, z_v> - (<g_u, tr v>_Gamma - <tr u, g_v>_Gamma)`,
    /// with the fluxes recovered from the data. Exact for any valid data up
    /// to solver rounding.
    pub fn green_identity_residual(
        &self,
        u: &DVector<f64>,
        z_u: &DVector<f64>,
        v: &DVector<f64>,
        z_v: &DVector<f64>,
    ) -> Result<GreenResidual> {
        let g_u = self.boundary_flux_recovery(u, z_u)?;
        let g_v = self.boundary_flux_recovery(v, z_v)?;
        let tr_u = ProductFunction(u.clone()).trace(&self.boundary_nodes);
        let tr_v = ProductFunction(v.clone()).trace(&self.boundary_nodes);
        let terms = [
            self.mass.bilinear(z_u, v),
            -self.mass.bilinear(u, z_v),
            -g_u.dot(&self.boundary_block_mul(&self.boundary_unit, &tr_v)),
            tr_u.dot(&self.boundary_block_mul(&self.boundary_unit, &g_v)),
        ];
        Ok(GreenResidual {
            residual: terms.iter().sum::<f64>().abs(),
            scale: terms.iter().map(|t| t.abs()).sum(),
        })
    }

    /// Blockwise action of the operator matrix on `u`:
    /// interior `Delta(alpha Delta u)`, boundary `-beta d_nu(alpha Delta u) + gamma u`.
    ///
    /// With `z = W u` and `w = M^{-1} M_alpha z` (the L2 projection of
    /// `alpha Delta u`), the interior block is the Laplacian datum of `w`
    /// whose interior rows match `-K w`, with the free boundary flux chosen to
    /// minimise its L2 norm. The boundary block is the `B_{1/beta}`
    /// representative of `-B_1 g + B_{gamma/beta} u`, so that
    /// `<blocks, v>_H = v^T A_form u` for every nodal `v`.
    pub fn apply_operator_blocks(&self, u: &DVector<f64>) -> Result<OperatorBlocks> {
        let z = self.discrete_neumann_laplacian(u)?;
        let w = self.mass_factor.solve(&self.mass_alpha.mul_vec(&z));
        let kw = self.stiffness.mul_vec(&w);
        // B_1 g = (E^T M^{-1} E)^{-1} E^T M^{-1} K w
        let rhs = self.inv_mass_boundary.tr_mul(&kw);
        let b_g = self.boundary_schur.solve(&rhs);
        let flux = self.unit_boundary_block.solve(&b_g);
        let interior = &self.inv_mass_boundary * &b_g - self.mass_factor.solve(&kw);
        let tr_u = ProductFunction(u.clone()).trace(&self.boundary_nodes);
        let load = self.boundary_block_mul(&self.boundary_gamma_beta, &tr_u) - &b_g;
        let boundary = self.inv_beta_boundary_block.solve(&load);
        Ok(OperatorBlocks {
            interior,
            boundary,
            flux,
        })
    }

    /// `<(b1, b2), v>_H = v^T M b1 + tr(v)^T B_{1/beta} b2`.
    pub fn pair_blocks(&self, blocks: &OperatorBlocks, v: &DVector<f64>) -> f64 {
        let tr_v = ProductFunction(v.clone()).trace(&self.boundary_nodes);
        self.mass.bilinear(v, &blocks.interior)
            + tr_v.dot(&self.boundary_block_mul(&self.boundary_inv_beta, &blocks.boundary))
    }

    fn boundary_block_mul(&self, matrix: &SymmetricSparseMatrix, x: &DVector<f64>) -> DVector<f64> {
        let full = matrix.mul_vec(&self.embed_boundary(x));
        DVector::from_iterator(self.boundary_nodes.len(), self.boundary_nodes.iter().map(|&i| full[i]))
    }

    fn embed_boundary(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut full = DVector::zeros(self.node_count());
        for (k, &i) in self.boundary_nodes.iter().enumerate() {
            full[i] = x[k];
        }
        full
    }

    /// Gram factor `G` with `G^T G = A_form - gamma_0 M_H`.
    fn gram_factor(&self) -> Result<DMatrix<f64>> {
        let n = self.node_count();
        let nb = self.boundary_nodes.len();
        let shift = self.gamma_floor;
        let r_alpha = self.alpha_factor.l().transpose();
        let mut blocks = vec![&r_alpha * &self.neumann_laplacian];

        // Boundary part: B_{(gamma - gamma_0)/beta} restricted to boundary nodes.
        let shifted_boundary = self.boundary_gamma_beta.add(&self.boundary_inv_beta.scale(-shift));
        let block = shifted_boundary.submatrix(&self.boundary_nodes, &self.boundary_nodes);
        if block.amax() > 0.0 {
            let root = psd_square_root(block);
            let mut rows = DMatrix::zeros(nb, n);
            for (k, &i) in self.boundary_nodes.iter().enumerate() {
                rows.set_column(i, &root.column(k));
            }
            blocks.push(rows);
        }
        if shift < 0.0 {
            blocks.push(self.mass_factor.l().transpose() * (-shift).sqrt());
        }
        Ok(stack_rows(&blocks))
    }

    /// First `k` eigenpairs of `A_form e = lambda M_H e`, ascending and
    /// `M_H`-orthonormal.
    pub fn solve_spectrum(&self, k: usize) -> Result<SpectralDecomposition> {
        let n = self.node_count();
        if k > n {
            return Err(Error::TooManyEigenpairs {
                requested: k,
                available: n,
            });
        }
        let gram = self.gram_factor()?;
        let (values, vectors) = gram_eigenpairs(&gram, &self.product_factor, self.gamma_floor, k)?;
        let mut decomposition = SpectralDecomposition {
            eigenvalues: values,
            eigenvectors: vectors,
            residuals: Vec::new(),
            product_mass: self.product_mass.clone(),
        };
        decomposition.normalize_signs();
        decomposition.residuals = decomposition.eigen_residuals(&self.form, &self.product_mass);
        Ok(decomposition)
    }

    /// Eigenpairs with every boundary node pinned to zero: the discrete
    /// clamped problem, whose form domain is the trace-free part of the
    /// Wentzell form domain. Eigenvectors are returned at full node
    /// dimension with zero boundary entries.
    pub fn solve_clamped_spectrum(&self, k: usize) -> Result<SpectralDecomposition> {
        let interior = self.mesh.interior_nodes();
        if interior.is_empty() {
            return Err(Error::Precondition("mesh has no interior nodes".into()));
        }
        if k > interior.len() {
            return Err(Error::TooManyEigenpairs {
                requested: k,
                available: interior.len(),
            });
        }
        let r_alpha = self.alpha_factor.l().transpose();
        let w_interior = DMatrix::from_fn(self.node_count(), interior.len(), |r, c| {
            self.neumann_laplacian[(r, interior[c])]
        });
        let gram = r_alpha * w_interior;
        let mass_ii = Cholesky::new(self.mass.submatrix(&interior, &interior))
            .ok_or(Error::Factorization("M_II"))?;
        let (values, reduced) = gram_eigenpairs(&gram, &mass_ii, 0.0, k)?;
        let mut vectors = DMatrix::zeros(self.node_count(), k);
        for (c, &i) in interior.iter().enumerate() {
            vectors.set_row(i, &reduced.row(c));
        }
        let mut decomposition = SpectralDecomposition {
            eigenvalues: values,
            eigenvectors: vectors,
            residuals: Vec::new(),
            product_mass: self.mass.clone(),
        };
        decomposition.normalize_signs();
        let form_ii = DMatrix::from_fn(interior.len(), interior.len(), |r, c| self.form[(interior[r], interior[c])]);
        let reduced_vectors = DMatrix::from_fn(interior.len(), k, |r, c| decomposition.eigenvectors[(interior[r], c)]);
        let mass_sparse = SymmetricSparseMatrix::from_triplets(
            interior.len(),
            (0..interior.len())
                .flat_map(|r| (0..interior.len()).map(move |c| (r, c)))
                .map(|(r, c)| (r, c, self.mass.get(interior[r], interior[c])))
                .filter(|t| t.2 != 0.0)
                .collect(),
        );
        decomposition.residuals = residuals_of(&form_ii, &mass_sparse, &decomposition.eigenvalues, &reduced_vectors);
        Ok(decomposition)
    }

    /// Classifies the kernel from the first two eigenvalues.
    pub fn kernel_classify(&self, spectrum: &SpectralDecomposition) -> Result<KernelClass> {
        kernel_classify(spectrum)
    }
}

/// Kernel trichotomy from `lambda_1` against `ZERO_BAND * max(lambda_2, 1)`.
/// A zero eigenvalue is only reported when `e_1` is verified constant.
pub fn kernel_classify(spectrum: &SpectralDecomposition) -> Result<KernelClass> {
    if spectrum.len() < 2 {
        return Err(Error::Precondition("kernel classification needs two eigenvalues".into()));
    }
    let (l1, l2) = (spectrum.eigenvalues[0], spectrum.eigenvalues[1]);
    let band = ZERO_BAND * l2.max(1.0);
    if l1 > band {
        Ok(KernelClass::StrictlyPositive)
    } else if l1 < -band {
        Ok(KernelClass::NegativeFirstEigenvalue)
    } else {
        let spread = relative_spread(&spectrum.eigenvector(0));
        if spread <= CONSTANT_SPREAD_TOL {
            Ok(KernelClass::ZeroEigenvalueConstantKernel)
        } else {
            Err(Error::AmbiguousKernel { lambda1: l1, spread })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelClass {
    ZeroEigenvalueConstantKernel,
    StrictlyPositive,
    NegativeFirstEigenvalue,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenResidual {
    pub residual: f64,
    /// Sum of the magnitudes of the four pairings.
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorBlocks {
    /// Nodal vector of `Delta(alpha Delta u)`.
    pub interior: DVector<f64>,
    /// Boundary-node vector of `-beta d_nu(alpha Delta u) + gamma u`.
    pub boundary: DVector<f64>,
    /// Recovered flux `d_nu(alpha Delta u)` on boundary nodes.
    pub flux: DVector<f64>,
}

/// Ascending eigenvalues with `M_H`-orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
    /// Normwise relative residuals
    /// `|A e - lambda M_H e| / ((|A| + |lambda| |M_H|) |e|)`.
    pub residuals: Vec<f64>,
    product_mass: SymmetricSparseMatrix,
}

impl SpectralDecomposition {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.eigenvectors.nrows()
    }

    /// True when every eigenvector of the discrete space is present.
    pub fn is_complete(&self) -> bool {
        self.len() == self.node_count()
    }

    pub fn eigenvector(&self, k: usize) -> DVector<f64> {
        self.eigenvectors.column(k).into_owned()
    }

    pub fn product_mass(&self) -> &SymmetricSparseMatrix {
        &self.product_mass
    }

    pub fn h_inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        self.product_mass.bilinear(u, v)
    }

    pub fn h_norm(&self, u: &DVector<f64>) -> f64 {
        self.h_inner(u, u).max(0.0).sqrt()
    }

    /// `max_{j,k} |e_j^T M_H e_k - delta_jk|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let me = sparse_times_dense(&self.product_mass, &self.eigenvectors);
        let gram = self.eigenvectors.tr_mul(&me);
        (gram - DMatrix::identity(self.len(), self.len())).amax()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    /// Checks eigen-residuals, orthonormality and ordering.
    pub fn verify(&self) -> Result<()> {
        if self.max_residual() > EIGEN_RESIDUAL_TOL {
            return Err(Error::Precondition(format!("eigen-residual {:e}", self.max_residual())));
        }
        let defect = self.orthonormality_defect();
        if defect > ORTHONORMALITY_TOL {
            return Err(Error::Precondition(format!("orthonormality defect {defect:e}")));
        }
        if self.eigenvalues.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Precondition("eigenvalues not ascending".into()));
        }
        Ok(())
    }

    /// Index ranges of numerically degenerate eigenvalues
    /// (gap below `1e-8 * max(|lambda|, 1)`).
    pub fn clusters(&self) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for k in 1..=self.len() {
            let split = k == self.len() || {
                let (a, b) = (self.eigenvalues[k - 1], self.eigenvalues[k]);
                b - a >= 1e-8 * a.abs().max(b.abs()).max(1.0)
            };
            if split {
                out.push(start..k);
                start = k;
            }
        }
        out
    }

    fn eigen_residuals(&self, form: &DMatrix<f64>, mass: &SymmetricSparseMatrix) -> Vec<f64> {
        residuals_of(form, mass, &self.eigenvalues, &self.eigenvectors)
    }

    /// Fixes each sign so that `<e_k, 1>_H > 0`, or, for modes orthogonal
    /// to constants, so that the largest-magnitude entry is positive.
    fn normalize_signs(&mut self) {
        let ones = DVector::from_element(self.node_count(), 1.0);
        let m1 = self.product_mass.mul_vec(&ones);
        for k in 0..self.len() {
            let col = self.eigenvectors.column(k);
            let pairing = col.dot(&m1);
            let sign = if pairing.abs() > 1e-8 * col.amax() * m1.amax() {
                pairing.signum()
            } else {
                col[col.iamax()].signum()
            };
            if sign < 0.0 {
                self.eigenvectors.column_mut(k).neg_mut();
            }
        }
    }
}

fn residuals_of(
    form: &DMatrix<f64>,
    mass: &SymmetricSparseMatrix,
    values: &[f64],
    vectors: &DMatrix<f64>,
) -> Vec<f64> {
    let form_norm = (0..form.nrows()).map(|i| form.row(i).abs().sum()).fold(0.0, f64::max);
    let mass_norm = (0..mass.dim()).map(|i| mass.row(i).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let ae = form * vectors;
    let me = sparse_times_dense(mass, vectors);
    values
        .iter()
        .enumerate()
        .map(|(k, &lambda)| {
            let r = ae.column(k) - me.column(k) * lambda;
            let e = vectors.column(k).norm();
            r.norm() / ((form_norm + lambda.abs() * mass_norm) * e)
        })
        .collect()
}

/// Eigenpairs of `G^T G + shift * L L^T` against `L L^T`, smallest first.
fn gram_eigenpairs(
    gram: &DMatrix<f64>,
    mass_factor: &Cholesky<f64, Dyn>,
    shift: f64,
    k: usize,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let lower = mass_factor.l();
    // Y = G L^{-T}  <=>  Y^T = L^{-1} G^T
    let yt = lower
        .solve_lower_triangular(&gram.transpose())
        .ok_or(Error::Factorization("M_H triangular solve"))?;
    // The right singular vectors of Y equal those of its square QR factor.
    let r = yt.transpose().qr().r();
    let svd = r
        .clone()
        .try_svd(false, true, f64::EPSILON, SVD_MAX_ITERATIONS)
        .ok_or(Error::NonConvergence(SVD_MAX_ITERATIONS))?;
    let v_t = svd.v_t.expect("right singular vectors requested");
    let n = v_t.ncols();
    if v_t.nrows() < n {
        return Err(Error::Precondition("Gram factor has fewer rows than unknowns".into()));
    }
    let (singular_values, v) = jacobi_refine(&r, v_t.transpose().qr().q())?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| singular_values[a].total_cmp(&singular_values[b]));
    let mut values = Vec::with_capacity(k);
    let mut reduced = DMatrix::zeros(n, k);
    for (c, &idx) in order.iter().take(k).enumerate() {
        let sigma = singular_values[idx];
        values.push(sigma * sigma + shift);
        reduced.set_column(c, &v.column(idx));
    }
    let vectors = lower
        .transpose()
        .solve_upper_triangular(&reduced)
        .ok_or(Error::Factorization("M_H back-substitution"))?;
    Ok((values, vectors))
}

/// One-sided Jacobi sweeps on `B = R V` from an orthogonal starting basis
/// `V`, until the columns of `B` are mutually orthogonal. Returns the column
/// norms of `B` (the singular values of `R`) and the rotated `V`.
fn jacobi_refine(r: &DMatrix<f64>, mut v: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    const MAX_SWEEPS: usize = 30;
    let n = v.ncols();
    let mut b = r * &v;
    let tol = (n as f64).sqrt() * f64::EPSILON;
    // Columns at round-off level carry no direction to orthogonalise.
    let floor = (f64::EPSILON * r.norm()).powi(2);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = b.column(i).norm_squared();
                let beta = b.column(j).norm_squared();
                let gamma = b.column(i).dot(&b.column(j));
                if alpha.min(beta) <= floor || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for m in [&mut b, &mut v] {
                    for row in 0..m.nrows() {
                        let (x, y) = (m[(row, i)], m[(row, j)]);
                        m[(row, i)] = c * x - s * y;
                        m[(row, j)] = s * x + c * y;
                    }
                }
            }
        }
        if !rotated {
            return Ok(((0..n).map(|c| b.column(c).norm()).collect(), v));
        }
    }
    Err(Error::NonConvergence(MAX_SWEEPS))
}

pub(crate) fn sparse_times_dense(a: &SymmetricSparseMatrix, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.dim(), b.ncols());
    for c in 0..b.ncols() {
        let col = b.column(c);
        for i in 0..a.dim() {
            out[(i, c)] = a.row(i).map(|(j, v)| v * col[j]).sum();
        }
    }
    out
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// `R` with `R^T R = S` for a symmetric positive semidefinite `S`.
fn psd_square_root(s: DMatrix<f64>) -> DMatrix<f64> {
    let eig = symmetrize(s).symmetric_eigen();
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

fn stack_rows(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let cols = blocks[0].ncols();
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut offset = 0;
    for b in blocks {
        out.view_mut((offset, 0), (b.nrows(), cols)).copy_from(b);
        offset += b.nrows();
    }
    out
}

/// `(max - min) / max |x_i|`.
pub fn relative_spread(x: &DVector<f64>) -> f64 {
    let scale = x.amax();
    if scale == 0.0 {
        return 0.0;
    }
    (x.max() - x.min()) / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn interval_op(n: usize, alpha: f64, beta: f64, gamma: f64) -> DiscreteWentzellOperator {
        let mesh = Mesh::interval(0.0, 1.0, n).unwrap();
        DiscreteWentzellOperator::build(&mesh, &ProblemData::constant(alpha, beta, gamma, 0.5)).unwrap()
    }

    fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn neumann_laplacian_kills_constants_and_is_linear() {
        let op = interval_op(16, 1.0, 1.0, 0.0);
        let z = op.discrete_neumann_laplacian(&DVector::from_element(17, 3.0)).unwrap();
        assert!(z.amax() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (u, v) = (random_vector(&mut rng, 17), random_vector(&mut rng, 17));
        let lhs = op.discrete_neumann_laplacian(&(&u + &v)).unwrap();
        let rhs = op.discrete_neumann_laplacian(&u).unwrap() + op.discrete_neumann_laplacian(&v).unwrap();
        assert!((lhs - rhs).amax() < 1e-12 * (1.0 + u.amax() * 17f64.powi(2)));
    }

    #[test]
    fn neumann_laplacian_of_cosine() {
        use std::f64::consts::PI;
        let n = 256;
        let op = interval_op(n, 1.0, 1.0, 0.0);
        let u = ProductFunction::from_fn(op.mesh(), |x| (PI * x[0]).cos());
        let z = op.discrete_neumann_laplacian(&u).unwrap();
        let err = op
            .mesh()
            .nodes
            .iter()
            .enumerate()
            .map(|(i, x)| (z[i] + PI * PI * (PI * x[0]).cos()).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-2, "max nodal error {err}");
    }

    #[test]
    fn form_examples() {
        let op = interval_op(32, 1.0, 1.0, 0.0);
        let ones = DVector::from_element(33, 1.0);
        assert!(op.quadratic_form(&ones).unwrap().abs() < 1e-12);
        assert!(op.form.asymmetry_ok());

        let op = interval_op(32, 1.0, 1.0, 1.0);
        assert!((op.quadratic_form(&ones).unwrap() - 2.0).abs() < 1e-12);
        assert!((op.rayleigh_quotient(&ones).unwrap() - 2.0 / 3.0).abs() < 1e-10);

        let c = 2.5;
        let op = interval_op(32, 1.0, 1.0, c);
        assert!((op.rayleigh_quotient(&ones).unwrap() - 2.0 * c / 3.0).abs() < 1e-10);

        assert!(matches!(op.rayleigh_quotient(&DVector::zeros(33)), Err(Error::ZeroVector)));
        assert!(matches!(
            op.rayleigh_quotient(&DVector::zeros(5)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    trait AsymmetryOk {
        fn asymmetry_ok(&self) -> bool;
    }
    impl AsymmetryOk for DMatrix<f64> {
        fn asymmetry_ok(&self) -> bool {
            (self - self.transpose()).amax() <= 1e-12 * self.amax()
        }
    }

    #[test]
    fn alpha_scaling_scales_the_form() {
        let mesh = Mesh::unit_square(4).unwrap();
        let base = DiscreteWentzellOperator::build(&mesh, &ProblemData::constant(1.0, 1.0, 0.0, 0.5)).unwrap();
        let scaled = DiscreteWentzellOperator::build(&mesh, &ProblemData::constant(3.0, 1.0, 0.0, 0.5)).unwrap();
        assert!((&scaled.form - &base.form * 3.0).amax() <= 1e-12 * scaled.form.amax());
    }

    #[test]
    fn build_rejects_hypothesis_violation() {
        let mesh = Mesh::interval(0.0, 1.0, 4).unwrap();
        let err = DiscreteWentzellOperator::build(&mesh, &ProblemData::constant(1.0, -1.0, 0.0, 0.5)).unwrap_err();
        assert!(matches!(err, Error::Hypothesis(_)));
        let err = DiscreteWentzellOperator::build_with_cap(&mesh, &ProblemData::constant(1.0, 1.0, 0.0, 0.5), 3)
            .unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn spectrum_matches_dense_generalized_solve_on_small_meshes() {
        // Independent route: explicit L^{-1} A L^{-T} and a symmetric
        // eigensolve; fine on coarse meshes where conditioning is mild.
        for (mesh, gamma) in [
            (Mesh::interval(0.0, 1.0, 8).unwrap(), 1.0),
            (Mesh::unit_square(3).unwrap(), -0.5),
            (Mesh::polygonal_disk(2, 6).unwrap(), 2.0),
        ] {
            let op = DiscreteWentzellOperator::build(&mesh, &ProblemData::constant(1.3, 0.7, gamma, 0.5)).unwrap();
            let spectrum = op.solve_spectrum(mesh.node_count()).unwrap();
            spectrum.verify().unwrap();
            let l = Cholesky::new(op.product_mass.to_dense()).unwrap().l();
            let linv = l.clone().try_inverse().unwrap();
            let reduced = symmetrize(&linv * &op.form * linv.transpose());
            let mut direct: Vec<f64> = reduced.symmetric_eigenvalues().iter().copied().collect();
            direct.sort_by(f64::total_cmp);
            for (a, b) in spectrum.eigenvalues.iter().zip(&direct) {
                assert!((a - b).abs() <= 1e-9 * direct.last().unwrap().abs(), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn zero_mode_for_vanishing_gamma() {
        for mesh in [Mesh::interval(0.0, 1.0, 64).unwrap(), Mesh::unit_square(6).unwrap()] {
            let op = DiscreteWentzellOperator::build(&mesh, &ProblemData::constant(1.0, 1.0, 0.0, 0.5)).unwrap();
            let s = op.solve_spectrum(4).unwrap();
            assert!(s.eigenvalues[0].abs() <= 1e-9 * s.eigenvalues[1]);
            assert!(relative_spread(&s.eigenvector(0)) <= 1e-6);
            assert_eq!(kernel_classify(&s).unwrap(), KernelClass::ZeroEigenvalueConstantKernel);
            let e1 = s.eigenvector(0);
            assert!((op.rayleigh_quotient(&e1).unwrap() - s.eigenvalues[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn kernel_trichotomy() {
        let mesh = Mesh::unit_square(5).unwrap();
        let op = DiscreteWentzellOperator::build(&mesh, &ProblemData::constant(1.0, 1.0, 0.0, 0.5)).unwrap();
        for (gamma, class) in [
            (0.0, KernelClass::ZeroEigenvalueConstantKernel),
            (1.0, KernelClass::StrictlyPositive),
            (-1.0, KernelClass::NegativeFirstEigenvalue),
        ] {
            let op = op.with_gamma(FieldSpec::constant(gamma)).unwrap();
            let s = op.solve_spectrum(3).unwrap();
            assert_eq!(op.kernel_classify(&s).unwrap(), class);
        }
    }

    #[test]
    fn ambiguous_kernel_is_reported() {
        let op = interval_op(8, 1.0, 1.0, 0.0);
        let mut s = op.solve_spectrum(3).unwrap();
        // Swap in a non-constant first vector while keeping lambda_1 = 0.
        let e2 = s.eigenvector(1);
        s.eigenvectors.set_column(0, &e2);
        assert!(matches!(kernel_classify(&s), Err(Error::AmbiguousKernel { .. })));
    }

    #[test]
    fn eigenvector_attains_eigenvalue_and_orthonormality() {
        let op = interval_op(40, 1.0, 2.0, 1.0);
        let s = op.solve_spectrum(10).unwrap();
        s.verify().unwrap();
        for k in 0..10 {
            let rq = op.rayleigh_quotient(&s.eigenvector(k)).unwrap();
            assert!((rq - s.eigenvalues[k]).abs() <= 1e-9 * s.eigenvalues[k].abs().max(1.0));
        }
        assert!(matches!(op.solve_spectrum(100), Err(Error::TooManyEigenpairs { .. })));
    }

    #[test]
    fn flux_of_neumann_functions_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for mesh in [Mesh::interval(0.0, 1.0, 20).unwrap(), Mesh::unit_square(5).unwrap()] {
            let op = DiscreteWentzellOperator::build(&mesh, &ProblemData::constant(1.0, 1.0, 0.0, 0.5)).unwrap();
            let u = random_vector(&mut rng, mesh.node_count());
            let z = op.discrete_neumann_laplacian(&u).unwrap();
            let g = op.boundary_flux_recovery(&u, &z).unwrap();
            assert!(g.amax() <= 1e-10 * (1.0 + z.amax()));
        }
    }

    #[test]
    fn flux_of_x_squared() {
        let n = 256;
        let op = interval_op(n, 1.0, 1.0, 0.0);
        let u = ProductFunction::from_fn(op.mesh(), |x| x[0] * x[0]);
        let z = DVector::from_element(n + 1, 2.0);
        let g = op.boundary_flux_recovery(&u, &z).unwrap();
        // d_nu x^2 = 2x nu: 0 at the left end, 2 at the right end.
        assert_eq!(op.boundary_nodes(), &[0, n]);
        assert!(g[0].abs() <= 1e-2);
        assert!((g[1] - 2.0).abs() <= 1e-2);

        let bad = DVector::from_element(n + 1, 5.0);
        assert!(matches!(op.boundary_flux_recovery(&u, &bad), Err(Error::NotLaplacianDatum(_))));
    }

    #[test]
    fn flux_recovery_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mesh = Mesh::unit_square(4).unwrap();
        let op = DiscreteWentzellOperator::build(&mesh, &ProblemData::constant(1.0, 1.0, 0.0, 0.5)).unwrap();
        let nb = op.boundary_nodes().len();
        let datum = |rng: &mut ChaCha8Rng| {
            let u = random_vector(rng, mesh.node_count());
            let g = random_vector(rng, nb);
            let z = op.laplacian_datum_with_flux(&u, &g).unwrap();
            (u, z, g)
        };
        let (u1, z1, g1) = datum(&mut rng);
        let (u2, z2, g2) = datum(&mut rng);
        let g = op.boundary_flux_recovery(&(&u1 + &u2 * 2.0), &(&z1 + &z2 * 2.0)).unwrap();
        assert!((g - (g1 + g2 * 2.0)).amax() < 1e-9);
    }

    #[test]
    fn green_identity_examples() {
        use std::f64::consts::PI;
        let n = 256;
        let op = interval_op(n, 1.0, 1.0, 0.0);
        let v = ProductFunction::from_fn(op.mesh(), |x| (PI * x[0]).cos());
        let z_v = op.discrete_neumann_laplacian(&v).unwrap();
        let r = op.green_identity_residual(&v, &z_v, &v, &z_v).unwrap();
        assert!(r.residual <= 1e-10 * r.scale.max(1.0));

        let u = ProductFunction::from_fn(op.mesh(), |x| x[0] * x[0]);
        let z_u = DVector::from_element(n + 1, 2.0);
        let r = op.green_identity_residual(&u, &z_u, &v, &z_v).unwrap();
        assert!(r.residual <= 1e-9 * r.scale, "{r:?}");

        let w = ProductFunction::from_fn(op.mesh(), |x| (2.0 * PI * x[0]).cos());
        let z_w = op.discrete_neumann_laplacian(&w).unwrap();
        let r = op.green_identity_residual(&w, &z_w, &v, &z_v).unwrap();
        assert!(r.residual <= 1e-10 * r.scale.max(1.0));
    }

    #[test]
    fn operator_blocks_examples() {
        let op = interval_op(32, 1.0, 1.0, 0.0);
        let ones = DVector::from_element(33, 1.0);
        let blocks = op.apply_operator_blocks(&ones).unwrap();
        assert!(blocks.interior.amax() < 1e-10 && blocks.boundary.amax() < 1e-10);

        let mesh = Mesh::unit_square(4).unwrap();
        let op = DiscreteWentzellOperator::build(&mesh, &ProblemData::constant(1.0, 1.0, 2.5, 0.5)).unwrap();
        let blocks = op.apply_operator_blocks(&DVector::from_element(mesh.node_count(), 1.0)).unwrap();
        assert!(blocks.interior.amax() < 1e-10);
        assert!(blocks.boundary.iter().all(|b| (b - 2.5).abs() < 1e-10));

        let s = op.solve_spectrum(5).unwrap();
        for k in 0..5 {
            let e = s.eigenvector(k);
            let blocks = op.apply_operator_blocks(&e).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
            for _ in 0..5 {
                let v = random_vector(&mut rng, mesh.node_count());
                let lhs = op.pair_blocks(&blocks, &v);
                let rhs = s.eigenvalues[k] * op.h_inner(&v, &e);
                assert!((lhs - rhs).abs() <= 1e-8 * (1.0 + s.eigenvalues[k].abs()) * v.norm() * e.norm());
            }
        }
    }

    #[test]
    fn clusters_group_degenerate_modes() {
        // The regular polygon has dihedral symmetry, so some modes are double.
        let mesh = Mesh::polygonal_disk(3, 8).unwrap();
        let op = DiscreteWentzellOperator::build(&mesh, &ProblemData::constant(1.0, 1.0, 0.0, 0.5)).unwrap();
        let s = op.solve_spectrum(12).unwrap();
        let clusters = s.clusters();
        assert_eq!(clusters.iter().map(|c| c.len()).sum::<usize>(), 12);
        assert!(clusters.iter().any(|c| c.len() > 1));
        s.verify().unwrap();
    }

    #[test]
    fn top_modes_are_accurate_on_a_small_disk() {
        let mesh = Mesh::polygonal_disk(2, 6).unwrap();
        let n = mesh.node_count();
        let base = DiscreteWentzellOperator::build(&mesh, &ProblemData::constant(1.0, 1.0, 0.0, 0.5)).unwrap();
        let scaled = DiscreteWentzellOperator::build(&mesh, &ProblemData::constant(1.7, 1.0, 0.0, 0.5)).unwrap();
        let (a, b) = (base.solve_spectrum(n).unwrap(), scaled.solve_spectrum(n).unwrap());
        assert!(a.max_residual() < 1e-12 && b.max_residual() < 1e-12);
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues).skip(1) {
            assert!((y - 1.7 * x).abs() <= 1e-12 * y);
        }
    }
}
