//! Semi-analytic eigenvalue oracle on an interval `(0, L)`.
//!
//! # Boundary conditions in one dimension
//!
//! With constant `alpha`, `beta`, `gamma` the eigenproblem `A u = lambda u`
//! reads `alpha u'''' = lambda u` in `(0, L)` with `u'(0) = u'(L) = 0`, and at
//! each endpoint the dynamic condition `-beta d_nu(alpha u'') + gamma u = lambda u`.
//! The outward normal is `nu = -1` at `0` and `nu = +1` at `L`, so
//! `d_nu(alpha u'') = -alpha u'''(0)` and `+alpha u'''(L)` respectively:
//!
//! ```text
//!  beta alpha u'''(0) = (lambda - gamma) u(0)
//! -beta alpha u'''(L) = (lambda - gamma) u(L)
//! ```
//!
//! The same conditions come out of integrating `int alpha u'' v''` by parts
//! against test functions with `v'(0) = v'(L) = 0` and matching the
//! boundary pairing `sum_ends u v / beta`.
//!
//! With `k = (lambda / alpha)^{1/4}` the general solution is spanned by
//! `cos kx, sin kx, cosh kx, sinh kx`. The determinant is evaluated in the
//! scaled basis `cos kx, sin kx, exp(-kx), exp(-k(L - x))`, which never
//! overflows; it equals `2 exp(-kL)` times the hyperbolic-basis determinant
//! after positive row scalings, so roots and signs agree.

use crate::coefficients::ProblemData;
use crate::error::{Error, Result};
use crate::geometry::Mesh;
use crate::spectral::DiscreteWentzellOperator;

/// Constant-coefficient data on `(0, length)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamParams {
    pub length: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl BeamParams {
    pub fn new(length: f64, alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let p = BeamParams {
            length,
            alpha,
            beta,
            gamma,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.alpha > 0.0 && self.beta > 0.0) {
            return Err(Error::InvalidOracle(format!(
                "need L, alpha, beta > 0, got L = {}, alpha = {}, beta = {}",
                self.length, self.alpha, self.beta
            )));
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::InvalidOracle(format!(
                "oracle covers gamma >= 0 only, got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// Ratio of the geometric scanning grid.
pub const SCAN_RATIO: f64 = 1.02;

fn wavenumber(params: &BeamParams, lambda: f64) -> Result<f64> {
    params.validate()?;
    if !(lambda > 0.0) {
        return Err(Error::InvalidOracle(format!("lambda must be positive, got {lambda}")));
    }
    Ok((lambda / params.alpha).powf(0.25))
}

fn det4(m: [[f64; 4]; 4]) -> f64 {
    // Laplace expansion along the first row via 3x3 minors.
    let minor = |skip: usize| {
        let cols: Vec<usize> = (0..4).filter(|&c| c != skip).collect();
        let a = |r: usize, c: usize| m[r][cols[c]];
        a(1, 0) * (a(2, 1) * a(3, 2) - a(2, 2) * a(3, 1)) - a(1, 1) * (a(2, 0) * a(3, 2) - a(2, 2) * a(3, 0))
            + a(1, 2) * (a(2, 0) * a(3, 1) - a(2, 1) * a(3, 0))
    };
    (0..4)
        .map(|c| if c % 2 == 0 { 1.0 } else { -1.0 } * m[0][c] * minor(c))
        .sum()
}

/// Characteristic determinant of the 1D Wentzell problem at `lambda > 0`,
/// in the scaled basis described in the module docs. Rows are normalised
/// to unit scale.
pub fn wentzell_char_det(params: &BeamParams, lambda: f64) -> Result<f64> {
    let k = wavenumber(params, lambda)?;
    let kl = k * params.length;
    let (s, c, e) = (kl.sin(), kl.cos(), (-kl).exp());
    let stiff = params.beta * params.alpha * k.powi(3);
    let mu = lambda - params.gamma;
    let norm = stiff + mu.abs();
    let m = [
        [0.0, 1.0, -1.0, e],
        [-s, c, -e, 1.0],
        [-mu / norm, -stiff / norm, (-stiff - mu) / norm, (stiff - mu) * e / norm],
        [
            (-stiff * s - mu * c) / norm,
            (stiff * c - mu * s) / norm,
            (stiff - mu) * e / norm,
            (-stiff - mu) / norm,
        ],
    ];
    Ok(det4(m))
}

/// Unscaled determinant in the basis `cos, sin, cosh, sinh` with raw
/// boundary rows. Overflows for large `kL`; kept as an independent check of
/// the scaled evaluation.
pub fn wentzell_char_det_hyperbolic(params: &BeamParams, lambda: f64) -> Result<f64> {
    let k = wavenumber(params, lambda)?;
    let kl = k * params.length;
    let (s, c, sh, ch) = (kl.sin(), kl.cos(), kl.sinh(), kl.cosh());
    let stiff = params.beta * params.alpha * k.powi(3);
    let mu = lambda - params.gamma;
    // u'/k rows, then beta alpha u''' -/+ mu u rows.
    let m = [
        [0.0, 1.0, 0.0, 1.0],
        [-s, c, sh, ch],
        [-mu, -stiff, -mu, stiff],
        [-stiff * s - mu * c, stiff * c - mu * s, -stiff * sh - mu * ch, -stiff * ch - mu * sh],
    ];
    Ok(det4(m))
}

/// One bracketed root of the characteristic determinant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleRoot {
    pub lambda: f64,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    /// `|det|` at the returned root.
    pub residual: f64,
}

/// First `count` eigenvalues of the 1D Wentzell problem. For `gamma = 0`
/// the kernel eigenvalue 0 is prepended (and counted). Positive roots come
/// from sign changes on a geometric grid (ratio [`SCAN_RATIO`], starting
/// at `1e-6 alpha / L^4`) refined by bisection to `1e-12` relative.
pub fn find_wentzell_roots_1d(params: &BeamParams, count: usize, lambda_max: f64) -> Result<Vec<OracleRoot>> {
    params.validate()?;
    if count == 0 {
        return Err(Error::InvalidOracle("count must be at least 1".into()));
    }
    let mut roots = Vec::with_capacity(count);
    if params.gamma == 0.0 {
        roots.push(OracleRoot {
            lambda: 0.0,
            bracket_lo: 0.0,
            bracket_hi: 0.0,
            residual: 0.0,
        });
    }
    let det = |l: f64| wentzell_char_det(params, l).expect("validated parameters");
    let mut lo = 1e-6 * params.alpha / params.length.powi(4);
    let mut f_lo = det(lo);
    while roots.len() < count && lo < lambda_max {
        let hi = (lo * SCAN_RATIO).min(lambda_max);
        let f_hi = det(hi);
        if f_lo == 0.0 || f_lo.signum() != f_hi.signum() {
            roots.push(bisect(&det, lo, hi, f_lo));
        }
        lo = hi;
        f_lo = f_hi;
    }
    if roots.len() < count {
        return Err(Error::TooFewRoots {
            found: roots.len(),
            requested: count,
            lambda_max,
        });
    }
    Ok(roots)
}

/// Eigenvalues only; see [`find_wentzell_roots_1d`].
pub fn find_wentzell_eigenvalues_1d(params: &BeamParams, count: usize, lambda_max: f64) -> Result<Vec<f64>> {
    Ok(find_wentzell_roots_1d(params, count, lambda_max)?
        .into_iter()
        .map(|r| r.lambda)
        .collect())
}

fn bisect(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, f_lo: f64) -> OracleRoot {
    let (bracket_lo, bracket_hi) = (lo, hi);
    if f_lo == 0.0 {
        return OracleRoot {
            lambda: lo,
            bracket_lo,
            bracket_hi,
            residual: 0.0,
        };
    }
    let (mut a, mut b, mut fa) = (lo, hi, f_lo);
    while b - a > 1e-12 * b {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            a = m;
            b = m;
            break;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    let lambda = 0.5 * (a + b);
    OracleRoot {
        lambda,
        bracket_lo,
        bracket_hi,
        residual: f(lambda).abs(),
    }
}

/// Positive roots `k_j` of `cos k cosh k = 1`, `j = 1..=count`.
pub fn clamped_beam_wavenumbers(count: usize) -> Vec<f64> {
    // cos k - 1/cosh k has the same roots and no overflow.
    let f = |k: f64| k.cos() - 1.0 / k.cosh();
    (1..=count)
        .map(|j| {
            let centre = (j as f64 + 0.5) * std::f64::consts::PI;
            let delta = std::f64::consts::FRAC_PI_4;
            let (mut a, mut b) = (centre - delta, centre + delta);
            let mut fa = f(a);
            while b - a > 1e-15 * b {
                let m = 0.5 * (a + b);
                let fm = f(m);
                if fm == 0.0 {
                    return m;
                }
                if fm.signum() == fa.signum() {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

/// Clamped-beam eigenvalues `alpha (k_j / L)^4`.
pub fn clamped_beam_eigenvalues(alpha: f64, length: f64, count: usize) -> Vec<f64> {
    clamped_beam_wavenumbers(count)
        .into_iter()
        .map(|k| alpha * (k / length).powi(4))
        .collect()
}

/// First clamped-beam mode on `(0, 1)` evaluated at `x`, unnormalised.
pub fn clamped_beam_mode(k: f64, x: f64) -> f64 {
    let sigma = (k.cosh() - k.cos()) / (k.sinh() - k.sin());
    (k * x).cosh() - (k * x).cos() - sigma * ((k * x).sinh() - (k * x).sin())
}

/// Upper end of the root scan used by [`compare_fem_oracle`]: far above the
/// `count`-th eigenvalue for any `gamma >= 0`.
pub fn scan_limit(params: &BeamParams, count: usize) -> f64 {
    1e3 * params.alpha * (((count + 2) as f64 * std::f64::consts::PI) / params.length).powi(4)
}

/// FEM-vs-oracle relative errors for a family of interval meshes.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleComparison {
    pub sizes: Vec<usize>,
    pub oracle: Vec<f64>,
    /// `fem[i][k]`: k-th FEM eigenvalue at `sizes[i]`.
    pub fem: Vec<Vec<f64>>,
    /// Relative error, or absolute error where the oracle value is 0.
    pub errors: Vec<Vec<f64>>,
    /// `orders[i][k]`: observed order between `sizes[i]` and `sizes[i + 1]`.
    pub orders: Vec<Vec<f64>>,
}

/// Builds the FEM operator on `(0, L)` for each size and compares its first
/// `count` eigenvalues with the oracle.
pub fn compare_fem_oracle(sizes: &[usize], params: &BeamParams, count: usize) -> Result<OracleComparison> {
    params.validate()?;
    let lambda_max = scan_limit(params, count);
    let oracle = find_wentzell_eigenvalues_1d(params, count, lambda_max)?;
    let data = ProblemData::constant(params.alpha, params.beta, params.gamma, params.alpha.min(params.beta));
    let mut fem = Vec::with_capacity(sizes.len());
    let mut errors: Vec<Vec<f64>> = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let mesh = Mesh::interval(0.0, params.length, n)?;
        let op = DiscreteWentzellOperator::build(&mesh, &data)?;
        let values = op.solve_spectrum(count)?.eigenvalues;
        errors.push(
            values
                .iter()
                .zip(&oracle)
                .map(|(f, o)| if *o == 0.0 { f.abs() } else { (f - o).abs() / o.abs() })
                .collect(),
        );
        fem.push(values);
    }
    let orders = (1..sizes.len())
        .map(|i| {
            let ratio = sizes[i] as f64 / sizes[i - 1] as f64;
            errors[i - 1]
                .iter()
                .zip(&errors[i])
                .map(|(c, f): (&f64, &f64)| (c / f).ln() / ratio.ln())
                .collect()
        })
        .collect();
    Ok(OracleComparison {
        sizes: sizes.to_vec(),
        oracle,
        fem,
        errors,
        orders,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(gamma: f64) -> BeamParams {
        BeamParams::new(1.0, 1.0, 1.0, gamma).unwrap()
    }

    #[test]
    fn rejects_bad_input() {
        assert!(BeamParams::new(0.0, 1.0, 1.0, 0.0).is_err());
        assert!(BeamParams::new(1.0, 1.0, 1.0, -1.0).is_err());
        assert!(wentzell_char_det(&unit(0.0), 0.0).is_err());
        assert!(wentzell_char_det(&unit(0.0), -2.0).is_err());
    }

    #[test]
    fn scaled_and_hyperbolic_determinants_agree_in_sign() {
        let p = unit(1.0);
        for i in 1..400 {
            let lambda = 0.05 * 1.03f64.powi(i);
            let a = wentzell_char_det(&p, lambda).unwrap();
            let b = wentzell_char_det_hyperbolic(&p, lambda).unwrap();
            if a.abs() > 1e-10 {
                assert_eq!(a.signum(), b.signum(), "lambda = {lambda}");
            }
        }
    }

    #[test]
    fn roots_are_roots_and_bracket_sign_changes() {
        let p = unit(1.0);
        let roots = find_wentzell_roots_1d(&p, 6, 1e7).unwrap();
        for r in &roots {
            assert!(r.residual <= 1e-8);
            let lo = wentzell_char_det(&p, r.bracket_lo).unwrap();
            let hi = wentzell_char_det(&p, r.bracket_hi).unwrap();
            assert!(lo.signum() != hi.signum());
        }
        for w in roots.windows(2) {
            assert!(w[1].lambda > w[0].lambda * (1.0 + 1e-10));
            let mid = 0.5 * (w[0].lambda + w[1].lambda);
            let d_mid = wentzell_char_det(&p, mid).unwrap();
            let d_above = wentzell_char_det(&p, w[0].bracket_hi).unwrap();
            assert_eq!(d_mid.signum(), d_above.signum());
        }
    }

    #[test]
    fn kernel_mode_prepended_for_zero_gamma() {
        let values = find_wentzell_eigenvalues_1d(&unit(0.0), 4, 1e7).unwrap();
        assert_eq!(values[0], 0.0);
        assert!(values[1] > 0.0);
    }

    #[test]
    fn rayleigh_bound_of_constants() {
        let values = find_wentzell_eigenvalues_1d(&unit(1.0), 2, 1e7).unwrap();
        assert!(values[0] > 0.0 && values[0] <= 2.0 / 3.0);
    }

    #[test]
    fn alpha_homogeneity() {
        let base = find_wentzell_eigenvalues_1d(&unit(0.0), 5, 1e7).unwrap();
        let scaled = find_wentzell_eigenvalues_1d(&BeamParams::new(1.0, 3.0, 1.0, 0.0).unwrap(), 5, 1e8).unwrap();
        for (b, s) in base.iter().zip(&scaled).skip(1) {
            assert!((s - 3.0 * b).abs() <= 1e-10 * s);
        }
    }

    #[test]
    fn roots_nondecreasing_in_gamma() {
        let mut prev: Option<Vec<f64>> = None;
        for gamma in [0.5, 1.0, 10.0, 100.0, 1e4] {
            let values = find_wentzell_eigenvalues_1d(&unit(gamma), 4, 1e8).unwrap();
            if let Some(p) = prev {
                for (a, b) in p.iter().zip(&values) {
                    assert!(b >= a);
                }
            }
            prev = Some(values);
        }
    }

    #[test]
    fn too_few_roots_reported() {
        match find_wentzell_eigenvalues_1d(&unit(1.0), 10, 100.0) {
            Err(Error::TooFewRoots { found, requested, .. }) => {
                assert!(found < requested);
                assert_eq!(requested, 10);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn clamped_beam_values() {
        let k = clamped_beam_wavenumbers(5);
        assert!((k[0] - 4.7300407).abs() < 1e-7);
        for kj in &k {
            assert!((kj.cos() * kj.cosh() - 1.0).abs() < 1e-9 * kj.cosh());
        }
        assert!((k[4] - 5.5 * std::f64::consts::PI).abs() < 0.01);
        let l = clamped_beam_eigenvalues(1.0, 1.0, 3);
        assert!((l[0] - 500.5639).abs() < 1e-3);
        let l2 = clamped_beam_eigenvalues(2.0, 1.0, 3);
        for (a, b) in l.iter().zip(&l2) {
            assert_eq!(2.0 * a, *b);
        }
    }

    #[test]
    fn wentzell_roots_approach_clamped_roots() {
        let clamped = clamped_beam_eigenvalues(1.0, 1.0, 2);
        let mut prev_gap = f64::INFINITY;
        for exponent in 0..=6 {
            let gamma = 10f64.powi(exponent);
            let values = find_wentzell_eigenvalues_1d(&unit(gamma), 4, 1e8).unwrap();
            // The first root tends to the first clamped eigenvalue.
            let gap = (clamped[0] - values[0]).abs() / clamped[0];
            assert!(values[0] <= clamped[0] * (1.0 + 1e-9));
            assert!(gap <= prev_gap);
            prev_gap = gap;
        }
        assert!(prev_gap < 1e-2);
    }

    #[test]
    fn first_clamped_mode_has_one_sign() {
        let k = clamped_beam_wavenumbers(1)[0];
        for i in 1..100 {
            assert!(clamped_beam_mode(k, i as f64 / 100.0) > 0.0);
        }
    }
}
