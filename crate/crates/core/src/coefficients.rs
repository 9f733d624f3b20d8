//! Coefficient fields `alpha` on the domain, `beta` and `gamma` on its
//! boundary, and the ellipticity floor `eta`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, HypothesisViolation, Result};
use crate::geometry::{Mesh, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Constant,
    Polynomial,
}

/// One polynomial coefficient. A bare number at position `k` of the list is
/// the coefficient of `x^k`; a triple `[c, p, q]` is the monomial `c x^p y^q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coeff {
    Scalar(f64),
    Monomial(f64, u32, u32),
}

/// Serialisable scalar field: `{"kind": "constant" | "polynomial", "coeffs": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub kind: FieldKind,
    pub coeffs: Vec<Coeff>,
}

impl FieldSpec {
    pub fn constant(value: f64) -> Self {
        FieldSpec {
            kind: FieldKind::Constant,
            coeffs: vec![Coeff::Scalar(value)],
        }
    }

    /// `sum_k coeffs[k] x^k`.
    pub fn polynomial_univariate(coeffs: Vec<f64>) -> Self {
        FieldSpec {
            kind: FieldKind::Polynomial,
            coeffs: coeffs.into_iter().map(Coeff::Scalar).collect(),
        }
    }

    /// `sum c x^p y^q` over `(c, p, q)`.
    pub fn polynomial(terms: Vec<(f64, u32, u32)>) -> Self {
        FieldSpec {
            kind: FieldKind::Polynomial,
            coeffs: terms.into_iter().map(|(c, p, q)| Coeff::Monomial(c, p, q)).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == FieldKind::Constant && !matches!(self.coeffs.as_slice(), [Coeff::Scalar(_)]) {
            return Err(Error::InvalidField(
                "a constant field takes exactly one scalar coefficient".into(),
            ));
        }
        let finite = self.coeffs.iter().all(|c| match *c {
            Coeff::Scalar(v) | Coeff::Monomial(v, _, _) => v.is_finite(),
        });
        if !finite {
            return Err(Error::InvalidField("non-finite coefficient".into()));
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: FieldSpec = serde_json::from_str(s).map_err(|e| Error::InvalidField(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Total polynomial degree; constants have degree 0.
    pub fn degree(&self) -> usize {
        match self.kind {
            FieldKind::Constant => 0,
            FieldKind::Polynomial => self
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| match *c {
                    Coeff::Scalar(_) => k,
                    Coeff::Monomial(_, p, q) => (p + q) as usize,
                })
                .max()
                .unwrap_or(0),
        }
    }

    pub fn evaluate(&self, x: Point) -> f64 {
        match self.kind {
            FieldKind::Constant => match self.coeffs.first() {
                Some(Coeff::Scalar(v)) | Some(Coeff::Monomial(v, _, _)) => *v,
                None => 0.0,
            },
            FieldKind::Polynomial => self
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| match *c {
                    Coeff::Scalar(v) => v * x[0].powi(k as i32),
                    Coeff::Monomial(v, p, q) => v * x[0].powi(p as i32) * x[1].powi(q as i32),
                })
                .sum(),
        }
    }

    /// `Some(c)` when the field is identically `c`.
    pub fn as_constant(&self) -> Option<f64> {
        match self.kind {
            FieldKind::Constant => Some(self.evaluate([0.0, 0.0])),
            FieldKind::Polynomial => {
                let nonconstant = self.coeffs.iter().enumerate().any(|(k, c)| match *c {
                    Coeff::Scalar(v) => k > 0 && v != 0.0,
                    Coeff::Monomial(v, p, q) => p + q > 0 && v != 0.0,
                });
                (!nonconstant).then(|| self.evaluate([0.0, 0.0]))
            }
        }
    }

    /// Pointwise scaling, used to build `alpha -> c alpha`.
    pub fn scaled(&self, factor: f64) -> Self {
        FieldSpec {
            kind: self.kind,
            coeffs: self
                .coeffs
                .iter()
                .map(|c| match *c {
                    Coeff::Scalar(v) => Coeff::Scalar(factor * v),
                    Coeff::Monomial(v, p, q) => Coeff::Monomial(factor * v, p, q),
                })
                .collect(),
        }
    }
}

/// Free-function form of [`FieldSpec::evaluate`].
pub fn evaluate_field(spec: &FieldSpec, x: Point) -> f64 {
    spec.evaluate(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemData {
    pub alpha: FieldSpec,
    pub beta: FieldSpec,
    pub gamma: FieldSpec,
    pub eta: f64,
}

impl ProblemData {
    pub fn constant(alpha: f64, beta: f64, gamma: f64, eta: f64) -> Self {
        ProblemData {
            alpha: FieldSpec::constant(alpha),
            beta: FieldSpec::constant(beta),
            gamma: FieldSpec::constant(gamma),
            eta,
        }
    }

    pub fn with_gamma(&self, gamma: FieldSpec) -> Self {
        ProblemData {
            gamma,
            ..self.clone()
        }
    }

    pub fn with_alpha(&self, alpha: FieldSpec) -> Self {
        ProblemData {
            alpha,
            ..self.clone()
        }
    }

    /// Quadrature degree used for the `alpha`-weighted mass matrix.
    pub fn interior_degree(&self) -> usize {
        self.alpha.degree() + 2
    }

    /// Quadrature degree used for every boundary matrix; covers
    /// `gamma / beta` exactly whenever `beta` is constant.
    pub fn boundary_degree(&self) -> usize {
        self.beta.degree().max(self.gamma.degree()) + 2
    }

    /// `min{ min gamma, 0 }` over boundary quadrature points.
    pub fn gamma_floor(&self, mesh: &Mesh) -> f64 {
        mesh.facet_quadrature(self.boundary_degree())
            .into_iter()
            .map(|(_, x, _, _)| self.gamma.evaluate(x))
            .fold(0.0, f64::min)
    }

    /// `(int_Gamma gamma dS, int_Gamma gamma / beta dS)`.
    pub fn gamma_integrals(&self, mesh: &Mesh) -> (f64, f64) {
        mesh.facet_quadrature(self.boundary_degree())
            .into_iter()
            .fold((0.0, 0.0), |(plain, weighted), (_, x, _, w)| {
                let g = self.gamma.evaluate(x);
                (plain + w * g, weighted + w * g / self.beta.evaluate(x))
            })
    }
}

/// Checks `alpha >= eta` at every element quadrature point and
/// `beta >= eta` at every boundary quadrature point. `gamma` may have any
/// sign.
pub fn validate_hypothesis(mesh: &Mesh, data: &ProblemData) -> Result<()> {
    if !(data.eta > 0.0) {
        return Err(Error::Precondition(format!("eta must be positive, got {}", data.eta)));
    }
    for field in [&data.alpha, &data.beta, &data.gamma] {
        field.validate()?;
    }
    for (_, x, _) in mesh.element_quadrature(data.interior_degree()) {
        let value = data.alpha.evaluate(x);
        if !(value >= data.eta) {
            return Err(HypothesisViolation {
                field: "alpha",
                location: "interior quadrature",
                x: x[0],
                y: x[1],
                value,
                eta: data.eta,
            }
            .into());
        }
    }
    for (_, x, _, _) in mesh.facet_quadrature(data.boundary_degree()) {
        let value = data.beta.evaluate(x);
        if !(value >= data.eta) {
            return Err(HypothesisViolation {
                field: "beta",
                location: "boundary quadrature",
                x: x[0],
                y: x[1],
                value,
                eta: data.eta,
            }
            .into());
        }
    }
    Ok(())
}
