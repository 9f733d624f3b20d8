//! P1 finite element matrices: weighted mass, stiffness, and weighted
//! boundary mass.
//!
//! Boundary matrices live at full node dimension with their support on
//! boundary nodes, so interior and boundary forms add directly.

use nalgebra::{DMatrix, DVector};

use crate::coefficients::FieldSpec;
use crate::error::{Error, Result};
use crate::geometry::Mesh;
use crate::quadrature;

/// Symmetric matrix in compressed sparse row layout. Both triangles are
/// stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricSparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SymmetricSparseMatrix {
    /// Sums duplicate `(row, col, value)` triplets.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < n && j < n, "triplet ({i}, {j}) outside {n}x{n}");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SymmetricSparseMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let cols = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        match cols.binary_search(&j) {
            Ok(k) => self.values[self.row_ptr[i] + k],
            Err(_) => 0.0,
        }
    }

    /// `(col, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.n);
        DVector::from_iterator(self.n, (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()))
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (0..self.n).map(|i| x[i] * self.row(i).map(|(j, v)| v * y[j]).sum::<f64>()).sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }

    /// Dense restriction to `rows x cols`.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        let mut position = vec![usize::MAX; self.n];
        for (k, &c) in cols.iter().enumerate() {
            position[c] = k;
        }
        let mut m = DMatrix::zeros(rows.len(), cols.len());
        for (r, &i) in rows.iter().enumerate() {
            for (j, v) in self.row(i) {
                if position[j] != usize::MAX {
                    m[(r, position[j])] += v;
                }
            }
        }
        m
    }

    pub fn sum_entries(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let triplets = (0..self.n)
            .flat_map(|i| self.row(i).chain(other.row(i)).map(move |(j, v)| (i, j, v)))
            .collect();
        Self::from_triplets(self.n, triplets)
    }

    pub fn scale(&self, factor: f64) -> Self {
        SymmetricSparseMatrix {
            values: self.values.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }
}

/// `M_w[i][j] = int_Omega w phi_i phi_j dx`, exact whenever `w` is a
/// polynomial of the declared degree.
pub fn assemble_mass(mesh: &Mesh, weight: &FieldSpec) -> SymmetricSparseMatrix {
    let degree = weight.degree() + 2;
    let mut triplets = Vec::with_capacity(mesh.elements.len() * (mesh.dimension + 1).pow(2));
    match mesh.dimension {
        1 => {
            let rule = quadrature::gauss_legendre_unit(quadrature::interval_points_for_degree(degree));
            for el in &mesh.elements {
                let (a, b) = (mesh.nodes[el[0]][0], mesh.nodes[el[1]][0]);
                let mut local = [[0.0; 2]; 2];
                for &(t, w) in &rule {
                    let phi = [1.0 - t, t];
                    let weight_value = weight.evaluate([a + t * (b - a), 0.0]) * w * (b - a);
                    for p in 0..2 {
                        for q in 0..2 {
                            local[p][q] += weight_value * phi[p] * phi[q];
                        }
                    }
                }
                push_local(&mut triplets, el, &local);
            }
        }
        _ => {
            let rule = quadrature::triangle_rule(degree);
            for (e, el) in mesh.elements.iter().enumerate() {
                let area2 = 2.0 * mesh.element_measure(e);
                let (p0, p1, p2) = (mesh.nodes[el[0]], mesh.nodes[el[1]], mesh.nodes[el[2]]);
                let mut local = [[0.0; 3]; 3];
                for &(r, s, w) in &rule {
                    let x = [
                        p0[0] + r * (p1[0] - p0[0]) + s * (p2[0] - p0[0]),
                        p0[1] + r * (p1[1] - p0[1]) + s * (p2[1] - p0[1]),
                    ];
                    let phi = [1.0 - r - s, r, s];
                    let weight_value = weight.evaluate(x) * w * area2;
                    for p in 0..3 {
                        for q in 0..3 {
                            local[p][q] += weight_value * phi[p] * phi[q];
                        }
                    }
                }
                push_local(&mut triplets, el, &local);
            }
        }
    }
    SymmetricSparseMatrix::from_triplets(mesh.node_count(), triplets)
}

/// `K[i][j] = int_Omega grad phi_i . grad phi_j dx`.
pub fn assemble_stiffness(mesh: &Mesh) -> Result<SymmetricSparseMatrix> {
    let mut triplets = Vec::with_capacity(mesh.elements.len() * (mesh.dimension + 1).pow(2));
    for (e, el) in mesh.elements.iter().enumerate() {
        let measure = mesh.element_measure(e);
        if !(measure > 0.0) {
            return Err(Error::DegenerateElement { element: e, measure });
        }
        match mesh.dimension {
            1 => {
                let k = 1.0 / measure;
                push_local(&mut triplets, el, &[[k, -k], [-k, k]]);
            }
            _ => {
                let p: Vec<_> = el.iter().map(|&i| mesh.nodes[i]).collect();
                let grads: Vec<[f64; 2]> = (0..3)
                    .map(|i| {
                        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                        [(p[j][1] - p[k][1]) / (2.0 * measure), (p[k][0] - p[j][0]) / (2.0 * measure)]
                    })
                    .collect();
                let mut local = [[0.0; 3]; 3];
                for a in 0..3 {
                    for b in 0..3 {
                        local[a][b] = measure * (grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]);
                    }
                }
                push_local(&mut triplets, el, &local);
            }
        }
    }
    Ok(SymmetricSparseMatrix::from_triplets(mesh.node_count(), triplets))
}

/// `B_w[i][j] = int_Gamma w phi_i phi_j dS`; in 1D the diagonal matrix of
/// endpoint values of `w`.
pub fn assemble_boundary_mass(mesh: &Mesh, weight: &FieldSpec) -> SymmetricSparseMatrix {
    assemble_boundary_mass_with(mesh, weight.degree() + 2, |x| weight.evaluate(x))
}

/// Boundary mass for a weight given as a closure, integrated exactly for
/// polynomial weights up to `degree - 2`.
pub fn assemble_boundary_mass_with(
    mesh: &Mesh,
    degree: usize,
    weight: impl Fn([f64; 2]) -> f64,
) -> SymmetricSparseMatrix {
    let mut triplets = Vec::new();
    match mesh.dimension {
        1 => {
            for facet in &mesh.boundary_facets {
                let i = facet.nodes[0];
                triplets.push((i, i, weight(mesh.nodes[i])));
            }
        }
        _ => {
            let rule = quadrature::gauss_legendre_unit(quadrature::interval_points_for_degree(degree));
            for (f, facet) in mesh.boundary_facets.iter().enumerate() {
                let (a, b) = (facet.nodes[0], facet.nodes[1]);
                let (p, q) = (mesh.nodes[a], mesh.nodes[b]);
                let len = mesh.facet_measure(f);
                let mut local = [[0.0; 2]; 2];
                for &(t, w) in &rule {
                    let x = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
                    let phi = [1.0 - t, t];
                    let wv = weight(x) * w * len;
                    for r in 0..2 {
                        for s in 0..2 {
                            local[r][s] += wv * phi[r] * phi[s];
                        }
                    }
                }
                push_local(&mut triplets, &[a, b], &local);
            }
        }
    }
    SymmetricSparseMatrix::from_triplets(mesh.node_count(), triplets)
}

/// `b[i] = int_Omega f phi_i dx`, exact for polynomial `f` up to `degree - 1`.
pub fn assemble_load(mesh: &Mesh, degree: usize, f: impl Fn([f64; 2]) -> f64) -> DVector<f64> {
    let mut load = DVector::zeros(mesh.node_count());
    match mesh.dimension {
        1 => {
            let rule = quadrature::gauss_legendre_unit(quadrature::interval_points_for_degree(degree));
            for el in &mesh.elements {
                let (a, b) = (mesh.nodes[el[0]][0], mesh.nodes[el[1]][0]);
                for &(t, w) in &rule {
                    let value = f([a + t * (b - a), 0.0]) * w * (b - a);
                    load[el[0]] += value * (1.0 - t);
                    load[el[1]] += value * t;
                }
            }
        }
        _ => {
            let rule = quadrature::triangle_rule(degree);
            for (e, el) in mesh.elements.iter().enumerate() {
                let area2 = 2.0 * mesh.element_measure(e);
                let (p0, p1, p2) = (mesh.nodes[el[0]], mesh.nodes[el[1]], mesh.nodes[el[2]]);
                for &(r, s, w) in &rule {
                    let x = [
                        p0[0] + r * (p1[0] - p0[0]) + s * (p2[0] - p0[0]),
                        p0[1] + r * (p1[1] - p0[1]) + s * (p2[1] - p0[1]),
                    ];
                    let value = f(x) * w * area2;
                    load[el[0]] += value * (1.0 - r - s);
                    load[el[1]] += value * r;
                    load[el[2]] += value * s;
                }
            }
        }
    }
    load
}

/// `b[i] = int_Gamma f phi_i dS`; point values at the endpoints in 1D.
pub fn assemble_boundary_load(mesh: &Mesh, degree: usize, f: impl Fn([f64; 2]) -> f64) -> DVector<f64> {
    let mut load = DVector::zeros(mesh.node_count());
    match mesh.dimension {
        1 => {
            for facet in &mesh.boundary_facets {
                let i = facet.nodes[0];
                load[i] += f(mesh.nodes[i]);
            }
        }
        _ => {
            for (facet, x, t, w) in mesh.facet_quadrature(degree) {
                let nodes = &mesh.boundary_facets[facet].nodes;
                let value = f(x) * w;
                load[nodes[0]] += value * (1.0 - t);
                load[nodes[1]] += value * t;
            }
        }
    }
    load
}

fn push_local<const N: usize>(triplets: &mut Vec<(usize, usize, f64)>, nodes: &[usize], local: &[[f64; N]; N]) {
    for p in 0..N {
        for q in 0..N {
            triplets.push((nodes[p], nodes[q], local[p][q]));
        }
    }
}
