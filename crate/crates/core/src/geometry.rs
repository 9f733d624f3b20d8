//! Simplicial meshes of the interval, the unit square and a polygonal disk.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::coefficients::FieldSpec;
use crate::error::{Error, Result};
use crate::quadrature;

/// Node coordinates. One-dimensional meshes keep `y = 0`.
pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryFacet {
    pub nodes: Vec<usize>,
    /// In 1D the outward normal (-1 at the left end, +1 at the right end).
    /// In 2D +1 means the edge runs counter-clockwise, so the outward normal
    /// is the tangent rotated clockwise.
    pub orientation: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub dimension: usize,
    pub nodes: Vec<Point>,
    pub elements: Vec<Vec<usize>>,
    pub boundary_facets: Vec<BoundaryFacet>,
}

impl Mesh {
    /// Uniform partition of `[a, b]` into `n` elements.
    pub fn interval(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidMeshParameters(format!(
                "interval needs a < b, got a = {a}, b = {b}"
            )));
        }
        if n == 0 {
            return Err(Error::InvalidMeshParameters("interval needs n >= 1".into()));
        }
        let h = (b - a) / n as f64;
        let nodes = (0..=n)
            .map(|i| {
                let x = if i == n { b } else { a + i as f64 * h };
                [x, 0.0]
            })
            .collect();
        let elements = (0..n).map(|i| vec![i, i + 1]).collect();
        let boundary_facets = vec![
            BoundaryFacet {
                nodes: vec![0],
                orientation: -1,
            },
            BoundaryFacet {
                nodes: vec![n],
                orientation: 1,
            },
        ];
        Ok(Mesh {
            dimension: 1,
            nodes,
            elements,
            boundary_facets,
        })
    }

    /// `n x n` cells on `[0,1]^2`, each split along the diagonal from its
    /// lower-left to its upper-right corner.
    pub fn unit_square(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidMeshParameters("square needs n >= 1".into()));
        }
        let h = 1.0 / n as f64;
        let coord = |i: usize| if i == n { 1.0 } else { i as f64 * h };
        let mut nodes = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                nodes.push([coord(i), coord(j)]);
            }
        }
        let id = |i: usize, j: usize| j * (n + 1) + i;
        let mut elements = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                elements.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                elements.push(vec![id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        Self::from_triangles(nodes, elements)
    }

    /// Regular `n_sectors`-gon inscribed in the unit circle, each sector
    /// triangle refined uniformly into `n_rings^2` triangles.
    pub fn polygonal_disk(n_rings: usize, n_sectors: usize) -> Result<Self> {
        if n_rings == 0 || n_sectors < 3 {
            return Err(Error::InvalidMeshParameters(format!(
                "disk needs n_rings >= 1 and n_sectors >= 3, got ({n_rings}, {n_sectors})"
            )));
        }
        let corners: Vec<Point> = (0..n_sectors)
            .map(|s| {
                let theta = 2.0 * PI * s as f64 / n_sectors as f64;
                [theta.cos(), theta.sin()]
            })
            .collect();

        // Ring i holds i * n_sectors nodes; node (i, s, j) sits on sector s,
        // j steps from corner s towards corner s + 1.
        let ring_base = |i: usize| {
            if i == 0 {
                0
            } else {
                1 + n_sectors * i * (i - 1) / 2
            }
        };
        let id = |i: usize, s: usize, j: usize| {
            if i == 0 {
                0
            } else {
                ring_base(i) + (s * i + j) % (i * n_sectors)
            }
        };

        let mut nodes = vec![[0.0, 0.0]];
        for i in 1..=n_rings {
            let scale = i as f64 / n_rings as f64;
            for s in 0..n_sectors {
                let (p, q) = (corners[s], corners[(s + 1) % n_sectors]);
                for j in 0..i {
                    let t = j as f64 / i as f64;
                    nodes.push([
                        scale * ((1.0 - t) * p[0] + t * q[0]),
                        scale * ((1.0 - t) * p[1] + t * q[1]),
                    ]);
                }
            }
        }

        let mut elements = Vec::with_capacity(n_sectors * n_rings * n_rings);
        for s in 0..n_sectors {
            for i in 0..n_rings {
                for j in 0..=i {
                    elements.push(vec![id(i, s, j), id(i + 1, s, j), id(i + 1, s, j + 1)]);
                }
                for j in 0..i {
                    elements.push(vec![id(i, s, j), id(i + 1, s, j + 1), id(i, s, j + 1)]);
                }
            }
        }
        Self::from_triangles(nodes, elements)
    }

    /// Orients triangles counter-clockwise and extracts the boundary edges.
    fn from_triangles(nodes: Vec<Point>, mut elements: Vec<Vec<usize>>) -> Result<Self> {
        for tri in &mut elements {
            if signed_area(&nodes, tri) < 0.0 {
                tri.swap(1, 2);
            }
        }
        let mut edge_count: HashMap<(usize, usize), (usize, (usize, usize))> = HashMap::new();
        for tri in &elements {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                edge_count.entry(key).or_insert((0, (a, b))).0 += 1;
            }
        }
        let mut boundary: Vec<(usize, usize)> = edge_count
            .values()
            .filter(|(count, _)| *count == 1)
            .map(|&(_, directed)| directed)
            .collect();
        boundary.sort_unstable();
        let boundary_facets = boundary
            .into_iter()
            .map(|(a, b)| BoundaryFacet {
                nodes: vec![a, b],
                orientation: 1,
            })
            .collect();
        let mesh = Mesh {
            dimension: 2,
            nodes,
            elements,
            boundary_facets,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Length (1D) or area (2D) of element `e`.
    pub fn element_measure(&self, e: usize) -> f64 {
        let el = &self.elements[e];
        match self.dimension {
            1 => self.nodes[el[1]][0] - self.nodes[el[0]][0],
            _ => signed_area(&self.nodes, el),
        }
    }

    /// |Omega|.
    pub fn measure(&self) -> f64 {
        (0..self.elements.len()).map(|e| self.element_measure(e)).sum()
    }

    /// Counting measure of a point in 1D, edge length in 2D.
    pub fn facet_measure(&self, f: usize) -> f64 {
        let facet = &self.boundary_facets[f];
        match self.dimension {
            1 => 1.0,
            _ => {
                let (p, q) = (self.nodes[facet.nodes[0]], self.nodes[facet.nodes[1]]);
                ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt()
            }
        }
    }

    /// Sorted, deduplicated indices of nodes lying on the boundary.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        let mut nodes: Vec<usize> = self
            .boundary_facets
            .iter()
            .flat_map(|f| f.nodes.iter().copied())
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        let mask = self.boundary_mask();
        (0..self.node_count()).filter(|&i| !mask[i]).collect()
    }

    pub fn boundary_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.node_count()];
        for f in &self.boundary_facets {
            for &n in &f.nodes {
                mask[n] = true;
            }
        }
        mask
    }

    /// Quadrature points `(x, weight)` on every element, exact for
    /// polynomials of degree `degree`. Yields `(element, point, weight)`.
    pub fn element_quadrature(&self, degree: usize) -> Vec<(usize, Point, f64)> {
        let mut out = Vec::new();
        match self.dimension {
            1 => {
                let rule = quadrature::gauss_legendre_unit(quadrature::interval_points_for_degree(degree));
                for (e, el) in self.elements.iter().enumerate() {
                    let (a, b) = (self.nodes[el[0]][0], self.nodes[el[1]][0]);
                    for &(t, w) in &rule {
                        out.push((e, [a + t * (b - a), 0.0], w * (b - a)));
                    }
                }
            }
            _ => {
                let rule = quadrature::triangle_rule(degree);
                for (e, el) in self.elements.iter().enumerate() {
                    let area2 = 2.0 * self.element_measure(e);
                    let (p0, p1, p2) = (self.nodes[el[0]], self.nodes[el[1]], self.nodes[el[2]]);
                    for &(r, s, w) in &rule {
                        let x = [
                            p0[0] + r * (p1[0] - p0[0]) + s * (p2[0] - p0[0]),
                            p0[1] + r * (p1[1] - p0[1]) + s * (p2[1] - p0[1]),
                        ];
                        out.push((e, x, w * area2));
                    }
                }
            }
        }
        out
    }

    /// Quadrature on every boundary facet, exact for degree `degree`. In 2D
    /// also returns the local coordinate `t` along the facet (0 at its first
    /// node); in 1D `t = 0`. Yields `(facet, point, t, weight)`.
    pub fn facet_quadrature(&self, degree: usize) -> Vec<(usize, Point, f64, f64)> {
        let mut out = Vec::new();
        match self.dimension {
            1 => {
                for (f, facet) in self.boundary_facets.iter().enumerate() {
                    out.push((f, self.nodes[facet.nodes[0]], 0.0, 1.0));
                }
            }
            _ => {
                let rule = quadrature::gauss_legendre_unit(quadrature::interval_points_for_degree(degree));
                for (f, facet) in self.boundary_facets.iter().enumerate() {
                    let (p, q) = (self.nodes[facet.nodes[0]], self.nodes[facet.nodes[1]]);
                    let len = self.facet_measure(f);
                    for &(t, w) in &rule {
                        let x = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
                        out.push((f, x, t, w * len));
                    }
                }
            }
        }
        out
    }

    /// Checks the structural invariants: index ranges, positive element
    /// measures, boundary facets equal to the facets owned by exactly one
    /// element, and connectivity.
    pub fn validate(&self) -> Result<()> {
        let n = self.node_count();
        let verts = self.dimension + 1;
        if !(1..=2).contains(&self.dimension) {
            return Err(Error::InvalidMesh(format!("dimension {}", self.dimension)));
        }
        for (e, el) in self.elements.iter().enumerate() {
            if el.len() != verts || el.iter().any(|&i| i >= n) {
                return Err(Error::InvalidMesh(format!("element {e} has bad connectivity {el:?}")));
            }
            let m = self.element_measure(e);
            if !(m > 0.0) {
                return Err(Error::DegenerateElement { element: e, measure: m });
            }
        }
        for facet in &self.boundary_facets {
            if facet.nodes.len() != self.dimension || facet.nodes.iter().any(|&i| i >= n) {
                return Err(Error::InvalidMesh(format!("facet {:?} out of range", facet.nodes)));
            }
        }

        let mut owners: HashMap<Vec<usize>, usize> = HashMap::new();
        for el in &self.elements {
            for skip in 0..verts {
                let mut facet: Vec<usize> = (0..verts).filter(|&k| k != skip).map(|k| el[k]).collect();
                facet.sort_unstable();
                *owners.entry(facet).or_insert(0) += 1;
            }
        }
        if let Some((facet, count)) = owners.iter().find(|(_, &c)| c > 2) {
            return Err(Error::InvalidMesh(format!("facet {facet:?} shared by {count} elements")));
        }
        let mut expected: Vec<Vec<usize>> = owners
            .into_iter()
            .filter(|&(_, c)| c == 1)
            .map(|(f, _)| f)
            .collect();
        expected.sort();
        let mut actual: Vec<Vec<usize>> = self
            .boundary_facets
            .iter()
            .map(|f| {
                let mut v = f.nodes.clone();
                v.sort_unstable();
                v
            })
            .collect();
        actual.sort();
        if expected != actual {
            return Err(Error::InvalidMesh(
                "boundary facets differ from the facets owned by a single element".into(),
            ));
        }

        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for el in &self.elements {
            for w in el.windows(2) {
                let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
                parent[a] = b;
            }
        }
        let root = find(&mut parent, 0);
        if (0..n).any(|i| find(&mut parent, i) != root) {
            return Err(Error::InvalidMesh("mesh is not connected".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("mesh serialisation is infallible")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let mesh: Mesh = serde_json::from_str(s).map_err(|e| Error::InvalidMesh(e.to_string()))?;
        mesh.validate()?;
        Ok(mesh)
    }
}

fn signed_area(nodes: &[Point], tri: &[usize]) -> f64 {
    let (p0, p1, p2) = (nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
    0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
}

/// `int_Gamma w dS`; counting measure at the endpoints in 1D.
pub fn boundary_measure(mesh: &Mesh, weight: &FieldSpec) -> f64 {
    mesh.facet_quadrature(weight.degree())
        .into_iter()
        .map(|(_, x, _, w)| w * weight.evaluate(x))
        .sum()
}
