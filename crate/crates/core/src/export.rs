//! CSV and JSON renderings of results. Every float is written with 17
//! significant digits so that identical runs produce identical bytes and
//! values round-trip exactly.

use serde::Serialize;

use crate::dynamics::EvolutionResult;
use crate::error::{Error, Result};
use crate::gamma_limit::GammaSweepReport;
use crate::oracle::{OracleComparison, OracleRoot};
use crate::spectral::SpectralDecomposition;

/// `x` in scientific notation with 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// A header and rows of already formatted cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Columns `k, lambda_k, residual_k`, `k` counted from 1.
pub fn spectrum_csv(spectrum: &SpectralDecomposition) -> CsvTable {
    let mut table = CsvTable::new(&["k", "lambda_k", "residual_k"]);
    for (k, (l, r)) in spectrum.eigenvalues.iter().zip(&spectrum.residuals).enumerate() {
        table.push(vec![(k + 1).to_string(), format_float(*l), format_float(*r)]);
    }
    table
}

/// Columns `t, h_norm, min_value, max_value, sup_norm`.
pub fn evolution_csv(result: &EvolutionResult) -> CsvTable {
    let mut table = CsvTable::new(&["t", "h_norm", "min_value", "max_value", "sup_norm"]);
    for i in 0..result.len() {
        table.push(
            [result.times[i], result.h_norm[i], result.min_value[i], result.max_value[i], result.sup_norm[i]]
                .iter()
                .map(|&x| format_float(x))
                .collect(),
        );
    }
    table
}

/// Columns `k, lambda_oracle, bracket_lo, bracket_hi, residual`.
pub fn oracle_csv(roots: &[OracleRoot]) -> CsvTable {
    let mut table = CsvTable::new(&["k", "lambda_oracle", "bracket_lo", "bracket_hi", "residual"]);
    for (k, r) in roots.iter().enumerate() {
        let mut row = vec![(k + 1).to_string()];
        row.extend([r.lambda, r.bracket_lo, r.bracket_hi, r.residual].iter().map(|&x| format_float(x)));
        table.push(row);
    }
    table
}

/// Columns `n, k, lambda_fem, lambda_oracle, error, order`; `order` is empty
/// on the finest mesh.
pub fn comparison_csv(comparison: &OracleComparison) -> CsvTable {
    let mut table = CsvTable::new(&["n", "k", "lambda_fem", "lambda_oracle", "error", "order"]);
    for (i, &n) in comparison.sizes.iter().enumerate() {
        for (k, &oracle) in comparison.oracle.iter().enumerate() {
            let order = comparison.orders.get(i).map(|o| format_float(o[k])).unwrap_or_default();
            table.push(vec![
                n.to_string(),
                (k + 1).to_string(),
                format_float(comparison.fem[i][k]),
                format_float(oracle),
                format_float(comparison.errors[i][k]),
                order,
            ]);
        }
    }
    table
}

/// Columns `g_n, lambda1, trace_norm, bound_rhs, clamped_ref, gap`. The
/// bound column is `lambda1 / g_n + 1e-10` and applies to `trace_norm^2`.
pub fn gamma_sweep_csv(report: &GammaSweepReport) -> CsvTable {
    let mut table = CsvTable::new(&["g_n", "lambda1", "trace_norm", "bound_rhs", "clamped_ref", "gap"]);
    let clamped = report.clamped_reference[0];
    for r in &report.rungs {
        table.push(
            [r.g, r.lambda1, r.trace_norm, r.bound_rhs, clamped, r.gap]
                .iter()
                .map(|&x| format_float(x))
                .collect(),
        );
    }
    table
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string(value).map_err(|e| Error::Precondition(format!("json encoding: {e}")))
}

/// The first `count` eigenvectors as a JSON array of nodal arrays.
pub fn eigenvectors_json(spectrum: &SpectralDecomposition, count: usize) -> Result<String> {
    let vectors: Vec<Vec<f64>> = (0..count.min(spectrum.len()))
        .map(|k| spectrum.eigenvector(k).iter().copied().collect())
        .collect();
    to_json(&vectors)
}

#[derive(Serialize)]
struct Snapshots<'a> {
    times: &'a [f64],
    snapshots: Vec<Vec<f64>>,
}

/// `{"times": [...], "snapshots": [[...], ...]}`.
pub fn snapshots_json(result: &EvolutionResult) -> Result<String> {
    to_json(&Snapshots {
        times: &result.times,
        snapshots: result.snapshots.iter().map(|s| s.iter().copied().collect()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::ProblemData;
    use crate::dynamics::Semigroup;
    use crate::geometry::Mesh;
    use crate::spectral::DiscreteWentzellOperator;

    #[test]
    fn floats_round_trip_with_seventeen_digits() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_float(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn spectrum_and_evolution_tables() {
        let mesh = Mesh::interval(0.0, 1.0, 8).unwrap();
        let op = DiscreteWentzellOperator::build(&mesh, &ProblemData::constant(1.0, 1.0, 0.0, 0.5)).unwrap();
        let spectrum = op.solve_spectrum(4).unwrap();
        let csv = spectrum_csv(&spectrum).render();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "k,lambda_k,residual_k");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("1,"));

        let full = op.solve_spectrum(op.node_count()).unwrap();
        let semigroup = Semigroup::new(&full).unwrap();
        let f = nalgebra::DVector::from_element(op.node_count(), 1.0);
        let result = semigroup.evolve(&f, &[0.0, 1.0]).unwrap();
        let csv = evolution_csv(&result).render();
        assert_eq!(csv.lines().next().unwrap(), "t,h_norm,min_value,max_value,sup_norm");
        assert_eq!(csv.lines().count(), 3);
        let json: serde_json::Value = serde_json::from_str(&snapshots_json(&result).unwrap()).unwrap();
        assert_eq!(json["snapshots"].as_array().unwrap().len(), 2);
        let vectors: Vec<Vec<f64>> = serde_json::from_str(&eigenvectors_json(&spectrum, 2).unwrap()).unwrap();
        assert_eq!(vectors.len(), 2);
        assert_eq!(vectors[0].len(), op.node_count());
    }
}
