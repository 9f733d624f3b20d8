//! Gauss rules on the reference interval and the reference triangle.
//!
//! Triangle rules are collapsed (Duffy) tensor products of Gauss-Legendre
//! rules. With `q` points per direction they integrate polynomials of total
//! degree `2q - 2` exactly; the collapse Jacobian costs one degree.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_unit(points: usize) -> Vec<(f64, f64)> {
    assert!(points >= 1);
    let n = points;
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        // Chebyshev-like initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.push((0.5 * (1.0 - x), 0.5 * w));
    }
    rule.sort_by(|a, b| a.0.total_cmp(&b.0));
    rule
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Number of Gauss points per direction that integrate degree `degree` exactly
/// on an interval.
pub fn interval_points_for_degree(degree: usize) -> usize {
    degree / 2 + 1
}

/// Rule on the reference triangle `{(r, s): r, s >= 0, r + s <= 1}` exact for
/// polynomials of total degree `degree`. Returns `(r, s, weight)`; weights sum
/// to the reference area 1/2.
pub fn triangle_rule(degree: usize) -> Vec<(f64, f64, f64)> {
    let q = (degree + 1) / 2 + 1;
    let line = gauss_legendre_unit(q);
    let mut rule = Vec::with_capacity(q * q);
    for &(a, wa) in &line {
        for &(b, wb) in &line {
            // (a, b) in the unit square -> (r, s) = (a, b (1 - a)).
            rule.push((a, b * (1.0 - a), wa * wb * (1.0 - a)));
        }
    }
    rule
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_rule_integrates_monomials() {
        for n in 1..8 {
            let rule = gauss_legendre_unit(n);
            for p in 0..(2 * n) {
                let approx: f64 = rule.iter().map(|&(x, w)| w * x.powi(p as i32)).sum();
                let exact = 1.0 / (p as f64 + 1.0);
                assert!((approx - exact).abs() < 1e-14, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn triangle_rule_integrates_monomials() {
        // int_T r^i s^j = i! j! / (i + j + 2)!
        fn fact(n: usize) -> f64 {
            (1..=n).map(|k| k as f64).product()
        }
        for degree in 0..8 {
            let rule = triangle_rule(degree);
            for i in 0..=degree {
                for j in 0..=(degree - i) {
                    let approx: f64 = rule
                        .iter()
                        .map(|&(r, s, w)| w * r.powi(i as i32) * s.powi(j as i32))
                        .sum();
                    let exact = fact(i) * fact(j) / fact(i + j + 2);
                    assert!((approx - exact).abs() < 1e-15, "deg={degree} i={i} j={j}");
                }
            }
        }
    }
}
