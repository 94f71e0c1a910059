use std::sync::OnceLock;

use faer::{Mat, Side};

use crate::error::{Error, Result};

use super::{homogeneous_exponents, integrate_monomial_exact, Simplex};

/// Highest exactness degree the library commits to.
pub const MAX_EXACTNESS: usize = 12;

/// A quadrature rule on a reference simplex with points in barycentric
/// coordinates and weights normalized to sum to one. Multiply by the simplex
/// measure to integrate.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub simplex: Simplex,
    /// Barycentric points; triangles leave the fourth slot at zero.
    pub points: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Normalized integral of a function of the barycentric point.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        let nv = self.simplex.nvars();
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(&p[..nv])).sum()
    }

    fn validate(&self) -> Result<()> {
        let nv = self.simplex.nvars();
        for deg in 0..=self.exactness {
            for e in homogeneous_exponents(nv, deg) {
                let exact = integrate_monomial_exact(&e[..nv]);
                let approx = self.integrate(|b| {
                    (0..nv).map(|v| b[v].powi(e[v] as i32)).product::<f64>()
                });
                if (approx - exact).abs() > 1e-13 * exact {
                    return Err(Error::Internal(format!(
                        "{:?} rule of exactness {} misintegrates {:?}: {approx} vs {exact}",
                        self.simplex, self.exactness, &e[..nv]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Gauss-Jacobi nodes and weights on `[0, 1]` for the weight `(1 - t)^a`,
/// via the Golub-Welsch eigenvalue problem. Weights are normalized to sum to one.
fn gauss_jacobi(m: usize, a: f64) -> Vec<(f64, f64)> {
    // Jacobi weight (1 - x)^alpha (1 + x)^beta on [-1, 1] with beta = 0.
    let (alpha, beta) = (a, 0.0f64);
    let mut jac = Mat::<f64>::zeros(m, m);
    for n in 0..m {
        let nf = n as f64;
        let s = 2.0 * nf + alpha + beta;
        jac[(n, n)] = if n == 0 {
            (beta - alpha) / (alpha + beta + 2.0)
        } else {
            (beta * beta - alpha * alpha) / (s * (s + 2.0))
        };
        if n > 0 {
            let num = 4.0 * nf * (nf + alpha) * (nf + beta) * (nf + alpha + beta);
            let den = s * s * (s + 1.0) * (s - 1.0);
            let b = (num / den).sqrt();
            jac[(n, n - 1)] = b;
            jac[(n - 1, n)] = b;
        }
    }
    let eig = jac.self_adjoint_eigen(Side::Lower).expect("tridiagonal eigenproblem");
    let s = eig.S();
    let u = eig.U();
    let mut out: Vec<(f64, f64)> = (0..m)
        .map(|i| {
            let x = s[i];
            ((1.0 + x) / 2.0, u[(0, i)] * u[(0, i)])
        })
        .collect();
    let total: f64 = out.iter().map(|p| p.1).sum();
    for p in &mut out {
        p.1 /= total;
    }
    out
}

fn points_for(exactness: usize) -> usize {
    exactness / 2 + 1
}

fn build_tet(exactness: usize) -> QuadratureRule {
    // Collapsed coordinates: x = t1, y = (1 - t1) t2, z = (1 - t1)(1 - t2) t3,
    // Jacobian (1 - t1)^2 (1 - t2) absorbed into the Jacobi weights.
    let m = points_for(exactness);
    let g1 = gauss_jacobi(m, 2.0);
    let g2 = gauss_jacobi(m, 1.0);
    let g3 = gauss_jacobi(m, 0.0);
    let mut points = Vec::with_capacity(m * m * m);
    let mut weights = Vec::with_capacity(m * m * m);
    for &(t1, w1) in &g1 {
        for &(t2, w2) in &g2 {
            for &(t3, w3) in &g3 {
                let x = t1;
                let y = (1.0 - t1) * t2;
                let z = (1.0 - t1) * (1.0 - t2) * t3;
                points.push([1.0 - x - y - z, x, y, z]);
                weights.push(w1 * w2 * w3);
            }
        }
    }
    QuadratureRule { simplex: Simplex::Tet, points, weights, exactness }
}

fn build_tri(exactness: usize) -> QuadratureRule {
    let m = points_for(exactness);
    let g1 = gauss_jacobi(m, 1.0);
    let g2 = gauss_jacobi(m, 0.0);
    let mut points = Vec::with_capacity(m * m);
    let mut weights = Vec::with_capacity(m * m);
    for &(t1, w1) in &g1 {
        for &(t2, w2) in &g2 {
            let x = t1;
            let y = (1.0 - t1) * t2;
            points.push([1.0 - x - y, x, y, 0.0]);
            weights.push(w1 * w2);
        }
    }
    QuadratureRule { simplex: Simplex::Triangle, points, weights, exactness }
}

type RuleCache = [OnceLock<std::result::Result<QuadratureRule, String>>; MAX_EXACTNESS + 1];

fn cached(
    cache: &'static RuleCache,
    exactness: usize,
    build: fn(usize) -> QuadratureRule,
) -> Result<&'static QuadratureRule> {
    if exactness > MAX_EXACTNESS {
        return Err(Error::Unsupported(format!(
            "quadrature exactness {exactness} (maximum {MAX_EXACTNESS})"
        )));
    }
    // Each rule is checked against the factorial formula once, when first built.
    cache[exactness]
        .get_or_init(|| {
            let rule = build(exactness);
            rule.validate().map(|_| rule).map_err(|e| e.to_string())
        })
        .as_ref()
        .map_err(|e| Error::Internal(e.clone()))
}

/// Tetrahedron rule integrating all polynomials of degree `<= exactness`.
pub fn tet_rule(exactness: usize) -> Result<&'static QuadratureRule> {
    static CACHE: RuleCache = [const { OnceLock::new() }; MAX_EXACTNESS + 1];
    cached(&CACHE, exactness, build_tet)
}

/// Triangle rule integrating all polynomials of degree `<= exactness`.
pub fn tri_rule(exactness: usize) -> Result<&'static QuadratureRule> {
    static CACHE: RuleCache = [const { OnceLock::new() }; MAX_EXACTNESS + 1];
    cached(&CACHE, exactness, build_tri)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_rule_validates() {
        for e in 0..=MAX_EXACTNESS {
            let t = tet_rule(e).unwrap();
            let f = tri_rule(e).unwrap();
            assert!((t.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert!((f.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert!(t.weights.iter().all(|w| *w > 0.0));
        }
    }

    #[test]
    fn high_degree_monomials_match_factorial_formula() {
        let t = tet_rule(8).unwrap();
        let v = t.integrate(|b| b[0].powi(3) * b[1].powi(3) * b[2].powi(2));
        let exact = integrate_monomial_exact(&[3, 3, 2, 0]);
        assert!((v - exact).abs() <= 1e-13 * exact);

        let f = tri_rule(6).unwrap();
        let v = f.integrate(|b| b[0].powi(3) * b[1].powi(3));
        let exact = integrate_monomial_exact(&[3, 3, 0]);
        assert!((v - exact).abs() <= 1e-13 * exact);
    }

    #[test]
    fn beyond_twelve_is_unsupported() {
        assert!(matches!(tet_rule(13), Err(Error::Unsupported(_))));
        assert!(matches!(tri_rule(20), Err(Error::Unsupported(_))));
    }
}
