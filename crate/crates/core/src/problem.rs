//! Analytic Stokes solutions used as manufactured data.
//!
//! Fields are finite sums of separable polynomial terms
//! `c * X(x) * Y(y) * Z(z)`, which keeps every derivative exact and cheap.

use crate::mesh::Point;

/// A univariate polynomial with ascending coefficients.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Poly1(pub Vec<f64>);

impl Poly1 {
    pub fn one() -> Self {
        Poly1(vec![1.0])
    }

    /// `t^k`.
    pub fn power(k: usize) -> Self {
        let mut c = vec![0.0; k + 1];
        c[k] = 1.0;
        Poly1(c)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn deriv(&self) -> Self {
        Poly1(self.0.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.0.is_empty() || other.0.is_empty() {
            return Poly1(Vec::new());
        }
        let mut c = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly1(c)
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Poly1::one(), |acc, _| acc.mul(self))
    }
}

/// `coef * f[0](x) * f[1](y) * f[2](z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SepTerm {
    pub coef: f64,
    pub f: [Poly1; 3],
}

impl SepTerm {
    pub fn monomial(coef: f64, a: usize, b: usize, c: usize) -> Self {
        SepTerm { coef, f: [Poly1::power(a), Poly1::power(b), Poly1::power(c)] }
    }

    pub fn eval(&self, x: Point) -> f64 {
        self.coef * self.f[0].eval(x[0]) * self.f[1].eval(x[1]) * self.f[2].eval(x[2])
    }

    pub fn partial(&self, d: usize) -> Self {
        let mut f = self.f.clone();
        f[d] = f[d].deriv();
        SepTerm { coef: self.coef, f }
    }
}

/// A scalar field given as a sum of separable terms.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SepField(pub Vec<SepTerm>);

impl SepField {
    pub fn eval(&self, x: Point) -> f64 {
        self.0.iter().map(|t| t.eval(x)).sum()
    }

    pub fn partial(&self, d: usize) -> Self {
        SepField(self.0.iter().map(|t| t.partial(d)).collect())
    }

    pub fn scale(&self, s: f64) -> Self {
        SepField(self.0.iter().map(|t| SepTerm { coef: t.coef * s, f: t.f.clone() }).collect())
    }

    pub fn plus(&self, other: &Self) -> Self {
        SepField(self.0.iter().chain(&other.0).cloned().collect())
    }

    pub fn minus(&self, other: &Self) -> Self {
        self.plus(&other.scale(-1.0))
    }

    pub fn laplacian(&self) -> Self {
        (0..3).fold(SepField::default(), |acc, d| acc.plus(&self.partial(d).partial(d)))
    }
}

/// Velocity, pressure and derived data of an exact Stokes solution.
#[derive(Clone, Debug)]
pub struct ExactSolution {
    pub name: String,
    pub mu: f64,
    pub u: [SepField; 3],
    pub p: SepField,
    grad_u: [[SepField; 3]; 3],
    force: [SepField; 3],
}

impl ExactSolution {
    pub fn new(name: impl Into<String>, mu: f64, u: [SepField; 3], p: SepField) -> Self {
        let grad_u: [[SepField; 3]; 3] =
            std::array::from_fn(|c| std::array::from_fn(|d| u[c].partial(d)));
        let div = (0..3).fold(SepField::default(), |acc, d| acc.plus(&grad_u[d][d]));
        // f = -2 mu div eps(u) + grad p = -mu (lap u + grad div u) + grad p
        let force = std::array::from_fn(|c| {
            u[c].laplacian().plus(&div.partial(c)).scale(-mu).plus(&p.partial(c))
        });
        Self { name: name.into(), mu, u, p, grad_u, force }
    }

    /// Velocity `curl psi`.
    pub fn from_potential(name: impl Into<String>, mu: f64, psi: [SepField; 3], p: SepField) -> Self {
        let u = [
            psi[2].partial(1).minus(&psi[1].partial(2)),
            psi[0].partial(2).minus(&psi[2].partial(0)),
            psi[1].partial(0).minus(&psi[0].partial(1)),
        ];
        Self::new(name, mu, u, p)
    }

    /// The benchmark on the unit cube: `u = curl psi` with
    /// `psi = (y^2(1-y)^2 x(1-x) z^2(1-z)^3, x^2(1-x)^2 y(1-y) z^2(1-z)^3, 0)`
    /// and `p = (x - 1/2)(y - 1/2)(1 - z)`. The velocity vanishes on the
    /// boundary and the traction vanishes on `z = 1`.
    pub fn cube_benchmark(mu: f64) -> Self {
        let t = Poly1(vec![0.0, 1.0]);
        let one_minus = Poly1(vec![1.0, -1.0]);
        let a = t.pow(2).mul(&one_minus.pow(2));
        let b = t.mul(&one_minus);
        let c = t.pow(2).mul(&one_minus.pow(3));
        let psi1 = SepField(vec![SepTerm { coef: 1.0, f: [b.clone(), a.clone(), c.clone()] }]);
        let psi2 = SepField(vec![SepTerm { coef: 1.0, f: [a, b, c] }]);
        let half = Poly1(vec![-0.5, 1.0]);
        let p = SepField(vec![SepTerm { coef: 1.0, f: [half.clone(), half, one_minus] }]);
        Self::from_potential("cube-benchmark", mu, [psi1, psi2, SepField::default()], p)
    }

    /// A divergence-free velocity in `P_k` (the curl of a degree `k + 1`
    /// potential) with a pressure in `P_{k-1}`.
    pub fn polynomial_patch(k: usize, mu: f64) -> Self {
        let m = SepTerm::monomial;
        let (psi, p) = if k == 2 {
            (
                [
                    SepField(vec![m(1.0, 2, 1, 0), m(1.0, 0, 1, 2), m(0.5, 0, 3, 0)]),
                    SepField(vec![m(1.0, 3, 0, 0), m(-2.0, 1, 0, 2), m(1.0, 0, 2, 1)]),
                    SepField(vec![m(1.0, 1, 1, 1), m(1.0, 0, 0, 3), m(1.0, 2, 0, 1)]),
                ],
                SepField(vec![m(1.0, 0, 0, 0), m(1.0, 1, 0, 0), m(-2.0, 0, 1, 0), m(0.5, 0, 0, 1)]),
            )
        } else {
            (
                [
                    SepField(vec![m(1.0, 2, 2, 0), m(1.0, 0, 1, 3), m(1.0, 3, 0, 1)]),
                    SepField(vec![m(1.0, 4, 0, 0), m(-2.0, 1, 1, 2), m(1.0, 0, 3, 1)]),
                    SepField(vec![m(1.0, 1, 2, 1), m(1.0, 0, 0, 4), m(0.5, 2, 1, 1)]),
                ],
                SepField(vec![m(1.0, 2, 0, 0), m(-1.0, 0, 1, 1), m(0.5, 0, 0, 2), m(1.0, 1, 0, 0)]),
            )
        };
        Self::from_potential(format!("patch-p{k}"), mu, psi, p)
    }

    pub fn velocity(&self, x: Point) -> [f64; 3] {
        [self.u[0].eval(x), self.u[1].eval(x), self.u[2].eval(x)]
    }

    /// `grad[c][d] = d u_c / d x_d`.
    pub fn velocity_gradient(&self, x: Point) -> [[f64; 3]; 3] {
        std::array::from_fn(|c| std::array::from_fn(|d| self.grad_u[c][d].eval(x)))
    }

    pub fn divergence(&self, x: Point) -> f64 {
        (0..3).map(|d| self.grad_u[d][d].eval(x)).sum()
    }

    pub fn pressure(&self, x: Point) -> f64 {
        self.p.eval(x)
    }

    pub fn body_force(&self, x: Point) -> [f64; 3] {
        [self.force[0].eval(x), self.force[1].eval(x), self.force[2].eval(x)]
    }

    /// Traction `(2 mu eps(u) - p I) n`.
    pub fn traction(&self, x: Point, n: Point) -> [f64; 3] {
        let g = self.velocity_gradient(x);
        let p = self.pressure(x);
        std::array::from_fn(|c| {
            (0..3).map(|d| self.mu * (g[c][d] + g[d][c]) * n[d]).sum::<f64>() - p * n[c]
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const POINTS: [Point; 4] =
        [[0.3, 0.6, 0.2], [0.71, 0.13, 0.55], [0.5, 0.5, 0.5], [0.9, 0.25, 0.8]];

    fn fd_gradient(f: impl Fn(Point) -> f64, x: Point, h: f64) -> [f64; 3] {
        std::array::from_fn(|d| {
            let mut a = x;
            let mut b = x;
            a[d] += h;
            b[d] -= h;
            (f(a) - f(b)) / (2.0 * h)
        })
    }

    #[test]
    fn univariate_algebra() {
        let p = Poly1(vec![1.0, -1.0]).pow(3);
        assert_eq!(p, Poly1(vec![1.0, -3.0, 3.0, -1.0]));
        assert_eq!(p.deriv(), Poly1(vec![-3.0, 6.0, -3.0]));
        assert!((p.eval(0.5) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn benchmark_force_matches_finite_differences() {
        let mu = 1.7;
        let s = ExactSolution::cube_benchmark(mu);
        let h = 1e-3;
        for x in POINTS {
            // -mu lap u_c + d_c p by nested central differences
            for c in 0..3 {
                let uc = |y: Point| s.velocity(y)[c];
                let mut lap = 0.0;
                for d in 0..3 {
                    let mut a = x;
                    let mut b = x;
                    a[d] += h;
                    b[d] -= h;
                    lap += (uc(a) - 2.0 * uc(x) + uc(b)) / (h * h);
                }
                let dp = fd_gradient(|y| s.pressure(y), x, h)[c];
                let fd = -mu * lap + dp;
                assert!((fd - s.body_force(x)[c]).abs() < 1e-5, "{c}: {fd} vs {}", s.body_force(x)[c]);
            }
        }
    }

    #[test]
    fn benchmark_boundary_data_vanish() {
        let s = ExactSolution::cube_benchmark(1.0);
        for &(a, b) in &[(0.2, 0.7), (0.5, 0.5), (0.9, 0.1)] {
            for fixed in [0.0, 1.0] {
                for axis in 0..3 {
                    let mut x = [a, b, a * b];
                    x[axis] = fixed;
                    let u = s.velocity(x);
                    assert!(u.iter().all(|v| v.abs() < 1e-15), "{x:?}: {u:?}");
                }
            }
            let t = s.traction([a, b, 1.0], [0.0, 0.0, 1.0]);
            assert!(t.iter().all(|v| v.abs() < 1e-15));
        }
    }

    #[test]
    fn curl_fields_are_solenoidal() {
        for s in [
            ExactSolution::cube_benchmark(1.0),
            ExactSolution::polynomial_patch(2, 1.0),
            ExactSolution::polynomial_patch(3, 1.0),
        ] {
            for x in POINTS {
                assert!(s.divergence(x).abs() < 1e-13);
                let g = s.velocity_gradient(x);
                for c in 0..3 {
                    let fd = fd_gradient(|y| s.velocity(y)[c], x, 1e-5);
                    for d in 0..3 {
                        assert!((fd[d] - g[c][d]).abs() < 1e-7);
                    }
                }
            }
        }
    }
}
