//! Barycentric polynomial algebra and simplex quadrature.

mod poly;
mod quadrature;

pub use poly::{homogeneous_exponents, BaryPoly};
pub use quadrature::{tet_rule, tri_rule, QuadratureRule, MAX_EXACTNESS};

/// Reference simplex a polynomial or rule lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Simplex {
    Triangle,
    Tet,
}

impl Simplex {
    pub fn dim(self) -> usize {
        match self {
            Simplex::Triangle => 2,
            Simplex::Tet => 3,
        }
    }

    /// Number of barycentric coordinates.
    pub fn nvars(self) -> usize {
        self.dim() + 1
    }
}

fn factorial(n: u32) -> u128 {
    (1..=n as u128).product()
}

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Exact normalized integral of a barycentric monomial over a `d`-simplex,
/// `(1/|S|) * int lambda^alpha = d! * prod(alpha_i!) / (|alpha| + d)!`,
/// returned as a reduced fraction. `alpha.len()` is `d + 1`.
pub fn monomial_integral_ratio(alpha: &[u8]) -> (u128, u128) {
    let d = alpha.len() as u32 - 1;
    let total: u32 = alpha.iter().map(|&a| a as u32).sum();
    let num = factorial(d) * alpha.iter().map(|&a| factorial(a as u32)).product::<u128>();
    let den = factorial(total + d);
    let g = gcd(num, den);
    (num / g, den / g)
}

/// Floating-point value of [`monomial_integral_ratio`]; multiply by the
/// simplex measure for the unnormalized integral.
pub fn integrate_monomial_exact(alpha: &[u8]) -> f64 {
    let (n, d) = monomial_integral_ratio(alpha);
    n as f64 / d as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorial_formula_values() {
        assert_eq!(monomial_integral_ratio(&[1, 0, 0, 0]), (1, 4));
        assert_eq!(monomial_integral_ratio(&[2, 0, 0, 0]), (1, 10));
        assert_eq!(monomial_integral_ratio(&[1, 1, 0]), (1, 12));
        assert_eq!(monomial_integral_ratio(&[0, 0, 0, 0]), (1, 1));
    }
}
