//! Exact arithmetic in a prime field GF(q) and univariate polynomials over it.
//!
//! Every protocol message in this crate is a vector of [`FieldElement`]s, so
//! correctness of the whole artifact reduces to the exactness of this module.
//! Moduli are checked for primality at construction and every binary operation
//! rejects operands from different fields.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("modulus {0} is too small (need q >= 2)")]
    ModulusTooSmall(u64),
    #[error("operands live in different fields: GF({0}) vs GF({1})")]
    ModulusMismatch(u64, u64),
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("interpolation requires at least one point")]
    EmptyInterpolation,
    #[error("duplicate interpolation abscissa {0}")]
    DuplicateAbscissa(u64),
}

/// A prime field GF(q). Cheap to copy; equality means "same modulus".
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldConfig {
    q: u64,
}

impl fmt::Debug for FieldConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.q)
    }
}

impl FieldConfig {
    /// Builds a field, verifying primality of `q` by trial division.
    pub fn new(q: u64) -> Result<Self, AlgebraError> {
        if q < 2 {
            return Err(AlgebraError::ModulusTooSmall(q));
        }
        if !is_prime(q) {
            return Err(AlgebraError::NotPrime(q));
        }
        Ok(FieldConfig { q })
    }

    pub fn modulus(self) -> u64 {
        self.q
    }

    /// Canonical element from an arbitrary integer (reduced mod q).
    pub fn element(self, value: u64) -> FieldElement {
        FieldElement {
            value: value % self.q,
            field: self,
        }
    }

    pub fn zero(self) -> FieldElement {
        self.element(0)
    }

    pub fn one(self) -> FieldElement {
        self.element(1)
    }

    /// Uniform element.
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> FieldElement {
        self.element(rng.random_range(0..self.q))
    }

    /// Uniform element of GF(q) \ {0}.
    pub fn sample_nonzero<R: Rng + ?Sized>(self, rng: &mut R) -> FieldElement {
        self.element(rng.random_range(1..self.q))
    }

    /// All field elements in value order. Intended for small-q enumerations.
    pub fn elements(self) -> impl Iterator<Item = FieldElement> {
        (0..self.q).map(move |v| self.element(v))
    }

    /// All nonzero elements in value order.
    pub fn nonzero_elements(self) -> impl Iterator<Item = FieldElement> {
        (1..self.q).map(move |v| self.element(v))
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while (d as u128) * (d as u128) <= n as u128 {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Canonical residue in [0, q-1] tagged with its field.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u64,
    field: FieldConfig,
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.field.q)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl FieldElement {
    pub fn value(self) -> u64 {
        self.value
    }

    pub fn field(self) -> FieldConfig {
        self.field
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    fn check_same_field(self, rhs: FieldElement) -> Result<(), AlgebraError> {
        if self.field != rhs.field {
            return Err(AlgebraError::ModulusMismatch(
                self.field.q,
                rhs.field.q,
            ));
        }
        Ok(())
    }

    /// Canonical residue of `self + rhs`; rejects mixed moduli.
    pub fn try_add(self, rhs: FieldElement) -> Result<FieldElement, AlgebraError> {
        self.check_same_field(rhs)?;
        let q = self.field.q;
        let sum = (self.value as u128 + rhs.value as u128) % q as u128;
        Ok(self.field.element(sum as u64))
    }

    /// Canonical residue of `self - rhs`; rejects mixed moduli.
    pub fn try_sub(self, rhs: FieldElement) -> Result<FieldElement, AlgebraError> {
        self.check_same_field(rhs)?;
        let q = self.field.q;
        let diff = (self.value as u128 + (q - rhs.value) as u128) % q as u128;
        Ok(self.field.element(diff as u64))
    }

    /// Canonical residue of `self * rhs`; rejects mixed moduli.
    pub fn try_mul(self, rhs: FieldElement) -> Result<FieldElement, AlgebraError> {
        self.check_same_field(rhs)?;
        let q = self.field.q as u128;
        let prod = (self.value as u128 * rhs.value as u128) % q;
        Ok(self.field.element(prod as u64))
    }

    /// `self^e` by square-and-multiply.
    pub fn pow(self, mut e: u64) -> FieldElement {
        let mut base = self;
        let mut acc = self.field.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat's little theorem (q is prime).
    pub fn inv(self) -> Result<FieldElement, AlgebraError> {
        if self.is_zero() {
            return Err(AlgebraError::ZeroInverse);
        }
        Ok(self.pow(self.field.q - 2))
    }
}

// The panicking operators assume a single field per computation, which holds
// throughout the protocol code; the `try_*` methods are the checked surface.
impl Add for FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: FieldElement) -> FieldElement {
        self.try_add(rhs).expect("field mismatch in +")
    }
}

impl Sub for FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: FieldElement) -> FieldElement {
        self.try_sub(rhs).expect("field mismatch in -")
    }
}

impl Mul for FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: FieldElement) -> FieldElement {
        self.try_mul(rhs).expect("field mismatch in *")
    }
}

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        self.field.zero() - self
    }
}

/// Componentwise vector sum.
pub fn vec_add(a: &[FieldElement], b: &[FieldElement]) -> Vec<FieldElement> {
    assert_eq!(a.len(), b.len(), "vector length mismatch");
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

/// Componentwise vector difference.
pub fn vec_sub(a: &[FieldElement], b: &[FieldElement]) -> Vec<FieldElement> {
    assert_eq!(a.len(), b.len(), "vector length mismatch");
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

/// Scalar times vector.
pub fn vec_scale(c: FieldElement, v: &[FieldElement]) -> Vec<FieldElement> {
    v.iter().map(|&x| c * x).collect()
}

/// Inner product.
pub fn dot(a: &[FieldElement], b: &[FieldElement]) -> FieldElement {
    assert_eq!(a.len(), b.len(), "vector length mismatch");
    assert!(!a.is_empty(), "dot product of empty vectors");
    a.iter()
        .zip(b)
        .map(|(&x, &y)| x * y)
        .fold(a[0].field().zero(), |acc, t| acc + t)
}

/// Dense univariate polynomial, coefficients lowest degree first.
///
/// The zero polynomial is the empty coefficient list; otherwise the leading
/// coefficient is nonzero.
#[derive(Clone, PartialEq, Eq)]
pub struct Polynomial {
    coeffs: Vec<FieldElement>,
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{}x^{}", c.value(), i))
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

impl Polynomial {
    /// Builds a polynomial, trimming trailing zero coefficients.
    pub fn new(mut coeffs: Vec<FieldElement>) -> Polynomial {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Polynomial {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn constant(c: FieldElement) -> Polynomial {
        Polynomial::new(vec![c])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.coeffs
    }

    /// Horner evaluation at `x`.
    pub fn eval(&self, x: FieldElement) -> Result<FieldElement, AlgebraError> {
        let mut acc = x.field().zero();
        for &c in self.coeffs.iter().rev() {
            acc = acc.try_mul(x)?.try_add(c)?;
        }
        Ok(acc)
    }

    pub fn add(&self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let a = self.coeffs.get(i).copied();
            let b = rhs.coeffs.get(i).copied();
            out.push(match (a, b) {
                (Some(a), Some(b)) => a + b,
                (Some(a), None) => a,
                (None, Some(b)) => b,
                (None, None) => unreachable!(),
            });
        }
        Polynomial::new(out)
    }

    pub fn mul(&self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let field = self.coeffs[0].field();
        let mut out = vec![field.zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = out[i + j] + a * b;
            }
        }
        Polynomial::new(out)
    }

    pub fn scale(&self, c: FieldElement) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|&a| a * c).collect())
    }

    /// The unique polynomial of degree < n through n points with distinct
    /// abscissas, built by accumulating scaled Lagrange basis polynomials.
    pub fn lagrange_interpolate(
        points: &[(FieldElement, FieldElement)],
    ) -> Result<Polynomial, AlgebraError> {
        if points.is_empty() {
            return Err(AlgebraError::EmptyInterpolation);
        }
        let field = points[0].0.field();
        for &(x, y) in points {
            x.check_same_field(points[0].0)?;
            y.check_same_field(points[0].0)?;
        }
        for (i, &(xi, _)) in points.iter().enumerate() {
            for &(xj, _) in &points[i + 1..] {
                if xi == xj {
                    return Err(AlgebraError::DuplicateAbscissa(xi.value()));
                }
            }
        }
        let mut acc = Polynomial::zero();
        for (k, &(xk, yk)) in points.iter().enumerate() {
            let mut basis = Polynomial::constant(field.one());
            let mut denom = field.one();
            for (j, &(xj, _)) in points.iter().enumerate() {
                if j == k {
                    continue;
                }
                // basis *= (x - xj)
                basis = basis.mul(&Polynomial::new(vec![-xj, field.one()]));
                denom = denom * (xk - xj);
            }
            acc = acc.add(&basis.scale(yk * denom.inv()?));
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gf(q: u64) -> FieldConfig {
        FieldConfig::new(q).unwrap()
    }

    #[test]
    fn primality_screen() {
        for q in [2u64, 3, 5, 7, 11, 13, 101, 7919] {
            assert!(FieldConfig::new(q).is_ok(), "q={q}");
        }
        for q in [0u64, 1, 4, 6, 9, 15, 100] {
            assert!(FieldConfig::new(q).is_err(), "q={q}");
        }
    }

    #[test]
    fn add_examples() {
        let f11 = gf(11);
        assert_eq!(f11.element(7) + f11.element(8), f11.element(4));
        for x in f11.elements() {
            assert_eq!(f11.zero() + x, x);
        }
        let f3 = gf(3);
        assert_eq!(f3.element(2) + f3.element(2), f3.element(1));
    }

    #[test]
    fn mul_examples() {
        let f11 = gf(11);
        assert_eq!(f11.element(2) * f11.element(6), f11.one());
        for x in f11.elements() {
            assert_eq!(f11.one() * x, x);
        }
        let f5 = gf(5);
        assert_eq!(f5.element(3) * f5.element(4), f5.element(2));
    }

    // Independent oracle: exhaustive search for the element whose product is 1.
    fn inv_by_search(a: FieldElement) -> FieldElement {
        a.field()
            .elements()
            .find(|&b| a * b == a.field().one())
            .expect("no inverse found")
    }

    #[test]
    fn inv_examples() {
        let f11 = gf(11);
        assert_eq!(f11.element(2).inv().unwrap(), f11.element(6));
        assert_eq!(f11.element(2).inv().unwrap(), inv_by_search(f11.element(2)));
        for q in [2u64, 3, 5, 7, 11] {
            assert_eq!(gf(q).one().inv().unwrap(), gf(q).one());
        }
        let f7 = gf(7);
        assert_eq!(f7.element(3).inv().unwrap(), f7.element(5));
        assert_eq!(f7.element(3).inv().unwrap(), inv_by_search(f7.element(3)));
        assert_eq!(f7.zero().inv(), Err(AlgebraError::ZeroInverse));
    }

    #[test]
    fn inverses_exhaustive_small_fields() {
        for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101] {
            let f = gf(q);
            for a in f.nonzero_elements() {
                assert_eq!(a * a.inv().unwrap(), f.one(), "q={q} a={a}");
            }
        }
    }

    #[test]
    fn mixed_moduli_rejected() {
        let a = gf(11).element(3);
        let b = gf(7).element(3);
        assert!(matches!(a.try_add(b), Err(AlgebraError::ModulusMismatch(11, 7))));
        assert!(a.try_mul(b).is_err());
        assert!(a.try_sub(b).is_err());
    }

    #[test]
    fn eval_examples() {
        let f11 = gf(11);
        // p = 3 + 2x
        let p = Polynomial::new(vec![f11.element(3), f11.element(2)]);
        assert_eq!(p.eval(f11.element(1)).unwrap(), f11.element(5));
        assert_eq!(p.eval(f11.element(2)).unwrap(), f11.element(7));
        let zero = Polynomial::zero();
        for x in f11.elements() {
            assert_eq!(zero.eval(x).unwrap(), f11.zero());
        }
    }

    #[test]
    fn interpolate_examples() {
        let f11 = gf(11);
        let pts = [
            (f11.element(1), f11.element(5)),
            (f11.element(2), f11.element(7)),
        ];
        let p = Polynomial::lagrange_interpolate(&pts).unwrap();
        assert_eq!(p, Polynomial::new(vec![f11.element(3), f11.element(2)]));

        let single = [(f11.element(4), f11.element(9))];
        let c = Polynomial::lagrange_interpolate(&single).unwrap();
        assert_eq!(c, Polynomial::constant(f11.element(9)));

        // Three samples of 1 + x + x^2 recover it exactly.
        let p2 = Polynomial::new(vec![f11.one(), f11.one(), f11.one()]);
        let samples: Vec<_> = [3u64, 5, 8]
            .iter()
            .map(|&x| {
                let xe = f11.element(x);
                (xe, p2.eval(xe).unwrap())
            })
            .collect();
        assert_eq!(Polynomial::lagrange_interpolate(&samples).unwrap(), p2);
    }

    #[test]
    fn interpolate_rejects_bad_input() {
        let f = gf(11);
        assert_eq!(
            Polynomial::lagrange_interpolate(&[]),
            Err(AlgebraError::EmptyInterpolation)
        );
        let dup = [
            (f.element(1), f.element(2)),
            (f.element(1), f.element(3)),
        ];
        assert_eq!(
            Polynomial::lagrange_interpolate(&dup),
            Err(AlgebraError::DuplicateAbscissa(1))
        );
    }

    #[test]
    fn trailing_zeros_trimmed() {
        let f = gf(7);
        let p = Polynomial::new(vec![f.element(1), f.zero(), f.zero()]);
        assert_eq!(p.degree(), Some(0));
        let z = Polynomial::new(vec![f.zero(), f.zero()]);
        assert!(z.is_zero());
        assert_eq!(z.degree(), None);
    }

    proptest! {
        // Interpolation is a left inverse of sampling: exact recovery of any
        // polynomial of degree d from d+1 distinct abscissas.
        #[test]
        fn interpolation_recovers_polynomial(
            seed in 0u64..10_000,
            degree in 0usize..6,
        ) {
            use rand::SeedableRng;
            let q = 101u64;
            let f = gf(q);
            let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
            let mut coeffs: Vec<FieldElement> =
                (0..=degree).map(|_| f.sample(&mut rng)).collect();
            // force exact degree
            if coeffs[degree].is_zero() {
                coeffs[degree] = f.one();
            }
            let p = Polynomial::new(coeffs);
            // distinct abscissas
            let mut xs: Vec<u64> = (0..q).collect();
            for i in (1..xs.len()).rev() {
                let j = rng.random_range(0..=i);
                xs.swap(i, j);
            }
            let pts: Vec<_> = xs[..=degree]
                .iter()
                .map(|&x| {
                    let xe = f.element(x);
                    (xe, p.eval(xe).unwrap())
                })
                .collect();
            prop_assert_eq!(Polynomial::lagrange_interpolate(&pts).unwrap(), p);
        }

        // eval distributes over polynomial addition and scalar multiplication.
        #[test]
        fn eval_is_linear(seed in 0u64..10_000) {
            use rand::SeedableRng;
            let f = gf(97);
            let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
            let p = Polynomial::new((0..5).map(|_| f.sample(&mut rng)).collect());
            let r = Polynomial::new((0..4).map(|_| f.sample(&mut rng)).collect());
            let c = f.sample(&mut rng);
            let x = f.sample(&mut rng);
            prop_assert_eq!(
                p.add(&r).eval(x).unwrap(),
                p.eval(x).unwrap() + r.eval(x).unwrap()
            );
            prop_assert_eq!(
                p.scale(c).eval(x).unwrap(),
                c * p.eval(x).unwrap()
            );
        }
    }
}
