//! Discrete time derivatives `D_t^m(C^k(n)) = (C - I)^m (C^k(n))` and their
//! affine form on residue classes modulo `2^m`.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::coeffs::{CoeffError, CoeffTable, CoeffTableBuilder, DEFAULT_MAX_K};
use crate::map::{apply, iterate};
use crate::params::CollatzParams;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DerivativeError {
    #[error("derivative order must be at least 1")]
    ZeroOrder,
    #[error("discrete derivatives are evaluated for n >= 1 (got {0})")]
    NonPositiveStart(BigInt),
    #[error(transparent)]
    Table(#[from] CoeffError),
    #[error("sum of {which} coefficients at m={m} is {actual}, expected {expected}")]
    SumMismatch { which: &'static str, m: u32, actual: BigInt, expected: BigInt },
}

/// `binom(m, j)` for `j = 0..=m`.
fn binomial_row(m: u32) -> Vec<BigInt> {
    let mut row = vec![BigInt::one()];
    for j in 1..=m {
        let prev = row[j as usize - 1].clone();
        row.push(prev * BigInt::from(m - j + 1) / BigInt::from(j));
    }
    row
}

/// `sum_j binom(m,j) (-1)^j C^{m-j}(C^k(n))` by direct iteration.
pub fn discrete_derivative_value(
    params: CollatzParams,
    n: &BigInt,
    k: u64,
    m: u32,
) -> Result<BigInt, DerivativeError> {
    if !n.is_positive() {
        return Err(DerivativeError::NonPositiveStart(n.clone()));
    }
    Ok(derivative_at(params, &iterate(params, n, k), m))
}

/// `(C - I)^m (x)`.
fn derivative_at(params: CollatzParams, x: &BigInt, m: u32) -> BigInt {
    let mut orbit = Vec::with_capacity(m as usize + 1);
    orbit.push(x.clone());
    for i in 0..m as usize {
        let next = apply(params, &orbit[i]);
        orbit.push(next);
    }
    binomial_row(m)
        .into_iter()
        .enumerate()
        .map(|(j, c)| {
            let term = c * &orbit[m as usize - j];
            if j % 2 == 0 {
                term
            } else {
                -term
            }
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassCoefficients {
    pub residue: u64,
    pub n_coeff_numerator: BigInt,
    pub free_coeff_numerator: BigInt,
}

/// For `x ≡ r (mod 2^m)`:
/// `2^m · D^m(x) = n_coeff_numerator(r)·x + free_coeff_numerator(r)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivativeDecomposition {
    pub params: CollatzParams,
    pub m: u32,
    pub per_class: Vec<ClassCoefficients>,
    pub n_coeff_sum: BigInt,
    pub free_coeff_sum: BigInt,
}

impl DerivativeDecomposition {
    pub fn denominator(&self) -> BigInt {
        BigInt::one() << self.m
    }

    pub fn class_of(&self, x: &BigInt) -> usize {
        let mask = (BigInt::one() << self.m) - 1u32;
        let r: BigUint = (x & mask).magnitude().clone();
        r.iter_u64_digits().next().unwrap_or(0) as usize
    }

    /// `n_coeff_sum / 2^m`.
    pub fn normalized_n_coeff_sum(&self) -> BigRational {
        BigRational::new(self.n_coeff_sum.clone(), self.denominator())
    }

    /// `free_coeff_sum / 2^m`.
    pub fn normalized_free_coeff_sum(&self) -> BigRational {
        BigRational::new(self.free_coeff_sum.clone(), self.denominator())
    }
}

/// `(alpha - 3)^m`.
pub fn expected_n_coeff_sum(params: CollatzParams, m: u32) -> BigInt {
    (BigInt::from(params.alpha()) - 3u32).pow(m)
}

/// `beta (alpha - 3)^{m-1}`, with `0^0 = 1`.
pub fn expected_free_coeff_sum(params: CollatzParams, m: u32) -> BigInt {
    assert!(m >= 1);
    BigInt::from(params.beta()) * (BigInt::from(params.alpha()) - 3u32).pow(m - 1)
}

pub fn build_derivative_decomposition(
    params: CollatzParams,
    m: u32,
) -> Result<DerivativeDecomposition, DerivativeError> {
    if m == 0 {
        return Err(DerivativeError::ZeroOrder);
    }
    if m > DEFAULT_MAX_K {
        return Err(CoeffError::TableBudget { k: m, max: DEFAULT_MAX_K }.into());
    }

    // tables[i] has order i + 1.
    let mut builder = CoeffTableBuilder::new(params);
    let mut tables: Vec<CoeffTable> = vec![builder.table().clone()];
    while tables.len() < m as usize {
        tables.push(builder.advance()?.clone());
    }
    // Order 0 is the identity: a = 1, b = 0.
    let coefficient = |order: u32, r: u64| -> (BigInt, BigInt) {
        if order == 0 {
            return (BigInt::one(), BigInt::zero());
        }
        let t = &tables[order as usize - 1];
        let i = (r & (t.modulus() - 1)) as usize;
        (BigInt::from(t.a[i].clone()), BigInt::from(t.b[i].clone()))
    };

    let weights: Vec<BigInt> = binomial_row(m)
        .into_iter()
        .enumerate()
        .map(|(j, c)| c * BigInt::from(-2).pow(j as u32))
        .collect();

    let mut per_class = Vec::with_capacity(1 << m);
    let mut n_coeff_sum = BigInt::zero();
    let mut free_coeff_sum = BigInt::zero();
    for r in 0..(1u64 << m) {
        let mut n_coeff = BigInt::zero();
        let mut free_coeff = BigInt::zero();
        for (j, w) in weights.iter().enumerate() {
            let (a, b) = coefficient(m - j as u32, r);
            n_coeff += w * a;
            free_coeff += w * b;
        }
        n_coeff_sum += &n_coeff;
        free_coeff_sum += &free_coeff;
        per_class.push(ClassCoefficients {
            residue: r,
            n_coeff_numerator: n_coeff,
            free_coeff_numerator: free_coeff,
        });
    }

    let expected = expected_n_coeff_sum(params, m);
    if n_coeff_sum != expected {
        return Err(DerivativeError::SumMismatch { which: "n", m, actual: n_coeff_sum, expected });
    }
    let expected = expected_free_coeff_sum(params, m);
    if free_coeff_sum != expected {
        return Err(DerivativeError::SumMismatch {
            which: "free",
            m,
            actual: free_coeff_sum,
            expected,
        });
    }
    Ok(DerivativeDecomposition { params, m, per_class, n_coeff_sum, free_coeff_sum })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineCounterexample {
    pub n: BigInt,
    pub k: u64,
    pub residue: usize,
    /// `2^m · D^m(C^k(n))`.
    pub lhs: BigInt,
    /// `n_coeff(r)·C^k(n) + free_coeff(r)`.
    pub rhs: BigInt,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineCheck {
    pub checked: u64,
    pub counterexample: Option<AffineCounterexample>,
}

impl AffineCheck {
    pub fn holds(&self) -> bool {
        self.counterexample.is_none()
    }
}

fn check_pair(decomp: &DerivativeDecomposition, n: &BigInt, k: u64) -> Option<AffineCounterexample> {
    let x = iterate(decomp.params, n, k);
    let lhs = derivative_at(decomp.params, &x, decomp.m) << decomp.m;
    let residue = decomp.class_of(&x);
    let row = &decomp.per_class[residue];
    let rhs = &row.n_coeff_numerator * &x + &row.free_coeff_numerator;
    (lhs != rhs).then(|| AffineCounterexample { n: n.clone(), k, residue, lhs, rhs })
}

/// Random `(n, k)` with `n` up to 128 bits and `k <= 16` (seeded).
pub fn verify_affine_representation(decomp: &DerivativeDecomposition, sample_count: u64) -> AffineCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(0xd1ff_0000 ^ u64::from(decomp.m));
    for i in 0..sample_count {
        let n = BigInt::from(rng.gen::<u128>() | 1) >> rng.gen_range(0..120u32);
        let n = if n.is_zero() { BigInt::one() } else { n };
        let k = rng.gen_range(0..=16u64);
        if let Some(bad) = check_pair(decomp, &n, k) {
            return AffineCheck { checked: i + 1, counterexample: Some(bad) };
        }
    }
    AffineCheck { checked: sample_count, counterexample: None }
}

/// Every `n ∈ [1, n_max]`, `k ∈ [0, k_max]`.
pub fn verify_affine_exhaustive(decomp: &DerivativeDecomposition, n_max: u64, k_max: u64) -> AffineCheck {
    let mut checked = 0;
    for n in 1..=n_max {
        let n = BigInt::from(n);
        for k in 0..=k_max {
            checked += 1;
            if let Some(bad) = check_pair(decomp, &n, k) {
                return AffineCheck { checked, counterexample: Some(bad) };
            }
        }
    }
    AffineCheck { checked, counterexample: None }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: u64, b: u64) -> CollatzParams {
        CollatzParams::new(a, b).unwrap()
    }

    fn big(n: i64) -> BigInt {
        BigInt::from(n)
    }

    fn numerators(d: &DerivativeDecomposition) -> (Vec<i64>, Vec<i64>) {
        let conv = |x: &BigInt| i64::try_from(x).unwrap();
        (
            d.per_class.iter().map(|c| conv(&c.n_coeff_numerator)).collect(),
            d.per_class.iter().map(|c| conv(&c.free_coeff_numerator)).collect(),
        )
    }

    #[test]
    fn value_examples() {
        assert_eq!(discrete_derivative_value(p(3, 1), &big(4), 0, 1).unwrap(), big(-2));
        assert_eq!(discrete_derivative_value(p(3, 1), &big(3), 0, 2).unwrap(), big(1));
        assert_eq!(discrete_derivative_value(p(3, 1), &big(3), 1, 2).unwrap(), big(-7));
        assert!(discrete_derivative_value(p(3, 1), &big(0), 1, 2).is_err());
    }

    #[test]
    fn classical_order_two() {
        let d = build_derivative_decomposition(p(3, 1), 2).unwrap();
        let (n, f) = numerators(&d);
        assert_eq!(n, vec![1, -5, 3, 1]);
        assert_eq!(f, vec![0, -3, 2, 1]);
        assert_eq!(d.n_coeff_sum, big(0));
        assert_eq!(d.free_coeff_sum, big(0));
    }

    #[test]
    fn alpha5_order_one() {
        let d = build_derivative_decomposition(p(5, 1), 1).unwrap();
        let (n, f) = numerators(&d);
        assert_eq!(n, vec![-1, 3]);
        assert_eq!(f, vec![0, 1]);
        assert_eq!((d.n_coeff_sum.clone(), d.free_coeff_sum.clone()), (big(2), big(1)));
    }

    #[test]
    fn nollatz_order_three() {
        let d = build_derivative_decomposition(p(1, 1), 3).unwrap();
        assert_eq!(d.n_coeff_sum, big(-8));
        assert_eq!(d.free_coeff_sum, big(4));
        assert_eq!(d.normalized_n_coeff_sum(), BigRational::from_integer(big(-1)));
        assert_eq!(d.normalized_free_coeff_sum(), BigRational::new(big(1), big(2)));
    }

    #[test]
    fn affine_examples() {
        let d = build_derivative_decomposition(p(3, 1), 2).unwrap();
        // 4 * (-7) = (-5) * 5 + (-3)
        assert!(check_pair(&d, &big(3), 1).is_none());
        assert!(check_pair(&d, &big(4), 0).is_none());
        assert!(verify_affine_exhaustive(&d, 64, 4).holds());

        let d = build_derivative_decomposition(p(7, 3), 4).unwrap();
        let check = verify_affine_representation(&d, 1000);
        assert!(check.holds());
        assert_eq!(check.checked, 1000);
    }

    #[test]
    fn corrupted_decomposition_is_caught() {
        let mut d = build_derivative_decomposition(p(3, 1), 2).unwrap();
        d.per_class[1].free_coeff_numerator += 1;
        let check = verify_affine_exhaustive(&d, 16, 2);
        assert_eq!(check.counterexample.unwrap().residue, 1);
    }

    #[test]
    fn zero_order_is_rejected() {
        assert_eq!(build_derivative_decomposition(p(3, 1), 0), Err(DerivativeError::ZeroOrder));
    }
}
