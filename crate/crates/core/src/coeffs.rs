//! Residue-class affine form of `C^k`: for `n ≡ i (mod 2^k)`,
//! `2^k · C^k(n) = a(i,k)·n + b(i,k)`.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::map::{apply, iterate};
use crate::params::CollatzParams;

/// Default cap on the table order; tables hold `2^k` rows.
pub const DEFAULT_MAX_K: u32 = 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoeffError {
    #[error("table order must be at least 1")]
    ZeroOrder,
    #[error("table of order {k} exceeds the memory budget (max order {max})")]
    TableBudget { k: u32, max: u32 },
    #[error("sum of {which} coefficients at k={k} is {actual}, expected {expected}")]
    SumMismatch { which: &'static str, k: u32, actual: BigInt, expected: BigInt },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoeffTable {
    pub params: CollatzParams,
    pub k: u32,
    /// `a[i] = alpha^{alpha_exponent[i]}`.
    pub a: Vec<BigUint>,
    pub b: Vec<BigUint>,
    pub alpha_exponent: Vec<u32>,
}

impl CoeffTable {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn modulus(&self) -> u64 {
        1u64 << self.k
    }

    /// Residue class of `n` with nonnegative representative.
    pub fn class_of(&self, n: &BigInt) -> usize {
        let mask = BigInt::from(self.modulus() - 1);
        (n & mask).to_usize().expect("masked residue fits")
    }

    /// `C^k(n)` through the table; `None` if the division is not exact,
    /// which would mean the table is wrong.
    pub fn evaluate(&self, n: &BigInt) -> Option<BigInt> {
        let i = self.class_of(n);
        let numer = BigInt::from(self.a[i].clone()) * n + BigInt::from(self.b[i].clone());
        let modulus = BigInt::from(self.modulus());
        if (&numer % &modulus).is_zero() {
            Some(numer / modulus)
        } else {
            None
        }
    }
}

/// Builds tables of increasing order by the doubling recurrence.
///
/// Each class keeps its smallest positive representative and the current
/// value `C^k(rep)`; the parity of that value decides which branch of the
/// recurrence a split class takes.
#[derive(Debug, Clone)]
pub struct CoeffTableBuilder {
    table: CoeffTable,
    /// `C^k(rep(i))` with `rep(i)` the smallest positive representative of `i`.
    current: Vec<BigInt>,
    max_k: u32,
}

impl CoeffTableBuilder {
    pub fn new(params: CollatzParams) -> Self {
        Self::with_budget(params, DEFAULT_MAX_K)
    }

    pub fn with_budget(params: CollatzParams, max_k: u32) -> Self {
        let alpha = BigUint::from(params.alpha());
        let table = CoeffTable {
            params,
            k: 1,
            a: vec![BigUint::one(), alpha],
            b: vec![BigUint::zero(), BigUint::from(params.beta())],
            alpha_exponent: vec![0, 1],
        };
        // Representatives 2 and 1.
        let current = vec![apply(params, &BigInt::from(2)), apply(params, &BigInt::one())];
        Self { table, current, max_k }
    }

    pub fn table(&self) -> &CoeffTable {
        &self.table
    }

    pub fn into_table(self) -> CoeffTable {
        self.table
    }

    /// Moves from order `k` to order `k + 1`.
    pub fn advance(&mut self) -> Result<&CoeffTable, CoeffError> {
        let k = self.table.k;
        if k + 1 > self.max_k {
            return Err(CoeffError::TableBudget { k: k + 1, max: self.max_k });
        }
        let params = self.table.params;
        let alpha = BigUint::from(params.alpha());
        let shift = BigUint::from(params.beta()) << k;
        let half = 1usize << k;
        let size = half << 1;

        let mut a = vec![BigUint::zero(); size];
        let mut b = vec![BigUint::zero(); size];
        let mut exps = vec![0u32; size];
        let mut next = vec![BigInt::zero(); size];

        for j in 0..half {
            // Class j mod 2^{k+1}: representative j, or 2^{k+1} when j = 0.
            // Class j + 2^k: representative j + 2^k.
            let low_value = if j == 0 {
                iterate(params, &(BigInt::one() << (k + 1)), u64::from(k))
            } else {
                self.current[j].clone()
            };
            let high_value = iterate(params, &BigInt::from(j + half), u64::from(k));

            for (slot, value) in [(j, low_value), (j + half, high_value)] {
                let odd = value.bit(0);
                if odd {
                    a[slot] = &self.table.a[j] * &alpha;
                    b[slot] = &self.table.b[j] * &alpha + &shift;
                    exps[slot] = self.table.alpha_exponent[j] + 1;
                } else {
                    a[slot] = self.table.a[j].clone();
                    b[slot] = self.table.b[j].clone();
                    exps[slot] = self.table.alpha_exponent[j];
                }
                next[slot] = apply(params, &value);
            }
        }

        self.table = CoeffTable { params, k: k + 1, a, b, alpha_exponent: exps };
        self.current = next;
        Ok(&self.table)
    }
}

pub fn build_coeff_table(params: CollatzParams, k: u32) -> Result<CoeffTable, CoeffError> {
    build_coeff_table_with_budget(params, k, DEFAULT_MAX_K)
}

pub fn build_coeff_table_with_budget(
    params: CollatzParams,
    k: u32,
    max_k: u32,
) -> Result<CoeffTable, CoeffError> {
    if k == 0 {
        return Err(CoeffError::ZeroOrder);
    }
    if k > max_k {
        return Err(CoeffError::TableBudget { k, max: max_k });
    }
    let mut builder = CoeffTableBuilder::with_budget(params, max_k);
    while builder.table().k < k {
        builder.advance()?;
    }
    Ok(builder.into_table())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecompositionCounterexample {
    pub n: BigInt,
    pub residue: usize,
    /// `2^k · C^k(n)` by direct iteration.
    pub lhs: BigInt,
    /// `a·n + b` from the table.
    pub rhs: BigInt,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecompositionCheck {
    pub checked: u64,
    pub counterexample: Option<DecompositionCounterexample>,
}

impl DecompositionCheck {
    pub fn holds(&self) -> bool {
        self.counterexample.is_none()
    }
}

/// Largest order for which [`verify_mod_decomposition`] also sweeps
/// `n ∈ [1, 2^{k+2}]` exhaustively.
pub const EXHAUSTIVE_MAX_K: u32 = 12;

/// Checks `2^k · C^k(n) = a[n mod 2^k]·n + b[n mod 2^k]` with exact integers.
///
/// `sample_count` random `n >= 0` up to 256 bits (seeded, so reproducible) plus an
/// exhaustive sweep when `k <= 12`.
pub fn verify_mod_decomposition(table: &CoeffTable, sample_count: u64) -> DecompositionCheck {
    verify_mod_decomposition_seeded(table, sample_count, 0x5eed_c0ef)
}

pub fn verify_mod_decomposition_seeded(
    table: &CoeffTable,
    sample_count: u64,
    seed: u64,
) -> DecompositionCheck {
    let mut checked = 0u64;
    let mut check = |n: BigInt| -> Option<DecompositionCounterexample> {
        checked += 1;
        let residue = table.class_of(&n);
        let lhs = iterate(table.params, &n, u64::from(table.k)) << table.k;
        let rhs = BigInt::from(table.a[residue].clone()) * &n + BigInt::from(table.b[residue].clone());
        (lhs != rhs).then_some(DecompositionCounterexample { n, residue, lhs, rhs })
    };

    if table.k <= EXHAUSTIVE_MAX_K {
        let upper = 1u64 << (table.k + 2);
        for n in 1..=upper {
            if let Some(bad) = check(BigInt::from(n)) {
                return DecompositionCheck { checked, counterexample: Some(bad) };
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..sample_count {
        let limbs: Vec<u32> = (0..8).map(|_| rng.gen()).collect();
        let n = BigInt::from(BigUint::new(limbs));
        if let Some(bad) = check(n) {
            return DecompositionCheck { checked, counterexample: Some(bad) };
        }
    }
    DecompositionCheck { checked, counterexample: None }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoeffSums {
    pub sum_a: BigInt,
    pub sum_b: BigInt,
}

/// `(alpha + 1)^k`.
pub fn expected_sum_a(params: CollatzParams, k: u32) -> BigInt {
    BigInt::from(params.alpha() + 1).pow(k)
}

/// `beta((alpha+1)^k - 4^k)/(alpha - 3)` for `alpha != 3`, `beta·k·4^{k-1}` otherwise.
pub fn expected_sum_b(params: CollatzParams, k: u32) -> BigInt {
    let beta = BigInt::from(params.beta());
    let alpha = params.alpha();
    if alpha == 3 {
        if k == 0 {
            return BigInt::zero();
        }
        return beta * BigInt::from(k) * BigInt::from(4u32).pow(k - 1);
    }
    let numer = BigInt::from(alpha + 1).pow(k) - BigInt::from(4u32).pow(k);
    beta * numer / (BigInt::from(alpha) - 3)
}

/// Exact table sums, checked against their closed forms.
pub fn coeff_sums(table: &CoeffTable) -> Result<CoeffSums, CoeffError> {
    let sum_a: BigUint = table.a.iter().sum();
    let sum_b: BigUint = table.b.iter().sum();
    let sums = CoeffSums { sum_a: sum_a.into(), sum_b: sum_b.into() };

    let expected_a = expected_sum_a(table.params, table.k);
    if sums.sum_a != expected_a {
        return Err(CoeffError::SumMismatch {
            which: "a",
            k: table.k,
            actual: sums.sum_a,
            expected: expected_a,
        });
    }
    let expected_b = expected_sum_b(table.params, table.k);
    if sums.sum_b != expected_b {
        return Err(CoeffError::SumMismatch {
            which: "b",
            k: table.k,
            actual: sums.sum_b,
            expected: expected_b,
        });
    }
    Ok(sums)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::parity_vector;

    fn p(a: u64, b: u64) -> CollatzParams {
        CollatzParams::new(a, b).unwrap()
    }

    fn as_u64(v: &[BigUint]) -> Vec<u64> {
        v.iter().map(|x| x.to_u64().unwrap()).collect()
    }

    #[test]
    fn classical_tables() {
        let t = build_coeff_table(p(3, 1), 1).unwrap();
        assert_eq!(as_u64(&t.a), vec![1, 3]);
        assert_eq!(as_u64(&t.b), vec![0, 1]);

        let t = build_coeff_table(p(3, 1), 2).unwrap();
        assert_eq!(as_u64(&t.a), vec![1, 3, 3, 9]);
        assert_eq!(as_u64(&t.b), vec![0, 1, 2, 5]);
        assert_eq!(t.alpha_exponent, vec![0, 1, 1, 2]);
    }

    /// Oracle: solve for (a, b) from C^k at two representatives of each class.
    fn solved_table(params: CollatzParams, k: u32) -> (Vec<BigInt>, Vec<BigInt>) {
        let m = 1i64 << k;
        let (mut a, mut b) = (vec![], vec![]);
        for i in 0..m {
            let r = if i == 0 { m } else { i };
            let v1 = iterate(params, &BigInt::from(r), u64::from(k));
            let v2 = iterate(params, &BigInt::from(r + m), u64::from(k));
            let ai = v2 - &v1;
            let bi = (v1 << k) - &ai * r;
            a.push(ai);
            b.push(bi);
        }
        (a, b)
    }

    #[test]
    fn alpha5_beta3_order3_matches_solved_oracle() {
        let params = p(5, 3);
        let t = build_coeff_table(params, 3).unwrap();
        let (a, b) = solved_table(params, 3);
        let ta: Vec<BigInt> = t.a.iter().cloned().map(BigInt::from).collect();
        let tb: Vec<BigInt> = t.b.iter().cloned().map(BigInt::from).collect();
        assert_eq!(ta, a);
        assert_eq!(tb, b);
        let sums = coeff_sums(&t).unwrap();
        assert_eq!(sums.sum_a, BigInt::from(216));
        assert_eq!(sums.sum_b, BigInt::from(228));
    }

    #[test]
    fn sum_examples() {
        let s = coeff_sums(&build_coeff_table(p(3, 1), 2).unwrap()).unwrap();
        assert_eq!((s.sum_a, s.sum_b), (BigInt::from(16), BigInt::from(8)));
        let s = coeff_sums(&build_coeff_table(p(1, 1), 1).unwrap()).unwrap();
        assert_eq!((s.sum_a, s.sum_b), (BigInt::from(2), BigInt::from(1)));
        let s = coeff_sums(&build_coeff_table(p(5, 1), 4).unwrap()).unwrap();
        assert_eq!((s.sum_a, s.sum_b), (BigInt::from(1296), BigInt::from(520)));
    }

    #[test]
    fn corrupted_table_is_caught() {
        let mut t = build_coeff_table(p(3, 1), 3).unwrap();
        t.b[5] += 1u32;
        assert!(matches!(coeff_sums(&t), Err(CoeffError::SumMismatch { which: "b", .. })));
        let check = verify_mod_decomposition(&t, 0);
        let bad = check.counterexample.unwrap();
        assert_eq!(bad.residue, 5);
        assert_eq!(bad.n, BigInt::from(5));
    }

    #[test]
    fn decomposition_examples() {
        let t = build_coeff_table(p(3, 1), 2).unwrap();
        assert_eq!(t.evaluate(&BigInt::from(7)), Some(BigInt::from(17)));
        assert_eq!(t.evaluate(&BigInt::from(4)), Some(BigInt::from(1)));
        assert!(verify_mod_decomposition(&t, 50).holds());

        let t = build_coeff_table(p(1, 1), 3).unwrap();
        let check = verify_mod_decomposition(&t, 0);
        assert!(check.holds());
        assert_eq!(check.checked, 32);
    }

    #[test]
    fn exponent_is_count_of_odd_steps() {
        for params in CollatzParams::reference_grid() {
            let t = build_coeff_table(params, 8).unwrap();
            for i in 0..t.len() {
                let rep = if i == 0 { 1u64 << 8 } else { i as u64 };
                let pv = parity_vector(params, &BigInt::from(rep), 8).unwrap();
                assert_eq!(pv.ones(), t.alpha_exponent[i]);
                assert_eq!(t.a[i], BigUint::from(params.alpha()).pow(t.alpha_exponent[i]));
            }
        }
    }

    #[test]
    fn budget_and_order_errors() {
        assert_eq!(build_coeff_table(p(3, 1), 0), Err(CoeffError::ZeroOrder));
        assert_eq!(
            build_coeff_table_with_budget(p(3, 1), 5, 4),
            Err(CoeffError::TableBudget { k: 5, max: 4 })
        );
    }
}
