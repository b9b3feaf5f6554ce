//! The accelerated map `C_{alpha,beta}` on the integers: single steps,
//! iterates, orbits with cycle detection, and parity vectors.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive};
use thiserror::Error;

use crate::params::CollatzParams;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MapError {
    #[error("parity vectors are defined for n >= 1 (got {0})")]
    NonPositiveStart(BigInt),
    #[error("parity vector length must be at least 1")]
    EmptyParityVector,
    #[error("bijection sweep over 2^{k} integers exceeds the budget 2^{max}")]
    SweepBudget { k: u32, max: u32 },
}

/// Largest `k` accepted by [`parity_bijection_check`].
pub const MAX_BIJECTION_K: u32 = 24;

/// One application of the map. Negative inputs use `C(-n) = -C(n)`.
pub fn apply(params: CollatzParams, n: &BigInt) -> BigInt {
    if n.is_negative() {
        return -apply(params, &-n);
    }
    if n.is_even() {
        n >> 1
    } else {
        (n * params.alpha() + params.beta()) >> 1
    }
}

/// One step on machine integers; `None` when the result would overflow.
#[inline]
pub fn apply_i128(params: CollatzParams, n: i128) -> Option<i128> {
    if n < 0 {
        return apply_i128(params, n.checked_neg()?).map(|v| -v);
    }
    if n & 1 == 0 {
        Some(n >> 1)
    } else {
        let odd = n
            .checked_mul(params.alpha() as i128)?
            .checked_add(params.beta() as i128)?;
        Some(odd >> 1)
    }
}

/// One step on nonnegative frequencies; `None` on overflow.
#[inline]
pub fn apply_u64(params: CollatzParams, n: u64) -> Option<u64> {
    if n & 1 == 0 {
        Some(n >> 1)
    } else {
        // alpha*n + beta is even, so the halved value fits whenever the
        // intermediate fits in u128.
        let odd = (n as u128) * (params.alpha() as u128) + params.beta() as u128;
        u64::try_from(odd >> 1).ok()
    }
}

/// A value on an orbit, kept in `i128` while it fits.
#[derive(Debug, Clone)]
enum Cursor {
    Small(i128),
    Big(BigInt),
}

impl Cursor {
    fn new(n: &BigInt) -> Self {
        match n.to_i128() {
            Some(v) => Cursor::Small(v),
            None => Cursor::Big(n.clone()),
        }
    }

    fn step(&mut self, params: CollatzParams) {
        *self = match std::mem::replace(self, Cursor::Small(0)) {
            Cursor::Small(v) => match apply_i128(params, v) {
                Some(next) => Cursor::Small(next),
                None => Cursor::Big(apply(params, &BigInt::from(v))),
            },
            Cursor::Big(v) => Cursor::Big(apply(params, &v)),
        };
    }

    fn parity(&self) -> u8 {
        match self {
            Cursor::Small(v) => (v & 1) as u8,
            Cursor::Big(v) => u8::from(v.is_odd()),
        }
    }

    fn into_bigint(self) -> BigInt {
        match self {
            Cursor::Small(v) => BigInt::from(v),
            Cursor::Big(v) => v,
        }
    }
}

/// `C^k(n)`, with `C^0(n) = n`.
pub fn iterate(params: CollatzParams, n: &BigInt, k: u64) -> BigInt {
    let mut cursor = Cursor::new(n);
    for _ in 0..k {
        cursor.step(params);
    }
    cursor.into_bigint()
}

/// `C^k(n)` on machine integers, `None` if any intermediate overflows.
pub fn iterate_i128(params: CollatzParams, mut n: i128, k: u64) -> Option<i128> {
    for _ in 0..k {
        n = apply_i128(params, n)?;
    }
    Some(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    CycleFound,
    StepBudgetExhausted,
    ValueBudgetExhausted,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::CycleFound => "cycle_found",
            Termination::StepBudgetExhausted => "step_budget_exhausted",
            Termination::ValueBudgetExhausted => "value_budget_exhausted",
        }
    }
}

/// A forward orbit `C^0(n), C^1(n), ...`.
///
/// When a cycle is found the stored values end at the first repetition:
/// `values[cycle_entry_index + cycle_length] == values[cycle_entry_index]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitRecord {
    pub start: BigInt,
    pub values: Vec<BigInt>,
    pub cycle_entry_index: Option<usize>,
    pub cycle_length: Option<usize>,
    pub terminated_by: Termination,
}

impl OrbitRecord {
    /// Values on the cycle, starting at the entry point.
    pub fn cycle(&self) -> Option<&[BigInt]> {
        let entry = self.cycle_entry_index?;
        let len = self.cycle_length?;
        Some(&self.values[entry..entry + len])
    }
}

/// Orbit of `n` with Brent cycle detection under explicit budgets.
///
/// `max_steps` caps the number of map applications; any value with
/// `|value| > max_value` stops the walk. Budget exhaustion is an outcome,
/// not an error.
pub fn orbit(params: CollatzParams, n: &BigInt, max_steps: u64, max_value: &BigInt) -> OrbitRecord {
    let mut values = vec![n.clone()];
    let exhausted = |values: Vec<BigInt>, why| OrbitRecord {
        start: n.clone(),
        values,
        cycle_entry_index: None,
        cycle_length: None,
        terminated_by: why,
    };
    if n.abs() > *max_value {
        return exhausted(values, Termination::ValueBudgetExhausted);
    }

    // Brent: the tortoise parks at powers of two, the hare walks one step at
    // a time. Values are kept, so the hare is just the last index.
    let mut power = 1usize;
    let mut lam = 1usize;
    let mut tortoise = 0usize;
    loop {
        if (values.len() as u64) > max_steps {
            return exhausted(values, Termination::StepBudgetExhausted);
        }
        let next = apply(params, values.last().expect("orbit is nonempty"));
        if next.abs() > *max_value {
            values.push(next);
            return exhausted(values, Termination::ValueBudgetExhausted);
        }
        values.push(next);
        let hare = values.len() - 1;
        if values[tortoise] == values[hare] {
            break;
        }
        if power == lam {
            tortoise = hare;
            power *= 2;
            lam = 0;
        }
        lam += 1;
    }

    // First index mu with values[mu] == values[mu + lam]; both are stored.
    let mut mu = 0usize;
    while values[mu] != values[mu + lam] {
        mu += 1;
    }
    values.truncate(mu + lam + 1);
    OrbitRecord {
        start: n.clone(),
        values,
        cycle_entry_index: Some(mu),
        cycle_length: Some(lam),
        terminated_by: Termination::CycleFound,
    }
}

/// The parities of `n, C(n), ..., C^{k-1}(n)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParityVector {
    pub bits: Vec<u8>,
}

impl ParityVector {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Number of odd steps.
    pub fn ones(&self) -> u32 {
        self.bits.iter().map(|&b| u32::from(b)).sum()
    }

    /// Bit `j` of the mask is the parity of `C^j(n)`.
    pub fn to_mask(&self) -> u64 {
        self.bits
            .iter()
            .enumerate()
            .fold(0u64, |acc, (j, &b)| acc | (u64::from(b) << j))
    }
}

impl std::fmt::Display for ParityVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.bits.iter().map(|b| b.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

pub fn parity_vector(params: CollatzParams, n: &BigInt, k: usize) -> Result<ParityVector, MapError> {
    if !n.is_positive() {
        return Err(MapError::NonPositiveStart(n.clone()));
    }
    if k == 0 {
        return Err(MapError::EmptyParityVector);
    }
    let mut cursor = Cursor::new(n);
    let mut bits = Vec::with_capacity(k);
    for j in 0..k {
        if j > 0 {
            cursor.step(params);
        }
        bits.push(cursor.parity());
    }
    Ok(ParityVector { bits })
}

/// Parity mask of length `k` (bit j = parity of `C^j(n)`) on machine integers.
pub(crate) fn parity_mask(params: CollatzParams, n: &BigInt, k: u32) -> u64 {
    let mut cursor = Cursor::new(n);
    let mut mask = 0u64;
    for j in 0..k {
        if j > 0 {
            cursor.step(params);
        }
        mask |= u64::from(cursor.parity()) << j;
    }
    mask
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BijectionCheck {
    pub k: u32,
    pub distinct: u64,
    /// Two integers in `[1, 2^k]` sharing a parity vector, if any.
    pub collision: Option<(u64, u64)>,
}

impl BijectionCheck {
    pub fn is_bijective(&self) -> bool {
        self.collision.is_none() && self.distinct == 1u64 << self.k
    }
}

/// Checks that `n -> P_k(n)` is injective (hence bijective) on `[1, 2^k]`.
pub fn parity_bijection_check(params: CollatzParams, k: u32) -> Result<BijectionCheck, MapError> {
    if k == 0 {
        return Err(MapError::EmptyParityVector);
    }
    if k > MAX_BIJECTION_K {
        return Err(MapError::SweepBudget { k, max: MAX_BIJECTION_K });
    }
    let size = 1u64 << k;
    let mut seen: HashMap<u64, u64> = HashMap::with_capacity(size as usize);
    for n in 1..=size {
        let mask = parity_mask(params, &BigInt::from(n), k);
        if let Some(&earlier) = seen.get(&mask) {
            return Ok(BijectionCheck {
                k,
                distinct: seen.len() as u64,
                collision: Some((earlier, n)),
            });
        }
        seen.insert(mask, n);
    }
    Ok(BijectionCheck { k, distinct: seen.len() as u64, collision: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn p(a: u64, b: u64) -> CollatzParams {
        CollatzParams::new(a, b).unwrap()
    }

    fn big(n: i64) -> BigInt {
        BigInt::from(n)
    }

    #[test]
    fn apply_examples() {
        assert_eq!(apply(p(3, 1), &big(3)), big(5));
        assert_eq!(apply(p(3, 1), &big(0)), big(0));
        assert_eq!(apply(p(5, 1), &big(13)), big(33));
        assert_eq!(apply(p(3, 1), &big(-3)), big(-5));
    }

    #[test]
    fn iterate_examples() {
        assert_eq!(iterate(p(3, 1), &big(13), 3), big(5));
        assert_eq!(iterate(p(7, 3), &big(123), 0), big(123));
        assert_eq!(iterate(p(3, 1), &big(7), 2), big(17));
    }

    #[test]
    fn iterate_crosses_from_machine_to_big_integers() {
        let params = p(7, 3);
        let start = BigInt::from(i128::MAX / 8) | BigInt::one();
        let mut slow = start.clone();
        for _ in 0..40 {
            slow = apply(params, &slow);
        }
        assert_eq!(iterate(params, &start, 40), slow);
    }

    #[test]
    fn orbit_of_five_enters_trivial_cycle() {
        let rec = orbit(p(3, 1), &big(5), 1000, &big(1_000_000));
        let vals: Vec<i64> = rec.values.iter().map(|v| v.to_i64().unwrap()).collect();
        assert_eq!(vals, vec![5, 8, 4, 2, 1, 2]);
        assert_eq!(rec.cycle_entry_index, Some(3));
        assert_eq!(rec.cycle_length, Some(2));
        assert_eq!(rec.terminated_by, Termination::CycleFound);
    }

    #[test]
    fn orbit_of_one_is_the_cycle() {
        let rec = orbit(p(3, 1), &big(1), 1000, &big(1000));
        assert_eq!(rec.cycle_entry_index, Some(0));
        assert_eq!(rec.cycle_length, Some(2));
        assert_eq!(rec.cycle().unwrap(), &[big(1), big(2)]);
    }

    #[test]
    fn orbit_respects_budgets() {
        let rec = orbit(p(5, 1), &big(7), 10, &(BigInt::one() << 200));
        assert!(matches!(
            rec.terminated_by,
            Termination::StepBudgetExhausted | Termination::CycleFound
        ));
        assert!(rec.values.len() <= 11);

        let rec = orbit(p(5, 1), &big(7), 1_000_000, &big(1000));
        assert_eq!(rec.terminated_by, Termination::ValueBudgetExhausted);
        assert!(rec.cycle_length.is_none());
    }

    #[test]
    fn orbit_of_zero_is_a_fixed_point() {
        let rec = orbit(p(3, 1), &big(0), 10, &big(10));
        assert_eq!(rec.cycle_entry_index, Some(0));
        assert_eq!(rec.cycle_length, Some(1));
    }

    #[test]
    fn parity_vector_examples() {
        let v = |a, b, n, k| parity_vector(p(a, b), &big(n), k).unwrap().bits;
        assert_eq!(v(5, 1, 1, 3), vec![1, 1, 0]);
        assert_eq!(v(5, 1, 8, 3), vec![0, 0, 0]);
        assert_eq!(v(3, 1, 4, 2), vec![0, 0]);
    }

    #[test]
    fn parity_vector_domain() {
        assert!(matches!(
            parity_vector(p(3, 1), &big(0), 3),
            Err(MapError::NonPositiveStart(_))
        ));
        assert_eq!(parity_vector(p(3, 1), &big(3), 0), Err(MapError::EmptyParityVector));
    }

    #[test]
    fn bijection_examples() {
        assert!(parity_bijection_check(p(5, 1), 3).unwrap().is_bijective());
        assert!(parity_bijection_check(p(3, 1), 1).unwrap().is_bijective());
        assert!(parity_bijection_check(p(7, 3), 10).unwrap().is_bijective());
        assert!(parity_bijection_check(p(3, 1), 40).is_err());
    }

    #[test]
    fn parity_mask_matches_vector() {
        let params = p(3, 5);
        for n in 1..200i64 {
            let v = parity_vector(params, &big(n), 9).unwrap();
            assert_eq!(v.to_mask(), parity_mask(params, &big(n), 9));
        }
    }

    #[test]
    fn u64_step_agrees() {
        let params = p(7, 3);
        for n in 0..500u64 {
            assert_eq!(
                BigInt::from(apply_u64(params, n).unwrap()),
                apply(params, &BigInt::from(n))
            );
        }
        assert_eq!(apply_u64(params, u64::MAX), None);
    }
}
