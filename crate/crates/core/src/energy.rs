//! Block sums of `C^k` over windows of length `2^k`: the conserved energy,
//! its 4^k-normalised average, the shifted sums `s_k`, `s_{k,m}` and their
//! finite-k brackets.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::map::{apply, iterate};
use crate::params::CollatzParams;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnergyError {
    #[error("block sums are defined for n >= 1 (got {0})")]
    NonPositiveStart(BigInt),
    #[error("invariant violated at n={n}, k={k}, m={m}: {what}")]
    InvariantViolation { n: BigInt, k: u32, m: u64, what: String },
}

fn require_positive(n: &BigInt) -> Result<(), EnergyError> {
    if n.is_positive() {
        Ok(())
    } else {
        Err(EnergyError::NonPositiveStart(n.clone()))
    }
}

fn pow2(k: u32) -> BigInt {
    BigInt::one() << k
}

/// `(1 + alpha)^k`.
pub fn conserved_energy(params: CollatzParams, k: u32) -> BigInt {
    BigInt::from(params.alpha() + 1).pow(k)
}

/// `sum_{j<2^k} C^k(start + j)`.
fn block_sum(params: CollatzParams, start: &BigInt, k: u32) -> BigInt {
    let mut total = BigInt::zero();
    let mut x = start.clone();
    for _ in 0..(1u64 << k) {
        total += iterate(params, &x, u64::from(k));
        x += 1;
    }
    total
}

/// `sum_{j<2^k} (C^k(n+j+2^k) - C^k(n+j))` by direct iteration.
pub fn energy_sum(params: CollatzParams, n: &BigInt, k: u32) -> Result<BigInt, EnergyError> {
    require_positive(n)?;
    Ok(block_sum(params, &(n + pow2(k)), k) - block_sum(params, n, k))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnergySums {
    pub params: CollatzParams,
    pub n: BigInt,
    pub k: u32,
    pub m: u64,
    pub s_k: BigInt,
    pub s_km: BigInt,
}

impl EnergySums {
    /// `s_{k,m} / s_k`.
    pub fn ratio(&self) -> BigRational {
        BigRational::new(self.s_km.clone(), self.s_k.clone())
    }

    fn violation(&self, what: impl Into<String>) -> EnergyError {
        EnergyError::InvariantViolation {
            n: self.n.clone(),
            k: self.k,
            m: self.m,
            what: what.into(),
        }
    }

    /// Shift identity and (for `k >= 1`) both brackets on `s_k`.
    pub fn check(&self) -> Result<(), EnergyError> {
        let expected = &self.s_k + conserved_energy(self.params, self.k) * BigInt::from(self.m);
        if self.s_km != expected {
            return Err(self.violation(format!(
                "s_km = {} but s_k + m(1+alpha)^k = {expected}",
                self.s_km
            )));
        }
        if self.k >= 1 {
            let s = BigRational::from_integer(self.s_k.clone());
            let lower = s_k_lower_bound(self.params, &self.n, self.k);
            if s < lower {
                return Err(self.violation(format!("s_k = {} below lower bound {lower}", self.s_k)));
            }
            let upper = s_k_upper_bound(self.params, &self.n, self.k);
            if s > upper {
                return Err(self.violation(format!("s_k = {} above upper bound {upper}", self.s_k)));
            }
        }
        Ok(())
    }
}

/// `s_k(n)` and `s_{k,m}(n)` by direct iteration, with every invariant checked.
pub fn partial_sums(
    params: CollatzParams,
    n: &BigInt,
    k: u32,
    m: u64,
) -> Result<EnergySums, EnergyError> {
    require_positive(n)?;
    let s_k = block_sum(params, n, k);
    let shifted = n + pow2(k) * BigInt::from(m);
    let s_km = block_sum(params, &shifted, k);
    let sums = EnergySums { params, n: n.clone(), k, m, s_k, s_km };
    sums.check()?;
    Ok(sums)
}

/// `n + ((1+alpha)^k - 1) / (2 alpha)`, valid for `k >= 1`.
pub fn s_k_lower_bound(params: CollatzParams, n: &BigInt, k: u32) -> BigRational {
    let alpha = BigInt::from(params.alpha());
    let geometric = BigRational::new(conserved_energy(params, k) - 1, &alpha * 2);
    BigRational::from_integer(n.clone()) + geometric
}

/// `(n - alpha/2 + beta/(alpha-2)) alpha^k + (alpha/2)(1+alpha)^k - (beta/(alpha-2)) 2^k`.
///
/// `alpha - 2` is odd, never zero; for `alpha = 1` it is `-1`.
pub fn s_k_upper_bound(params: CollatzParams, n: &BigInt, k: u32) -> BigRational {
    let alpha = BigInt::from(params.alpha());
    let half_alpha = BigRational::new(alpha.clone(), BigInt::from(2));
    let beta_term = BigRational::new(BigInt::from(params.beta()), &alpha - 2);
    let lead = BigRational::from_integer(n.clone()) - &half_alpha + &beta_term;
    lead * BigRational::from_integer(alpha.pow(k))
        + half_alpha * BigRational::from_integer(conserved_energy(params, k))
        - beta_term * BigRational::from_integer(pow2(k))
}

/// `4^{-k} · sum_{j=n}^{n+2^k-1} (C^k(j+2^k) - C^k(j))`, exactly.
pub fn pseudo_virial(params: CollatzParams, n: &BigInt, k: u32) -> Result<BigRational, EnergyError> {
    let energy = energy_sum(params, n, k)?;
    Ok(BigRational::new(energy, BigInt::from(4u32).pow(k)))
}

/// `((1 + alpha) / 4)^k`.
pub fn expected_pseudo_virial(params: CollatzParams, k: u32) -> BigRational {
    BigRational::new(conserved_energy(params, k), BigInt::from(4u32).pow(k))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatioRow {
    pub k: u32,
    pub ratio: BigRational,
    /// `1 + m(1+alpha)^k / upper(s_k)`.
    pub lower: BigRational,
    /// `1 + m(1+alpha)^k / lower(s_k)`.
    pub upper: BigRational,
}

impl RatioRow {
    pub fn within(&self) -> bool {
        self.lower <= self.ratio && self.ratio <= self.upper
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatioReport {
    pub params: CollatzParams,
    pub n: BigInt,
    pub m: u64,
    pub rows: Vec<RatioRow>,
}

impl RatioReport {
    pub fn all_within(&self) -> bool {
        self.rows.iter().all(RatioRow::within)
    }
}

/// `s_{k,m}(n) / s_k(n)` for `k = 1..=k_max` with the finite-k brackets.
pub fn ratio_report(
    params: CollatzParams,
    n: &BigInt,
    m: u64,
    k_max: u32,
) -> Result<RatioReport, EnergyError> {
    require_positive(n)?;
    let mut rows = Vec::with_capacity(k_max as usize);
    for k in 1..=k_max {
        let sums = partial_sums(params, n, k, m)?;
        let shift = BigRational::from_integer(conserved_energy(params, k) * BigInt::from(m));
        let one = BigRational::one();
        let lower = &one + &shift / s_k_upper_bound(params, n, k);
        let upper = &one + &shift / s_k_lower_bound(params, n, k);
        rows.push(RatioRow { k, ratio: sums.ratio(), lower, upper });
    }
    Ok(RatioReport { params, n: n.clone(), m, rows })
}

/// `C^k(x)` for every `x` in a contiguous range, so that all windowed sums
/// over that range come from prefix sums.
#[derive(Debug, Clone)]
pub struct BlockSweep {
    pub params: CollatzParams,
    pub k: u32,
    first: u64,
    /// `prefix[i] = sum_{x < first + i} C^k(x)` over the range.
    prefix: Vec<BigInt>,
}

impl BlockSweep {
    /// Covers `s_{k,m}(n)` for `n ∈ [n_lo, n_hi]` and `m <= m_max`.
    pub fn new(params: CollatzParams, k: u32, n_lo: u64, n_hi: u64, m_max: u64) -> Self {
        assert!(n_lo >= 1 && n_lo <= n_hi);
        let block = 1u64 << k;
        let len = (n_hi - n_lo) + (m_max + 1) * block;
        let mut prefix = Vec::with_capacity(len as usize + 1);
        let mut acc = BigInt::zero();
        prefix.push(acc.clone());
        for x in n_lo..n_lo + len {
            acc += iterate(params, &BigInt::from(x), u64::from(k));
            prefix.push(acc.clone());
        }
        Self { params, k, first: n_lo, prefix }
    }

    fn window(&self, start: u64) -> BigInt {
        let offset = (start - self.first) as usize;
        let block = 1usize << self.k;
        &self.prefix[offset + block] - &self.prefix[offset]
    }

    pub fn s_k(&self, n: u64) -> BigInt {
        self.window(n)
    }

    pub fn s_km(&self, n: u64, m: u64) -> BigInt {
        self.window(n + m * (1u64 << self.k))
    }

    pub fn energy(&self, n: u64) -> BigInt {
        self.s_km(n, 1) - self.s_k(n)
    }

    pub fn sums(&self, n: u64, m: u64) -> EnergySums {
        EnergySums {
            params: self.params,
            n: BigInt::from(n),
            k: self.k,
            m,
            s_k: self.s_k(n),
            s_km: self.s_km(n, m),
        }
    }
}

/// `C(x) >= x/2` and `C(x) <= (alpha/2) x + beta/2` for `x >= 0`, compared
/// after doubling so everything stays integral.
pub fn step_bounds_hold(params: CollatzParams, x: &BigInt) -> bool {
    let next = apply(params, x) * 2;
    next >= *x && next <= x * params.alpha() + params.beta()
}
