use std::collections::BTreeMap;

use num_complex::Complex64;

use super::SpectralError;
use crate::params::CollatzParams;

/// Complex amplitudes `u_n` at positive frequencies, zero off the support.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    pub params: CollatzParams,
    pub time: f64,
    amplitudes: BTreeMap<u64, Complex64>,
}

impl SpectralState {
    pub fn zero(params: CollatzParams) -> Self {
        Self { params, time: 0.0, amplitudes: BTreeMap::new() }
    }

    pub fn from_pairs(
        params: CollatzParams,
        pairs: impl IntoIterator<Item = (u64, Complex64)>,
    ) -> Result<Self, SpectralError> {
        let mut state = Self::zero(params);
        for (n, v) in pairs {
            state.add(n, v)?;
        }
        Ok(state)
    }

    /// `e_n`.
    pub fn delta(params: CollatzParams, n: u64) -> Result<Self, SpectralError> {
        Self::from_pairs(params, [(n, Complex64::new(1.0, 0.0))])
    }

    /// Sum of `e_n` over the given frequencies.
    pub fn ones(params: CollatzParams, freqs: &[u64]) -> Result<Self, SpectralError> {
        Self::from_pairs(params, freqs.iter().map(|&n| (n, Complex64::new(1.0, 0.0))))
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn get(&self, n: u64) -> Complex64 {
        self.amplitudes.get(&n).copied().unwrap_or_default()
    }

    pub fn set(&mut self, n: u64, value: Complex64) -> Result<(), SpectralError> {
        if n == 0 {
            return Err(SpectralError::ZeroFrequency);
        }
        self.amplitudes.insert(n, value);
        Ok(())
    }

    pub fn add(&mut self, n: u64, value: Complex64) -> Result<(), SpectralError> {
        if n == 0 {
            return Err(SpectralError::ZeroFrequency);
        }
        *self.amplitudes.entry(n).or_default() += value;
        Ok(())
    }

    /// Stored frequencies in increasing order (entries may hold zero).
    pub fn support(&self) -> impl Iterator<Item = u64> + '_ {
        self.amplitudes.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, Complex64)> + '_ {
        self.amplitudes.iter().map(|(&n, &v)| (n, v))
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.amplitudes.values().all(|v| *v == Complex64::default())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|v| v.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Norm over the given frequencies only.
    pub fn windowed_norm(&self, window: impl IntoIterator<Item = u64>) -> f64 {
        window.into_iter().map(|n| self.get(n).norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<u, v> = sum_n u_n conj(v_n)`.
    pub fn inner(&self, other: &SpectralState) -> Complex64 {
        let (small, large, swap) = if self.len() <= other.len() {
            (self, other, false)
        } else {
            (other, self, true)
        };
        let sum: Complex64 = small
            .iter()
            .map(|(n, v)| {
                let w = large.get(n);
                if swap {
                    w * v.conj()
                } else {
                    v * w.conj()
                }
            })
            .sum();
        sum
    }

    /// `self - other`.
    pub fn sub(&self, other: &SpectralState) -> SpectralState {
        let mut out = self.clone();
        for (n, v) in other.iter() {
            *out.amplitudes.entry(n).or_default() -= v;
        }
        out
    }

    /// Largest coordinate-wise distance over the union of supports.
    pub fn max_abs_diff(&self, other: &SpectralState) -> f64 {
        self.sub(other).amplitudes.values().map(|v| v.norm()).fold(0.0, f64::max)
    }
}
