use std::fmt;

use num_integer::Integer;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParamsError {
    #[error("alpha must be odd (got {0})")]
    EvenAlpha(u64),
    #[error("beta must be odd (got {0})")]
    EvenBeta(u64),
    #[error("alpha and beta must be coprime (gcd({alpha}, {beta}) = {gcd})")]
    NotCoprime { alpha: u64, beta: u64, gcd: u64 },
}

/// The pair `(alpha, beta)` of the accelerated map
/// `n -> n/2` (n even), `n -> (alpha*n + beta)/2` (n odd).
///
/// Both entries are odd and coprime; the constructor is the only way in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CollatzParams {
    alpha: u64,
    beta: u64,
}

impl CollatzParams {
    pub fn new(alpha: u64, beta: u64) -> Result<Self, ParamsError> {
        if alpha % 2 == 0 {
            return Err(ParamsError::EvenAlpha(alpha));
        }
        if beta % 2 == 0 {
            return Err(ParamsError::EvenBeta(beta));
        }
        let gcd = alpha.gcd(&beta);
        if gcd != 1 {
            return Err(ParamsError::NotCoprime { alpha, beta, gcd });
        }
        Ok(Self { alpha, beta })
    }

    /// The classical accelerated map, `(3, 1)`.
    pub const fn classical() -> Self {
        Self { alpha: 3, beta: 1 }
    }

    pub const fn alpha(&self) -> u64 {
        self.alpha
    }

    pub const fn beta(&self) -> u64 {
        self.beta
    }

    /// The five parameter pairs used by every default sweep.
    pub fn reference_grid() -> Vec<Self> {
        [(1, 1), (3, 1), (5, 1), (3, 5), (7, 3)]
            .into_iter()
            .map(|(a, b)| Self::new(a, b).expect("reference pair is valid"))
            .collect()
    }
}

impl fmt::Display for CollatzParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(alpha={}, beta={})", self.alpha, self.beta)
    }
}
