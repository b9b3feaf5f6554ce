use num_complex::Complex64;

use super::{SpectralError, SpectralState};
use crate::map::apply_u64;
use crate::params::CollatzParams;

/// Whether `m` has an odd preimage `(2m - beta)/alpha >= 1`.
///
/// The congruence `2m ≡ beta (mod alpha)` is necessary but not sufficient:
/// when `2m < beta` the candidate is negative.
pub fn has_odd_preimage(params: CollatzParams, m: u64) -> bool {
    let twice = 2 * u128::from(m);
    let beta = u128::from(params.beta());
    twice > beta && (twice - beta) % u128::from(params.alpha()) == 0
}

/// All `n >= 1` with `C(n) = m`: always `2m`, plus the odd preimage if any.
pub fn preimages(params: CollatzParams, m: u64) -> Result<Vec<u64>, SpectralError> {
    let even = m.checked_mul(2).ok_or(SpectralError::FrequencyOverflow(m))?;
    let mut out = vec![even];
    if has_odd_preimage(params, m) {
        out.push((even - params.beta()) / params.alpha());
    }
    Ok(out)
}

/// `(Cu)_n = u_{C(n)}`. The output support is the preimage set of the input support.
pub fn apply_operator(state: &SpectralState) -> Result<SpectralState, SpectralError> {
    let mut out = SpectralState::zero(state.params).with_time(state.time);
    for (m, v) in state.iter() {
        for n in preimages(state.params, m)? {
            out.set(n, v)?;
        }
    }
    Ok(out)
}

/// `(C* u)_f = sum_{C(n) = f} u_n`: pushes `e_n` to `e_{C(n)}`.
pub fn apply_adjoint(state: &SpectralState) -> Result<SpectralState, SpectralError> {
    let mut out = SpectralState::zero(state.params).with_time(state.time);
    for (n, v) in state.iter() {
        let image = apply_u64(state.params, n).ok_or(SpectralError::FrequencyOverflow(n))?;
        out.add(image, v)?;
    }
    Ok(out)
}

/// `{e_n - e_{alpha n + beta} : n odd, n <= n_max}`.
pub fn adjoint_kernel_basis(params: CollatzParams, n_max: u64) -> Result<Vec<SpectralState>, SpectralError> {
    (1..=n_max)
        .step_by(2)
        .map(|n| {
            let partner = n
                .checked_mul(params.alpha())
                .and_then(|x| x.checked_add(params.beta()))
                .ok_or(SpectralError::FrequencyOverflow(n))?;
            SpectralState::from_pairs(
                params,
                [(n, Complex64::new(1.0, 0.0)), (partner, Complex64::new(-1.0, 0.0))],
            )
        })
        .collect()
}

/// Where a state's nonzero amplitudes sit relative to the doubling frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupportClass {
    Empty,
    /// No frequency with two preimages: `C` is an isometry here.
    S,
    /// Only frequencies with two preimages: `C` scales by `sqrt(2)`.
    T,
    Mixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormEntry {
    pub norm: f64,
    pub image_norm: f64,
    pub support: SupportClass,
    pub lower_ok: bool,
    pub upper_ok: bool,
    /// Equality `|Cu| = |u|` on S, `|Cu| = sqrt(2)|u|` on T; `None` when mixed.
    pub equality_ok: Option<bool>,
}

impl NormEntry {
    pub fn passes(&self) -> bool {
        self.lower_ok && self.upper_ok && self.equality_ok.unwrap_or(true)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormReport {
    pub tolerance: f64,
    pub entries: Vec<NormEntry>,
}

impl NormReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(NormEntry::passes)
    }
}

pub const NORM_TOLERANCE: f64 = 1e-12;

fn support_class(state: &SpectralState) -> SupportClass {
    let mut doubled = false;
    let mut single = false;
    for (m, v) in state.iter() {
        if v == Complex64::default() {
            continue;
        }
        if has_odd_preimage(state.params, m) {
            doubled = true;
        } else {
            single = true;
        }
    }
    match (single, doubled) {
        (false, false) => SupportClass::Empty,
        (true, false) => SupportClass::S,
        (false, true) => SupportClass::T,
        (true, true) => SupportClass::Mixed,
    }
}

/// `|u| <= |Cu| <= sqrt(2)|u|` for every state, with the equality cases on
/// S- and T-supported states. Tolerances are relative to `|u|` (absolute when `u = 0`).
pub fn norm_certificates(
    params: CollatzParams,
    states: &[SpectralState],
) -> Result<NormReport, SpectralError> {
    let tol = NORM_TOLERANCE;
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut entries = Vec::with_capacity(states.len());
    for state in states {
        if state.params != params {
            return Err(SpectralError::ParamsMismatch);
        }
        let norm = state.norm();
        let image_norm = apply_operator(state)?.norm();
        let slack = tol * norm.max(1.0);
        let support = support_class(state);
        let equality_ok = match support {
            SupportClass::Empty => Some(image_norm == 0.0),
            SupportClass::S => Some((image_norm - norm).abs() <= slack),
            SupportClass::T => Some((image_norm - sqrt2 * norm).abs() <= slack),
            SupportClass::Mixed => None,
        };
        entries.push(NormEntry {
            norm,
            image_norm,
            support,
            lower_ok: norm <= image_norm + slack,
            upper_ok: image_norm <= sqrt2 * norm + slack,
            equality_ok,
        });
    }
    Ok(NormReport { tolerance: tol, entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: u64, b: u64) -> CollatzParams {
        CollatzParams::new(a, b).unwrap()
    }

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn operator_examples() {
        let params = p(3, 1);
        let out = apply_operator(&SpectralState::delta(params, 1).unwrap()).unwrap();
        assert_eq!(out.support().collect::<Vec<_>>(), vec![2]);
        assert_eq!(out.get(2), one());

        // e1 + e2 is fixed on the cycle coordinates; the full preimage set
        // also picks up 4 = 2 * 2.
        let fixed = SpectralState::ones(params, &[1, 2]).unwrap();
        let out = apply_operator(&fixed).unwrap();
        assert_eq!(out.get(1), one());
        assert_eq!(out.get(2), one());
        assert_eq!(out.support().collect::<Vec<_>>(), vec![1, 2, 4]);

        assert!(apply_operator(&SpectralState::zero(params)).unwrap().is_zero());
    }

    #[test]
    fn adjoint_examples() {
        let params = p(3, 1);
        let out = apply_adjoint(&SpectralState::delta(params, 3).unwrap()).unwrap();
        assert_eq!(out, SpectralState::delta(params, 5).unwrap());

        let kernel = SpectralState::from_pairs(params, [(1, one()), (4, -one())]).unwrap();
        assert!(apply_adjoint(&kernel).unwrap().is_zero());
        assert!(apply_adjoint(&SpectralState::zero(params)).unwrap().is_zero());
    }

    #[test]
    fn preimage_positivity() {
        // (3,5): 2*1 ≡ 5 mod 3 but (2 - 5)/3 < 0.
        assert!(!has_odd_preimage(p(3, 5), 1));
        assert_eq!(preimages(p(3, 5), 1).unwrap(), vec![2]);
        assert_eq!(preimages(p(3, 5), 4).unwrap(), vec![8, 1]);
        assert_eq!(preimages(p(3, 1), 5).unwrap(), vec![10, 3]);
    }

    #[test]
    fn certificate_examples() {
        let params = p(3, 1);
        let states = vec![
            SpectralState::delta(params, 3).unwrap(),
            SpectralState::delta(params, 5).unwrap(),
            SpectralState::zero(params),
        ];
        let report = norm_certificates(params, &states).unwrap();
        assert!(report.all_pass());
        assert_eq!(report.entries[0].support, SupportClass::S);
        assert!((report.entries[0].image_norm - 1.0).abs() < 1e-15);
        assert_eq!(report.entries[1].support, SupportClass::T);
        assert!((report.entries[1].image_norm - std::f64::consts::SQRT_2).abs() < 1e-15);
        assert_eq!(report.entries[2].support, SupportClass::Empty);
    }

    #[test]
    fn kernel_basis_examples() {
        let basis = adjoint_kernel_basis(p(3, 1), 5).unwrap();
        assert_eq!(basis.len(), 3);
        assert_eq!(basis[0].support().collect::<Vec<_>>(), vec![1, 4]);
        assert_eq!(basis[1].inner(&basis[2]), Complex64::default());

        let basis = adjoint_kernel_basis(p(5, 3), 1).unwrap();
        assert_eq!(basis[0].support().collect::<Vec<_>>(), vec![1, 8]);
        assert!(apply_adjoint(&basis[0]).unwrap().is_zero());
    }
}
