use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use super::{FlowClosure, SpectralError, SpectralState};

/// Modes of one m-cycle `z_0 -> z_1 -> ... -> z_{m-1} -> z_0`:
/// `u_{z_p}(t) = sum_j c_j lambda_j^p exp(lambda_j t)` with `lambda_j = exp(2 pi i j / m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleModeDecomposition {
    pub cycle_length: usize,
    pub lambdas: Vec<Complex64>,
    pub coefficients: Vec<Complex64>,
}

impl CycleModeDecomposition {
    /// `c_j = (1/m) sum_p g_p lambda_j^{-p}`: the DFT of the cycle data `g`.
    pub fn from_cycle_data(data: &[Complex64]) -> Self {
        let m = data.len();
        let lambdas: Vec<Complex64> =
            (0..m).map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64)).collect();
        let coefficients = (0..m)
            .map(|j| {
                let sum: Complex64 = data
                    .iter()
                    .enumerate()
                    .map(|(p, g)| g * root_power(m, j, -(p as i64)))
                    .sum();
                sum / m as f64
            })
            .collect();
        Self { cycle_length: m, lambdas, coefficients }
    }

    /// `lambda_j^{power}` reduced mod m before evaluation, so it stays exact on the circle.
    pub fn lambda_power(&self, j: usize, power: i64) -> Complex64 {
        root_power(self.cycle_length, j, power)
    }

    /// `d^order/dt^order u_{z_phase}(t)`.
    pub fn derivative(&self, phase: usize, order: usize, t: f64) -> Complex64 {
        self.coefficients
            .iter()
            .zip(&self.lambdas)
            .enumerate()
            .map(|(j, (c, lambda))| {
                c * self.lambda_power(j, (phase + order) as i64) * (lambda * t).exp()
            })
            .sum()
    }

    pub fn evaluate(&self, phase: usize, t: f64) -> Complex64 {
        self.derivative(phase, 0, t)
    }
}

/// `exp(2 pi i j power / m)` with the exponent reduced mod m.
fn root_power(m: usize, j: usize, power: i64) -> Complex64 {
    let m_i = m as i64;
    let k = ((j as i64 % m_i) * (power.rem_euclid(m_i))).rem_euclid(m_i);
    Complex64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64)
}

pub fn cycle_modes(
    closure: &FlowClosure,
    initial: &SpectralState,
    cycle_index: usize,
) -> CycleModeDecomposition {
    let data: Vec<Complex64> = closure.cycles[cycle_index].iter().map(|&z| initial.get(z)).collect();
    CycleModeDecomposition::from_cycle_data(&data)
}

fn check_time(t: f64) -> Result<(), SpectralError> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(SpectralError::InvalidTime(t))
    }
}

fn check_initial(closure: &FlowClosure, initial: &SpectralState) -> Result<(), SpectralError> {
    if initial.params != closure.params {
        return Err(SpectralError::ParamsMismatch);
    }
    match initial.support().find(|n| !closure.contains(*n)) {
        Some(n) => Err(SpectralError::NotInClosure(n)),
        None => Ok(()),
    }
}

fn restricted(closure: &FlowClosure, initial: &SpectralState) -> SpectralState {
    let mut out = SpectralState::zero(closure.params);
    for &n in &closure.closure {
        out.set(n, initial.get(n)).expect("closure frequencies are positive");
    }
    out
}

/// Exact solution on the closure.
///
/// Cycle coordinates come from the cycle's DFT; a coordinate `ell >= 1`
/// steps from the cycle is the degree-`(ell-1)` Taylor polynomial of its
/// path data corrected by the exponential tail
/// `sum_j (d_j / lambda_j^ell) exp(lambda_j t)`.
pub fn solve_closed_form(
    closure: &FlowClosure,
    initial: &SpectralState,
    t: f64,
) -> Result<SpectralState, SpectralError> {
    check_time(t)?;
    check_initial(closure, initial)?;
    if t == 0.0 {
        return Ok(restricted(closure, initial));
    }

    let modes: Vec<CycleModeDecomposition> =
        (0..closure.cycles.len()).map(|i| cycle_modes(closure, initial, i)).collect();
    let exps: Vec<Vec<Complex64>> = modes
        .iter()
        .map(|md| md.lambdas.iter().map(|l| (l * t).exp()).collect())
        .collect();

    let mut out = SpectralState::zero(closure.params).with_time(t);
    for &n in &closure.closure {
        let meta = closure.orbit_meta.get(&n).ok_or(SpectralError::MissingOrbitMeta(n))?;
        let md = &modes[meta.cycle_index];
        let ell = meta.ell;
        let phase = meta.cycle_phase;
        // d_j: the coefficients seen from the entry point z_phase.
        let value = if ell == 0 {
            md.evaluate(phase, t)
        } else {
            let path = closure.path_to_cycle(n)?;
            let mut poly = Complex64::default();
            let mut power = 1.0; // t^k / k!
            for (k, &node) in path.iter().take(ell).enumerate() {
                if k > 0 {
                    power *= t / k as f64;
                }
                let tail: Complex64 = md
                    .coefficients
                    .iter()
                    .enumerate()
                    .map(|(j, c)| c * md.lambda_power(j, phase as i64 - (ell - k) as i64))
                    .sum();
                poly += (initial.get(node) - tail) * power;
            }
            let exp_part: Complex64 = md
                .coefficients
                .iter()
                .enumerate()
                .map(|(j, c)| c * md.lambda_power(j, phase as i64 - ell as i64) * exps[meta.cycle_index][j])
                .sum();
            poly + exp_part
        };
        out.set(n, value)?;
    }
    Ok(out)
}

/// Subinterval length for Picard iteration; `sqrt(2) * 0.4 < 1` keeps the
/// Duhamel map a contraction.
pub const PICARD_SUBINTERVAL: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NumericalScheme {
    /// Classical fourth-order Runge-Kutta with step at most `dt`.
    Rk4 { dt: f64 },
    /// Fixed-point iteration of `u -> u0 + int_0^s C(u)` on subintervals of
    /// length [`PICARD_SUBINTERVAL`].
    Picard { tolerance: f64, max_iterations: usize },
}

impl NumericalScheme {
    pub fn rk4(dt: f64) -> Self {
        NumericalScheme::Rk4 { dt }
    }

    pub fn picard() -> Self {
        NumericalScheme::Picard { tolerance: 1e-15, max_iterations: 200 }
    }
}

/// `u'_i = u_{target_i}`, with `None` meaning a zero right-hand side.
#[derive(Debug, Clone)]
pub(crate) struct LinearCoupling {
    pub(crate) target: Vec<Option<usize>>,
}

impl LinearCoupling {
    fn from_closure(closure: &FlowClosure) -> Result<(Vec<u64>, Self), SpectralError> {
        let freqs: Vec<u64> = closure.closure.iter().copied().collect();
        let index: HashMap<u64, usize> = freqs.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let target = freqs
            .iter()
            .map(|n| {
                let image = closure.edges.get(n).ok_or(SpectralError::NotForwardClosed(*n))?;
                index.get(image).copied().map(Some).ok_or(SpectralError::NotForwardClosed(*n))
            })
            .collect::<Result<_, _>>()?;
        Ok((freqs, Self { target }))
    }

    fn apply(&self, u: &[Complex64], out: &mut [Complex64]) {
        for (o, t) in out.iter_mut().zip(&self.target) {
            *o = t.map_or(Complex64::default(), |i| u[i]);
        }
    }

    pub(crate) fn rk4(&self, u0: &[Complex64], t: f64, dt: f64) -> Vec<Complex64> {
        let steps = (t / dt - 1e-9).ceil().max(1.0) as usize;
        let h = t / steps as f64;
        let n = u0.len();
        let mut u = u0.to_vec();
        let (mut k1, mut k2, mut k3, mut k4) =
            (vec![Complex64::default(); n], vec![Complex64::default(); n], vec![Complex64::default(); n], vec![Complex64::default(); n]);
        let mut tmp = vec![Complex64::default(); n];
        for _ in 0..steps {
            self.apply(&u, &mut k1);
            for i in 0..n {
                tmp[i] = u[i] + k1[i] * (h / 2.0);
            }
            self.apply(&tmp, &mut k2);
            for i in 0..n {
                tmp[i] = u[i] + k2[i] * (h / 2.0);
            }
            self.apply(&tmp, &mut k3);
            for i in 0..n {
                tmp[i] = u[i] + k3[i] * h;
            }
            self.apply(&tmp, &mut k4);
            for i in 0..n {
                u[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
            }
        }
        u
    }

    /// Picard iterates on `[0, h]` are vector polynomials in `s`, so the
    /// Duhamel integral is exact; stops when the sup-norm bound on the update
    /// over `[0, h]` falls below `tolerance * max(1, |u0|_inf)`.
    fn picard_step(
        &self,
        u0: &[Complex64],
        h: f64,
        tolerance: f64,
        max_iterations: usize,
    ) -> Result<Vec<Complex64>, f64> {
        let n = u0.len();
        let scale = u0.iter().map(|v| v.norm()).fold(1.0, f64::max);
        let mut poly: Vec<Vec<Complex64>> = vec![u0.to_vec()];
        let mut residual = f64::INFINITY;
        for _ in 0..max_iterations {
            let mut next: Vec<Vec<Complex64>> = Vec::with_capacity(poly.len() + 1);
            next.push(u0.to_vec());
            let mut image = vec![Complex64::default(); n];
            for (i, coeff) in poly.iter().enumerate() {
                self.apply(coeff, &mut image);
                let inv = 1.0 / (i + 1) as f64;
                next.push(image.iter().map(|v| v * inv).collect());
            }
            residual = next
                .iter()
                .enumerate()
                .map(|(i, coeff)| {
                    let diff = match poly.get(i) {
                        Some(old) => coeff.iter().zip(old).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max),
                        None => coeff.iter().map(|a| a.norm()).fold(0.0, f64::max),
                    };
                    diff * h.powi(i as i32)
                })
                .sum();
            poly = next;
            if residual <= tolerance * scale {
                // Horner at s = h.
                let mut u = vec![Complex64::default(); n];
                for coeff in poly.iter().rev() {
                    for (ui, c) in u.iter_mut().zip(coeff) {
                        *ui = *ui * h + c;
                    }
                }
                return Ok(u);
            }
        }
        Err(residual)
    }
}

/// Integrates the finite system `u'_n = u_{C(n)}` over the closure.
pub fn solve_numerical(
    closure: &FlowClosure,
    initial: &SpectralState,
    t: f64,
    scheme: NumericalScheme,
) -> Result<SpectralState, SpectralError> {
    check_time(t)?;
    check_initial(closure, initial)?;
    if t == 0.0 {
        return Ok(restricted(closure, initial));
    }
    let (freqs, system) = LinearCoupling::from_closure(closure)?;
    let u0: Vec<Complex64> = freqs.iter().map(|&n| initial.get(n)).collect();

    let u = match scheme {
        NumericalScheme::Rk4 { dt } => {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(SpectralError::InvalidStep(dt));
            }
            system.rk4(&u0, t, dt)
        }
        NumericalScheme::Picard { tolerance, max_iterations } => {
            let pieces = (t / PICARD_SUBINTERVAL - 1e-12).ceil().max(1.0) as usize;
            let h = t / pieces as f64;
            let mut u = u0;
            for piece in 0..pieces {
                u = system.picard_step(&u, h, tolerance, max_iterations).map_err(|residual| {
                    SpectralError::PicardNotConverged { time: h * (piece + 1) as f64, residual }
                })?;
            }
            u
        }
    };

    let mut out = SpectralState::zero(closure.params).with_time(t);
    for (n, v) in freqs.into_iter().zip(u) {
        out.set(n, v)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::CollatzParams;
    use crate::spectral::{build_flow_closure, ClosureBudget};

    fn p(a: u64, b: u64) -> CollatzParams {
        CollatzParams::new(a, b).unwrap()
    }

    fn closure(params: CollatzParams, window: &[u64]) -> FlowClosure {
        build_flow_closure(params, window.iter().copied(), ClosureBudget::default()).unwrap()
    }

    #[test]
    fn delta_five_is_stationary() {
        let params = p(3, 1);
        let c = closure(params, &[5]);
        let init = SpectralState::delta(params, 5).unwrap();
        for t in [0.3, 1.0, 2.5] {
            let u = solve_closed_form(&c, &init, t).unwrap();
            assert!((u.get(5) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            for n in [1, 2, 4, 8] {
                assert!(u.get(n).norm() < 1e-12, "n={n}");
            }
        }
    }

    /// Oracle: exp(t S) for the swap S on (u_1, u_2) is cosh(t) I + sinh(t) S.
    #[test]
    fn trivial_cycle_matches_two_by_two_exponential() {
        let params = p(3, 1);
        let c = closure(params, &[1, 2]);
        let init = SpectralState::from_pairs(
            params,
            [(1, Complex64::new(0.7, -0.2)), (2, Complex64::new(-1.1, 0.4))],
        )
        .unwrap();
        for t in [0.5, 1.0, 2.0] {
            let u = solve_closed_form(&c, &init, t).unwrap();
            let (a, b) = (init.get(1), init.get(2));
            let e1 = a * t.cosh() + b * t.sinh();
            let e2 = b * t.cosh() + a * t.sinh();
            assert!((u.get(1) - e1).norm() < 1e-12);
            assert!((u.get(2) - e2).norm() < 1e-12);
        }
        let ones = SpectralState::ones(params, &[1, 2]).unwrap();
        let u = solve_closed_form(&c, &ones, 1.3).unwrap();
        assert!((u.get(1).re - 1.3f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn time_zero_returns_initial() {
        let params = p(3, 1);
        let c = closure(params, &[7, 9]);
        let init = SpectralState::from_pairs(params, [(7, Complex64::new(0.1, 0.3)), (9, Complex64::new(2.0, 0.0))]).unwrap();
        for u in [
            solve_closed_form(&c, &init, 0.0).unwrap(),
            solve_numerical(&c, &init, 0.0, NumericalScheme::rk4(1e-3)).unwrap(),
            solve_numerical(&c, &init, 0.0, NumericalScheme::picard()).unwrap(),
        ] {
            assert_eq!(u.get(7), init.get(7));
            assert_eq!(u.get(9), init.get(9));
            assert_eq!(u.len(), c.len());
        }
    }

    #[test]
    fn rk4_matches_closed_form_on_delta_five() {
        let params = p(3, 1);
        let c = closure(params, &[5]);
        let init = SpectralState::delta(params, 5).unwrap();
        let exact = solve_closed_form(&c, &init, 1.0).unwrap();
        let rk = solve_numerical(&c, &init, 1.0, NumericalScheme::rk4(1e-3)).unwrap();
        assert!(exact.max_abs_diff(&rk) < 1e-9);
    }

    #[test]
    fn picard_reproduces_eigenvector_growth() {
        let params = p(3, 1);
        let c = closure(params, &[1, 2]);
        let init = SpectralState::ones(params, &[1, 2]).unwrap();
        let u = solve_numerical(&c, &init, 2.0, NumericalScheme::picard()).unwrap();
        let e2 = 2.0f64.exp();
        assert!((u.get(1) - e2).norm() < 1e-8);
        assert!((u.get(2) - e2).norm() < 1e-8);
    }

    #[test]
    fn picard_reports_non_convergence() {
        let params = p(3, 1);
        let c = closure(params, &[1, 2]);
        let init = SpectralState::ones(params, &[1, 2]).unwrap();
        let scheme = NumericalScheme::Picard { tolerance: 1e-15, max_iterations: 3 };
        assert!(matches!(
            solve_numerical(&c, &init, 1.0, scheme),
            Err(SpectralError::PicardNotConverged { .. })
        ));
    }

    #[test]
    fn rejects_data_outside_closure_and_bad_inputs() {
        let params = p(3, 1);
        let c = closure(params, &[5]);
        let init = SpectralState::delta(params, 7).unwrap();
        assert_eq!(solve_closed_form(&c, &init, 1.0), Err(SpectralError::NotInClosure(7)));
        let init = SpectralState::delta(params, 5).unwrap();
        assert!(matches!(solve_closed_form(&c, &init, -1.0), Err(SpectralError::InvalidTime(_))));
        assert!(matches!(
            solve_numerical(&c, &init, 1.0, NumericalScheme::rk4(0.0)),
            Err(SpectralError::InvalidStep(_))
        ));
    }

    #[test]
    fn mode_derivatives_cycle_through_phases() {
        let data = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0), Complex64::new(-0.5, 0.1)];
        let md = CycleModeDecomposition::from_cycle_data(&data);
        for (p, g) in data.iter().enumerate() {
            assert!((md.evaluate(p, 0.0) - g).norm() < 1e-14);
        }
        for t in [0.0, 0.7, 1.9] {
            for p in 0..3 {
                assert!((md.derivative(p, 3, t) - md.evaluate(p, t)).norm() < 1e-12);
                assert!((md.derivative(p, 1, t) - md.evaluate((p + 1) % 3, t)).norm() < 1e-12);
            }
        }
        for l in &md.lambdas {
            assert!((l.norm() - 1.0).abs() < 1e-15);
            assert!((l.powu(3) - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        }
    }
}
