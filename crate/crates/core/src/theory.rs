//! Closed-form predictions: Friedrichs-model LDoS, asymptotic survival laws
//! in each regime of `s`, and the energy spreading of the wavepacket.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::quad;
use crate::scalar::Real;
use crate::spectral_kernel::{
    correlation_at_zero, correlation_function, level_shift_delta, level_shift_delta_band, perturbative_weight_p0,
    spectral_function, wigner_time, SpectralParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecayRegime {
    /// `s = 1`: `exp(-t/t0)`.
    Exponential,
    /// Wigner model, `0 < s < 2`: `exp[-(t/t0)^(2-s)]`.
    StretchedExponential,
    /// Friedrichs model at long times, `s != 1`: `~ t^(-2(2-s))`.
    PowerLaw,
    /// Friedrichs model, `s = 2`: logarithmic decay.
    LogLaw,
    /// `s > 2`: saturation at `|1 - p0|^2`.
    PartialDecay,
}

/// An asymptotic law with the time window in which it is meant to hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayLaw<T> {
    pub regime: DecayRegime,
    pub t0: T,
    /// Crossover to the power law (Friedrichs model, where it exists).
    pub t0_prime: Option<T>,
    pub exponent: T,
    pub window: (T, T),
}

/// Laws that apply to a Wigner (`wigner = true`) or Friedrichs model.
pub fn decay_laws<T: Real>(params: &SpectralParams<T>, wigner: bool) -> Result<Vec<DecayLaw<T>>> {
    let s = params.s;
    let two = T::lit(2.0);
    let tc = params.correlation_time();
    let th = params.heisenberg_time();
    let mut out = Vec::new();
    if s > two {
        out.push(DecayLaw { regime: DecayRegime::PartialDecay, t0: T::nan(), t0_prime: None, exponent: T::zero(), window: (tc, th) });
        return Ok(out);
    }
    if s == two {
        if !wigner {
            let tcp = tc * (T::one() / (two * params.epsilon * params.epsilon)).exp();
            out.push(DecayLaw { regime: DecayRegime::LogLaw, t0: T::nan(), t0_prime: None, exponent: T::zero(), window: (tc, tcp.min(th)) });
        }
        return Ok(out);
    }
    let ts = wigner_time(params)?;
    if s == T::one() {
        out.push(DecayLaw { regime: DecayRegime::Exponential, t0: ts.t0, t0_prime: None, exponent: T::one(), window: (tc, th) });
        return Ok(out);
    }
    if wigner {
        out.push(DecayLaw {
            regime: DecayRegime::StretchedExponential,
            t0: ts.t0,
            t0_prime: None,
            exponent: two - s,
            window: (tc, th),
        });
    } else {
        let crossing = fm_crossover_time(params).ok();
        out.push(DecayLaw {
            regime: DecayRegime::StretchedExponential,
            t0: ts.t0,
            t0_prime: crossing,
            exponent: two - s,
            window: (tc, crossing.unwrap_or(th).min(th)),
        });
        out.push(DecayLaw {
            regime: DecayRegime::PowerLaw,
            t0: ts.t0,
            t0_prime: crossing,
            exponent: two * (two - s),
            window: (crossing.unwrap_or(ts.t0), th),
        });
    }
    Ok(out)
}

fn ldos_from_shift<T: Real>(params: &SpectralParams<T>, omega: T, shift: T) -> Result<T> {
    let width = spectral_function(params, omega)?;
    let g = width / T::lit(2.0);
    let d = omega - shift;
    Ok(g / (d * d + g * g) / T::PI())
}

fn check_ldos_args<T: Real>(params: &SpectralParams<T>, omega: T) -> Result<()> {
    let s = params.s;
    if !(s > T::zero() && s < T::lit(2.0)) {
        return Err(Error::OutOfRange(format!("the Friedrichs LDoS formula needs 0 < s < 2 (got s = {s})")));
    }
    if omega == T::zero() && s <= T::one() && s != T::one() {
        return Err(Error::Singular(format!("LDoS is singular at w = 0 for s = {s}")));
    }
    if omega == T::zero() && s == T::one() {
        return Ok(());
    }
    if omega == T::zero() {
        return Err(Error::Singular("LDoS vanishes non-analytically at w = 0".into()));
    }
    Ok(())
}

/// Friedrichs-model LDoS `rho(w) = (1/pi) (G/2) / ((w - Delta)^2 + (G/2)^2)`
/// with `G(w) = C(w)` and the cutoff-free level shift.
pub fn fm_ldos_analytic<T: Real>(params: &SpectralParams<T>, omega: T) -> Result<T> {
    check_ldos_args(params, omega)?;
    let shift = level_shift_delta(params, omega)?;
    ldos_from_shift(params, omega, shift)
}

/// As [`fm_ldos_analytic`] but with the level shift of the actual finite
/// band (principal value by quadrature). Zero outside a sharp band, where
/// only isolated bound states remain.
pub fn fm_ldos_band<T: Real>(params: &SpectralParams<T>, omega: T) -> Result<T> {
    check_ldos_args(params, omega)?;
    if spectral_function(params, omega)? == T::zero() && omega != T::zero() {
        return Ok(T::zero());
    }
    let shift = level_shift_delta_band(params, omega)?;
    ldos_from_shift(params, omega, shift)
}

/// `int rho(w) e^{-i w t} dw` over `|w| <= w_max` for the cutoff-free
/// Friedrichs LDoS; the neglected tails carry weight `~ eps^2 w_max^(s-2)`.
pub fn fm_amplitude_from_ldos<T: Real>(params: &SpectralParams<T>, t: T, w_max: T) -> Result<Complex<T>> {
    let tol = T::lit(1e-10).max(T::epsilon() * T::lit(64.0));
    let failure = std::cell::Cell::new(None);
    let mut re = T::zero();
    let mut im = T::zero();
    let first = if t > T::zero() { (T::PI() / t).min(w_max) } else { w_max };
    for sign in [T::one(), -T::one()] {
        let value = |w: T| match fm_ldos_analytic(params, sign * w) {
            Ok(v) => v,
            Err(e) => {
                failure.set(Some(e));
                T::zero()
            }
        };
        // |w|^(1-s) behaviour at zero: double-exponential rule on the first
        // half period, then half-period panels
        re += quad::tanh_sinh(|w| value(w) * (sign * w * t).cos(), T::zero(), first, tol)?;
        im -= quad::tanh_sinh(|w| value(w) * (sign * w * t).sin(), T::zero(), first, tol)?;
        let mut a = first;
        while a < w_max {
            let width = T::PI() / t;
            let b = (a + width).min(w_max);
            re += quad::gauss_kronrod(|w| value(w) * (sign * w * t).cos(), a, b, tol * T::lit(1e-3), tol)?;
            im -= quad::gauss_kronrod(|w| value(w) * (sign * w * t).sin(), a, b, tol * T::lit(1e-3), tol)?;
            a = b;
        }
    }
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(Complex::new(re, im))
}

/// Wigner-model decay `exp[-(t/t0)^(2-s)]`.
pub fn survival_wm_stretched<T: Real>(params: &SpectralParams<T>, t: T) -> Result<T> {
    let ts = wigner_time(params)?;
    Ok((-(t.abs() / ts.t0).powf(T::lit(2.0) - params.s)).exp())
}

/// Amplitude `|2 sin((s-1) pi) / ((2-s) pi)|^2` of the Friedrichs power law.
pub fn fm_powerlaw_amplitude<T: Real>(s: T) -> T {
    if s == T::one() {
        return T::zero();
    }
    let a = T::lit(2.0) * ((s - T::one()) * T::PI()).sin() / ((T::lit(2.0) - s) * T::PI());
    a * a
}

/// Friedrichs long-time law
/// `P(t) = |2 sin((s-1) pi) / ((2-s) pi (t/t0)^(2-s))|^2`; zero for `s = 1`.
pub fn survival_fm_powerlaw<T: Real>(params: &SpectralParams<T>, t: T) -> Result<T> {
    let ts = wigner_time(params)?;
    let s = params.s;
    if s == T::one() {
        return Ok(T::zero());
    }
    let x = t.abs() / ts.t0;
    Ok(fm_powerlaw_amplitude(s) * x.powf(-T::lit(2.0) * (T::lit(2.0) - s)))
}

/// Crossover `t0'` where the stretched exponential meets the power law,
/// searched on `(t0, 1e3 t0)`.
///
/// With `u = (t/t0)^(2-s)` the condition reads `e^{-u} = A / u^2`; a root
/// with `u > 2` exists only for `A <= 4 e^{-2}`.
pub fn fm_crossover_time<T: Real>(params: &SpectralParams<T>) -> Result<T> {
    let s = params.s;
    if s == T::one() {
        return Err(Error::OutOfRange("no power-law regime for s = 1".into()));
    }
    let ts = wigner_time(params)?;
    let alpha = T::lit(2.0) - s;
    let amp = fm_powerlaw_amplitude(s);
    let g = |u: T| -u + T::lit(2.0) * u.ln() - amp.ln();
    let u_lo = T::lit(2.0).max(T::one());
    let u_hi = T::lit(1e3).powf(alpha);
    if !(g(u_lo) > T::zero() && g(u_hi) < T::zero()) {
        return Err(Error::NoCrossing(format!(
            "power-law amplitude {amp:e} exceeds 4 e^-2 or the crossing lies beyond 1e3 t0 (s = {s})"
        )));
    }
    let (mut lo, mut hi) = (u_lo, u_hi);
    for _ in 0..200 {
        let mid = (lo + hi) / T::lit(2.0);
        if g(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= T::epsilon() * T::lit(4.0) * hi {
            break;
        }
    }
    Ok(ts.t0 * ((lo + hi) / T::lit(2.0)).powf(T::one() / alpha))
}

/// Friedrichs `s = 2` decay `P(t) = |2 eps^2 ln(t / t_c')|^2` with
/// `t_c' = t_c e^{1/(2 eps^2)}`, normalized so that `P(t_c) = 1`; meant
/// for `t_c < t < t_c'`.
pub fn survival_fm_s2_loglaw<T: Real>(params: &SpectralParams<T>, t: T) -> Result<T> {
    if params.s != T::lit(2.0) {
        return Err(Error::Regime(format!("the logarithmic law needs s = 2 (got s = {})", params.s)));
    }
    let e2 = params.epsilon * params.epsilon;
    let tcp = params.correlation_time() * (T::one() / (T::lit(2.0) * e2)).exp();
    let a = T::lit(2.0) * e2 * (t.abs() / tcp).ln();
    Ok(a * a)
}

/// Saturation `|1 - p0|^2` for `s > 2`, with `p0` the full first-order
/// weight outside the prepared level.
pub fn survival_partial_decay<T: Real>(params: &SpectralParams<T>) -> Result<T> {
    if params.s <= T::lit(2.0) {
        return Err(Error::Regime(format!("partial decay needs s > 2 (got s = {})", params.s)));
    }
    let p0 = perturbative_weight_p0(params, T::zero())?;
    Ok((T::one() - p0) * (T::one() - p0))
}

/// Linear-response spreading `[2 (C(0) - C(t))]^(1/2)`.
pub fn lrt_spread<T: Real>(params: &SpectralParams<T>, t: T) -> Result<T> {
    let c0 = correlation_at_zero(params)?;
    let ct = correlation_function(params, t)?;
    Ok((T::lit(2.0) * (c0 - ct)).max(T::zero()).sqrt())
}

/// Exact Friedrichs spreading `[(1 + c^2) C(0) - c'^2 + 2 c c'']^(1/2)`
/// from the real amplitude and its derivatives.
pub fn fm_exact_spread<T: Real>(c: T, c_dot: T, c_ddot: T, params: &SpectralParams<T>) -> Result<T> {
    let c0 = correlation_at_zero(params)?;
    let radicand = (T::one() + c * c) * c0 - c_dot * c_dot + T::lit(2.0) * c * c_ddot;
    // round-off near t = 0 where the terms cancel exactly
    let slack = T::lit(1e-9) * c0;
    if radicand < -slack {
        return Err(Error::NegativeRadicand { value: radicand.as_f64() });
    }
    Ok(radicand.max(T::zero()).sqrt())
}

/// Long-time Friedrichs spreading `[(1 + P) C(0)]^(1/2)`.
pub fn fm_asymptotic_spread<T: Real>(survival: T, params: &SpectralParams<T>) -> Result<T> {
    Ok(((T::one() + survival) * correlation_at_zero(params)?).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_kernel::CutoffKind;
    use std::f64::consts::PI;

    fn open(s: f64, eps: f64) -> SpectralParams<f64> {
        SpectralParams::new(s, eps, f64::INFINITY, 1.0, CutoffKind::Sharp).unwrap()
    }

    #[test]
    fn flat_ldos_is_lorentzian() {
        let p = open(1.0, 0.4);
        let g = PI * 0.16;
        for &w in &[-3.0, -0.1, 0.0, 0.2, 5.0] {
            let want = g / (w * w + g * g) / PI;
            assert!((fm_ldos_analytic(&p, w).unwrap() - want).abs() < 1e-14);
        }
    }

    #[test]
    fn stretched_law_examples() {
        let p = open(1.5, 1.09);
        let t0 = wigner_time(&p).unwrap().t0;
        assert!((survival_wm_stretched(&p, t0).unwrap() - (-1.0f64).exp()).abs() < 1e-14);
        let p1 = open(1.0, 0.3);
        let t0 = wigner_time(&p1).unwrap().t0;
        assert!((survival_wm_stretched(&p1, 2.0 * t0).unwrap() - (-2.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn power_law_examples() {
        assert_eq!(survival_fm_powerlaw(&open(1.0, 0.3), 5.0).unwrap(), 0.0);
        let p = open(1.5, 1.0);
        let t0 = wigner_time(&p).unwrap().t0;
        let v = survival_fm_powerlaw(&p, 100.0 * t0).unwrap();
        assert!((v - (2.0 / (0.5 * PI)).powi(2) / 100.0).abs() < 1e-14);
        // amplitude above 4/e^2: the curves never meet at s = 1.5
        assert!(matches!(fm_crossover_time(&p), Err(Error::NoCrossing(_))));
        let p = open(1.1, 1.0);
        let t0 = wigner_time(&p).unwrap().t0;
        let tp = fm_crossover_time(&p).unwrap();
        assert!(tp > t0);
        let a = survival_wm_stretched(&p, tp).unwrap();
        let b = survival_fm_powerlaw(&p, tp).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn spreading_identities() {
        let p = SpectralParams::<f64>::new(1.5, 0.7, 20.0, 1.0, CutoffKind::Sharp).unwrap();
        let c0 = correlation_at_zero(&p).unwrap();
        assert_eq!(fm_exact_spread(1.0, 0.0, -c0, &p).unwrap(), 0.0);
        assert!((fm_asymptotic_spread(0.0, &p).unwrap() - c0.sqrt()).abs() < 1e-12);
        assert_eq!(lrt_spread(&p, 0.0).unwrap(), 0.0);
        assert!(matches!(fm_exact_spread(1.0, 0.0, -2.0 * c0, &p), Err(Error::NegativeRadicand { .. })));
    }

    #[test]
    fn regime_guards() {
        assert!(matches!(survival_fm_s2_loglaw(&open(1.5, 1.0), 1.0), Err(Error::Regime(_))));
        assert!(matches!(survival_partial_decay(&open(1.5, 1.0)), Err(Error::Regime(_))));
        let p = SpectralParams::<f64>::new(2.0, 0.5, 10.0, 1.0, CutoffKind::Sharp).unwrap();
        let tc = p.correlation_time();
        assert!((survival_fm_s2_loglaw(&p, tc).unwrap() - 1.0).abs() < 1e-12);
    }
}
