//! Spectral function of the coupling, its time-domain correlation, and the
//! time and energy scales derived from it.
//!
//! The spectral function is `C(w) = 2 pi eps^2 |w|^(s-1) f(|w| / w_c)` with
//! either an exponential cutoff `f(x) = e^-x` or a sharp band `f(x) = 1[x <= 1]`.
//! Units: density of states `rho` and hbar enter explicitly; with the
//! conventional choice `rho = 1` energies are measured in level spacings.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::quad;
use crate::scalar::Real;

/// Shape of the high-frequency cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CutoffKind {
    /// `e^{-|w|/w_c}`; the default for closed-form theory.
    Exponential,
    /// Hard band edge at `|w| = w_c`; the default for dynamics.
    Sharp,
}

impl CutoffKind {
    pub fn name(self) -> &'static str {
        match self {
            CutoffKind::Exponential => "exponential",
            CutoffKind::Sharp => "sharp",
        }
    }
}

impl std::str::FromStr for CutoffKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exponential" | "exp" => Ok(CutoffKind::Exponential),
            "sharp" => Ok(CutoffKind::Sharp),
            other => Err(format!("unknown cutoff kind `{other}` (expected sharp|exponential)")),
        }
    }
}

/// The quadruple `(s, eps, w_c, rho)` plus the cutoff shape.
///
/// `omega_c` may be `+inf`, which denotes the cutoff-free continuum used by
/// the asymptotic theory; such parameters have no finite bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralParams<T> {
    pub s: T,
    pub epsilon: T,
    pub omega_c: T,
    pub rho: T,
    pub cutoff: CutoffKind,
}

impl<T: Real> SpectralParams<T> {
    pub fn new(s: T, epsilon: T, omega_c: T, rho: T, cutoff: CutoffKind) -> Result<Self> {
        let p = Self { s, epsilon, omega_c, rho, cutoff };
        p.validate()?;
        Ok(p)
    }

    /// Parameters for a band of `b` levels on each side at density `rho`.
    pub fn from_bandwidth(s: T, epsilon: T, b: usize, rho: T, cutoff: CutoffKind) -> Result<Self> {
        Self::new(s, epsilon, T::from_usize_lossy(b) / rho, rho, cutoff)
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.s > T::zero()) || !self.s.is_finite() {
            problems.push(format!("s must be finite and > 0 (got {})", self.s));
        }
        if !(self.epsilon > T::zero()) || !self.epsilon.is_finite() {
            problems.push(format!("epsilon must be finite and > 0 (got {})", self.epsilon));
        }
        if !(self.omega_c > T::zero()) {
            problems.push(format!("omega_c must be > 0 (got {})", self.omega_c));
        }
        if !(self.rho > T::zero()) || !self.rho.is_finite() {
            problems.push(format!("rho must be finite and > 0 (got {})", self.rho));
        }
        if problems.is_empty() && self.omega_c.is_finite() && (self.rho * self.omega_c).round() < T::one() {
            problems.push(format!(
                "bandwidth round(rho * omega_c) must be >= 1 (got rho = {}, omega_c = {})",
                self.rho, self.omega_c
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(problems.join("; ")))
        }
    }

    pub fn with_cutoff(mut self, cutoff: CutoffKind) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn with_epsilon(mut self, epsilon: T) -> Self {
        self.epsilon = epsilon;
        self
    }

    /// `b = round(rho * omega_c)`.
    pub fn bandwidth(&self) -> Result<usize> {
        if !self.omega_c.is_finite() {
            return Err(Error::InvalidParams("infinite omega_c has no finite bandwidth".into()));
        }
        (self.rho * self.omega_c)
            .round()
            .to_usize()
            .filter(|&b| b >= 1)
            .ok_or_else(|| Error::InvalidParams("bandwidth must be >= 1".into()))
    }

    /// Heisenberg time `2 pi rho`.
    pub fn heisenberg_time(&self) -> T {
        T::TAU() * self.rho
    }

    /// Correlation time `2 pi / omega_c` (zero for an infinite cutoff).
    pub fn correlation_time(&self) -> T {
        T::TAU() / self.omega_c
    }

    fn cutoff_factor(&self, a: T) -> T {
        match self.cutoff {
            CutoffKind::Exponential => (-a / self.omega_c).exp(),
            CutoffKind::Sharp => {
                if a <= self.omega_c {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }

    /// Spectral density at `|w| = a > 0`, no domain checks.
    #[inline]
    pub(crate) fn density_at(&self, a: T) -> T {
        T::TAU() * self.epsilon * self.epsilon * a.powf(self.s - T::one()) * self.cutoff_factor(a)
    }
}

/// Generalized Wigner time, its inverse, and the two cutoff times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeScales<T> {
    pub t_heisenberg: T,
    pub t_correlation: T,
    pub t0: T,
    pub gamma0: T,
}

/// `C(w) = 2 pi eps^2 |w|^(s-1) x cutoff`. Even in `w`.
///
/// For `s < 1` the density diverges at `w = 0` and a [`Error::Singular`] is
/// returned there.
pub fn spectral_function<T: Real>(params: &SpectralParams<T>, omega: T) -> Result<T> {
    let a = omega.abs();
    if a == T::zero() {
        return if params.s < T::one() {
            Err(Error::Singular(format!("spectral function diverges at w = 0 for s = {} < 1", params.s)))
        } else if params.s == T::one() {
            Ok(T::TAU() * params.epsilon * params.epsilon)
        } else {
            Ok(T::zero())
        };
    }
    Ok(params.density_at(a))
}

/// `int_0^1 x^(s-1) cos(z x) dx` for `z >= 0`.
fn band_cosine_integral<T: Real>(s: T, z: T) -> Result<T> {
    if z < T::lit(8.0) {
        Ok(band_cosine_series(s, z))
    } else if z >= T::lit(40.0) {
        Ok(band_cosine_asymptotic(s, z))
    } else {
        band_cosine_panels(s, z)
    }
}

// Alternating power series; at most ~1e3 cancellation for z < 8.
fn band_cosine_series<T: Real>(s: T, z: T) -> T {
    let eps = T::epsilon();
    let z2 = z * z;
    let mut p = T::one();
    let mut sum = T::one() / s;
    for k in 1..400usize {
        let kk = T::from_usize_lossy(k);
        p = -p * z2 / ((T::lit(2.0) * kk - T::one()) * (T::lit(2.0) * kk));
        let term = p / (T::lit(2.0) * kk + s);
        sum += term;
        if term.abs() <= eps * T::lit(0.01) * sum.abs().max(eps) && kk > z {
            break;
        }
    }
    sum
}

// Gamma(s) cos(s pi/2) z^-s minus the Abel-regularized tail int_1^inf,
// expanded by repeated integration by parts.
fn band_cosine_asymptotic<T: Real>(s: T, z: T) -> T {
    let eps = T::epsilon();
    let head = s.gamma() * (s * T::FRAC_PI_2()).cos() * z.powf(-s);
    let iz = Complex::new(T::zero(), z);
    let mut term = Complex::new(T::one(), T::zero()) / iz;
    let mut series = term;
    let mut last = term.norm();
    for k in 1..200usize {
        let next = term * Complex::new(-(s - T::from_usize_lossy(k)), T::zero()) / iz;
        let mag = next.norm();
        if mag >= last || mag <= eps * T::lit(1e-3) * series.norm() {
            break;
        }
        series = series + next;
        term = next;
        last = mag;
    }
    let phase = Complex::new(z.cos(), z.sin());
    head + (phase * series).re
}

// One double-exponential panel per half period.
fn band_cosine_panels<T: Real>(s: T, z: T) -> Result<T> {
    let panels = (z / T::PI()).ceil().to_usize().unwrap_or(1).max(1);
    let width = T::one() / T::from_usize_lossy(panels);
    let tol = T::lit(1e-14).max(T::epsilon() * T::lit(4.0));
    let mut total = T::zero();
    for k in 0..panels {
        let a = width * T::from_usize_lossy(k);
        let b = if k + 1 == panels { T::one() } else { width * T::from_usize_lossy(k + 1) };
        total += quad::tanh_sinh(|x| x.powf(s - T::one()) * (z * x).cos(), a, b, tol)?;
    }
    Ok(total)
}

/// Inverse Fourier transform `C(t) = int C(w) e^{iwt} dw / 2pi` (real and
/// even in `t`).
///
/// Exponential cutoff: `2 eps^2 Gamma(s) Re[(1/w_c - i t)^(-s)]`.
/// Sharp cutoff: `2 eps^2 int_0^{w_c} w^(s-1) cos(w t) dw`, evaluated by a
/// power series, panel quadrature or the asymptotic expansion depending on
/// `w_c t`.
pub fn correlation_function<T: Real>(params: &SpectralParams<T>, t: T) -> Result<T> {
    let t = t.abs();
    let s = params.s;
    let e2 = params.epsilon * params.epsilon;
    let two = T::lit(2.0);
    if !params.omega_c.is_finite() {
        if t == T::zero() {
            return Err(Error::Divergent("C(0) is infinite without a cutoff".into()));
        }
        return Ok(two * e2 * s.gamma() * (s * T::FRAC_PI_2()).cos() * t.powf(-s));
    }
    match params.cutoff {
        CutoffKind::Exponential => {
            let inv = T::one() / params.omega_c;
            let modulus = (inv * inv + t * t).powf(-s / two);
            let arg = (t * params.omega_c).atan();
            Ok(two * e2 * s.gamma() * modulus * (s * arg).cos())
        }
        CutoffKind::Sharp => {
            let wc = params.omega_c;
            Ok(two * e2 * wc.powf(s) * band_cosine_integral(s, wc * t)?)
        }
    }
}

/// `C(0)`, the total coupling strength `sum_n |V_n0|^2` in the continuum.
pub fn correlation_at_zero<T: Real>(params: &SpectralParams<T>) -> Result<T> {
    correlation_function(params, T::zero())
}

/// Generalized Wigner time
/// `t0 = [2 pi eps^2 / (Gamma(3-s) sin(s pi/2))]^(-1/(2-s))`, together with
/// the Heisenberg and correlation times. Valid for `0 < s < 2`.
pub fn wigner_time<T: Real>(params: &SpectralParams<T>) -> Result<TimeScales<T>> {
    let s = params.s;
    let two = T::lit(2.0);
    if !(s > T::zero() && s < two) {
        return Err(Error::OutOfRange(format!("the generalized Wigner time requires 0 < s < 2 (got s = {s})")));
    }
    let rate = T::TAU() * params.epsilon * params.epsilon / ((T::lit(3.0) - s).gamma() * (s * T::FRAC_PI_2()).sin());
    let t0 = rate.powf(-T::one() / (two - s));
    Ok(TimeScales {
        t_heisenberg: params.heisenberg_time(),
        t_correlation: params.correlation_time(),
        t0,
        gamma0: T::one() / t0,
    })
}

/// Constant `C = [2 Gamma(1+a) sin(a pi/2)]^-1` relating `1/|w|^(1+a)` tails
/// of a density to the `-C |t|^a` cusp of its Fourier transform.
pub fn fourier_cusp_constant<T: Real>(alpha: T) -> T {
    T::one() / (T::lit(2.0) * (T::one() + alpha).gamma() * (alpha * T::FRAC_PI_2()).sin())
}

/// First-order weight outside `[-gamma, gamma]`:
/// `p0 = int_{|w| > gamma} C(w) / w^2 dw / 2pi`, counting both tails.
pub fn perturbative_weight_p0<T: Real>(params: &SpectralParams<T>, gamma: T) -> Result<T> {
    let s = params.s;
    let two = T::lit(2.0);
    let e2 = params.epsilon * params.epsilon;
    let wc = params.omega_c;
    if gamma < T::zero() {
        return Err(Error::InvalidParams(format!("gamma must be >= 0 (got {gamma})")));
    }
    if gamma == T::zero() && s <= two {
        return Err(Error::Divergent(format!("p0 diverges at gamma = 0 for s = {s} <= 2")));
    }
    match params.cutoff {
        CutoffKind::Sharp => {
            if gamma >= wc {
                return Ok(T::zero());
            }
            if s == two {
                return Ok(two * e2 * (wc / gamma).ln());
            }
            let upper = if wc.is_finite() { wc.powf(s - two) } else { T::zero() };
            let lower = if gamma == T::zero() { T::zero() } else { gamma.powf(s - two) };
            Ok(two * e2 * (lower - upper) / (two - s))
        }
        CutoffKind::Exponential => {
            if !wc.is_finite() {
                return perturbative_weight_p0(&params.with_cutoff(CutoffKind::Sharp), gamma);
            }
            if gamma == T::zero() {
                return Ok(two * e2 * wc.powf(s - two) * (s - two).gamma());
            }
            // substitute w = gamma + x
            let integral = quad::semi_infinite(
                |x| {
                    let w = gamma + x;
                    w.powf(s - T::lit(3.0)) * (-w / wc).exp()
                },
                T::zero(),
                T::lit(1e-13).max(T::epsilon() * T::lit(8.0)),
            )?;
            Ok(two * e2 * integral)
        }
    }
}

/// Border `gamma0` between the perturbative tails and the core, defined by
/// `p0(gamma0) = 1` and found by bisection in log space to 1e-10 relative.
pub fn core_border_gamma0<T: Real>(params: &SpectralParams<T>) -> Result<T> {
    let s = params.s;
    let two = T::lit(2.0);
    if !(s > T::zero() && s < two) {
        return Err(Error::OutOfRange(format!("core border requires 0 < s < 2 (got s = {s})")));
    }
    let p0 = |g: T| perturbative_weight_p0(params, g);
    // scale from the cutoff-free law: gamma ~ eps^(2/(2-s))
    let guess = (params.epsilon * params.epsilon).powf(T::one() / (two - s));
    let mut hi = if params.cutoff == CutoffKind::Sharp && params.omega_c.is_finite() {
        params.omega_c
    } else {
        guess
    };
    let mut guard = 0;
    while p0(hi)? >= T::one() {
        hi = hi * two;
        guard += 1;
        if guard > 2000 {
            return Err(Error::NoSolution("p0 stays above 1 for every gamma".into()));
        }
    }
    let mut lo = hi / two;
    guard = 0;
    while p0(lo)? < T::one() {
        lo = lo / two;
        guard += 1;
        if guard > 2000 || lo == T::zero() {
            return Err(Error::NoSolution("p0(0+) < 1: coupling too weak, perturbative regime".into()));
        }
    }
    let tol = T::lit(1e-10).max(T::epsilon() * T::lit(4.0));
    for _ in 0..400 {
        if (hi - lo) <= tol * hi {
            break;
        }
        let mid = (lo * hi).sqrt();
        if p0(mid)? >= T::one() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}

/// Semicircle-like core width with the effective bandwidth `gamma0`:
/// `dE_sc = [int_0^{gamma0} C(w) dw / 2pi]^(1/2)`.
pub fn semicircle_width<T: Real>(params: &SpectralParams<T>) -> Result<T> {
    let g0 = core_border_gamma0(params)?;
    let s = params.s;
    let e2 = params.epsilon * params.epsilon;
    let integral = match params.cutoff {
        CutoffKind::Sharp => e2 * g0.min(params.omega_c).powf(s) / s,
        CutoffKind::Exponential => {
            if params.omega_c.is_finite() {
                e2 * quad::tanh_sinh(
                    |w| w.powf(s - T::one()) * (-w / params.omega_c).exp(),
                    T::zero(),
                    g0,
                    T::lit(1e-13).max(T::epsilon() * T::lit(8.0)),
                )?
            } else {
                e2 * g0.powf(s) / s
            }
        }
    };
    Ok(integral.sqrt())
}

/// Level shift in the cutoff-free limit,
/// `Delta(w) = eps^2 pi cot(s pi/2) |w|^(s-1) sgn(w)`. Odd in `w`.
pub fn level_shift_delta<T: Real>(params: &SpectralParams<T>, omega: T) -> Result<T> {
    let s = params.s;
    if !(s > T::zero() && s < T::lit(2.0)) {
        return Err(Error::OutOfRange(format!("level shift requires 0 < s < 2 (got s = {s})")));
    }
    if omega == T::zero() {
        return if s < T::one() {
            Err(Error::Singular(format!("level shift diverges at w = 0 for s = {s} < 1")))
        } else {
            Ok(T::zero())
        };
    }
    if s == T::one() {
        return Ok(T::zero());
    }
    let half = s * T::FRAC_PI_2();
    let cot = half.cos() / half.sin();
    Ok(params.epsilon * params.epsilon * T::PI() * cot * omega.abs().powf(s - T::one()) * omega.signum())
}

/// Level shift as the principal value
/// `PV int C(w') / (w - w') dw' / 2pi` with the actual cutoff, by quadrature.
pub fn level_shift_delta_band<T: Real>(params: &SpectralParams<T>, omega: T) -> Result<T> {
    let s = params.s;
    let a = omega.abs();
    if a == T::zero() {
        return if s < T::one() {
            Err(Error::Singular(format!("level shift diverges at w = 0 for s = {s} < 1")))
        } else {
            Ok(T::zero())
        };
    }
    let band_edge = match params.cutoff {
        CutoffKind::Sharp => params.omega_c,
        CutoffKind::Exponential => T::infinity(),
    };
    if a == band_edge {
        return Err(Error::Singular("level shift diverges logarithmically at the band edge".into()));
    }
    let tol = T::lit(1e-12).max(T::epsilon() * T::lit(16.0));
    let two = T::lit(2.0);
    let c = |x: T| params.density_at(x);
    let kernel = |x: T| c(x) * two * a / (a * a - x * x);

    let integral = if a > band_edge {
        quad::tanh_sinh(kernel, T::zero(), band_edge, tol)?
    } else {
        let m = (two * a).min(band_edge);
        let ca = c(a);
        let smooth = |x: T| {
            if x == a {
                c(x) / (a + x)
            } else {
                (c(x) - ca) / (a - x) + c(x) / (a + x)
            }
        };
        let mut near = quad::tanh_sinh(smooth, T::zero(), a, tol)? + quad::tanh_sinh(smooth, a, m, tol)?;
        if m < two * a {
            near += ca * (a / (m - a)).ln();
        }
        let far = if m >= band_edge {
            T::zero()
        } else if band_edge.is_finite() {
            quad::tanh_sinh(kernel, m, band_edge, tol)?
        } else {
            quad::semi_infinite(kernel, m, tol)?
        };
        near + far
    };
    Ok(omega.signum() * integral / T::TAU())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sharp(s: f64, eps: f64, wc: f64) -> SpectralParams<f64> {
        SpectralParams::new(s, eps, wc, 1.0, CutoffKind::Sharp).unwrap()
    }

    fn expo(s: f64, eps: f64, wc: f64) -> SpectralParams<f64> {
        SpectralParams::new(s, eps, wc, 1.0, CutoffKind::Exponential).unwrap()
    }

    #[test]
    fn validation_rejects_bad_params() {
        assert!(SpectralParams::new(0.0, 1.0, 10.0, 1.0, CutoffKind::Sharp).is_err());
        assert!(SpectralParams::new(1.0, -1.0, 10.0, 1.0, CutoffKind::Sharp).is_err());
        assert!(SpectralParams::new(1.0, 1.0, 0.2, 1.0, CutoffKind::Sharp).is_err());
        assert!(SpectralParams::new(1.0, 1.0, f64::INFINITY, 1.0, CutoffKind::Sharp).is_ok());
        assert_eq!(sharp(1.0, 1.0, 800.0).bandwidth().unwrap(), 800);
    }

    #[test]
    fn spectral_function_examples() {
        assert!((spectral_function(&sharp(1.0, 1.0, 10.0), 0.5).unwrap() - 2.0 * PI).abs() < 1e-14);
        let v = spectral_function(&sharp(1.5, 1.44, 10.0), 1.0).unwrap();
        assert!((v - 2.0 * PI * 1.44 * 1.44).abs() < 1e-12);
        assert!((v - 13.03).abs() < 5e-3);
        let v = spectral_function(&expo(2.0, 1.0, 1.0), 2.0).unwrap();
        assert!((v - 2.0 * PI * 2.0 * (-2.0f64).exp()).abs() < 1e-14);
        assert_eq!(spectral_function(&sharp(1.0, 1.0, 10.0), 10.5).unwrap(), 0.0);
        assert!(matches!(spectral_function(&sharp(0.5, 1.0, 10.0), 0.0), Err(Error::Singular(_))));
    }

    #[test]
    fn correlation_sharp_closed_forms() {
        let p = sharp(1.3, 0.7, 12.0);
        let c0 = correlation_function(&p, 0.0).unwrap();
        assert!((c0 - 2.0 * 0.49 * 12f64.powf(1.3) / 1.3).abs() < 1e-12 * c0);
        let p1 = sharp(1.0, 0.8, 9.0);
        for &t in &[0.01, 0.3, 1.0, 4.0, 17.0] {
            let expect: f64 = 2.0 * 0.64 * (9.0 * t as f64).sin() / t;
            let got = correlation_function(&p1, t).unwrap();
            assert!((got - expect).abs() < 1e-11 * (1.0 + expect.abs()), "t={t}: {got} vs {expect}");
        }
    }

    // reference values of 1F2(s/2; 1/2, s/2+1; -z^2/4) / s at 40 digits
    const BAND_COSINE_REFERENCE: [(f64, f64, f64); 12] = [
        (0.3, 3.0, 2.0190928865909711209),
        (0.3, 8.0, 1.5515462634847465597),
        (0.3, 20.0, 1.129911234361439605),
        (0.3, 40.0, 0.90028241451223740181),
        (0.3, 100.0, 0.6644218195147755244),
        (1.5, 3.0, -0.12461872214188977883),
        (1.5, 8.0, 0.09530998645438144758),
        (1.5, 20.0, 0.039178461198004822143),
        (1.5, 40.0, 0.015945332318743916348),
        (1.5, 100.0, -0.0056473273110272112787),
        (1.9, 8.0, 0.10352209378519095616),
        (1.9, 40.0, 0.017395179188586721408),
    ];

    #[test]
    fn band_cosine_integral_matches_reference() {
        for &(s, z, want) in &BAND_COSINE_REFERENCE {
            let got = band_cosine_integral(s, z).unwrap();
            assert!((got - want).abs() < 1e-12, "s={s} z={z}: {got} vs {want}");
        }
    }

    #[test]
    fn band_cosine_regimes_agree_at_their_borders() {
        for &s in &[0.3f64, 1.0, 1.5, 1.9] {
            let a = band_cosine_series(s, 8.0);
            let b = band_cosine_panels(s, 8.0).unwrap();
            assert!((a - b).abs() < 1e-12, "s={s}: {a} vs {b}");
            let c = band_cosine_panels(s, 40.0).unwrap();
            let d = band_cosine_asymptotic(s, 40.0);
            assert!((c - d).abs() < 1e-12, "s={s}: {c} vs {d}");
        }
    }

    #[test]
    fn wigner_time_reduces_to_golden_rule() {
        let p = sharp(1.0, 0.37, 100.0);
        let ts = wigner_time(&p).unwrap();
        assert!((1.0 / ts.t0 - 2.0 * PI * 0.37 * 0.37).abs() < 1e-13);
        assert_eq!(ts.gamma0 * ts.t0, 1.0);
        assert_eq!(ts.t_heisenberg, 2.0 * PI);
        assert!((ts.t_correlation - 2.0 * PI / 100.0).abs() < 1e-16);
        assert!(matches!(wigner_time(&sharp(2.0, 1.0, 10.0)), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn p0_closed_forms() {
        let p = sharp(2.5, 0.3, 50.0);
        let v = perturbative_weight_p0(&p, 0.0).unwrap();
        assert!((v - 0.09 * 50f64.powf(0.5) * 2.0 / 0.5).abs() < 1e-12);
        assert_eq!(perturbative_weight_p0(&sharp(1.2, 1.0, 30.0), 30.0).unwrap(), 0.0);
        assert!(matches!(perturbative_weight_p0(&sharp(1.5, 1.0, 30.0), 0.0), Err(Error::Divergent(_))));
        // exponential cutoff against the sharp closed form for w_c >> gamma
        let e = expo(1.5, 1.0, 1e9);
        let sv = sharp(1.5, 1.0, f64::INFINITY);
        let a = perturbative_weight_p0(&e, 2.0).unwrap();
        let b = perturbative_weight_p0(&sv, 2.0).unwrap();
        assert!((a - b).abs() < 1e-3 * b);
    }

    #[test]
    fn gamma0_bisection_matches_closed_inverse() {
        let p = sharp(1.5, 1.09, 800.0);
        let g0 = core_border_gamma0(&p).unwrap();
        // invert 2 eps^2 (g^(s-2) - wc^(s-2)) / (2-s) = 1 directly
        let inv = ((2.0 - 1.5) / (2.0 * 1.09 * 1.09) + 800f64.powf(-0.5)).powf(1.0 / (1.5 - 2.0));
        assert!((g0 - inv).abs() < 1e-9 * inv);
        assert!((perturbative_weight_p0(&p, g0).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gamma0_flat_case_convention() {
        // two-sided p0 = 2 eps^2 / gamma for s = 1 without cutoff
        let p = sharp(1.0, 0.6, f64::INFINITY);
        let g0 = core_border_gamma0(&p).unwrap();
        assert!((g0 - 2.0 * 0.36).abs() < 1e-9);
    }

    #[test]
    fn level_shift_examples() {
        assert_eq!(level_shift_delta(&sharp(1.0, 2.0, 10.0), 3.0).unwrap(), 0.0);
        assert!(level_shift_delta(&sharp(1.5, 1.0, 10.0), 2.0).unwrap() < 0.0);
        let v = level_shift_delta(&sharp(0.5, 1.0, 10.0), 1.0).unwrap();
        assert!((v - PI).abs() < 1e-12);
        let p = sharp(0.7, 1.0, 10.0);
        let a = level_shift_delta(&p, 0.4).unwrap();
        let b = level_shift_delta(&p, -0.4).unwrap();
        assert_eq!(a, -b);
        assert!(matches!(level_shift_delta(&p, 0.0), Err(Error::Singular(_))));
    }

    #[test]
    fn band_level_shift_flat_case_is_logarithmic() {
        // s = 1, sharp band: Delta(w) = eps^2 ln|(w_c + w)/(w_c - w)|
        let p = sharp(1.0, 0.5, 10.0);
        for &w in &[0.3f64, 2.0, 9.0, -4.0, 12.0] {
            let expect = 0.25 * ((10.0 + w) / (10.0 - w) as f64).abs().ln();
            let got = level_shift_delta_band(&p, w).unwrap();
            assert!((got - expect).abs() < 1e-10, "w={w}: {got} vs {expect}");
        }
    }

    #[test]
    fn single_precision_kernel() {
        let p = SpectralParams::<f32>::new(1.5, 1.0, 10.0, 1.0, CutoffKind::Exponential).unwrap();
        let c = correlation_function(&p, 1.0).unwrap();
        let pd = expo(1.5, 1.0, 10.0);
        let cd = correlation_function(&pd, 1.0).unwrap();
        assert!((c as f64 - cd).abs() < 1e-5 * cd.abs().max(1.0));
        let t = wigner_time(&p).unwrap();
        assert!((t.t0 as f64 - wigner_time(&pd).unwrap().t0).abs() < 1e-6);
    }
}
