//! Curve fits and scaling extractions on survival and width tracks.
//!
//! Fit windows are always explicit; [`suggest_window`] only proposes one.

use crate::error::{Error, Result};
use crate::scalar::{pairwise_sum, Real};

/// Closed time window `[t_min, t_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitWindow<T> {
    pub t_min: T,
    pub t_max: T,
}

impl<T: Real> FitWindow<T> {
    pub fn new(t_min: T, t_max: T) -> Result<Self> {
        if !(t_min > T::zero() && t_max > t_min) {
            return Err(Error::InvalidParams(format!("fit window needs 0 < t_min < t_max (got [{t_min}, {t_max}])")));
        }
        Ok(Self { t_min, t_max })
    }

    pub fn contains(&self, t: T) -> bool {
        t >= self.t_min && t <= self.t_max
    }

    pub fn decades(&self) -> T {
        (self.t_max / self.t_min).log10()
    }
}

/// Ordinary least squares `y = slope x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit<T> {
    pub slope: T,
    pub intercept: T,
    pub slope_err: T,
    pub intercept_err: T,
    pub residual_rms: T,
    pub n_points: usize,
}

pub fn linear_fit<T: Real>(x: &[T], y: &[T]) -> Result<LinearFit<T>> {
    let n = x.len();
    if n < 3 || y.len() != n {
        return Err(Error::WindowTooShort(format!("a line fit needs at least 3 points (got {n})")));
    }
    let nf = T::from_usize_lossy(n);
    let mx = pairwise_sum(x) / nf;
    let my = pairwise_sum(y) / nf;
    let sxx = pairwise_sum(&x.iter().map(|&a| (a - mx) * (a - mx)).collect::<Vec<_>>());
    let sxy = pairwise_sum(&x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)).collect::<Vec<_>>());
    if !(sxx > T::zero()) {
        return Err(Error::WindowTooShort("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss = pairwise_sum(&x.iter().zip(y).map(|(&a, &b)| (b - intercept - slope * a).powi(2)).collect::<Vec<_>>());
    let sigma2 = ss / T::from_usize_lossy(n - 2);
    let slope_err = (sigma2 / sxx).sqrt();
    let intercept_err = (sigma2 * (T::one() / nf + mx * mx / sxx)).sqrt();
    Ok(LinearFit { slope, intercept, slope_err, intercept_err, residual_rms: (ss / nf).sqrt(), n_points: n })
}

/// Points of `(t, p)` inside the window with `p` resolved above noise.
fn admissible<T: Real>(t: &[T], p: &[T], p_stderr: Option<&[T]>, window: &FitWindow<T>, max_p: T) -> (Vec<T>, Vec<T>) {
    let mut xs = Vec::new();
    let mut ps = Vec::new();
    for (k, (&tk, &pk)) in t.iter().zip(p).enumerate() {
        let noise = p_stderr.map_or(T::zero(), |e| T::lit(10.0) * e[k]);
        if window.contains(tk) && pk > noise && pk > T::zero() && pk < max_p {
            xs.push(tk);
            ps.push(pk);
        }
    }
    (xs, ps)
}

fn require_half_decade<T: Real>(xs: &[T]) -> Result<()> {
    let span = match (xs.first(), xs.last()) {
        (Some(&a), Some(&b)) if xs.len() >= 3 => (b / a).log10(),
        _ => T::zero(),
    };
    if span < T::lit(0.5) {
        return Err(Error::WindowTooShort(format!(
            "usable points span {:.3} decades ({} points); need at least half a decade",
            span.as_f64(),
            xs.len()
        )));
    }
    Ok(())
}

/// `P = exp[-(t/t0)^beta]` fitted through `Y = -ln P / t` against `t` in
/// log-log: the slope is `beta - 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StretchedFit<T> {
    pub beta: T,
    pub beta_err: T,
    pub slope: T,
    pub t0: T,
    pub line: LinearFit<T>,
}

pub fn fit_stretched_exponent<T: Real>(t: &[T], p: &[T], p_stderr: Option<&[T]>, window: &FitWindow<T>) -> Result<StretchedFit<T>> {
    let (ts, ps) = admissible(t, p, p_stderr, window, T::one());
    require_half_decade(&ts)?;
    let x: Vec<T> = ts.iter().map(|v| v.ln()).collect();
    let y: Vec<T> = ts.iter().zip(&ps).map(|(&tk, &pk)| (-pk.ln() / tk).ln()).collect();
    let line = linear_fit(&x, &y)?;
    let beta = line.slope + T::one();
    // ln Y = (beta - 1) ln t - beta ln t0
    let t0 = (-line.intercept / beta).exp();
    Ok(StretchedFit { beta, beta_err: line.slope_err, slope: line.slope, t0, line })
}

/// `P = A t^k` fitted in log-log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit<T> {
    pub exponent: T,
    pub exponent_err: T,
    /// `A` in `P = A t^k` (absolute time units).
    pub amplitude: T,
    pub line: LinearFit<T>,
}

impl<T: Real> PowerLawFit<T> {
    /// Amplitude with time measured in units of `scale`: `P = A' (t/scale)^k`.
    pub fn amplitude_in_units(&self, scale: T) -> T {
        self.amplitude * scale.powf(self.exponent)
    }
}

pub fn fit_powerlaw_tail<T: Real>(t: &[T], p: &[T], p_stderr: Option<&[T]>, window: &FitWindow<T>) -> Result<PowerLawFit<T>> {
    let (ts, ps) = admissible(t, p, p_stderr, window, T::infinity());
    require_half_decade(&ts)?;
    let x: Vec<T> = ts.iter().map(|v| v.ln()).collect();
    let y: Vec<T> = ps.iter().map(|v| v.ln()).collect();
    let line = linear_fit(&x, &y)?;
    Ok(PowerLawFit { exponent: line.slope, exponent_err: line.slope_err, amplitude: line.intercept.exp(), line })
}

/// Departure time and saturation value of a rising width track.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Departure<T> {
    pub t_dep: T,
    pub sat: T,
    pub fraction: T,
    /// First time included in the plateau average.
    pub plateau_start: T,
}

/// Default departure fraction of the saturation value.
pub const DEPARTURE_FRACTION: f64 = 0.5;

/// The plateau is the last quarter-decade of the track (the last half of
/// the samples when the grid spans less than that) and must vary by less
/// than 10% of its mean. `t_dep` is the first linearly interpolated
/// crossing of `fraction * sat`.
pub fn extract_departure_and_saturation<T: Real>(t: &[T], width: &[T], fraction: T) -> Result<Departure<T>> {
    extract_departure_within(t, width, fraction, T::lit(0.1))
}

/// As [`extract_departure_and_saturation`] with the plateau allowed to vary
/// by `tolerance` of its mean.
pub fn extract_departure_within<T: Real>(t: &[T], width: &[T], fraction: T, tolerance: T) -> Result<Departure<T>> {
    let n = t.len();
    if n < 4 || width.len() != n {
        return Err(Error::NoPlateau(format!("track has {n} points")));
    }
    let t_end = t[n - 1];
    let mut start = t.partition_point(|&x| x < t_end * T::lit(10f64.powf(-0.25)));
    if start == 0 {
        start = n / 2;
    }
    start = start.min(n - 2);
    let tail = &width[start..];
    let sat = pairwise_sum(tail) / T::from_usize_lossy(tail.len());
    let (lo, hi) = tail.iter().fold((T::infinity(), T::neg_infinity()), |(a, b), &x| (a.min(x), b.max(x)));
    if !(sat > T::zero()) || (hi - lo) > tolerance * sat {
        return Err(Error::NoPlateau(format!(
            "values after t = {} vary by {:.3} of their mean",
            t[start],
            ((hi - lo) / sat).as_f64()
        )));
    }
    let level = fraction * sat;
    let k = width.iter().position(|&w| w >= level).ok_or_else(|| Error::NoPlateau("track never reaches the departure level".into()))?;
    let t_dep = if k == 0 {
        t[0]
    } else {
        let (t0, t1, w0, w1) = (t[k - 1], t[k], width[k - 1], width[k]);
        t0 + (t1 - t0) * (level - w0) / (w1 - w0)
    };
    Ok(Departure { t_dep, sat, fraction, plateau_start: t[start] })
}

/// One survival track with its time scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledTrack<T> {
    pub t0: T,
    pub t: Vec<T>,
    pub p: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Collapse<T> {
    /// Largest spread between tracks at matched `t / t0`.
    pub residual: T,
    /// Where the largest spread occurs, in units of `t0`.
    pub at: T,
}

fn interpolate<T: Real>(t: &[T], y: &[T], x: T) -> Option<T> {
    if t.is_empty() || x < t[0] || x > t[t.len() - 1] {
        return None;
    }
    let k = t.partition_point(|&v| v < x);
    if k == 0 {
        return Some(y[0]);
    }
    let (t0, t1) = (t[k - 1], t[k]);
    Some(y[k - 1] + (y[k] - y[k - 1]) * (x - t0) / (t1 - t0))
}

/// Residual of the collapse of several tracks once each time axis is
/// divided by its own `t0`, over `[x_min, x_max]` (units of `t0`)
/// sampled at `n_samples` log-spaced points.
pub fn scaling_collapse<T: Real>(tracks: &[ScaledTrack<T>], x_min: T, x_max: T, n_samples: usize) -> Result<Collapse<T>> {
    if tracks.len() < 3 {
        return Err(Error::InsufficientOverlap(format!("a collapse needs at least 3 tracks (got {})", tracks.len())));
    }
    if !(x_min > T::zero() && x_max > x_min) || n_samples < 2 {
        return Err(Error::InvalidParams("collapse window needs 0 < x_min < x_max and 2+ samples".into()));
    }
    let scaled: Vec<Vec<T>> = tracks.iter().map(|tr| tr.t.iter().map(|&t| t / tr.t0).collect()).collect();
    for (k, s) in scaled.iter().enumerate() {
        if s.is_empty() || s[0] > x_min || s[s.len() - 1] < x_max {
            return Err(Error::InsufficientOverlap(format!(
                "track {k} (t0 = {}) does not cover t/t0 in [{x_min}, {x_max}]",
                tracks[k].t0
            )));
        }
    }
    let ratio = (x_max / x_min).ln();
    let mut best = Collapse { residual: T::zero(), at: x_min };
    for j in 0..n_samples {
        let x = x_min * (ratio * T::from_usize_lossy(j) / T::from_usize_lossy(n_samples - 1)).exp();
        let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
        for (s, tr) in scaled.iter().zip(tracks) {
            let v = interpolate(s, &tr.p, x).expect("coverage checked above");
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi - lo > best.residual {
            best = Collapse { residual: hi - lo, at: x };
        }
    }
    Ok(best)
}

/// Proposes a stretched-exponential fit window: the longest run of points
/// (after `t_min`, with `P` above ten standard errors and below `p_max`)
/// whose local log-log slope of `Y = -ln P / t` stays within `tol` of the
/// run's median. The proposal is logged.
pub fn suggest_window<T: Real>(t: &[T], p: &[T], p_stderr: Option<&[T]>, t_min: T, p_max: T, tol: T) -> Result<FitWindow<T>> {
    let wide = FitWindow { t_min, t_max: T::infinity() };
    let (ts, ps) = admissible(t, p, p_stderr, &wide, p_max);
    if ts.len() < 5 {
        return Err(Error::WindowTooShort(format!("only {} admissible points", ts.len())));
    }
    let x: Vec<T> = ts.iter().map(|v| v.ln()).collect();
    let y: Vec<T> = ts.iter().zip(&ps).map(|(&tk, &pk)| (-pk.ln() / tk).ln()).collect();
    let slopes: Vec<T> = (1..x.len() - 1).map(|k| (y[k + 1] - y[k - 1]) / (x[k + 1] - x[k - 1])).collect();
    let mut sorted = slopes.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let median = sorted[sorted.len() / 2];
    let (mut best, mut run_start) = ((0usize, 0usize), None);
    for (k, &m) in slopes.iter().enumerate() {
        if (m - median).abs() <= tol {
            let s = *run_start.get_or_insert(k);
            if k - s > best.1 - best.0 {
                best = (s, k);
            }
        } else {
            run_start = None;
        }
    }
    let window = FitWindow::new(ts[best.0 + 1], ts[best.1 + 1])?;
    log::info!("suggested fit window [{}, {}] around local slope {}", window.t_min, window.t_max, median);
    Ok(window)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| a * (b / a).powf(k as f64 / (n - 1) as f64)).collect()
    }

    #[test]
    fn stretched_fit_recovers_its_own_model() {
        let t = log_grid(0.1, 10.0, 60);
        let p: Vec<f64> = t.iter().map(|&x| (-(x / 2.0f64).powf(0.5)).exp()).collect();
        let f = fit_stretched_exponent(&t, &p, None, &FitWindow::new(0.1, 10.0).unwrap()).unwrap();
        assert!((f.beta - 0.5).abs() < 1e-12);
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert!((f.t0 - 2.0).abs() < 1e-10);
    }

    #[test]
    fn powerlaw_fit_recovers_its_own_model() {
        let t = log_grid(1.0, 1e3, 40);
        let p: Vec<f64> = t.iter().map(|&x| 0.3 * x.powf(-1.0)).collect();
        let f = fit_powerlaw_tail(&t, &p, None, &FitWindow::new(1.0, 1e3).unwrap()).unwrap();
        assert!((f.exponent + 1.0).abs() < 1e-12);
        assert!((f.amplitude - 0.3).abs() < 1e-12);
        assert!((f.amplitude_in_units(10.0) - 0.03).abs() < 1e-12);
    }

    #[test]
    fn short_window_is_rejected() {
        let t = log_grid(1.0, 2.0, 20);
        let p: Vec<f64> = t.iter().map(|&x| (-x).exp()).collect();
        let e = fit_stretched_exponent(&t, &p, None, &FitWindow::new(1.0, 2.0).unwrap());
        assert!(matches!(e, Err(Error::WindowTooShort(_))));
    }

    #[test]
    fn step_gives_its_time_and_height() {
        let t: Vec<f64> = (0..=1000).map(|k| k as f64 * 0.01).collect();
        let w: Vec<f64> = t.iter().map(|&x| if x < 0.5 { 0.0 } else { 3.0 }).collect();
        let d = extract_departure_and_saturation(&t, &w, 0.5).unwrap();
        assert_eq!(d.sat, 3.0);
        assert!((d.t_dep - 0.495).abs() < 1e-12);
        let ramp: Vec<f64> = t.clone();
        assert!(matches!(extract_departure_and_saturation(&t, &ramp, 0.5), Err(Error::NoPlateau(_))));
    }

    #[test]
    fn identical_tracks_collapse_exactly() {
        let tracks: Vec<ScaledTrack<f64>> = [1.0, 2.0, 5.0]
            .iter()
            .map(|&t0| {
                let t = log_grid(0.01 * t0, 10.0 * t0, 200);
                let p = t.iter().map(|&x| (-x / t0).exp()).collect();
                ScaledTrack { t0, t, p }
            })
            .collect();
        let c = scaling_collapse(&tracks, 0.2, 3.0, 50).unwrap();
        assert!(c.residual < 1e-3);
        let mut wrong = tracks.clone();
        wrong[0].t0 = 5.0;
        wrong[2].t0 = 1.0;
        assert!(scaling_collapse(&wrong, 0.2, 1.0, 50).unwrap().residual > 0.1);
    }

    #[test]
    fn suggested_window_covers_clean_region() {
        let t = log_grid(0.01, 10.0, 80);
        let p: Vec<f64> = t.iter().map(|&x| (-x).exp()).collect();
        let w = suggest_window(&t, &p, None, 0.05, 1.0, 0.05).unwrap();
        assert!(w.decades() > 2.0);
    }
}
