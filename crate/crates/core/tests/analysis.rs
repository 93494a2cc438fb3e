use proptest::prelude::*;
use qdecay_core::analysis::*;
use qdecay_core::Error;

fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a * (b / a).powf(k as f64 / (n - 1) as f64)).collect()
}

#[test]
fn exponential_decay_has_zero_slope() {
    let t = log_grid(0.1, 5.0, 50);
    let p: Vec<f64> = t.iter().map(|&x| (-x / 0.7f64).exp()).collect();
    let f = fit_stretched_exponent(&t, &p, None, &FitWindow::new(0.1, 5.0).unwrap()).unwrap();
    assert!(f.slope.abs() < 1e-12);
    assert!((f.t0 - 0.7).abs() < 1e-12);
}

#[test]
fn noisy_points_are_excluded() {
    let t = log_grid(0.1, 100.0, 60);
    let p: Vec<f64> = t.iter().map(|&x| (-(x).powf(0.5)).exp()).collect();
    let err: Vec<f64> = vec![1e-3; t.len()];
    let f = fit_stretched_exponent(&t, &p, Some(&err), &FitWindow::new(0.1, 100.0).unwrap()).unwrap();
    // P = exp(-sqrt t) drops below 1e-2 at t ~ 21
    assert!(f.line.n_points < t.len());
    assert!((f.beta - 0.5).abs() < 1e-12);
    let tight = fit_stretched_exponent(&t, &p, Some(&vec![0.05; t.len()]), &FitWindow::new(5.0, 100.0).unwrap());
    assert!(matches!(tight, Err(Error::WindowTooShort(_))));
}

#[test]
fn collapse_needs_three_tracks_and_overlap() {
    let make = |t0: f64| ScaledTrack { t0, t: log_grid(0.1 * t0, 2.0 * t0, 20), p: vec![0.5; 20] };
    assert!(matches!(scaling_collapse(&[make(1.0), make(2.0)], 0.2, 1.0, 10), Err(Error::InsufficientOverlap(_))));
    assert!(matches!(scaling_collapse(&[make(1.0), make(2.0), make(3.0)], 0.2, 3.0, 10), Err(Error::InsufficientOverlap(_))));
    assert_eq!(scaling_collapse(&[make(1.0), make(2.0), make(3.0)], 0.2, 1.5, 10).unwrap().residual, 0.0);
}

#[test]
fn departure_uses_the_requested_fraction() {
    let t: Vec<f64> = (0..=20000).map(|k| k as f64 * 0.01).collect();
    let w: Vec<f64> = t.iter().map(|&x| 4.0 * (1.0 - (-x).exp())).collect();
    let d = extract_departure_and_saturation(&t, &w, 0.5).unwrap();
    assert!((d.sat - 4.0).abs() < 0.01);
    assert!((d.t_dep - 2f64.ln()).abs() < 0.01);
    let d = extract_departure_and_saturation(&t, &w, DEPARTURE_FRACTION * 1.5).unwrap();
    assert!((d.t_dep - 4f64.ln()).abs() < 0.01);
}

proptest! {
    #[test]
    fn fits_are_invariant_under_time_rescaling(beta in 0.2f64..1.8, t0 in 0.1f64..10.0, lambda in 1e-3f64..1e3) {
        let t = log_grid(0.05 * t0, 3.0 * t0, 80);
        let p: Vec<f64> = t.iter().map(|&x| (-(x / t0).powf(beta)).exp()).collect();
        let ts: Vec<f64> = t.iter().map(|&x| x * lambda).collect();
        let a = fit_stretched_exponent(&t, &p, None, &FitWindow::new(0.05 * t0, 3.0 * t0).unwrap()).unwrap();
        let b = fit_stretched_exponent(&ts, &p, None, &FitWindow::new(0.05 * t0 * lambda, 3.0 * t0 * lambda).unwrap()).unwrap();
        prop_assert!((a.beta - beta).abs() < 1e-9);
        prop_assert!((a.beta - b.beta).abs() < 1e-9);
        prop_assert!((b.t0 / (a.t0 * lambda) - 1.0).abs() < 1e-9);

        let q: Vec<f64> = t.iter().map(|&x| 0.3 * (x / t0).powf(-2.0 * beta)).collect();
        let c = fit_powerlaw_tail(&t, &q, None, &FitWindow::new(0.05 * t0, 3.0 * t0).unwrap()).unwrap();
        let d = fit_powerlaw_tail(&ts, &q, None, &FitWindow::new(0.05 * t0 * lambda, 3.0 * t0 * lambda).unwrap()).unwrap();
        prop_assert!((c.exponent + 2.0 * beta).abs() < 1e-9);
        prop_assert!((c.exponent - d.exponent).abs() < 1e-9);
        prop_assert!((c.amplitude_in_units(t0) - 0.3).abs() < 1e-9);
        prop_assert!((d.amplitude_in_units(t0 * lambda) - 0.3).abs() < 1e-9);
    }
}
