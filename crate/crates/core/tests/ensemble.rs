use proptest::prelude::*;
use qdecay_core::ensemble::{build, build_fm, build_wm, build_wm_with, derive_realization_seed};
use qdecay_core::spectral_kernel::{correlation_at_zero, spectral_function};
use qdecay_core::{CutoffKind, EnsembleOptions, EntryDistribution, ModelKind, Realization64, SpectralParams64};

fn sharp(s: f64, eps: f64, b: usize) -> SpectralParams64 {
    SpectralParams64::from_bandwidth(s, eps, b, 1.0, CutoffKind::Sharp).unwrap()
}

#[test]
fn fm_couplings_sum_to_total_strength() {
    for s in [1.0, 1.5, 2.5] {
        for b in [100, 400, 1600] {
            let p = sharp(s, 0.8, b);
            let r = build_fm(&p, b, 0).unwrap();
            let total: f64 = r.star_couplings().unwrap().iter().map(|v| v * v).sum();
            let c0 = correlation_at_zero(&p).unwrap();
            assert!((total - c0).abs() / c0 < 2.0 / b as f64, "s = {s} b = {b}: {total} vs {c0}");
        }
    }
}

#[test]
fn wm_variance_profile_follows_spectral_function() {
    let (b, half) = (4usize, 6usize);
    let p = sharp(1.5, 0.9, b);
    let n_real = 10_000;
    let mut sums = vec![0.0f64; b + 1];
    let mut bern_sums = vec![0.0f64; b + 1];
    let bern = EnsembleOptions { distribution: EntryDistribution::Bernoulli, jitter: 0.0 };
    for k in 0..n_real {
        let seed = derive_realization_seed(7, k);
        let r = build_wm(&p, half, seed).unwrap();
        let rb = build_wm_with(&p, half, seed, &bern).unwrap();
        for d in 1..=b {
            sums[d] += r.coupling(0, d as i64).powi(2);
            bern_sums[d] += rb.coupling(-1, d as i64 - 1).powi(2);
        }
    }
    for d in 1..=b {
        let want = spectral_function(&p, d as f64).unwrap() / (2.0 * std::f64::consts::PI);
        let mean = sums[d] / n_real as f64;
        // relative standard error of a Gaussian second moment is (2/N)^(1/2)
        assert!((mean - want).abs() / want < 5.0 * (2.0 / n_real as f64).sqrt(), "d = {d}: {mean} vs {want}");
        assert!((bern_sums[d] / n_real as f64 - want).abs() / want < 1e-12);
    }
}

#[test]
fn wm_is_symmetric_with_zero_diagonal_coupling() {
    let p = sharp(0.5, 1.2, 6);
    let r = build_wm(&p, 20, 3).unwrap();
    let n = r.dim();
    let h = r.to_dense();
    for i in 0..n {
        assert_eq!(h[i * n + i], r.energies()[i]);
        for j in 0..n {
            assert_eq!(h[i * n + j], h[j * n + i]);
            if i.abs_diff(j) > 6 {
                assert_eq!(h[i * n + j], 0.0);
            }
        }
    }
}

#[test]
fn fm_perturbation_has_rank_two_structure() {
    let p = sharp(1.5, 1.44, 30);
    let r = build_fm(&p, 40, 0).unwrap();
    let n = r.dim();
    let h = r.to_dense();
    let z = r.pos(0);
    for i in 0..n {
        for j in 0..n {
            let v = h[i * n + j] - if i == j { r.energies()[i] } else { 0.0 };
            if i != z && j != z {
                assert_eq!(v, 0.0);
            }
        }
    }
    assert!(r.star_couplings().unwrap().iter().all(|&v| v >= 0.0));
}

#[test]
fn container_round_trip_is_exact() {
    for kind in [ModelKind::Friedrichs, ModelKind::Wigner] {
        let p = sharp(1.25, 1.14, 8);
        let opts = EnsembleOptions { distribution: EntryDistribution::Gaussian, jitter: 0.3 };
        let r = build(kind, &p, 20, 99, &opts).unwrap();
        let mut buf = Vec::new();
        r.write_container(&mut buf).unwrap();
        let back = Realization64::read_container(&mut buf.as_slice()).unwrap();
        assert_eq!(back.to_dense(), r.to_dense());
        assert_eq!(back.seed(), r.seed());
        assert_eq!(back.params(), r.params());
        let mut corrupt = buf.clone();
        corrupt[0] ^= 0xff;
        assert!(Realization64::read_container(&mut corrupt.as_slice()).is_err());
    }
}

#[test]
fn growing_keeps_existing_entries() {
    let p = sharp(1.5, 1.0, 5);
    let small = build_wm(&p, 10, 11).unwrap();
    let mut grown = small.clone();
    grown.grow_to(25);
    let direct = build_wm(&p, 25, 11).unwrap();
    assert_eq!(grown.to_dense(), direct.to_dense());
    for n in -10..=10i64 {
        for m in -10..=10i64 {
            assert_eq!(small.coupling(n, m), grown.coupling(n, m));
        }
    }
}

#[test]
fn seed_derivation_is_frozen() {
    assert_eq!(derive_realization_seed(0, 0), 0xe220a8397b1dcdaf);
    assert_eq!(derive_realization_seed(42, 0), 0xbdd732262feb6e95);
    assert_eq!(derive_realization_seed(42, 1), 0x28efe333b266f103);
    assert_eq!(derive_realization_seed(0xDEADBEEF, 7), 0xb30a4ccf430b1b5a);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn identical_inputs_give_identical_realizations(seed in any::<u64>(), b in 1usize..12, s in 0.2f64..2.5, wm in any::<bool>()) {
        let kind = if wm { ModelKind::Wigner } else { ModelKind::Friedrichs };
        let p = sharp(s, 1.0, b);
        let a = build(kind, &p, b + 5, seed, &EnsembleOptions::default()).unwrap();
        let c = build(kind, &p, b + 5, seed, &EnsembleOptions::default()).unwrap();
        prop_assert_eq!(a, c);
    }

    #[test]
    fn jitter_stays_within_half_spacing(seed in any::<u64>(), jitter in 0.0f64..0.99) {
        let p = sharp(1.0, 0.5, 4);
        let opts = EnsembleOptions { distribution: EntryDistribution::Gaussian, jitter };
        let r = build(ModelKind::Wigner, &p, 10, seed, &opts).unwrap();
        for n in -10..=10i64 {
            prop_assert!((r.energy(n) - n as f64).abs() <= jitter / 2.0 + 1e-15);
        }
        prop_assert_eq!(r.energy(0), 0.0);
    }
}
