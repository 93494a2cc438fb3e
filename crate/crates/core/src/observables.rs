//! Measured quantities of the spreading wavepacket: survival probability,
//! energy spread, quartiles of the occupation profile, and their ensemble
//! averages.
//!
//! The occupation `P_t(n)` is averaged over realizations first and the
//! quartiles are taken of the averaged profile; quartiles per realization,
//! then averaged, are available as [`QuartileMode::PerRealization`].
//! Reductions over realizations use binary-counter pairwise summation in
//! push order, so results do not depend on how work was scheduled.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ensemble::{ModelKind, Realization};
use crate::error::Result;
use crate::propagator::{propagate_with, PropagationOptions, WavepacketState};
use crate::scalar::{pairwise_sum, PairwiseAccumulator, Real};
use crate::spectra::realization_eigen;

/// Leak above which spread and quartiles are flagged as biased low.
pub const LEAK_FLAG: f64 = 1e-6;

/// Occupation probabilities on `[n_lo, n_lo + len)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile<T> {
    pub n_lo: i64,
    pub prob: Vec<T>,
}

impl<T: Real> Profile<T> {
    pub fn n_hi(&self) -> i64 {
        self.n_lo + self.prob.len() as i64 - 1
    }

    /// Elementwise sum over the union of both windows.
    pub fn add(&self, other: &Profile<T>) -> Profile<T> {
        if self.prob.is_empty() {
            return other.clone();
        }
        if other.prob.is_empty() {
            return self.clone();
        }
        let lo = self.n_lo.min(other.n_lo);
        let hi = self.n_hi().max(other.n_hi());
        let mut prob = vec![T::zero(); (hi - lo + 1) as usize];
        for p in [self, other] {
            let off = (p.n_lo - lo) as usize;
            for (k, &x) in p.prob.iter().enumerate() {
                prob[off + k] += x;
            }
        }
        Profile { n_lo: lo, prob }
    }

    pub fn scaled(&self, f: T) -> Profile<T> {
        Profile { n_lo: self.n_lo, prob: self.prob.iter().map(|&x| x * f).collect() }
    }

    /// `sum_n (E_n - E_0)^2 P(n)` with `E_n = n / rho`.
    pub fn second_moment(&self, rho: T) -> T {
        let terms: Vec<T> = self
            .prob
            .iter()
            .enumerate()
            .map(|(k, &p)| {
                let e = T::from_i64_lossy(self.n_lo + k as i64) / rho;
                e * e * p
            })
            .collect();
        pairwise_sum(&terms)
    }

    /// Quartiles `(E_25, E_50, E_75)` with `E_n = n / rho`.
    pub fn quartiles(&self, rho: T) -> [T; 3] {
        let energies: Vec<T> = (0..self.prob.len()).map(|k| T::from_i64_lossy(self.n_lo + k as i64) / rho).collect();
        quartiles(&energies, &self.prob)
    }
}

/// Energy at which the cumulative mass reaches each fraction in `qs`.
///
/// Level `n` owns the cell between the midpoints to its neighbours (the
/// outer cells are extended by half the adjacent gap) and its mass is
/// spread uniformly over the cell, so the cumulative distribution is
/// piecewise linear in energy and continuous in the masses. A point mass
/// thus has quartiles at a quarter spacing from its level. Masses are
/// normalized to their total; `energies` must be increasing.
pub fn percentiles<T: Real>(energies: &[T], prob: &[T], qs: &[T]) -> Vec<T> {
    let n = energies.len();
    let total = pairwise_sum(prob);
    if n == 0 || !(total > T::zero()) {
        return vec![T::nan(); qs.len()];
    }
    let two = T::lit(2.0);
    let mut edges = Vec::with_capacity(n + 1);
    if n == 1 {
        edges.push(energies[0] - T::lit(0.5));
        edges.push(energies[0] + T::lit(0.5));
    } else {
        edges.push(energies[0] - (energies[1] - energies[0]) / two);
        for k in 1..n {
            edges.push((energies[k - 1] + energies[k]) / two);
        }
        edges.push(energies[n - 1] + (energies[n - 1] - energies[n - 2]) / two);
    }
    let mut cdf = Vec::with_capacity(n + 1);
    let mut cum = T::zero();
    cdf.push(cum);
    for &p in prob {
        cum += p.max(T::zero());
        cdf.push(cum / total);
    }
    qs.iter()
        .map(|&q| {
            // first cell whose upper cumulative value reaches q
            let k = cdf[1..].partition_point(|&f| f < q).min(n - 1);
            let (f0, f1) = (cdf[k], cdf[k + 1]);
            if f1 > f0 {
                edges[k] + (edges[k + 1] - edges[k]) * ((q - f0) / (f1 - f0)).max(T::zero()).min(T::one())
            } else {
                edges[k]
            }
        })
        .collect()
}

fn quartiles<T: Real>(energies: &[T], prob: &[T]) -> [T; 3] {
    let v = percentiles(energies, prob, &[T::lit(0.25), T::lit(0.5), T::lit(0.75)]);
    [v[0], v[1], v[2]]
}

/// Everything one realization contributes to an ensemble average.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationTrack<T> {
    pub seed: u64,
    pub survival: Vec<T>,
    pub profiles: Vec<Profile<T>>,
    /// Quartiles of this realization's own profile (actual energies).
    pub quartiles: Vec<[T; 3]>,
    pub norm_leak: Vec<T>,
}

impl<T: Real> RealizationTrack<T> {
    pub fn from_states(states: &[WavepacketState<T>], seed: u64) -> Self {
        let mut track = Self { seed, survival: Vec::new(), profiles: Vec::new(), quartiles: Vec::new(), norm_leak: Vec::new() };
        for s in states {
            track.record(s.n_lo, &s.re, &s.im, &s.energies, s.norm_leak);
        }
        track
    }

    fn record(&mut self, n_lo: i64, re: &[T], im: &[T], energies: &[T], leak: T) {
        let prob: Vec<T> = re.iter().zip(im).map(|(a, b)| *a * *a + *b * *b).collect();
        let k0 = (-n_lo) as usize;
        self.survival.push(prob[k0]);
        let e0 = energies[k0];
        let shifted: Vec<T> = energies.iter().map(|&e| e - e0).collect();
        self.quartiles.push(quartiles(&shifted, &prob));
        self.profiles.push(Profile { n_lo, prob });
        self.norm_leak.push(leak);
    }
}

/// Propagates one realization over `t_grid` and records its track.
pub fn record_propagation<T: Real>(
    realization: &Realization<T>,
    t_grid: &[T],
    opts: &PropagationOptions<T>,
) -> Result<RealizationTrack<T>> {
    let mut track = RealizationTrack {
        seed: realization.seed(),
        survival: Vec::with_capacity(t_grid.len()),
        profiles: Vec::with_capacity(t_grid.len()),
        quartiles: Vec::with_capacity(t_grid.len()),
        norm_leak: Vec::with_capacity(t_grid.len()),
    };
    propagate_with(realization, t_grid, opts, |p| {
        let (re, im) = p.amplitudes();
        track.record(p.window().0, re, im, p.window_energies(), p.norm_leak());
        Ok(())
    })?;
    Ok(track)
}

/// Track of a finite (closed) realization from its full eigen-decomposition:
/// `c_n(t) = sum_nu <n|nu> <nu|0> e^{-i E_nu t}`.
pub fn record_eigen<T: Real>(realization: &Realization<T>, t_grid: &[T], profiles: bool) -> Result<RealizationTrack<T>> {
    let pairs = realization_eigen(realization, profiles)?;
    let n = realization.dim();
    let z = realization.pos(0);
    let h = realization.half_size() as i64;
    let mut track = RealizationTrack {
        seed: realization.seed(),
        survival: Vec::new(),
        profiles: Vec::new(),
        quartiles: Vec::new(),
        norm_leak: Vec::new(),
    };
    for &t in t_grid {
        let (mut cr, mut ci) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for (&e, &w) in pairs.values.iter().zip(&pairs.weights) {
            let (s, c) = (e * t).sin_cos();
            cr.push(w * c);
            ci.push(-w * s);
        }
        if let Some(v) = &pairs.vectors {
            // amplitude weights a_nu = <nu|0> e^{-iE t}
            let mut ar = vec![T::zero(); n];
            let mut ai = vec![T::zero(); n];
            for nu in 0..n {
                let (s, c) = (pairs.values[nu] * t).sin_cos();
                let overlap = v[nu * n + z];
                ar[nu] = overlap * c;
                ai[nu] = -overlap * s;
            }
            let mut re = vec![T::zero(); n];
            let mut im = vec![T::zero(); n];
            for nu in 0..n {
                let col = &v[nu * n..(nu + 1) * n];
                let (a, b) = (ar[nu], ai[nu]);
                for ((r, i), &x) in re.iter_mut().zip(im.iter_mut()).zip(col) {
                    *r += x * a;
                    *i += x * b;
                }
            }
            track.record(-h, &re, &im, realization.energies(), T::zero());
        } else {
            let (a, b) = (pairwise_sum(&cr), pairwise_sum(&ci));
            track.survival.push(a * a + b * b);
            track.norm_leak.push(T::zero());
        }
    }
    Ok(track)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuartileMode {
    /// Quartiles of the realization-averaged profile.
    #[default]
    AveragedProfile,
    /// Mean of per-realization quartiles.
    PerRealization,
}

/// Averaged tracks on a common time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSeries<T> {
    pub t: Vec<T>,
    pub p: Vec<T>,
    pub p_stderr: Vec<T>,
    pub spread: Vec<T>,
    pub e25: Vec<T>,
    pub e50: Vec<T>,
    pub e75: Vec<T>,
    pub core_width: Vec<T>,
    /// Largest leak over realizations at each time.
    pub max_norm_leak: Vec<T>,
    pub n_realizations: usize,
    pub kind: Option<ModelKind>,
    pub mode: QuartileMode,
}

impl<T: Real> EnsembleSeries<T> {
    /// True where the leak makes spread and quartiles biased low.
    pub fn biased(&self, k: usize) -> bool {
        self.max_norm_leak[k] > T::lit(LEAK_FLAG)
    }

    /// CSV `t,P,P_stderr,dE_sprd,E25,E50,E75,dE_core` after `#` header lines.
    pub fn write_csv<W: Write>(&self, w: &mut W, header: &[String]) -> Result<()> {
        for line in header {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "# n_realizations = {}", self.n_realizations)?;
        let biased: Vec<String> = (0..self.t.len()).filter(|&k| self.biased(k)).map(|k| format!("{:e}", self.t[k].as_f64())).collect();
        if !biased.is_empty() {
            writeln!(w, "# biased_low_at_t = {}", biased.join(" "))?;
        }
        writeln!(w, "t,P,P_stderr,dE_sprd,E25,E50,E75,dE_core")?;
        for k in 0..self.t.len() {
            let row = [
                self.t[k],
                self.p[k],
                self.p_stderr[k],
                self.spread[k],
                self.e25[k],
                self.e50[k],
                self.e75[k],
                self.core_width[k],
            ];
            let cells: Vec<String> = row.iter().map(|x| format!("{:e}", x.as_f64())).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Order-fixed reduction of realization tracks.
pub struct EnsembleAccumulator<T> {
    t: Vec<T>,
    rho: T,
    kind: Option<ModelKind>,
    survival: Vec<Vec<T>>,
    // binary counter of summed profile sequences, one entry per level
    levels: Vec<Option<Vec<Profile<T>>>>,
    quartile_sums: PairwiseAccumulator<T>,
    max_leak: Vec<T>,
    with_profiles: bool,
}

impl<T: Real> EnsembleAccumulator<T> {
    pub fn new(t_grid: &[T], rho: T, kind: Option<ModelKind>) -> Self {
        Self {
            t: t_grid.to_vec(),
            rho,
            kind,
            survival: Vec::new(),
            levels: Vec::new(),
            quartile_sums: PairwiseAccumulator::new(3 * t_grid.len()),
            max_leak: vec![T::zero(); t_grid.len()],
            with_profiles: true,
        }
    }

    pub fn count(&self) -> usize {
        self.survival.len()
    }

    pub fn push(&mut self, track: RealizationTrack<T>) {
        assert_eq!(track.survival.len(), self.t.len(), "track length differs from the time grid");
        for (m, &l) in self.max_leak.iter_mut().zip(&track.norm_leak) {
            if l > *m {
                *m = l;
            }
        }
        self.survival.push(track.survival);
        if track.profiles.len() != self.t.len() {
            self.with_profiles = false;
            return;
        }
        let flat: Vec<T> = track.quartiles.iter().flat_map(|q| q.iter().copied()).collect();
        self.quartile_sums.push(flat);
        let mut carry = track.profiles;
        let mut level = 0;
        loop {
            if level == self.levels.len() {
                self.levels.push(None);
            }
            match self.levels[level].take() {
                None => {
                    self.levels[level] = Some(carry);
                    break;
                }
                Some(prev) => {
                    carry = prev.iter().zip(&carry).map(|(a, b)| a.add(b)).collect();
                    level += 1;
                }
            }
        }
    }

    /// Averages; `P_stderr` from `bootstrap` resamples of the realizations
    /// drawn with `bootstrap_seed` (zero with a single realization).
    pub fn finish(&self, mode: QuartileMode, bootstrap: usize, bootstrap_seed: u64) -> EnsembleSeries<T> {
        let nt = self.t.len();
        let nr = self.survival.len();
        let count = T::from_usize_lossy(nr.max(1));
        let mut p = vec![T::zero(); nt];
        let mut p_stderr = vec![T::zero(); nt];
        let mut rng = ChaCha8Rng::seed_from_u64(bootstrap_seed);
        let draws: Vec<Vec<usize>> =
            if nr > 1 { (0..bootstrap).map(|_| (0..nr).map(|_| rng.random_range(0..nr)).collect()).collect() } else { Vec::new() };
        for k in 0..nt {
            let column: Vec<T> = self.survival.iter().map(|s| s[k]).collect();
            p[k] = pairwise_sum(&column) / count;
            if !draws.is_empty() {
                let means: Vec<T> = draws
                    .iter()
                    .map(|d| {
                        let picked: Vec<T> = d.iter().map(|&i| column[i]).collect();
                        pairwise_sum(&picked) / count
                    })
                    .collect();
                let mu = pairwise_sum(&means) / T::from_usize_lossy(means.len());
                let dev: Vec<T> = means.iter().map(|&m| (m - mu) * (m - mu)).collect();
                p_stderr[k] = (pairwise_sum(&dev) / T::from_usize_lossy(means.len() - 1).max(T::one())).sqrt();
            }
        }

        let nan = vec![T::nan(); nt];
        let (mut spread, mut e25, mut e50, mut e75) = (nan.clone(), nan.clone(), nan.clone(), nan.clone());
        if self.with_profiles && nr > 0 {
            let mut total: Option<Vec<Profile<T>>> = None;
            for lvl in self.levels.iter().flatten() {
                total = Some(match total {
                    None => lvl.clone(),
                    Some(acc) => acc.iter().zip(lvl).map(|(a, b)| a.add(b)).collect(),
                });
            }
            let averaged: Vec<Profile<T>> = total.unwrap().iter().map(|pr| pr.scaled(T::one() / count)).collect();
            let qsum = self.quartile_sums.total();
            for k in 0..nt {
                spread[k] = averaged[k].second_moment(self.rho).max(T::zero()).sqrt();
                let q = match mode {
                    QuartileMode::AveragedProfile => averaged[k].quartiles(self.rho),
                    QuartileMode::PerRealization => [qsum[3 * k] / count, qsum[3 * k + 1] / count, qsum[3 * k + 2] / count],
                };
                e25[k] = q[0];
                e50[k] = q[1];
                e75[k] = q[2];
            }
        }
        let core_width = e25.iter().zip(&e75).map(|(a, b)| *b - *a).collect();
        EnsembleSeries {
            t: self.t.clone(),
            p,
            p_stderr,
            spread,
            e25,
            e50,
            e75,
            core_width,
            max_norm_leak: self.max_leak.clone(),
            n_realizations: nr,
            kind: self.kind,
            mode,
        }
    }
}

fn series_from_states<T: Real>(runs: &[Vec<WavepacketState<T>>], rho: T) -> EnsembleSeries<T> {
    let t: Vec<T> = runs.first().map(|r| r.iter().map(|s| s.time).collect()).unwrap_or_default();
    let mut acc = EnsembleAccumulator::new(&t, rho, None);
    for (i, r) in runs.iter().enumerate() {
        acc.push(RealizationTrack::from_states(r, i as u64));
    }
    acc.finish(QuartileMode::AveragedProfile, 200, 0)
}

/// Mean survival `P(t) = mean |c_0(t)|^2` with its bootstrap error, from
/// snapshot sequences (one per realization).
pub fn survival_probability<T: Real>(runs: &[Vec<WavepacketState<T>>], rho: T) -> (Vec<T>, Vec<T>) {
    let s = series_from_states(runs, rho);
    (s.p, s.p_stderr)
}

/// `dE_sprd(t) = [sum_n (E_n - E_0)^2 P_t(n)]^(1/2)` of the averaged profile.
pub fn spread<T: Real>(runs: &[Vec<WavepacketState<T>>], rho: T) -> Vec<T> {
    series_from_states(runs, rho).spread
}

/// `dE_core(t) = E_75 - E_25` of the averaged profile.
pub fn core_width<T: Real>(runs: &[Vec<WavepacketState<T>>], rho: T) -> Vec<T> {
    series_from_states(runs, rho).core_width
}
