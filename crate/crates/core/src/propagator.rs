//! Exact time evolution of `c_n(t)` from `c_n(0) = delta_{n0}` on a window of
//! levels that expands as the wavepacket spreads, and the reduction of the
//! Friedrichs model to a single memory equation for `c_0(t)`.
//!
//! The integrator is a fixed-step fourth-order Runge-Kutta scheme in the
//! interaction picture (Lawson): the diagonal `E_n` enter only through exact
//! phases, so the step is limited by the coupling and the cutoff, not by the
//! window's energy range.

use crate::ensemble::{Couplings, ModelKind, Realization};
use crate::error::{Error, Result};
use crate::scalar::{pairwise_sum, Real};
use crate::spectral_kernel::{correlation_at_zero, correlation_function, wigner_time, CutoffKind, SpectralParams};

/// What lies beyond the current realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// The realization stands for an unbounded system: it is grown on demand
    /// up to `max_half_size`, beyond which propagation fails with
    /// [`Error::WindowOverflow`].
    Open { max_half_size: usize },
    /// The realization is the whole (finite) system.
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationOptions<T> {
    /// Largest step; each grid interval is split into equal steps no larger.
    pub max_step: T,
    /// Unitarity budget `delta_norm` on `|1 - sum |c_n|^2|`.
    pub norm_budget: T,
    /// Edge-region probability `delta_edge` that triggers window growth.
    pub edge_threshold: T,
    pub boundary: Boundary,
}

impl<T: Real> PropagationOptions<T> {
    /// Step `min(t_c, t0) / 20` (or `t_c / 20` where no Wigner time exists),
    /// `delta_norm = 1e-6`, `delta_edge = 1e-12`, open boundary up to
    /// `2^20` levels per side. `t0` is floored at the short-time scale
    /// `C(0)^{-1/2}`: below `t_c` the decay is quadratic and `t0` loses its
    /// meaning.
    pub fn for_params(params: &SpectralParams<T>) -> Self {
        let tc = params.correlation_time();
        let zeno = correlation_at_zero(params).map_or(T::zero(), |c0| T::one() / c0.sqrt());
        let scale = match wigner_time(params) {
            Ok(ts) => tc.min(ts.t0.max(zeno)),
            Err(_) => tc,
        };
        Self {
            max_step: scale / T::lit(20.0),
            norm_budget: T::lit(1e-6),
            edge_threshold: T::lit(1e-12),
            boundary: Boundary::Open { max_half_size: 1 << 20 },
        }
    }

    /// [`for_params`](Self::for_params) with the step halved until the
    /// predicted norm defect at `t_end` is a tenth of the budget. The
    /// prediction, `4e-4 (h w_c)^4 h^2 C(0)` per step, is an empirical fit
    /// to Wigner-model runs over `0.5 <= s <= 1.5` (within a factor 3).
    pub fn for_run(params: &SpectralParams<T>, t_end: T) -> Self {
        let mut opts = Self::for_params(params);
        let c0 = correlation_at_zero(params).unwrap_or(T::zero());
        let wc = params.omega_c;
        if !(c0 > T::zero() && wc.is_finite() && t_end > T::zero()) {
            return opts;
        }
        let target = opts.norm_budget / T::lit(10.0);
        for _ in 0..8 {
            let h = opts.max_step;
            let hw = h * wc;
            let predicted = T::lit(4e-4) * hw * hw * hw * hw * h * h * c0 * (t_end / h).ceil();
            if predicted <= target {
                break;
            }
            opts.max_step = h / T::lit(2.0);
        }
        opts
    }

    pub fn closed(mut self) -> Self {
        self.boundary = Boundary::Closed;
        self
    }

    pub fn with_max_step(mut self, h: T) -> Self {
        self.max_step = h;
        self
    }
}

/// Amplitudes on the window `[n_lo, n_lo + len)` at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct WavepacketState<T> {
    pub time: T,
    pub n_lo: i64,
    pub re: Vec<T>,
    pub im: Vec<T>,
    /// Unperturbed energies `E_n` of the window levels.
    pub energies: Vec<T>,
    /// Estimated probability lost through the window edge so far.
    pub norm_leak: T,
}

impl<T: Real> WavepacketState<T> {
    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn n_hi(&self) -> i64 {
        self.n_lo + self.re.len() as i64 - 1
    }

    pub fn probability(&self, n: i64) -> T {
        let k = n - self.n_lo;
        if k < 0 || k as usize >= self.re.len() {
            return T::zero();
        }
        let k = k as usize;
        self.re[k] * self.re[k] + self.im[k] * self.im[k]
    }

    /// `P(t) = |c_0(t)|^2`.
    pub fn survival(&self) -> T {
        self.probability(0)
    }

    pub fn norm(&self) -> T {
        let p: Vec<T> = self.re.iter().zip(&self.im).map(|(a, b)| *a * *a + *b * *b).collect();
        pairwise_sum(&p)
    }
}

enum Coupling<T> {
    /// `V_{n,0}` per window cell (window is the coupled set).
    Star(Vec<T>),
    /// Row `i` holds `V_{n_i, n_i + d}` for `d = -b..=b` (zero outside the
    /// matrix).
    Band(Vec<T>),
}

/// Stateful propagator for one realization.
pub struct Propagator<T: Real> {
    realization: Realization<T>,
    opts: PropagationOptions<T>,
    b: usize,
    time: T,
    // window [lo, lo + len); amplitude buffers are padded by b zeros per side
    lo: i64,
    len: usize,
    re: Vec<T>,
    im: Vec<T>,
    energies: Vec<T>,
    coupling: Coupling<T>,
    phase_step: T,
    ph_re: Vec<T>,
    ph_im: Vec<T>,
    scratch: Scratch<T>,
    norm_leak: T,
    steps: u64,
}

impl<T: Real> Propagator<T> {
    pub fn new(realization: Realization<T>, opts: PropagationOptions<T>) -> Result<Self> {
        if !(opts.max_step > T::zero()) || !opts.max_step.is_finite() {
            return Err(Error::InvalidParams(format!("max_step must be finite and > 0 (got {})", opts.max_step)));
        }
        if !(opts.norm_budget > T::zero()) || !(opts.edge_threshold > T::zero()) {
            return Err(Error::InvalidParams("norm budget and edge threshold must be > 0".into()));
        }
        let mut realization = realization;
        let b = realization.bandwidth();
        // Wigner windows start with two bands of empty margin so that the
        // first steps cannot push amplitude past the edge
        let reach = match realization.kind() {
            ModelKind::Friedrichs => b,
            ModelKind::Wigner => 3 * b,
        };
        if let (ModelKind::Wigner, Boundary::Open { max_half_size }) = (realization.kind(), opts.boundary) {
            realization.grow_to(reach.min(max_half_size));
        }
        let h = realization.half_size() as i64;
        let (lo, hi) = (-(reach as i64).min(h), (reach as i64).min(h));
        let mut p = Self {
            realization,
            opts,
            b,
            time: T::zero(),
            lo,
            len: 0,
            re: Vec::new(),
            im: Vec::new(),
            energies: Vec::new(),
            coupling: Coupling::Star(Vec::new()),
            phase_step: T::nan(),
            ph_re: Vec::new(),
            ph_im: Vec::new(),
            scratch: Scratch::default(),
            norm_leak: T::zero(),
            steps: 0,
        };
        p.set_window(lo, hi, true);
        Ok(p)
    }

    pub fn time(&self) -> T {
        self.time
    }

    pub fn realization(&self) -> &Realization<T> {
        &self.realization
    }

    pub fn into_realization(self) -> Realization<T> {
        self.realization
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps
    }

    /// Window `[n_lo, n_hi]`.
    pub fn window(&self) -> (i64, i64) {
        (self.lo, self.lo + self.len as i64 - 1)
    }

    /// Real and imaginary parts over the window.
    pub fn amplitudes(&self) -> (&[T], &[T]) {
        (&self.re[self.b..self.b + self.len], &self.im[self.b..self.b + self.len])
    }

    pub fn window_energies(&self) -> &[T] {
        &self.energies
    }

    pub fn norm_leak(&self) -> T {
        self.norm_leak
    }

    pub fn survival(&self) -> T {
        let k = (self.b as i64 - self.lo) as usize;
        self.re[k] * self.re[k] + self.im[k] * self.im[k]
    }

    pub fn norm(&self) -> T {
        let (re, im) = self.amplitudes();
        let p: Vec<T> = re.iter().zip(im).map(|(a, b)| *a * *a + *b * *b).collect();
        pairwise_sum(&p)
    }

    pub fn snapshot(&self) -> WavepacketState<T> {
        let (re, im) = self.amplitudes();
        WavepacketState {
            time: self.time,
            n_lo: self.lo,
            re: re.to_vec(),
            im: im.to_vec(),
            energies: self.energies.clone(),
            norm_leak: self.norm_leak,
        }
    }

    /// Rebuilds buffers for the window `[lo, hi]`, keeping amplitudes.
    fn set_window(&mut self, lo: i64, hi: i64, initial: bool) {
        let b = self.b;
        let len = (hi - lo + 1) as usize;
        let mut re = vec![T::zero(); len + 2 * b];
        let mut im = vec![T::zero(); len + 2 * b];
        if initial {
            re[b + (-lo) as usize] = T::one();
        } else {
            let shift = (self.lo - lo) as usize;
            re[b + shift..b + shift + self.len].copy_from_slice(&self.re[b..b + self.len]);
            im[b + shift..b + shift + self.len].copy_from_slice(&self.im[b..b + self.len]);
        }
        let r = &self.realization;
        self.energies = (lo..=hi).map(|n| r.energy(n)).collect();
        self.coupling = match r.couplings() {
            Couplings::Star(_) => Coupling::Star((lo..=hi).map(|n| r.coupling(n, 0)).collect()),
            Couplings::Band(_) => {
                let w = 2 * b + 1;
                let mut rows = vec![T::zero(); len * w];
                for (i, n) in (lo..=hi).enumerate() {
                    for k in 0..w {
                        let m = n + k as i64 - b as i64;
                        rows[i * w + k] = r.coupling(n, m);
                    }
                }
                Coupling::Band(rows)
            }
        };
        self.lo = lo;
        self.len = len;
        self.re = re;
        self.im = im;
        self.phase_step = T::nan();
        self.scratch = Scratch::new(len + 2 * b);
    }

    fn set_phases(&mut self, h: T) {
        if self.phase_step == h {
            return;
        }
        let half = h / T::lit(2.0);
        self.ph_re = self.energies.iter().map(|&e| (e * half).cos()).collect();
        self.ph_im = self.energies.iter().map(|&e| -(e * half).sin()).collect();
        self.phase_step = h;
    }

    /// Advances (or, for `t` below the current time, reverses) to `t`.
    pub fn advance_to(&mut self, t: T) -> Result<()> {
        let span = t - self.time;
        if span == T::zero() {
            return Ok(());
        }
        let ratio = (span.abs() / self.opts.max_step).to_f64().unwrap_or(f64::INFINITY);
        let nsteps = ((ratio - 1e-9).ceil().max(1.0)) as u64;
        let h = span / T::from_usize_lossy(nsteps as usize);
        let start = self.time;
        for k in 1..=nsteps {
            self.maybe_expand()?;
            self.set_phases(h);
            self.step(h);
            self.steps += 1;
            self.time = if k == nsteps { t } else { start + h * T::from_usize_lossy(k as usize) };
            if k % 32 == 0 || k == nsteps {
                self.check_norm()?;
            }
        }
        Ok(())
    }

    fn check_norm(&self) -> Result<()> {
        let defect = (T::one() - self.norm()).abs();
        if defect > self.opts.norm_budget {
            return Err(Error::BudgetExceeded {
                defect: defect.as_f64(),
                budget: self.opts.norm_budget.as_f64(),
                time: self.time.as_f64(),
            });
        }
        Ok(())
    }

    fn edge_probabilities(&self) -> (T, T) {
        let (re, im) = self.amplitudes();
        let k = self.b.min(self.len);
        let side = |range: std::ops::Range<usize>| {
            let mut acc = T::zero();
            for i in range {
                acc += re[i] * re[i] + im[i] * im[i];
            }
            acc
        };
        (side(0..k), side(self.len - k..self.len))
    }

    fn maybe_expand(&mut self) -> Result<()> {
        if self.realization.kind() == ModelKind::Friedrichs {
            return Ok(());
        }
        let (lo_p, hi_p) = self.edge_probabilities();
        let thr = self.opts.edge_threshold;
        let (cur_lo, cur_hi) = self.window();
        let half = self.realization.half_size() as i64;
        let b = self.b as i64;
        let mut new_lo = cur_lo;
        let mut new_hi = cur_hi;
        if lo_p > thr {
            new_lo = cur_lo - b;
        }
        if hi_p > thr {
            new_hi = cur_hi + b;
        }
        if new_lo == cur_lo && new_hi == cur_hi {
            if let Boundary::Open { .. } = self.opts.boundary {
                // probability flux estimate through the window edge
                let rate = self.phase_step.abs() / self.realization.params().correlation_time();
                self.norm_leak += (lo_p + hi_p) * rate.min(T::one());
            }
            return Ok(());
        }
        let need = (-new_lo).max(new_hi);
        match self.opts.boundary {
            Boundary::Closed => {
                new_lo = new_lo.max(-half);
                new_hi = new_hi.min(half);
                if new_lo == cur_lo && new_hi == cur_hi {
                    return Ok(());
                }
            }
            Boundary::Open { max_half_size } => {
                if need as usize > max_half_size {
                    return Err(Error::WindowOverflow { half_size: max_half_size, time: self.time.as_f64() });
                }
                if need > half {
                    let target = (need as usize).max(half as usize * 3 / 2).min(max_half_size);
                    self.realization.grow_to(target);
                }
            }
        }
        self.set_window(new_lo, new_hi, false);
        Ok(())
    }

    /// `out = -i V x` on the padded buffers.
    fn apply(coupling: &Coupling<T>, b: usize, len: usize, xr: &[T], xi: &[T], outr: &mut [T], outi: &mut [T]) {
        match coupling {
            Coupling::Star(v) => {
                let z = b + v.len() / 2;
                let mut acc_r = Vec::with_capacity(len);
                let mut acc_i = Vec::with_capacity(len);
                for i in 0..len {
                    acc_r.push(v[i] * xr[b + i]);
                    acc_i.push(v[i] * xi[b + i]);
                }
                let (x0r, x0i) = (xr[z], xi[z]);
                for i in 0..len {
                    outr[b + i] = v[i] * x0i;
                    outi[b + i] = -v[i] * x0r;
                }
                outr[z] = pairwise_sum(&acc_i);
                outi[z] = -pairwise_sum(&acc_r);
            }
            Coupling::Band(rows) => {
                let w = 2 * b + 1;
                for i in 0..len {
                    let row = &rows[i * w..(i + 1) * w];
                    let sr = &xr[i..i + w];
                    let si = &xi[i..i + w];
                    let mut yr = T::zero();
                    let mut yi = T::zero();
                    for ((&a, &p), &q) in row.iter().zip(sr).zip(si) {
                        yr += a * p;
                        yi += a * q;
                    }
                    outr[b + i] = yi;
                    outi[b + i] = -yr;
                }
            }
        }
    }

    fn step(&mut self, h: T) {
        let b = self.b;
        let len = self.len;
        let half = h / T::lit(2.0);
        let sixth = h / T::lit(6.0);
        let third = h / T::lit(3.0);
        let (pr, pi) = (&self.ph_re, &self.ph_im);
        let rot = |xr: T, xi: T, k: usize| (pr[k] * xr - pi[k] * xi, pr[k] * xi + pi[k] * xr);
        let s = &mut self.scratch;
        let cp = &self.coupling;

        // k1 = N(u)
        Self::apply(cp, b, len, &self.re, &self.im, &mut s.k1r, &mut s.k1i);
        // k2 = N(phi (u + h/2 k1)); w = phi u
        for i in 0..len {
            let j = b + i;
            (s.tr[j], s.ti[j]) = rot(self.re[j] + half * s.k1r[j], self.im[j] + half * s.k1i[j], i);
            (s.wr[j], s.wi[j]) = rot(self.re[j], self.im[j], i);
        }
        Self::apply(cp, b, len, &s.tr, &s.ti, &mut s.k2r, &mut s.k2i);
        // k3 = N(w + h/2 k2)
        for i in 0..len {
            let j = b + i;
            s.tr[j] = s.wr[j] + half * s.k2r[j];
            s.ti[j] = s.wi[j] + half * s.k2i[j];
        }
        Self::apply(cp, b, len, &s.tr, &s.ti, &mut s.k3r, &mut s.k3i);
        // k4 = N(phi (w + h k3))
        for i in 0..len {
            let j = b + i;
            (s.tr[j], s.ti[j]) = rot(s.wr[j] + h * s.k3r[j], s.wi[j] + h * s.k3i[j], i);
        }
        Self::apply(cp, b, len, &s.tr, &s.ti, &mut s.k4r, &mut s.k4i);
        // u <- phi (phi (u + h/6 k1) + h/3 (k2 + k3)) + h/6 k4
        for i in 0..len {
            let j = b + i;
            let (r, m) = rot(self.re[j] + sixth * s.k1r[j], self.im[j] + sixth * s.k1i[j], i);
            let (r, m) = rot(r + third * (s.k2r[j] + s.k3r[j]), m + third * (s.k2i[j] + s.k3i[j]), i);
            self.re[j] = r + sixth * s.k4r[j];
            self.im[j] = m + sixth * s.k4i[j];
        }
    }
}

#[derive(Default)]
struct Scratch<T> {
    k1r: Vec<T>,
    k1i: Vec<T>,
    k2r: Vec<T>,
    k2i: Vec<T>,
    k3r: Vec<T>,
    k3i: Vec<T>,
    k4r: Vec<T>,
    k4i: Vec<T>,
    tr: Vec<T>,
    ti: Vec<T>,
    wr: Vec<T>,
    wi: Vec<T>,
}

impl<T: Real> Scratch<T> {
    fn new(n: usize) -> Self {
        let z = || vec![T::zero(); n];
        Self {
            k1r: z(),
            k1i: z(),
            k2r: z(),
            k2i: z(),
            k3r: z(),
            k3i: z(),
            k4r: z(),
            k4i: z(),
            tr: z(),
            ti: z(),
            wr: z(),
            wi: z(),
        }
    }
}

/// Snapshots of one realization at every time in `t_grid` (which must start
/// at 0 and be ordered; decreasing stretches run backwards in time).
pub fn propagate<T: Real>(
    realization: &Realization<T>,
    t_grid: &[T],
    opts: &PropagationOptions<T>,
) -> Result<Vec<WavepacketState<T>>> {
    let mut out = Vec::with_capacity(t_grid.len());
    propagate_with(realization, t_grid, opts, |p| {
        out.push(p.snapshot());
        Ok(())
    })?;
    Ok(out)
}

/// Streaming variant: `visit` sees the propagator at every grid time.
pub fn propagate_with<T, F>(realization: &Realization<T>, t_grid: &[T], opts: &PropagationOptions<T>, mut visit: F) -> Result<()>
where
    T: Real,
    F: FnMut(&Propagator<T>) -> Result<()>,
{
    if t_grid.first().is_some_and(|&t| t != T::zero()) {
        return Err(Error::InvalidParams("time grid must start at 0".into()));
    }
    let mut p = Propagator::new(realization.clone(), *opts)?;
    for &t in t_grid {
        p.advance_to(t)?;
        visit(&p)?;
    }
    Ok(())
}

/// Amplitude track of the Friedrichs memory equation on its own uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FmTrack<T> {
    pub step: T,
    pub c: Vec<T>,
    pub c_dot: Vec<T>,
    pub c_ddot: Vec<T>,
}

impl<T: Real> FmTrack<T> {
    pub fn time(&self, k: usize) -> T {
        self.step * T::from_usize_lossy(k)
    }

    /// `(c, c_dot, c_ddot)` at `t` by cubic Hermite interpolation of `c`
    /// and linear interpolation of the derivatives.
    pub fn at(&self, t: T) -> (T, T, T) {
        let n = self.c.len();
        let x = (t / self.step).max(T::zero());
        let k = x.floor().to_usize().unwrap_or(n).min(n.saturating_sub(2));
        let u = x - T::from_usize_lossy(k);
        let h = self.step;
        let (c0, c1) = (self.c[k], self.c[k + 1]);
        let (d0, d1) = (self.c_dot[k], self.c_dot[k + 1]);
        let u2 = u * u;
        let u3 = u2 * u;
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let c = (two * u3 - three * u2 + T::one()) * c0
            + (u3 - two * u2 + u) * h * d0
            + (-two * u3 + three * u2) * c1
            + (u3 - u2) * h * d1;
        let cd = d0 + u * (d1 - d0);
        let cdd = self.c_ddot[k] + u * (self.c_ddot[k + 1] - self.c_ddot[k]);
        (c, cd, cdd)
    }

    pub fn survival(&self, t: T) -> T {
        let c = self.at(t).0;
        c * c
    }
}

/// Solves `c'(t) = -int_0^t K(t - tau) c(tau) dtau`, `c(0) = 1`, with the
/// trapezoidal rule in both the memory integral and time, given kernel
/// samples `kernel[k] = K(k h)` for `k = 0..=n`.
pub fn solve_memory_equation<T: Real>(kernel: &[T], h: T) -> FmTrack<T> {
    let n = kernel.len();
    // reversed kernel: the memory sums become contiguous dot products
    let rev: Vec<T> = kernel.iter().rev().copied().collect();
    let mut c = vec![T::zero(); n];
    let mut integral = vec![T::zero(); n];
    let half = h / T::lit(2.0);
    c[0] = T::one();
    let denom = T::one() + h * h * kernel[0] / T::lit(4.0);
    for k in 0..n.saturating_sub(1) {
        // s = h [K_{k+1} c_0 / 2 + sum_{j=1}^{k} K_{k+1-j} c_j]
        let acc = half * kernel[k + 1] * c[0] + h * dot(&c[1..=k], &rev[n - 1 - k..n - 1]);
        c[k + 1] = (c[k] - half * (integral[k] + acc)) / denom;
        integral[k + 1] = acc + half * kernel[0] * c[k + 1];
    }
    let c_dot: Vec<T> = integral.iter().map(|&x| -x).collect();
    // c'' = -[K(t) c(0) + int_0^t K(t - tau) c'(tau) dtau]
    let mut c_ddot = vec![T::zero(); n];
    for k in 0..n {
        let mut acc = T::zero();
        if k > 0 {
            acc = half * (kernel[k] * c_dot[0] + kernel[0] * c_dot[k]);
            if k > 1 {
                acc += h * dot(&c_dot[1..k], &rev[n - k..n - 1]);
            }
        }
        c_ddot[k] = -(kernel[k] * c[0] + acc);
    }
    FmTrack { step: h, c, c_dot, c_ddot }
}

// Dot product with four independent partial sums.
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [T::zero(); 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = T::zero();
    for (x, y) in ra.iter().zip(rb) {
        tail += *x * *y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Friedrichs-model amplitude from the continuum memory kernel
/// `C(t)` of `params`, up to `t_max` with step `h`, which must not exceed
/// `t_c / 10`. `h` defaults to `min(t_c / 10, t0 / 50)`, or `t_c / 25` with
/// an exponential cutoff: the trapezoidal kernel sum aliases the spectrum at
/// `2 pi / h`, which only a sharp band suppresses exactly.
pub fn fm_reduced_solve<T: Real>(params: &SpectralParams<T>, t_max: T, step: Option<T>) -> Result<FmTrack<T>> {
    let tc = params.correlation_time();
    if !(tc > T::zero()) {
        return Err(Error::InvalidParams("the memory equation needs a finite cutoff".into()));
    }
    let limit = tc / T::lit(10.0);
    let h = match step {
        Some(h) => h,
        None => {
            let base = match params.cutoff {
                CutoffKind::Sharp => limit,
                CutoffKind::Exponential => tc / T::lit(25.0),
            };
            match wigner_time(params) {
                Ok(ts) => base.min(ts.t0 / T::lit(50.0)),
                Err(_) => base,
            }
        }
    };
    if !(h > T::zero()) {
        return Err(Error::InvalidParams(format!("step must be > 0 (got {h})")));
    }
    if h > limit * (T::one() + T::epsilon() * T::lit(16.0)) {
        return Err(Error::StepTooLarge(format!("step {h} exceeds t_c / 10 = {limit}")));
    }
    let n = (t_max / h).ceil().to_usize().unwrap_or(0) + 2;
    let mut kernel = Vec::with_capacity(n);
    for k in 0..n {
        kernel.push(correlation_function(params, h * T::from_usize_lossy(k))?);
    }
    Ok(solve_memory_equation(&kernel, h))
}

/// Memory kernel `sum_n V_{n0}^2 cos((E_n - E_0) t)` of a finite Friedrichs
/// realization, sampled at `k h`.
pub fn discrete_fm_kernel<T: Real>(realization: &Realization<T>, h: T, n: usize) -> Result<Vec<T>> {
    let v = realization
        .star_couplings()
        .ok_or_else(|| Error::InvalidParams("discrete kernel needs a Friedrichs realization".into()))?;
    let e0 = realization.energy(0);
    let terms: Vec<(T, T)> = v
        .iter()
        .zip(realization.energies())
        .filter(|(x, _)| **x != T::zero())
        .map(|(&x, &e)| (x * x, e - e0))
        .collect();
    Ok((0..n)
        .map(|k| {
            let t = h * T::from_usize_lossy(k);
            let parts: Vec<T> = terms.iter().map(|&(w, e)| w * (e * t).cos()).collect();
            pairwise_sum(&parts)
        })
        .collect())
}
