//! Seeded Hamiltonian realizations of the star-coupled (Friedrichs) and
//! banded random-matrix (Wigner) models.
//!
//! Levels are indexed by `n` in `[-H, H]` with the prepared level at `n = 0`
//! and unperturbed energies on a picket fence `E_n = n / rho`. Random numbers
//! are counter based: every row `n` draws from its own ChaCha stream, so a
//! realization can be grown or cut without touching the values already drawn.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral_kernel::{CutoffKind, SpectralParams};

const MAGIC: &[u8; 4] = b"QDRZ";
const CONTAINER_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// Prepared level coupled to every other level; rank-two perturbation.
    Friedrichs,
    /// Banded random coupling between all levels.
    Wigner,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Friedrichs => "fm",
            ModelKind::Wigner => "wm",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fm" | "friedrichs" => Ok(ModelKind::Friedrichs),
            "wm" | "wigner" => Ok(ModelKind::Wigner),
            other => Err(format!("unknown model `{other}` (expected fm|wm)")),
        }
    }
}

/// Distribution of the random Wigner couplings (unit variance before scaling).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum EntryDistribution {
    #[default]
    Gaussian,
    /// `+-1` with equal probability.
    Bernoulli,
}

impl EntryDistribution {
    pub fn name(self) -> &'static str {
        match self {
            EntryDistribution::Gaussian => "gaussian",
            EntryDistribution::Bernoulli => "bernoulli",
        }
    }
}

impl std::str::FromStr for EntryDistribution {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(EntryDistribution::Gaussian),
            "bernoulli" | "sign" => Ok(EntryDistribution::Bernoulli),
            other => Err(format!("unknown distribution `{other}` (expected gaussian|bernoulli)")),
        }
    }
}

/// Construction options beyond the spectral parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleOptions {
    pub distribution: EntryDistribution,
    /// Uniform displacement of each `E_n` (`n != 0`) in units of the level
    /// spacing, drawn from `[-jitter/2, jitter/2]`. Must lie in `[0, 1)`.
    pub jitter: f64,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        Self { distribution: EntryDistribution::Gaussian, jitter: 0.0 }
    }
}

/// Coupling storage.
#[derive(Debug, Clone, PartialEq)]
pub enum Couplings<T> {
    /// `V_{n,0}` at position `n + H` (zero at `n = 0` and for `|n| > b`).
    Star(Vec<T>),
    /// Row-major upper band: entry `(n + H) * b + d - 1` holds `V_{n, n+d}`
    /// for `d = 1..=b`. Rows are drawn in full, so entries that reach past
    /// `H` exist in memory and are masked by [`Realization::coupling`].
    Band(Vec<T>),
}

/// One sampled Hamiltonian `H = diag(E_n) + V`.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization<T> {
    kind: ModelKind,
    params: SpectralParams<T>,
    options: EnsembleOptions,
    seed: u64,
    b: usize,
    half_size: usize,
    energies: Vec<T>,
    couplings: Couplings<T>,
    // rows near the upper edge carry every drawn entry (false after reading
    // a container, which stores only in-matrix entries)
    upper_tails_complete: bool,
}

/// Seed of realization `index` under `master`: the `index`-th output of the
/// SplitMix64 generator started at `master`.
pub fn derive_realization_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn row_stream(n: i64) -> u64 {
    // zigzag so that streams for negative rows are distinct
    ((n << 1) ^ (n >> 63)) as u64
}

fn row_rng(seed: u64, n: i64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(row_stream(n));
    rng
}

/// Energy offset of level `n` in level spacings (`n` plus jitter).
fn level_position(seed: u64, n: i64, jitter: f64) -> f64 {
    if n == 0 || jitter == 0.0 {
        return n as f64;
    }
    // the jitter comes from a stream disjoint from all coupling streams
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6A09_E667_F3BC_C909);
    rng.set_stream(row_stream(n));
    let u: f64 = rng.random();
    n as f64 + jitter * (u - 0.5)
}

fn check_options(options: &EnsembleOptions) -> Result<()> {
    if !(options.jitter >= 0.0 && options.jitter < 1.0) {
        return Err(Error::InvalidParams(format!("jitter must lie in [0, 1) (got {})", options.jitter)));
    }
    Ok(())
}

/// Friedrichs realization with positive couplings
/// `V_{n,0} = [C(E_n) / (2 pi rho)]^(1/2)` for `0 < |n| <= b`.
pub fn build_fm<T: Real>(params: &SpectralParams<T>, half_size: usize, seed: u64) -> Result<Realization<T>> {
    build_fm_with(params, half_size, seed, &EnsembleOptions::default())
}

pub fn build_fm_with<T: Real>(
    params: &SpectralParams<T>,
    half_size: usize,
    seed: u64,
    options: &EnsembleOptions,
) -> Result<Realization<T>> {
    params.validate()?;
    check_options(options)?;
    let b = params.bandwidth()?;
    if half_size < b {
        return Err(Error::InvalidSize(format!("half_size {half_size} is smaller than the bandwidth {b}")));
    }
    let mut r = Realization {
        kind: ModelKind::Friedrichs,
        params: *params,
        options: *options,
        seed,
        b,
        half_size: 0,
        energies: Vec::new(),
        couplings: Couplings::Star(Vec::new()),
        upper_tails_complete: true,
    };
    r.fill(half_size);
    Ok(r)
}

/// Wigner realization: independent entries `V_{nm}`, `0 < |n - m| <= b`,
/// with variance `C(E_n - E_m) / (2 pi rho)`. The diagonal of `V` is zero.
pub fn build_wm<T: Real>(params: &SpectralParams<T>, half_size: usize, seed: u64) -> Result<Realization<T>> {
    build_wm_with(params, half_size, seed, &EnsembleOptions::default())
}

pub fn build_wm_with<T: Real>(
    params: &SpectralParams<T>,
    half_size: usize,
    seed: u64,
    options: &EnsembleOptions,
) -> Result<Realization<T>> {
    params.validate()?;
    check_options(options)?;
    let b = params.bandwidth()?;
    if half_size == 0 {
        return Err(Error::InvalidSize("half_size must be >= 1".into()));
    }
    let mut r = Realization {
        kind: ModelKind::Wigner,
        params: *params,
        options: *options,
        seed,
        b,
        half_size: 0,
        energies: Vec::new(),
        couplings: Couplings::Band(Vec::new()),
        upper_tails_complete: true,
    };
    r.fill(half_size);
    Ok(r)
}

/// Builds either model.
pub fn build<T: Real>(
    kind: ModelKind,
    params: &SpectralParams<T>,
    half_size: usize,
    seed: u64,
    options: &EnsembleOptions,
) -> Result<Realization<T>> {
    match kind {
        ModelKind::Friedrichs => build_fm_with(params, half_size, seed, options),
        ModelKind::Wigner => build_wm_with(params, half_size, seed, options),
    }
}

impl<T: Real> Realization<T> {
    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn params(&self) -> &SpectralParams<T> {
        &self.params
    }

    pub fn options(&self) -> &EnsembleOptions {
        &self.options
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn bandwidth(&self) -> usize {
        self.b
    }

    pub fn half_size(&self) -> usize {
        self.half_size
    }

    /// Matrix dimension `2H + 1`.
    pub fn dim(&self) -> usize {
        2 * self.half_size + 1
    }

    /// Energies `E_n` in index order `n = -H..=H`.
    pub fn energies(&self) -> &[T] {
        &self.energies
    }

    pub fn energy(&self, n: i64) -> T {
        self.energies[self.pos(n)]
    }

    pub fn couplings(&self) -> &Couplings<T> {
        &self.couplings
    }

    /// Storage position of level `n`.
    #[inline]
    pub fn pos(&self, n: i64) -> usize {
        (n + self.half_size as i64) as usize
    }

    #[inline]
    pub fn contains(&self, n: i64) -> bool {
        n.unsigned_abs() as usize <= self.half_size
    }

    /// `V_{nm}`; zero outside the matrix and outside the band.
    pub fn coupling(&self, n: i64, m: i64) -> T {
        if !self.contains(n) || !self.contains(m) || n == m {
            return T::zero();
        }
        match &self.couplings {
            Couplings::Star(v) => {
                if m == 0 {
                    v[self.pos(n)]
                } else if n == 0 {
                    v[self.pos(m)]
                } else {
                    T::zero()
                }
            }
            Couplings::Band(v) => {
                let (lo, hi) = if n < m { (n, m) } else { (m, n) };
                let d = (hi - lo) as usize;
                if d > self.b {
                    T::zero()
                } else {
                    v[self.pos(lo) * self.b + d - 1]
                }
            }
        }
    }

    /// Star couplings `V_{n,0}` in index order (Friedrichs only).
    pub fn star_couplings(&self) -> Option<&[T]> {
        match &self.couplings {
            Couplings::Star(v) => Some(v),
            Couplings::Band(_) => None,
        }
    }

    /// Gauge transformation `V_{n,0} -> -V_{n,0}` for every `n` picked
    /// (Friedrichs only; no effect on a Wigner realization).
    pub fn negate_star_couplings<F: Fn(i64) -> bool>(&mut self, pick: F) {
        let h = self.half_size as i64;
        if let Couplings::Star(v) = &mut self.couplings {
            for (k, x) in v.iter_mut().enumerate() {
                if pick(k as i64 - h) {
                    *x = -*x;
                }
            }
        }
    }

    /// Dense row-major `H` of size `dim x dim`.
    pub fn to_dense(&self) -> Vec<T> {
        let n = self.dim();
        let h = self.half_size as i64;
        let mut out = vec![T::zero(); n * n];
        for i in 0..n {
            out[i * n + i] = self.energies[i];
        }
        match &self.couplings {
            Couplings::Star(v) => {
                let z = self.pos(0);
                for i in 0..n {
                    out[i * n + z] = v[i];
                    out[z * n + i] = v[i];
                }
            }
            Couplings::Band(_) => {
                for i in 0..n {
                    for d in 1..=self.b.min(n - 1 - i) {
                        let x = self.coupling(i as i64 - h, i as i64 - h + d as i64);
                        out[i * n + i + d] = x;
                        out[(i + d) * n + i] = x;
                    }
                }
            }
        }
        out
    }

    /// Extends the realization to `new_half` (no-op if not larger). Values
    /// already present are unchanged; new values come from the same streams.
    pub fn grow_to(&mut self, new_half: usize) {
        if new_half > self.half_size {
            self.fill(new_half);
        }
    }

    fn fill(&mut self, new_half: usize) {
        let old_half = self.half_size;
        let fresh = self.energies.is_empty();
        let n_new = 2 * new_half + 1;
        let shift = new_half - old_half;
        let rho = self.params.rho;
        let jitter = self.options.jitter;

        let mut energies = vec![T::zero(); n_new];
        for (i, e) in energies.iter_mut().enumerate() {
            let n = i as i64 - new_half as i64;
            *e = T::lit(level_position(self.seed, n, jitter)) / rho;
        }
        let in_old = |n: i64| !fresh && n.unsigned_abs() as usize <= old_half;

        match &mut self.couplings {
            Couplings::Star(v) => {
                let mut nv = vec![T::zero(); n_new];
                for (i, x) in nv.iter_mut().enumerate() {
                    let n = i as i64 - new_half as i64;
                    if in_old(n) {
                        *x = v[i - shift];
                    } else if n != 0 && (n.unsigned_abs() as usize) <= self.b {
                        *x = (self.params.density_at(energies[i].abs()) / (T::TAU() * rho)).sqrt();
                    }
                }
                *v = nv;
            }
            Couplings::Band(v) => {
                let b = self.b;
                let mut nv = vec![T::zero(); n_new * b];
                for i in 0..n_new {
                    let n = i as i64 - new_half as i64;
                    let redraw_tail = !self.upper_tails_complete && n > old_half as i64 - b as i64;
                    let row = &mut nv[i * b..(i + 1) * b];
                    if in_old(n) && !redraw_tail {
                        row.copy_from_slice(&v[(i - shift) * b..(i - shift + 1) * b]);
                    } else {
                        draw_band_row(&self.params, &self.options, self.seed, n, row);
                    }
                }
                *v = nv;
                self.upper_tails_complete = true;
            }
        }
        self.energies = energies;
        self.half_size = new_half;
    }

    /// Writes the binary container (all values as little-endian `f64`).
    pub fn write_container<W: Write>(&self, w: &mut W) -> Result<()> {
        let mut buf = Vec::with_capacity(96 + 8 * self.dim() * (self.b + 2));
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&CONTAINER_VERSION.to_le_bytes());
        buf.push(match self.kind {
            ModelKind::Friedrichs => 0,
            ModelKind::Wigner => 1,
        });
        buf.push(match self.params.cutoff {
            CutoffKind::Exponential => 0,
            CutoffKind::Sharp => 1,
        });
        buf.push(match self.options.distribution {
            EntryDistribution::Gaussian => 0,
            EntryDistribution::Bernoulli => 1,
        });
        buf.push(0);
        for x in [self.params.s, self.params.epsilon, self.params.omega_c, self.params.rho] {
            buf.extend_from_slice(&x.as_f64().to_le_bytes());
        }
        buf.extend_from_slice(&self.options.jitter.to_le_bytes());
        buf.extend_from_slice(&self.seed.to_le_bytes());
        buf.extend_from_slice(&(self.b as u64).to_le_bytes());
        buf.extend_from_slice(&(self.half_size as u64).to_le_bytes());
        for e in &self.energies {
            buf.extend_from_slice(&e.as_f64().to_le_bytes());
        }
        let n = self.dim();
        let h = self.half_size as i64;
        match &self.couplings {
            Couplings::Star(v) => {
                for x in v {
                    buf.extend_from_slice(&x.as_f64().to_le_bytes());
                }
            }
            Couplings::Band(_) => {
                // band-major: diagonal offset d = 0..=b, then row
                for d in 0..=self.b {
                    for i in 0..n.saturating_sub(d) {
                        let x = if d == 0 { T::zero() } else { self.coupling(i as i64 - h, i as i64 - h + d as i64) };
                        buf.extend_from_slice(&x.as_f64().to_le_bytes());
                    }
                }
            }
        }
        w.write_all(&buf)?;
        Ok(())
    }

    /// Reads a container written by [`Realization::write_container`].
    pub fn read_container<R: Read>(r: &mut R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let mut cur = Cursor { bytes: &bytes, at: 0 };
        if cur.take(4)? != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = u32::from_le_bytes(cur.take(4)?.try_into().unwrap());
        if version != CONTAINER_VERSION {
            return Err(Error::Format(format!("unsupported container version {version}")));
        }
        let tags = cur.take(4)?.to_vec();
        let kind = match tags[0] {
            0 => ModelKind::Friedrichs,
            1 => ModelKind::Wigner,
            t => return Err(Error::Format(format!("unknown model tag {t}"))),
        };
        let cutoff = match tags[1] {
            0 => CutoffKind::Exponential,
            1 => CutoffKind::Sharp,
            t => return Err(Error::Format(format!("unknown cutoff tag {t}"))),
        };
        let distribution = match tags[2] {
            0 => EntryDistribution::Gaussian,
            1 => EntryDistribution::Bernoulli,
            t => return Err(Error::Format(format!("unknown distribution tag {t}"))),
        };
        let s = cur.f64()?;
        let epsilon = cur.f64()?;
        let omega_c = cur.f64()?;
        let rho = cur.f64()?;
        let jitter = cur.f64()?;
        let seed = cur.u64()?;
        let b = cur.u64()? as usize;
        let half_size = cur.u64()? as usize;
        let params = SpectralParams::new(T::lit(s), T::lit(epsilon), T::lit(omega_c), T::lit(rho), cutoff)
            .map_err(|e| Error::Format(e.to_string()))?;
        if params.bandwidth()? != b {
            return Err(Error::Format("bandwidth does not match the stored parameters".into()));
        }
        let n = 2 * half_size + 1;
        let mut energies = Vec::with_capacity(n);
        for _ in 0..n {
            energies.push(T::lit(cur.f64()?));
        }
        let couplings = match kind {
            ModelKind::Friedrichs => {
                let mut v = Vec::with_capacity(n);
                for _ in 0..n {
                    v.push(T::lit(cur.f64()?));
                }
                Couplings::Star(v)
            }
            ModelKind::Wigner => {
                let mut v = vec![T::zero(); n * b];
                for d in 0..=b {
                    for i in 0..n.saturating_sub(d) {
                        let x = cur.f64()?;
                        if d > 0 {
                            v[i * b + d - 1] = T::lit(x);
                        }
                    }
                }
                Couplings::Band(v)
            }
        };
        if cur.at != bytes.len() {
            return Err(Error::Format("trailing bytes after payload".into()));
        }
        Ok(Realization {
            kind,
            params,
            options: EnsembleOptions { distribution, jitter },
            seed,
            b,
            half_size,
            energies,
            couplings,
            upper_tails_complete: kind == ModelKind::Friedrichs,
        })
    }
}

fn draw_band_row<T: Real>(params: &SpectralParams<T>, options: &EnsembleOptions, seed: u64, n: i64, row: &mut [T]) {
    let mut rng = row_rng(seed, n);
    let rho = params.rho;
    let en = level_position(seed, n, options.jitter);
    for (k, x) in row.iter_mut().enumerate() {
        let d = k as i64 + 1;
        let z: f64 = match options.distribution {
            EntryDistribution::Gaussian => rng.sample(StandardNormal),
            EntryDistribution::Bernoulli => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        };
        let gap = T::lit((level_position(seed, n + d, options.jitter) - en).abs()) / rho;
        let var = params.density_at(gap) / (T::TAU() * rho);
        *x = var.sqrt() * T::lit(z);
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        if self.at + k > self.bytes.len() {
            return Err(Error::Format("truncated container".into()));
        }
        let out = &self.bytes[self.at..self.at + k];
        self.at += k;
        Ok(out)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
