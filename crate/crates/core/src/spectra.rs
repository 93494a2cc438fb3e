//! Local density of states by exact diagonalization, and the survival
//! probability as the Fourier transform of the eigen-pair weights.

use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;

use crate::eigen::{symmetric_eigen, EigenPairs};
use crate::ensemble::Realization;
use crate::error::{Error, Result};
use crate::scalar::{pairwise_sum, Real};

/// Eigen-pairs of one realization; weights are `|<nu|0>|^2` for the prepared
/// level and `values` are `E_nu - E_0`.
pub fn realization_eigen<T: Real>(r: &Realization<T>, want_vectors: bool) -> Result<EigenPairs<T>> {
    let n = r.dim();
    let dense = r.to_dense();
    let mut pairs = symmetric_eigen(&dense, n, r.pos(0), want_vectors, r.seed())?;
    let e0 = r.energy(0);
    if e0 != T::zero() {
        for v in &mut pairs.values {
            *v -= e0;
        }
    }
    Ok(pairs)
}

/// Binned local density of states averaged over realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct LdosHistogram<T> {
    pub bin_edges: Vec<T>,
    /// Mean probability per bin.
    pub weights: Vec<T>,
    /// Standard error of the per-bin probability.
    pub stderr: Vec<T>,
    pub n_realizations: usize,
    /// Scale used for the `w / gamma0` presentation.
    pub gamma0: T,
}

/// Bin edges symmetric about zero: `n_core` uniform bins on
/// `[-core, core]` and `n_tail` logarithmic bins on each of
/// `[core, tail_max]` and its mirror image.
pub fn symmetric_bins<T: Real>(core: T, n_core: usize, tail_max: T, n_tail: usize) -> Result<Vec<T>> {
    if !(core > T::zero()) || n_core == 0 || (n_tail > 0 && !(tail_max > core)) {
        return Err(Error::InvalidParams(format!(
            "bins need core > 0, n_core >= 1 and tail_max > core (got core = {core}, tail_max = {tail_max})"
        )));
    }
    let mut positive = Vec::new();
    let ratio = (tail_max / core).ln();
    for k in (1..=n_tail).rev() {
        positive.push(core * (ratio * T::from_usize_lossy(k) / T::from_usize_lossy(n_tail)).exp());
    }
    let mut edges: Vec<T> = positive.iter().map(|&x| -x).collect();
    for k in 0..=n_core {
        let x = -core + T::lit(2.0) * core * T::from_usize_lossy(k) / T::from_usize_lossy(n_core);
        edges.push(x);
    }
    // the middle edge of an even split is exactly zero
    if n_core % 2 == 0 {
        let mid = positive.len() + n_core / 2;
        edges[mid] = T::zero();
    }
    edges.extend(positive.iter().rev().copied());
    Ok(edges)
}

fn bin_index<T: Real>(edges: &[T], x: T) -> Option<usize> {
    if edges.len() < 2 || x < edges[0] || x > edges[edges.len() - 1] {
        return None;
    }
    // last bin is closed on the right
    let k = edges.partition_point(|&e| e <= x);
    Some(k.saturating_sub(1).min(edges.len() - 2))
}

/// Weights of one set of eigen-pairs per bin; weight outside the edges is
/// dropped.
pub fn bin_weights<T: Real>(pairs: &EigenPairs<T>, edges: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); edges.len().saturating_sub(1)];
    for (&e, &w) in pairs.values.iter().zip(&pairs.weights) {
        if let Some(k) = bin_index(edges, e) {
            out[k] += w;
        }
    }
    out
}

impl<T: Real> LdosHistogram<T> {
    /// Histogram of already diagonalized realizations (in a fixed order).
    pub fn from_pairs(all: &[EigenPairs<T>], edges: &[T], gamma0: T) -> Result<Self> {
        if all.is_empty() {
            return Err(Error::InvalidSize("no realizations".into()));
        }
        let per: Vec<Vec<T>> = all.iter().map(|p| bin_weights(p, edges)).collect();
        let nb = edges.len() - 1;
        let count = T::from_usize_lossy(per.len());
        let mut weights = vec![T::zero(); nb];
        let mut stderr = vec![T::zero(); nb];
        for k in 0..nb {
            let column: Vec<T> = per.iter().map(|h| h[k]).collect();
            let mean = pairwise_sum(&column) / count;
            weights[k] = mean;
            stderr[k] = if per.len() > 1 {
                let dev: Vec<T> = column.iter().map(|&x| (x - mean) * (x - mean)).collect();
                (pairwise_sum(&dev) / (count - T::one()) / count).sqrt()
            } else {
                // single realization: counting error of the weighted sum
                let p = &all[0];
                let sq: Vec<T> = p
                    .values
                    .iter()
                    .zip(&p.weights)
                    .filter(|(e, _)| bin_index(edges, **e) == Some(k))
                    .map(|(_, &w)| w * w)
                    .collect();
                pairwise_sum(&sq).sqrt()
            };
        }
        Ok(Self { bin_edges: edges.to_vec(), weights, stderr, n_realizations: per.len(), gamma0 })
    }

    pub fn n_bins(&self) -> usize {
        self.weights.len()
    }

    pub fn center(&self, k: usize) -> T {
        (self.bin_edges[k] + self.bin_edges[k + 1]) / T::lit(2.0)
    }

    pub fn width(&self, k: usize) -> T {
        self.bin_edges[k + 1] - self.bin_edges[k]
    }

    /// Probability density in bin `k`.
    pub fn density(&self, k: usize) -> T {
        self.weights[k] / self.width(k)
    }

    pub fn density_stderr(&self, k: usize) -> T {
        self.stderr[k] / self.width(k)
    }

    pub fn total_weight(&self) -> T {
        pairwise_sum(&self.weights)
    }

    /// CSV with columns `bin_center, bin_width, weight_density, stderr`,
    /// preceded by `#` comment lines.
    pub fn write_csv<W: Write>(&self, w: &mut W, header: &[String]) -> Result<()> {
        for line in header {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "# n_realizations = {}", self.n_realizations)?;
        writeln!(w, "# gamma0 = {:e}", self.gamma0.as_f64())?;
        writeln!(w, "bin_center,bin_width,weight_density,stderr")?;
        for k in 0..self.n_bins() {
            writeln!(
                w,
                "{:e},{:e},{:e},{:e}",
                self.center(k).as_f64(),
                self.width(k).as_f64(),
                self.density(k).as_f64(),
                self.density_stderr(k).as_f64()
            )?;
        }
        Ok(())
    }
}

/// Diagonalizes every realization (concurrently) and bins the prepared-level
/// weights. Partial histograms are merged in input order.
pub fn diagonalize_ldos<T: Real>(realizations: &[Realization<T>], edges: &[T], gamma0: T) -> Result<LdosHistogram<T>> {
    if let Some(first) = realizations.first() {
        for r in realizations {
            if r.params() != first.params() || r.dim() != first.dim() || r.kind() != first.kind() {
                return Err(Error::InvalidParams("realizations differ in parameters or size".into()));
            }
        }
    }
    let pairs: Result<Vec<EigenPairs<T>>> = realizations.par_iter().map(|r| realization_eigen(r, false)).collect();
    LdosHistogram::from_pairs(&pairs?, edges, gamma0)
}

/// Amplitude `sum_nu w_nu e^{-i E_nu t}`.
pub fn survival_amplitude<T: Real>(values: &[T], weights: &[T], t: T) -> Complex<T> {
    let mut re = Vec::with_capacity(values.len());
    let mut im = Vec::with_capacity(values.len());
    for (&e, &w) in values.iter().zip(weights) {
        let (s, c) = (e * t).sin_cos();
        re.push(w * c);
        im.push(-w * s);
    }
    Complex::new(pairwise_sum(&re), pairwise_sum(&im))
}

/// Exact `P(t) = |sum_nu |<nu|0>|^2 e^{-i E_nu t}|^2` on a time grid.
pub fn survival_from_pairs<T: Real>(pairs: &EigenPairs<T>, t_grid: &[T]) -> Vec<T> {
    t_grid.iter().map(|&t| survival_amplitude(&pairs.values, &pairs.weights, t).norm_sqr()).collect()
}

/// Approximate `P(t)` from a histogram, each bin's weight placed at its
/// center; accurate only for `t` well below `1 / bin width`.
pub fn survival_from_histogram<T: Real>(hist: &LdosHistogram<T>, t_grid: &[T]) -> Vec<T> {
    let centers: Vec<T> = (0..hist.n_bins()).map(|k| hist.center(k)).collect();
    t_grid.iter().map(|&t| survival_amplitude(&centers, &hist.weights, t).norm_sqr()).collect()
}
