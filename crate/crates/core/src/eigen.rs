//! Dense symmetric eigensolver tuned for local-density-of-states work.
//!
//! Householder reduction to tridiagonal form that keeps one basis vector
//! fixed, followed by implicit QL iterations. Tracking only the first row of
//! the eigenvector matrix gives the overlaps `|<nu|0>|^2` in `O(N^2)` after
//! the `O(N^3)` reduction; full vectors are optional.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Eigenvalues in ascending order with the weights of one distinguished
/// basis vector, and optionally all eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs<T> {
    pub values: Vec<T>,
    /// `|<nu|0>|^2` for the distinguished basis vector.
    pub weights: Vec<T>,
    /// Column-major: component `i` of eigenvector `j` at `j * n + i`, in the
    /// original basis order.
    pub vectors: Option<Vec<T>>,
}

/// Eigen-decomposition of the symmetric `n x n` row-major matrix `a`.
/// `pivot` is the basis index whose weights are returned. Only the lower
/// triangle is read. `seed` is reported on failure.
pub fn symmetric_eigen<T: Real>(a: &[T], n: usize, pivot: usize, want_vectors: bool, seed: u64) -> Result<EigenPairs<T>> {
    if a.len() != n * n || n == 0 || pivot >= n {
        return Err(Error::InvalidSize(format!("matrix of {} values is not {n} x {n} or pivot {pivot} out of range", a.len())));
    }
    // permute so that the pivot is basis vector 0
    let perm: Vec<usize> = std::iter::once(pivot).chain((0..n).filter(|&i| i != pivot)).collect();
    let mut m = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = a[perm[i].max(perm[j]) * n + perm[i].min(perm[j])];
            m[i * n + j] = v;
            m[j * n + i] = v;
        }
    }
    let (diag, off, q) = tridiagonalize(&mut m, n, want_vectors);
    let mut d = diag;
    let mut e = off;
    let mut z = if want_vectors {
        // rows of Q become the tracked rows
        q.unwrap()
    } else {
        let mut first = vec![T::zero(); n];
        first[0] = T::one();
        first
    };
    let rows = z.len() / n;
    implicit_ql(&mut d, &mut e, &mut z, rows, n).map_err(|_| Error::Eigensolver { seed })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&k| d[k]).collect();
    let weights = order.iter().map(|&k| z[k] * z[k]).collect();
    let vectors = if want_vectors {
        let mut v = vec![T::zero(); n * n];
        for (jj, &k) in order.iter().enumerate() {
            for r in 0..n {
                // z row r is component r (permuted basis) of all eigenvectors
                v[jj * n + perm[r]] = z[r * n + k];
            }
        }
        Some(v)
    } else {
        None
    };
    Ok(EigenPairs { values, weights, vectors })
}

/// Householder tridiagonalization of the full symmetric row-major matrix,
/// leaving basis vector 0 invariant. Returns the diagonal, the subdiagonal
/// (`e[i]` couples `i-1` and `i`, `e[0] = 0`) and optionally `Q` row-major
/// with `A = Q T Q^T`.
fn tridiagonalize<T: Real>(a: &mut [T], n: usize, want_q: bool) -> (Vec<T>, Vec<T>, Option<Vec<T>>) {
    let mut diag = vec![T::zero(); n];
    let mut off = vec![T::zero(); n];
    let mut reflectors: Vec<(usize, Vec<T>, T)> = Vec::new();
    let mut v = vec![T::zero(); n];
    let mut p = vec![T::zero(); n];

    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        // x = A[k+1.., k]
        let mut norm2 = T::zero();
        for i in 0..len {
            let x = a[(k + 1 + i) * n + k];
            v[i] = x;
            norm2 += x * x;
        }
        let x0 = v[0];
        let tail2 = norm2 - x0 * x0;
        if tail2 <= T::min_positive_value() {
            continue;
        }
        let norm = norm2.sqrt();
        let alpha = if x0 >= T::zero() { -norm } else { norm };
        v[0] = x0 - alpha;
        let vv = tail2 + v[0] * v[0];
        let beta = T::lit(2.0) / vv;

        // p = beta * A22 v
        for i in 0..len {
            let row = &a[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + n];
            let mut acc = T::zero();
            for (x, y) in row.iter().zip(&v[..len]) {
                acc += *x * *y;
            }
            p[i] = beta * acc;
        }
        let mut pv = T::zero();
        for i in 0..len {
            pv += p[i] * v[i];
        }
        let c = beta * pv / T::lit(2.0);
        for i in 0..len {
            p[i] -= c * v[i];
        }
        // A22 -= v w^T + w v^T with w = p
        for i in 0..len {
            let vi = v[i];
            let wi = p[i];
            let row = &mut a[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + n];
            for ((x, &vj), &wj) in row.iter_mut().zip(&v[..len]).zip(&p[..len]) {
                *x -= vi * wj + wi * vj;
            }
        }
        a[(k + 1) * n + k] = alpha;
        a[k * n + k + 1] = alpha;
        for i in 1..len {
            a[(k + 1 + i) * n + k] = T::zero();
            a[k * n + k + 1 + i] = T::zero();
        }
        if want_q {
            reflectors.push((k + 1, v[..len].to_vec(), beta));
        }
    }
    for i in 0..n {
        diag[i] = a[i * n + i];
        if i > 0 {
            off[i] = a[i * n + i - 1];
        }
    }
    let q = if want_q {
        // Q = P_0 P_1 ... ; apply in reverse to the identity
        let mut q = vec![T::zero(); n * n];
        for i in 0..n {
            q[i * n + i] = T::one();
        }
        for (start, v, beta) in reflectors.iter().rev() {
            // Q[start.., start..] = (I - beta v v^T) Q[start.., start..]
            let len = v.len();
            let mut w = vec![T::zero(); n];
            for (i, &vi) in v.iter().enumerate() {
                let row = &q[(start + i) * n..(start + i + 1) * n];
                for (wj, &qj) in w.iter_mut().zip(row) {
                    *wj += vi * qj;
                }
            }
            for i in 0..len {
                let f = *beta * v[i];
                let row = &mut q[(start + i) * n..(start + i + 1) * n];
                for (qj, &wj) in row.iter_mut().zip(&w) {
                    *qj -= f * wj;
                }
            }
        }
        Some(q)
    } else {
        None
    };
    (diag, off, q)
}

/// Implicit QL with Wilkinson-type shifts on the tridiagonal matrix
/// (`d`, `e` with `e[i]` coupling `i-1, i`). Plane rotations are applied to
/// the columns of the `rows x n` row-major matrix `z`.
fn implicit_ql<T: Real>(d: &mut [T], e: &mut [T], z: &mut [T], rows: usize, n: usize) -> std::result::Result<(), ()> {
    if n == 1 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();
    let eps = T::epsilon();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(());
            }
            let mut g = (d[l + 1] - d[l]) / (T::lit(2.0) * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + if g >= T::zero() { r.abs() } else { -r.abs() });
            let mut s = T::one();
            let mut c = T::one();
            let mut p = T::zero();
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + T::lit(2.0) * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..rows {
                    let row = &mut z[k * n..(k + 1) * n];
                    f = row[i + 1];
                    row[i + 1] = s * row[i] + c * f;
                    row[i] = c * row[i] - s * f;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    Ok(())
}
