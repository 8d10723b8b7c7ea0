//! Dense linear algebra needed by the count-based embeddings: a one-sided
//! Jacobi SVD for small matrices and randomized subspace iteration for
//! large ones.

use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

/// Thin SVD factors: `a ≈ u · diag(s) · vt`, singular values descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Array2<f64>,
    pub s: Array1<f64>,
    pub vt: Array2<f64>,
}

impl Svd {
    pub fn reconstruct(&self) -> Array2<f64> {
        let us = &self.u * &self.s.view().insert_axis(Axis(0));
        us.dot(&self.vt)
    }
}

#[derive(Debug, Clone)]
pub struct SvdOptions {
    /// Matrices with both sides at most this large use the dense Jacobi path.
    pub dense_limit: usize,
    pub oversample: usize,
    pub max_iter: usize,
    /// Convergence threshold on `max_i ‖A vᵢ − σᵢ uᵢ‖ / σ₁`.
    pub tol: f64,
    pub seed: u64,
}

impl Default for SvdOptions {
    fn default() -> Self {
        SvdOptions { dense_limit: 256, oversample: 10, max_iter: 1000, tol: 1e-10, seed: 0 }
    }
}

const JACOBI_MAX_SWEEPS: usize = 80;

fn check_finite(a: &Array2<f64>) -> Result<()> {
    if a.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite("matrix passed to svd".into()))
    }
}

/// Full thin SVD by one-sided (Hestenes) Jacobi rotations.
pub fn jacobi_svd(a: &Array2<f64>) -> Result<Svd> {
    check_finite(a)?;
    let (m, n) = a.dim();
    if m < n {
        let t = jacobi_svd(&a.t().to_owned())?;
        return Ok(Svd { u: t.vt.t().to_owned(), s: t.s, vt: t.u.t().to_owned() });
    }
    let mut w = a.clone();
    let mut v = Array2::<f64>::eye(n);
    let eps = f64::EPSILON;
    let frob2: f64 = a.iter().map(|x| x * x).sum();
    let negligible = (eps * eps * frob2).max(f64::MIN_POSITIVE);
    let mut converged = n < 2;
    let mut off = 0.0;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let cp = w.column(p);
                    let cq = w.column(q);
                    (cp.dot(&cp), cq.dot(&cq), cp.dot(&cq))
                };
                // Columns at the rounding level of the matrix are already
                // zero singular directions; rotating them only underflows.
                if gamma == 0.0 || alpha <= negligible || beta <= negligible {
                    continue;
                }
                let scale = alpha.sqrt() * beta.sqrt();
                off = off.max(gamma.abs() / scale);
                if gamma.abs() <= eps * scale {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                rotate(&mut w, p, q, c, sn);
                rotate(&mut v, p, q, c, sn);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { iterations: JACOBI_MAX_SWEEPS, residual: off });
    }
    let norms: Vec<f64> = (0..n).map(|j| w.column(j).dot(&w.column(j)).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    let smax = norms.iter().cloned().fold(0.0, f64::max);
    let mut u = Array2::<f64>::zeros((m, n));
    let mut s = Array1::<f64>::zeros(n);
    let mut vt = Array2::<f64>::zeros((n, n));
    let mut degenerate = Vec::new();
    for (k, &j) in order.iter().enumerate() {
        s[k] = norms[j];
        vt.row_mut(k).assign(&v.column(j));
        if norms[j] > smax * 1e-14 && norms[j] > 0.0 {
            u.column_mut(k).assign(&(&w.column(j) / norms[j]));
        } else {
            degenerate.push(k);
        }
    }
    complete_columns(&mut u, &degenerate);
    Ok(Svd { u, s, vt })
}

fn rotate(m: &mut Array2<f64>, p: usize, q: usize, c: f64, s: f64) {
    for r in 0..m.nrows() {
        let a = m[[r, p]];
        let b = m[[r, q]];
        m[[r, p]] = c * a - s * b;
        m[[r, q]] = s * a + c * b;
    }
}

/// Replaces the listed columns with unit vectors orthogonal to every other
/// column, drawing candidates from the standard basis.
fn complete_columns(u: &mut Array2<f64>, missing: &[usize]) {
    if missing.is_empty() {
        return;
    }
    let m = u.nrows();
    let mut candidate = 0;
    for &col in missing {
        loop {
            assert!(candidate < m, "cannot complete an orthonormal basis");
            let mut e = Array1::<f64>::zeros(m);
            e[candidate] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for j in 0..u.ncols() {
                    if j == col || (missing.contains(&j) && j > col) {
                        continue;
                    }
                    let cj = u.column(j);
                    let proj = cj.dot(&e);
                    e.scaled_add(-proj, &cj);
                }
            }
            let norm = e.dot(&e).sqrt();
            if norm > 1e-6 {
                u.column_mut(col).assign(&(e / norm));
                break;
            }
        }
    }
}

/// Orthonormalizes the columns of `y` in place (modified Gram–Schmidt run
/// twice). Columns that collapse are replaced to keep the basis complete.
pub fn orthonormalize(y: &mut Array2<f64>) {
    let cols = y.ncols();
    let mut collapsed = Vec::new();
    for j in 0..cols {
        let original = norm(y.column(j)).max(f64::MIN_POSITIVE);
        for _ in 0..2 {
            for i in 0..j {
                if collapsed.contains(&i) {
                    continue;
                }
                let proj = y.column(i).dot(&y.column(j));
                let ci = y.column(i).to_owned();
                y.column_mut(j).scaled_add(-proj, &ci);
            }
        }
        let nj = norm(y.column(j));
        if nj <= original * 1e-10 || nj == 0.0 {
            collapsed.push(j);
            y.column_mut(j).fill(0.0);
        } else {
            y.column_mut(j).mapv_inplace(|x| x / nj);
        }
    }
    complete_columns(y, &collapsed);
}

fn norm(v: ArrayView1<f64>) -> f64 {
    v.dot(&v).sqrt()
}

/// Top-`k` singular triplets of `a`.
///
/// Small matrices go through [`jacobi_svd`]; larger ones use randomized
/// subspace iteration seeded by `opts.seed`, iterated until the triplet
/// residual drops below `opts.tol`.
pub fn truncated_svd(a: &Array2<f64>, k: usize, opts: &SvdOptions) -> Result<Svd> {
    let (m, n) = a.dim();
    if k == 0 || k > m.min(n) {
        return Err(Error::InvalidArgument(format!(
            "svd rank {k} outside 1..={} for a {m}x{n} matrix",
            m.min(n)
        )));
    }
    check_finite(a)?;
    if m.max(n) <= opts.dense_limit {
        let full = jacobi_svd(a)?;
        return Ok(truncate(full, k));
    }
    randomized_svd(a, k, opts)
}

fn truncate(full: Svd, k: usize) -> Svd {
    Svd {
        u: full.u.slice(s![.., ..k]).to_owned(),
        s: full.s.slice(s![..k]).to_owned(),
        vt: full.vt.slice(s![..k, ..]).to_owned(),
    }
}

/// Randomized subspace iteration regardless of matrix size.
pub fn randomized_svd(a: &Array2<f64>, k: usize, opts: &SvdOptions) -> Result<Svd> {
    let (m, n) = a.dim();
    let l = (k + opts.oversample).min(m.min(n));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let omega = Array2::from_shape_fn((n, l), |_| StandardNormal.sample(&mut rng));
    let mut q = a.dot(&omega);
    orthonormalize(&mut q);
    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_iter {
        let mut z = a.t().dot(&q);
        orthonormalize(&mut z);
        q = a.dot(&z);
        orthonormalize(&mut q);
        let b = q.t().dot(a);
        let small = jacobi_svd(&b)?;
        let cand = Svd { u: q.dot(&small.u), s: small.s, vt: small.vt };
        let cand = truncate(cand, k);
        residual = triplet_residual(a, &cand);
        if residual <= opts.tol {
            return Ok(cand);
        }
    }
    Err(Error::NoConvergence { iterations: opts.max_iter, residual })
}

fn triplet_residual(a: &Array2<f64>, svd: &Svd) -> f64 {
    let s1 = svd.s[0];
    if s1 == 0.0 {
        return 0.0;
    }
    let av = a.dot(&svd.vt.t());
    let mut worst = 0.0f64;
    for i in 0..svd.s.len() {
        let r = &av.column(i) - &(&svd.u.column(i) * svd.s[i]);
        worst = worst.max(norm(r.view()) / s1);
    }
    worst
}
