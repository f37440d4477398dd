//! Thin SVD, the polar-type `qf` operator, and a symmetric eigensolver.
//!
//! Both factorizations are cyclic Jacobi methods: one-sided (Hestenes) for
//! the SVD and two-sided for the symmetric eigenproblem. They are accurate
//! to working precision for the small dense matrices the solver produces.
//!
//! Sign convention: the largest-magnitude entry of every left singular vector
//! (and every eigenvector) is positive, ties going to the lowest row index.

use crate::error::{Error, Result};
use crate::tensor::{dot, Matrix};

const MAX_SWEEPS: usize = 80;

#[derive(Debug, Clone)]
pub struct ThinSvd {
    /// `I × R`, orthonormal columns.
    pub u: Matrix,
    /// Descending, nonnegative.
    pub s: Vec<f64>,
    /// `R × R`, orthogonal.
    pub v: Matrix,
}

impl ThinSvd {
    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for (j, &s) in self.s.iter().enumerate() {
            us.column_mut(j).iter_mut().for_each(|x| *x *= s);
        }
        us.matmul_t(&self.v).expect("svd factors are conformable")
    }
}

#[derive(Debug, Clone)]
pub struct SymEig {
    /// Descending.
    pub values: Vec<f64>,
    /// Orthonormal columns matching `values`.
    pub vectors: Matrix,
}

/// Thin SVD of a matrix with at least as many rows as columns.
pub fn thin_svd(a: &Matrix) -> Result<ThinSvd> {
    let (m, n) = (a.rows(), a.cols());
    if m < n {
        return Err(Error::DimensionMismatch(format!(
            "thin_svd needs rows >= cols, got {m}x{n}"
        )));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("thin_svd input"));
    }

    let mut w = a.clone();
    let mut v = Matrix::identity(n);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(w.column(p), w.column(p));
                let beta = dot(w.column(q), w.column(q));
                let gamma = dot(w.column(p), w.column(q));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut w, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..n)
        .map(|j| dot(w.column(j), w.column(j)).sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let s_max = norms.iter().copied().fold(0.0, f64::max);
    let cutoff = s_max * f64::EPSILON * m as f64;
    let mut u = Matrix::zeros(m, n);
    let mut vs = Matrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let sigma = norms[src];
        if sigma > cutoff {
            for (d, &x) in u.column_mut(dst).iter_mut().zip(w.column(src)) {
                *d = x / sigma;
            }
            s.push(sigma);
        } else {
            s.push(0.0);
        }
        vs.column_mut(dst).copy_from_slice(v.column(src));
    }
    let live = s.iter().filter(|&&x| x > 0.0).count();
    orthonormalize(&mut u, live);

    for j in 0..n {
        if leading_sign(u.column(j)) < 0.0 {
            u.column_mut(j).iter_mut().for_each(|x| *x = -*x);
            vs.column_mut(j).iter_mut().for_each(|x| *x = -*x);
        }
    }
    Ok(ThinSvd { u, s, v: vs })
}

/// Polar-type factor `Y Zᵀ` of `a = Y diag(s) Zᵀ`: the maximizer of
/// `<U, a>` over matrices with orthonormal columns.
pub fn qf(a: &Matrix) -> Result<Matrix> {
    let svd = thin_svd(a)?;
    svd.u.matmul_t(&svd.v)
}

/// Eigendecomposition of a symmetric matrix. The input is symmetrized first.
pub fn sym_eig(a: &Matrix) -> Result<SymEig> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "sym_eig needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("sym_eig input"));
    }
    let mut s = Matrix::from_fn(n, n, |i, j| 0.5 * (a.get(i, j) + a.get(j, i)));
    let mut vecs = Matrix::identity(n);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| s.get(i, j).powi(2))
            .sum();
        let total: f64 = s.as_slice().iter().map(|x| x * x).sum();
        if off <= (f64::EPSILON * f64::EPSILON) * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = s.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = s.get(p, p);
                let aqq = s.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.is_infinite() {
                    0.0
                } else {
                    theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt())
                };
                if t == 0.0 {
                    continue;
                }
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * c;
                // S <- Jᵀ S J with J the (p, q) rotation.
                for k in 0..n {
                    let skp = s.get(k, p);
                    let skq = s.get(k, q);
                    s.set(k, p, c * skp - sn * skq);
                    s.set(k, q, sn * skp + c * skq);
                }
                for k in 0..n {
                    let spk = s.get(p, k);
                    let sqk = s.get(q, k);
                    s.set(p, k, c * spk - sn * sqk);
                    s.set(q, k, sn * spk + c * sqk);
                }
                rotate_columns(&mut vecs, p, q, c, sn);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s.get(j, j).total_cmp(&s.get(i, i)).then(i.cmp(&j)));
    let values = order.iter().map(|&i| s.get(i, i)).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.column_mut(dst).copy_from_slice(vecs.column(src));
        if leading_sign(vectors.column(dst)) < 0.0 {
            vectors.column_mut(dst).iter_mut().for_each(|x| *x = -*x);
        }
    }
    Ok(SymEig { values, vectors })
}

fn rotate_columns(m: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let rows = m.rows();
    for k in 0..rows {
        let a = m.get(k, p);
        let b = m.get(k, q);
        m.set(k, p, c * a - s * b);
        m.set(k, q, s * a + c * b);
    }
}

fn leading_sign(col: &[f64]) -> f64 {
    let mut best = 0.0f64;
    for &x in col {
        if x.abs() > best.abs() {
            best = x;
        }
    }
    if best < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Re-orthonormalizes the first `live` columns with two passes of modified
/// Gram-Schmidt, then completes the rest from the standard basis.
fn orthonormalize(u: &mut Matrix, live: usize) {
    let (m, n) = (u.rows(), u.cols());
    for j in 0..live {
        for _ in 0..2 {
            for k in 0..j {
                let (head, tail) = split_columns(u, k, j);
                let proj = dot(head, tail);
                tail.iter_mut().zip(head).for_each(|(t, &h)| *t -= proj * h);
            }
        }
        let nrm = dot(u.column(j), u.column(j)).sqrt();
        u.column_mut(j).iter_mut().for_each(|x| *x /= nrm);
    }
    let mut basis = 0;
    for j in live..n {
        loop {
            assert!(basis < m, "ran out of basis vectors completing the SVD");
            let col = u.column_mut(j);
            col.iter_mut().for_each(|x| *x = 0.0);
            col[basis] = 1.0;
            basis += 1;
            for _ in 0..2 {
                for k in 0..j {
                    let (head, tail) = split_columns(u, k, j);
                    let proj = dot(head, tail);
                    tail.iter_mut().zip(head).for_each(|(t, &h)| *t -= proj * h);
                }
            }
            let nrm = dot(u.column(j), u.column(j)).sqrt();
            if nrm > 1e-8 {
                u.column_mut(j).iter_mut().for_each(|x| *x /= nrm);
                break;
            }
        }
    }
}

/// Borrows column `k` immutably and column `j` mutably, `k < j`.
fn split_columns(u: &mut Matrix, k: usize, j: usize) -> (&[f64], &mut [f64]) {
    debug_assert!(k < j);
    let rows = u.rows();
    let (lo, hi) = u.as_mut_slice().split_at_mut(j * rows);
    (&lo[k * rows..(k + 1) * rows], &mut hi[..rows])
}
