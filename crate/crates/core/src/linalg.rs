//! Minimal dense complex linear algebra: row-major matrices, LU solves,
//! modified Gram-Schmidt QR and a one-sided Jacobi SVD. Sized for the small
//! factor/core matrices of the compression routines and for test oracles.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)] // f64 math through libm in no_std builds
use num_traits::Float;

use crate::error::{Error, Result};

/// Dense complex matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub nrows: usize,
    pub ncols: usize,
    pub data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CMat { nrows, ncols, data: vec![Complex64::new(0.0, 0.0); nrows * ncols] }
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(nrows, ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                m.data[i * ncols + j] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.ncols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.ncols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [Complex64] {
        &mut self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.nrows).map(|i| self.get(i, j)).collect()
    }

    /// y = A x.
    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.nrows];
        self.matvec_acc(x, Complex64::new(1.0, 0.0), &mut y);
        y
    }

    /// y += alpha * A x.
    pub fn matvec_acc(&self, x: &[Complex64], alpha: Complex64, y: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for i in 0..self.nrows {
            let row = self.row(i);
            let mut acc = Complex64::new(0.0, 0.0);
            for (a, b) in row.iter().zip(x.iter()) {
                acc += a * b;
            }
            y[i] += alpha * acc;
        }
    }

    /// Conjugate-transposed product y = A^H x.
    pub fn matvec_adj(&self, x: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(x.len(), self.nrows);
        let mut y = vec![Complex64::new(0.0, 0.0); self.ncols];
        for i in 0..self.nrows {
            let xi = x[i];
            for (j, a) in self.row(i).iter().enumerate() {
                y[j] += a.conj() * xi;
            }
        }
        y
    }

    /// C = A * B.
    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.ncols, other.nrows);
        let mut c = CMat::zeros(self.nrows, other.ncols);
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let aik = self.get(i, k);
                if aik == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let brow = other.row(k);
                let crow = c.row_mut(i);
                for j in 0..other.ncols {
                    crow[j] += aik * brow[j];
                }
            }
        }
        c
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Frobenius inner product <A, B> = sum_ij A_ij conj(B_ij).
    pub fn frobenius_inner(&self, other: &CMat) -> Complex64 {
        debug_assert_eq!(self.data.len(), other.data.len());
        let mut s = Complex64::new(0.0, 0.0);
        for (a, b) in self.data.iter().zip(other.data.iter()) {
            s += a * b.conj();
        }
        s
    }

    pub fn conj(&self) -> CMat {
        CMat {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scaled(&self, s: Complex64) -> CMat {
        CMat { nrows: self.nrows, ncols: self.ncols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn add_scaled(&mut self, other: &CMat, s: Complex64) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += s * b;
        }
    }

    /// Index of the entry with largest modulus, with its value.
    pub fn argmax_abs(&self) -> (usize, usize, Complex64) {
        let mut best = (0usize, 0usize, Complex64::new(0.0, 0.0));
        let mut best_abs = -1.0;
        for i in 0..self.nrows {
            for (j, v) in self.row(i).iter().enumerate() {
                let a = v.norm_sqr();
                if a > best_abs {
                    best_abs = a;
                    best = (i, j, *v);
                }
            }
        }
        best
    }
}

/// Storage-compact complex matrix (single precision) used for the stacked
/// contour slices of the dense backend; products accumulate in f64.
#[derive(Debug, Clone)]
pub struct CMat32 {
    pub nrows: usize,
    pub ncols: usize,
    pub data: Vec<[f32; 2]>,
}

impl CMat32 {
    pub fn from_cmat(m: &CMat) -> Self {
        CMat32 {
            nrows: m.nrows,
            ncols: m.ncols,
            data: m.data.iter().map(|z| [z.re as f32, z.im as f32]).collect(),
        }
    }

    pub fn to_cmat(&self) -> CMat {
        CMat {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self.data.iter().map(|z| Complex64::new(z[0] as f64, z[1] as f64)).collect(),
        }
    }

    /// y += alpha * A x with f64 accumulation.
    pub fn matvec_acc(&self, x: &[Complex64], alpha: Complex64, y: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for i in 0..self.nrows {
            let row = &self.data[i * self.ncols..(i + 1) * self.ncols];
            let mut re = 0.0f64;
            let mut im = 0.0f64;
            for (a, b) in row.iter().zip(x.iter()) {
                let ar = a[0] as f64;
                let ai = a[1] as f64;
                re += ar * b.re - ai * b.im;
                im += ar * b.im + ai * b.re;
            }
            y[i] += alpha * Complex64::new(re, im);
        }
    }

    pub fn bytes(&self) -> usize {
        self.data.len() * core::mem::size_of::<[f32; 2]>()
    }
}

/// LU factorization with partial pivoting, in place. Returns the pivot rows.
pub struct Lu {
    lu: CMat,
    piv: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &CMat) -> Result<Lu> {
        if a.nrows != a.ncols {
            return Err(Error::Dimension("LU requires a square matrix"));
        }
        let n = a.nrows;
        let mut lu = a.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut pmax = lu.get(k, k).norm_sqr();
            for i in k + 1..n {
                let v = lu.get(i, k).norm_sqr();
                if v > pmax {
                    pmax = v;
                    p = i;
                }
            }
            if pmax == 0.0 {
                return Err(Error::Singular("zero pivot in LU factorization"));
            }
            if p != k {
                for j in 0..n {
                    let t = lu.get(k, j);
                    lu.set(k, j, lu.get(p, j));
                    lu.set(p, j, t);
                }
                piv.swap(k, p);
            }
            let d = lu.get(k, k);
            for i in k + 1..n {
                let f = lu.get(i, k) / d;
                lu.set(i, k, f);
                for j in k + 1..n {
                    let v = lu.get(i, j) - f * lu.get(k, j);
                    lu.set(i, j, v);
                }
            }
        }
        Ok(Lu { lu, piv })
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.lu.nrows;
        debug_assert_eq!(b.len(), n);
        let mut x: Vec<Complex64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu.get(i, j) * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu.get(i, j) * x[j];
            }
            x[i] = s / self.lu.get(i, i);
        }
        x
    }
}

/// Thin QR by modified Gram-Schmidt with one re-orthogonalization pass.
/// Rank-deficient columns come out as zero columns of Q with a zero R row.
pub fn qr_mgs(a: &CMat) -> (CMat, CMat) {
    let m = a.nrows;
    let n = a.ncols;
    let mut q = a.clone();
    let mut r = CMat::zeros(n, n);
    for j in 0..n {
        for _pass in 0..2 {
            for k in 0..j {
                // <q_k, q_j>
                let mut dot = Complex64::new(0.0, 0.0);
                for i in 0..m {
                    dot += q.get(i, k).conj() * q.get(i, j);
                }
                for i in 0..m {
                    let v = q.get(i, j) - dot * q.get(i, k);
                    q.set(i, j, v);
                }
                let rkj = r.get(k, j) + dot;
                r.set(k, j, rkj);
            }
        }
        let mut nrm = 0.0;
        for i in 0..m {
            nrm += q.get(i, j).norm_sqr();
        }
        let nrm = nrm.sqrt();
        r.set(j, j, Complex64::new(nrm, 0.0));
        if nrm > 0.0 {
            let inv = 1.0 / nrm;
            for i in 0..m {
                let v = q.get(i, j) * inv;
                q.set(i, j, v);
            }
        }
    }
    (q, r)
}

/// One-sided Jacobi SVD of a small complex matrix: A = U diag(sigma) V^H.
/// Singular values are sorted in descending order.
pub fn svd_jacobi(a: &CMat) -> (CMat, Vec<f64>, CMat) {
    let m = a.nrows;
    let n = a.ncols;
    let mut u = a.clone();
    let mut v = CMat::zeros(n, n);
    for j in 0..n {
        v.set(j, j, Complex64::new(1.0, 0.0));
    }
    let eps = f64::EPSILON;
    for _sweep in 0..40 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = Complex64::new(0.0, 0.0);
                for i in 0..m {
                    let cp = u.get(i, p);
                    let cq = u.get(i, q);
                    app += cp.norm_sqr();
                    aqq += cq.norm_sqr();
                    apq += cp.conj() * cq;
                }
                let g = apq.norm();
                if g <= eps * (app * aqq).sqrt() || g == 0.0 {
                    continue;
                }
                off = off.max(g);
                let phase = apq / g;
                // rotate the pair (p, q * conj(phase)) by a real Jacobi angle
                let tau = (aqq - app) / (2.0 * g);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let cp = u.get(i, p);
                    let cq = u.get(i, q) * phase.conj();
                    u.set(i, p, cp.scale(c) - cq.scale(s));
                    u.set(i, q, (cp.scale(s) + cq.scale(c)) * phase);
                }
                for i in 0..n {
                    let vp = v.get(i, p);
                    let vq = v.get(i, q) * phase.conj();
                    v.set(i, p, vp.scale(c) - vq.scale(s));
                    v.set(i, q, (vp.scale(s) + vq.scale(c)) * phase);
                }
            }
        }
        if off <= eps {
            break;
        }
    }
    let mut sig: Vec<f64> = (0..n)
        .map(|j| {
            let mut s = 0.0;
            for i in 0..m {
                s += u.get(i, j).norm_sqr();
            }
            s.sqrt()
        })
        .collect();
    // normalize columns of U
    for j in 0..n {
        if sig[j] > 0.0 {
            let inv = 1.0 / sig[j];
            for i in 0..m {
                let val = u.get(i, j) * inv;
                u.set(i, j, val);
            }
        }
    }
    // sort descending
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sig[b].partial_cmp(&sig[a]).unwrap());
    let u2 = CMat::from_fn(m, n, |i, j| u.get(i, order[j]));
    let v2 = CMat::from_fn(n, n, |i, j| v.get(i, order[j]));
    let sig2: Vec<f64> = order.iter().map(|&j| sig[j]).collect();
    sig = sig2;
    (u2, sig, v2)
}

/// Element access used by the cross-approximation routines: global (i, j)
/// entries of an implicitly defined matrix, with bulk row/column fills.
pub trait EntryOracle {
    fn entry(&self, i: usize, j: usize) -> Complex64;

    fn fill_row(&self, i: usize, cols: &[usize], out: &mut [Complex64]) {
        for (o, &j) in out.iter_mut().zip(cols.iter()) {
            *o = self.entry(i, j);
        }
    }

    fn fill_col(&self, rows: &[usize], j: usize, out: &mut [Complex64]) {
        for (o, &i) in out.iter_mut().zip(rows.iter()) {
            *o = self.entry(i, j);
        }
    }
}

impl EntryOracle for CMat {
    fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.get(i, j)
    }
}

pub fn vec_norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vec_dot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    // <x, y> = sum conj(x_i) y_i
    x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum()
}
