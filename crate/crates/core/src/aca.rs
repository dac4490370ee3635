//! Partially pivoted adaptive cross approximation with QR+SVD recompression,
//! and the H-matrix representation of one operator slice (dense near-field
//! blocks, low-rank far-field blocks) with its matrix-vector product.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)] // f64 math through libm in no_std builds
use num_traits::Float;

use crate::error::{Error, Result};
use crate::htree::{BlockClusterTree, ClusterTree};
use crate::linalg::{qr_mgs, svd_jacobi, vec_dot, vec_norm, CMat, EntryOracle};

/// Low-rank factors U V^H of one matrix block.
#[derive(Debug, Clone)]
pub struct LowRankBlock {
    /// rows x r
    pub u: CMat,
    /// cols x r
    pub v: CMat,
}

impl LowRankBlock {
    pub fn zero(nrows: usize, ncols: usize) -> Self {
        LowRankBlock { u: CMat::zeros(nrows, 0), v: CMat::zeros(ncols, 0) }
    }

    pub fn rank(&self) -> usize {
        self.u.ncols
    }

    pub fn nrows(&self) -> usize {
        self.u.nrows
    }

    pub fn ncols(&self) -> usize {
        self.v.nrows
    }

    /// y += alpha * U (V^H x).
    pub fn matvec_acc(&self, x: &[Complex64], alpha: Complex64, y: &mut [Complex64]) {
        let r = self.rank();
        if r == 0 {
            return;
        }
        let mut inner = vec![Complex64::new(0.0, 0.0); r];
        for j in 0..self.v.nrows {
            let xj = x[j];
            for (k, acc) in inner.iter_mut().enumerate() {
                *acc += self.v.get(j, k).conj() * xj;
            }
        }
        for i in 0..self.u.nrows {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, z) in inner.iter().enumerate() {
                acc += self.u.get(i, k) * z;
            }
            y[i] += alpha * acc;
        }
    }

    pub fn densify(&self) -> CMat {
        let mut a = CMat::zeros(self.nrows(), self.ncols());
        for k in 0..self.rank() {
            for i in 0..self.nrows() {
                let uik = self.u.get(i, k);
                for j in 0..self.ncols() {
                    let cur = a.get(i, j);
                    a.set(i, j, cur + uik * self.v.get(j, k).conj());
                }
            }
        }
        a
    }

    /// Frobenius norm from the factors.
    pub fn frobenius_norm(&self) -> f64 {
        frobenius_inner_lr(self, self).re.max(0.0).sqrt()
    }

    pub fn bytes(&self) -> usize {
        (self.u.data.len() + self.v.data.len()) * core::mem::size_of::<Complex64>()
    }
}

/// <U1 V1^H, U2 V2^H>_F = trace((U2^H U1)(V1^H V2)).
pub fn frobenius_inner_lr(a: &LowRankBlock, b: &LowRankBlock) -> Complex64 {
    let ra = a.rank();
    let rb = b.rank();
    if ra == 0 || rb == 0 {
        return Complex64::new(0.0, 0.0);
    }
    // G1[kb, ka] = u_b(:,kb)^H u_a(:,ka); G2[ka, kb] = v_a(:,ka)^H v_b(:,kb)
    let mut acc = Complex64::new(0.0, 0.0);
    for ka in 0..ra {
        for kb in 0..rb {
            let g1 = vec_dot(&b.u.column(kb), &a.u.column(ka));
            let g2 = vec_dot(&a.v.column(ka), &b.v.column(kb));
            acc += g1 * g2;
        }
    }
    acc
}

/// Partially pivoted ACA of the block `rows x cols` of `oracle`, stopping at
/// ||u_k|| ||v_k|| <= eps ||S_k||_F (incremental Frobenius norm).
pub fn aca_block(
    oracle: &dyn EntryOracle,
    rows: &[usize],
    cols: &[usize],
    eps: f64,
) -> Result<LowRankBlock> {
    if !(eps > 0.0) {
        return Err(Error::Domain("ACA tolerance must be positive"));
    }
    let m = rows.len();
    let n = cols.len();
    let max_rank = m.min(n);
    let mut us: Vec<Vec<Complex64>> = Vec::new();
    let mut vs: Vec<Vec<Complex64>> = Vec::new();
    let mut row_used = vec![false; m];
    let mut col_used = vec![false; n];
    let mut norm2 = 0.0f64;
    let mut next_row = 0usize;
    let mut rows_consumed = 0usize;
    let mut row_buf = vec![Complex64::new(0.0, 0.0); n];
    let mut col_buf = vec![Complex64::new(0.0, 0.0); m];
    while us.len() < max_rank && rows_consumed < m {
        let i = next_row;
        // residual row i
        oracle.fill_row(rows[i], cols, &mut row_buf);
        for (k, u) in us.iter().enumerate() {
            let ui = u[i];
            for (j, r) in row_buf.iter_mut().enumerate() {
                *r -= ui * vs[k][j].conj();
            }
        }
        let mut jstar = usize::MAX;
        let mut best = 0.0;
        for (j, r) in row_buf.iter().enumerate() {
            if col_used[j] {
                continue;
            }
            let a = r.norm_sqr();
            if a > best {
                best = a;
                jstar = j;
            }
        }
        let scale = if norm2 > 0.0 { norm2.sqrt() / (m * n) as f64 } else { 1e-300 };
        if jstar == usize::MAX || best.sqrt() <= 1e-300f64.max(1e-15 * scale) {
            // zero pivot row: consume it and advance cyclically
            row_used[i] = true;
            rows_consumed += 1;
            let mut nx = (i + 1) % m;
            while row_used[nx] && rows_consumed < m {
                nx = (nx + 1) % m;
            }
            next_row = nx;
            continue;
        }
        let delta = row_buf[jstar];
        // residual column jstar
        oracle.fill_col(rows, cols[jstar], &mut col_buf);
        for (k, u) in us.iter().enumerate() {
            let vj = vs[k][jstar].conj();
            for (i2, c) in col_buf.iter_mut().enumerate() {
                *c -= u[i2] * vj;
            }
        }
        let u_new: Vec<Complex64> = col_buf.iter().map(|c| c / delta).collect();
        let v_new: Vec<Complex64> = row_buf.iter().map(|r| r.conj()).collect();
        // incremental norm of the running approximation
        let un = vec_norm(&u_new);
        let vn = vec_norm(&v_new);
        let mut cross = Complex64::new(0.0, 0.0);
        for (k, u) in us.iter().enumerate() {
            cross += vec_dot(u, &u_new) * vec_dot(&v_new, &vs[k]);
        }
        norm2 += 2.0 * cross.re + un * un * vn * vn;
        row_used[i] = true;
        col_used[jstar] = true;
        rows_consumed += 1;
        // next pivot row: largest residual magnitude in the new column
        let mut nx = usize::MAX;
        let mut nbest = -1.0;
        for (i2, c) in u_new.iter().enumerate() {
            if row_used[i2] {
                continue;
            }
            let a = c.norm_sqr();
            if a > nbest {
                nbest = a;
                nx = i2;
            }
        }
        // a cross below the tolerance carries no information: drop it and stop
        if un * vn <= eps * norm2.max(0.0).sqrt() && !us.is_empty() {
            break;
        }
        us.push(u_new);
        vs.push(v_new);
        if nx == usize::MAX {
            break;
        }
        next_row = nx;
    }
    let r = us.len();
    let u = CMat::from_fn(m, r, |i, k| us[k][i]);
    let v = CMat::from_fn(n, r, |j, k| vs[k][j]);
    Ok(LowRankBlock { u, v })
}

/// QR on both factors, SVD of the small core, singular values truncated at
/// sigma_k <= eps * sigma_1. The rank never grows.
pub fn recompress(block: &LowRankBlock, eps: f64) -> LowRankBlock {
    let r = block.rank();
    if r == 0 {
        return block.clone();
    }
    let (qu, ru) = qr_mgs(&block.u);
    let (qv, rv) = qr_mgs(&block.v);
    // core = R_u R_v^H
    let rvh = CMat::from_fn(rv.ncols, rv.nrows, |i, j| rv.get(j, i).conj());
    let core = ru.matmul(&rvh);
    let (w, sig, z) = svd_jacobi(&core);
    let smax = sig.first().copied().unwrap_or(0.0);
    let keep = sig
        .iter()
        .take_while(|&&s| s > eps * smax && s > 0.0)
        .count()
        .min(r);
    let mut u = CMat::zeros(block.nrows(), keep);
    let mut v = CMat::zeros(block.ncols(), keep);
    for k in 0..keep {
        for i in 0..block.nrows() {
            let mut acc = Complex64::new(0.0, 0.0);
            for l in 0..r {
                acc += qu.get(i, l) * w.get(l, k);
            }
            u.set(i, k, acc * sig[k]);
        }
        for j in 0..block.ncols() {
            let mut acc = Complex64::new(0.0, 0.0);
            for l in 0..r {
                acc += qv.get(j, l) * z.get(l, k);
            }
            v.set(j, k, acc);
        }
    }
    LowRankBlock { u, v }
}

/// Dense or low-rank payload of one partition block.
#[derive(Debug, Clone)]
pub enum BlockData {
    Dense(CMat),
    LowRank(LowRankBlock),
}

impl BlockData {
    pub fn nrows(&self) -> usize {
        match self {
            BlockData::Dense(m) => m.nrows,
            BlockData::LowRank(b) => b.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            BlockData::Dense(m) => m.ncols,
            BlockData::LowRank(b) => b.ncols(),
        }
    }

    /// y += alpha * B x (local index spaces).
    pub fn matvec_acc(&self, x: &[Complex64], alpha: Complex64, y: &mut [Complex64]) {
        match self {
            BlockData::Dense(m) => m.matvec_acc(x, alpha, y),
            BlockData::LowRank(b) => b.matvec_acc(x, alpha, y),
        }
    }

    pub fn densify(&self) -> CMat {
        match self {
            BlockData::Dense(m) => m.clone(),
            BlockData::LowRank(b) => b.densify(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        match self {
            BlockData::Dense(m) => m.frobenius_norm(),
            BlockData::LowRank(b) => b.frobenius_norm(),
        }
    }

    pub fn bytes(&self) -> usize {
        match self {
            BlockData::Dense(m) => m.data.len() * core::mem::size_of::<Complex64>(),
            BlockData::LowRank(b) => b.bytes(),
        }
    }

    /// Frobenius inner product <A, B> of two payloads of equal shape.
    pub fn frobenius_inner(&self, other: &BlockData) -> Complex64 {
        match (self, other) {
            (BlockData::Dense(a), BlockData::Dense(b)) => a.frobenius_inner(b),
            (BlockData::LowRank(a), BlockData::LowRank(b)) => frobenius_inner_lr(a, b),
            (BlockData::Dense(a), BlockData::LowRank(b)) => {
                // tr(A (U V^H)^H) = <A V, U>
                let av = a.matmul(&b.v);
                av.frobenius_inner(&b.u)
            }
            (BlockData::LowRank(_), BlockData::Dense(_)) => other.frobenius_inner(self).conj(),
        }
    }
}

/// Explicit block layout shared by all operator slices over one partition:
/// the global row/column indices of every block.
#[derive(Debug)]
pub struct PartitionLayout {
    pub blocks: Vec<BlockIndices>,
    pub nrows: usize,
    pub ncols: usize,
}

#[derive(Debug, Clone)]
pub struct BlockIndices {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub admissible: bool,
}

impl PartitionLayout {
    pub fn from_trees(rows: &ClusterTree, cols: &ClusterTree, bt: &BlockClusterTree) -> Arc<Self> {
        let blocks = bt
            .blocks
            .iter()
            .map(|b| BlockIndices {
                rows: rows.indices(&rows.nodes[b.row_node]).to_vec(),
                cols: cols.indices(&cols.nodes[b.col_node]).to_vec(),
                admissible: b.admissible,
            })
            .collect();
        Arc::new(PartitionLayout {
            blocks,
            nrows: rows.perm.len(),
            ncols: cols.perm.len(),
        })
    }

    /// Trivial single-block layout (dense fallback / small problems).
    pub fn single_block(nrows: usize, ncols: usize) -> Arc<Self> {
        Arc::new(PartitionLayout {
            blocks: alloc::vec![BlockIndices {
                rows: (0..nrows).collect(),
                cols: (0..ncols).collect(),
                admissible: false,
            }],
            nrows,
            ncols,
        })
    }
}

/// One operator slice in H-matrix form over a shared partition layout.
#[derive(Debug, Clone)]
pub struct HMatrixFace {
    pub layout: Arc<PartitionLayout>,
    pub data: Vec<BlockData>,
}

impl HMatrixFace {
    /// Assemble from an entry oracle: near blocks dense, admissible blocks by
    /// ACA with recompression at `eps`.
    pub fn assemble(layout: &Arc<PartitionLayout>, oracle: &dyn EntryOracle, eps: f64) -> Result<Self> {
        let mut data = Vec::with_capacity(layout.blocks.len());
        for b in &layout.blocks {
            if b.admissible {
                let lr = aca_block(oracle, &b.rows, &b.cols, eps)?;
                data.push(BlockData::LowRank(recompress(&lr, eps)));
            } else {
                let mut m = CMat::zeros(b.rows.len(), b.cols.len());
                for (ii, &i) in b.rows.iter().enumerate() {
                    oracle.fill_row(i, &b.cols, m.row_mut(ii));
                }
                data.push(BlockData::Dense(m));
            }
        }
        Ok(HMatrixFace { layout: layout.clone(), data })
    }

    /// y = H x in the original (unpermuted) index spaces.
    pub fn matvec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.layout.ncols {
            return Err(Error::Dimension("H-matrix matvec length mismatch"));
        }
        let mut y = vec![Complex64::new(0.0, 0.0); self.layout.nrows];
        let one = Complex64::new(1.0, 0.0);
        let mut xg = Vec::new();
        let mut yg = Vec::new();
        for (b, d) in self.layout.blocks.iter().zip(self.data.iter()) {
            xg.clear();
            xg.extend(b.cols.iter().map(|&j| x[j]));
            yg.clear();
            yg.resize(b.rows.len(), Complex64::new(0.0, 0.0));
            d.matvec_acc(&xg, one, &mut yg);
            for (&i, v) in b.rows.iter().zip(yg.iter()) {
                y[i] += v;
            }
        }
        Ok(y)
    }

    pub fn bytes(&self) -> usize {
        self.data.iter().map(|d| d.bytes()).sum()
    }

    pub fn max_rank(&self) -> usize {
        self.data
            .iter()
            .map(|d| match d {
                BlockData::LowRank(b) => b.rank(),
                BlockData::Dense(_) => 0,
            })
            .max()
            .unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assemble::Assembler;
    use crate::htree::{build_block_tree, build_cluster_tree};
    use crate::mesh::{unit_cube, DofMap};
    use crate::geom::V3;

    fn splitmix(state: &mut u64) -> f64 {
        *state = state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = *state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z = z ^ (z >> 31);
        (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    }

    fn random_vec(n: usize, seed: u64) -> Vec<Complex64> {
        let mut s = seed;
        (0..n).map(|_| Complex64::new(splitmix(&mut s), splitmix(&mut s))).collect()
    }

    fn outer_products(m: usize, n: usize, rank: usize, seed: u64) -> CMat {
        let mut a = CMat::zeros(m, n);
        for k in 0..rank {
            let u = random_vec(m, seed + 2 * k as u64);
            let v = random_vec(n, seed + 2 * k as u64 + 1);
            for i in 0..m {
                for j in 0..n {
                    let cur = a.get(i, j);
                    a.set(i, j, cur + u[i] * v[j]);
                }
            }
        }
        a
    }

    #[test]
    fn exact_rank_one_terminates_at_one() {
        let a = outer_products(12, 9, 1, 3);
        let rows: Vec<usize> = (0..12).collect();
        let cols: Vec<usize> = (0..9).collect();
        let lr = aca_block(&a, &rows, &cols, 1e-12).unwrap();
        assert_eq!(lr.rank(), 1);
        let d = lr.densify();
        for (x, y) in d.data.iter().zip(a.data.iter()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn exact_rank_three_recovered() {
        let a = outer_products(20, 15, 3, 11);
        let rows: Vec<usize> = (0..20).collect();
        let cols: Vec<usize> = (0..15).collect();
        let lr = aca_block(&a, &rows, &cols, 1e-10).unwrap();
        assert_eq!(lr.rank(), 3);
        let err = {
            let d = lr.densify();
            let mut e = 0.0f64;
            for (x, y) in d.data.iter().zip(a.data.iter()) {
                e += (x - y).norm_sqr();
            }
            e.sqrt()
        };
        assert!(err < 1e-10 * a.frobenius_norm());
    }

    #[test]
    fn zero_block_gives_rank_zero() {
        let a = CMat::zeros(8, 8);
        let idx: Vec<usize> = (0..8).collect();
        let lr = aca_block(&a, &idx, &idx, 1e-8).unwrap();
        assert_eq!(lr.rank(), 0);
    }

    #[test]
    fn smooth_kernel_block_close_to_dense() {
        // two distant cube patches at a complex frequency
        let mesh = unit_cube(2).unwrap();
        let asm = Assembler::new(&mesh, 1.0).unwrap();
        let p0 = DofMap::p0_all(&mesh);
        // rows: centroids on the +x face; cols: elements on the -x face
        let rows: Vec<usize> = (0..mesh.n_triangles()).filter(|&e| mesh.normal(e).x() > 0.5).collect();
        let cols: Vec<usize> = (0..mesh.n_triangles()).filter(|&e| mesh.normal(e).x() < -0.5).collect();
        let pts: Vec<V3> = (0..mesh.n_triangles()).map(|e| mesh.centroid(e)).collect();
        struct Oracle<'a> {
            asm: &'a Assembler<'a>,
            pts: &'a [V3],
            s: Complex64,
        }
        impl EntryOracle for Oracle<'_> {
            fn entry(&self, i: usize, j: usize) -> Complex64 {
                self.asm.slp_entry(&self.pts[i], j, self.s)
            }
        }
        let oracle = Oracle { asm: &asm, pts: &pts, s: Complex64::new(1.0, 1.0) };
        let eps = 1e-6;
        let lr = aca_block(&oracle, &rows, &cols, eps).unwrap();
        assert!(lr.rank() < rows.len().min(cols.len()), "rank {}", lr.rank());
        // dense comparison
        let mut dense = CMat::zeros(rows.len(), cols.len());
        for (ii, &i) in rows.iter().enumerate() {
            for (jj, &j) in cols.iter().enumerate() {
                dense.set(ii, jj, oracle.entry(i, j));
            }
        }
        let mut err = 0.0f64;
        let approx = lr.densify();
        for (x, y) in approx.data.iter().zip(dense.data.iter()) {
            err += (x - y).norm_sqr();
        }
        let rel = err.sqrt() / dense.frobenius_norm();
        assert!(rel <= 10.0 * eps, "relative error {rel}");
        let _ = p0;
    }

    #[test]
    fn recompress_reduces_inflated_rank() {
        let a = outer_products(16, 12, 4, 5);
        let rows: Vec<usize> = (0..16).collect();
        let cols: Vec<usize> = (0..12).collect();
        let lr = aca_block(&a, &rows, &cols, 1e-12).unwrap();
        // duplicate columns to inflate the rank artificially
        let r = lr.rank();
        let u2 = CMat::from_fn(16, 2 * r, |i, k| lr.u.get(i, k % r));
        let v2 = CMat::from_fn(12, 2 * r, |j, k| {
            if k < r {
                lr.v.get(j, k)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let inflated = LowRankBlock { u: u2, v: v2 };
        let rc = recompress(&inflated, 1e-12);
        assert!(rc.rank() <= r, "rank {} after recompression", rc.rank());
        let d1 = inflated.densify();
        let d2 = rc.densify();
        let mut err = 0.0f64;
        for (x, y) in d1.data.iter().zip(d2.data.iter()) {
            err = err.max((x - y).norm());
        }
        assert!(err < 1e-10 * d1.frobenius_norm());
    }

    #[test]
    fn recompress_eps_zero_keeps_product() {
        let a = outer_products(10, 10, 5, 9);
        let idx: Vec<usize> = (0..10).collect();
        let lr = aca_block(&a, &idx, &idx, 1e-13).unwrap();
        let rc = recompress(&lr, 0.0);
        assert!(rc.rank() <= lr.rank());
        let d1 = lr.densify();
        let d2 = rc.densify();
        for (x, y) in d1.data.iter().zip(d2.data.iter()) {
            assert!((x - y).norm() < 1e-12 * d1.frobenius_norm());
        }
    }

    #[test]
    fn hmatrix_identity_face() {
        let layout = PartitionLayout::single_block(6, 6);
        let eye = CMat::from_fn(6, 6, |i, j| {
            Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0)
        });
        let face = HMatrixFace { layout: layout.clone(), data: alloc::vec![BlockData::Dense(eye)] };
        let x = random_vec(6, 77);
        let y = face.matvec(&x).unwrap();
        for (a, b) in x.iter().zip(y.iter()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn hmatrix_matches_dense_slp() {
        let mesh = unit_cube(2).unwrap();
        let asm = Assembler::new(&mesh, 1.0).unwrap();
        let p0 = DofMap::p0_all(&mesh);
        let pts: Vec<V3> = (0..mesh.n_triangles()).map(|e| mesh.centroid(e)).collect();
        let tree = build_cluster_tree(&pts, 20).unwrap();
        let bt = build_block_tree(&tree, &tree, 0.8).unwrap();
        let layout = PartitionLayout::from_trees(&tree, &tree, &bt);
        let s = Complex64::new(1.0, 1.0);
        struct Oracle<'a> {
            asm: &'a Assembler<'a>,
            pts: &'a [V3],
            s: Complex64,
        }
        impl EntryOracle for Oracle<'_> {
            fn entry(&self, i: usize, j: usize) -> Complex64 {
                self.asm.slp_entry(&self.pts[i], j, self.s)
            }
        }
        let oracle = Oracle { asm: &asm, pts: &pts, s };
        let eps = 1e-5;
        let face = HMatrixFace::assemble(&layout, &oracle, eps).unwrap();
        let dense = asm.assemble_slp(&pts, &p0, s).unwrap();
        let x = random_vec(pts.len(), 42);
        let y_h = face.matvec(&x).unwrap();
        let y_d = dense.matvec(&x);
        let scale = vec_norm(&y_d);
        let mut err = 0.0f64;
        for (a, b) in y_h.iter().zip(y_d.iter()) {
            err += (a - b).norm_sqr();
        }
        assert!(err.sqrt() <= 10.0 * eps * scale, "rel err {}", err.sqrt() / scale);
        // linearity
        let alpha = Complex64::new(0.3, -1.2);
        let xs: Vec<Complex64> = x.iter().map(|v| v * alpha).collect();
        let ys = face.matvec(&xs).unwrap();
        for (a, b) in ys.iter().zip(y_h.iter()) {
            assert!((a - b * alpha).norm() < 1e-12 * scale);
        }
    }

    #[test]
    fn conjugate_frequency_reconstructions_conjugate() {
        let mesh = unit_cube(1).unwrap();
        let asm = Assembler::new(&mesh, 1.0).unwrap();
        let pts: Vec<V3> = (0..mesh.n_triangles()).map(|e| mesh.centroid(e)).collect();
        let rows: Vec<usize> = (0..mesh.n_triangles()).filter(|&e| mesh.normal(e).x() > 0.5).collect();
        let cols: Vec<usize> = (0..mesh.n_triangles()).filter(|&e| mesh.normal(e).x() < -0.5).collect();
        struct Oracle<'a> {
            asm: &'a Assembler<'a>,
            pts: &'a [V3],
            s: Complex64,
        }
        impl EntryOracle for Oracle<'_> {
            fn entry(&self, i: usize, j: usize) -> Complex64 {
                self.asm.slp_entry(&self.pts[i], j, self.s)
            }
        }
        let s = Complex64::new(0.7, 1.9);
        let a = aca_block(&Oracle { asm: &asm, pts: &pts, s }, &rows, &cols, 1e-10).unwrap();
        let b = aca_block(&Oracle { asm: &asm, pts: &pts, s: s.conj() }, &rows, &cols, 1e-10).unwrap();
        let da = a.densify();
        let db = b.densify();
        for (x, y) in da.data.iter().zip(db.data.iter()) {
            assert!((x.conj() - y).norm() < 1e-12 * da.frobenius_norm());
        }
    }
}
