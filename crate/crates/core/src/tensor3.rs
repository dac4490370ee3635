//! Blockwise adaptive cross approximation over the frequency axis (3D-ACA):
//! each block of the partitioned operator is approximated by a short sum of
//! faces (matrix slices at adaptively selected frequencies) times fibers
//! (one matrix entry across all frequencies), with the recursive Frobenius
//! norm as the stopping measure and the separated tensor-vector convolution.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)] // f64 math through libm in no_std builds
use num_traits::Float;

use crate::aca::{aca_block, recompress, BlockData, PartitionLayout};
use crate::error::{Error, Result};
use crate::linalg::{CMat, EntryOracle};

/// Entry access to one block of the frequency-stacked operator tensor:
/// ENTRY(i, j, k) in local block indices, plus bulk variants.
pub trait FrequencyEntry {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn n_freq(&self) -> usize;
    fn entry(&self, i: usize, j: usize, k: usize) -> Complex64;

    /// All frequencies at one position (shares the geometry pass).
    fn fiber(&self, i: usize, j: usize, out: &mut [Complex64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.entry(i, j, k);
        }
    }

    fn slice_row(&self, k: usize, i: usize, out: &mut [Complex64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.entry(i, j, k);
        }
    }

    fn slice_col(&self, k: usize, j: usize, out: &mut [Complex64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.entry(i, j, k);
        }
    }
}

/// How the faces of one block are represented.
#[derive(Debug, Clone, Copy)]
pub enum FaceMode {
    /// Materialize the residual slice densely (near-field blocks).
    Dense,
    /// Approximate the residual slice by 2D-ACA with recompression.
    Aca { eps: f64 },
}

/// One cross: a face at the selected frequency and the pivot-normalized
/// fiber across all frequencies.
#[derive(Debug, Clone)]
pub struct FrequencyCross {
    pub face: BlockData,
    pub fiber: Vec<Complex64>,
    /// (row, column, frequency) of the defining pivot, local indices.
    pub pivot: (usize, usize, usize),
    pub pivot_value: Complex64,
}

/// All crosses of one block.
#[derive(Debug, Clone, Default)]
pub struct BlockTensor {
    pub crosses: Vec<FrequencyCross>,
    /// True when the rank cap stopped the iteration before the tolerance.
    pub capped: bool,
}

impl BlockTensor {
    pub fn rank(&self) -> usize {
        self.crosses.len()
    }

    pub fn bytes(&self) -> usize {
        self.crosses
            .iter()
            .map(|c| c.face.bytes() + c.fiber.len() * core::mem::size_of::<Complex64>())
            .sum()
    }

    /// Reconstruct the block slice at frequency k.
    pub fn reconstruct_slice(&self, nrows: usize, ncols: usize, k: usize) -> CMat {
        let mut m = CMat::zeros(nrows, ncols);
        for c in &self.crosses {
            let f = c.fiber[k];
            if f.norm_sqr() == 0.0 {
                continue;
            }
            let d = c.face.densify();
            m.add_scaled(&d, f);
        }
        m
    }
}

/// Entry of a block payload at local indices.
fn face_entry(face: &BlockData, i: usize, j: usize) -> Complex64 {
    match face {
        BlockData::Dense(m) => m.get(i, j),
        BlockData::LowRank(b) => {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..b.rank() {
                acc += b.u.get(i, k) * b.v.get(j, k).conj();
            }
            acc
        }
    }
}

/// Pivot of a face: the entry of largest modulus. Low-rank faces are
/// densified transiently and the dense copy discarded; `None` flags an
/// (numerically) empty face.
pub fn face_pivot(face: &BlockData) -> Option<(usize, usize, Complex64)> {
    let (i, j, v) = match face {
        BlockData::Dense(m) => m.argmax_abs(),
        BlockData::LowRank(b) => {
            if b.rank() == 0 {
                return None;
            }
            b.densify().argmax_abs()
        }
    };
    if v.norm() < 1e-300 {
        None
    } else {
        Some((i, j, v))
    }
}

/// Residual slice oracle at one frequency: exact entries minus the current
/// reconstruction.
struct ResidualSlice<'a> {
    fe: &'a dyn FrequencyEntry,
    crosses: &'a [FrequencyCross],
    k: usize,
}

impl EntryOracle for ResidualSlice<'_> {
    fn entry(&self, i: usize, j: usize) -> Complex64 {
        let mut v = self.fe.entry(i, j, self.k);
        for c in self.crosses {
            let f = c.fiber[self.k];
            if f.norm_sqr() != 0.0 {
                v -= face_entry(&c.face, i, j) * f;
            }
        }
        v
    }

    fn fill_row(&self, i: usize, cols: &[usize], out: &mut [Complex64]) {
        debug_assert_eq!(cols.len(), self.fe.ncols());
        self.fe.slice_row(self.k, i, out);
        for c in self.crosses {
            let f = c.fiber[self.k];
            if f.norm_sqr() == 0.0 {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                *o -= face_entry(&c.face, i, j) * f;
            }
        }
    }

    fn fill_col(&self, rows: &[usize], j: usize, out: &mut [Complex64]) {
        debug_assert_eq!(rows.len(), self.fe.nrows());
        self.fe.slice_col(self.k, j, out);
        for c in self.crosses {
            let f = c.fiber[self.k];
            if f.norm_sqr() == 0.0 {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate() {
                *o -= face_entry(&c.face, i, j) * f;
            }
        }
    }
}

/// Blockwise 3D-ACA: faces are residual slices at adaptively selected
/// frequencies (the first is index 0), fibers the pivot-normalized residual
/// entries across frequencies. Stops when ||H_l||_F ||f_l||_2 <=
/// eps ||C^(l)||_F, the trailing sub-threshold cross being discarded; the
/// rank is capped at `r_max`.
pub fn three_d_aca(
    fe: &dyn FrequencyEntry,
    mode: FaceMode,
    eps: f64,
    r_max: usize,
) -> Result<BlockTensor> {
    if !(eps > 0.0) {
        return Err(Error::Domain("3D-ACA tolerance must be positive"));
    }
    let (m, n, nf) = (fe.nrows(), fe.ncols(), fe.n_freq());
    let all_rows: Vec<usize> = (0..m).collect();
    let all_cols: Vec<usize> = (0..n).collect();
    let mut crosses: Vec<FrequencyCross> = Vec::new();
    let mut norm2 = 0.0f64;
    let mut k_cur = 0usize;
    // already-selected frequencies are reproduced (their residual fiber value
    // is one by construction), so the next pick runs over the unused ones
    let mut k_used = vec![false; nf];
    let mut fiber_buf = vec![Complex64::new(0.0, 0.0); nf];
    let mut capped = false;
    loop {
        // residual face at the current frequency
        let face: BlockData = match mode {
            FaceMode::Dense => {
                let mut slice = CMat::zeros(m, n);
                for i in 0..m {
                    let oracle = ResidualSlice { fe, crosses: &crosses, k: k_cur };
                    oracle.fill_row(i, &all_cols, slice.row_mut(i));
                }
                BlockData::Dense(slice)
            }
            FaceMode::Aca { eps: eps_face } => {
                let oracle = ResidualSlice { fe, crosses: &crosses, k: k_cur };
                let lr = aca_block(&oracle, &all_rows, &all_cols, eps_face)?;
                BlockData::LowRank(recompress(&lr, eps_face))
            }
        };
        let Some((ip, jp, pv)) = face_pivot(&face) else {
            break; // empty residual: rank reached (possibly zero)
        };
        // fiber through the pivot, residual-corrected and pivot-normalized
        fe.fiber(ip, jp, &mut fiber_buf);
        for c in &crosses {
            let fe_val = face_entry(&c.face, ip, jp);
            for (k, o) in fiber_buf.iter_mut().enumerate() {
                *o -= fe_val * c.fiber[k];
            }
        }
        let fiber: Vec<Complex64> = fiber_buf.iter().map(|v| v / pv).collect();
        let hnorm = face.frobenius_norm();
        let fnorm = fiber.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        // candidate norm of C^(l) via the recursion over face/fiber Gram terms
        let mut cross_terms = Complex64::new(0.0, 0.0);
        for c in &crosses {
            let gf = c.face.frobenius_inner(&face);
            let gb: Complex64 = c
                .fiber
                .iter()
                .zip(fiber.iter())
                .map(|(a, b)| a * b.conj())
                .sum();
            cross_terms += gf * gb;
        }
        let norm2_cand = norm2 + 2.0 * cross_terms.re + hnorm * hnorm * fnorm * fnorm;
        if !crosses.is_empty() && hnorm * fnorm <= eps * norm2_cand.max(0.0).sqrt() {
            break; // the candidate is below tolerance: discard it and stop
        }
        if crosses.is_empty() && hnorm * fnorm == 0.0 {
            break; // identically zero block
        }
        norm2 = norm2_cand;
        k_used[k_cur] = true;
        // next frequency: largest fiber magnitude among unused indices
        let mut next_k = usize::MAX;
        let mut best = -1.0;
        for (k, f) in fiber.iter().enumerate() {
            if k_used[k] {
                continue;
            }
            let a = f.norm_sqr();
            if a > best {
                best = a;
                next_k = k;
            }
        }
        crosses.push(FrequencyCross { face, fiber, pivot: (ip, jp, k_cur), pivot_value: pv });
        if crosses.len() >= r_max.min(nf) {
            capped = r_max < nf;
            break;
        }
        if next_k == usize::MAX {
            break; // every frequency selected
        }
        k_cur = next_k;
    }
    Ok(BlockTensor { crosses, capped })
}

/// Frobenius norm of a cross stack by the Gram recursion,
/// ||C||_F^2 = sum_{d,d'} <H_d, H_d'> <f_d, f_d'>.
pub fn recursive_frobenius(crosses: &[FrequencyCross]) -> f64 {
    let r = crosses.len();
    let mut total = Complex64::new(0.0, 0.0);
    for d in 0..r {
        for dp in 0..r {
            let gf = crosses[d].face.frobenius_inner(&crosses[dp].face);
            let gb: Complex64 = crosses[d]
                .fiber
                .iter()
                .zip(crosses[dp].fiber.iter())
                .map(|(a, b)| a * b.conj())
                .sum();
            total += gf * gb;
        }
    }
    total.re.max(0.0).sqrt()
}

/// Separated tensor-vector convolution of one block:
/// sum_k face_k (sum_l fiber_k[l] w_l), the frequency sum collapsing first.
pub fn separated_convolution(crosses: &[FrequencyCross], weights: &[Vec<Complex64>]) -> Vec<Complex64> {
    let (nrows, ncols) = match crosses.first() {
        Some(c) => (c.face.nrows(), c.face.ncols()),
        None => return Vec::new(),
    };
    let mut y = vec![Complex64::new(0.0, 0.0); nrows];
    let mut z = vec![Complex64::new(0.0, 0.0); ncols];
    let one = Complex64::new(1.0, 0.0);
    for c in crosses {
        for v in z.iter_mut() {
            *v = Complex64::new(0.0, 0.0);
        }
        for (l, w) in weights.iter().enumerate() {
            let f = c.fiber[l];
            if f.norm_sqr() == 0.0 {
                continue;
            }
            for (acc, wv) in z.iter_mut().zip(w.iter()) {
                *acc += f * wv;
            }
        }
        c.face.matvec_acc(&z, one, &mut y);
    }
    y
}

/// Frequency-compressed operator: one cross stack per partition block.
#[derive(Debug)]
pub struct CompressedTensor {
    pub layout: Arc<PartitionLayout>,
    pub blocks: Vec<BlockTensor>,
    pub n_freq: usize,
    pub eps: f64,
}

impl CompressedTensor {
    /// y = sum_l Op(s_l) w_l over the stored representative frequencies;
    /// `weights[l]` are global column vectors.
    pub fn convolve(&self, weights: &[Vec<Complex64>]) -> Result<Vec<Complex64>> {
        if weights.len() != self.n_freq {
            return Err(Error::Dimension("one weight vector per stored frequency required"));
        }
        for w in weights {
            if w.len() != self.layout.ncols {
                return Err(Error::Dimension("weight vector length mismatch"));
            }
        }
        let mut y = vec![Complex64::new(0.0, 0.0); self.layout.nrows];
        let mut local: Vec<Vec<Complex64>> = Vec::new();
        for (bi, bt) in self.layout.blocks.iter().zip(self.blocks.iter()) {
            if bt.crosses.is_empty() {
                continue;
            }
            local.clear();
            local.resize(weights.len(), Vec::new());
            for (l, w) in weights.iter().enumerate() {
                local[l] = bi.cols.iter().map(|&j| w[j]).collect();
            }
            let yb = separated_convolution(&bt.crosses, &local);
            for (&i, v) in bi.rows.iter().zip(yb.iter()) {
                y[i] += v;
            }
        }
        Ok(y)
    }

    /// Stored bytes over the dense M_rows x M_cols x N_Q complex storage.
    pub fn compression_ratio(&self) -> f64 {
        let dense = self.layout.nrows as f64
            * self.layout.ncols as f64
            * self.n_freq as f64
            * core::mem::size_of::<Complex64>() as f64;
        self.bytes() as f64 / dense
    }

    pub fn bytes(&self) -> usize {
        self.blocks.iter().map(|b| b.bytes()).sum()
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.rank()).collect()
    }

    /// Histogram over frequency indices of every accepted cross.
    pub fn frequency_selection_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_freq];
        for b in &self.blocks {
            for c in &b.crosses {
                counts[c.pivot.2] += 1;
            }
        }
        counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMat;

    fn splitmix(state: &mut u64) -> f64 {
        *state = state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = *state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z = z ^ (z >> 31);
        (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    }

    fn random_cvec(n: usize, seed: &mut u64) -> Vec<Complex64> {
        (0..n).map(|_| Complex64::new(splitmix(seed), splitmix(seed))).collect()
    }

    /// Dense synthetic tensor built from explicit slices.
    struct TestTensor {
        slices: Vec<CMat>,
    }

    impl TestTensor {
        fn from_outer_products(m: usize, n: usize, nf: usize, rank: usize, seed: u64) -> Self {
            let mut s = seed;
            let mut slices: Vec<CMat> = (0..nf).map(|_| CMat::zeros(m, n)).collect();
            for _ in 0..rank {
                let h = random_cvec(m * n, &mut s);
                let f = random_cvec(nf, &mut s);
                for (k, slice) in slices.iter_mut().enumerate() {
                    for (idx, v) in h.iter().enumerate() {
                        slice.data[idx] += v * f[k];
                    }
                }
            }
            TestTensor { slices }
        }

        fn brute_force_norm(&self) -> f64 {
            self.slices.iter().map(|m| m.frobenius_norm().powi(2)).sum::<f64>().sqrt()
        }
    }

    impl FrequencyEntry for TestTensor {
        fn nrows(&self) -> usize {
            self.slices[0].nrows
        }
        fn ncols(&self) -> usize {
            self.slices[0].ncols
        }
        fn n_freq(&self) -> usize {
            self.slices.len()
        }
        fn entry(&self, i: usize, j: usize, k: usize) -> Complex64 {
            self.slices[k].get(i, j)
        }
    }

    #[test]
    fn exact_rank_one_tensor() {
        let t = TestTensor::from_outer_products(7, 5, 9, 1, 21);
        let bt = three_d_aca(&t, FaceMode::Dense, 1e-12, usize::MAX).unwrap();
        assert_eq!(bt.rank(), 1);
        for k in 0..9 {
            let rec = bt.reconstruct_slice(7, 5, k);
            for (a, b) in rec.data.iter().zip(t.slices[k].data.iter()) {
                assert!((a - b).norm() < 1e-12);
            }
        }
        // first cross defines frequency 0 with unit fiber entry there
        assert_eq!(bt.crosses[0].pivot.2, 0);
        assert!((bt.crosses[0].fiber[0] - 1.0).norm() < 1e-13);
    }

    #[test]
    fn exact_rank_two_tensor() {
        let t = TestTensor::from_outer_products(10, 8, 12, 2, 5);
        let bt = three_d_aca(&t, FaceMode::Dense, 1e-12, usize::MAX).unwrap();
        assert_eq!(bt.rank(), 2);
    }

    #[test]
    fn zero_tensor_rank_zero() {
        let t = TestTensor { slices: (0..6).map(|_| CMat::zeros(4, 4)).collect() };
        let bt = three_d_aca(&t, FaceMode::Dense, 1e-8, usize::MAX).unwrap();
        assert_eq!(bt.rank(), 0);
    }

    #[test]
    fn rank_cap_flags_block() {
        let t = TestTensor::from_outer_products(8, 8, 24, 2, 33);
        let bt = three_d_aca(&t, FaceMode::Dense, 1e-13, 1).unwrap();
        assert_eq!(bt.rank(), 1);
        assert!(bt.capped);
        let full = three_d_aca(&t, FaceMode::Dense, 1e-13, usize::MAX).unwrap();
        assert_eq!(full.rank(), 2);
        assert!(!full.capped);
    }

    #[test]
    fn interpolation_property_at_pivots() {
        // after the run, the reconstruction is exact at each cross pivot
        // position for its defining frequency
        let t = TestTensor::from_outer_products(9, 9, 11, 4, 8);
        let bt = three_d_aca(&t, FaceMode::Dense, 1e-10, usize::MAX).unwrap();
        for c in &bt.crosses {
            let (i, j, k) = c.pivot;
            let rec = bt.reconstruct_slice(9, 9, k);
            let err = (rec.get(i, j) - t.entry(i, j, k)).norm();
            assert!(err < 1e-10 * t.entry(i, j, k).norm().max(1e-30), "pivot ({i},{j},{k})");
        }
    }

    #[test]
    fn face_pivot_cases() {
        let m = CMat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => Complex64::new(1.0, 0.0),
            (0, 1) => Complex64::new(-3.0, 0.0),
            (1, 0) => Complex64::new(2.0, 0.0),
            _ => Complex64::new(0.5, 0.0),
        });
        let (i, j, v) = face_pivot(&BlockData::Dense(m)).unwrap();
        assert_eq!((i, j), (0, 1));
        assert!((v - Complex64::new(-3.0, 0.0)).norm() < 1e-15);
        // rank-1 face: pivot at argmax|u| x argmax|v|
        let u = CMat::from_fn(4, 1, |i, _| Complex64::new([0.1, 2.0, -0.5, 1.0][i], 0.0));
        let v = CMat::from_fn(3, 1, |j, _| Complex64::new([1.0, -4.0, 0.2][j], 0.0));
        let lr = crate::aca::LowRankBlock { u, v };
        let (i, j, _) = face_pivot(&BlockData::LowRank(lr)).unwrap();
        assert_eq!((i, j), (1, 1));
        // empty face
        assert!(face_pivot(&BlockData::Dense(CMat::zeros(3, 3))).is_none());
        assert!(face_pivot(&BlockData::LowRank(crate::aca::LowRankBlock::zero(3, 3))).is_none());
    }

    #[test]
    fn frobenius_single_and_orthogonal() {
        let mut s = 17u64;
        let h1 = CMat::from_fn(4, 4, |_, _| Complex64::new(splitmix(&mut s), splitmix(&mut s)));
        let f1 = random_cvec(6, &mut s);
        let c1 = FrequencyCross {
            face: BlockData::Dense(h1.clone()),
            fiber: f1.clone(),
            pivot: (0, 0, 0),
            pivot_value: Complex64::new(1.0, 0.0),
        };
        let n1 = recursive_frobenius(&[c1.clone()]);
        let expect = h1.frobenius_norm() * f1.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!((n1 - expect).abs() < 1e-12 * expect);
        // orthogonal crosses: fibers supported on disjoint indices
        let h2 = CMat::from_fn(4, 4, |_, _| Complex64::new(splitmix(&mut s), splitmix(&mut s)));
        let mut f2 = vec![Complex64::new(0.0, 0.0); 6];
        let mut f1o = vec![Complex64::new(0.0, 0.0); 6];
        f1o[0] = Complex64::new(2.0, 1.0);
        f2[3] = Complex64::new(-1.0, 0.5);
        let ca = FrequencyCross { face: BlockData::Dense(h1.clone()), fiber: f1o.clone(), pivot: (0, 0, 0), pivot_value: Complex64::new(1.0, 0.0) };
        let cb = FrequencyCross { face: BlockData::Dense(h2.clone()), fiber: f2.clone(), pivot: (0, 0, 3), pivot_value: Complex64::new(1.0, 0.0) };
        let n = recursive_frobenius(&[ca, cb]);
        let e1 = h1.frobenius_norm() * f1o[0].norm();
        let e2 = h2.frobenius_norm() * f2[3].norm();
        let expect = (e1 * e1 + e2 * e2).sqrt();
        assert!((n - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn frobenius_matches_brute_force_on_random_stacks() {
        // random cross stacks (not ACA output): the Gram recursion must equal
        // the materialized tensor norm
        for trial in 0..50u64 {
            let mut seed = 900 + trial;
            let m = 3 + (trial % 18) as usize;
            let n = 4 + (trial % 17) as usize;
            let nf = 5 + (trial % 26) as usize;
            let r = 1 + (trial % 5) as usize;
            let crosses: Vec<FrequencyCross> = (0..r)
                .map(|d| {
                    let face = CMat::from_fn(m, n, |_, _| {
                        Complex64::new(splitmix(&mut seed), splitmix(&mut seed))
                    });
                    FrequencyCross {
                        face: BlockData::Dense(face),
                        fiber: random_cvec(nf, &mut seed),
                        pivot: (0, 0, d % nf),
                        pivot_value: Complex64::new(1.0, 0.0),
                    }
                })
                .collect();
            let rec = recursive_frobenius(&crosses);
            // brute force: materialize all slices
            let mut brute2 = 0.0f64;
            for k in 0..nf {
                let mut slice = CMat::zeros(m, n);
                for c in &crosses {
                    slice.add_scaled(&c.face.densify(), c.fiber[k]);
                }
                brute2 += slice.frobenius_norm().powi(2);
            }
            let brute = brute2.sqrt();
            assert!(
                (rec - brute).abs() < 1e-12 * brute,
                "trial {trial}: {rec} vs {brute}"
            );
        }
    }

    #[test]
    fn separated_convolution_basics() {
        let t = TestTensor::from_outer_products(6, 4, 8, 3, 77);
        let bt = three_d_aca(&t, FaceMode::Dense, 1e-13, usize::MAX).unwrap();
        // single-column weights e_1 for all l: result = sum_l slice_l[:, 0]
        let mut weights: Vec<Vec<Complex64>> = Vec::new();
        for _ in 0..8 {
            let mut w = vec![Complex64::new(0.0, 0.0); 4];
            w[0] = Complex64::new(1.0, 0.0);
            weights.push(w);
        }
        let y = separated_convolution(&bt.crosses, &weights);
        for i in 0..6 {
            let direct: Complex64 = (0..8).map(|k| t.slices[k].get(i, 0)).sum();
            assert!((y[i] - direct).norm() < 1e-11 * direct.norm().max(1e-12));
        }
        // zero weights give the zero vector
        let zw: Vec<Vec<Complex64>> = (0..8).map(|_| vec![Complex64::new(0.0, 0.0); 4]).collect();
        let y0 = separated_convolution(&bt.crosses, &zw);
        assert!(y0.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn separated_convolution_matches_direct_sum() {
        // the separated product equals the direct sum over reconstructed
        // slices for any weights
        let t = TestTensor::from_outer_products(9, 7, 30, 4, 3);
        let bt = three_d_aca(&t, FaceMode::Dense, 1e-13, usize::MAX).unwrap();
        let mut seed = 9u64;
        let weights: Vec<Vec<Complex64>> = (0..30).map(|_| random_cvec(7, &mut seed)).collect();
        let y = separated_convolution(&bt.crosses, &weights);
        let mut direct = vec![Complex64::new(0.0, 0.0); 9];
        for (k, w) in weights.iter().enumerate() {
            bt.reconstruct_slice(9, 7, k).matvec_acc(w, Complex64::new(1.0, 0.0), &mut direct);
        }
        let scale = direct.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for (a, b) in y.iter().zip(direct.iter()) {
            assert!((a - b).norm() < 1e-11 * scale);
        }
        // and with ample frequencies the ACA itself is exact for rank 4
        let mut direct2 = vec![Complex64::new(0.0, 0.0); 9];
        for (k, w) in weights.iter().enumerate() {
            t.slices[k].matvec_acc(w, Complex64::new(1.0, 0.0), &mut direct2);
        }
        for (a, b) in y.iter().zip(direct2.iter()) {
            assert!((a - b).norm() < 1e-10 * scale);
        }
    }
}
