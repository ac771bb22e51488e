//! t-SVD, tubal rank, (weighted) tensor nuclear norm, and the singular value
//! thresholding proximal operators.
//!
//! All factorizations work per Fourier slice. Slices `0..=n3/2` are computed
//! explicitly (in parallel); their conjugate mirrors are filled in by
//! symmetry, so reconstructions are real by construction.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lapack;
use crate::tensor_algebra::{
    dft_mode3, half_slices, idft_mode3, mirror_slice, slice_multiplicity, CTensor3, Tensor3,
};

/// Per-singular-value weights, `min(n1, n2) x n3`, column `k` applying to
/// Fourier slice `k`. Entries must be nonnegative and nondecreasing down each
/// column, otherwise the closed-form weighted shrinkage is not the exact
/// minimizer.
#[derive(Debug, Clone)]
pub struct WeightMatrix {
    rows: usize,
    cols: usize,
    w: Vec<f64>, // column-major
}

impl WeightMatrix {
    pub fn new(rows: usize, cols: usize, w: Vec<f64>) -> Result<Self> {
        if w.len() != rows * cols {
            return Err(Error::DimMismatch(format!(
                "weight matrix: expected {}x{} = {} entries, got {}",
                rows,
                cols,
                rows * cols,
                w.len()
            )));
        }
        for k in 0..cols {
            let col = &w[k * rows..(k + 1) * rows];
            if col.iter().any(|v| *v < 0.0 || !v.is_finite()) {
                return Err(Error::NonMonotoneWeights(format!(
                    "column {k} has a negative or non-finite entry"
                )));
            }
            if col.windows(2).any(|p| p[1] < p[0]) {
                return Err(Error::NonMonotoneWeights(format!(
                    "column {k} decreases down the column"
                )));
            }
        }
        Ok(Self { rows, cols, w })
    }

    /// All-ones weights (plain tensor nuclear norm).
    pub fn ones(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            w: vec![1.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, k: usize) -> &[f64] {
        &self.w[k * self.rows..(k + 1) * self.rows]
    }

    /// Column averaged with its conjugate-mirror column. Mirror Fourier
    /// slices of a real tensor share a spectrum, so only the pair average of
    /// their weights is observable in the norm; using it keeps the weighted
    /// prox exact over real tensors.
    pub(crate) fn symmetrized_column(&self, k: usize) -> Vec<f64> {
        let m = mirror_slice(k, self.cols);
        self.column(k)
            .iter()
            .zip(self.column(m))
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }

    fn check_dims(&self, n1: usize, n2: usize, n3: usize) -> Result<()> {
        if self.rows != n1.min(n2) || self.cols != n3 {
            return Err(Error::DimMismatch(format!(
                "weights are {}x{}, tensor needs {}x{}",
                self.rows,
                self.cols,
                n1.min(n2),
                n3
            )));
        }
        Ok(())
    }
}

/// Partial-sum preset: zero weight on the `k_trunc` leading singular values
/// of every slice, unit weight on the rest.
pub fn pstnn_weights(n1: usize, n2: usize, n3: usize, k_trunc: usize) -> Result<WeightMatrix> {
    let rows = n1.min(n2);
    if k_trunc > rows {
        return Err(Error::BadTruncation {
            k_trunc,
            max: rows,
        });
    }
    let mut w = vec![1.0; rows * n3];
    for k in 0..n3 {
        for j in 0..k_trunc {
            w[k * rows + j] = 0.0;
        }
    }
    WeightMatrix::new(rows, n3, w)
}

/// Fourier-domain factors of a t-SVD: per-slice left vectors, singular
/// values, and right vectors, with conjugate-mirrored slices.
#[derive(Debug, Clone)]
pub struct TSvdFactors {
    u_hat: CTensor3,  // n1 x r x n3
    svals: Vec<f64>,  // r x n3, column-major, nonincreasing down each column
    v_hat: CTensor3,  // n2 x r x n3
    rank: usize,
}

impl TSvdFactors {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        let (n1, _, n3) = self.u_hat.dims();
        let (n2, _, _) = self.v_hat.dims();
        (n1, n2, n3)
    }

    pub fn u_hat(&self) -> &CTensor3 {
        &self.u_hat
    }

    pub fn v_hat(&self) -> &CTensor3 {
        &self.v_hat
    }

    /// Singular values of Fourier slice `k`, nonincreasing.
    pub fn svals_col(&self, k: usize) -> &[f64] {
        &self.svals[k * self.rank..(k + 1) * self.rank]
    }

    /// Multiply the factors back together: `U * D * V^H` per slice, inverse
    /// transform, imaginary residue discarded after the symmetry check.
    pub fn reconstruct(&self) -> Result<Tensor3> {
        let (n1, n2, n3) = self.dims();
        let r = self.rank;
        let mut zh = CTensor3::zeros(n1, n2, n3);
        for k in 0..n3 {
            let mut ud = self.u_hat.slice(k).to_vec();
            let d = self.svals_col(k);
            for c in 0..r {
                for row in 0..n1 {
                    ud[row + c * n1] *= d[c];
                }
            }
            let prod = lapack::matmul_nc(&ud, self.v_hat.slice(k), n1, r, n2);
            zh.slice_mut(k).copy_from_slice(&prod);
        }
        idft_mode3(&zh)
    }

    /// `(1/n3) * sum of all retained singular values`.
    pub fn nuclear_norm(&self) -> f64 {
        let (_, _, n3) = self.dims();
        self.svals.iter().sum::<f64>() / n3 as f64
    }

    /// Weighted variant, using the pair-symmetrized weight columns.
    pub fn weighted_nuclear_norm(&self, w: &WeightMatrix) -> Result<f64> {
        let (n1, n2, n3) = self.dims();
        w.check_dims(n1, n2, n3)?;
        let mut acc = 0.0;
        for k in 0..n3 {
            let wc = w.symmetrized_column(k);
            acc += self
                .svals_col(k)
                .iter()
                .zip(&wc)
                .map(|(d, wi)| d * wi)
                .sum::<f64>();
        }
        Ok(acc / n3 as f64)
    }
}

/// Shrinkage applied to each Fourier-slice singular value.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Shrink<'a> {
    /// Plain soft threshold `max(sigma - tau, 0)`.
    Soft { tau: f64 },
    /// Per-value soft threshold `max(sigma - tau * w_j, 0)`.
    Weighted { tau: f64, w: &'a WeightMatrix },
    /// `sigma - tau^2 / sigma` above `tau`, zero below. Kills the spectrum
    /// at or below `tau` like the soft rule but leaves large values nearly
    /// unbiased; used by the solver's separation sweeps.
    Debias { tau: f64 },
}

struct SliceResult {
    k: usize,
    u: Vec<Complex64>,
    s: Vec<f64>,
    vt: Vec<Complex64>,
}

/// Shared worker: transform, per-slice SVD + shrink, mirror, truncate the
/// retained rank to rows with any surviving value, reconstruct.
pub(crate) fn t_shrink(a: &Tensor3, shrink: Shrink<'_>) -> Result<(Tensor3, TSvdFactors)> {
    let (n1, n2, n3) = a.dims();
    if let Shrink::Weighted { w, .. } = shrink {
        w.check_dims(n1, n2, n3)?;
    }
    let ah = dft_mode3(a);
    let kmax = n1.min(n2);
    let half = half_slices(n3);

    let mut partial: Vec<SliceResult> = (0..half)
        .into_par_iter()
        .map(|k| -> Result<SliceResult> {
            let svd = lapack::svd(ah.slice(k), n1, n2)?;
            let mut s = svd.s;
            match shrink {
                Shrink::Soft { tau } => {
                    for v in &mut s {
                        *v = (*v - tau).max(0.0);
                    }
                }
                Shrink::Weighted { tau, w } => {
                    let wc = w.symmetrized_column(k);
                    for (v, wi) in s.iter_mut().zip(&wc) {
                        *v = (*v - tau * wi).max(0.0);
                    }
                }
                Shrink::Debias { tau } => {
                    for v in &mut s {
                        *v = if *v > tau { *v - tau * tau / *v } else { 0.0 };
                    }
                }
            }
            Ok(SliceResult {
                k,
                u: svd.u,
                s,
                vt: svd.vt,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    partial.sort_by_key(|r| r.k);

    // Retained rank: rows with at least one nonzero value across slices.
    let rank = partial
        .iter()
        .map(|r| r.s.iter().take_while(|v| **v > 0.0).count())
        .max()
        .unwrap_or(0);

    let mut u_hat = CTensor3::zeros(n1, rank, n3);
    let mut v_hat = CTensor3::zeros(n2, rank, n3);
    let mut svals = vec![0.0; rank * n3];
    let mut zh = CTensor3::zeros(n1, n2, n3);

    for res in &partial {
        let k = res.k;
        // u: n1 x kmax, vt: kmax x n2; keep the leading `rank` triplets.
        let us = u_hat.slice_mut(k);
        us.copy_from_slice(&res.u[..n1 * rank]);
        let vs = v_hat.slice_mut(k);
        for c in 0..rank {
            for row in 0..n2 {
                vs[row + c * n2] = res.vt[c + row * kmax].conj();
            }
        }
        svals[k * rank..(k + 1) * rank].copy_from_slice(&res.s[..rank]);

        let mut ud = u_hat.slice(k).to_vec();
        for c in 0..rank {
            for row in 0..n1 {
                ud[row + c * n1] *= res.s[c];
            }
        }
        let prod = lapack::matmul_nc(&ud, v_hat.slice(k), n1, rank, n2);
        zh.slice_mut(k).copy_from_slice(&prod);

        let m = mirror_slice(k, n3);
        if m != k {
            for (dst, src) in zh.slice_mut(m).iter_mut().zip(&prod) {
                *dst = src.conj();
            }
            svals.copy_within(k * rank..(k + 1) * rank, m * rank);
            let (src, dst): (Vec<Complex64>, _) =
                (u_hat.slice(k).iter().map(|c| c.conj()).collect(), m);
            u_hat.slice_mut(dst).copy_from_slice(&src);
            let src: Vec<Complex64> = v_hat.slice(k).iter().map(|c| c.conj()).collect();
            v_hat.slice_mut(m).copy_from_slice(&src);
        }
    }

    let l = idft_mode3(&zh)?;
    Ok((
        l,
        TSvdFactors {
            u_hat,
            svals,
            v_hat,
            rank,
        },
    ))
}

/// Skinny t-SVD with `r = min(n1, n2)`.
pub fn t_svd(a: &Tensor3) -> Result<TSvdFactors> {
    let (n1, n2, n3) = a.dims();
    let ah = dft_mode3(a);
    let rank = n1.min(n2);
    let half = half_slices(n3);

    let mut partial: Vec<SliceResult> = (0..half)
        .into_par_iter()
        .map(|k| -> Result<SliceResult> {
            let svd = lapack::svd(ah.slice(k), n1, n2)?;
            Ok(SliceResult {
                k,
                u: svd.u,
                s: svd.s,
                vt: svd.vt,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    partial.sort_by_key(|r| r.k);

    let mut u_hat = CTensor3::zeros(n1, rank, n3);
    let mut v_hat = CTensor3::zeros(n2, rank, n3);
    let mut svals = vec![0.0; rank * n3];
    for res in &partial {
        let k = res.k;
        u_hat.slice_mut(k).copy_from_slice(&res.u);
        let vs = v_hat.slice_mut(k);
        for c in 0..rank {
            for row in 0..n2 {
                vs[row + c * n2] = res.vt[c + row * rank].conj();
            }
        }
        svals[k * rank..(k + 1) * rank].copy_from_slice(&res.s);
        let m = mirror_slice(k, n3);
        if m != k {
            svals.copy_within(k * rank..(k + 1) * rank, m * rank);
            let src: Vec<Complex64> = u_hat.slice(k).iter().map(|c| c.conj()).collect();
            u_hat.slice_mut(m).copy_from_slice(&src);
            let src: Vec<Complex64> = v_hat.slice(k).iter().map(|c| c.conj()).collect();
            v_hat.slice_mut(m).copy_from_slice(&src);
        }
    }
    Ok(TSvdFactors {
        u_hat,
        svals,
        v_hat,
        rank,
    })
}

/// Number of singular tubes whose peak exceeds `tol` times the leading value
/// of the first Fourier slice.
pub fn tubal_rank(a: &Tensor3, tol: f64) -> Result<usize> {
    let f = t_svd(a)?;
    let (_, _, n3) = a.dims();
    if f.rank == 0 {
        return Ok(0);
    }
    let reference = f.svals_col(0).first().copied().unwrap_or(0.0);
    let thresh = tol * reference;
    let count = (0..f.rank)
        .filter(|&i| (0..n3).any(|k| f.svals_col(k)[i] > thresh))
        .count();
    Ok(count)
}

fn slice_sval_sums(a: &Tensor3, weights: Option<&WeightMatrix>) -> Result<f64> {
    let (n1, n2, n3) = a.dims();
    if let Some(w) = weights {
        w.check_dims(n1, n2, n3)?;
    }
    let ah = dft_mode3(a);
    let half = half_slices(n3);
    let per_slice: Vec<f64> = (0..half)
        .into_par_iter()
        .map(|k| -> Result<f64> {
            let s = lapack::singular_values(ah.slice(k), n1, n2)?;
            Ok(match weights {
                None => s.iter().sum::<f64>() * slice_multiplicity(k, n3) as f64,
                Some(w) => {
                    // mirror slices share the spectrum but carry their own
                    // weight columns
                    let m = mirror_slice(k, n3);
                    let direct: f64 = s.iter().zip(w.column(k)).map(|(d, wi)| d * wi).sum();
                    if m == k {
                        direct
                    } else {
                        let mirrored: f64 =
                            s.iter().zip(w.column(m)).map(|(d, wi)| d * wi).sum();
                        direct + mirrored
                    }
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_slice.iter().sum::<f64>() / n3 as f64)
}

/// Tensor nuclear norm: `(1/n3) * sum of all Fourier-slice singular values`.
pub fn tnn(a: &Tensor3) -> Result<f64> {
    slice_sval_sums(a, None)
}

/// Weighted tensor nuclear norm `(1/n3) * sum W_jk * sigma_jk`.
pub fn weighted_tnn(a: &Tensor3, w: &WeightMatrix) -> Result<f64> {
    slice_sval_sums(a, Some(w))
}

/// Proximal operator of `tau * ||.||_*`: soft-shrink every Fourier-slice
/// singular value by `tau`. Returned factors carry the post-shrinkage values.
pub fn t_svt(a: &Tensor3, tau: f64) -> Result<(Tensor3, TSvdFactors)> {
    t_shrink(a, Shrink::Soft { tau })
}

/// Weighted t-SVT: per slice `k`, shrink value `j` by `tau * W_jk` (with the
/// weight columns pair-symmetrized so the result stays real).
pub fn weighted_t_svt(a: &Tensor3, tau: f64, w: &WeightMatrix) -> Result<(Tensor3, TSvdFactors)> {
    t_shrink(a, Shrink::Weighted { tau, w })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor_algebra::identity_tensor;

    fn det_tensor(n1: usize, n2: usize, n3: usize, seed: u64) -> Tensor3 {
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
        Tensor3::from_fn((n1, n2, n3), |_, _, _| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
    }

    #[test]
    fn t_svd_of_identity_tensor() {
        let f = t_svd(&identity_tensor(2, 3)).unwrap();
        assert_eq!(f.rank(), 2);
        for k in 0..3 {
            for &s in f.svals_col(k) {
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn t_svd_reconstructs_and_orthonormal() {
        let a = det_tensor(5, 4, 3, 7);
        let f = t_svd(&a).unwrap();
        let rec = f.reconstruct().unwrap();
        assert!((&rec - &a).fro_norm() / a.fro_norm() < 1e-10);

        // columns of each u slice orthonormal
        let (n1, _, n3) = a.dims();
        for k in 0..n3 {
            let u = f.u_hat().slice(k);
            for c1 in 0..f.rank() {
                for c2 in 0..f.rank() {
                    let dot: num_complex::Complex64 = (0..n1)
                        .map(|r| u[r + c1 * n1].conj() * u[r + c2 * n1])
                        .sum();
                    let want = if c1 == c2 { 1.0 } else { 0.0 };
                    assert!((dot.norm() - want).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn low_tubal_rank_by_construction() {
        let p = det_tensor(10, 2, 4, 1);
        let q = det_tensor(2, 10, 4, 2);
        let a = crate::tensor_algebra::t_product(&p, &q).unwrap();
        let f = t_svd(&a).unwrap();
        for k in 0..4 {
            let s = f.svals_col(k);
            assert!(s[2] < 1e-8 * s[0].max(1.0), "svals {:?}", &s[..4.min(s.len())]);
        }
        assert_eq!(tubal_rank(&a, 1e-6).unwrap(), 2);
    }

    #[test]
    fn tubal_rank_edges() {
        assert_eq!(tubal_rank(&Tensor3::zeros(3, 3, 2), 1e-6).unwrap(), 0);
        assert_eq!(tubal_rank(&identity_tensor(3, 2), 1e-6).unwrap(), 3);
    }

    #[test]
    fn tnn_of_identity_is_n() {
        for (n, n3) in [(2usize, 3usize), (4, 2), (3, 5)] {
            let v = tnn(&identity_tensor(n, n3)).unwrap();
            assert!((v - n as f64).abs() < 1e-10);
        }
        assert_eq!(tnn(&Tensor3::zeros(2, 2, 2)).unwrap(), 0.0);
    }

    #[test]
    fn weighted_tnn_reductions() {
        let a = det_tensor(4, 4, 3, 11);
        let ones = WeightMatrix::ones(4, 3);
        let plain = tnn(&a).unwrap();
        let weighted = weighted_tnn(&a, &ones).unwrap();
        assert!((plain - weighted).abs() < 1e-12);

        let zeros = WeightMatrix::new(4, 3, vec![0.0; 12]).unwrap();
        assert_eq!(weighted_tnn(&a, &zeros).unwrap(), 0.0);

        // PSTNN K=1 on the 3x3 identity skips one unit value per slice.
        let w = pstnn_weights(3, 3, 2, 1).unwrap();
        let v = weighted_tnn(&identity_tensor(3, 2), &w).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn pstnn_weight_presets() {
        let w = pstnn_weights(4, 4, 2, 0).unwrap();
        assert!(w.column(0).iter().all(|&x| x == 1.0));

        let w = pstnn_weights(4, 4, 2, 4).unwrap();
        assert!(w.column(1).iter().all(|&x| x == 0.0));

        let w = pstnn_weights(4, 4, 2, 2).unwrap();
        assert_eq!(w.column(0), &[0.0, 0.0, 1.0, 1.0]);
        assert_eq!(w.column(1), &[0.0, 0.0, 1.0, 1.0]);

        assert!(matches!(
            pstnn_weights(4, 4, 2, 5),
            Err(Error::BadTruncation { .. })
        ));
    }

    #[test]
    fn weight_matrix_rejects_decreasing_columns() {
        let r = WeightMatrix::new(3, 1, vec![1.0, 0.5, 2.0]);
        assert!(matches!(r, Err(Error::NonMonotoneWeights(_))));
        let r = WeightMatrix::new(2, 1, vec![-0.1, 1.0]);
        assert!(matches!(r, Err(Error::NonMonotoneWeights(_))));
    }

    #[test]
    fn t_svt_zero_tau_is_identity() {
        let a = det_tensor(4, 3, 4, 5);
        let (l, _) = t_svt(&a, 0.0).unwrap();
        assert!((&l - &a).fro_norm() / a.fro_norm() < 1e-10);
    }

    #[test]
    fn t_svt_full_shrinkage_gives_zero() {
        let a = det_tensor(4, 3, 4, 6);
        let f = t_svd(&a).unwrap();
        let smax = (0..4)
            .flat_map(|k| f.svals_col(k).to_vec())
            .fold(0.0f64, f64::max);
        let (l, fac) = t_svt(&a, smax + 1.0).unwrap();
        assert_eq!(l.fro_norm(), 0.0);
        assert_eq!(fac.rank(), 0);
    }

    #[test]
    fn t_svt_matrix_case_matches_matrix_svt() {
        // diag(3, 1), tau = 2 -> diag(1, 0)
        let a = Tensor3::from_vec((2, 2, 1), vec![3.0, 0.0, 0.0, 1.0]).unwrap();
        let (l, f) = t_svt(&a, 2.0).unwrap();
        assert!((l.at(0, 0, 0) - 1.0).abs() < 1e-12);
        assert!(l.at(1, 1, 0).abs() < 1e-12);
        assert_eq!(f.rank(), 1);
    }

    #[test]
    fn weighted_t_svt_matches_plain_with_unit_weights() {
        let a = det_tensor(5, 4, 3, 9);
        let w = WeightMatrix::ones(4, 3);
        let (l0, f0) = t_svt(&a, 0.37).unwrap();
        let (l1, f1) = weighted_t_svt(&a, 0.37, &w).unwrap();
        assert_eq!(l0.values(), l1.values());
        assert_eq!(f0.svals, f1.svals);
    }

    #[test]
    fn weighted_t_svt_zero_weights_pass_through() {
        let a = det_tensor(4, 4, 2, 3);
        let w = pstnn_weights(4, 4, 2, 4).unwrap();
        let (l, _) = weighted_t_svt(&a, 5.0, &w).unwrap();
        assert!((&l - &a).fro_norm() / a.fro_norm() < 1e-10);
    }

    #[test]
    fn weighted_t_svt_selective_shrinkage() {
        // diag(3, 1) with weight column (0, 1), tau = 2: only the second
        // value shrinks, to zero.
        let a = Tensor3::from_vec((2, 2, 1), vec![3.0, 0.0, 0.0, 1.0]).unwrap();
        let w = WeightMatrix::new(2, 1, vec![0.0, 1.0]).unwrap();
        let (l, _) = weighted_t_svt(&a, 2.0, &w).unwrap();
        assert!((l.at(0, 0, 0) - 3.0).abs() < 1e-12);
        assert!(l.at(1, 1, 0).abs() < 1e-12);
    }
}
