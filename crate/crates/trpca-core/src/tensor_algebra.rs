//! Dense third-order tensors and the t-product algebra.
//!
//! A [`Tensor3`] stores real values with index `(i, j, k)` mapped to
//! `i + j*n1 + k*n1*n2`: column-major frontal slices, slices contiguous.
//! Frontal slice `k` is therefore directly usable as a column-major matrix,
//! and mode-3 tubes are strided views.
//!
//! The t-product is computed in the Fourier domain: transform along mode 3,
//! multiply matching frontal slices, transform back. Only slices
//! `0..=n3/2` are computed; the rest are mirrored by conjugation, which keeps
//! the Fourier image of every result exactly conjugate-symmetric (the block
//! circulant form exists only as a test oracle).

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Dense real third-order tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    dims: (usize, usize, usize),
    data: Vec<f64>,
}

impl Tensor3 {
    /// All-zero tensor.
    pub fn zeros(n1: usize, n2: usize, n3: usize) -> Self {
        Self {
            dims: (n1, n2, n3),
            data: vec![0.0; n1 * n2 * n3],
        }
    }

    /// Wrap externally produced values, validating length and finiteness.
    pub fn from_vec(dims: (usize, usize, usize), data: Vec<f64>) -> Result<Self> {
        let (n1, n2, n3) = dims;
        if data.len() != n1 * n2 * n3 {
            return Err(Error::DimMismatch(format!(
                "expected {} values for {}x{}x{}, got {}",
                n1 * n2 * n3,
                n1,
                n2,
                n3,
                data.len()
            )));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { dims, data })
    }

    /// Build from a function of the (0-based) index triple.
    pub fn from_fn(
        (n1, n2, n3): (usize, usize, usize),
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(n1 * n2 * n3);
        for k in 0..n3 {
            for j in 0..n2 {
                for i in 0..n1 {
                    data.push(f(i, j, k));
                }
            }
        }
        Self {
            dims: (n1, n2, n3),
            data,
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        let (n1, n2, _) = self.dims;
        self.data[i + j * n1 + k * n1 * n2]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let (n1, n2, _) = self.dims;
        self.data[i + j * n1 + k * n1 * n2] = v;
    }

    /// Flat values, `i` fastest, then `j`, then `k`.
    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Frontal slice `k` as a column-major `n1 x n2` block.
    pub fn slice(&self, k: usize) -> &[f64] {
        let (n1, n2, _) = self.dims;
        &self.data[k * n1 * n2..(k + 1) * n1 * n2]
    }

    /// Frobenius norm.
    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Entrywise l1 norm.
    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, &v| a.max(v.abs()))
    }

    /// Elementwise map into a new tensor.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            dims: self.dims,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Scale by a constant.
    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| v * c)
    }
}

impl std::ops::Add for &Tensor3 {
    type Output = Tensor3;
    fn add(self, rhs: &Tensor3) -> Tensor3 {
        assert_eq!(self.dims, rhs.dims, "tensor addition shape mismatch");
        Tensor3 {
            dims: self.dims,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl std::ops::Sub for &Tensor3 {
    type Output = Tensor3;
    fn sub(self, rhs: &Tensor3) -> Tensor3 {
        assert_eq!(self.dims, rhs.dims, "tensor subtraction shape mismatch");
        Tensor3 {
            dims: self.dims,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// Inner product `<a, b>`.
pub fn inner(a: &Tensor3, b: &Tensor3) -> Result<f64> {
    if a.dims != b.dims {
        return Err(Error::DimMismatch(format!(
            "inner: {:?} vs {:?}",
            a.dims, b.dims
        )));
    }
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| x * y).sum())
}

/// Complex third-order tensor holding mode-3 DFT images.
#[derive(Debug, Clone)]
pub struct CTensor3 {
    dims: (usize, usize, usize),
    data: Vec<Complex64>,
}

impl CTensor3 {
    pub fn zeros(n1: usize, n2: usize, n3: usize) -> Self {
        Self {
            dims: (n1, n2, n3),
            data: vec![Complex64::default(); n1 * n2 * n3],
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn values(&self) -> &[Complex64] {
        &self.data
    }

    pub fn slice(&self, k: usize) -> &[Complex64] {
        let (n1, n2, _) = self.dims;
        &self.data[k * n1 * n2..(k + 1) * n1 * n2]
    }

    pub fn slice_mut(&mut self, k: usize) -> &mut [Complex64] {
        let (n1, n2, _) = self.dims;
        &mut self.data[k * n1 * n2..(k + 1) * n1 * n2]
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Check conjugate symmetry along mode 3: slice `k` against the conjugate
    /// of slice `n3 - k`, and realness of the self-paired slices. `tol` is
    /// relative to the larger slice norm.
    pub fn check_hermitian_mode3(&self, tol: f64) -> Result<()> {
        let (_, _, n3) = self.dims;
        for k in 0..=n3 / 2 {
            let m = mirror_slice(k, n3);
            let (residual, scale) = if m == k {
                let s = self.slice(k);
                let imag = s.iter().map(|c| c.im * c.im).sum::<f64>().sqrt();
                let norm = s.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                (imag, norm)
            } else {
                let (a, b) = (self.slice(k), self.slice(m));
                let mut diff = 0.0;
                let mut na = 0.0;
                let mut nb = 0.0;
                for (x, y) in a.iter().zip(b) {
                    diff += (x - y.conj()).norm_sqr();
                    na += x.norm_sqr();
                    nb += y.norm_sqr();
                }
                (diff.sqrt(), na.sqrt().max(nb.sqrt()))
            };
            if residual > tol * scale {
                return Err(Error::SymmetryViolation {
                    k,
                    mirror: m,
                    residual,
                    tol,
                });
            }
        }
        Ok(())
    }
}

/// Index of the conjugate partner of Fourier slice `k` (0-based).
#[inline]
pub(crate) fn mirror_slice(k: usize, n3: usize) -> usize {
    if k == 0 {
        0
    } else {
        n3 - k
    }
}

/// Number of Fourier slices that must be computed explicitly; the rest follow
/// by conjugation.
#[inline]
pub(crate) fn half_slices(n3: usize) -> usize {
    n3 / 2 + 1
}

/// How many times slice `k < half_slices(n3)` occurs once mirrors are counted.
#[inline]
pub(crate) fn slice_multiplicity(k: usize, n3: usize) -> usize {
    if k == 0 || (n3 % 2 == 0 && k == n3 / 2) {
        1
    } else {
        2
    }
}

/// Unnormalized forward DFT along mode 3.
pub fn dft_mode3(t: &Tensor3) -> CTensor3 {
    let (n1, n2, n3) = t.dims;
    let mut out = CTensor3::zeros(n1, n2, n3);
    out.data
        .iter_mut()
        .zip(&t.data)
        .for_each(|(c, &v)| *c = Complex64::new(v, 0.0));
    fft_mode3_in_place(&mut out, false);
    out
}

/// Inverse DFT along mode 3 with the 1/n3 factor, discarding the imaginary
/// residue after checking conjugate symmetry.
pub fn idft_mode3(c: &CTensor3) -> Result<Tensor3> {
    c.check_hermitian_mode3(1e-8)?;
    let mut work = c.clone();
    fft_mode3_in_place(&mut work, true);
    let (n1, n2, n3) = work.dims;
    Ok(Tensor3 {
        dims: (n1, n2, n3),
        data: work.data.iter().map(|z| z.re).collect(),
    })
}

fn fft_mode3_in_place(t: &mut CTensor3, inverse: bool) {
    let (n1, n2, n3) = t.dims;
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n3)
    } else {
        planner.plan_fft_forward(n3)
    };
    let stride = n1 * n2;
    let scale = if inverse { 1.0 / n3 as f64 } else { 1.0 };
    let mut tube = vec![Complex64::default(); n3];
    for p in 0..stride {
        for k in 0..n3 {
            tube[k] = t.data[p + k * stride];
        }
        fft.process(&mut tube);
        for k in 0..n3 {
            t.data[p + k * stride] = tube[k] * scale;
        }
    }
}

/// t-product of `a` (n1 x l x n3) and `b` (l x n2 x n3).
pub fn t_product(a: &Tensor3, b: &Tensor3) -> Result<Tensor3> {
    let (n1, la, n3a) = a.dims;
    let (lb, n2, n3b) = b.dims;
    if la != lb || n3a != n3b {
        return Err(Error::DimMismatch(format!(
            "t_product: {}x{}x{} * {}x{}x{}",
            n1, la, n3a, lb, n2, n3b
        )));
    }
    let n3 = n3a;
    let ah = dft_mode3(a);
    let bh = dft_mode3(b);
    let mut zh = CTensor3::zeros(n1, n2, n3);
    for k in 0..half_slices(n3) {
        let prod = crate::lapack::matmul(ah.slice(k), bh.slice(k), n1, la, n2);
        zh.slice_mut(k).copy_from_slice(&prod);
        let m = mirror_slice(k, n3);
        if m != k {
            for (dst, src) in zh.slice_mut(m).iter_mut().zip(&prod) {
                *dst = src.conj();
            }
        }
    }
    idft_mode3(&zh)
}

/// Conjugate transpose: transpose each frontal slice, then reverse the order
/// of slices 2..n3.
pub fn conj_transpose(a: &Tensor3) -> Tensor3 {
    let (n1, n2, n3) = a.dims;
    let mut out = Tensor3::zeros(n2, n1, n3);
    for k in 0..n3 {
        let src_k = if k == 0 { 0 } else { n3 - k };
        for j in 0..n2 {
            for i in 0..n1 {
                out.set(j, i, k, a.at(i, j, src_k));
            }
        }
    }
    out
}

/// Identity tensor: first frontal slice is I_n, the rest are zero.
pub fn identity_tensor(n: usize, n3: usize) -> Tensor3 {
    let mut t = Tensor3::zeros(n, n, n3);
    for i in 0..n {
        t.set(i, i, 0, 1.0);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tube_dft_naive(x: &[f64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|m| {
                (0..n)
                    .map(|t| {
                        let ang = -2.0 * std::f64::consts::PI * (t * m) as f64 / n as f64;
                        Complex64::new(ang.cos(), ang.sin()) * x[t]
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn dft_of_zero_tensor_is_zero() {
        let t = Tensor3::zeros(2, 2, 4);
        let c = dft_mode3(&t);
        assert_eq!(c.fro_norm(), 0.0);
    }

    #[test]
    fn dft_of_unit_impulse_tube() {
        let mut t = Tensor3::zeros(2, 2, 4);
        t.set(0, 0, 0, 1.0);
        let c = dft_mode3(&t);
        for k in 0..4 {
            let z = c.slice(k)[0];
            assert!((z.re - 1.0).abs() < 1e-14 && z.im.abs() < 1e-14);
        }
    }

    #[test]
    fn dft_tube_123_matches_direct_sum() {
        // DFT of (1,2,3): (6, -1.5 + 0.8660i, -1.5 - 0.8660i).
        let mut t = Tensor3::zeros(1, 1, 3);
        t.set(0, 0, 0, 1.0);
        t.set(0, 0, 1, 2.0);
        t.set(0, 0, 2, 3.0);
        let c = dft_mode3(&t);
        let expect = [
            Complex64::new(6.0, 0.0),
            Complex64::new(-1.5, 0.866025403784438646),
            Complex64::new(-1.5, -0.866025403784438646),
        ];
        for k in 0..3 {
            assert!((c.slice(k)[0] - expect[k]).norm() < 1e-12);
        }
        // and against the naive evaluation
        let naive = tube_dft_naive(&[1.0, 2.0, 3.0]);
        for k in 0..3 {
            assert!((c.slice(k)[0] - naive[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn idft_inverts_dft_and_rejects_asymmetry() {
        let t = Tensor3::from_fn((3, 3, 5), |i, j, k| ((i * 7 + j * 3 + k * 11) % 13) as f64 - 6.0);
        let c = dft_mode3(&t);
        let back = idft_mode3(&c).unwrap();
        let err = (&t - &back).fro_norm() / t.fro_norm();
        assert!(err < 1e-12, "round trip error {err}");

        let mut bad = c.clone();
        bad.slice_mut(1)[0] += Complex64::new(1.0, 1.0);
        match idft_mode3(&bad) {
            Err(Error::SymmetryViolation { .. }) => {}
            other => panic!("expected SymmetryViolation, got {other:?}"),
        }
    }

    #[test]
    fn idft_of_explicit_hermitian_tube() {
        let mut c = CTensor3::zeros(1, 1, 3);
        c.slice_mut(0)[0] = Complex64::new(6.0, 0.0);
        c.slice_mut(1)[0] = Complex64::new(-1.5, 0.866025403784438646);
        c.slice_mut(2)[0] = Complex64::new(-1.5, -0.866025403784438646);
        let t = idft_mode3(&c).unwrap();
        for (k, want) in [1.0, 2.0, 3.0].iter().enumerate() {
            assert!((t.at(0, 0, k) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn t_product_identity_law() {
        let a = Tensor3::from_fn((3, 2, 4), |i, j, k| (i + 2 * j + 3 * k) as f64 * 0.25 - 1.0);
        let i3 = identity_tensor(3, 4);
        let left = t_product(&i3, &a).unwrap();
        assert!((&left - &a).fro_norm() < 1e-12);
        let i2 = identity_tensor(2, 4);
        let right = t_product(&a, &i2).unwrap();
        assert!((&right - &a).fro_norm() < 1e-12);
    }

    #[test]
    fn t_product_n3_equals_one_is_matrix_product() {
        // [1 2; 3 4] * [5 6; 7 8]
        let a = Tensor3::from_vec((2, 2, 1), vec![1.0, 3.0, 2.0, 4.0]).unwrap();
        let b = Tensor3::from_vec((2, 2, 1), vec![5.0, 7.0, 6.0, 8.0]).unwrap();
        let z = t_product(&a, &b).unwrap();
        let expect = [[19.0, 22.0], [43.0, 50.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((z.at(i, j, 0) - expect[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn t_product_dim_mismatch() {
        let a = Tensor3::zeros(3, 2, 4);
        let b = Tensor3::zeros(3, 3, 4);
        assert!(matches!(t_product(&a, &b), Err(Error::DimMismatch(_))));
    }

    #[test]
    fn conj_transpose_involution_and_identity() {
        let i = identity_tensor(3, 4);
        assert!((&conj_transpose(&i) - &i).fro_norm() < 1e-15);

        let a = Tensor3::from_fn((3, 2, 5), |i, j, k| ((i * j + k * k) % 7) as f64 - 3.0);
        let twice = conj_transpose(&conj_transpose(&a));
        assert!((&twice - &a).fro_norm() < 1e-15);
    }

    #[test]
    fn conj_transpose_n3_one_is_matrix_transpose() {
        let a = Tensor3::from_vec((2, 3, 1), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let at = conj_transpose(&a);
        for i in 0..2 {
            for j in 0..3 {
                assert_eq!(at.at(j, i, 0), a.at(i, j, 0));
            }
        }
    }

    #[test]
    fn norms_on_simple_inputs() {
        let z = Tensor3::zeros(2, 2, 2);
        assert_eq!(z.fro_norm(), 0.0);
        assert_eq!(z.l1_norm(), 0.0);
        assert_eq!(inner(&z, &z).unwrap(), 0.0);

        let mut t = Tensor3::zeros(2, 2, 2);
        t.set(0, 0, 0, 3.0);
        assert_eq!(t.fro_norm(), 3.0);
        assert_eq!(t.l1_norm(), 3.0);
        assert!(matches!(
            inner(&t, &Tensor3::zeros(2, 2, 3)),
            Err(Error::DimMismatch(_))
        ));
    }

    #[test]
    fn parseval_identity() {
        let t = Tensor3::from_fn((4, 3, 5), |i, j, k| {
            ((i * 31 + j * 17 + k * 7) % 19) as f64 * 0.3 - 2.0
        });
        let c = dft_mode3(&t);
        let lhs = t.fro_norm().powi(2);
        let rhs = c.fro_norm().powi(2) / 5.0;
        assert!((lhs - rhs).abs() < 1e-12 * lhs);
    }

    #[test]
    fn identity_tensor_fourier_slices_are_identity() {
        let c = dft_mode3(&identity_tensor(2, 3));
        for k in 0..3 {
            let s = c.slice(k);
            assert!((s[0] - Complex64::new(1.0, 0.0)).norm() < 1e-14);
            assert!((s[3] - Complex64::new(1.0, 0.0)).norm() < 1e-14);
            assert!(s[1].norm() < 1e-14 && s[2].norm() < 1e-14);
        }
    }

    #[test]
    fn from_vec_rejects_non_finite() {
        let r = Tensor3::from_vec((1, 1, 2), vec![1.0, f64::NAN]);
        assert!(matches!(r, Err(Error::NonFinite { index: 1 })));
    }
}
