//! Thin wrappers over the system LAPACK (shipped inside OpenBLAS).
//!
//! All matrices here are dense symmetric `f64` in standard (row-major)
//! `ndarray` layout. Because every matrix we hand to LAPACK is symmetric,
//! the row-major/column-major distinction only matters for which triangle
//! a routine touches; the comments below spell that out where it is load
//! bearing.

use ndarray::Array2;
use std::os::raw::c_char;

use crate::error::{Error, Result};

#[link(name = "openblas")]
extern "C" {
    fn dpotrf_(uplo: *const c_char, n: *const i32, a: *mut f64, lda: *const i32, info: *mut i32);
    fn dpotrs_(
        uplo: *const c_char,
        n: *const i32,
        nrhs: *const i32,
        a: *const f64,
        lda: *const i32,
        b: *mut f64,
        ldb: *const i32,
        info: *mut i32,
    );
    #[allow(clippy::too_many_arguments)]
    fn dsyevr_(
        jobz: *const c_char,
        range: *const c_char,
        uplo: *const c_char,
        n: *const i32,
        a: *mut f64,
        lda: *const i32,
        vl: *const f64,
        vu: *const f64,
        il: *const i32,
        iu: *const i32,
        abstol: *const f64,
        m: *mut i32,
        w: *mut f64,
        z: *mut f64,
        ldz: *const i32,
        isuppz: *mut i32,
        work: *mut f64,
        lwork: *const i32,
        iwork: *mut i32,
        liwork: *const i32,
        info: *mut i32,
    );
    fn openblas_set_num_threads(n: i32);
}

/// Caps the number of BLAS worker threads (used to honor `FRACGROUND_THREADS`).
pub fn set_blas_threads(n: usize) {
    unsafe { openblas_set_num_threads(n.max(1) as i32) };
}

/// Smallest `k` eigenpairs of a dense symmetric matrix.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors as
/// the rows of a `(k, n)` array, orthonormal in the Euclidean inner product.
/// The input matrix is copied; the copy is destroyed by LAPACK.
pub fn eigh_smallest(a: &Array2<f64>, k: usize) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    assert!(k >= 1 && k <= n, "need 1 <= k <= n");
    let mut buf = a
        .as_slice()
        .expect("matrix must be in standard layout")
        .to_vec();

    let ni = n as i32;
    let il = 1i32;
    let iu = k as i32;
    let abstol = 0.0f64; // let LAPACK pick its default tolerance
    let mut m = 0i32;
    let mut w = vec![0.0f64; n];
    let mut z = vec![0.0f64; n * k];
    let ldz = ni;
    let mut isuppz = vec![0i32; 2 * k.max(1)];
    let mut info = 0i32;

    // Workspace query.
    let mut work_query = [0.0f64; 1];
    let mut iwork_query = [0i32; 1];
    let lwork_query = -1i32;
    unsafe {
        dsyevr_(
            b"V".as_ptr() as _,
            b"I".as_ptr() as _,
            b"L".as_ptr() as _,
            &ni,
            buf.as_mut_ptr(),
            &ni,
            &0.0,
            &0.0,
            &il,
            &iu,
            &abstol,
            &mut m,
            w.as_mut_ptr(),
            z.as_mut_ptr(),
            &ldz,
            isuppz.as_mut_ptr(),
            work_query.as_mut_ptr(),
            &lwork_query,
            iwork_query.as_mut_ptr(),
            &lwork_query,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::EigenFailed(info));
    }
    let lwork = work_query[0] as i32;
    let liwork = iwork_query[0];
    let mut work = vec![0.0f64; lwork as usize];
    let mut iwork = vec![0i32; liwork as usize];
    unsafe {
        dsyevr_(
            b"V".as_ptr() as _,
            b"I".as_ptr() as _,
            b"L".as_ptr() as _,
            &ni,
            buf.as_mut_ptr(),
            &ni,
            &0.0,
            &0.0,
            &il,
            &iu,
            &abstol,
            &mut m,
            w.as_mut_ptr(),
            z.as_mut_ptr(),
            &ldz,
            isuppz.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::EigenFailed(info));
    }
    assert_eq!(m as usize, k, "LAPACK returned fewer eigenpairs than asked");
    w.truncate(k);
    // z is column-major n x k; reinterpreted row-major it is (k, n) with
    // eigenvector i in row i.
    let vecs = Array2::from_shape_vec((k, n), z).expect("shape");
    Ok((w, vecs))
}

/// Cholesky factorization of a symmetric positive definite matrix, done in
/// place on the owned buffer.
///
/// `dpotrf('L')` in LAPACK's column-major view overwrites what is, in our
/// row-major view, the upper triangle plus the diagonal. The strictly lower
/// row-major triangle still holds the original matrix, and together with the
/// saved diagonal it lets `matvec` apply the *unfactored* matrix without a
/// second copy. That trick is what keeps the largest grids inside memory.
pub struct Cholesky {
    buf: Vec<f64>,
    diag: Vec<f64>,
    n: usize,
}

impl Cholesky {
    pub fn new(mut a: Array2<f64>) -> Result<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols());
        let diag: Vec<f64> = (0..n).map(|i| a[[i, i]]).collect();
        let buf_slice = a.as_slice_mut().expect("standard layout");
        let ni = n as i32;
        let mut info = 0i32;
        unsafe { dpotrf_(b"L".as_ptr() as _, &ni, buf_slice.as_mut_ptr(), &ni, &mut info) };
        if info != 0 {
            return Err(Error::FactorizationFailed(info));
        }
        let (buf, _) = a.into_raw_vec_and_offset();
        Ok(Self { buf, diag, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Solves `K x = b` for the factored matrix.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut x = b.to_vec();
        let ni = self.n as i32;
        let one = 1i32;
        let mut info = 0i32;
        unsafe {
            dpotrs_(
                b"L".as_ptr() as _,
                &ni,
                &one,
                self.buf.as_ptr(),
                &ni,
                x.as_mut_ptr(),
                &ni,
                &mut info,
            );
        }
        assert_eq!(info, 0, "dpotrs failed: {info}");
        x
    }

    /// Applies the original (unfactored) matrix: `y = K x`.
    ///
    /// Uses the intact strictly-lower row-major triangle and the saved
    /// diagonal; O(n^2/2) memory traffic, used outside inner loops only.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let n = self.n;
        let mut y = vec![0.0f64; n];
        for i in 0..n {
            let row = &self.buf[i * n..i * n + i];
            let xi = x[i];
            let mut acc = self.diag[i] * xi;
            for (j, &kij) in row.iter().enumerate() {
                acc += kij * x[j];
                y[j] += kij * xi;
            }
            y[i] += acc;
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn eigh_small() {
        let a = array![[2.0, 1.0, 0.0], [1.0, 2.0, 1.0], [0.0, 1.0, 2.0]];
        let (w, v) = eigh_smallest(&a, 3).unwrap();
        let sqrt2 = 2.0f64.sqrt();
        let expect = [2.0 - sqrt2, 2.0, 2.0 + sqrt2];
        for (got, want) in w.iter().zip(expect) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        for i in 0..3 {
            let mut bv = [0.0; 3];
            for r in 0..3 {
                bv[r] = (0..3).map(|c| a[[r, c]] * v[[i, c]]).sum();
            }
            for r in 0..3 {
                assert!((bv[r] - w[i] * v[[i, r]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_solve_and_matvec() {
        let a = array![[4.0, 1.0, 0.5], [1.0, 3.0, 0.25], [0.5, 0.25, 5.0]];
        let x_true = vec![1.0, -2.0, 3.0];
        let chol = Cholesky::new(a.clone()).unwrap();
        let b = chol.matvec(&x_true);
        // matvec must equal the plain product
        for i in 0..3 {
            let direct: f64 = (0..3).map(|j| a[[i, j]] * x_true[j]).sum();
            assert!((b[i] - direct).abs() < 1e-13);
        }
        let x = chol.solve(&b);
        for (got, want) in x.iter().zip(&x_true) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = array![[1.0, 2.0], [2.0, 1.0]];
        assert!(Cholesky::new(a).is_err());
    }
}
