//! Dense complex linear algebra on top of the system LAPACK.
//!
//! Matrices are stored column-major so they can be handed to Fortran
//! routines without copies. Only the handful of operations the solvers
//! need are wrapped: Hermitian eigendecompositions (full, values-only,
//! and restricted to an eigenvalue window), the general eigenproblem
//! for unitary one-period propagators, and matrix products.

use std::os::raw::c_char;

use thiserror::Error;

pub type C64 = num_complex::Complex64;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("LAPACK {routine} failed with info = {info}")]
    Lapack { routine: &'static str, info: i32 },
    #[error("eigenvalue window returned {found} pairs, expected {expected}")]
    WindowMismatch { expected: usize, found: usize },
}

/// Dense complex matrix, column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, C64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.data[i + j * self.rows]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i + j * self.rows] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: C64) {
        self.data[i + j * self.rows] += v;
    }

    pub fn col(&self, j: usize) -> &[C64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [C64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![C64::new(0.0, 0.0); self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj == C64::new(0.0, 0.0) {
                continue;
            }
            let col = self.col(j);
            for (yi, &cij) in y.iter_mut().zip(col) {
                *yi += cij * xj;
            }
        }
        y
    }

    /// `self * other` through zgemm.
    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = CMatrix::zeros(self.rows, other.cols);
        let (m, n, k) = (self.rows as i32, other.cols as i32, self.cols as i32);
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        unsafe {
            zgemm_(
                &(b'N' as c_char),
                &(b'N' as c_char),
                &m,
                &n,
                &k,
                &one,
                self.data.as_ptr(),
                &m,
                other.data.as_ptr(),
                &k,
                &zero,
                out.data.as_mut_ptr(),
                &m,
            );
        }
        out
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self.at(j, i).conj())
    }

    pub fn scale(&mut self, s: C64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self.at(i, i)).sum()
    }

    /// Largest entry-wise deviation from the conjugate transpose.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for j in 0..self.cols {
            for i in 0..=j.min(self.rows - 1) {
                worst = worst.max((self.at(i, j) - self.at(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Largest entry-wise deviation of `self† self` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let p = self.adjoint().matmul(self);
        let mut worst = 0.0_f64;
        for j in 0..p.cols {
            for i in 0..p.rows {
                let expect = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                worst = worst.max((p.at(i, j) - expect).norm());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

pub fn conj_dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm2(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

extern "C" {
    fn zheevd_(
        jobz: *const c_char,
        uplo: *const c_char,
        n: *const i32,
        a: *mut C64,
        lda: *const i32,
        w: *mut f64,
        work: *mut C64,
        lwork: *const i32,
        rwork: *mut f64,
        lrwork: *const i32,
        iwork: *mut i32,
        liwork: *const i32,
        info: *mut i32,
    );

    fn zheevr_(
        jobz: *const c_char,
        range: *const c_char,
        uplo: *const c_char,
        n: *const i32,
        a: *mut C64,
        lda: *const i32,
        vl: *const f64,
        vu: *const f64,
        il: *const i32,
        iu: *const i32,
        abstol: *const f64,
        m: *mut i32,
        w: *mut f64,
        z: *mut C64,
        ldz: *const i32,
        isuppz: *mut i32,
        work: *mut C64,
        lwork: *const i32,
        rwork: *mut f64,
        lrwork: *const i32,
        iwork: *mut i32,
        liwork: *const i32,
        info: *mut i32,
    );

    fn zgeev_(
        jobvl: *const c_char,
        jobvr: *const c_char,
        n: *const i32,
        a: *mut C64,
        lda: *const i32,
        w: *mut C64,
        vl: *mut C64,
        ldvl: *const i32,
        vr: *mut C64,
        ldvr: *const i32,
        work: *mut C64,
        lwork: *const i32,
        rwork: *mut f64,
        info: *mut i32,
    );

    fn zgemm_(
        transa: *const c_char,
        transb: *const c_char,
        m: *const i32,
        n: *const i32,
        k: *const i32,
        alpha: *const C64,
        a: *const C64,
        lda: *const i32,
        b: *const C64,
        ldb: *const i32,
        beta: *const C64,
        c: *mut C64,
        ldc: *const i32,
    );
}

fn square_dim(m: &CMatrix) -> Result<i32, LinalgError> {
    if m.rows != m.cols {
        return Err(LinalgError::NotSquare { rows: m.rows, cols: m.cols });
    }
    Ok(m.rows as i32)
}

/// Eigendecomposition of a Hermitian matrix; consumes the matrix.
///
/// Returns ascending eigenvalues and the matching orthonormal eigenvectors
/// as matrix columns.
pub fn eigh(mut mat: CMatrix) -> Result<(Vec<f64>, CMatrix), LinalgError> {
    let n = square_dim(&mat)?;
    if n == 0 {
        return Ok((Vec::new(), mat));
    }
    let mut w = vec![0.0_f64; n as usize];
    let mut info = 0i32;

    // workspace query
    let mut work_q = [C64::new(0.0, 0.0)];
    let mut rwork_q = [0.0_f64];
    let mut iwork_q = [0i32];
    let m1 = -1i32;
    unsafe {
        zheevd_(
            &(b'V' as c_char),
            &(b'L' as c_char),
            &n,
            mat.data.as_mut_ptr(),
            &n,
            w.as_mut_ptr(),
            work_q.as_mut_ptr(),
            &m1,
            rwork_q.as_mut_ptr(),
            &m1,
            iwork_q.as_mut_ptr(),
            &m1,
            &mut info,
        );
    }
    if info != 0 {
        return Err(LinalgError::Lapack { routine: "zheevd (query)", info });
    }
    let lwork = work_q[0].re as i32;
    let lrwork = rwork_q[0] as i32;
    let liwork = iwork_q[0];
    let mut work = vec![C64::new(0.0, 0.0); lwork as usize];
    let mut rwork = vec![0.0_f64; lrwork as usize];
    let mut iwork = vec![0i32; liwork as usize];
    unsafe {
        zheevd_(
            &(b'V' as c_char),
            &(b'L' as c_char),
            &n,
            mat.data.as_mut_ptr(),
            &n,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            rwork.as_mut_ptr(),
            &lrwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(LinalgError::Lapack { routine: "zheevd", info });
    }
    Ok((w, mat))
}

/// All eigenvalues of a Hermitian matrix (ascending); consumes the matrix.
pub fn eigh_values(mut mat: CMatrix) -> Result<Vec<f64>, LinalgError> {
    let n = square_dim(&mat)?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut w = vec![0.0_f64; n as usize];
    let mut info = 0i32;
    let mut work_q = [C64::new(0.0, 0.0)];
    let mut rwork_q = [0.0_f64];
    let mut iwork_q = [0i32];
    let m1 = -1i32;
    unsafe {
        zheevd_(
            &(b'N' as c_char),
            &(b'L' as c_char),
            &n,
            mat.data.as_mut_ptr(),
            &n,
            w.as_mut_ptr(),
            work_q.as_mut_ptr(),
            &m1,
            rwork_q.as_mut_ptr(),
            &m1,
            iwork_q.as_mut_ptr(),
            &m1,
            &mut info,
        );
    }
    if info != 0 {
        return Err(LinalgError::Lapack { routine: "zheevd (query)", info });
    }
    let lwork = work_q[0].re as i32;
    let lrwork = rwork_q[0] as i32;
    let liwork = iwork_q[0];
    let mut work = vec![C64::new(0.0, 0.0); lwork as usize];
    let mut rwork = vec![0.0_f64; lrwork as usize];
    let mut iwork = vec![0i32; liwork as usize];
    unsafe {
        zheevd_(
            &(b'N' as c_char),
            &(b'L' as c_char),
            &n,
            mat.data.as_mut_ptr(),
            &n,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            rwork.as_mut_ptr(),
            &lrwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(LinalgError::Lapack { routine: "zheevd", info });
    }
    Ok(w)
}

/// Eigenpairs of a Hermitian matrix whose eigenvalues lie in `(vl, vu]`.
///
/// `expected` must be the exact eigenvalue count in the window (known to the
/// caller from a prior values-only solve); the call fails rather than return
/// a different number of pairs.
pub fn eigh_window(
    mut mat: CMatrix,
    vl: f64,
    vu: f64,
    expected: usize,
) -> Result<(Vec<f64>, CMatrix), LinalgError> {
    let n = square_dim(&mat)?;
    let cap = expected + 8;
    let mut w = vec![0.0_f64; n as usize];
    let mut z = CMatrix::zeros(n as usize, cap);
    let mut isuppz = vec![0i32; 2 * n.max(1) as usize];
    let mut m_found = 0i32;
    let mut info = 0i32;
    let abstol = 0.0_f64;
    let il = 0i32;
    let iu = 0i32;
    let ldz = n.max(1);

    let mut work_q = [C64::new(0.0, 0.0)];
    let mut rwork_q = [0.0_f64];
    let mut iwork_q = [0i32];
    let m1 = -1i32;
    unsafe {
        zheevr_(
            &(b'V' as c_char),
            &(b'V' as c_char),
            &(b'L' as c_char),
            &n,
            mat.data.as_mut_ptr(),
            &n,
            &vl,
            &vu,
            &il,
            &iu,
            &abstol,
            &mut m_found,
            w.as_mut_ptr(),
            z.data.as_mut_ptr(),
            &ldz,
            isuppz.as_mut_ptr(),
            work_q.as_mut_ptr(),
            &m1,
            rwork_q.as_mut_ptr(),
            &m1,
            iwork_q.as_mut_ptr(),
            &m1,
            &mut info,
        );
    }
    if info != 0 {
        return Err(LinalgError::Lapack { routine: "zheevr (query)", info });
    }
    let lwork = work_q[0].re as i32;
    let lrwork = rwork_q[0] as i32;
    let liwork = iwork_q[0];
    let mut work = vec![C64::new(0.0, 0.0); lwork as usize];
    let mut rwork = vec![0.0_f64; lrwork as usize];
    let mut iwork = vec![0i32; liwork as usize];
    unsafe {
        zheevr_(
            &(b'V' as c_char),
            &(b'V' as c_char),
            &(b'L' as c_char),
            &n,
            mat.data.as_mut_ptr(),
            &n,
            &vl,
            &vu,
            &il,
            &iu,
            &abstol,
            &mut m_found,
            w.as_mut_ptr(),
            z.data.as_mut_ptr(),
            &ldz,
            isuppz.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            rwork.as_mut_ptr(),
            &lrwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(LinalgError::Lapack { routine: "zheevr", info });
    }
    let found = m_found as usize;
    if found != expected {
        return Err(LinalgError::WindowMismatch { expected, found });
    }
    w.truncate(found);
    let mut vecs = CMatrix::zeros(n as usize, found);
    for j in 0..found {
        vecs.col_mut(j).copy_from_slice(z.col(j));
    }
    Ok((w, vecs))
}

/// Eigenvalues and right eigenvectors of a general complex matrix.
pub fn eig_general(mut mat: CMatrix) -> Result<(Vec<C64>, CMatrix), LinalgError> {
    let n = square_dim(&mat)?;
    let mut w = vec![C64::new(0.0, 0.0); n as usize];
    let mut vr = CMatrix::zeros(n as usize, n as usize);
    let mut vl = [C64::new(0.0, 0.0)];
    let ldvl = 1i32;
    let mut rwork = vec![0.0_f64; 2 * n.max(1) as usize];
    let mut info = 0i32;

    let mut work_q = [C64::new(0.0, 0.0)];
    let m1 = -1i32;
    unsafe {
        zgeev_(
            &(b'N' as c_char),
            &(b'V' as c_char),
            &n,
            mat.data.as_mut_ptr(),
            &n,
            w.as_mut_ptr(),
            vl.as_mut_ptr(),
            &ldvl,
            vr.data.as_mut_ptr(),
            &n,
            work_q.as_mut_ptr(),
            &m1,
            rwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(LinalgError::Lapack { routine: "zgeev (query)", info });
    }
    let lwork = work_q[0].re as i32;
    let mut work = vec![C64::new(0.0, 0.0); lwork as usize];
    unsafe {
        zgeev_(
            &(b'N' as c_char),
            &(b'V' as c_char),
            &n,
            mat.data.as_mut_ptr(),
            &n,
            w.as_mut_ptr(),
            vl.as_mut_ptr(),
            &ldvl,
            vr.data.as_mut_ptr(),
            &n,
            work.as_mut_ptr(),
            &lwork,
            rwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(LinalgError::Lapack { routine: "zgeev", info });
    }
    Ok((w, vr))
}

/// `exp(scale * H)` for Hermitian `H` through its eigendecomposition.
pub fn expm_hermitian(h: &CMatrix, scale: C64) -> Result<CMatrix, LinalgError> {
    let (w, v) = eigh(h.clone())?;
    // V diag(exp(scale w)) V†
    let mut scaled = v.clone();
    for (j, &wj) in w.iter().enumerate() {
        let phase = (scale * wj).exp();
        for x in scaled.col_mut(j) {
            *x *= phase;
        }
    }
    Ok(scaled.matmul(&v.adjoint()))
}
