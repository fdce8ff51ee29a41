//! Thin wrappers over faer's dense kernels.

use faer::complex_native::c64;
use faer::{Mat, Side};

use crate::algebra::C64;

pub type CMat = Mat<c64>;
pub type RMat = Mat<f64>;

#[inline]
pub fn to_c64(z: C64) -> c64 {
    c64::new(z.re, z.im)
}

#[inline]
pub fn from_c64(z: c64) -> C64 {
    C64::new(z.re, z.im)
}

#[inline]
pub fn cconj(z: c64) -> c64 {
    c64::new(z.re, -z.im)
}

pub const CZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub const CONE: c64 = c64 { re: 1.0, im: 0.0 };

/// Ascending eigenvalues and eigenvectors (columns) of a Hermitian matrix.
pub fn herm_eig(a: &CMat) -> (Vec<f64>, CMat) {
    let e = a.selfadjoint_eigendecomposition(Side::Lower);
    let s = e.s().column_vector();
    let vals: Vec<f64> = (0..a.nrows()).map(|i| s.read(i).re).collect();
    (vals, e.u().to_owned())
}

pub fn herm_eigvals(a: &CMat) -> Vec<f64> {
    a.selfadjoint_eigenvalues(Side::Lower)
}

/// Ascending eigenvalues and eigenvectors of a real symmetric matrix.
pub fn sym_eig(a: &RMat) -> (Vec<f64>, RMat) {
    let e = a.selfadjoint_eigendecomposition(Side::Lower);
    let s = e.s().column_vector();
    let vals: Vec<f64> = (0..a.nrows()).map(|i| s.read(i)).collect();
    (vals, e.u().to_owned())
}

pub fn sym_eigvals(a: &RMat) -> Vec<f64> {
    a.selfadjoint_eigenvalues(Side::Lower)
}

/// Conjugate transpose as an owned matrix.
pub fn adjoint(a: &CMat) -> CMat {
    a.adjoint().to_owned()
}

/// max |A − A*| over entries.
pub fn hermitian_defect(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut m: f64 = 0.0;
    for j in 0..n {
        for i in 0..=j {
            let x = a.read(i, j);
            let y = a.read(j, i);
            m = m.max(((x.re - y.re).powi(2) + (x.im + y.im).powi(2)).sqrt());
        }
    }
    m
}

/// max |A − B| over entries.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let d = a.read(i, j) - b.read(i, j);
            m = m.max((d.re * d.re + d.im * d.im).sqrt());
        }
    }
    m
}

/// Symmetrize (A + A*)/2 in place.
pub fn make_hermitian(a: &mut CMat) {
    let n = a.nrows();
    for j in 0..n {
        for i in 0..=j {
            let x = a.read(i, j);
            let y = a.read(j, i);
            let avg = c64::new(0.5 * (x.re + y.re), 0.5 * (x.im - y.im));
            a.write(i, j, avg);
            a.write(j, i, cconj(avg));
        }
    }
}

pub fn make_symmetric(a: &mut RMat) {
    let n = a.nrows();
    for j in 0..n {
        for i in 0..j {
            let v = 0.5 * (a.read(i, j) + a.read(j, i));
            a.write(i, j, v);
            a.write(j, i, v);
        }
    }
}

/// Normalized trace Tr(A)/D.
pub fn ntrace(a: &CMat) -> C64 {
    let n = a.nrows();
    let mut s = C64::new(0.0, 0.0);
    for i in 0..n {
        s += from_c64(a.read(i, i));
    }
    s / n as f64
}

/// Normalized trace of a product, tr(AB), without forming AB.
pub fn ntrace_prod(a: &CMat, b: &CMat) -> C64 {
    let n = a.nrows();
    let mut s = c64::new(0.0, 0.0);
    for j in 0..n {
        for k in 0..n {
            s += a.read(j, k) * b.read(k, j);
        }
    }
    from_c64(s) / n as f64
}

/// Operator (spectral) norm of a Hermitian matrix.
pub fn herm_opnorm(a: &CMat) -> f64 {
    let v = herm_eigvals(a);
    v.first().map(|x| x.abs()).unwrap_or(0.0).max(v.last().map(|x| x.abs()).unwrap_or(0.0))
}

/// Spectral norm of a real symmetric matrix.
pub fn sym_opnorm(a: &RMat) -> f64 {
    let v = sym_eigvals(a);
    v.first().map(|x| x.abs()).unwrap_or(0.0).max(v.last().map(|x| x.abs()).unwrap_or(0.0))
}

/// Euclidean norm of a complex vector.
pub fn cnorm(v: &[c64]) -> f64 {
    v.iter().map(|z| z.re * z.re + z.im * z.im).sum::<f64>().sqrt()
}

/// y = A x.
pub fn cmatvec(a: &CMat, x: &[c64]) -> Vec<c64> {
    let n = a.nrows();
    let mut y = vec![CZERO; n];
    for (k, &xk) in x.iter().enumerate() {
        if xk == CZERO {
            continue;
        }
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += a.read(i, k) * xk;
        }
    }
    y
}
