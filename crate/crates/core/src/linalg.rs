//! Small dense complex matrix helpers.
//!
//! Everything here works on `n <= 16` matrices, so clarity wins over blocking
//! or allocation tricks.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type RMat = DMatrix<f64>;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn trace(m: &CMat) -> C64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

/// Trace of `a * b` without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn is_real(m: &CMat, tol: f64) -> bool {
    m.iter().all(|z| z.im.abs() <= tol)
}

/// Eigenvalues of a square complex matrix via the complex Schur form.
pub fn eigenvalues(m: &CMat) -> Vec<C64> {
    let n = m.nrows();
    if n == 1 {
        return vec![m[(0, 0)]];
    }
    let schur = m.clone().schur();
    let (_, t) = schur.unpack();
    (0..n).map(|i| t[(i, i)]).collect()
}

/// Unit vector spanning the (numerically) one-dimensional kernel of `m`.
///
/// Picks the right singular vector of the smallest singular value.
pub fn null_vector(m: &CMat) -> Vec<C64> {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    (0..n).map(|j| v_t[(idx, j)].conj()).collect()
}

/// Real null vector of a real matrix.
pub fn real_null_vector(m: &RMat) -> Vec<f64> {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    (0..n).map(|j| v_t[(idx, j)]).collect()
}

pub fn determinant(m: &CMat) -> C64 {
    m.clone().determinant()
}

pub fn inverse(m: &CMat) -> Option<CMat> {
    m.clone().try_inverse()
}

/// Orthonormal basis of the null space of a real matrix (singular values below `tol * max`).
pub fn real_null_space(m: &RMat, tol: f64) -> Vec<Vec<f64>> {
    let n = m.ncols();
    // pad to square so the SVD always yields n right singular vectors
    let mut sq = RMat::zeros(n.max(m.nrows()), n);
    sq.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = sq.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= tol * smax.max(1e-300))
        .map(|(i, _)| (0..n).map(|j| v_t[(i, j)]).collect())
        .collect()
}

/// Matrix exponential.
pub fn expm(m: &CMat) -> CMat {
    m.clone().exp()
}

/// Solve `a x = b` in the least-squares sense (minimum norm) for real systems.
pub fn real_lstsq(a: &RMat, b: &[f64]) -> Vec<f64> {
    let svd = a.clone().svd(true, true);
    let rhs = nalgebra::DVector::from_column_slice(b);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let x = svd
        .solve(&rhs, 1e-12 * smax.max(1e-300))
        .expect("both factors were computed");
    x.iter().cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_of_rotation_generator() {
        let m = to_complex(&RMat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        let mut ev = eigenvalues(&m);
        ev.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert!((ev[0] - c(0.0, -1.0)).norm() < 1e-12);
        assert!((ev[1] - c(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn null_vector_is_annihilated() {
        let m = to_complex(&RMat::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 1.0, 1.0]));
        let v = null_vector(&m);
        let v = nalgebra::DVector::from_vec(v);
        assert!((&m * v).norm() < 1e-12);
    }

    #[test]
    fn null_space_dimension() {
        let m = RMat::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(real_null_space(&m, 1e-10).len(), 1);
    }
}
