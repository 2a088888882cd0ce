//! Small dense-matrix helpers on top of `nalgebra`.
//!
//! Everything here works on dynamically sized matrices; problem dimensions
//! are tiny (n, m <= 4 in practice) so clarity wins over blocking.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Default tolerance for PSD checks on the smallest eigenvalue.
pub const PSD_TOL: f64 = 1e-10;

/// Relative tolerance used by rank tests.
const RANK_TOL: f64 = 1e-9;

/// `(M + M') / 2`.
pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

pub fn is_square(m: &Mat) -> bool {
    m.nrows() == m.ncols()
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_eigenvalue(m: &Mat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    SymmetricEigen::new(symmetrize(m))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn max_abs_asymmetry(m: &Mat) -> f64 {
    (m - m.transpose()).amax()
}

/// Accepts `m` if it is square, symmetric up to round-off and has no
/// eigenvalue below `-PSD_TOL`.
pub fn check_psd(m: &Mat, what: &str) -> Result<()> {
    if !is_square(m) {
        return Err(Error::Dimension(format!("{what} must be square")));
    }
    let scale = 1.0 + m.amax();
    if max_abs_asymmetry(m) > 1e-9 * scale || min_eigenvalue(m) < -PSD_TOL * scale {
        return Err(Error::NotPsd(what.to_string()));
    }
    Ok(())
}

pub fn check_pd(m: &Mat, what: &str) -> Result<()> {
    if !is_square(m) {
        return Err(Error::Dimension(format!("{what} must be square")));
    }
    if max_abs_asymmetry(m) > 1e-9 * (1.0 + m.amax()) || min_eigenvalue(m) <= PSD_TOL {
        return Err(Error::NotPositiveDefinite(what.to_string()));
    }
    Ok(())
}

/// Cholesky factor of a symmetric positive definite matrix.
pub fn spd_factor(m: &Mat, what: &str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(symmetrize(m)).ok_or_else(|| Error::NotPositiveDefinite(what.to_string()))
}

/// Principal square root of a PSD matrix; negative round-off eigenvalues are clamped.
pub fn psd_sqrt(m: &Mat) -> Mat {
    let eig = SymmetricEigen::new(symmetrize(m));
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * Mat::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// Largest singular value.
pub fn spectral_norm(m: &Mat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

pub fn smallest_singular_value(m: &Mat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().min()
}

pub fn rank(m: &Mat) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.singular_values();
    let cutoff = RANK_TOL * sv.max().max(1.0);
    sv.iter().filter(|&&s| s > cutoff).count()
}

/// `[B, AB, ..., A^{n-1}B]`.
pub fn controllability_matrix(a: &Mat, b: &Mat) -> Mat {
    let n = a.nrows();
    let m = b.ncols();
    let mut out = Mat::zeros(n, n * m);
    let mut block = b.clone();
    for k in 0..n {
        out.view_mut((0, k * m), (n, m)).copy_from(&block);
        block = a * &block;
    }
    out
}

/// `[C; CA; ...; CA^{n-1}]`.
pub fn observability_matrix(a: &Mat, c: &Mat) -> Mat {
    controllability_matrix(&a.transpose(), &c.transpose()).transpose()
}

pub fn spectral_radius(m: &Mat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// `(A, B)` is stabilizable when every mode outside the controllable
/// subspace is strictly stable.
pub fn is_stabilizable(a: &Mat, b: &Mat) -> bool {
    let n = a.nrows();
    let ctrb = controllability_matrix(a, b);
    let r = rank(&ctrb);
    if r == n {
        return true;
    }
    // Orthonormal basis [U1 U2] with U1 spanning range(ctrb); A is block upper
    // triangular in it and the uncontrollable dynamics are U2' A U2.
    let svd = (&ctrb * ctrb.transpose()).svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let u2 = u.columns(r, n - r).into_owned();
    let a22 = u2.transpose() * a * &u2;
    spectral_radius(&a22) < 1.0 - 1e-12
}

pub fn is_observable(a: &Mat, c: &Mat) -> bool {
    rank(&observability_matrix(a, c)) == a.nrows()
}

/// `Tr(A B)` without forming the product.
pub fn trace_product(a: &Mat, b: &Mat) -> f64 {
    let mut acc = NeumaierSum::default();
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc.add(a[(i, k)] * b[(k, i)]);
        }
    }
    acc.value()
}

/// `x' M y`.
pub fn bilinear(x: &Vector, m: &Mat, y: &Vector) -> f64 {
    x.dot(&(m * y))
}

/// Compensated (Neumaier) summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &NeumaierSum) {
        self.add(other.sum);
        self.add(other.compensation);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<NeumaierSum>().value()
}

/// Builds a matrix from row-major nested rows, checking they are rectangular.
pub fn mat_from_rows(rows: &[Vec<f64>], what: &str) -> Result<Mat> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Dimension(format!("{what} has ragged rows")));
    }
    Ok(Mat::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn mat_to_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}
