//! Dense complex matrices and the spectral kernels everything else is built on.
//!
//! Every rank decision in the crate goes through [`Svd::rank`] with the relative
//! cutoff `eps_rank * sigma_1`, and every semidefiniteness decision goes through
//! [`psd_floor`]. Keeping the two tests in one place keeps kernel and range
//! decisions consistent across modules.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix, column-major storage, row-major at the I/O boundary.
pub type CMatrix = DMatrix<Complex64>;

pub const J: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn cis(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

/// Numerical tolerances shared by all routines.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    /// Relative singular-value cutoff for rank decisions.
    pub eps_rank: f64,
    /// Relative eigenvalue floor for PSD tests.
    pub eps_psd: f64,
    /// Absolute angle tolerance in radians.
    pub eps_phase: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eps_rank: 1e-9,
            eps_psd: 1e-9,
            eps_phase: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn new(eps_rank: f64, eps_psd: f64, eps_phase: f64) -> Result<Self> {
        let tol = Self {
            eps_rank,
            eps_psd,
            eps_phase,
        };
        tol.validate()?;
        Ok(tol)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eps_rank", self.eps_rank),
            ("eps_psd", self.eps_psd),
            ("eps_phase", self.eps_phase),
        ] {
            if !(v > 0.0 && v < 1e-3) {
                return Err(Error::InvalidTolerance(format!("{name} = {v} must lie in (0, 1e-3)")));
            }
        }
        Ok(())
    }

    /// Defaults overridden by `PHASEKIT_TOL_RANK`, `PHASEKIT_TOL_PSD` and
    /// `PHASEKIT_TOL_PHASE` when set.
    pub fn from_env() -> Result<Self> {
        let mut tol = Self::default();
        let read = |key: &str| -> Result<Option<f64>> {
            match std::env::var(key) {
                Ok(s) => s
                    .trim()
                    .parse::<f64>()
                    .map(Some)
                    .map_err(|e| Error::InvalidTolerance(format!("{key}: {e}"))),
                Err(_) => Ok(None),
            }
        };
        if let Some(v) = read("PHASEKIT_TOL_RANK")? {
            tol.eps_rank = v;
        }
        if let Some(v) = read("PHASEKIT_TOL_PSD")? {
            tol.eps_psd = v;
        }
        if let Some(v) = read("PHASEKIT_TOL_PHASE")? {
            tol.eps_phase = v;
        }
        tol.validate()?;
        Ok(tol)
    }
}

pub fn ensure_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NonSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

pub fn ensure_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

pub fn is_real(m: &CMatrix) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

pub fn is_zero(m: &CMatrix) -> bool {
    m.iter().all(|z| *z == Complex64::new(0.0, 0.0))
}

pub fn from_real(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| c(x, 0.0))
}

/// Builds a matrix from row-major real entries.
pub fn real_matrix(n: usize, rows: &[f64]) -> CMatrix {
    assert_eq!(rows.len(), n * n);
    CMatrix::from_fn(n, n, |i, j| c(rows[i * n + j], 0.0))
}

pub fn diag(entries: &[Complex64]) -> CMatrix {
    let n = entries.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { entries[i] } else { c(0.0, 0.0) })
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// `(M + M*) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Hermitian part of `e^{-j alpha} C`, i.e. `cos(alpha) A + sin(alpha) B`.
pub fn rotated_hermitian_part(a: &CMatrix, b: &CMatrix, alpha: f64) -> CMatrix {
    a.scale(alpha.cos()) + b.scale(alpha.sin())
}

/// Floor below which a Hermitian matrix is no longer declared PSD.
pub fn psd_floor(h: &CMatrix, tol: &Tolerances) -> f64 {
    -tol.eps_psd * h.norm().max(1.0)
}

/// Reduces an angle to the principal branch `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    // rem_euclid maps -pi to pi already, and pi stays pi.
    t
}

/// Hermitian eigendecomposition, eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermEig {
    pub fn min(&self) -> f64 {
        *self.values.last().unwrap_or(&0.0)
    }

    pub fn max(&self) -> f64 {
        *self.values.first().unwrap_or(&0.0)
    }

    /// Eigenvector paired with the smallest eigenvalue.
    pub fn bottom_vector(&self) -> CMatrix {
        let n = self.values.len();
        self.vectors.columns(n - 1, 1).into_owned()
    }

    pub fn top_vector(&self) -> CMatrix {
        self.vectors.columns(0, 1).into_owned()
    }
}

/// Eigendecomposition of a Hermitian matrix. Small asymmetry is removed by
/// symmetrizing; asymmetry beyond `eps_psd * ||H||` is rejected.
pub fn herm_eig(h: &CMatrix, tol: &Tolerances) -> Result<HermEig> {
    let n = ensure_square(h)?;
    ensure_finite(h)?;
    let asym = (h - h.adjoint()).norm();
    let scale = h.norm().max(f64::MIN_POSITIVE);
    if asym > tol.eps_psd * scale.max(1.0) {
        return Err(Error::NotHermitian { asymmetry: asym });
    }
    Ok(herm_eig_unchecked(&hermitian_part(h), n))
}

pub(crate) fn herm_eig_unchecked(h: &CMatrix, n: usize) -> HermEig {
    if n == 0 {
        return HermEig {
            values: vec![],
            vectors: CMatrix::zeros(0, 0),
        };
    }
    let eig = to_faer(h)
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("Hermitian eigensolver converges on finite input");
    let (u, s) = (eig.U(), eig.S().column_vector());
    // The solver returns ascending eigenvalues.
    let values = (0..n).rev().map(|k| s[k].re).collect();
    let vectors = CMatrix::from_fn(n, n, |r, k| u[(r, n - 1 - k)]);
    HermEig { values, vectors }
}

/// Smallest eigenvalue of a matrix already known to be Hermitian.
pub(crate) fn lambda_min(h: &CMatrix) -> f64 {
    let n = h.nrows();
    if n == 0 {
        return 0.0;
    }
    to_faer(h)
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .expect("Hermitian eigensolver converges on finite input")
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

/// Thin singular value decomposition `C = U diag(sigma) V*`, sigma descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    pub sigma: Vec<f64>,
    pub v: CMatrix,
}

impl Svd {
    /// Numerical rank: `#{sigma_i > eps_rank * sigma_1}`.
    pub fn rank(&self, tol: &Tolerances) -> usize {
        let top = match self.sigma.first() {
            Some(&s) if s > 0.0 => s,
            _ => return 0,
        };
        self.sigma.iter().filter(|&&s| s > tol.eps_rank * top).count()
    }

    /// Orthonormal basis of the range (first `r` left singular vectors).
    pub fn range_basis(&self, r: usize) -> CMatrix {
        self.u.columns(0, r).into_owned()
    }

    /// Orthonormal basis of the range of `C*`.
    pub fn corange_basis(&self, r: usize) -> CMatrix {
        self.v.columns(0, r).into_owned()
    }
}

pub fn svd(m: &CMatrix) -> Result<Svd> {
    ensure_finite(m)?;
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Ok(Svd {
            u: CMatrix::zeros(rows, 0),
            sigma: vec![],
            v: CMatrix::zeros(cols, 0),
        });
    }
    let dec = to_faer(m).thin_svd().map_err(|_| Error::NonFinite)?;
    let (u, v, sv) = (dec.U(), dec.V(), dec.S().column_vector());
    // Singular values come back nonincreasing.
    let sigma = (0..k).map(|i| sv[i].re).collect();
    let u = CMatrix::from_fn(rows, k, |r, j| u[(r, j)]);
    let v = CMatrix::from_fn(cols, k, |r, j| v[(r, j)]);
    Ok(Svd { u, sigma, v })
}

/// Full-width orthonormal basis of the range of `m`.
pub fn range_isometry(m: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    let s = svd(m)?;
    let r = s.rank(tol);
    Ok(s.range_basis(r))
}

pub fn rank(m: &CMatrix, tol: &Tolerances) -> Result<usize> {
    Ok(svd(m)?.rank(tol))
}

/// Moore-Penrose pseudoinverse with the shared rank cutoff.
pub fn pinv(m: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    let s = svd(m)?;
    let r = s.rank(tol);
    let (rows, cols) = m.shape();
    let mut out = CMatrix::zeros(cols, rows);
    for k in 0..r {
        let inv = 1.0 / s.sigma[k];
        let vk = s.v.column(k);
        let uk = s.u.column(k);
        out += (vk * uk.adjoint()).scale(inv);
    }
    Ok(out)
}

/// Eigenvalues of a general complex square matrix (complex Schur form).
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<Complex64>> {
    let n = ensure_square(m)?;
    ensure_finite(m)?;
    if n == 0 {
        return Ok(vec![]);
    }
    to_faer(m).eigenvalues().map_err(|_| Error::NonFinite)
}

/// Thin SVD of a real matrix, singular values descending.
#[derive(Debug, Clone)]
pub struct RealSvd {
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub v: DMatrix<f64>,
}

pub fn real_svd(m: &DMatrix<f64>) -> Result<RealSvd> {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    if k == 0 {
        return Ok(RealSvd {
            u: DMatrix::zeros(rows, 0),
            sigma: vec![],
            v: DMatrix::zeros(cols, 0),
        });
    }
    let f = faer::Mat::<f64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    let dec = f.thin_svd().map_err(|_| Error::NonFinite)?;
    let (u, v, sv) = (dec.U(), dec.V(), dec.S().column_vector());
    Ok(RealSvd {
        u: DMatrix::from_fn(rows, k, |r, j| u[(r, j)]),
        sigma: (0..k).map(|i| sv[i]).collect(),
        v: DMatrix::from_fn(cols, k, |r, j| v[(r, j)]),
    })
}

/// Smallest eigenvalue of a real symmetric matrix.
pub fn real_lambda_min(h: &DMatrix<f64>) -> f64 {
    let n = h.nrows();
    if n == 0 {
        return 0.0;
    }
    faer::Mat::<f64>::from_fn(n, n, |i, j| h[(i, j)])
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .expect("symmetric eigensolver converges on finite input")
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

fn to_faer(m: &CMatrix) -> faer::Mat<Complex64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Smallest singular value.
pub fn sigma_min(m: &CMatrix) -> Result<f64> {
    Ok(svd(m)?.sigma.last().copied().unwrap_or(0.0))
}

/// Orthonormal basis for the column span of a full-column-rank `x` (QR).
pub fn orthonormalize(x: &CMatrix) -> CMatrix {
    let qr = x.clone().qr();
    qr.q()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn herm_eig_identity_and_diagonal() {
        let e = herm_eig(&identity(2), &tol()).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0]);
        let d = diag(&[c(2.0, 0.0), c(-1.0, 0.0)]);
        let e = herm_eig(&d, &tol()).unwrap();
        assert_abs_diff_eq!(e.values[0], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.values[1], -1.0, epsilon = 1e-15);
    }

    #[test]
    fn herm_eig_matches_quadratic_roots() {
        // [[a, z], [conj z, b]]: roots (a+b)/2 +- sqrt(((a-b)/2)^2 + |z|^2)
        let (a, b, z) = (0.7, -1.3, c(0.4, -0.9));
        let h = CMatrix::from_row_slice(2, 2, &[c(a, 0.0), z, z.conj(), c(b, 0.0)]);
        let mid = (a + b) / 2.0;
        let rad = (((a - b) / 2.0).powi(2) + z.norm_sqr()).sqrt();
        let e = herm_eig(&h, &tol()).unwrap();
        assert_abs_diff_eq!(e.values[0], mid + rad, epsilon = 1e-14);
        assert_abs_diff_eq!(e.values[1], mid - rad, epsilon = 1e-14);
        let resid = &h * &e.vectors - &e.vectors * diag(&[c(e.values[0], 0.0), c(e.values[1], 0.0)]);
        assert!(resid.norm() < 1e-13);
    }

    #[test]
    fn herm_eig_errors() {
        let ns = CMatrix::zeros(2, 3);
        assert!(matches!(herm_eig(&ns, &tol()), Err(Error::NonSquare { .. })));
        let asym = real_matrix(2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(herm_eig(&asym, &tol()), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn svd_examples() {
        let z = svd(&CMatrix::zeros(2, 2)).unwrap();
        assert_eq!(z.sigma, vec![0.0, 0.0]);
        assert_eq!(z.rank(&tol()), 0);
        let d = svd(&real_matrix(2, &[3.0, 0.0, 0.0, 0.0])).unwrap();
        assert_abs_diff_eq!(d.sigma[0], 3.0, epsilon = 1e-15);
        assert_eq!(d.rank(&tol()), 1);
        // C*C = diag(1, 0) so sigma = [1, 0]
        let n = svd(&real_matrix(2, &[0.0, 0.0, 1.0, 0.0])).unwrap();
        assert_abs_diff_eq!(n.sigma[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(n.sigma[1], 0.0, epsilon = 1e-15);
        assert_eq!(n.rank(&tol()), 1);
        let mut bad = identity(2);
        bad[(0, 1)] = c(f64::NAN, 0.0);
        assert_eq!(svd(&bad).unwrap_err(), Error::NonFinite);
    }

    #[test]
    fn pinv_examples() {
        let p = pinv(&real_matrix(2, &[2.0, 0.0, 0.0, 0.0]), &tol()).unwrap();
        assert!((p - real_matrix(2, &[0.5, 0.0, 0.0, 0.0])).norm() < 1e-15);
        assert!((pinv(&identity(3), &tol()).unwrap() - identity(3)).norm() < 1e-15);
    }

    #[test]
    fn pinv_penrose_conditions_rank_two() {
        let x = CMatrix::from_fn(3, 2, |i, j| {
            c((i + 2 * j) as f64 * 0.3 - 0.4, (i * j) as f64 * 0.2 + 0.1)
        });
        let y = CMatrix::from_fn(2, 3, |i, j| c(0.5 - (i + j) as f64 * 0.25, j as f64 * 0.3 - i as f64));
        let m = &x * &y;
        assert_eq!(rank(&m, &tol()).unwrap(), 2);
        let p = pinv(&m, &tol()).unwrap();
        assert!((&m * &p * &m - &m).norm() < 1e-12);
        assert!((&p * &m * &p - &p).norm() < 1e-12);
        let mp = &m * &p;
        let pm = &p * &m;
        assert!((mp.adjoint() - &mp).norm() < 1e-12);
        assert!((pm.adjoint() - &pm).norm() < 1e-12);
    }

    #[test]
    fn wrap_angle_branch() {
        assert_eq!(wrap_angle(PI), PI);
        assert_abs_diff_eq!(wrap_angle(-PI), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_angle(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_angle(0.25), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn tolerance_validation() {
        assert!(Tolerances::default().validate().is_ok());
        assert!(Tolerances::new(0.0, 1e-9, 1e-8).is_err());
        assert!(Tolerances::new(1e-9, 1e-2, 1e-8).is_err());
    }
}
