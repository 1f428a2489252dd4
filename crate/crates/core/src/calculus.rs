//! Relations between the phases of related matrices: pseudoinverse,
//! sums within a cone, compressions, Schur complements, products, and the
//! small phase test for `det(I + AB) != 0`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{
    c, eigenvalues, ensure_finite, ensure_square, identity, is_zero, pinv, range_isometry, rank, sigma_min, svd,
    wrap_angle, CMatrix, Tolerances,
};
use crate::sectorial::{classify, exact_phases, phases_quasi, sectorial_decomposition, PhaseList};

/// `C[alpha, beta]`: semi-sectorial matrices whose phases fit in `[alpha, beta]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseCone {
    alpha: f64,
    beta: f64,
}

impl PhaseCone {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let width = beta - alpha;
        if !(alpha.is_finite() && beta.is_finite()) || !(0.0..2.0 * PI).contains(&width) {
            return Err(Error::InvalidCone { alpha, beta });
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn width(&self) -> f64 {
        self.beta - self.alpha
    }

    /// Whether the phase interval `[lo, hi]` fits in the cone modulo `2 pi`.
    pub fn contains_interval(&self, lo: f64, hi: f64, eps: f64) -> bool {
        if hi - lo > self.width() + eps {
            return false;
        }
        let k = ((self.alpha - eps - lo) / (2.0 * PI)).ceil();
        let shift = 2.0 * PI * k;
        hi + shift <= self.beta + eps
    }
}

/// Phases of `C^†`: negated and reversed phases of `C`.
pub fn pinv_phases(m: &CMatrix, tol: &Tolerances) -> Result<PhaseList> {
    let p = exact_phases(m, tol)?;
    let mut out = p.clone();
    out.phases = p.phases.iter().rev().map(|x| -x).collect();
    out.center = -p.center;
    if out.center <= -PI {
        out = out.shifted(2.0 * PI);
    }
    Ok(out)
}

/// Membership in a phase cone. The zero matrix belongs to every cone; matrices
/// without computable phases belong to none.
pub fn cone_contains(cone: &PhaseCone, m: &CMatrix, tol: &Tolerances) -> bool {
    if ensure_square(m).is_err() || ensure_finite(m).is_err() {
        return false;
    }
    if is_zero(m) {
        return true;
    }
    match exact_phases(m, tol) {
        Ok(p) if p.is_empty() => true,
        Ok(p) => cone.contains_interval(p.min(), p.max(), tol.eps_phase),
        Err(_) => false,
    }
}

/// `X* C X` for full-column-rank `X`.
pub fn compression(m: &CMatrix, x: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    let n = ensure_square(m)?;
    if x.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "X has {} rows, matrix is {n}x{n}",
            x.nrows()
        )));
    }
    if x.ncols() == 0 || x.ncols() > n || rank(x, tol)? < x.ncols() {
        return Err(Error::RankDeficientX);
    }
    Ok(x.adjoint() * m * x)
}

/// `phi_j(C) >= phi_j(inner) >= phi_{r - k + j}(C)` for `j = 1..k`, with
/// `inner` aligned to the branch of `outer`.
pub fn interlaces(outer: &PhaseList, inner: &PhaseList, eps: f64) -> bool {
    let (r, k) = (outer.len(), inner.len());
    if k > r {
        return false;
    }
    if k == 0 {
        return true;
    }
    let inner = inner.aligned_to(outer.center);
    (0..k).all(|j| outer.phases[j] + eps >= inner.phases[j] && inner.phases[j] + eps >= outer.phases[r - k + j])
}

/// Checks that the compression `X* C X` is semi-sectorial with phases interlacing
/// those of `C`.
pub fn interlace_check(m: &CMatrix, x: &CMatrix, tol: &Tolerances) -> Result<bool> {
    if is_zero(m) {
        return Err(Error::NotSemiSectorial);
    }
    let outer = exact_phases(m, tol).map_err(|_| Error::NotSemiSectorial)?;
    let inner = compression(m, x, tol)?;
    if is_zero(&inner) || inner.norm() <= tol.eps_rank * m.norm() * x.norm_squared() {
        return Err(Error::ZeroCompression);
    }
    if !classify(&inner, tol)?.kind.is_semi() {
        return Ok(false);
    }
    match exact_phases(&inner, tol) {
        Ok(p) => Ok(interlaces(&outer, &p, tol.eps_phase)),
        Err(_) => Ok(false),
    }
}

/// The generalized Schur complement `C/C11 = C22 - C21 C11^† C12` for the
/// leading `k x k` block.
pub fn schur_complement(m: &CMatrix, k: usize, tol: &Tolerances) -> Result<CMatrix> {
    let n = ensure_square(m)?;
    if k == 0 || k >= n {
        return Err(Error::BadPartition { k, n });
    }
    let c11 = m.view((0, 0), (k, k)).into_owned();
    let c12 = m.view((0, k), (k, n - k)).into_owned();
    let c21 = m.view((k, 0), (n - k, k)).into_owned();
    let c22 = m.view((k, k), (n - k, n - k)).into_owned();
    let p11 = pinv(&c11, tol)?;
    let left = &c12 - &c11 * &p11 * &c12;
    let right = &c21 - &c21 * &p11 * &c11;
    let residual = left.norm().max(right.norm()) / m.norm().max(f64::MIN_POSITIVE);
    if residual > tol.eps_rank {
        return Err(Error::RangeConditionViolated { residual });
    }
    Ok(c22 - c21 * p11 * c12)
}

/// Phases of the generalized Schur complement of the leading `k x k` block.
pub fn schur_phases(m: &CMatrix, k: usize, tol: &Tolerances) -> Result<PhaseList> {
    let n = ensure_square(m)?;
    if k == 0 || k >= n {
        return Err(Error::BadPartition { k, n });
    }
    exact_phases(m, tol).map_err(|_| Error::NotSemiSectorial)?;
    let s = schur_complement(m, k, tol)?;
    if is_zero(&s) || s.norm() <= tol.eps_rank * m.norm() {
        return Ok(PhaseList::empty());
    }
    exact_phases(&s, tol)
}

/// `x` majorized by `y`: descending prefix sums of `x` never exceed those of
/// `y`, and the totals agree within `eps * n`.
pub fn majorization_check(x: &[f64], y: &[f64], eps: f64) -> Result<bool> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    let (px, py) = (prefix_sums(x), prefix_sums(y));
    let slack = eps * n.max(1) as f64;
    let prefixes = px.iter().zip(&py).all(|(a, b)| *a <= b + slack);
    let totals = n == 0 || (px[n - 1] - py[n - 1]).abs() <= slack;
    Ok(prefixes && totals)
}

fn sorted_desc(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

fn prefix_sums(v: &[f64]) -> Vec<f64> {
    sorted_desc(v)
        .iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct PartialSums {
    pub eigen: Vec<f64>,
    pub bound: Vec<f64>,
}

/// Outcome of the product (or single matrix) eigen-angle majorization.
#[derive(Debug, Clone, Serialize)]
pub struct MajorizationReport {
    /// `angle(lambda_{!=0}(AB))`, descending, on the branch around `gamma(A) + gamma(B)`.
    pub eigen_angles: Vec<f64>,
    /// `phi(U* A U) + phi(U* B U)`, descending.
    pub bound_phases: Vec<f64>,
    #[serde(skip)]
    pub isometry: CMatrix,
    pub holds: bool,
    pub partial_sums: PartialSums,
    /// Nonzero eigenvalues of the product counted directly.
    pub eigen_count: usize,
    /// `rank((AB)^2)` (or `rank(C)` for a single matrix).
    pub expected_count: usize,
    /// `phi_(A) + phi_(B) <= angle(lambda_i) <= phī(A) + phī(B)`.
    pub bounds_hold: bool,
}

fn nonzero_eigen_count(m: &CMatrix, tol: &Tolerances) -> Result<usize> {
    let scale = m.norm();
    if scale == 0.0 {
        return Ok(0);
    }
    let cutoff = tol.eps_rank.sqrt() * scale;
    Ok(eigenvalues(m)?.iter().filter(|z| z.norm() > cutoff).count())
}

/// Eigen-angle majorization for `AB` with `A` quasi-sectorial and `B`
/// semi-sectorial, through the isometry `U = U_1 U_2` onto the range of `A`
/// and then onto the range of the compressed `B`.
pub fn product_majorization(a: &CMatrix, b: &CMatrix, tol: &Tolerances) -> Result<MajorizationReport> {
    let n = ensure_square(a)?;
    if ensure_square(b)? != n {
        return Err(Error::DimensionMismatch(format!(
            "A is {n}x{n}, B is {0}x{0}",
            b.nrows()
        )));
    }
    if !classify(a, tol)?.kind.is_quasi() {
        return Err(Error::NotQuasiSectorialA);
    }
    let pa = phases_quasi(a, tol)?;
    let pb = exact_phases(b, tol).map_err(|_| Error::NotSemiSectorialB)?;
    let prod = a * b;
    let expected = rank(&(&prod * &prod), tol)?;
    let eigen_count = nonzero_eigen_count(&prod, tol)?;

    let u1 = range_isometry(a, tol)?;
    let b1 = u1.adjoint() * b * &u1;
    let u2 = if is_zero(&b1) || b1.norm() <= tol.eps_rank * b.norm() {
        CMatrix::zeros(u1.ncols(), 0)
    } else {
        range_isometry(&b1, tol)?
    };
    let u = &u1 * &u2;
    let r = u.ncols();
    let empty = |isometry: CMatrix| MajorizationReport {
        eigen_angles: vec![],
        bound_phases: vec![],
        isometry,
        holds: true,
        partial_sums: PartialSums {
            eigen: vec![],
            bound: vec![],
        },
        eigen_count,
        expected_count: expected,
        bounds_hold: true,
    };
    if r == 0 {
        return Ok(empty(u));
    }
    let a2 = u.adjoint() * a * &u;
    let b2 = u.adjoint() * b * &u;
    let qa = phases_quasi(&a2, tol)?.aligned_to(pa.center);
    let qb = exact_phases(&b2, tol)
        .map_err(|_| Error::NotSemiSectorialB)?
        .aligned_to(pb.center);
    if qa.len() != r || qb.len() != r {
        return Err(Error::InternalClassificationFailure(format!(
            "compressed factors have {} and {} phases, expected {r}",
            qa.len(),
            qb.len()
        )));
    }
    let bound: Vec<f64> = qa.phases.iter().zip(&qb.phases).map(|(x, y)| x + y).collect();
    let center = pa.center + pb.center;
    let eig = sorted_desc(
        &eigenvalues(&(&a2 * &b2))?
            .iter()
            .map(|z| branch_near(z.arg(), center))
            .collect::<Vec<_>>(),
    );
    let holds = majorization_check(&eig, &bound, tol.eps_phase)?;
    let (lo, hi) = (pa.min() + pb.min(), pa.max() + pb.max());
    let bounds_hold = eig.iter().all(|&t| t >= lo - tol.eps_phase && t <= hi + tol.eps_phase);
    Ok(MajorizationReport {
        partial_sums: PartialSums {
            eigen: prefix_sums(&eig),
            bound: prefix_sums(&bound),
        },
        eigen_angles: eig,
        bound_phases: sorted_desc(&bound),
        isometry: u,
        holds,
        eigen_count,
        expected_count: expected,
        bounds_hold,
    })
}

/// Shifts `theta` by a multiple of `2 pi` into `(center - pi, center + pi]`.
fn branch_near(theta: f64, center: f64) -> f64 {
    center + wrap_angle(theta - center)
}

/// Eigen-angle majorization for a single semi-sectorial matrix (`A = I`).
pub fn self_majorization(m: &CMatrix, tol: &Tolerances) -> Result<MajorizationReport> {
    let n = ensure_square(m)?;
    exact_phases(m, tol).map_err(|_| Error::NotSemiSectorial)?;
    let mut report = product_majorization(&identity(n), m, tol).map_err(|e| match e {
        Error::NotSemiSectorialB => Error::NotSemiSectorial,
        other => other,
    })?;
    report.expected_count = svd(m)?.rank(tol);
    report.eigen_count = nonzero_eigen_count(m, tol)?;
    Ok(report)
}

/// Small phase test: `det(I + AB) != 0` for every `B` in the cone iff
/// `[alpha, beta]` lies in `(-pi - phi_(A), pi - phī(A))` modulo `2 pi`.
pub fn spt_check(a: &CMatrix, cone: &PhaseCone, tol: &Tolerances) -> Result<bool> {
    ensure_square(a)?;
    if is_zero(a) {
        return Ok(true);
    }
    if !classify(a, tol)?.kind.is_quasi() {
        return Err(Error::NotQuasiSectorial);
    }
    let p = phases_quasi(a, tol)?;
    if p.is_empty() {
        return Ok(true);
    }
    let (lo, hi) = (p.min(), p.max());
    let mid = 0.5 * (cone.alpha + cone.beta);
    let k = ((-p.center - mid) / (2.0 * PI)).round();
    let shift = 2.0 * PI * k;
    let eps = tol.eps_phase;
    Ok(cone.alpha + shift > -PI - lo + eps && cone.beta + shift < PI - hi - eps)
}

/// A cone member `B` with `I + AB` singular, for a cone that fails [`spt_check`].
///
/// With `A = T* diag(0, D) T`, `B = T^{-1} diag(0, e^{jb} P) T^{-*}` has every
/// phase equal to `b` and `I + AB` similar to `I + diag(0, e^{jb} D P)`.
/// Choosing `b` in the cone with `psi = pi - b` inside `[phi_(A), phī(A)]`,
/// a positive definite `P` with `DP v = e^{j psi} v` is built from any `v`
/// with `v* D^{-1} v e^{j psi} > 0`.
pub fn spt_witness(a: &CMatrix, cone: &PhaseCone, tol: &Tolerances) -> Result<CMatrix> {
    let n = ensure_square(a)?;
    if spt_check(a, cone, tol)? {
        return Err(Error::ConditionNotViolated);
    }
    let dec = sectorial_decomposition(a, tol)?;
    let r = dec.rank;
    let phi_hi = dec.phases.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let phi_lo = dec.phases.iter().copied().fold(f64::INFINITY, f64::min);
    // Admissible b modulo 2 pi: [pi - phi_hi, pi - phi_lo].
    let (target_lo, target_hi) = (PI - phi_hi, PI - phi_lo);
    let centre = 0.5 * (target_lo + target_hi);
    let k = ((centre - 0.5 * (cone.alpha + cone.beta)) / (2.0 * PI)).round();
    let (mut best, mut b_shifted) = (f64::INFINITY, 0.0);
    for dk in [-1.0, 0.0, 1.0] {
        let shift = 2.0 * PI * (k + dk);
        let lo = (cone.alpha + shift).max(target_lo);
        let hi = (cone.beta + shift).min(target_hi);
        let gap = (lo - hi).max(0.0);
        if gap < best {
            best = gap;
            b_shifted = if lo <= hi {
                0.5 * (lo + hi)
            } else if cone.beta + shift < target_lo {
                cone.beta + shift
            } else {
                cone.alpha + shift
            };
        }
    }
    if best > 4.0 * tol.eps_phase {
        return Err(Error::SearchFailed {
            best_sigma_min: f64::NAN,
        });
    }
    let psi = (PI - b_shifted).clamp(phi_lo, phi_hi);

    // Weights w_i >= 0 with sum w_i sin(psi - phi_i) = 0.
    let s: Vec<f64> = dec.phases.iter().map(|p| (psi - p).sin()).collect();
    let mut w = vec![1.0; r];
    let imbalance: f64 = s.iter().sum();
    let (imax, _) = s
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    let (imin, _) = s.iter().enumerate().fold(
        (0, f64::NEG_INFINITY),
        |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
    );
    if imbalance > 0.0 && s[imax] < -1e-12 {
        w[imax] += imbalance / -s[imax];
    } else if imbalance < 0.0 && s[imin] > 1e-12 {
        w[imin] += -imbalance / s[imin];
    } else if imbalance.abs() > 1e-12 {
        // psi sits on a boundary phase: keep only the indices attaining it.
        for (wi, si) in w.iter_mut().zip(&s) {
            *wi = if si.abs() <= 1e-12 { 1.0 } else { 0.0 };
        }
    }
    let v = CMatrix::from_fn(r, 1, |i, _| c(w[i].sqrt(), 0.0));
    let z = CMatrix::from_fn(r, 1, |i, _| crate::numerics::cis(psi - dec.phases[i]) * v[(i, 0)]);
    let vz = (v.adjoint() * &z)[(0, 0)].re;
    if vz <= 0.0 {
        return Err(Error::SearchFailed {
            best_sigma_min: f64::NAN,
        });
    }
    let vv = v.norm_squared();
    let p = (&z * z.adjoint()).unscale(vz) + (identity(r) - (&v * v.adjoint()).unscale(vv));
    let mut inner = CMatrix::zeros(n, n);
    inner
        .view_mut((n - r, n - r), (r, r))
        .copy_from(&(p * crate::numerics::cis(b_shifted)));
    let t_inv = dec.t.clone().try_inverse().ok_or(Error::SearchFailed {
        best_sigma_min: f64::NAN,
    })?;
    let witness = &t_inv * inner * t_inv.adjoint();
    let ab = a * &witness;
    let smin = sigma_min(&(identity(n) + &ab))?;
    if smin >= 1e-6 * (1.0 + ab.norm()) || !cone_contains(cone, &witness, tol) {
        return Err(Error::SearchFailed { best_sigma_min: smin });
    }
    Ok(witness)
}
