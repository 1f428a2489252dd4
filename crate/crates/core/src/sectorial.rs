//! Classification of matrices by their angular numerical range, and phase
//! extraction.
//!
//! Writing `C = A + jB` with `A`, `B` Hermitian, the Hermitian part of the
//! rotated matrix `e^{-j alpha} C` is `H_alpha = cos(alpha) A + sin(alpha) B`.
//! The set of `alpha` with `H_alpha >= 0` (the accretivity arc) carries all the
//! information needed here: it is empty exactly when the field angle is `2 pi`,
//! its length is `pi - delta(C)` otherwise, and its endpoints are the two
//! supporting rays of the numerical range.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{
    cis, ensure_finite, ensure_square, herm_eig_unchecked, hermitian_part, is_real, is_zero, lambda_min,
    rotated_hermitian_part, svd, wrap_angle, CMatrix, Tolerances, J,
};

const ARC_GRID: usize = 720;

/// Strongest class a matrix belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SectorKind {
    Sectorial,
    QuasiSectorial,
    SemiSectorial,
    NotSemiSectorial,
}

impl SectorKind {
    pub fn is_quasi(self) -> bool {
        matches!(self, SectorKind::Sectorial | SectorKind::QuasiSectorial)
    }

    pub fn is_semi(self) -> bool {
        !matches!(self, SectorKind::NotSemiSectorial)
    }
}

/// The closed set of rotation angles `alpha` with `H(e^{-j alpha} C) >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeasibleArc {
    Empty,
    /// `lo` is the principal value of the counter-clockwise start; `hi = lo + length`
    /// is kept unwrapped so that `hi - lo` is the arc length.
    Arc {
        lo: f64,
        hi: f64,
    },
    FullCircle,
}

impl FeasibleArc {
    pub fn is_empty(&self) -> bool {
        matches!(self, FeasibleArc::Empty)
    }

    pub fn length(&self) -> f64 {
        match *self {
            FeasibleArc::Empty => 0.0,
            FeasibleArc::Arc { lo, hi } => hi - lo,
            FeasibleArc::FullCircle => 2.0 * PI,
        }
    }

    pub fn midpoint(&self) -> Option<f64> {
        match *self {
            FeasibleArc::Arc { lo, hi } => Some(wrap_angle(0.5 * (lo + hi))),
            FeasibleArc::FullCircle => Some(0.0),
            FeasibleArc::Empty => None,
        }
    }

    /// Endpoints as principal values in `(-pi, pi]`.
    pub fn endpoints(&self) -> Option<(f64, f64)> {
        match *self {
            FeasibleArc::Arc { lo, hi } => Some((wrap_angle(lo), wrap_angle(hi))),
            _ => None,
        }
    }
}

impl Serialize for FeasibleArc {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            FeasibleArc::Empty => s.serialize_str("empty"),
            FeasibleArc::FullCircle => s.serialize_str("full"),
            FeasibleArc::Arc { .. } => {
                let (lo, hi) = self.endpoints().unwrap();
                [lo, hi].serialize(s)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SectorClass {
    pub kind: SectorKind,
    pub rotated_hermitian: bool,
    pub rank: usize,
    pub feasible_arc: FeasibleArc,
    /// `lambda_min` of the Hermitian part at the arc midpoint.
    #[serde(skip)]
    pub margin: f64,
    /// Principal `theta_0` in `(-pi/2, pi/2]` when rotated Hermitian.
    #[serde(skip)]
    pub theta0: Option<f64>,
}

/// Phases sorted descending, with their center and the rank of the matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseList {
    pub phases: Vec<f64>,
    pub center: f64,
    pub rank: usize,
    pub approximate: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_estimate: Option<f64>,
}

impl PhaseList {
    pub fn empty() -> Self {
        Self {
            phases: vec![],
            center: 0.0,
            rank: 0,
            approximate: false,
            error_estimate: None,
        }
    }

    pub(crate) fn from_sorted(phases: Vec<f64>) -> Self {
        let mut list = Self {
            rank: phases.len(),
            phases,
            center: 0.0,
            approximate: false,
            error_estimate: None,
        };
        list.recenter();
        list
    }

    fn recenter(&mut self) {
        if let (Some(&hi), Some(&lo)) = (self.phases.first(), self.phases.last()) {
            self.center = 0.5 * (hi + lo);
        }
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// Largest phase; `-inf` for the zero matrix.
    pub fn max(&self) -> f64 {
        self.phases.first().copied().unwrap_or(f64::NEG_INFINITY)
    }

    /// Smallest phase; `+inf` for the zero matrix.
    pub fn min(&self) -> f64 {
        self.phases.last().copied().unwrap_or(f64::INFINITY)
    }

    pub fn spread(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.max() - self.min()
        }
    }

    /// Same phases shifted by `delta`.
    pub fn shifted(&self, delta: f64) -> Self {
        let mut out = self.clone();
        out.phases.iter_mut().for_each(|p| *p += delta);
        out.center += delta;
        out
    }

    /// Shifted by the multiple of `2 pi` that brings the center closest to `target`.
    pub fn aligned_to(&self, target: f64) -> Self {
        if self.is_empty() {
            return self.clone();
        }
        let k = ((target - self.center) / (2.0 * PI)).round();
        self.shifted(2.0 * PI * k)
    }

    /// Moves the center into `(-pi, pi]`. For real input the phase list is
    /// projected onto the branch symmetric about `0` or `pi`.
    pub(crate) fn canonicalize(&mut self, real_input: bool) {
        if self.is_empty() {
            self.center = 0.0;
            return;
        }
        self.recenter();
        let delta = wrap_angle(self.center) - self.center;
        self.phases.iter_mut().for_each(|p| *p += delta);
        self.recenter();
        if real_input {
            let axis = if self.center.abs() <= FRAC_PI_2 { 0.0 } else { PI };
            let r = self.phases.len();
            let old = self.phases.clone();
            for i in 0..r {
                let upper = old[i] - axis;
                let lower = old[r - 1 - i] - axis;
                self.phases[i] = axis + 0.5 * (upper - lower);
            }
            self.center = axis;
        }
    }
}

/// One support sample of the numerical range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NrSample {
    pub theta: f64,
    /// `lambda_max(H(e^{-j theta} C))`
    pub support: f64,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NrBoundary {
    pub samples: Vec<NrSample>,
}

impl NrBoundary {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,support,re,im\n");
        for s in &self.samples {
            out.push_str(&format!(
                "{:.12e},{:.12e},{:.12e},{:.12e}\n",
                s.theta, s.support, s.re, s.im
            ));
        }
        out
    }
}

/// `C = A + jB` with `A = (C + C*)/2`, `B = (C - C*)/(2j)`.
pub fn hermitian_split(m: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    ensure_square(m)?;
    let a = hermitian_part(m);
    let b = (m - m.adjoint()) * (-0.5 * J);
    Ok((a, b))
}

struct ArcSearch<'a> {
    a: &'a CMatrix,
    b: &'a CMatrix,
    floor: f64,
}

impl ArcSearch<'_> {
    fn g(&self, alpha: f64) -> f64 {
        lambda_min(&rotated_hermitian_part(self.a, self.b, alpha))
    }

    fn feasible(&self, alpha: f64) -> bool {
        self.g(alpha) >= self.floor
    }

    /// Boundary between a feasible and an infeasible angle, located to `eps`.
    fn bisect(&self, mut inside: f64, mut outside: f64, eps: f64) -> f64 {
        while (outside - inside).abs() > eps {
            let mid = 0.5 * (inside + outside);
            if self.feasible(mid) {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    }

    fn golden_max(&self, mut lo: f64, mut hi: f64, eps: f64) -> (f64, f64) {
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = hi - ratio * (hi - lo);
        let mut x2 = lo + ratio * (hi - lo);
        let (mut f1, mut f2) = (self.g(x1), self.g(x2));
        while hi - lo > eps {
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + ratio * (hi - lo);
                f2 = self.g(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - ratio * (hi - lo);
                f1 = self.g(x1);
            }
        }
        if f1 >= f2 {
            (x1, f1)
        } else {
            (x2, f2)
        }
    }
}

/// Locates `{alpha : H(e^{-j alpha} C) >= 0}`.
///
/// A 720-point grid over the circle finds a feasible run (or, failing that, a
/// golden-section search refines the best grid point); the run's endpoints are
/// then refined by bisection on the sign of `lambda_min` to `eps_phase`.
pub fn accretivity_arc(m: &CMatrix, tol: &Tolerances) -> Result<FeasibleArc> {
    ensure_square(m)?;
    ensure_finite(m)?;
    if is_zero(m) {
        return Ok(FeasibleArc::FullCircle);
    }
    let (a, b) = hermitian_split(m)?;
    // H_alpha vanishes on ker C ∩ ker C* for every alpha; dropping that
    // subspace leaves the arc unchanged and makes the boundary a sign change.
    let n = m.nrows();
    let stacked = CMatrix::from_fn(n, 2 * n, |i, j| if j < n { m[(i, j)] } else { m[(j - n, i)].conj() });
    let s = svd(&stacked)?;
    let r = s.rank(tol);
    let (a, b) = if r < n {
        let q = s.range_basis(r);
        (q.adjoint() * &a * &q, q.adjoint() * &b * &q)
    } else {
        (a, b)
    };
    let search = ArcSearch {
        a: &a,
        b: &b,
        floor: -tol.eps_psd * m.norm(),
    };
    let step = 2.0 * PI / ARC_GRID as f64;
    let grid_angle = |k: isize| -PI + step * k as f64;
    let values: Vec<f64> = (0..ARC_GRID).map(|k| search.g(grid_angle(k as isize))).collect();
    let feasible: Vec<bool> = values.iter().map(|&v| v >= search.floor).collect();

    if feasible.iter().all(|&f| f) {
        return Ok(FeasibleArc::FullCircle);
    }

    let bounds = match best_run(&values, &feasible, search.floor.abs(), grid_angle) {
        Some((start, end)) => RunBounds {
            first: grid_angle(start),
            last: grid_angle(end),
            before: grid_angle(start - 1),
            after: grid_angle(end + 1),
        },
        None => {
            let k = values
                .iter()
                .enumerate()
                .max_by(|x, y| x.1.total_cmp(y.1))
                .map(|(k, _)| k as isize)
                .unwrap();
            let (alpha, val) = search.golden_max(grid_angle(k - 1), grid_angle(k + 1), tol.eps_phase * 1e-2);
            if val < search.floor {
                return Ok(FeasibleArc::Empty);
            }
            RunBounds {
                first: alpha,
                last: alpha,
                before: grid_angle(k - 1),
                after: grid_angle(k + 1),
            }
        }
    };
    let mut lo = search.bisect(bounds.first, bounds.before, tol.eps_phase);
    let mut hi = search.bisect(bounds.last, bounds.after, tol.eps_phase);
    let inner = 0.5 * (bounds.first + bounds.last);
    if hi - lo > 2.0 * step && search.g(inner) > 1e3 * search.floor.abs() {
        // A clearly positive interior: the floor only blurs the endpoints,
        // so locate the zero crossings themselves.
        let exact = ArcSearch { floor: 0.0, ..search };
        lo = exact.bisect(inner, bounds.before, tol.eps_phase * 1e-2);
        hi = exact.bisect(inner, bounds.after, tol.eps_phase * 1e-2);
    }
    let lo_wrapped = wrap_angle(lo);
    Ok(FeasibleArc::Arc {
        lo: lo_wrapped,
        hi: lo_wrapped + (hi - lo),
    })
}

struct RunBounds {
    first: f64,
    last: f64,
    before: f64,
    after: f64,
}

/// Picks the feasible circular run of grid points with the largest
/// `lambda_min`; ties go to the run centered in `(-pi/2, pi/2]`. Returns
/// unwrapped indices `start <= end`.
fn best_run(values: &[f64], feasible: &[bool], tie: f64, angle: impl Fn(isize) -> f64) -> Option<(isize, isize)> {
    let n = values.len() as isize;
    let zero = feasible.iter().position(|&f| !f)? as isize;
    let at = |k: isize| k.rem_euclid(n) as usize;
    let mut runs: Vec<(isize, isize, f64)> = Vec::new();
    let mut k = zero + 1;
    while k <= zero + n {
        if feasible[at(k)] {
            let start = k;
            let mut best = values[at(k)];
            while k < zero + n && feasible[at(k + 1)] {
                k += 1;
                best = best.max(values[at(k)]);
            }
            runs.push((start, k, best));
        }
        k += 1;
    }
    let centered = |r: &(isize, isize, f64)| {
        let mid = wrap_angle(0.5 * (angle(r.0) + angle(r.1)));
        mid > -FRAC_PI_2 && mid <= FRAC_PI_2
    };
    let mut pick: Option<(isize, isize, f64)> = None;
    for r in runs {
        pick = match pick {
            None => Some(r),
            Some(p) if r.2 > p.2 + tie => Some(r),
            Some(p) if (r.2 - p.2).abs() <= tie && centered(&r) && !centered(&p) => Some(r),
            keep => keep,
        };
    }
    pick.map(|(s, e, _)| {
        let shift = s.div_euclid(n) * n;
        (s - shift, e - shift)
    })
}

/// `theta_0` in `(-pi/2, pi/2]` with `cos(theta_0) A + sin(theta_0) B = 0`, if any.
/// This is the case exactly when `e^{-j theta_0} C / j` is Hermitian and `W(C)`
/// lies on a line through the origin.
fn rotation_axis(a: &CMatrix, b: &CMatrix, scale: f64, tol: &Tolerances) -> Option<f64> {
    let ga = a.norm_squared();
    let gb = b.norm_squared();
    let gab: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum();
    // Principal axis of the 2x2 Gram matrix; the null direction is orthogonal.
    let major = 0.5 * (2.0 * gab).atan2(ga - gb);
    let theta = wrap_half(major + FRAC_PI_2);
    let resid = rotated_hermitian_part(a, b, theta).norm();
    (resid <= tol.eps_psd * scale).then_some(theta)
}

/// Reduces an angle modulo `pi` into `(-pi/2, pi/2]`.
fn wrap_half(theta: f64) -> f64 {
    let t = theta.rem_euclid(PI);
    if t > FRAC_PI_2 {
        t - PI
    } else {
        t
    }
}

/// Checks `ker(H) ⊆ ker(C)` for PSD `H` given by its eigendecomposition.
fn kernel_within(m: &CMatrix, eig: &crate::numerics::HermEig, tol: &Tolerances) -> bool {
    let top = eig.max().max(0.0);
    let cutoff = tol.eps_rank * top;
    let cols: Vec<usize> = (0..eig.values.len()).filter(|&k| eig.values[k] <= cutoff).collect();
    if cols.is_empty() {
        return true;
    }
    let kernel = eig.vectors.select_columns(&cols);
    (m * kernel).norm() <= tol.eps_rank.sqrt() * m.norm()
}

/// Classifies `C` as sectorial, quasi-, or semi-sectorial.
///
/// Quasi-sectoriality is decided at the arc midpoint `alpha*` by
/// `H_{alpha*} >= 0` together with `ker(H_{alpha*}) ⊆ ker(C)`.
pub fn classify(m: &CMatrix, tol: &Tolerances) -> Result<SectorClass> {
    let n = ensure_square(m)?;
    ensure_finite(m)?;
    if is_zero(m) {
        return Ok(SectorClass {
            kind: SectorKind::QuasiSectorial,
            rotated_hermitian: false,
            rank: 0,
            feasible_arc: FeasibleArc::FullCircle,
            margin: 0.0,
            theta0: None,
        });
    }
    let rank = svd(m)?.rank(tol);
    let scale = m.norm();
    let (a, b) = hermitian_split(m)?;
    let theta0 = rotation_axis(&a, &b, scale, tol);
    let mut arc = accretivity_arc(m, tol)?;
    let mut margin = f64::NEG_INFINITY;
    let kind = match arc.midpoint() {
        None => SectorKind::NotSemiSectorial,
        Some(alpha) => {
            let eig = herm_eig_unchecked(&rotated_hermitian_part(&a, &b, alpha), n);
            margin = eig.min();
            if margin > tol.eps_psd * scale {
                SectorKind::Sectorial
            } else if kernel_within(m, &eig, tol) {
                SectorKind::QuasiSectorial
            } else {
                SectorKind::SemiSectorial
            }
        }
    };
    if let (Some(t), SectorKind::SemiSectorial) = (theta0, kind) {
        // A segment with 0 in its relative interior: the arc degenerates to the
        // antipodal pair {theta_0, theta_0 + pi}; report the principal one.
        arc = FeasibleArc::Arc { lo: t, hi: t };
    }
    Ok(SectorClass {
        kind,
        rotated_hermitian: theta0.is_some(),
        rank,
        feasible_arc: arc,
        margin,
        theta0,
    })
}

/// Field angle: `pi - |arc|` for quasi-sectorial input, `pi` for the remaining
/// semi-sectorial matrices, `2 pi` when no half-plane contains `W(C)`.
pub fn field_angle(m: &CMatrix, tol: &Tolerances) -> Result<f64> {
    ensure_square(m)?;
    if is_zero(m) {
        return Err(Error::ZeroMatrix);
    }
    let cls = classify(m, tol)?;
    Ok(match cls.kind {
        SectorKind::NotSemiSectorial => 2.0 * PI,
        SectorKind::SemiSectorial => PI,
        _ => (PI - cls.feasible_arc.length()).clamp(0.0, PI),
    })
}

/// `C = T* diag(0_{n-r}, e^{j phases}) T` with `T` nonsingular.
#[derive(Debug, Clone)]
pub struct SectorialDecomposition {
    pub t: CMatrix,
    /// Phases of the unitary diagonal factor, sorted descending.
    pub phases: Vec<f64>,
    pub rank: usize,
    /// Rotation `alpha*` that made the compression strictly accretive.
    pub rotation: f64,
}

/// Sectorial decomposition of a quasi-sectorial matrix.
///
/// After rotating by the arc midpoint, the compression to the range splits as
/// `A' + jB'` with `A' = L L* > 0`. Diagonalizing `K = L^{-1} B' L^{-*} = Q diag(mu) Q*`
/// gives `1 + j mu = |1 + j mu| e^{j atan(mu)}`, hence phases `alpha* + atan(mu)`.
pub fn sectorial_decomposition(m: &CMatrix, tol: &Tolerances) -> Result<SectorialDecomposition> {
    let n = ensure_square(m)?;
    let cls = classify(m, tol)?;
    if !cls.kind.is_quasi() {
        return Err(Error::NotQuasiSectorial);
    }
    if cls.rank == 0 {
        return Ok(SectorialDecomposition {
            t: CMatrix::identity(n, n),
            phases: vec![],
            rank: 0,
            rotation: 0.0,
        });
    }
    let alpha = cls.feasible_arc.midpoint().expect("nonempty arc");
    let r = cls.rank;
    let s = svd(m)?;
    let ur = s.range_basis(r);
    let rot = (ur.adjoint() * m * &ur) * cis(-alpha);
    let a = hermitian_part(&rot);
    let b = (&rot - rot.adjoint()) * (-0.5 * J);
    let chol = a.cholesky().ok_or(Error::NotQuasiSectorial)?;
    let l = chol.l();
    let x = l.solve_lower_triangular(&b).ok_or(Error::NotQuasiSectorial)?;
    let k = l
        .solve_lower_triangular(&x.adjoint())
        .ok_or(Error::NotQuasiSectorial)?
        .adjoint();
    let eig = herm_eig_unchecked(&hermitian_part(&k), r);
    let phases: Vec<f64> = eig.values.iter().map(|mu| alpha + mu.atan()).collect();
    let stretch = CMatrix::from_fn(r, r, |i, j| {
        if i == j {
            crate::numerics::c((1.0 + eig.values[i].powi(2)).powf(0.25), 0.0)
        } else {
            crate::numerics::c(0.0, 0.0)
        }
    });
    let ts = stretch * eig.vectors.adjoint() * l.adjoint();
    let mut w = CMatrix::zeros(n, n);
    w.columns_mut(0, n - r).copy_from(&s.u.columns(r, n - r));
    w.columns_mut(n - r, r).copy_from(&ur);
    let mut block = CMatrix::identity(n, n);
    block.view_mut((n - r, n - r), (r, r)).copy_from(&ts);
    Ok(SectorialDecomposition {
        t: block * w.adjoint(),
        phases,
        rank: r,
        rotation: alpha,
    })
}

/// Phases of a quasi-sectorial matrix.
pub fn phases_quasi(m: &CMatrix, tol: &Tolerances) -> Result<PhaseList> {
    let dec = sectorial_decomposition(m, tol)?;
    if dec.rank == 0 {
        return Ok(PhaseList::empty());
    }
    let mut list = PhaseList::from_sorted(dec.phases);
    list.canonicalize(is_real(m));
    Ok(list)
}

/// Phases of a rotated Hermitian matrix on the principal branch
/// `theta_0 ∈ (-pi/2, pi/2]`.
pub fn phases_rotated_hermitian(m: &CMatrix, tol: &Tolerances) -> Result<PhaseList> {
    phases_rotated_hermitian_branch(m, tol, false)
}

/// As [`phases_rotated_hermitian`]; `alternate` selects `theta_0 + pi` instead.
pub fn phases_rotated_hermitian_branch(m: &CMatrix, tol: &Tolerances, alternate: bool) -> Result<PhaseList> {
    let n = ensure_square(m)?;
    ensure_finite(m)?;
    if is_zero(m) {
        return Ok(PhaseList::empty());
    }
    let (a, b) = hermitian_split(m)?;
    let mut theta0 = rotation_axis(&a, &b, m.norm(), tol).ok_or(Error::NotRotatedHermitian)?;
    if alternate {
        theta0 = wrap_angle(theta0 + PI);
    }
    // e^{-j theta_0} C / j is Hermitian; its inertia counts the two phase values.
    let k = m * (cis(-theta0) * -J);
    let eig = herm_eig_unchecked(&hermitian_part(&k), n);
    let spread = eig.values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let cutoff = tol.eps_rank * spread;
    let p = eig.values.iter().filter(|&&v| v > cutoff).count();
    let q = eig.values.iter().filter(|&&v| v < -cutoff).count();
    let mut phases = vec![theta0 + FRAC_PI_2; p];
    phases.extend(std::iter::repeat_n(theta0 - FRAC_PI_2, q));
    let mut list = PhaseList::from_sorted(phases);
    let delta = wrap_angle(list.center) - list.center;
    if delta != 0.0 {
        list = list.shifted(delta);
    }
    Ok(list)
}

/// Default perturbation sizes for [`phases_semi_best_effort`].
pub const DEFAULT_EPS_SEQUENCE: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// Best-effort phases of a generic semi-sectorial matrix.
///
/// The compression `C'` of `C` to its range is nonsingular semi-sectorial and
/// `C' + eps e^{j gamma_0} I` is sectorial for every `eps > 0`. Phases are computed
/// along the `eps` sequence and extrapolated to `eps = 0` with the convergence
/// order estimated from the last three iterates (Jordan-type blocks converge like
/// `sqrt(eps)`, diagonal ones linearly). The result is flagged approximate.
pub fn phases_semi_best_effort(m: &CMatrix, eps_sequence: &[f64], tol: &Tolerances) -> Result<PhaseList> {
    let cls = classify(m, tol)?;
    match cls.kind {
        SectorKind::NotSemiSectorial => return Err(Error::NotSemiSectorial),
        k if k.is_quasi() => return phases_quasi(m, tol),
        _ if cls.rotated_hermitian => return phases_rotated_hermitian(m, tol),
        _ => {}
    }
    if eps_sequence.len() < 2 || eps_sequence.windows(2).any(|w| !(w[0] > w[1] && w[1] > 0.0)) {
        return Err(Error::InvalidArgument(
            "eps sequence must be positive and strictly decreasing, length >= 2".into(),
        ));
    }
    let real = is_real(m);
    let mut gamma0 = cls.feasible_arc.midpoint().expect("nonempty arc");
    if real {
        gamma0 = if gamma0.abs() <= FRAC_PI_2 { 0.0 } else { PI };
    }
    let direction = if real {
        crate::numerics::c(gamma0.cos().round(), 0.0)
    } else {
        cis(gamma0)
    };
    let s = svd(m)?;
    let r = cls.rank;
    let ur = s.range_basis(r);
    let compressed = ur.adjoint() * m * &ur;
    let sigma1 = s.sigma[0];
    let mut series: Vec<Vec<f64>> = Vec::with_capacity(eps_sequence.len());
    for &eps in eps_sequence {
        let shifted = &compressed + CMatrix::identity(r, r) * (direction * (eps * sigma1));
        let list = phases_quasi(&shifted, tol)?.aligned_to(gamma0);
        if list.len() != r {
            return Err(Error::InternalClassificationFailure(format!(
                "perturbed compression has {} phases, expected {r}",
                list.len()
            )));
        }
        series.push(list.phases);
    }
    let ratio = eps_sequence[eps_sequence.len() - 2] / eps_sequence[eps_sequence.len() - 1];
    let mut worst = 0.0f64;
    let mut limit: Vec<f64> = (0..r)
        .map(|i| {
            let path: Vec<f64> = series.iter().map(|p| p[i]).collect();
            let (value, err) = extrapolate(&path, ratio);
            worst = worst.max(err);
            value.clamp(gamma0 - FRAC_PI_2, gamma0 + FRAC_PI_2)
        })
        .collect();
    limit.sort_by(|x, y| y.total_cmp(x));
    let mut list = PhaseList::from_sorted(limit);
    list.canonicalize(real);
    list.approximate = true;
    list.error_estimate = Some(worst);
    Ok(list)
}

/// Extrapolates a sequence sampled at geometrically shrinking `eps` to its limit.
fn extrapolate(path: &[f64], ratio: f64) -> (f64, f64) {
    let n = path.len();
    let last = path[n - 1];
    let d2 = path[n - 2] - last;
    if d2.abs() < 1e-14 {
        return (last, d2.abs());
    }
    let growth = if n >= 3 {
        let d1 = path[n - 3] - path[n - 2];
        let rho = d1 / d2;
        if rho.is_finite() && rho > 1.0 + 1e-6 {
            rho
        } else {
            ratio
        }
    } else {
        ratio
    };
    let correction = d2 / (growth - 1.0);
    (last - correction, correction.abs())
}

/// Phases as halves of the angles of the nonzero eigenvalues of
/// `C (C*)^†` after rotating `C` to be quasi-strictly accretive. Independent
/// cross-check of [`phases_quasi`].
pub fn phases_via_congruence_square(m: &CMatrix, tol: &Tolerances) -> Result<PhaseList> {
    let cls = classify(m, tol)?;
    if !cls.kind.is_quasi() {
        return Err(Error::NotQuasiSectorial);
    }
    if cls.rank == 0 {
        return Ok(PhaseList::empty());
    }
    let alpha = cls.feasible_arc.midpoint().expect("nonempty arc");
    let rot = m * cis(-alpha);
    let square = &rot * crate::numerics::pinv(&rot.adjoint(), tol)?;
    let mut eig = crate::numerics::eigenvalues(&square)?;
    eig.sort_by(|x, y| y.norm().total_cmp(&x.norm()));
    let mut phases: Vec<f64> = eig[..cls.rank].iter().map(|z| alpha + 0.5 * z.arg()).collect();
    phases.sort_by(|x, y| y.total_cmp(x));
    let mut list = PhaseList::from_sorted(phases);
    list.canonicalize(is_real(m));
    Ok(list)
}

/// Phases by classification: quasi-sectorial and rotated Hermitian matrices
/// exactly, other semi-sectorial matrices by [`phases_semi_best_effort`].
pub fn phases(m: &CMatrix, tol: &Tolerances) -> Result<PhaseList> {
    let cls = classify(m, tol)?;
    match cls.kind {
        SectorKind::NotSemiSectorial => Err(Error::NotSemiSectorial),
        k if k.is_quasi() => phases_quasi(m, tol),
        _ if cls.rotated_hermitian => phases_rotated_hermitian(m, tol),
        _ => phases_semi_best_effort(m, &DEFAULT_EPS_SEQUENCE, tol),
    }
}

/// Phases that can be computed without perturbation (quasi-sectorial or
/// rotated Hermitian input).
pub fn exact_phases(m: &CMatrix, tol: &Tolerances) -> Result<PhaseList> {
    let cls = classify(m, tol)?;
    if cls.kind.is_quasi() {
        phases_quasi(m, tol)
    } else if cls.rotated_hermitian {
        phases_rotated_hermitian(m, tol)
    } else {
        Err(Error::NotSemiSectorial)
    }
}

/// Samples the support function of `W(C)` at `k` equally spaced angles.
pub fn nr_boundary(m: &CMatrix, k: usize, _tol: &Tolerances) -> Result<NrBoundary> {
    let n = ensure_square(m)?;
    ensure_finite(m)?;
    if k < 8 {
        return Err(Error::InvalidArgument(format!("need at least 8 samples, got {k}")));
    }
    let (a, b) = hermitian_split(m)?;
    let samples = (0..k)
        .map(|i| {
            let theta = 2.0 * PI * i as f64 / k as f64;
            let eig = herm_eig_unchecked(&rotated_hermitian_part(&a, &b, theta), n);
            let x = eig.top_vector();
            let point = (x.adjoint() * m * &x)[(0, 0)];
            NrSample {
                theta,
                support: eig.max(),
                re: point.re,
                im: point.im,
            }
        })
        .collect();
    Ok(NrBoundary { samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{c, diag, identity, real_matrix};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_4;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn rot90() -> CMatrix {
        real_matrix(2, &[0.0, -1.0, 1.0, 0.0])
    }

    #[test]
    fn split_examples() {
        let (a, b) = hermitian_split(&rot90()).unwrap();
        assert!(a.norm() == 0.0);
        let expected = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(0.0, 0.0)]);
        assert!((b - expected).norm() < 1e-15);

        let h = CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(1.0, -1.0), c(1.0, 1.0), c(-1.0, 0.0)]);
        let (a, b) = hermitian_split(&h).unwrap();
        assert!((a - &h).norm() < 1e-15 && b.norm() < 1e-15);
        let (a, b) = hermitian_split(&(&h * J)).unwrap();
        assert!(a.norm() < 1e-15 && (b - &h).norm() < 1e-15);
    }

    #[test]
    fn arc_examples() {
        let FeasibleArc::Arc { lo, hi } = accretivity_arc(&identity(3), &tol()).unwrap() else {
            panic!("identity arc")
        };
        assert_abs_diff_eq!(lo, -FRAC_PI_2, epsilon = 1e-8);
        assert_abs_diff_eq!(hi, FRAC_PI_2, epsilon = 1e-8);
        assert_eq!(
            accretivity_arc(&CMatrix::zeros(2, 2), &tol()).unwrap(),
            FeasibleArc::FullCircle
        );
        let arc = classify(&rot90(), &tol()).unwrap().feasible_arc;
        assert_eq!(arc, FeasibleArc::Arc { lo: 0.0, hi: 0.0 });
    }

    #[test]
    fn rot90_arc_matches_dense_grid() {
        // Oracle: lambda_min(sin(alpha) B) >= 0 only where sin(alpha) = 0.
        let (a, b) = hermitian_split(&rot90()).unwrap();
        let feasible: Vec<f64> = (0..20000)
            .map(|k| -PI + 2.0 * PI * k as f64 / 20000.0)
            .filter(|&al| lambda_min(&rotated_hermitian_part(&a, &b, al)) >= -1e-12)
            .collect();
        assert!(feasible.iter().all(|al| al.sin().abs() < 1e-9));
    }

    #[test]
    fn classify_examples() {
        let a = diag(&[c(0.0, 0.0), c(1.0, 0.0)]);
        let cls = classify(&a, &tol()).unwrap();
        assert_eq!(cls.kind, SectorKind::QuasiSectorial);
        assert_eq!(cls.rank, 1);

        let cls = classify(&rot90(), &tol()).unwrap();
        assert_eq!(cls.kind, SectorKind::SemiSectorial);
        assert!(cls.rotated_hermitian);
        assert_eq!(cls.rank, 2);

        let cls = classify(&real_matrix(2, &[1.0, 1.0, -1.0, 0.0]), &tol()).unwrap();
        assert_eq!(cls.kind, SectorKind::SemiSectorial);
        assert!(!cls.rotated_hermitian);

        assert_eq!(classify(&identity(2), &tol()).unwrap().kind, SectorKind::Sectorial);
        let disk = real_matrix(2, &[0.0, 2.0, 0.0, 0.0]);
        assert_eq!(classify(&disk, &tol()).unwrap().kind, SectorKind::NotSemiSectorial);
        assert!(matches!(
            classify(&CMatrix::zeros(2, 3), &tol()),
            Err(Error::NonSquare { .. })
        ));
    }

    #[test]
    fn field_angle_examples() {
        let d = diag(&[c(1.0, 0.0), cis(PI / 3.0)]);
        assert_abs_diff_eq!(field_angle(&d, &tol()).unwrap(), PI / 3.0, epsilon = 1e-7);
        let disk = real_matrix(2, &[0.0, 2.0, 0.0, 0.0]);
        assert_eq!(field_angle(&disk, &tol()).unwrap(), 2.0 * PI);
        assert_eq!(field_angle(&rot90(), &tol()).unwrap(), PI);
        assert_eq!(
            field_angle(&CMatrix::zeros(2, 2), &tol()).unwrap_err(),
            Error::ZeroMatrix
        );
    }

    #[test]
    fn disk_oracle_by_random_sampling() {
        // x*Cx over random unit x for C = [[0,2],[0,0]] fills the unit disk,
        // whose conic hull is the whole plane.
        let disk = real_matrix(2, &[0.0, 2.0, 0.0, 0.0]);
        let mut quadrants = [false; 4];
        for k in 0..400 {
            let t = k as f64 * 0.123;
            let x = CMatrix::from_column_slice(2, 1, &[c(t.cos(), 0.0), cis(3.1 * t) * t.sin()]);
            let z = (x.adjoint() * &disk * &x)[(0, 0)] / x.norm_squared();
            assert!(z.norm() <= 1.0 + 1e-12);
            let q = (z.re < 0.0) as usize * 2 + (z.im < 0.0) as usize;
            quadrants[q] = true;
        }
        assert!(quadrants.iter().all(|&q| q));
    }

    #[test]
    fn phases_quasi_examples() {
        let p = phases_quasi(&diag(&[c(0.0, 0.0), c(1.0, 0.0)]), &tol()).unwrap();
        assert_eq!(p.rank, 1);
        assert_abs_diff_eq!(p.phases[0], 0.0, epsilon = 1e-12);

        let p = phases_quasi(&(identity(2) * cis(FRAC_PI_4)), &tol()).unwrap();
        assert_abs_diff_eq!(p.phases[0], FRAC_PI_4, epsilon = 1e-12);
        assert_abs_diff_eq!(p.phases[1], FRAC_PI_4, epsilon = 1e-12);
        assert_abs_diff_eq!(p.center, FRAC_PI_4, epsilon = 1e-12);

        assert!(matches!(phases_quasi(&rot90(), &tol()), Err(Error::NotQuasiSectorial)));
    }

    #[test]
    fn phases_quasi_recovers_planted_congruence() {
        let t = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.3), c(-0.4, 0.2), c(0.5, -0.1), c(0.9, 0.6)]);
        let d = diag(&[cis(PI / 5.0), cis(-PI / 7.0)]);
        let m = t.adjoint() * d * &t;
        let p = phases_quasi(&m, &tol()).unwrap();
        assert_abs_diff_eq!(p.phases[0], PI / 5.0, epsilon = 1e-10);
        assert_abs_diff_eq!(p.phases[1], -PI / 7.0, epsilon = 1e-10);
        let dec = sectorial_decomposition(&m, &tol()).unwrap();
        let dd = diag(&dec.phases.iter().map(|&p| cis(p)).collect::<Vec<_>>());
        assert!((dec.t.adjoint() * dd * &dec.t - &m).norm() < 1e-10);
    }

    #[test]
    fn decomposition_of_singular_quasi_matrix() {
        let m = diag(&[c(0.0, 0.0), cis(0.3), c(2.0, 0.0)]);
        let dec = sectorial_decomposition(&m, &tol()).unwrap();
        assert_eq!(dec.rank, 2);
        let mut full = vec![c(0.0, 0.0)];
        full.extend(dec.phases.iter().map(|&p| cis(p)));
        assert!((dec.t.adjoint() * diag(&full) * &dec.t - &m).norm() < 1e-10);
    }

    #[test]
    fn rotated_hermitian_examples() {
        let p = phases_rotated_hermitian(&diag(&[c(0.0, 1.0), c(0.0, -1.0)]), &tol()).unwrap();
        assert_eq!(p.phases, vec![FRAC_PI_2, -FRAC_PI_2]);
        let p = phases_rotated_hermitian(&rot90(), &tol()).unwrap();
        assert_eq!(p.phases, vec![FRAC_PI_2, -FRAC_PI_2]);
        assert_eq!(p.center, 0.0);
        let p = phases_rotated_hermitian(&diag(&[c(0.0, 1.0), c(0.0, 1.0), c(0.0, 0.0)]), &tol()).unwrap();
        assert_eq!(p.phases, vec![FRAC_PI_2, FRAC_PI_2]);
        assert_eq!(p.rank, 2);
        assert!(matches!(
            phases_rotated_hermitian(&real_matrix(2, &[1.0, 1.0, -1.0, 0.0]), &tol()),
            Err(Error::NotRotatedHermitian)
        ));
        let alt = phases_rotated_hermitian_branch(&rot90(), &tol(), true).unwrap();
        assert_abs_diff_eq!(alt.center, PI, epsilon = 1e-15);
    }

    #[test]
    fn semi_best_effort_examples() {
        let jordan = real_matrix(2, &[1.0, 2.0, 0.0, 1.0]);
        let p = phases_semi_best_effort(&jordan, &DEFAULT_EPS_SEQUENCE, &tol()).unwrap();
        assert!(p.approximate);
        assert_abs_diff_eq!(p.phases[0], FRAC_PI_2, epsilon = 1e-3);
        assert_abs_diff_eq!(p.phases[1], -FRAC_PI_2, epsilon = 1e-3);

        let g = 0.4;
        let rotated = &jordan * cis(g);
        let p = phases_semi_best_effort(&rotated, &DEFAULT_EPS_SEQUENCE, &tol()).unwrap();
        assert_abs_diff_eq!(p.phases[0], g + FRAC_PI_2, epsilon = 1e-3);
        assert_abs_diff_eq!(p.phases[1], g - FRAC_PI_2, epsilon = 1e-3);

        let normal = diag(&[c(0.0, 1.0), c(0.0, -1.0), c(1.0, 0.0)]);
        let p = phases_semi_best_effort(&normal, &DEFAULT_EPS_SEQUENCE, &tol()).unwrap();
        assert_abs_diff_eq!(p.phases[0], FRAC_PI_2, epsilon = 1e-3);
        assert_abs_diff_eq!(p.phases[1], 0.0, epsilon = 1e-3);
        assert_abs_diff_eq!(p.phases[2], -FRAC_PI_2, epsilon = 1e-3);

        let disk = real_matrix(2, &[0.0, 2.0, 0.0, 0.0]);
        assert!(matches!(
            phases_semi_best_effort(&disk, &DEFAULT_EPS_SEQUENCE, &tol()),
            Err(Error::NotSemiSectorial)
        ));
    }

    #[test]
    fn congruence_square_examples() {
        let p = phases_via_congruence_square(&identity(3), &tol()).unwrap();
        assert!(p.phases.iter().all(|x| x.abs() < 1e-12));
        let d = diag(&[cis(PI / 3.0), cis(-PI / 3.0)]);
        let p = phases_via_congruence_square(&d, &tol()).unwrap();
        assert_abs_diff_eq!(p.phases[0], PI / 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(p.phases[1], -PI / 3.0, epsilon = 1e-10);
    }

    #[test]
    fn nr_boundary_examples() {
        let b = nr_boundary(&identity(2), 16, &tol()).unwrap();
        assert!(b
            .samples
            .iter()
            .all(|s| (s.re - 1.0).abs() < 1e-12 && s.im.abs() < 1e-12));

        // Normal matrix: W(diag(1, j)) is the segment [1, j].
        let b = nr_boundary(&diag(&[c(1.0, 0.0), c(0.0, 1.0)]), 64, &tol()).unwrap();
        for s in &b.samples {
            assert!((s.re + s.im - 1.0).abs() < 1e-9 && s.re > -1e-12 && s.im > -1e-12);
        }

        let b = nr_boundary(&real_matrix(2, &[0.0, 2.0, 0.0, 0.0]), 32, &tol()).unwrap();
        for s in &b.samples {
            assert_abs_diff_eq!(s.re.hypot(s.im), 1.0, epsilon = 1e-9);
        }
        // Every sample lies inside every supporting half-plane.
        for s in &b.samples {
            for h in &b.samples {
                let proj = s.re * h.theta.cos() + s.im * h.theta.sin();
                assert!(proj <= h.support + 1e-9);
            }
        }
        assert!(nr_boundary(&identity(2), 4, &tol()).is_err());
        assert!(b.to_csv().starts_with("theta,support,re,im\n"));
    }

    #[test]
    fn phase_bounds_match_arc_endpoints() {
        let d = diag(&[cis(0.9), c(2.0, 0.0), cis(-0.2)]);
        let t = CMatrix::from_fn(3, 3, |i, j| {
            c(
                if i == j { 1.5 } else { 0.2 * (i as f64 - j as f64) },
                0.1 * (i + j) as f64,
            )
        });
        let m = t.adjoint() * d * &t;
        let cls = classify(&m, &tol()).unwrap();
        let ph = phases_quasi(&m, &tol()).unwrap();
        let FeasibleArc::Arc { lo, hi } = cls.feasible_arc else {
            panic!()
        };
        assert_abs_diff_eq!(ph.max(), lo + FRAC_PI_2, epsilon = 1e-7);
        assert_abs_diff_eq!(ph.min(), hi - FRAC_PI_2, epsilon = 1e-7);
    }
}
