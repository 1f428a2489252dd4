//! Essential phase of a real square matrix: the infimum of `phī(D^{-1} M D)`
//! over positive diagonal `D`, computed by bisection on a convex feasibility
//! problem in the diagonal of `D`.

use std::f64::consts::FRAC_PI_2;
use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{
    cis, eigenvalues, ensure_finite, ensure_square, from_real, herm_eig_unchecked, real_lambda_min, real_svd, CMatrix,
    Tolerances,
};
use crate::sectorial::{classify, phases_quasi};

pub type RMatrix = DMatrix<f64>;

/// Real part of `m`, rejecting matrices with nonzero imaginary entries.
pub fn as_real(m: &CMatrix) -> Result<RMatrix> {
    ensure_square(m)?;
    ensure_finite(m)?;
    let scale = m.norm().max(1.0);
    if m.iter().any(|z| z.im.abs() > 1e-14 * scale) {
        return Err(Error::InvalidArgument("expected a real matrix".into()));
    }
    Ok(m.map(|z| z.re))
}

fn ensure_real_square(m: &RMatrix) -> Result<usize> {
    if !m.is_square() {
        return Err(Error::NonSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(m.nrows())
}

/// `M = sI - A` with `A >= 0` entrywise and `s = max_i M_ii`.
#[derive(Debug, Clone)]
pub struct MMatrixForm {
    pub s: f64,
    pub a: RMatrix,
    pub irreducible: bool,
}

/// Whether the off-diagonal pattern of `a` is a strongly connected digraph.
pub fn is_irreducible(a: &RMatrix) -> bool {
    let n = a.nrows();
    if n <= 1 {
        return true;
    }
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let w = if forward { a[(i, j)] } else { a[(j, i)] };
                if i != j && w != 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

/// Splits an M-matrix as `sI - A`.
pub fn m_matrix_form(m: &RMatrix, tol: &Tolerances) -> Result<MMatrixForm> {
    let n = ensure_real_square(m)?;
    if n == 0 {
        return Err(Error::NotMMatrix("empty matrix".into()));
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && m[(i, j)] > 0.0 {
                return Err(Error::NotMMatrix(format!("off-diagonal entry ({i}, {j}) is positive")));
            }
        }
    }
    let s = (0..n).map(|i| m[(i, i)]).fold(f64::NEG_INFINITY, f64::max);
    let a = RMatrix::from_fn(n, n, |i, j| if i == j { s - m[(i, i)] } else { -m[(i, j)] });
    let rho = eigenvalues(&from_real(&a))?
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if s < rho - tol.eps_psd * s.abs().max(1.0) {
        return Err(Error::NotMMatrix(format!(
            "spectral radius {rho} of the nonnegative part exceeds s = {s}"
        )));
    }
    Ok(MMatrixForm {
        s,
        irreducible: is_irreducible(&a),
        a,
    })
}

/// Left and right Perron vectors of the nonnegative part and the induced scaling.
#[derive(Debug, Clone, Serialize)]
pub struct PerronScaling {
    pub s: f64,
    /// Spectral radius of `A`.
    pub rho: f64,
    /// Real eigenvalue `s - rho` of `M`.
    pub m_eigenvalue: f64,
    /// Right Perron vector, `||y||_1 = 1`.
    pub right: Vec<f64>,
    /// Left Perron vector, `||x||_1 = 1`.
    pub left: Vec<f64>,
    /// `d_i ∝ x_i / y_i` with `sum d = n`, for `phī(DM)`.
    pub d: Vec<f64>,
    /// Similarity scaling `d^{-1/2}`, for `phī(D^{-1} M D)`.
    pub d_sim: Vec<f64>,
}

fn power_iteration(b: &RMatrix) -> Option<(f64, DVector<f64>)> {
    let n = b.nrows();
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..200_000 {
        let y = b * &x;
        let norm = y.lp_norm(1);
        if norm == 0.0 || !norm.is_finite() {
            return None;
        }
        let y = y / norm;
        let diff = (&y - &x).lp_norm(1);
        x = y;
        if diff < 1e-15 {
            let lambda = (b * &x).dot(&x) / x.dot(&x);
            return Some((lambda, x));
        }
    }
    None
}

/// Perron scaling of an irreducible M-matrix.
pub fn perron_scaling(m: &RMatrix, tol: &Tolerances) -> Result<PerronScaling> {
    let form = m_matrix_form(m, tol)?;
    if !form.irreducible {
        return Err(Error::Reducible);
    }
    let n = m.nrows();
    // A + tau I is primitive for irreducible A and tau > 0.
    let tau = form.a.row_iter().map(|r| r.sum()).fold(0.0, f64::max).max(1.0) * 0.5;
    let shifted = &form.a + RMatrix::identity(n, n) * tau;
    let (lam, y) = power_iteration(&shifted).ok_or(Error::Reducible)?;
    let (_, x) = power_iteration(&shifted.transpose()).ok_or(Error::Reducible)?;
    if y.iter().chain(x.iter()).any(|v| *v <= 0.0) {
        return Err(Error::Reducible);
    }
    let rho = lam - tau;
    let mut d: Vec<f64> = (0..n).map(|i| x[i] / y[i]).collect();
    normalize_sum(&mut d);
    let d_sim = d.iter().map(|v| 1.0 / v.sqrt()).collect();
    Ok(PerronScaling {
        s: form.s,
        rho,
        m_eigenvalue: form.s - rho,
        right: y.iter().copied().collect(),
        left: x.iter().copied().collect(),
        d,
        d_sim,
    })
}

fn normalize_sum(d: &mut [f64]) {
    let n = d.len() as f64;
    let total: f64 = d.iter().sum();
    d.iter_mut().for_each(|v| *v *= n / total);
}

fn scale_rows(m: &RMatrix, d: &[f64]) -> RMatrix {
    RMatrix::from_fn(m.nrows(), m.ncols(), |i, j| d[i] * m[(i, j)])
}

/// `phī(DM)` for `D = diag(d)`.
pub fn scaled_upper_phase(m: &RMatrix, d: &[f64], tol: &Tolerances) -> Result<f64> {
    let n = ensure_real_square(m)?;
    if d.len() != n {
        return Err(Error::LengthMismatch(d.len(), n));
    }
    if d.iter().any(|v| v.is_nan() || *v <= 0.0) {
        return Err(Error::InvalidArgument("scaling entries must be positive".into()));
    }
    let dm = from_real(&scale_rows(m, d));
    if !classify(&dm, tol)?.kind.is_quasi() {
        return Err(Error::ScaledNotQuasiSectorial);
    }
    let p = phases_quasi(&dm, tol)?;
    Ok(if p.is_empty() { 0.0 } else { p.max() })
}

/// Largest `|angle(lambda)|` over the eigenvalues of `M` that are not
/// numerically zero.
pub fn eigen_angle_lower_bound(m: &RMatrix, tol: &Tolerances) -> Result<f64> {
    ensure_real_square(m)?;
    let cm = from_real(m);
    let cutoff = tol.eps_rank.sqrt() * cm.norm();
    Ok(eigenvalues(&cm)?
        .iter()
        .filter(|z| z.norm() > cutoff)
        .map(|z| z.arg().abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone)]
pub struct LmiOptions {
    pub max_iter: usize,
    pub restarts: usize,
    pub seed: u64,
    pub warm_start: Option<Vec<f64>>,
}

impl Default for LmiOptions {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            restarts: 5,
            seed: 0,
            warm_start: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerStatus {
    Feasible,
    /// Budget exhausted without a certificate; treated as infeasible.
    MaxIterExceeded,
    /// No positive scaling satisfies the kernel constraint of a singular `M`.
    Infeasible,
}

#[derive(Debug, Clone, Serialize)]
pub struct LmiOutcome {
    pub feasible: bool,
    pub d: Vec<f64>,
    pub best_lambda_min: f64,
    pub iterations: usize,
    pub status: InnerStatus,
}

/// The scaled pencil `e^{j(pi/2 - beta)} DM + e^{-j(pi/2 - beta)} M^T D`, a
/// positive multiple of `(1 + j cot beta) DM + (1 - j cot beta) M^T D`.
struct Pencil<'a> {
    m: &'a RMatrix,
    rot: num_complex::Complex64,
    /// Orthonormal basis of `ker(M)^⊥` when `M` is singular.
    range: Option<CMatrix>,
}

impl Pencil<'_> {
    fn matrix(&self, d: &[f64]) -> CMatrix {
        let (m, rot) = (self.m, self.rot);
        let n = m.nrows();
        let g = CMatrix::from_fn(n, n, |i, j| rot * (d[i] * m[(i, j)]) + rot.conj() * (m[(j, i)] * d[j]));
        match &self.range {
            Some(q) => q.adjoint() * g * q,
            None => g,
        }
    }

    /// `(lambda_min, supergradient, ||F||)` at `d`.
    fn evaluate(&self, d: &[f64]) -> (f64, Vec<f64>, f64) {
        let g = self.matrix(d);
        let k = g.nrows();
        let eig = herm_eig_unchecked(&g, k);
        let mut v = eig.bottom_vector();
        if let Some(q) = &self.range {
            v = q * v;
        }
        let n = d.len();
        let grad = (0..n)
            .map(|i| {
                let mv: num_complex::Complex64 = (0..n).map(|j| v[(j, 0)] * self.m[(i, j)]).sum();
                2.0 * (self.rot * v[(i, 0)].conj() * mv).re
            })
            .collect();
        (eig.min(), grad, g.norm())
    }
}

/// Euclidean projection onto `{d >= 0, sum d = total}`.
fn project_simplex(v: &[f64], total: f64) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - total) / (k + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Feasible scalings of a singular `M` must map `ker(M)` into `ker(M^T)`.
struct KernelConstraint {
    /// Orthonormal basis (columns) of the admissible `d` subspace.
    basis: RMatrix,
    range: CMatrix,
}

fn kernel_constraint(m: &RMatrix, tol: &Tolerances) -> Option<KernelConstraint> {
    let n = m.nrows();
    let svd = real_svd(m).ok()?;
    let top = svd.sigma[0];
    if top == 0.0 {
        return None;
    }
    let v = svd.v;
    let kernel: Vec<usize> = (0..n).filter(|&k| svd.sigma[k] <= tol.eps_rank * top).collect();
    if kernel.is_empty() {
        return None;
    }
    let range_cols: Vec<usize> = (0..n).filter(|k| !kernel.contains(k)).collect();
    let range = from_real(&v.select_columns(&range_cols));
    let mut rows = RMatrix::zeros(n * kernel.len(), n);
    for (b, &k) in kernel.iter().enumerate() {
        let u = v.column(k);
        for i in 0..n {
            for j in 0..n {
                rows[(b * n + i, j)] = m[(j, i)] * u[j];
            }
        }
    }
    let e = real_svd(&rows).ok()?;
    let scale = e.sigma[0].max(f64::MIN_POSITIVE);
    let mut basis_cols = Vec::new();
    for k in 0..n {
        if e.sigma[k] <= tol.eps_rank.sqrt() * scale {
            basis_cols.push(e.v.column(k).into_owned());
        }
    }
    let basis = if basis_cols.is_empty() {
        RMatrix::zeros(n, 0)
    } else {
        RMatrix::from_columns(&basis_cols)
    };
    Some(KernelConstraint { basis, range })
}

fn project_constrained(v: &[f64], basis: &RMatrix, total: f64) -> Vec<f64> {
    let mut d = v.to_vec();
    for _ in 0..50 {
        let x = DVector::from_column_slice(&d);
        let p = basis * (basis.transpose() * x);
        d = project_simplex(p.as_slice(), total);
    }
    d
}

/// Decides whether some positive diagonal `D` makes
/// `(1 + j cot beta) DM + (1 - j cot beta) M^T D` positive semidefinite,
/// i.e. `phī(DM) <= beta` for real `M`.
///
/// `lambda_min` is concave in `d`; it is maximized over `{d >= 0, sum d = n}`
/// by projected supergradient ascent with Polyak steps toward `0`, restarted
/// from the warm start, `d = 1`, and Dirichlet draws.
pub fn lmi_feasible(m: &RMatrix, beta: f64, opts: &LmiOptions, tol: &Tolerances) -> Result<LmiOutcome> {
    let n = ensure_real_square(m)?;
    if !(beta > 0.0 && beta <= FRAC_PI_2) {
        return Err(Error::InvalidArgument(format!("beta = {beta} outside (0, pi/2]")));
    }
    let total = n as f64;
    let constraint = kernel_constraint(m, tol);
    let pencil = Pencil {
        m,
        rot: cis(FRAC_PI_2 - beta),
        range: constraint.as_ref().map(|k| k.range.clone()),
    };
    let basis = constraint.as_ref().map(|k| k.basis.clone());
    let project = |v: &[f64]| match &basis {
        Some(b) => project_constrained(v, b, total),
        None => project_simplex(v, total),
    };

    if let Some(b) = &basis {
        if b.ncols() == 0 {
            return Ok(infeasible(n, f64::NEG_INFINITY, 0));
        }
        if b.ncols() == 1 {
            let col = b.column(0);
            let sign = if col.sum() < 0.0 { -1.0 } else { 1.0 };
            let mut d: Vec<f64> = col.iter().map(|x| x * sign).collect();
            if d.iter().any(|&x| x <= 1e-12 * col.amax()) {
                return Ok(infeasible(n, f64::NEG_INFINITY, 0));
            }
            normalize_sum(&mut d);
            let (f, _, norm) = pencil.evaluate(&d);
            let ok = f >= -tol.eps_psd * norm;
            return Ok(LmiOutcome {
                feasible: ok,
                d,
                best_lambda_min: f,
                iterations: 1,
                status: if ok {
                    InnerStatus::Feasible
                } else {
                    InnerStatus::Infeasible
                },
            });
        }
    }

    let mut starts: Vec<Vec<f64>> = Vec::new();
    if let Some(w) = &opts.warm_start {
        if w.len() == n {
            starts.push(project(w));
        }
    }
    starts.push(project(&vec![1.0; n]));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.restarts {
        let draw: Vec<f64> = (0..n).map(|_| Exp1.sample(&mut rng)).collect();
        let sum: f64 = draw.iter().sum();
        starts.push(project(&draw.iter().map(|x| x * total / sum).collect::<Vec<_>>()));
    }

    // For any Z >= 0 with tr Z = 1, max_d lambda_min(F(d)) <= n max_i tr(F_i Z),
    // and the supergradient entries are tr(F_i v v*). Averaging them gives a
    // dual bound; below the smallest possible floor it proves infeasibility.
    let max_floor = tol.eps_psd
        * total
        * (0..n)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                pencil.matrix(&e).norm()
            })
            .fold(0.0, f64::max);
    let decided = AtomicUsize::new(usize::MAX);
    let runs: Vec<StartRun> = starts
        .into_par_iter()
        .enumerate()
        .map(|(idx, start)| {
            let run = ascend(&pencil, start, &project, opts.max_iter, max_floor, tol, || {
                decided.load(Ordering::Relaxed) < idx
            });
            if run.verdict.is_some() {
                decided.fetch_min(idx, Ordering::Relaxed);
            }
            run
        })
        .collect();
    // Starts before the first decisive one always run to completion, so the
    // outcome does not depend on scheduling.
    let mut best_f = f64::NEG_INFINITY;
    let mut best_d = vec![1.0; n];
    let mut iterations = 0;
    for run in runs {
        iterations += run.iterations;
        if run.best_f > best_f {
            best_f = run.best_f;
            best_d = run.best_d.clone();
        }
        match run.verdict {
            Some(InnerStatus::Feasible) => {
                return Ok(LmiOutcome {
                    feasible: true,
                    best_lambda_min: pencil.evaluate(&run.best_d).0,
                    d: run.best_d,
                    iterations,
                    status: InnerStatus::Feasible,
                });
            }
            Some(status) => {
                return Ok(LmiOutcome {
                    feasible: false,
                    d: best_d,
                    best_lambda_min: best_f,
                    iterations,
                    status,
                });
            }
            None => {}
        }
    }
    Ok(LmiOutcome {
        feasible: false,
        d: best_d,
        best_lambda_min: best_f,
        iterations,
        status: InnerStatus::MaxIterExceeded,
    })
}

struct StartRun {
    /// `Feasible` with `best_d` the certificate, `Infeasible` from the dual
    /// bound, or `None` when the budget ran out.
    verdict: Option<InnerStatus>,
    best_f: f64,
    best_d: Vec<f64>,
    iterations: usize,
}

fn ascend(
    pencil: &Pencil,
    start: Vec<f64>,
    project: &(impl Fn(&[f64]) -> Vec<f64> + Sync),
    max_iter: usize,
    max_floor: f64,
    tol: &Tolerances,
    cancelled: impl Fn() -> bool,
) -> StartRun {
    let n = start.len();
    let total = n as f64;
    let mut run = StartRun {
        verdict: None,
        best_f: f64::NEG_INFINITY,
        best_d: start.clone(),
        iterations: 0,
    };
    let mut d = start;
    let mut avg = vec![0.0; n];
    let mut level = Level::new();
    for it in 0..max_iter {
        if it % 64 == 63 && cancelled() {
            break;
        }
        run.iterations += 1;
        let (f, grad, norm) = pencil.evaluate(&d);
        level.record(f, norm);
        // Weights proportional to the iteration count favour later iterates.
        let w = 2.0 / (it + 2) as f64;
        for (a, g) in avg.iter_mut().zip(&grad) {
            *a += (g - *a) * w;
        }
        if f > run.best_f {
            run.best_f = f;
            run.best_d = d.clone();
        }
        let bound = total * avg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if bound < -max_floor {
            run.verdict = Some(InnerStatus::Infeasible);
            return run;
        }
        if f >= -tol.eps_psd * norm {
            if let Some(p) = strictly_positive(pencil, &d, tol) {
                run.best_d = p;
                run.verdict = Some(InnerStatus::Feasible);
                return run;
            }
        }
        let mean = grad.iter().sum::<f64>() / n as f64;
        let dir: Vec<f64> = grad.iter().map(|g| g - mean).collect();
        let gn: f64 = dir.iter().map(|g| g * g).sum();
        if gn <= f64::MIN_POSITIVE {
            break;
        }
        let target = level.target().max(tol.eps_psd * norm);
        let step = (target - f) / gn;
        let next: Vec<f64> = d.iter().zip(&dir).map(|(x, g)| x + step * g).collect();
        d = project(&next);
    }
    run
}

/// Polyak level: aim `delta` above the best value seen, halving `delta`
/// whenever progress stalls.
struct Level {
    best: f64,
    delta: f64,
    stall: usize,
}

impl Level {
    const PATIENCE: usize = 20;

    fn new() -> Self {
        Self {
            best: f64::NEG_INFINITY,
            delta: f64::NAN,
            stall: 0,
        }
    }

    fn record(&mut self, f: f64, norm: f64) {
        if self.delta.is_nan() {
            self.delta = 0.05 * norm;
        }
        if f > self.best + 0.5 * self.delta {
            self.stall = 0;
        } else {
            self.stall += 1;
            if self.stall >= Self::PATIENCE {
                self.delta *= 0.5;
                self.stall = 0;
            }
        }
        self.best = self.best.max(f);
    }

    fn target(&self) -> f64 {
        self.best + self.delta
    }
}

fn infeasible(n: usize, f: f64, iterations: usize) -> LmiOutcome {
    LmiOutcome {
        feasible: false,
        d: vec![1.0; n],
        best_lambda_min: f,
        iterations,
        status: InnerStatus::Infeasible,
    }
}

/// Blends `d` toward the uniform vector so every entry is positive, growing the
/// blend while the certificate survives. Under a kernel constraint the blend
/// would leave the admissible subspace, so `d` must already be positive.
fn strictly_positive(pencil: &Pencil, d: &[f64], tol: &Tolerances) -> Option<Vec<f64>> {
    if pencil.range.is_some() {
        return d.iter().all(|&x| x >= 1e-8).then(|| d.to_vec());
    }
    let mut keep = None;
    let mut delta = 1e-8;
    while delta < 1.0 {
        let mut cand: Vec<f64> = d.iter().map(|x| (1.0 - delta) * x + delta).collect();
        normalize_sum(&mut cand);
        let (f, _, norm) = pencil.evaluate(&cand);
        if f < -tol.eps_psd * norm {
            break;
        }
        keep = Some(cand);
        delta *= 10.0;
    }
    keep
}

/// `phi_ess(M) = 0` iff some positive diagonal `D` makes `DM` symmetric
/// positive semidefinite. The symmetry condition `d_i M_ij = d_j M_ji` fixes
/// `d` up to one factor per connected component of the pattern.
pub fn positivity_feasible(m: &RMatrix, tol: &Tolerances) -> Result<(bool, Vec<f64>)> {
    let n = ensure_real_square(m)?;
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let small = |x: f64| x.abs() <= 1e-14 * scale;
    let mut d = vec![f64::NAN; n];
    for root in 0..n {
        if !d[root].is_nan() {
            continue;
        }
        d[root] = 1.0;
        let mut stack = vec![root];
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if i == j || (small(m[(i, j)]) && small(m[(j, i)])) {
                    continue;
                }
                let (mij, mji) = (m[(i, j)], m[(j, i)]);
                if small(mij) || small(mji) || mij.signum() != mji.signum() {
                    return Ok((false, vec![1.0; n]));
                }
                let dj = d[i] * mij / mji;
                if d[j].is_nan() {
                    d[j] = dj;
                    stack.push(j);
                } else if (d[j] - dj).abs() > 1e-9 * d[j].abs().max(dj.abs()) {
                    return Ok((false, vec![1.0; n]));
                }
            }
        }
    }
    normalize_sum(&mut d);
    let dm = scale_rows(m, &d);
    let sym = (&dm + dm.transpose()) * 0.5;
    let lmin = real_lambda_min(&sym);
    Ok((lmin >= -tol.eps_psd * sym.norm(), d))
}

/// Outcome of the essential phase bisection.
#[derive(Debug, Clone, Serialize)]
pub struct BisectionResult {
    pub alpha_star: f64,
    pub iterations: usize,
    /// `[lower, upper]` before the first and after every bisection step.
    pub bracket: Vec<[f64; 2]>,
    /// `d` with `phī(DM) <= alpha_star`.
    pub d_star: Vec<f64>,
    /// The same certificate as a similarity scaling `d^{-1/2}`.
    pub d_sim: Vec<f64>,
    pub status: String,
    pub inner_status: Vec<InnerStatus>,
}

/// Essential phase by bisection on [`lmi_feasible`].
///
/// The bracket starts at `[0, phī(DM)]` with the Perron scaling for
/// irreducible M-matrices; other matrices need caller bounds.
pub fn essential_phase(
    m: &RMatrix,
    e: f64,
    bounds: Option<(f64, f64)>,
    opts: &LmiOptions,
    tol: &Tolerances,
) -> Result<BisectionResult> {
    ensure_real_square(m)?;
    if !(e > 0.0 && e.is_finite()) {
        return Err(Error::InvalidArgument(format!("accuracy e = {e} must be positive")));
    }
    let (ok, d) = positivity_feasible(m, tol)?;
    if ok {
        return Ok(BisectionResult {
            alpha_star: 0.0,
            iterations: 0,
            bracket: vec![[0.0, 0.0]],
            d_sim: d.iter().map(|v| 1.0 / v.sqrt()).collect(),
            d_star: d,
            status: "zero_shortcut".into(),
            inner_status: vec![],
        });
    }
    let (mut lo, mut hi, mut cert) = match bounds {
        Some((lo, hi)) => {
            if !(lo >= 0.0 && hi > lo && hi <= FRAC_PI_2) {
                return Err(Error::InvalidArgument(format!(
                    "bounds [{lo}, {hi}] must satisfy 0 <= lower < upper <= pi/2"
                )));
            }
            let out = lmi_feasible(m, hi, opts, tol).map_err(|err| inner_failure(0, err))?;
            if !out.feasible {
                return Err(Error::UpperBoundInfeasible(hi));
            }
            (lo, hi, out.d)
        }
        None => {
            let perron = match perron_scaling(m, tol) {
                Ok(p) => p,
                Err(Error::NotMMatrix(_) | Error::Reducible) => return Err(Error::NoUpperBound),
                Err(other) => return Err(other),
            };
            let upper = scaled_upper_phase(m, &perron.d, tol)?;
            let upper = upper.clamp(f64::EPSILON, FRAC_PI_2);
            let warm = LmiOptions {
                warm_start: Some(perron.d.clone()),
                ..opts.clone()
            };
            let out = lmi_feasible(m, upper, &warm, tol).map_err(|err| inner_failure(0, err))?;
            // The Perron scaling certifies its own phase up to rounding.
            let cert = if out.feasible { out.d } else { perron.d };
            (0.0, upper, cert)
        }
    };
    let mut bracket = vec![[lo, hi]];
    let mut inner_status = Vec::new();
    let mut iterations = 0;
    while hi - lo >= e {
        iterations += 1;
        let beta = 0.5 * (lo + hi);
        let step = LmiOptions {
            warm_start: Some(cert.clone()),
            seed: opts.seed.wrapping_add(iterations as u64),
            ..opts.clone()
        };
        let out = lmi_feasible(m, beta, &step, tol).map_err(|err| inner_failure(iterations, err))?;
        inner_status.push(out.status);
        if out.feasible {
            hi = beta;
            cert = out.d;
        } else {
            lo = beta;
        }
        bracket.push([lo, hi]);
    }
    Ok(BisectionResult {
        alpha_star: hi,
        iterations,
        bracket,
        d_sim: cert.iter().map(|v| 1.0 / v.sqrt()).collect(),
        d_star: cert,
        status: "converged".into(),
        inner_status,
    })
}

fn inner_failure(iteration: usize, err: Error) -> Error {
    Error::InnerSolverFailure {
        iteration,
        message: err.to_string(),
    }
}

/// `lambda_min` of the normalized pencil for `d` at `beta` and its norm; used to
/// audit certificates.
pub fn certificate_margin(m: &RMatrix, d: &[f64], beta: f64) -> (f64, f64) {
    let pencil = Pencil {
        m,
        rot: cis(FRAC_PI_2 - beta),
        range: None,
    };
    let (f, _, norm) = pencil.evaluate(d);
    (f, norm)
}

/// The matrix with rows `rows` as a real `n x n` matrix, row-major.
pub fn rmatrix(n: usize, rows: &[f64]) -> RMatrix {
    RMatrix::from_row_slice(n, n, rows)
}
