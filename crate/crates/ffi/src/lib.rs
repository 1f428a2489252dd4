//! C ABI over `phasekit`.
//!
//! Matrices, phase lists and graphs are opaque heap handles created by
//! `pk_*_new` / `pk_*_parse` functions and released with the matching
//! `pk_*_free`. Every fallible call returns a [`PkStatus`]; the message of the
//! most recent failure on the calling thread is available from
//! [`pk_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use phasekit::calculus::{self, PhaseCone};
use phasekit::essential::{self, LmiOptions};
use phasekit::graphs::{self, WeightedDigraph};
use phasekit::sectorial::{self, PhaseList, SectorKind};
use phasekit::{CMatrix, Error, Tolerances};

/// Status codes. The nonzero values match the exit codes of the `phasekit`
/// command line where they overlap.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PkStatus {
    Ok = 0,
    /// Malformed input: bad shape, non-finite entries, unparsable text, bad arguments.
    InvalidInput = 2,
    /// A numerical routine did not converge or lost a certificate.
    Numerical = 3,
    /// The input is outside the domain of the operation.
    Domain = 4,
    NullPointer = 5,
    /// Internal error; the library caught a panic.
    Internal = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PkSectorKind {
    Sectorial = 0,
    QuasiSectorial = 1,
    SemiSectorial = 2,
    NotSemiSectorial = 3,
}

impl From<SectorKind> for PkSectorKind {
    fn from(k: SectorKind) -> Self {
        match k {
            SectorKind::Sectorial => Self::Sectorial,
            SectorKind::QuasiSectorial => Self::QuasiSectorial,
            SectorKind::SemiSectorial => Self::SemiSectorial,
            SectorKind::NotSemiSectorial => Self::NotSemiSectorial,
        }
    }
}

/// Tolerances; pass NULL wherever a `const PkTolerances *` is accepted to use
/// the defaults.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PkTolerances {
    pub eps_rank: f64,
    pub eps_psd: f64,
    pub eps_phase: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PkClassification {
    pub kind: PkSectorKind,
    pub rank: usize,
    pub rotated_hermitian: bool,
    /// Field angle in radians.
    pub field_angle: f64,
}

/// Opaque square complex matrix.
pub struct PkMatrix(CMatrix);

/// Opaque phase list, sorted descending.
pub struct PkPhases(PhaseList);

/// Opaque weighted digraph.
pub struct PkGraph(WeightedDigraph);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> PkStatus {
    match phasekit::cli::exit_code(err) {
        phasekit::cli::EXIT_PARSE => PkStatus::InvalidInput,
        phasekit::cli::EXIT_NUMERIC => PkStatus::Numerical,
        _ => PkStatus::Domain,
    }
}

enum Fail {
    Lib(Error),
    Null(&'static str),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PkStatus::Ok,
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            PkStatus::NullPointer
        }
        Err(_) => {
            set_error("internal error".into());
            PkStatus::Internal
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn tolerances(tol: *const PkTolerances) -> Result<Tolerances, Fail> {
    match tol.as_ref() {
        None => Ok(Tolerances::default()),
        Some(t) => Ok(Tolerances::new(t.eps_rank, t.eps_psd, t.eps_phase)?),
    }
}

unsafe fn c_str<'a>(s: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Fail::Lib(Error::Parse(format!("{what} is not valid UTF-8"))))
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pk_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn pk_tolerances_default() -> PkTolerances {
    let t = Tolerances::default();
    PkTolerances {
        eps_rank: t.eps_rank,
        eps_psd: t.eps_psd,
        eps_phase: t.eps_phase,
    }
}

/// Creates an `n x n` matrix from row-major real and imaginary parts; `im`
/// may be NULL for a real matrix.
///
/// # Safety
/// `re` (and `im` when non-null) must point to `n * n` doubles; `out` must be
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pk_matrix_new(
    n: usize,
    re: *const f64,
    im: *const f64,
    out_matrix: *mut *mut PkMatrix,
) -> PkStatus {
    guard(|| {
        let slot = out(out_matrix, "out_matrix")?;
        *slot = ptr::null_mut();
        if re.is_null() && n > 0 {
            return Err(Fail::Null("re"));
        }
        let len = n
            .checked_mul(n)
            .ok_or(Error::InvalidArgument("matrix too large".into()))?;
        let re = if n == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(re, len)
        };
        let im = if im.is_null() || n == 0 {
            None
        } else {
            Some(std::slice::from_raw_parts(im, len))
        };
        let m = CMatrix::from_fn(n, n, |i, j| {
            let k = i * n + j;
            Complex64::new(re[k], im.map_or(0.0, |v| v[k]))
        });
        phasekit::numerics::ensure_finite(&m)?;
        *slot = Box::into_raw(Box::new(PkMatrix(m)));
        Ok(())
    })
}

/// Reads a matrix file (JSON or CSV).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out_matrix` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pk_matrix_read(path: *const c_char, out_matrix: *mut *mut PkMatrix) -> PkStatus {
    guard(|| {
        let slot = out(out_matrix, "out_matrix")?;
        *slot = ptr::null_mut();
        let path = c_str(path, "path")?;
        let m = phasekit::matrix_io::read_matrix(std::path::Path::new(path))?;
        *slot = Box::into_raw(Box::new(PkMatrix(m)));
        Ok(())
    })
}

/// # Safety
/// `m` must be NULL or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn pk_matrix_free(m: *mut PkMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// # Safety
/// `m` must be a live matrix handle.
#[no_mangle]
pub unsafe extern "C" fn pk_matrix_dim(m: *const PkMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.nrows())
}

/// # Safety
/// `m` must be a live matrix handle, `tol` NULL or valid, `result` valid.
#[no_mangle]
pub unsafe extern "C" fn pk_classify(
    m: *const PkMatrix,
    tol: *const PkTolerances,
    result: *mut PkClassification,
) -> PkStatus {
    guard(|| {
        let m = &deref(m, "m")?.0;
        let tol = tolerances(tol)?;
        let slot = out(result, "result")?;
        let cls = sectorial::classify(m, &tol)?;
        *slot = PkClassification {
            kind: cls.kind.into(),
            rank: cls.rank,
            rotated_hermitian: cls.rotated_hermitian,
            field_angle: sectorial::field_angle(m, &tol)?,
        };
        Ok(())
    })
}

unsafe fn phases_with(
    m: *const PkMatrix,
    tol: *const PkTolerances,
    out_phases: *mut *mut PkPhases,
    f: fn(&CMatrix, &Tolerances) -> phasekit::Result<PhaseList>,
) -> PkStatus {
    guard(|| {
        let slot = out(out_phases, "out_phases")?;
        *slot = ptr::null_mut();
        let m = &deref(m, "m")?.0;
        let tol = tolerances(tol)?;
        let p = f(m, &tol)?;
        *slot = Box::into_raw(Box::new(PkPhases(p)));
        Ok(())
    })
}

/// Phases by classification: exact for quasi-sectorial and rotated Hermitian
/// input, a flagged approximation otherwise.
///
/// # Safety
/// `m` must be a live matrix handle, `tol` NULL or valid, `out_phases` valid.
#[no_mangle]
pub unsafe extern "C" fn pk_phases(
    m: *const PkMatrix,
    tol: *const PkTolerances,
    out_phases: *mut *mut PkPhases,
) -> PkStatus {
    phases_with(m, tol, out_phases, sectorial::phases)
}

/// Phases of a quasi-sectorial matrix; fails with `Domain` otherwise.
///
/// # Safety
/// As for [`pk_phases`].
#[no_mangle]
pub unsafe extern "C" fn pk_phases_quasi(
    m: *const PkMatrix,
    tol: *const PkTolerances,
    out_phases: *mut *mut PkPhases,
) -> PkStatus {
    phases_with(m, tol, out_phases, sectorial::phases_quasi)
}

/// Phases of the pseudoinverse.
///
/// # Safety
/// As for [`pk_phases`].
#[no_mangle]
pub unsafe extern "C" fn pk_pinv_phases(
    m: *const PkMatrix,
    tol: *const PkTolerances,
    out_phases: *mut *mut PkPhases,
) -> PkStatus {
    phases_with(m, tol, out_phases, calculus::pinv_phases)
}

/// # Safety
/// `p` must be NULL or a live phase handle.
#[no_mangle]
pub unsafe extern "C" fn pk_phases_free(p: *mut PkPhases) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `p` must be a live phase handle.
#[no_mangle]
pub unsafe extern "C" fn pk_phases_len(p: *const PkPhases) -> usize {
    p.as_ref().map_or(0, |p| p.0.len())
}

/// Copies up to `cap` phases into `buf`; returns the total count.
///
/// # Safety
/// `p` must be a live phase handle; `buf` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn pk_phases_copy(p: *const PkPhases, buf: *mut f64, cap: usize) -> usize {
    let Some(p) = p.as_ref() else { return 0 };
    if !buf.is_null() {
        let k = cap.min(p.0.len());
        ptr::copy_nonoverlapping(p.0.phases.as_ptr(), buf, k);
    }
    p.0.len()
}

/// # Safety
/// `p` must be a live phase handle.
#[no_mangle]
pub unsafe extern "C" fn pk_phases_center(p: *const PkPhases) -> f64 {
    p.as_ref().map_or(f64::NAN, |p| p.0.center)
}

/// # Safety
/// `p` must be a live phase handle.
#[no_mangle]
pub unsafe extern "C" fn pk_phases_is_approximate(p: *const PkPhases) -> bool {
    p.as_ref().is_some_and(|p| p.0.approximate)
}

/// Whether `I + AB` is nonsingular for every `B` in the cone `[alpha, beta]`.
///
/// # Safety
/// `a` must be a live matrix handle, `tol` NULL or valid, `result` valid.
#[no_mangle]
pub unsafe extern "C" fn pk_small_phase_check(
    a: *const PkMatrix,
    alpha: f64,
    beta: f64,
    tol: *const PkTolerances,
    result: *mut bool,
) -> PkStatus {
    guard(|| {
        let a = &deref(a, "a")?.0;
        let tol = tolerances(tol)?;
        let slot = out(result, "result")?;
        let cone = PhaseCone::new(alpha, beta)?;
        *slot = calculus::spt_check(a, &cone, &tol)?;
        Ok(())
    })
}

/// Essential phase of a real matrix by bisection to accuracy `e`. With
/// `upper > 0` the bracket `[lower, upper]` is used; otherwise the bracket is
/// derived for irreducible M-matrices. When `d_out` is non-null it receives
/// the `n` entries of the certificate `d`.
///
/// # Safety
/// `m` must be a live matrix handle, `tol` NULL or valid, `alpha_out` valid,
/// `d_out` NULL or able to hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn pk_essential_phase(
    m: *const PkMatrix,
    e: f64,
    lower: f64,
    upper: f64,
    tol: *const PkTolerances,
    alpha_out: *mut f64,
    d_out: *mut f64,
) -> PkStatus {
    guard(|| {
        let m = essential::as_real(&deref(m, "m")?.0)?;
        let tol = tolerances(tol)?;
        let slot = out(alpha_out, "alpha_out")?;
        let bounds = (upper > 0.0).then_some((lower, upper));
        let r = essential::essential_phase(&m, e, bounds, &LmiOptions::default(), &tol)?;
        *slot = r.alpha_star;
        if !d_out.is_null() {
            ptr::copy_nonoverlapping(r.d_star.as_ptr(), d_out, r.d_star.len());
        }
        Ok(())
    })
}

/// Parses a graph from `src dst weight` lines.
///
/// # Safety
/// `text` must be NUL-terminated; `out_graph` valid.
#[no_mangle]
pub unsafe extern "C" fn pk_graph_parse(text: *const c_char, out_graph: *mut *mut PkGraph) -> PkStatus {
    guard(|| {
        let slot = out(out_graph, "out_graph")?;
        *slot = ptr::null_mut();
        let g = graphs::parse_graph(c_str(text, "text")?)?;
        *slot = Box::into_raw(Box::new(PkGraph(g)));
        Ok(())
    })
}

/// # Safety
/// `g` must be NULL or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn pk_graph_free(g: *mut PkGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` must be a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn pk_graph_node_count(g: *const PkGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.n())
}

/// Essential phase of the Laplacian of a strongly connected graph.
///
/// # Safety
/// `g` must be a live graph handle, `tol` NULL or valid, `result` valid.
#[no_mangle]
pub unsafe extern "C" fn pk_graph_essential_phase(
    g: *const PkGraph,
    tol: *const PkTolerances,
    result: *mut f64,
) -> PkStatus {
    guard(|| {
        let g = &deref(g, "g")?.0;
        let tol = tolerances(tol)?;
        let slot = out(result, "result")?;
        *slot = graphs::laplacian_essential_phase(g, &tol)?.phi_ess;
        Ok(())
    })
}

/// # Safety
/// `g` must be a live graph handle, `tol` NULL or valid, `result` valid.
#[no_mangle]
pub unsafe extern "C" fn pk_graph_is_weight_balanced(
    g: *const PkGraph,
    tol: *const PkTolerances,
    result: *mut bool,
) -> PkStatus {
    guard(|| {
        let g = &deref(g, "g")?.0;
        let tol = tolerances(tol)?;
        *out(result, "result")? = graphs::is_weight_balanced(g, &tol);
        Ok(())
    })
}

/// Laplacian of the graph as a matrix handle.
///
/// # Safety
/// `g` must be a live graph handle; `out_matrix` valid.
#[no_mangle]
pub unsafe extern "C" fn pk_graph_laplacian(g: *const PkGraph, out_matrix: *mut *mut PkMatrix) -> PkStatus {
    guard(|| {
        let slot = out(out_matrix, "out_matrix")?;
        *slot = ptr::null_mut();
        let g = &deref(g, "g")?.0;
        *slot = Box::into_raw(Box::new(PkMatrix(graphs::laplacian(g))));
        Ok(())
    })
}
