//! Seeded property suites. Each trial draws its own stream from
//! `(seed, trial index)`, so results do not depend on scheduling.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::calculus::{
    cone_contains, interlace_check, interlaces, pinv_phases, product_majorization, schur_phases, self_majorization,
    spt_check, spt_witness, PhaseCone,
};
use crate::essential::{self, LmiOptions};
use crate::graphs;
use crate::numerics::{identity, pinv, sigma_min, CMatrix, Tolerances};
use crate::random;
use crate::sectorial::{classify, exact_phases, phases_quasi, phases_via_congruence_square};

/// Bisection accuracy used by suites that call the essential phase solver.
pub const SUITE_BISECTION_E: f64 = 1e-5;

pub const SUITES: &[&str] = &[
    "pinv",
    "cone_sum",
    "interlacing",
    "schur",
    "majorization",
    "self_majorization",
    "spt",
    "balance",
    "laplacian_phase",
    "block_bound",
    "sandwich",
    "cross_method",
    "planted",
];

#[derive(Debug, Clone, Serialize)]
pub struct Counterexample {
    pub trial: u64,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub trials: u64,
    pub passed: u64,
    pub failed: u64,
    /// Largest error metric observed over passing and failing trials.
    pub max_error: f64,
    pub first_failure: Option<Counterexample>,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.failed == 0
    }
}

/// Outcome of a single trial: an error metric on success.
type Trial = std::result::Result<f64, String>;

fn trial_fn(name: &str) -> Option<fn(&mut ChaCha8Rng, &Tolerances) -> Trial> {
    Some(match name {
        "pinv" => pinv_trial,
        "cone_sum" => cone_sum_trial,
        "interlacing" => interlacing_trial,
        "schur" => schur_trial,
        "majorization" => majorization_trial,
        "self_majorization" => self_majorization_trial,
        "spt" => spt_trial,
        "balance" => balance_trial,
        "laplacian_phase" => laplacian_phase_trial,
        "block_bound" => block_bound_trial,
        "sandwich" => sandwich_trial,
        "cross_method" => cross_method_trial,
        "planted" => planted_trial,
        _ => return None,
    })
}

/// Runs `trials` trials of `suite` seeded by `seed`.
pub fn run_suite(suite: &str, trials: u64, seed: u64, tol: &Tolerances) -> Option<SuiteReport> {
    let f = trial_fn(suite)?;
    let suite_seed = seed ^ fnv(suite);
    let results: Vec<(u64, Trial)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = random::trial_rng(suite_seed, i);
            (i, f(&mut rng, tol))
        })
        .collect();
    let mut report = SuiteReport {
        suite: suite.into(),
        trials,
        passed: 0,
        failed: 0,
        max_error: 0.0,
        first_failure: None,
    };
    for (i, r) in results {
        match r {
            Ok(err) => {
                report.passed += 1;
                report.max_error = report.max_error.max(err);
            }
            Err(message) => {
                report.failed += 1;
                if report.first_failure.is_none() {
                    report.first_failure = Some(Counterexample { trial: i, message });
                }
            }
        }
    }
    Some(report)
}

fn fnv(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err_str(e: crate::Error) -> String {
    e.to_string()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// A matrix with exactly computable phases: sectorial, rank-deficient
/// quasi-sectorial, or rotated Hermitian.
fn phase_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    match rng.random_range(0..3) {
        0 => {
            let (lo, hi) = random::interval(rng, 0.0, PI - 0.1);
            random::sectorial(rng, n, lo, hi).0
        }
        1 => {
            let r = rng.random_range(1..=n);
            let (lo, hi) = random::interval(rng, 0.0, PI - 0.1);
            random::quasi_sectorial(rng, n, r, lo, hi).0
        }
        _ => {
            let r = rng.random_range(1..=n);
            let theta0 = rng.random_range(-FRAC_PI_2..FRAC_PI_2);
            random::rotated_hermitian(rng, n, r, theta0)
        }
    }
}

fn pinv_trial(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Trial {
    let n = rng.random_range(1..=6);
    let m = phase_matrix(rng, n);
    let predicted = pinv_phases(&m, tol).map_err(err_str)?;
    let inverse = pinv(&m, tol).map_err(err_str)?;
    let direct = exact_phases(&inverse, tol)
        .map_err(err_str)?
        .aligned_to(predicted.center);
    require(direct.len() == predicted.len(), || {
        format!("pinv has {} phases, predicted {}", direct.len(), predicted.len())
    })?;
    let err = max_abs_diff(&direct.phases, &predicted.phases);
    let original = exact_phases(&m, tol).map_err(err_str)?;
    let back = pinv_phases(&inverse, tol).map_err(err_str)?.aligned_to(original.center);
    let err = err.max(max_abs_diff(&back.phases, &original.phases));
    require(err < 1e-6, || format!("phase error {err:.3e}"))?;
    Ok(err)
}

fn cone_sum_trial(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Trial {
    let n = rng.random_range(1..=6);
    let (alpha, beta) = random::interval(rng, 0.0, PI - 1e-3);
    let cone = PhaseCone::new(alpha, beta).map_err(err_str)?;
    let (a, _) = random::sectorial(rng, n, alpha, beta);
    let (b, _) = random::sectorial(rng, n, alpha, beta);
    require(cone_contains(&cone, &a, tol) && cone_contains(&cone, &b, tol), || {
        "generated member rejected".into()
    })?;
    require(cone_contains(&cone, &(&a + &b), tol), || {
        format!("A + B left C[{alpha:.4}, {beta:.4}]")
    })?;
    Ok(0.0)
}

fn interlacing_trial(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Trial {
    let n = rng.random_range(2..=6);
    let m = phase_matrix(rng, n);
    let k = rng.random_range(1..=n);
    let x = if k == n && rng.random_bool(0.3) {
        random::nonsingular(rng, n, 10.0)
    } else {
        random::full_column_rank(rng, n, k)
    };
    match interlace_check(&m, &x, tol) {
        Ok(true) => {}
        Ok(false) => return Err(format!("interlacing failed, n = {n}, k = {k}")),
        Err(crate::Error::ZeroCompression) => return Ok(0.0),
        Err(e) => return Err(err_str(e)),
    }
    if k == n {
        // Congruence invariance: a nonsingular X preserves the phases.
        let p = exact_phases(&m, tol).map_err(err_str)?;
        let q = exact_phases(&(x.adjoint() * &m * &x), tol)
            .map_err(err_str)?
            .aligned_to(p.center);
        let err = max_abs_diff(&p.phases, &q.phases);
        require(p.len() == q.len() && err < 1e-6, || {
            format!("congruence changed phases by {err:.3e}")
        })?;
        return Ok(err);
    }
    Ok(0.0)
}

fn schur_trial(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Trial {
    let n = rng.random_range(2..=6);
    let r = if rng.random_bool(0.3) {
        rng.random_range(1..=n)
    } else {
        n
    };
    let (lo, hi) = random::interval(rng, 0.0, PI - 0.1);
    let (m, _) = random::quasi_sectorial(rng, n, r, lo, hi);
    let k = rng.random_range(1..n);
    let outer = phases_quasi(&m, tol).map_err(err_str)?;
    let inner = match schur_phases(&m, k, tol) {
        Ok(p) => p,
        // Only the quasi-sectorial case guarantees the range conditions; for
        // rank-deficient C11 the numerical residual can exceed the cutoff.
        Err(crate::Error::RangeConditionViolated { residual }) if residual < 1e-6 && r < n => return Ok(0.0),
        Err(e) => return Err(err_str(e)),
    };
    require(interlaces(&outer, &inner, tol.eps_phase), || {
        format!("Schur complement phases do not interlace (n = {n}, k = {k}, r = {r})")
    })?;
    Ok(0.0)
}

/// Semi-sectorial factor with computable phases.
fn semi_factor(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    if rng.random_bool(0.3) {
        let r = rng.random_range(1..=n);
        let theta0 = rng.random_range(-FRAC_PI_2..FRAC_PI_2);
        random::rotated_hermitian(rng, n, r, theta0)
    } else {
        let r = rng.random_range(1..=n);
        let (lo, hi) = random::interval(rng, 0.0, PI - 0.1);
        random::quasi_sectorial(rng, n, r, lo, hi).0
    }
}

fn majorization_trial(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Trial {
    let n = rng.random_range(1..=6);
    let ra = rng.random_range(1..=n);
    let (lo, hi) = random::interval(rng, 0.0, PI - 0.1);
    let (a, _) = random::quasi_sectorial(rng, n, ra, lo, hi);
    let b = semi_factor(rng, n);
    let rep = product_majorization(&a, &b, tol).map_err(err_str)?;
    require(rep.eigen_count == rep.expected_count, || {
        format!(
            "{} nonzero eigenvalues, rank((AB)^2) = {}",
            rep.eigen_count, rep.expected_count
        )
    })?;
    require(rep.eigen_angles.len() == rep.expected_count, || {
        format!(
            "{} eigen angles for rank((AB)^2) = {}",
            rep.eigen_angles.len(),
            rep.expected_count
        )
    })?;
    require(rep.holds, || {
        format!("majorization failed: {:?} vs {:?}", rep.eigen_angles, rep.bound_phases)
    })?;
    require(rep.bounds_hold, || "eigen angle outside the phase sum bounds".into())?;
    let gap = rep
        .partial_sums
        .eigen
        .last()
        .zip(rep.partial_sums.bound.last())
        .map_or(0.0, |(x, y)| (x - y).abs());
    Ok(gap)
}

fn self_majorization_trial(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Trial {
    let n = rng.random_range(2..=6);
    let m = semi_factor(rng, n);
    let rep = self_majorization(&m, tol).map_err(err_str)?;
    require(rep.eigen_count == rep.expected_count, || {
        format!("{} nonzero eigenvalues, rank = {}", rep.eigen_count, rep.expected_count)
    })?;
    require(rep.eigen_angles.len() == rep.expected_count, || {
        "eigen angle count".into()
    })?;
    require(rep.holds, || {
        format!("majorization failed: {:?} vs {:?}", rep.eigen_angles, rep.bound_phases)
    })?;
    Ok(0.0)
}

fn spt_trial(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Trial {
    let n = rng.random_range(1..=5);
    let r = if rng.random_bool(0.3) {
        rng.random_range(1..=n)
    } else {
        n
    };
    let (lo, hi) = random::interval(rng, 0.0, PI - 0.2);
    let (a, _) = random::quasi_sectorial(rng, n, r, lo, hi);
    let p = phases_quasi(&a, tol).map_err(err_str)?;
    let (pmin, pmax) = (p.min(), p.max());

    // Sufficiency: a cone strictly inside (-pi - phi_, pi - phī).
    let (open_lo, open_hi) = (-PI - pmin, PI - pmax);
    let margin = 0.02;
    let width = (open_hi - open_lo - 2.0 * margin).max(0.0);
    let w = rng.random_range(0.0..=width.min(PI - 1e-3));
    let start = open_lo + margin + rng.random_range(0.0..=(width - w));
    let shift = 2.0 * PI * rng.random_range(-1i32..=1) as f64;
    let cone = PhaseCone::new(start + shift, start + w + shift).map_err(err_str)?;
    require(spt_check(&a, &cone, tol).map_err(err_str)?, || {
        "interior cone rejected".into()
    })?;
    let (b, _) = random::sectorial(rng, n, cone.alpha(), cone.beta());
    let ab = &a * &b;
    let smin = sigma_min(&(identity(n) + &ab)).map_err(err_str)?;
    require(smin > 1e-8 * (1.0 + ab.norm()), || {
        format!("I + AB nearly singular: {smin:.3e}")
    })?;

    // Necessity: a cone reaching into [pi - phī, pi - phi_].
    let target = rng.random_range((PI - pmax)..=(PI - pmin));
    let below = rng.random_range(0.0..PI);
    let above = rng.random_range(0.0..(PI - below).min(0.5));
    let cone = PhaseCone::new(target - below + shift, target + above + shift).map_err(err_str)?;
    require(!spt_check(&a, &cone, tol).map_err(err_str)?, || {
        "violating cone accepted".into()
    })?;
    let b = spt_witness(&a, &cone, tol).map_err(err_str)?;
    require(cone_contains(&cone, &b, tol), || "witness outside the cone".into())?;
    let ab = &a * &b;
    let smin = sigma_min(&(identity(n) + &ab)).map_err(err_str)?;
    require(smin < 1e-6 * (1.0 + ab.norm()), || {
        format!("witness sigma_min {smin:.3e}")
    })?;
    Ok(smin)
}

fn balance_trial(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Trial {
    let n = rng.random_range(2..=7);
    let g = if rng.random_bool(0.5) {
        let cycles = rng.random_range(1..4);
        random::balanced(rng, n, cycles)
    } else {
        random::strongly_connected(rng, n, 0.3)
    };
    let balanced = graphs::is_weight_balanced(&g, tol);
    let kind = classify(&graphs::laplacian(&g), tol).map_err(err_str)?.kind;
    require(kind.is_quasi() == balanced && kind.is_semi() == balanced, || {
        format!("balanced = {balanced} but Laplacian classified {kind:?}")
    })?;
    Ok(0.0)
}

fn laplacian_phase_trial(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Trial {
    let n = rng.random_range(2..=6);
    let g = match rng.random_range(0..3) {
        0 => random::undirected(rng, n, 0.3),
        1 => random::balanced(rng, n, 2),
        _ => random::strongly_connected(rng, n, 0.3),
    };
    let analytic = graphs::laplacian_essential_phase(&g, tol).map_err(err_str)?.phi_ess;
    let l = graphs::laplacian_real(&g);
    let lower = essential::eigen_angle_lower_bound(&l, tol).map_err(err_str)?;
    require(lower <= analytic + 1e-9 && analytic < FRAC_PI_2, || {
        format!("eigen angle {lower:.6} vs phi_ess {analytic:.6}")
    })?;
    let e = SUITE_BISECTION_E;
    let r = essential::essential_phase(&l, e, None, &LmiOptions::default(), tol).map_err(err_str)?;
    let diff = (r.alpha_star - analytic).abs();
    require(diff <= 2e-5 + 2.0 * e, || {
        format!("bisection {:.6} vs analytic {analytic:.6}", r.alpha_star)
    })?;
    // L^T = (D L D^{-1})^T up to the same diagonal scaling, so its essential
    // phase matches; the edge-reversed graph's Laplacian generally does not.
    let t = essential::essential_phase(&l.transpose(), e, None, &LmiOptions::default(), tol).map_err(err_str)?;
    require((t.alpha_star - analytic).abs() <= 2e-5 + 2.0 * e, || {
        format!("transposed Laplacian {:.6} vs {analytic:.6}", t.alpha_star)
    })?;
    Ok(diff)
}

fn block_bound_trial(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Trial {
    let blocks = rng.random_range(2..=3);
    let sizes: Vec<usize> = (0..blocks).map(|_| rng.random_range(1..=3)).collect();
    let g = random::rooted_components(rng, &sizes);
    let e = SUITE_BISECTION_E;
    let rep = graphs::component_phase_bounds(&g, Some(e), tol).map_err(err_str)?;
    let mut worst = f64::NEG_INFINITY;
    for b in rep.blocks.iter().skip(1) {
        require(b.scaled <= b.upper_bound + tol.eps_phase, || {
            format!(
                "block {}: scaled {:.6} above bound {:.6}",
                b.block, b.scaled, b.upper_bound
            )
        })?;
        require(b.phi_ess <= b.upper_bound + 2.0 * e, || {
            format!(
                "block {}: phi_ess {:.6} above bound {:.6}",
                b.block, b.phi_ess, b.upper_bound
            )
        })?;
        worst = worst.max(b.phi_ess - b.upper_bound);
    }
    Ok(worst.max(0.0))
}

fn sandwich_trial(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Trial {
    let n = rng.random_range(2..=5);
    let m = random::m_matrix(rng, n);
    let e = SUITE_BISECTION_E;
    let lower = essential::eigen_angle_lower_bound(&m, tol).map_err(err_str)?;
    let perron = essential::perron_scaling(&m, tol).map_err(err_str)?;
    let upper = essential::scaled_upper_phase(&m, &perron.d, tol).map_err(err_str)?;
    let r = essential::essential_phase(&m, e, None, &LmiOptions::default(), tol).map_err(err_str)?;
    require(lower - e <= r.alpha_star && r.alpha_star <= upper + e, || {
        format!("{lower:.6} <= {:.6} <= {upper:.6} violated", r.alpha_star)
    })?;
    require(r.d_star.iter().all(|&d| d >= 1e-8), || {
        "certificate not strictly positive".into()
    })?;
    if r.alpha_star > 0.0 {
        let (f, norm) = essential::certificate_margin(&m, &r.d_star, r.alpha_star);
        require(f >= -tol.eps_psd * norm, || format!("certificate margin {f:.3e}"))?;
    }
    Ok((lower - e - r.alpha_star).max(r.alpha_star - upper - e).max(0.0))
}

fn cross_method_trial(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Trial {
    let n = rng.random_range(1..=8);
    let (lo, hi) = random::interval(rng, 0.0, PI - 0.1);
    let (m, _) = random::sectorial(rng, n, lo, hi);
    let a = phases_quasi(&m, tol).map_err(err_str)?;
    let b = phases_via_congruence_square(&m, tol)
        .map_err(err_str)?
        .aligned_to(a.center);
    let err = max_abs_diff(&a.phases, &b.phases);
    require(a.len() == b.len() && err < 1e-6, || {
        format!("methods differ by {err:.3e}")
    })?;
    Ok(err)
}

fn planted_trial(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Trial {
    let n = rng.random_range(1..=6);
    let r = rng.random_range(1..=n);
    let (lo, hi) = random::interval(rng, 0.0, PI - 0.1);
    let (m, theta) = random::quasi_sectorial(rng, n, r, lo, hi);
    let p = phases_quasi(&m, tol).map_err(err_str)?;
    let centre = 0.5 * (theta[0] + theta[r - 1]);
    let p = p.aligned_to(centre);
    let err = max_abs_diff(&p.phases, &theta);
    require(p.len() == r && err < 1e-6, || {
        format!("planted phases off by {err:.3e}")
    })?;
    Ok(err)
}
