use std::f64::consts::{FRAC_PI_2, PI};

use phasekit::calculus::{
    compression, cone_contains, interlace_check, pinv_phases, product_majorization, spt_check, spt_witness, PhaseCone,
};
use phasekit::numerics::{identity, pinv, sigma_min, Tolerances};
use phasekit::random::{self, trial_rng};
use phasekit::sectorial::{exact_phases, phases, phases_quasi};
use proptest::prelude::*;
use rand::Rng;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn cone_sum_closure_on_500_pairs() {
    for i in 0..500 {
        let mut rng = trial_rng(41, i);
        let n = rng.random_range(1..=5);
        let (alpha, beta) = random::interval(&mut rng, 0.0, PI - 1e-3);
        let cone = PhaseCone::new(alpha, beta).unwrap();
        let (a, _) = random::sectorial(&mut rng, n, alpha, beta);
        let r = rng.random_range(1..=n);
        let (b, _) = random::quasi_sectorial(&mut rng, n, r, alpha, beta);
        assert!(cone_contains(&cone, &a, &tol()) && cone_contains(&cone, &b, &tol()));
        assert!(cone_contains(&cone, &(&a + &b), &tol()), "pair {i}");
    }
}

#[test]
fn spt_sufficiency_on_500_pairs() {
    for i in 0..500 {
        let mut rng = trial_rng(43, i);
        let n = rng.random_range(1..=5);
        let (lo, hi) = random::interval(&mut rng, 0.0, PI - 0.2);
        let (a, _) = random::sectorial(&mut rng, n, lo, hi);
        let p = phases_quasi(&a, &tol()).unwrap();
        // Any cone strictly inside (-pi - phi_, pi - phī).
        let (open_lo, open_hi) = (-PI - p.min() + 0.01, PI - p.max() - 0.01);
        let w = rng.random_range(0.0..(open_hi - open_lo).min(PI - 1e-3));
        let start = rng.random_range(open_lo..=(open_hi - w));
        let cone = PhaseCone::new(start, start + w).unwrap();
        assert!(spt_check(&a, &cone, &tol()).unwrap());
        let (b, _) = random::sectorial(&mut rng, n, cone.alpha(), cone.beta());
        let ab = &a * &b;
        let s = sigma_min(&(identity(n) + &ab)).unwrap();
        assert!(s > 1e-8 * (1.0 + ab.norm()), "pair {i}: sigma_min {s:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pinv_phases_match_direct_computation(seed in any::<u64>(), n in 1usize..6, r in 1usize..6) {
        let mut rng = trial_rng(seed, 0);
        let r = r.min(n);
        let (lo, hi) = random::interval(&mut rng, 0.0, PI - 0.1);
        let (c, _) = random::quasi_sectorial(&mut rng, n, r, lo, hi);
        let predicted = pinv_phases(&c, &tol()).unwrap();
        let direct = exact_phases(&pinv(&c, &tol()).unwrap(), &tol()).unwrap().aligned_to(predicted.center);
        prop_assert!(max_diff(&predicted.phases, &direct.phases) < 1e-6);
        // Involution.
        let back = pinv_phases(&pinv(&c, &tol()).unwrap(), &tol()).unwrap();
        let orig = phases(&c, &tol()).unwrap();
        prop_assert!(max_diff(&back.aligned_to(orig.center).phases, &orig.phases) < 1e-6);
    }

    #[test]
    fn square_compression_preserves_phases(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = trial_rng(seed, 1);
        let (lo, hi) = random::interval(&mut rng, 0.0, PI - 0.1);
        let (c, _) = random::sectorial(&mut rng, n, lo, hi);
        let x = random::nonsingular(&mut rng, n, 10.0);
        prop_assert!(interlace_check(&c, &x, &tol()).unwrap());
        let p = phases_quasi(&c, &tol()).unwrap();
        let q = phases_quasi(&compression(&c, &x, &tol()).unwrap(), &tol()).unwrap().aligned_to(p.center);
        prop_assert!(max_diff(&p.phases, &q.phases) < 1e-6);
    }

    #[test]
    fn accretive_products(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = trial_rng(seed, 2);
        let half = |rng: &mut rand_chacha::ChaCha8Rng| {
            let w = rng.random_range(0.0..PI);
            let c = rng.random_range((-FRAC_PI_2 + w / 2.0)..=(FRAC_PI_2 - w / 2.0));
            (c - w / 2.0, c + w / 2.0)
        };
        let (alo, ahi) = half(&mut rng);
        let (blo, bhi) = half(&mut rng);
        let (a, _) = random::sectorial(&mut rng, n, alo, ahi);
        let (b, _) = random::sectorial(&mut rng, n, blo, bhi);
        let rep = product_majorization(&a, &b, &tol()).unwrap();
        prop_assert!(rep.eigen_angles.iter().all(|t| t.abs() <= PI + 1e-9));
        let pb = phases_quasi(&b, &tol()).unwrap();
        let cone = PhaseCone::new(pb.min(), pb.max()).unwrap();
        if spt_check(&a, &cone, &tol()).unwrap() {
            let ab = &a * &b;
            prop_assert!(sigma_min(&(identity(n) + &ab)).unwrap() > 1e-10 * (1.0 + ab.norm()));
        }
    }

    #[test]
    fn witnesses_are_singular_cone_members(seed in any::<u64>(), n in 1usize..5) {
        let mut rng = trial_rng(seed, 3);
        let (lo, hi) = random::interval(&mut rng, 0.0, PI - 0.2);
        let (a, _) = random::sectorial(&mut rng, n, lo, hi);
        let p = phases_quasi(&a, &tol()).unwrap();
        let target = rng.random_range((PI - p.max())..=(PI - p.min()));
        let below = rng.random_range(0.0..1.0);
        let above = rng.random_range(0.0..1.0);
        let cone = PhaseCone::new(target - below, target + above).unwrap();
        prop_assert!(!spt_check(&a, &cone, &tol()).unwrap());
        let b = spt_witness(&a, &cone, &tol()).unwrap();
        prop_assert!(cone_contains(&cone, &b, &tol()));
        let ab = &a * &b;
        prop_assert!(sigma_min(&(identity(n) + &ab)).unwrap() < 1e-6 * (1.0 + ab.norm()));
    }
}
