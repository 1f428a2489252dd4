use std::f64::consts::FRAC_PI_2;

use phasekit::essential::{
    certificate_margin, eigen_angle_lower_bound, essential_phase, lmi_feasible, perron_scaling, scaled_upper_phase,
    LmiOptions, RMatrix,
};
use phasekit::graphs::{
    component_phase_bounds, is_weight_balanced, laplacian_essential_phase, laplacian_real, left_perron_vector,
    parse_graph, scc_frobenius, WeightedDigraph,
};
use phasekit::numerics::Tolerances;
use phasekit::random::{self, trial_rng};
use proptest::prelude::*;
use rand::Rng;

const E: f64 = 1e-5;

fn tol() -> Tolerances {
    Tolerances::default()
}

/// Random graph with arbitrary structure; small integer weights keep every
/// row sum exact in floating point.
fn any_graph(rng: &mut impl Rng, n: usize) -> WeightedDigraph {
    let mut w = RMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random_bool(0.25) {
                w[(i, j)] = rng.random_range(1..=4) as f64;
            }
        }
    }
    random::graph_from_weights(&w)
}

fn reachability(g: &WeightedDigraph) -> Vec<Vec<bool>> {
    let n = g.n();
    let mut r = vec![vec![false; n]; n];
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = true;
    }
    for e in g.edges() {
        r[e.src][e.dst] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if r[i][k] && r[k][j] {
                    r[i][j] = true;
                }
            }
        }
    }
    r
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn laplacian_rows_sum_to_zero(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = trial_rng(seed, 0);
        let g = any_graph(&mut rng, n);
        let l = laplacian_real(&g);
        for i in 0..n {
            prop_assert_eq!(l.row(i).sum(), 0.0);
        }
        let col_sums_zero = (0..n).all(|j| l.column(j).sum() == 0.0);
        prop_assert_eq!(is_weight_balanced(&g, &tol()), col_sums_zero);
    }

    #[test]
    fn frobenius_form_matches_reachability(seed in any::<u64>(), n in 1usize..9) {
        let mut rng = trial_rng(seed, 1);
        let g = any_graph(&mut rng, n);
        let f = scc_frobenius(&g);
        let reach = reachability(&g);
        let block_of: Vec<usize> = {
            let mut b = vec![0; n];
            for (k, nodes) in f.blocks.iter().enumerate() {
                for &v in nodes {
                    b[v] = k;
                }
            }
            b
        };
        for i in 0..n {
            for j in 0..n {
                let same = reach[i][j] && reach[j][i];
                prop_assert_eq!(same, block_of[i] == block_of[j]);
                if reach[i][j] {
                    prop_assert!(block_of[i] <= block_of[j]);
                }
            }
        }
        // Lower block triangular with exact zeros above the diagonal blocks.
        let p = f.permute(&laplacian_real(&g));
        let offsets = f.offsets();
        for (k, &start) in offsets.iter().enumerate() {
            let end = start + f.block_sizes[k];
            for r in start..end {
                for c in end..n {
                    prop_assert_eq!(p[(r, c)], 0.0);
                }
            }
        }
        let sources = (0..f.blocks.len())
            .filter(|&k| !(0..n).any(|i| block_of[i] != k && f.blocks[k].iter().any(|&v| reach[i][v])))
            .count();
        prop_assert_eq!(f.spanning_tree, sources == 1);
        prop_assert_eq!(f.strongly_connected, f.blocks.len() == 1);
    }

    #[test]
    fn balanced_iff_quasi_sectorial(seed in any::<u64>(), n in 2usize..8) {
        let mut rng = trial_rng(seed, 2);
        let g = if rng.random_bool(0.5) {
            let cycles = rng.random_range(1..4);
            random::balanced(&mut rng, n, cycles)
        } else {
            random::strongly_connected(&mut rng, n, 0.3)
        };
        let kind = phasekit::sectorial::classify(&phasekit::graphs::laplacian(&g), &tol()).unwrap().kind;
        prop_assert_eq!(kind.is_quasi(), is_weight_balanced(&g, &tol()));
    }

    #[test]
    fn perron_vector_annihilates_the_laplacian(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = trial_rng(seed, 3);
        let g = random::strongly_connected(&mut rng, n, 0.3);
        let v = left_perron_vector(&g, &tol()).unwrap();
        let l = laplacian_real(&g);
        let vt = nalgebra::DVector::from_vec(v.clone());
        prop_assert!(v.iter().all(|&x| x > 0.0));
        prop_assert!((v.iter().sum::<f64>() - n as f64).abs() < 1e-9 * n as f64);
        prop_assert!((l.transpose() * vt).norm() <= 1e-9 * n as f64 * l.norm());
    }

    #[test]
    fn lower_bound_and_right_half_plane(seed in any::<u64>(), n in 2usize..7) {
        let mut rng = trial_rng(seed, 4);
        let g = random::strongly_connected(&mut rng, n, 0.3);
        let phi = laplacian_essential_phase(&g, &tol()).unwrap();
        let lower = eigen_angle_lower_bound(&laplacian_real(&g), &tol()).unwrap();
        prop_assert!(lower <= phi.phi_ess + 1e-9 && phi.phi_ess < FRAC_PI_2);
        prop_assert_eq!(phi.lower, -phi.phi_ess);
    }
}

#[test]
fn undirected_graphs_have_zero_essential_phase() {
    for i in 0..50 {
        let mut rng = trial_rng(5, i);
        let n = rng.random_range(1..8);
        let g = random::undirected(&mut rng, n, 0.4);
        assert!(laplacian_essential_phase(&g, &tol()).unwrap().phi_ess.abs() <= 1e-9);
    }
}

#[test]
fn two_cycle_perron_vector() {
    // a: 0 -> 1 and b: 1 -> 0 give L = [[b, -b], [-a, a]], so v^T L = 0 for v ∝ (a, b).
    let (a, b) = (2.0, 5.0);
    let g = parse_graph(&format!("0 1 {a}\n1 0 {b}\n")).unwrap();
    let v = left_perron_vector(&g, &tol()).unwrap();
    let s = 2.0 / (a + b);
    assert!((v[0] - a * s).abs() < 1e-12 && (v[1] - b * s).abs() < 1e-12, "{v:?}");
}

#[test]
fn feasibility_is_monotone_in_beta() {
    for i in 0..6 {
        let mut rng = trial_rng(6, i);
        let n = rng.random_range(2..=4);
        let m = random::m_matrix(&mut rng, n);
        let alpha = essential_phase(&m, E, None, &LmiOptions::default(), &tol())
            .unwrap()
            .alpha_star;
        let mut seen = false;
        for k in 1..=24 {
            let beta = FRAC_PI_2 * k as f64 / 24.0;
            if (beta - alpha).abs() < 1e-3 {
                continue;
            }
            let ok = lmi_feasible(&m, beta, &LmiOptions::default(), &tol()).unwrap().feasible;
            assert!(!(seen && !ok), "feasible below {beta} but not at it");
            assert_eq!(ok, beta > alpha, "beta {beta}, alpha* {alpha}");
            seen |= ok;
        }
    }
}

#[test]
fn diagonal_similarity_leaves_the_essential_phase_unchanged() {
    for i in 0..8 {
        let mut rng = trial_rng(7, i);
        let n = rng.random_range(2..=4);
        let m = random::m_matrix(&mut rng, n);
        let e: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..5.0)).collect();
        let scaled = RMatrix::from_fn(n, n, |r, c| m[(r, c)] * e[c] / e[r]);
        let a = essential_phase(&m, E, None, &LmiOptions::default(), &tol())
            .unwrap()
            .alpha_star;
        let b = essential_phase(&scaled, E, None, &LmiOptions::default(), &tol())
            .unwrap()
            .alpha_star;
        assert!((a - b).abs() <= 2.0 * E, "{a} vs {b}");
    }
}

#[test]
fn certificates_and_sandwich() {
    for i in 0..10 {
        let mut rng = trial_rng(8, i);
        let n = rng.random_range(2..=5);
        let m = random::m_matrix(&mut rng, n);
        let r = essential_phase(&m, E, None, &LmiOptions::default(), &tol()).unwrap();
        assert!(r.d_star.iter().all(|&d| d >= 1e-8));
        if r.alpha_star > 0.0 {
            let (f, norm) = certificate_margin(&m, &r.d_star, r.alpha_star);
            assert!(f >= -tol().eps_psd * norm);
        } else {
            // DM itself is symmetric positive semidefinite.
            let dm = RMatrix::from_fn(n, n, |i, j| r.d_star[i] * m[(i, j)]);
            assert!((&dm - dm.transpose()).norm() <= 1e-9 * dm.norm());
        }
        let lower = eigen_angle_lower_bound(&m, &tol()).unwrap();
        let p = perron_scaling(&m, &tol()).unwrap();
        let upper = scaled_upper_phase(&m, &p.d, &tol()).unwrap();
        assert!(lower - E <= r.alpha_star && r.alpha_star <= upper + E);
        // Each halving step exactly halves the bracket.
        let w0 = r.bracket[0][1] - r.bracket[0][0];
        for (k, b) in r.bracket.iter().enumerate() {
            let expected = w0 / 2f64.powi(k as i32);
            assert!(((b[1] - b[0]) - expected).abs() <= 1e-12 * w0);
        }
    }
}

#[test]
fn laplacian_bisection_matches_the_analytic_value() {
    for i in 0..10 {
        let mut rng = trial_rng(9, i);
        let n = rng.random_range(2..=5);
        let g = random::strongly_connected(&mut rng, n, 0.3);
        let analytic = laplacian_essential_phase(&g, &tol()).unwrap().phi_ess;
        let r = essential_phase(&laplacian_real(&g), E, None, &LmiOptions::default(), &tol()).unwrap();
        assert!((r.alpha_star - analytic).abs() <= 2e-5 + 2.0 * E);
    }
}

#[test]
fn block_bounds_hold_with_bisection() {
    for i in 0..6 {
        let mut rng = trial_rng(10, i);
        let sizes: Vec<usize> = (0..2).map(|_| rng.random_range(1..=3)).collect();
        let g = random::rooted_components(&mut rng, &sizes);
        let rep = component_phase_bounds(&g, Some(E), &tol()).unwrap();
        assert_eq!(rep.blocks.len(), 2);
        for b in &rep.blocks[1..] {
            assert!(b.phi_ess <= b.upper_bound + 2.0 * E, "{b:?}");
            assert!(b.scaled <= b.upper_bound + 1e-9, "{b:?}");
        }
    }
}

#[test]
fn chain_blocks() {
    let g = parse_graph("0 1 1\n").unwrap();
    let f = scc_frobenius(&g);
    assert_eq!(f.blocks, vec![vec![0], vec![1]]);
    let rep = component_phase_bounds(&g, None, &tol()).unwrap();
    assert_eq!(rep.blocks[1].phi_ess, 0.0);
    assert_eq!(rep.blocks[1].upper_bound, 0.0);
}
