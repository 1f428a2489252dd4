//! Seeded random instances for the property suites.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::essential::RMatrix;
use crate::graphs::{Edge, WeightedDigraph};
use crate::numerics::{c, cis, diag, CMatrix};

/// Independent stream for trial `index` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(index.wrapping_add(0x9e37_79b9))))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn gaussian<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Haar-like unitary from the QR factor of a Gaussian matrix.
pub fn unitary<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    let qr = gaussian(rng, n, n).qr();
    let (q, r) = qr.unpack();
    // Fix the phases of R's diagonal so Q's distribution does not depend on the QR convention.
    let phases: Vec<_> = (0..n)
        .map(|i| {
            let d = r[(i, i)];
            if d.norm() > 0.0 {
                d / d.norm()
            } else {
                c(1.0, 0.0)
            }
        })
        .collect();
    q * diag(&phases)
}

/// Nonsingular matrix with singular values in `[1, cond]`.
pub fn nonsingular<R: Rng>(rng: &mut R, n: usize, cond: f64) -> CMatrix {
    let u = unitary(rng, n);
    let v = unitary(rng, n);
    let s: Vec<_> = (0..n).map(|_| c(rng.random_range(1.0..=cond), 0.0)).collect();
    u * diag(&s) * v.adjoint()
}

/// `T* diag(e^{j theta}) T` with `theta_i` uniform in `[lo, hi]`; returns the
/// matrix and the planted phases sorted descending.
pub fn sectorial<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> (CMatrix, Vec<f64>) {
    quasi_sectorial(rng, n, n, lo, hi)
}

/// Rank-`r` quasi-sectorial `T* diag(0, e^{j theta}) T`.
pub fn quasi_sectorial<R: Rng>(rng: &mut R, n: usize, r: usize, lo: f64, hi: f64) -> (CMatrix, Vec<f64>) {
    let mut theta: Vec<f64> = (0..r)
        .map(|_| if hi > lo { rng.random_range(lo..=hi) } else { lo })
        .collect();
    let t = nonsingular(rng, n, 10.0);
    let mut d = vec![c(0.0, 0.0); n - r];
    d.extend(theta.iter().map(|&x| cis(x)));
    theta.sort_by(|a, b| b.total_cmp(a));
    (t.adjoint() * diag(&d) * &t, theta)
}

/// A random phase interval of width in `[min_width, max_width]`.
pub fn interval<R: Rng>(rng: &mut R, min_width: f64, max_width: f64) -> (f64, f64) {
    let centre = rng.random_range(-PI..PI);
    let w = rng.random_range(min_width..=max_width);
    (centre - w / 2.0, centre + w / 2.0)
}

/// `e^{j theta_0} j H` for a random Hermitian `H` of rank `r` with both signs.
pub fn rotated_hermitian<R: Rng>(rng: &mut R, n: usize, r: usize, theta0: f64) -> CMatrix {
    let u = unitary(rng, n);
    let mut eig = vec![c(0.0, 0.0); n];
    for (k, e) in eig.iter_mut().take(r).enumerate() {
        let mag = rng.random_range(0.5..2.0);
        *e = c(if k % 2 == 0 { mag } else { -mag }, 0.0);
    }
    let h = &u * diag(&eig) * u.adjoint();
    h * (cis(theta0) * c(0.0, 1.0))
}

/// Full-column-rank `n x k` matrix.
pub fn full_column_rank<R: Rng>(rng: &mut R, n: usize, k: usize) -> CMatrix {
    let t = nonsingular(rng, n, 10.0);
    t.columns(0, k).into_owned()
}

/// Strongly connected digraph: a Hamiltonian cycle plus random chords.
pub fn strongly_connected<R: Rng>(rng: &mut R, n: usize, density: f64) -> WeightedDigraph {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    let mut w = RMatrix::zeros(n, n);
    for k in 0..n {
        let (a, b) = (perm[k], perm[(k + 1) % n]);
        if a != b {
            w[(a, b)] = rng.random_range(0.2..2.0);
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && w[(i, j)] == 0.0 && rng.random_bool(density) {
                w[(i, j)] = rng.random_range(0.2..2.0);
            }
        }
    }
    graph_from_weights(&w)
}

/// Weight-balanced strongly connected digraph built as a sum of weighted cycles.
pub fn balanced<R: Rng>(rng: &mut R, n: usize, cycles: usize) -> WeightedDigraph {
    let mut w = RMatrix::zeros(n, n);
    for k in 0..cycles.max(1) {
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        // The first cycle is Hamiltonian; later ones use a random subset.
        let len = if k == 0 { n } else { rng.random_range(2..=n) };
        let weight = rng.random_range(0.2..2.0);
        for s in 0..len {
            let (a, b) = (perm[s], perm[(s + 1) % len]);
            w[(a, b)] += weight;
        }
    }
    graph_from_weights(&w)
}

/// Symmetric weights: an undirected connected graph.
pub fn undirected<R: Rng>(rng: &mut R, n: usize, density: f64) -> WeightedDigraph {
    let mut w = RMatrix::zeros(n, n);
    for k in 1..n {
        let parent = rng.random_range(0..k);
        let x = rng.random_range(0.2..2.0);
        w[(k, parent)] = x;
        w[(parent, k)] = x;
    }
    for i in 0..n {
        for j in i + 1..n {
            if w[(i, j)] == 0.0 && rng.random_bool(density) {
                let x = rng.random_range(0.2..2.0);
                w[(i, j)] = x;
                w[(j, i)] = x;
            }
        }
    }
    graph_from_weights(&w)
}

/// A digraph with a spanning tree and several strongly connected components.
/// Component `k > 0` receives edges from earlier components.
pub fn rooted_components<R: Rng>(rng: &mut R, sizes: &[usize]) -> WeightedDigraph {
    let n: usize = sizes.iter().sum();
    let mut w = RMatrix::zeros(n, n);
    let mut offset = 0;
    let mut starts = Vec::new();
    for &size in sizes {
        let part = strongly_connected(rng, size, 0.3);
        for e in part.edges() {
            w[(offset + e.src, offset + e.dst)] = e.weight;
        }
        starts.push(offset);
        offset += size;
    }
    for k in 1..sizes.len() {
        let from = rng.random_range(0..k);
        let src = starts[from] + rng.random_range(0..sizes[from]);
        let dst = starts[k] + rng.random_range(0..sizes[k]);
        w[(src, dst)] = rng.random_range(0.2..2.0);
        // Occasional extra links from earlier blocks.
        for _ in 0..rng.random_range(0..3) {
            let src = rng.random_range(0..starts[k]);
            let dst = starts[k] + rng.random_range(0..sizes[k]);
            w[(src, dst)] = rng.random_range(0.2..2.0);
        }
    }
    graph_from_weights(&w)
}

/// Edges `i -> j` for every positive `w[(i, j)]`.
pub fn graph_from_weights(w: &RMatrix) -> WeightedDigraph {
    let n = w.nrows();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && w[(i, j)] > 0.0 {
                edges.push(Edge {
                    src: i,
                    dst: j,
                    weight: w[(i, j)],
                });
            }
        }
    }
    WeightedDigraph::new(n, edges).expect("generated graph is valid")
}

/// Nonsingular irreducible M-matrix `sI - A` with `A > 0` on a random
/// strongly connected pattern.
pub fn m_matrix<R: Rng>(rng: &mut R, n: usize) -> RMatrix {
    let g = strongly_connected(rng, n, 0.5);
    let mut a = RMatrix::zeros(n, n);
    for e in g.edges() {
        a[(e.src, e.dst)] = e.weight;
    }
    for i in 0..n {
        a[(i, i)] = rng.random_range(0.0..1.0);
    }
    let rho = crate::numerics::eigenvalues(&crate::numerics::from_real(&a))
        .expect("finite")
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let s = rho * rng.random_range(1.02..1.5);
    RMatrix::identity(n, n) * s - a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = trial_rng(7, 3).random();
        let b: u64 = trial_rng(7, 3).random();
        let other: u64 = trial_rng(7, 4).random();
        assert_eq!(a, b);
        assert_ne!(a, other);
    }

    #[test]
    fn unitary_is_unitary() {
        let mut rng = trial_rng(1, 0);
        let u = unitary(&mut rng, 5);
        assert!((u.adjoint() * &u - CMatrix::identity(5, 5)).norm() < 1e-12);
    }

    #[test]
    fn nonsingular_condition_bound() {
        let mut rng = trial_rng(2, 0);
        let t = nonsingular(&mut rng, 6, 10.0);
        let s = crate::numerics::svd(&t).unwrap().sigma;
        assert!(s[0] / s[5] <= 10.0 + 1e-9);
    }

    #[test]
    fn generated_graphs_have_claimed_structure() {
        let mut rng = trial_rng(3, 0);
        let tol = crate::numerics::Tolerances::default();
        for n in 2..7 {
            assert!(crate::graphs::scc_frobenius(&strongly_connected(&mut rng, n, 0.3)).strongly_connected);
            let b = balanced(&mut rng, n, 3);
            assert!(crate::graphs::is_weight_balanced(&b, &tol));
            assert!(crate::graphs::scc_frobenius(&b).strongly_connected);
        }
        let g = rooted_components(&mut rng, &[2, 3, 1]);
        let f = crate::graphs::scc_frobenius(&g);
        assert!(f.spanning_tree);
        assert_eq!(f.block_sizes, vec![2, 3, 1]);
    }
}
