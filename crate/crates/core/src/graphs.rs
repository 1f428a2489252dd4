//! Weighted digraphs and the essential phase of their Laplacians.
//!
//! Edge convention: the line `i j w` is the edge `i -> j` and sets
//! `a_ji = w`, so that `L = D_in - A` has zero row sums.

use std::collections::{BTreeSet, HashSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::essential::{self, LmiOptions, RMatrix};
use crate::numerics::{from_real, real_svd, CMatrix, Tolerances};
use crate::sectorial::{classify, phases_quasi};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedDigraph {
    n: usize,
    edges: Vec<Edge>,
}

impl WeightedDigraph {
    /// Validated digraph: positive weights, no self-loops, no parallel edges.
    pub fn new(n: usize, edges: Vec<Edge>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (k, e) in edges.iter().enumerate() {
            if e.src >= n || e.dst >= n {
                return Err(Error::BadLine {
                    line: k + 1,
                    message: format!("edge {} -> {} out of range for {n} nodes", e.src, e.dst),
                });
            }
            if e.src == e.dst {
                return Err(Error::BadLine {
                    line: k + 1,
                    message: format!("self-loop at node {}", e.src),
                });
            }
            if !(e.weight > 0.0 && e.weight.is_finite()) {
                return Err(Error::NonPositiveWeight { line: k + 1 });
            }
            if !seen.insert((e.src, e.dst)) {
                return Err(Error::DuplicateEdge {
                    line: k + 1,
                    src: e.src,
                    dst: e.dst,
                });
            }
        }
        Ok(Self { n, edges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Every edge reversed.
    pub fn reversed(&self) -> Self {
        Self {
            n: self.n,
            edges: self
                .edges
                .iter()
                .map(|e| Edge {
                    src: e.dst,
                    dst: e.src,
                    weight: e.weight,
                })
                .collect(),
        }
    }

    /// The digraph whose Laplacian is `l` (off-diagonals must be nonpositive).
    pub fn from_laplacian(l: &RMatrix) -> Result<Self> {
        if !l.is_square() {
            return Err(Error::NonSquare {
                rows: l.nrows(),
                cols: l.ncols(),
            });
        }
        let n = l.nrows();
        let mut edges = Vec::new();
        for j in 0..n {
            for i in 0..n {
                if i == j || l[(j, i)] == 0.0 {
                    continue;
                }
                if l[(j, i)] > 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "Laplacian entry ({j}, {i}) is positive"
                    )));
                }
                edges.push(Edge {
                    src: i,
                    dst: j,
                    weight: -l[(j, i)],
                });
            }
        }
        Self::new(n, edges)
    }

    fn induced(&self, nodes: &[usize]) -> Self {
        let index: std::collections::HashMap<usize, usize> = nodes.iter().enumerate().map(|(k, &v)| (v, k)).collect();
        let edges = self
            .edges
            .iter()
            .filter_map(|e| {
                Some(Edge {
                    src: *index.get(&e.src)?,
                    dst: *index.get(&e.dst)?,
                    weight: e.weight,
                })
            })
            .collect();
        Self { n: nodes.len(), edges }
    }
}

/// Parses `src dst weight` lines; `#` comments and blank lines are skipped and
/// an optional `n <count>` header fixes the node count.
pub fn parse_graph(text: &str) -> Result<WeightedDigraph> {
    let mut declared = None;
    let mut edges = Vec::new();
    let mut lines = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let lineno = k + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = |message: String| Error::BadLine { line: lineno, message };
        if fields[0] == "n" {
            if fields.len() != 2 || declared.is_some() || !edges.is_empty() {
                return Err(bad("header must be a single leading 'n <count>' line".into()));
            }
            declared = Some(
                fields[1]
                    .parse::<usize>()
                    .map_err(|_| bad(format!("bad node count '{}'", fields[1])))?,
            );
            continue;
        }
        if fields.len() != 3 {
            return Err(bad(format!("expected 'src dst weight', got {} fields", fields.len())));
        }
        let node = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("bad node id '{s}'")));
        let (src, dst) = (node(fields[0])?, node(fields[1])?);
        let weight: f64 = fields[2]
            .parse()
            .map_err(|_| bad(format!("bad weight '{}'", fields[2])))?;
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::NonPositiveWeight { line: lineno });
        }
        if src == dst {
            return Err(bad(format!("self-loop at node {src}")));
        }
        if edges.iter().any(|e: &Edge| e.src == src && e.dst == dst) {
            return Err(Error::DuplicateEdge { line: lineno, src, dst });
        }
        edges.push(Edge { src, dst, weight });
        lines.push(lineno);
    }
    let max_id = edges.iter().map(|e| e.src.max(e.dst) + 1).max().unwrap_or(0);
    let n = match declared {
        Some(n) if n < max_id => {
            return Err(Error::Parse(format!(
                "header declares {n} nodes but node id {} appears",
                max_id - 1
            )))
        }
        Some(n) => n,
        None => max_id,
    };
    if n == 0 {
        return Err(Error::Parse("graph has no nodes".into()));
    }
    WeightedDigraph::new(n, edges).map_err(|e| match e {
        Error::BadLine { line, message } => Error::BadLine {
            line: lines.get(line - 1).copied().unwrap_or(line),
            message,
        },
        other => other,
    })
}

/// `l_ii = sum_j a_ij`, `l_ij = -a_ij`.
pub fn laplacian_real(g: &WeightedDigraph) -> RMatrix {
    let mut l = RMatrix::zeros(g.n, g.n);
    for e in &g.edges {
        l[(e.dst, e.src)] -= e.weight;
        l[(e.dst, e.dst)] += e.weight;
    }
    l
}

pub fn laplacian(g: &WeightedDigraph) -> CMatrix {
    from_real(&laplacian_real(g))
}

/// `M - diag(M 1)`: the Laplacian obtained by lowering the diagonal until every
/// row sums to zero.
pub fn associated_laplacian(m: &RMatrix) -> RMatrix {
    let mut l = m.clone();
    for i in 0..m.nrows() {
        let s: f64 = m.row(i).sum();
        l[(i, i)] -= s;
    }
    l
}

/// Frobenius normal form from the strongly connected components.
#[derive(Debug, Clone, Serialize)]
pub struct FrobeniusForm {
    /// `permutation[k]` is the original node placed at position `k`.
    pub permutation: Vec<usize>,
    pub block_sizes: Vec<usize>,
    /// Original node ids of each block, ascending.
    pub blocks: Vec<Vec<usize>>,
    pub root_block_index: usize,
    pub strongly_connected: bool,
    pub spanning_tree: bool,
}

impl FrobeniusForm {
    /// `P L P^T` in the block order.
    pub fn permute(&self, l: &RMatrix) -> RMatrix {
        let p = &self.permutation;
        RMatrix::from_fn(l.nrows(), l.ncols(), |i, j| l[(p[i], p[j])])
    }

    /// Offsets of the blocks in the permuted order.
    pub fn offsets(&self) -> Vec<usize> {
        self.block_sizes
            .iter()
            .scan(0, |acc, s| {
                let o = *acc;
                *acc += s;
                Some(o)
            })
            .collect()
    }
}

fn tarjan(n: usize, adj: &[Vec<usize>]) -> Vec<usize> {
    // Iterative Tarjan; returns the component id of every node.
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![usize::MAX; n];
    let mut stack = Vec::new();
    let mut counter = 0;
    let mut ncomp = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut next)) = call.last_mut() {
            if *next < adj[v].len() {
                let w = adj[v][*next];
                *next += 1;
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    while let Some(w) = stack.pop() {
                        on_stack[w] = false;
                        comp[w] = ncomp;
                        if w == v {
                            break;
                        }
                    }
                    ncomp += 1;
                }
            }
        }
    }
    comp
}

/// Strongly connected components in topological order of the condensation,
/// sources first; ties go to the component with the smallest node id.
pub fn scc_frobenius(g: &WeightedDigraph) -> FrobeniusForm {
    let n = g.n;
    let mut adj = vec![Vec::new(); n];
    for e in &g.edges {
        adj[e.src].push(e.dst);
    }
    adj.iter_mut().for_each(|a| a.sort_unstable());
    let comp = tarjan(n, &adj);
    let ncomp = comp.iter().copied().max().map_or(0, |m| m + 1);
    let mut members = vec![Vec::new(); ncomp];
    for v in 0..n {
        members[comp[v]].push(v);
    }
    let mut succ = vec![BTreeSet::new(); ncomp];
    let mut indeg = vec![0usize; ncomp];
    for e in &g.edges {
        let (a, b) = (comp[e.src], comp[e.dst]);
        if a != b && succ[a].insert(b) {
            indeg[b] += 1;
        }
    }
    let sources = indeg.iter().filter(|&&d| d == 0).count();
    let mut ready: BTreeSet<(usize, usize)> = (0..ncomp)
        .filter(|&c| indeg[c] == 0)
        .map(|c| (members[c][0], c))
        .collect();
    let mut order = Vec::with_capacity(ncomp);
    while let Some(first) = ready.pop_first() {
        let c = first.1;
        order.push(c);
        for &s in &succ[c] {
            indeg[s] -= 1;
            if indeg[s] == 0 {
                ready.insert((members[s][0], s));
            }
        }
    }
    let blocks: Vec<Vec<usize>> = order.iter().map(|&c| members[c].clone()).collect();
    FrobeniusForm {
        permutation: blocks.iter().flatten().copied().collect(),
        block_sizes: blocks.iter().map(Vec::len).collect(),
        strongly_connected: ncomp == 1,
        spanning_tree: sources == 1,
        root_block_index: 0,
        blocks,
    }
}

/// `1^T L = 0`, i.e. in-degree equals out-degree at every node.
pub fn is_weight_balanced(g: &WeightedDigraph, tol: &Tolerances) -> bool {
    let l = laplacian_real(g);
    let scale = l.norm();
    let cols = l.row_sum();
    cols.norm() <= tol.eps_rank * scale
}

/// Positive `v` with `v^T L = 0`, `||v||_1 = n`.
pub fn left_perron_vector(g: &WeightedDigraph, tol: &Tolerances) -> Result<Vec<f64>> {
    if !scc_frobenius(g).strongly_connected {
        return Err(Error::NotStronglyConnected);
    }
    let n = g.n;
    if n == 1 || is_weight_balanced(g, tol) {
        return Ok(vec![1.0; n]);
    }
    let l = laplacian_real(g);
    let top = (0..n).map(|i| l[(i, i)]).fold(0.0, f64::max);
    let pt = (RMatrix::identity(n, n) - &l / (2.0 * top)).transpose();
    let mut v = nalgebra::DVector::from_element(n, 1.0);
    let mut converged = false;
    for _ in 0..100_000 {
        let mut next = &pt * &v;
        next *= n as f64 / next.sum();
        let diff = (&next - &v).amax();
        v = next;
        if diff <= 1e-15 * n as f64 {
            converged = true;
            break;
        }
    }
    let residual = |v: &nalgebra::DVector<f64>| (l.transpose() * v).norm();
    if !converged || residual(&v) > tol.eps_rank * n as f64 * l.norm() {
        let svd = real_svd(&l.transpose())?;
        let mut w = svd.v.column(n - 1).into_owned();
        w *= n as f64 / w.sum();
        v = w;
    }
    if v.iter().any(|&x| x <= 0.0) {
        return Err(Error::InternalClassificationFailure(
            "left null vector of the Laplacian is not positive".into(),
        ));
    }
    Ok(v.iter().copied().collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct LaplacianPhase {
    /// `phī_ess(L) = phī(VL)`.
    pub phi_ess: f64,
    /// `phi_ess(L) = -phī_ess(L)` since `L` is real.
    pub lower: f64,
    pub v: Vec<f64>,
}

fn scaled_max_phase(l: &RMatrix, v: &[f64], tol: &Tolerances) -> Result<f64> {
    let n = l.nrows();
    let vl = RMatrix::from_fn(n, n, |i, j| v[i] * l[(i, j)]);
    if vl.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    let vl = from_real(&vl);
    if !classify(&vl, tol)?.kind.is_quasi() {
        return Err(Error::InternalClassificationFailure(
            "scaled Laplacian is not quasi-sectorial".into(),
        ));
    }
    let p = phases_quasi(&vl, tol)?;
    Ok(if p.is_empty() { 0.0 } else { p.max().max(0.0) })
}

/// Essential phase of the Laplacian of a strongly connected digraph,
/// attained at the scaling by its left Perron vector.
pub fn laplacian_essential_phase(g: &WeightedDigraph, tol: &Tolerances) -> Result<LaplacianPhase> {
    let v = left_perron_vector(g, tol)?;
    let phi = scaled_max_phase(&laplacian_real(g), &v, tol)?;
    Ok(LaplacianPhase {
        phi_ess: phi,
        lower: -phi,
        v,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockBound {
    pub block: usize,
    pub size: usize,
    pub nodes: Vec<usize>,
    /// Essential phase of the diagonal block (exact for the root block; the
    /// Perron-scaled value or the bisection value otherwise).
    pub phi_ess: f64,
    /// `phi_ess` of the associated Laplacian of the block.
    pub upper_bound: f64,
    /// `phī(D_k^{-1} L_kk D_k)` with `D_k = diag(v_k)^{-1/2}`.
    pub scaled: f64,
    pub method: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct DirectednessReport {
    pub n: usize,
    pub strongly_connected: bool,
    pub spanning_tree: bool,
    pub weight_balanced: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_ess: Option<f64>,
    pub blocks: Vec<BlockBound>,
}

/// Graph-level summary; `phi_ess` is present for strongly connected graphs.
pub fn directedness(g: &WeightedDigraph, tol: &Tolerances) -> Result<DirectednessReport> {
    let form = scc_frobenius(g);
    let phi = if form.strongly_connected {
        Some(laplacian_essential_phase(g, tol)?.phi_ess)
    } else {
        None
    };
    Ok(DirectednessReport {
        n: g.n,
        strongly_connected: form.strongly_connected,
        spanning_tree: form.spanning_tree,
        weight_balanced: is_weight_balanced(g, tol),
        phi_ess: phi,
        blocks: vec![],
    })
}

/// Per-block phase bounds for a digraph with a spanning tree. With
/// `bisection = Some(e)` non-root blocks also get the essential phase of
/// `L_kk` computed to accuracy `e`.
pub fn component_phase_bounds(
    g: &WeightedDigraph,
    bisection: Option<f64>,
    tol: &Tolerances,
) -> Result<DirectednessReport> {
    let form = scc_frobenius(g);
    if !form.spanning_tree {
        return Err(Error::NoSpanningTree);
    }
    let l = laplacian_real(g);
    let blocks = form
        .blocks
        .par_iter()
        .enumerate()
        .map(|(k, nodes)| block_bound(g, &l, k, nodes, bisection, tol))
        .collect::<Result<Vec<_>>>()?;
    Ok(DirectednessReport {
        n: g.n,
        strongly_connected: form.strongly_connected,
        spanning_tree: true,
        weight_balanced: is_weight_balanced(g, tol),
        phi_ess: blocks.first().filter(|_| form.strongly_connected).map(|b| b.phi_ess),
        blocks,
    })
}

fn block_bound(
    g: &WeightedDigraph,
    l: &RMatrix,
    k: usize,
    nodes: &[usize],
    bisection: Option<f64>,
    tol: &Tolerances,
) -> Result<BlockBound> {
    let sub = g.induced(nodes);
    let lkk = RMatrix::from_fn(nodes.len(), nodes.len(), |i, j| l[(nodes[i], nodes[j])]);
    let assoc = laplacian_essential_phase(&sub, tol)?;
    let entry = |phi: f64, scaled: f64, method: &str| BlockBound {
        block: k,
        size: nodes.len(),
        nodes: nodes.to_vec(),
        phi_ess: phi,
        upper_bound: assoc.phi_ess,
        scaled,
        method: method.into(),
    };
    if k == 0 {
        return Ok(entry(assoc.phi_ess, assoc.phi_ess, "root_laplacian"));
    }
    let scaled = scaled_max_phase(&lkk, &assoc.v, tol)?;
    match bisection {
        Some(e) if nodes.len() > 1 => {
            let r = essential::essential_phase(&lkk, e, None, &LmiOptions::default(), tol)?;
            Ok(entry(r.alpha_star, scaled, "bisection"))
        }
        _ => Ok(entry(scaled, scaled, "perron_scaled")),
    }
}
