//! Matching-decomposition strategy for the singleton-intersection promise
//! `|A| = |B| = k`, `|A ∩ B| = 1`, `A ∪ B = [2k − 1]`.
//!
//! The bipartite graph on k-subsets (edges = singleton intersections) is
//! k-regular, so it splits into k perfect matchings. A shared index `r`
//! picks matching `M_r`; each party outputs its singleton intersection with
//! its partner in `M_r`.

use std::collections::HashMap;

use num_traits::One;

use crate::error::{Error, Result};
use crate::model::{Side, Subset};
use crate::rational::{count_ratio, Rational};

/// Cap on `C(n, k)` for graph construction.
pub const MAX_VERTICES: u64 = 10_000;

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// All k-subsets of `[n]` in lexicographic order, as bitmasks.
fn k_subset_masks(n: usize, k: usize) -> Vec<u64> {
    let mut out = Vec::new();
    let mut comb: Vec<usize> = (0..k).collect();
    loop {
        out.push(comb.iter().fold(0u64, |m, &i| m | 1 << i));
        let Some(pos) = (0..k).rev().find(|&i| comb[i] < n - k + i) else {
            return out;
        };
        comb[pos] += 1;
        for j in pos + 1..k {
            comb[j] = comb[j - 1] + 1;
        }
    }
}

/// The singleton-intersection graph. Left and right vertex lists coincide:
/// all k-subsets of `[n]` in lexicographic order.
#[derive(Clone, Debug)]
pub struct IntersectionGraph {
    n: usize,
    k: usize,
    masks: Vec<u64>,
    index: HashMap<u64, usize>,
    adj: Vec<Vec<usize>>,
}

pub fn build_intersection_graph(n: usize) -> Result<IntersectionGraph> {
    if n < 3 || n.is_multiple_of(2) {
        return Err(Error::invalid(format!("n must be odd and at least 3, got {n}")));
    }
    let k = n.div_ceil(2);
    let size = binomial(n as u64, k as u64);
    if size > MAX_VERTICES {
        return Err(Error::limit(format!("C({n}, {k}) vertices per side"), size, MAX_VERTICES));
    }
    let masks = k_subset_masks(n, k);
    let index: HashMap<u64, usize> = masks.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    let full = (1u64 << n) - 1;
    let adj: Vec<Vec<usize>> = masks
        .iter()
        .map(|&a| {
            // B = complement(A) plus one element of A
            let rest = full & !a;
            let mut nbrs: Vec<usize> = (0..n)
                .filter(|&i| a >> i & 1 == 1)
                .map(|i| index[&(rest | 1 << i)])
                .collect();
            nbrs.sort_unstable();
            nbrs
        })
        .collect();

    let graph = IntersectionGraph { n, k, masks, index, adj };
    graph.check_regular()?;
    Ok(graph)
}

impl IntersectionGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn vertex_count(&self) -> usize {
        self.masks.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }

    pub fn vertex(&self, id: usize) -> Subset {
        Subset::from_mask(self.n, self.masks[id]).expect("valid mask")
    }

    pub fn id_of(&self, s: &Subset) -> Option<usize> {
        if s.n() != self.n {
            return None;
        }
        self.index.get(&s.to_mask()?).copied()
    }

    /// Right neighbours of left vertex `id`, ascending.
    pub fn neighbors(&self, id: usize) -> &[usize] {
        &self.adj[id]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, vs)| vs.iter().map(move |&v| (u, v)))
    }

    /// Degree of every left and right vertex.
    pub fn degrees(&self) -> (Vec<usize>, Vec<usize>) {
        let left = self.adj.iter().map(Vec::len).collect();
        let mut right = vec![0; self.masks.len()];
        for (_, v) in self.edges() {
            right[v] += 1;
        }
        (left, right)
    }

    fn check_regular(&self) -> Result<()> {
        let (left, right) = self.degrees();
        if let Some(d) = left.iter().chain(&right).find(|&&d| d != self.k) {
            return Err(Error::invariant(format!("vertex of degree {d} in a {}-regular graph", self.k)));
        }
        Ok(())
    }
}

/// `k` perfect matchings partitioning the edges of a [`IntersectionGraph`].
#[derive(Clone, Debug)]
pub struct MatchingDecomposition {
    n: usize,
    k: usize,
    masks: Vec<u64>,
    index: HashMap<u64, usize>,
    /// `forward[r][left] = right` in matching `r` (0-based here).
    forward: Vec<Vec<usize>>,
    backward: Vec<Vec<usize>>,
}

/// Kuhn's augmenting path search from `start`, iterative.
fn augment(start: usize, adj: &[Vec<usize>], owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
    let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
    let mut via: Vec<usize> = Vec::new();
    while let Some((u, next)) = stack.last_mut() {
        let u = *u;
        if *next == adj[u].len() {
            stack.pop();
            via.pop();
            continue;
        }
        let v = adj[u][*next];
        *next += 1;
        if seen[v] {
            continue;
        }
        seen[v] = true;
        via.push(v);
        match owner[v] {
            None => {
                for (&(left, _), &right) in stack.iter().zip(&via) {
                    owner[right] = Some(left);
                }
                return true;
            }
            Some(prev) => stack.push((prev, 0)),
        }
    }
    false
}

/// Splits the graph into `k` perfect matchings by repeatedly extracting a
/// maximum matching (lexicographic augmenting-path scan) and deleting its
/// edges. Deterministic for a given graph.
pub fn decompose(graph: &IntersectionGraph) -> Result<MatchingDecomposition> {
    let size = graph.vertex_count();
    let mut remaining = graph.adj.clone();
    let mut forward = Vec::with_capacity(graph.k);
    let mut backward = Vec::with_capacity(graph.k);
    for round in 0..graph.k {
        let mut owner: Vec<Option<usize>> = vec![None; size];
        let mut seen = vec![false; size];
        for u in 0..size {
            seen.iter_mut().for_each(|s| *s = false);
            if !augment(u, &remaining, &mut owner, &mut seen) {
                return Err(Error::invariant(format!(
                    "no perfect matching in round {} of {} (left vertex {u} unmatched)",
                    round + 1,
                    graph.k
                )));
            }
        }
        let mut fwd = vec![0; size];
        let bwd: Vec<usize> = owner.iter().map(|o| o.expect("perfect")).collect();
        for (v, &u) in bwd.iter().enumerate() {
            fwd[u] = v;
        }
        for (u, nbrs) in remaining.iter_mut().enumerate() {
            nbrs.retain(|&v| v != fwd[u]);
        }
        forward.push(fwd);
        backward.push(bwd);
    }
    let decomp = MatchingDecomposition {
        n: graph.n,
        k: graph.k,
        masks: graph.masks.clone(),
        index: graph.index.clone(),
        forward,
        backward,
    };
    decomp.verify(graph)?;
    Ok(decomp)
}

impl MatchingDecomposition {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn vertex(&self, id: usize) -> Subset {
        Subset::from_mask(self.n, self.masks[id]).expect("valid mask")
    }

    pub fn vertex_count(&self) -> usize {
        self.masks.len()
    }

    /// Matching `r` (1-based) as `left id -> right id`.
    pub fn matching(&self, r: usize) -> &[usize] {
        &self.forward[r - 1]
    }

    /// Matching `r` as explicit set pairs, ordered by left vertex.
    pub fn matching_pairs(&self, r: usize) -> Vec<(Subset, Subset)> {
        self.matching(r)
            .iter()
            .enumerate()
            .map(|(u, &v)| (self.vertex(u), self.vertex(v)))
            .collect()
    }

    fn id_of(&self, s: &Subset) -> Result<usize> {
        if s.n() != self.n || s.len() != self.k {
            return Err(Error::invalid(format!(
                "input {s} is not a {}-subset of [{}]",
                self.k, self.n
            )));
        }
        Ok(self.index[&s.to_mask().expect("n <= 64")])
    }

    /// Checks the partition property against the graph: each matching is a
    /// bijection over graph edges and every edge is used exactly once.
    pub fn verify(&self, graph: &IntersectionGraph) -> Result<()> {
        let mut uses: HashMap<(usize, usize), usize> = graph.edges().map(|e| (e, 0)).collect();
        for (r, fwd) in self.forward.iter().enumerate() {
            let mut hit = vec![false; fwd.len()];
            for (u, &v) in fwd.iter().enumerate() {
                let slot = uses
                    .get_mut(&(u, v))
                    .ok_or_else(|| Error::invariant(format!("matching {} uses non-edge ({u}, {v})", r + 1)))?;
                *slot += 1;
                if std::mem::replace(&mut hit[v], true) {
                    return Err(Error::invariant(format!("matching {} is not injective", r + 1)));
                }
                if self.backward[r][v] != u {
                    return Err(Error::invariant("forward and backward maps disagree"));
                }
            }
        }
        if let Some((e, c)) = uses.iter().find(|(_, &c)| c != 1) {
            return Err(Error::invariant(format!("edge {e:?} used {c} times")));
        }
        Ok(())
    }

    fn singleton(&self, a: usize, b: usize) -> usize {
        let common = self.masks[a] & self.masks[b];
        debug_assert_eq!(common.count_ones(), 1);
        common.trailing_zeros() as usize + 1
    }

    fn sample_ids(&self, side: Side, id: usize, r: usize) -> usize {
        match side {
            Side::Left => self.singleton(id, self.forward[r - 1][id]),
            Side::Right => self.singleton(self.backward[r - 1][id], id),
        }
    }
}

/// The shared matching index `r ∈ [k]` drawn from `seed`.
pub fn shared_index(seed: u64, k: usize) -> usize {
    rand::Rng::random_range(&mut crate::seed::rng_from(seed), 1..=k)
}

/// One party's output for matching index `r ∈ {1, ..., k}`.
pub fn matching_sample(side: Side, s: &Subset, r: usize, decomp: &MatchingDecomposition) -> Result<usize> {
    if r == 0 || r > decomp.k {
        return Err(Error::invalid(format!("matching index {r} not in 1..={}", decomp.k)));
    }
    let id = decomp.id_of(s)?;
    Ok(decomp.sample_ids(side, id, r))
}

/// Summary of a full enumeration over every promise pair and every `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchingAnalysis {
    pub n: usize,
    pub k: usize,
    /// Error shared by every promise pair, `1 − 1/k`.
    pub error: Rational,
    /// MinHash error on the same inputs, `1 − 1/n`.
    pub minhash_error: Rational,
    pub pairs_checked: usize,
}

/// Enumerates every edge and every matching index, checking that each
/// party's outputs are uniform on its set, that agreement happens exactly
/// when the pair is an edge of `M_r`, and that every pair has error `1 − 1/k`.
pub fn analyze(graph: &IntersectionGraph, decomp: &MatchingDecomposition) -> Result<MatchingAnalysis> {
    let k = decomp.k;
    for id in 0..decomp.vertex_count() {
        for side in [Side::Left, Side::Right] {
            let mut outs: Vec<usize> = (1..=k).map(|r| decomp.sample_ids(side, id, r)).collect();
            outs.sort_unstable();
            if outs != decomp.vertex(id).elements() {
                return Err(Error::invariant(format!(
                    "{side:?} outputs on {} are not uniform",
                    decomp.vertex(id)
                )));
            }
        }
    }
    let expected = Rational::one() - count_ratio(1, k);
    let mut pairs = 0;
    for (u, v) in graph.edges() {
        let mut agree = 0;
        for r in 1..=k {
            let equal = decomp.sample_ids(Side::Left, u, r) == decomp.sample_ids(Side::Right, v, r);
            if equal != (decomp.forward[r - 1][u] == v) {
                return Err(Error::invariant(format!("agreement on edge ({u}, {v}) outside its matching")));
            }
            agree += equal as usize;
        }
        if Rational::one() - count_ratio(agree, k) != expected {
            return Err(Error::invariant(format!("edge ({u}, {v}) agrees {agree} times of {k}")));
        }
        pairs += 1;
    }
    Ok(MatchingAnalysis {
        n: decomp.n,
        k,
        error: expected,
        minhash_error: Rational::one() - count_ratio(1, decomp.n),
        pairs_checked: pairs,
    })
}

/// Builds, decomposes and fully enumerates the strategy for `n`, returning
/// its exact error `1 − 1/k`.
pub fn matching_exact_error(n: usize) -> Result<Rational> {
    let graph = build_intersection_graph(n)?;
    let decomp = decompose(&graph)?;
    Ok(analyze(&graph, &decomp)?.error)
}
