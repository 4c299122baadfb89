//! Exact search for maximum permutation codes.
//!
//! The code search is a maximum-clique problem on the graph whose vertices
//! are the `M!` permutations and whose edges join words at distance `>= d`.
//! Hamming distance is invariant under relabelling symbols and under
//! conjugation, so the identity can always be placed in the code, and the
//! second word can be restricted to one representative per cycle type.
//! Each remaining subproblem is solved by bitset branch-and-bound with a
//! greedy colouring bound.

use std::time::{Duration, Instant};

use serde::Serialize;

use super::{cardinality_bound, perm, slice_distance, CodeBook, Codeword};
use crate::error::{Error, Result};

/// Largest word length the exact search accepts.
pub const MAX_EXACT_M: usize = 7;

/// Limits on the work a search may do before giving up on a proof.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Budget {
    pub max_nodes: Option<u64>,
    pub max_time: Option<Duration>,
}

impl Budget {
    pub fn unlimited() -> Self {
        Self::default()
    }

    pub fn nodes(n: u64) -> Self {
        Budget {
            max_nodes: Some(n),
            max_time: None,
        }
    }

    pub fn time(t: Duration) -> Self {
        Budget {
            max_nodes: None,
            max_time: Some(t),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchReport {
    #[serde(skip)]
    pub best_code: CodeBook,
    pub m: usize,
    pub d: usize,
    pub size: usize,
    pub upper_bound: u128,
    pub proven_optimal: bool,
    pub nodes_explored: u64,
    #[serde(serialize_with = "ser_secs")]
    pub time_spent: Duration,
}

fn ser_secs<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

/// Finds a largest permutation code of length `m` and minimum distance `d`.
///
/// When the budget runs out the best code found so far is returned with
/// `proven_optimal = false`. With a node budget (or none) the result is
/// fully deterministic.
pub fn search_max_code(m: usize, d: usize, budget: Budget) -> Result<SearchReport> {
    let upper_bound = cardinality_bound(m, d)?;
    if m > MAX_EXACT_M {
        return Err(Error::Capacity {
            m,
            max: MAX_EXACT_M,
        });
    }
    let start = Instant::now();
    let graph = DistanceGraph::new(m, d);
    let mut solver = Solver::new(&graph, budget, start, upper_bound);
    solver.run();

    let mut words = vec![Codeword::identity(m)];
    for &v in &solver.best {
        words.push(Codeword::from_zero_based(&graph.perms[graph.order[v]])?);
    }
    let best_code = CodeBook::new(m, words)?;
    debug_assert!(best_code.len() as u128 <= upper_bound);
    Ok(SearchReport {
        m,
        d,
        size: best_code.len(),
        best_code,
        upper_bound,
        proven_optimal: !solver.exhausted,
        nodes_explored: solver.nodes,
        time_spent: start.elapsed(),
    })
}

type Bits = Vec<u64>;

fn bit_test(b: &[u64], i: usize) -> bool {
    b[i / 64] >> (i % 64) & 1 == 1
}

fn bit_set(b: &mut [u64], i: usize) {
    b[i / 64] |= 1 << (i % 64);
}

fn bit_clear(b: &mut [u64], i: usize) {
    b[i / 64] &= !(1 << (i % 64));
}

fn bit_count(b: &[u64]) -> usize {
    b.iter().map(|w| w.count_ones() as usize).sum()
}

fn first_bit(b: &[u64]) -> Option<usize> {
    b.iter()
        .enumerate()
        .find(|(_, &w)| w != 0)
        .map(|(i, &w)| i * 64 + w.trailing_zeros() as usize)
}

/// Compatibility graph on the permutations far enough from the identity.
struct DistanceGraph {
    perms: Vec<Vec<u8>>,
    /// Local vertex -> index into `perms` (which is also the lexicographic rank).
    order: Vec<usize>,
    adj: Vec<Bits>,
    /// Conjugacy class id of each local vertex, classes numbered by the
    /// lexicographic rank of their first member.
    class: Vec<usize>,
    words: usize,
}

impl DistanceGraph {
    fn new(m: usize, d: usize) -> Self {
        let perms = perm::all_permutations(m);
        let identity = &perms[0];
        let far: Vec<usize> = (1..perms.len())
            .filter(|&i| slice_distance(&perms[i], identity) >= d)
            .collect();
        let n = far.len();

        let degree: Vec<usize> = far
            .iter()
            .map(|&i| {
                far.iter()
                    .filter(|&&j| slice_distance(&perms[i], &perms[j]) >= d)
                    .count()
            })
            .collect();
        let mut idx: Vec<usize> = (0..n).collect();
        // degree descending, ties by lexicographic rank
        idx.sort_by(|&a, &b| degree[b].cmp(&degree[a]).then(far[a].cmp(&far[b])));
        let order: Vec<usize> = idx.iter().map(|&k| far[k]).collect();

        let words = n.div_ceil(64).max(1);
        let mut adj = vec![vec![0u64; words]; n];
        for a in 0..n {
            for b in a + 1..n {
                if slice_distance(&perms[order[a]], &perms[order[b]]) >= d {
                    bit_set(&mut adj[a], b);
                    bit_set(&mut adj[b], a);
                }
            }
        }

        let mut types: Vec<(Vec<usize>, usize)> = Vec::new();
        for &i in &far {
            let t = perm::cycle_type(&perms[i]);
            if !types.iter().any(|(u, _)| *u == t) {
                types.push((t, i));
            }
        }
        // `far` is in rank order, so classes are already numbered by first member
        let class = order
            .iter()
            .map(|&i| {
                let t = perm::cycle_type(&perms[i]);
                types.iter().position(|(u, _)| *u == t).expect("type recorded")
            })
            .collect();

        DistanceGraph {
            perms,
            order,
            adj,
            class,
            words,
        }
    }

    fn len(&self) -> usize {
        self.order.len()
    }
}

struct Solver<'g> {
    g: &'g DistanceGraph,
    budget: Budget,
    start: Instant,
    /// Target size for the vertices beyond the identity.
    cap: usize,
    best: Vec<usize>,
    current: Vec<usize>,
    nodes: u64,
    exhausted: bool,
}

impl<'g> Solver<'g> {
    fn new(g: &'g DistanceGraph, budget: Budget, start: Instant, upper_bound: u128) -> Self {
        let cap = usize::try_from(upper_bound - 1).unwrap_or(usize::MAX);
        Solver {
            g,
            budget,
            start,
            cap,
            best: Vec::new(),
            current: Vec::new(),
            nodes: 0,
            exhausted: false,
        }
    }

    fn done(&self) -> bool {
        self.exhausted || self.best.len() >= self.cap
    }

    fn run(&mut self) {
        self.seed_incumbent();
        let n = self.g.len();
        let classes = self.g.class.iter().copied().max().map_or(0, |c| c + 1);
        for c in 0..classes {
            if self.done() {
                return;
            }
            let rep = (0..n)
                .filter(|&v| self.g.class[v] == c)
                .min_by_key(|&v| self.g.order[v])
                .expect("non-empty class");
            let mut cand = self.g.adj[rep].clone();
            for v in 0..n {
                if self.g.class[v] < c {
                    bit_clear(&mut cand, v);
                }
            }
            self.current.push(rep);
            if self.current.len() > self.best.len() {
                self.best = self.current.clone();
            }
            self.expand(cand);
            self.current.pop();
        }
    }

    /// Starts from the best of the lexicographic greedy code and the group
    /// codes that apply to this `(M, d)`.
    fn seed_incumbent(&mut self) {
        let g = self.g;
        let n = g.len();
        let mut by_rank: Vec<usize> = (0..n).collect();
        by_rank.sort_by_key(|&v| g.order[v]);
        let mut best: Vec<usize> = Vec::new();
        for v in by_rank {
            if best.iter().all(|&u| bit_test(&g.adj[u], v)) {
                best.push(v);
            }
        }
        let m = g.perms[0].len();
        let mut local = vec![usize::MAX; g.perms.len()];
        for (v, &i) in g.order.iter().enumerate() {
            local[i] = v;
        }
        for group in group_codes(m) {
            if group.len() <= best.len() + 1 {
                continue;
            }
            let members: Vec<usize> = group
                .iter()
                .filter(|p| p.iter().enumerate().any(|(i, &x)| x as usize != i))
                .map(|p| local[perm::rank(p) as usize])
                .collect();
            let valid = members.iter().all(|&v| v != usize::MAX)
                && members.iter().enumerate().all(|(i, &a)| {
                    members[i + 1..].iter().all(|&b| bit_test(&g.adj[a], b))
                });
            if valid {
                best = members;
            }
        }
        best.sort_unstable();
        self.best = best;
    }

    fn out_of_budget(&mut self) -> bool {
        if let Some(max) = self.budget.max_nodes {
            if self.nodes >= max {
                self.exhausted = true;
            }
        }
        if let Some(t) = self.budget.max_time {
            if self.nodes % 256 == 0 && self.start.elapsed() >= t {
                self.exhausted = true;
            }
        }
        self.exhausted
    }

    fn expand(&mut self, mut cand: Bits) {
        self.nodes += 1;
        if self.out_of_budget() {
            return;
        }
        let (verts, colors) = self.color(&cand);
        for k in (0..verts.len()).rev() {
            if self.current.len() + colors[k] <= self.best.len() || self.done() {
                return;
            }
            let v = verts[k];
            self.current.push(v);
            let next: Bits = cand
                .iter()
                .zip(&self.g.adj[v])
                .map(|(a, b)| a & b)
                .collect();
            if next.iter().all(|&w| w == 0) {
                if self.current.len() > self.best.len() {
                    self.best = self.current.clone();
                }
            } else {
                self.expand(next);
            }
            self.current.pop();
            bit_clear(&mut cand, v);
            if self.exhausted {
                return;
            }
        }
    }

    /// Greedy sequential colouring; returns vertices in colour order with
    /// the running colour count (an upper bound on any clique among the
    /// vertices up to that position).
    fn color(&self, cand: &[u64]) -> (Vec<usize>, Vec<usize>) {
        let total = bit_count(cand);
        let mut verts = Vec::with_capacity(total);
        let mut colors = Vec::with_capacity(total);
        let mut uncolored = cand.to_vec();
        let mut k = 0;
        while verts.len() < total {
            k += 1;
            let mut q = uncolored.clone();
            while let Some(v) = first_bit(&q) {
                bit_clear(&mut q, v);
                bit_clear(&mut uncolored, v);
                for (qw, aw) in q.iter_mut().zip(&self.g.adj[v]) {
                    *qw &= !aw;
                }
                verts.push(v);
                colors.push(k);
            }
        }
        debug_assert_eq!(self.g.words, cand.len());
        (verts, colors)
    }
}

/// Permutation groups on `m` points with known minimum distance: the
/// cyclic shifts, the alternating group, the affine line over a prime field
/// and the projective line over a prime field. Each contains the identity.
fn group_codes(m: usize) -> Vec<Vec<Vec<u8>>> {
    let mut out = Vec::new();
    out.push(
        (0..m)
            .map(|s| (0..m).map(|i| ((i + s) % m) as u8).collect())
            .collect(),
    );
    if m >= 3 {
        out.push(
            perm::all_permutations(m)
                .into_iter()
                .filter(|p| perm::is_even(p))
                .collect(),
        );
    }
    if is_prime(m) {
        out.push(affine_group(m));
    }
    if m >= 3 && is_prime(m - 1) {
        out.push(projective_group(m - 1));
    }
    out
}

fn is_prime(n: usize) -> bool {
    n >= 2 && (2..n).take_while(|k| k * k <= n).all(|k| n % k != 0)
}

fn inv_mod(a: usize, p: usize) -> usize {
    (1..p).find(|&x| a * x % p == 1).expect("nonzero element of a prime field")
}

/// `x -> a x + b` over GF(p), `a != 0`: sharply 2-transitive, distance `p - 1`.
fn affine_group(p: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::with_capacity(p * (p - 1));
    for a in 1..p {
        for b in 0..p {
            out.push((0..p).map(|x| ((a * x + b) % p) as u8).collect());
        }
    }
    out
}

/// `x -> (a x + b) / (c x + d)` on GF(p) plus a point at infinity (index
/// `p`): sharply 3-transitive on `p + 1` points, distance `p - 1`.
fn projective_group(p: usize) -> Vec<Vec<u8>> {
    let inf = p;
    let apply = |a: usize, b: usize, c: usize, d: usize, x: usize| -> usize {
        if x == inf {
            return if c == 0 { inf } else { a * inv_mod(c, p) % p };
        }
        let den = (c * x + d) % p;
        if den == 0 {
            inf
        } else {
            (a * x + b) % p * inv_mod(den, p) % p
        }
    };
    let mut out: Vec<Vec<u8>> = Vec::new();
    for a in 0..p {
        for b in 0..p {
            for c in 0..p {
                for d in 0..p {
                    if (a * d + p * p - b * c % p) % p == 0 {
                        continue;
                    }
                    let img: Vec<u8> = (0..=p).map(|x| apply(a, b, c, d, x) as u8).collect();
                    out.push(img);
                }
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::permcode::min_distance;

    #[test]
    fn small_tables() {
        for (m, d, size) in [(2, 2, 2), (3, 2, 6), (3, 3, 3), (4, 2, 24), (4, 3, 12), (4, 4, 4)] {
            let r = search_max_code(m, d, Budget::unlimited()).unwrap();
            assert_eq!(r.size, size, "M={m} d={d}");
            assert!(r.proven_optimal);
            assert!(min_distance(&r.best_code).unwrap() >= d);
        }
    }

    #[test]
    fn group_code_orders_and_distances() {
        assert_eq!(affine_group(7).len(), 42);
        assert_eq!(projective_group(5).len(), 120);
        assert_eq!(projective_group(3).len(), 24);
        for (m, group) in [(7, affine_group(7)), (6, projective_group(5)), (4, projective_group(3))] {
            let words = group.iter().map(|p| Codeword::from_zero_based(p).unwrap()).collect();
            let code = CodeBook::new(m, words).unwrap();
            let expect = if m == 7 { 6 } else { m - 2 };
            assert_eq!(min_distance(&code).unwrap(), expect);
        }
    }

    #[test]
    fn capacity_and_range_errors() {
        assert!(matches!(
            search_max_code(8, 3, Budget::unlimited()),
            Err(Error::Capacity { m: 8, .. })
        ));
        assert!(matches!(
            search_max_code(4, 5, Budget::unlimited()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn node_budget_is_deterministic() {
        let a = search_max_code(6, 5, Budget::nodes(50)).unwrap();
        let b = search_max_code(6, 5, Budget::nodes(50)).unwrap();
        assert!(!a.proven_optimal);
        assert_eq!(a.best_code, b.best_code);
        assert_eq!(a.nodes_explored, b.nodes_explored);
        assert!(min_distance(&a.best_code).unwrap() >= 5);
    }
}
