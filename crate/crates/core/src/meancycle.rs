//! Optimal cycle means in node-weighted graphs (Karp's algorithm per SCC).

use num_bigint::BigInt;
use num_integer::Integer;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use thiserror::Error;

use crate::rational::{common_denominator, scaled_integers, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MeanCycleError {
    #[error("node {0} has no successor")]
    DeadEnd(usize),
    #[error("weights do not fit the integer range after scaling")]
    Overflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Max,
    Min,
}

/// A directed graph whose nodes carry rational weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeanGraph {
    pub weights: Vec<Rational>,
    pub succ: Vec<Vec<usize>>,
}

impl MeanGraph {
    pub fn new(weights: Vec<Rational>, succ: Vec<Vec<usize>>) -> Self {
        debug_assert_eq!(weights.len(), succ.len());
        Self { weights, succ }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Reduced fraction `num/den` with `den > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Frac {
    pub num: i128,
    pub den: i128,
}

impl Frac {
    pub fn new(num: i128, den: i128) -> Self {
        let g = num.gcd(&den).max(1);
        let s = if den < 0 { -1 } else { 1 };
        Self {
            num: s * num / g,
            den: s * den / g,
        }
    }

    pub fn to_rational(self) -> Rational {
        Rational::new(BigInt::from(self.num), BigInt::from(self.den))
    }
}

impl PartialOrd for Frac {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frac {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

pub(crate) fn sccs(succ: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut g = DiGraph::<(), ()>::with_capacity(succ.len(), 0);
    let nodes: Vec<_> = (0..succ.len()).map(|_| g.add_node(())).collect();
    for (u, vs) in succ.iter().enumerate() {
        for &v in vs {
            g.add_edge(nodes[u], nodes[v], ());
        }
    }
    tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut c: Vec<usize> = c.into_iter().map(|n| n.index()).collect();
            c.sort_unstable();
            c
        })
        .collect()
}

/// Best cycle mean inside one strongly connected component, or `None` if
/// the component has no cycle. Minimizes; callers negate for `Max`.
fn karp_min(comp: &[usize], local: &[usize], weights: &[i128], succ: &[Vec<usize>]) -> Option<Frac> {
    let n = comp.len();
    if n == 1 && !succ[comp[0]].contains(&comp[0]) {
        return None;
    }
    // d[k][v]: least weight of a k-edge walk from comp[0] to v, counting
    // the weight of every node entered.
    let mut d = vec![vec![None::<i128>; n]; n + 1];
    d[0][0] = Some(0);
    for k in 1..=n {
        for (iu, &u) in comp.iter().enumerate() {
            let Some(du) = d[k - 1][iu] else { continue };
            for &v in &succ[u] {
                let iv = local[v];
                if iv == usize::MAX {
                    continue;
                }
                let cand = du + weights[v];
                if d[k][iv].map_or(true, |x| cand < x) {
                    d[k][iv] = Some(cand);
                }
            }
        }
    }
    let mut best: Option<Frac> = None;
    for v in 0..n {
        let Some(dn) = d[n][v] else { continue };
        let mut worst: Option<Frac> = None;
        for (k, row) in d.iter().enumerate().take(n) {
            if let Some(dk) = row[v] {
                let f = Frac::new(dn - dk, (n - k) as i128);
                if worst.map_or(true, |w| f > w) {
                    worst = Some(f);
                }
            }
        }
        if let Some(w) = worst {
            if best.map_or(true, |b| w < b) {
                best = Some(w);
            }
        }
    }
    best
}

/// Per node, the optimal mean over all cycles reachable from it, on integer
/// weights.
pub fn optimal_means_int(weights: &[i128], succ: &[Vec<usize>], obj: Objective) -> Result<Vec<Frac>, MeanCycleError> {
    if let Some(u) = succ.iter().position(Vec::is_empty) {
        return Err(MeanCycleError::DeadEnd(u));
    }
    let signed: Vec<i128> = match obj {
        Objective::Min => weights.to_vec(),
        Objective::Max => weights.iter().map(|w| -w).collect(),
    };
    let comps = sccs(succ);
    let mut comp_of = vec![0; succ.len()];
    for (c, nodes) in comps.iter().enumerate() {
        for &u in nodes {
            comp_of[u] = c;
        }
    }
    let mut local = vec![usize::MAX; succ.len()];
    let mut best: Vec<Option<Frac>> = vec![None; comps.len()];
    // Tarjan emits components in reverse topological order, so successors
    // are final before their predecessors.
    for (c, nodes) in comps.iter().enumerate() {
        for (i, &u) in nodes.iter().enumerate() {
            local[u] = i;
        }
        let mut b = karp_min(nodes, &local, &signed, succ);
        for &u in nodes {
            local[u] = usize::MAX;
            for &v in &succ[u] {
                let cv = comp_of[v];
                if cv != c {
                    if let Some(x) = best[cv] {
                        if b.map_or(true, |y| x < y) {
                            b = Some(x);
                        }
                    }
                }
            }
        }
        best[c] = b;
    }
    Ok((0..succ.len())
        .map(|u| {
            let f = best[comp_of[u]].expect("every node reaches a cycle");
            match obj {
                Objective::Min => f,
                Objective::Max => Frac::new(-f.num, f.den),
            }
        })
        .collect())
}

pub(crate) fn scale_weights(weights: &[Rational]) -> Result<(Vec<i128>, BigInt), MeanCycleError> {
    let l = common_denominator(weights);
    let ints = scaled_integers(weights, &l).ok_or(MeanCycleError::Overflow)?;
    let bound = i128::MAX / (4 * (weights.len() as i128 + 1) * (weights.len() as i128 + 1));
    if ints.iter().any(|w| w.abs() > bound) {
        return Err(MeanCycleError::Overflow);
    }
    Ok((ints, l))
}

/// Per node, the optimal mean over cycles reachable from that node.
pub fn optimal_means(graph: &MeanGraph, obj: Objective) -> Result<Vec<Rational>, MeanCycleError> {
    let (ints, l) = scale_weights(&graph.weights)?;
    let l = Rational::from_integer(l);
    Ok(optimal_means_int(&ints, &graph.succ, obj)?
        .into_iter()
        .map(|f| f.to_rational() / &l)
        .collect())
}

/// Largest mean over all cycles of the graph.
pub fn max_mean_cycle(graph: &MeanGraph) -> Result<Rational, MeanCycleError> {
    optimal_means(graph, Objective::Max)?
        .into_iter()
        .max()
        .ok_or(MeanCycleError::DeadEnd(0))
}

/// Largest mean over cycles reachable from `start`.
pub fn max_mean_cycle_from(graph: &MeanGraph, start: usize) -> Result<Rational, MeanCycleError> {
    Ok(optimal_means(graph, Objective::Max)?.swap_remove(start))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn g(weights: &[i64], edges: &[(usize, usize)]) -> MeanGraph {
        let mut succ = vec![Vec::new(); weights.len()];
        for &(u, v) in edges {
            succ[u].push(v);
        }
        MeanGraph::new(weights.iter().map(|&w| int(w)).collect(), succ)
    }

    #[test]
    fn simple_cases() {
        assert_eq!(max_mean_cycle(&g(&[5], &[(0, 0)])).unwrap(), int(5));
        let two_loops = g(&[0, 1, 3], &[(0, 1), (0, 2), (1, 1), (2, 2)]);
        assert_eq!(max_mean_cycle_from(&two_loops, 0).unwrap(), int(3));
        let m = optimal_means(&two_loops, Objective::Min).unwrap();
        assert_eq!(m, vec![int(1), int(1), int(3)]);
    }

    #[test]
    fn four_cycle_beats_zero_cycle() {
        // 4-cycle (−1,2,−1,2) and a 2-cycle (0,0) sharing node 0
        let graph = g(
            &[-1, 2, -1, 2, 0, 0],
            &[(0, 1), (1, 2), (2, 3), (3, 0), (0, 4), (4, 5), (5, 0)],
        );
        assert_eq!(max_mean_cycle(&graph).unwrap(), ratio(1, 2));
    }

    #[test]
    fn rational_weights_and_dead_ends() {
        let graph = MeanGraph::new(vec![ratio(2, 3), int(0)], vec![vec![1], vec![0]]);
        assert_eq!(max_mean_cycle(&graph).unwrap(), ratio(1, 3));
        assert_eq!(max_mean_cycle(&g(&[1, 2], &[(0, 1)])), Err(MeanCycleError::DeadEnd(1)));
    }

    #[test]
    fn acyclic_prefix_inherits_value() {
        let graph = g(&[100, -5, 7], &[(0, 1), (1, 2), (2, 1)]);
        assert_eq!(optimal_means(&graph, Objective::Max).unwrap(), vec![int(1); 3]);
    }
}
