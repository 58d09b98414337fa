//! Edge graphs of secured arenas and the flow programs built over them.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_traits::{One, Zero};

use crate::game::ConcurrentGame;
use crate::lp::simplex::{LpInstance, Relation};
use crate::meancycle::sccs;
use crate::punishment::SecuredArena;
use crate::rational::Rational;

/// One edge per distinct (source, target) pair of kept configurations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    /// Smallest kept profile index realizing the edge.
    pub profile_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkGraph {
    pub states: usize,
    pub initial: usize,
    pub edges: Vec<Edge>,
    pub out: Vec<Vec<usize>>,
}

impl WorkGraph {
    pub fn from_secured(game: &ConcurrentGame, secured: &SecuredArena) -> Self {
        let arena = game.arena();
        let mut seen = BTreeMap::new();
        for s in 0..arena.state_count() {
            if !secured.kept_states[s] {
                continue;
            }
            for &k in &secured.configs[s] {
                let t = arena.successor_by_index(s, k);
                seen.entry((s, t)).or_insert(k);
            }
        }
        Self::from_edges(
            arena.state_count(),
            arena.initial(),
            seen.into_iter()
                .map(|((source, target), profile_index)| Edge {
                    source,
                    target,
                    profile_index,
                })
                .collect(),
        )
    }

    pub fn from_edges(states: usize, initial: usize, edges: Vec<Edge>) -> Self {
        let mut out = vec![Vec::new(); states];
        for (e, edge) in edges.iter().enumerate() {
            out[edge.source].push(e);
        }
        Self {
            states,
            initial,
            edges,
            out,
        }
    }

    /// States reachable from the initial state (the initial state counts
    /// only if it has an outgoing edge or is the start).
    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.states];
        let mut queue = VecDeque::from([self.initial]);
        seen[self.initial] = true;
        while let Some(u) = queue.pop_front() {
            for &e in &self.out[u] {
                let v = self.edges[e].target;
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    /// Shortest path of edge indices from `from` to `to` using only edges
    /// accepted by `allowed`; empty when `from == to`.
    pub fn shortest_path(&self, from: usize, to: usize, allowed: impl Fn(usize) -> bool) -> Option<Vec<usize>> {
        if from == to {
            return Some(Vec::new());
        }
        let mut pred: Vec<Option<usize>> = vec![None; self.states];
        let mut seen = vec![false; self.states];
        seen[from] = true;
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.out[u] {
                if !allowed(e) {
                    continue;
                }
                let v = self.edges[e].target;
                if seen[v] {
                    continue;
                }
                seen[v] = true;
                pred[v] = Some(e);
                if v == to {
                    let mut path = Vec::new();
                    let mut x = to;
                    while x != from {
                        let e = pred[x].expect("bfs predecessor");
                        path.push(e);
                        x = self.edges[e].source;
                    }
                    path.reverse();
                    return Some(path);
                }
                queue.push_back(v);
            }
        }
        None
    }
}

/// A strongly connected piece of the work graph with at least one edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subgraph {
    pub nodes: BTreeSet<usize>,
    /// Work-graph edge indices with both ends in `nodes`; LP variable `j`
    /// stands for `edges[j]`.
    pub edges: Vec<usize>,
}

impl Subgraph {
    pub fn contains_edge(&self, e: usize) -> bool {
        self.edges.binary_search(&e).is_ok()
    }
}

/// Splits the part of `graph` induced by `nodes` into strongly connected
/// pieces that contain an edge, ordered by their smallest state.
pub fn split_sccs(graph: &WorkGraph, nodes: &BTreeSet<usize>) -> Vec<Subgraph> {
    let order: Vec<usize> = nodes.iter().copied().collect();
    let local: BTreeMap<usize, usize> = order.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let succ: Vec<Vec<usize>> = order
        .iter()
        .map(|s| {
            graph.out[*s]
                .iter()
                .filter_map(|&e| local.get(&graph.edges[e].target).copied())
                .collect()
        })
        .collect();
    let mut out: Vec<Subgraph> = sccs(&succ)
        .into_iter()
        .filter_map(|comp| {
            let members: BTreeSet<usize> = comp.iter().map(|&i| order[i]).collect();
            let mut edges: Vec<usize> = members
                .iter()
                .flat_map(|&s| graph.out[s].iter().copied())
                .filter(|&e| members.contains(&graph.edges[e].target))
                .collect();
            edges.sort_unstable();
            (!edges.is_empty()).then_some(Subgraph { nodes: members, edges })
        })
        .collect();
    out.sort_by_key(|g| *g.nodes.iter().next().expect("non-empty"));
    out
}

/// SCCs of the kept-configuration graph reachable from the initial state.
pub fn scc_reachable(graph: &WorkGraph) -> Vec<Subgraph> {
    let reach = graph.reachable();
    let nodes: BTreeSet<usize> = (0..graph.states)
        .filter(|&s| reach[s] && !graph.out[s].is_empty())
        .collect();
    split_sccs(graph, &nodes)
}

/// Coefficients `Σ_e weight(target(e)) · x_e` over the subgraph's edges.
pub fn target_weight_row(graph: &WorkGraph, sub: &Subgraph, weights: &[Rational]) -> BTreeMap<usize, Rational> {
    sub.edges
        .iter()
        .enumerate()
        .map(|(j, &e)| (j, weights[graph.edges[e].target].clone()))
        .filter(|(_, c)| !c.is_zero())
        .collect()
}

fn visit_row(graph: &WorkGraph, sub: &Subgraph, set: &[bool]) -> BTreeMap<usize, Rational> {
    sub.edges
        .iter()
        .enumerate()
        .filter(|(_, &e)| set[graph.edges[e].target])
        .map(|(j, _)| (j, Rational::one()))
        .collect()
}

/// Rows: nonnegativity per edge, total flow at least one, a nonnegative
/// weight row per dimension, a visit row per set, and conservation per node.
pub fn build_flow_lp(graph: &WorkGraph, sub: &Subgraph, dims: &[Vec<Rational>], visits: &[Vec<bool>]) -> LpInstance {
    let m = sub.edges.len();
    let mut lp = LpInstance::new(m);
    for j in 0..m {
        lp.push(BTreeMap::from([(j, Rational::one())]), Relation::Ge, Rational::zero());
    }
    lp.push((0..m).map(|j| (j, Rational::one())).collect(), Relation::Ge, Rational::one());
    for w in dims {
        lp.push(target_weight_row(graph, sub, w), Relation::Ge, Rational::zero());
    }
    for set in visits {
        lp.push(visit_row(graph, sub, set), Relation::Ge, Rational::one());
    }
    for &v in &sub.nodes {
        let mut coeffs: BTreeMap<usize, Rational> = BTreeMap::new();
        for (j, &e) in sub.edges.iter().enumerate() {
            let edge = &graph.edges[e];
            let mut c = Rational::zero();
            if edge.target == v {
                c += Rational::one();
            }
            if edge.source == v {
                c -= Rational::one();
            }
            if !c.is_zero() {
                coeffs.insert(j, c);
            }
        }
        lp.push(coeffs, Relation::Eq, Rational::zero());
    }
    lp
}

/// An instance together with the subgraph its variables range over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub sub: Subgraph,
    pub lp: LpInstance,
}

/// No extra visit requirements: a nonnegative cycle combination exists.
pub fn build_spec_free_lp(graph: &WorkGraph, sub: &Subgraph, dims: &[Vec<Rational>]) -> LpInstance {
    build_flow_lp(graph, sub, dims, &[])
}

/// Every guarantee set visited.
pub fn build_guarantee_lp(graph: &WorkGraph, sub: &Subgraph, dims: &[Vec<Rational>], thetas: &[Vec<bool>]) -> LpInstance {
    build_flow_lp(graph, sub, dims, thetas)
}

fn delete_and_split(graph: &WorkGraph, sub: &Subgraph, forbidden: &[bool]) -> Vec<Subgraph> {
    let rest: BTreeSet<usize> = sub.nodes.iter().copied().filter(|&s| !forbidden[s]).collect();
    split_sccs(graph, &rest)
}

/// The assumption set `psi` is removed from the subgraph; one instance per
/// remaining strongly connected piece (none means infeasible).
pub fn build_assumption_lp(graph: &WorkGraph, sub: &Subgraph, dims: &[Vec<Rational>], psi: &[bool]) -> Vec<Candidate> {
    delete_and_split(graph, sub, psi)
        .into_iter()
        .map(|s| Candidate {
            lp: build_flow_lp(graph, &s, dims, &[]),
            sub: s,
        })
        .collect()
}

/// The guarantee set `theta` is removed and every assumption set must be
/// visited.
pub fn build_negspec_lp(
    graph: &WorkGraph,
    sub: &Subgraph,
    dims: &[Vec<Rational>],
    psis: &[Vec<bool>],
    theta: &[bool],
) -> Vec<Candidate> {
    delete_and_split(graph, sub, theta)
        .into_iter()
        .map(|s| Candidate {
            lp: build_flow_lp(graph, &s, dims, psis),
            sub: s,
        })
        .collect()
}

/// `w_i − z_i` per player.
pub fn shifted_weights(game: &ConcurrentGame, z: &[Rational]) -> Vec<Vec<Rational>> {
    (0..game.player_count())
        .map(|i| game.weights(i).iter().map(|w| w - &z[i]).collect())
        .collect()
}
