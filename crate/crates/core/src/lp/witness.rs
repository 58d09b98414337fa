//! Turning feasible flows into explicit equilibrium paths.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::game::{Arena, Config, ConcurrentGame, GameError, Lasso};
use crate::lp::builder::{Subgraph, WorkGraph};
use crate::lp::simplex::FeasiblePoint;
use crate::rational::{common_denominator, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WitnessError {
    #[error("flow is not a circulation")]
    NotCirculation,
    #[error("flow is zero")]
    ZeroFlow,
    #[error("initial state cannot reach the witness component")]
    Unreachable,
    #[error("flow multiplicity does not fit 64 bits")]
    Overflow,
}

/// `prefix · (round 1) · (round 2) · …` where round `t` plays every cycle
/// `t · multiplicity` times, each followed by its connector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessSchedule {
    pub prefix: Vec<Config>,
    pub cycles: Vec<(Vec<Config>, u64)>,
    /// `connectors[j]` leads from the start of cycle `j` to the start of
    /// cycle `j + 1` (cyclically).
    pub connectors: Vec<Vec<Config>>,
}

impl WitnessSchedule {
    pub fn round(&self, t: u64) -> Vec<Config> {
        let mut out = Vec::new();
        for (j, (cycle, mult)) in self.cycles.iter().enumerate() {
            for _ in 0..t * mult {
                out.extend(cycle.iter().cloned());
            }
            if let Some(c) = self.connectors.get(j) {
                out.extend(c.iter().cloned());
            }
        }
        out
    }

    /// The lasso repeating round `t` forever. Its cycle visits exactly the
    /// states the schedule visits infinitely often.
    pub fn lasso_at_round(&self, arena: &Arena, t: u64) -> Result<Lasso, GameError> {
        Lasso::new(arena, self.prefix.clone(), self.round(t.max(1)))
    }

    pub fn inf_states(&self) -> BTreeSet<usize> {
        self.cycles
            .iter()
            .flat_map(|(c, _)| c.iter())
            .chain(self.connectors.iter().flatten())
            .map(|c| c.state)
            .collect()
    }

    pub fn cycle_states(&self) -> BTreeSet<usize> {
        self.cycles.iter().flat_map(|(c, _)| c.iter()).map(|c| c.state).collect()
    }

    pub fn configs(&self) -> impl Iterator<Item = &Config> {
        self.prefix
            .iter()
            .chain(self.cycles.iter().flat_map(|(c, _)| c.iter()))
            .chain(self.connectors.iter().flatten())
    }

    /// Lim-inf mean of `weight`: the multiplicity-weighted cycle average.
    pub fn mean_payoff(&self, weight: &[Rational]) -> Rational {
        let mut total = Rational::zero();
        let mut len = 0u64;
        for (cycle, mult) in &self.cycles {
            let s: Rational = cycle.iter().map(|c| &weight[c.state]).sum();
            total += s * Rational::from_integer((*mult).into());
            len += mult * cycle.len() as u64;
        }
        total / Rational::from_integer(len.into())
    }

    pub fn payoffs(&self, game: &ConcurrentGame) -> Vec<Rational> {
        (0..game.player_count()).map(|i| self.mean_payoff(game.weights(i))).collect()
    }
}

fn to_configs(arena: &Arena, graph: &WorkGraph, edges: &[usize]) -> Vec<Config> {
    edges
        .iter()
        .map(|&e| {
            let edge = &graph.edges[e];
            Config::new(edge.source, arena.profile_at(edge.source, edge.profile_index))
        })
        .collect()
}

/// Rotation of a cycle starting at its smallest edge index.
fn canonical(mut cycle: Vec<usize>) -> Vec<usize> {
    let k = (0..cycle.len()).min_by_key(|&i| cycle[i]).unwrap_or(0);
    cycle.rotate_left(k);
    cycle
}

/// Decomposes an integral circulation on `sub` into simple cycles of edge
/// indices with multiplicities.
pub fn decompose(graph: &WorkGraph, sub: &Subgraph, flow: &[u64]) -> Result<Vec<(Vec<usize>, u64)>, WitnessError> {
    let mut f = flow.to_vec();
    let mut out: Vec<(Vec<usize>, u64)> = Vec::new();
    while let Some(start) = f.iter().position(|&x| x > 0) {
        // walk positive edges until a state repeats
        let mut pos_of_state = std::collections::BTreeMap::new();
        let mut path: Vec<usize> = Vec::new();
        let mut j = start;
        loop {
            let edge = &graph.edges[sub.edges[j]];
            if let Some(&p) = pos_of_state.get(&edge.source) {
                let cyc: Vec<usize> = path[p..].to_vec();
                let m = cyc.iter().map(|&k| f[k]).min().expect("non-empty");
                for &k in &cyc {
                    f[k] -= m;
                }
                let cyc = canonical(cyc.iter().map(|&k| sub.edges[k]).collect());
                match out.iter_mut().find(|(c, _)| *c == cyc) {
                    Some((_, mm)) => *mm += m,
                    None => out.push((cyc, m)),
                }
                break;
            }
            pos_of_state.insert(edge.source, path.len());
            path.push(j);
            let next = (0..sub.edges.len())
                .find(|&k| f[k] > 0 && graph.edges[sub.edges[k]].source == edge.target)
                .ok_or(WitnessError::NotCirculation)?;
            j = next;
        }
    }
    if out.is_empty() {
        return Err(WitnessError::ZeroFlow);
    }
    let g = out.iter().fold(0u64, |acc, (_, m)| acc.gcd(m));
    for (_, m) in out.iter_mut() {
        *m /= g;
    }
    Ok(out)
}

/// Scales `point` to integers, decomposes it into cycles and stitches them
/// with shortest connectors inside `sub`, reached from the initial state
/// along any edge of `graph`.
pub fn extract_witness(
    arena: &Arena,
    graph: &WorkGraph,
    sub: &Subgraph,
    point: &FeasiblePoint,
) -> Result<WitnessSchedule, WitnessError> {
    let l = common_denominator(&point.values);
    let flow: Vec<u64> = point
        .values
        .iter()
        .map(|v| {
            let x: BigInt = (v * Rational::from_integer(l.clone())).to_integer();
            x.to_u64().ok_or(WitnessError::Overflow)
        })
        .collect::<Result<_, _>>()?;
    let cycles = decompose(graph, sub, &flow)?;
    let anchors: Vec<usize> = cycles.iter().map(|(c, _)| graph.edges[c[0]].source).collect();
    let inside = |e: usize| sub.contains_edge(e);
    let mut connectors = Vec::new();
    if cycles.len() > 1 {
        for j in 0..cycles.len() {
            let to = anchors[(j + 1) % cycles.len()];
            let path = graph.shortest_path(anchors[j], to, inside).ok_or(WitnessError::NotCirculation)?;
            connectors.push(to_configs(arena, graph, &path));
        }
    }
    let prefix = graph
        .shortest_path(graph.initial, anchors[0], |_| true)
        .ok_or(WitnessError::Unreachable)?;
    Ok(WitnessSchedule {
        prefix: to_configs(arena, graph, &prefix),
        cycles: cycles
            .into_iter()
            .map(|(c, m)| (to_configs(arena, graph, &c), m))
            .collect(),
        connectors,
    })
}
