//! Punishment values, z-security and the secured arena `G[z]`.
//!
//! `pun_i(s)` is the value of a turn-based zero-sum mean-payoff game in which
//! the coalition of all other players first commits to a partial profile and
//! player `i` then answers.

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::game::{cartesian, ConcurrentGame, Profile};
use crate::meancycle::{optimal_means_int, scale_weights, Frac, MeanCycleError, Objective};
use crate::rational::{nearest_with_bounded_denominator, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Owner {
    Max,
    Min,
}

/// A turn-based two-player mean-payoff game on weighted nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TurnBasedMpg {
    pub owner: Vec<Owner>,
    pub weights: Vec<Rational>,
    pub succ: Vec<Vec<usize>>,
    /// Arena state each node was derived from.
    pub origin: Vec<usize>,
    /// For player nodes, the coalition partial profile they stand for.
    pub partial: Vec<Option<Profile>>,
}

impl TurnBasedMpg {
    pub fn len(&self) -> usize {
        self.owner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.owner.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }
}

/// Rebuilds a full profile from the coalition's partial profile and the
/// action of `player`.
pub fn merge_profile(partial: &[usize], player: usize, action: usize) -> Profile {
    let mut p = Vec::with_capacity(partial.len() + 1);
    p.extend_from_slice(&partial[..player]);
    p.push(action);
    p.extend_from_slice(&partial[player..]);
    p
}

/// All coalition partial profiles against `player` at `state`.
pub fn coalition_profiles(game: &ConcurrentGame, state: usize, player: usize) -> Vec<Profile> {
    let arena = game.arena();
    let lists: Vec<Vec<usize>> = (0..arena.player_count())
        .filter(|&p| p != player)
        .map(|p| (0..arena.action_count(state, p)).collect())
        .collect();
    cartesian(&lists)
}

/// Nodes `0..|St|` are coalition (minimizer) nodes, one per state; player
/// (maximizer) nodes follow, one per state and coalition partial profile.
pub fn sequentialize(game: &ConcurrentGame, player: usize) -> TurnBasedMpg {
    let arena = game.arena();
    let n = arena.state_count();
    let w = game.weights(player);
    let mut tb = TurnBasedMpg {
        owner: vec![Owner::Min; n],
        weights: w.to_vec(),
        succ: vec![Vec::new(); n],
        origin: (0..n).collect(),
        partial: vec![None; n],
    };
    for s in 0..n {
        for partial in coalition_profiles(game, s, player) {
            let node = tb.owner.len();
            let mut targets: Vec<usize> = (0..arena.action_count(s, player))
                .map(|a| arena.successor(s, &merge_profile(&partial, player, a)))
                .collect();
            targets.sort_unstable();
            targets.dedup();
            tb.owner.push(Owner::Max);
            tb.weights.push(w[s].clone());
            tb.succ.push(targets);
            tb.origin.push(s);
            tb.partial.push(Some(partial));
            tb.succ[s].push(node);
        }
    }
    tb
}

/// Values of every node and a memoryless optimal choice for every node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MpgSolution {
    pub values: Vec<Rational>,
    pub strategy: Vec<usize>,
}

fn pick(owner: Owner, succ: &[usize], v: &[i128]) -> usize {
    let mut best = succ[0];
    for &t in &succ[1..] {
        let better = match owner {
            Owner::Max => v[t] > v[best],
            Owner::Min => v[t] < v[best],
        };
        if better {
            best = t;
        }
    }
    best
}

/// Exact values of a strategy pair: fixing one side and letting the other
/// optimize gives a bound; the pair is optimal iff both bounds meet.
fn certify(tb: &TurnBasedMpg, w: &[i128], choice: &[usize]) -> Result<Option<Vec<Frac>>, MeanCycleError> {
    let restrict = |fixed: Owner| -> Vec<Vec<usize>> {
        (0..tb.len())
            .map(|u| {
                if tb.owner[u] == fixed {
                    vec![choice[u]]
                } else {
                    tb.succ[u].clone()
                }
            })
            .collect()
    };
    let upper = optimal_means_int(w, &restrict(Owner::Min), Objective::Max)?;
    let lower = optimal_means_int(w, &restrict(Owner::Max), Objective::Min)?;
    Ok((upper == lower).then_some(upper))
}

/// Solves a turn-based mean-payoff game exactly.
pub fn mpg_value(tb: &TurnBasedMpg) -> Result<MpgSolution, MeanCycleError> {
    if let Some(u) = tb.succ.iter().position(Vec::is_empty) {
        return Err(MeanCycleError::DeadEnd(u));
    }
    let n = tb.len();
    let (w, scale) = scale_weights(&tb.weights)?;
    let scale_q = Rational::from_integer(scale);
    let big_w = w.iter().map(|x| x.abs()).max().unwrap_or(0).max(1);
    let cap = (4 * (n as i128).pow(3) * big_w).max(1);

    let mut v = vec![0i128; n];
    let mut next = vec![0i128; n];
    let mut checkpoint = n.max(1) as i128;
    let mut k: i128 = 0;
    while k < cap {
        for u in 0..n {
            let t = pick(tb.owner[u], &tb.succ[u], &v);
            next[u] = w[u] + v[t];
        }
        std::mem::swap(&mut v, &mut next);
        k += 1;
        if k == checkpoint {
            checkpoint *= 2;
            let choice: Vec<usize> = (0..n).map(|u| pick(tb.owner[u], &tb.succ[u], &v)).collect();
            if let Some(vals) = certify(tb, &w, &choice)? {
                return Ok(MpgSolution {
                    values: vals.into_iter().map(|f| f.to_rational() / &scale_q).collect(),
                    strategy: choice,
                });
            }
        }
    }
    let strategy: Vec<usize> = (0..n).map(|u| pick(tb.owner[u], &tb.succ[u], &v)).collect();
    let values = v
        .iter()
        .map(|&x| nearest_with_bounded_denominator(x, k, n) / &scale_q)
        .collect();
    Ok(MpgSolution { values, strategy })
}

/// `values[player][state]` and an optimal coalition partial profile per
/// player and state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PunishmentTable {
    pub values: Vec<Vec<Rational>>,
    pub strategies: Vec<Vec<Profile>>,
    pub node_counts: Vec<usize>,
}

impl PunishmentTable {
    pub fn value(&self, player: usize, state: usize) -> &Rational {
        &self.values[player][state]
    }
}

pub fn punishment_table(game: &ConcurrentGame) -> Result<PunishmentTable, MeanCycleError> {
    let rows: Vec<(Vec<Rational>, Vec<Profile>, usize)> = (0..game.player_count())
        .into_par_iter()
        .map(|i| {
            let tb = sequentialize(game, i);
            let sol = mpg_value(&tb)?;
            let n = game.state_count();
            let strategies = (0..n)
                .map(|s| tb.partial[sol.strategy[s]].clone().expect("coalition picks a player node"))
                .collect();
            Ok((sol.values[..n].to_vec(), strategies, tb.len()))
        })
        .collect::<Result<_, MeanCycleError>>()?;
    let mut table = PunishmentTable {
        values: Vec::new(),
        strategies: Vec::new(),
        node_counts: Vec::new(),
    };
    for (v, s, c) in rows {
        table.values.push(v);
        table.strategies.push(s);
        table.node_counts.push(c);
    }
    Ok(table)
}

pub fn is_z_secure(
    game: &ConcurrentGame,
    table: &PunishmentTable,
    state: usize,
    profile: &[usize],
    player: usize,
    z: &Rational,
) -> bool {
    let arena = game.arena();
    let mut p = profile.to_vec();
    (0..arena.action_count(state, player)).all(|a| {
        p[player] = a;
        table.value(player, arena.successor(state, &p)) <= z
    })
}

/// One threshold per player.
pub type PunishmentVector = Vec<Rational>;

/// Sorted distinct punishment values of a player.
pub fn pun_value_set(table: &PunishmentTable, player: usize) -> Vec<Rational> {
    let mut v = table.values[player].clone();
    v.sort();
    v.dedup();
    v
}

/// The product of all players' value sets, in lexicographic order.
pub fn z_vectors(table: &PunishmentTable) -> Vec<PunishmentVector> {
    let sets: Vec<Vec<Rational>> = (0..table.values.len()).map(|i| pun_value_set(table, i)).collect();
    let idx: Vec<Vec<usize>> = sets.iter().map(|s| (0..s.len()).collect()).collect();
    cartesian(&idx)
        .into_iter()
        .map(|c| c.iter().enumerate().map(|(i, &k)| sets[i][k].clone()).collect())
        .collect()
}

/// The subgame of configurations that are z-secure for every player, pruned
/// until every kept state keeps a configuration leading to a kept state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecuredArena {
    pub z: PunishmentVector,
    pub kept_states: Vec<bool>,
    /// `configs[state]` lists kept profile indices.
    pub configs: Vec<Vec<usize>>,
    pub initial: usize,
}

impl SecuredArena {
    pub fn is_empty(&self) -> bool {
        !self.kept_states.iter().any(|&b| b)
    }

    pub fn keeps(&self, state: usize, profile_index: usize) -> bool {
        self.kept_states[state] && self.configs[state].binary_search(&profile_index).is_ok()
    }

    pub fn config_count(&self) -> usize {
        self.configs.iter().map(Vec::len).sum()
    }
}

pub fn build_secured(game: &ConcurrentGame, table: &PunishmentTable, z: &[Rational]) -> SecuredArena {
    let arena = game.arena();
    let n = arena.state_count();
    let players = arena.player_count();
    let mut alive: Vec<bool> = (0..n)
        .map(|s| s == arena.initial() || (0..players).all(|i| table.value(i, s) <= &z[i]))
        .collect();
    let secure: Vec<Vec<usize>> = (0..n)
        .map(|s| {
            (0..arena.profile_count(s))
                .filter(|&k| {
                    let p = arena.profile_at(s, k);
                    (0..players).all(|i| is_z_secure(game, table, s, &p, i, &z[i]))
                })
                .collect()
        })
        .collect();
    let mut configs: Vec<Vec<usize>> = vec![Vec::new(); n];
    loop {
        let mut changed = false;
        for s in 0..n {
            if !alive[s] {
                configs[s].clear();
                continue;
            }
            configs[s] = secure[s]
                .iter()
                .copied()
                .filter(|&k| alive[arena.successor_by_index(s, k)])
                .collect();
            if configs[s].is_empty() {
                alive[s] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    SecuredArena {
        z: z.to_vec(),
        kept_states: alive,
        configs,
        initial: arena.initial(),
    }
}

/// Denominator of a value as a machine integer, for bound checks.
pub fn denominator(value: &Rational) -> Option<u64> {
    let d: &BigInt = value.denom();
    d.to_u64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::ArenaBuilder;
    use crate::rational::{int, ratio};

    fn one_player(weights: &[i64], edges: &[(&str, &str, &str)]) -> ConcurrentGame {
        let mut b = ArenaBuilder::new().player("p");
        let mut acts: std::collections::BTreeMap<&str, Vec<&str>> = Default::default();
        for (i, _) in weights.iter().enumerate() {
            b = b.state(format!("s{i}"), Vec::<String>::new());
        }
        for &(from, a, _) in edges {
            acts.entry(from).or_default().push(a);
        }
        for (s, a) in &acts {
            b = b.actions(s, "p", a.clone());
        }
        for &(from, a, to) in edges {
            b = b.transition(from, &[a], to);
        }
        let w = vec![weights.iter().map(|&x| int(x)).collect()];
        ConcurrentGame::new(b.build().unwrap(), w).unwrap()
    }

    /// Coalition player `c` picks between two self-loops of weight 0 and 4.
    fn trap() -> ConcurrentGame {
        let arena = ArenaBuilder::new()
            .player("i")
            .player("c")
            .state("s", Vec::<String>::new())
            .state("zero", Vec::<String>::new())
            .state("four", Vec::<String>::new())
            .actions("s", "i", ["x"])
            .actions("s", "c", ["l", "r"])
            .actions("zero", "i", ["x"])
            .actions("zero", "c", ["x"])
            .actions("four", "i", ["x"])
            .actions("four", "c", ["x"])
            .transition("s", &["x", "l"], "zero")
            .transition("s", &["x", "r"], "four")
            .transition("zero", &["x", "x"], "zero")
            .transition("four", &["x", "x"], "four")
            .build()
            .unwrap();
        ConcurrentGame::new(arena, vec![vec![int(4), int(0), int(4)], vec![int(0); 3]]).unwrap()
    }

    #[test]
    fn structure_of_sequentialization() {
        let arena = ArenaBuilder::new()
            .player("i")
            .player("c")
            .state("s", Vec::<String>::new())
            .actions("s", "i", ["a", "b"])
            .actions("s", "c", ["a", "b"])
            .transition("s", &["*", "*"], "s")
            .build()
            .unwrap();
        let g = ConcurrentGame::new(arena, vec![vec![int(0)], vec![int(0)]]).unwrap();
        let tb = sequentialize(&g, 0);
        assert_eq!(tb.len(), 3);
        assert_eq!(tb.succ[0].len(), 2);
        // both actions of i lead to `s`, deduplicated
        assert_eq!(tb.succ[1], vec![0]);
    }

    #[test]
    fn one_player_values() {
        let g = one_player(
            &[-1, 2, -1, 2],
            &[("s0", "a", "s1"), ("s1", "a", "s2"), ("s2", "a", "s3"), ("s3", "a", "s0")],
        );
        let t = punishment_table(&g).unwrap();
        assert_eq!(t.values[0], vec![ratio(1, 2); 4]);
        let z = one_player(&[0, 0], &[("s0", "a", "s1"), ("s1", "a", "s0")]);
        assert_eq!(pun_value_set(&punishment_table(&z).unwrap(), 0), vec![int(0)]);
    }

    #[test]
    fn coalition_traps() {
        let t = punishment_table(&trap()).unwrap();
        assert_eq!(t.values[0], vec![int(0), int(0), int(4)]);
        assert_eq!(t.strategies[0][0], vec![0]);
        assert_eq!(pun_value_set(&t, 0), vec![int(0), int(4)]);
    }

    #[test]
    fn alternating_two_node_game() {
        let tb = TurnBasedMpg {
            owner: vec![Owner::Max, Owner::Min],
            weights: vec![int(1), int(0)],
            succ: vec![vec![1], vec![0]],
            origin: vec![0, 1],
            partial: vec![None, None],
        };
        assert_eq!(mpg_value(&tb).unwrap().values, vec![ratio(1, 2); 2]);
    }

    #[test]
    fn security_and_secured_arena() {
        let g = trap();
        let t = punishment_table(&g).unwrap();
        // i has one action, so only the chosen successor matters
        assert!(is_z_secure(&g, &t, 0, &[0, 0], 0, &int(0)));
        assert!(!is_z_secure(&g, &t, 0, &[0, 1], 0, &int(0)));
        assert!(is_z_secure(&g, &t, 0, &[0, 1], 0, &int(4)));
        let all = build_secured(&g, &t, &[int(4), int(0)]);
        assert_eq!(all.config_count(), 4);
        let low = build_secured(&g, &t, &[int(0), int(0)]);
        assert_eq!(low.kept_states, vec![true, true, false]);
        assert_eq!(low.configs[0], vec![0]);
        let none = build_secured(&g, &t, &[int(-1), int(0)]);
        assert!(none.is_empty());
    }
}
