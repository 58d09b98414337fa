//! Reward schemes: costs, application, counting and canonical enumeration.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::game::ConcurrentGame;
use crate::rational::{ceil_to_u64, Rational};

/// A rewardable `(player, state)` pair.
pub type Slot = (usize, usize);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemeError {
    #[error("reward entry ({player}, {state}) is outside the game")]
    UnknownSlot { player: usize, state: usize },
}

/// Natural-number reward per slot; absent slots are 0.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RewardScheme {
    rewards: BTreeMap<Slot, u64>,
}

impl RewardScheme {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (Slot, u64)>) -> Self {
        let mut s = Self::zero();
        for (slot, amount) in entries {
            s.add(slot, amount);
        }
        s
    }

    pub fn add(&mut self, slot: Slot, amount: u64) {
        if amount == 0 {
            return;
        }
        *self.rewards.entry(slot).or_insert(0) += amount;
    }

    pub fn get(&self, player: usize, state: usize) -> u64 {
        self.rewards.get(&(player, state)).copied().unwrap_or(0)
    }

    /// Non-zero entries in slot order.
    pub fn entries(&self) -> impl Iterator<Item = (Slot, u64)> + '_ {
        self.rewards.iter().map(|(&k, &v)| (k, v))
    }

    pub fn is_zero(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn cost(&self) -> u64 {
        self.rewards.values().sum()
    }

    pub fn is_supported_on(&self, slots: &[Slot]) -> bool {
        self.rewards.keys().all(|k| slots.contains(k))
    }

    /// The reward of `player` as a per-state weight vector.
    pub fn player_rewards(&self, player: usize, states: usize) -> Vec<Rational> {
        (0..states)
            .map(|s| Rational::from_integer(self.get(player, s).into()))
            .collect()
    }
}

pub fn scheme_cost(scheme: &RewardScheme) -> u64 {
    scheme.cost()
}

/// `w' = w + κ`; the input game is left untouched.
pub fn apply_scheme(game: &ConcurrentGame, scheme: &RewardScheme) -> Result<ConcurrentGame, SchemeError> {
    let mut weights = game.weight_table().to_vec();
    for ((player, state), amount) in scheme.entries() {
        if player >= game.player_count() || state >= game.state_count() {
            return Err(SchemeError::UnknownSlot { player, state });
        }
        weights[player][state] += Rational::from_integer(amount.into());
    }
    Ok(ConcurrentGame::with_shared_arena(game.shared_arena(), weights)
        .expect("shape preserved"))
}

/// Every `(player, state)` pair of the game, player-major.
pub fn all_slots(game: &ConcurrentGame) -> Vec<Slot> {
    (0..game.player_count())
        .flat_map(|p| (0..game.state_count()).map(move |s| (p, s)))
        .collect()
}

fn binomial(n: u64, k: u64) -> BigUint {
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Number of schemes over `m` slots with cost at most `budget`:
/// `((β+1)/m)·C(β+m, β+1)`.
pub fn scheme_count(m: u64, budget: u64) -> BigUint {
    if m == 0 {
        return BigUint::from(1u32);
    }
    let c = binomial(budget + m, budget + 1);
    c * BigUint::from(budget + 1) / BigUint::from(m)
}

/// Weak compositions of `total` into `len` parts, first part largest first.
#[derive(Debug, Clone)]
pub struct Compositions {
    current: Option<Vec<u64>>,
}

impl Compositions {
    pub fn new(len: usize, total: u64) -> Self {
        let current = match len {
            0 if total == 0 => Some(Vec::new()),
            0 => None,
            _ => {
                let mut v = vec![0; len];
                v[0] = total;
                Some(v)
            }
        };
        Self { current }
    }
}

impl Iterator for Compositions {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        let out = self.current.take()?;
        let m = out.len();
        if m >= 2 {
            if let Some(i) = (0..m - 1).rev().find(|&i| out[i] > 0) {
                let mut v = out.clone();
                let tail: u64 = v[i + 1..].iter().sum();
                v[i] -= 1;
                v[i + 1..].iter_mut().for_each(|x| *x = 0);
                v[i + 1] = tail + 1;
                self.current = Some(v);
            }
        }
        Some(out)
    }
}

fn to_scheme(slots: &[Slot], amounts: &[u64]) -> RewardScheme {
    RewardScheme::from_entries(slots.iter().copied().zip(amounts.iter().copied()))
}

/// Schemes over `slots` of cost exactly `cost`, in canonical order.
pub fn schemes_of_cost(slots: &[Slot], cost: u64) -> impl Iterator<Item = RewardScheme> + '_ {
    Compositions::new(slots.len(), cost).map(move |v| to_scheme(slots, &v))
}

/// All schemes of cost at most `budget`: ascending cost, then lexicographic
/// over the slot list (earlier slots receive rewards first).
pub fn enumerate_schemes(slots: &[Slot], budget: u64) -> impl Iterator<Item = RewardScheme> + '_ {
    let max = if slots.is_empty() { 0 } else { budget };
    (0..=max).flat_map(move |c| schemes_of_cost(slots, c))
}

/// `max(0, ⌈Σ_i max(0, max_s pun_i(s)) · (|St| − 1)⌉)`.
pub fn budget_upper_bound(game: &ConcurrentGame, pun: &[Vec<Rational>]) -> u64 {
    let mut sum = Rational::zero();
    for row in pun {
        if let Some(m) = row.iter().max() {
            if *m > Rational::zero() {
                sum += m;
            }
        }
    }
    let factor = Rational::from_integer((game.state_count().saturating_sub(1) as u64).into());
    ceil_to_u64(&(sum * factor)).unwrap_or(u64::MAX)
}

/// Search ceiling for the optimum budget: the larger of
/// [`budget_upper_bound`] and `Σ_i ⌈max_s w_i(s) − min_s w_i(s)⌉ · |St|`.
/// The second term covers games whose weights are negative: lifting every
/// weight on a lasso cycle to the player's maximum costs at most that much
/// and makes each state secure.
pub fn budget_search_bound(game: &ConcurrentGame, pun: &[Vec<Rational>]) -> u64 {
    let states = game.state_count() as u64;
    let mut lift = 0u64;
    for row in game.weight_table() {
        if let (Some(lo), Some(hi)) = (row.iter().min(), row.iter().max()) {
            let spread = ceil_to_u64(&(hi - lo)).unwrap_or(u64::MAX);
            lift = lift.saturating_add(spread.saturating_mul(states));
        }
    }
    budget_upper_bound(game, pun).max(lift)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::ArenaBuilder;
    use crate::rational::{int, ratio};
    use std::collections::BTreeSet;

    fn two_by_two() -> ConcurrentGame {
        let arena = ArenaBuilder::new()
            .player("p1")
            .player("p2")
            .state("s1", Vec::<String>::new())
            .state("s2", Vec::<String>::new())
            .actions("s1", "p1", ["a"])
            .actions("s1", "p2", ["a"])
            .actions("s2", "p1", ["a"])
            .actions("s2", "p2", ["a"])
            .transition("s1", &["a", "a"], "s2")
            .transition("s2", &["a", "a"], "s1")
            .build()
            .unwrap();
        ConcurrentGame::new(arena, vec![vec![int(-1), int(2)], vec![int(0), int(0)]]).unwrap()
    }

    #[test]
    fn cost_and_application() {
        assert_eq!(scheme_cost(&RewardScheme::zero()), 0);
        let k = RewardScheme::from_entries([((0, 0), 1), ((1, 1), 3)]);
        assert_eq!(scheme_cost(&k), 4);
        let g = two_by_two();
        let g2 = apply_scheme(&g, &k).unwrap();
        assert_eq!(g2.weight(0, 0), &int(0));
        assert_eq!(g2.weight(1, 1), &int(3));
        assert_eq!(g.weight(0, 0), &int(-1));
        assert_eq!(apply_scheme(&g, &RewardScheme::zero()).unwrap(), g);
        let bad = RewardScheme::from_entries([((2, 0), 1)]);
        assert!(apply_scheme(&g, &bad).is_err());
    }

    #[test]
    fn counting() {
        assert_eq!(scheme_count(1, 3), BigUint::from(4u32));
        assert_eq!(scheme_count(2, 1), BigUint::from(3u32));
        assert_eq!(scheme_count(4, 2), BigUint::from(15u32));
        assert_eq!(scheme_count(3, 2), BigUint::from(10u32));
        assert_eq!(scheme_count(0, 2), BigUint::from(1u32));
    }

    #[test]
    fn canonical_order() {
        let x = (0, 0);
        let y = (0, 1);
        let one: Vec<_> = enumerate_schemes(&[x], 1).collect();
        assert_eq!(one, vec![RewardScheme::zero(), RewardScheme::from_entries([(x, 1)])]);
        let two: Vec<_> = enumerate_schemes(&[x, y], 1).collect();
        assert_eq!(
            two,
            vec![
                RewardScheme::zero(),
                RewardScheme::from_entries([(x, 1)]),
                RewardScheme::from_entries([(y, 1)]),
            ]
        );
        let c: Vec<Vec<u64>> = Compositions::new(3, 2).collect();
        assert_eq!(
            c,
            vec![
                vec![2, 0, 0],
                vec![1, 1, 0],
                vec![1, 0, 1],
                vec![0, 2, 0],
                vec![0, 1, 1],
                vec![0, 0, 2]
            ]
        );
    }

    #[test]
    fn enumeration_matches_count() {
        for m in 0..=6u64 {
            for b in 0..=6u64 {
                let slots: Vec<Slot> = (0..m as usize).map(|s| (0, s)).collect();
                let all: Vec<_> = enumerate_schemes(&slots, b).collect();
                assert_eq!(BigUint::from(all.len()), scheme_count(m, b));
                let distinct: BTreeSet<_> = all.iter().collect();
                assert_eq!(distinct.len(), all.len());
                assert!(all.iter().all(|k| k.cost() <= b));
            }
        }
        assert_eq!(enumerate_schemes(&[], 0).count(), 1);
    }

    #[test]
    fn upper_bound() {
        let g = two_by_two();
        assert_eq!(budget_upper_bound(&g, &[vec![int(-1), int(0)], vec![int(0), int(-2)]]), 0);
        assert_eq!(budget_search_bound(&g, &[vec![int(-1), int(0)], vec![int(0), int(-2)]]), 6);
        let g3 = {
            let arena = ArenaBuilder::new()
                .player("p")
                .state("a", Vec::<String>::new())
                .state("b", Vec::<String>::new())
                .state("c", Vec::<String>::new())
                .actions("a", "p", ["x"])
                .actions("b", "p", ["x"])
                .actions("c", "p", ["x"])
                .transition("a", &["x"], "b")
                .transition("b", &["x"], "c")
                .transition("c", &["x"], "a")
                .build()
                .unwrap();
            ConcurrentGame::new(arena, vec![vec![int(0); 3]]).unwrap()
        };
        assert_eq!(budget_upper_bound(&g3, &[vec![int(2), int(1), int(0)]]), 4);
        // four states: ⌈(1/2 + 1)·3⌉
        let slots4 = vec![vec![ratio(1, 2), int(0), int(0), int(0)], vec![int(1), int(0), int(0), int(0)]];
        let mut b = ArenaBuilder::new().player("p").player("q");
        for s in ["a", "b", "c", "d"] {
            b = b
                .state(s, Vec::<String>::new())
                .actions(s, "p", ["x"])
                .actions(s, "q", ["x"])
                .transition(s, &["x", "x"], s);
        }
        let g4 = ConcurrentGame::new(b.build().unwrap(), vec![vec![int(0); 4], vec![int(0); 4]]).unwrap();
        assert_eq!(budget_upper_bound(&g4, &slots4), 5);
    }
}
