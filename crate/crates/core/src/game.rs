//! Arenas, concurrent mean-payoff games and ultimately periodic paths.
//!
//! Players, states and actions are addressed by dense indices; the textual
//! ids are kept for I/O. An action profile is a vector holding one action
//! index per player, and every state enumerates its profiles in mixed-radix
//! order (the last player varies fastest).

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_traits::Zero;
use thiserror::Error;

use crate::rational::Rational;

pub type Profile = Vec<usize>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GameError {
    #[error("arena has no players")]
    NoPlayers,
    #[error("arena has no states")]
    NoStates,
    #[error("duplicate {kind} id `{id}`")]
    Duplicate { kind: &'static str, id: String },
    #[error("unknown player `{0}`")]
    UnknownPlayer(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown action `{action}` for player `{player}` at state `{state}`")]
    UnknownAction {
        state: String,
        player: String,
        action: String,
    },
    #[error("player `{player}` has no actions at state `{state}`")]
    EmptyActions { state: String, player: String },
    #[error("transition function is not total: state `{state}` has no successor for profile {profile:?}")]
    MissingTransition { state: String, profile: Vec<String> },
    #[error("transition for state `{state}` and profile {profile:?} is defined twice")]
    DuplicateTransition { state: String, profile: Vec<String> },
    #[error("label `{atom}` of state `{state}` is not in the declared alphabet")]
    UnknownAtom { state: String, atom: String },
    #[error("weights table has wrong shape: {0}")]
    WeightShape(String),
    #[error("malformed lasso: {0}")]
    MalformedLasso(String),
}

/// The action/transition structure of a concurrent game.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arena {
    players: Vec<String>,
    states: Vec<String>,
    initial: usize,
    /// `actions[state][player]` lists the action names available there.
    actions: Vec<Vec<Vec<String>>>,
    /// `transitions[state][profile_index]` is the successor state.
    transitions: Vec<Vec<usize>>,
    labels: Vec<BTreeSet<String>>,
    alphabet: BTreeSet<String>,
}

/// Incrementally collects an arena by name and validates it on `build`.
#[derive(Debug, Default, Clone)]
pub struct ArenaBuilder {
    players: Vec<String>,
    states: Vec<String>,
    initial: Option<String>,
    actions: BTreeMap<(String, String), Vec<String>>,
    labels: BTreeMap<String, BTreeSet<String>>,
    alphabet: Option<BTreeSet<String>>,
    transitions: Vec<(String, Vec<String>, String)>,
}

impl ArenaBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn player(mut self, id: impl Into<String>) -> Self {
        self.players.push(id.into());
        self
    }

    pub fn state<I, S>(mut self, id: impl Into<String>, labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let id = id.into();
        self.labels
            .insert(id.clone(), labels.into_iter().map(Into::into).collect());
        self.states.push(id);
        self
    }

    pub fn initial(mut self, id: impl Into<String>) -> Self {
        self.initial = Some(id.into());
        self
    }

    pub fn alphabet<I, S>(mut self, atoms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.alphabet = Some(atoms.into_iter().map(Into::into).collect());
        self
    }

    pub fn actions<I, S>(mut self, state: &str, player: &str, actions: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.actions.insert(
            (state.to_string(), player.to_string()),
            actions.into_iter().map(Into::into).collect(),
        );
        self
    }

    /// Adds a transition entry. A `"*"` action matches every action of that
    /// player at `from`.
    pub fn transition<S: AsRef<str>>(mut self, from: &str, profile: &[S], to: &str) -> Self {
        self.transitions.push((
            from.to_string(),
            profile.iter().map(|a| a.as_ref().to_string()).collect(),
            to.to_string(),
        ));
        self
    }

    pub fn build(self) -> Result<Arena, GameError> {
        if self.players.is_empty() {
            return Err(GameError::NoPlayers);
        }
        if self.states.is_empty() {
            return Err(GameError::NoStates);
        }
        let player_ix = index_of(&self.players, "player")?;
        let state_ix = index_of(&self.states, "state")?;
        let initial_name = self
            .initial
            .clone()
            .unwrap_or_else(|| self.states[0].clone());
        let initial = *state_ix
            .get(&initial_name)
            .ok_or(GameError::UnknownState(initial_name))?;

        for (state, player) in self.actions.keys() {
            if !state_ix.contains_key(state) {
                return Err(GameError::UnknownState(state.clone()));
            }
            if !player_ix.contains_key(player) {
                return Err(GameError::UnknownPlayer(player.clone()));
            }
        }

        let mut actions = Vec::with_capacity(self.states.len());
        for s in &self.states {
            let mut per_player = Vec::with_capacity(self.players.len());
            for p in &self.players {
                let acts = self
                    .actions
                    .get(&(s.clone(), p.clone()))
                    .cloned()
                    .unwrap_or_default();
                if acts.is_empty() {
                    return Err(GameError::EmptyActions {
                        state: s.clone(),
                        player: p.clone(),
                    });
                }
                let mut seen = BTreeSet::new();
                for a in &acts {
                    if !seen.insert(a) {
                        return Err(GameError::Duplicate {
                            kind: "action",
                            id: format!("{s}/{p}/{a}"),
                        });
                    }
                }
                per_player.push(acts);
            }
            actions.push(per_player);
        }

        let labels: Vec<BTreeSet<String>> = self
            .states
            .iter()
            .map(|s| self.labels.get(s).cloned().unwrap_or_default())
            .collect();
        let alphabet = match self.alphabet {
            Some(a) => {
                for (s, ls) in self.states.iter().zip(&labels) {
                    if let Some(atom) = ls.iter().find(|l| !a.contains(*l)) {
                        return Err(GameError::UnknownAtom {
                            state: s.clone(),
                            atom: atom.clone(),
                        });
                    }
                }
                a
            }
            None => labels.iter().flatten().cloned().collect(),
        };

        let mut arena = Arena {
            players: self.players,
            states: self.states,
            initial,
            actions,
            transitions: Vec::new(),
            labels,
            alphabet,
        };
        let mut table: Vec<Vec<Option<usize>>> = (0..arena.states.len())
            .map(|s| vec![None; arena.profile_count(s)])
            .collect();

        for (from, profile, to) in &self.transitions {
            let s = *state_ix
                .get(from)
                .ok_or_else(|| GameError::UnknownState(from.clone()))?;
            let t = *state_ix
                .get(to)
                .ok_or_else(|| GameError::UnknownState(to.clone()))?;
            if profile.len() != arena.players.len() {
                return Err(GameError::UnknownAction {
                    state: from.clone(),
                    player: format!("<{} actions given>", profile.len()),
                    action: profile.join(","),
                });
            }
            // Expand wildcards into the concrete choices per player.
            let mut choices: Vec<Vec<usize>> = Vec::with_capacity(profile.len());
            for (p, name) in profile.iter().enumerate() {
                let acts = &arena.actions[s][p];
                if name == "*" {
                    choices.push((0..acts.len()).collect());
                } else {
                    let ix = acts.iter().position(|a| a == name).ok_or_else(|| {
                        GameError::UnknownAction {
                            state: from.clone(),
                            player: arena.players[p].clone(),
                            action: name.clone(),
                        }
                    })?;
                    choices.push(vec![ix]);
                }
            }
            for concrete in cartesian(&choices) {
                let k = arena.profile_index(s, &concrete);
                if table[s][k].is_some() {
                    return Err(GameError::DuplicateTransition {
                        state: from.clone(),
                        profile: arena.profile_names(s, &concrete),
                    });
                }
                table[s][k] = Some(t);
            }
        }

        let mut transitions = Vec::with_capacity(table.len());
        for (s, row) in table.into_iter().enumerate() {
            let mut resolved = Vec::with_capacity(row.len());
            for (k, t) in row.into_iter().enumerate() {
                match t {
                    Some(t) => resolved.push(t),
                    None => {
                        let profile = arena.profile_at(s, k);
                        return Err(GameError::MissingTransition {
                            state: arena.states[s].clone(),
                            profile: arena.profile_names(s, &profile),
                        });
                    }
                }
            }
            transitions.push(resolved);
        }
        arena.transitions = transitions;
        Ok(arena)
    }
}

fn index_of(ids: &[String], kind: &'static str) -> Result<BTreeMap<String, usize>, GameError> {
    let mut map = BTreeMap::new();
    for (i, id) in ids.iter().enumerate() {
        if map.insert(id.clone(), i).is_some() {
            return Err(GameError::Duplicate {
                kind,
                id: id.clone(),
            });
        }
    }
    Ok(map)
}

/// All combinations picking one element per list, last list fastest.
pub(crate) fn cartesian(lists: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::with_capacity(lists.len())];
    for list in lists {
        let mut next = Vec::with_capacity(out.len() * list.len());
        for prefix in &out {
            for &x in list {
                let mut v = prefix.clone();
                v.push(x);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

impl Arena {
    pub fn player_count(&self) -> usize {
        self.players.len()
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn players(&self) -> &[String] {
        &self.players
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn alphabet(&self) -> &BTreeSet<String> {
        &self.alphabet
    }

    pub fn labels(&self, state: usize) -> &BTreeSet<String> {
        &self.labels[state]
    }

    pub fn player_index(&self, id: &str) -> Option<usize> {
        self.players.iter().position(|p| p == id)
    }

    pub fn state_index(&self, id: &str) -> Option<usize> {
        self.states.iter().position(|s| s == id)
    }

    pub fn actions(&self, state: usize, player: usize) -> &[String] {
        &self.actions[state][player]
    }

    pub fn action_count(&self, state: usize, player: usize) -> usize {
        self.actions[state][player].len()
    }

    pub fn profile_count(&self, state: usize) -> usize {
        self.actions[state].iter().map(Vec::len).product()
    }

    pub fn profile_index(&self, state: usize, profile: &[usize]) -> usize {
        let mut k = 0;
        for (p, &a) in profile.iter().enumerate() {
            k = k * self.action_count(state, p) + a;
        }
        k
    }

    pub fn profile_at(&self, state: usize, mut index: usize) -> Profile {
        let n = self.player_count();
        let mut profile = vec![0; n];
        for p in (0..n).rev() {
            let c = self.action_count(state, p);
            profile[p] = index % c;
            index /= c;
        }
        profile
    }

    pub fn profiles(&self, state: usize) -> impl Iterator<Item = Profile> + '_ {
        (0..self.profile_count(state)).map(move |k| self.profile_at(state, k))
    }

    pub fn is_valid_profile(&self, state: usize, profile: &[usize]) -> bool {
        profile.len() == self.player_count()
            && profile
                .iter()
                .enumerate()
                .all(|(p, &a)| a < self.action_count(state, p))
    }

    pub fn successor(&self, state: usize, profile: &[usize]) -> usize {
        self.transitions[state][self.profile_index(state, profile)]
    }

    pub fn successor_by_index(&self, state: usize, profile_index: usize) -> usize {
        self.transitions[state][profile_index]
    }

    pub fn profile_names(&self, state: usize, profile: &[usize]) -> Vec<String> {
        profile
            .iter()
            .enumerate()
            .map(|(p, &a)| self.actions[state][p][a].clone())
            .collect()
    }

    /// Every (state, profile) pair of the arena.
    pub fn configurations(&self) -> impl Iterator<Item = Config> + '_ {
        (0..self.state_count()).flat_map(move |s| {
            self.profiles(s).map(move |profile| Config { state: s, profile })
        })
    }
}

/// A concurrent multi-player game with rational state weights per player.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcurrentGame {
    arena: Arc<Arena>,
    /// `weights[player][state]`.
    weights: Vec<Vec<Rational>>,
}

impl ConcurrentGame {
    pub fn new(arena: Arena, weights: Vec<Vec<Rational>>) -> Result<Self, GameError> {
        Self::with_shared_arena(Arc::new(arena), weights)
    }

    pub fn with_shared_arena(
        arena: Arc<Arena>,
        weights: Vec<Vec<Rational>>,
    ) -> Result<Self, GameError> {
        if weights.len() != arena.player_count() {
            return Err(GameError::WeightShape(format!(
                "{} weight rows for {} players",
                weights.len(),
                arena.player_count()
            )));
        }
        if let Some((p, row)) = weights
            .iter()
            .enumerate()
            .find(|(_, row)| row.len() != arena.state_count())
        {
            return Err(GameError::WeightShape(format!(
                "player `{}` has {} weights for {} states",
                arena.players()[p],
                row.len(),
                arena.state_count()
            )));
        }
        Ok(Self { arena, weights })
    }

    pub fn arena(&self) -> &Arena {
        &self.arena
    }

    pub fn shared_arena(&self) -> Arc<Arena> {
        Arc::clone(&self.arena)
    }

    pub fn player_count(&self) -> usize {
        self.arena.player_count()
    }

    pub fn state_count(&self) -> usize {
        self.arena.state_count()
    }

    pub fn weight(&self, player: usize, state: usize) -> &Rational {
        &self.weights[player][state]
    }

    pub fn weights(&self, player: usize) -> &[Rational] {
        &self.weights[player]
    }

    pub fn weight_table(&self) -> &[Vec<Rational>] {
        &self.weights
    }

    pub fn min_weight(&self) -> Rational {
        self.weights
            .iter()
            .flatten()
            .min()
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    /// Per-state sum of all players' weights.
    pub fn total_weights(&self) -> Vec<Rational> {
        (0..self.state_count())
            .map(|s| self.weights.iter().map(|row| &row[s]).sum())
            .collect()
    }
}

/// One step of a path: the current state and the profile played there.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Config {
    pub state: usize,
    pub profile: Profile,
}

impl Config {
    pub fn new(state: usize, profile: Profile) -> Self {
        Self { state, profile }
    }
}

/// Ultimately periodic path `prefix · cycle^ω`, validated on construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lasso {
    prefix: Vec<Config>,
    cycle: Vec<Config>,
}

impl Lasso {
    pub fn new(arena: &Arena, prefix: Vec<Config>, cycle: Vec<Config>) -> Result<Self, GameError> {
        if cycle.is_empty() {
            return Err(GameError::MalformedLasso("empty cycle".into()));
        }
        let path: Vec<&Config> = prefix.iter().chain(cycle.iter()).collect();
        for c in &path {
            if c.state >= arena.state_count() || !arena.is_valid_profile(c.state, &c.profile) {
                return Err(GameError::MalformedLasso(format!(
                    "invalid configuration {c:?}"
                )));
            }
        }
        for w in path.windows(2) {
            if arena.successor(w[0].state, &w[0].profile) != w[1].state {
                return Err(GameError::MalformedLasso(format!(
                    "{:?} does not lead to state {}",
                    w[0], w[1].state
                )));
            }
        }
        let last = cycle.last().expect("non-empty");
        if arena.successor(last.state, &last.profile) != cycle[0].state {
            return Err(GameError::MalformedLasso(
                "cycle does not wrap around".into(),
            ));
        }
        Ok(Self { prefix, cycle })
    }

    /// Like [`Lasso::new`] but also requires the path to start at the
    /// arena's initial state.
    pub fn rooted(arena: &Arena, prefix: Vec<Config>, cycle: Vec<Config>) -> Result<Self, GameError> {
        let lasso = Self::new(arena, prefix, cycle)?;
        if lasso.first_state() != arena.initial() {
            return Err(GameError::MalformedLasso(
                "path does not start at the initial state".into(),
            ));
        }
        Ok(lasso)
    }

    pub fn prefix(&self) -> &[Config] {
        &self.prefix
    }

    pub fn cycle(&self) -> &[Config] {
        &self.cycle
    }

    pub fn first_state(&self) -> usize {
        self.prefix.first().unwrap_or(&self.cycle[0]).state
    }

    pub fn configs(&self) -> impl Iterator<Item = &Config> {
        self.prefix.iter().chain(self.cycle.iter())
    }

    /// States occurring infinitely often.
    pub fn cycle_states(&self) -> BTreeSet<usize> {
        self.cycle.iter().map(|c| c.state).collect()
    }

    pub fn rotate_cycle(&self, arena: &Arena, by: usize) -> Self {
        let mut cycle = self.cycle.clone();
        let k = by % cycle.len();
        cycle.rotate_left(k);
        // Keep the path connected: the configs skipped by the rotation
        // move into the prefix.
        let mut prefix = self.prefix.clone();
        prefix.extend(self.cycle[..k].iter().cloned());
        Self::new(arena, prefix, cycle).expect("rotation preserves validity")
    }
}

/// Mean payoff of a lasso: the lim inf of running averages, which for an
/// ultimately periodic sequence is the average over the cycle.
pub fn mean_payoff(lasso: &Lasso, weight: &[Rational]) -> Rational {
    let sum: Rational = lasso.cycle().iter().map(|c| &weight[c.state]).sum();
    sum / Rational::from_integer(lasso.cycle().len().into())
}

pub fn payoff(game: &ConcurrentGame, lasso: &Lasso, player: usize) -> Result<Rational, GameError> {
    if player >= game.player_count() {
        return Err(GameError::UnknownPlayer(format!("#{player}")));
    }
    Ok(mean_payoff(lasso, game.weights(player)))
}
