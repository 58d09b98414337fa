//! JSON documents: games, specifications, schemes, supports and verdicts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::game::{ArenaBuilder, Config, ConcurrentGame, GameError};
use crate::gr1::{FormulaError, GR1Spec};
use crate::lp::WitnessSchedule;
use crate::rational::{format_rational, serde_text, Rational};
use crate::scheme::{RewardScheme, Slot};
use crate::solver::{BadWitness, Certificate, Mode, NeWitness, SearchStats, Verdict, WitnessKind};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{field}: {msg}")]
    Field { field: String, msg: String },
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("{field}: {source}")]
    Formula {
        field: String,
        #[source]
        source: FormulaError,
    },
}

fn field_err(field: impl Into<String>, msg: impl Into<String>) -> FormatError {
    FormatError::Field {
        field: field.into(),
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateEntry {
    pub id: String,
    #[serde(default)]
    pub labels: Vec<String>,
    #[serde(default)]
    pub weights: BTreeMap<String, WeightValue>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightValue(#[serde(with = "serde_text")] pub Rational);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionEntry {
    pub from: String,
    pub profile: Vec<String>,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub players: Vec<String>,
    pub states: Vec<StateEntry>,
    pub initial: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<String>>,
    pub actions: BTreeMap<String, BTreeMap<String, Vec<String>>>,
    pub transitions: Vec<TransitionEntry>,
}

impl GameFile {
    pub fn into_game(self) -> Result<ConcurrentGame, FormatError> {
        let mut b = ArenaBuilder::new();
        for p in &self.players {
            b = b.player(p);
        }
        for s in &self.states {
            b = b.state(&s.id, s.labels.iter().cloned());
        }
        b = b.initial(&self.initial);
        if let Some(atoms) = &self.atoms {
            b = b.alphabet(atoms.iter().cloned());
        }
        for (state, per_player) in &self.actions {
            for (player, acts) in per_player {
                b = b.actions(state, player, acts.iter().cloned());
            }
        }
        for t in &self.transitions {
            b = b.transition(&t.from, &t.profile, &t.to);
        }
        let arena = b.build()?;
        let mut weights = vec![vec![Rational::from_integer(0.into()); self.states.len()]; self.players.len()];
        for (si, s) in self.states.iter().enumerate() {
            for (player, w) in &s.weights {
                let p = self
                    .players
                    .iter()
                    .position(|x| x == player)
                    .ok_or_else(|| field_err(format!("states[{si}].weights"), format!("unknown player `{player}`")))?;
                weights[p][si] = w.0.clone();
            }
            if let Some(p) = self.players.iter().find(|p| !s.weights.contains_key(*p)) {
                return Err(field_err(format!("states[{si}].weights"), format!("missing weight for player `{p}`")));
            }
        }
        Ok(ConcurrentGame::new(arena, weights)?)
    }

    /// Explicit (wildcard-free) encoding of a game.
    pub fn from_game(game: &ConcurrentGame) -> Self {
        let a = game.arena();
        let states = (0..a.state_count())
            .map(|s| StateEntry {
                id: a.states()[s].clone(),
                labels: a.labels(s).iter().cloned().collect(),
                weights: a
                    .players()
                    .iter()
                    .enumerate()
                    .map(|(p, name)| (name.clone(), WeightValue(game.weight(p, s).clone())))
                    .collect(),
            })
            .collect();
        let mut actions = BTreeMap::new();
        let mut transitions = Vec::new();
        for s in 0..a.state_count() {
            let per: BTreeMap<String, Vec<String>> = a
                .players()
                .iter()
                .enumerate()
                .map(|(p, name)| (name.clone(), a.actions(s, p).to_vec()))
                .collect();
            actions.insert(a.states()[s].clone(), per);
            for profile in a.profiles(s) {
                transitions.push(TransitionEntry {
                    from: a.states()[s].clone(),
                    profile: a.profile_names(s, &profile),
                    to: a.states()[a.successor(s, &profile)].clone(),
                });
            }
        }
        Self {
            players: a.players().to_vec(),
            states,
            initial: a.states()[a.initial()].clone(),
            atoms: Some(a.alphabet().iter().cloned().collect()),
            actions,
            transitions,
        }
    }
}

pub fn parse_game(text: &str) -> Result<ConcurrentGame, FormatError> {
    serde_json::from_str::<GameFile>(text)?.into_game()
}

pub fn game_to_json(game: &ConcurrentGame) -> String {
    serde_json::to_string_pretty(&GameFile::from_game(game)).expect("serializable") + "\n"
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    #[serde(default)]
    pub assumptions: Vec<String>,
    #[serde(default)]
    pub guarantees: Vec<String>,
}

pub fn parse_spec(text: &str, game: &ConcurrentGame) -> Result<GR1Spec, FormatError> {
    let file: SpecFile = serde_json::from_str(text)?;
    let mut spec = GR1Spec::default();
    for (key, list, out) in [
        ("assumptions", &file.assumptions, &mut spec.assumptions),
        ("guarantees", &file.guarantees, &mut spec.guarantees),
    ] {
        for (k, f) in list.iter().enumerate() {
            let field = format!("{key}[{k}]");
            let parsed = crate::gr1::parse_formula(f).map_err(|source| FormatError::Formula {
                field: field.clone(),
                source,
            })?;
            parsed
                .check_bound(game.arena().alphabet())
                .map_err(|source| FormatError::Formula { field, source })?;
            out.push(parsed);
        }
    }
    Ok(spec)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeEntry {
    pub player: String,
    pub state: String,
    pub amount: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeFile {
    pub entries: Vec<SchemeEntry>,
}

fn slot_of(game: &ConcurrentGame, player: &str, state: &str, field: &str) -> Result<Slot, FormatError> {
    let a = game.arena();
    let p = a
        .player_index(player)
        .ok_or_else(|| field_err(field, format!("unknown player `{player}`")))?;
    let s = a
        .state_index(state)
        .ok_or_else(|| field_err(field, format!("unknown state `{state}`")))?;
    Ok((p, s))
}

pub fn scheme_to_file(game: &ConcurrentGame, scheme: &RewardScheme) -> SchemeFile {
    let a = game.arena();
    SchemeFile {
        entries: scheme
            .entries()
            .map(|((p, s), amount)| SchemeEntry {
                player: a.players()[p].clone(),
                state: a.states()[s].clone(),
                amount,
            })
            .collect(),
    }
}

/// Reads a scheme file, or the scheme inside a verdict document.
pub fn parse_scheme(text: &str, game: &ConcurrentGame) -> Result<RewardScheme, FormatError> {
    let value: Value = serde_json::from_str(text)?;
    let inner = if value.get("entries").is_some() {
        value
    } else if let Some(s) = value.get("certificate").and_then(|c| c.get("scheme")) {
        s.clone()
    } else if let Some(s) = value.get("scheme") {
        s.clone()
    } else {
        return Err(field_err("entries", "expected a scheme or a verdict with a certificate"));
    };
    let file: SchemeFile = serde_json::from_value(inner)?;
    let mut scheme = RewardScheme::zero();
    for (k, e) in file.entries.iter().enumerate() {
        scheme.add(slot_of(game, &e.player, &e.state, &format!("entries[{k}]"))?, e.amount);
    }
    Ok(scheme)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotEntry {
    pub player: String,
    pub state: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportFile {
    pub slots: Vec<SlotEntry>,
}

pub fn parse_support(text: &str, game: &ConcurrentGame) -> Result<Vec<Slot>, FormatError> {
    let file: SupportFile = serde_json::from_str(text)?;
    file.slots
        .iter()
        .enumerate()
        .map(|(k, e)| slot_of(game, &e.player, &e.state, &format!("slots[{k}]")))
        .collect()
}

pub fn support_to_file(game: &ConcurrentGame, slots: &[Slot]) -> SupportFile {
    let a = game.arena();
    SupportFile {
        slots: slots
            .iter()
            .map(|&(p, s)| SlotEntry {
                player: a.players()[p].clone(),
                state: a.states()[s].clone(),
            })
            .collect(),
    }
}

fn q(v: &Rational) -> Value {
    Value::String(format_rational(v))
}

fn per_player(game: &ConcurrentGame, values: &[Rational]) -> Value {
    Value::Object(
        game.arena()
            .players()
            .iter()
            .zip(values)
            .map(|(p, v)| (p.clone(), q(v)))
            .collect(),
    )
}

fn configs_json(game: &ConcurrentGame, configs: &[Config]) -> Value {
    let a = game.arena();
    Value::Array(
        configs
            .iter()
            .map(|c| {
                json!({
                    "state": a.states()[c.state],
                    "profile": a.profile_names(c.state, &c.profile),
                })
            })
            .collect(),
    )
}

pub fn witness_json(game: &ConcurrentGame, w: &WitnessSchedule) -> Value {
    json!({
        "prefix": configs_json(game, &w.prefix),
        "cycles": w.cycles.iter().map(|(c, m)| json!({
            "configs": configs_json(game, c),
            "multiplicity": m,
        })).collect::<Vec<_>>(),
        "connectors": w.connectors.iter().map(|c| configs_json(game, c)).collect::<Vec<_>>(),
        "schedule": "prefix, then for round t = 1, 2, ...: each cycle repeated t*multiplicity times followed by its connector",
    })
}

fn kind_json(k: WitnessKind) -> Value {
    match k {
        WitnessKind::Free => json!({"program": "equilibrium"}),
        WitnessKind::Guarantee => json!({"program": "guarantees"}),
        WitnessKind::Assumption(l) => json!({"program": "assumption", "index": l}),
        WitnessKind::NegSpec(r) => json!({"program": "violation", "guarantee": r}),
    }
}

pub fn certificate_json(game: &ConcurrentGame, c: &Certificate) -> Value {
    json!({
        "mode": mode_name(c.mode),
        "scheme": serde_json::to_value(scheme_to_file(game, &c.scheme)).expect("serializable"),
        "cost": c.scheme.cost(),
        "z": per_player(game, &c.z),
        "witness": witness_json(game, &c.witness),
        "source": kind_json(c.kind),
        "payoffs": per_player(game, &c.payoffs),
        "welfare": {"usw": q(&c.usw), "esw": q(&c.esw)},
    })
}

fn ne_json(game: &ConcurrentGame, w: &NeWitness) -> Value {
    json!({
        "z": per_player(game, &w.z),
        "witness": witness_json(game, &w.schedule),
        "source": kind_json(w.kind),
        "payoffs": per_player(game, &w.payoffs),
    })
}

fn bad_json(game: &ConcurrentGame, b: &BadWitness) -> Value {
    let mut v = ne_json(game, &b.witness);
    v["scheme"] = serde_json::to_value(scheme_to_file(game, &b.scheme)).expect("serializable");
    v
}

fn stats_json(s: &SearchStats) -> Value {
    json!({
        "schemes_examined": s.schemes_examined,
        "z_vectors_examined": s.z_vectors_examined,
        "lps_solved": s.lps_solved,
    })
}

pub fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Weak => "weak",
        Mode::Strong => "strong",
    }
}

/// The verdict document; `game` is the undesigned input game.
pub fn verdict_json(game: &ConcurrentGame, v: &Verdict) -> Value {
    let d = &v.diagnostics;
    // payoffs in the certificate refer to the designed game
    let cert = v.certificate.as_ref().map(|c| certificate_json(game, c));
    json!({
        "answer": if v.answer { "yes" } else { "no" },
        "certificate": cert,
        "stats": stats_json(&v.stats),
        "diagnostics": {
            "bad_equilibrium": d.bad_witness.as_ref().map(|b| bad_json(game, b)),
            "schemes_without_equilibrium": d.schemes_without_equilibrium,
            "fallback_witness": d.fallback_witness,
            "all_equilibria_meet_threshold": d.all_equilibria_meet_threshold,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    const GAME: &str = r#"{
        "players": ["a", "b"],
        "states": [
            {"id": "s", "labels": ["p"], "weights": {"a": 1, "b": "-2/4"}},
            {"id": "t", "labels": [], "weights": {"a": 0, "b": 0}}
        ],
        "initial": "s",
        "actions": {"s": {"a": ["x", "y"], "b": ["u"]}, "t": {"a": ["x"], "b": ["u"]}},
        "transitions": [
            {"from": "s", "profile": ["x", "*"], "to": "s"},
            {"from": "s", "profile": ["y", "u"], "to": "t"},
            {"from": "t", "profile": ["*", "*"], "to": "t"}
        ]
    }"#;

    #[test]
    fn game_round_trip() {
        let g = parse_game(GAME).unwrap();
        assert_eq!(g.weight(1, 0), &ratio(-1, 2));
        let again = parse_game(&game_to_json(&g)).unwrap();
        assert_eq!(again, g);
    }

    #[test]
    fn rejects_bad_games() {
        let dup = GAME.replace(r#"{"from": "s", "profile": ["y", "u"], "to": "t"}"#, r#"{"from": "s", "profile": ["x", "u"], "to": "t"}"#);
        assert!(matches!(parse_game(&dup), Err(FormatError::Game(GameError::DuplicateTransition { .. }))));
        let decimal = GAME.replace("\"a\": 1,", "\"a\": 1.5,");
        assert!(parse_game(&decimal).is_err());
        let missing = GAME.replace(r#""weights": {"a": 0, "b": 0}"#, r#""weights": {"a": 0}"#);
        assert!(matches!(parse_game(&missing), Err(FormatError::Field { .. })));
        assert!(matches!(parse_game("{ nope"), Err(FormatError::Json(_))));
    }

    #[test]
    fn specs_and_schemes() {
        let g = parse_game(GAME).unwrap();
        let spec = parse_spec(r#"{"assumptions": [], "guarantees": ["!p"]}"#, &g).unwrap();
        assert_eq!(spec.guarantees.len(), 1);
        assert!(parse_spec(r#"{"guarantees": ["zz"]}"#, &g).is_err());
        let k = parse_scheme(r#"{"entries": [{"player": "a", "state": "t", "amount": 2}]}"#, &g).unwrap();
        assert_eq!(k.get(0, 1), 2);
        assert!(parse_scheme(r#"{"entries": [{"player": "a", "state": "t", "amount": -1}]}"#, &g).is_err());
        let wrapped = json!({"answer": "yes", "certificate": {"scheme": scheme_to_file(&g, &k)}}).to_string();
        assert_eq!(parse_scheme(&wrapped, &g).unwrap(), k);
        let slots = parse_support(r#"{"slots": [{"player": "b", "state": "s"}]}"#, &g).unwrap();
        assert_eq!(slots, vec![(1, 0)]);
        assert_eq!(format_rational(&int(3)), "3");
    }
}
