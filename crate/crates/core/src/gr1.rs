//! Boolean state formulas and GR(1) specifications evaluated on lassos.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::game::{ConcurrentGame, Lasso};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Atom(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("unexpected character `{ch}` at position {pos}")]
    UnknownToken { ch: char, pos: usize },
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("atom `{0}` is not in the game's alphabet")]
    UnboundAtom(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    True,
    False,
    Ident(String),
    Not,
    And,
    Or,
    Implies,
    LParen,
    RParen,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, FormulaError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        let two = |s: &str| chars[i..].iter().take(2).collect::<String>() == s;
        let tok = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '!' | '~' | '¬' => Tok::Not,
            '∧' => Tok::And,
            '∨' => Tok::Or,
            '→' => Tok::Implies,
            '&' => {
                if two("&&") {
                    i += 1;
                }
                Tok::And
            }
            '|' => {
                if two("||") {
                    i += 1;
                }
                Tok::Or
            }
            '-' if two("->") => {
                i += 1;
                Tok::Implies
            }
            c if c.is_alphanumeric() || c == '_' => {
                while i + 1 < chars.len() && (chars[i + 1].is_alphanumeric() || matches!(chars[i + 1], '_' | '.')) {
                    i += 1;
                }
                let word: String = chars[start..=i].iter().collect();
                match word.as_str() {
                    "true" => Tok::True,
                    "false" => Tok::False,
                    _ => Tok::Ident(word),
                }
            }
            c => return Err(FormulaError::UnknownToken { ch: c, pos: start }),
        };
        out.push((start, tok));
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(p, _)| *p)
    }

    fn err(&self, msg: &str) -> FormulaError {
        FormulaError::Syntax {
            pos: self.pos(),
            msg: msg.to_string(),
        }
    }

    fn implication(&mut self) -> Result<Formula, FormulaError> {
        let lhs = self.disjunction()?;
        if self.peek() == Some(&Tok::Implies) {
            self.at += 1;
            let rhs = self.implication()?;
            return Ok(Formula::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, FormulaError> {
        let mut f = self.conjunction()?;
        while self.peek() == Some(&Tok::Or) {
            self.at += 1;
            f = Formula::Or(Box::new(f), Box::new(self.conjunction()?));
        }
        Ok(f)
    }

    fn conjunction(&mut self) -> Result<Formula, FormulaError> {
        let mut f = self.unary()?;
        while self.peek() == Some(&Tok::And) {
            self.at += 1;
            f = Formula::And(Box::new(f), Box::new(self.unary()?));
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula, FormulaError> {
        let tok = self.peek().cloned().ok_or_else(|| self.err("unexpected end of formula"))?;
        self.at += 1;
        match tok {
            Tok::Not => Ok(Formula::Not(Box::new(self.unary()?))),
            Tok::True => Ok(Formula::True),
            Tok::False => Ok(Formula::False),
            Tok::Ident(a) => Ok(Formula::Atom(a)),
            Tok::LParen => {
                let f = self.implication()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(self.err("expected `)`"));
                }
                self.at += 1;
                Ok(f)
            }
            _ => {
                self.at -= 1;
                Err(self.err("expected an atom, constant, `!` or `(`"))
            }
        }
    }
}

/// Parses a Boolean formula. Precedence from tightest: `!`, `&`, `|`, `->`
/// (right-associative).
pub fn parse_formula(text: &str) -> Result<Formula, FormulaError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        at: 0,
        end: text.chars().count(),
    };
    let f = p.implication()?;
    if p.at != p.toks.len() {
        return Err(p.err("trailing input"));
    }
    Ok(f)
}

impl Formula {
    pub fn atom(name: &str) -> Self {
        Formula::Atom(name.to_string())
    }

    pub fn negate(self) -> Self {
        Formula::Not(Box::new(self))
    }

    pub fn eval(&self, labels: &BTreeSet<String>) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(a) => labels.contains(a),
            Formula::Not(f) => !f.eval(labels),
            Formula::And(a, b) => a.eval(labels) && b.eval(labels),
            Formula::Or(a, b) => a.eval(labels) || b.eval(labels),
            Formula::Implies(a, b) => !a.eval(labels) || b.eval(labels),
        }
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => {
                out.insert(a.clone());
            }
            Formula::Not(f) => f.collect_atoms(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    pub fn check_bound(&self, alphabet: &BTreeSet<String>) -> Result<(), FormulaError> {
        match self.atoms().into_iter().find(|a| !alphabet.contains(a)) {
            Some(a) => Err(FormulaError::UnboundAtom(a)),
            None => Ok(()),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(x) => write!(f, "!({x})"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
            Formula::Implies(a, b) => write!(f, "({a} -> {b})"),
        }
    }
}

/// States whose labels satisfy `f`, as a membership vector.
pub fn sat_mask(game: &ConcurrentGame, f: &Formula) -> Result<Vec<bool>, FormulaError> {
    let arena = game.arena();
    f.check_bound(arena.alphabet())?;
    Ok((0..arena.state_count()).map(|s| f.eval(arena.labels(s))).collect())
}

pub fn sat_states(game: &ConcurrentGame, f: &Formula) -> Result<BTreeSet<usize>, FormulaError> {
    Ok(sat_mask(game, f)?
        .into_iter()
        .enumerate()
        .filter_map(|(s, b)| b.then_some(s))
        .collect())
}

/// `(⋀ GF ψ_l) → (⋀ GF θ_r)`; empty lists are trivially true.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GR1Spec {
    pub assumptions: Vec<Formula>,
    pub guarantees: Vec<Formula>,
}

impl GR1Spec {
    pub fn new(assumptions: Vec<Formula>, guarantees: Vec<Formula>) -> Self {
        Self {
            assumptions,
            guarantees,
        }
    }

    pub fn trivial() -> Self {
        Self::default()
    }

    pub fn parse<A: AsRef<str>, G: AsRef<str>>(assumptions: &[A], guarantees: &[G]) -> Result<Self, FormulaError> {
        Ok(Self {
            assumptions: assumptions.iter().map(|t| parse_formula(t.as_ref())).collect::<Result<_, _>>()?,
            guarantees: guarantees.iter().map(|t| parse_formula(t.as_ref())).collect::<Result<_, _>>()?,
        })
    }

    pub fn check_bound(&self, game: &ConcurrentGame) -> Result<(), FormulaError> {
        for f in self.assumptions.iter().chain(&self.guarantees) {
            f.check_bound(game.arena().alphabet())?;
        }
        Ok(())
    }

    /// Truth of the GR(1) specification given the set of states visited
    /// infinitely often.
    pub fn holds_on_inf_set(&self, game: &ConcurrentGame, inf: &BTreeSet<usize>) -> bool {
        let arena = game.arena();
        let seen = |f: &Formula| inf.iter().any(|&s| f.eval(arena.labels(s)));
        !self.assumptions.iter().all(seen) || self.guarantees.iter().all(seen)
    }

    /// Sat masks of the assumptions and of the guarantees.
    pub fn masks(&self, game: &ConcurrentGame) -> Result<(Vec<Vec<bool>>, Vec<Vec<bool>>), FormulaError> {
        let a = self.assumptions.iter().map(|f| sat_mask(game, f)).collect::<Result<_, _>>()?;
        let g = self.guarantees.iter().map(|f| sat_mask(game, f)).collect::<Result<_, _>>()?;
        Ok((a, g))
    }
}

pub fn holds_on_lasso(spec: &GR1Spec, game: &ConcurrentGame, lasso: &Lasso) -> bool {
    spec.holds_on_inf_set(game, &lasso.cycle_states())
}
