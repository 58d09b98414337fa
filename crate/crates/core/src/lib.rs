//! Equilibrium design for concurrent mean-payoff games with GR(1) goals.
//!
//! A principal adds natural-number rewards to player/state weights, within
//! a budget, so that some (weak) or every (strong) Nash equilibrium of the
//! resulting game satisfies a GR(1) specification.

pub mod certificate;
pub mod fixtures;
pub mod format;
pub mod game;
pub mod gr1;
pub mod lp;
pub mod meancycle;
pub mod oracle;
pub mod punishment;
pub mod rational;
pub mod scheme;
pub mod solver;

pub use game::{ArenaBuilder, Arena, Config, ConcurrentGame, GameError, Lasso};
pub use gr1::{holds_on_lasso, parse_formula, sat_states, Formula, GR1Spec};
pub use rational::Rational;
pub use scheme::{apply_scheme, enumerate_schemes, scheme_cost, scheme_count, RewardScheme, Slot};
