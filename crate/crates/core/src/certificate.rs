//! Independent replay of yes-certificates.

use thiserror::Error;

use crate::game::Lasso;
use crate::gr1::holds_on_lasso;
use crate::punishment::{is_z_secure, pun_value_set, punishment_table};
use crate::rational::{format_rational, Rational};
use crate::scheme::apply_scheme;
use crate::solver::{Certificate, Query};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReplayError {
    #[error("scheme cost {0} exceeds the budget")]
    Cost(u64),
    #[error("scheme leaves the support")]
    Support,
    #[error("z_{0} = {1} is not a punishment value")]
    NotPunishment(usize, String),
    #[error("configuration at state {0} is not secure for player {1}")]
    Insecure(usize, usize),
    #[error("witness does not form a rooted path: {0}")]
    Path(String),
    #[error("payoff of player {0} is {1}, below z = {2}")]
    Payoff(usize, String, String),
    #[error("reported payoffs differ from the replayed ones")]
    PayoffMismatch,
    #[error("specification fails on the witness")]
    Spec,
    #[error("welfare threshold fails on the witness")]
    Welfare,
    #[error("{0}")]
    Other(String),
}

/// Checks cost, z membership, z-security of every configuration, payoffs
/// against z, the GR(1) specification and any welfare threshold.
pub fn revalidate(query: &Query, cert: &Certificate) -> Result<(), ReplayError> {
    let cost = cert.scheme.cost();
    if cost > query.budget {
        return Err(ReplayError::Cost(cost));
    }
    if !cert.scheme.is_supported_on(&query.slots()) {
        return Err(ReplayError::Support);
    }
    let game = apply_scheme(&query.game, &cert.scheme).map_err(|e| ReplayError::Other(e.to_string()))?;
    let arena = game.arena();
    let table = punishment_table(&game).map_err(|e| ReplayError::Other(e.to_string()))?;
    for (i, z) in cert.z.iter().enumerate() {
        if !pun_value_set(&table, i).contains(z) {
            return Err(ReplayError::NotPunishment(i, format_rational(z)));
        }
    }
    for c in cert.witness.configs() {
        for (i, z) in cert.z.iter().enumerate() {
            if !is_z_secure(&game, &table, c.state, &c.profile, i, z) {
                return Err(ReplayError::Insecure(c.state, i));
            }
        }
    }
    let mut lassos: Vec<Lasso> = Vec::new();
    for t in 1..=2 {
        let round = cert.witness.round(t);
        let lasso =
            Lasso::rooted(arena, cert.witness.prefix.clone(), round).map_err(|e| ReplayError::Path(e.to_string()))?;
        lassos.push(lasso);
    }
    let payoffs: Vec<Rational> = (0..game.player_count())
        .map(|i| cert.witness.mean_payoff(game.weights(i)))
        .collect();
    if payoffs != cert.payoffs {
        return Err(ReplayError::PayoffMismatch);
    }
    for (i, (p, z)) in payoffs.iter().zip(&cert.z).enumerate() {
        if p < z {
            return Err(ReplayError::Payoff(i, format_rational(p), format_rational(z)));
        }
    }
    if !lassos.iter().all(|l| holds_on_lasso(&query.spec, &game, l)) {
        return Err(ReplayError::Spec);
    }
    if let Some(w) = &query.welfare {
        if !w.holds(&payoffs) {
            return Err(ReplayError::Welfare);
        }
    }
    Ok(())
}
