//! Weak and strong implementation, scheme verification, budget optimization
//! and welfare thresholds.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::game::ConcurrentGame;
use crate::gr1::{FormulaError, GR1Spec};
use crate::lp::builder::{
    build_assumption_lp, build_guarantee_lp, build_negspec_lp, build_spec_free_lp, scc_reachable, shifted_weights,
    target_weight_row, Candidate, Subgraph, WorkGraph,
};
use crate::lp::simplex::{LpInstance, Relation};
use crate::lp::witness::{extract_witness, WitnessError, WitnessSchedule};
use crate::meancycle::MeanCycleError;
use crate::punishment::{build_secured, punishment_table, z_vectors, PunishmentTable, PunishmentVector};
use crate::rational::Rational;
use crate::scheme::{
    all_slots, apply_scheme, budget_search_bound, enumerate_schemes, scheme_count, schemes_of_cost, RewardScheme,
    SchemeError, Slot,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Weak,
    Strong,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Welfare {
    /// Sum of payoffs at least `t`.
    Usw(Rational),
    /// Minimum payoff at least `t`.
    Esw(Rational),
}

impl Welfare {
    pub fn threshold(&self) -> &Rational {
        match self {
            Welfare::Usw(t) | Welfare::Esw(t) => t,
        }
    }

    pub fn holds(&self, payoffs: &[Rational]) -> bool {
        match self {
            Welfare::Usw(t) => &payoffs.iter().sum::<Rational>() >= t,
            Welfare::Esw(t) => payoffs.iter().all(|p| p >= t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Predicate {
    Any,
    SatSpec,
    ViolSpec,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub game: ConcurrentGame,
    pub spec: GR1Spec,
    pub budget: u64,
    pub mode: Mode,
    pub support: Option<Vec<Slot>>,
    pub welfare: Option<Welfare>,
}

impl Query {
    pub fn new(game: ConcurrentGame, spec: GR1Spec, mode: Mode, budget: u64) -> Self {
        Self {
            game,
            spec,
            budget,
            mode,
            support: None,
            welfare: None,
        }
    }

    pub fn with_support(mut self, support: Vec<Slot>) -> Self {
        self.support = Some(support);
        self
    }

    pub fn with_welfare(mut self, welfare: Welfare) -> Self {
        self.welfare = Some(welfare);
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn slots(&self) -> Vec<Slot> {
        self.support.clone().unwrap_or_else(|| all_slots(&self.game))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    MeanCycle(#[from] MeanCycleError),
    #[error("witness extraction failed: {0}")]
    Witness(#[from] WitnessError),
    #[error("scheme cost {cost} exceeds the budget {budget}")]
    OverBudget { cost: u64, budget: u64 },
    #[error("scheme rewards slot ({0}, {1}) outside the support")]
    Unsupported(usize, usize),
    #[error("support slot ({0}, {1}) is outside the game")]
    BadSupport(usize, usize),
    #[error("search space of {estimate} schemes exceeds the cap of {cap}")]
    ResourceLimit { estimate: BigUint, cap: u64 },
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Largest number of schemes a single search may enumerate.
    pub cap: u64,
    /// Receives the text dump of every LP solved, when set.
    pub lp_dump: Option<Arc<Mutex<Vec<String>>>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            cap: 10_000_000,
            lp_dump: None,
        }
    }
}

/// Which family of programs produced a witness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WitnessKind {
    Free,
    Guarantee,
    Assumption(usize),
    NegSpec(usize),
}

/// An equilibrium path for the punishment vector `z`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeWitness {
    pub z: PunishmentVector,
    pub schedule: WitnessSchedule,
    pub payoffs: Vec<Rational>,
    pub kind: WitnessKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub schemes_examined: u64,
    pub z_vectors_examined: u64,
    pub lps_solved: u64,
}

impl SearchStats {
    fn absorb(&mut self, other: &SearchStats) {
        self.schemes_examined += other.schemes_examined;
        self.z_vectors_examined += other.z_vectors_examined;
        self.lps_solved += other.lps_solved;
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub mode: Mode,
    pub scheme: RewardScheme,
    pub z: PunishmentVector,
    pub witness: WitnessSchedule,
    pub kind: WitnessKind,
    pub payoffs: Vec<Rational>,
    pub usw: Rational,
    pub esw: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BadWitness {
    pub scheme: RewardScheme,
    pub witness: NeWitness,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Diagnostics {
    /// Strong mode: the first equilibrium violating the GR(1) specification.
    pub bad_witness: Option<BadWitness>,
    /// Strong mode: schemes rejected because no equilibrium exists.
    pub schemes_without_equilibrium: u64,
    /// Strong mode: the certificate path comes from the spec-free program.
    pub fallback_witness: bool,
    /// With a welfare threshold: whether every equilibrium of the designed
    /// game meets it, not only the certified one.
    pub all_equilibria_meet_threshold: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub answer: bool,
    pub certificate: Option<Certificate>,
    pub stats: SearchStats,
    pub diagnostics: Diagnostics,
}

/// Per-player weight rows of the flow programs: `w_i − z_i`, augmented for
/// welfare thresholds.
pub fn dimension_weights(game: &ConcurrentGame, z: &[Rational], welfare: Option<&Welfare>) -> Vec<Vec<Rational>> {
    match welfare {
        None => shifted_weights(game, z),
        Some(Welfare::Usw(t)) => {
            let mut d = shifted_weights(game, z);
            d.push(game.total_weights().into_iter().map(|w| w - t).collect());
            d
        }
        Some(Welfare::Esw(t)) => (0..game.player_count())
            .map(|i| {
                let shift = if &z[i] > t { z[i].clone() } else { t.clone() };
                game.weights(i).iter().map(|w| w - &shift).collect()
            })
            .collect(),
    }
}

struct Ctx<'a> {
    game: &'a ConcurrentGame,
    table: &'a PunishmentTable,
    assumptions: &'a [Vec<bool>],
    guarantees: &'a [Vec<bool>],
    welfare: Option<&'a Welfare>,
    opts: &'a SolverOptions,
}

impl Ctx<'_> {
    fn solve(&self, lp: &LpInstance, stats: &mut SearchStats) -> Option<crate::lp::FeasiblePoint> {
        stats.lps_solved += 1;
        if let Some(sink) = &self.opts.lp_dump {
            sink.lock().expect("dump sink").push(lp.dump());
        }
        lp.feasible()
    }

    fn witness(
        &self,
        graph: &WorkGraph,
        z: &[Rational],
        sub: &Subgraph,
        lp: &LpInstance,
        kind: WitnessKind,
        stats: &mut SearchStats,
    ) -> Result<Option<NeWitness>, SolveError> {
        let Some(point) = self.solve(lp, stats) else {
            return Ok(None);
        };
        let schedule = extract_witness(self.game.arena(), graph, sub, &point)?;
        Ok(Some(NeWitness {
            z: z.to_vec(),
            payoffs: schedule.payoffs(self.game),
            schedule,
            kind,
        }))
    }

    fn first_of(
        &self,
        graph: &WorkGraph,
        z: &[Rational],
        candidates: Vec<Candidate>,
        kind: WitnessKind,
        stats: &mut SearchStats,
    ) -> Result<Option<NeWitness>, SolveError> {
        for c in candidates {
            if let Some(w) = self.witness(graph, z, &c.sub, &c.lp, kind, stats)? {
                return Ok(Some(w));
            }
        }
        Ok(None)
    }

    fn search(&self, predicate: Predicate, stats: &mut SearchStats) -> Result<Option<NeWitness>, SolveError> {
        for z in z_vectors(self.table) {
            stats.z_vectors_examined += 1;
            let secured = build_secured(self.game, self.table, &z);
            if secured.is_empty() {
                continue;
            }
            let graph = WorkGraph::from_secured(self.game, &secured);
            let dims = dimension_weights(self.game, &z, self.welfare);
            for sub in scc_reachable(&graph) {
                let found = match predicate {
                    Predicate::Any => {
                        let lp = build_spec_free_lp(&graph, &sub, &dims);
                        self.witness(&graph, &z, &sub, &lp, WitnessKind::Free, stats)?
                    }
                    Predicate::SatSpec => {
                        let lp = build_guarantee_lp(&graph, &sub, &dims, self.guarantees);
                        let mut w = self.witness(&graph, &z, &sub, &lp, WitnessKind::Guarantee, stats)?;
                        for (l, psi) in self.assumptions.iter().enumerate() {
                            if w.is_some() {
                                break;
                            }
                            let c = build_assumption_lp(&graph, &sub, &dims, psi);
                            w = self.first_of(&graph, &z, c, WitnessKind::Assumption(l), stats)?;
                        }
                        w
                    }
                    Predicate::ViolSpec => {
                        let mut w = None;
                        for (r, theta) in self.guarantees.iter().enumerate() {
                            let c = build_negspec_lp(&graph, &sub, &dims, self.assumptions, theta);
                            w = self.first_of(&graph, &z, c, WitnessKind::NegSpec(r), stats)?;
                            if w.is_some() {
                                break;
                            }
                        }
                        w
                    }
                };
                if found.is_some() {
                    return Ok(found);
                }
            }
        }
        Ok(None)
    }

    /// Some equilibrium has welfare strictly below the threshold.
    fn low_welfare_exists(&self, stats: &mut SearchStats) -> bool {
        let Some(welfare) = self.welfare else {
            return false;
        };
        for z in z_vectors(self.table) {
            let secured = build_secured(self.game, self.table, &z);
            if secured.is_empty() {
                continue;
            }
            let graph = WorkGraph::from_secured(self.game, &secured);
            let dims = shifted_weights(self.game, &z);
            let t = welfare.threshold();
            let strict_rows: Vec<Vec<Rational>> = match welfare {
                Welfare::Usw(_) => vec![self.game.total_weights().into_iter().map(|w| t - w).collect()],
                Welfare::Esw(_) => (0..self.game.player_count())
                    .map(|i| self.game.weights(i).iter().map(|w| t - w).collect())
                    .collect(),
            };
            for sub in scc_reachable(&graph) {
                for row in &strict_rows {
                    let mut lp = build_spec_free_lp(&graph, &sub, &dims);
                    // by homogeneity `< 0` can be written as `≤ −1`
                    lp.push(target_weight_row(&graph, &sub, row), Relation::Ge, Rational::one());
                    if self.solve(&lp, stats).is_some() {
                        return true;
                    }
                }
            }
        }
        false
    }
}

/// Searches the equilibria of `game` (rewards already applied) for a path
/// matching `predicate`, trying z-vectors in lexicographic order.
pub fn ne_witness_exists(
    game: &ConcurrentGame,
    spec: &GR1Spec,
    predicate: Predicate,
    welfare: Option<&Welfare>,
    opts: &SolverOptions,
) -> Result<Option<NeWitness>, SolveError> {
    let table = punishment_table(game)?;
    let (assumptions, guarantees) = spec.masks(game)?;
    let ctx = Ctx {
        game,
        table: &table,
        assumptions: &assumptions,
        guarantees: &guarantees,
        welfare,
        opts,
    };
    ctx.search(predicate, &mut SearchStats::default())
}

fn payoff_welfare(payoffs: &[Rational]) -> (Rational, Rational) {
    let usw = payoffs.iter().sum();
    let esw = payoffs.iter().min().cloned().unwrap_or_else(Rational::zero);
    (usw, esw)
}

enum Outcome {
    Yes(Certificate, Diagnostics),
    No {
        bad: Option<NeWitness>,
        no_equilibrium: bool,
    },
}

fn evaluate(query: &Query, scheme: &RewardScheme, opts: &SolverOptions, stats: &mut SearchStats) -> Result<Outcome, SolveError> {
    let game = apply_scheme(&query.game, scheme)?;
    let table = punishment_table(&game)?;
    let (assumptions, guarantees) = query.spec.masks(&game)?;
    let ctx = Ctx {
        game: &game,
        table: &table,
        assumptions: &assumptions,
        guarantees: &guarantees,
        welfare: query.welfare.as_ref(),
        opts,
    };
    stats.schemes_examined += 1;
    let mut diagnostics = Diagnostics::default();
    let witness = match query.mode {
        Mode::Weak => match ctx.search(Predicate::SatSpec, stats)? {
            Some(w) => w,
            None => {
                return Ok(Outcome::No {
                    bad: None,
                    no_equilibrium: false,
                })
            }
        },
        Mode::Strong => {
            let Some(any) = ctx.search(Predicate::Any, stats)? else {
                return Ok(Outcome::No {
                    bad: None,
                    no_equilibrium: true,
                });
            };
            if let Some(bad) = ctx.search(Predicate::ViolSpec, stats)? {
                return Ok(Outcome::No {
                    bad: Some(bad),
                    no_equilibrium: false,
                });
            }
            match ctx.search(Predicate::SatSpec, stats)? {
                Some(w) => w,
                None => {
                    diagnostics.fallback_witness = true;
                    any
                }
            }
        }
    };
    if query.welfare.is_some() {
        diagnostics.all_equilibria_meet_threshold = Some(!ctx.low_welfare_exists(stats));
    }
    let (usw, esw) = payoff_welfare(&witness.payoffs);
    Ok(Outcome::Yes(
        Certificate {
            mode: query.mode,
            scheme: scheme.clone(),
            z: witness.z,
            kind: witness.kind,
            witness: witness.schedule,
            payoffs: witness.payoffs,
            usw,
            esw,
        },
        diagnostics,
    ))
}

fn validate_support(query: &Query) -> Result<Vec<Slot>, SolveError> {
    let slots = query.slots();
    for &(p, s) in &slots {
        if p >= query.game.player_count() || s >= query.game.state_count() {
            return Err(SolveError::BadSupport(p, s));
        }
    }
    query.spec.check_bound(&query.game)?;
    Ok(slots)
}

/// Decides whether `scheme` implements the GR(1) specification.
pub fn verify_scheme(query: &Query, scheme: &RewardScheme, opts: &SolverOptions) -> Result<Verdict, SolveError> {
    let slots = validate_support(query)?;
    if scheme.cost() > query.budget {
        return Err(SolveError::OverBudget {
            cost: scheme.cost(),
            budget: query.budget,
        });
    }
    if let Some(((p, s), _)) = scheme.entries().find(|(k, _)| !slots.contains(k)) {
        return Err(SolveError::Unsupported(p, s));
    }
    let mut stats = SearchStats::default();
    let outcome = evaluate(query, scheme, opts, &mut stats)?;
    Ok(into_verdict(outcome, scheme, stats))
}

fn into_verdict(outcome: Outcome, scheme: &RewardScheme, stats: SearchStats) -> Verdict {
    match outcome {
        Outcome::Yes(certificate, diagnostics) => Verdict {
            answer: true,
            certificate: Some(certificate),
            stats,
            diagnostics,
        },
        Outcome::No { bad, no_equilibrium } => Verdict {
            answer: false,
            certificate: None,
            stats,
            diagnostics: Diagnostics {
                bad_witness: bad.map(|witness| BadWitness {
                    scheme: scheme.clone(),
                    witness,
                }),
                schemes_without_equilibrium: no_equilibrium as u64,
                ..Diagnostics::default()
            },
        },
    }
}

const CHUNK: usize = 64;

/// Tries every admissible scheme in canonical order and returns the first
/// one that works.
pub fn check(query: &Query, opts: &SolverOptions) -> Result<Verdict, SolveError> {
    let slots = validate_support(query)?;
    let estimate = if slots.is_empty() {
        BigUint::one()
    } else {
        scheme_count(slots.len() as u64, query.budget)
    };
    if estimate > BigUint::from(opts.cap) {
        return Err(SolveError::ResourceLimit {
            estimate,
            cap: opts.cap,
        });
    }
    let mut schemes = enumerate_schemes(&slots, query.budget).peekable();
    let mut total = SearchStats::default();
    let mut diagnostics = Diagnostics::default();
    let chunk = CHUNK * rayon::current_num_threads().max(1);
    while schemes.peek().is_some() {
        let batch: Vec<RewardScheme> = schemes.by_ref().take(chunk).collect();
        let results: Vec<Result<(Outcome, SearchStats), SolveError>> = batch
            .par_iter()
            .map(|k| {
                let mut s = SearchStats::default();
                evaluate(query, k, opts, &mut s).map(|o| (o, s))
            })
            .collect();
        for (k, r) in batch.iter().zip(results) {
            let (outcome, s) = r?;
            total.absorb(&s);
            match outcome {
                Outcome::Yes(certificate, d) => {
                    diagnostics.fallback_witness = d.fallback_witness;
                    diagnostics.all_equilibria_meet_threshold = d.all_equilibria_meet_threshold;
                    return Ok(Verdict {
                        answer: true,
                        certificate: Some(certificate),
                        stats: total,
                        diagnostics,
                    });
                }
                Outcome::No { bad, no_equilibrium } => {
                    diagnostics.schemes_without_equilibrium += no_equilibrium as u64;
                    if diagnostics.bad_witness.is_none() {
                        diagnostics.bad_witness = bad.map(|witness| BadWitness {
                            scheme: k.clone(),
                            witness,
                        });
                    }
                }
            }
        }
    }
    Ok(Verdict {
        answer: false,
        certificate: None,
        stats: total,
        diagnostics,
    })
}

/// Threshold variants are `check` with welfare rows; kept as a named entry
/// point.
pub fn check_threshold(query: &Query, opts: &SolverOptions) -> Result<Verdict, SolveError> {
    check(query, opts)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptResult {
    pub optimum: Option<u64>,
    pub scheme: Option<RewardScheme>,
    pub verdict: Option<Verdict>,
    pub bound: u64,
    pub unique: Option<bool>,
}

/// Least budget admitting an implementing scheme, searched between 0 and
/// [`budget_search_bound`].
pub fn opt(query: &Query, opts: &SolverOptions) -> Result<OptResult, SolveError> {
    let table = punishment_table(&query.game)?;
    let bound = budget_search_bound(&query.game, &table.values);
    let mut cache: BTreeMap<u64, Verdict> = BTreeMap::new();
    let probe = |b: u64, cache: &mut BTreeMap<u64, Verdict>| -> Result<bool, SolveError> {
        if let Some(v) = cache.get(&b) {
            return Ok(v.answer);
        }
        let v = check(&query.clone().with_budget(b), opts)?;
        let a = v.answer;
        cache.insert(b, v);
        Ok(a)
    };
    // gallop to the first positive probe, then bisect below it
    let mut lo: Option<u64> = None;
    let mut hi: Option<u64> = None;
    let mut b = 0u64;
    loop {
        if probe(b, &mut cache)? {
            hi = Some(b);
            break;
        }
        lo = Some(b);
        if b >= bound {
            break;
        }
        b = if b == 0 { 1 } else { (b * 2).min(bound) };
    }
    let Some(mut hi) = hi else {
        return Ok(OptResult {
            optimum: None,
            scheme: None,
            verdict: None,
            bound,
            unique: None,
        });
    };
    let mut lo = lo.map_or(0, |l| l + 1);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if probe(mid, &mut cache)? {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let verdict = cache.remove(&hi).expect("probed");
    Ok(OptResult {
        optimum: Some(hi),
        scheme: verdict.certificate.as_ref().map(|c| c.scheme.clone()),
        verdict: Some(verdict),
        bound,
        unique: None,
    })
}

/// Whether `b` is exactly the optimum budget.
pub fn exact(query: &Query, b: u64, opts: &SolverOptions) -> Result<bool, SolveError> {
    if !check(&query.clone().with_budget(b), opts)?.answer {
        return Ok(false);
    }
    Ok(b == 0 || !check(&query.clone().with_budget(b - 1), opts)?.answer)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UoptResult {
    pub optimum: Option<u64>,
    pub unique: bool,
    pub schemes: Vec<RewardScheme>,
}

/// All optimal schemes; `unique` iff there is exactly one.
pub fn uopt(query: &Query, opts: &SolverOptions) -> Result<UoptResult, SolveError> {
    let o = opt(query, opts)?;
    let Some(best) = o.optimum else {
        return Ok(UoptResult {
            optimum: None,
            unique: false,
            schemes: Vec::new(),
        });
    };
    let slots = validate_support(query)?;
    let q = query.clone().with_budget(best);
    let candidates: Vec<RewardScheme> = schemes_of_cost(&slots, best).collect();
    if candidates.len() as u64 > opts.cap {
        return Err(SolveError::ResourceLimit {
            estimate: BigUint::from(candidates.len()),
            cap: opts.cap,
        });
    }
    let passing: Vec<Option<RewardScheme>> = candidates
        .par_iter()
        .map(|k| {
            let mut s = SearchStats::default();
            Ok(match evaluate(&q, k, opts, &mut s)? {
                Outcome::Yes(..) => Some(k.clone()),
                Outcome::No { .. } => None,
            })
        })
        .collect::<Result<_, SolveError>>()?;
    let schemes: Vec<RewardScheme> = passing.into_iter().flatten().collect();
    Ok(UoptResult {
        optimum: Some(best),
        unique: schemes.len() == 1,
        schemes,
    })
}
