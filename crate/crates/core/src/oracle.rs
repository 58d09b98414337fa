//! Brute-force reference implementations for tiny instances.
//!
//! Nothing here shares code with the solver's value iteration, Karp, SCC or
//! simplex routines: punishment values come from enumerating coalition
//! strategies and simple cycles, and feasibility from Fourier–Motzkin
//! elimination over cycle weights.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::game::{cartesian, ArenaBuilder, ConcurrentGame};
use crate::gr1::{GR1Spec, Formula};
use crate::rational::{int, Rational};
use crate::scheme::{all_slots, apply_scheme, enumerate_schemes, RewardScheme, Slot};
use crate::solver::{Mode, Welfare};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeGuard {
    pub max_states: usize,
    pub max_players: usize,
    pub max_actions: usize,
    pub max_edges: usize,
    pub max_budget: u64,
}

impl Default for SizeGuard {
    fn default() -> Self {
        Self {
            max_states: 5,
            max_players: 2,
            max_actions: 2,
            max_edges: 25,
            max_budget: 2,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("input exceeds the oracle size guard: {0}")]
pub struct GuardError(pub String);

impl SizeGuard {
    pub fn admit_game(&self, game: &ConcurrentGame) -> Result<(), GuardError> {
        let a = game.arena();
        if a.state_count() > self.max_states {
            return Err(GuardError(format!("{} states", a.state_count())));
        }
        if a.player_count() > self.max_players {
            return Err(GuardError(format!("{} players", a.player_count())));
        }
        for s in 0..a.state_count() {
            for p in 0..a.player_count() {
                if a.action_count(s, p) > self.max_actions {
                    return Err(GuardError(format!("{} actions", a.action_count(s, p))));
                }
            }
        }
        Ok(())
    }
}

/// All simple cycles of a graph given by successor lists, each as a node
/// sequence starting at its smallest node.
pub fn simple_cycles(succ: &[Vec<usize>]) -> Vec<Vec<usize>> {
    fn dfs(start: usize, u: usize, succ: &[Vec<usize>], path: &mut Vec<usize>, on: &mut [bool], out: &mut Vec<Vec<usize>>) {
        for &v in &succ[u] {
            if v == start {
                out.push(path.clone());
            } else if v > start && !on[v] {
                on[v] = true;
                path.push(v);
                dfs(start, v, succ, path, on, out);
                path.pop();
                on[v] = false;
            }
        }
    }
    let dedup: Vec<Vec<usize>> = succ
        .iter()
        .map(|s| {
            let mut s = s.clone();
            s.sort_unstable();
            s.dedup();
            s
        })
        .collect();
    let mut out = Vec::new();
    let mut on = vec![false; succ.len()];
    for start in 0..succ.len() {
        on[start] = true;
        dfs(start, start, &dedup, &mut vec![start], &mut on, &mut out);
        on[start] = false;
    }
    out
}

fn reach_from(succ: &[Vec<usize>], start: usize) -> Vec<bool> {
    let mut seen = vec![false; succ.len()];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(u) = stack.pop() {
        for &v in &succ[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

fn cycle_mean(cycle: &[usize], w: &[Rational]) -> Rational {
    let s: Rational = cycle.iter().map(|&v| &w[v]).sum();
    s / int(cycle.len() as i64)
}

/// Best cycle mean reachable from `start`, by listing simple cycles.
pub fn brute_max_mean(succ: &[Vec<usize>], w: &[Rational], start: usize) -> Rational {
    let reach = reach_from(succ, start);
    simple_cycles(succ)
        .into_iter()
        .filter(|c| reach[c[0]])
        .map(|c| cycle_mean(&c, w))
        .max()
        .expect("a reachable cycle exists in a total graph")
}

fn coalition_choices(game: &ConcurrentGame, s: usize, i: usize) -> Vec<Vec<usize>> {
    let a = game.arena();
    let lists: Vec<Vec<usize>> = (0..a.player_count())
        .filter(|&p| p != i)
        .map(|p| (0..a.action_count(s, p)).collect())
        .collect();
    cartesian(&lists)
}

fn full_profile(partial: &[usize], i: usize, ai: usize) -> Vec<usize> {
    let mut p = partial.to_vec();
    p.insert(i, ai);
    p
}

/// Minimum over memoryless coalition maps of player `i`'s best reachable
/// cycle mean from `s`, where `i` answers after seeing the coalition move.
pub fn brute_pun(game: &ConcurrentGame, i: usize, s: usize, guard: &SizeGuard) -> Result<Rational, GuardError> {
    guard.admit_game(game)?;
    Ok(brute_pun_all(game, i)[s].clone())
}

fn brute_pun_all(game: &ConcurrentGame, i: usize) -> Vec<Rational> {
    let a = game.arena();
    let n = a.state_count();
    let per_state: Vec<Vec<Vec<usize>>> = (0..n).map(|s| coalition_choices(game, s, i)).collect();
    let index_lists: Vec<Vec<usize>> = per_state.iter().map(|c| (0..c.len()).collect()).collect();
    let mut best: Vec<Option<Rational>> = vec![None; n];
    for map in cartesian(&index_lists) {
        let succ: Vec<Vec<usize>> = (0..n)
            .map(|s| {
                let partial = &per_state[s][map[s]];
                (0..a.action_count(s, i))
                    .map(|ai| a.successor(s, &full_profile(partial, i, ai)))
                    .collect()
            })
            .collect();
        for (s, b) in best.iter_mut().enumerate() {
            let v = brute_max_mean(&succ, game.weights(i), s);
            if b.as_ref().map_or(true, |x| v < *x) {
                *b = Some(v);
            }
        }
    }
    best.into_iter().map(|b| b.expect("at least one map")).collect()
}

/// Rows `coeffs · λ ≥ rhs`.
type FmRow = (Vec<Rational>, Rational);

fn normalize(row: &FmRow) -> FmRow {
    let scale = row
        .0
        .iter()
        .chain(std::iter::once(&row.1))
        .find(|c| !c.is_zero())
        .map(|c| c.abs());
    match scale {
        Some(s) => (row.0.iter().map(|c| c / &s).collect(), &row.1 / &s),
        None => row.clone(),
    }
}

fn trivially_true(row: &FmRow) -> bool {
    row.0.iter().all(|c| !c.is_negative()) && !row.1.is_positive()
}

/// Decides `∃ λ ≥ 0` with every row satisfied, by Fourier–Motzkin.
pub fn fourier_motzkin(vars: usize, rows: Vec<FmRow>) -> bool {
    let mut rows: Vec<FmRow> = rows;
    for j in 0..vars {
        let mut e = vec![Rational::zero(); vars];
        e[j] = int(1);
        rows.push((e, Rational::zero()));
    }
    let mut live: Vec<usize> = (0..vars).collect();
    loop {
        let mut set: BTreeSet<(Vec<Rational>, Rational)> = BTreeSet::new();
        for r in &rows {
            if r.0.iter().all(Zero::is_zero) {
                if r.1.is_positive() {
                    return false;
                }
                continue;
            }
            if trivially_true(r) && r.0.iter().filter(|c| !c.is_zero()).count() > 1 {
                continue;
            }
            set.insert(normalize(r));
        }
        rows = set.into_iter().collect();
        if live.is_empty() {
            return true;
        }
        // eliminate the variable producing the fewest combinations
        let (pick, _) = live
            .iter()
            .enumerate()
            .map(|(k, &j)| {
                let p = rows.iter().filter(|r| r.0[j].is_positive()).count();
                let n = rows.iter().filter(|r| r.0[j].is_negative()).count();
                (k, p * n)
            })
            .min_by_key(|&(_, c)| c)
            .expect("live variables");
        let j = live.remove(pick);
        let (pos, rest): (Vec<FmRow>, Vec<FmRow>) = rows.into_iter().partition(|r| r.0[j].is_positive());
        let (neg, zero): (Vec<FmRow>, Vec<FmRow>) = rest.into_iter().partition(|r| r.0[j].is_negative());
        let mut next = zero;
        for p in &pos {
            for q in &neg {
                let a = p.0[j].clone();
                let b = -q.0[j].clone();
                let coeffs: Vec<Rational> = p.0.iter().zip(&q.0).map(|(x, y)| x * &b + y * &a).collect();
                next.push((coeffs, &p.1 * &b + &q.1 * &a));
            }
        }
        rows = next;
    }
}

/// Whether a nonnegative, nonzero combination of simple cycles of the graph
/// has nonnegative total weight in every dimension and visits every set.
pub fn brute_cycle_feasible(
    succ: &[Vec<usize>],
    dims: &[Vec<Rational>],
    visits: &[Vec<bool>],
    guard: &SizeGuard,
) -> Result<bool, GuardError> {
    let edges: usize = succ.iter().map(|s| s.iter().collect::<BTreeSet<_>>().len()).sum();
    if edges > guard.max_edges {
        return Err(GuardError(format!("{edges} edges")));
    }
    let cycles = simple_cycles(succ);
    let mut columns: BTreeSet<Vec<Rational>> = BTreeSet::new();
    for c in &cycles {
        let mut col: Vec<Rational> = dims.iter().map(|w| c.iter().map(|&v| &w[v]).sum()).collect();
        col.extend(visits.iter().map(|set| int(c.iter().filter(|&&v| set[v]).count() as i64)));
        columns.insert(col);
    }
    let columns: Vec<Vec<Rational>> = columns.into_iter().collect();
    let k = columns.len();
    if k == 0 {
        return Ok(false);
    }
    let mut rows: Vec<FmRow> = vec![(vec![int(1); k], int(1))];
    for d in 0..dims.len() + visits.len() {
        let rhs = if d < dims.len() { int(0) } else { int(1) };
        rows.push((columns.iter().map(|c| c[d].clone()).collect(), rhs));
    }
    Ok(fourier_motzkin(k, rows))
}

/// Strongly connected pieces with at least one edge, by mutual reachability.
pub fn brute_sccs(succ: &[Vec<usize>], nodes: &BTreeSet<usize>) -> Vec<BTreeSet<usize>> {
    let restricted: Vec<Vec<usize>> = (0..succ.len())
        .map(|u| {
            if nodes.contains(&u) {
                succ[u].iter().copied().filter(|v| nodes.contains(v)).collect()
            } else {
                Vec::new()
            }
        })
        .collect();
    let reach: Vec<Vec<bool>> = (0..succ.len()).map(|u| reach_from(&restricted, u)).collect();
    let mut out: Vec<BTreeSet<usize>> = Vec::new();
    for &u in nodes {
        if out.iter().any(|c| c.contains(&u)) {
            continue;
        }
        let comp: BTreeSet<usize> = nodes.iter().copied().filter(|&v| reach[u][v] && reach[v][u]).collect();
        let has_edge = comp.iter().any(|&v| restricted[v].iter().any(|x| comp.contains(x)));
        if has_edge {
            out.push(comp);
        }
    }
    out
}

fn induced(succ: &[Vec<usize>], nodes: &BTreeSet<usize>) -> Vec<Vec<usize>> {
    (0..succ.len())
        .map(|u| {
            if nodes.contains(&u) {
                succ[u].iter().copied().filter(|v| nodes.contains(v)).collect()
            } else {
                Vec::new()
            }
        })
        .collect()
}

/// Secured edge relation for `z`, built from brute-force punishment values.
fn secured_graph(game: &ConcurrentGame, pun: &[Vec<Rational>], z: &[Rational]) -> Vec<Vec<usize>> {
    let a = game.arena();
    let n = a.state_count();
    let players = a.player_count();
    let secure = |s: usize, p: &[usize]| {
        (0..players).all(|i| {
            (0..a.action_count(s, i)).all(|ai| {
                let mut q = p.to_vec();
                q[i] = ai;
                pun[i][a.successor(s, &q)] <= z[i]
            })
        })
    };
    let mut alive: Vec<bool> = (0..n).map(|s| s == a.initial() || (0..players).all(|i| pun[i][s] <= z[i])).collect();
    loop {
        let succ: Vec<Vec<usize>> = (0..n)
            .map(|s| {
                if !alive[s] {
                    return Vec::new();
                }
                let mut t: Vec<usize> = a
                    .profiles(s)
                    .filter(|p| secure(s, p))
                    .map(|p| a.successor(s, &p))
                    .filter(|&t| alive[t])
                    .collect();
                t.sort_unstable();
                t.dedup();
                t
            })
            .collect();
        let dead: Vec<usize> = (0..n).filter(|&s| alive[s] && succ[s].is_empty()).collect();
        if dead.is_empty() {
            return succ;
        }
        for s in dead {
            alive[s] = false;
        }
    }
}

fn mask(game: &ConcurrentGame, f: &Formula) -> Vec<bool> {
    (0..game.state_count()).map(|s| f.eval(game.arena().labels(s))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Want {
    Any,
    Sat,
    Viol,
}

fn brute_dims(game: &ConcurrentGame, z: &[Rational], welfare: Option<&Welfare>) -> Vec<Vec<Rational>> {
    let n = game.player_count();
    let mut dims: Vec<Vec<Rational>> = (0..n)
        .map(|i| {
            let shift = match welfare {
                Some(Welfare::Esw(t)) if t > &z[i] => t.clone(),
                _ => z[i].clone(),
            };
            game.weights(i).iter().map(|w| w - &shift).collect()
        })
        .collect();
    if let Some(Welfare::Usw(t)) = welfare {
        dims.push(
            (0..game.state_count())
                .map(|s| (0..n).map(|i| game.weight(i, s)).sum::<Rational>() - t)
                .collect(),
        );
    }
    dims
}

fn brute_exists(game: &ConcurrentGame, spec: &GR1Spec, want: Want, welfare: Option<&Welfare>, guard: &SizeGuard) -> Result<bool, GuardError> {
    let n = game.player_count();
    let pun: Vec<Vec<Rational>> = (0..n).map(|i| brute_pun_all(game, i)).collect();
    let sets: Vec<Vec<Rational>> = pun
        .iter()
        .map(|row| row.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect())
        .collect();
    let psis: Vec<Vec<bool>> = spec.assumptions.iter().map(|f| mask(game, f)).collect();
    let thetas: Vec<Vec<bool>> = spec.guarantees.iter().map(|f| mask(game, f)).collect();
    let idx: Vec<Vec<usize>> = sets.iter().map(|s| (0..s.len()).collect()).collect();
    for pick in cartesian(&idx) {
        let z: Vec<Rational> = pick.iter().enumerate().map(|(i, &k)| sets[i][k].clone()).collect();
        let succ = secured_graph(game, &pun, &z);
        let reach = reach_from(&succ, game.arena().initial());
        let nodes: BTreeSet<usize> = (0..succ.len()).filter(|&s| reach[s]).collect();
        let dims = brute_dims(game, &z, welfare);
        for comp in brute_sccs(&succ, &nodes) {
            let g = induced(&succ, &comp);
            let found = match want {
                Want::Any => brute_cycle_feasible(&g, &dims, &[], guard)?,
                Want::Sat => {
                    let mut ok = brute_cycle_feasible(&g, &dims, &thetas, guard)?;
                    for psi in &psis {
                        if ok {
                            break;
                        }
                        let rest: BTreeSet<usize> = comp.iter().copied().filter(|&s| !psi[s]).collect();
                        for sub in brute_sccs(&succ, &rest) {
                            if brute_cycle_feasible(&induced(&succ, &sub), &dims, &[], guard)? {
                                ok = true;
                                break;
                            }
                        }
                    }
                    ok
                }
                Want::Viol => {
                    let mut ok = false;
                    'outer: for theta in &thetas {
                        let rest: BTreeSet<usize> = comp.iter().copied().filter(|&s| !theta[s]).collect();
                        for sub in brute_sccs(&succ, &rest) {
                            if brute_cycle_feasible(&induced(&succ, &sub), &dims, &psis, guard)? {
                                ok = true;
                                break 'outer;
                            }
                        }
                    }
                    ok
                }
            };
            if found {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Exhaustive decision of weak or strong implementation within `budget`.
pub fn brute_check(
    game: &ConcurrentGame,
    spec: &GR1Spec,
    budget: u64,
    mode: Mode,
    support: Option<&[Slot]>,
    welfare: Option<&Welfare>,
    guard: &SizeGuard,
) -> Result<bool, GuardError> {
    guard.admit_game(game)?;
    if budget > guard.max_budget {
        return Err(GuardError(format!("budget {budget}")));
    }
    let slots: Vec<Slot> = support.map(<[Slot]>::to_vec).unwrap_or_else(|| all_slots(game));
    for k in enumerate_schemes(&slots, budget) {
        if brute_verify(game, spec, &k, mode, welfare, guard)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Whether one scheme implements the GR(1) specification.
pub fn brute_verify(
    game: &ConcurrentGame,
    spec: &GR1Spec,
    scheme: &RewardScheme,
    mode: Mode,
    welfare: Option<&Welfare>,
    guard: &SizeGuard,
) -> Result<bool, GuardError> {
    let g = apply_scheme(game, scheme).map_err(|e| GuardError(e.to_string()))?;
    Ok(match mode {
        Mode::Weak => brute_exists(&g, spec, Want::Sat, welfare, guard)?,
        Mode::Strong => {
            brute_exists(&g, spec, Want::Any, welfare, guard)? && !brute_exists(&g, spec, Want::Viol, welfare, guard)?
        }
    })
}

/// Parameters of the seeded random game generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomGameParams {
    pub max_states: usize,
    pub max_players: usize,
    pub max_actions: usize,
    pub weight_range: i64,
}

impl Default for RandomGameParams {
    fn default() -> Self {
        Self {
            max_states: 5,
            max_players: 2,
            max_actions: 2,
            weight_range: 3,
        }
    }
}

/// Uniform transition tables, integer weights in `[-r, r]`, and labels over
/// the atoms `p` and `q`.
pub fn random_game(seed: u64, params: &RandomGameParams) -> ConcurrentGame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=params.max_states);
    let players = rng.gen_range(1..=params.max_players);
    let pnames: Vec<String> = (0..players).map(|i| format!("p{i}")).collect();
    let snames: Vec<String> = (0..n).map(|s| format!("s{s}")).collect();
    let mut b = ArenaBuilder::new().alphabet(["p", "q"]);
    for p in &pnames {
        b = b.player(p);
    }
    for s in &snames {
        let labels: Vec<&str> = ["p", "q"].into_iter().filter(|_| rng.gen_bool(0.5)).collect();
        b = b.state(s, labels);
    }
    let mut counts = vec![vec![0; players]; n];
    for (s, sn) in snames.iter().enumerate() {
        for (p, pn) in pnames.iter().enumerate() {
            counts[s][p] = rng.gen_range(1..=params.max_actions);
            b = b.actions(sn, pn, (0..counts[s][p]).map(|a| format!("a{a}")));
        }
    }
    for (s, sn) in snames.iter().enumerate() {
        let lists: Vec<Vec<usize>> = counts[s].iter().map(|&c| (0..c).collect()).collect();
        for profile in cartesian(&lists) {
            let names: Vec<String> = profile.iter().map(|a| format!("a{a}")).collect();
            let t = rng.gen_range(0..n);
            b = b.transition(sn, &names, &snames[t]);
        }
    }
    let arena = b.build().expect("generated arena is total");
    let r = params.weight_range;
    let weights = (0..players)
        .map(|_| (0..n).map(|_| int(rng.gen_range(-r..=r))).collect())
        .collect();
    ConcurrentGame::new(arena, weights).expect("shape")
}

/// A specification with at most one assumption and one guarantee over
/// `p` and `q`.
pub fn random_spec(seed: u64) -> GR1Spec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5bec);
    let pool = ["p", "q", "!p", "!q", "p & q", "p | q", "true", "false"];
    let pick = |rng: &mut ChaCha8Rng| -> Vec<Formula> {
        if rng.gen_bool(0.3) {
            Vec::new()
        } else {
            vec![crate::gr1::parse_formula(pool[rng.gen_range(0..pool.len())]).expect("pool parses")]
        }
    };
    let assumptions = pick(&mut rng);
    let guarantees = pick(&mut rng);
    GR1Spec::new(assumptions, guarantees)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn cycles_of_small_graphs() {
        let succ = vec![vec![0, 1], vec![0]];
        let c = simple_cycles(&succ);
        assert_eq!(c.len(), 2);
        assert_eq!(brute_max_mean(&succ, &[int(1), int(4)], 0), ratio(5, 2));
    }

    #[test]
    fn fm_cases() {
        let guard = SizeGuard::default();
        let loop1 = vec![vec![0]];
        assert!(brute_cycle_feasible(&loop1, &[vec![int(0)]], &[], &guard).unwrap());
        assert!(!brute_cycle_feasible(&loop1, &[vec![int(-1)]], &[], &guard).unwrap());
        // loops (+1,−1) at 0 and (−1,+1) at 1, joined
        let succ = vec![vec![0, 1], vec![0, 1]];
        let dims = vec![vec![int(1), int(-1)], vec![int(-1), int(1)]];
        let only_loops = vec![vec![0], vec![1]];
        assert!(brute_cycle_feasible(&succ, &dims, &[], &guard).unwrap());
        assert!(!brute_cycle_feasible(&only_loops, &[vec![int(1), int(-3)], vec![int(-1), int(1)]], &[], &guard).unwrap());
    }

    #[test]
    fn coalition_trap() {
        let arena = ArenaBuilder::new()
            .player("i")
            .player("c")
            .state("s", Vec::<String>::new())
            .state("t", Vec::<String>::new())
            .actions("s", "i", ["x"])
            .actions("s", "c", ["stay", "go"])
            .actions("t", "i", ["x"])
            .actions("t", "c", ["x"])
            .transition("s", &["x", "stay"], "s")
            .transition("s", &["x", "go"], "t")
            .transition("t", &["x", "x"], "t")
            .build()
            .unwrap();
        let g = ConcurrentGame::new(arena, vec![vec![int(0), int(2)], vec![int(0), int(0)]]).unwrap();
        assert_eq!(brute_pun(&g, 0, 0, &SizeGuard::default()).unwrap(), int(0));
        assert_eq!(brute_pun(&g, 0, 1, &SizeGuard::default()).unwrap(), int(2));
    }

    #[test]
    fn guard_refuses_large_games() {
        let g = random_game(1, &RandomGameParams { max_states: 9, ..Default::default() });
        let tight = SizeGuard { max_states: 0, ..Default::default() };
        assert!(brute_check(&g, &GR1Spec::trivial(), 0, Mode::Weak, None, None, &tight).is_err());
    }

    #[test]
    fn generator_is_deterministic() {
        let p = RandomGameParams::default();
        assert_eq!(random_game(7, &p), random_game(7, &p));
        assert_eq!(random_spec(7), random_spec(7));
    }
}
