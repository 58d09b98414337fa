//! Acceptance suite: one PASS/FAIL line per criterion. All comparisons are
//! exact rational equalities.

use std::collections::BTreeSet;
use std::time::Instant;

use eqdesign::certificate::revalidate;
use eqdesign::fixtures::{
    goal_spec, never_stuck_spec, no_collision_spec, pennies, robot_pair, robot_reward_slots, robot_scheme, self_loop,
    symmetric_goals, unique_goal, COLLIDE,
};
use eqdesign::game::ConcurrentGame;
use eqdesign::gr1::{Formula, GR1Spec};
use eqdesign::lp::builder::{
    build_assumption_lp, build_guarantee_lp, build_negspec_lp, scc_reachable, shifted_weights, Subgraph, WorkGraph,
};
use eqdesign::oracle::{
    brute_check, brute_cycle_feasible, brute_pun, brute_sccs, random_game, random_spec, RandomGameParams, SizeGuard,
};
use eqdesign::punishment::{build_secured, punishment_table, z_vectors};
use eqdesign::rational::{int, ratio, Rational};
use eqdesign::scheme::{enumerate_schemes, scheme_count, Slot};
use eqdesign::solver::{
    check, check_threshold, exact, opt, uopt, verify_scheme, Mode, Query, SolverOptions, Verdict, Welfare,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Report {
    lines: Vec<(bool, String)>,
    /// Every yes-verdict with the query it answers, for the replay check.
    yes: Vec<(Query, Verdict)>,
}

impl Report {
    fn record(&mut self, id: &str, ok: bool, detail: String, started: Instant) {
        let line = format!(
            "{} criterion {id}: {detail} ({:.1}s)",
            if ok { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64()
        );
        println!("{line}");
        self.lines.push((ok, line));
    }

    fn keep(&mut self, q: &Query, v: &Verdict) {
        if v.answer {
            self.yes.push((q.clone(), v.clone()));
        }
    }
}

fn opts() -> SolverOptions {
    SolverOptions::default()
}

fn robot(r: &mut Report) {
    let t = Instant::now();
    let mut fails = Vec::new();
    let slots = robot_reward_slots();

    let qa = Query::new(robot_pair(), never_stuck_spec(), Mode::Weak, 0).with_support(slots.clone());
    let a = check(&qa, &opts()).unwrap();
    r.keep(&qa, &a);
    if !a.answer {
        fails.push("(a) weak check is not yes".to_string());
    }
    let half = vec![ratio(1, 2), ratio(1, 2)];
    if a.certificate.as_ref().map(|c| &c.payoffs) != Some(&half) {
        fails.push("(a) unrewarded payoffs differ from 1/2".into());
    }

    let qb = Query::new(robot_pair(), no_collision_spec(), Mode::Strong, 0).with_support(slots.clone());
    let b = check(&qb, &opts()).unwrap();
    let game = robot_pair();
    let collide = Formula::atom(COLLIDE);
    let collides = b.diagnostics.bad_witness.as_ref().is_some_and(|w| {
        w.witness
            .schedule
            .cycle_states()
            .iter()
            .any(|&s| collide.eval(game.arena().labels(s)))
    });
    if b.answer || !collides {
        fails.push("(b) strong check lacks a colliding bad equilibrium".into());
    }

    let qc = Query::new(robot_pair(), no_collision_spec(), Mode::Strong, 8).with_support(slots);
    let c = verify_scheme(&qc, &robot_scheme(), &opts()).unwrap();
    r.keep(&qc, &c);
    if !c.answer || c.certificate.as_ref().map(|c| c.payoffs.clone()) != Some(vec![int(1), int(1)]) {
        fails.push("(c) rewarded scheme does not yield payoffs (1, 1)".into());
    }
    let ok = fails.is_empty() && t.elapsed().as_secs() < 60;
    r.record(
        "1 robot grid",
        ok,
        if ok {
            "weak yes at 0 with payoffs 1/2, strong no at 0 with colliding witness, scheme verified with payoffs 1".into()
        } else {
            fails.join("; ")
        },
        t,
    );
}

fn punishment_campaign(r: &mut Report) {
    let t = Instant::now();
    let guard = SizeGuard::default();
    let params = RandomGameParams::default();
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for seed in 0..200u64 {
        let g = random_game(1000 + seed, &params);
        let table = punishment_table(&g).unwrap();
        for i in 0..g.player_count() {
            for s in 0..g.state_count() {
                let b = brute_pun(&g, i, s, &guard).unwrap();
                checked += 1;
                let den_ok = table.value(i, s).denom() <= &table.node_counts[i].into();
                if &b != table.value(i, s) || !den_ok {
                    mismatches.push(format!("seed {seed} player {i} state {s}"));
                }
            }
        }
    }
    r.record(
        "2 punishment oracle",
        mismatches.is_empty(),
        format!("200 games, {checked} values compared, {} mismatches {:?}", mismatches.len(), mismatches.iter().take(3).collect::<Vec<_>>()),
        t,
    );
}

fn induced(graph: &WorkGraph, nodes: &BTreeSet<usize>) -> Vec<Vec<usize>> {
    let mut succ = vec![Vec::new(); graph.states];
    for e in &graph.edges {
        if nodes.contains(&e.source) && nodes.contains(&e.target) {
            succ[e.source].push(e.target);
        }
    }
    succ
}

fn random_mask(rng: &mut ChaCha8Rng, n: usize) -> Vec<bool> {
    (0..n).map(|_| rng.gen_bool(0.4)).collect()
}

fn lp_campaign(r: &mut Report) {
    let t = Instant::now();
    let guard = SizeGuard { max_edges: 10, ..SizeGuard::default() };
    let params = RandomGameParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut subgraphs = 0;
    let mut feasible = [0usize; 3];
    let mut mismatches = Vec::new();
    let mut seed = 0u64;
    while subgraphs < 200 && seed < 20_000 {
        seed += 1;
        let g = random_game(50_000 + seed, &params);
        let table = punishment_table(&g).unwrap();
        let zs = z_vectors(&table);
        let z = &zs[rng.gen_range(0..zs.len())];
        let secured = build_secured(&g, &table, z);
        if secured.is_empty() {
            continue;
        }
        let graph = WorkGraph::from_secured(&g, &secured);
        let dims = shifted_weights(&g, z);
        for sub in scc_reachable(&graph) {
            if sub.edges.len() > 10 || subgraphs >= 200 {
                continue;
            }
            subgraphs += 1;
            let n = g.state_count();
            let thetas: Vec<Vec<bool>> = (0..rng.gen_range(0..=2)).map(|_| random_mask(&mut rng, n)).collect();
            let psis: Vec<Vec<bool>> = (0..rng.gen_range(0..=2)).map(|_| random_mask(&mut rng, n)).collect();
            let succ = induced(&graph, &sub.nodes);

            let simplex_g = build_guarantee_lp(&graph, &sub, &dims, &thetas).feasible().is_some();
            let oracle_g = brute_cycle_feasible(&succ, &dims, &thetas, &guard).unwrap();

            let psi = psis.first().cloned().unwrap_or_else(|| vec![false; n]);
            let simplex_a = build_assumption_lp(&graph, &sub, &dims, &psi).iter().any(|c| c.lp.feasible().is_some());
            let oracle_a = deleted_feasible(&succ, &sub, &psi, &dims, &[], &guard);

            let theta = thetas.first().cloned().unwrap_or_else(|| random_mask(&mut rng, n));
            let simplex_n = build_negspec_lp(&graph, &sub, &dims, &psis, &theta)
                .iter()
                .any(|c| c.lp.feasible().is_some());
            let oracle_n = deleted_feasible(&succ, &sub, &theta, &dims, &psis, &guard);

            for (k, (a, b)) in [(simplex_g, oracle_g), (simplex_a, oracle_a), (simplex_n, oracle_n)].into_iter().enumerate() {
                if a {
                    feasible[k] += 1;
                }
                if a != b {
                    mismatches.push(format!("seed {seed} kind {k}"));
                }
            }
        }
    }
    r.record(
        "3 LP oracle",
        subgraphs >= 200 && mismatches.is_empty(),
        format!(
            "{subgraphs} subgraphs (<= 10 edges); feasible guarantee/assumption/negspec = {:?}; {} mismatches {:?}",
            feasible,
            mismatches.len(),
            mismatches.iter().take(3).collect::<Vec<_>>()
        ),
        t,
    );
}

fn deleted_feasible(
    succ: &[Vec<usize>],
    sub: &Subgraph,
    forbidden: &[bool],
    dims: &[Vec<Rational>],
    visits: &[Vec<bool>],
    guard: &SizeGuard,
) -> bool {
    let rest: BTreeSet<usize> = sub.nodes.iter().copied().filter(|&s| !forbidden[s]).collect();
    brute_sccs(succ, &rest).into_iter().any(|comp| {
        let restricted: Vec<Vec<usize>> = (0..succ.len())
            .map(|u| {
                if comp.contains(&u) {
                    succ[u].iter().copied().filter(|v| comp.contains(v)).collect()
                } else {
                    Vec::new()
                }
            })
            .collect();
        brute_cycle_feasible(&restricted, dims, visits, guard).unwrap()
    })
}

fn end_to_end_campaign(r: &mut Report) {
    let t = Instant::now();
    let guard = SizeGuard::default();
    let params = RandomGameParams {
        max_states: 4,
        ..RandomGameParams::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mismatches = Vec::new();
    let mut yes = [0usize; 2];
    let queries = 100;
    for k in 0..queries as u64 {
        let g = random_game(90_000 + k, &params);
        let spec = random_spec(90_000 + k);
        let budget = rng.gen_range(0..=2);
        for (m, mode) in [Mode::Weak, Mode::Strong].into_iter().enumerate() {
            let q = Query::new(g.clone(), spec.clone(), mode, budget);
            let v = check(&q, &opts()).unwrap();
            let b = brute_check(&g, &spec, budget, mode, None, None, &guard).unwrap();
            if v.answer {
                yes[m] += 1;
            }
            if v.answer != b {
                mismatches.push(format!("query {k} {mode:?}"));
            }
            r.keep(&q, &v);
        }
    }
    r.record(
        "4 end-to-end oracle",
        mismatches.is_empty(),
        format!(
            "{queries} queries x 2 modes, yes weak/strong = {:?}, {} mismatches {:?}",
            yes,
            mismatches.len(),
            mismatches.iter().take(3).collect::<Vec<_>>()
        ),
        t,
    );
}

fn counting(r: &mut Report) {
    let t = Instant::now();
    let mut cases = 0;
    let mut bad = Vec::new();
    for m in 0..=6u64 {
        for b in 0..=6u64 {
            cases += 1;
            let slots: Vec<Slot> = (0..m as usize).map(|s| (0, s)).collect();
            let n = enumerate_schemes(&slots, b).count();
            if scheme_count(m, b) != n.into() {
                bad.push((m, b));
            }
        }
    }
    r.record("5 counting", bad.is_empty() && cases == 49, format!("{cases} cases, mismatches {bad:?}"), t);
}

/// Small fixtures for the monotonicity, optimization and welfare suites.
fn fixtures() -> Vec<(&'static str, ConcurrentGame, GR1Spec, Option<Vec<Slot>>)> {
    let mut out = vec![
        ("unique goal", unique_goal(), goal_spec(), None),
        ("symmetric goals", symmetric_goals(), goal_spec(), None),
        ("pennies", pennies(), GR1Spec::parse::<&str, _>(&[], &["p"]).unwrap(), None),
        ("self loop", self_loop(-2), GR1Spec::trivial(), None),
        ("robot", robot_pair(), no_collision_spec(), Some(robot_reward_slots())),
    ];
    let params = RandomGameParams {
        max_states: 3,
        ..RandomGameParams::default()
    };
    for k in 0..6u64 {
        out.push(("random", random_game(7_000 + k, &params), random_spec(7_000 + k), None));
    }
    out
}

fn optimization(r: &mut Report) {
    let t = Instant::now();
    let mut fails = Vec::new();
    let mut instances = 0;
    for (name, g, spec, support) in fixtures() {
        for mode in [Mode::Weak, Mode::Strong] {
            let mut q = Query::new(g.clone(), spec.clone(), mode, 0);
            if let Some(s) = &support {
                q = q.with_support(s.clone());
            }
            instances += 1;
            // the robot's eight slots are monotonicity-checked up to β = 2
            let scan_limit = if name == "robot" { 2 } else { 6 };
            let mut answers = Vec::new();
            for b in 0..=scan_limit {
                let v = check(&q.clone().with_budget(b), &opts()).unwrap();
                r.keep(&q.clone().with_budget(b), &v);
                answers.push(v.answer);
            }
            if answers.windows(2).any(|w| w[0] && !w[1]) {
                fails.push(format!("{name} {mode:?} not monotone"));
            }
            if name == "robot" {
                continue;
            }
            let o = opt(&q, &opts()).unwrap();
            let scan = (0..=o.bound).find(|&b| check(&q.clone().with_budget(b), &opts()).unwrap().answer);
            if o.optimum != scan {
                fails.push(format!("{name} {mode:?} opt {:?} vs scan {:?}", o.optimum, scan));
            }
            if let (Some(best), Some(k)) = (o.optimum, &o.scheme) {
                if k.cost() != best {
                    fails.push(format!("{name} {mode:?} opt scheme cost {}", k.cost()));
                }
            }
            for b in 0..=o.optimum.unwrap_or(2) + 1 {
                if exact(&q, b, &opts()).unwrap() != (o.optimum == Some(b)) {
                    fails.push(format!("{name} {mode:?} exact({b})"));
                }
            }
        }
    }
    let u = uopt(&Query::new(unique_goal(), goal_spec(), Mode::Weak, 0), &opts()).unwrap();
    let s = uopt(&Query::new(symmetric_goals(), goal_spec(), Mode::Weak, 0), &opts()).unwrap();
    if !(u.unique && u.optimum == Some(1)) {
        fails.push(format!("unique fixture: {:?} {}", u.optimum, u.unique));
    }
    if s.unique || s.schemes.len() != 2 || s.optimum != Some(1) {
        fails.push(format!("symmetric fixture: {:?} {} {}", s.optimum, s.unique, s.schemes.len()));
    }
    r.record(
        "6 monotonicity and optimization",
        fails.is_empty(),
        format!("{instances} fixture/mode pairs; uopt unique={} / symmetric unique={}; failures {fails:?}", u.unique, s.unique),
        t,
    );
}

fn welfare(r: &mut Report) {
    let t = Instant::now();
    let mut fails = Vec::new();
    let mut compared = 0;
    for (name, g, spec, support) in fixtures() {
        let t_esw = g.weight_table().iter().flatten().min().unwrap().clone();
        let t_usw = g.total_weights().into_iter().min().unwrap();
        for mode in [Mode::Weak, Mode::Strong] {
            let budgets: &[u64] = if name == "robot" { &[0] } else { &[0, 1, 2] };
            for &b in budgets {
                let mut q = Query::new(g.clone(), spec.clone(), mode, b);
                if let Some(s) = &support {
                    q = q.with_support(s.clone());
                }
                let plain = check(&q, &opts()).unwrap().answer;
                for w in [Welfare::Usw(t_usw.clone()), Welfare::Esw(t_esw.clone())] {
                    let wq = q.clone().with_welfare(w);
                    let v = check_threshold(&wq, &opts()).unwrap();
                    r.keep(&wq, &v);
                    compared += 1;
                    if v.answer != plain {
                        fails.push(format!("{name} {mode:?} β={b}"));
                    }
                }
            }
        }
    }
    let eps = ratio(1, 1000);
    for mode in [Mode::Weak, Mode::Strong] {
        for mk in [Welfare::Usw as fn(Rational) -> Welfare, Welfare::Esw] {
            let at = Query::new(self_loop(3), GR1Spec::trivial(), mode, 0).with_welfare(mk(int(3)));
            let above = Query::new(self_loop(3), GR1Spec::trivial(), mode, 0).with_welfare(mk(int(3) + &eps));
            let va = check_threshold(&at, &opts()).unwrap();
            r.keep(&at, &va);
            if !va.answer || check_threshold(&above, &opts()).unwrap().answer {
                fails.push(format!("self-loop flip {mode:?}"));
            }
        }
    }
    r.record(
        "7 welfare reductions",
        fails.is_empty(),
        format!("{compared} threshold verdicts equal to plain ones; w=3 loop flips between t=3 and t=3+1/1000; failures {fails:?}"),
        t,
    );
}

fn replay(r: &mut Report) {
    let t = Instant::now();
    let mut bad = Vec::new();
    for (k, (q, v)) in r.yes.iter().enumerate() {
        if let Err(e) = revalidate(q, v.certificate.as_ref().expect("yes has a certificate")) {
            bad.push(format!("#{k}: {e}"));
        }
    }
    let n = r.yes.len();
    r.record(
        "8 certificate replay",
        bad.is_empty() && n > 0,
        format!("{}/{n} yes-certificates revalidated; failures {:?}", n - bad.len(), bad.iter().take(3).collect::<Vec<_>>()),
        t,
    );
}

fn main() {
    // `cargo test -- <filter>` passes arguments; run everything regardless
    let mut r = Report {
        lines: Vec::new(),
        yes: Vec::new(),
    };
    robot(&mut r);
    punishment_campaign(&mut r);
    lp_campaign(&mut r);
    end_to_end_campaign(&mut r);
    counting(&mut r);
    optimization(&mut r);
    welfare(&mut r);
    replay(&mut r);
    let failed = r.lines.iter().filter(|(ok, _)| !ok).count();
    println!("acceptance: {} passed, {failed} failed", r.lines.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
