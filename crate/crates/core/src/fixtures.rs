//! Built-in example games.
//!
//! Two robots cross a small grid. Each robot alternates between a corner
//! cell and one of two middle cells, `(1,0)` or `(1,1)`; a phase flag `_0` /
//! `_1` keeps the two robots in step. Corner cells weigh −1 and middle cells
//! 2, so every route pays 1/2 per step on average. Robots collide when they
//! occupy the same middle cell.

use crate::game::{ArenaBuilder, ConcurrentGame};
use crate::gr1::GR1Spec;
use crate::rational::int;
use crate::scheme::{RewardScheme, Slot};

pub const CIRCLE: &str = "circle";
pub const SQUARE: &str = "square";
pub const COLLIDE: &str = "collide";

struct Cell {
    id: &'static str,
    weight: i64,
    moves: &'static [(&'static str, &'static str)],
}

const CIRCLE_CELLS: [Cell; 6] = [
    Cell { id: "00_0", weight: -1, moves: &[("via10", "10_0"), ("via11", "11_0")] },
    Cell { id: "10_0", weight: 2, moves: &[("go", "21_1")] },
    Cell { id: "11_0", weight: 2, moves: &[("go", "21_1")] },
    Cell { id: "21_1", weight: -1, moves: &[("via10", "10_1"), ("via11", "11_1")] },
    Cell { id: "10_1", weight: 2, moves: &[("go", "00_0")] },
    Cell { id: "11_1", weight: 2, moves: &[("go", "00_0")] },
];

const SQUARE_CELLS: [Cell; 6] = [
    Cell { id: "20_0", weight: -1, moves: &[("via10", "10_0"), ("via11", "11_0")] },
    Cell { id: "10_0", weight: 2, moves: &[("go", "01_1")] },
    Cell { id: "11_0", weight: 2, moves: &[("go", "01_1")] },
    Cell { id: "01_1", weight: -1, moves: &[("via10", "10_1"), ("via11", "11_1")] },
    Cell { id: "10_1", weight: 2, moves: &[("go", "20_0")] },
    Cell { id: "11_1", weight: 2, moves: &[("go", "20_0")] },
];

fn position(id: &str) -> &str {
    id.split('_').next().unwrap_or(id)
}

fn is_middle(id: &str) -> bool {
    matches!(position(id), "10" | "11")
}

fn product_id(c: &str, s: &str) -> String {
    format!("{c}|{s}")
}

/// Robot ◯ alone.
pub fn robot_single() -> ConcurrentGame {
    let mut b = ArenaBuilder::new().player(CIRCLE).alphabet([COLLIDE]).initial("00_0");
    for c in &CIRCLE_CELLS {
        b = b.state(c.id, Vec::<String>::new());
    }
    for c in &CIRCLE_CELLS {
        b = b.actions(c.id, CIRCLE, c.moves.iter().map(|m| m.0));
        for (a, t) in c.moves {
            b = b.transition(c.id, &[*a], t);
        }
    }
    let w = vec![CIRCLE_CELLS.iter().map(|c| int(c.weight)).collect()];
    ConcurrentGame::new(b.build().expect("robot arena"), w).expect("weights")
}

/// Both robots moving simultaneously, 36 product states.
pub fn robot_pair() -> ConcurrentGame {
    let mut b = ArenaBuilder::new()
        .player(CIRCLE)
        .player(SQUARE)
        .alphabet([COLLIDE])
        .initial(product_id("00_0", "20_0"));
    for c in &CIRCLE_CELLS {
        for s in &SQUARE_CELLS {
            let collide = is_middle(c.id) && position(c.id) == position(s.id);
            let labels: Vec<&str> = if collide { vec![COLLIDE] } else { Vec::new() };
            b = b.state(product_id(c.id, s.id), labels);
        }
    }
    for c in &CIRCLE_CELLS {
        for s in &SQUARE_CELLS {
            let id = product_id(c.id, s.id);
            b = b
                .actions(&id, CIRCLE, c.moves.iter().map(|m| m.0))
                .actions(&id, SQUARE, s.moves.iter().map(|m| m.0));
            for (ca, ct) in c.moves {
                for (sa, st) in s.moves {
                    b = b.transition(&id, &[*ca, *sa], &product_id(ct, st));
                }
            }
        }
    }
    let mut w = vec![Vec::new(), Vec::new()];
    for c in &CIRCLE_CELLS {
        for s in &SQUARE_CELLS {
            w[0].push(int(c.weight));
            w[1].push(int(s.weight));
        }
    }
    ConcurrentGame::new(b.build().expect("robot arena"), w).expect("weights")
}

fn product_index(c: &str, s: &str) -> usize {
    let ci = CIRCLE_CELLS.iter().position(|x| x.id == c).expect("circle cell");
    let si = SQUARE_CELLS.iter().position(|x| x.id == s).expect("square cell");
    ci * SQUARE_CELLS.len() + si
}

/// The eight reward slots: ◯ is paid on its `(1,0)` cells and ■ on its
/// `(1,1)` cells, in every reachable product state where the other robot is
/// on a middle cell of the same phase.
pub fn robot_reward_slots() -> Vec<Slot> {
    let mut slots = Vec::new();
    for phase in ["0", "1"] {
        for other in ["10", "11"] {
            slots.push((0, product_index(&format!("10_{phase}"), &format!("{other}_{phase}"))));
        }
    }
    for phase in ["0", "1"] {
        for other in ["10", "11"] {
            slots.push((1, product_index(&format!("{other}_{phase}"), &format!("11_{phase}"))));
        }
    }
    slots.sort_unstable();
    slots
}

/// One unit on every reward slot, cost 8.
pub fn robot_scheme() -> RewardScheme {
    RewardScheme::from_entries(robot_reward_slots().into_iter().map(|s| (s, 1)))
}

/// ◯'s single-robot rewards: one unit on both `(1,0)` cells.
pub fn robot_single_scheme() -> RewardScheme {
    RewardScheme::from_entries([((0, 1), 1), ((0, 4), 1)])
}

/// GF ¬collide.
pub fn never_stuck_spec() -> GR1Spec {
    GR1Spec::parse::<&str, _>(&[], &["!collide"]).expect("valid")
}

/// Collisions happen only finitely often: GF collide → GF false.
pub fn no_collision_spec() -> GR1Spec {
    GR1Spec::parse(&["collide"], &["false"]).expect("valid")
}

/// One player picks between a goal loop of weight −1 and a plain loop of
/// weight 0; rewarding the goal by one unit is the only optimal design.
pub fn unique_goal() -> ConcurrentGame {
    let arena = ArenaBuilder::new()
        .player("p")
        .state("start", Vec::<String>::new())
        .state("goal", ["goal"])
        .state("idle", Vec::<String>::new())
        .actions("start", "p", ["to_goal", "to_idle"])
        .actions("goal", "p", ["stay"])
        .actions("idle", "p", ["stay"])
        .transition("start", &["to_goal"], "goal")
        .transition("start", &["to_idle"], "idle")
        .transition("goal", &["stay"], "goal")
        .transition("idle", &["stay"], "idle")
        .build()
        .expect("arena");
    ConcurrentGame::new(arena, vec![vec![int(0), int(-1), int(0)]]).expect("weights")
}

/// Like [`unique_goal`] with two interchangeable goal loops.
pub fn symmetric_goals() -> ConcurrentGame {
    let arena = ArenaBuilder::new()
        .player("p")
        .state("start", Vec::<String>::new())
        .state("left", ["goal"])
        .state("right", ["goal"])
        .state("idle", Vec::<String>::new())
        .actions("start", "p", ["to_left", "to_right", "to_idle"])
        .actions("left", "p", ["stay"])
        .actions("right", "p", ["stay"])
        .actions("idle", "p", ["stay"])
        .transition("start", &["to_left"], "left")
        .transition("start", &["to_right"], "right")
        .transition("start", &["to_idle"], "idle")
        .transition("left", &["stay"], "left")
        .transition("right", &["stay"], "right")
        .transition("idle", &["stay"], "idle")
        .build()
        .expect("arena");
    ConcurrentGame::new(arena, vec![vec![int(0), int(-1), int(-1), int(0)]]).expect("weights")
}

/// GF goal.
pub fn goal_spec() -> GR1Spec {
    GR1Spec::parse::<&str, _>(&[], &["goal"]).expect("valid")
}

/// A single state with a self-loop of weight `w`.
pub fn self_loop(w: i64) -> ConcurrentGame {
    let arena = ArenaBuilder::new()
        .player("p")
        .state("s", ["p"])
        .actions("s", "p", ["x"])
        .transition("s", &["x"], "s")
        .build()
        .expect("arena");
    ConcurrentGame::new(arena, vec![vec![int(w)]]).expect("weights")
}

/// Matching pennies at the start: player `a` earns 1 on a match, `b` on a
/// mismatch, and the result is then fixed forever.
pub fn pennies() -> ConcurrentGame {
    let arena = ArenaBuilder::new()
        .player("a")
        .player("b")
        .state("start", Vec::<String>::new())
        .state("match", ["p"])
        .state("miss", ["q"])
        .alphabet(["p", "q"])
        .actions("start", "a", ["h", "t"])
        .actions("start", "b", ["h", "t"])
        .actions("match", "a", ["x"])
        .actions("match", "b", ["x"])
        .actions("miss", "a", ["x"])
        .actions("miss", "b", ["x"])
        .transition("start", &["h", "h"], "match")
        .transition("start", &["t", "t"], "match")
        .transition("start", &["h", "t"], "miss")
        .transition("start", &["t", "h"], "miss")
        .transition("match", &["x", "x"], "match")
        .transition("miss", &["x", "x"], "miss")
        .build()
        .expect("arena");
    ConcurrentGame::new(arena, vec![vec![int(0), int(1), int(0)], vec![int(0), int(0), int(1)]]).expect("weights")
}
