use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eqdesign")).args(args).output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn robot(sub: &str, mode: &str, spec: &str, extra: &[&str]) -> Output {
    let (game, spec, support) = (fixture("robot_pair.json"), fixture(spec), fixture("robot_support.json"));
    let mut args = vec![sub, "--mode", mode, "--game", &game, "--spec", &spec, "--support", &support, "--no-meta"];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn robot_weak_check_says_yes() {
    let out = robot("check", "weak", "never_stuck.spec.json", &["--budget", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["answer"], "yes");
    assert_eq!(v["certificate"]["payoffs"]["circle"], "1/2");
    assert_eq!(v["certificate"]["payoffs"]["square"], "1/2");
}

#[test]
fn robot_strong_check_says_no() {
    let out = robot("check", "strong", "no_collision.spec.json", &["--budget", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["answer"], "no");
    assert!(v["diagnostics"]["bad_equilibrium"].is_object());
}

#[test]
fn robot_scheme_verifies_with_unit_payoffs() {
    let scheme = fixture("robot_scheme.json");
    let out = robot("verify", "strong", "no_collision.spec.json", &["--scheme", &scheme]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["certificate"]["payoffs"]["circle"], "1");
    assert_eq!(v["certificate"]["payoffs"]["square"], "1");
}

#[test]
fn certificate_round_trips_through_verify() {
    let dir = std::env::temp_dir().join(format!("eqdesign-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cert = dir.join("cert.json").to_string_lossy().into_owned();
    let verdict = dir.join("verdict.json");
    let game = fixture("unique_goal.json");
    let spec = fixture("goal.spec.json");
    let base = ["--mode", "weak", "--game", &game, "--spec", &spec, "--no-meta"];
    let mut args = vec!["check"];
    args.extend_from_slice(&base);
    args.extend_from_slice(&["--budget", "1", "--witness", &cert]);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(0));
    std::fs::write(&verdict, &out.stdout).unwrap();
    for file in [cert.clone(), verdict.to_string_lossy().into_owned()] {
        let mut args = vec!["verify"];
        args.extend_from_slice(&base);
        args.extend_from_slice(&["--scheme", &file]);
        let again = run(&args);
        assert_eq!(again.status.code(), Some(0), "{file}");
        assert_eq!(json(&again)["answer"], "yes");
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn output_is_deterministic_without_meta() {
    let a = robot("check", "weak", "never_stuck.spec.json", &["--budget", "1"]);
    let b = robot("check", "weak", "never_stuck.spec.json", &["--budget", "1"]);
    assert_eq!(a.stdout, b.stdout);
    let with_meta = run(&[
        "check", "--mode", "weak", "--game", &fixture("self_loop3.json"), "--spec", &fixture("trivial.spec.json"), "--budget", "0",
    ]);
    assert!(json(&with_meta)["meta"]["unix_time"].is_u64());
}

#[test]
fn optimization_commands() {
    let game = fixture("unique_goal.json");
    let spec = fixture("goal.spec.json");
    let base = ["--mode", "weak", "--game", game.as_str(), "--spec", spec.as_str(), "--no-meta"];
    let with = |sub: &str, extra: &[&str]| {
        let mut args = vec![sub];
        args.extend_from_slice(&base);
        args.extend_from_slice(extra);
        run(&args)
    };
    let o = with("opt", &[]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["optimum"], 1);
    assert_eq!(with("exact", &["--budget", "1"]).status.code(), Some(0));
    assert_eq!(with("exact", &["--budget", "2"]).status.code(), Some(1));
    assert_eq!(with("uopt", &[]).status.code(), Some(0));

    let sym = fixture("symmetric_goals.json");
    let u = run(&["uopt", "--mode", "weak", "--game", &sym, "--spec", &spec, "--no-meta"]);
    assert_eq!(u.status.code(), Some(1));
    assert_eq!(json(&u)["schemes"].as_array().unwrap().len(), 2);
}

#[test]
fn welfare_threshold_flag() {
    let game = fixture("self_loop3.json");
    let spec = fixture("trivial.spec.json");
    let at = |t: &str| {
        run(&[
            "check", "--mode", "strong", "--game", &game, "--spec", &spec, "--budget", "0", "--welfare", "esw", "--threshold", t,
            "--no-meta",
        ])
        .status
        .code()
    };
    assert_eq!(at("3"), Some(0));
    assert_eq!(at("3001/1000"), Some(1));
}

#[test]
fn input_errors_and_cap() {
    let game = fixture("robot_pair.json");
    let bad_spec = fixture("goal.spec.json");
    let out = run(&["check", "--mode", "weak", "--game", &game, "--spec", &bad_spec, "--budget", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("guarantees[0]"));

    let missing = run(&["check", "--mode", "weak", "--game", "/nonexistent.json", "--spec", &bad_spec, "--budget", "0"]);
    assert_eq!(missing.status.code(), Some(2));
    assert_eq!(run(&["check", "--mode", "sideways"]).status.code(), Some(2));

    let spec = fixture("never_stuck.spec.json");
    let capped = run(&["check", "--mode", "weak", "--game", &game, "--spec", &spec, "--budget", "3", "--cap", "10"]);
    assert_eq!(capped.status.code(), Some(3));
}

#[test]
fn lp_dump_is_written() {
    let dump = std::env::temp_dir().join(format!("eqdesign-lp-{}.txt", std::process::id()));
    let out = robot(
        "check",
        "weak",
        "never_stuck.spec.json",
        &["--budget", "0", "--dump-lp", dump.to_str().unwrap()],
    );
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&dump).unwrap();
    assert!(text.starts_with("vars "));
    std::fs::remove_file(dump).unwrap();
}

#[test]
fn hidden_selftest_agrees() {
    let out = run(&["selftest", "--seeds", "8"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}
