use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use eqdesign::format::{certificate_json, mode_name, parse_game, parse_scheme, parse_spec, parse_support, scheme_to_file, verdict_json};
use eqdesign::oracle::{brute_check, brute_pun, random_game, random_spec, RandomGameParams, SizeGuard};
use eqdesign::punishment::punishment_table;
use eqdesign::rational::{format_rational, parse_rational};
use eqdesign::solver::{check, exact, opt, uopt, verify_scheme, Mode, Query, SolveError, SolverOptions, Verdict, Welfare};
use eqdesign::{ConcurrentGame, Rational};
use serde_json::{json, Value};

const YES: u8 = 0;
const NO: u8 = 1;
const INPUT: u8 = 2;
const CAP: u8 = 3;

#[derive(Parser)]
#[command(name = "eqdesign", version, about = "Reward design for equilibria of concurrent mean-payoff games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Is there a scheme within the budget that implements the GR(1) specification?
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        budget: u64,
    },
    /// Does the given scheme implement the GR(1) specification?
    Verify {
        #[command(flatten)]
        common: Common,
        /// Scheme file, or a verdict/certificate containing one.
        #[arg(long)]
        scheme: PathBuf,
        /// Defaults to the cost of the scheme.
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Least budget admitting an implementing scheme.
    Opt {
        #[command(flatten)]
        common: Common,
    },
    /// Is the given budget exactly the optimum?
    Exact {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        budget: u64,
    },
    /// Is there exactly one optimal scheme?
    Uopt {
        #[command(flatten)]
        common: Common,
    },
    /// Seeded agreement run against the brute-force oracles.
    #[command(hide = true)]
    Selftest {
        #[arg(long, default_value_t = 50)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        start: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Weak,
    Strong,
}

#[derive(Clone, Copy, ValueEnum)]
enum WelfareArg {
    Usw,
    Esw,
}

#[derive(Args)]
struct Common {
    #[arg(long, value_enum)]
    mode: ModeArg,
    #[arg(long)]
    game: PathBuf,
    #[arg(long)]
    spec: PathBuf,
    /// Restrict rewards to the listed (player, state) slots.
    #[arg(long)]
    support: Option<PathBuf>,
    #[arg(long, value_enum, requires = "threshold")]
    welfare: Option<WelfareArg>,
    /// Rational threshold such as `3` or `7/2`.
    #[arg(long, requires = "welfare")]
    threshold: Option<String>,
    /// Write the certificate of a yes answer to this file.
    #[arg(long)]
    witness: Option<PathBuf>,
    /// Omit the timestamped `meta` block.
    #[arg(long)]
    no_meta: bool,
    /// Largest number of schemes one search may enumerate.
    #[arg(long, default_value_t = SolverOptions::default().cap)]
    cap: u64,
    /// Write every linear program solved to this file.
    #[arg(long)]
    dump_lp: Option<PathBuf>,
}

enum Failure {
    Input(String),
    Cap(String),
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::ResourceLimit { .. } => Failure::Cap(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn input<T, E: std::fmt::Display>(path: &Path, r: Result<T, E>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

struct Loaded {
    query: Query,
    opts: SolverOptions,
    dump: Option<Arc<Mutex<Vec<String>>>>,
}

fn load(c: &Common, budget: u64) -> Result<Loaded, Failure> {
    let game = input(&c.game, parse_game(&read(&c.game)?))?;
    let spec = input(&c.spec, parse_spec(&read(&c.spec)?, &game))?;
    let mode = match c.mode {
        ModeArg::Weak => Mode::Weak,
        ModeArg::Strong => Mode::Strong,
    };
    let mut query = Query::new(game, spec, mode, budget);
    if let Some(p) = &c.support {
        let slots = input(p, parse_support(&read(p)?, &query.game))?;
        query = query.with_support(slots);
    }
    if let (Some(w), Some(t)) = (c.welfare, &c.threshold) {
        let t = parse_rational(t).map_err(|e| Failure::Input(format!("--threshold: {e}")))?;
        query = query.with_welfare(match w {
            WelfareArg::Usw => Welfare::Usw(t),
            WelfareArg::Esw => Welfare::Esw(t),
        });
    }
    let dump = c.dump_lp.as_ref().map(|_| Arc::new(Mutex::new(Vec::new())));
    let opts = SolverOptions {
        cap: c.cap,
        lp_dump: dump.clone(),
    };
    Ok(Loaded { query, opts, dump })
}

fn finish(c: &Common, loaded: &Loaded, mut doc: Value, verdict: Option<&Verdict>) -> Result<(), Failure> {
    if let (Some(path), Some(dump)) = (&c.dump_lp, &loaded.dump) {
        let text = dump.lock().expect("dump lock").join("\n");
        fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    }
    if let (Some(path), Some(cert)) = (&c.witness, verdict.and_then(|v| v.certificate.as_ref())) {
        let text = serde_json::to_string_pretty(&certificate_json(&loaded.query.game, cert)).expect("json") + "\n";
        fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    }
    if !c.no_meta {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        doc["meta"] = json!({
            "tool": "eqdesign",
            "version": env!("CARGO_PKG_VERSION"),
            "unix_time": secs,
        });
    }
    println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
    Ok(())
}

fn q(v: &Rational) -> String {
    format_rational(v)
}

fn summarize(query: &Query, v: &Verdict) {
    let mode = mode_name(query.mode);
    match &v.certificate {
        Some(c) => {
            let pays: Vec<String> = c.payoffs.iter().map(q).collect();
            eprintln!(
                "yes: {mode} implementation with a scheme of cost {} (budget {}), equilibrium payoffs ({})",
                c.scheme.cost(),
                query.budget,
                pays.join(", ")
            );
        }
        None => {
            let why = if v.diagnostics.bad_witness.is_some() {
                "an equilibrium violating the GR(1) specification remains"
            } else {
                "no equilibrium satisfies the requirements"
            };
            eprintln!("no: {mode} implementation fails within budget {}: {why}", query.budget);
        }
    }
    eprintln!(
        "searched {} schemes, {} threshold vectors, {} linear programs",
        v.stats.schemes_examined, v.stats.z_vectors_examined, v.stats.lps_solved
    );
}

fn run(cmd: Command) -> Result<u8, Failure> {
    match cmd {
        Command::Check { common, budget } => {
            let l = load(&common, budget)?;
            let v = check(&l.query, &l.opts)?;
            summarize(&l.query, &v);
            finish(&common, &l, verdict_json(&l.query.game, &v), Some(&v))?;
            Ok(if v.answer { YES } else { NO })
        }
        Command::Verify { common, scheme, budget } => {
            let mut l = load(&common, 0)?;
            let k = input(&scheme, parse_scheme(&read(&scheme)?, &l.query.game))?;
            l.query.budget = budget.unwrap_or(k.cost());
            let v = verify_scheme(&l.query, &k, &l.opts)?;
            summarize(&l.query, &v);
            finish(&common, &l, verdict_json(&l.query.game, &v), Some(&v))?;
            Ok(if v.answer { YES } else { NO })
        }
        Command::Opt { common } => {
            let l = load(&common, 0)?;
            let o = opt(&l.query, &l.opts)?;
            let game = &l.query.game;
            match o.optimum {
                Some(b) => eprintln!("optimum budget {b} (search bound {})", o.bound),
                None => eprintln!("no scheme up to the search bound {} implements the GR(1) specification", o.bound),
            }
            let doc = json!({
                "optimum": o.optimum,
                "bound": o.bound,
                "scheme": o.scheme.as_ref().map(|k| serde_json::to_value(scheme_to_file(game, k)).expect("json")),
                "verdict": o.verdict.as_ref().map(|v| verdict_json(game, v)),
            });
            finish(&common, &l, doc, o.verdict.as_ref())?;
            Ok(if o.optimum.is_some() { YES } else { NO })
        }
        Command::Exact { common, budget } => {
            let l = load(&common, budget)?;
            let ok = exact(&l.query, budget, &l.opts)?;
            eprintln!("{}: {budget} is {}the optimum budget", if ok { "yes" } else { "no" }, if ok { "" } else { "not " });
            finish(&common, &l, json!({"budget": budget, "answer": if ok { "yes" } else { "no" }}), None)?;
            Ok(if ok { YES } else { NO })
        }
        Command::Uopt { common } => {
            let l = load(&common, 0)?;
            let u = uopt(&l.query, &l.opts)?;
            let game = &l.query.game;
            match u.optimum {
                Some(b) => eprintln!("optimum budget {b}: {} optimal scheme(s)", u.schemes.len()),
                None => eprintln!("no implementing scheme found"),
            }
            let doc = json!({
                "optimum": u.optimum,
                "unique": u.unique,
                "answer": if u.unique { "yes" } else { "no" },
                "schemes": u.schemes.iter().map(|k| serde_json::to_value(scheme_to_file(game, k)).expect("json")).collect::<Vec<_>>(),
            });
            finish(&common, &l, doc, None)?;
            Ok(if u.unique { YES } else { NO })
        }
        Command::Selftest { seeds, start } => selftest(start, seeds),
    }
}

fn selftest(start: u64, seeds: u64) -> Result<u8, Failure> {
    let guard = SizeGuard::default();
    let params = RandomGameParams {
        max_states: 4,
        ..RandomGameParams::default()
    };
    let opts = SolverOptions::default();
    let mut disagreements = Vec::new();
    for seed in start..start + seeds {
        let game: ConcurrentGame = random_game(seed, &params);
        let spec = random_spec(seed);
        let table = punishment_table(&game).map_err(SolveError::from)?;
        for i in 0..game.player_count() {
            for s in 0..game.state_count() {
                let b = brute_pun(&game, i, s, &guard).map_err(|e| Failure::Input(e.0))?;
                if &b != table.value(i, s) {
                    disagreements.push(json!({"seed": seed, "punishment": [i, s]}));
                }
            }
        }
        for mode in [Mode::Weak, Mode::Strong] {
            let budget = seed % 3;
            let v = check(&Query::new(game.clone(), spec.clone(), mode, budget), &opts)?;
            let b = brute_check(&game, &spec, budget, mode, None, None, &guard).map_err(|e| Failure::Input(e.0))?;
            if v.answer != b {
                disagreements.push(json!({"seed": seed, "mode": mode_name(mode), "budget": budget}));
            }
        }
    }
    eprintln!("selftest: {seeds} seeds, {} disagreements", disagreements.len());
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({"seeds": seeds, "start": start, "disagreements": disagreements})).expect("json")
    );
    Ok(if disagreements.is_empty() { YES } else { NO })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { INPUT } else { YES });
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(INPUT)
        }
        Err(Failure::Cap(msg)) => {
            eprintln!("resource cap: {msg}");
            ExitCode::from(CAP)
        }
    }
}
