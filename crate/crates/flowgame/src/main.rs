//! Command-line front end: certificate building, match play, trace
//! verification, the Proposition-1 sweep, the grid solver, and the
//! enumeration builder.
//!
//! Exit codes: 0 success, 1 property or verdict failure, 2 usage error.

use clap::{Parser, Subcommand};
use flowgame::cert::{ladder, Ladder, StrategyCert};
use flowgame::game::{GameConfig, Height, Verdict};
use flowgame::harness::{run_match, verify_trace, MatchCaps, MatchMeta, MatchTrace};
use flowgame::measures::{max_path_ratio_sum, proportional_split, DiscreteSemimeasure};
use flowgame::monotone::{ce_builder, CeVerdict};
use flowgame::rat::{ExtRat, Rat};
use flowgame::strategy::{
    grid_solver, greedy_all, layered_driver, proportional_online, random_adversary,
    recursive_strategy, scripted, threshold_dodger, toy_strategy, toy_grid_guarantee,
    trivial_strategy, uniform_once, AdvStrategy, GridSolverConfig, MathStrategy, Winner,
};
use rand::SeedableRng;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "flowgame", about = "Weight/flow game simulator and verifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the certificate ladder up to a target level.
    Certify {
        /// Target level k as a rational like "21/20".
        #[arg(long)]
        k_target: String,
        /// Write the full certificate chain as JSON to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Play one match between a Mathematician strategy and an adversary.
    Play {
        /// Mathematician: trivial | toy | recursive | monotone | layered.
        #[arg(long)]
        m: String,
        /// Adversary: greedy | proportional | dodger | random | uniform | silent.
        #[arg(long)]
        a: String,
        /// Certificate JSON file (for recursive/monotone/dodger).
        #[arg(long)]
        cert: Option<PathBuf>,
        /// Build a ladder to this level instead of loading --cert.
        #[arg(long)]
        k_target: Option<String>,
        /// Number of layers for the layered driver (targets 2, 4, ...).
        #[arg(long, default_value_t = 2)]
        layers: u32,
        #[arg(long, default_value_t = 1000)]
        rounds: u64,
        #[arg(long, default_value_t = 3)]
        grace: u64,
        /// Seed for the random adversary.
        #[arg(long)]
        seed: Option<u64>,
        /// Dodger margin as a rational (default: derived from the cert).
        #[arg(long)]
        delta: Option<String>,
        /// Write the match trace as JSONL to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Replay a trace file and check every recorded fact.
    Verify {
        #[arg(long)]
        trace: PathBuf,
    },
    /// Proposition 1: proportional splitting keeps every path sum at most 1.
    Prop1 {
        /// Discrete semimeasure JSON file.
        #[arg(long)]
        measure: Option<PathBuf>,
        /// Number of random semimeasures to sweep instead.
        #[arg(long)]
        random: Option<u64>,
        #[arg(long, default_value_t = 8)]
        height: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Exact small-instance solver on the 1/grain grid.
    Search {
        #[arg(long)]
        height: u64,
        /// Target level k as a rational.
        #[arg(long)]
        k: String,
        #[arg(long, default_value_t = 8)]
        grain: u64,
        #[arg(long, default_value_t = 6)]
        plies: u32,
        /// Also measure the toy strategy's grid guarantee (height 2 only).
        #[arg(long, default_value_t = false)]
        toy: bool,
    },
    /// Run the monotone layered composition and emit the enumeration stream.
    CeBuild {
        #[arg(long, default_value_t = 2)]
        layers: u32,
        /// Adversary: greedy | proportional | random | uniform | silent.
        #[arg(long, default_value = "proportional")]
        a: String,
        #[arg(long, default_value_t = 10_000)]
        rounds: u64,
        #[arg(long)]
        seed: Option<u64>,
        /// Write enumeration events as JSONL to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    // Certificate chains nest one strategy frame per rung (several hundred
    // for the higher ladders), so run on a generous stack.
    let result = std::thread::Builder::new()
        .stack_size(512 << 20)
        .spawn(move || run(cli))
        .expect("spawn worker")
        .join()
        .expect("worker panicked");
    match result {
        Ok(ok) => {
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn parse_rat(s: &str) -> Result<Rat, String> {
    s.parse::<Rat>().map_err(|e| format!("bad rational {s:?}: {e}"))
}

fn load_cert(
    cert: &Option<PathBuf>,
    k_target: &Option<String>,
) -> Result<StrategyCert, String> {
    match (cert, k_target) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
            StrategyCert::from_json(&text).map_err(|e| e.to_string())
        }
        (None, Some(k)) => Ok(ladder(&parse_rat(k)?).map_err(|e| e.to_string())?.top),
        (None, None) => Err("need --cert or --k-target".into()),
    }
}

fn make_adversary(
    name: &str,
    cert: &StrategyCert,
    seed: Option<u64>,
    delta: &Option<String>,
) -> Result<Box<dyn AdvStrategy>, String> {
    let delta = match delta {
        Some(s) => Some(parse_rat(s)?),
        None => None,
    };
    Ok(match name {
        "greedy" => Box::new(greedy_all()),
        "proportional" => Box::new(proportional_online()),
        "dodger" => Box::new(threshold_dodger(cert, delta).map_err(|e| e.to_string())?),
        "random" => Box::new(random_adversary(seed.unwrap_or(0), 64)),
        "uniform" => Box::new(uniform_once()),
        "silent" => Box::new(scripted(Vec::new())),
        other => return Err(format!("unknown adversary {other:?}")),
    })
}

fn run(cli: Cli) -> Result<bool, String> {
    match cli.command {
        Command::Certify { k_target, out } => {
            let k = parse_rat(&k_target)?;
            let start = std::time::Instant::now();
            let lad = ladder(&k).map_err(|e| e.to_string())?;
            lad.top.validate().map_err(|e| e.to_string())?;
            let rungs = lad.rungs();
            println!(
                "built {} rungs to k = {} (~{:.4}) in {:.2?}",
                rungs.len(),
                lad.top.achieved_k(),
                lad.top.achieved_k().to_f64(),
                start.elapsed()
            );
            for (j, r) in rungs.iter().enumerate() {
                println!(
                    "  rung {}: k = {}, eps = {}, n = {}, height = {}",
                    j + 1,
                    r.k,
                    r.eps,
                    r.n,
                    r.height
                );
            }
            if let Some(path) = out {
                std::fs::write(&path, lad.to_json()).map_err(|e| e.to_string())?;
                println!("wrote {}", path.display());
            }
            Ok(true)
        }
        Command::Play {
            m,
            a,
            cert,
            k_target,
            layers,
            rounds,
            grace,
            seed,
            delta,
            trace,
        } => {
            let top = match m.as_str() {
                "trivial" | "toy" | "layered" if cert.is_none() && k_target.is_none() => {
                    StrategyCert::base()
                }
                _ => load_cert(&cert, &k_target)?,
            };
            let (mut mstrat, config): (Box<dyn MathStrategy>, GameConfig) = match m.as_str() {
                "trivial" => (
                    Box::new(trivial_strategy()),
                    unit_config(Height::Bounded(0), Rat::one()),
                ),
                "toy" => (
                    Box::new(toy_strategy()),
                    unit_config(Height::Bounded(2), Rat::new(9, 8)),
                ),
                "recursive" => (
                    Box::new(recursive_strategy(&top).map_err(|e| e.to_string())?),
                    unit_config(Height::Bounded(top.height), top.achieved_k()),
                ),
                "monotone" => (
                    Box::new(
                        flowgame::monotone::monotone_recursive_strategy(&top)
                            .map_err(|e| e.to_string())?,
                    ),
                    unit_config(Height::Unbounded, top.achieved_k()),
                ),
                "layered" => {
                    let tops = layer_tops(layers)?;
                    let target = Rat::from_int(1u64 << layers);
                    (
                        Box::new(layered_driver(tops).map_err(|e| e.to_string())?),
                        unit_config(Height::Unbounded, target),
                    )
                }
                other => return Err(format!("unknown strategy {other:?}")),
            };
            let mut astrat = make_adversary(&a, &top, seed, &delta)?;
            let meta = MatchMeta { seed, cert_hash: Some(top.hash()) };
            let result = run_match(
                mstrat.as_mut(),
                astrat.as_mut(),
                config,
                MatchCaps { rounds, grace },
                meta,
            )
            .map_err(|e| e.to_string())?;
            println!(
                "verdict after {} rounds: {:?}",
                result.footer.rounds, result.footer.verdict
            );
            println!(
                "best leaf {} with sum {}",
                result.footer.best_leaf, result.footer.best_sum
            );
            if let Some(path) = trace {
                result.save(&path).map_err(|e| e.to_string())?;
                println!("wrote {}", path.display());
            }
            Ok(matches!(result.footer.verdict, Verdict::MWins { .. }))
        }
        Command::Verify { trace } => {
            let t = MatchTrace::load(&trace).map_err(|e| e.to_string())?;
            match verify_trace(&t) {
                Ok(()) => {
                    println!("trace verified: {} events, {:?}", t.events.len(), t.footer.verdict);
                    Ok(true)
                }
                Err(e) => {
                    println!("trace verification failed: {e}");
                    Ok(false)
                }
            }
        }
        Command::Prop1 { measure, random, height, seed } => {
            let mut measures = Vec::new();
            if let Some(path) = measure {
                let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
                measures
                    .push(DiscreteSemimeasure::from_json(&text, height).map_err(|e| e.to_string())?);
            }
            if let Some(count) = random {
                let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
                for _ in 0..count {
                    measures.push(DiscreteSemimeasure::random(&mut rng, height));
                }
            }
            if measures.is_empty() {
                return Err("need --measure or --random".into());
            }
            let mut worst = ExtRat::Finite(Rat::zero());
            for m in &measures {
                let a = proportional_split(m, height);
                let s = max_path_ratio_sum(m, &a);
                if s > worst {
                    worst = s.clone();
                }
                if s > ExtRat::Finite(Rat::one()) {
                    println!("violation: path sum {s} > 1");
                    return Ok(false);
                }
            }
            println!(
                "{} measures checked at height {}; max path sum {}",
                measures.len(),
                height,
                worst
            );
            Ok(true)
        }
        Command::Search { height, k, grain, plies, toy } => {
            let target = parse_rat(&k)?;
            let out = grid_solver(&GridSolverConfig::new(height, target.clone(), grain, plies))
                .map_err(|e| e.to_string())?;
            println!(
                "height {height}, target {target}, grain 1/{grain}, plies {plies}: {:?} wins ({} states)",
                out.winner, out.states
            );
            for (i, mv) in out.principal_variation.iter().enumerate() {
                println!("  pv {}: {:?} {:?}", i + 1, mv.player, mv.updates);
            }
            if toy {
                let (best, table) = toy_grid_guarantee(grain, 64).map_err(|e| e.to_string())?;
                for (t, wins) in &table {
                    println!("  toy at target {t}: {}", if *wins { "wins" } else { "loses" });
                }
                match best {
                    Some(b) => println!("toy grid guarantee: {b}"),
                    None => println!("toy grid guarantee: none"),
                }
            }
            Ok(out.winner == Winner::M)
        }
        Command::CeBuild { layers, a, rounds, seed, out } => {
            let tops = layer_tops(layers)?;
            let mut adversary = make_adversary(&a, &tops[tops.len() - 1], seed, &None)?;
            let report =
                ce_builder(tops, adversary.as_mut(), rounds).map_err(|e| e.to_string())?;
            if let Some(path) = out {
                let mut text = String::new();
                for ev in &report.events {
                    text.push_str(&serde_json::to_string(ev).unwrap());
                    text.push('\n');
                }
                std::fs::write(&path, text).map_err(|e| e.to_string())?;
            }
            let summary = serde_json::json!({
                "format": 1,
                "verdict": format!("{:?}", report.verdict),
                "branch_prefix": report.branch_prefix.to_string(),
                "layer_sums": report.layer_sums.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
                "branch_sum": report.branch_sum.to_string(),
                "events": report.events.len(),
                "monotone_ok": report.monotone_ok,
            });
            println!("{summary}");
            Ok(report.monotone_ok && matches!(report.verdict, CeVerdict::Settled { .. }))
        }
    }
}

fn unit_config(height: Height, target: Rat) -> GameConfig {
    GameConfig { height, root_flow: Rat::one(), budget: Rat::one(), target }
}

/// Ladder tops for layers 1..=L with targets 2, 4, ..., 2^L.
fn layer_tops(layers: u32) -> Result<Vec<StrategyCert>, String> {
    if layers == 0 || layers > 4 {
        return Err("layers must be between 1 and 4".into());
    }
    let mut tops = Vec::new();
    for j in 1..=layers {
        let lad: Ladder =
            ladder(&Rat::from_int(1u64 << j)).map_err(|e| e.to_string())?;
        tops.push(lad.top);
    }
    Ok(tops)
}
