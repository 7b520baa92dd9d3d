//! Single entry point for validation, simulation, exact path probabilities,
//! the region/MDP pipeline, solving, and the two-counter machine tooling.
//!
//! Exit codes: 0 success or true verdict, 1 false verdict or failed check,
//! 2 usage error, 3 model error.

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use stg_core::exact::{exact_path_probability, PathStep};
use stg_core::format::{parse_model, print_model};
use stg_core::mdp::{build_mdp, compact_poly, mdp_from_json, mdp_to_dot, mdp_to_json};
use stg_core::rat::{parse_rat, rat_to_f64};
use stg_core::region::{build_region_stg, check_star, region_stg_to_dot};
use stg_core::sim::{
    estimate_reach, initial_state_exact, initial_state_f64, EstimateOptions, NoStrategy,
    PositionalStrategy, ScheduleStrategy, SimLimits, Strategy,
};
use stg_core::solver::{
    decide_threshold, solve_exhaustive, solve_optimal, value_iteration_preview, Mode,
    ThresholdQuery,
};
use stg_core::tcm::laws::{
    gadget_laws, law_value, verify_checkx, verify_checkz, verify_getprob, verify_halt,
    verify_wid0, verify_zerotest, LawParams,
};
use stg_core::tcm::onehalf::{compile_onehalf, GadgetKind};
use stg_core::tcm::timebounded::compile_timebounded;
use stg_core::tcm::{parse_tcm, run_tcm};
use stg_core::Stg;

#[derive(Parser)]
#[command(name = "stg", about = "Stochastic timed games: exact and statistical reachability")]
struct Cli {
    /// RNG seed for all statistical commands
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = automatic)
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Decimal digits for certified enclosures
    #[arg(long, global = true, default_value_t = 12)]
    precision: usize,
    #[arg(long, global = true, value_enum, default_value_t = Output::Text)]
    output: Output,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Structural and region-level model validation
    Validate {
        #[arg(long)]
        model: PathBuf,
    },
    /// Monte Carlo reachability estimation
    Simulate {
        #[arg(long)]
        model: PathBuf,
        /// Diamond strategy: a strategy file, or "eager", or "none"
        #[arg(long, default_value = "none")]
        diamond: String,
        /// Box strategy: a strategy file, or "eager", or "none"
        #[arg(long = "box", default_value = "none")]
        box_strategy: String,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long)]
        time_bound: Option<f64>,
        #[arg(long, default_value_t = 0.99)]
        confidence: f64,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
    },
    /// Exact symbolic probability of a resolved edge path
    ExactPath {
        #[arg(long)]
        model: PathBuf,
        /// Comma-separated steps: EDGE or EDGE@DELAY for player moves
        #[arg(long)]
        path: String,
    },
    /// Build and print the 1-clock region game graph
    Regions {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Check the three structural restrictions
    CheckStar {
        #[arg(long)]
        model: PathBuf,
    },
    /// Eliminate deletable nodes and emit the MDP with exact probabilities
    Abstract {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Decide a reachability threshold on an abstracted MDP
    Solve {
        #[arg(long)]
        mdp: PathBuf,
        #[arg(long)]
        threshold: String,
        #[arg(long, value_enum, default_value_t = SolveMode::Max)]
        mode: SolveMode,
        /// Floating-point preview instead of the exact decision
        #[arg(long)]
        preview: bool,
        /// Cross-check with exhaustive profile enumeration
        #[arg(long)]
        exhaustive: bool,
    },
    /// Compile a two-counter machine program
    #[command(name = "compile-2cm")]
    Compile2cm {
        #[arg(long)]
        program: PathBuf,
        #[arg(long, value_enum)]
        variant: Variant,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a two-counter machine program and print its trace
    #[command(name = "run-2cm")]
    Run2cm {
        #[arg(long)]
        program: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
    },
    /// Verify a gadget probability law by simulation
    GadgetVerify {
        #[arg(long)]
        program: PathBuf,
        #[arg(long, value_enum)]
        variant: Variant,
        /// One of: getprob-inc, getprob-dec, getprob-dec-stated, checkz,
        /// checkx, zerotest, wid0, halt; or "list"
        #[arg(long)]
        gadget: String,
        #[arg(long, default_value = "0")]
        epsilon: String,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        k: u64,
        #[arg(long, default_value_t = 0)]
        c1: u64,
        #[arg(long, default_value_t = 0)]
        c2: u64,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolveMode {
    Max,
    Maxmin,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Variant {
    Onehalf,
    Timebounded,
}

enum CmdError {
    Model(String),
    Usage(String),
}

impl From<stg_core::model::ModelError> for CmdError {
    fn from(e: stg_core::model::ModelError) -> Self {
        CmdError::Model(e.to_string())
    }
}

fn read(path: &PathBuf) -> Result<String, CmdError> {
    std::fs::read_to_string(path)
        .map_err(|e| CmdError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load_model(path: &PathBuf) -> Result<Stg, CmdError> {
    parse_model(&read(path)?).map_err(Into::into)
}

fn load_strategy(spec: &str, stg: &Stg) -> Result<Box<dyn Strategy<f64>>, CmdError> {
    match spec {
        "none" => Ok(Box::new(NoStrategy)),
        "eager" => Ok(Box::new(stg_core::sim::EagerStrategy)),
        path => {
            let text = read(&PathBuf::from(path))?;
            let doc: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| CmdError::Usage(format!("strategy file: {e}")))?;
            let kind = doc["kind"].as_str().unwrap_or_default();
            match kind {
                "positional" => {
                    let mut rules = vec![];
                    for r in doc["rules"].as_array().into_iter().flatten() {
                        let loc = r["location"].as_str().ok_or_else(|| {
                            CmdError::Usage("positional rule needs a location".into())
                        })?;
                        let loc = stg
                            .location_by_name(loc)
                            .ok_or_else(|| CmdError::Model(format!("unknown location `{loc}`")))?;
                        let delay = parse_rat(r["delay"].as_str().unwrap_or("0"))
                            .map_err(CmdError::Usage)?;
                        let edge = r["edge"].as_str().unwrap_or_default();
                        let edge = stg
                            .edge_by_name(edge)
                            .ok_or_else(|| CmdError::Model(format!("unknown edge `{edge}`")))?;
                        rules.push((loc, delay, edge));
                    }
                    Ok(Box::new(PositionalStrategy { rules }))
                }
                "schedule" => {
                    let mut moves = vec![];
                    for mv in doc["moves"].as_array().into_iter().flatten() {
                        let delay = parse_rat(mv["delay"].as_str().unwrap_or("0"))
                            .map_err(CmdError::Usage)?;
                        let edge = mv["edge"].as_str().unwrap_or_default();
                        let edge = stg
                            .edge_by_name(edge)
                            .ok_or_else(|| CmdError::Model(format!("unknown edge `{edge}`")))?;
                        moves.push((delay, edge));
                    }
                    Ok(Box::new(ScheduleStrategy::new(moves)))
                }
                other => Err(CmdError::Usage(format!("unknown strategy kind `{other}`"))),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .ok();
    }
    match dispatch(&cli) {
        Ok(code) => code,
        Err(CmdError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(CmdError::Model(msg)) => {
            eprintln!("model error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn emit(cli: &Cli, text: String, doc: serde_json::Value) {
    match cli.output {
        Output::Text => println!("{text}"),
        Output::Json => {
            println!("{}", serde_json::to_string_pretty(&doc).expect("json output"))
        }
    }
}

fn dispatch(cli: &Cli) -> Result<ExitCode, CmdError> {
    if cli.precision < 6 {
        return Err(CmdError::Usage("--precision must be at least 6".into()));
    }
    match &cli.command {
        Command::Validate { model } => {
            let stg = load_model(model)?;
            let rep = stg_core::check_wellformed(&stg);
            let ok = rep.ok();
            let lines: Vec<String> = rep.findings.iter().map(|f| f.to_string()).collect();
            let text = if lines.is_empty() {
                "all checks pass".to_string()
            } else {
                format!(
                    "{}\n{}",
                    lines.join("\n"),
                    if ok { "no errors" } else { "validation failed" }
                )
            };
            emit(
                cli,
                text,
                json!({"ok": ok, "findings": lines}),
            );
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(3) })
        }

        Command::Simulate {
            model,
            diamond,
            box_strategy,
            samples,
            time_bound,
            confidence,
            max_steps,
        } => {
            let stg = load_model(model)?;
            let d = load_strategy(diamond, &stg)?;
            let b = load_strategy(box_strategy, &stg)?;
            let opts = EstimateOptions {
                samples: *samples,
                confidence: *confidence,
                seed: cli.seed,
                limits: SimLimits { max_steps: *max_steps, time_bound: *time_bound },
            };
            let from = initial_state_f64(&stg);
            let est = estimate_reach(&stg, &from, d.as_ref(), b.as_ref(), &opts)
                .map_err(|e| CmdError::Model(e.to_string()))?;
            let text = format!(
                "estimate {:.6}  hits {}/{}  {:.0}% CI [{:.6}, {:.6}]  seed {}",
                est.point,
                est.hits,
                est.samples,
                est.confidence * 100.0,
                est.ci_low,
                est.ci_high,
                est.seed
            );
            emit(
                cli,
                text,
                json!({
                    "estimate": est.point, "hits": est.hits, "samples": est.samples,
                    "confidence": est.confidence, "ci_low": est.ci_low, "ci_high": est.ci_high,
                    "seed": est.seed
                }),
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::ExactPath { model, path } => {
            let stg = load_model(model)?;
            let mut steps = vec![];
            for tok in path.split(',') {
                let tok = tok.trim();
                if tok.is_empty() {
                    continue;
                }
                let (name, delay) = match tok.split_once('@') {
                    Some((e, d)) => (e, Some(parse_rat(d).map_err(CmdError::Usage)?)),
                    None => (tok, None),
                };
                let edge = stg
                    .edge_by_name(name)
                    .ok_or_else(|| CmdError::Model(format!("unknown edge `{name}`")))?;
                steps.push(PathStep { edge, player_delay: delay });
            }
            let p = exact_path_probability(&stg, &initial_state_exact(&stg), &steps)
                .map_err(|e| CmdError::Model(e.to_string()))?;
            let enclosure = p.decimal_enclosure(cli.precision);
            let exact = match p.as_constant() {
                Some(r) => format!("{}/{}", r.numer(), r.denom()),
                None => p.to_string(),
            };
            emit(
                cli,
                format!("probability {exact}\nenclosure  {enclosure}"),
                json!({"probability": exact, "enclosure": enclosure}),
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Regions { model, dot } => {
            let stg = load_model(model)?;
            let rg = build_region_stg(&stg).map_err(|e| CmdError::Model(e.to_string()))?;
            if let Some(out) = dot {
                std::fs::write(out, region_stg_to_dot(&rg))
                    .map_err(|e| CmdError::Usage(e.to_string()))?;
            }
            let nodes: Vec<String> = (0..rg.nodes.len()).map(|i| rg.node_name(i)).collect();
            let edges: Vec<String> = rg
                .edges
                .iter()
                .map(|e| {
                    format!(
                        "{} -[{} in {}]-> {}",
                        rg.node_name(e.source),
                        rg.stg.edge(e.edge).name,
                        e.firing_region,
                        rg.node_name(e.target)
                    )
                })
                .collect();
            emit(
                cli,
                format!(
                    "c_max {}\nnodes ({}):\n  {}\nedges ({}):\n  {}",
                    rg.c_max,
                    nodes.len(),
                    nodes.join("\n  "),
                    edges.len(),
                    edges.join("\n  ")
                ),
                json!({"c_max": rg.c_max, "nodes": nodes, "edges": edges}),
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::CheckStar { model } => {
            let stg = load_model(model)?;
            let rg = build_region_stg(&stg).map_err(|e| CmdError::Model(e.to_string()))?;
            let rep = check_star(&rg);
            let fmt = |name: &str, v: &stg_core::region::Verdict| {
                if v.pass {
                    format!("{name}: pass")
                } else {
                    format!("{name}: FAIL ({})", v.witness.clone().unwrap_or_default())
                }
            };
            let text = [
                fmt("structurally non-Zeno", &rep.non_zeno),
                fmt("exponential with unbounded support", &rep.exponential_unbounded),
                fmt("initialized", &rep.initialized),
            ]
            .join("\n");
            let ok = rep.all_pass();
            emit(
                cli,
                text,
                json!({
                    "non_zeno": {"pass": rep.non_zeno.pass, "witness": rep.non_zeno.witness},
                    "exponential_unbounded": {"pass": rep.exponential_unbounded.pass,
                                               "witness": rep.exponential_unbounded.witness},
                    "initialized": {"pass": rep.initialized.pass, "witness": rep.initialized.witness},
                    "ok": ok
                }),
            );
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }

        Command::Abstract { model, out, dot } => {
            let stg = load_model(model)?;
            let rg = build_region_stg(&stg).map_err(|e| CmdError::Model(e.to_string()))?;
            let star = check_star(&rg);
            if !star.all_pass() {
                return Err(CmdError::Model(
                    "the (*) restrictions fail; run check-star for witnesses".into(),
                ));
            }
            let mdp = build_mdp(&rg).map_err(|e| CmdError::Model(e.to_string()))?;
            std::fs::write(out, mdp_to_json(&mdp, cli.precision))
                .map_err(|e| CmdError::Usage(e.to_string()))?;
            if let Some(d) = dot {
                std::fs::write(d, mdp_to_dot(&mdp)).map_err(|e| CmdError::Usage(e.to_string()))?;
            }
            let mut lines = vec![format!("states: {}", mdp.states.len())];
            for (s, es) in &mdp.chance {
                for e in es {
                    lines.push(format!(
                        "  {} -[{} : {}]-> {}",
                        mdp.states[*s].name,
                        e.label,
                        compact_poly(&e.probability),
                        mdp.states[e.successor].name
                    ));
                }
            }
            for a in &mdp.actions {
                lines.push(format!(
                    "  {} -[{}]-> {}",
                    mdp.states[a.state].name, a.label, mdp.states[a.successor].name
                ));
            }
            emit(
                cli,
                lines.join("\n"),
                json!({
                    "states": mdp.states.len(),
                    "labels": mdp.label_set().into_iter().collect::<Vec<_>>(),
                    "out": out.display().to_string()
                }),
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Solve { mdp, threshold, mode, preview, exhaustive } => {
            let text = read(mdp)?;
            let mdp = mdp_from_json(&text).map_err(CmdError::Model)?;
            let query = ThresholdQuery::parse(threshold)
                .map_err(|e| CmdError::Usage(e.to_string()))?;
            let mode = match mode {
                SolveMode::Max => Mode::Max,
                SolveMode::Maxmin => Mode::MaxMin,
            };
            if *preview {
                let v = value_iteration_preview(&mdp, mode);
                emit(
                    cli,
                    format!("preview value at initial: {:.9}", v[mdp.initial]),
                    json!({"preview": v[mdp.initial]}),
                );
                return Ok(ExitCode::SUCCESS);
            }
            let sol = solve_optimal(&mdp, mode).map_err(|e| CmdError::Model(e.to_string()))?;
            if *exhaustive {
                let ex = solve_exhaustive(&mdp).map_err(|e| CmdError::Model(e.to_string()))?;
                if !sol.values[mdp.initial].eq_value(&ex.values[mdp.initial]) {
                    return Err(CmdError::Model(
                        "policy iteration and exhaustive enumeration disagree".into(),
                    ));
                }
            }
            let value = &sol.values[mdp.initial];
            let decision =
                decide_threshold(value, &query).map_err(|e| CmdError::Model(e.to_string()))?;
            let enclosure = value.enclosure(cli.precision as u32);
            let strategy: Vec<String> = sol
                .profile
                .iter()
                .map(|(s, a)| format!("{} -> {}", mdp.states[*s].name, mdp.actions[*a].label))
                .collect();
            let text = format!(
                "value   {}\nencl    [{}, {}]\nverdict {} ({})\nstrategy:\n  {}",
                value,
                stg_core::rat::rat_to_decimal(&enclosure.lo, cli.precision),
                stg_core::rat::rat_to_decimal(&enclosure.hi, cli.precision),
                decision.verdict,
                decision.certificate,
                strategy.join("\n  ")
            );
            emit(
                cli,
                text,
                json!({
                    "value": value.to_string(),
                    "enclosure": [
                        stg_core::rat::rat_to_decimal(&enclosure.lo, cli.precision),
                        stg_core::rat::rat_to_decimal(&enclosure.hi, cli.precision)
                    ],
                    "verdict": decision.verdict,
                    "certificate": decision.certificate,
                    "strategy": strategy
                }),
            );
            Ok(if decision.verdict { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }

        Command::Compile2cm { program, variant, out } => {
            let m = parse_tcm(&read(program)?).map_err(|e| CmdError::Model(e.to_string()))?;
            let stg = match variant {
                Variant::Onehalf => compile_onehalf(&m).stg,
                Variant::Timebounded => compile_timebounded(&m).stg,
            };
            std::fs::write(out, print_model(&stg)).map_err(|e| CmdError::Usage(e.to_string()))?;
            emit(
                cli,
                format!(
                    "compiled {} locations, {} edges, {} clocks -> {}",
                    stg.locations.len(),
                    stg.edges.len(),
                    stg.clocks.len(),
                    out.display()
                ),
                json!({
                    "locations": stg.locations.len(),
                    "edges": stg.edges.len(),
                    "clocks": stg.clocks.len(),
                    "out": out.display().to_string()
                }),
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Run2cm { program, max_steps } => {
            let m = parse_tcm(&read(program)?).map_err(|e| CmdError::Model(e.to_string()))?;
            let run = run_tcm(&m, *max_steps).map_err(|e| CmdError::Model(e.to_string()))?;
            let lines: Vec<String> = run
                .configurations
                .iter()
                .map(|c| format!("{}  c1={} c2={}", m.labels[c.pc], c.c1, c.c2))
                .collect();
            emit(
                cli,
                format!(
                    "{}\n{}",
                    lines.join("\n"),
                    if run.halted { "halted" } else { "truncated (not halted)" }
                ),
                json!({
                    "halted": run.halted,
                    "steps": run.configurations.len() - 1,
                    "trace": run.configurations.iter()
                        .map(|c| json!({"label": m.labels[c.pc], "c1": c.c1, "c2": c.c2}))
                        .collect::<Vec<_>>()
                }),
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::GadgetVerify { program, variant, gadget, epsilon, samples, k, c1, c2 } => {
            if gadget == "list" {
                let laws = gadget_laws();
                let text: Vec<String> =
                    laws.iter().map(|l| format!("{:20} {}", l.name, l.description)).collect();
                emit(
                    cli,
                    text.join("\n"),
                    json!(laws
                        .iter()
                        .map(|l| json!({"name": l.name, "description": l.description}))
                        .collect::<Vec<_>>()),
                );
                return Ok(ExitCode::SUCCESS);
            }
            let m =
                Arc::new(parse_tcm(&read(program)?).map_err(|e| CmdError::Model(e.to_string()))?);
            let mut params = LawParams::default();
            params.eps = parse_rat(epsilon).map_err(CmdError::Usage)?;
            params.k = *k;
            params.c1 = *c1;
            params.c2 = *c2;
            let chk = match (variant, gadget.as_str()) {
                (Variant::Onehalf, "getprob-inc") => {
                    let g = compile_onehalf(&m);
                    verify_getprob(&g, &m, GadgetKind::IncrementGetProb, &params, *samples, cli.seed)
                }
                (Variant::Onehalf, "getprob-dec" | "getprob-dec-stated") => {
                    let g = compile_onehalf(&m);
                    if params.c1 == 0 {
                        params.c1 = 1;
                    }
                    let mut chk = verify_getprob(
                        &g,
                        &m,
                        GadgetKind::DecrementGetProb,
                        &params,
                        *samples,
                        cli.seed,
                    );
                    if gadget == "getprob-dec-stated" {
                        if let Ok(c) = &mut chk {
                            // re-score against the advertised closed form
                            let law = law_value("getprob-dec-stated", &params)
                                .map_err(|e| CmdError::Model(e.to_string()))?;
                            let p = rat_to_f64(&law);
                            let n = c.estimate.samples as f64;
                            let sigma = (p * (1.0 - p) / n).sqrt();
                            c.sigmas = (c.estimate.point - p).abs() / sigma;
                            c.pass = c.sigmas <= 3.0;
                            c.law = law;
                        }
                    }
                    chk
                }
                (Variant::Onehalf, "zerotest") => {
                    let g = compile_onehalf(&m);
                    verify_zerotest(&g, &m, *samples, cli.seed)
                }
                (Variant::Timebounded, "checkz") => {
                    let g = compile_timebounded(&m);
                    verify_checkz(&g, &m, &params, *samples, cli.seed)
                }
                (Variant::Timebounded, "checkx") => {
                    let g = compile_timebounded(&m);
                    verify_checkx(&g, &m, &params, *samples, cli.seed)
                }
                (Variant::Timebounded, "wid0") => {
                    let g = compile_timebounded(&m);
                    verify_wid0(&g, &m, &params, *samples, cli.seed)
                }
                (Variant::Timebounded, "halt") => {
                    let g = compile_timebounded(&m);
                    verify_halt(&g, &m, *samples, cli.seed)
                }
                (_, other) => {
                    return Err(CmdError::Usage(format!(
                        "gadget `{other}` is not available for this variant (try --gadget list)"
                    )))
                }
            }
            .map_err(|e| CmdError::Model(e.to_string()))?;
            let law_f = rat_to_f64(&chk.law);
            let text = format!(
                "law      {} = {:.6}\nestimate {:.6}  ({} samples, seed {})\nCI       [{:.6}, {:.6}]\ndeviation {:.2} sigma -> {}",
                chk.law,
                law_f,
                chk.estimate.point,
                chk.estimate.samples,
                chk.estimate.seed,
                chk.estimate.ci_low,
                chk.estimate.ci_high,
                chk.sigmas,
                if chk.pass { "pass" } else { "FAIL" }
            );
            emit(
                cli,
                text,
                json!({
                    "law": format!("{}", chk.law),
                    "law_value": law_f,
                    "estimate": chk.estimate.point,
                    "samples": chk.estimate.samples,
                    "ci": [chk.estimate.ci_low, chk.estimate.ci_high],
                    "sigmas": chk.sigmas,
                    "pass": chk.pass
                }),
            );
            Ok(if chk.pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}
