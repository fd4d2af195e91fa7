use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use chansched::hardness::{
    adversary_run, lift_schedule, reduce_caching, AdversaryConfig, CachingInstance, Greedy,
};
use chansched::heuristics::{run_search, Method, SearchParams};
use chansched::io::{
    load_network, load_schedule, load_transactions, network_to_string, read_to_string,
    schedule_to_string, to_json_line, transactions_to_string, write_atomic,
};
use chansched::lp::{build_lp, solve_linear};
use chansched::oracle::{brute_force_linear_opt, brute_force_step_opt, OracleBudget, StepOutcome};
use chansched::toolkit::{
    gen_transactions, import_snapshot, load_bench_config, load_snapshot, run_bench,
    sample_connected_subgraph, write_bench, CapitalPolicy, WorkloadSpec,
};
use chansched::{simulate, validate_network, Error, Instance, Mode, PenaltyConfig};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

/// Exit status of a command that ran to completion.
enum Verdict {
    Ok,
    Fail,
}

#[derive(Parser)]
#[command(
    name = "chansched",
    version,
    about = "Channel capacity scheduling toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct InstanceArgs {
    /// Network JSON file.
    #[arg(long, short = 'n')]
    network: PathBuf,
    /// Transaction JSON-lines file.
    #[arg(long, short = 't')]
    transactions: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum CostModel {
    Step,
    Linear,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Greedy,
}

#[derive(Subcommand)]
enum Command {
    /// Check a network (and optionally a transaction file against it).
    Validate {
        #[arg(long, short = 'n')]
        network: PathBuf,
        #[arg(long, short = 't')]
        transactions: Option<PathBuf>,
    },
    /// Replay a schedule and report costs, skips and capital violations.
    Simulate {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long, short = 's')]
        schedule: Option<PathBuf>,
        /// Write the full trace JSON here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Minimum linear-cost schedule via the LP.
    SolveLp {
        #[command(flatten)]
        inst: InstanceArgs,
        /// Write the LP (variables, objective, rows) as JSON here.
        #[arg(long)]
        dump_lp: Option<PathBuf>,
        /// Write the schedule here.
        #[arg(long, short = 'o')]
        out: Option<PathBuf>,
    },
    /// Metaheuristic search for a low step-cost schedule.
    Search {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long)]
        method: Method,
        #[arg(long, default_value_t = 2000)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Method knob or `length`, as key=value. Repeatable.
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
        /// Penalty per skipped transaction; defaults to 1000 * (n + 1).
        #[arg(long)]
        penalty: Option<f64>,
        /// Write the convergence curve CSV here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the best schedule here.
        #[arg(long, short = 'o')]
        out: Option<PathBuf>,
    },
    /// Exact optimum by exhaustive search (tiny instances only).
    Oracle {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long, value_enum)]
        cost: CostModel,
        #[arg(long)]
        max_modifications: Option<usize>,
        #[arg(long)]
        max_lattice: Option<usize>,
        /// Seconds.
        #[arg(long)]
        time_limit: Option<f64>,
        /// Write the optimal schedule here (step cost only).
        #[arg(long, short = 'o')]
        out: Option<PathBuf>,
    },
    /// Run the online adversary against an online algorithm.
    Adversary {
        #[arg(long)]
        delta: usize,
        #[arg(long)]
        steps: usize,
        #[arg(long, value_enum, default_value = "greedy")]
        algo: Algo,
        #[arg(long, default_value_t = 1.0)]
        capital: f64,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Let transactions move funds.
        #[arg(long)]
        consuming: bool,
        /// Write the full report JSON here.
        #[arg(long, short = 'o')]
        out: Option<PathBuf>,
    },
    /// Turn a caching instance into a scheduling instance.
    ReduceCaching {
        #[arg(long, short = 'i')]
        instance: PathBuf,
        #[arg(long)]
        network_out: PathBuf,
        #[arg(long)]
        transactions_out: PathBuf,
    },
    /// Turn a schedule for a reduced instance back into a caching policy.
    LiftSchedule {
        #[arg(long, short = 'i')]
        instance: PathBuf,
        #[arg(long, short = 's')]
        schedule: PathBuf,
        #[arg(long, short = 'o')]
        out: Option<PathBuf>,
    },
    /// Convert a channel-graph snapshot into a network.
    ImportSnapshot {
        #[arg(long, short = 'i')]
        input: PathBuf,
        #[arg(long, default_value_t = 1.5)]
        slack: f64,
        #[arg(long, short = 'o')]
        out: Option<PathBuf>,
    },
    /// Breadth-first connected subsample of a network.
    SampleGraph {
        #[arg(long, short = 'n')]
        network: PathBuf,
        #[arg(long)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short = 'o')]
        out: Option<PathBuf>,
    },
    /// Random transactions over shortest-hop paths.
    GenTxns {
        #[arg(long, short = 'n')]
        network: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 1.0)]
        lo: f64,
        /// Defaults to the largest channel capacity.
        #[arg(long)]
        hi: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short = 'o')]
        out: Option<PathBuf>,
    },
    /// Run every configured method and repetition and write curves and plots.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `out` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            write_atomic(p, text.as_bytes()).with_context(|| format!("writing {}", p.display()))
        }
        None => stdout(text),
    }
}

/// Writes to stdout; a closed pipe is not an error.
fn stdout(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    stdout(&text)
}

fn verdict(ok: bool) -> Verdict {
    if ok {
        Verdict::Ok
    } else {
        Verdict::Fail
    }
}

fn run(cli: Cli) -> Result<Verdict> {
    match cli.command {
        Command::Validate {
            network,
            transactions,
        } => {
            let net = load_network(&network)?;
            let report = validate_network(&net);
            let mut out = json!({ "network": report });
            let mut ok = report.is_ok();
            if let (Some(path), true) = (transactions, ok) {
                let txns = load_transactions(&path)?;
                match Instance::new(&net, &txns) {
                    Ok(inst) => out["transactions"] = json!({ "ok": true, "steps": inst.n() }),
                    Err(e) => {
                        ok = false;
                        out["transactions"] = json!({ "ok": false, "error": e.to_string() });
                    }
                }
            }
            out["ok"] = json!(ok);
            print_json(&out)?;
            Ok(verdict(ok))
        }
        Command::Simulate {
            inst,
            schedule,
            trace,
        } => {
            let net = load_network(&inst.network)?;
            let txns = load_transactions(&inst.transactions)?;
            let sched = match schedule {
                Some(p) => load_schedule(&p)?,
                None => Default::default(),
            };
            let tr = simulate(&net, &txns, &sched, &PenaltyConfig::for_steps(txns.len()))?;
            if let Some(p) = trace {
                emit(Some(&p), &to_json_line(&tr)?)?;
            }
            print_json(&json!({
                "sc": tr.sc,
                "lc": tr.lc,
                "executed": tr.executed.len(),
                "skipped": tr.skipped,
                "violations": tr.violations,
            }))?;
            Ok(verdict(tr.is_clean()))
        }
        Command::SolveLp { inst, dump_lp, out } => {
            let net = load_network(&inst.network)?;
            let txns = load_transactions(&inst.transactions)?;
            if let Some(p) = dump_lp {
                emit(Some(&p), &to_json_line(&build_lp(&net, &txns)?)?)?;
            }
            let plan = solve_linear(&net, &txns)?;
            let mut summary = json!({
                "status": plan.solution.status,
                "variables": plan.lp.var_names.len(),
                "rows": plan.lp.rows.len(),
            });
            if let Some(s) = &plan.schedule {
                summary["objective"] = json!(plan.solution.objective);
                summary["sc"] = json!(s.len());
                if let Some(p) = &out {
                    emit(Some(p), &schedule_to_string(s)?)?;
                }
            }
            print_json(&summary)?;
            Ok(verdict(plan.schedule.is_some()))
        }
        Command::Search {
            inst,
            method,
            budget,
            seed,
            params,
            penalty,
            trace,
            out,
        } => {
            let net = load_network(&inst.network)?;
            let txns = load_transactions(&inst.transactions)?;
            let mut sp = SearchParams::new(method, budget, seed);
            for kv in &params {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| anyhow!("--param expects key=value, got {kv:?}"))?;
                sp.set_param(k.trim(), v.trim())?;
            }
            let pen = match penalty {
                Some(p) => PenaltyConfig::new(p)?,
                None => PenaltyConfig::for_steps(txns.len()),
            };
            let r = run_search(&net, &txns, &sp, &pen)?;
            if let Some(p) = trace {
                emit(Some(&p), &r.curve_csv())?;
            }
            if let Some(p) = out {
                emit(Some(&p), &schedule_to_string(&r.best_schedule)?)?;
            }
            print_json(&json!({
                "method": r.method,
                "seed": r.seed,
                "evaluations": r.evaluations,
                "best_fitness": r.best_fitness,
            }))?;
            Ok(verdict(r.best_fitness.skips == 0))
        }
        Command::Oracle {
            inst,
            cost,
            max_modifications,
            max_lattice,
            time_limit,
            out,
        } => {
            let net = load_network(&inst.network)?;
            let txns = load_transactions(&inst.transactions)?;
            let mut budget = OracleBudget::default();
            if let Some(k) = max_modifications {
                budget.max_modifications = k;
            }
            if let Some(l) = max_lattice {
                budget.max_lattice = l;
            }
            if let Some(s) = time_limit {
                if !(s.is_finite() && s > 0.0) {
                    bail!("--time-limit must be positive");
                }
                budget.time_limit = Duration::from_secs_f64(s);
            }
            match cost {
                CostModel::Step => {
                    let report = brute_force_step_opt(&net, &txns, &budget)?;
                    if let (StepOutcome::Optimal { schedule, .. }, Some(p)) =
                        (&report.outcome, &out)
                    {
                        emit(Some(p), &schedule_to_string(schedule)?)?;
                    }
                    print_json(&report)?;
                    Ok(verdict(report.outcome != StepOutcome::Infeasible))
                }
                CostModel::Linear => {
                    let report = brute_force_linear_opt(&net, &txns, &budget)?;
                    print_json(&report)?;
                    Ok(verdict(!matches!(
                        report.outcome,
                        chansched::oracle::LinearOutcome::Infeasible
                    )))
                }
            }
        }
        Command::Adversary {
            delta,
            steps,
            algo,
            capital,
            epsilon,
            consuming,
            out,
        } => {
            let mut cfg = AdversaryConfig::new(delta, steps, capital);
            cfg.epsilon = epsilon;
            if consuming {
                cfg.mode = Mode::Consuming;
            }
            let report = match algo {
                Algo::Greedy => adversary_run(&mut Greedy, &cfg)?,
            };
            if let Some(p) = out {
                emit(Some(&p), &to_json_line(&report)?)?;
            }
            print_json(&json!({
                "algorithm": report.algorithm,
                "steps_run": report.steps_run,
                "online_sc": report.online_sc,
                "online_skips": report.online_skips,
                "offline_sc": report.offline_sc,
                "offline_skips": report.offline_skips,
                "ratio": report.ratio,
                "oracle_sc": report.oracle_sc,
                "disqualified": report.disqualified,
            }))?;
            Ok(Verdict::Ok)
        }
        Command::ReduceCaching {
            instance,
            network_out,
            transactions_out,
        } => {
            let ci = load_caching(&instance)?;
            let red = reduce_caching(&ci)?;
            emit(Some(&network_out), &network_to_string(&red.network)?)?;
            emit(
                Some(&transactions_out),
                &transactions_to_string(&red.transactions)?,
            )?;
            print_json(&json!({ "budget": red.budget, "steps": red.transactions.len() }))?;
            Ok(Verdict::Ok)
        }
        Command::LiftSchedule {
            instance,
            schedule,
            out,
        } => {
            let ci = load_caching(&instance)?;
            let sched = load_schedule(&schedule)?;
            match lift_schedule(&ci, &sched) {
                Ok(policy) => {
                    let doc = json!({
                        "faults": policy.faults(),
                        "changes": policy.changes(),
                        "policy": policy,
                    });
                    match out {
                        Some(p) => emit(Some(&p), &to_json_line(&doc)?)?,
                        None => print_json(&doc)?,
                    }
                    Ok(Verdict::Ok)
                }
                Err(Error::InfeasibleSchedule(msg)) => {
                    eprintln!("schedule rejected: {msg}");
                    Ok(Verdict::Fail)
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::ImportSnapshot { input, slack, out } => {
            let raw = load_snapshot(&input)?;
            let net = import_snapshot(&raw, CapitalPolicy::Slack(slack))?;
            emit(out.as_deref(), &network_to_string(&net)?)?;
            Ok(Verdict::Ok)
        }
        Command::SampleGraph {
            network,
            size,
            seed,
            out,
        } => {
            let net = load_network(&network)?;
            let sub = sample_connected_subgraph(&net, size, seed)?;
            emit(out.as_deref(), &network_to_string(&sub)?)?;
            Ok(Verdict::Ok)
        }
        Command::GenTxns {
            network,
            count,
            lo,
            hi,
            seed,
            out,
        } => {
            let net = load_network(&network)?;
            let hi = match hi {
                Some(h) => h,
                None => net
                    .channels
                    .iter()
                    .map(|c| c.capacity)
                    .fold(f64::NAN, f64::max),
            };
            if hi.is_nan() {
                bail!("network has no channels; pass --hi");
            }
            let spec = WorkloadSpec {
                count,
                lo,
                hi,
                seed,
            };
            let txns = gen_transactions(&net, &spec)?;
            emit(out.as_deref(), &transactions_to_string(&txns)?)?;
            Ok(Verdict::Ok)
        }
        Command::Bench { config, out } => {
            let cfg = load_bench_config(&config)?;
            let dir = out.or_else(|| cfg.out.clone()).ok_or_else(|| {
                anyhow!("no output directory: pass --out or set `out` in the config")
            })?;
            let report = run_bench(&cfg)?;
            write_bench(&report, &dir)?;
            print_json(&report.summary)?;
            let clean = report
                .runs
                .iter()
                .all(|r| r.error.is_none() && r.replay_violations == Some(0));
            Ok(verdict(clean))
        }
    }
}

fn load_caching(path: &Path) -> Result<CachingInstance> {
    let text = read_to_string(path)?;
    let ci: CachingInstance =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    ci.validate()?;
    Ok(ci)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(Verdict::Ok) => ExitCode::SUCCESS,
        Ok(Verdict::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
