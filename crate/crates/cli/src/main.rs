use std::io::{stdin, stdout};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context as _, Result};
use clap::{Args, Parser, Subcommand};
use psgraph::eval::{EvalConfig, EvalOrder, Fuel, Strategy, DEFAULT_FUEL};
use psgraph::prover::{parse_sequent, Sequent};
use psgraph::registry::StrategyRegistry;
use psgraph::session::{run, serve_lines, serve_tcp, DebugSession};
use psgraph::strategy_file::{export_dot, export_json, LoadError, Severity};

/// Exit status for usage, parse and lookup errors.
const USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "psgraph", version, about = "Evaluate and debug proof strategy graphs")]
struct Cli {
    /// Also register every strategy file in this directory.
    #[arg(long, global = true)]
    registry: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a strategy file for well-formedness and signature errors.
    Check { file: PathBuf },
    /// Evaluate a goal to every ENF and print the goals on each output.
    Run {
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        eval: EvalArgs,
        /// Stop after this many ENF results.
        #[arg(long, default_value_t = 100)]
        max_results: usize,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Serve an interactive debug session (JSON lines).
    Serve {
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        eval: EvalArgs,
        #[arg(long, required_unless_present = "stdio", conflicts_with = "stdio")]
        port: Option<u16>,
        /// Speak the protocol on standard input and output instead.
        #[arg(long)]
        stdio: bool,
        /// Exit after the first connection closes.
        #[arg(long)]
        once: bool,
    },
    /// Print a strategy as a Graphviz graph.
    ExportDot { strategy: String },
    /// Print a strategy in canonical file form.
    Export { strategy: String },
    /// List registered strategies.
    List,
}

#[derive(Args)]
struct Target {
    /// Registered name or path to a strategy file.
    #[arg(long)]
    strategy: String,
    /// Goal, e.g. "A --> B & C" or "h1, h2 |- c".
    #[arg(long)]
    goal: String,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, default_value = "leftmost")]
    order: EvalOrder,
    /// Steps per branch, or "unlimited".
    #[arg(long, default_value_t = DEFAULT_FUEL.to_string())]
    fuel: String,
}

impl EvalArgs {
    fn config(&self) -> Result<EvalConfig> {
        let fuel = match self.fuel.as_str() {
            "unlimited" => Fuel::Unlimited,
            n => Fuel::Steps(n.parse().with_context(|| format!("bad fuel {n:?}"))?),
        };
        Ok(EvalConfig { order: self.order, fuel, ..Default::default() })
    }
}

fn registry(dir: Option<&Path>) -> Result<StrategyRegistry> {
    let mut reg = StrategyRegistry::bundled();
    if let Some(d) = dir {
        reg.load_dir(d)?;
    }
    Ok(reg)
}

fn resolve(reg: &mut StrategyRegistry, s: &str) -> Result<Arc<Strategy>> {
    let p = Path::new(s);
    if p.is_file() {
        return Ok(reg.load_file(p)?.strategy.clone());
    }
    Ok(reg.get(s)?.strategy.clone())
}

fn goal(text: &str) -> Result<Sequent> {
    parse_sequent(text).map_err(|e| anyhow::anyhow!("cannot parse goal {text:?}: {e}"))
}

fn check(reg: &mut StrategyRegistry, file: &Path) -> Result<ExitCode> {
    let shown = file.display();
    match reg.load_file(file) {
        Ok(l) => {
            for w in &l.warnings {
                println!("{shown}:{w}");
            }
            let s = &l.strategy;
            println!(
                "{shown}: ok: {} ({} vertices, {} edges, {} -> [{}])",
                s.name,
                s.graph.vertex_count(),
                s.graph.edge_count(),
                s.input_types().join(" × "),
                s.output_types().join(", ")
            );
            Ok(ExitCode::SUCCESS)
        }
        Err(LoadError::Invalid { diagnostics, .. }) => {
            for d in &diagnostics {
                println!("{shown}:{d}");
            }
            let errors = diagnostics.iter().filter(|d| d.severity == Severity::Error).count();
            println!("{shown}: {errors} error(s)");
            let parse = diagnostics.iter().any(|d| d.kind == "parse" || d.kind == "version");
            Ok(ExitCode::from(if parse { USAGE } else { 1 }))
        }
        Err(e) => Err(e.into()),
    }
}

fn main_inner(cli: Cli) -> Result<ExitCode> {
    let mut reg = registry(cli.registry.as_deref())?;
    match cli.command {
        Command::Check { file } => check(&mut reg, &file),
        Command::Run { target, eval, max_results, json } => {
            let st = resolve(&mut reg, &target.strategy)?;
            let report = run(st, goal(&target.goal)?, eval.config()?, max_results)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{report}");
            }
            Ok(if report.success() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Serve { target, eval, port, stdio, once } => {
            let st = resolve(&mut reg, &target.strategy)?;
            let g = goal(&target.goal)?;
            let config = eval.config()?;
            let new_session = || DebugSession::new(st.clone(), g.clone(), config);
            if stdio {
                let mut s = new_session()?;
                serve_lines(&mut s, stdin().lock(), stdout().lock())?;
            } else {
                let Some(port) = port else { bail!("--port or --stdio is required") };
                let listener = TcpListener::bind(("127.0.0.1", port)).with_context(|| format!("cannot bind port {port}"))?;
                eprintln!("serving {} on {}", st.name, listener.local_addr()?);
                serve_tcp(&listener, new_session, once.then_some(1))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::ExportDot { strategy } => {
            let st = resolve(&mut reg, &strategy)?;
            print!("{}", export_dot(&st));
            Ok(ExitCode::SUCCESS)
        }
        Command::Export { strategy } => {
            let name = resolve(&mut reg, &strategy)?.name.clone();
            println!("{}", export_json(reg.get(&name)?));
            Ok(ExitCode::SUCCESS)
        }
        Command::List => {
            for n in reg.names() {
                let s = &reg.get(n)?.strategy;
                println!("{n}: {}", s.signature());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(USAGE)
        }
    }
}
