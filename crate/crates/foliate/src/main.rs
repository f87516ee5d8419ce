use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use foliate::driver::{self, ChartTree, DriverError};
use foliate::io::{self, ProblemFile};
use serde_json::Value;

#[derive(Parser)]
#[command(name = "foliate", version, about = "Monomialize first integrals of monomial foliations")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Truncation order (overrides the problem file)
    #[arg(long, global = true)]
    trunc: Option<u32>,
    /// Sample points per drop chart (overrides the problem file)
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Sampling seed (overrides the problem file)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write JSON here instead of stdout
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Also emit the chart tree as Graphviz DOT
    #[arg(long, global = true)]
    emit_graph: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Tangency order, computed by the scan and by the derivation chain
    Invariant { problem: PathBuf },
    /// Split the generators into first-integral part and residual
    Decompose { problem: PathBuf },
    /// Principalize and bring the model to prepared form
    Prepare { problem: PathBuf },
    /// One invariant-dropping round
    Drop { problem: PathBuf },
    /// Full monomialization
    Monomialize { problem: PathBuf },
    /// Re-verify a tree produced by `monomialize`, `drop` or `prepare`
    Check { tree: PathBuf },
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn load(path: &Path, cli: &Cli) -> Result<ProblemFile, ExitCode> {
    let text = std::fs::read_to_string(path).map_err(|e| fail(2, format!("{}: {e}", path.display())))?;
    let mut p = io::parse_problem(&text).map_err(|e| fail(2, format!("{}: {e}", path.display())))?;
    if let Some(t) = cli.trunc {
        p.trunc = t;
    }
    if let Some(k) = cli.samples {
        p.samples = k;
    }
    if let Some(s) = cli.seed {
        p.seed = s;
    }
    Ok(p)
}

fn emit(cli: &Cli, doc: &Value, dot: Option<String>) -> Result<(), ExitCode> {
    let text = io::to_text(doc);
    match &cli.output {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| fail(5, format!("{}: {e}", path.display())))?;
            if let Some(d) = dot {
                let dp = path.with_extension("dot");
                std::fs::write(&dp, d).map_err(|e| fail(5, format!("{}: {e}", dp.display())))?;
            }
        }
        None => {
            print!("{text}");
            if let Some(d) = dot {
                print!("{d}");
            }
        }
    }
    Ok(())
}

fn run_tree(cli: &Cli, name: &str, p: &ProblemFile, f: fn(&foliate::foliation::LocalModel, &driver::DriverConfig) -> Result<ChartTree, DriverError>) -> ExitCode {
    let model = match p.model() {
        Ok(m) => m,
        Err(e) => return fail(2, e),
    };
    let tree = match f(&model, &p.config()) {
        Ok(t) => t,
        Err(DriverError::Precondition(e)) => return fail(2, e),
        Err(e) => return fail(5, e),
    };
    let doc = io::tree_json(name, p, &tree);
    let dot = cli.emit_graph.then(|| io::tree_dot(&tree));
    if let Err(c) = emit(cli, &doc, dot) {
        return c;
    }
    ExitCode::from(io::exit_code(&io::summarize(&tree)) as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let problem = match &cli.cmd {
        Cmd::Check { tree } => {
            let text = match std::fs::read_to_string(tree) {
                Ok(t) => t,
                Err(e) => return fail(2, format!("{}: {e}", tree.display())),
            };
            let doc: Value = match serde_json::from_str(&text) {
                Ok(d) => d,
                Err(e) => return fail(2, format!("{}: {e}", tree.display())),
            };
            let rep = io::check_tree(&doc);
            if let Err(c) = emit(&cli, &rep.to_json(), None) {
                return c;
            }
            return if rep.ok() { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
        Cmd::Invariant { problem } | Cmd::Decompose { problem } | Cmd::Prepare { problem } | Cmd::Drop { problem } | Cmd::Monomialize { problem } => problem.clone(),
    };
    let p = match load(&problem, &cli) {
        Ok(p) => p,
        Err(c) => return c,
    };
    match &cli.cmd {
        Cmd::Invariant { .. } | Cmd::Decompose { .. } => {
            let model = match p.model() {
                Ok(m) => m,
                Err(e) => return fail(2, e),
            };
            let doc = if matches!(cli.cmd, Cmd::Invariant { .. }) { io::invariant_json(&model) } else { io::decompose_json(&model) };
            match emit(&cli, &doc, None) {
                Ok(()) => ExitCode::SUCCESS,
                Err(c) => c,
            }
        }
        Cmd::Prepare { .. } => run_tree(&cli, "prepare", &p, driver::prepare),
        Cmd::Drop { .. } => run_tree(&cli, "drop", &p, driver::drop_invariant),
        Cmd::Monomialize { .. } => run_tree(&cli, "monomialize", &p, driver::monomialize),
        Cmd::Check { .. } => unreachable!(),
    }
}
