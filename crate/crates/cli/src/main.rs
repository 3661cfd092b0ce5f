use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};

use tfsam::compiler::{compile_program, compile_query, compile_rule, CompileOptions};
use tfsam::grammar::{load_grammar, Grammar};
use tfsam::machine::{Machine, Outcome};
use tfsam::run::{run, Against, RunOptions};
use tfsam::signature::Signature;
use tfsam::term::{parse_mrs, parse_rule, Rule, Term};

#[derive(Parser)]
#[command(name = "tfsam", version, about = "Typed feature structure abstract machine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a signature or grammar file.
    Validate { file: PathBuf },
    /// Print the upper triangle of the LUB table.
    Lub { file: PathBuf },
    /// Disassemble a query, program or rule.
    #[command(group(ArgGroup::new("unit").required(true).args(["query", "program", "rule"])))]
    Compile {
        file: PathBuf,
        #[arg(long)]
        query: Option<String>,
        #[arg(long)]
        program: Option<String>,
        #[arg(long)]
        rule: Option<String>,
        #[command(flatten)]
        modes: Modes,
    },
    /// Run a query against a program or rule.
    Run {
        file: PathBuf,
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        modes: Modes,
        /// Print every heap cell after the run.
        #[arg(long)]
        dump_heap: bool,
        /// Print one line per executed instruction.
        #[arg(long)]
        trace: bool,
    },
    /// Graphviz export of a query, or of the result of a run.
    Dot {
        file: PathBuf,
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        modes: Modes,
    },
}

/// Query and program default to the first query and rule of a grammar file.
#[derive(Args)]
struct Target {
    #[arg(long)]
    query: Option<String>,
    #[arg(long, conflicts_with = "rule")]
    program: Option<String>,
    #[arg(long)]
    rule: Option<String>,
}

#[derive(Args)]
struct Modes {
    /// Basic mode: no root framing, no loop brackets.
    #[arg(long)]
    basic: bool,
    /// Omit loop_start/loop_end brackets.
    #[arg(long)]
    no_loops: bool,
}

impl Modes {
    fn options(&self) -> CompileOptions {
        let mut o = if self.basic { CompileOptions::basic() } else { CompileOptions::default() };
        if self.no_loops {
            o.loop_brackets = false;
        }
        o
    }
}

enum Unit {
    Program(Vec<Term>),
    Rule(Rule),
}

impl Unit {
    fn against(&self) -> Against<'_> {
        match self {
            Unit::Program(p) => Against::Program(p),
            Unit::Rule(r) => Against::Rule(r),
        }
    }
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn load(path: &Path) -> Result<Grammar, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    Ok(load_grammar(&text)?)
}

fn items(sig: &Signature, text: &str) -> Result<Vec<Term>, Failure> {
    Ok(parse_mrs(text, sig)?.items)
}

impl Target {
    fn resolve(&self, g: &Grammar) -> Result<(Vec<Term>, Option<Unit>), Failure> {
        let sig = &g.signature;
        let query = match (&self.query, g.queries.first()) {
            (Some(q), _) => items(sig, q)?,
            (None, Some(m)) => m.items.clone(),
            (None, None) => return Err(Failure("no query given and the file has no #queries".into())),
        };
        let unit = match (&self.program, &self.rule) {
            (Some(p), _) => Some(Unit::Program(items(sig, p)?)),
            (None, Some(r)) => Some(Unit::Rule(parse_rule(r, sig)?)),
            (None, None) => g.rules.first().cloned().map(Unit::Rule),
        };
        Ok((query, unit))
    }
}

fn execute(cli: Cli) -> Result<ExitCode, Failure> {
    match cli.command {
        Command::Validate { file } => {
            let g = load(&file)?;
            println!(
                "ok: {} types, {} features, {} rules, {} queries",
                g.signature.type_count(),
                g.signature.feature_count(),
                g.rules.len(),
                g.queries.len()
            );
        }
        Command::Lub { file } => print!("{}", load(&file)?.signature.render_lub_table()),
        Command::Compile { file, query, program, rule, modes } => {
            let g = load(&file)?;
            let sig = &g.signature;
            let opts = modes.options();
            let unit = if let Some(q) = query {
                compile_query(sig, &items(sig, &q)?, opts)
            } else if let Some(p) = program {
                compile_program(sig, &items(sig, &p)?, opts)
            } else {
                let r = rule.expect("clap requires one unit");
                compile_rule(sig, &parse_rule(&r, sig)?, opts)
            };
            print!("{}", unit.listing(sig));
        }
        Command::Run { file, target, modes, dump_heap, trace } => {
            let g = load(&file)?;
            let sig = &g.signature;
            let (query, unit) = target.resolve(&g)?;
            let unit = unit.ok_or_else(|| Failure("give --program or --rule".into()))?;
            let out = run(sig, &query, unit.against(), RunOptions { compile: modes.options(), trace })?;
            for line in out.machine.trace_lines() {
                println!("{line}");
            }
            let r = &out.report;
            match r.outcome {
                Outcome::Succeeded => {
                    println!("success");
                    for line in &r.results {
                        println!("{line}");
                    }
                }
                Outcome::Failed => println!("failure"),
            }
            println!(
                "cells: {}  instructions: {}  records: {}",
                r.stats.cells, r.stats.instructions, r.stats.records
            );
            if dump_heap {
                print!("{}", out.machine.heap_dump(0, 0));
            }
            if r.outcome == Outcome::Failed {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Dot { file, target, modes } => {
            let g = load(&file)?;
            let sig = &g.signature;
            let (query, unit) = target.resolve(&g)?;
            let opts = modes.options();
            let (machine, outcome) = match &unit {
                None => {
                    let mut m = Machine::new(sig);
                    m.load_query(&compile_query(sig, &query, opts))?;
                    (m, Outcome::Succeeded)
                }
                Some(u) => {
                    let out = run(sig, &query, u.against(), RunOptions { compile: opts, trace: false })?;
                    let o = out.report.outcome;
                    (out.machine, o)
                }
            };
            if outcome == Outcome::Failed {
                eprintln!("failure");
                return Ok(ExitCode::from(1));
            }
            print!("{}", machine.extract(&machine.result_roots())?.to_dot(sig));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
