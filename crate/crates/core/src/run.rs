//! One query against one program or rule, reported as printed terms.

use thiserror::Error;

use crate::compiler::{compile_program, compile_query, compile_rule, CompileOptions, CompiledUnit};
use crate::fs::{mrs_to_terms, FsError};
use crate::machine::{Machine, MachineError, Outcome, Stats};
use crate::signature::Signature;
use crate::term::{print_mrs, Mrs, Rule, Term};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("machine: {0}")]
    Machine(#[from] MachineError),
    #[error("result: {0}")]
    Result(#[from] FsError),
}

#[derive(Debug, Clone, Copy)]
pub enum Against<'a> {
    Program(&'a [Term]),
    Rule(&'a Rule),
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub compile: CompileOptions,
    pub trace: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunReport {
    pub outcome: Outcome,
    /// One line per alternative; empty on failure.
    pub results: Vec<String>,
    pub stats: Stats,
}

pub struct Run<'s> {
    pub machine: Machine<'s>,
    pub query: CompiledUnit,
    pub program: CompiledUnit,
    pub report: RunReport,
}

pub fn run<'s>(
    sig: &'s Signature,
    query: &[Term],
    against: Against,
    opts: RunOptions,
) -> Result<Run<'s>, RunError> {
    let q = compile_query(sig, query, opts.compile);
    let p = match against {
        Against::Program(items) => compile_program(sig, items, opts.compile),
        Against::Rule(r) => compile_rule(sig, r, opts.compile),
    };
    let mut m = Machine::new(sig);
    if opts.trace {
        m.enable_trace();
    }
    m.load_query(&q)?;
    let outcome = m.run_program(&p)?;
    let results = match outcome {
        Outcome::Failed => Vec::new(),
        Outcome::Succeeded => {
            let g = m.extract(&m.result_roots())?;
            g.alternatives()
                .iter()
                .map(|alt| Ok(print_mrs(sig, &Mrs { items: mrs_to_terms(sig, alt)? })))
                .collect::<Result<_, FsError>>()?
        }
    };
    let report = RunReport { outcome, results, stats: m.stats };
    Ok(Run { machine: m, query: q, program: p, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signature::load_signature;
    use crate::signature::tests::H;
    use crate::term::{parse_mrs, parse_rule};

    fn go(sig: &Signature, q: &str, p: &str) -> RunReport {
        let q = parse_mrs(q, sig).unwrap().items;
        let p = parse_mrs(p, sig).unwrap().items;
        let opts = RunOptions { compile: CompileOptions::default(), trace: false };
        run(sig, &q, Against::Program(&p), opts).unwrap().report
    }

    #[test]
    fn running_example() {
        let s = load_signature(H).unwrap();
        let r = go(&s, "b(b([1]d,[1]),d)", "a([3]d1,[3])");
        assert_eq!(r.outcome, Outcome::Succeeded);
        assert_eq!(r.results, ["c([1]d1,b([2]d,[2]),[1],bot)"]);
    }

    #[test]
    fn failure_has_no_results() {
        let s = load_signature(H).unwrap();
        let r = go(&s, "d2", "d1");
        assert_eq!(r.outcome, Outcome::Failed);
        assert!(r.results.is_empty());
    }

    #[test]
    fn alternatives_and_rules() {
        let s = load_signature(H).unwrap();
        let r = go(&s, "{d1 | d2 | d}", "d");
        assert_eq!(r.results, ["d1", "d2", "d"]);
        let rule = parse_rule("b(b([2]d,[2]),[4]d1), a([4],[4]) => b(b([2],[4]),d2)", &s).unwrap();
        let q = parse_mrs("a([3]d1,[3]), b(b([1]d,[1]),[3])", &s).unwrap().items;
        let opts = RunOptions { compile: CompileOptions::default(), trace: true };
        let out = run(&s, &q, Against::Rule(&rule), opts).unwrap();
        assert_eq!(out.report.results, ["b(b(d,d1),d2)"]);
        assert!(!out.machine.trace_lines().is_empty());
    }
}
