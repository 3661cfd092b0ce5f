//! Grammar files: a signature, then optional `#rules` and `#queries`
//! sections with one rule or MRS per line.

use thiserror::Error;

use crate::signature::{load_signature, Signature, SignatureError};
use crate::term::{parse_mrs, parse_rule, Mrs, Rule, TermError};

#[derive(Debug, Error)]
pub enum GrammarError {
    #[error("signature: {0}")]
    Signature(#[from] SignatureError),
    #[error("line {line}: {source}")]
    Term { line: usize, source: TermError },
    #[error("line {line}: unexpected section marker `{marker}`")]
    Marker { line: usize, marker: String },
}

#[derive(Debug, Clone)]
pub struct Grammar {
    pub signature: Signature,
    pub rules: Vec<Rule>,
    pub queries: Vec<Mrs>,
}

#[derive(PartialEq, PartialOrd)]
enum Part {
    Signature,
    Rules,
    Queries,
}

fn strip_comment(line: &str) -> &str {
    line.split('%').next().unwrap_or("").trim()
}

pub fn load_grammar(text: &str) -> Result<Grammar, GrammarError> {
    let mut part = Part::Signature;
    let mut sig_text = String::new();
    let mut rule_lines = Vec::new();
    let mut query_lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        let next = match line {
            "#rules" => Some(Part::Rules),
            "#queries" => Some(Part::Queries),
            l if l.starts_with('#') => {
                return Err(GrammarError::Marker { line: i + 1, marker: l.to_string() })
            }
            _ => None,
        };
        if let Some(p) = next {
            if p <= part {
                return Err(GrammarError::Marker { line: i + 1, marker: line.to_string() });
            }
            part = p;
            sig_text.push('\n');
            continue;
        }
        match part {
            Part::Signature => {
                sig_text.push_str(raw);
                sig_text.push('\n');
            }
            _ if line.is_empty() => {}
            Part::Rules => rule_lines.push((i + 1, line)),
            Part::Queries => query_lines.push((i + 1, line)),
        }
    }
    let signature = load_signature(&sig_text)?;
    let rules = rule_lines
        .into_iter()
        .map(|(line, l)| parse_rule(l, &signature).map_err(|source| GrammarError::Term { line, source }))
        .collect::<Result<_, _>>()?;
    let queries = query_lines
        .into_iter()
        .map(|(line, l)| parse_mrs(l, &signature).map_err(|source| GrammarError::Term { line, source }))
        .collect::<Result<_, _>>()?;
    Ok(Grammar { signature, rules, queries })
}
