use tfsam::compiler::{compile_program, compile_query, compile_rule, normalize_listing, CompileOptions};
use tfsam::signature::{load_signature, Signature};
use tfsam::term::{parse_mrs, parse_rule};

const H: &str = include_str!("H.sig");

fn golden(name: &str) -> Vec<String> {
    let path = format!("{}/tests/golden/{name}.lst", env!("CARGO_MANIFEST_DIR"));
    normalize_listing(&std::fs::read_to_string(path).unwrap())
}

fn sig() -> Signature {
    load_signature(H).unwrap()
}

fn no_brackets() -> CompileOptions {
    CompileOptions { loop_brackets: false, root_framing: true }
}

fn unframed() -> CompileOptions {
    CompileOptions { loop_brackets: true, root_framing: false }
}

fn query(s: &Signature, text: &str, opts: CompileOptions) -> Vec<String> {
    let items = parse_mrs(text, s).unwrap().items;
    normalize_listing(&compile_query(s, &items, opts).listing(s))
}

fn program(s: &Signature, text: &str, opts: CompileOptions) -> Vec<String> {
    let items = parse_mrs(text, s).unwrap().items;
    normalize_listing(&compile_program(s, &items, opts).listing(s))
}

#[test]
fn basic_query() {
    let s = sig();
    assert_eq!(query(&s, "b(b([1]d,[1]),d)", CompileOptions::basic()), golden("query_b"));
}

#[test]
fn basic_program() {
    let s = sig();
    assert_eq!(program(&s, "a([3]d1,[3])", CompileOptions::basic()), golden("program_a"));
}

#[test]
fn multi_rooted_query() {
    let s = sig();
    assert_eq!(
        query(&s, "a([3]d1,[3]), b(b([1]d,[1]),[3])", no_brackets()),
        golden("query_sigma")
    );
}

#[test]
fn rule() {
    let s = sig();
    let r = parse_rule("b(b([2]d,[2]),[4]d1), a([4],[4]) => b(b([2],[4]),d2)", &s).unwrap();
    let got = normalize_listing(&compile_rule(&s, &r, no_brackets()).listing(&s));
    assert_eq!(got, golden("rule_rho"));
}

#[test]
fn disjunctive_query() {
    let s = sig();
    assert_eq!(
        query(&s, "a({b(bot,d) | a(bot,d1)},d1)", CompileOptions::basic()),
        golden("query_disj")
    );
}

#[test]
fn bracketed_program() {
    let s = sig();
    assert_eq!(program(&s, "a(e([1]d2,[1]),d1)", unframed()), golden("program_e"));
}

#[test]
fn disjunctive_program() {
    let s = sig();
    assert_eq!(
        program(&s, "a({b(bot,d) | a(bot,d1)},d1)", unframed()),
        golden("program_disj")
    );
}

#[test]
fn framed_program_starts_with_reset() {
    let s = sig();
    let got = program(&s, "d1, [1]d, [1]", no_brackets());
    assert_eq!(
        got,
        [
            "reset_curr_root",
            "advance_p X1",
            "get_structure d1/0 X1",
            "advance_p X2",
            "get_structure d/0 X2",
            "advance_p X2"
        ]
    );
}
