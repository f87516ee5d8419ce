//! Reading a problem file and writing the chart tree as JSON and DOT,
//! then re-verifying the JSON from scratch.
use foliate::driver::monomialize;
use foliate::io::{check_tree, parse_problem, to_text, tree_dot, tree_json};

const PROBLEM: &str = "\
# a cusp-like generator along one divisor
var u divisor
var v v
trunc 10
samples 3
seed 11
f u*(v^2 + u)
";

fn main() {
    let p = parse_problem(PROBLEM).unwrap();
    println!("canonical form:\n{}", p.serialize());
    let tree = monomialize(&p.model().unwrap(), &p.config()).unwrap();
    let doc = tree_json("monomialize", &p, &tree);
    let text = to_text(&doc);
    println!("json: {} bytes, summary {}", text.len(), doc["summary"]);
    println!("{}", tree_dot(&tree));
    let report = check_tree(&serde_json::from_str(&text).unwrap());
    println!("check: {}", report.to_json());

    match parse_problem("var u divisor\nf u^\n") {
        Err(e) => println!("bad input rejected: {e}"),
        Ok(_) => unreachable!(),
    }
}
