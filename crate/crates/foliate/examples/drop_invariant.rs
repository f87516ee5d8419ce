//! One invariant-dropping round: prepared form, principalization of the
//! coefficient ideal, and the tangency order in every resulting chart.
use foliate::driver::{drop_invariant, prepare, DriverConfig};
use foliate::io::parse_problem;

fn main() {
    let p = parse_problem("var u divisor\nvar v v\nf u*(v^2 + u)\n").unwrap();
    let model = p.model().unwrap();
    let cfg = DriverConfig::default();

    let prepared = prepare(&model, &cfg).unwrap();
    for n in &prepared.nodes {
        if let Some(pf) = &n.prepared {
            println!("prepared at node {}: nu = {}  beta = {:?}  eps = {}", n.id, pf.nu, pf.beta.as_ref().map(|b| &b.0), pf.eps);
        }
    }

    let tree = drop_invariant(&model, &cfg).unwrap();
    for (before, after) in tree.drop_boundaries() {
        println!("drop: {before} -> {}", after.map(|a| a.to_string()).unwrap_or("-".into()));
    }
    for leaf in tree.leaves() {
        let nus: Vec<String> = leaf.samples.iter().map(|s| format!("{}={}", s.label, s.nu.map(|n| n.to_string()).unwrap_or("?".into()))).collect();
        println!("{}: {}  samples [{}]", leaf.label, leaf.model, nus.join(", "));
    }
}
