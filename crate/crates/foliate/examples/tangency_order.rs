//! The tangency order of a family of functions to a monomial foliation,
//! computed two ways, and the split into first-integral part and residual.
use foliate::io::parse_problem;
use foliate::invariant::{decompose, tangency_order_chain, tangency_order_scan};

const PROBLEMS: &[&str] = &[
    "var u divisor\nvar w w\nf u*w\n",
    "var u divisor\nvar v v\nf u*(v^2 + u)\n",
    "var u1 divisor\nvar u2 divisor\nvar w w\nlattice 1 -1\nf u1*u2 + u1^2*w^3\n",
];

fn main() {
    for text in PROBLEMS {
        let p = parse_problem(text).unwrap();
        let model = p.model().unwrap();
        let scan = tangency_order_scan(&model).unwrap();
        let chain = tangency_order_chain(&model).unwrap();
        println!("{model}");
        println!("  scan: {}  chain: {}", scan.value, chain);
        let names = model.frame.names();
        if let Ok(d) = decompose(&model) {
            let g: Vec<String> = d.g.iter().map(|s| s.display(names)).collect();
            let t: Vec<String> = d.t.iter().map(|s| s.display(names)).collect();
            println!("  delta = {:?}  first-integral part = {g:?}  residual = {t:?}", d.delta.0);
        }
        println!();
    }
}
