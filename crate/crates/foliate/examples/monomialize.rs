//! Full monomialization: every leaf chart ends with monomial first integrals.
use foliate::driver::{monomialize, LeafStatus};
use foliate::exact_linear::rat;
use foliate::io::parse_problem;

fn main() {
    let text = std::env::args().nth(1).map(|p| std::fs::read_to_string(p).unwrap()).unwrap_or_else(|| {
        "var u1 divisor\nvar u2 divisor\nvar w w\nf u1*w + u2^2\nf u1*u2*(1 + w)\n".to_string()
    });
    let p = parse_problem(&text).unwrap();
    let model = p.model().unwrap();
    println!("input: {model}");
    let tree = monomialize(&model, &p.config()).unwrap();
    println!("{} charts, {} leaves", tree.nodes.len(), tree.leaves().count());
    for leaf in tree.leaves() {
        let names = leaf.model.frame.names();
        match &leaf.status {
            Some(LeafStatus::Monomialized { rank }) => {
                let fis: Vec<String> = leaf.first_integrals.iter().map(|r| {
                    let parts: Vec<String> = r.iter().zip(names).filter(|(e, _)| **e != rat(0)).map(|(e, n)| format!("{n}^{e}")).collect();
                    parts.join("*")
                }).collect();
                println!("  leaf {}: rank {rank}, monomial first integrals {fis:?}", leaf.id);
            }
            Some(s) => println!("  leaf {}: {}", leaf.id, s.name()),
            None => println!("  leaf {}: open", leaf.id),
        }
    }
}
