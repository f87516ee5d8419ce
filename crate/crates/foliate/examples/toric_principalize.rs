//! Principalizing a monomial ideal by combinatorial blowups.
use foliate::toric::{principalize_monomial, MonIdeal};

fn main() {
    // (x^2, x*y, y^3) over the first three frame variables
    let ideal = MonIdeal::new(vec![0, 1, 2], vec![vec![2, 0, 0], vec![1, 1, 0], vec![0, 3, 1]]);
    let tree = principalize_monomial(&ideal).unwrap();
    println!("{} blowups, {} charts", tree.blowups, tree.leaves.len());
    for (i, leaf) in tree.leaves.iter().enumerate() {
        let centers: Vec<String> = leaf.steps.iter().map(|s| format!("({},{})->{}", s.center.0, s.center.1, s.exceptional)).collect();
        println!("chart {i}: steps {}  generator {:?}  pulled {:?}", centers.join(" "), leaf.generator, leaf.pulled);
    }
}
