//! Exact rational exponent matrices: composing monomial maps, kernels, ranks.
use foliate::exact_linear::{compose_exponents, right_kernel_basis, ExponentMatrix};

fn show(name: &str, m: &ExponentMatrix) {
    println!("{name} =");
    for r in m.to_rows() {
        let cells: Vec<String> = r.iter().map(|x| x.to_string()).collect();
        println!("  [{}]", cells.join(", "));
    }
}

fn main() {
    // u1 = x1 x2, u2 = x2 followed by x1 = y1, x2 = y1 y2
    let a = ExponentMatrix::from_ints(2, &[vec![1, 1], vec![0, 1]]);
    let b = ExponentMatrix::from_ints(2, &[vec![1, 0], vec![1, 1]]);
    let ab = compose_exponents(&a, &b).unwrap();
    show("A", &a);
    show("B", &b);
    show("AB", &ab);
    show("(AB)^-1", &ab.inverse().unwrap());

    let lattice = ExponentMatrix::from_ints(3, &[vec![1, -1, 0], vec![2, 0, -3]]);
    println!("rank = {}", lattice.rank());
    show("kernel", &right_kernel_basis(&lattice));
}
