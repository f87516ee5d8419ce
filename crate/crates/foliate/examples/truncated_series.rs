//! Truncated power series with exact rational coefficients.
use foliate::exact_linear::ratio;
use foliate::series::TruncatedSeries;

fn main() {
    let names: Vec<String> = ["x", "y"].iter().map(|s| s.to_string()).collect();
    let order = 6;
    let x = TruncatedSeries::var(2, order, 0);
    let y = TruncatedSeries::var(2, order, 1);
    let one = TruncatedSeries::one(2, order);

    let unit = one.add(&x).sub(&y.scale(&ratio(1, 2)));
    println!("u        = {}", unit.display(&names));
    println!("1/u      = {}", unit.invert_unit().unwrap().display(&names));
    println!("u^(1/2)  = {}", unit.unit_power(&ratio(1, 2)).unwrap().display(&names));

    let f = x.mul(&y).add(&y.pow(3));
    println!("f        = {}", f.display(&names));
    println!("df/dy    = {}", f.derivative(1).display(&names));
    // x -> x + y^2, y -> y
    let g = f.substitute(&[x.add(&y.pow(2)), y.clone()]).unwrap();
    println!("f(x+y^2) = {}", g.display(&names));
    println!("exact: {}", g.is_exact());
}
