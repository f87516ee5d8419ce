//! Pulling a model back along a blowup chart and normalizing it at a point
//! of the exceptional divisor.
use foliate::blowup::{classify_point, normalize_at, pullback_model, ChartTransition};
use foliate::exact_linear::{rat, ExponentMatrix};
use foliate::io::parse_problem;

fn main() {
    let p = parse_problem("var u divisor\nvar v v\nf u*(v^2 + u)\n").unwrap();
    let model = p.model().unwrap();
    println!("input: {model}\n");

    // blowup of u = v = 0, chart where v carries the exceptional divisor: u = u' v
    let a = ExponentMatrix::from_ints(2, &[vec![1, 1], vec![0, 1]]);
    let t = ChartTransition::origin(vec![0, 1], a, Some(1));
    println!("chart origin: {}\n", pullback_model(&model, &t).unwrap());

    // same chart, at the point u' = -1 on the exceptional divisor
    let at = t.at_point(vec![rat(-1), rat(0)]);
    println!("point case: {:?}", classify_point(&at).unwrap());
    let norm = normalize_at(&model, &at).unwrap();
    println!("normalized: {}", norm.model);
    let names = norm.model.frame.names();
    for (i, img) in norm.old_images.iter().enumerate() {
        println!("  old {} = {}", model.frame.name(i), img.display(names));
    }
}
