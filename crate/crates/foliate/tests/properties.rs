mod common;

use foliate::blowup::{pullback_model, ChartTransition};
use foliate::driver::{monomialize, DriverConfig};
use foliate::exact_linear::{compose_exponents, dot, rat, right_kernel_basis, ExponentMatrix};
use foliate::foliation::{ChartFrame, LocalModel, VarClass};
use foliate::invariant::{tangency_order_chain, tangency_order_scan, InvariantError};
use foliate::io::{parse_problem, parse_series, to_text, tree_json, ProblemFile};
use foliate::series::{MultiIdx, TruncatedSeries};
use foliate::toric::BlowupStep;
use proptest::prelude::*;

fn int_matrix(rows: usize, cols: usize) -> impl Strategy<Value = ExponentMatrix> {
    prop::collection::vec(prop::collection::vec(-3i64..=3, cols), rows).prop_map(move |m| ExponentMatrix::from_ints(cols, &m))
}

fn unimodular(k: usize) -> impl Strategy<Value = ExponentMatrix> {
    prop::collection::vec((0..k, 1..k, any::<bool>()), 0..4).prop_map(move |steps| {
        let mut a = ExponentMatrix::identity(k);
        for (i, d, first) in steps {
            let j = (i + d) % k;
            let step = BlowupStep { center: (i.min(j), i.max(j)), exceptional: if first { i } else { j } };
            a = a.mul(&step.matrix(k)).unwrap();
        }
        a
    })
}

fn series(nvars: usize, order: u32) -> impl Strategy<Value = TruncatedSeries> {
    let coeff = (-4i64..=4, 1i64..=3).prop_map(|(p, q)| foliate::exact_linear::ratio(p, q));
    let term = (prop::collection::vec(0u32..=3, nvars), coeff);
    prop::collection::vec(term, 1..5).prop_map(move |ts| TruncatedSeries::from_terms(nvars, order, ts.into_iter().map(|(e, c)| (MultiIdx(e), c))))
}

fn names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn composition_matches_evaluation(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        prop_assert_eq!(common::check_composition(&mut rng), Ok(()));
    }

    #[test]
    fn composition_is_associative(a in int_matrix(2, 3), b in int_matrix(3, 2), c in int_matrix(2, 4)) {
        let left = compose_exponents(&compose_exponents(&a, &b).unwrap(), &c).unwrap();
        let right = compose_exponents(&a, &compose_exponents(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn kernel_is_complementary(b in (0usize..4, 1usize..5).prop_flat_map(|(r, c)| int_matrix(r, c))) {
        let ker = right_kernel_basis(&b);
        prop_assert_eq!(ker.rank() + b.rank(), b.cols());
        for i in 0..ker.rows() {
            for j in 0..b.rows() {
                prop_assert_eq!(dot(ker.row(i), b.row(j)), rat(0));
            }
        }
    }

    #[test]
    fn duality(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        prop_assert_eq!(common::check_duality(&mut rng), Ok(()));
    }

    #[test]
    fn pullback_is_functorial(a1 in unimodular(3), a2 in unimodular(3), g in series(4, 10), row in prop::collection::vec(-1i64..=2, 3)) {
        let frame = ChartFrame::new(names(4), vec![VarClass::U { divisor: true }, VarClass::U { divisor: true }, VarClass::U { divisor: true }, VarClass::W]).unwrap();
        let b = if row.iter().all(|&x| x == 0) { ExponentMatrix::zeros(0, 3) } else { ExponentMatrix::from_ints(3, &[row]) };
        let m = LocalModel::new(frame, &b, vec![g], 10).unwrap();
        let t1 = ChartTransition::origin(vec![0, 1, 2], a1, None);
        let t2 = ChartTransition::origin(vec![0, 1, 2], a2, None);
        let stepwise = pullback_model(&pullback_model(&m, &t1).unwrap(), &t2).unwrap();
        let at_once = pullback_model(&m, &t1.then(&t2).unwrap()).unwrap();
        prop_assert_eq!(&stepwise.gens, &at_once.gens);
        prop_assert_eq!(stepwise.b(), at_once.b());
    }

    #[test]
    fn series_round_trip(s in series(3, 12)) {
        let n = names(3);
        let text = s.display(&n);
        let back = parse_series(&text, &n, 12).unwrap();
        prop_assert_eq!(back.terms().collect::<Vec<_>>(), s.terms().collect::<Vec<_>>());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn normalization_is_sound(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let (m, t) = common::random_transition(&mut rng);
        let r = common::check_normalization(&m, &t, &mut rng, 20);
        prop_assert!(r.is_ok(), "{:?}", r.err());
    }

    #[test]
    fn scan_agrees_with_chain(seed in 0u64..2000) {
        if let Some(m) = common::random_model(seed) {
            match (tangency_order_scan(&m).map(|t| t.value), tangency_order_chain(&m)) {
                (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
                (Err(InvariantError::Trivial), Err(InvariantError::Trivial)) => {}
                (a, b) => prop_assert!(false, "scan {:?}, chain {:?}", a, b),
            }
        }
    }

    #[test]
    fn problem_round_trip(seed in 0u64..2000) {
        if let Some(m) = common::random_model(seed) {
            let p = ProblemFile::from_model(&m, &DriverConfig::default());
            let text = p.serialize();
            let q = parse_problem(&text).unwrap();
            prop_assert_eq!(q.serialize(), text);
            prop_assert_eq!(q.model().unwrap().gens, m.gens);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn monomialize_is_deterministic(seed in 0u64..300) {
        if let Some(m) = common::random_model(seed) {
            let p = ProblemFile::from_model(&m, &DriverConfig::default());
            let a = monomialize(&m, &p.config()).unwrap();
            let b = monomialize(&m, &p.config()).unwrap();
            prop_assert_eq!(to_text(&tree_json("monomialize", &p, &a)), to_text(&tree_json("monomialize", &p, &b)));
        }
    }
}
