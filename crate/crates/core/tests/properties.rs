use compint_core::closedforms::{exact_value, ClosedFormCase};
use compint_core::expr::{BinOp, Func};
use compint_core::flow::{compose_flows, compositional_integral, riemann_composition};
use compint_core::harness::{convergence_table, Reference, ReferenceSource};
use compint_core::oracle::{solve_ivp, OracleConfig};
use compint_core::{Expr, FlowSpec, Partition, Refinement, TagRule, TimeOnly};
use proptest::prelude::*;

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0u32..1000).prop_map(|v| Expr::Num(v as f64 / 8.0)),
        Just(Expr::S),
        Just(Expr::T),
    ]
}

fn ast() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(5, 48, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (
                prop_oneof![
                    Just(BinOp::Add),
                    Just(BinOp::Sub),
                    Just(BinOp::Mul),
                    Just(BinOp::Div),
                    Just(BinOp::Pow)
                ],
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, l, r)| Expr::Binary(op, Box::new(l), Box::new(r))),
            (
                prop_oneof![
                    Just(Func::Exp),
                    Just(Func::Log),
                    Just(Func::Sin),
                    Just(Func::Cos),
                    Just(Func::Sqrt),
                    Just(Func::Abs)
                ],
                inner.clone()
            )
                .prop_map(|(f, e)| Expr::Call(f, vec![e])),
            (inner.clone(), inner).prop_map(|(l, r)| Expr::Call(Func::Pow, vec![l, r])),
        ]
    })
}

fn rule() -> impl Strategy<Value = TagRule> {
    prop_oneof![
        Just(TagRule::Left),
        Just(TagRule::Right),
        Just(TagRule::Midpoint),
        any::<u64>().prop_map(TagRule::Random),
    ]
}

/// Sorted interior points of `(a, b)` turned into a partition.
fn partition_of(a: f64, b: f64, cuts: &[f64], rule: TagRule) -> Partition {
    if a == b {
        return Partition::empty(a, rule);
    }
    let mut nodes = vec![a];
    let mut inner: Vec<f64> = cuts
        .iter()
        .map(|u| a + u * (b - a))
        .filter(|&x| a < x && x < b)
        .collect();
    inner.sort_by(f64::total_cmp);
    nodes.extend(inner);
    nodes.push(b);
    nodes.dedup();
    Partition::from_nodes(nodes, rule).unwrap()
}

fn exp_neg_st() -> Expr {
    Expr::parse("exp(-s*t)").unwrap()
}

proptest! {
    #[test]
    fn printing_round_trips(e in ast()) {
        let printed = e.to_string();
        let once = Expr::parse(&printed).unwrap();
        let twice = Expr::parse(&once.to_string()).unwrap();
        prop_assert_eq!(&once, &twice);
        // everything the generator builds is canonical already
        prop_assert_eq!(once, e);
    }

    #[test]
    fn evaluation_is_deterministic(e in ast(), s in -2.0f64..2.0, t in -2.0f64..2.0) {
        let first = e.eval(s, t);
        let second = e.eval(s, t);
        // Debug output compares NaN payloads inside errors as text
        prop_assert_eq!(format!("{first:?}"), format!("{second:?}"));
    }

    #[test]
    fn state_free_expressions_ignore_t(e in ast(), s in -2.0f64..2.0, t1 in -5.0f64..5.0, t2 in -5.0f64..5.0) {
        prop_assume!(!e.mentions_state());
        prop_assert_eq!(format!("{:?}", e.eval(s, t1)), format!("{:?}", e.eval(s, t2)));
    }

    #[test]
    fn concat_is_associative(
        xs in prop::collection::vec(0.0f64..1.0, 3),
        c1 in prop::collection::vec(0.0f64..1.0, 0..6),
        c2 in prop::collection::vec(0.0f64..1.0, 0..6),
        c3 in prop::collection::vec(0.0f64..1.0, 0..6),
        r in rule(),
    ) {
        let mut ends = xs.clone();
        ends.sort_by(f64::total_cmp);
        let (a, b, c, d) = (0.0, ends[0], ends[1], ends[2] + 1.0);
        let p = partition_of(a, b, &c1, r);
        let q = partition_of(b, c, &c2, r);
        let s = partition_of(c, d, &c3, r);
        let left = p.concat(&q).unwrap().concat(&s).unwrap();
        let right = p.concat(&q.concat(&s).unwrap()).unwrap();
        prop_assert_eq!(left.nodes(), right.nodes());
        prop_assert_eq!(left.tags(), right.tags());
    }

    #[test]
    fn refinement_doubles_and_halves(a in -5.0f64..5.0, w in 0.01f64..5.0, n in 1usize..200, r in rule()) {
        let p = Partition::uniform(a, a + w, n, r).unwrap();
        let q = p.refine_dyadic();
        prop_assert_eq!(q.len(), 2 * p.len());
        prop_assert_eq!(q.start(), p.start());
        prop_assert_eq!(q.end(), p.end());
        prop_assert!((q.mesh() - 0.5 * p.mesh()).abs() <= 8.0 * f64::EPSILON * (a.abs() + w));
        for ((lo, hi, tag), _) in q.ascending_cells().zip(0..) {
            prop_assert!(lo <= tag && tag <= hi);
        }
    }

    #[test]
    fn identity_law(t in -10.0f64..10.0, a in -3.0f64..3.0, pick in 0usize..4) {
        let family = ["exp(-s*t)", "t", "sin(s) - t^3", "2*s"];
        let spec = FlowSpec::new(Expr::parse(family[pick]).unwrap(), a, a).unwrap();
        let r = riemann_composition(&spec, t, &Partition::empty(a, TagRule::Left), false).unwrap();
        prop_assert_eq!(r.value.to_bits(), t.to_bits());
    }

    #[test]
    fn concatenation_law_is_exact(
        split in 0.0f64..=1.0,
        c1 in prop::collection::vec(0.0f64..1.0, 0..40),
        c2 in prop::collection::vec(0.0f64..1.0, 0..40),
        r1 in rule(),
        r2 in rule(),
        t in 0.01f64..3.0,
        pick in 0usize..2,
    ) {
        let f = Expr::parse(["exp(-s*t)", "t"][pick]).unwrap();
        let spec = FlowSpec::new(f, 0.0, 1.0).unwrap();
        let p = partition_of(0.0, split, &c1, r1);
        let q = partition_of(split, 1.0, &c2, r2);
        let (chained, direct) = compose_flows(&spec, t, 0.0, split, 1.0, &p, &q).unwrap();
        prop_assert_eq!(chained.to_bits(), direct.to_bits());
    }

    #[test]
    fn constant_in_t_reduces_to_riemann_sum(
        cuts in prop::collection::vec(0.0f64..1.0, 1..300),
        r in rule(),
        t in -4.0f64..4.0,
    ) {
        let spec = FlowSpec::new(Expr::parse("cos(3*s) + s^2").unwrap(), 0.0, 1.0).unwrap();
        let p = partition_of(0.0, 1.0, &cuts, r);
        let value = riemann_composition(&spec, t, &p, false).unwrap().value;
        let sum: f64 = p
            .ascending_cells()
            .map(|(lo, hi, tag)| (libm::cos(3.0 * tag) + tag * tag) * (hi - lo))
            .sum();
        let bound = 8.0 * p.len() as f64 * f64::EPSILON * (t.abs() + sum.abs());
        prop_assert!((value - (t + sum)).abs() <= bound);
    }

    #[test]
    fn positive_flow_is_increasing(t in 0.01f64..5.0, n in 1usize..500, r in rule()) {
        let spec = FlowSpec::new(exp_neg_st(), 0.0, 1.0).unwrap();
        let p = Partition::uniform(0.0, 1.0, n, r).unwrap();
        let trace = riemann_composition(&spec, t, &p, true).unwrap().trace.unwrap();
        prop_assert!(trace.windows(2).all(|w| w[1] > w[0]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn oracle_semigroup(xs in prop::collection::vec(0.0f64..1.0, 3), t in 0.1f64..3.0) {
        let mut ends = xs.clone();
        ends.sort_by(f64::total_cmp);
        let (a, b, c) = (ends[0], ends[1], ends[2]);
        let cfg = OracleConfig::default();
        let f = exp_neg_st();
        let direct = solve_ivp(&f, a, c, t, &cfg).unwrap();
        let chained = solve_ivp(&f, b, c, solve_ivp(&f, a, b, t, &cfg).unwrap(), &cfg).unwrap();
        prop_assert!((direct - chained).abs() <= 100.0 * cfg.rel_tol * direct.abs());
    }
}

#[test]
fn tag_rules_agree_in_the_limit() {
    let spec = FlowSpec::new(exp_neg_st(), 0.0, 1.0).unwrap();
    let reference = solve_ivp(&spec.field, 0.0, 1.0, 1.0, &OracleConfig::default()).unwrap();
    let mut previous = [f64::INFINITY; 4];
    for n in [1 << 6, 1 << 10, 1 << 14, 1 << 18] {
        for (i, rule) in [
            TagRule::Left,
            TagRule::Right,
            TagRule::Midpoint,
            TagRule::Random(99),
        ]
        .into_iter()
        .enumerate()
        {
            let p = Partition::uniform(0.0, 1.0, n, rule).unwrap();
            let err = (riemann_composition(&spec, 1.0, &p, false).unwrap().value - reference).abs();
            assert!(err < previous[i], "{rule:?} n = {n}");
            assert!(err <= 2.0 / n as f64, "{rule:?} n = {n}: {err}");
            previous[i] = err;
        }
    }
}

#[test]
fn oracle_matches_closed_forms() {
    let cfg = OracleConfig::default();
    let t_flow = Expr::parse("t").unwrap();
    let volterra = Expr::parse("2*s*t").unwrap();
    for (b, t) in [(1.0, 1.0), (0.5, 2.0), (1.0, 0.3)] {
        let e = t * f64::exp(b);
        assert!((solve_ivp(&t_flow, 0.0, b, t, &cfg).unwrap() - e).abs() <= 1e-9 * e);
        let v = t * f64::exp(b * b);
        assert!((solve_ivp(&volterra, 0.0, b, t, &cfg).unwrap() - v).abs() <= 1e-9 * v);
    }
}

#[test]
fn oracle_tolerance_halving_is_consistent() {
    let f = exp_neg_st();
    for (rel, abs) in [(1e-6, 1e-8), (1e-9, 1e-11), (1e-12, 1e-14)] {
        let coarse = solve_ivp(
            &f,
            0.0,
            1.0,
            1.0,
            &OracleConfig::default().with_tolerances(rel, abs),
        )
        .unwrap();
        let fine = solve_ivp(
            &f,
            0.0,
            1.0,
            1.0,
            &OracleConfig::default().with_tolerances(rel / 2.0, abs / 2.0),
        )
        .unwrap();
        assert!((coarse - fine).abs() < rel, "rel = {rel}");
    }
}

#[test]
fn converged_integrals_match_closed_forms() {
    let tol = 1e-6;
    let refinement = Refinement::new(tol);
    let cases: [(ClosedFormCase, f64, f64, f64); 4] = [
        (ClosedFormCase::ExpFlow, 0.0, 1.0, 1.5),
        (
            ClosedFormCase::Volterra(TimeOnly::new(Expr::parse("2*s").unwrap()).unwrap()),
            0.0,
            1.0,
            1.0,
        ),
        (
            ClosedFormCase::ConstantInT(TimeOnly::new(Expr::parse("cos(s)").unwrap()).unwrap()),
            0.0,
            2.0,
            -1.0,
        ),
        (ClosedFormCase::ExpPowerK(3), 0.0, 1.0, 1.0),
    ];
    for (case, a, b, t) in cases {
        let want = exact_value(&case, a, b, t).unwrap().value;
        let spec = FlowSpec::new(&case, a, b).unwrap();
        let got = compositional_integral(&spec, t, &refinement).unwrap().value;
        assert!(
            (got - want).abs() <= 10.0 * tol * want.abs().max(1.0),
            "{}: {got} vs {want}",
            case.id()
        );
    }
}

#[test]
fn convergence_errors_match_riemann_sum_errors() {
    // for an integrand without t the table's error is the Riemann-sum error
    let spec = FlowSpec::new(Expr::parse("s*s").unwrap(), 0.0, 1.0).unwrap();
    let exact = 1.0 / 3.0;
    let t = 0.75;
    let ns = [8usize, 32, 128, 512, 2048];
    let report = convergence_table(
        &spec,
        t,
        TagRule::Left,
        &ns,
        Reference {
            value: t + exact,
            source: ReferenceSource::Given,
        },
    )
    .unwrap();
    for row in &report.rows {
        let p = Partition::uniform(0.0, 1.0, row.n, TagRule::Left).unwrap();
        let sum: f64 = p
            .ascending_cells()
            .map(|(lo, hi, s)| s * s * (hi - lo))
            .sum();
        let sum_error = (sum - exact).abs();
        let bound = 8.0 * row.n as f64 * f64::EPSILON * (t + sum);
        assert!((row.abs_error - sum_error).abs() <= bound, "n = {}", row.n);
    }
    let fit = report.fit.unwrap();
    assert!((fit.order - 1.0).abs() < 0.05);
}
