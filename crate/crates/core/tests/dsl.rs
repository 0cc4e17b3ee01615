use proptest::prelude::*;
use tangentflow::dsl::{self, BinOp, Expr, FieldSpec, Func, ParseError};
use tangentflow::jet::{self, Jet};
use tangentflow::kernel::tangent;
use tangentflow::sampling::uniform_points;
use tangentflow::Error;

fn number() -> impl Strategy<Value = f64> {
    prop_oneof![
        (0u32..100).prop_map(f64::from),
        (0.0..1e3f64),
        (1e-9..1e-4f64),
        (1e16..1e20f64),
    ]
}

fn leaf(arity: usize, time: bool) -> BoxedStrategy<Expr> {
    let var = (1..=arity).prop_map(Expr::Var);
    if time {
        prop_oneof![number().prop_map(Expr::Num), var, Just(Expr::Time)].boxed()
    } else {
        prop_oneof![number().prop_map(Expr::Num), var].boxed()
    }
}

fn binop() -> impl Strategy<Value = BinOp> {
    prop_oneof![
        Just(BinOp::Add),
        Just(BinOp::Sub),
        Just(BinOp::Mul),
        Just(BinOp::Div)
    ]
}

fn func() -> impl Strategy<Value = Func> {
    proptest::sample::select(Func::ALL.to_vec())
}

/// Trees of depth at most 8.
fn expr(arity: usize, time: bool) -> impl Strategy<Value = Expr> {
    leaf(arity, time).prop_recursive(8, 64, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (binop(), inner.clone(), inner.clone()).prop_map(|(op, a, b)| Expr::bin(op, a, b)),
            (inner.clone(), -4i32..=6).prop_map(|(e, k)| Expr::Pow(Box::new(e), k)),
            (func(), inner).prop_map(|(f, e)| Expr::Call(f, Box::new(e))),
        ]
    })
}

fn spec() -> impl Strategy<Value = FieldSpec> {
    (1usize..=4, any::<bool>()).prop_flat_map(|(arity, time)| {
        proptest::collection::vec(expr(arity, time), 1..=3).prop_map(move |components| FieldSpec {
            arity,
            components,
            time_dependent: time,
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn format_then_parse_is_identity(s in spec()) {
        let text = dsl::format(&s);
        let back = dsl::parse(&text, s.arity, s.time_dependent).unwrap();
        prop_assert_eq!(back, s, "{}", text);
    }

    #[test]
    fn numbers_render_as_shortest_round_trip(v in number()) {
        let text = dsl::format_number(v);
        prop_assert_eq!(text.parse::<f64>().unwrap(), v);
    }
}

/// Plain `f64` interpreter, independent of the jet machinery.
fn interpret(e: &Expr, x: &[f64], t: f64) -> f64 {
    match e {
        Expr::Num(v) => *v,
        Expr::Var(k) => x[k - 1],
        Expr::Time => t,
        Expr::Neg(a) => -interpret(a, x, t),
        Expr::Bin(op, a, b) => {
            let (a, b) = (interpret(a, x, t), interpret(b, x, t));
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => a / b,
            }
        }
        Expr::Pow(a, k) => interpret(a, x, t).powi(*k),
        Expr::Call(f, a) => {
            let v = interpret(a, x, t);
            match f {
                Func::Sin => v.sin(),
                Func::Cos => v.cos(),
                Func::Exp => v.exp(),
                Func::Ln => v.ln(),
                Func::Sqrt => v.sqrt(),
                Func::Tanh => v.tanh(),
            }
        }
    }
}

const ORACLE_SPECS: [&str; 5] = [
    "x2; -x1",
    "sin(x1)*x2 + exp(x1/3) - x2^3; tanh(x1 + x2)*cos(x2)",
    "x1^2*x2 - 3*x1*x2^2 + 0.5; sqrt(x1^2 + x2^2 + 1)",
    "ln(1 + x1^2) / (2 + cos(x2)); x1^-2 * (x2 + 3)",
    "exp(-(x1^2)) * sin(3*x2) - tanh(x1*x2/4); (x1 - x2)^3 / 7",
];

#[test]
fn compiled_maps_agree_with_the_interpreter() {
    let inputs = uniform_points(91, 1000, 2, -2.0, 2.0);
    for text in ORACLE_SPECS {
        let s = dsl::parse(text, 2, false).unwrap();
        let f = dsl::compile(&s);
        for x in &inputs {
            if x[0] == 0.0 {
                continue;
            }
            let got = f.eval_f64(x).unwrap();
            for (g, e) in got.iter().zip(&s.components) {
                let want = interpret(e, x, 0.0);
                assert!(
                    (g - want).abs() <= 1e-14 * want.abs().max(1.0),
                    "{text} at {x:?}: {g} vs {want}"
                );
            }
        }
    }
}

#[test]
fn compiled_maps_are_jet_polymorphic() {
    let inputs = uniform_points(92, 200, 4, -2.0, 2.0);
    for text in ORACLE_SPECS {
        let f = dsl::map(text, 2).unwrap();
        let tf = tangent(&f);
        for z in &inputs {
            let plain = f.eval_f64(&z[..2]).unwrap();
            let lifted = tf.eval_f64(z).unwrap();
            assert_eq!(&lifted[..2], &plain[..]);
            let jets: Vec<Jet> = (0..2)
                .map(|i| Jet::lift(&Jet::constant(z[i]), &Jet::constant(z[2 + i])))
                .collect();
            let level1 = f.eval(&jets).unwrap();
            assert_eq!(jet::primals(&level1), plain);
        }
    }
}

#[test]
fn rotation_spec() {
    let s = dsl::parse("x2; −x1", 2, false).unwrap();
    assert_eq!(s.len(), 2);
    assert_eq!(dsl::format(&s), "x2; -(x1)");
    let f = dsl::compile(&s);
    assert_eq!(f.eval_f64(&[3.0, 4.0]).unwrap(), vec![4.0, -3.0]);
}

#[test]
fn time_dependent_spec() {
    let s = dsl::parse("x1 + cos(t)", 1, true).unwrap();
    let f = dsl::compile(&s);
    assert_eq!(f.dom(), 2);
    assert_eq!(f.eval_f64(&[2.0, 0.0]).unwrap(), vec![3.0]);
}

#[test]
fn incomplete_input_reports_offset() {
    match dsl::parse("x1 + ", 1, false) {
        Err(ParseError::Syntax { offset, expected }) => {
            assert_eq!(offset, 5);
            assert!(expected.contains(&"number"));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn unknown_names_and_arity() {
    assert!(matches!(
        dsl::parse("foo(x1)", 1, false),
        Err(ParseError::UnknownIdentifier { .. })
    ));
    assert!(matches!(
        dsl::parse("x1 + t", 1, false),
        Err(ParseError::UnknownIdentifier { .. })
    ));
    assert_eq!(
        dsl::parse("x3", 2, false),
        Err(ParseError::Arity {
            declared: 2,
            used: 3
        })
    );
}

#[test]
fn compile_examples() {
    let sq = dsl::map("x1^2", 1).unwrap();
    assert_eq!(sq.eval_f64(&[3.0]).unwrap(), vec![9.0]);
    assert_eq!(tangent(&sq).eval_f64(&[3.0, 1.0]).unwrap(), vec![9.0, 6.0]);
    let f = dsl::map("x1*x2; x1+x2", 2).unwrap();
    assert_eq!(f.eval_f64(&[2.0, 5.0]).unwrap(), vec![10.0, 7.0]);
    let recip = dsl::map("1/x1", 1).unwrap();
    assert!(matches!(recip.eval_f64(&[0.0]), Err(Error::Domain { .. })));
}

#[test]
fn number_formatting() {
    assert_eq!(dsl::format_number(2.5), "2.5");
    assert_eq!(dsl::format_number(0.1), "0.1");
    assert_eq!(dsl::format_number(3.0), "3");
}
