use holoweight::field::{sexpr, ExprPool, FieldExpr, Node, Scalar};
use holoweight::Complex64;
use proptest::prelude::*;

/// A small straight-line program over `x₁, x₂` that stays finite on
/// `[-1, 1]²`: every reciprocal and root acts on `2 + t²`.
#[derive(Debug, Clone)]
enum Op {
    Const(f64),
    Add(usize, usize),
    Mul(usize, usize),
    Scale(f64, usize),
    Pow(usize, u32),
    Exp(usize),
    RecipShifted(usize),
    SqrtShifted(usize),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        (-2.0..2.0f64).prop_map(Op::Const),
        (any::<usize>(), any::<usize>()).prop_map(|(a, b)| Op::Add(a, b)),
        (any::<usize>(), any::<usize>()).prop_map(|(a, b)| Op::Mul(a, b)),
        (-2.0..2.0f64, any::<usize>()).prop_map(|(c, a)| Op::Scale(c, a)),
        (any::<usize>(), 0u32..4).prop_map(|(a, n)| Op::Pow(a, n)),
        any::<usize>().prop_map(Op::Exp),
        any::<usize>().prop_map(Op::RecipShifted),
        any::<usize>().prop_map(Op::SqrtShifted),
    ]
}

fn program() -> impl Strategy<Value = Vec<Op>> {
    prop::collection::vec(op(), 1..10)
}

fn point() -> impl Strategy<Value = [f64; 2]> {
    [-0.9..0.9f64, -0.9..0.9f64]
}

/// Builds the program with the smart constructors, or verbatim with `raw`.
fn build(pool: &mut ExprPool, ops: &[Op], raw: bool) -> FieldExpr {
    let mut vals = vec![pool.coord(1), pool.coord(2)];
    let c = |x: f64| Complex64::new(x, 0.0);
    for o in ops {
        let pick = |i: usize| vals[i % vals.len()];
        let shifted = |pool: &mut ExprPool, a: FieldExpr| {
            let two = pool.real(2.0);
            if raw {
                let sq = pool.raw(Node::Power(a, 2));
                pool.raw(Node::Sum(vec![two, sq].into()))
            } else {
                let sq = pool.power(a, 2);
                pool.add(two, sq)
            }
        };
        let e = match *o {
            Op::Const(x) => pool.real(x),
            Op::Add(a, b) if raw => pool.raw(Node::Sum(vec![pick(a), pick(b)].into())),
            Op::Add(a, b) => pool.add(pick(a), pick(b)),
            Op::Mul(a, b) if raw => pool.raw(Node::Product(vec![pick(a), pick(b)].into())),
            Op::Mul(a, b) => pool.mul(pick(a), pick(b)),
            Op::Scale(k, a) if raw => pool.raw(Node::Scale(Scalar::new(c(k)), pick(a))),
            Op::Scale(k, a) => pool.scale(c(k), pick(a)),
            Op::Pow(a, n) if raw => pool.raw(Node::Power(pick(a), n)),
            Op::Pow(a, n) => pool.power(pick(a), n),
            Op::Exp(a) if raw => pool.raw(Node::Exp(pick(a))),
            Op::Exp(a) => pool.exp(pick(a)),
            Op::RecipShifted(a) => {
                let s = shifted(pool, pick(a));
                if raw {
                    pool.raw(Node::Recip(s))
                } else {
                    pool.recip(s)
                }
            }
            Op::SqrtShifted(a) => {
                let s = shifted(pool, pick(a));
                if raw {
                    pool.raw(Node::Sqrt(s))
                } else {
                    pool.sqrt(s)
                }
            }
        };
        vals.push(e);
    }
    *vals.last().expect("non-empty")
}

fn close(a: Complex64, b: Complex64, rel: f64) -> bool {
    (a - b).norm() <= rel * a.norm().max(b.norm()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn simplify_preserves_values(ops in program(), p in point()) {
        let mut pool = ExprPool::new();
        let raw = build(&mut pool, &ops, true);
        let simple = pool.simplify(raw);
        let a = pool.eval(raw, &p).unwrap();
        let b = pool.eval(simple, &p).unwrap();
        prop_assert!(close(a, b, 1e-12), "{a} vs {b}");
        prop_assert!(pool.shared_size(simple) <= pool.shared_size(raw) + 1);
    }

    #[test]
    fn smart_and_raw_builds_agree(ops in program(), p in point()) {
        let mut pool = ExprPool::new();
        let raw = build(&mut pool, &ops, true);
        let smart = build(&mut pool, &ops, false);
        let a = pool.eval(raw, &p).unwrap();
        let b = pool.eval(smart, &p).unwrap();
        prop_assert!(close(a, b, 1e-12), "{a} vs {b}");
    }

    #[test]
    fn partials_match_central_differences(ops in program(), p in point(), axis in 1u8..=2) {
        let mut pool = ExprPool::new();
        let e = build(&mut pool, &ops, false);
        let d = pool.partial(e, axis);
        let exact = pool.eval(d, &p).unwrap();
        let f = |h: f64| {
            let mut q = p;
            q[axis as usize - 1] += h;
            pool.eval(e, &q).unwrap()
        };
        // fourth-order central difference
        let h = 1e-3;
        let fd = (f(-2.0 * h) - f(-h) * 8.0 + f(h) * 8.0 - f(2.0 * h)) / (12.0 * h);
        let scale = f(0.0).norm().max(1.0);
        prop_assert!((exact - fd).norm() <= 1e-5 * scale.max(exact.norm()), "{exact} vs {fd}");
    }

    #[test]
    fn mixed_partials_commute(ops in program(), p in point()) {
        let mut pool = ExprPool::new();
        let e = build(&mut pool, &ops, false);
        let dx = pool.partial(e, 1);
        let dxy = pool.partial(dx, 2);
        let dy = pool.partial(e, 2);
        let dyx = pool.partial(dy, 1);
        let a = pool.eval(dxy, &p).unwrap();
        let b = pool.eval(dyx, &p).unwrap();
        prop_assert!(close(a, b, 1e-10), "{a} vs {b}");
    }

    #[test]
    fn sexpr_round_trip_into_a_fresh_pool(ops in program(), p in point()) {
        let mut pool = ExprPool::new();
        let e = build(&mut pool, &ops, false);
        let text = sexpr::dump(&pool, e);
        let mut fresh = ExprPool::new();
        let back = sexpr::parse(&text, &mut fresh).unwrap();
        prop_assert_eq!(sexpr::dump(&fresh, back), text);
        let a = pool.eval(e, &p).unwrap();
        let b = fresh.eval(back, &p).unwrap();
        prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
        prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
    }

    #[test]
    fn shared_size_never_exceeds_tree_size(ops in program()) {
        let mut pool = ExprPool::new();
        let e = build(&mut pool, &ops, false);
        prop_assert!(pool.shared_size(e) as f64 <= pool.tree_size(e));
    }
}

#[test]
fn nested_products_share_nodes() {
    let mut pool = ExprPool::new();
    let mut e = pool.coord(1);
    let one = pool.one();
    let two = pool.real(2.0);
    for _ in 0..30 {
        let s = pool.add(e, one);
        let t = pool.add(e, two);
        e = pool.mul(s, t);
    }
    assert!(pool.shared_size(e) < 100);
    assert!(pool.tree_size(e) > 1e9);
}

#[test]
fn malformed_sexpr_is_rejected() {
    let mut pool = ExprPool::new();
    for text in [
        "",
        "(root %0)",
        "(let %0 (coord 1))\n(root %1)",
        "(let %0 (bogus))",
    ] {
        assert!(sexpr::parse(text, &mut pool).is_err(), "{text:?}");
    }
}
