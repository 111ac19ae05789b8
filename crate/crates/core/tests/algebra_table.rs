use rdm_ise::interval::Interval;
use rdm_ise::rdm::{rdm_mul, RdmExpr, RdmRegistry, RdmVarId};

fn iv(lo: f64, hi: f64) -> Interval {
    Interval::new(lo, hi).unwrap()
}

/// `x - x^2` on `[1, 2]` as `x - b`, `x c` and `-1 + x + c d` with
/// `b = x^2`, `c = 1 - x`, `d = 1 + x`.
#[test]
fn three_forms_of_x_minus_x_squared() {
    let x = iv(1.0, 2.0);
    let one = Interval::point(1.0);
    assert_eq!(x - x.sqr(), iv(-3.0, 1.0));
    assert_eq!(x * (one - x), iv(-2.0, 0.0));
    assert_eq!(Interval::point(-1.0) + x + (one - x) * (one + x), iv(-3.0, 1.0));

    let mut reg = RdmRegistry::new();
    let x = reg.lift(x, RdmVarId(0)).unwrap();
    let one = RdmExpr::constant(1.0);
    let (c, d) = (&one - &x, &one + &x);
    let f1 = &x - &rdm_mul(&x, &x).unwrap();
    let f2 = rdm_mul(&x, &c).unwrap();
    let f3 = RdmExpr::constant(-1.0) + x.clone() + rdm_mul(&c, &d).unwrap();
    for f in [f1, f2, f3] {
        assert_eq!(f.span().unwrap(), iv(-2.0, 0.0));
    }
}
