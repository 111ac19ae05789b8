//! Three algebraically equal forms of `x - x^2` on `[1, 2]`, evaluated with
//! classic interval arithmetic and with RDM expressions.
//!
//! ```
//! cargo run --example rdm_algebra
//! ```

use rdm_ise::interval::Interval;
use rdm_ise::rdm::{rdm_mul, RdmExpr, RdmRegistry, RdmVarId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let xi = Interval::new(1.0, 2.0)?;
    let one = Interval::point(1.0);

    // classic: every occurrence of x varies independently
    let classic = [
        xi - xi.sqr(),
        xi * (one - xi),
        Interval::point(-1.0) + xi + (one - xi) * (one + xi),
    ];

    let mut reg = RdmRegistry::new();
    let x = reg.lift(xi, RdmVarId(0))?;
    let one = RdmExpr::constant(1.0);
    let b = rdm_mul(&x, &x)?;
    let c = &one - &x;
    let d = &one + &x;
    let rdm = [
        &x - &b,
        rdm_mul(&x, &c)?,
        RdmExpr::constant(-1.0) + x.clone() + rdm_mul(&c, &d)?,
    ];

    println!("{:<22} {:>12} {:>12}", "form", "classic", "rdm");
    let forms = ["x - b", "x * c", "-1 + x + c * d"];
    for ((f, cl), r) in forms.iter().zip(&classic).zip(&rdm) {
        println!("{f:<22} {:>12} {:>12}", cl.to_string(), r.span()?.to_string());
    }
    println!("rdm form of x - x^2: {}", rdm[0]);
    Ok(())
}
