//! The bounded-variable simplex used by the contractor, on a small LP and
//! on repeated min/max queries over one feasible region.
//!
//! ```
//! cargo run --example lp_solver
//! ```

use rdm_ise::lp::{solve_lp, ConstraintSet, LpProblem, Sense};

fn main() {
    // max 3x + 2y  s.t.  x + y <= 4,  x + 3y <= 6,  0 <= x <= 3,  0 <= y <= 5
    let mut p = LpProblem::new(vec![3.0, 2.0], Sense::Maximize, vec![(0.0, 3.0), (0.0, 5.0)]);
    p.add_le(vec![1.0, 1.0], 4.0);
    p.add_le(vec![1.0, 3.0], 6.0);
    let s = solve_lp(&p);
    println!("{:?}: objective {} at {:?}", s.status, s.objective_value, s.point);

    // bound every coordinate of { x in [0,1]^3 : 0.5 <= x0 + x1 <= 0.8, x1 - x2 in [-0.1, 0.1] }
    let mut cs = ConstraintSet::new(vec![(0.0, 1.0); 3]);
    cs.add_row(vec![1.0, 1.0, 0.0], 0.5, 0.8);
    cs.add_row(vec![0.0, 1.0, -1.0], -0.1, 0.1);
    cs.add_row(vec![1.0, 0.0, 1.0], 0.9, 2.0);
    let mut tab = cs.feasible_tableau(10_000).expect("feasible");
    for j in 0..3 {
        let mut obj = vec![0.0; 3];
        obj[j] = 1.0;
        let lo = tab.optimize(&obj, Sense::Minimize);
        let hi = tab.optimize(&obj, Sense::Maximize);
        println!("x{j} in [{:.3}, {:.3}]", lo.objective_value, hi.objective_value);
    }
}
