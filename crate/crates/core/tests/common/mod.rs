#![allow(dead_code)]

use std::sync::OnceLock;

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rdm_ise::contractor::{contract_box, linearize, ContractorConfig};
use rdm_ise::equations::{build_residuals, ResidualSystem};
use rdm_ise::feeders;
use rdm_ise::interval::Interval;
use rdm_ise::lp::{solve_lp, LpProblem, LpStatus, Sense};
use rdm_ise::network::{initial_state_box, InitialBoxConfig, ThreePhaseNetwork};
use rdm_ise::oracle::{
    power_flow, power_mismatch, synthesize_trial, Loading, MeasurementPlan, NoiseConfig,
    TrialRecord,
};
use rdm_ise::rdm::{rdm_mul, rdm_sub, RdmExpr, RdmVarId};

pub fn networks() -> &'static [ThreePhaseNetwork] {
    static NETS: OnceLock<Vec<ThreePhaseNetwork>> = OnceLock::new();
    NETS.get_or_init(|| {
        feeders::NAMES
            .iter()
            .map(|n| feeders::by_name(n).unwrap())
            .collect()
    })
}

pub fn trial(net: &ThreePhaseNetwork, seed: u64) -> (TrialRecord, ResidualSystem) {
    let plan = MeasurementPlan::standard(net, 3);
    let t = synthesize_trial(net, &plan, &NoiseConfig::default(), seed).unwrap();
    let sys = build_residuals(net, &t.measurements).unwrap();
    (t, sys)
}

// interval inclusion

pub fn interval_case() -> impl Strategy<Value = (Interval, Interval, f64, f64)> {
    let iv = (-10.0f64..10.0, 0.0f64..5.0).prop_map(|(lo, w)| Interval::new(lo, lo + w).unwrap());
    (iv.clone(), iv, 0.0f64..=1.0, 0.0f64..=1.0)
}

pub fn check_interval_inclusion(
    (a, b, s, t): (Interval, Interval, f64, f64),
) -> Result<(), TestCaseError> {
    let (x, y) = (a.at(s).clamp(a.lo(), a.hi()), b.at(t).clamp(b.lo(), b.hi()));
    prop_assert!((a + b).contains(x + y));
    prop_assert!((a - b).contains(x - y));
    prop_assert!((a * b).contains(x * y), "{a} * {b} misses {}", x * y);
    prop_assert!(a.sqr().contains(x * x));
    if !b.contains_zero() {
        // the quotient goes through a rounded reciprocal
        let q = a.checked_div(&b).unwrap();
        prop_assert!(q.inflate(4.0 * f64::EPSILON * q.mag()).contains(x / y));
    }
    if a.lo() >= 0.0 {
        prop_assert!(a.sqrt().unwrap().contains(x.sqrt()));
    }
    Ok(())
}

// RDM algebra

fn affine(nvars: usize) -> impl Strategy<Value = RdmExpr> {
    (-3.0f64..3.0, prop::collection::vec(-3.0f64..3.0, nvars)).prop_map(|(c, lin)| {
        lin.iter().enumerate().fold(RdmExpr::constant(c), |e, (i, a)| {
            e + RdmExpr::var(RdmVarId(i as u32)).scale(*a)
        })
    })
}

pub fn rdm_case() -> impl Strategy<Value = (RdmExpr, RdmExpr, RdmExpr)> {
    (affine(4), affine(4), affine(4))
}

fn close_poly(a: &RdmExpr, b: &RdmExpr, tol: f64) -> bool {
    let d = rdm_sub(a, b);
    d.constant_term().abs() <= tol
        && d.linear_terms().all(|(_, c)| c.abs() <= tol)
        && d.quadratic_terms().all(|(_, _, c)| c.abs() <= tol)
}

pub fn check_rdm_algebra((a, b, c): (RdmExpr, RdmExpr, RdmExpr)) -> Result<(), TestCaseError> {
    let ab = rdm_mul(&a, &b).unwrap();
    prop_assert_eq!(rdm_sub(&ab, &ab).span().unwrap(), Interval::ZERO);
    prop_assert_eq!(rdm_sub(&a, &a).span().unwrap(), Interval::ZERO);
    let left = rdm_mul(&a, &(&b + &c)).unwrap();
    let right = rdm_mul(&a, &b).unwrap() + rdm_mul(&a, &c).unwrap();
    prop_assert!(close_poly(&left, &right, 1e-12));
    let (l, r) = (left.span().unwrap(), right.span().unwrap());
    prop_assert!((l.lo() - r.lo()).abs() <= 1e-9 && (l.hi() - r.hi()).abs() <= 1e-9);
    Ok(())
}

// feeder-based cases: (feeder index, seed)

pub fn feeder_case() -> impl Strategy<Value = (usize, u64)> {
    (0..feeders::NAMES.len(), 0u64..10_000)
}

/// A box around the trial truth and a point inside it, both drawn from `seed`.
fn box_and_alpha(x: &[f64], seed: u64) -> (Vec<Interval>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = x
        .iter()
        .map(|&v| {
            let d = 1e-2 * (1.0 + v.abs());
            Interval::new(v - rng.gen_range(0.0..d), v + rng.gen_range(0.0..d)).unwrap()
        })
        .collect();
    let alpha = x.iter().map(|_| rng.gen_range(0.0..=1.0)).collect();
    (b, alpha)
}

pub fn check_rdm_point_consistency((f, seed): (usize, u64)) -> Result<(), TestCaseError> {
    let net = &networks()[f];
    let (t, sys) = trial(net, seed);
    let x = sys.pack_point(&t.true_state, &t.true_measurements);
    let (b, alpha) = box_and_alpha(&x, seed);
    let bound = sys.bind_rdm(&b).unwrap();
    let point: Vec<f64> = b.iter().zip(&alpha).map(|(iv, a)| iv.lo() + a * iv.width()).collect();
    let direct = sys.evaluate(&point);
    for (k, (e, d)) in bound.iter().zip(&direct).enumerate() {
        let v = e.eval(|id| alpha[id.0 as usize]);
        prop_assert!((v - d).abs() <= 1e-10, "residual {k}: rdm {v} vs point {d}");
    }
    Ok(())
}

pub fn check_jacobian((f, seed): (usize, u64)) -> Result<(), TestCaseError> {
    let net = &networks()[f];
    let (t, sys) = trial(net, seed);
    let x0 = sys.pack_point(&t.true_state, &t.true_measurements);
    let (b, alpha) = box_and_alpha(&x0, seed);
    let x: Vec<f64> = b.iter().zip(&alpha).map(|(iv, a)| iv.at(*a)).collect();
    let jac = sys.point_jacobian(&x);
    let mut xp = x.clone();
    for j in 0..x.len() {
        let h = 1e-6 * x[j].abs().max(1.0);
        xp[j] = x[j] + h;
        let gp = sys.evaluate(&xp);
        xp[j] = x[j] - h;
        let gm = sys.evaluate(&xp);
        xp[j] = x[j];
        for (i, row) in jac.iter().enumerate() {
            let fd = (gp[i] - gm[i]) / (2.0 * h);
            let scale = row[j].abs().max(1.0);
            prop_assert!(
                (row[j] - fd).abs() <= 1e-5 * scale,
                "d g{i} / d x{j}: analytic {} vs difference {fd}",
                row[j]
            );
        }
    }
    // the interval Jacobian over the box encloses the point Jacobian
    let ij = sys.interval_jacobian(&b);
    for (ri, rp) in ij.iter().zip(&jac) {
        for (iv, v) in ri.iter().zip(rp) {
            prop_assert!(iv.inflate(1e-12).contains(*v));
        }
    }
    Ok(())
}

pub fn closure_case() -> impl Strategy<Value = (usize, u64, f64)> {
    (0..feeders::NAMES.len(), 0u64..10_000, 0.0f64..=1.1)
}

pub fn check_oracle_closure((f, seed, scale): (usize, u64, f64)) -> Result<(), TestCaseError> {
    let net = &networks()[f];
    let mut load = Loading::scaled(net, scale);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in load.p.iter_mut().chain(load.q.iter_mut()) {
        *v *= rng.gen_range(0.8..=1.0);
    }
    let x = power_flow(net, &load).unwrap();
    prop_assert!(power_mismatch(net, &load, &x) < 1e-10);
    // exact meters at the solution zero the residual system
    let (t, sys) = trial(net, seed);
    let exact: Vec<f64> = t.true_measurements.clone();
    let r = sys.evaluate(&sys.pack_point(&t.true_state, &exact));
    for (k, v) in r.iter().enumerate() {
        prop_assert!(v.abs() <= 1e-10, "residual {k} = {v}");
    }
    Ok(())
}

// LP

pub fn lp_case() -> impl Strategy<Value = u64> {
    0u64..1_000_000
}

/// Random packing LP `max c.x, A x <= b, 0 <= x <= u` against its dual
/// `min b.y + u.z, A^T y + z >= c, y, z >= 0`.
pub fn check_lp_duality(seed: u64) -> Result<(), TestCaseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..8);
    let m = rng.gen_range(1..8);
    let a: Vec<Vec<f64>> = (0..m)
        .map(|_| {
            (0..n)
                .map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..1.0) })
                .collect()
        })
        .collect();
    let b: Vec<f64> = (0..m).map(|_| rng.gen_range(1.0..5.0)).collect();
    let c: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let u: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..3.0)).collect();

    let mut primal = LpProblem::new(c.clone(), Sense::Maximize, u.iter().map(|&v| (0.0, v)).collect());
    for (row, &rhs) in a.iter().zip(&b) {
        primal.add_le(row.clone(), rhs);
    }
    let p = solve_lp(&primal);
    prop_assert_eq!(p.status, LpStatus::Optimal);
    prop_assert!(primal.constraints.max_violation(&p.point) <= 1e-9);

    let dual_obj: Vec<f64> = b.iter().chain(&u).copied().collect();
    let mut dual = LpProblem::new(dual_obj, Sense::Minimize, vec![(0.0, 1e3); m + n]);
    for j in 0..n {
        let mut row: Vec<f64> = a.iter().map(|r| r[j]).collect();
        row.extend((0..n).map(|k| if k == j { 1.0 } else { 0.0 }));
        dual.add_range(row, c[j], f64::INFINITY);
    }
    let d = solve_lp(&dual);
    prop_assert_eq!(d.status, LpStatus::Optimal);
    prop_assert!(
        (p.objective_value - d.objective_value).abs() <= 1e-8 * (1.0 + p.objective_value.abs()),
        "primal {} dual {}",
        p.objective_value,
        d.objective_value
    );

    // a row no point of the box can meet
    let mut bad = primal.clone();
    let total: f64 = u.iter().sum();
    bad.add_range(vec![1.0; n], total + 1.0, f64::INFINITY);
    prop_assert_eq!(solve_lp(&bad).status, LpStatus::Infeasible);
    Ok(())
}

/// Runs the contractor from the initial box and checks, before every
/// sweep, that the truth satisfies every linearized row. Returns the number
/// of rows checked.
pub fn check_linearization_soundness(
    net: &ThreePhaseNetwork,
    seed: u64,
    cfg: &ContractorConfig,
    max_sweeps: usize,
) -> Result<usize, String> {
    let (t, sys) = trial(net, seed);
    let x = sys.pack_point(&t.true_state, &t.true_measurements);
    let start = initial_state_box(net, &t.measurements, &InitialBoxConfig::default());
    let mut b = sys.pack_box(&start, &t.measurements.intervals());
    let mut checked = 0;
    for sweep in 1..=max_sweeps {
        if let Some(q) = b.iter().zip(&x).position(|(iv, v)| !iv.contains(*v)) {
            return Err(format!("seed {seed} sweep {sweep}: truth left the box at quantity {q}"));
        }
        let lin = linearize(&sys, &b, cfg).map_err(|e| e.to_string())?;
        let cols = lin.columns_at(&b, &x);
        for (k, r) in lin.rows.iter().enumerate() {
            let v = r.activity(&cols);
            if v < r.lo || v > r.hi {
                return Err(format!(
                    "seed {seed} sweep {sweep} row {k}: {v} outside [{}, {}]",
                    r.lo, r.hi
                ));
            }
        }
        checked += lin.rows.len();
        let (nb, progress) = contract_box(&sys, &b, cfg).map_err(|e| e.to_string())?;
        b = nb;
        if !progress {
            break;
        }
    }
    Ok(checked)
}
