//! Acceptance checks, one line per criterion. Runs as a plain binary so the
//! verdicts are always printed; exits non-zero if any criterion fails.

mod common;

use std::fmt::Debug;
use std::process::Command;
use std::time::{Duration, Instant};

use proptest::strategy::Strategy;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

use common::*;
use rdm_ise::contractor::{ContractionStatus, ContractorConfig};
use rdm_ise::equations::build_residuals;
use rdm_ise::error::EstimationError;
use rdm_ise::feeders;
use rdm_ise::interval::Interval;
use rdm_ise::network::{measurements_to_string, Measurement, MeasurementKind};
use rdm_ise::oracle::{
    monte_carlo, run_method, synthesize_trial, MeasurementPlan, Method, MethodSummary,
    MonteCarloConfig, NoiseConfig,
};
use rdm_ise::rdm::{rdm_mul, RdmExpr, RdmRegistry, RdmVarId};
use rdm_ise::IcpConfig;

const TRIALS: usize = 100;

struct Verdict {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: impl Into<String>) -> Verdict {
    Verdict { ok, detail: detail.into() }
}

fn iv(lo: f64, hi: f64) -> Interval {
    Interval::new(lo, hi).unwrap()
}

fn algebra_table() -> Verdict {
    let t0 = Instant::now();
    let x = iv(1.0, 2.0);
    let one = Interval::point(1.0);
    let classic = [
        x - x.sqr(),
        x * (one - x),
        Interval::point(-1.0) + x + (one - x) * (one + x),
    ];
    let mut reg = RdmRegistry::new();
    let xr = reg.lift(x, RdmVarId(0)).unwrap();
    let c1 = RdmExpr::constant(1.0);
    let (c, d) = (&c1 - &xr, &c1 + &xr);
    let rdm = [
        (&xr - &rdm_mul(&xr, &xr).unwrap()).span().unwrap(),
        rdm_mul(&xr, &c).unwrap().span().unwrap(),
        (RdmExpr::constant(-1.0) + xr.clone() + rdm_mul(&c, &d).unwrap()).span().unwrap(),
    ];
    let elapsed = t0.elapsed();
    let ok = classic == [iv(-3.0, 1.0), iv(-2.0, 0.0), iv(-3.0, 1.0)]
        && rdm == [iv(-2.0, 0.0); 3]
        && elapsed < Duration::from_secs(1);
    verdict(ok, format!("classic {classic:?}, rdm {rdm:?}, {elapsed:.1?}"))
}

struct FeederRun {
    name: &'static str,
    rdm: MethodSummary,
    icp: MethodSummary,
    elapsed: Duration,
}

fn run_feeders() -> Vec<FeederRun> {
    feeders::NAMES
        .iter()
        .map(|&name| {
            let net = feeders::by_name(name).unwrap();
            let cfg = MonteCarloConfig { trials: TRIALS, ..MonteCarloConfig::default() };
            let t0 = Instant::now();
            let mut s = monte_carlo(&net, &[Method::Rdm, Method::Icp], &cfg).unwrap();
            let elapsed = t0.elapsed();
            let icp = s.pop().unwrap();
            let rdm = s.pop().unwrap();
            eprintln!("  {name}: {TRIALS} trials in {elapsed:.1?}");
            FeederRun { name, rdm, icp, elapsed }
        })
        .collect()
}

fn credibility(runs: &[FeederRun]) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    let mut total = Duration::ZERO;
    for r in runs.iter().filter(|r| r.name != "two-bus") {
        ok &= r.rdm.credibility == 1.0 && r.icp.credibility == 1.0;
        ok &= r.rdm.trials.len() >= 100 && r.icp.trials.len() >= 100;
        total += r.elapsed;
        parts.push(format!("{}: C(rdm) {} C(icp) {}", r.name, r.rdm.credibility, r.icp.credibility));
    }
    parts.push(format!("{TRIALS} trials each, {total:.0?}"));
    verdict(ok, parts.join("; "))
}

fn dominance(runs: &[FeederRun]) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for r in runs {
        let pairs = r.rdm.trials.iter().zip(&r.icp.trials);
        let wid_ok = pairs.clone().filter(|(a, b)| a.wid_avr <= b.wid_avr).count();
        let ratio_ok = pairs.clone().filter(|(a, b)| a.ratio <= b.ratio).count();
        let n = r.rdm.trials.len();
        ok &= wid_ok == n && ratio_ok == n;
        ok &= r.rdm.mean_wid_avr <= r.icp.mean_wid_avr && r.rdm.mean_ratio <= r.icp.mean_ratio;
        if r.name == "ieee33" {
            ok &= r.rdm.mean_wid_avr < r.icp.mean_wid_avr || r.rdm.mean_ratio < r.icp.mean_ratio;
        }
        parts.push(format!(
            "{}: wid {:.3e} vs {:.3e}, ratio {:.4} vs {:.4}, per-trial {wid_ok}/{n} {ratio_ok}/{n}",
            r.name, r.rdm.mean_wid_avr, r.icp.mean_wid_avr, r.rdm.mean_ratio, r.icp.mean_ratio
        ));
    }
    verdict(ok, parts.join("; "))
}

fn shrinkage(runs: &[FeederRun]) -> Verdict {
    let r = runs.iter().find(|r| r.name == "six-bus").unwrap();
    let with = r.rdm.trials.iter().filter(|t| t.pseudo_shrunk > 0).count();
    let min = r.rdm.trials.iter().map(|t| t.pseudo_shrunk).min().unwrap_or(0);
    let ok = with == r.rdm.trials.len() && r.rdm.trials.iter().all(|t| t.ratio < 1.0);
    verdict(ok, format!("six-bus: {with}/{} trials shrink a pseudo interval (min {min}), mean ratio {:.4}", r.rdm.trials.len(), r.rdm.mean_ratio))
}

fn convergence(runs: &[FeederRun]) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for r in runs {
        let monotone = r.rdm.trials.iter().all(|t| {
            t.width_history
                .windows(2)
                .all(|w| w[1].state <= w[0].state && w[1].measurement <= w[0].measurement)
        });
        let max_it = r.rdm.trials.iter().map(|t| t.iterations).max().unwrap_or(0);
        let converged = r.rdm.trials.iter().all(|t| t.status == ContractionStatus::Converged);
        ok &= monotone && converged && max_it <= 50;
        if r.name == "six-bus" {
            ok &= max_it <= 10;
        }
        parts.push(format!("{}: monotone {monotone}, converged {converged}, max iterations {max_it}", r.name));
    }
    verdict(ok, parts.join("; "))
}

fn property<S: Strategy>(cases: u32, strategy: S, check: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String>
where
    S::Value: Debug,
{
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, check).map_err(|e| e.to_string())
}

fn property_suites() -> Verdict {
    let mut failures = Vec::new();
    let mut note = |name: &str, r: Result<(), String>| {
        if let Err(e) = r {
            failures.push(format!("{name}: {e}"));
        }
    };
    note("interval inclusion (10^4)", property(10_000, interval_case(), check_interval_inclusion));
    note("rdm cancellation/distributivity (10^3)", property(1_000, rdm_case(), check_rdm_algebra));
    note("rdm/point consistency", property(64, feeder_case(), check_rdm_point_consistency));
    note("jacobian vs differences", property(64, feeder_case(), check_jacobian));
    note("lp feasibility/duality", property(300, lp_case(), check_lp_duality));
    note("oracle closure", property(128, closure_case(), check_oracle_closure));

    let cfg = ContractorConfig::default();
    let mut rows = 0;
    for (name, seeds) in [("two-bus", 7..107u64), ("six-bus", 7..27), ("ieee33", 7..9)] {
        let net = feeders::by_name(name).unwrap();
        for seed in seeds {
            match check_linearization_soundness(&net, seed, &cfg, 50) {
                Ok(n) => rows += n,
                Err(e) => failures.push(format!("linearization soundness {name}: {e}")),
            }
        }
    }
    let ok = failures.is_empty();
    let detail = if ok {
        format!("7 suites green; {rows} linearized rows hold at the truth")
    } else {
        failures.join("; ")
    };
    verdict(ok, detail)
}

fn empty_set() -> Verdict {
    let net = feeders::six_bus();
    let t = synthesize_trial(&net, &MeasurementPlan::standard(&net, 3), &NoiseConfig::default(), 7).unwrap();
    let mut set = t.measurements;
    let k = set.items.iter().position(|m| m.kind == MeasurementKind::PInj && !m.is_pseudo).unwrap();
    let m = set.items[k].clone();
    let v = 1.5 * m.value;
    set.items[k] = Measurement::with_relative_error(m.kind, m.location, m.phase, v, v, 0.01, false);
    let sys = build_residuals(&net, &set).unwrap();
    let cfg = ContractorConfig::default();
    let lib = run_method(Method::Rdm, &net, &sys, &set, &cfg, &IcpConfig::default());
    let lib_ok = matches!(&lib, Err(EstimationError::EmptySolutionSet { iteration, .. }) if *iteration <= cfg.max_iterations);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("offset.json");
    std::fs::write(&path, measurements_to_string(&set)).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_rdm-ise"))
        .args(["estimate", "--network", "builtin:six-bus", "--method", "rdm", "--measurements"])
        .arg(&path)
        .env("RDM_ISE_LOG", "off")
        .output()
        .unwrap();
    let code = out.status.code();
    let detail = match &lib {
        Err(e) => format!("{} offset 50%: {e}; exit code {code:?}", m.label()),
        Ok(r) => format!("{} offset 50%: not detected ({:?}); exit code {code:?}", m.label(), r.status),
    };
    verdict(lib_ok && code == Some(3), detail)
}

fn main() {
    let t0 = Instant::now();
    let mut verdicts = vec![(1, algebra_table())];
    eprintln!("running Monte Carlo suites...");
    let runs = run_feeders();
    verdicts.push((2, credibility(&runs)));
    verdicts.push((3, dominance(&runs)));
    verdicts.push((4, shrinkage(&runs)));
    verdicts.push((5, convergence(&runs)));
    verdicts.push((6, property_suites()));
    verdicts.push((7, empty_set()));

    let mut failed = 0;
    for (id, v) in &verdicts {
        println!("criterion {id}: {} | {}", if v.ok { "PASS" } else { "FAIL" }, v.detail);
        failed += !v.ok as usize;
    }
    println!("{} of {} criteria passed in {:.0?}", verdicts.len() - failed, verdicts.len(), t0.elapsed());
    if failed > 0 {
        std::process::exit(1);
    }
}
