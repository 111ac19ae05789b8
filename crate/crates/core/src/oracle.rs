//! Ground truth for the estimators: radial power flow, bounded-noise
//! measurement synthesis, and the credibility / width metrics.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use rayon::prelude::*;

use crate::contractor::{
    run_contractor, ContractionResult, ContractionStatus, ContractorConfig, WidthSample,
};
use crate::equations::{build_residuals, ResidualSystem};
use crate::error::{EstimationError, OracleError};
use crate::icp::{icp_contract, IcpConfig};
use crate::interval::Interval;
use crate::network::{
    initial_state_box, measurement_docs, BusPhase, InitialBoxConfig, Location, Measurement,
    MeasurementDoc, MeasurementKind, MeasurementSet, Phase, StatePoint, ThreePhaseNetwork,
};

pub const MAX_SWEEPS: usize = 200;
/// Largest voltage update (p.u.) accepted as converged.
pub const SWEEP_TOLERANCE: f64 = 1e-13;
/// Share of a trial's states (and of its measurements) that must be
/// enclosed for the trial to count as credible.
pub const CREDIBLE_SHARE: f64 = 0.95;

/// Per-unit load at every bus phase (load convention), indexed like
/// [`ThreePhaseNetwork::bus_phases`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Loading {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl Loading {
    pub fn zero(net: &ThreePhaseNetwork) -> Self {
        let n = net.bus_phases().len();
        Loading {
            p: vec![0.0; n],
            q: vec![0.0; n],
        }
    }

    pub fn rated(net: &ThreePhaseNetwork) -> Self {
        Self::scaled(net, 1.0)
    }

    pub fn scaled(net: &ThreePhaseNetwork, k: f64) -> Self {
        let (p, q) = net
            .bus_phases()
            .iter()
            .map(|&(b, ph)| {
                let (p, q) = net.rated_load(b, ph);
                (k * p, k * q)
            })
            .unzip();
        Loading { p, q }
    }
}

/// Forward-backward sweep. Branch currents flow away from the reference.
pub fn power_flow(net: &ThreePhaseNetwork, load: &Loading) -> Result<StatePoint, OracleError> {
    let bps = net.bus_phases();
    let brps = net.branch_phases();
    let mut v: Vec<Complex64> = bps.iter().map(|&(_, p)| net.slack_voltage(p)).collect();
    let mut cur = vec![Complex64::new(0.0, 0.0); brps.len()];
    let order = net.bfs_order();
    let root = net.reference_index();
    let mut last = f64::INFINITY;

    for _ in 0..MAX_SWEEPS {
        // backward: accumulate load currents towards the root
        for &bus in order.iter().rev() {
            if bus == root {
                continue;
            }
            let parent = net.parent_branch(bus).expect("non-root");
            for (_, p) in bps.iter().filter(|(b, _)| *b == bus) {
                let bp = net.bus_phase(bus, *p).expect("own phase");
                let s = Complex64::new(load.p[bp], load.q[bp]);
                let mut i = (s / v[bp]).conj();
                for &c in net.child_branches(bus) {
                    if let Some(cp) = net.branch_phase(c, *p) {
                        i += cur[cp];
                    }
                }
                cur[net.branch_phase(parent, *p).expect("branch phases match")] = i;
            }
        }
        // forward: voltage drops away from the root
        let mut delta = 0.0f64;
        for &bus in order {
            if bus == root {
                continue;
            }
            let k = net.parent_branch(bus).expect("non-root");
            let br = &net.branches()[k];
            let from = net.from_index(k);
            for s in br.phases.iter() {
                let mut drop = Complex64::new(0.0, 0.0);
                for p in br.phases.iter() {
                    drop += br.z(s, p) * cur[net.branch_phase(k, p).expect("own phase")];
                }
                let vi = v[net.bus_phase(from, s).expect("sending phase")];
                let j = net.bus_phase(bus, s).expect("own phase");
                let new = vi - drop;
                delta = delta.max((new - v[j]).norm());
                v[j] = new;
            }
        }
        if !delta.is_finite() {
            break;
        }
        last = delta;
        if delta < SWEEP_TOLERANCE {
            return Ok(StatePoint {
                e: v.iter().map(|x| x.re).collect(),
                f: v.iter().map(|x| x.im).collect(),
                i_re: cur.iter().map(|x| x.re).collect(),
                i_im: cur.iter().map(|x| x.im).collect(),
            });
        }
    }
    Err(OracleError::NoConvergence {
        sweeps: MAX_SWEEPS,
        mismatch: last,
    })
}

/// Largest power mismatch `|S - V conj(I_load)|` of a state at the given
/// loading.
pub fn power_mismatch(net: &ThreePhaseNetwork, load: &Loading, x: &StatePoint) -> f64 {
    let root = net.reference_index();
    let mut worst = 0.0f64;
    for (bp, &(bus, p)) in net.bus_phases().iter().enumerate() {
        if bus == root {
            continue;
        }
        let parent = net.parent_branch(bus).expect("non-root");
        let mut i = x.current(net.branch_phase(parent, p).expect("phase"));
        for &c in net.child_branches(bus) {
            if let Some(cp) = net.branch_phase(c, p) {
                i -= x.current(cp);
            }
        }
        let s = x.voltage(bp) * i.conj();
        worst = worst.max((s - Complex64::new(load.p[bp], load.q[bp])).norm());
    }
    worst
}

/// Exact value of a measured quantity at a power-flow state.
pub fn true_value(
    net: &ThreePhaseNetwork,
    load: &Loading,
    x: &StatePoint,
    kind: MeasurementKind,
    location: Location,
    phase: Phase,
) -> f64 {
    match location {
        Location::Bus(b) => {
            let bp = net
                .bus_index(b)
                .and_then(|i| net.bus_phase(i, phase))
                .expect("validated location");
            match kind {
                MeasurementKind::VSq => x.v_sq(bp),
                MeasurementKind::PInj => load.p[bp],
                MeasurementKind::QInj => load.q[bp],
                _ => unreachable!("branch quantity at a bus"),
            }
        }
        Location::Branch(b) => {
            let k = net.branch_index(b).expect("validated location");
            let brp = net.branch_phase(k, phase).expect("validated phase");
            let from = net.bus_phase(net.from_index(k), phase).expect("sending phase");
            let i = x.current(brp);
            let s = x.voltage(from) * i.conj();
            match kind {
                MeasurementKind::LSq => i.norm_sqr(),
                MeasurementKind::PFlow => s.re,
                MeasurementKind::QFlow => s.im,
                _ => unreachable!("bus quantity at a branch"),
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeterClass {
    Real,
    Pseudo,
    ZeroInjection,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannedMeasurement {
    pub kind: MeasurementKind,
    pub location: Location,
    pub phase: Phase,
    pub class: MeterClass,
}

/// Which quantities are metered, and how.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct MeasurementPlan {
    pub items: Vec<PlannedMeasurement>,
}

impl MeasurementPlan {
    /// Slack voltage, current and power flow on the branches leaving the
    /// reference, real P/Q/V on every `real_every`-th loaded bus (counted in
    /// breadth-first order, starting with the first), pseudo P/Q on the other
    /// loaded buses and zero injection wherever the rated load is zero.
    pub fn standard(net: &ThreePhaseNetwork, real_every: usize) -> Self {
        let mut items = Vec::new();
        let root = net.reference_index();
        let rb = &net.buses()[root];
        for p in rb.phases.iter() {
            items.push(PlannedMeasurement {
                kind: MeasurementKind::VSq,
                location: Location::Bus(rb.id),
                phase: p,
                class: MeterClass::Real,
            });
        }
        for &k in net.child_branches(root) {
            let br = &net.branches()[k];
            for kind in [MeasurementKind::LSq, MeasurementKind::PFlow, MeasurementKind::QFlow] {
                for p in br.phases.iter() {
                    items.push(PlannedMeasurement {
                        kind,
                        location: Location::Branch(br.id),
                        phase: p,
                        class: MeterClass::Real,
                    });
                }
            }
        }
        let mut loaded = 0usize;
        for &bus in net.bfs_order() {
            if bus == root {
                continue;
            }
            let b = &net.buses()[bus];
            let has_load = b.phases.iter().any(|p| net.rated_load(bus, p) != (0.0, 0.0));
            let real = has_load && real_every > 0 && loaded % real_every == 0;
            if has_load {
                loaded += 1;
            }
            for p in b.phases.iter() {
                let zero = net.rated_load(bus, p) == (0.0, 0.0);
                let class = if zero {
                    MeterClass::ZeroInjection
                } else if real {
                    MeterClass::Real
                } else {
                    MeterClass::Pseudo
                };
                for kind in [MeasurementKind::PInj, MeasurementKind::QInj] {
                    items.push(PlannedMeasurement {
                        kind,
                        location: Location::Bus(b.id),
                        phase: p,
                        class,
                    });
                }
            }
            if real {
                for p in b.phases.iter() {
                    items.push(PlannedMeasurement {
                        kind: MeasurementKind::VSq,
                        location: Location::Bus(b.id),
                        phase: p,
                        class: MeterClass::Real,
                    });
                }
            }
        }
        MeasurementPlan { items }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Relative bound of real meters.
    pub real_accuracy: f64,
    /// Relative bound of pseudo measurements around the rated load.
    pub pseudo_accuracy: f64,
    /// True loads are drawn uniformly within this relative band of rated.
    pub load_variation: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            real_accuracy: 0.01,
            pseudo_accuracy: 0.10,
            load_variation: 0.10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub seed: u64,
    pub loading: Loading,
    pub true_state: StatePoint,
    /// Exact value of every measured quantity, in measurement order.
    pub true_measurements: Vec<f64>,
    pub measurements: MeasurementSet,
}

#[derive(Serialize)]
struct TrialRecordDoc<'a> {
    seed: u64,
    loading: &'a Loading,
    true_state: &'a StatePoint,
    true_measurements: &'a [f64],
    measurements: Vec<MeasurementDoc>,
}

impl TrialRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&TrialRecordDoc {
            seed: self.seed,
            loading: &self.loading,
            true_state: &self.true_state,
            true_measurements: &self.true_measurements,
            measurements: measurement_docs(&self.measurements),
        })
        .expect("serializable")
    }

    /// Number of measurements whose exact value lies in the declared bounds.
    pub fn contained(&self) -> usize {
        self.measurements
            .items
            .iter()
            .zip(&self.true_measurements)
            .filter(|(m, t)| m.interval().contains(**t))
            .count()
    }
}

/// Draws a loading around rated, solves the power flow and produces noisy
/// measurements whose declared bounds contain the exact values.
pub fn synthesize_trial(
    net: &ThreePhaseNetwork,
    plan: &MeasurementPlan,
    noise: &NoiseConfig,
    seed: u64,
) -> Result<TrialRecord, OracleError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rated = Loading::rated(net);
    let mut loading = rated.clone();
    let draw = |rng: &mut ChaCha8Rng, width: f64| {
        if width > 0.0 {
            rng.gen_range(-width..=width)
        } else {
            0.0
        }
    };
    for i in 0..loading.p.len() {
        loading.p[i] *= 1.0 + draw(&mut rng, noise.load_variation);
        loading.q[i] *= 1.0 + draw(&mut rng, noise.load_variation);
    }
    let truth = power_flow(net, &loading)?;

    let mut items = Vec::with_capacity(plan.items.len());
    let mut exact = Vec::with_capacity(plan.items.len());
    for pm in &plan.items {
        let z = true_value(net, &loading, &truth, pm.kind, pm.location, pm.phase);
        let m = match pm.class {
            MeterClass::ZeroInjection => Measurement {
                kind: pm.kind,
                location: pm.location,
                phase: pm.phase,
                value: 0.0,
                err_lo: 0.0,
                err_hi: 0.0,
                is_pseudo: true,
            },
            MeterClass::Pseudo => {
                let bp = bus_phase_of(net, pm.location, pm.phase);
                let r = match pm.kind {
                    MeasurementKind::PInj => rated.p[bp],
                    MeasurementKind::QInj => rated.q[bp],
                    _ => z,
                };
                Measurement::with_relative_error(
                    pm.kind,
                    pm.location,
                    pm.phase,
                    r,
                    r,
                    noise.pseudo_accuracy,
                    true,
                )
            }
            MeterClass::Real => {
                // z lies in [0.99 v, 1.01 v] for v = z / (1 + u)
                let u = draw(&mut rng, noise.real_accuracy);
                let v = z / (1.0 + u);
                Measurement::with_relative_error(
                    pm.kind,
                    pm.location,
                    pm.phase,
                    v,
                    v,
                    noise.real_accuracy,
                    false,
                )
            }
        };
        items.push(m);
        exact.push(z);
    }
    Ok(TrialRecord {
        seed,
        loading,
        true_state: truth,
        true_measurements: exact,
        measurements: MeasurementSet::new(items),
    })
}

fn bus_phase_of(net: &ThreePhaseNetwork, loc: Location, p: Phase) -> BusPhase {
    match loc {
        Location::Bus(b) => net
            .bus_index(b)
            .and_then(|i| net.bus_phase(i, p))
            .expect("planned at an existing bus phase"),
        Location::Branch(_) => unreachable!("injection planned at a branch"),
    }
}

/// Shares of enclosed states and enclosed measurements for one trial.
pub fn trial_coverage(result: &ContractionResult, trial: &TrialRecord) -> (f64, f64) {
    let s = &result.final_states;
    let t = &trial.true_state;
    let mut hits = 0usize;
    let mut total = 0usize;
    for (iv, x) in [(&s.e, &t.e), (&s.f, &t.f), (&s.i_re, &t.i_re), (&s.i_im, &t.i_im)] {
        for (i, v) in iv.iter().zip(x.iter()) {
            total += 1;
            hits += i.contains(*v) as usize;
        }
    }
    let c1 = if total == 0 { 1.0 } else { hits as f64 / total as f64 };
    let m = &result.final_measurements;
    let mh = m
        .iter()
        .zip(&trial.true_measurements)
        .filter(|(i, v)| i.contains(**v))
        .count();
    let c2 = if m.is_empty() { 1.0 } else { mh as f64 / m.len() as f64 };
    (c1, c2)
}

/// Fraction of trials whose state and measurement coverage both reach 95%.
pub fn credibility(
    results: &[ContractionResult],
    trials: &[TrialRecord],
) -> Result<f64, OracleError> {
    if results.len() != trials.len() {
        return Err(OracleError::LengthMismatch {
            results: results.len(),
            trials: trials.len(),
        });
    }
    if results.is_empty() {
        return Ok(1.0);
    }
    let credible = results
        .iter()
        .zip(trials)
        .filter(|(r, t)| {
            let (c1, c2) = trial_coverage(r, t);
            c1 >= CREDIBLE_SHARE && c2 >= CREDIBLE_SHARE
        })
        .count();
    Ok(credible as f64 / results.len() as f64)
}

/// `(wid_avr, ratio)`: the mean width of the free state intervals and the
/// total measurement width relative to the initial total.
pub fn width_metrics(
    sys: &ResidualSystem,
    result: &ContractionResult,
    initial_measurements: &[Interval],
) -> (f64, f64) {
    let b = &result.final_quantities;
    let free = sys.free_state_ids();
    let wid_avr = if free.is_empty() {
        0.0
    } else {
        free.iter().map(|&i| b[i].width()).sum::<f64>() / free.len() as f64
    };
    let before: f64 = initial_measurements.iter().map(Interval::width).sum();
    let after: f64 = result.final_measurements.iter().map(Interval::width).sum();
    let ratio = if before > 0.0 { after / before } else { 1.0 };
    (wid_avr, ratio)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rdm,
    Icp,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Rdm => "rdm",
            Method::Icp => "icp",
        }
    }
}

/// Runs one estimator from the standard initial box.
pub fn run_method(
    method: Method,
    net: &ThreePhaseNetwork,
    sys: &ResidualSystem,
    meas: &MeasurementSet,
    rdm: &ContractorConfig,
    icp: &IcpConfig,
) -> Result<ContractionResult, EstimationError> {
    let states = initial_state_box(net, meas, &InitialBoxConfig::default());
    let z0 = meas.intervals();
    match method {
        Method::Rdm => run_contractor(sys, &states, &z0, rdm),
        Method::Icp => icp_contract(sys, &states, &z0, icp),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub trials: usize,
    /// Trial `k` uses seed `seed + k`.
    pub seed: u64,
    /// Every n-th loaded bus carries real meters.
    pub real_every: usize,
    pub noise: NoiseConfig,
    pub contractor: ContractorConfig,
    pub icp: IcpConfig,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        MonteCarloConfig {
            trials: 100,
            seed: 7,
            real_every: 3,
            noise: NoiseConfig::default(),
            contractor: ContractorConfig::default(),
            icp: IcpConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub seed: u64,
    pub status: ContractionStatus,
    pub iterations: usize,
    pub wid_avr: f64,
    pub ratio: f64,
    pub state_coverage: f64,
    pub measurement_coverage: f64,
    /// Pseudo measurements whose interval ended strictly narrower.
    pub pseudo_shrunk: usize,
    pub width_history: Vec<WidthSample>,
}

impl TrialOutcome {
    pub fn credible(&self) -> bool {
        self.status != ContractionStatus::EmptySet
            && self.state_coverage >= CREDIBLE_SHARE
            && self.measurement_coverage >= CREDIBLE_SHARE
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub credibility: f64,
    pub mean_wid_avr: f64,
    pub mean_ratio: f64,
    pub trials: Vec<TrialOutcome>,
}

/// Synthesizes `cfg.trials` measurement sets and runs every method on each.
/// Trials run in parallel; the result does not depend on the thread count.
pub fn monte_carlo(
    net: &ThreePhaseNetwork,
    methods: &[Method],
    cfg: &MonteCarloConfig,
) -> Result<Vec<MethodSummary>, OracleError> {
    let plan = MeasurementPlan::standard(net, cfg.real_every);
    let per_trial: Vec<Vec<TrialOutcome>> = (0..cfg.trials)
        .into_par_iter()
        .map(|k| {
            let seed = cfg.seed.wrapping_add(k as u64);
            let trial = synthesize_trial(net, &plan, &cfg.noise, seed)?;
            let sys = build_residuals(net, &trial.measurements)
                .map_err(|e| OracleError::InvalidPlan(e.to_string()))?;
            let z0 = trial.measurements.intervals();
            Ok(methods
                .iter()
                .map(|&m| {
                    match run_method(m, net, &sys, &trial.measurements, &cfg.contractor, &cfg.icp) {
                        Ok(res) => {
                            let (wid_avr, ratio) = width_metrics(&sys, &res, &z0);
                            let (c1, c2) = trial_coverage(&res, &trial);
                            let pseudo_shrunk = trial
                                .measurements
                                .items
                                .iter()
                                .zip(&res.final_measurements)
                                .filter(|(z, f)| z.is_pseudo && f.width() < z.interval().width())
                                .count();
                            TrialOutcome {
                                seed,
                                status: res.status,
                                iterations: res.iterations_used,
                                wid_avr,
                                ratio,
                                state_coverage: c1,
                                measurement_coverage: c2,
                                pseudo_shrunk,
                                width_history: res.width_history,
                            }
                        }
                        Err(e) => {
                            log::warn!("trial {seed} ({}): {e}", m.name());
                            TrialOutcome {
                                seed,
                                status: ContractionStatus::EmptySet,
                                iterations: 0,
                                wid_avr: 0.0,
                                ratio: 0.0,
                                state_coverage: 0.0,
                                measurement_coverage: 0.0,
                                pseudo_shrunk: 0,
                                width_history: Vec::new(),
                            }
                        }
                    }
                })
                .collect())
        })
        .collect::<Result<_, OracleError>>()?;

    Ok(methods
        .iter()
        .enumerate()
        .map(|(i, &method)| {
            let trials: Vec<TrialOutcome> = per_trial.iter().map(|t| t[i].clone()).collect();
            let n = trials.len().max(1) as f64;
            MethodSummary {
                method,
                credibility: if trials.is_empty() {
                    1.0
                } else {
                    trials.iter().filter(|t| t.credible()).count() as f64 / n
                },
                mean_wid_avr: trials.iter().map(|t| t.wid_avr).sum::<f64>() / n,
                mean_ratio: trials.iter().map(|t| t.ratio).sum::<f64>() / n,
                trials,
            }
        })
        .collect())
}
