//! LP contractor over the RDM-parameterized residual system.
//!
//! Each sweep writes every quantity as `lo + alpha * w`, encloses every
//! residual between two linear functions of the `alpha`s with the mean value
//! theorem, and then minimizes and maximizes each `alpha` over the resulting
//! polytope. The outer loop rebinds the parameterization to the contracted
//! box and repeats until the average widths stop moving.

use log::{debug, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equations::ResidualSystem;
use crate::error::EstimationError;
use crate::interval::Interval;
use crate::lp::{ConstraintSet, LpStatus, Sense, Tableau};
use crate::network::{MeasurementSet, StateBox};
use crate::rdm::{RdmExpr, RdmVarId};

/// Quantities narrower than this are treated as constants.
pub const DEGENERATE_WIDTH: f64 = 1e-14;
/// Rows whose coefficients all fall below this only get a consistency check.
const NULL_ROW: f64 = 1e-12;
/// Outward padding of each optimal `alpha` before mapping back.
const ALPHA_PAD: f64 = 1e-9;
const CHUNK: usize = 64;
/// LP values this close to 0 or 1 count as sitting on the bound.
const AT_BOUND: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuadraticRelaxation {
    #[serde(rename = "mv")]
    MeanValueOnly,
    #[serde(rename = "mv+env")]
    MeanValuePlusEnvelopes,
}

/// Where inside each interval the mean value expansion is centred.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpansionPoint {
    Infimum,
    Midpoint,
}

impl ExpansionPoint {
    fn fraction(self) -> f64 {
        match self {
            ExpansionPoint::Infimum => 0.0,
            ExpansionPoint::Midpoint => 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractorConfig {
    pub width_tolerance: f64,
    pub max_iterations: usize,
    pub lp_epsilon: f64,
    pub quadratic_relaxation: QuadraticRelaxation,
    pub expansion_point: ExpansionPoint,
    pub pivot_limit: usize,
}

impl Default for ContractorConfig {
    fn default() -> Self {
        ContractorConfig {
            width_tolerance: 1e-6,
            max_iterations: 50,
            lp_epsilon: 1e-9,
            quadratic_relaxation: QuadraticRelaxation::MeanValuePlusEnvelopes,
            expansion_point: ExpansionPoint::Infimum,
            pivot_limit: 1_000_000,
        }
    }
}

impl ContractorConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.width_tolerance > 0.0) || !(self.lp_epsilon > 0.0) {
            return Err("tolerances must be positive".into());
        }
        if self.max_iterations == 0 {
            return Err("max_iterations must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractionStatus {
    Converged,
    IterationLimit,
    EmptySet,
}

/// Average widths after one iteration (entry 0 is the starting box).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthSample {
    pub state: f64,
    pub measurement: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContractionResult {
    pub final_states: StateBox,
    pub final_measurements: Vec<Interval>,
    /// Every quantity of the residual system, auxiliaries included.
    pub final_quantities: Vec<Interval>,
    pub iterations_used: usize,
    pub width_history: Vec<WidthSample>,
    pub status: ContractionStatus,
}

pub fn width_sample(sys: &ResidualSystem, b: &[Interval]) -> WidthSample {
    let avg = |ids: &mut dyn Iterator<Item = usize>| {
        let (mut sum, mut n) = (0.0, 0usize);
        for i in ids {
            sum += b[i].width();
            n += 1;
        }
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    };
    WidthSample {
        state: avg(&mut sys.free_state_ids().into_iter()),
        measurement: avg(&mut sys.measurement_ids()),
    }
}

/// LP column: the `alpha` of a quantity, or the auxiliary standing in for
/// the square of that `alpha`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Column {
    Alpha(usize),
    Square(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearRow {
    pub coeffs: Vec<(usize, f64)>,
    pub lo: f64,
    pub hi: f64,
}

impl LinearRow {
    pub fn activity(&self, cols: &[f64]) -> f64 {
        self.coeffs.iter().map(|(j, a)| a * cols[*j]).sum()
    }
}

/// Linear enclosure of the residual system over one box.
#[derive(Clone, Debug, PartialEq)]
pub struct Linearization {
    pub columns: Vec<Column>,
    /// LP column of each quantity's `alpha` (None when degenerate).
    pub alpha_col: Vec<Option<usize>>,
    pub rows: Vec<LinearRow>,
}

impl Linearization {
    /// LP column values for a point of the box.
    pub fn columns_at(&self, b: &[Interval], x: &[f64]) -> Vec<f64> {
        self.columns
            .iter()
            .map(|c| match *c {
                Column::Alpha(q) => (x[q] - b[q].lo()) / b[q].width(),
                Column::Square(q) => {
                    let a = (x[q] - b[q].lo()) / b[q].width();
                    a * a
                }
            })
            .collect()
    }
}

/// Encloses every residual over `b`: for each row, `lo <= a . cols <= hi`
/// holds at every solution of the system inside the box. Envelope rows for
/// the square auxiliaries are appended after the residual rows.
pub fn linearize(
    sys: &ResidualSystem,
    b: &[Interval],
    cfg: &ContractorConfig,
) -> Result<Linearization, EstimationError> {
    let c = cfg.expansion_point.fraction();
    let envelopes = cfg.quadratic_relaxation == QuadraticRelaxation::MeanValuePlusEnvelopes;
    let nq = sys.num_quantities();
    let w: Vec<f64> = b.iter().map(Interval::width).collect();
    let live: Vec<bool> = w.iter().map(|w| *w > DEGENERATE_WIDTH).collect();
    let x0: Vec<f64> = b
        .iter()
        .zip(&live)
        .map(|(iv, l)| if *l { iv.lo() + c * iv.width() } else { iv.lo() })
        .collect();

    let mut columns = Vec::new();
    let mut alpha_col = vec![None; nq];
    for q in 0..nq {
        if live[q] {
            alpha_col[q] = Some(columns.len());
            columns.push(Column::Alpha(q));
        }
    }
    let mut square_col = vec![None; nq];

    let mut rows = Vec::with_capacity(sys.len());
    for (ri, r) in sys.residuals.iter().enumerate() {
        // pure squares of live quantities move to auxiliary columns
        let squares: Vec<(usize, f64)> = if envelopes {
            r.poly
                .quadratic_terms()
                .filter(|(a, bq, _)| a == bq && live[a.0 as usize])
                .map(|(a, _, k)| (a.0 as usize, k))
                .collect()
        } else {
            Vec::new()
        };
        let mut g_tilde = r.poly.clone();
        for &(j, k) in &squares {
            let id = RdmVarId(j as u32);
            g_tilde = g_tilde - RdmExpr::var(id).try_mul(&RdmExpr::var(id)).expect("degree 2").scale(k);
        }

        let mut dense: Vec<(usize, f64)> = Vec::new();
        let mut rhs = Interval::point(-g_tilde.eval(|id| x0[id.0 as usize]));
        for (j, d) in &r.partials {
            let j = *j;
            if !live[j] {
                continue;
            }
            let mut d = d.clone();
            if let Some(&(_, k)) = squares.iter().find(|(q, _)| *q == j) {
                d = d - RdmExpr::affine(0.0, RdmVarId(j as u32), 2.0 * k);
            }
            let at = d.eval(|id| x0[id.0 as usize]);
            let over = d.eval_interval(|id| b[id.0 as usize]);
            let slope = at * w[j];
            if slope != 0.0 {
                dense.push((alpha_col[j].expect("live"), slope));
            }
            rhs = rhs + c * slope;
            // (J([x]) - J(x0)) * w * [-c, 1 - c]
            let spread = (over + (-at)) * Interval::from_sorted_unchecked(-c * w[j], (1.0 - c) * w[j]);
            rhs = rhs - spread;
        }
        for &(j, k) in &squares {
            let lo = b[j].lo();
            dense.push((alpha_col[j].expect("live"), 2.0 * k * lo * w[j]));
            let col = *square_col[j].get_or_insert_with(|| {
                columns.push(Column::Square(j));
                columns.len() - 1
            });
            dense.push((col, k * w[j] * w[j]));
            rhs = rhs + (-k * lo * lo);
        }
        dense.sort_by_key(|(j, _)| *j);
        let mut coeffs: Vec<(usize, f64)> = Vec::with_capacity(dense.len());
        for (j, a) in dense {
            match coeffs.last_mut() {
                Some((k, v)) if *k == j => *v += a,
                _ => coeffs.push((j, a)),
            }
        }
        let rhs = rhs.inflate(cfg.lp_epsilon);
        let scale = coeffs.iter().fold(0.0f64, |m, (_, a)| m.max(a.abs()));
        if scale < NULL_ROW {
            let slack = coeffs.iter().map(|(_, a)| a.abs()).sum::<f64>();
            if rhs.lo() > slack || rhs.hi() < -slack {
                return Err(EstimationError::EmptySolutionSet {
                    iteration: 0,
                    detail: format!(
                        "{} at {} phase {} cannot vanish on the box (remainder {})",
                        r.kind.name(),
                        r.location,
                        r.phase,
                        rhs
                    ),
                });
            }
            debug!("row {ri} has no usable coefficients");
            continue;
        }
        rows.push(LinearRow {
            coeffs: coeffs.into_iter().map(|(j, a)| (j, a / scale)).collect(),
            lo: rhs.lo() / scale,
            hi: rhs.hi() / scale,
        });
    }

    // s <= alpha and s >= 2 alpha - 1 (s >= 0 is its bound)
    for q in 0..nq {
        if let Some(s) = square_col[q] {
            let a = alpha_col[q].expect("live");
            rows.push(LinearRow {
                coeffs: vec![(a, -1.0), (s, 1.0)],
                lo: f64::NEG_INFINITY,
                hi: 0.0,
            });
            rows.push(LinearRow {
                coeffs: vec![(a, -2.0), (s, 1.0)],
                lo: -1.0,
                hi: f64::INFINITY,
            });
        }
    }

    Ok(Linearization {
        columns,
        alpha_col,
        rows,
    })
}

fn constraint_set(lin: &Linearization) -> ConstraintSet {
    let n = lin.columns.len();
    let mut cs = ConstraintSet::new(vec![(0.0, 1.0); n]);
    for r in &lin.rows {
        let mut dense = vec![0.0; n];
        for (j, a) in &r.coeffs {
            dense[*j] = *a;
        }
        cs.add_row(dense, r.lo, r.hi);
    }
    cs
}

/// One contraction sweep over the full quantity box. Returns the new box
/// (always a subset of `b`) and whether any width shrank by more than the
/// tolerance.
pub fn contract_box(
    sys: &ResidualSystem,
    b: &[Interval],
    cfg: &ContractorConfig,
) -> Result<(Vec<Interval>, bool), EstimationError> {
    let lin = linearize(sys, b, cfg)?;
    let cs = constraint_set(&lin);
    let base = match cs.feasible_tableau(cfg.pivot_limit) {
        Ok(t) => t,
        Err(LpStatus::Infeasible) => {
            return Err(EstimationError::EmptySolutionSet {
                iteration: 0,
                detail: "linearized constraints admit no point of the box".into(),
            })
        }
        Err(status) => {
            warn!("phase one failed ({status:?}); box left unchanged");
            return Ok((b.to_vec(), false));
        }
    };

    let targets: Vec<(usize, usize)> = lin
        .columns
        .iter()
        .enumerate()
        .filter_map(|(col, c)| match c {
            Column::Alpha(q) => Some((*q, col)),
            Column::Square(_) => None,
        })
        .collect();
    let n = lin.columns.len();
    let start = base.point();
    let bounds: Vec<Vec<(usize, Option<f64>, Option<f64>)>> = targets
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut tab: Tableau = base.clone();
            let mut out = Vec::with_capacity(chunk.len());
            let mut obj = vec![0.0; n];
            // a feasible point with alpha at a bound settles that side
            let mut at_lo = vec![false; n];
            let mut at_hi = vec![false; n];
            let mark = |p: &[f64], at_lo: &mut [bool], at_hi: &mut [bool]| {
                for (c, v) in p.iter().enumerate() {
                    at_lo[c] |= *v <= AT_BOUND;
                    at_hi[c] |= *v >= 1.0 - AT_BOUND;
                }
            };
            mark(&start, &mut at_lo, &mut at_hi);
            let mut lows = Vec::with_capacity(chunk.len());
            for sense in [Sense::Minimize, Sense::Maximize] {
                for (k, &(q, col)) in chunk.iter().enumerate() {
                    let settled = match sense {
                        Sense::Minimize => at_lo[col],
                        Sense::Maximize => at_hi[col],
                    };
                    let v = if settled {
                        Some(if sense == Sense::Minimize { 0.0 } else { 1.0 })
                    } else {
                        obj[col] = 1.0;
                        let s = tab.optimize(&obj, sense);
                        obj[col] = 0.0;
                        if s.status == LpStatus::Optimal {
                            mark(&s.point, &mut at_lo, &mut at_hi);
                            Some(s.point[col])
                        } else {
                            debug!("alpha {q}: {sense:?} {:?}", s.status);
                            None
                        }
                    };
                    match sense {
                        Sense::Minimize => lows.push(v),
                        Sense::Maximize => out.push((q, lows[k], v)),
                    }
                }
            }
            out
        })
        .collect();

    let mut nb = b.to_vec();
    let mut progress = false;
    for (q, amin, amax) in bounds.into_iter().flatten() {
        let old = b[q];
        let w = old.width();
        let lo = amin.map_or(old.lo(), |a| old.lo() + (a - ALPHA_PAD) * w);
        let hi = amax.map_or(old.hi(), |a| old.lo() + (a + ALPHA_PAD) * w);
        let cand = Interval::from_sorted_unchecked(lo.min(hi), hi.max(lo));
        let new = cand.intersect(&old).ok_or_else(|| EstimationError::EmptySolutionSet {
            iteration: 0,
            detail: format!("quantity {q} contracted to an empty interval"),
        })?;
        if old.width() - new.width() > cfg.width_tolerance {
            progress = true;
        }
        nb[q] = new;
    }
    Ok((nb, progress))
}

fn at_iteration(e: EstimationError, iteration: usize) -> EstimationError {
    match e {
        EstimationError::EmptySolutionSet { detail, .. } => {
            EstimationError::EmptySolutionSet { iteration, detail }
        }
        EstimationError::Numerical { detail, .. } => EstimationError::Numerical { iteration, detail },
        other => other,
    }
}

/// Single sweep in terms of the state box and measurement intervals.
pub fn contract_once(
    sys: &ResidualSystem,
    states: &StateBox,
    meas: &[Interval],
    cfg: &ContractorConfig,
) -> Result<(StateBox, Vec<Interval>, bool), EstimationError> {
    let b = sys.pack_box(states, meas);
    let (nb, progress) = contract_box(sys, &b, cfg).map_err(|e| at_iteration(e, 1))?;
    let (s, m) = sys.unpack_box(&nb);
    Ok((s, m, progress))
}

/// Iterates sweeps until the average state and measurement widths both
/// decrease by no more than `width_tolerance`, or the iteration limit.
pub fn run_contractor(
    sys: &ResidualSystem,
    states: &StateBox,
    meas: &[Interval],
    cfg: &ContractorConfig,
) -> Result<ContractionResult, EstimationError> {
    run_contractor_on_box(sys, sys.pack_box(states, meas), cfg)
}

pub fn run_contractor_on_box(
    sys: &ResidualSystem,
    mut b: Vec<Interval>,
    cfg: &ContractorConfig,
) -> Result<ContractionResult, EstimationError> {
    let mut history = vec![width_sample(sys, &b)];
    let mut status = ContractionStatus::IterationLimit;
    let mut iterations = 0;
    for it in 1..=cfg.max_iterations {
        let (nb, _) = contract_box(sys, &b, cfg).map_err(|e| at_iteration(e, it))?;
        b = nb;
        iterations = it;
        let now = width_sample(sys, &b);
        let prev = *history.last().expect("non-empty");
        history.push(now);
        debug!(
            "iteration {it}: state width {:.3e}, measurement width {:.3e}",
            now.state, now.measurement
        );
        if prev.state - now.state <= cfg.width_tolerance
            && prev.measurement - now.measurement <= cfg.width_tolerance
        {
            status = ContractionStatus::Converged;
            break;
        }
    }
    let (final_states, final_measurements) = sys.unpack_box(&b);
    Ok(ContractionResult {
        final_states,
        final_measurements,
        final_quantities: b,
        iterations_used: iterations,
        width_history: history,
        status,
    })
}

/// Convenience wrapper: initial intervals straight from a measurement set.
pub fn estimate(
    sys: &ResidualSystem,
    states: &StateBox,
    meas: &MeasurementSet,
    cfg: &ContractorConfig,
) -> Result<ContractionResult, EstimationError> {
    run_contractor(sys, states, &meas.intervals(), cfg)
}
