//! Interval constraint propagation baseline.
//!
//! Every residual is a sum of monomials `k`, `k*x`, `k*x*y` and `k*x^2`.
//! A forward pass evaluates each term with classic interval arithmetic; the
//! backward pass isolates every term against the others and projects the
//! result onto its factors. Correlation between repeated occurrences of a
//! quantity is lost, which is exactly what the RDM contractor improves on.

use serde::{Deserialize, Serialize};

use crate::contractor::{width_sample, ContractionResult, ContractionStatus};
use crate::equations::ResidualSystem;
use crate::error::EstimationError;
use crate::interval::Interval;
use crate::network::StateBox;

/// Relative and absolute padding of every projection.
const PAD_REL: f64 = 1e-12;
const PAD_ABS: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IcpConfig {
    pub width_tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for IcpConfig {
    fn default() -> Self {
        IcpConfig {
            width_tolerance: 1e-6,
            max_sweeps: 200,
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Mono {
    Const,
    Lin(usize),
    Bil(usize, usize),
    Sq(usize),
}

#[derive(Clone, Debug)]
struct Term {
    k: f64,
    m: Mono,
}

fn terms_of(sys: &ResidualSystem) -> Vec<Vec<Term>> {
    sys.residuals
        .iter()
        .map(|r| {
            let mut t = Vec::new();
            if r.poly.constant_term() != 0.0 {
                t.push(Term {
                    k: r.poly.constant_term(),
                    m: Mono::Const,
                });
            }
            for (id, k) in r.poly.linear_terms() {
                t.push(Term {
                    k,
                    m: Mono::Lin(id.0 as usize),
                });
            }
            for (a, b, k) in r.poly.quadratic_terms() {
                let m = if a == b {
                    Mono::Sq(a.0 as usize)
                } else {
                    Mono::Bil(a.0 as usize, b.0 as usize)
                };
                t.push(Term { k, m });
            }
            t
        })
        .collect()
}

fn pad(iv: Interval) -> Interval {
    iv.inflate(PAD_ABS + PAD_REL * iv.mag())
}

fn eval_term(t: &Term, b: &[Interval]) -> Interval {
    let v = match t.m {
        Mono::Const => Interval::point(1.0),
        Mono::Lin(i) => b[i],
        Mono::Bil(i, j) => b[i] * b[j],
        Mono::Sq(i) => b[i].sqr(),
    };
    v * t.k
}

/// Narrows `b[i]` to `cand`; `None` when they do not meet.
fn narrow(b: &mut [Interval], i: usize, cand: Interval) -> Option<()> {
    b[i] = b[i].intersect(&pad(cand))?;
    Some(())
}

/// Solutions of `x^2 in s` inside `x`.
fn sqrt_project(x: Interval, s: Interval) -> Option<Interval> {
    let s = s.intersect(&Interval::from_sorted_unchecked(0.0, f64::INFINITY))?;
    let r = s.sqrt()?;
    let pos = x.intersect(&pad(r));
    let neg = x.intersect(&pad(-r));
    match (pos, neg) {
        (Some(p), Some(n)) => Some(p.hull(&n)),
        (Some(p), None) => Some(p),
        (None, Some(n)) => Some(n),
        (None, None) => None,
    }
}

/// One HC4 revise of a residual; `None` signals an empty box.
fn revise(terms: &[Term], b: &mut [Interval]) -> Option<()> {
    let vals: Vec<Interval> = terms.iter().map(|t| eval_term(t, b)).collect();
    let total = vals
        .iter()
        .fold(Interval::ZERO, |acc, v| acc + *v);
    if !total.contains(0.0) && !pad(total).contains(0.0) {
        return None;
    }
    for (ti, t) in terms.iter().enumerate() {
        // term = -(sum of the others), using the forward values which
        // still enclose the narrowed box
        let others = vals
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != ti)
            .fold(Interval::ZERO, |acc, (_, w)| acc + *w);
        let tv = (-pad(others)).intersect(&pad(vals[ti]))?;
        let m = tv.scale(1.0 / t.k);
        match t.m {
            Mono::Const => {}
            Mono::Lin(i) => narrow(b, i, m)?,
            Mono::Bil(i, j) => {
                if !b[j].contains_zero() {
                    narrow(b, i, m.checked_div(&b[j]).expect("nonzero divisor"))?;
                }
                if !b[i].contains_zero() {
                    narrow(b, j, m.checked_div(&b[i]).expect("nonzero divisor"))?;
                }
            }
            Mono::Sq(i) => b[i] = sqrt_project(b[i], m)?,
        }
    }
    Some(())
}

/// Runs sweeps over the full quantity box until no interval shrinks by more
/// than `width_tolerance`.
pub fn icp_contract_box(
    sys: &ResidualSystem,
    mut b: Vec<Interval>,
    cfg: &IcpConfig,
) -> Result<ContractionResult, EstimationError> {
    let terms = terms_of(sys);
    let mut history = vec![width_sample(sys, &b)];
    let mut status = ContractionStatus::IterationLimit;
    let mut sweeps = 0;
    for sweep in 1..=cfg.max_sweeps {
        let before = b.clone();
        // forward over the canonical order, then backward
        let order = (0..terms.len()).chain((0..terms.len()).rev());
        for ri in order {
            if revise(&terms[ri], &mut b).is_none() {
                let r = &sys.residuals[ri];
                return Err(EstimationError::EmptySolutionSet {
                    iteration: sweep,
                    detail: format!(
                        "{} at {} phase {} has no solution in the box",
                        r.kind.name(),
                        r.location,
                        r.phase
                    ),
                });
            }
        }
        sweeps = sweep;
        history.push(width_sample(sys, &b));
        let shrank = before
            .iter()
            .zip(&b)
            .any(|(o, n)| o.width() - n.width() > cfg.width_tolerance);
        if !shrank {
            status = ContractionStatus::Converged;
            break;
        }
    }
    let (final_states, final_measurements) = sys.unpack_box(&b);
    Ok(ContractionResult {
        final_states,
        final_measurements,
        final_quantities: b,
        iterations_used: sweeps,
        width_history: history,
        status,
    })
}

pub fn icp_contract(
    sys: &ResidualSystem,
    states: &StateBox,
    meas: &[Interval],
    cfg: &IcpConfig,
) -> Result<ContractionResult, EstimationError> {
    icp_contract_box(sys, sys.pack_box(states, meas), cfg)
}
