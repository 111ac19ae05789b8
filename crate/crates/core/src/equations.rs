//! Residual system `g(x) = 0` linking states and measurements.
//!
//! Each residual is a polynomial of degree at most two in the *quantities*
//! (voltage parts, branch currents, measured values and auxiliary squared
//! voltages). The quantity polynomial drives point evaluation, Jacobians and
//! the interval baseline; substituting `x = lo + alpha * (hi - lo)` turns it
//! into an RDM expression.

use std::collections::HashMap;

use crate::error::{NetworkError, RdmError};
use crate::interval::Interval;
use crate::network::{
    BranchPhase, BusPhase, Location, MeasurementKind, MeasurementSet, Phase, StateBox,
    StatePoint, ThreePhaseNetwork,
};
use crate::rdm::{RdmExpr, RdmVarId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Quantity {
    E(BusPhase),
    F(BusPhase),
    IRe(BranchPhase),
    IIm(BranchPhase),
    /// Measurement by position in the measurement set.
    Meas(usize),
    /// Squared voltage magnitude at a bus phase without a `v_sq` meter.
    VAux(BusPhase),
}

impl Quantity {
    pub fn is_state(self) -> bool {
        matches!(
            self,
            Quantity::E(_) | Quantity::F(_) | Quantity::IRe(_) | Quantity::IIm(_)
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ResidualKind {
    CurrentSq,
    PowerBalanceRe,
    PowerBalanceIm,
    VoltageSq,
    VoltageDropRe,
    VoltageDropIm,
    PowerFlowRe,
    PowerFlowIm,
}

impl ResidualKind {
    pub fn name(self) -> &'static str {
        match self {
            ResidualKind::CurrentSq => "current_sq",
            ResidualKind::PowerBalanceRe => "power_balance_re",
            ResidualKind::PowerBalanceIm => "power_balance_im",
            ResidualKind::VoltageSq => "voltage_sq",
            ResidualKind::VoltageDropRe => "voltage_drop_re",
            ResidualKind::VoltageDropIm => "voltage_drop_im",
            ResidualKind::PowerFlowRe => "power_flow_re",
            ResidualKind::PowerFlowIm => "power_flow_im",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Residual {
    pub kind: ResidualKind,
    pub location: Location,
    pub phase: Phase,
    /// Polynomial in quantity ids (`RdmVarId(i)` is quantity `i`).
    pub poly: RdmExpr,
    /// Non-zero partial derivatives, ascending by quantity.
    pub partials: Vec<(usize, RdmExpr)>,
}

impl Residual {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.poly.eval(|id| x[id.0 as usize])
    }

    pub fn eval_interval(&self, b: &[Interval]) -> Interval {
        self.poly.eval_interval(|id| b[id.0 as usize])
    }
}

#[derive(Clone, Debug)]
pub struct ResidualSystem {
    pub residuals: Vec<Residual>,
    quantities: Vec<Quantity>,
    index: HashMap<Quantity, usize>,
    n_states: usize,
    n_meas: usize,
    /// Squared-voltage quantity used by each bus phase, if any.
    v_of: Vec<Option<usize>>,
    reference_bus_phases: Vec<BusPhase>,
}

fn q(i: usize) -> RdmExpr {
    RdmExpr::var(RdmVarId(i as u32))
}

fn mul(a: &RdmExpr, b: &RdmExpr) -> RdmExpr {
    a.try_mul(b).expect("operands are affine")
}

fn phase_sum<'a>(terms: impl Iterator<Item = RdmExpr> + 'a) -> RdmExpr {
    terms.fold(RdmExpr::zero(), |acc, t| acc + t)
}

/// Builds the residual system. Every non-reference bus phase needs P and Q
/// (real, pseudo or zero-injection); the measurement set must already be
/// validated against `net`.
pub fn build_residuals(
    net: &ThreePhaseNetwork,
    meas: &MeasurementSet,
) -> Result<ResidualSystem, NetworkError> {
    let bps = net.bus_phases();
    let brps = net.branch_phases();
    let root = net.reference_index();

    let mut quantities = Vec::new();
    quantities.extend((0..bps.len()).map(Quantity::E));
    quantities.extend((0..bps.len()).map(Quantity::F));
    quantities.extend((0..brps.len()).map(Quantity::IRe));
    quantities.extend((0..brps.len()).map(Quantity::IIm));
    let n_states = quantities.len();
    quantities.extend((0..meas.len()).map(Quantity::Meas));

    let mut p_of = vec![None; bps.len()];
    let mut q_of = vec![None; bps.len()];
    let mut v_of = vec![None; bps.len()];
    let bus_meas = |m: &crate::network::Measurement| -> Option<BusPhase> {
        match m.location {
            Location::Bus(b) => net.bus_index(b).and_then(|i| net.bus_phase(i, m.phase)),
            Location::Branch(_) => None,
        }
    };
    for (k, m) in meas.items.iter().enumerate() {
        let id = n_states + k;
        match m.kind {
            MeasurementKind::PInj => p_of[bus_meas(m).expect("validated")] = Some(id),
            MeasurementKind::QInj => q_of[bus_meas(m).expect("validated")] = Some(id),
            MeasurementKind::VSq => v_of[bus_meas(m).expect("validated")] = Some(id),
            _ => {}
        }
    }
    for (bp, &(bus, phase)) in bps.iter().enumerate() {
        if bus == root {
            continue;
        }
        if p_of[bp].is_none() || q_of[bp].is_none() {
            return Err(NetworkError::MissingInjection {
                bus: net.buses()[bus].id.0,
                phase: phase.letter(),
            });
        }
        if v_of[bp].is_none() {
            v_of[bp] = Some(quantities.len());
            quantities.push(Quantity::VAux(bp));
        }
    }
    let n_meas = meas.len();
    let index: HashMap<Quantity, usize> =
        quantities.iter().enumerate().map(|(i, q)| (*q, i)).collect();

    let e = |bp: usize| q(bp);
    let f = |bp: usize| q(bps.len() + bp);
    let ire = |brp: usize| q(2 * bps.len() + brp);
    let iim = |brp: usize| q(2 * bps.len() + brps.len() + brp);

    let mut residuals: Vec<(ResidualKind, Location, Phase, RdmExpr)> = Vec::new();

    for (k, m) in meas.items.iter().enumerate() {
        let z = q(n_states + k);
        let Location::Branch(b) = m.location else { continue };
        let br = net.branch_index(b).expect("validated");
        let brp = net.branch_phase(br, m.phase).expect("validated");
        let from = net
            .bus_phase(net.from_index(br), m.phase)
            .expect("branch phases exist at the sending bus");
        let (ir, ii) = (ire(brp), iim(brp));
        let (ei, fi) = (e(from), f(from));
        let (kind, poly) = match m.kind {
            MeasurementKind::LSq => (ResidualKind::CurrentSq, z - mul(&ir, &ir) - mul(&ii, &ii)),
            MeasurementKind::PFlow => (
                ResidualKind::PowerFlowRe,
                z - mul(&ei, &ir) - mul(&fi, &ii),
            ),
            MeasurementKind::QFlow => (
                ResidualKind::PowerFlowIm,
                z - mul(&fi, &ir) + mul(&ei, &ii),
            ),
            _ => unreachable!("bus measurement at a branch"),
        };
        residuals.push((kind, m.location, m.phase, poly));
    }

    for (bp, &(bus, phase)) in bps.iter().enumerate() {
        let loc = Location::Bus(net.buses()[bus].id);
        if let Some(v) = v_of[bp] {
            let (eb, fb) = (e(bp), f(bp));
            residuals.push((
                ResidualKind::VoltageSq,
                loc,
                phase,
                q(v) - mul(&eb, &eb) - mul(&fb, &fb),
            ));
        }
        if bus == root {
            continue;
        }
        // current drawn by the load = inflow - outflows
        let parent = net.parent_branch(bus).expect("non-reference bus has a parent");
        let inflow = net.branch_phase(parent, phase).expect("branch phases match bus");
        let outs: Vec<BranchPhase> = net
            .child_branches(bus)
            .iter()
            .filter_map(|&c| net.branch_phase(c, phase))
            .collect();
        let load_re = phase_sum(outs.iter().map(|&o| ire(o).scale(-1.0))) + ire(inflow);
        let load_im = phase_sum(outs.iter().map(|&o| iim(o).scale(-1.0))) + iim(inflow);
        let p = q(p_of[bp].expect("checked above"));
        let qq = q(q_of[bp].expect("checked above"));
        let v = q(v_of[bp].expect("assigned above"));
        let (eb, fb) = (e(bp), f(bp));
        residuals.push((
            ResidualKind::PowerBalanceRe,
            loc,
            phase,
            mul(&p, &eb) + mul(&qq, &fb) - mul(&v, &load_re),
        ));
        residuals.push((
            ResidualKind::PowerBalanceIm,
            loc,
            phase,
            mul(&p, &fb) - mul(&qq, &eb) - mul(&v, &load_im),
        ));
    }

    for (br, branch) in net.branches().iter().enumerate() {
        let loc = Location::Branch(branch.id);
        let from = net.from_index(br);
        let to = net.to_index(br);
        for s in branch.phases.iter() {
            let bi = net.bus_phase(from, s).expect("subset of sending phases");
            let bj = net.bus_phase(to, s).expect("branch phases match bus");
            let drop_re = phase_sum(branch.phases.iter().map(|p| {
                let brp = net.branch_phase(br, p).expect("own phase");
                let z = branch.z(s, p);
                ire(brp).scale(z.re) - iim(brp).scale(z.im)
            }));
            let drop_im = phase_sum(branch.phases.iter().map(|p| {
                let brp = net.branch_phase(br, p).expect("own phase");
                let z = branch.z(s, p);
                ire(brp).scale(z.im) + iim(brp).scale(z.re)
            }));
            residuals.push((ResidualKind::VoltageDropRe, loc, s, e(bi) - e(bj) - drop_re));
            residuals.push((ResidualKind::VoltageDropIm, loc, s, f(bi) - f(bj) - drop_im));
        }
    }

    residuals.sort_by(|a, b| (a.0, a.1, a.2).cmp(&(b.0, b.1, b.2)));
    let residuals = residuals
        .into_iter()
        .map(|(kind, location, phase, poly)| {
            let partials = poly
                .vars()
                .into_iter()
                .map(|id| (id.0 as usize, poly.partial(id)))
                .collect();
            Residual {
                kind,
                location,
                phase,
                poly,
                partials,
            }
        })
        .collect();

    let reference_bus_phases = bps
        .iter()
        .enumerate()
        .filter(|(_, (b, _))| *b == root)
        .map(|(i, _)| i)
        .collect();

    Ok(ResidualSystem {
        residuals,
        quantities,
        index,
        n_states,
        n_meas,
        v_of,
        reference_bus_phases,
    })
}

impl ResidualSystem {
    pub fn len(&self) -> usize {
        self.residuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residuals.is_empty()
    }

    pub fn num_quantities(&self) -> usize {
        self.quantities.len()
    }

    pub fn num_states(&self) -> usize {
        self.n_states
    }

    pub fn num_measurements(&self) -> usize {
        self.n_meas
    }

    pub fn quantities(&self) -> &[Quantity] {
        &self.quantities
    }

    pub fn quantity(&self, id: usize) -> Quantity {
        self.quantities[id]
    }

    pub fn id_of(&self, q: Quantity) -> Option<usize> {
        self.index.get(&q).copied()
    }

    pub fn var_id(&self, q: Quantity) -> Option<RdmVarId> {
        self.id_of(q).map(|i| RdmVarId(i as u32))
    }

    /// Quantity ids of measurements, in measurement order.
    pub fn measurement_ids(&self) -> std::ops::Range<usize> {
        self.n_states..self.n_states + self.n_meas
    }

    /// State quantity ids that are not pinned at the reference bus.
    pub fn free_state_ids(&self) -> Vec<usize> {
        (0..self.n_states)
            .filter(|&i| match self.quantities[i] {
                Quantity::E(bp) | Quantity::F(bp) => !self.reference_bus_phases.contains(&bp),
                _ => true,
            })
            .collect()
    }

    /// Full quantity box from a state box and measurement intervals. Auxiliary
    /// squared voltages start at the interval extension of `e^2 + f^2`.
    pub fn pack_box(&self, states: &StateBox, meas: &[Interval]) -> Vec<Interval> {
        assert_eq!(meas.len(), self.n_meas, "measurement count");
        self.quantities
            .iter()
            .map(|q| match *q {
                Quantity::E(i) => states.e[i],
                Quantity::F(i) => states.f[i],
                Quantity::IRe(i) => states.i_re[i],
                Quantity::IIm(i) => states.i_im[i],
                Quantity::Meas(k) => meas[k],
                Quantity::VAux(bp) => states.v_sq(bp),
            })
            .collect()
    }

    pub fn unpack_box(&self, b: &[Interval]) -> (StateBox, Vec<Interval>) {
        let mut s = StateBox {
            e: Vec::new(),
            f: Vec::new(),
            i_re: Vec::new(),
            i_im: Vec::new(),
        };
        let mut m = Vec::with_capacity(self.n_meas);
        for (q, iv) in self.quantities.iter().zip(b) {
            match q {
                Quantity::E(_) => s.e.push(*iv),
                Quantity::F(_) => s.f.push(*iv),
                Quantity::IRe(_) => s.i_re.push(*iv),
                Quantity::IIm(_) => s.i_im.push(*iv),
                Quantity::Meas(_) => m.push(*iv),
                Quantity::VAux(_) => {}
            }
        }
        (s, m)
    }

    pub fn pack_point(&self, state: &StatePoint, meas: &[f64]) -> Vec<f64> {
        assert_eq!(meas.len(), self.n_meas, "measurement count");
        self.quantities
            .iter()
            .map(|q| match *q {
                Quantity::E(i) => state.e[i],
                Quantity::F(i) => state.f[i],
                Quantity::IRe(i) => state.i_re[i],
                Quantity::IIm(i) => state.i_im[i],
                Quantity::Meas(k) => meas[k],
                Quantity::VAux(bp) => state.v_sq(bp),
            })
            .collect()
    }

    pub fn unpack_point(&self, x: &[f64]) -> (StatePoint, Vec<f64>) {
        let mut s = StatePoint {
            e: Vec::new(),
            f: Vec::new(),
            i_re: Vec::new(),
            i_im: Vec::new(),
        };
        let mut m = Vec::with_capacity(self.n_meas);
        for (q, v) in self.quantities.iter().zip(x) {
            match q {
                Quantity::E(_) => s.e.push(*v),
                Quantity::F(_) => s.f.push(*v),
                Quantity::IRe(_) => s.i_re.push(*v),
                Quantity::IIm(_) => s.i_im.push(*v),
                Quantity::Meas(_) => m.push(*v),
                Quantity::VAux(_) => {}
            }
        }
        (s, m)
    }

    /// Squared-voltage quantity of a bus phase (meter or auxiliary).
    pub fn v_sq_id(&self, bp: BusPhase) -> Option<usize> {
        self.v_of[bp]
    }

    pub fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        self.residuals.iter().map(|r| r.eval(x)).collect()
    }

    /// Substitutes `lo + alpha * width` for every quantity. Quantity `i` maps
    /// to `RdmVarId(i)`; zero-width quantities become constants.
    pub fn bind_rdm(&self, b: &[Interval]) -> Result<Vec<RdmExpr>, RdmError> {
        let lifted: Vec<RdmExpr> = b
            .iter()
            .enumerate()
            .map(|(i, iv)| RdmExpr::affine(iv.lo(), RdmVarId(i as u32), iv.width()))
            .collect();
        self.residuals
            .iter()
            .map(|r| {
                let p = &r.poly;
                let mut out = RdmExpr::constant(p.constant_term());
                for (id, c) in p.linear_terms() {
                    out = out + lifted[id.0 as usize].scale(c);
                }
                for (a, bb, c) in p.quadratic_terms() {
                    let t = lifted[a.0 as usize].try_mul(&lifted[bb.0 as usize])?;
                    out = out + t.scale(c);
                }
                if out.degree() > 2 {
                    return Err(RdmError::DegreeOverflow {
                        degree: out.degree(),
                    });
                }
                Ok(out)
            })
            .collect()
    }

    /// Dense Jacobian, rows in residual order, columns in quantity order.
    pub fn point_jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.residuals
            .iter()
            .map(|r| {
                let mut row = vec![0.0; self.quantities.len()];
                for (j, d) in &r.partials {
                    row[*j] = d.eval(|id| x[id.0 as usize]);
                }
                row
            })
            .collect()
    }

    /// Natural interval extension of the Jacobian over a quantity box.
    pub fn interval_jacobian(&self, b: &[Interval]) -> Vec<Vec<Interval>> {
        self.residuals
            .iter()
            .map(|r| {
                let mut row = vec![Interval::ZERO; self.quantities.len()];
                for (j, d) in &r.partials {
                    row[*j] = d.eval_interval(|id| b[id.0 as usize]);
                }
                row
            })
            .collect()
    }
}
