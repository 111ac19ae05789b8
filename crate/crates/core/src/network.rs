//! Three-phase radial feeders, their measurements, and interval state boxes.
//!
//! Files are JSON documents in physical units (ohms, kW, kvar) with a
//! declared base; everything in memory is per-unit. Powers are per phase
//! with base `kva / 3`, impedances use `kv^2 * 1000 / kva` ohms.
//!
//! Bus power measurements follow the load convention: a positive `p_inj`
//! is power drawn from the network at that bus.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::NetworkError;
use crate::interval::Interval;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Phase {
    #[serde(rename = "a")]
    A,
    #[serde(rename = "b")]
    B,
    #[serde(rename = "c")]
    C,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::A, Phase::B, Phase::C];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn letter(self) -> char {
        ['a', 'b', 'c'][self.index()]
    }

    fn from_letter(c: char) -> Option<Phase> {
        match c {
            'a' | 'A' => Some(Phase::A),
            'b' | 'B' => Some(Phase::B),
            'c' | 'C' => Some(Phase::C),
            _ => None,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Subset of `{a, b, c}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct PhaseSet(u8);

impl PhaseSet {
    pub const ABC: PhaseSet = PhaseSet(0b111);
    pub const A: PhaseSet = PhaseSet(0b001);

    pub fn contains(self, p: Phase) -> bool {
        self.0 & (1 << p.index()) != 0
    }

    pub fn iter(self) -> impl Iterator<Item = Phase> {
        Phase::ALL.into_iter().filter(move |p| self.contains(*p))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset_of(self, other: PhaseSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn parse(s: &str) -> Option<PhaseSet> {
        let mut bits = 0u8;
        for c in s.chars() {
            let p = Phase::from_letter(c)?;
            if bits & (1 << p.index()) != 0 {
                return None;
            }
            bits |= 1 << p.index();
        }
        (bits != 0).then_some(PhaseSet(bits))
    }
}

impl fmt::Display for PhaseSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in self.iter() {
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BusId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BranchId(pub u32);

impl fmt::Display for BusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "bus {}", self.0)
    }
}

impl fmt::Display for BranchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "branch {}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Base {
    /// Three-phase apparent power base.
    pub kva: f64,
    /// Line-to-line voltage base.
    pub kv: f64,
}

impl Base {
    pub fn z_ohm(&self) -> f64 {
        self.kv * self.kv * 1000.0 / self.kva
    }

    /// Per-phase power base in kW.
    pub fn phase_kw(&self) -> f64 {
        self.kva / 3.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bus {
    pub id: BusId,
    pub phases: PhaseSet,
}

/// A line section oriented away from the reference bus.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub id: BranchId,
    pub from: BusId,
    pub to: BusId,
    pub phases: PhaseSet,
    /// Per-unit series resistance; rows/columns of absent phases are zero.
    pub r: [[f64; 3]; 3],
    pub x: [[f64; 3]; 3],
}

impl Branch {
    pub fn z(&self, s: Phase, p: Phase) -> Complex64 {
        Complex64::new(self.r[s.index()][p.index()], self.x[s.index()][p.index()])
    }
}

/// Rated (nominal) load of one bus, per phase, per-unit.
#[derive(Clone, Debug, PartialEq)]
pub struct Load {
    pub bus: BusId,
    pub p: [f64; 3],
    pub q: [f64; 3],
}

/// Validated radial feeder, per-unit.
#[derive(Clone, Debug)]
pub struct ThreePhaseNetwork {
    pub name: String,
    pub base: Base,
    buses: Vec<Bus>,
    branches: Vec<Branch>,
    reference: BusId,
    /// Slack voltage per phase (zero for absent phases).
    slack: [Complex64; 3],
    loads: Vec<Load>,
    bus_pos: HashMap<BusId, usize>,
    branch_pos: HashMap<BranchId, usize>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    order: Vec<usize>,
    bus_phases: Vec<(usize, Phase)>,
    branch_phases: Vec<(usize, Phase)>,
    bus_phase_pos: HashMap<(usize, Phase), usize>,
    branch_phase_pos: HashMap<(usize, Phase), usize>,
}

impl PartialEq for ThreePhaseNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.base == other.base
            && self.buses == other.buses
            && self.branches == other.branches
            && self.reference == other.reference
            && self.slack == other.slack
            && self.loads == other.loads
    }
}

/// Index of a (bus, phase) pair in [`ThreePhaseNetwork::bus_phases`].
pub type BusPhase = usize;
/// Index of a (branch, phase) pair in [`ThreePhaseNetwork::branch_phases`].
pub type BranchPhase = usize;

impl ThreePhaseNetwork {
    /// Validates topology and impedances. Branches must point away from
    /// `reference`, and each branch carries exactly the phases of its
    /// receiving bus.
    pub fn new(
        name: impl Into<String>,
        base: Base,
        buses: Vec<Bus>,
        branches: Vec<Branch>,
        reference: BusId,
        slack: [Complex64; 3],
        loads: Vec<Load>,
    ) -> Result<Self, NetworkError> {
        let mut bus_pos = HashMap::new();
        for (i, b) in buses.iter().enumerate() {
            if bus_pos.insert(b.id, i).is_some() {
                return Err(NetworkError::Parse(format!("duplicate {}", b.id)));
            }
            if b.phases.is_empty() {
                return Err(NetworkError::Parse(format!("{} has no phases", b.id)));
            }
        }
        let Some(&root) = bus_pos.get(&reference) else {
            return Err(NetworkError::Parse(format!(
                "reference {reference} is not a declared bus"
            )));
        };
        let mut branch_pos = HashMap::new();
        let mut parent = vec![None; buses.len()];
        let mut children = vec![Vec::new(); buses.len()];
        for (k, br) in branches.iter().enumerate() {
            if branch_pos.insert(br.id, k).is_some() {
                return Err(NetworkError::Parse(format!("duplicate {}", br.id)));
            }
            let (Some(&f), Some(&t)) = (bus_pos.get(&br.from), bus_pos.get(&br.to)) else {
                return Err(NetworkError::Parse(format!(
                    "{} connects an undeclared bus ({} -> {})",
                    br.id, br.from.0, br.to.0
                )));
            };
            if f == t {
                return Err(NetworkError::NonRadialTopology(format!(
                    "{} is a self-loop at {}",
                    br.id, br.from
                )));
            }
            if t == root {
                return Err(NetworkError::NonRadialTopology(format!(
                    "{} feeds into the reference bus",
                    br.id
                )));
            }
            if let Some(other) = parent[t] {
                let other: &Branch = &branches[other];
                return Err(NetworkError::NonRadialTopology(format!(
                    "{} and {} both feed {}",
                    other.id, br.id, br.to
                )));
            }
            parent[t] = Some(k);
            children[f].push(k);
            validate_impedance(br)?;
            if br.phases != buses[t].phases || !br.phases.is_subset_of(buses[f].phases) {
                return Err(NetworkError::Parse(format!(
                    "{} carries phases {} but connects {} ({}) to {} ({})",
                    br.id, br.phases, br.from, buses[f].phases, br.to, buses[t].phases
                )));
            }
        }
        // breadth-first order from the root; unreachable buses imply a cycle
        // or a disconnected island
        let mut order = Vec::with_capacity(buses.len());
        let mut queue = VecDeque::from([root]);
        let mut seen = vec![false; buses.len()];
        seen[root] = true;
        while let Some(b) = queue.pop_front() {
            order.push(b);
            for &k in &children[b] {
                let t = bus_pos[&branches[k].to];
                if !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
        if order.len() != buses.len() {
            let stray: Vec<String> = buses
                .iter()
                .enumerate()
                .filter(|(i, _)| !seen[*i])
                .map(|(_, b)| b.id.0.to_string())
                .collect();
            return Err(NetworkError::NonRadialTopology(format!(
                "buses not reachable from the reference: {}",
                stray.join(", ")
            )));
        }

        for l in &loads {
            let Some(&b) = bus_pos.get(&l.bus) else {
                return Err(NetworkError::Parse(format!("load at undeclared {}", l.bus)));
            };
            for p in Phase::ALL {
                if !buses[b].phases.contains(p) && (l.p[p.index()] != 0.0 || l.q[p.index()] != 0.0)
                {
                    return Err(NetworkError::Parse(format!(
                        "load at {} on absent phase {p}",
                        l.bus
                    )));
                }
            }
        }

        let mut bus_phases = Vec::new();
        for (i, b) in buses.iter().enumerate() {
            for p in b.phases.iter() {
                bus_phases.push((i, p));
            }
        }
        let mut branch_phases = Vec::new();
        for (k, br) in branches.iter().enumerate() {
            for p in br.phases.iter() {
                branch_phases.push((k, p));
            }
        }
        let bus_phase_pos = bus_phases.iter().enumerate().map(|(i, k)| (*k, i)).collect();
        let branch_phase_pos = branch_phases
            .iter()
            .enumerate()
            .map(|(i, k)| (*k, i))
            .collect();

        Ok(ThreePhaseNetwork {
            name: name.into(),
            base,
            buses,
            branches,
            reference,
            slack,
            loads,
            bus_pos,
            branch_pos,
            parent,
            children,
            order,
            bus_phases,
            branch_phases,
            bus_phase_pos,
            branch_phase_pos,
        })
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn loads(&self) -> &[Load] {
        &self.loads
    }

    pub fn reference(&self) -> BusId {
        self.reference
    }

    pub fn reference_index(&self) -> usize {
        self.bus_pos[&self.reference]
    }

    pub fn slack_voltage(&self, p: Phase) -> Complex64 {
        self.slack[p.index()]
    }

    pub fn bus_index(&self, id: BusId) -> Option<usize> {
        self.bus_pos.get(&id).copied()
    }

    pub fn branch_index(&self, id: BranchId) -> Option<usize> {
        self.branch_pos.get(&id).copied()
    }

    /// Branch feeding bus `bus` (by index), `None` for the reference.
    pub fn parent_branch(&self, bus: usize) -> Option<usize> {
        self.parent[bus]
    }

    pub fn child_branches(&self, bus: usize) -> &[usize] {
        &self.children[bus]
    }

    /// Bus indices in breadth-first order from the reference.
    pub fn bfs_order(&self) -> &[usize] {
        &self.order
    }

    pub fn from_index(&self, branch: usize) -> usize {
        self.bus_pos[&self.branches[branch].from]
    }

    pub fn to_index(&self, branch: usize) -> usize {
        self.bus_pos[&self.branches[branch].to]
    }

    /// All (bus index, phase) pairs, bus-major in declaration order.
    pub fn bus_phases(&self) -> &[(usize, Phase)] {
        &self.bus_phases
    }

    pub fn branch_phases(&self) -> &[(usize, Phase)] {
        &self.branch_phases
    }

    pub fn bus_phase(&self, bus: usize, p: Phase) -> Option<BusPhase> {
        self.bus_phase_pos.get(&(bus, p)).copied()
    }

    pub fn branch_phase(&self, branch: usize, p: Phase) -> Option<BranchPhase> {
        self.branch_phase_pos.get(&(branch, p)).copied()
    }

    /// Rated load at a bus phase, `(0, 0)` when none is declared.
    pub fn rated_load(&self, bus: usize, p: Phase) -> (f64, f64) {
        let id = self.buses[bus].id;
        self.loads
            .iter()
            .filter(|l| l.bus == id)
            .fold((0.0, 0.0), |(a, b), l| {
                (a + l.p[p.index()], b + l.q[p.index()])
            })
    }

    /// Bus indices of the subtree rooted at `bus`, including `bus`.
    pub fn subtree(&self, bus: usize) -> Vec<usize> {
        let mut out = vec![bus];
        let mut i = 0;
        while i < out.len() {
            let b = out[i];
            for &k in &self.children[b] {
                out.push(self.to_index(k));
            }
            i += 1;
        }
        out
    }
}

fn validate_impedance(br: &Branch) -> Result<(), NetworkError> {
    for (name, m) in [("r", &br.r), ("x", &br.x)] {
        let scale = m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        for i in 0..3 {
            for j in 0..3 {
                if (m[i][j] - m[j][i]).abs() > 1e-12 * scale.max(1e-300) {
                    return Err(NetworkError::AsymmetricImpedance {
                        branch: br.id.0,
                        detail: format!("{name}[{i}][{j}] = {} but {name}[{j}][{i}] = {}", m[i][j], m[j][i]),
                    });
                }
            }
        }
        for p in br.phases.iter() {
            let d = m[p.index()][p.index()];
            if !(d > 0.0) {
                return Err(NetworkError::AsymmetricImpedance {
                    branch: br.id.0,
                    detail: format!("diagonal {name} on phase {p} must be positive, got {d}"),
                });
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// measurements

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementKind {
    /// Squared voltage magnitude at a bus.
    VSq,
    /// Active bus power (load convention).
    PInj,
    /// Reactive bus power (load convention).
    QInj,
    /// Squared branch current magnitude.
    LSq,
    /// Active power entering a branch at its sending end.
    PFlow,
    /// Reactive power entering a branch at its sending end.
    QFlow,
}

impl MeasurementKind {
    pub fn on_branch(self) -> bool {
        matches!(
            self,
            MeasurementKind::LSq | MeasurementKind::PFlow | MeasurementKind::QFlow
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            MeasurementKind::VSq => "v_sq",
            MeasurementKind::PInj => "p_inj",
            MeasurementKind::QInj => "q_inj",
            MeasurementKind::LSq => "l_sq",
            MeasurementKind::PFlow => "p_flow",
            MeasurementKind::QFlow => "q_flow",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Location {
    Bus(BusId),
    Branch(BranchId),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Bus(b) => b.fmt(f),
            Location::Branch(b) => b.fmt(f),
        }
    }
}

/// Serialized as `"bus:<id>"` or `"branch:<id>"`.
impl Serialize for Location {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Location::Bus(b) => s.serialize_str(&format!("bus:{}", b.0)),
            Location::Branch(b) => s.serialize_str(&format!("branch:{}", b.0)),
        }
    }
}

impl<'de> Deserialize<'de> for Location {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let bad = || serde::de::Error::custom(format!("bad location {s:?}"));
        let (kind, id) = s.split_once(':').ok_or_else(bad)?;
        let id: u32 = id.parse().map_err(|_| bad())?;
        match kind {
            "bus" => Ok(Location::Bus(BusId(id))),
            "branch" => Ok(Location::Branch(BranchId(id))),
            _ => Err(bad()),
        }
    }
}

/// One bounded-error measurement, per-unit. The true value lies in
/// `[value - err_hi, value - err_lo]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    pub kind: MeasurementKind,
    pub location: Location,
    pub phase: Phase,
    pub value: f64,
    pub err_lo: f64,
    pub err_hi: f64,
    pub is_pseudo: bool,
}

impl Measurement {
    pub fn interval(&self) -> Interval {
        Interval::from_sorted_unchecked(self.value - self.err_hi, self.value - self.err_lo)
    }

    /// Symmetric error of `fraction * |reference|` around `value`.
    pub fn with_relative_error(
        kind: MeasurementKind,
        location: Location,
        phase: Phase,
        value: f64,
        reference: f64,
        fraction: f64,
        is_pseudo: bool,
    ) -> Self {
        let e = fraction * reference.abs();
        Measurement {
            kind,
            location,
            phase,
            value,
            err_lo: -e,
            err_hi: e,
            is_pseudo,
        }
    }

    pub fn label(&self) -> String {
        format!("{}@{}.{}", self.kind.name(), self.location, self.phase)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MeasurementSet {
    pub items: Vec<Measurement>,
}

impl MeasurementSet {
    pub fn new(items: Vec<Measurement>) -> Self {
        MeasurementSet { items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn intervals(&self) -> Vec<Interval> {
        self.items.iter().map(Measurement::interval).collect()
    }

    /// Checks locations, phases, error ordering and duplicates.
    pub fn validate(&self, net: &ThreePhaseNetwork) -> Result<(), NetworkError> {
        let mut seen = BTreeSet::new();
        for (index, m) in self.items.iter().enumerate() {
            let phases = match (m.kind.on_branch(), m.location) {
                (false, Location::Bus(b)) => {
                    let Some(i) = net.bus_index(b) else {
                        return Err(NetworkError::UnknownLocation {
                            index,
                            detail: format!("{b} does not exist"),
                        });
                    };
                    if i == net.reference_index()
                        && matches!(m.kind, MeasurementKind::PInj | MeasurementKind::QInj)
                    {
                        return Err(NetworkError::UnsupportedMeasurement {
                            index,
                            detail: "bus power at the reference bus; use p_flow/q_flow on its branches".into(),
                        });
                    }
                    net.buses()[i].phases
                }
                (true, Location::Branch(b)) => {
                    let Some(k) = net.branch_index(b) else {
                        return Err(NetworkError::UnknownLocation {
                            index,
                            detail: format!("{b} does not exist"),
                        });
                    };
                    net.branches()[k].phases
                }
                _ => {
                    return Err(NetworkError::UnknownLocation {
                        index,
                        detail: format!("{} cannot be placed at {}", m.kind.name(), m.location),
                    })
                }
            };
            if !phases.contains(m.phase) {
                return Err(NetworkError::UnknownLocation {
                    index,
                    detail: format!("{} has no phase {}", m.location, m.phase),
                });
            }
            if !(m.err_lo <= 0.0 && 0.0 <= m.err_hi) || !m.value.is_finite() {
                return Err(NetworkError::EmptyErrorInterval {
                    index,
                    detail: format!(
                        "{}: errors [{}, {}] must satisfy err_lo <= 0 <= err_hi",
                        m.label(),
                        m.err_lo,
                        m.err_hi
                    ),
                });
            }
            if !seen.insert((m.kind, m.location, m.phase)) {
                return Err(NetworkError::DuplicateMeasurement {
                    index,
                    detail: m.label(),
                });
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// state boxes

/// Interval state: voltages per bus phase, currents per branch phase,
/// aligned with [`ThreePhaseNetwork::bus_phases`] / `branch_phases`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateBox {
    pub e: Vec<Interval>,
    pub f: Vec<Interval>,
    pub i_re: Vec<Interval>,
    pub i_im: Vec<Interval>,
}

impl StateBox {
    /// Classic interval extension of `e^2 + f^2`.
    pub fn v_sq(&self, bp: BusPhase) -> Interval {
        self.e[bp].sqr() + self.f[bp].sqr()
    }

    pub fn contains(&self, x: &StatePoint) -> bool {
        let all = |iv: &[Interval], v: &[f64]| iv.iter().zip(v).all(|(i, x)| i.contains(*x));
        all(&self.e, &x.e) && all(&self.f, &x.f) && all(&self.i_re, &x.i_re) && all(&self.i_im, &x.i_im)
    }
}

/// Point state with the same layout as [`StateBox`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatePoint {
    pub e: Vec<f64>,
    pub f: Vec<f64>,
    pub i_re: Vec<f64>,
    pub i_im: Vec<f64>,
}

impl StatePoint {
    pub fn v_sq(&self, bp: BusPhase) -> f64 {
        self.e[bp] * self.e[bp] + self.f[bp] * self.f[bp]
    }

    pub fn voltage(&self, bp: BusPhase) -> Complex64 {
        Complex64::new(self.e[bp], self.f[bp])
    }

    pub fn current(&self, brp: BranchPhase) -> Complex64 {
        Complex64::new(self.i_re[brp], self.i_im[brp])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialBoxConfig {
    pub v_min: f64,
    pub v_max: f64,
    /// Half-width of the angle band around each phase's nominal angle.
    pub angle_deg: f64,
    /// Voltage floor used to turn downstream power into a current bound.
    pub current_voltage_floor: f64,
}

impl Default for InitialBoxConfig {
    fn default() -> Self {
        InitialBoxConfig {
            v_min: 0.9,
            v_max: 1.1,
            angle_deg: 5.0,
            current_voltage_floor: 0.9,
        }
    }
}

/// Range of `u * cos(phi)` and `u * sin(phi)` over an annular sector.
fn sector_rect(u: (f64, f64), phi: (f64, f64)) -> (Interval, Interval) {
    let mut angles = vec![phi.0, phi.1];
    let quarter = std::f64::consts::FRAC_PI_2;
    let mut k = (phi.0 / quarter).ceil();
    while k * quarter <= phi.1 {
        angles.push(k * quarter);
        k += 1.0;
    }
    let (mut e_lo, mut e_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut f_lo, mut f_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &a in &angles {
        for r in [u.0, u.1] {
            let (e, f) = (r * a.cos(), r * a.sin());
            e_lo = e_lo.min(e);
            e_hi = e_hi.max(e);
            f_lo = f_lo.min(f);
            f_hi = f_hi.max(f);
        }
    }
    (
        Interval::from_sorted_unchecked(e_lo, e_hi),
        Interval::from_sorted_unchecked(f_lo, f_hi),
    )
}

/// Initial box: voltage rectangles enclosing `|V| in [v_min, v_max]` and
/// `angle in nominal +- angle_deg`; branch currents bounded by downstream
/// apparent power over the voltage floor. The reference bus is fixed.
pub fn initial_state_box(
    net: &ThreePhaseNetwork,
    meas: &MeasurementSet,
    cfg: &InitialBoxConfig,
) -> StateBox {
    let mut e = Vec::with_capacity(net.bus_phases().len());
    let mut f = Vec::with_capacity(net.bus_phases().len());
    let root = net.reference_index();
    for &(bus, p) in net.bus_phases() {
        if bus == root {
            let v = net.slack_voltage(p);
            e.push(Interval::point(v.re));
            f.push(Interval::point(v.im));
        } else {
            let nominal = net.slack_voltage(p).arg();
            let half = cfg.angle_deg.to_radians();
            let (ei, fi) = sector_rect((cfg.v_min, cfg.v_max), (nominal - half, nominal + half));
            e.push(ei);
            f.push(fi);
        }
    }

    // worst-case |S| per bus phase from the P/Q measurement intervals
    let mut p_mag: HashMap<(usize, Phase), f64> = HashMap::new();
    let mut q_mag: HashMap<(usize, Phase), f64> = HashMap::new();
    for m in &meas.items {
        if let Location::Bus(b) = m.location {
            let Some(i) = net.bus_index(b) else { continue };
            match m.kind {
                MeasurementKind::PInj => {
                    p_mag.insert((i, m.phase), m.interval().mag());
                }
                MeasurementKind::QInj => {
                    q_mag.insert((i, m.phase), m.interval().mag());
                }
                _ => {}
            }
        }
    }
    let mut i_re = Vec::with_capacity(net.branch_phases().len());
    let mut i_im = Vec::with_capacity(net.branch_phases().len());
    for &(k, p) in net.branch_phases() {
        let s: f64 = net
            .subtree(net.to_index(k))
            .into_iter()
            .map(|b| {
                let pm = p_mag.get(&(b, p)).copied().unwrap_or(0.0);
                let qm = q_mag.get(&(b, p)).copied().unwrap_or(0.0);
                pm.hypot(qm)
            })
            .sum();
        let bound = s / cfg.current_voltage_floor;
        let iv = Interval::from_sorted_unchecked(-bound, bound);
        i_re.push(iv);
        i_im.push(iv);
    }
    StateBox { e, f, i_re, i_im }
}

// ---------------------------------------------------------------------------
// JSON documents

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeederDocument {
    pub format_version: u32,
    #[serde(default)]
    pub name: String,
    pub base: Base,
    pub reference: ReferenceDoc,
    pub buses: Vec<BusDoc>,
    pub branches: Vec<BranchDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub loads: Vec<LoadDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub measurements: Vec<MeasurementDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceDoc {
    pub bus: u32,
    /// Per-phase magnitude (p.u.), in phase order of the bus.
    pub voltage_pu: Vec<f64>,
    /// Per-phase angle in degrees; defaults to 0 / -120 / 120.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle_deg: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusDoc {
    pub id: u32,
    pub phases: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchDoc {
    pub id: u32,
    pub from: u32,
    pub to: u32,
    /// Square matrix over the branch phases, ohms.
    pub r_ohm: Vec<Vec<f64>>,
    pub x_ohm: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadDoc {
    pub bus: u32,
    /// Per-phase kW in phase order of the bus.
    pub p_kw: Vec<f64>,
    pub q_kvar: Vec<f64>,
}

/// Measurement entry. Values are per-unit. Missing error bounds default to
/// +-1% of the value for real meters and +-10% of `rated` for pseudo ones.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementDoc {
    pub kind: MeasurementDocKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bus: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<Phase>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rated: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub err_lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub err_hi: Option<f64>,
    #[serde(default)]
    pub pseudo: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementDocKind {
    VSq,
    PInj,
    QInj,
    LSq,
    PFlow,
    QFlow,
    /// Expands to exact zero P and Q on every phase of the bus.
    ZeroInjection,
}

/// Accuracy classes applied when a measurement omits its error bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyClasses {
    pub real: f64,
    pub pseudo: f64,
}

impl Default for AccuracyClasses {
    fn default() -> Self {
        AccuracyClasses {
            real: 0.01,
            pseudo: 0.10,
        }
    }
}

fn phase_vec(phases: PhaseSet, values: &[f64], what: &str) -> Result<[f64; 3], NetworkError> {
    if values.len() != phases.len() {
        return Err(NetworkError::Parse(format!(
            "{what}: expected {} values for phases {phases}, got {}",
            phases.len(),
            values.len()
        )));
    }
    let mut out = [0.0; 3];
    for (p, v) in phases.iter().zip(values) {
        out[p.index()] = *v;
    }
    Ok(out)
}

fn phase_matrix(
    phases: PhaseSet,
    rows: &[Vec<f64>],
    scale: f64,
    what: &str,
) -> Result<[[f64; 3]; 3], NetworkError> {
    let n = phases.len();
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(NetworkError::Parse(format!(
            "{what}: expected a {n}x{n} matrix for phases {phases}"
        )));
    }
    let ps: Vec<Phase> = phases.iter().collect();
    let mut out = [[0.0; 3]; 3];
    for (i, pi) in ps.iter().enumerate() {
        for (j, pj) in ps.iter().enumerate() {
            out[pi.index()][pj.index()] = rows[i][j] / scale;
        }
    }
    Ok(out)
}

impl FeederDocument {
    pub fn parse(text: &str) -> Result<Self, NetworkError> {
        let doc: FeederDocument =
            serde_json::from_str(text).map_err(|e| NetworkError::Parse(e.to_string()))?;
        if doc.format_version != FORMAT_VERSION {
            return Err(NetworkError::Parse(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                doc.format_version
            )));
        }
        Ok(doc)
    }

    pub fn to_network(&self) -> Result<ThreePhaseNetwork, NetworkError> {
        let base = self.base;
        if !(base.kva > 0.0 && base.kv > 0.0) {
            return Err(NetworkError::Parse("base kva and kv must be positive".into()));
        }
        let mut buses = Vec::new();
        let mut phases_of = HashMap::new();
        for b in &self.buses {
            let phases = PhaseSet::parse(&b.phases)
                .ok_or_else(|| NetworkError::Parse(format!("bus {}: bad phases {:?}", b.id, b.phases)))?;
            phases_of.insert(b.id, phases);
            buses.push(Bus {
                id: BusId(b.id),
                phases,
            });
        }
        let z_base = base.z_ohm();
        let mut branches = Vec::new();
        for br in &self.branches {
            let phases = *phases_of.get(&br.to).ok_or_else(|| {
                NetworkError::Parse(format!("branch {}: unknown to-bus {}", br.id, br.to))
            })?;
            let what = format!("branch {}", br.id);
            branches.push(Branch {
                id: BranchId(br.id),
                from: BusId(br.from),
                to: BusId(br.to),
                phases,
                r: phase_matrix(phases, &br.r_ohm, z_base, &what)?,
                x: phase_matrix(phases, &br.x_ohm, z_base, &what)?,
            });
        }
        let ref_phases = *phases_of.get(&self.reference.bus).ok_or_else(|| {
            NetworkError::Parse(format!("reference bus {} is not declared", self.reference.bus))
        })?;
        let mags = phase_vec(ref_phases, &self.reference.voltage_pu, "reference voltage")?;
        let angles = match &self.reference.angle_deg {
            Some(a) => phase_vec(ref_phases, a, "reference angle")?,
            None => [0.0, -120.0, 120.0],
        };
        let mut slack = [Complex64::new(0.0, 0.0); 3];
        for p in ref_phases.iter() {
            slack[p.index()] = Complex64::from_polar(mags[p.index()], angles[p.index()].to_radians());
        }
        // phase a exactly on the real axis
        if ref_phases.contains(Phase::A) && angles[0] == 0.0 {
            slack[0] = Complex64::new(mags[0], 0.0);
        }
        let s_base = base.phase_kw();
        let mut loads = Vec::new();
        for l in &self.loads {
            let phases = *phases_of
                .get(&l.bus)
                .ok_or_else(|| NetworkError::Parse(format!("load at unknown bus {}", l.bus)))?;
            let what = format!("load at bus {}", l.bus);
            let p = phase_vec(phases, &l.p_kw, &what)?;
            let q = phase_vec(phases, &l.q_kvar, &what)?;
            loads.push(Load {
                bus: BusId(l.bus),
                p: p.map(|v| v / s_base),
                q: q.map(|v| v / s_base),
            });
        }
        ThreePhaseNetwork::new(
            self.name.clone(),
            base,
            buses,
            branches,
            BusId(self.reference.bus),
            slack,
            loads,
        )
    }

    /// Physical-unit document for a network (measurements left empty).
    pub fn from_network(net: &ThreePhaseNetwork) -> Self {
        let z_base = net.base.z_ohm();
        let s_base = net.base.phase_kw();
        let ref_bus = &net.buses[net.reference_index()];
        let slack: Vec<Complex64> = ref_bus.phases.iter().map(|p| net.slack_voltage(p)).collect();
        let angle_deg: Vec<f64> = slack.iter().map(|v| v.arg().to_degrees()).collect();
        let default_angles: Vec<f64> = ref_bus
            .phases
            .iter()
            .map(|p| [0.0, -120.0, 120.0][p.index()])
            .collect();
        let angles_default = angle_deg
            .iter()
            .zip(&default_angles)
            .all(|(a, d)| (a - d).abs() < 1e-9);
        let mat = |phases: PhaseSet, m: &[[f64; 3]; 3]| -> Vec<Vec<f64>> {
            phases
                .iter()
                .map(|i| phases.iter().map(|j| m[i.index()][j.index()] * z_base).collect())
                .collect()
        };
        FeederDocument {
            format_version: FORMAT_VERSION,
            name: net.name.clone(),
            base: net.base,
            reference: ReferenceDoc {
                bus: net.reference.0,
                voltage_pu: slack.iter().map(|v| v.norm()).collect(),
                angle_deg: (!angles_default).then_some(angle_deg),
            },
            buses: net
                .buses
                .iter()
                .map(|b| BusDoc {
                    id: b.id.0,
                    phases: b.phases.to_string(),
                })
                .collect(),
            branches: net
                .branches
                .iter()
                .map(|br| BranchDoc {
                    id: br.id.0,
                    from: br.from.0,
                    to: br.to.0,
                    r_ohm: mat(br.phases, &br.r),
                    x_ohm: mat(br.phases, &br.x),
                })
                .collect(),
            loads: net
                .loads
                .iter()
                .map(|l| {
                    let phases = net.buses[net.bus_pos[&l.bus]].phases;
                    LoadDoc {
                        bus: l.bus.0,
                        p_kw: phases.iter().map(|p| l.p[p.index()] * s_base).collect(),
                        q_kvar: phases.iter().map(|p| l.q[p.index()] * s_base).collect(),
                    }
                })
                .collect(),
            measurements: Vec::new(),
        }
    }
}

fn read_file(path: &Path) -> Result<String, NetworkError> {
    std::fs::read_to_string(path).map_err(|source| NetworkError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_network(path: impl AsRef<Path>) -> Result<ThreePhaseNetwork, NetworkError> {
    FeederDocument::parse(&read_file(path.as_ref())?)?.to_network()
}

pub fn network_from_str(text: &str) -> Result<ThreePhaseNetwork, NetworkError> {
    FeederDocument::parse(text)?.to_network()
}

pub fn network_to_string(net: &ThreePhaseNetwork) -> String {
    serde_json::to_string_pretty(&FeederDocument::from_network(net)).expect("serializable")
}

pub fn save_network(net: &ThreePhaseNetwork, path: impl AsRef<Path>) -> std::io::Result<()> {
    crate::report::write_atomic(path.as_ref(), network_to_string(net).as_bytes())
}

/// The `measurements` array of a document; other fields are ignored so a
/// full feeder document works as well as a measurements-only one.
#[derive(Deserialize)]
struct MeasurementsOnly {
    format_version: u32,
    #[serde(default)]
    measurements: Vec<MeasurementDoc>,
}

pub fn load_measurements(
    path: impl AsRef<Path>,
    net: &ThreePhaseNetwork,
) -> Result<MeasurementSet, NetworkError> {
    measurements_from_str(&read_file(path.as_ref())?, net)
}

pub fn measurements_from_str(
    text: &str,
    net: &ThreePhaseNetwork,
) -> Result<MeasurementSet, NetworkError> {
    let doc: MeasurementsOnly =
        serde_json::from_str(text).map_err(|e| NetworkError::Parse(e.to_string()))?;
    if doc.format_version != FORMAT_VERSION {
        return Err(NetworkError::Parse(format!(
            "unsupported format_version {}",
            doc.format_version
        )));
    }
    measurements_from_docs(&doc.measurements, net, AccuracyClasses::default())
}

pub fn measurements_from_docs(
    docs: &[MeasurementDoc],
    net: &ThreePhaseNetwork,
    acc: AccuracyClasses,
) -> Result<MeasurementSet, NetworkError> {
    let mut items = Vec::new();
    for (index, d) in docs.iter().enumerate() {
        let location = match (d.bus, d.branch) {
            (Some(b), None) => Location::Bus(BusId(b)),
            (None, Some(b)) => Location::Branch(BranchId(b)),
            _ => {
                return Err(NetworkError::UnknownLocation {
                    index,
                    detail: "exactly one of `bus` or `branch` is required".into(),
                })
            }
        };
        let kind = match d.kind {
            MeasurementDocKind::ZeroInjection => {
                let Location::Bus(bus) = location else {
                    return Err(NetworkError::UnknownLocation {
                        index,
                        detail: "zero_injection needs a bus".into(),
                    });
                };
                let Some(bi) = net.bus_index(bus) else {
                    return Err(NetworkError::UnknownLocation {
                        index,
                        detail: format!("{bus} does not exist"),
                    });
                };
                let phases: Vec<Phase> = match d.phase {
                    Some(p) => vec![p],
                    None => net.buses()[bi].phases.iter().collect(),
                };
                for phase in phases {
                    for kind in [MeasurementKind::PInj, MeasurementKind::QInj] {
                        items.push(Measurement {
                            kind,
                            location,
                            phase,
                            value: 0.0,
                            err_lo: 0.0,
                            err_hi: 0.0,
                            is_pseudo: true,
                        });
                    }
                }
                continue;
            }
            MeasurementDocKind::VSq => MeasurementKind::VSq,
            MeasurementDocKind::PInj => MeasurementKind::PInj,
            MeasurementDocKind::QInj => MeasurementKind::QInj,
            MeasurementDocKind::LSq => MeasurementKind::LSq,
            MeasurementDocKind::PFlow => MeasurementKind::PFlow,
            MeasurementDocKind::QFlow => MeasurementKind::QFlow,
        };
        let phase = d.phase.ok_or_else(|| NetworkError::UnknownLocation {
            index,
            detail: "missing `phase`".into(),
        })?;
        let value = d.value.or(d.rated).ok_or_else(|| {
            NetworkError::Parse(format!("measurement #{index}: needs `value` or `rated`"))
        })?;
        let (err_lo, err_hi) = match (d.err_lo, d.err_hi) {
            (Some(lo), Some(hi)) => (lo, hi),
            (None, None) => {
                let e = if d.pseudo {
                    acc.pseudo * d.rated.unwrap_or(value).abs()
                } else {
                    acc.real * value.abs()
                };
                (-e, e)
            }
            _ => {
                return Err(NetworkError::EmptyErrorInterval {
                    index,
                    detail: "give both err_lo and err_hi or neither".into(),
                })
            }
        };
        items.push(Measurement {
            kind,
            location,
            phase,
            value,
            err_lo,
            err_hi,
            is_pseudo: d.pseudo,
        });
    }
    let set = MeasurementSet { items };
    set.validate(net)?;
    Ok(set)
}

/// Explicit-bound documents for a measurement set.
pub fn measurement_docs(set: &MeasurementSet) -> Vec<MeasurementDoc> {
    set.items
        .iter()
        .map(|m| {
            let (bus, branch) = match m.location {
                Location::Bus(b) => (Some(b.0), None),
                Location::Branch(b) => (None, Some(b.0)),
            };
            MeasurementDoc {
                kind: match m.kind {
                    MeasurementKind::VSq => MeasurementDocKind::VSq,
                    MeasurementKind::PInj => MeasurementDocKind::PInj,
                    MeasurementKind::QInj => MeasurementDocKind::QInj,
                    MeasurementKind::LSq => MeasurementDocKind::LSq,
                    MeasurementKind::PFlow => MeasurementDocKind::PFlow,
                    MeasurementKind::QFlow => MeasurementDocKind::QFlow,
                },
                bus,
                branch,
                phase: Some(m.phase),
                value: Some(m.value),
                rated: None,
                err_lo: Some(m.err_lo),
                err_hi: Some(m.err_hi),
                pseudo: m.is_pseudo,
            }
        })
        .collect()
}

/// Serializes a measurement set as a standalone document.
pub fn measurements_to_string(set: &MeasurementSet) -> String {
    let mut map = BTreeMap::new();
    map.insert("format_version", serde_json::json!(FORMAT_VERSION));
    map.insert(
        "measurements",
        serde_json::to_value(measurement_docs(set)).expect("serializable"),
    );
    serde_json::to_string_pretty(&map).expect("serializable")
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const TWO_BUS: &str = r#"{
        "format_version": 1,
        "name": "two-bus",
        "base": {"kva": 3000.0, "kv": 1.0},
        "reference": {"bus": 1, "voltage_pu": [1.0]},
        "buses": [{"id": 1, "phases": "a"}, {"id": 2, "phases": "a"}],
        "branches": [{"id": 1, "from": 1, "to": 2, "r_ohm": [[0.00333333333333]], "x_ohm": [[0.00666666666667]]}],
        "loads": [{"bus": 2, "p_kw": [100.0], "q_kvar": [50.0]}]
    }"#;

    fn diag_doc(loop_branch: bool) -> String {
        let extra = if loop_branch {
            r#",{"id": 3, "from": 3, "to": 2, "r_ohm": [[0.01]], "x_ohm": [[0.02]]}"#
        } else {
            ""
        };
        format!(
            r#"{{
            "format_version": 1,
            "base": {{"kva": 1000.0, "kv": 1.0}},
            "reference": {{"bus": 1, "voltage_pu": [1.0]}},
            "buses": [{{"id": 1, "phases": "a"}}, {{"id": 2, "phases": "a"}}, {{"id": 3, "phases": "a"}}],
            "branches": [
                {{"id": 1, "from": 1, "to": 2, "r_ohm": [[0.01]], "x_ohm": [[0.02]]}},
                {{"id": 2, "from": 2, "to": 3, "r_ohm": [[0.01]], "x_ohm": [[0.02]]}}{extra}
            ]
        }}"#
        )
    }

    #[test]
    fn smallest_network_loads() {
        let net = network_from_str(TWO_BUS).unwrap();
        assert_eq!(net.branches().len(), 1);
        assert_eq!(net.reference(), BusId(1));
        // z_base = 1 * 1000 / 3000 ohm
        assert!((net.branches()[0].r[0][0] - 0.01).abs() < 1e-12);
        assert!((net.branches()[0].x[0][0] - 0.02).abs() < 1e-12);
        assert!((net.rated_load(1, Phase::A).0 - 0.1).abs() < 1e-15);
    }

    #[test]
    fn loop_is_rejected() {
        assert!(network_from_str(&diag_doc(false)).is_ok());
        let err = network_from_str(&diag_doc(true)).unwrap_err();
        assert!(matches!(err, NetworkError::NonRadialTopology(ref m) if m.contains("branch")), "{err}");
    }

    #[test]
    fn asymmetric_and_nonpositive_impedance() {
        let doc = r#"{
            "format_version": 1,
            "base": {"kva": 1000.0, "kv": 1.0},
            "reference": {"bus": 1, "voltage_pu": [1.0, 1.0]},
            "buses": [{"id": 1, "phases": "ab"}, {"id": 2, "phases": "ab"}],
            "branches": [{"id": 7, "from": 1, "to": 2,
                "r_ohm": [[0.01, 0.002], [0.003, 0.01]], "x_ohm": [[0.02, 0.0], [0.0, 0.02]]}]
        }"#;
        let err = network_from_str(doc).unwrap_err();
        assert!(matches!(err, NetworkError::AsymmetricImpedance { branch: 7, .. }));
        let doc = doc.replace("0.003", "0.002").replace("[[0.02, 0.0]", "[[0.0, 0.0]");
        let err = network_from_str(&doc).unwrap_err();
        assert!(matches!(err, NetworkError::AsymmetricImpedance { branch: 7, .. }));
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        assert!(matches!(
            network_from_str("{\"format_version\": 1,"),
            Err(NetworkError::Parse(_))
        ));
        assert!(matches!(
            network_from_str(&TWO_BUS.replace("\"format_version\": 1", "\"format_version\": 9")),
            Err(NetworkError::Parse(_))
        ));
    }

    #[test]
    fn save_load_round_trip() {
        let net = network_from_str(TWO_BUS).unwrap();
        let again = network_from_str(&network_to_string(&net)).unwrap();
        assert_eq!(net.buses(), again.buses());
        assert_eq!(net.loads(), again.loads());
        for (a, b) in net.branches().iter().zip(again.branches()) {
            for i in 0..3 {
                for j in 0..3 {
                    assert!((a.r[i][j] - b.r[i][j]).abs() <= 1e-12 * a.r[i][j].abs());
                }
            }
        }
    }

    #[test]
    fn default_accuracy_classes() {
        let net = network_from_str(TWO_BUS).unwrap();
        let doc = r#"{"format_version": 1, "measurements": [
            {"kind": "p_inj", "bus": 2, "phase": "a", "value": 0.02},
            {"kind": "q_inj", "bus": 2, "phase": "a", "rated": 0.10, "pseudo": true}
        ]}"#;
        let set = measurements_from_str(doc, &net).unwrap();
        let p = set.items[0].interval();
        assert!((p.lo() - 0.0198).abs() < 1e-15 && (p.hi() - 0.0202).abs() < 1e-15);
        let q = set.items[1].interval();
        assert!((q.lo() - 0.09).abs() < 1e-15 && (q.hi() - 0.11).abs() < 1e-15);
    }

    #[test]
    fn zero_injection_is_degenerate() {
        let net = network_from_str(TWO_BUS).unwrap();
        let doc = r#"{"format_version": 1, "measurements": [{"kind": "zero_injection", "bus": 2}]}"#;
        let set = measurements_from_str(doc, &net).unwrap();
        assert_eq!(set.len(), 2);
        for m in &set.items {
            assert_eq!(m.interval(), Interval::ZERO);
        }
    }

    #[test]
    fn measurement_validation_errors() {
        let net = network_from_str(TWO_BUS).unwrap();
        let unknown = r#"{"format_version": 1, "measurements": [{"kind": "v_sq", "bus": 9, "phase": "a", "value": 1.0}]}"#;
        assert!(matches!(
            measurements_from_str(unknown, &net),
            Err(NetworkError::UnknownLocation { index: 0, .. })
        ));
        let wrong_phase = r#"{"format_version": 1, "measurements": [{"kind": "v_sq", "bus": 2, "phase": "b", "value": 1.0}]}"#;
        assert!(matches!(
            measurements_from_str(wrong_phase, &net),
            Err(NetworkError::UnknownLocation { .. })
        ));
        let reversed = r#"{"format_version": 1, "measurements": [{"kind": "v_sq", "bus": 2, "phase": "a", "value": 1.0, "err_lo": 0.1, "err_hi": 0.2}]}"#;
        assert!(matches!(
            measurements_from_str(reversed, &net),
            Err(NetworkError::EmptyErrorInterval { .. })
        ));
    }

    #[test]
    fn initial_box_phase_a_and_b() {
        let doc = TWO_BUS
            .replace("\"phases\": \"a\"", "\"phases\": \"abc\"")
            .replace("\"voltage_pu\": [1.0]", "\"voltage_pu\": [1.0, 1.0, 1.0]")
            .replace(
                "\"r_ohm\": [[0.00333333333333]], \"x_ohm\": [[0.00666666666667]]",
                "\"r_ohm\": [[0.01,0,0],[0,0.01,0],[0,0,0.01]], \"x_ohm\": [[0.02,0,0],[0,0.02,0],[0,0,0.02]]",
            )
            .replace("\"p_kw\": [100.0], \"q_kvar\": [50.0]", "\"p_kw\": [100.0, 0, 0], \"q_kvar\": [50.0, 0, 0]");
        let net = network_from_str(&doc).unwrap();
        let sb = initial_state_box(&net, &MeasurementSet::default(), &InitialBoxConfig::default());
        let a = net.bus_phase(1, Phase::A).unwrap();
        let s5 = 5f64.to_radians().sin();
        assert!((sb.e[a].lo() - 0.9 * 5f64.to_radians().cos()).abs() < 1e-15);
        assert!((sb.e[a].hi() - 1.1).abs() < 1e-15);
        assert!((sb.f[a].lo() + 1.1 * s5).abs() < 1e-15);
        assert!((sb.f[a].hi() - 1.1 * s5).abs() < 1e-15);
        assert!((sb.f[a].hi() - 0.0959).abs() < 1e-4);

        let b = net.bus_phase(1, Phase::B).unwrap();
        let nominal = Complex64::from_polar(1.0, (-120f64).to_radians());
        assert!(sb.e[b].contains(nominal.re) && sb.f[b].contains(nominal.im));

        let r = net.bus_phase(0, Phase::C).unwrap();
        assert!(sb.e[r].is_degenerate() && sb.f[r].is_degenerate());
        assert_eq!(sb.e[r].lo(), net.slack_voltage(Phase::C).re);
    }
}
