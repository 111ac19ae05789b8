//! Dense bounded-variable primal simplex.
//!
//! Problems have the form
//!
//! ```text
//! min / max  c'x
//! s.t.       lo_i <= a_i'x <= hi_i     (either side may be infinite)
//!            l_j  <= x_j   <= u_j      (finite)
//! ```
//!
//! Each row gets a logical variable `r_i = a_i'x` carrying the row bounds, so
//! the tableau is `[A | -I]` with every variable boxed. Phase 1 adds one
//! artificial per violated row. A feasible [`Tableau`] can be reused for any
//! number of objectives over the same constraint set, which is how the
//! contractor runs its per-variable min/max programs.
//!
//! Pricing is Dantzig (largest reduced cost, lowest index on ties) and falls
//! back to Bland's rule after a run of degenerate pivots.

use serde::{Deserialize, Serialize};

/// Primal feasibility tolerance on variable bounds.
pub const FEAS_TOL: f64 = 1e-9;
/// Phase-one residue above which a set is reported empty.
const CLEARLY_INFEASIBLE: f64 = 1e-6;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_RUN_BEFORE_BLAND: usize = 50;
const REFRESH_EVERY: usize = 64;
const REINVERT_EVERY: usize = 2048;
const HARRIS_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective_value: f64,
    pub point: Vec<f64>,
}

impl LpSolution {
    fn failed(status: LpStatus) -> Self {
        LpSolution {
            status,
            objective_value: f64::NAN,
            point: Vec::new(),
        }
    }
}

/// A linear program over boxed variables.
#[derive(Clone, Debug, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub sense: Sense,
    pub constraints: ConstraintSet,
}

impl LpProblem {
    pub fn new(objective: Vec<f64>, sense: Sense, var_bounds: Vec<(f64, f64)>) -> Self {
        assert_eq!(objective.len(), var_bounds.len());
        LpProblem {
            objective,
            sense,
            constraints: ConstraintSet::new(var_bounds),
        }
    }

    /// Adds `row . x <= rhs`.
    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) {
        self.constraints.add_row(row, f64::NEG_INFINITY, rhs);
    }

    /// Adds `lo <= row . x <= hi`.
    pub fn add_range(&mut self, row: Vec<f64>, lo: f64, hi: f64) {
        self.constraints.add_row(row, lo, hi);
    }
}

/// Rows and variable boxes, independent of any objective.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSet {
    var_bounds: Vec<(f64, f64)>,
    rows: Vec<Vec<f64>>,
    row_lo: Vec<f64>,
    row_hi: Vec<f64>,
}

impl ConstraintSet {
    pub fn new(var_bounds: Vec<(f64, f64)>) -> Self {
        for (j, (l, u)) in var_bounds.iter().enumerate() {
            assert!(
                l.is_finite() && u.is_finite() && l <= u,
                "variable {j} needs finite bounds, got [{l}, {u}]"
            );
        }
        ConstraintSet {
            var_bounds,
            rows: Vec::new(),
            row_lo: Vec::new(),
            row_hi: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.var_bounds.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn var_bounds(&self) -> &[(f64, f64)] {
        &self.var_bounds
    }

    pub fn add_row(&mut self, row: Vec<f64>, lo: f64, hi: f64) {
        assert_eq!(row.len(), self.var_bounds.len(), "row width mismatch");
        assert!(!(lo > hi), "row bounds reversed: [{lo}, {hi}]");
        self.rows.push(row);
        self.row_lo.push(lo);
        self.row_hi.push(hi);
    }

    /// Largest violation of rows and bounds at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (j, (l, u)) in self.var_bounds.iter().enumerate() {
            worst = worst.max(l - x[j]).max(x[j] - u);
        }
        for (i, row) in self.rows.iter().enumerate() {
            let v: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
            worst = worst.max(self.row_lo[i] - v).max(v - self.row_hi[i]);
        }
        worst
    }

    /// Runs phase 1 and returns a feasible tableau, or the failure status.
    pub fn feasible_tableau(&self, pivot_limit: usize) -> Result<Tableau, LpStatus> {
        Tableau::phase_one(self, pivot_limit)
    }
}

/// Abstract LP backend: problem in, solution out.
pub trait LpSolver {
    fn solve(&self, problem: &LpProblem) -> LpSolution;
}

/// The bundled dense simplex.
#[derive(Clone, Copy, Debug)]
pub struct BoundedSimplex {
    pub pivot_limit: usize,
}

impl Default for BoundedSimplex {
    fn default() -> Self {
        BoundedSimplex {
            pivot_limit: 1_000_000,
        }
    }
}

impl LpSolver for BoundedSimplex {
    fn solve(&self, problem: &LpProblem) -> LpSolution {
        match problem.constraints.feasible_tableau(self.pivot_limit) {
            Ok(mut t) => t.optimize(&problem.objective, problem.sense),
            Err(status) => LpSolution::failed(status),
        }
    }
}

pub fn solve_lp(problem: &LpProblem) -> LpSolution {
    BoundedSimplex::default().solve(problem)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
}

/// Simplex tableau `B^-1 M` with `M = [A | -I | artificials]`.
#[derive(Clone, Debug)]
pub struct Tableau {
    m: usize,
    n_struct: usize,
    ncols: usize,
    /// Row-major `m x ncols`.
    t: Vec<f64>,
    /// Original constraint matrix, kept for reinversion.
    orig: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    x_basic: Vec<f64>,
    pivots: usize,
    pivot_limit: usize,
    scratch_nz: Vec<usize>,
}

impl Tableau {
    fn phase_one(cs: &ConstraintSet, pivot_limit: usize) -> Result<Tableau, LpStatus> {
        let n = cs.num_vars();
        let kept: Vec<usize> = (0..cs.num_rows())
            .filter(|&i| cs.row_lo[i].is_finite() || cs.row_hi[i].is_finite())
            .collect();
        let m = kept.len();

        let mut x0 = vec![0.0; n];
        for (j, (l, _)) in cs.var_bounds.iter().enumerate() {
            x0[j] = *l;
        }
        // decide which rows need an artificial
        let mut art_sign = Vec::new();
        let mut art_row = Vec::new();
        let mut activity = vec![0.0; m];
        for (r, &i) in kept.iter().enumerate() {
            let v: f64 = cs.rows[i].iter().zip(&x0).map(|(a, b)| a * b).sum();
            activity[r] = v;
            if v < cs.row_lo[i] - FEAS_TOL {
                art_row.push(r);
                art_sign.push(1.0);
            } else if v > cs.row_hi[i] + FEAS_TOL {
                art_row.push(r);
                art_sign.push(-1.0);
            }
        }
        let na = art_row.len();
        let ncols = n + m + na;

        let mut orig = vec![0.0; m * ncols];
        for (r, &i) in kept.iter().enumerate() {
            let row = &mut orig[r * ncols..(r + 1) * ncols];
            row[..n].copy_from_slice(&cs.rows[i]);
            row[n + r] = -1.0;
        }
        for (a, (&r, &s)) in art_row.iter().zip(&art_sign).enumerate() {
            orig[r * ncols + n + m + a] = s;
        }

        let mut lower = Vec::with_capacity(ncols);
        let mut upper = Vec::with_capacity(ncols);
        for (l, u) in &cs.var_bounds {
            lower.push(*l);
            upper.push(*u);
        }
        for &i in &kept {
            lower.push(cs.row_lo[i]);
            upper.push(cs.row_hi[i]);
        }
        for _ in 0..na {
            lower.push(0.0);
            upper.push(f64::INFINITY);
        }

        // initial basis: logicals, except artificials on violated rows
        let mut state = vec![VarState::AtLower; ncols];
        let mut basis = vec![0; m];
        let mut t = vec![0.0; m * ncols];
        let mut x_basic = vec![0.0; m];
        let mut art_of_row = vec![None; m];
        for (a, &r) in art_row.iter().enumerate() {
            art_of_row[r] = Some(a);
        }
        for r in 0..m {
            let (src, dst) = (&orig[r * ncols..(r + 1) * ncols], &mut t[r * ncols..(r + 1) * ncols]);
            match art_of_row[r] {
                None => {
                    // basic logical: B column is -e_r
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d = -s;
                    }
                    basis[r] = n + r;
                    state[n + r] = VarState::Basic(r);
                    x_basic[r] = activity[r];
                }
                Some(a) => {
                    let s = art_sign[a];
                    for (d, v) in dst.iter_mut().zip(src) {
                        *d = s * v;
                    }
                    let logical = n + r;
                    let target = if s > 0.0 {
                        lower[logical]
                    } else {
                        upper[logical]
                    };
                    state[logical] = if s > 0.0 {
                        VarState::AtLower
                    } else {
                        VarState::AtUpper
                    };
                    basis[r] = n + m + a;
                    state[n + m + a] = VarState::Basic(r);
                    x_basic[r] = s * (target - activity[r]);
                }
            }
        }
        for j in 0..n {
            state[j] = VarState::AtLower;
        }

        let mut tab = Tableau {
            m,
            n_struct: n,
            ncols,
            t,
            orig,
            lower,
            upper,
            state,
            basis,
            x_basic,
            pivots: 0,
            pivot_limit,
            scratch_nz: Vec::with_capacity(ncols),
        };

        if na > 0 {
            let mut cost = vec![0.0; ncols];
            for c in cost.iter_mut().skip(n + m) {
                *c = 1.0;
            }
            tab.run(&cost, true)?;
            let infeas: f64 = (n + m..ncols).map(|j| tab.value(j)).sum();
            let scale = (1.0 + m as f64).sqrt();
            if infeas > CLEARLY_INFEASIBLE * scale {
                return Err(LpStatus::Infeasible);
            }
            if infeas > FEAS_TOL * scale {
                // too small to trust either way
                return Err(LpStatus::NumericalFailure);
            }
            for j in n + m..ncols {
                tab.upper[j] = 0.0;
                if tab.state[j] == VarState::AtUpper {
                    tab.state[j] = VarState::AtLower;
                }
            }
            tab.drive_out_artificials();
            tab.refresh_basic_values();
            tab.drop_artificial_columns();
        }
        Ok(tab)
    }

    pub fn num_rows(&self) -> usize {
        self.m
    }

    pub fn pivot_count(&self) -> usize {
        self.pivots
    }

    fn value(&self, j: usize) -> f64 {
        match self.state[j] {
            VarState::Basic(r) => self.x_basic[r],
            VarState::AtLower => self.lower[j],
            VarState::AtUpper => self.upper[j],
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            VarState::AtUpper => self.upper[j],
            _ => self.lower[j],
        }
    }

    fn refresh_basic_values(&mut self) {
        for r in 0..self.m {
            let row = &self.t[r * self.ncols..(r + 1) * self.ncols];
            let mut acc = 0.0;
            for (j, tv) in row.iter().enumerate() {
                if *tv != 0.0 && !matches!(self.state[j], VarState::Basic(_)) {
                    acc -= tv * self.nonbasic_value(j);
                }
            }
            self.x_basic[r] = acc;
        }
    }

    /// Rebuilds `B^-1 M` from the original matrix for the current basis.
    fn reinvert(&mut self) {
        let (m, nc) = (self.m, self.ncols);
        let mut t = vec![0.0; m * nc];
        for (d, s) in t.iter_mut().zip(&self.orig) {
            *d = -s;
        }
        let n = self.n_struct;
        // start from the all-logical basis, then pivot target columns in
        let mut row_owner: Vec<usize> = (0..m).map(|r| n + r).collect();
        let target: Vec<usize> = self.basis.clone();
        let in_target = |j: usize| target.contains(&j);
        for &j in &target {
            if row_owner.contains(&j) {
                continue;
            }
            let mut best = None;
            let mut best_mag = 0.0;
            for r in 0..m {
                if in_target(row_owner[r]) {
                    continue;
                }
                let v = t[r * nc + j].abs();
                if v > best_mag {
                    best_mag = v;
                    best = Some(r);
                }
            }
            let Some(r) = best else { continue };
            if best_mag < 1e-14 {
                continue;
            }
            pivot_rows(&mut t, nc, m, r, j, &mut self.scratch_nz);
            row_owner[r] = j;
        }
        for j in 0..nc {
            if let VarState::Basic(_) = self.state[j] {
                self.state[j] = VarState::AtLower;
            }
        }
        for (r, &j) in row_owner.iter().enumerate() {
            self.state[j] = VarState::Basic(r);
        }
        // former basics that could not re-enter keep a bound value
        for j in 0..nc {
            if matches!(self.state[j], VarState::AtLower) && !self.lower[j].is_finite() {
                self.state[j] = VarState::AtUpper;
            }
        }
        self.basis = row_owner;
        self.t = t;
        self.refresh_basic_values();
    }

    fn drive_out_artificials(&mut self) {
        let first_art = self.n_struct + self.m;
        for r in 0..self.m {
            if self.basis[r] < first_art {
                continue;
            }
            let row = &self.t[r * self.ncols..(r + 1) * self.ncols];
            let mut best = None;
            let mut best_mag = PIVOT_TOL;
            for (j, v) in row.iter().enumerate().take(first_art) {
                if !matches!(self.state[j], VarState::Basic(_)) && v.abs() > best_mag {
                    best_mag = v.abs();
                    best = Some(j);
                }
            }
            if let Some(j) = best {
                let leaving = self.basis[r];
                let entering_value = self.nonbasic_value(j);
                self.pivot(r, j, None);
                self.state[leaving] = VarState::AtLower;
                self.x_basic[r] = entering_value;
            }
        }
    }

    fn drop_artificial_columns(&mut self) {
        let first_art = self.n_struct + self.m;
        if self.ncols == first_art || self.basis.iter().any(|&j| j >= first_art) {
            return;
        }
        let (m, old, new) = (self.m, self.ncols, first_art);
        let mut t = vec![0.0; m * new];
        let mut orig = vec![0.0; m * new];
        for r in 0..m {
            t[r * new..(r + 1) * new].copy_from_slice(&self.t[r * old..r * old + new]);
            orig[r * new..(r + 1) * new].copy_from_slice(&self.orig[r * old..r * old + new]);
        }
        self.t = t;
        self.orig = orig;
        self.ncols = new;
        self.lower.truncate(new);
        self.upper.truncate(new);
        self.state.truncate(new);
    }

    fn pivot(&mut self, r: usize, j: usize, reduced: Option<&mut Vec<f64>>) {
        let nc = self.ncols;
        pivot_rows(&mut self.t, nc, self.m, r, j, &mut self.scratch_nz);
        if let Some(d) = reduced {
            let dj = d[j];
            if dj != 0.0 {
                let prow = &self.t[r * nc..(r + 1) * nc];
                for &k in &self.scratch_nz {
                    d[k] -= dj * prow[k];
                }
                d[j] = 0.0;
            }
        }
        let leaving = self.basis[r];
        self.basis[r] = j;
        self.state[j] = VarState::Basic(r);
        self.state[leaving] = VarState::AtLower;
        self.pivots += 1;
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let nc = self.ncols;
        let mut d = cost.to_vec();
        for r in 0..self.m {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                let row = &self.t[r * nc..(r + 1) * nc];
                for (dk, tv) in d.iter_mut().zip(row) {
                    *dk -= cb * tv;
                }
            }
        }
        for &b in &self.basis {
            d[b] = 0.0;
        }
        d
    }

    /// Primal simplex on `cost` (minimization) from the current feasible basis.
    /// With `verify`, optimality is confirmed on a freshly inverted tableau.
    fn run(&mut self, cost: &[f64], verify: bool) -> Result<(), LpStatus> {
        let nc = self.ncols;
        let mut d = self.reduced_costs(cost);
        // devex reference weights
        let mut weights = vec![1.0f64; nc];
        let mut degenerate_run = 0usize;
        let mut since_refresh = 0usize;
        let mut since_reinvert = 0usize;
        loop {
            if self.pivots >= self.pivot_limit {
                return Err(LpStatus::NumericalFailure);
            }
            let bland = degenerate_run >= DEGENERATE_RUN_BEFORE_BLAND;
            let mut entering = None;
            let mut best = 0.0;
            for j in 0..nc {
                let dir = match self.state[j] {
                    VarState::Basic(_) => continue,
                    _ if self.upper[j] - self.lower[j] <= 0.0 => continue,
                    VarState::AtLower if d[j] < -DUAL_TOL && self.upper[j] > self.lower[j] => 1.0,
                    VarState::AtUpper if d[j] > DUAL_TOL => -1.0,
                    _ => continue,
                };
                if bland {
                    entering = Some((j, dir));
                    break;
                }
                let score = d[j] * d[j] / weights[j];
                if score > best {
                    best = score;
                    entering = Some((j, dir));
                }
            }
            let Some((j, dir)) = entering else {
                if !verify || since_reinvert == 0 {
                    return Ok(());
                }
                self.reinvert();
                d = self.reduced_costs(cost);
                since_reinvert = 0;
                since_refresh = 0;
                continue;
            };

            // ratio test, two passes: bound the step with slightly relaxed
            // bounds, then take the largest pivot among rows within it
            let span = self.upper[j] - self.lower[j];
            let limit_of = |r: usize, a: f64, relax: f64| -> Option<(f64, bool)> {
                let b = self.basis[r];
                let xb = self.x_basic[r];
                if a > 0.0 {
                    self.lower[b]
                        .is_finite()
                        .then(|| (((xb - self.lower[b] + relax) / a).max(0.0), false))
                } else {
                    self.upper[b]
                        .is_finite()
                        .then(|| (((self.upper[b] - xb + relax) / -a).max(0.0), true))
                }
            };
            let mut bound = span;
            for r in 0..self.m {
                let a = self.t[r * nc + j] * dir;
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                if let Some((l, _)) = limit_of(r, a, if bland { 0.0 } else { HARRIS_TOL }) {
                    bound = bound.min(l);
                }
            }
            let mut theta = span;
            let mut leave: Option<(usize, bool)> = None;
            let mut best_mag = 0.0;
            for r in 0..self.m {
                let a = self.t[r * nc + j] * dir;
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let Some((limit, to_upper)) = limit_of(r, a, 0.0) else {
                    continue;
                };
                if limit > bound {
                    continue;
                }
                let better = match leave {
                    None => true,
                    Some((lr, _)) if bland => {
                        limit < theta - 1e-12
                            || (limit <= theta + 1e-12 && self.basis[r] < self.basis[lr])
                    }
                    Some(_) => a.abs() > best_mag,
                };
                if better {
                    theta = limit;
                    best_mag = a.abs();
                    leave = Some((r, to_upper));
                }
            }
            if leave.is_none() {
                theta = span;
            }
            if !theta.is_finite() {
                return Err(LpStatus::NumericalFailure);
            }

            let step = dir * theta;
            for r in 0..self.m {
                let a = self.t[r * nc + j];
                if a != 0.0 {
                    self.x_basic[r] -= a * step;
                }
            }
            if theta <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            match leave {
                None => {
                    // bound flip
                    self.state[j] = if dir > 0.0 {
                        VarState::AtUpper
                    } else {
                        VarState::AtLower
                    };
                }
                Some((r, to_upper)) => {
                    let leaving = self.basis[r];
                    let entering_value = self.nonbasic_value(j) + step;
                    self.pivot(r, j, Some(&mut d));
                    let wq = weights[j];
                    weights[leaving] = 1.0;
                    let prow = &self.t[r * nc..(r + 1) * nc];
                    for &k in &self.scratch_nz {
                        if k != j {
                            weights[k] = weights[k].max(prow[k] * prow[k] * wq);
                        }
                    }
                    self.x_basic[r] = entering_value;
                    self.state[leaving] = if to_upper {
                        VarState::AtUpper
                    } else {
                        VarState::AtLower
                    };
                    since_refresh += 1;
                    since_reinvert += 1;
                    if since_reinvert >= REINVERT_EVERY {
                        self.reinvert();
                        d = self.reduced_costs(cost);
                        since_reinvert = 0;
                        since_refresh = 0;
                    } else if since_refresh >= REFRESH_EVERY {
                        self.refresh_basic_values();
                        since_refresh = 0;
                    }
                }
            }
        }
    }

    /// Current basic solution, structural variables only.
    pub fn point(&self) -> Vec<f64> {
        self.structural_point()
    }

    fn structural_point(&self) -> Vec<f64> {
        (0..self.n_struct)
            .map(|j| self.value(j).clamp(self.lower[j], self.upper[j]))
            .collect()
    }

    fn row_violation(&self, x: &[f64]) -> f64 {
        let (n, m, nc) = (self.n_struct, self.m, self.ncols);
        let mut worst = 0.0f64;
        for r in 0..m {
            let row = &self.orig[r * nc..r * nc + n];
            let v: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
            worst = worst.max(self.lower[n + r] - v).max(v - self.upper[n + r]);
        }
        worst
    }

    /// Optimizes `objective` (one coefficient per structural variable)
    /// starting from the current basis, which stays feasible afterwards.
    pub fn optimize(&mut self, objective: &[f64], sense: Sense) -> LpSolution {
        assert_eq!(objective.len(), self.n_struct);
        let sign = match sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut cost = vec![0.0; self.ncols];
        for (c, o) in cost.iter_mut().zip(objective) {
            *c = sign * o;
        }
        for attempt in 0..2 {
            if let Err(status) = self.run(&cost, false) {
                return LpSolution::failed(status);
            }
            let point = self.structural_point();
            if self.row_violation(&point) <= 1e-8 {
                let objective_value = objective.iter().zip(&point).map(|(c, x)| c * x).sum();
                return LpSolution {
                    status: LpStatus::Optimal,
                    objective_value,
                    point,
                };
            }
            if attempt == 0 {
                self.reinvert();
            }
        }
        LpSolution::failed(LpStatus::NumericalFailure)
    }
}

/// Gauss-Jordan pivot of a row-major `m x nc` matrix on `(r, j)`.
/// Leaves the nonzero column indices of the pivot row in `nz`.
fn pivot_rows(t: &mut [f64], nc: usize, m: usize, r: usize, j: usize, nz: &mut Vec<usize>) {
    let p = t[r * nc + j];
    nz.clear();
    {
        let prow = &mut t[r * nc..(r + 1) * nc];
        for (k, v) in prow.iter_mut().enumerate() {
            if *v != 0.0 {
                *v /= p;
                nz.push(k);
            }
        }
        prow[j] = 1.0;
    }
    let (before, rest) = t.split_at_mut(r * nc);
    let (prow, after) = rest.split_at_mut(nc);
    let dense = nz.len() * 3 > nc;
    for row in before.chunks_exact_mut(nc).chain(after.chunks_exact_mut(nc)) {
        let f = row[j];
        if f != 0.0 {
            if dense {
                for (a, b) in row.iter_mut().zip(prow.iter()) {
                    *a -= f * b;
                }
            } else {
                for &k in nz.iter() {
                    row[k] -= f * prow[k];
                }
            }
            row[j] = 0.0;
        }
    }
    debug_assert_eq!(t.len(), m * nc);
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn box_only_problem() {
        let p = LpProblem::new(vec![1.0], Sense::Minimize, vec![(1.0, 2.0)]);
        let s = solve_lp(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.objective_value, 1.0);
        assert_eq!(s.point, vec![1.0]);
    }

    #[test]
    fn single_active_constraint() {
        let mut p = LpProblem::new(vec![1.0, 1.0], Sense::Maximize, vec![(0.0, 1.0); 2]);
        p.add_le(vec![1.0, 1.0], 1.0);
        let s = solve_lp(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn difference_constraint_against_grid() {
        // a1 - a2 >= 0.5  <=>  -a1 + a2 <= -0.5
        let mut p = LpProblem::new(vec![1.0, 0.0], Sense::Minimize, vec![(0.0, 1.0); 2]);
        p.add_le(vec![-1.0, 1.0], -0.5);
        let s = solve_lp(&p);
        assert_eq!(s.status, LpStatus::Optimal);

        let mut grid_min = f64::INFINITY;
        for i in 0..=1000 {
            for k in 0..=1000 {
                let (a1, a2) = (i as f64 / 1000.0, k as f64 / 1000.0);
                if a1 - a2 >= 0.5 - 1e-12 {
                    grid_min = grid_min.min(a1);
                }
            }
        }
        assert!((grid_min - 0.5).abs() < 1e-12);
        assert!((s.objective_value - grid_min).abs() < 1e-9);
    }

    #[test]
    fn infeasible_is_reported() {
        let mut p = LpProblem::new(vec![1.0], Sense::Minimize, vec![(0.0, 1.0)]);
        p.add_le(vec![-1.0], -2.0);
        assert_eq!(solve_lp(&p).status, LpStatus::Infeasible);
    }

    #[test]
    fn pivot_limit_gives_numerical_failure() {
        let mut p = LpProblem::new(vec![1.0, 1.0], Sense::Maximize, vec![(0.0, 1.0); 2]);
        p.add_le(vec![1.0, 2.0], 1.5);
        p.add_le(vec![2.0, 1.0], 1.5);
        let s = BoundedSimplex { pivot_limit: 0 }.solve(&p);
        assert_eq!(s.status, LpStatus::NumericalFailure);
    }

    #[test]
    fn ranged_rows_and_reuse() {
        let mut cs = ConstraintSet::new(vec![(0.0, 1.0); 3]);
        cs.add_row(vec![1.0, 1.0, 1.0], 1.0, 1.5);
        cs.add_row(vec![1.0, -1.0, 0.0], -0.2, 0.2);
        let mut t = cs.feasible_tableau(10_000).unwrap();
        let lo = t.optimize(&[1.0, 0.0, 0.0], Sense::Minimize);
        let hi = t.optimize(&[1.0, 0.0, 0.0], Sense::Maximize);
        assert!((lo.objective_value - 0.0).abs() < 1e-12);
        assert!((hi.objective_value - 0.85).abs() < 1e-12, "{hi:?}");
        assert!(cs.max_violation(&hi.point) < 1e-9);
    }

    fn random_problem(rng: &mut ChaCha8Rng, n: usize, m: usize) -> (LpProblem, Vec<f64>) {
        // rows built around a known interior point, so the problem is feasible
        let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..0.8)).collect();
        let obj: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sense = if rng.gen_bool(0.5) {
            Sense::Minimize
        } else {
            Sense::Maximize
        };
        let mut p = LpProblem::new(obj, sense, vec![(0.0, 1.0); n]);
        for _ in 0..m {
            let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v: f64 = row.iter().zip(&x0).map(|(a, b)| a * b).sum();
            let slack = rng.gen_range(0.0..0.3);
            if rng.gen_bool(0.5) {
                p.add_le(row, v + slack);
            } else {
                p.add_range(row, v - slack, v + rng.gen_range(0.0..0.3));
            }
        }
        (p, x0)
    }

    #[test]
    fn weak_duality_spot_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let (p, x0) = random_problem(&mut rng, 6, 8);
            let s = solve_lp(&p);
            assert_eq!(s.status, LpStatus::Optimal);
            assert!(p.constraints.max_violation(&s.point) <= 1e-8);
            // every sampled feasible point is no better than the optimum
            let mut samples = vec![x0];
            for _ in 0..200 {
                samples.push((0..6).map(|_| rng.gen_range(0.0..1.0)).collect());
            }
            for x in samples {
                if p.constraints.max_violation(&x) <= 0.0 {
                    let v: f64 = p.objective.iter().zip(&x).map(|(a, b)| a * b).sum();
                    match p.sense {
                        Sense::Minimize => assert!(s.objective_value <= v + 1e-9),
                        Sense::Maximize => assert!(s.objective_value >= v - 1e-9),
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn deterministic(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (p, _) = random_problem(&mut rng, 5, 7);
            let a = solve_lp(&p);
            let b = solve_lp(&p);
            prop_assert_eq!(a.objective_value.to_bits(), b.objective_value.to_bits());
            prop_assert_eq!(a.point, b.point);
        }
    }
}
