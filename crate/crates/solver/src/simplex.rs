//! Bounded-variable primal simplex.
//!
//! Two phases driven by the same pivoting loop: while any basic variable
//! violates its bounds, pricing uses the composite infeasibility gradient
//! (-1 below the lower bound, +1 above the upper); once primal feasible,
//! pricing switches to the real costs. The basis inverse is kept as a
//! sparse LU factorization updated in product form, with periodic
//! refactorization.
//!
//! Before solving, rows are equilibrated to unit max coefficient (logical
//! bounds are scale invariant, so logical columns stay implicit units) and
//! variables fixed by their bounds are substituted out. Solves can warm
//! start from the basis of a related solve; a numerically failed warm
//! start falls back to the all-logical basis.

use crate::lu::{LuFactors, SparseCol};
use crate::model::{Model, RowSense, Sense};
use crate::{SolverConfig, SolverError};

const REFACTOR_EVERY: usize = 64;
const STALL_LIMIT: usize = 2000;
const PIVOT_TOL: f64 = 1e-8;
const DJ_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Basis membership of a variable in the final LP basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarBasisStatus {
    Basic,
    AtLower,
    AtUpper,
    Free,
    Fixed,
}

/// Warm-start hint: statuses for every structural variable and for every
/// row's logical variable, as returned by a previous solve.
#[derive(Clone, Debug)]
pub struct BasisHint {
    pub columns: Vec<VarBasisStatus>,
    pub logicals: Vec<VarBasisStatus>,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective in the model's own sense; NaN unless optimal.
    pub objective: f64,
    /// One value per structural variable.
    pub values: Vec<f64>,
    /// One dual multiplier per row, signed for the model's own sense.
    pub duals: Vec<f64>,
    pub basis: Vec<VarBasisStatus>,
    pub row_basis: Vec<VarBasisStatus>,
    pub iterations: usize,
}

impl LpSolution {
    pub fn basis_hint(&self) -> BasisHint {
        BasisHint {
            columns: self.basis.clone(),
            logicals: self.row_basis.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
    FreeAtZero,
    Fixed,
}

struct Eta {
    slot: usize,
    pivot: f64,
    col: Vec<(usize, f64)>,
}

struct Tableau {
    m: usize,
    n_struct: usize,
    n_total: usize,
    cols: Vec<SparseCol>,
    unit_cols: Vec<SparseCol>,
    rhs: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<VarState>,
    x: Vec<f64>,
    lu: LuFactors,
    etas: Vec<Eta>,
    work: Vec<f64>,
    w_slot: Vec<f64>,
    y: Vec<f64>,
    cb: Vec<f64>,
    scratch: Vec<f64>,
    feas_tol: f64,
    iterations: usize,
    bland: bool,
    resets: usize,
    force_refactor: bool,
}

enum StepOutcome {
    Pivoted,
    Converged,
    InfeasibleStop,
    UnboundedStop,
}

impl Tableau {
    fn column(&self, j: usize) -> &SparseCol {
        if j < self.n_struct {
            &self.cols[j]
        } else {
            &self.unit_cols[j - self.n_struct]
        }
    }

    fn dot_col(&self, j: usize, y: &[f64]) -> f64 {
        self.column(j).iter().map(|&(i, v)| v * y[i]).sum()
    }

    fn refactorize(&mut self) -> Result<(), SolverError> {
        let col_refs: Vec<&SparseCol> = self
            .basis
            .iter()
            .map(|&v| {
                if v < self.n_struct {
                    &self.cols[v]
                } else {
                    &self.unit_cols[v - self.n_struct]
                }
            })
            .collect();
        self.lu = LuFactors::factorize(self.m, &col_refs)
            .map_err(|e| SolverError::Numerical(format!("singular basis: {e:?}")))?;
        self.etas.clear();
        for i in 0..self.m {
            self.work[i] = self.rhs[i];
        }
        for j in 0..self.n_total {
            if matches!(self.state[j], VarState::Basic(_)) {
                continue;
            }
            let xj = self.x[j];
            if xj != 0.0 {
                let col = if j < self.n_struct {
                    &self.cols[j]
                } else {
                    &self.unit_cols[j - self.n_struct]
                };
                for &(i, v) in col {
                    self.work[i] -= v * xj;
                }
            }
        }
        self.lu.ftran(&mut self.work, &mut self.w_slot);
        for s in 0..self.m {
            self.x[self.basis[s]] = self.w_slot[s];
        }
        Ok(())
    }

    /// Drop the current basis and restart from the all-logical one,
    /// demoting every basic variable to a bound. Loses basis progress but
    /// survives a numerically singular basis.
    fn reset_to_logical_basis(&mut self) -> Result<(), SolverError> {
        for j in 0..self.n_total {
            if matches!(self.state[j], VarState::Basic(_)) {
                let (state, x) = if self.lb[j] == self.ub[j] {
                    (VarState::Fixed, self.lb[j])
                } else if self.lb[j].is_finite() {
                    (VarState::AtLower, self.lb[j])
                } else if self.ub[j].is_finite() {
                    (VarState::AtUpper, self.ub[j])
                } else {
                    (VarState::FreeAtZero, 0.0)
                };
                self.state[j] = state;
                self.x[j] = x;
            }
        }
        self.basis = (self.n_struct..self.n_total).collect();
        for (slot, &v) in self.basis.clone().iter().enumerate() {
            self.state[v] = VarState::Basic(slot);
        }
        self.refactorize()
    }

    fn refactor_or_reset(&mut self) -> Result<(), SolverError> {
        self.force_refactor = false;
        match self.refactorize() {
            Ok(()) => Ok(()),
            Err(err) => {
                if self.resets >= 5 {
                    return Err(err);
                }
                self.resets += 1;
                self.reset_to_logical_basis()
            }
        }
    }

    fn ftran(&mut self, j: usize) {
        let col = if j < self.n_struct {
            &self.cols[j]
        } else {
            &self.unit_cols[j - self.n_struct]
        };
        for &(i, v) in col {
            self.work[i] = v;
        }
        self.lu.ftran(&mut self.work, &mut self.w_slot);
        for eta in &self.etas {
            let t = self.w_slot[eta.slot] / eta.pivot;
            self.w_slot[eta.slot] = t;
            if t != 0.0 {
                for &(i, v) in &eta.col {
                    self.w_slot[i] -= v * t;
                }
            }
        }
    }

    fn btran_cb(&mut self) {
        for eta in self.etas.iter().rev() {
            let mut t = self.cb[eta.slot];
            for &(i, v) in &eta.col {
                t -= v * self.cb[i];
            }
            self.cb[eta.slot] = t / eta.pivot;
        }
        self.lu.btran(&self.cb, &mut self.y, &mut self.scratch);
    }

    fn basic_infeasibility(&self) -> f64 {
        let mut total = 0.0;
        for &v in &self.basis {
            let xv = self.x[v];
            if xv < self.lb[v] {
                total += self.lb[v] - xv;
            } else if xv > self.ub[v] {
                total += xv - self.ub[v];
            }
        }
        total
    }

    fn step(&mut self) -> Result<StepOutcome, SolverError> {
        if self.etas.len() >= REFACTOR_EVERY || self.force_refactor {
            self.refactor_or_reset()?;
        }

        let mut in_phase1 = false;
        for s in 0..self.m {
            let v = self.basis[s];
            let xv = self.x[v];
            self.cb[s] = if xv < self.lb[v] - self.feas_tol {
                in_phase1 = true;
                -1.0
            } else if xv > self.ub[v] + self.feas_tol {
                in_phase1 = true;
                1.0
            } else {
                0.0
            };
        }
        if !in_phase1 {
            for s in 0..self.m {
                self.cb[s] = self.cost[self.basis[s]];
            }
        }
        self.btran_cb();

        let mut enter: Option<(usize, f64, i8)> = None;
        for j in 0..self.n_total {
            let (want_up, want_down) = match self.state[j] {
                VarState::Basic(_) | VarState::Fixed => continue,
                VarState::AtLower => (true, false),
                VarState::AtUpper => (false, true),
                VarState::FreeAtZero => (true, true),
            };
            let cj = if in_phase1 { 0.0 } else { self.cost[j] };
            let dj = cj - self.dot_col(j, &self.y);
            let dir: i8 = if want_up && dj < -DJ_TOL {
                1
            } else if want_down && dj > DJ_TOL {
                -1
            } else {
                continue;
            };
            if self.bland {
                enter = Some((j, dj, dir));
                break;
            }
            match enter {
                Some((_, best, _)) if dj.abs() <= best.abs() => {}
                _ => enter = Some((j, dj, dir)),
            }
        }

        let (e, _dj, dir) = match enter {
            Some(t) => t,
            None => {
                if !self.etas.is_empty() {
                    self.refactor_or_reset()?;
                    return Ok(StepOutcome::Pivoted);
                }
                return Ok(if in_phase1 {
                    StepOutcome::InfeasibleStop
                } else {
                    StepOutcome::Converged
                });
            }
        };

        self.ftran(e);
        let dirf = dir as f64;

        let own_span = self.ub[e] - self.lb[e];
        // Ratio test in two passes: find the tightest step, then break
        // ties by pivot magnitude -- or, in Bland mode, by the smallest
        // leaving variable index, which is what makes Bland's rule an
        // actual anti-cycling guarantee.
        let block_of = |s: usize, w: f64| -> Option<(f64, f64, bool)> {
            let rate = -dirf * w;
            let v = self.basis[s];
            let (xv, l, u) = (self.x[v], self.lb[v], self.ub[v]);
            let cand = if xv < l - self.feas_tol {
                if rate > 0.0 {
                    Some(((l - xv) / rate, l, false))
                } else {
                    None
                }
            } else if xv > u + self.feas_tol {
                if rate < 0.0 {
                    Some(((u - xv) / rate, u, true))
                } else {
                    None
                }
            } else if rate < 0.0 {
                if l.is_finite() {
                    Some(((xv - l) / -rate, l, false))
                } else {
                    None
                }
            } else if u.is_finite() {
                Some(((u - xv) / rate, u, true))
            } else {
                None
            };
            cand.map(|(t, hit, up)| (t.max(0.0), hit, up))
        };
        let mut t_best = f64::INFINITY;
        for s in 0..self.m {
            let w = self.w_slot[s];
            if w.abs() <= PIVOT_TOL {
                continue;
            }
            if let Some((t, _, _)) = block_of(s, w) {
                t_best = t_best.min(t);
            }
        }
        let mut leave: Option<(usize, f64, f64, bool, f64)> = None; // slot, t, hit, at_upper, |w|
        let mut leave_bland: Option<(usize, f64, f64, bool, f64)> = None;
        if t_best.is_finite() {
            for s in 0..self.m {
                let w = self.w_slot[s];
                if w.abs() <= PIVOT_TOL {
                    continue;
                }
                if let Some((t, hit, at_upper)) = block_of(s, w) {
                    if t > t_best + 1e-12 {
                        continue;
                    }
                    let better = match leave {
                        None => true,
                        Some((ls, _, _, _, lw)) => w.abs() > lw || (w.abs() == lw && s < ls),
                    };
                    if better {
                        leave = Some((s, t, hit, at_upper, w.abs()));
                    }
                    // Bland's anti-cycling choice: smallest leaving
                    // variable index, but only over pivots large enough to
                    // keep the factorization trustworthy.
                    if self.bland && w.abs() >= 1e-6 {
                        let better = match leave_bland {
                            None => true,
                            Some((ls, _, _, _, _)) => self.basis[s] < self.basis[ls],
                        };
                        if better {
                            leave_bland = Some((s, t, hit, at_upper, w.abs()));
                        }
                    }
                }
            }
        }
        if self.bland {
            if let Some(choice) = leave_bland {
                leave = Some(choice);
            }
        }

        self.iterations += 1;

        if t_best >= own_span {
            if own_span.is_infinite() {
                if leave.is_none() {
                    return if in_phase1 {
                        Err(SolverError::Numerical(
                            "unblocked infeasibility descent".into(),
                        ))
                    } else {
                        Ok(StepOutcome::UnboundedStop)
                    };
                }
            } else {
                let t = own_span;
                for s in 0..self.m {
                    let w = self.w_slot[s];
                    if w != 0.0 {
                        self.x[self.basis[s]] -= w * dirf * t;
                    }
                }
                self.state[e] = if dir > 0 {
                    self.x[e] = self.ub[e];
                    VarState::AtUpper
                } else {
                    self.x[e] = self.lb[e];
                    VarState::AtLower
                };
                return Ok(StepOutcome::Pivoted);
            }
        }

        let (slot, t, hit, at_upper, _) = leave.expect("ratio test found no blocking row");
        for s in 0..self.m {
            let w = self.w_slot[s];
            if w != 0.0 {
                self.x[self.basis[s]] -= w * dirf * t;
            }
        }
        self.x[e] += dirf * t;

        let leaving = self.basis[slot];
        self.x[leaving] = hit;
        self.state[leaving] = if self.lb[leaving] == self.ub[leaving] {
            VarState::Fixed
        } else if at_upper {
            VarState::AtUpper
        } else {
            VarState::AtLower
        };
        self.state[e] = VarState::Basic(slot);
        self.basis[slot] = e;

        let pivot = self.w_slot[slot];
        if pivot.abs() < 1e-5 {
            self.force_refactor = true;
        }
        let mut col: Vec<(usize, f64)> = Vec::new();
        for (i, &w) in self.w_slot.iter().enumerate() {
            if i != slot && w.abs() > 1e-13 {
                col.push((i, w));
            }
        }
        self.etas.push(Eta { slot, pivot, col });
        Ok(StepOutcome::Pivoted)
    }
}

/// Solve the LP relaxation of a model (integrality dropped, bounds kept).
pub fn solve_lp(model: &Model, cfg: &SolverConfig) -> Result<LpSolution, SolverError> {
    let bounds: Vec<(f64, f64)> = model.vars().iter().map(|v| (v.lb, v.ub)).collect();
    solve_lp_with_bounds(model, cfg, &bounds)
}

/// Solve the LP relaxation with per-variable bound overrides.
pub fn solve_lp_with_bounds(
    model: &Model,
    cfg: &SolverConfig,
    bounds: &[(f64, f64)],
) -> Result<LpSolution, SolverError> {
    solve_lp_warm(model, cfg, bounds, None)
}

/// Solve with bound overrides, optionally warm starting from the basis of
/// a previous related solve. A warm start that breaks down numerically is
/// retried from the all-logical basis before giving up.
pub fn solve_lp_warm(
    model: &Model,
    cfg: &SolverConfig,
    bounds: &[(f64, f64)],
    hint: Option<&BasisHint>,
) -> Result<LpSolution, SolverError> {
    match solve_inner(model, cfg, bounds, hint) {
        Err(SolverError::Numerical(_)) if hint.is_some() => {
            solve_inner(model, cfg, bounds, None)
        }
        r => r,
    }
}

struct Reduced {
    /// Reduced column index -> original variable index.
    active: Vec<usize>,
    /// Original variable index -> reduced index (usize::MAX when fixed).
    active_of: Vec<usize>,
    /// Kept row index -> original row index.
    rows: Vec<usize>,
    cols: Vec<SparseCol>,
    rhs: Vec<f64>,
    senses: Vec<RowSense>,
    /// Applied row scales: scaled row = original / scale.
    row_scale: Vec<f64>,
}

/// Substitute bound-fixed variables into the rows, drop rows with no
/// active terms (verifying they hold), and equilibrate the rest to unit
/// max coefficient.
fn reduce(
    model: &Model,
    cfg: &SolverConfig,
    bounds: &[(f64, f64)],
) -> Result<Result<Reduced, LpStatus>, SolverError> {
    let n = model.num_vars();
    let mut active_of = vec![usize::MAX; n];
    let mut active = Vec::with_capacity(n);
    for (j, &(l, u)) in bounds.iter().enumerate() {
        if l > u {
            return Ok(Err(LpStatus::Infeasible));
        }
        if l < u {
            active_of[j] = active.len();
            active.push(j);
        }
    }

    let mut rows = Vec::new();
    let mut cols: Vec<SparseCol> = vec![Vec::new(); active.len()];
    let mut rhs = Vec::new();
    let mut senses = Vec::new();
    let mut row_scale = Vec::new();
    for (i, c) in model.constraints().iter().enumerate() {
        let mut fixed_part = 0.0;
        let mut terms: Vec<(usize, f64)> = Vec::new();
        for &(v, coef) in &c.terms {
            if !coef.is_finite() {
                return Err(SolverError::InvalidModel(format!(
                    "row {} has a non-finite coefficient",
                    c.name
                )));
            }
            let j = v.0;
            if active_of[j] == usize::MAX {
                fixed_part += coef * bounds[j].0;
            } else {
                terms.push((active_of[j], coef));
            }
        }
        let b = c.rhs - fixed_part;
        if terms.is_empty() {
            let ok = match c.sense {
                RowSense::Le => 0.0 <= b + cfg.feas_tol,
                RowSense::Ge => 0.0 >= b - cfg.feas_tol,
                RowSense::Eq => b.abs() <= cfg.feas_tol,
            };
            if !ok {
                return Ok(Err(LpStatus::Infeasible));
            }
            continue;
        }
        terms.sort_unstable_by_key(|&(j, _)| j);
        terms.dedup_by(|a, b| {
            if a.0 == b.0 {
                b.1 += a.1;
                true
            } else {
                false
            }
        });
        terms.retain(|&(_, v)| v != 0.0);
        if terms.is_empty() {
            continue;
        }
        let scale = terms
            .iter()
            .map(|&(_, v)| v.abs())
            .fold(0.0_f64, f64::max)
            .max(1e-12);
        let row = rows.len();
        for &(j, coef) in &terms {
            cols[j].push((row, coef / scale));
        }
        rows.push(i);
        rhs.push(b / scale);
        senses.push(c.sense);
        row_scale.push(scale);
    }

    Ok(Ok(Reduced {
        active,
        active_of,
        rows,
        cols,
        rhs,
        senses,
        row_scale,
    }))
}

fn solve_inner(
    model: &Model,
    cfg: &SolverConfig,
    bounds: &[(f64, f64)],
    hint: Option<&BasisHint>,
) -> Result<LpSolution, SolverError> {
    let n = model.num_vars();
    assert_eq!(bounds.len(), n);
    let m_orig = model.num_cons();

    let reduced = match reduce(model, cfg, bounds)? {
        Ok(r) => r,
        Err(status) => {
            return Ok(LpSolution {
                status,
                objective: f64::NAN,
                values: bounds.iter().map(|&(l, _)| l).collect(),
                duals: vec![0.0; m_orig],
                basis: vec![VarBasisStatus::Fixed; n],
                row_basis: vec![VarBasisStatus::Basic; m_orig],
                iterations: 0,
            })
        }
    };
    let nr = reduced.active.len();
    let m = reduced.rows.len();
    let n_total = nr + m;

    let mut lb = vec![0.0; n_total];
    let mut ub = vec![0.0; n_total];
    for (jr, &j) in reduced.active.iter().enumerate() {
        lb[jr] = bounds[j].0;
        ub[jr] = bounds[j].1;
    }
    for (ir, &sense) in reduced.senses.iter().enumerate() {
        let (l, u) = match sense {
            RowSense::Le => (0.0, f64::INFINITY),
            RowSense::Ge => (f64::NEG_INFINITY, 0.0),
            RowSense::Eq => (0.0, 0.0),
        };
        lb[nr + ir] = l;
        ub[nr + ir] = u;
    }

    let sign = match model.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut cost = vec![0.0; n_total];
    for &(v, coef) in &model.objective.terms {
        let jr = reduced.active_of[v.0];
        if jr != usize::MAX {
            cost[jr] += sign * coef;
        }
    }

    // Initial states. Default: structurals at their nearest finite bound,
    // logicals basic. A warm-start hint overrides both where applicable.
    let default_state = |jr: usize, lb: &[f64], ub: &[f64]| -> (VarState, f64) {
        if lb[jr].is_finite() {
            (VarState::AtLower, lb[jr])
        } else if ub[jr].is_finite() {
            (VarState::AtUpper, ub[jr])
        } else {
            (VarState::FreeAtZero, 0.0)
        }
    };
    let mut state = vec![VarState::FreeAtZero; n_total];
    let mut x = vec![0.0; n_total];
    let mut want_basic = vec![false; n_total];
    for jr in 0..nr {
        let (s, v) = default_state(jr, &lb, &ub);
        state[jr] = s;
        x[jr] = v;
    }
    match hint {
        Some(hint) if hint.columns.len() == n && hint.logicals.len() == m_orig => {
            for (jr, &j) in reduced.active.iter().enumerate() {
                match hint.columns[j] {
                    VarBasisStatus::Basic => want_basic[jr] = true,
                    VarBasisStatus::AtLower | VarBasisStatus::Fixed if lb[jr].is_finite() => {
                        state[jr] = VarState::AtLower;
                        x[jr] = lb[jr];
                    }
                    VarBasisStatus::AtUpper if ub[jr].is_finite() => {
                        state[jr] = VarState::AtUpper;
                        x[jr] = ub[jr];
                    }
                    VarBasisStatus::Free => {
                        state[jr] = VarState::FreeAtZero;
                        x[jr] = 0.0;
                    }
                    _ => {}
                }
            }
            for (ir, &i) in reduced.rows.iter().enumerate() {
                if hint.logicals[i] == VarBasisStatus::Basic {
                    want_basic[nr + ir] = true;
                }
            }
        }
        _ => {
            for ir in 0..m {
                want_basic[nr + ir] = true;
            }
        }
    }

    // Assemble exactly m basic variables, deterministically: demote the
    // highest-indexed surplus, promote logicals by row order to fill gaps.
    let mut basic_list: Vec<usize> = (0..n_total).filter(|&j| want_basic[j]).collect();
    while basic_list.len() > m {
        let j = basic_list.pop().unwrap();
        let (s, v) = default_state(j, &lb, &ub);
        state[j] = if lb[j] == ub[j] { VarState::Fixed } else { s };
        x[j] = v;
    }
    if basic_list.len() < m {
        for ir in 0..m {
            if basic_list.len() == m {
                break;
            }
            let j = nr + ir;
            if !want_basic[j] {
                basic_list.push(j);
                want_basic[j] = true;
            }
        }
        basic_list.sort_unstable();
    }
    let basis = basic_list;
    for (slot, &j) in basis.iter().enumerate() {
        state[j] = VarState::Basic(slot);
    }
    // Non-basic logicals rest at a finite bound.
    for j in nr..n_total {
        if !matches!(state[j], VarState::Basic(_)) {
            let (s, v) = if lb[j] == ub[j] {
                (VarState::Fixed, lb[j])
            } else {
                default_state(j, &lb, &ub)
            };
            state[j] = s;
            x[j] = v;
        }
    }
    // Fixed structurals cannot stay marked free.
    for jr in 0..nr {
        if lb[jr] == ub[jr] && !matches!(state[jr], VarState::Basic(_)) {
            state[jr] = VarState::Fixed;
            x[jr] = lb[jr];
        }
    }

    let unit_cols: Vec<SparseCol> = (0..m).map(|i| vec![(i, 1.0)]).collect();
    let lu = LuFactors::factorize(0, &[])
        .map_err(|e| SolverError::Numerical(format!("empty basis: {e:?}")))?;

    let mut tab = Tableau {
        m,
        n_struct: nr,
        n_total,
        cols: reduced.cols,
        unit_cols,
        rhs: reduced.rhs,
        lb,
        ub,
        cost,
        basis,
        state,
        x,
        lu,
        etas: Vec::new(),
        work: vec![0.0; m],
        w_slot: vec![0.0; m],
        y: vec![0.0; m],
        cb: vec![0.0; m],
        scratch: vec![0.0; m],
        feas_tol: cfg.feas_tol,
        iterations: 0,
        bland: false,
        resets: 0,
    force_refactor: false,
    };
    tab.refactorize()?;

    let trace = std::env::var_os("OLIGOFAIR_LP_TRACE").is_some();
    let start_time = std::time::Instant::now();
    let iter_limit = 2_000_000.max(200 * (n_total + m));
    let mut last_merit = f64::INFINITY;
    let mut stall = 0usize;
    let status = loop {
        match tab.step()? {
            StepOutcome::Converged => break LpStatus::Optimal,
            StepOutcome::InfeasibleStop => break LpStatus::Infeasible,
            StepOutcome::UnboundedStop => break LpStatus::Unbounded,
            StepOutcome::Pivoted => {}
        }
        if tab.iterations > iter_limit {
            return Err(SolverError::IterationLimit(tab.iterations));
        }
        let inf = tab.basic_infeasibility();
        let obj: f64 = (0..tab.n_total).map(|j| tab.cost[j] * tab.x[j]).sum();
        let merit = if inf > cfg.feas_tol { 1e30 + inf } else { obj };
        if merit < last_merit - 1e-12 {
            last_merit = merit;
            stall = 0;
        } else {
            stall += 1;
            if stall >= STALL_LIMIT {
                tab.bland = true;
            }
        }
        if trace && tab.iterations % 1000 == 0 {
            eprintln!(
                "lp trace: iter {} infeas {:.3e} obj {:.6e} fill {} bland {} elapsed {:?}",
                tab.iterations,
                inf,
                obj,
                tab.lu.fill(),
                tab.bland,
                start_time.elapsed()
            );
        }
    };

    // Map the reduced solution back onto the full variable space.
    let mut values: Vec<f64> = bounds.iter().map(|&(l, _)| l).collect();
    for (jr, &j) in reduced.active.iter().enumerate() {
        values[j] = tab.x[jr];
    }
    let mut basis_desc = vec![VarBasisStatus::Fixed; n];
    for (jr, &j) in reduced.active.iter().enumerate() {
        basis_desc[j] = match tab.state[jr] {
            VarState::Basic(_) => VarBasisStatus::Basic,
            VarState::AtLower => VarBasisStatus::AtLower,
            VarState::AtUpper => VarBasisStatus::AtUpper,
            VarState::FreeAtZero => VarBasisStatus::Free,
            VarState::Fixed => VarBasisStatus::Fixed,
        };
    }
    let mut row_basis = vec![VarBasisStatus::Basic; m_orig];
    for (ir, &i) in reduced.rows.iter().enumerate() {
        row_basis[i] = match tab.state[tab.n_struct + ir] {
            VarState::Basic(_) => VarBasisStatus::Basic,
            VarState::AtLower => VarBasisStatus::AtLower,
            VarState::AtUpper => VarBasisStatus::AtUpper,
            VarState::FreeAtZero => VarBasisStatus::Free,
            VarState::Fixed => VarBasisStatus::Fixed,
        };
    }

    let (objective, duals) = if status == LpStatus::Optimal {
        for s in 0..tab.m {
            tab.cb[s] = tab.cost[tab.basis[s]];
        }
        tab.btran_cb();
        let mut duals = vec![0.0; m_orig];
        for (ir, &i) in reduced.rows.iter().enumerate() {
            duals[i] = sign * tab.y[ir] / reduced.row_scale[ir];
        }
        (model.eval_objective(&values), duals)
    } else {
        (f64::NAN, vec![0.0; m_orig])
    };

    Ok(LpSolution {
        status,
        objective,
        values,
        duals,
        basis: basis_desc,
        row_basis,
        iterations: tab.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Model, RowSense, Sense};

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    #[test]
    fn bound_attained_optimum() {
        let mut m = Model::new("t", Sense::Maximize);
        let x = m.add_continuous("x", 0.0, 5.0);
        m.set_objective(vec![(x, 1.0)], 0.0);
        let sol = solve_lp(&m, &cfg()).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 5.0).abs() < 1e-9);
        assert!((sol.values[x.0] - 5.0).abs() < 1e-9);
    }

    #[test]
    fn two_var_lp() {
        // maximize x+y s.t. x+y <= 3, x <= 2, y <= 2 -> objective 3
        let mut m = Model::new("t", Sense::Maximize);
        let x = m.add_continuous("x", 0.0, 2.0);
        let y = m.add_continuous("y", 0.0, 2.0);
        m.add_constraint("cap", "cap", vec![(x, 1.0), (y, 1.0)], RowSense::Le, 3.0);
        m.set_objective(vec![(x, 1.0), (y, 1.0)], 0.0);
        let sol = solve_lp(&m, &cfg()).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 3.0).abs() < 1e-9);
    }

    #[test]
    fn contradictory_rows_infeasible() {
        let mut m = Model::new("t", Sense::Maximize);
        let x = m.add_continuous("x", f64::NEG_INFINITY, f64::INFINITY);
        m.add_constraint("ge", "r", vec![(x, 1.0)], RowSense::Ge, 1.0);
        m.add_constraint("le", "r", vec![(x, 1.0)], RowSense::Le, 0.0);
        m.set_objective(vec![(x, 1.0)], 0.0);
        let sol = solve_lp(&m, &cfg()).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let mut m = Model::new("t", Sense::Maximize);
        let x = m.add_continuous("x", 0.0, f64::INFINITY);
        m.set_objective(vec![(x, 1.0)], 0.0);
        let sol = solve_lp(&m, &cfg()).unwrap();
        assert_eq!(sol.status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_rows_and_free_vars() {
        // minimize x + 2y s.t. x + y = 4, x - y = 0 -> x = y = 2, obj 6
        let mut m = Model::new("t", Sense::Minimize);
        let x = m.add_continuous("x", f64::NEG_INFINITY, f64::INFINITY);
        let y = m.add_continuous("y", f64::NEG_INFINITY, f64::INFINITY);
        m.add_constraint("sum", "r", vec![(x, 1.0), (y, 1.0)], RowSense::Eq, 4.0);
        m.add_constraint("diff", "r", vec![(x, 1.0), (y, -1.0)], RowSense::Eq, 0.0);
        m.set_objective(vec![(x, 1.0), (y, 2.0)], 0.0);
        let sol = solve_lp(&m, &cfg()).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 6.0).abs() < 1e-9);
        assert!((sol.values[x.0] - 2.0).abs() < 1e-9);
        assert!((sol.values[y.0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn negative_bounds_and_ge_rows() {
        let mut m = Model::new("t", Sense::Minimize);
        let x = m.add_continuous("x", -10.0, 10.0);
        m.add_constraint("lo", "r", vec![(x, 1.0)], RowSense::Ge, -3.0);
        m.set_objective(vec![(x, 1.0)], 0.0);
        let sol = solve_lp(&m, &cfg()).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective + 3.0).abs() < 1e-9);
    }

    #[test]
    fn objective_constant_carried() {
        let mut m = Model::new("t", Sense::Maximize);
        let x = m.add_continuous("x", 0.0, 1.0);
        m.set_objective(vec![(x, 2.0)], 7.0);
        let sol = solve_lp(&m, &cfg()).unwrap();
        assert!((sol.objective - 9.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_lp_terminates() {
        let mut m = Model::new("t", Sense::Maximize);
        let x = m.add_continuous("x", 0.0, 10.0);
        let y = m.add_continuous("y", 0.0, 10.0);
        for i in 0..8 {
            m.add_constraint(
                format!("r{i}"),
                "r",
                vec![(x, 1.0), (y, 1.0)],
                RowSense::Le,
                4.0,
            );
        }
        m.set_objective(vec![(x, 1.0), (y, 1.0)], 0.0);
        let sol = solve_lp(&m, &cfg()).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 4.0).abs() < 1e-9);
    }

    #[test]
    fn fixed_variables_substituted() {
        // x fixed at 2 by bounds: row y + x <= 5 must become y <= 3.
        let mut m = Model::new("t", Sense::Maximize);
        let x = m.add_continuous("x", 2.0, 2.0);
        let y = m.add_continuous("y", 0.0, 10.0);
        m.add_constraint("cap", "r", vec![(x, 1.0), (y, 1.0)], RowSense::Le, 5.0);
        m.set_objective(vec![(y, 1.0)], 0.0);
        let sol = solve_lp(&m, &cfg()).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.values[y.0] - 3.0).abs() < 1e-9);
        assert!((sol.values[x.0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn fixed_infeasible_row_detected() {
        let mut m = Model::new("t", Sense::Maximize);
        let x = m.add_continuous("x", 1.0, 1.0);
        m.add_constraint("eq", "r", vec![(x, 1.0)], RowSense::Eq, 3.0);
        m.set_objective(vec![], 0.0);
        let sol = solve_lp(&m, &cfg()).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    #[test]
    fn warm_start_agrees_with_cold() {
        let mut m = Model::new("t", Sense::Maximize);
        let x = m.add_continuous("x", 0.0, 4.0);
        let y = m.add_continuous("y", 0.0, 4.0);
        let z = m.add_continuous("z", 0.0, 4.0);
        m.add_constraint(
            "r1",
            "r",
            vec![(x, 1.0), (y, 2.0), (z, 1.0)],
            RowSense::Le,
            6.0,
        );
        m.add_constraint("r2", "r", vec![(x, 1.0), (z, -1.0)], RowSense::Ge, -1.0);
        m.set_objective(vec![(x, 3.0), (y, 2.0), (z, 1.0)], 0.0);
        let bounds: Vec<(f64, f64)> = m.vars().iter().map(|v| (v.lb, v.ub)).collect();
        let cold = solve_lp_with_bounds(&m, &cfg(), &bounds).unwrap();
        // Tighten a bound and re-solve warm; compare against cold.
        let mut tighter = bounds.clone();
        tighter[y.0] = (0.0, 1.0);
        let warm = solve_lp_warm(&m, &cfg(), &tighter, Some(&cold.basis_hint())).unwrap();
        let cold2 = solve_lp_with_bounds(&m, &cfg(), &tighter).unwrap();
        assert_eq!(warm.status, LpStatus::Optimal);
        assert!((warm.objective - cold2.objective).abs() < 1e-9);
        assert!(warm.iterations <= cold2.iterations);
    }
}
