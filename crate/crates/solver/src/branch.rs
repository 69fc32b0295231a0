//! Deterministic branch-and-bound over binaries and SOS2 sets.
//!
//! Node selection is best-bound with ties broken by smallest node id;
//! branching picks the most fractional binary first and otherwise the most
//! violated SOS2 set, split at the weighted-average member. Reruns with the
//! same model and configuration reproduce the node sequence exactly.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use std::rc::Rc;

use crate::model::{Model, Sense, VarId, VarKind};
use crate::simplex::{solve_lp_warm, BasisHint, LpStatus};
use crate::{SolverConfig, SolverError};

const HEURISTIC_EVERY: u64 = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MipStatus {
    /// Incumbent proven within the configured gap.
    Optimal,
    Infeasible,
    Unbounded,
    /// Stopped at the node limit with the best incumbent retained.
    NodeLimit,
    /// Stopped at the time limit with the best incumbent retained.
    TimeLimit,
    /// A feasible point whose optimality was not proven by this search
    /// (used for externally supplied solutions).
    Feasible,
}

#[derive(Clone, Copy, Debug)]
pub enum NodeAction {
    Integral,
    PrunedByBound,
    InfeasibleNode,
    BranchedBinary(usize),
    BranchedSos2(usize),
}

/// One entry of the search log, written when `keep_node_log` is set.
#[derive(Clone, Debug)]
pub struct NodeRecord {
    pub id: u64,
    pub bound_at_pop: f64,
    pub incumbent_at_pop: Option<f64>,
    pub lp_objective: Option<f64>,
    pub action: NodeAction,
}

#[derive(Clone, Debug)]
pub struct MipSolution {
    pub status: MipStatus,
    /// Incumbent objective in the model's own sense.
    pub objective: Option<f64>,
    pub values: Option<Vec<f64>>,
    /// Valid bound on the optimum (same sense as the objective).
    pub best_bound: f64,
    /// Relative gap between incumbent and bound; 0 when proven optimal.
    pub gap: f64,
    pub nodes: u64,
    pub node_log: Vec<NodeRecord>,
}

impl MipSolution {
    pub fn objective_or_nan(&self) -> f64 {
        self.objective.unwrap_or(f64::NAN)
    }
}

#[derive(Debug, PartialEq, Eq)]
pub enum Sos2BranchError {
    /// The weight vector already satisfies the SOS2 condition.
    NotViolated,
}

/// Check a weight vector against the SOS2 condition: at most two nonzero
/// entries, and if two, adjacent.
pub fn sos2_feasible(weights: &[f64], tol: f64) -> bool {
    let nz: Vec<usize> = weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w.abs() > tol)
        .map(|(i, _)| i)
        .collect();
    nz.len() <= 1 || (nz.len() == 2 && nz[1] == nz[0] + 1)
}

/// Split a violated SOS2 set into two children at the weighted-average
/// member. Returns the member lists to fix to zero in each child: the first
/// child zeroes the head of the set, the second zeroes the tail, and the
/// union of the children covers every SOS2-feasible point of the parent.
pub fn branch_sos2(
    members: &[VarId],
    weights: &[f64],
    tol: f64,
) -> Result<(Vec<VarId>, Vec<VarId>), Sos2BranchError> {
    assert_eq!(members.len(), weights.len());
    if sos2_feasible(weights, tol) {
        return Err(Sos2BranchError::NotViolated);
    }
    let n = members.len();
    let total: f64 = weights.iter().map(|w| w.abs()).sum();
    let avg: f64 = weights
        .iter()
        .enumerate()
        .map(|(i, w)| (i + 1) as f64 * w.abs())
        .sum::<f64>()
        / total;
    // Split member in 1-based coordinates, kept interior so both children
    // are strictly smaller than the parent.
    let split = (avg.round() as usize).clamp(2, n - 1);
    let head: Vec<VarId> = members[..split - 1].to_vec();
    let tail: Vec<VarId> = members[split..].to_vec();
    Ok((head, tail))
}

#[derive(Clone, Debug)]
struct Node {
    id: u64,
    bound: f64,
    /// Bound overrides accumulated from the root.
    overrides: Vec<(usize, f64, f64)>,
    /// Parent's final basis, shared by both children as a warm start.
    hint: Option<Rc<BasisHint>>,
}

#[derive(Clone, Copy, Debug)]
struct HeapKey {
    score: f64,
    id: u64,
}

impl PartialEq for HeapKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapKey {}
impl PartialOrd for HeapKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapKey {
    fn cmp(&self, other: &Self) -> Ordering {
        // Higher score first; ties by smaller id.
        self.score
            .total_cmp(&other.score)
            .then_with(|| other.id.cmp(&self.id))
    }
}

struct Search<'a> {
    model: &'a Model,
    cfg: &'a SolverConfig,
    base_bounds: Vec<(f64, f64)>,
    binaries: Vec<usize>,
    sense_sign: f64,
    incumbent: Option<(f64, Vec<f64>)>,
    heap: BinaryHeap<HeapKey>,
    nodes_by_id: std::collections::HashMap<u64, Node>,
    next_id: u64,
    processed: u64,
    log: Vec<NodeRecord>,
}

impl<'a> Search<'a> {
    fn score(&self, bound: f64) -> f64 {
        self.sense_sign * bound
    }

    fn improves(&self, candidate: f64) -> bool {
        match &self.incumbent {
            None => true,
            Some((best, _)) => self.sense_sign * candidate > self.sense_sign * best + 1e-12,
        }
    }

    /// Bound cannot beat the incumbent by more than the configured gap.
    fn prunable(&self, bound: f64) -> bool {
        match &self.incumbent {
            None => false,
            Some((best, _)) => {
                let margin = self.cfg.mip_gap * best.abs().max(1.0);
                self.sense_sign * bound <= self.sense_sign * best + margin
            }
        }
    }

    fn node_bounds(&self, node: &Node) -> Vec<(f64, f64)> {
        let mut b = self.base_bounds.clone();
        for &(v, lo, hi) in &node.overrides {
            b[v] = (lo, hi);
        }
        b
    }

    fn fractional_binaries(&self, values: &[f64]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for &j in &self.binaries {
            let x = values[j];
            let dist = (x - x.round()).abs();
            if dist > self.cfg.int_tol {
                match best {
                    Some((_, s)) if dist <= s => {}
                    _ => best = Some((j, dist)),
                }
            }
        }
        best
    }

    fn violated_sos2(&self, values: &[f64]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (si, set) in self.model.sos2_sets().iter().enumerate() {
            let w: Vec<f64> = set.members.iter().map(|&v| values[v.0]).collect();
            if sos2_feasible(&w, self.cfg.int_tol) {
                continue;
            }
            let total: f64 = w.iter().map(|x| x.abs()).sum();
            let best_pair = w
                .windows(2)
                .map(|p| p[0].abs() + p[1].abs())
                .fold(0.0_f64, f64::max);
            let score = (total - best_pair) / total.max(1e-30);
            match best {
                Some((_, s)) if score <= s => {}
                _ => best = Some((si, score)),
            }
        }
        best.map(|(si, _)| si)
    }

    fn point_is_mip_feasible(&self, values: &[f64]) -> bool {
        self.fractional_binaries(values).is_none() && self.violated_sos2(values).is_none()
    }

    fn try_incumbent(&mut self, objective: f64, values: &[f64]) {
        if self.improves(objective) {
            self.incumbent = Some((objective, values.to_vec()));
        }
    }

    /// LP-rounding heuristic: pin every binary to the rounded LP value and
    /// re-solve the continuous part.
    fn rounding_heuristic(
        &mut self,
        values: &[f64],
        hint: Option<&BasisHint>,
    ) -> Result<(), SolverError> {
        if self.binaries.is_empty() {
            return Ok(());
        }
        let mut bounds = self.base_bounds.clone();
        for &j in &self.binaries {
            let r = values[j].round().clamp(0.0, 1.0);
            bounds[j] = (r, r);
        }
        let sol = solve_lp_warm(self.model, self.cfg, &bounds, hint)?;
        if sol.status == LpStatus::Optimal && self.point_is_mip_feasible(&sol.values) {
            let obj = sol.objective;
            self.try_incumbent(obj, &sol.values);
        }
        Ok(())
    }
}

/// Solve a mixed-integer model by LP-based branch-and-bound.
pub fn solve_milp(model: &Model, cfg: &SolverConfig) -> Result<MipSolution, SolverError> {
    solve_milp_with_start(model, cfg, None)
}

/// Solve with an optional warm-start point. The point's binaries are
/// rounded and pinned, the continuous remainder is re-solved, and a
/// feasible result seeds both the incumbent and the root basis.
pub fn solve_milp_with_start(
    model: &Model,
    cfg: &SolverConfig,
    start: Option<&[f64]>,
) -> Result<MipSolution, SolverError> {
    model.validate()?;
    let sense_sign = match model.sense {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    let base_bounds: Vec<(f64, f64)> = model.vars().iter().map(|v| (v.lb, v.ub)).collect();
    let binaries: Vec<usize> = model
        .vars()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == VarKind::Binary)
        .map(|(j, _)| j)
        .collect();

    let mut search = Search {
        model,
        cfg,
        base_bounds,
        binaries,
        sense_sign,
        incumbent: None,
        heap: BinaryHeap::new(),
        nodes_by_id: std::collections::HashMap::new(),
        next_id: 0,
        processed: 0,
        log: Vec::new(),
    };

    let clock = Instant::now();
    let worst_bound = -sense_sign * f64::INFINITY;

    // Seed the search from a supplied point: pin its binaries, re-solve
    // the continuous part, and keep the basis as the root warm start.
    let mut root_hint: Option<Rc<BasisHint>> = None;
    if let Some(point) = start {
        if point.len() == model.num_vars() && !search.binaries.is_empty() {
            let mut bounds = search.base_bounds.clone();
            for &j in &search.binaries {
                let r = point[j].round().clamp(0.0, 1.0);
                bounds[j] = (r, r);
            }
            let lp = solve_lp_warm(model, cfg, &bounds, None)?;
            if lp.status == LpStatus::Optimal && search.point_is_mip_feasible(&lp.values) {
                search.try_incumbent(lp.objective, &lp.values);
                root_hint = Some(Rc::new(lp.basis_hint()));
            }
        }
    }

    let root = Node {
        id: 0,
        bound: sense_sign * f64::INFINITY,
        overrides: Vec::new(),
        hint: root_hint,
    };
    search.next_id = 1;
    search.heap.push(HeapKey {
        score: search.score(root.bound),
        id: root.id,
    });
    search.nodes_by_id.insert(root.id, root);

    let mut global_bound = sense_sign * f64::INFINITY;
    let mut stop_status: Option<MipStatus> = None;

    while let Some(key) = search.heap.pop() {
        let node = search
            .nodes_by_id
            .remove(&key.id)
            .expect("heap entry without node");
        global_bound = node.bound;

        if let Some((inc, _)) = &search.incumbent {
            let gap = rel_gap(sense_sign, global_bound, *inc);
            if gap <= cfg.mip_gap {
                stop_status = Some(MipStatus::Optimal);
                break;
            }
        }
        if let Some(limit) = cfg.node_limit {
            if search.processed >= limit {
                stop_status = Some(MipStatus::NodeLimit);
                break;
            }
        }
        if let Some(limit) = cfg.time_limit {
            if clock.elapsed() >= limit {
                stop_status = Some(MipStatus::TimeLimit);
                break;
            }
        }

        search.processed += 1;
        let bounds = search.node_bounds(&node);
        let lp = solve_lp_warm(model, cfg, &bounds, node.hint.as_deref())?;

        let mut record = NodeRecord {
            id: node.id,
            bound_at_pop: global_bound,
            incumbent_at_pop: search.incumbent.as_ref().map(|(o, _)| *o),
            lp_objective: None,
            action: NodeAction::InfeasibleNode,
        };

        match lp.status {
            LpStatus::Infeasible => {
                if cfg.keep_node_log {
                    search.log.push(record);
                }
                continue;
            }
            LpStatus::Unbounded => {
                if node.id == 0 {
                    return Ok(MipSolution {
                        status: MipStatus::Unbounded,
                        objective: None,
                        values: None,
                        best_bound: sense_sign * f64::INFINITY,
                        gap: f64::INFINITY,
                        nodes: search.processed,
                        node_log: search.log,
                    });
                }
                return Err(SolverError::Numerical(
                    "bounded parent produced an unbounded child".into(),
                ));
            }
            LpStatus::Optimal => {}
        }
        let node_obj = lp.objective;
        record.lp_objective = Some(node_obj);

        if search.prunable(node_obj) {
            record.action = NodeAction::PrunedByBound;
            if cfg.keep_node_log {
                search.log.push(record);
            }
            continue;
        }

        let frac = search.fractional_binaries(&lp.values);
        let sos = if frac.is_none() {
            search.violated_sos2(&lp.values)
        } else {
            None
        };

        if frac.is_none() && sos.is_none() {
            record.action = NodeAction::Integral;
            search.try_incumbent(node_obj, &lp.values);
            if cfg.keep_node_log {
                search.log.push(record);
            }
            continue;
        }

        let child_hint = Rc::new(lp.basis_hint());
        if node.id == 0 || search.processed % HEURISTIC_EVERY == 0 {
            search.rounding_heuristic(&lp.values, Some(&child_hint))?;
        }

        if let Some((j, _)) = frac {
            record.action = NodeAction::BranchedBinary(j);
            for fix in [0.0, 1.0] {
                let mut overrides = node.overrides.clone();
                overrides.push((j, fix, fix));
                let child = Node {
                    id: search.next_id,
                    bound: node_obj,
                    overrides,
                    hint: Some(child_hint.clone()),
                };
                search.next_id += 1;
                search.heap.push(HeapKey {
                    score: search.score(child.bound),
                    id: child.id,
                });
                search.nodes_by_id.insert(child.id, child);
            }
        } else if let Some(si) = sos {
            record.action = NodeAction::BranchedSos2(si);
            let set = &model.sos2_sets()[si];
            let weights: Vec<f64> = set.members.iter().map(|&v| lp.values[v.0]).collect();
            let (head, tail) = branch_sos2(&set.members, &weights, cfg.int_tol)
                .expect("violated set must branch");
            for zero_fix in [head, tail] {
                let mut overrides = node.overrides.clone();
                for v in zero_fix {
                    overrides.push((v.0, 0.0, 0.0));
                }
                let child = Node {
                    id: search.next_id,
                    bound: node_obj,
                    overrides,
                    hint: Some(child_hint.clone()),
                };
                search.next_id += 1;
                search.heap.push(HeapKey {
                    score: search.score(child.bound),
                    id: child.id,
                });
                search.nodes_by_id.insert(child.id, child);
            }
        }
        if cfg.keep_node_log {
            search.log.push(record);
        }
    }

    let status = match (stop_status, &search.incumbent) {
        (Some(MipStatus::Optimal), Some(_)) => MipStatus::Optimal,
        (Some(s), _) => s,
        (None, Some(_)) => {
            // Tree exhausted: the incumbent is optimal and the bound closes.
            global_bound = search.incumbent.as_ref().unwrap().0;
            MipStatus::Optimal
        }
        (None, None) => MipStatus::Infeasible,
    };

    let (objective, values) = match &search.incumbent {
        Some((obj, vals)) => (Some(*obj), Some(vals.clone())),
        None => (None, None),
    };
    let gap = match objective {
        Some(obj) => rel_gap(sense_sign, global_bound, obj),
        None => f64::INFINITY,
    };
    let best_bound = if status == MipStatus::Infeasible {
        worst_bound
    } else {
        global_bound
    };

    Ok(MipSolution {
        status,
        objective,
        values,
        best_bound,
        gap,
        nodes: search.processed,
        node_log: search.log,
    })
}

fn rel_gap(sense_sign: f64, bound: f64, incumbent: f64) -> f64 {
    let diff = sense_sign * (bound - incumbent);
    diff.max(0.0) / incumbent.abs().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Model, RowSense, Sense};

    fn knapsack() -> Model {
        // values (6, 5, 4), weights (3, 2, 2), capacity 4 -> optimum 9.
        let mut m = Model::new("knapsack", Sense::Maximize);
        let x1 = m.add_binary("x1");
        let x2 = m.add_binary("x2");
        let x3 = m.add_binary("x3");
        m.add_constraint(
            "cap",
            "capacity",
            vec![(x1, 3.0), (x2, 2.0), (x3, 2.0)],
            RowSense::Le,
            4.0,
        );
        m.set_objective(vec![(x1, 6.0), (x2, 5.0), (x3, 4.0)], 0.0);
        m
    }

    #[test]
    fn knapsack_optimum() {
        let sol = solve_milp(&knapsack(), &SolverConfig::default()).unwrap();
        assert_eq!(sol.status, MipStatus::Optimal);
        assert!((sol.objective.unwrap() - 9.0).abs() < 1e-9);
        let v = sol.values.unwrap();
        assert!(v[0] < 0.5 && v[1] > 0.5 && v[2] > 0.5);
    }

    #[test]
    fn integral_relaxation_solves_at_root() {
        // Binary with an LP optimum already at 1.
        let mut m = Model::new("t", Sense::Maximize);
        let x = m.add_binary("x");
        m.set_objective(vec![(x, 1.0)], 0.0);
        let sol = solve_milp(&m, &SolverConfig::default()).unwrap();
        assert_eq!(sol.status, MipStatus::Optimal);
        assert_eq!(sol.nodes, 1);
        assert!((sol.objective.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_mip() {
        let mut m = Model::new("t", Sense::Maximize);
        let x = m.add_binary("x");
        m.add_constraint("a", "r", vec![(x, 1.0)], RowSense::Ge, 0.6);
        m.add_constraint("b", "r", vec![(x, 1.0)], RowSense::Le, 0.4);
        m.set_objective(vec![(x, 1.0)], 0.0);
        let sol = solve_milp(&m, &SolverConfig::default()).unwrap();
        assert_eq!(sol.status, MipStatus::Infeasible);
    }

    #[test]
    fn branch_sos2_matches_adjacency_examples() {
        let ids: Vec<VarId> = (0..3).map(VarId).collect();
        // Non-adjacent pair: children zero the first and last member.
        let (a, b) = branch_sos2(&ids, &[0.5, 0.0, 0.5], 1e-6).unwrap();
        assert_eq!(a, vec![VarId(0)]);
        assert_eq!(b, vec![VarId(2)]);
        // Adjacent pair: not violated.
        assert_eq!(
            branch_sos2(&ids, &[0.3, 0.7, 0.0], 1e-6),
            Err(Sos2BranchError::NotViolated)
        );
        // Three nonzero: both children exclude the parent point.
        let (a, b) = branch_sos2(&ids, &[0.2, 0.3, 0.5], 1e-6).unwrap();
        assert!(!a.is_empty() && !b.is_empty());
        assert!(a.iter().chain(b.iter()).any(|v| v.0 == 0));
        assert!(a.iter().chain(b.iter()).any(|v| v.0 == 2));
    }

    #[test]
    fn sos2_children_cover_all_feasible_supports() {
        // For set sizes up to 5 and every violated weight pattern over a
        // small grid, every SOS2-feasible support must stay reachable in at
        // least one child.
        for n in 3..=5usize {
            let ids: Vec<VarId> = (0..n).map(VarId).collect();
            let mut patterns: Vec<Vec<f64>> = Vec::new();
            for mask in 1u32..(1 << n) {
                let w: Vec<f64> = (0..n)
                    .map(|i| if mask & (1 << i) != 0 { 1.0 } else { 0.0 })
                    .collect();
                patterns.push(w);
            }
            for w in patterns {
                match branch_sos2(&ids, &w, 1e-6) {
                    Err(Sos2BranchError::NotViolated) => {}
                    Ok((head, tail)) => {
                        // Enumerate all SOS2-feasible supports of the parent.
                        for i in 0..n {
                            for pair in [vec![i], if i + 1 < n { vec![i, i + 1] } else { vec![i] }]
                            {
                                let in_head =
                                    pair.iter().all(|&p| !head.iter().any(|v| v.0 == p));
                                let in_tail =
                                    pair.iter().all(|&p| !tail.iter().any(|v| v.0 == p));
                                assert!(
                                    in_head || in_tail,
                                    "support {pair:?} lost for n={n}, weights {w:?}"
                                );
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn deterministic_reruns() {
        let cfg = SolverConfig {
            keep_node_log: true,
            ..SolverConfig::default()
        };
        let a = solve_milp(&knapsack(), &cfg).unwrap();
        let b = solve_milp(&knapsack(), &cfg).unwrap();
        assert_eq!(a.nodes, b.nodes);
        assert_eq!(a.objective.unwrap().to_bits(), b.objective.unwrap().to_bits());
        let av = a.values.unwrap();
        let bv = b.values.unwrap();
        assert_eq!(av.len(), bv.len());
        for (x, y) in av.iter().zip(bv.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert_eq!(a.node_log.len(), b.node_log.len());
        for (r, s) in a.node_log.iter().zip(b.node_log.iter()) {
            assert_eq!(r.id, s.id);
        }
    }

    #[test]
    fn weak_duality_throughout_search() {
        let cfg = SolverConfig {
            keep_node_log: true,
            ..SolverConfig::default()
        };
        let sol = solve_milp(&knapsack(), &cfg).unwrap();
        for rec in &sol.node_log {
            if let Some(inc) = rec.incumbent_at_pop {
                assert!(
                    rec.bound_at_pop >= inc - 1e-9,
                    "bound {} fell below incumbent {}",
                    rec.bound_at_pop,
                    inc
                );
            }
        }
    }
}
