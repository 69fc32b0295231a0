//! Brute-force optimizer for tiny instances.
//!
//! The oracle enumerates the discrete structure outright: every
//! contract-scheduling pattern satisfying the assignment logic (exact
//! assignment, closed-contract coverage, single signature) for every
//! customer, crossed with every spot-tier activation pattern. The
//! remaining continuous subproblem (flows, inventory, energy, costs) is an
//! LP solved exactly per pattern. No pruning: exhaustiveness is the point.
//!
//! In bargaining mode each pattern's LP carries the rationality rows and
//! maximizes total profit; with inter-firm swaps disabled the per-pattern
//! profits are separable and the scored objective is the exact optimum of
//! the bargaining objective over the pattern.

use oligofair_solver::branch::{MipSolution, MipStatus};
use oligofair_solver::simplex::{solve_lp_with_bounds, LpStatus};
use thiserror::Error;

use crate::builder::{BuildError, BuiltModel, ModelBuilder};
use crate::game::StatusQuo;
use crate::instance::Instance;
use crate::outcome::{decode_outcome, GameMode, GameOutcome, NashEval};

#[derive(Clone, Debug)]
pub struct OracleLimits {
    pub max_firms: usize,
    pub max_customers: usize,
    pub max_contracts: usize,
    pub max_periods: usize,
    pub max_tiers: usize,
    pub max_patterns: u64,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_firms: 2,
            max_customers: 4,
            max_contracts: 2,
            max_periods: 4,
            max_tiers: 2,
            max_patterns: 5_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleMode {
    SocialWelfare,
    Nash,
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("instance exceeds oracle limits: {0}")]
    LimitsExceeded(String),
    #[error("enumeration would visit {estimate} patterns, above the configured maximum")]
    TooLarge { estimate: u128 },
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Solver(#[from] oligofair_solver::SolverError),
    #[error("no feasible assignment pattern")]
    Infeasible,
    #[error("no pattern gives every firm a positive surplus")]
    NoBargainingSolution,
    #[error("bargaining mode needs a status-quo profile")]
    MissingStatusQuo,
}

pub struct OracleOutcome {
    /// Total profit in social-welfare mode; the exact log bargaining
    /// objective in bargaining mode.
    pub objective: f64,
    pub outcome: GameOutcome,
    /// Patterns whose LP was solved.
    pub patterns: u64,
}

/// One customer schedule: contract segments (firm, contract, 0-based start).
type Schedule = Vec<(usize, usize, usize)>;

fn schedules_of_customer(inst: &Instance) -> Vec<Schedule> {
    let mut out = Vec::new();
    let mut current: Schedule = Vec::new();
    fn recurse(
        inst: &Instance,
        p: usize,
        current: &mut Schedule,
        out: &mut Vec<Schedule>,
    ) {
        if p >= inst.periods {
            out.push(current.clone());
            return;
        }
        for f in 0..inst.firms.len() {
            for (k, contract) in inst.contracts.iter().enumerate() {
                current.push((f, k, p));
                recurse(inst, p + contract.duration, current, out);
                current.pop();
            }
        }
    }
    recurse(inst, 0, &mut current, &mut out);
    out
}

fn count_schedules(inst: &Instance) -> u128 {
    let mut memo = vec![0u128; inst.periods + 1];
    memo[inst.periods] = 1;
    for p in (0..inst.periods).rev() {
        let mut total = 0u128;
        for contract in &inst.contracts {
            let next = (p + contract.duration).min(inst.periods);
            total += inst.firms.len() as u128 * memo[next];
        }
        memo[p] = total;
    }
    memo[0]
}

/// Exhaustively find the optimal outcome of a tiny instance.
pub fn enumerate_optimal(
    inst: &Instance,
    mode: OracleMode,
    sq: Option<&StatusQuo>,
    limits: &OracleLimits,
) -> Result<OracleOutcome, OracleError> {
    check_limits(inst, limits)?;
    if mode == OracleMode::Nash && sq.is_none() {
        return Err(OracleError::MissingStatusQuo);
    }

    let (ni, nf, np, nb) = (
        inst.products.len(),
        inst.firms.len(),
        inst.periods,
        inst.tiers.len(),
    );
    // Spot tiers apply per (product-with-tanks, firm, period).
    let products_with_tanks: Vec<usize> = (0..ni)
        .filter(|&i| (0..inst.num_tanks()).any(|t| inst.tank(t).product == i))
        .collect();
    let tier_slots: Vec<(usize, usize, usize)> = if nb == 0 {
        Vec::new()
    } else {
        products_with_tanks
            .iter()
            .flat_map(|&i| {
                (0..nf).flat_map(move |f| (0..np).map(move |p| (i, f, p)))
            })
            .collect()
    };

    // Estimate before materializing anything.
    let per_customer = count_schedules(inst);
    let mut estimate: u128 = 1;
    for _ in 0..inst.customers.len() {
        estimate = estimate.saturating_mul(per_customer);
    }
    for _ in 0..tier_slots.len() {
        estimate = estimate.saturating_mul((nb + 1) as u128);
    }
    if estimate > limits.max_patterns as u128 {
        return Err(OracleError::TooLarge { estimate });
    }

    let schedules = schedules_of_customer(inst);
    if schedules.is_empty() {
        return Err(OracleError::Infeasible);
    }

    // Shared LP: social-welfare objective, plus rationality rows in
    // bargaining mode.
    let mut builder = ModelBuilder::new(inst, false)?;
    builder.build_assignment_block();
    builder.build_flow_block();
    builder.build_plant_block();
    builder.build_cost_blocks();
    builder.build_profit_and_rationality(match mode {
        OracleMode::Nash => Some(&sq.unwrap().profits),
        OracleMode::SocialWelfare => None,
    });
    builder.build_social_welfare_objective();
    let built: BuiltModel = builder.finish();
    let base_bounds: Vec<(f64, f64)> = built
        .model
        .vars()
        .iter()
        .map(|v| (v.lb, v.ub))
        .collect();
    let cfg = oligofair_solver::SolverConfig::default();

    let nc = inst.customers.len();
    let mut sched_pick = vec![0usize; nc];
    let mut tier_pick = vec![0usize; tier_slots.len()];
    let mut patterns = 0u64;
    let mut best: Option<(f64, Vec<(f64, f64)>)> = None;

    'outer: loop {
        // Apply the pattern to a fresh bound vector.
        let mut bounds = base_bounds.clone();
        for (c, &si) in sched_pick.iter().enumerate() {
            apply_schedule(inst, &built, c, &schedules[si], &mut bounds);
        }
        for (slot, &choice) in tier_pick.iter().enumerate() {
            let (i, f, p) = tier_slots[slot];
            for b in 0..nb {
                let fix = if choice == b + 1 { 1.0 } else { 0.0 };
                bounds[built.vars.tier_active[i][f][b][p].0] = (fix, fix);
            }
        }

        patterns += 1;
        let lp = solve_lp_with_bounds(&built.model, &cfg, &bounds)?;
        if lp.status == LpStatus::Optimal {
            let score = match mode {
                OracleMode::SocialWelfare => Some(lp.objective),
                OracleMode::Nash => {
                    let sq = sq.unwrap();
                    let alpha = &inst.game.negotiation_power;
                    let mut log = 0.0;
                    let mut ok = true;
                    for f in 0..nf {
                        let surplus = lp.values[built.vars.profit[f].0] - sq.profits[f];
                        if surplus <= 0.0 {
                            ok = false;
                            break;
                        }
                        log += alpha[f] * surplus.ln();
                    }
                    ok.then_some(log)
                }
            };
            if let Some(score) = score {
                // Strict improvement keeps the first pattern found: the
                // deterministic tie-break by pattern index.
                if best.as_ref().map_or(true, |(b, _)| score > *b) {
                    best = Some((score, bounds.clone()));
                }
            }
        }

        // Advance the combined odometer: schedules first, then tiers.
        for c in 0..nc {
            sched_pick[c] += 1;
            if sched_pick[c] < schedules.len() {
                continue 'outer;
            }
            sched_pick[c] = 0;
        }
        for s in 0..tier_slots.len() {
            tier_pick[s] += 1;
            if tier_pick[s] <= nb {
                continue 'outer;
            }
            tier_pick[s] = 0;
        }
        break;
    }

    let (score, bounds) = best.ok_or(match mode {
        OracleMode::SocialWelfare => OracleError::Infeasible,
        OracleMode::Nash => OracleError::NoBargainingSolution,
    })?;
    let lp = solve_lp_with_bounds(&built.model, &cfg, &bounds)?;
    let sol = MipSolution {
        status: MipStatus::Optimal,
        objective: Some(lp.objective),
        values: Some(lp.values),
        best_bound: lp.objective,
        gap: 0.0,
        nodes: patterns,
        node_log: Vec::new(),
    };
    let game_mode = match mode {
        OracleMode::SocialWelfare => GameMode::SocialWelfare,
        OracleMode::Nash => GameMode::NashBargaining,
    };
    let mut outcome = decode_outcome(inst, &built, &sol, game_mode);
    if mode == OracleMode::Nash {
        outcome.objective = score;
        outcome.nash = Some(NashEval {
            product: score.exp(),
            log: score,
            approx_log: score,
        });
    }
    Ok(OracleOutcome {
        objective: score,
        outcome,
        patterns,
    })
}

fn check_limits(inst: &Instance, limits: &OracleLimits) -> Result<(), OracleError> {
    let checks = [
        (inst.firms.len(), limits.max_firms, "firms"),
        (inst.customers.len(), limits.max_customers, "customers"),
        (inst.contracts.len(), limits.max_contracts, "contracts"),
        (inst.periods, limits.max_periods, "periods"),
        (inst.tiers.len(), limits.max_tiers, "tiers"),
    ];
    for (have, max, what) in checks {
        if have > max {
            return Err(OracleError::LimitsExceeded(format!(
                "{have} {what} exceed the limit of {max}"
            )));
        }
    }
    Ok(())
}

fn apply_schedule(
    inst: &Instance,
    built: &BuiltModel,
    c: usize,
    schedule: &Schedule,
    bounds: &mut [(f64, f64)],
) {
    let (nf, nk, np) = (inst.firms.len(), inst.contracts.len(), inst.periods);
    let v = &built.vars;
    // Zero everything, then raise the scheduled segments.
    for f in 0..nf {
        for k in 0..nk {
            for p in 0..np {
                bounds[v.serve[c][f][k][p].0] = (0.0, 0.0);
                bounds[v.sign[c][f][k][p].0] = (0.0, 0.0);
            }
        }
    }
    let mut firm_at = vec![usize::MAX; np];
    for &(f, k, start) in schedule {
        bounds[v.sign[c][f][k][start].0] = (1.0, 1.0);
        let end = (start + inst.contracts[k].duration).min(np);
        for p in start..end {
            bounds[v.serve[c][f][k][p].0] = (1.0, 1.0);
            firm_at[p] = f;
        }
    }
    for p in 1..np {
        for f in 0..nf {
            let gained = firm_at[p] == f && firm_at[p - 1] != f;
            let lost = firm_at[p - 1] == f && firm_at[p] != f;
            bounds[v.acquire[c][f][p].0] = if gained { (1.0, 1.0) } else { (0.0, 0.0) };
            bounds[v.forfeit[c][f][p].0] = if lost { (1.0, 1.0) } else { (0.0, 0.0) };
        }
    }
}
