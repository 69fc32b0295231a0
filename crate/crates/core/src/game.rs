//! Game orchestration: the status-quo baseline, the social-welfare solve,
//! the linearized Nash-bargaining solve with grid refinement, and the exact
//! bargaining objective.

use oligofair_solver::branch::{solve_milp_with_start, MipStatus};
use oligofair_solver::SolverConfig;
use thiserror::Error;

use crate::builder::{
    build_nash_model, build_social_welfare_model, default_grid_margin, make_profit_grid,
    BuildError, BuiltModel,
};
use crate::instance::Instance;
use crate::outcome::{decode_outcome, GameMode, GameOutcome, NashEval};

#[derive(Debug, Error)]
pub enum GameError {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Solver(#[from] oligofair_solver::SolverError),
    #[error("status-quo model is infeasible: {0}")]
    StatusQuoInfeasible(String),
    #[error("{mode} model is infeasible")]
    Infeasible { mode: GameMode },
    #[error("search stopped at {status:?} without an incumbent")]
    LimitReached { status: MipStatus },
    #[error("firm {firm}: empty bargaining range (no surplus to split)")]
    EmptyBargainingRange { firm: String },
    #[error("log domain: {0}")]
    LogDomain(String),
}

/// Baseline profits before reallocation: free customers removed,
/// incumbents pinned to their firms with the contract choice left free.
#[derive(Clone, Debug)]
pub struct StatusQuo {
    pub profits: Vec<f64>,
    pub outcome: GameOutcome,
}

impl StatusQuo {
    pub fn total(&self) -> f64 {
        self.profits.iter().sum()
    }
}

#[derive(Clone, Debug)]
pub struct GameConfig {
    pub solver: SolverConfig,
    /// Grid points per firm; defaults to the instance's game parameters.
    pub grid_size: Option<usize>,
    /// Refinement rounds after the initial solve.
    pub refine_rounds: Option<usize>,
    /// Multiplier widening the bargaining-surplus budget when sizing grids.
    pub headroom: f64,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            solver: SolverConfig::default(),
            grid_size: None,
            refine_rounds: None,
            headroom: 1.05,
        }
    }
}

/// A trivially scheduled point used to seed the branch-and-bound search:
/// every customer stays with its incumbent firm (free customers spread
/// round-robin) under the longest contract, renewed back to back.
fn naive_start(inst: &Instance, built: &BuiltModel) -> Vec<f64> {
    let mut values = vec![0.0; built.model.num_vars()];
    let nf = inst.firms.len();
    let mut k_star = 0;
    for (k, contract) in inst.contracts.iter().enumerate() {
        if contract.duration > inst.contracts[k_star].duration {
            k_star = k;
        }
    }
    let duration = inst.contracts[k_star].duration;
    for (c, cust) in inst.customers.iter().enumerate() {
        let f = cust.incumbent_pair().map(|(f, _)| f).unwrap_or(c % nf);
        let mut p = 0;
        while p < inst.periods {
            values[built.vars.sign[c][f][k_star][p].0] = 1.0;
            for q in p..(p + duration).min(inst.periods) {
                values[built.vars.serve[c][f][k_star][q].0] = 1.0;
            }
            p += duration;
        }
    }
    values
}

/// The instance restricted to its incumbent customers.
pub fn restrict_to_incumbents(inst: &Instance) -> Instance {
    let mut restricted = inst.clone();
    restricted.customers.retain(|c| !c.is_free());
    restricted.rebuild_tank_index();
    restricted
}

fn accept(
    sol: oligofair_solver::branch::MipSolution,
    mode: GameMode,
) -> Result<oligofair_solver::branch::MipSolution, GameError> {
    match sol.status {
        MipStatus::Optimal => Ok(sol),
        MipStatus::Infeasible => Err(GameError::Infeasible { mode }),
        MipStatus::Unbounded => Err(GameError::LimitReached { status: sol.status }),
        MipStatus::NodeLimit | MipStatus::TimeLimit | MipStatus::Feasible => {
            if sol.values.is_some() {
                Ok(sol)
            } else {
                Err(GameError::LimitReached { status: sol.status })
            }
        }
    }
}

/// Solve the restricted market and return per-firm baseline profits.
pub fn compute_status_quo(inst: &Instance, cfg: &GameConfig) -> Result<StatusQuo, GameError> {
    let restricted = restrict_to_incumbents(inst);
    let built = build_social_welfare_model(&restricted, true)?;
    let start = naive_start(&restricted, &built);
    let sol = solve_milp_with_start(&built.model, &cfg.solver, Some(&start))?;
    if sol.status == MipStatus::Infeasible {
        return Err(GameError::StatusQuoInfeasible(
            "no feasible schedule for the incumbent allocation".into(),
        ));
    }
    let sol = accept(sol, GameMode::StatusQuo)?;
    let outcome = decode_outcome(&restricted, &built, &sol, GameMode::StatusQuo);
    Ok(StatusQuo {
        profits: outcome.profits.clone(),
        outcome,
    })
}

/// Maximize the summed profit of all firms over the full market.
pub fn solve_social_welfare(inst: &Instance, cfg: &GameConfig) -> Result<GameOutcome, GameError> {
    let built = build_social_welfare_model(inst, false)?;
    let start = naive_start(inst, &built);
    let sol = accept(
        solve_milp_with_start(&built.model, &cfg.solver, Some(&start))?,
        GameMode::SocialWelfare,
    )?;
    Ok(decode_outcome(inst, &built, &sol, GameMode::SocialWelfare))
}

/// Exact bargaining objective at a profit vector: the weighted product of
/// surpluses and its logarithm. Surpluses must be strictly positive.
pub fn true_nash_objective(
    profits: &[f64],
    status_quo: &[f64],
    alpha: &[f64],
) -> Result<(f64, f64), GameError> {
    let mut log = 0.0;
    for ((&pi, &sq), &a) in profits.iter().zip(status_quo).zip(alpha) {
        let surplus = pi - sq;
        if surplus <= 0.0 {
            return Err(GameError::LogDomain(format!(
                "surplus {surplus} is not positive"
            )));
        }
        log += a * surplus.ln();
    }
    Ok((log.exp(), log))
}

/// Weighted Nash product, defined (as zero) at zero surpluses.
pub fn nash_product(
    profits: &[f64],
    status_quo: &[f64],
    alpha: &[f64],
) -> Result<f64, GameError> {
    let mut product = 1.0;
    for ((&pi, &sq), &a) in profits.iter().zip(status_quo).zip(alpha) {
        let surplus = pi - sq;
        if surplus < 0.0 {
            return Err(GameError::LogDomain(format!(
                "surplus {surplus} is negative"
            )));
        }
        product *= surplus.powf(a);
    }
    Ok(product)
}

/// Solve the linearized Nash-bargaining game.
///
/// Grids span from just above each firm's status-quo profit to the
/// status-quo profit plus the market's surplus budget (the social-welfare
/// total minus the status-quo total, with headroom). Each refinement round
/// halves the grid span around the incumbent profits and re-solves; the
/// best outcome by the exact bargaining objective wins.
pub fn solve_nash(
    inst: &Instance,
    sq: &StatusQuo,
    fsw: &GameOutcome,
    cfg: &GameConfig,
) -> Result<GameOutcome, GameError> {
    let nf = inst.firms.len();
    let alpha = &inst.game.negotiation_power;
    let grid_size = cfg.grid_size.unwrap_or(inst.game.grid_size).max(2);
    let rounds = cfg.refine_rounds.unwrap_or(inst.game.refine_rounds);

    let budget = fsw.total_profit() - sq.total();
    let margins: Vec<f64> = sq.profits.iter().map(|&s| default_grid_margin(s)).collect();
    let mut uppers = Vec::with_capacity(nf);
    for f in 0..nf {
        let upper = sq.profits[f] + cfg.headroom * budget;
        if upper <= sq.profits[f] + margins[f] {
            return Err(GameError::EmptyBargainingRange {
                firm: inst.firms[f].id.clone(),
            });
        }
        uppers.push(upper);
    }

    let mut grids: Vec<Vec<f64>> = Vec::with_capacity(nf);
    for f in 0..nf {
        grids.push(
            make_profit_grid(sq.profits[f], uppers[f], grid_size, margins[f]).map_err(
                |_| GameError::EmptyBargainingRange {
                    firm: inst.firms[f].id.clone(),
                },
            )?,
        );
    }

    let mut best: Option<(f64, GameOutcome)> = None;
    for _round in 0..=rounds {
        let built = build_nash_model(inst, &sq.profits, &grids)?;
        let start = naive_start(inst, &built);
        let sol = accept(
            solve_milp_with_start(&built.model, &cfg.solver, Some(&start))?,
            GameMode::NashBargaining,
        )?;
        let approx = sol.objective.expect("incumbent objective");
        let mut outcome = decode_outcome(inst, &built, &sol, GameMode::NashBargaining);
        let (product, log) = true_nash_objective(&outcome.profits, &sq.profits, alpha)?;
        outcome.nash = Some(NashEval {
            product,
            log,
            approx_log: approx,
        });
        let incumbent_profits = outcome.profits.clone();
        let improved = best.as_ref().map_or(true, |(b, _)| log > *b);
        if improved {
            best = Some((log, outcome));
        }

        // Halve each grid around the incumbent profit for the next round.
        let mut next = Vec::with_capacity(nf);
        for f in 0..nf {
            let lo_limit = sq.profits[f] + margins[f];
            let old_span = grids[f][grid_size - 1] - grids[f][0];
            let span = (old_span / 2.0).max(margins[f]);
            let center = incumbent_profits[f];
            let lo = (center - span / 2.0).clamp(lo_limit, (uppers[f] - span).max(lo_limit));
            let hi = (lo + span).min(uppers[f]);
            let step = (hi - lo) / (grid_size - 1) as f64;
            next.push((0..grid_size).map(|i| lo + step * i as f64).collect());
        }
        grids = next;
    }

    Ok(best.expect("at least one round ran").1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nash_product_examples() {
        // (0.5, 0.5) with surpluses (4, 9): sqrt(36) = 6.
        let phi = nash_product(&[4.0, 9.0], &[0.0, 0.0], &[0.5, 0.5]).unwrap();
        assert!((phi - 6.0).abs() < 1e-12);
        // A zero surplus collapses the product.
        let phi = nash_product(&[5.0, 0.0], &[0.0, 0.0], &[0.5, 0.5]).unwrap();
        assert_eq!(phi, 0.0);
    }

    #[test]
    fn log_identity() {
        let (phi, psi) = true_nash_objective(&[4.0, 9.0], &[0.0, 0.0], &[0.5, 0.5]).unwrap();
        assert!((phi - 6.0).abs() < 1e-12);
        assert!((psi.exp() - phi).abs() <= 1e-12 * phi);
    }

    #[test]
    fn log_domain_error_at_zero_surplus() {
        assert!(matches!(
            true_nash_objective(&[1.0, 0.0], &[0.0, 0.0], &[0.5, 0.5]),
            Err(GameError::LogDomain(_))
        ));
    }
}
