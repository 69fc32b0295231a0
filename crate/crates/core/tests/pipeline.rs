//! End-to-end runs of the three solves on hand-built instances, with
//! verification, oracle agreement and report shape checks.

use oligofair_core::game::{
    compute_status_quo, solve_nash, solve_social_welfare, GameConfig,
};
use oligofair_core::generate::{generate_synthetic, Dims};
use oligofair_core::oracle::{enumerate_optimal, OracleLimits, OracleMode};
use oligofair_core::outcome::GameOutcome;
use oligofair_core::report;
use oligofair_core::testkit::{single_firm_profit_50, toy_duopoly};
use oligofair_core::verify::verify_outcome;

fn cfg() -> GameConfig {
    GameConfig::default()
}

#[test]
fn hand_checked_status_quo_profit_is_50() {
    // Revenue 100, service 30, electricity 20: profit 50.
    let inst = single_firm_profit_50();
    let sq = compute_status_quo(&inst, &cfg()).unwrap();
    assert!(
        (sq.profits[0] - 50.0).abs() < 1e-6,
        "expected 50, got {}",
        sq.profits[0]
    );
    let report = verify_outcome(&inst, &sq.outcome);
    assert!(report.max_violation() <= 1e-7, "{:?}", report.families);
}

#[test]
fn plantless_firm_with_no_customers_pays_penalized_idle_energy() {
    // A firm that cannot run its plant is pinned at zero power: theta sits
    // at the lower threshold and the penalized under-band deviation makes
    // up the gap, so its baseline profit is exactly the negated energy
    // bill of the zero-power decomposition.
    let mut inst = toy_duopoly();
    inst.customers[1].incumbent = vec![]; // firm B loses its incumbent
    inst.firms[1].max_flow = vec![0.0];
    let sq = compute_status_quo(&inst, &cfg()).unwrap();

    let firm = &inst.firms[1];
    let floor = (1.0 - firm.energy.tolerance) * firm.energy.contracted_power;
    let expected: f64 = firm
        .energy
        .price
        .iter()
        .map(|ep| {
            let rate = ep * inst.hours_per_period;
            rate * floor + firm.energy.penalty_factor * rate * floor
        })
        .sum::<f64>();
    assert!(
        (sq.profits[1] + expected).abs() < 1e-6,
        "expected -{expected}, got {}",
        sq.profits[1]
    );
    for p in 0..inst.periods {
        assert!((sq.outcome.power[1][p]).abs() < 1e-7);
        assert!((sq.outcome.band[1][p] - floor).abs() < 1e-7);
        assert!((sq.outcome.under[1][p] - floor).abs() < 1e-7);
        assert!(sq.outcome.over[1][p].abs() < 1e-7);
    }
}

#[test]
fn idle_firm_with_a_plant_spins_into_the_energy_band() {
    // With a usable plant the optimizer avoids the under-consumption
    // penalty by running flow (no liquid production) up to the band floor:
    // strictly cheaper than paying the penalized shortfall.
    let mut inst = toy_duopoly();
    inst.customers[1].incumbent = vec![];
    let sq = compute_status_quo(&inst, &cfg()).unwrap();

    let firm = &inst.firms[1];
    let floor = (1.0 - firm.energy.tolerance) * firm.energy.contracted_power;
    let expected: f64 = firm
        .energy
        .price
        .iter()
        .map(|ep| ep * inst.hours_per_period * floor)
        .sum::<f64>();
    assert!(
        (sq.profits[1] + expected).abs() < 1e-6,
        "expected -{expected}, got {}",
        sq.profits[1]
    );
    for p in 0..inst.periods {
        assert!((sq.outcome.power[1][p] - floor).abs() < 1e-7);
        assert!(sq.outcome.under[1][p].abs() < 1e-7);
        assert!(sq.outcome.over[1][p].abs() < 1e-7);
        assert!(sq.outcome.production[0][1][p].abs() < 1e-7);
    }
}

#[test]
fn in_band_power_has_zero_deviations() {
    let inst = single_firm_profit_50();
    let sq = compute_status_quo(&inst, &cfg()).unwrap();
    for p in 0..inst.periods {
        assert!(sq.outcome.over[0][p].abs() < 1e-7);
        assert!(sq.outcome.under[0][p].abs() < 1e-7);
        let rate = inst.firms[0].energy.price[p] * inst.hours_per_period;
        assert!(
            (sq.outcome.energy_cost[0][p] - rate * sq.outcome.power[0][p]).abs() < 1e-6,
            "in-band energy cost must be rate * power"
        );
    }
}

fn assert_verified(inst: &oligofair_core::Instance, out: &GameOutcome) {
    let report = verify_outcome(inst, out);
    assert!(
        report.max_violation() <= 1e-7,
        "max violation {} at {:?}",
        report.max_violation(),
        report
            .families
            .iter()
            .max_by(|a, b| a.max_violation.total_cmp(&b.max_violation))
    );
    assert!(report.profit_rel_error <= 1e-6);
}

#[test]
fn toy_duopoly_full_pipeline() {
    let inst = toy_duopoly();
    let cfg = cfg();

    let sq = compute_status_quo(&inst, &cfg).unwrap();
    let restricted = oligofair_core::game::restrict_to_incumbents(&inst);
    assert_verified(&restricted, &sq.outcome);

    let fsw = solve_social_welfare(&inst, &cfg).unwrap();
    assert_verified(&inst, &fsw);

    let flns = solve_nash(&inst, &sq, &fsw, &cfg).unwrap();
    assert_verified(&inst, &flns);

    // Rationality and the profit sandwich.
    for f in 0..inst.firms.len() {
        assert!(
            flns.profits[f] >= sq.profits[f] - 1e-7,
            "firm {f} below status quo"
        );
    }
    let scale = fsw.total_profit().abs().max(1.0);
    assert!(sq.total() <= flns.total_profit() + 1e-6 * scale);
    assert!(flns.total_profit() <= fsw.total_profit() + 1e-6 * scale);

    // The linearized solve reports its own objective and the exact one.
    let nash = flns.nash.expect("nash evaluation attached");
    assert!((nash.log.exp() - nash.product).abs() <= 1e-12 * nash.product.abs().max(1e-300));

    // Status-quo point re-scored by the welfare objective equals the
    // solver's objective.
    assert!((sq.outcome.objective - sq.total()).abs() < 1e-6);
}

#[test]
fn toy_duopoly_matches_oracle() {
    let mut inst = toy_duopoly();
    // Swaps off so the per-pattern bargaining score is exact.
    inst.swap.capacity_fraction = 0.0;
    let cfg = cfg();
    let limits = OracleLimits::default();

    let fsw = solve_social_welfare(&inst, &cfg).unwrap();
    let oracle_sw = enumerate_optimal(&inst, OracleMode::SocialWelfare, None, &limits).unwrap();
    let rel = (fsw.total_profit() - oracle_sw.objective).abs()
        / oracle_sw.objective.abs().max(1.0);
    assert!(
        rel <= 1e-6,
        "welfare mismatch: solver {} vs oracle {}",
        fsw.total_profit(),
        oracle_sw.objective
    );
    assert_verified(&inst, &oracle_sw.outcome);

    let sq = compute_status_quo(&inst, &cfg).unwrap();
    let flns = solve_nash(&inst, &sq, &fsw, &cfg).unwrap();
    let oracle_nash =
        enumerate_optimal(&inst, OracleMode::Nash, Some(&sq), &limits).unwrap();
    let psi_solver = flns.nash.unwrap().log;
    // The oracle maximizes the exact objective over the same patterns.
    assert!(
        oracle_nash.objective >= psi_solver - 1e-9,
        "oracle {} must not trail the linearized solve {}",
        oracle_nash.objective,
        psi_solver
    );
    let rel = (oracle_nash.objective - psi_solver).abs() / oracle_nash.objective.abs().max(1.0);
    assert!(
        rel <= 1e-6,
        "bargaining mismatch: solver {psi_solver} vs oracle {}",
        oracle_nash.objective
    );
}

#[test]
fn oracle_two_branch_comparison() {
    // One customer, two firms, one contract, one period: the oracle picks
    // the firm with the higher net profit contribution.
    let mut dims = Dims::new(2, 1, 1);
    dims.contracts = 1;
    dims.tiers = 0;
    dims.free_share = 0.0;
    dims.swap_fraction = 0.0;
    let mut inst = generate_synthetic(17, &dims);
    // Neutralize switching costs so re-pinning the incumbent below keeps
    // both branches on equal footing.
    for cust in &mut inst.customers {
        cust.acquisition_fixed = vec![0.0; 2];
        cust.forfeit_fixed = vec![0.0; 2];
        for t in &mut cust.tanks {
            t.acquisition_variable = vec![0.0; 2];
            t.forfeit_variable = vec![0.0; 2];
        }
    }
    let limits = OracleLimits::default();
    let oracle = enumerate_optimal(&inst, OracleMode::SocialWelfare, None, &limits).unwrap();
    assert_eq!(oracle.patterns, 2);

    // Re-derive the two-branch comparison with the solver on pinned
    // assignments.
    let mut best = f64::NEG_INFINITY;
    for f in 0..2 {
        let mut pinned = inst.clone();
        pinned.customers[0].incumbent = vec![(f, 0)];
        let sq = compute_status_quo(&pinned, &cfg()).unwrap();
        best = best.max(sq.total());
    }
    assert!((oracle.objective - best).abs() <= 1e-6 * best.abs().max(1.0));
}

#[test]
fn reports_from_toy_outcome() {
    let inst = toy_duopoly();
    let cfg = cfg();
    let sq = compute_status_quo(&inst, &cfg).unwrap();
    let fsw = solve_social_welfare(&inst, &cfg).unwrap();

    let rep = report::build_report(&fsw, Some(&sq.profits), 10);

    // Shares sum to 100 within rounding.
    let share_sum: f64 = rep.shares.iter().filter_map(|r| r.share_pct).sum();
    assert!((share_sum - 100.0).abs() < 0.1);

    // Breakdown percentages sum to 100 per firm.
    for row in &rep.breakdown {
        let total: f64 = [
            row.service_pct,
            row.electricity_pct,
            row.inventory_pct,
            row.acquisition_pct,
            row.forfeit_pct,
        ]
        .iter()
        .filter_map(|x| *x)
        .sum();
        assert!((total - 100.0).abs() < 0.1, "firm {} sums to {total}", row.firm);
    }

    // Timeline rows tile the horizon per customer.
    for c in &fsw.customers {
        let mut covered = vec![false; inst.periods];
        for row in rep.timeline.iter().filter(|r| &r.customer == c) {
            for p in row.start..=row.end {
                assert!(!covered[p - 1], "overlap at period {p} for {c}");
                covered[p - 1] = true;
            }
        }
        assert!(covered.iter().all(|&x| x), "gaps in timeline for {c}");
    }

    // Demand-source fractions sum to one on active periods.
    for (_, rows) in &rep.demand_sources {
        for r in rows {
            if r.assigned_demand > 0.0 {
                let sum = r.in_house + r.swapped + r.spot;
                assert!((sum - 1.0).abs() < 1e-9);
            }
        }
    }

    // CSV and SVG encode the same numbers.
    let csv = report::render_csv(&rep);
    let svg = report::render_svg(&rep, inst.periods);
    let breakdown_csv = &csv.iter().find(|(n, _)| n == "cost_breakdown.csv").unwrap().1;
    let breakdown_svg = &svg.iter().find(|(n, _)| n == "cost_breakdown.svg").unwrap().1;
    for row in &rep.breakdown {
        if let Some(pct) = row.service_pct {
            let formatted = format!("{pct:.16e}");
            assert!(breakdown_csv.contains(&formatted));
            assert!(breakdown_svg.contains(&format!("data-value=\"{formatted}\"")));
        }
    }

    // Round trip of the serialized outcome: reports recompute identically.
    let json = fsw.to_json();
    let back = GameOutcome::from_json(&json).unwrap();
    let rep2 = report::build_report(&back, Some(&sq.profits), 10);
    assert_eq!(
        serde_json::to_string(&rep).unwrap(),
        serde_json::to_string(&rep2).unwrap()
    );
}

#[test]
fn gantt_splits_runs_at_renewals() {
    // A customer renewing the same 20-quarter contract over 60 periods
    // shows up as three 20-period rows; a firm switch at p=5 breaks a row.
    let mut out = minimal_outcome(1, 2, 60);
    // Customer 0: sign contract 0 with firm 0 at periods 1, 21, 41.
    for p in 0..60 {
        out.serve[0][0][0][p] = 1.0;
    }
    for p in [0, 20, 40] {
        out.sign[0][0][0][p] = 1.0;
    }
    let rows = report::contract_gantt(&out, 10);
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.end + 1 - r.start == 20));

    let mut out = minimal_outcome(1, 2, 8);
    for p in 0..4 {
        out.serve[0][0][0][p] = 1.0;
        out.serve[0][1][0][p + 4] = 1.0;
    }
    out.sign[0][0][0][0] = 1.0;
    out.sign[0][1][0][4] = 1.0;
    let rows = report::contract_gantt(&out, 10);
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0].start, rows[0].end), (1, 4));
    assert_eq!((rows[1].start, rows[1].end), (5, 8));
}

/// A blank outcome shell for report-only tests.
fn minimal_outcome(customers: usize, firms: usize, periods: usize) -> GameOutcome {
    use oligofair_core::outcome::{Diagnostics, GameMode};
    GameOutcome {
        mode: GameMode::SocialWelfare,
        objective: 0.0,
        profits: vec![0.0; firms],
        nash: None,
        firms: (0..firms).map(|f| format!("F{f}")).collect(),
        customers: (0..customers).map(|c| format!("c{c}")).collect(),
        products: vec!["p1".into()],
        contract_ids: vec!["k1".into()],
        contract_durations: vec![20],
        periods,
        tanks: (0..customers).map(|c| format!("c{c}/t1")).collect(),
        tank_customer: (0..customers).collect(),
        tank_product: vec![0; customers],
        tank_demand: vec![vec![1.0; periods]; customers],
        serve: vec![vec![vec![vec![0.0; periods]; 1]; firms]; customers],
        sign: vec![vec![vec![vec![0.0; periods]; 1]; firms]; customers],
        acquire: vec![vec![vec![0.0; periods]; firms]; customers],
        forfeit: vec![vec![vec![0.0; periods]; firms]; customers],
        tier_active: vec![vec![vec![]; firms]; 1],
        supply: vec![vec![vec![0.0; periods]; firms]; customers],
        swap: vec![vec![vec![vec![0.0; periods]; firms]; firms]; customers],
        spot: vec![vec![vec![0.0; periods]; firms]; customers],
        spot_tier: vec![vec![vec![]; firms]; customers],
        production: vec![vec![vec![0.0; periods]; firms]; 1],
        inventory: vec![vec![vec![0.0; periods]; firms]; 1],
        flow: vec![vec![vec![0.0; periods]; firms]; 1],
        air_flow: vec![vec![0.0; periods]; firms],
        capacity: vec![vec![vec![0.0; periods]; firms]; 1],
        power: vec![vec![0.0; periods]; firms],
        band: vec![vec![0.0; periods]; firms],
        over: vec![vec![0.0; periods]; firms],
        under: vec![vec![0.0; periods]; firms],
        service_cost: vec![vec![0.0; periods]; firms],
        acquisition_cost: vec![vec![0.0; periods]; firms],
        forfeit_cost: vec![vec![0.0; periods]; firms],
        energy_cost: vec![vec![0.0; periods]; firms],
        inventory_cost: vec![vec![0.0; periods]; firms],
        weight: vec![],
        grids: None,
        diagnostics: Diagnostics {
            status: "Optimal".into(),
            best_bound: 0.0,
            gap: 0.0,
            nodes: 1,
        },
    }
}

#[test]
fn verification_flags_injected_faults() {
    let inst = toy_duopoly();
    let cfg = cfg();
    let fsw = solve_social_welfare(&inst, &cfg).unwrap();

    // Assign customer 0 to both firms at once.
    let mut corrupted = fsw.clone();
    for k in 0..corrupted.contract_ids.len() {
        for p in 0..corrupted.periods {
            corrupted.serve[0][0][k][p] = 1.0;
            corrupted.serve[0][1][k][p] = 1.0;
        }
    }
    let report = verify_outcome(&inst, &corrupted);
    let fam = report.family("assignment").unwrap();
    assert!(fam.max_violation > 0.5, "exact assignment must flag");

    // Break the swap balance.
    let mut corrupted = fsw.clone();
    corrupted.swap[0][0][1][0] += 5.0;
    let report = verify_outcome(&inst, &corrupted);
    assert!(report.family("swap_balance").unwrap().max_violation > 1.0);
}
