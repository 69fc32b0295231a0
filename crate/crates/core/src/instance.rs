//! Compiled market instances: index-resolved data, value-level validation
//! and the derived unit-service-cost table.

use thiserror::Error;

/// A fully resolved market description. All cross-references use dense
/// indices; ids are kept for reporting. Instances are immutable once built
/// and safe to share across threads.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub periods: usize,
    /// Plant operating hours per period (OT).
    pub hours_per_period: f64,
    pub products: Vec<String>,
    pub contracts: Vec<Contract>,
    pub firms: Vec<Firm>,
    pub customers: Vec<Customer>,
    pub tiers: Vec<Tier>,
    pub swap: SwapPolicy,
    pub game: GameParams,
    /// Global tank order: (customer index, tank index within customer).
    pub tank_index: Vec<(usize, usize)>,
    /// Shared number of formula-contract terms.
    pub term_count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Contract {
    pub id: String,
    pub duration: usize,
    /// Escalation factors indexed [firm][period][term].
    pub escalation: Vec<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Firm {
    pub id: String,
    /// Maximum flow rate per product (m3/h).
    pub max_flow: Vec<f64>,
    /// Power per unit product flow (MW per m3/h).
    pub power_per_flow: Vec<f64>,
    pub air_power_per_flow: f64,
    /// Air intake per unit product flow.
    pub air_ratio: Vec<f64>,
    /// Unit production cost per product (UPC).
    pub production_cost: Vec<f64>,
    /// Unit inventory holding cost per product (INVC).
    pub inventory_cost: Vec<f64>,
    pub initial_inventory: Vec<f64>,
    pub inventory_lower_factor: f64,
    pub inventory_upper_factor: f64,
    pub energy: EnergyContract,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyContract {
    /// Contracted average power (MW).
    pub contracted_power: f64,
    pub tolerance: f64,
    /// Electricity price per period (money/MWh).
    pub price: Vec<f64>,
    pub penalty_factor: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Customer {
    pub id: String,
    /// Incumbent (firm, contract) pairs; valid instances have at most one.
    pub incumbent: Vec<(usize, usize)>,
    pub terms: Vec<f64>,
    pub acquisition_fixed: Vec<f64>,
    pub forfeit_fixed: Vec<f64>,
    pub tanks: Vec<Tank>,
}

impl Customer {
    /// The single incumbent assignment, if any. Customers without one are
    /// free customers.
    pub fn incumbent_pair(&self) -> Option<(usize, usize)> {
        self.incumbent.first().copied()
    }

    pub fn is_free(&self) -> bool {
        self.incumbent.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tank {
    pub id: String,
    pub product: usize,
    pub demand: Vec<f64>,
    /// Delivery cost per firm per period; None when the firm has no route.
    pub delivery_cost: Vec<Option<Vec<f64>>>,
    /// Base price per firm per contract.
    pub base_price: Vec<Vec<Option<f64>>>,
    pub acquisition_variable: Vec<f64>,
    pub forfeit_variable: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tier {
    pub id: String,
    pub lower: f64,
    pub upper: f64,
    pub premium: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SwapPolicy {
    pub capacity_fraction: f64,
    /// Premium indexed [producing firm][serving firm].
    pub premium: Vec<Vec<f64>>,
    /// Inclusive 1-based balancing intervals partitioning the horizon.
    pub intervals: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GameParams {
    pub negotiation_power: Vec<f64>,
    pub grid_size: usize,
    pub refine_rounds: usize,
}

/// Machine-readable validation finding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub code: ViolationCode,
    pub location: String,
    pub message: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationCode {
    IncumbentNotUnique,
    TierBounds,
    TierPremium,
    NegativeValue,
    ContractDuration,
    InventoryBoundFactors,
    EnergyTolerance,
    NegotiationPower,
    SwapIntervals,
    SwapPremium,
    DeliveryCostMissing,
    BasePriceMissing,
    EscalationNotFinite,
}

#[derive(Debug, Error)]
pub enum CostTableError {
    #[error("tank {tank}: delivery cost {cost} with zero demand in period {period} for firm {firm}")]
    DivByZeroDemand {
        tank: String,
        firm: String,
        period: usize,
        cost: f64,
    },
}

impl Instance {
    pub fn rebuild_tank_index(&mut self) {
        self.tank_index = self
            .customers
            .iter()
            .enumerate()
            .flat_map(|(c, cust)| (0..cust.tanks.len()).map(move |t| (c, t)))
            .collect();
    }

    pub fn num_tanks(&self) -> usize {
        self.tank_index.len()
    }

    pub fn tank(&self, global: usize) -> &Tank {
        let (c, t) = self.tank_index[global];
        &self.customers[c].tanks[t]
    }

    pub fn tank_customer(&self, global: usize) -> usize {
        self.tank_index[global].0
    }

    /// Total demand of one customer in one period, across tanks.
    pub fn customer_demand(&self, c: usize, p: usize) -> f64 {
        self.customers[c].tanks.iter().map(|t| t.demand[p]).sum()
    }
}

fn push(
    out: &mut Vec<Violation>,
    code: ViolationCode,
    location: impl Into<String>,
    message: impl Into<String>,
) {
    out.push(Violation {
        code,
        location: location.into(),
        message: message.into(),
    });
}

/// Check every value-level invariant. An empty result means the instance
/// is well formed; violations are data, not errors.
pub fn validate_instance(inst: &Instance) -> Vec<Violation> {
    let mut out = Vec::new();
    let nf = inst.firms.len();

    for c in &inst.contracts {
        if c.duration < 1 {
            push(
                &mut out,
                ViolationCode::ContractDuration,
                format!("contracts.{}", c.id),
                "duration must be >= 1",
            );
        }
        for (f, per_firm) in c.escalation.iter().enumerate() {
            for (p, row) in per_firm.iter().enumerate() {
                for (s, &e) in row.iter().enumerate() {
                    if !e.is_finite() {
                        push(
                            &mut out,
                            ViolationCode::EscalationNotFinite,
                            format!("contracts.{}.escalation[{f}][{p}][{s}]", c.id),
                            "escalation factor must be finite",
                        );
                    }
                }
            }
        }
    }

    for firm in &inst.firms {
        let loc = format!("firms.{}", firm.id);
        if firm.inventory_lower_factor < 0.0
            || firm.inventory_lower_factor > firm.inventory_upper_factor
        {
            push(
                &mut out,
                ViolationCode::InventoryBoundFactors,
                format!("{loc}.inventory"),
                format!(
                    "need 0 <= lower_factor <= upper_factor, got {} and {}",
                    firm.inventory_lower_factor, firm.inventory_upper_factor
                ),
            );
        }
        for (what, series) in [
            ("max_flow", &firm.max_flow),
            ("power_per_flow", &firm.power_per_flow),
            ("air_ratio", &firm.air_ratio),
            ("production_cost", &firm.production_cost),
            ("inventory_cost", &firm.inventory_cost),
            ("initial_inventory", &firm.initial_inventory),
        ] {
            if series.iter().any(|&v| v < 0.0) {
                push(
                    &mut out,
                    ViolationCode::NegativeValue,
                    format!("{loc}.{what}"),
                    "values must be nonnegative",
                );
            }
        }
        if !(0.0..1.0).contains(&firm.energy.tolerance) {
            push(
                &mut out,
                ViolationCode::EnergyTolerance,
                format!("energy.{}", firm.id),
                format!("tolerance {} outside [0, 1)", firm.energy.tolerance),
            );
        }
        if firm.energy.contracted_power < 0.0 || firm.energy.price.iter().any(|&p| p < 0.0) {
            push(
                &mut out,
                ViolationCode::NegativeValue,
                format!("energy.{}", firm.id),
                "contracted power and prices must be nonnegative",
            );
        }
    }

    for cust in &inst.customers {
        let loc = format!("customers.{}", cust.id);
        if cust.incumbent.len() > 1 {
            push(
                &mut out,
                ViolationCode::IncumbentNotUnique,
                loc.clone(),
                format!("{} incumbent entries, at most one allowed", cust.incumbent.len()),
            );
        }
        if cust.acquisition_fixed.iter().any(|&v| v < 0.0)
            || cust.forfeit_fixed.iter().any(|&v| v < 0.0)
        {
            push(
                &mut out,
                ViolationCode::NegativeValue,
                loc.clone(),
                "acquisition and forfeit costs must be nonnegative",
            );
        }
        for tank in &cust.tanks {
            let tloc = format!("{loc}.tanks.{}", tank.id);
            if tank.demand.iter().any(|&d| d < 0.0) {
                push(
                    &mut out,
                    ViolationCode::NegativeValue,
                    format!("{tloc}.demand"),
                    "demand must be nonnegative",
                );
            }
            if tank.acquisition_variable.iter().any(|&v| v < 0.0)
                || tank.forfeit_variable.iter().any(|&v| v < 0.0)
            {
                push(
                    &mut out,
                    ViolationCode::NegativeValue,
                    tloc.clone(),
                    "variable acquisition/forfeit costs must be nonnegative",
                );
            }
            let has_demand = tank.demand.iter().any(|&d| d > 0.0);
            for f in 0..nf {
                match &tank.delivery_cost[f] {
                    Some(series) => {
                        if series.iter().any(|&v| v < 0.0) {
                            push(
                                &mut out,
                                ViolationCode::NegativeValue,
                                format!("{tloc}.delivery_cost.{}", inst.firms[f].id),
                                "delivery cost must be nonnegative",
                            );
                        }
                    }
                    None if has_demand => {
                        push(
                            &mut out,
                            ViolationCode::DeliveryCostMissing,
                            format!("{tloc}.delivery_cost"),
                            format!("no delivery cost for firm {}", inst.firms[f].id),
                        );
                    }
                    None => {}
                }
                for (k, contract) in inst.contracts.iter().enumerate() {
                    match tank.base_price[f][k] {
                        Some(beta) if beta < 0.0 => push(
                            &mut out,
                            ViolationCode::NegativeValue,
                            format!("{tloc}.base_price.{}.{}", inst.firms[f].id, contract.id),
                            "base price must be nonnegative",
                        ),
                        Some(_) => {}
                        None => push(
                            &mut out,
                            ViolationCode::BasePriceMissing,
                            format!("{tloc}.base_price.{}.{}", inst.firms[f].id, contract.id),
                            "every (firm, contract) pair needs a base price",
                        ),
                    }
                }
            }
        }
    }

    for tier in &inst.tiers {
        if tier.lower < 0.0 || tier.lower > tier.upper {
            push(
                &mut out,
                ViolationCode::TierBounds,
                format!("tiers.{}", tier.id),
                format!("need 0 <= lower <= upper, got [{}, {}]", tier.lower, tier.upper),
            );
        }
        if tier.premium < 1.0 {
            push(
                &mut out,
                ViolationCode::TierPremium,
                format!("tiers.{}", tier.id),
                format!("premium {} below 1", tier.premium),
            );
        }
    }

    if inst.swap.capacity_fraction < 0.0 {
        push(
            &mut out,
            ViolationCode::NegativeValue,
            "swap_policy.capacity_fraction",
            "must be nonnegative",
        );
    }
    for from in 0..nf {
        for to in 0..nf {
            if inst.swap.premium[from][to] < 0.0 {
                push(
                    &mut out,
                    ViolationCode::SwapPremium,
                    format!(
                        "swap_policy.premium.{}.{}",
                        inst.firms[from].id, inst.firms[to].id
                    ),
                    "swap premium must be nonnegative",
                );
            }
        }
    }
    // Balancing intervals must partition the horizon.
    let mut covered = vec![0usize; inst.periods];
    let mut intervals_ok = true;
    for &(a, b) in &inst.swap.intervals {
        if a == 0 || b > inst.periods || a > b {
            intervals_ok = false;
            continue;
        }
        for p in a..=b {
            covered[p - 1] += 1;
        }
    }
    if !intervals_ok || covered.iter().any(|&c| c != 1) {
        push(
            &mut out,
            ViolationCode::SwapIntervals,
            "swap_policy.balance_intervals",
            "intervals must be disjoint and cover every period exactly once",
        );
    }

    let total_power: f64 = inst.game.negotiation_power.iter().sum();
    if inst
        .game
        .negotiation_power
        .iter()
        .any(|&a| a <= 0.0)
        || (total_power - 1.0).abs() > 1e-9
    {
        push(
            &mut out,
            ViolationCode::NegotiationPower,
            "game.negotiation_power",
            format!("powers must be positive and sum to 1, sum is {total_power}"),
        );
    }

    out
}

/// Derived unit service cost per (tank, firm, period): delivery cost
/// divided by demand. Zero-demand zero-cost entries are zero; zero demand
/// with positive cost has no meaningful ratio and is an error.
#[derive(Clone, Debug)]
pub struct UscTable {
    /// Indexed [global tank][firm][period].
    pub values: Vec<Vec<Vec<f64>>>,
}

pub fn unit_service_cost(inst: &Instance) -> Result<UscTable, CostTableError> {
    let nf = inst.firms.len();
    let mut values = Vec::with_capacity(inst.num_tanks());
    for g in 0..inst.num_tanks() {
        let tank = inst.tank(g);
        let mut per_firm = Vec::with_capacity(nf);
        for f in 0..nf {
            let mut per_period = Vec::with_capacity(inst.periods);
            for p in 0..inst.periods {
                let cost = tank.delivery_cost[f]
                    .as_ref()
                    .map(|s| s[p])
                    .unwrap_or(0.0);
                let demand = tank.demand[p];
                let usc = if demand > 0.0 {
                    cost / demand
                } else if cost == 0.0 {
                    0.0
                } else {
                    return Err(CostTableError::DivByZeroDemand {
                        tank: tank.id.clone(),
                        firm: inst.firms[f].id.clone(),
                        period: p + 1,
                        cost,
                    });
                };
                per_period.push(usc);
            }
            per_firm.push(per_period);
        }
        values.push(per_firm);
    }
    Ok(UscTable { values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::toy_duopoly;

    #[test]
    fn well_formed_toy_has_no_violations() {
        let inst = toy_duopoly();
        assert_eq!(validate_instance(&inst), Vec::new());
    }

    #[test]
    fn tier_bound_violation_detected() {
        let mut inst = toy_duopoly();
        inst.tiers[0].lower = 50.0;
        inst.tiers[0].upper = 10.0;
        let v = validate_instance(&inst);
        assert!(v.iter().any(|v| v.code == ViolationCode::TierBounds));
    }

    #[test]
    fn double_incumbent_detected() {
        let mut inst = toy_duopoly();
        inst.customers[0].incumbent = vec![(0, 0), (1, 0)];
        let v = validate_instance(&inst);
        assert!(v.iter().any(|v| v.code == ViolationCode::IncumbentNotUnique));
    }

    #[test]
    fn usc_is_cost_over_demand() {
        let mut inst = toy_duopoly();
        // Tank 0 of customer 0: demand 50, delivery cost 100 for firm 0.
        inst.customers[0].tanks[0].demand = vec![50.0; inst.periods];
        inst.customers[0].tanks[0].delivery_cost[0] = Some(vec![100.0; inst.periods]);
        inst.rebuild_tank_index();
        let table = unit_service_cost(&inst).unwrap();
        assert_eq!(table.values[0][0][0], 2.0);
        // Exact reconstruction: usc * demand == cost.
        assert_eq!(table.values[0][0][0] * 50.0, 100.0);
    }

    #[test]
    fn usc_zero_cost_zero() {
        let mut inst = toy_duopoly();
        inst.customers[0].tanks[0].demand = vec![7.0; inst.periods];
        inst.customers[0].tanks[0].delivery_cost[0] = Some(vec![0.0; inst.periods]);
        inst.rebuild_tank_index();
        let table = unit_service_cost(&inst).unwrap();
        assert_eq!(table.values[0][0][0], 0.0);
    }

    #[test]
    fn usc_zero_demand_with_cost_errors() {
        let mut inst = toy_duopoly();
        inst.customers[0].tanks[0].demand = vec![0.0; inst.periods];
        inst.customers[0].tanks[0].delivery_cost[0] = Some(vec![3.0; inst.periods]);
        inst.rebuild_tank_index();
        assert!(matches!(
            unit_service_cost(&inst),
            Err(CostTableError::DivByZeroDemand { .. })
        ));
    }

    #[test]
    fn usc_nonnegative_and_finite() {
        let inst = toy_duopoly();
        let table = unit_service_cost(&inst).unwrap();
        for per_firm in &table.values {
            for per_period in per_firm {
                for &v in per_period {
                    assert!(v.is_finite() && v >= 0.0);
                }
            }
        }
    }
}
