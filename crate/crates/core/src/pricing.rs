//! Contract prices and premium cost coefficients.
//!
//! Selling prices follow the formula-contract scheme: a base price times
//! the sum of customer terms, escalated from the second period on. Swap
//! and spot premiums scale the unit service (and production) cost.

use thiserror::Error;

use crate::instance::{Instance, UscTable};

#[derive(Debug, Error)]
pub enum PricingError {
    #[error("{location}: escalated term factor 1 + {epsilon} is negative")]
    NegativeEscalatedTerm { location: String, epsilon: f64 },
}

/// Price of one unit under a formula contract.
///
/// Period 1 uses the unescalated terms; later periods scale each term by
/// (1 + escalation). `escalations` holds the factors of the requested
/// period (ignored for period 1).
pub fn contract_price(
    base: f64,
    terms: &[f64],
    escalations: &[f64],
    period: usize,
) -> Result<f64, PricingError> {
    debug_assert!(period >= 1);
    if period == 1 {
        return Ok(base * terms.iter().sum::<f64>());
    }
    let mut sum = 0.0;
    for (s, (&t, &e)) in terms.iter().zip(escalations.iter()).enumerate() {
        let factor = 1.0 + e;
        if factor < 0.0 {
            return Err(PricingError::NegativeEscalatedTerm {
                location: format!("term {s}"),
                epsilon: e,
            });
        }
        sum += t * factor;
    }
    Ok(base * sum)
}

/// Swap premium cost: the producing firm's unit service cost scaled by the
/// inter-firm premium.
pub fn swap_premium(usc: f64, eta: f64) -> f64 {
    debug_assert!(usc >= 0.0 && eta >= 0.0);
    eta * usc
}

/// Spot premium cost: service plus production cost scaled by the tier
/// premium.
pub fn outsourcing_premium(usc: f64, upc: f64, zeta: f64) -> f64 {
    debug_assert!(usc >= 0.0 && upc >= 0.0 && zeta >= 0.0);
    zeta * (usc + upc)
}

/// Full price table, indexed [global tank][firm][contract][period].
#[derive(Clone, Debug)]
pub struct PriceTable {
    pub values: Vec<Vec<Vec<Vec<f64>>>>,
}

impl PriceTable {
    pub fn price(&self, tank: usize, firm: usize, contract: usize, period: usize) -> f64 {
        self.values[tank][firm][contract][period]
    }
}

/// Compute every contract price from instance parameters. The table is a
/// pure function of the instance: rebuilding yields identical values.
pub fn build_price_table(inst: &Instance) -> Result<PriceTable, PricingError> {
    let mut values = Vec::with_capacity(inst.num_tanks());
    for g in 0..inst.num_tanks() {
        let c = inst.tank_customer(g);
        let tank = inst.tank(g);
        let terms = &inst.customers[c].terms;
        let mut per_firm = Vec::with_capacity(inst.firms.len());
        for f in 0..inst.firms.len() {
            let mut per_contract = Vec::with_capacity(inst.contracts.len());
            for (k, contract) in inst.contracts.iter().enumerate() {
                let beta = tank.base_price[f][k].unwrap_or(0.0);
                let mut per_period = Vec::with_capacity(inst.periods);
                for p in 1..=inst.periods {
                    let esc = &contract.escalation[f][p - 1];
                    per_period.push(contract_price(beta, terms, esc, p).map_err(|e| match e {
                        PricingError::NegativeEscalatedTerm { location, epsilon } => {
                            PricingError::NegativeEscalatedTerm {
                                location: format!(
                                    "tank {} firm {} contract {} period {p}: {location}",
                                    tank.id, inst.firms[f].id, contract.id
                                ),
                                epsilon,
                            }
                        }
                    })?);
                }
                per_contract.push(per_period);
            }
            per_firm.push(per_contract);
        }
        values.push(per_firm);
    }
    Ok(PriceTable { values })
}

/// Premium cost coefficients: swaps indexed
/// [tank][producing firm][serving firm][period], spot indexed
/// [tank][serving firm][tier][period].
#[derive(Clone, Debug)]
pub struct PremiumTable {
    pub swap: Vec<Vec<Vec<Vec<f64>>>>,
    pub spot: Vec<Vec<Vec<Vec<f64>>>>,
}

/// Premiums are applied at tank granularity; the swap premium prices the
/// producing firm's delivery, the spot premium the serving firm's delivery
/// plus its production cost.
pub fn build_premium_table(inst: &Instance, usc: &UscTable) -> PremiumTable {
    let nf = inst.firms.len();
    let nt = inst.num_tanks();
    let mut swap = vec![vec![vec![vec![0.0; inst.periods]; nf]; nf]; nt];
    let mut spot = vec![vec![vec![vec![0.0; inst.periods]; inst.tiers.len()]; nf]; nt];
    for g in 0..nt {
        let product = inst.tank(g).product;
        for f in 0..nf {
            for p in 0..inst.periods {
                let own_usc = usc.values[g][f][p];
                for (b, tier) in inst.tiers.iter().enumerate() {
                    spot[g][f][b][p] = outsourcing_premium(
                        own_usc,
                        inst.firms[f].production_cost[product],
                        tier.premium,
                    );
                }
                for to in 0..nf {
                    if to != f {
                        swap[g][f][to][p] = swap_premium(own_usc, inst.swap.premium[f][to]);
                    }
                }
            }
        }
    }
    PremiumTable { swap, spot }
}
