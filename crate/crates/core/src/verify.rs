//! Independent outcome verification.
//!
//! Every constraint family is re-evaluated from raw instance data and the
//! decoded outcome values, without touching the model that produced them.
//! Violations are report content, not errors.

use serde::{Deserialize, Serialize};

use crate::instance::{unit_service_cost, Instance};
use crate::outcome::GameOutcome;
use crate::pricing::{build_premium_table, build_price_table};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilyCheck {
    pub family: String,
    pub max_violation: f64,
    pub worst: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerificationReport {
    pub families: Vec<FamilyCheck>,
    /// Largest relative error between stored and recomputed firm profits.
    pub profit_rel_error: f64,
}

impl VerificationReport {
    pub fn max_violation(&self) -> f64 {
        self.families
            .iter()
            .map(|f| f.max_violation)
            .fold(0.0, f64::max)
    }

    pub fn family(&self, name: &str) -> Option<&FamilyCheck> {
        self.families.iter().find(|f| f.family == name)
    }
}

struct Checker {
    families: Vec<FamilyCheck>,
}

impl Checker {
    fn new() -> Self {
        Checker {
            families: Vec::new(),
        }
    }

    fn family(&mut self, name: &str) -> usize {
        if let Some(i) = self.families.iter().position(|f| f.family == name) {
            return i;
        }
        self.families.push(FamilyCheck {
            family: name.to_string(),
            max_violation: 0.0,
            worst: String::from("-"),
        });
        self.families.len() - 1
    }

    fn record(&mut self, name: &str, violation: f64, what: impl Fn() -> String) {
        let i = self.family(name);
        if violation > self.families[i].max_violation {
            self.families[i].max_violation = violation;
            self.families[i].worst = what();
        }
    }
}

/// Re-evaluate every constraint family and recompute profits from first
/// principles.
pub fn verify_outcome(inst: &Instance, out: &GameOutcome) -> VerificationReport {
    let mut ck = Checker::new();
    let (nc, nf, nk, np, ni, nb, nt) = (
        inst.customers.len(),
        inst.firms.len(),
        inst.contracts.len(),
        inst.periods,
        inst.products.len(),
        inst.tiers.len(),
        inst.num_tanks(),
    );
    let usc = unit_service_cost(inst).expect("validated instance");
    let prices = build_price_table(inst).expect("validated instance");
    let premiums = build_premium_table(inst, &usc);
    let ot = inst.hours_per_period;

    let serve_firm_sum = |c: usize, f: usize, p: usize| -> f64 {
        (0..nk).map(|k| out.serve[c][f][k][p]).sum()
    };

    // Assignment logic.
    for c in 0..nc {
        for p in 0..np {
            let total: f64 = (0..nf).map(|f| serve_firm_sum(c, f, p)).sum();
            ck.record("assignment", (total - 1.0).abs(), || {
                format!("customer {} period {}", inst.customers[c].id, p + 1)
            });
            let signed: f64 = (0..nf)
                .map(|f| (0..nk).map(|k| out.sign[c][f][k][p]).sum::<f64>())
                .sum();
            ck.record("signature", (signed - 1.0).max(0.0), || {
                format!("customer {} period {}", inst.customers[c].id, p + 1)
            });
        }
        for f in 0..nf {
            for k in 0..nk {
                let duration = inst.contracts[k].duration;
                for p in 0..np {
                    let prev = if p > 0 { out.serve[c][f][k][p - 1] } else { 0.0 };
                    let startup =
                        (out.serve[c][f][k][p] - prev - out.sign[c][f][k][p]).max(0.0);
                    ck.record("startup", startup, || {
                        format!("customer {} period {}", inst.customers[c].id, p + 1)
                    });
                    let from = (p + 1).saturating_sub(duration);
                    let window: f64 = (from..=p).map(|q| out.sign[c][f][k][q]).sum();
                    ck.record("coverage", (window - out.serve[c][f][k][p]).abs(), || {
                        format!(
                            "customer {} firm {} contract {} period {}",
                            inst.customers[c].id,
                            inst.firms[f].id,
                            inst.contracts[k].id,
                            p + 1
                        )
                    });
                }
            }
            for p in 1..np {
                let delta = serve_firm_sum(c, f, p) - serve_firm_sum(c, f, p - 1);
                ck.record(
                    "acquire_link",
                    (delta - out.acquire[c][f][p]).max(0.0),
                    || format!("customer {} firm {} period {}", inst.customers[c].id, inst.firms[f].id, p + 1),
                );
                ck.record(
                    "forfeit_link",
                    (-delta - out.forfeit[c][f][p]).max(0.0),
                    || format!("customer {} firm {} period {}", inst.customers[c].id, inst.firms[f].id, p + 1),
                );
            }
        }
    }

    // Integrality of every decision indicator.
    for c in 0..nc {
        for f in 0..nf {
            for k in 0..nk {
                for p in 0..np {
                    for (what, v) in [("serve", out.serve[c][f][k][p]), ("sign", out.sign[c][f][k][p])] {
                        ck.record("integrality", (v - v.round()).abs(), || {
                            format!("{what} customer {} period {}", inst.customers[c].id, p + 1)
                        });
                    }
                }
            }
        }
    }

    // Demand satisfaction and spot/swap logic.
    for t in 0..nt {
        let c = inst.tank_customer(t);
        let tank = inst.tank(t);
        for f in 0..nf {
            for p in 0..np {
                let assigned = serve_firm_sum(c, f, p);
                let incoming: f64 = (0..nf)
                    .filter(|&g| g != f)
                    .map(|g| out.swap[t][g][f][p])
                    .sum();
                let lhs = out.supply[t][f][p] + incoming + out.spot[t][f][p];
                ck.record(
                    "demand",
                    (lhs - tank.demand[p] * assigned).abs(),
                    || format!("tank {} firm {} period {}", out.tanks[t], inst.firms[f].id, p + 1),
                );

                let tiered: f64 = (0..nb).map(|b| out.spot_tier[t][f][b][p]).sum();
                ck.record(
                    "spot_aggregate",
                    (out.spot[t][f][p] - tiered).abs(),
                    || format!("tank {} firm {} period {}", out.tanks[t], inst.firms[f].id, p + 1),
                );
                ck.record(
                    "spot_logic",
                    (tiered - tank.demand[p] * assigned).max(0.0),
                    || format!("tank {} firm {} period {}", out.tanks[t], inst.firms[f].id, p + 1),
                );
                for g in 0..nf {
                    if g != f {
                        ck.record(
                            "swap_logic",
                            (out.swap[t][g][f][p] - tank.demand[p] * assigned).max(0.0),
                            || {
                                format!(
                                    "tank {} from {} to {} period {}",
                                    out.tanks[t],
                                    inst.firms[g].id,
                                    inst.firms[f].id,
                                    p + 1
                                )
                            },
                        );
                    }
                }
            }
        }
    }

    // Plant, capacity, inventory and tiers per product and firm.
    for i in 0..ni {
        let tanks_i: Vec<usize> = (0..nt).filter(|&t| inst.tank(t).product == i).collect();
        for f in 0..nf {
            let firm = &inst.firms[f];
            for p in 0..np {
                let outgoing: f64 = tanks_i
                    .iter()
                    .flat_map(|&t| (0..nf).filter(move |&g| g != f).map(move |g| (t, g)))
                    .map(|(t, g)| out.swap[t][f][g][p])
                    .sum();
                ck.record(
                    "capacity",
                    (out.production[i][f][p] + outgoing - out.capacity[i][f][p]).max(0.0),
                    || format!("product {} firm {} period {}", inst.products[i], firm.id, p + 1),
                );
                ck.record(
                    "capacity_def",
                    (out.capacity[i][f][p] - ot * out.flow[i][f][p]).abs(),
                    || format!("product {} firm {} period {}", inst.products[i], firm.id, p + 1),
                );
                ck.record(
                    "production_cap",
                    (out.production[i][f][p] - out.capacity[i][f][p]).max(0.0),
                    || format!("product {} firm {} period {}", inst.products[i], firm.id, p + 1),
                );
                ck.record(
                    "flow_bounds",
                    (out.flow[i][f][p] - firm.max_flow[i])
                        .max(-out.flow[i][f][p])
                        .max(0.0),
                    || format!("product {} firm {} period {}", inst.products[i], firm.id, p + 1),
                );

                let sold: f64 = tanks_i.iter().map(|&t| out.supply[t][f][p]).sum();
                let prev = if p > 0 {
                    out.inventory[i][f][p - 1]
                } else {
                    firm.initial_inventory[i]
                };
                let balance =
                    out.inventory[i][f][p] - prev - out.production[i][f][p] + outgoing + sold;
                ck.record("inventory_balance", balance.abs(), || {
                    format!("product {} firm {} period {}", inst.products[i], firm.id, p + 1)
                });
                let lo = firm.inventory_lower_factor * out.flow[i][f][p];
                ck.record(
                    "inventory_bounds",
                    (lo - out.inventory[i][f][p]).max(0.0),
                    || format!("product {} firm {} period {} (lower)", inst.products[i], firm.id, p + 1),
                );
                if firm.inventory_upper_factor.is_finite() {
                    let hi = firm.inventory_upper_factor * out.flow[i][f][p];
                    ck.record(
                        "inventory_bounds",
                        (out.inventory[i][f][p] - hi).max(0.0),
                        || format!("product {} firm {} period {} (upper)", inst.products[i], firm.id, p + 1),
                    );
                }

                for b in 0..nb {
                    let tier = &inst.tiers[b];
                    let y = out.tier_active[i][f][b][p];
                    ck.record("integrality", (y - y.round()).abs(), || {
                        format!("tier {} firm {} period {}", tier.id, firm.id, p + 1)
                    });
                    let amount: f64 = tanks_i.iter().map(|&t| out.spot_tier[t][f][b][p]).sum();
                    ck.record(
                        "tier_bounds",
                        (tier.lower * y - amount).max(amount - tier.upper * y).max(0.0),
                        || format!("tier {} firm {} period {}", tier.id, firm.id, p + 1),
                    );
                }
                if nb > 0 {
                    let active: f64 = (0..nb).map(|b| out.tier_active[i][f][b][p]).sum();
                    ck.record("tier_choice", (active - 1.0).max(0.0), || {
                        format!("product {} firm {} period {}", inst.products[i], firm.id, p + 1)
                    });
                }

                ck.record(
                    "swap_cap",
                    (outgoing - inst.swap.capacity_fraction * out.capacity[i][f][p]).max(0.0),
                    || format!("product {} firm {} period {}", inst.products[i], firm.id, p + 1),
                );
            }

            for (iv, &(a, b_end)) in inst.swap.intervals.iter().enumerate() {
                for g in 0..nf {
                    if g == f {
                        continue;
                    }
                    let sent: f64 = (a - 1..b_end)
                        .flat_map(|p| tanks_i.iter().map(move |&t| out.swap[t][f][g][p]))
                        .sum();
                    let received: f64 = (a - 1..b_end)
                        .flat_map(|p| tanks_i.iter().map(move |&t| out.swap[t][g][f][p]))
                        .sum();
                    ck.record("swap_balance", (sent - received).abs(), || {
                        format!(
                            "product {} {}<->{} interval {}",
                            inst.products[i],
                            firm.id,
                            inst.firms[g].id,
                            iv + 1
                        )
                    });
                }
            }
        }
    }

    // Energy decomposition and cost definitions.
    for f in 0..nf {
        let firm = &inst.firms[f];
        let cec = firm.energy.contracted_power;
        let eps = firm.energy.tolerance;
        for p in 0..np {
            let air: f64 = (0..ni)
                .map(|i| firm.air_ratio[i] * out.flow[i][f][p])
                .sum();
            ck.record("air_balance", (out.air_flow[f][p] - air).abs(), || {
                format!("firm {} period {}", firm.id, p + 1)
            });
            let power: f64 = firm.air_power_per_flow * out.air_flow[f][p]
                + (0..ni)
                    .map(|i| firm.power_per_flow[i] * out.flow[i][f][p])
                    .sum::<f64>();
            ck.record("power_balance", (out.power[f][p] - power).abs(), || {
                format!("firm {} period {}", firm.id, p + 1)
            });
            let split =
                out.power[f][p] - out.band[f][p] - out.over[f][p] + out.under[f][p];
            ck.record("energy_split", split.abs(), || {
                format!("firm {} period {}", firm.id, p + 1)
            });
            let band_violation = ((1.0 - eps) * cec - out.band[f][p])
                .max(out.band[f][p] - (1.0 + eps) * cec)
                .max(-out.over[f][p])
                .max(-out.under[f][p])
                .max(0.0);
            ck.record("energy_band", band_violation, || {
                format!("firm {} period {}", firm.id, p + 1)
            });
            let rate = firm.energy.price[p] * ot;
            let want = rate * out.band[f][p]
                + firm.energy.penalty_factor * rate * (out.over[f][p] + out.under[f][p]);
            ck.record("energy_cost", (out.energy_cost[f][p] - want).abs(), || {
                format!("firm {} period {}", firm.id, p + 1)
            });

            let mut service = 0.0;
            for t in 0..nt {
                service += usc.values[t][f][p] * out.supply[t][f][p];
                for g in 0..nf {
                    if g != f {
                        service += premiums.swap[t][g][f][p] * out.swap[t][g][f][p];
                    }
                }
                for b in 0..nb {
                    service += premiums.spot[t][f][b][p] * out.spot_tier[t][f][b][p];
                }
            }
            ck.record(
                "service_cost",
                (out.service_cost[f][p] - service).abs(),
                || format!("firm {} period {}", firm.id, p + 1),
            );

            let acquisition = if p == 0 {
                (0..nc)
                    .filter(|&c| inst.customers[c].incumbent_pair().map(|(fi, _)| fi) != Some(f))
                    .map(|c| {
                        let signed: f64 = (0..nk).map(|k| out.sign[c][f][k][0]).sum();
                        crate::builder::acquisition_coeff(inst, c, f, 0) * signed
                    })
                    .sum::<f64>()
            } else {
                (0..nc)
                    .map(|c| crate::builder::acquisition_coeff(inst, c, f, p) * out.acquire[c][f][p])
                    .sum::<f64>()
            };
            ck.record(
                "acquisition_cost",
                (out.acquisition_cost[f][p] - acquisition).abs(),
                || format!("firm {} period {}", firm.id, p + 1),
            );

            let forfeit = if p == 0 {
                (0..nc)
                    .filter(|&c| inst.customers[c].incumbent_pair().map(|(fi, _)| fi) == Some(f))
                    .map(|c| {
                        let signed: f64 = (0..nk).map(|k| out.sign[c][f][k][0]).sum();
                        crate::builder::forfeit_coeff(inst, c, f, 0) * (1.0 - signed)
                    })
                    .sum::<f64>()
            } else {
                (0..nc)
                    .map(|c| crate::builder::forfeit_coeff(inst, c, f, p) * out.forfeit[c][f][p])
                    .sum::<f64>()
            };
            ck.record(
                "forfeit_cost",
                (out.forfeit_cost[f][p] - forfeit).abs(),
                || format!("firm {} period {}", firm.id, p + 1),
            );

            let inv_cost: f64 = (0..ni)
                .map(|i| firm.inventory_cost[i] * out.inventory[i][f][p])
                .sum();
            ck.record(
                "inventory_cost",
                (out.inventory_cost[f][p] - inv_cost).abs(),
                || format!("firm {} period {}", firm.id, p + 1),
            );
        }
    }

    // Profit recomputed from first principles.
    let mut profit_rel_error = 0.0_f64;
    for f in 0..nf {
        let mut revenue = 0.0;
        for t in 0..nt {
            let c = inst.tank_customer(t);
            let tank = inst.tank(t);
            for k in 0..nk {
                for p in 0..np {
                    revenue +=
                        prices.values[t][f][k][p] * tank.demand[p] * out.serve[c][f][k][p];
                }
            }
        }
        let costs: f64 = (0..np)
            .map(|p| {
                out.service_cost[f][p]
                    + out.acquisition_cost[f][p]
                    + out.forfeit_cost[f][p]
                    + out.energy_cost[f][p]
                    + out.inventory_cost[f][p]
            })
            .sum();
        let recomputed = revenue - costs;
        let rel = (out.profits[f] - recomputed).abs() / recomputed.abs().max(1.0);
        profit_rel_error = profit_rel_error.max(rel);
        ck.record("profit", rel, || format!("firm {}", inst.firms[f].id));
    }

    VerificationReport {
        families: ck.families,
        profit_rel_error,
    }
}
