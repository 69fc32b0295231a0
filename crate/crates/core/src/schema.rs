//! Instance document schema and parsing.
//!
//! An instance is a single self-describing JSON document with top-level
//! sections `horizon`, `products`, `firms`, `customers`, `contracts`,
//! `tiers`, `swap_policy`, `energy` and `game`. Monetary values share one
//! currency unit, volumes are m3, flows m3/h, power MW, prices money/MWh.
//! Sparse per-firm and per-contract tables are keyed by id; series are
//! dense over periods.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{
    Contract, Customer, EnergyContract, Firm, GameParams, Instance, SwapPolicy, Tank, Tier,
};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: duplicate id '{id}'")]
    DuplicateId { path: String, id: String },
    #[error("{path}: unknown id '{id}'")]
    UnknownId { path: String, id: String },
    #[error("{path}: expected {expected} entries, found {found}")]
    WrongLength {
        path: String,
        expected: usize,
        found: usize,
    },
    #[error("{path}: {msg}")]
    BadValue { path: String, msg: String },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceDoc {
    pub horizon: HorizonDoc,
    pub products: Vec<String>,
    pub contracts: Vec<ContractDoc>,
    pub firms: Vec<FirmDoc>,
    /// Per-firm energy supply agreements, keyed by firm id.
    pub energy: BTreeMap<String, EnergyDoc>,
    pub customers: Vec<CustomerDoc>,
    #[serde(default)]
    pub tiers: Vec<TierDoc>,
    #[serde(default)]
    pub swap_policy: SwapPolicyDoc,
    pub game: GameDoc,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HorizonDoc {
    pub periods: usize,
    /// Plant operating hours per period (OT).
    pub hours_per_period: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContractDoc {
    pub id: String,
    /// Contract length in periods.
    pub duration: usize,
    /// Escalation factors per firm: outer index period, inner index term.
    /// Missing firms or periods escalate by zero.
    #[serde(default)]
    pub escalation: BTreeMap<String, Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FirmDoc {
    pub id: String,
    pub plant: PlantDoc,
    /// Unit production cost per product (money/m3).
    pub production_cost: BTreeMap<String, f64>,
    pub inventory: InventoryDoc,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlantDoc {
    /// Maximum volumetric flow per product (m3/h).
    pub max_flow: BTreeMap<String, f64>,
    /// Power drawn per unit of product flow (MW per m3/h).
    pub power_per_flow: BTreeMap<String, f64>,
    /// Power drawn per unit of air flow (MW per m3/h).
    #[serde(default)]
    pub air_power_per_flow: f64,
    /// Air intake per unit of product flow (m3 air / m3 product).
    #[serde(default)]
    pub air_ratio: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InventoryDoc {
    #[serde(default)]
    pub unit_cost: BTreeMap<String, f64>,
    #[serde(default)]
    pub initial: BTreeMap<String, f64>,
    /// Inventory must stay above lower_factor * product flow rate.
    #[serde(default)]
    pub lower_factor: f64,
    /// Inventory must stay below upper_factor * product flow rate;
    /// absent means unbounded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper_factor: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnergyDoc {
    /// Contracted average power per period (MW).
    pub contracted_power: f64,
    /// Tolerated relative deviation before penalties apply.
    pub tolerance: f64,
    /// Expected electricity price per period (money/MWh).
    pub price: Vec<f64>,
    /// Price multiplier on out-of-band consumption.
    #[serde(default = "default_penalty")]
    pub penalty_factor: f64,
}

fn default_penalty() -> f64 {
    1.2
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CustomerDoc {
    pub id: String,
    /// Incumbent assignment(s); a well-formed customer has at most one.
    #[serde(default)]
    pub incumbent: Vec<IncumbentDoc>,
    /// Formula contract terms; every customer uses the same term count.
    pub terms: Vec<f64>,
    /// Fixed acquisition cost per firm.
    #[serde(default)]
    pub acquisition_fixed: BTreeMap<String, f64>,
    /// Fixed forfeit cost per firm.
    #[serde(default)]
    pub forfeit_fixed: BTreeMap<String, f64>,
    pub tanks: Vec<TankDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IncumbentDoc {
    pub firm: String,
    pub contract: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TankDoc {
    pub id: String,
    pub product: String,
    /// Demand per period (m3).
    pub demand: Vec<f64>,
    /// Delivery cost per firm per period (money).
    #[serde(default)]
    pub delivery_cost: BTreeMap<String, Vec<f64>>,
    /// Base price per firm per contract (money/m3).
    pub base_price: BTreeMap<String, BTreeMap<String, f64>>,
    /// Demand-proportional acquisition cost per firm (money/m3).
    #[serde(default)]
    pub acquisition_variable: BTreeMap<String, f64>,
    /// Demand-proportional forfeit cost per firm (money/m3).
    #[serde(default)]
    pub forfeit_variable: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TierDoc {
    pub id: String,
    pub lower: f64,
    pub upper: f64,
    /// Spot premium multiplier applied to service plus production cost.
    pub premium: f64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SwapPolicyDoc {
    /// Fraction of own capacity available for outgoing swaps.
    #[serde(default)]
    pub capacity_fraction: f64,
    /// Swap premium keyed by producing firm then serving firm; missing
    /// pairs default to 1.
    #[serde(default)]
    pub premium: BTreeMap<String, BTreeMap<String, f64>>,
    /// Inclusive 1-based period ranges over which swaps must balance;
    /// defaults to one interval covering the whole horizon.
    #[serde(default)]
    pub balance_intervals: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GameDoc {
    pub negotiation_power: BTreeMap<String, f64>,
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
    #[serde(default = "default_refine_rounds")]
    pub refine_rounds: usize,
}

fn default_grid_size() -> usize {
    40
}

fn default_refine_rounds() -> usize {
    3
}

struct Ids<'a> {
    products: Vec<&'a str>,
    firms: Vec<&'a str>,
    contracts: Vec<&'a str>,
}

impl<'a> Ids<'a> {
    fn product(&self, id: &str, path: &str) -> Result<usize, ParseError> {
        lookup(&self.products, id, path)
    }
    fn firm(&self, id: &str, path: &str) -> Result<usize, ParseError> {
        lookup(&self.firms, id, path)
    }
    fn contract(&self, id: &str, path: &str) -> Result<usize, ParseError> {
        lookup(&self.contracts, id, path)
    }
}

fn lookup(ids: &[&str], id: &str, path: &str) -> Result<usize, ParseError> {
    ids.iter()
        .position(|&x| x == id)
        .ok_or_else(|| ParseError::UnknownId {
            path: path.to_string(),
            id: id.to_string(),
        })
}

fn no_duplicates<'a, I: Iterator<Item = &'a str>>(iter: I, path: &str) -> Result<(), ParseError> {
    let mut seen = std::collections::BTreeSet::new();
    for id in iter {
        if !seen.insert(id) {
            return Err(ParseError::DuplicateId {
                path: path.to_string(),
                id: id.to_string(),
            });
        }
    }
    Ok(())
}

fn series(
    map: &BTreeMap<String, f64>,
    ids: &[&str],
    default: f64,
    path: &str,
) -> Result<Vec<f64>, ParseError> {
    for key in map.keys() {
        lookup(ids, key, path)?;
    }
    Ok(ids
        .iter()
        .map(|&id| map.get(id).copied().unwrap_or(default))
        .collect())
}

/// Parse a JSON instance document into a compiled [`Instance`].
///
/// Parsing resolves ids, applies defaults and enforces structural schema
/// rules (duplicate ids, reference resolution, series lengths, contract
/// durations). Value-level invariants are the business of
/// [`crate::instance::validate_instance`].
pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    let doc: InstanceDoc = serde_json::from_str(text)?;
    compile(&doc)
}

/// Compile a deserialized document, resolving ids and applying defaults.
pub fn compile(doc: &InstanceDoc) -> Result<Instance, ParseError> {
    let periods = doc.horizon.periods;
    if periods == 0 {
        return Err(ParseError::BadValue {
            path: "horizon.periods".into(),
            msg: "horizon must contain at least one period".into(),
        });
    }

    no_duplicates(doc.products.iter().map(|s| s.as_str()), "products")?;
    no_duplicates(doc.firms.iter().map(|f| f.id.as_str()), "firms")?;
    no_duplicates(doc.contracts.iter().map(|c| c.id.as_str()), "contracts")?;
    no_duplicates(doc.customers.iter().map(|c| c.id.as_str()), "customers")?;
    no_duplicates(doc.tiers.iter().map(|t| t.id.as_str()), "tiers")?;

    let ids = Ids {
        products: doc.products.iter().map(|s| s.as_str()).collect(),
        firms: doc.firms.iter().map(|f| f.id.as_str()).collect(),
        contracts: doc.contracts.iter().map(|c| c.id.as_str()).collect(),
    };
    let n_firms = ids.firms.len();

    let term_count = doc
        .customers
        .first()
        .map(|c| c.terms.len())
        .unwrap_or_default();
    for c in &doc.customers {
        if c.terms.len() != term_count {
            return Err(ParseError::WrongLength {
                path: format!("customers.{}.terms", c.id),
                expected: term_count,
                found: c.terms.len(),
            });
        }
    }

    let mut contracts = Vec::with_capacity(doc.contracts.len());
    for cd in &doc.contracts {
        if cd.duration == 0 {
            return Err(ParseError::BadValue {
                path: format!("contracts.{}.duration", cd.id),
                msg: "duration must be >= 1".into(),
            });
        }
        let mut escalation = vec![vec![vec![0.0; term_count]; periods]; n_firms];
        for (firm_id, rows) in &cd.escalation {
            let path = format!("contracts.{}.escalation.{}", cd.id, firm_id);
            let f = ids.firm(firm_id, &path)?;
            if rows.len() > periods {
                return Err(ParseError::WrongLength {
                    path,
                    expected: periods,
                    found: rows.len(),
                });
            }
            for (p, row) in rows.iter().enumerate() {
                if row.len() != term_count {
                    return Err(ParseError::WrongLength {
                        path: format!("{path}[{p}]"),
                        expected: term_count,
                        found: row.len(),
                    });
                }
                escalation[f][p].copy_from_slice(row);
            }
        }
        contracts.push(Contract {
            id: cd.id.clone(),
            duration: cd.duration,
            escalation,
        });
    }

    let mut firms = Vec::with_capacity(n_firms);
    for fd in &doc.firms {
        let path = format!("firms.{}", fd.id);
        let energy_doc =
            doc.energy
                .get(&fd.id)
                .ok_or_else(|| ParseError::BadValue {
                    path: format!("energy.{}", fd.id),
                    msg: "every firm needs an energy contract".into(),
                })?;
        if energy_doc.price.len() != periods {
            return Err(ParseError::WrongLength {
                path: format!("energy.{}.price", fd.id),
                expected: periods,
                found: energy_doc.price.len(),
            });
        }
        for key in doc.energy.keys() {
            ids.firm(key, "energy")?;
        }
        firms.push(Firm {
            id: fd.id.clone(),
            max_flow: series(&fd.plant.max_flow, &ids.products, 0.0, &format!("{path}.plant.max_flow"))?,
            power_per_flow: series(
                &fd.plant.power_per_flow,
                &ids.products,
                0.0,
                &format!("{path}.plant.power_per_flow"),
            )?,
            air_power_per_flow: fd.plant.air_power_per_flow,
            air_ratio: series(&fd.plant.air_ratio, &ids.products, 0.0, &format!("{path}.plant.air_ratio"))?,
            production_cost: series(
                &fd.production_cost,
                &ids.products,
                0.0,
                &format!("{path}.production_cost"),
            )?,
            inventory_cost: series(
                &fd.inventory.unit_cost,
                &ids.products,
                0.0,
                &format!("{path}.inventory.unit_cost"),
            )?,
            initial_inventory: series(
                &fd.inventory.initial,
                &ids.products,
                0.0,
                &format!("{path}.inventory.initial"),
            )?,
            inventory_lower_factor: fd.inventory.lower_factor,
            inventory_upper_factor: fd.inventory.upper_factor.unwrap_or(f64::INFINITY),
            energy: EnergyContract {
                contracted_power: energy_doc.contracted_power,
                tolerance: energy_doc.tolerance,
                price: energy_doc.price.clone(),
                penalty_factor: energy_doc.penalty_factor,
            },
        });
    }

    let mut customers = Vec::with_capacity(doc.customers.len());
    for cd in &doc.customers {
        let path = format!("customers.{}", cd.id);
        no_duplicates(
            cd.tanks.iter().map(|t| t.id.as_str()),
            &format!("{path}.tanks"),
        )?;
        let mut incumbent = Vec::new();
        for inc in &cd.incumbent {
            let f = ids.firm(&inc.firm, &format!("{path}.incumbent.firm"))?;
            let k = ids.contract(&inc.contract, &format!("{path}.incumbent.contract"))?;
            incumbent.push((f, k));
        }
        let mut tanks = Vec::with_capacity(cd.tanks.len());
        for td in &cd.tanks {
            let tpath = format!("{path}.tanks.{}", td.id);
            let product = ids.product(&td.product, &format!("{tpath}.product"))?;
            if td.demand.len() != periods {
                return Err(ParseError::WrongLength {
                    path: format!("{tpath}.demand"),
                    expected: periods,
                    found: td.demand.len(),
                });
            }
            let mut delivery_cost: Vec<Option<Vec<f64>>> = vec![None; n_firms];
            for (firm_id, costs) in &td.delivery_cost {
                let f = ids.firm(firm_id, &format!("{tpath}.delivery_cost"))?;
                if costs.len() != periods {
                    return Err(ParseError::WrongLength {
                        path: format!("{tpath}.delivery_cost.{firm_id}"),
                        expected: periods,
                        found: costs.len(),
                    });
                }
                delivery_cost[f] = Some(costs.clone());
            }
            let mut base_price: Vec<Vec<Option<f64>>> =
                vec![vec![None; contracts.len()]; n_firms];
            for (firm_id, per_contract) in &td.base_price {
                let f = ids.firm(firm_id, &format!("{tpath}.base_price"))?;
                for (contract_id, beta) in per_contract {
                    let k = ids.contract(contract_id, &format!("{tpath}.base_price.{firm_id}"))?;
                    base_price[f][k] = Some(*beta);
                }
            }
            tanks.push(Tank {
                id: td.id.clone(),
                product,
                demand: td.demand.clone(),
                delivery_cost,
                base_price,
                acquisition_variable: series(
                    &td.acquisition_variable,
                    &ids.firms,
                    0.0,
                    &format!("{tpath}.acquisition_variable"),
                )?,
                forfeit_variable: series(
                    &td.forfeit_variable,
                    &ids.firms,
                    0.0,
                    &format!("{tpath}.forfeit_variable"),
                )?,
            });
        }
        customers.push(Customer {
            id: cd.id.clone(),
            incumbent,
            terms: cd.terms.clone(),
            acquisition_fixed: series(
                &cd.acquisition_fixed,
                &ids.firms,
                0.0,
                &format!("{path}.acquisition_fixed"),
            )?,
            forfeit_fixed: series(
                &cd.forfeit_fixed,
                &ids.firms,
                0.0,
                &format!("{path}.forfeit_fixed"),
            )?,
            tanks,
        });
    }

    let tiers = doc
        .tiers
        .iter()
        .map(|t| Tier {
            id: t.id.clone(),
            lower: t.lower,
            upper: t.upper,
            premium: t.premium,
        })
        .collect();

    let mut premium = vec![vec![1.0; n_firms]; n_firms];
    for (from_id, row) in &doc.swap_policy.premium {
        let from = ids.firm(from_id, "swap_policy.premium")?;
        for (to_id, eta) in row {
            let to = ids.firm(to_id, &format!("swap_policy.premium.{from_id}"))?;
            premium[from][to] = *eta;
        }
    }
    let intervals = if doc.swap_policy.balance_intervals.is_empty() {
        vec![(1, periods)]
    } else {
        doc.swap_policy.balance_intervals.clone()
    };
    for &(a, b) in &intervals {
        if a == 0 || b > periods || a > b {
            return Err(ParseError::BadValue {
                path: "swap_policy.balance_intervals".into(),
                msg: format!("interval ({a}, {b}) outside 1..={periods}"),
            });
        }
    }

    let negotiation_power = series(
        &doc.game.negotiation_power,
        &ids.firms,
        0.0,
        "game.negotiation_power",
    )?;

    let mut instance = Instance {
        periods,
        hours_per_period: doc.horizon.hours_per_period,
        products: doc.products.clone(),
        contracts,
        firms,
        customers,
        tiers,
        swap: SwapPolicy {
            capacity_fraction: doc.swap_policy.capacity_fraction,
            premium,
            intervals,
        },
        game: GameParams {
            negotiation_power,
            grid_size: doc.game.grid_size,
            refine_rounds: doc.game.refine_rounds,
        },
        tank_index: Vec::new(),
        term_count,
    };
    instance.rebuild_tank_index();
    Ok(instance)
}

/// Turn a compiled instance back into its document form. Round trip:
/// `compile(&to_document(&inst))` equals `inst`.
pub fn to_document(inst: &Instance) -> InstanceDoc {
    let product = |i: usize| inst.products[i].clone();
    InstanceDoc {
        horizon: HorizonDoc {
            periods: inst.periods,
            hours_per_period: inst.hours_per_period,
        },
        products: inst.products.clone(),
        contracts: inst
            .contracts
            .iter()
            .map(|c| ContractDoc {
                id: c.id.clone(),
                duration: c.duration,
                escalation: inst
                    .firms
                    .iter()
                    .enumerate()
                    .filter(|(f, _)| {
                        c.escalation[*f]
                            .iter()
                            .any(|row| row.iter().any(|&e| e != 0.0))
                    })
                    .map(|(f, firm)| (firm.id.clone(), c.escalation[f].clone()))
                    .collect(),
            })
            .collect(),
        firms: inst
            .firms
            .iter()
            .map(|f| FirmDoc {
                id: f.id.clone(),
                plant: PlantDoc {
                    max_flow: to_map(&f.max_flow, &inst.products),
                    power_per_flow: to_map(&f.power_per_flow, &inst.products),
                    air_power_per_flow: f.air_power_per_flow,
                    air_ratio: to_map(&f.air_ratio, &inst.products),
                },
                production_cost: to_map(&f.production_cost, &inst.products),
                inventory: InventoryDoc {
                    unit_cost: to_map(&f.inventory_cost, &inst.products),
                    initial: to_map(&f.initial_inventory, &inst.products),
                    lower_factor: f.inventory_lower_factor,
                    upper_factor: f.inventory_upper_factor.is_finite().then_some(f.inventory_upper_factor),
                },
            })
            .collect(),
        energy: inst
            .firms
            .iter()
            .map(|f| {
                (
                    f.id.clone(),
                    EnergyDoc {
                        contracted_power: f.energy.contracted_power,
                        tolerance: f.energy.tolerance,
                        price: f.energy.price.clone(),
                        penalty_factor: f.energy.penalty_factor,
                    },
                )
            })
            .collect(),
        customers: inst
            .customers
            .iter()
            .map(|c| CustomerDoc {
                id: c.id.clone(),
                incumbent: c
                    .incumbent
                    .iter()
                    .map(|&(f, k)| IncumbentDoc {
                        firm: inst.firms[f].id.clone(),
                        contract: inst.contracts[k].id.clone(),
                    })
                    .collect(),
                terms: c.terms.clone(),
                acquisition_fixed: to_firm_map(&c.acquisition_fixed, &inst.firms),
                forfeit_fixed: to_firm_map(&c.forfeit_fixed, &inst.firms),
                tanks: c
                    .tanks
                    .iter()
                    .map(|t| TankDoc {
                        id: t.id.clone(),
                        product: product(t.product),
                        demand: t.demand.clone(),
                        delivery_cost: t
                            .delivery_cost
                            .iter()
                            .enumerate()
                            .filter_map(|(f, dc)| {
                                dc.as_ref().map(|v| (inst.firms[f].id.clone(), v.clone()))
                            })
                            .collect(),
                        base_price: t
                            .base_price
                            .iter()
                            .enumerate()
                            .filter_map(|(f, per_k)| {
                                let m: BTreeMap<String, f64> = per_k
                                    .iter()
                                    .enumerate()
                                    .filter_map(|(k, beta)| {
                                        beta.map(|b| (inst.contracts[k].id.clone(), b))
                                    })
                                    .collect();
                                if m.is_empty() {
                                    None
                                } else {
                                    Some((inst.firms[f].id.clone(), m))
                                }
                            })
                            .collect(),
                        acquisition_variable: to_firm_map(&t.acquisition_variable, &inst.firms),
                        forfeit_variable: to_firm_map(&t.forfeit_variable, &inst.firms),
                    })
                    .collect(),
            })
            .collect(),
        tiers: inst
            .tiers
            .iter()
            .map(|t| TierDoc {
                id: t.id.clone(),
                lower: t.lower,
                upper: t.upper,
                premium: t.premium,
            })
            .collect(),
        swap_policy: SwapPolicyDoc {
            capacity_fraction: inst.swap.capacity_fraction,
            premium: inst
                .firms
                .iter()
                .enumerate()
                .filter_map(|(from, firm)| {
                    let row: BTreeMap<String, f64> = inst
                        .firms
                        .iter()
                        .enumerate()
                        .filter(|&(to, _)| to != from && inst.swap.premium[from][to] != 1.0)
                        .map(|(to, other)| (other.id.clone(), inst.swap.premium[from][to]))
                        .collect();
                    if row.is_empty() {
                        None
                    } else {
                        Some((firm.id.clone(), row))
                    }
                })
                .collect(),
            balance_intervals: inst.swap.intervals.clone(),
        },
        game: GameDoc {
            negotiation_power: to_firm_map(&inst.game.negotiation_power, &inst.firms),
            grid_size: inst.game.grid_size,
            refine_rounds: inst.game.refine_rounds,
        },
    }
}

fn to_map(values: &[f64], names: &[String]) -> BTreeMap<String, f64> {
    names
        .iter()
        .zip(values.iter())
        .filter(|(_, &v)| v != 0.0)
        .map(|(n, &v)| (n.clone(), v))
        .collect()
}

fn to_firm_map(values: &[f64], firms: &[Firm]) -> BTreeMap<String, f64> {
    firms
        .iter()
        .zip(values.iter())
        .filter(|(_, &v)| v != 0.0)
        .map(|(f, &v)| (f.id.clone(), v))
        .collect()
}

/// Serialize an instance as a pretty-printed JSON document.
pub fn serialize_instance(inst: &Instance) -> String {
    serde_json::to_string_pretty(&to_document(inst)).expect("instance serializes")
}
