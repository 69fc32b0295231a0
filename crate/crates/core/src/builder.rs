//! Translate an instance into a mixed-integer model: assignment and
//! contract scheduling, demand satisfaction with swaps and tiered spot
//! purchases, the linear plant surrogate, cost accounting rows, per-firm
//! profit, and one of the two fairness objectives.
//!
//! Every row carries a family tag so structural audits can count rows per
//! constraint family.

use oligofair_solver::model::{Model, RowSense, Sense, VarId};
use thiserror::Error;

use crate::instance::{unit_service_cost, validate_instance, Instance, UscTable, Violation};
use crate::pricing::{build_premium_table, build_price_table, PremiumTable, PriceTable, PricingError};

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("instance failed validation with {0} findings; first: {1}")]
    InvalidInstance(usize, String),
    #[error("contract {contract} lasts {duration} periods, beyond the {horizon}-period horizon")]
    DurationExceedsHorizon {
        contract: String,
        duration: usize,
        horizon: usize,
    },
    #[error(transparent)]
    Pricing(#[from] PricingError),
    #[error("{0}")]
    CostTable(String),
    #[error("firm {firm}: bargaining range is empty (upper {upper} <= status quo {sq} + margin {margin})")]
    EmptyBargainingRange {
        firm: String,
        sq: f64,
        upper: f64,
        margin: f64,
    },
    #[error("firm {firm}: grid point {point} does not exceed the status-quo profit {sq}")]
    LogDomain { firm: String, point: f64, sq: f64 },
    #[error("status-quo pinning requires every customer to have an incumbent; {customer} has none")]
    PinWithoutIncumbent { customer: String },
}

/// Indices of every model variable, for building and decoding.
#[derive(Clone, Debug)]
pub struct VarMap {
    /// W: customer c served by firm f under contract k in period p.
    pub serve: Vec<Vec<Vec<Vec<VarId>>>>,
    /// WS: contract signing events.
    pub sign: Vec<Vec<Vec<Vec<VarId>>>>,
    /// WN: customer acquisitions, defined for p >= 2.
    pub acquire: Vec<Vec<Vec<VarId>>>,
    /// WD: customer forfeits, defined for p >= 2.
    pub forfeit: Vec<Vec<Vec<VarId>>>,
    /// Y: active spot tier per product, firm, tier, period.
    pub tier_active: Vec<Vec<Vec<Vec<VarId>>>>,
    /// S: in-house supply per tank, firm, period.
    pub supply: Vec<Vec<Vec<VarId>>>,
    /// SW: swap flow per tank, producing firm, serving firm, period.
    pub swap: Vec<Vec<Vec<Vec<VarId>>>>,
    /// O: total spot purchases per tank, firm, period.
    pub spot: Vec<Vec<Vec<VarId>>>,
    /// Disaggregated spot purchases per tank, firm, tier, period.
    pub spot_tier: Vec<Vec<Vec<Vec<VarId>>>>,
    /// Q: production per product, firm, period.
    pub production: Vec<Vec<Vec<VarId>>>,
    /// INV: inventory per product, firm, period.
    pub inventory: Vec<Vec<Vec<VarId>>>,
    /// V: product flow rate per product, firm, period.
    pub flow: Vec<Vec<Vec<VarId>>>,
    /// Air intake flow per firm, period.
    pub air_flow: Vec<Vec<VarId>>,
    /// CAP: production capacity per product, firm, period.
    pub capacity: Vec<Vec<Vec<VarId>>>,
    /// PW: average power draw per firm, period.
    pub power: Vec<Vec<VarId>>,
    /// In-band energy consumption per firm, period.
    pub band: Vec<Vec<VarId>>,
    /// Deviation above the band.
    pub over: Vec<Vec<VarId>>,
    /// Deviation below the band.
    pub under: Vec<Vec<VarId>>,
    pub service_cost: Vec<Vec<VarId>>,
    pub acquisition_cost: Vec<Vec<VarId>>,
    pub forfeit_cost: Vec<Vec<VarId>>,
    pub energy_cost: Vec<Vec<VarId>>,
    pub inventory_cost: Vec<Vec<VarId>>,
    pub profit: Vec<VarId>,
    /// SOS2 interpolation weights per firm and grid point (Nash mode).
    pub weight: Vec<Vec<VarId>>,
}

pub struct BuiltModel {
    pub model: Model,
    pub vars: VarMap,
    pub usc: UscTable,
    pub prices: PriceTable,
    pub premiums: PremiumTable,
    /// Profit grids per firm when the Nash objective is installed.
    pub grids: Option<Vec<Vec<f64>>>,
}

pub struct ModelBuilder<'a> {
    inst: &'a Instance,
    usc: UscTable,
    prices: PriceTable,
    premiums: PremiumTable,
    model: Model,
    vars: VarMap,
    grids: Option<Vec<Vec<f64>>>,
}

impl<'a> ModelBuilder<'a> {
    /// Validate the instance, precompute cost tables and allocate every
    /// variable. `pin_to_incumbent` freezes each customer at its incumbent
    /// firm (contract choice stays free), which is how the status-quo
    /// market is modelled.
    pub fn new(inst: &'a Instance, pin_to_incumbent: bool) -> Result<Self, BuildError> {
        let violations: Vec<Violation> = validate_instance(inst);
        if !violations.is_empty() {
            return Err(BuildError::InvalidInstance(
                violations.len(),
                format!("{}: {}", violations[0].location, violations[0].message),
            ));
        }
        for k in &inst.contracts {
            if k.duration > inst.periods {
                return Err(BuildError::DurationExceedsHorizon {
                    contract: k.id.clone(),
                    duration: k.duration,
                    horizon: inst.periods,
                });
            }
        }
        if pin_to_incumbent {
            if let Some(c) = inst.customers.iter().find(|c| c.is_free()) {
                return Err(BuildError::PinWithoutIncumbent {
                    customer: c.id.clone(),
                });
            }
        }
        let usc = unit_service_cost(inst).map_err(|e| BuildError::CostTable(e.to_string()))?;
        let prices = build_price_table(inst)?;
        let premiums = build_premium_table(inst, &usc);

        let mut model = Model::new("market", Sense::Maximize);
        let (nc, nf, nk, np, ni, nb, nt) = (
            inst.customers.len(),
            inst.firms.len(),
            inst.contracts.len(),
            inst.periods,
            inst.products.len(),
            inst.tiers.len(),
            inst.num_tanks(),
        );

        let mut serve = vec![vec![vec![Vec::with_capacity(np); nk]; nf]; nc];
        let mut sign = vec![vec![vec![Vec::with_capacity(np); nk]; nf]; nc];
        for (c, cust) in inst.customers.iter().enumerate() {
            let pinned_firm = if pin_to_incumbent {
                cust.incumbent_pair().map(|(f, _)| f)
            } else {
                None
            };
            for (f, firm) in inst.firms.iter().enumerate() {
                let blocked = pinned_firm.is_some_and(|pf| pf != f);
                for (k, contract) in inst.contracts.iter().enumerate() {
                    for p in 1..=np {
                        let w = model.add_binary(format!(
                            "w_{}_{}_{}_{p}",
                            cust.id, firm.id, contract.id
                        ));
                        let ws = model.add_binary(format!(
                            "ws_{}_{}_{}_{p}",
                            cust.id, firm.id, contract.id
                        ));
                        if blocked {
                            fix_zero(&mut model, w);
                            fix_zero(&mut model, ws);
                        }
                        serve[c][f][k].push(w);
                        sign[c][f][k].push(ws);
                    }
                }
            }
        }

        let mut acquire = vec![vec![Vec::with_capacity(np); nf]; nc];
        let mut forfeit = vec![vec![Vec::with_capacity(np); nf]; nc];
        for (c, cust) in inst.customers.iter().enumerate() {
            for (f, firm) in inst.firms.iter().enumerate() {
                for p in 1..=np {
                    let wn = model.add_binary(format!("wn_{}_{}_{p}", cust.id, firm.id));
                    let wd = model.add_binary(format!("wd_{}_{}_{p}", cust.id, firm.id));
                    if p == 1 {
                        // First-period acquisition/forfeit costs attach to
                        // signing variables instead.
                        fix_zero(&mut model, wn);
                        fix_zero(&mut model, wd);
                    }
                    acquire[c][f].push(wn);
                    forfeit[c][f].push(wd);
                }
            }
        }

        let mut tier_active = vec![vec![vec![Vec::with_capacity(np); nb]; nf]; ni];
        for (i, product) in inst.products.iter().enumerate() {
            for (f, firm) in inst.firms.iter().enumerate() {
                for (b, tier) in inst.tiers.iter().enumerate() {
                    for p in 1..=np {
                        tier_active[i][f][b].push(model.add_binary(format!(
                            "y_{product}_{}_{}_{p}",
                            firm.id, tier.id
                        )));
                    }
                }
            }
        }

        let tank_name = |inst: &Instance, t: usize| {
            let (c, local) = inst.tank_index[t];
            format!(
                "{}_{}",
                inst.customers[c].id, inst.customers[c].tanks[local].id
            )
        };

        let mut supply = vec![vec![Vec::with_capacity(np); nf]; nt];
        let mut spot = vec![vec![Vec::with_capacity(np); nf]; nt];
        let mut spot_tier = vec![vec![vec![Vec::with_capacity(np); nb]; nf]; nt];
        let mut swap = vec![vec![vec![Vec::new(); nf]; nf]; nt];
        for t in 0..nt {
            let tn = tank_name(inst, t);
            for (f, firm) in inst.firms.iter().enumerate() {
                for p in 1..=np {
                    supply[t][f].push(model.add_continuous(
                        format!("s_{tn}_{}_{p}", firm.id),
                        0.0,
                        f64::INFINITY,
                    ));
                    spot[t][f].push(model.add_continuous(
                        format!("o_{tn}_{}_{p}", firm.id),
                        0.0,
                        f64::INFINITY,
                    ));
                }
                for (b, tier) in inst.tiers.iter().enumerate() {
                    for p in 1..=np {
                        spot_tier[t][f][b].push(model.add_continuous(
                            format!("oh_{tn}_{}_{}_{p}", firm.id, tier.id),
                            0.0,
                            f64::INFINITY,
                        ));
                    }
                }
                for (g, server) in inst.firms.iter().enumerate() {
                    if g == f {
                        continue;
                    }
                    swap[t][f][g] = (1..=np)
                        .map(|p| {
                            model.add_continuous(
                                format!("swp_{tn}_{}_{}_{p}", firm.id, server.id),
                                0.0,
                                f64::INFINITY,
                            )
                        })
                        .collect();
                }
            }
        }

        let mut production = vec![vec![Vec::with_capacity(np); nf]; ni];
        let mut inventory = vec![vec![Vec::with_capacity(np); nf]; ni];
        let mut flow = vec![vec![Vec::with_capacity(np); nf]; ni];
        let mut capacity = vec![vec![Vec::with_capacity(np); nf]; ni];
        for (i, product) in inst.products.iter().enumerate() {
            for (f, firm) in inst.firms.iter().enumerate() {
                for p in 1..=np {
                    production[i][f].push(model.add_continuous(
                        format!("q_{product}_{}_{p}", firm.id),
                        0.0,
                        f64::INFINITY,
                    ));
                    inventory[i][f].push(model.add_continuous(
                        format!("inv_{product}_{}_{p}", firm.id),
                        0.0,
                        f64::INFINITY,
                    ));
                    flow[i][f].push(model.add_continuous(
                        format!("v_{product}_{}_{p}", firm.id),
                        0.0,
                        firm.max_flow[i],
                    ));
                    capacity[i][f].push(model.add_continuous(
                        format!("capv_{product}_{}_{p}", firm.id),
                        0.0,
                        f64::INFINITY,
                    ));
                }
            }
        }

        let mut air_flow = vec![Vec::with_capacity(np); nf];
        let mut power = vec![Vec::with_capacity(np); nf];
        let mut band = vec![Vec::with_capacity(np); nf];
        let mut over = vec![Vec::with_capacity(np); nf];
        let mut under = vec![Vec::with_capacity(np); nf];
        let mut service_cost = vec![Vec::with_capacity(np); nf];
        let mut acquisition_cost = vec![Vec::with_capacity(np); nf];
        let mut forfeit_cost = vec![Vec::with_capacity(np); nf];
        let mut energy_cost = vec![Vec::with_capacity(np); nf];
        let mut inventory_cost = vec![Vec::with_capacity(np); nf];
        for (f, firm) in inst.firms.iter().enumerate() {
            let cec = firm.energy.contracted_power;
            let eps = firm.energy.tolerance;
            for p in 1..=np {
                air_flow[f].push(model.add_continuous(
                    format!("vair_{}_{p}", firm.id),
                    0.0,
                    f64::INFINITY,
                ));
                power[f].push(model.add_continuous(
                    format!("pw_{}_{p}", firm.id),
                    0.0,
                    f64::INFINITY,
                ));
                band[f].push(model.add_continuous(
                    format!("th_{}_{p}", firm.id),
                    (1.0 - eps) * cec,
                    (1.0 + eps) * cec,
                ));
                over[f].push(model.add_continuous(
                    format!("dp_{}_{p}", firm.id),
                    0.0,
                    f64::INFINITY,
                ));
                under[f].push(model.add_continuous(
                    format!("dm_{}_{p}", firm.id),
                    0.0,
                    f64::INFINITY,
                ));
                service_cost[f].push(model.add_continuous(
                    format!("sc_{}_{p}", firm.id),
                    0.0,
                    f64::INFINITY,
                ));
                acquisition_cost[f].push(model.add_continuous(
                    format!("nc_{}_{p}", firm.id),
                    0.0,
                    f64::INFINITY,
                ));
                forfeit_cost[f].push(model.add_continuous(
                    format!("rc_{}_{p}", firm.id),
                    0.0,
                    f64::INFINITY,
                ));
                energy_cost[f].push(model.add_continuous(
                    format!("ec_{}_{p}", firm.id),
                    0.0,
                    f64::INFINITY,
                ));
                inventory_cost[f].push(model.add_continuous(
                    format!("ic_{}_{p}", firm.id),
                    0.0,
                    f64::INFINITY,
                ));
            }
        }
        let profit: Vec<VarId> = inst
            .firms
            .iter()
            .map(|firm| {
                model.add_continuous(
                    format!("profit_{}", firm.id),
                    f64::NEG_INFINITY,
                    f64::INFINITY,
                )
            })
            .collect();

        Ok(ModelBuilder {
            inst,
            usc,
            prices,
            premiums,
            model,
            vars: VarMap {
                serve,
                sign,
                acquire,
                forfeit,
                tier_active,
                supply,
                swap,
                spot,
                spot_tier,
                production,
                inventory,
                flow,
                air_flow,
                capacity,
                power,
                band,
                over,
                under,
                service_cost,
                acquisition_cost,
                forfeit_cost,
                energy_cost,
                inventory_cost,
                profit,
                weight: Vec::new(),
            },
            grids: None,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    /// Exact assignment, single signature, startup linking, closed-contract
    /// coverage and the acquisition/forfeit transition rows.
    pub fn build_assignment_block(&mut self) {
        let inst = self.inst;
        let v = &self.vars;
        let (nc, nf, nk, np) = (
            inst.customers.len(),
            inst.firms.len(),
            inst.contracts.len(),
            inst.periods,
        );

        for c in 0..nc {
            let cid = &inst.customers[c].id;
            for p in 0..np {
                let mut w_terms = Vec::with_capacity(nf * nk);
                let mut ws_terms = Vec::with_capacity(nf * nk);
                for f in 0..nf {
                    for k in 0..nk {
                        w_terms.push((v.serve[c][f][k][p], 1.0));
                        ws_terms.push((v.sign[c][f][k][p], 1.0));
                    }
                }
                self.model.add_constraint(
                    format!("assign_{cid}_{}", p + 1),
                    "assignment",
                    w_terms,
                    RowSense::Eq,
                    1.0,
                );
                self.model.add_constraint(
                    format!("onesig_{cid}_{}", p + 1),
                    "signature",
                    ws_terms,
                    RowSense::Le,
                    1.0,
                );
            }
        }

        for c in 0..nc {
            let cid = &inst.customers[c].id;
            for f in 0..nf {
                let fid = &inst.firms[f].id;
                for k in 0..nk {
                    let kid = &inst.contracts[k].id;
                    let duration = inst.contracts[k].duration;
                    for p in 0..np {
                        // startup: w_p - w_{p-1} <= ws_p
                        let mut terms = vec![
                            (v.serve[c][f][k][p], 1.0),
                            (v.sign[c][f][k][p], -1.0),
                        ];
                        if p > 0 {
                            terms.push((v.serve[c][f][k][p - 1], -1.0));
                        }
                        self.model.add_constraint(
                            format!("startup_{cid}_{fid}_{kid}_{}", p + 1),
                            "startup",
                            terms,
                            RowSense::Le,
                            0.0,
                        );
                        // coverage: sum of signings in the active window
                        // equals the serving indicator; the window clips at
                        // the horizon start.
                        let from = (p + 1).saturating_sub(duration);
                        let mut terms: Vec<(VarId, f64)> = (from..=p)
                            .map(|q| (v.sign[c][f][k][q], 1.0))
                            .collect();
                        terms.push((v.serve[c][f][k][p], -1.0));
                        self.model.add_constraint(
                            format!("cover_{cid}_{fid}_{kid}_{}", p + 1),
                            "coverage",
                            terms,
                            RowSense::Eq,
                            0.0,
                        );
                    }
                }
            }
        }

        // Firm-level transitions: acquisitions and forfeits trigger only
        // when the serving firm changes, never on a same-firm contract
        // switch.
        for c in 0..nc {
            let cid = &inst.customers[c].id;
            for f in 0..nf {
                let fid = &inst.firms[f].id;
                for p in 1..np {
                    let mut gain = Vec::with_capacity(2 * nk + 1);
                    let mut loss = Vec::with_capacity(2 * nk + 1);
                    for k in 0..nk {
                        gain.push((v.serve[c][f][k][p], 1.0));
                        gain.push((v.serve[c][f][k][p - 1], -1.0));
                        loss.push((v.serve[c][f][k][p - 1], 1.0));
                        loss.push((v.serve[c][f][k][p], -1.0));
                    }
                    gain.push((v.acquire[c][f][p], -1.0));
                    loss.push((v.forfeit[c][f][p], -1.0));
                    self.model.add_constraint(
                        format!("gain_{cid}_{fid}_{}", p + 1),
                        "acquire_link",
                        gain,
                        RowSense::Le,
                        0.0,
                    );
                    self.model.add_constraint(
                        format!("loss_{cid}_{fid}_{}", p + 1),
                        "forfeit_link",
                        loss,
                        RowSense::Le,
                        0.0,
                    );
                }
            }
        }
    }

    /// Demand satisfaction, capacity use, inventory dynamics, spot tier
    /// disaggregation and logic, and swap bounds/logic/balance.
    pub fn build_flow_block(&mut self) {
        let inst = self.inst;
        let v = &self.vars;
        let (nf, nk, np, ni, nb, nt) = (
            inst.firms.len(),
            inst.contracts.len(),
            inst.periods,
            inst.products.len(),
            inst.tiers.len(),
            inst.num_tanks(),
        );
        let tanks_of_product: Vec<Vec<usize>> = (0..ni)
            .map(|i| (0..nt).filter(|&t| inst.tank(t).product == i).collect())
            .collect();

        for t in 0..nt {
            let c = inst.tank_customer(t);
            let tank = inst.tank(t);
            let tn = format!("{}_{}", inst.customers[c].id, tank.id);
            for f in 0..nf {
                let fid = &inst.firms[f].id;
                for p in 0..np {
                    let mut terms = vec![(v.supply[t][f][p], 1.0), (v.spot[t][f][p], 1.0)];
                    for from in 0..nf {
                        if from != f {
                            terms.push((v.swap[t][from][f][p], 1.0));
                        }
                    }
                    for k in 0..nk {
                        terms.push((v.serve[c][f][k][p], -tank.demand[p]));
                    }
                    self.model.add_constraint(
                        format!("demand_{tn}_{fid}_{}", p + 1),
                        "demand",
                        terms,
                        RowSense::Eq,
                        0.0,
                    );

                    // Spot only for currently served customers.
                    if nb > 0 {
                        let mut terms: Vec<(VarId, f64)> = (0..nb)
                            .map(|b| (v.spot_tier[t][f][b][p], 1.0))
                            .collect();
                        for k in 0..nk {
                            terms.push((v.serve[c][f][k][p], -tank.demand[p]));
                        }
                        self.model.add_constraint(
                            format!("spotlogic_{tn}_{fid}_{}", p + 1),
                            "spot_logic",
                            terms,
                            RowSense::Le,
                            0.0,
                        );
                    }

                    // Total spot equals the tier disaggregation.
                    let mut terms = vec![(v.spot[t][f][p], 1.0)];
                    for b in 0..nb {
                        terms.push((v.spot_tier[t][f][b][p], -1.0));
                    }
                    self.model.add_constraint(
                        format!("spotagg_{tn}_{fid}_{}", p + 1),
                        "spot_aggregate",
                        terms,
                        RowSense::Eq,
                        0.0,
                    );

                    // Swaps only for currently served customers.
                    for from in 0..nf {
                        if from == f {
                            continue;
                        }
                        let mut terms = vec![(v.swap[t][from][f][p], 1.0)];
                        for k in 0..nk {
                            terms.push((v.serve[c][f][k][p], -tank.demand[p]));
                        }
                        self.model.add_constraint(
                            format!(
                                "swaplogic_{tn}_{}_{fid}_{}",
                                inst.firms[from].id,
                                p + 1
                            ),
                            "swap_logic",
                            terms,
                            RowSense::Le,
                            0.0,
                        );
                    }
                }
            }
        }

        for i in 0..ni {
            let pid = &inst.products[i];
            for f in 0..nf {
                let fid = &inst.firms[f].id;
                for p in 0..np {
                    // Production plus outgoing swaps within capacity.
                    let mut terms = vec![
                        (v.production[i][f][p], 1.0),
                        (v.capacity[i][f][p], -1.0),
                    ];
                    for &t in &tanks_of_product[i] {
                        for to in 0..nf {
                            if to != f {
                                terms.push((v.swap[t][f][to][p], 1.0));
                            }
                        }
                    }
                    self.model.add_constraint(
                        format!("capuse_{pid}_{fid}_{}", p + 1),
                        "capacity",
                        terms,
                        RowSense::Le,
                        0.0,
                    );

                    // Inventory balance; the initial level enters period 1.
                    let mut terms = vec![
                        (v.inventory[i][f][p], 1.0),
                        (v.production[i][f][p], -1.0),
                    ];
                    if p > 0 {
                        terms.push((v.inventory[i][f][p - 1], -1.0));
                    }
                    for &t in &tanks_of_product[i] {
                        terms.push((v.supply[t][f][p], 1.0));
                        for to in 0..nf {
                            if to != f {
                                terms.push((v.swap[t][f][to][p], 1.0));
                            }
                        }
                    }
                    let rhs = if p == 0 {
                        inst.firms[f].initial_inventory[i]
                    } else {
                        0.0
                    };
                    self.model.add_constraint(
                        format!("invbal_{pid}_{fid}_{}", p + 1),
                        "inventory_balance",
                        terms,
                        RowSense::Eq,
                        rhs,
                    );

                    // Inventory banded by the plant flow rate.
                    let lf = inst.firms[f].inventory_lower_factor;
                    if lf > 0.0 {
                        self.model.add_constraint(
                            format!("invlo_{pid}_{fid}_{}", p + 1),
                            "inventory_lower",
                            vec![(v.flow[i][f][p], lf), (v.inventory[i][f][p], -1.0)],
                            RowSense::Le,
                            0.0,
                        );
                    }
                    let uf = inst.firms[f].inventory_upper_factor;
                    if uf.is_finite() {
                        self.model.add_constraint(
                            format!("invhi_{pid}_{fid}_{}", p + 1),
                            "inventory_upper",
                            vec![(v.inventory[i][f][p], 1.0), (v.flow[i][f][p], -uf)],
                            RowSense::Le,
                            0.0,
                        );
                    }

                    // Tier bounds and the at-most-one-tier rule.
                    for b in 0..nb {
                        let tier = &inst.tiers[b];
                        let mut lo = vec![(v.tier_active[i][f][b][p], tier.lower)];
                        let mut hi = vec![(v.tier_active[i][f][b][p], -tier.upper)];
                        for &t in &tanks_of_product[i] {
                            lo.push((v.spot_tier[t][f][b][p], -1.0));
                            hi.push((v.spot_tier[t][f][b][p], 1.0));
                        }
                        self.model.add_constraint(
                            format!("tierlo_{pid}_{fid}_{}_{}", tier.id, p + 1),
                            "tier_lower",
                            lo,
                            RowSense::Le,
                            0.0,
                        );
                        self.model.add_constraint(
                            format!("tierhi_{pid}_{fid}_{}_{}", tier.id, p + 1),
                            "tier_upper",
                            hi,
                            RowSense::Le,
                            0.0,
                        );
                    }
                    if nb > 0 {
                        let terms: Vec<(VarId, f64)> = (0..nb)
                            .map(|b| (v.tier_active[i][f][b][p], 1.0))
                            .collect();
                        self.model.add_constraint(
                            format!("tierone_{pid}_{fid}_{}", p + 1),
                            "tier_choice",
                            terms,
                            RowSense::Le,
                            1.0,
                        );
                    }

                    // Outgoing swaps within the agreed capacity share.
                    let xi = inst.swap.capacity_fraction;
                    let mut terms = vec![(v.capacity[i][f][p], -xi)];
                    for &t in &tanks_of_product[i] {
                        for to in 0..nf {
                            if to != f {
                                terms.push((v.swap[t][f][to][p], 1.0));
                            }
                        }
                    }
                    self.model.add_constraint(
                        format!("swapcap_{pid}_{fid}_{}", p + 1),
                        "swap_cap",
                        terms,
                        RowSense::Le,
                        0.0,
                    );
                }
            }
        }

        // Swapped volumes balance per product and interval for every pair.
        for (iv, &(a, b_end)) in inst.swap.intervals.iter().enumerate() {
            for i in 0..ni {
                let pid = &inst.products[i];
                for f in 0..nf {
                    for g in (f + 1)..nf {
                        let mut terms = Vec::new();
                        for p in (a - 1)..b_end {
                            for &t in &tanks_of_product[i] {
                                terms.push((v.swap[t][f][g][p], 1.0));
                                terms.push((v.swap[t][g][f][p], -1.0));
                            }
                        }
                        if terms.is_empty() {
                            continue;
                        }
                        self.model.add_constraint(
                            format!(
                                "swapbal_{pid}_{}_{}_iv{}",
                                inst.firms[f].id,
                                inst.firms[g].id,
                                iv + 1
                            ),
                            "swap_balance",
                            terms,
                            RowSense::Eq,
                            0.0,
                        );
                    }
                }
            }
        }
    }

    /// Linear plant surrogate: air balance, power balance, capacity
    /// definition and the production cap.
    pub fn build_plant_block(&mut self) {
        let inst = self.inst;
        let v = &self.vars;
        let (nf, np, ni) = (inst.firms.len(), inst.periods, inst.products.len());
        let ot = inst.hours_per_period;

        for f in 0..nf {
            let firm = &inst.firms[f];
            for p in 0..np {
                let mut terms = vec![(v.air_flow[f][p], 1.0)];
                for i in 0..ni {
                    terms.push((v.flow[i][f][p], -firm.air_ratio[i]));
                }
                self.model.add_constraint(
                    format!("airbal_{}_{}", firm.id, p + 1),
                    "air_balance",
                    terms,
                    RowSense::Eq,
                    0.0,
                );

                let mut terms = vec![
                    (v.power[f][p], 1.0),
                    (v.air_flow[f][p], -firm.air_power_per_flow),
                ];
                for i in 0..ni {
                    terms.push((v.flow[i][f][p], -firm.power_per_flow[i]));
                }
                self.model.add_constraint(
                    format!("powbal_{}_{}", firm.id, p + 1),
                    "power_balance",
                    terms,
                    RowSense::Eq,
                    0.0,
                );

                for i in 0..ni {
                    self.model.add_constraint(
                        format!("capdef_{}_{}_{}", inst.products[i], firm.id, p + 1),
                        "capacity_def",
                        vec![(v.capacity[i][f][p], 1.0), (v.flow[i][f][p], -ot)],
                        RowSense::Eq,
                        0.0,
                    );
                    self.model.add_constraint(
                        format!("prodcap_{}_{}_{}", inst.products[i], firm.id, p + 1),
                        "production_cap",
                        vec![(v.production[i][f][p], 1.0), (v.capacity[i][f][p], -1.0)],
                        RowSense::Le,
                        0.0,
                    );
                }
            }
        }
    }

    /// Service, acquisition, forfeit, energy and inventory cost rows.
    pub fn build_cost_blocks(&mut self) {
        let inst = self.inst;
        let v = &self.vars;
        let (nc, nf, nk, np, nb, nt) = (
            inst.customers.len(),
            inst.firms.len(),
            inst.contracts.len(),
            inst.periods,
            inst.tiers.len(),
            inst.num_tanks(),
        );

        for f in 0..nf {
            let firm = &inst.firms[f];
            for p in 0..np {
                // Service cost: in-house, incoming swaps, spot tiers.
                let mut terms = vec![(v.service_cost[f][p], 1.0)];
                for t in 0..nt {
                    terms.push((v.supply[t][f][p], -self.usc.values[t][f][p]));
                    for from in 0..nf {
                        if from != f {
                            terms.push((
                                v.swap[t][from][f][p],
                                -self.premiums.swap[t][from][f][p],
                            ));
                        }
                    }
                    for b in 0..nb {
                        terms.push((
                            v.spot_tier[t][f][b][p],
                            -self.premiums.spot[t][f][b][p],
                        ));
                    }
                }
                self.model.add_constraint(
                    format!("servc_{}_{}", firm.id, p + 1),
                    "service_cost",
                    terms,
                    RowSense::Eq,
                    0.0,
                );

                // Acquisition cost: first-period signings of non-incumbent
                // customers, then acquisition transitions.
                let mut terms = vec![(v.acquisition_cost[f][p], 1.0)];
                if p == 0 {
                    for c in 0..nc {
                        let cust = &inst.customers[c];
                        if cust.incumbent_pair().map(|(fi, _)| fi) == Some(f) {
                            continue;
                        }
                        let coeff = acquisition_coeff(inst, c, f, p);
                        for k in 0..nk {
                            terms.push((v.sign[c][f][k][p], -coeff));
                        }
                    }
                } else {
                    for c in 0..nc {
                        let coeff = acquisition_coeff(inst, c, f, p);
                        terms.push((v.acquire[c][f][p], -coeff));
                    }
                }
                self.model.add_constraint(
                    format!("acqc_{}_{}", firm.id, p + 1),
                    "acquisition_cost",
                    terms,
                    RowSense::Eq,
                    0.0,
                );

                // Forfeit cost: incumbents not re-signed in period 1, then
                // forfeit transitions.
                let mut terms = vec![(v.forfeit_cost[f][p], 1.0)];
                let mut rhs = 0.0;
                if p == 0 {
                    for c in 0..nc {
                        let cust = &inst.customers[c];
                        if cust.incumbent_pair().map(|(fi, _)| fi) != Some(f) {
                            continue;
                        }
                        let coeff = forfeit_coeff(inst, c, f, p);
                        rhs += coeff;
                        for k in 0..nk {
                            terms.push((v.sign[c][f][k][p], coeff));
                        }
                    }
                } else {
                    for c in 0..nc {
                        let coeff = forfeit_coeff(inst, c, f, p);
                        terms.push((v.forfeit[c][f][p], -coeff));
                    }
                }
                self.model.add_constraint(
                    format!("forfc_{}_{}", firm.id, p + 1),
                    "forfeit_cost",
                    terms,
                    RowSense::Eq,
                    rhs,
                );

                // Consumption decomposition around the contracted band.
                self.model.add_constraint(
                    format!("esplit_{}_{}", firm.id, p + 1),
                    "energy_split",
                    vec![
                        (v.power[f][p], 1.0),
                        (v.band[f][p], -1.0),
                        (v.over[f][p], -1.0),
                        (v.under[f][p], 1.0),
                    ],
                    RowSense::Eq,
                    0.0,
                );
                let rate = firm.energy.price[p] * inst.hours_per_period;
                let penalty = firm.energy.penalty_factor * rate;
                self.model.add_constraint(
                    format!("ecost_{}_{}", firm.id, p + 1),
                    "energy_cost",
                    vec![
                        (v.energy_cost[f][p], 1.0),
                        (v.band[f][p], -rate),
                        (v.over[f][p], -penalty),
                        (v.under[f][p], -penalty),
                    ],
                    RowSense::Eq,
                    0.0,
                );

                let mut terms = vec![(v.inventory_cost[f][p], 1.0)];
                for i in 0..inst.products.len() {
                    terms.push((v.inventory[i][f][p], -firm.inventory_cost[i]));
                }
                self.model.add_constraint(
                    format!("invc_{}_{}", firm.id, p + 1),
                    "inventory_cost",
                    terms,
                    RowSense::Eq,
                    0.0,
                );
            }
        }
    }

    /// Per-firm profit rows; with a status-quo profile also the
    /// individual-rationality rows.
    pub fn build_profit_and_rationality(&mut self, status_quo: Option<&[f64]>) {
        let inst = self.inst;
        let v = &self.vars;
        let (nf, nk, np, nt) = (
            inst.firms.len(),
            inst.contracts.len(),
            inst.periods,
            inst.num_tanks(),
        );

        for f in 0..nf {
            let firm = &inst.firms[f];
            let mut terms = vec![(v.profit[f], 1.0)];
            for t in 0..nt {
                let c = inst.tank_customer(t);
                let demand = &inst.tank(t).demand;
                for k in 0..nk {
                    for p in 0..np {
                        let price = self.prices.values[t][f][k][p];
                        let revenue = price * demand[p];
                        if revenue != 0.0 {
                            terms.push((v.serve[c][f][k][p], -revenue));
                        }
                    }
                }
            }
            for p in 0..np {
                terms.push((v.service_cost[f][p], 1.0));
                terms.push((v.forfeit_cost[f][p], 1.0));
                terms.push((v.acquisition_cost[f][p], 1.0));
                terms.push((v.energy_cost[f][p], 1.0));
                terms.push((v.inventory_cost[f][p], 1.0));
            }
            self.model.add_constraint(
                format!("profit_{}", firm.id),
                "profit",
                terms,
                RowSense::Eq,
                0.0,
            );
        }
        if let Some(sq) = status_quo {
            for f in 0..nf {
                self.model.add_constraint(
                    format!("rational_{}", inst.firms[f].id),
                    "rationality",
                    vec![(v.profit[f], 1.0)],
                    RowSense::Ge,
                    sq[f],
                );
            }
        }
    }

    /// Centralized objective: maximize the summed profit of all firms.
    pub fn build_social_welfare_objective(&mut self) {
        let terms: Vec<(VarId, f64)> = self.vars.profit.iter().map(|&v| (v, 1.0)).collect();
        self.model.set_objective(terms, 0.0);
    }

    /// Piecewise-linear Nash objective: one SOS2 weight set per firm over
    /// its profit grid, convexity and interpolation rows, and objective
    /// coefficients alpha_f * ln(grid - status quo).
    pub fn build_nash_sos2(
        &mut self,
        status_quo: &[f64],
        grids: &[Vec<f64>],
    ) -> Result<(), BuildError> {
        let inst = self.inst;
        let nf = inst.firms.len();
        assert_eq!(status_quo.len(), nf);
        assert_eq!(grids.len(), nf);

        let mut objective = Vec::new();
        let mut weight = Vec::with_capacity(nf);
        for f in 0..nf {
            let firm_id = inst.firms[f].id.clone();
            let alpha = inst.game.negotiation_power[f];
            let lams: Vec<VarId> = (0..grids[f].len())
                .map(|n| {
                    self.model
                        .add_continuous(format!("lam_{firm_id}_{}", n + 1), 0.0, 1.0)
                })
                .collect();
            for (n, &point) in grids[f].iter().enumerate() {
                let surplus = point - status_quo[f];
                if surplus <= 0.0 {
                    return Err(BuildError::LogDomain {
                        firm: firm_id,
                        point,
                        sq: status_quo[f],
                    });
                }
                objective.push((lams[n], alpha * surplus.ln()));
            }
            self.model.add_constraint(
                format!("lamsum_{firm_id}"),
                "sos2_convexity",
                lams.iter().map(|&l| (l, 1.0)).collect(),
                RowSense::Eq,
                1.0,
            );
            let mut terms = vec![(self.vars.profit[f], 1.0)];
            for (n, &point) in grids[f].iter().enumerate() {
                terms.push((lams[n], -point));
            }
            self.model.add_constraint(
                format!("laminterp_{firm_id}"),
                "profit_interp",
                terms,
                RowSense::Eq,
                0.0,
            );
            self.model.add_sos2(format!("sos2_{firm_id}"), lams.clone());
            weight.push(lams);
        }
        self.model.set_objective(objective, 0.0);
        self.vars.weight = weight;
        self.grids = Some(grids.to_vec());
        Ok(())
    }

    pub fn finish(self) -> BuiltModel {
        BuiltModel {
            model: self.model,
            vars: self.vars,
            usc: self.usc,
            prices: self.prices,
            premiums: self.premiums,
            grids: self.grids,
        }
    }
}

fn fix_zero(model: &mut Model, var: VarId) {
    model.update_bounds(var, 0.0, 0.0);
}

/// Acquisition cost coefficient: fixed cost plus demand-proportional tank
/// costs, with demand taken at the acquisition period.
pub fn acquisition_coeff(inst: &Instance, c: usize, f: usize, p: usize) -> f64 {
    let cust = &inst.customers[c];
    cust.acquisition_fixed[f]
        + cust
            .tanks
            .iter()
            .map(|t| t.acquisition_variable[f] * t.demand[p])
            .sum::<f64>()
}

/// Forfeit cost coefficient, with demand taken at the forfeit period.
pub fn forfeit_coeff(inst: &Instance, c: usize, f: usize, p: usize) -> f64 {
    let cust = &inst.customers[c];
    cust.forfeit_fixed[f]
        + cust
            .tanks
            .iter()
            .map(|t| t.forfeit_variable[f] * t.demand[p])
            .sum::<f64>()
}

/// Uniform profit grid from just above the status-quo profit to the upper
/// bound.
pub fn make_profit_grid(
    pi_sq: f64,
    upper: f64,
    n: usize,
    margin: f64,
) -> Result<Vec<f64>, BuildError> {
    assert!(n >= 2, "a grid needs at least two points");
    assert!(margin > 0.0);
    let lo = pi_sq + margin;
    if upper <= lo {
        return Err(BuildError::EmptyBargainingRange {
            firm: String::new(),
            sq: pi_sq,
            upper,
            margin,
        });
    }
    let step = (upper - lo) / (n - 1) as f64;
    Ok((0..n).map(|i| lo + step * i as f64).collect())
}

/// Default margin keeping logarithm arguments away from the singularity.
pub fn default_grid_margin(pi_sq: f64) -> f64 {
    (1e-6 * pi_sq.abs()).max(1.0)
}

/// Build the full model with the social-welfare objective.
pub fn build_social_welfare_model(
    inst: &Instance,
    pin_to_incumbent: bool,
) -> Result<BuiltModel, BuildError> {
    let mut b = ModelBuilder::new(inst, pin_to_incumbent)?;
    b.build_assignment_block();
    b.build_flow_block();
    b.build_plant_block();
    b.build_cost_blocks();
    b.build_profit_and_rationality(None);
    b.build_social_welfare_objective();
    Ok(b.finish())
}

/// Build the full model with rationality rows and the SOS2 Nash objective.
pub fn build_nash_model(
    inst: &Instance,
    status_quo: &[f64],
    grids: &[Vec<f64>],
) -> Result<BuiltModel, BuildError> {
    let mut b = ModelBuilder::new(inst, false)?;
    b.build_assignment_block();
    b.build_flow_block();
    b.build_plant_block();
    b.build_cost_blocks();
    b.build_profit_and_rationality(Some(status_quo));
    b.build_nash_sos2(status_quo, grids)?;
    Ok(b.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_synthetic, Dims};
    use crate::testkit::{single_firm_profit_50, toy_duopoly};
    use oligofair_solver::model::RowSense;
    use oligofair_solver::simplex::{solve_lp_with_bounds, LpStatus};
    use oligofair_solver::SolverConfig;

    #[test]
    fn assignment_row_count_matches_customers_times_periods() {
        let inst = generate_synthetic(5, &Dims::new(2, 2, 4));
        let mut b = ModelBuilder::new(&inst, false).unwrap();
        b.build_assignment_block();
        let census = b.model().tag_census();
        assert_eq!(census["assignment"], 2 * 4);
        assert_eq!(census["signature"], 2 * 4);
    }

    #[test]
    fn sos2_convexity_row_count_matches_firms() {
        let inst = toy_duopoly();
        let sq = vec![0.0, 0.0];
        let grids = vec![vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]];
        let built = build_nash_model(&inst, &sq, &grids).unwrap();
        let census = built.model.tag_census();
        assert_eq!(census["sos2_convexity"], 2);
        assert_eq!(census["profit_interp"], 2);
        assert_eq!(census["rationality"], 2);
        assert_eq!(built.model.sos2_sets().len(), 2);
    }

    #[test]
    fn every_row_is_tagged() {
        let inst = toy_duopoly();
        let built = build_social_welfare_model(&inst, false).unwrap();
        let census = built.model.tag_census();
        let tagged: usize = census.values().sum();
        assert_eq!(tagged, built.model.num_cons());
        assert!(built.model.validate().is_ok());
    }

    #[test]
    fn coverage_row_windows_signings_over_contract_duration() {
        // A 3-period contract active at p=4 must window signings 2..4.
        let mut dims = Dims::new(1, 1, 4);
        dims.contracts = 1;
        dims.durations = Some(vec![3]);
        let inst = generate_synthetic(11, &dims);
        let mut b = ModelBuilder::new(&inst, false).unwrap();
        b.build_assignment_block();
        let sign_vars: Vec<_> = (1..=3).map(|q| b.vars.sign[0][0][0][q].0).collect();
        let model = b.model();
        let row = model
            .constraints()
            .iter()
            .find(|c| c.name.starts_with("cover_") && c.name.ends_with("_4"))
            .expect("coverage row at p=4");
        let mut sign_terms: Vec<usize> = row
            .terms
            .iter()
            .filter(|&&(_, coef)| coef > 0.0)
            .map(|&(v, _)| v.0)
            .collect();
        sign_terms.sort_unstable();
        assert_eq!(sign_terms, sign_vars, "window must be signings 2..4");
        assert_eq!(row.sense, RowSense::Eq);
    }

    #[test]
    fn full_horizon_contract_forces_single_signing() {
        // One customer, one firm, one contract of duration = horizon:
        // enumerate all 0/1 patterns of the block and keep the feasible
        // ones.
        let mut dims = Dims::new(1, 1, 3);
        dims.contracts = 1;
        dims.durations = Some(vec![3]);
        let inst = generate_synthetic(2, &dims);
        let mut b = ModelBuilder::new(&inst, false).unwrap();
        b.build_assignment_block();
        let serve: Vec<usize> = (0..3).map(|p| b.vars.serve[0][0][0][p].0).collect();
        let sign: Vec<usize> = (0..3).map(|p| b.vars.sign[0][0][0][p].0).collect();
        let model = b.model();

        let mut feasible = Vec::new();
        for mask in 0u32..(1 << 6) {
            let mut x = vec![0.0; model.num_vars()];
            for (bit, &v) in serve.iter().chain(sign.iter()).enumerate() {
                x[v] = ((mask >> bit) & 1) as f64;
            }
            let ok = model
                .constraints()
                .iter()
                .filter(|c| {
                    matches!(
                        c.tag.as_str(),
                        "assignment" | "signature" | "startup" | "coverage"
                    )
                })
                .all(|c| {
                    let act = model.eval_row(c, &x);
                    match c.sense {
                        RowSense::Le => act <= c.rhs + 1e-9,
                        RowSense::Ge => act >= c.rhs - 1e-9,
                        RowSense::Eq => (act - c.rhs).abs() <= 1e-9,
                    }
                });
            if ok {
                feasible.push(mask);
            }
        }
        // serve = (1,1,1), sign = (1,0,0) is the only consistent pattern.
        assert_eq!(feasible, vec![0b001_111]);
    }

    #[test]
    fn duration_beyond_horizon_rejected() {
        let mut dims = Dims::new(1, 1, 2);
        dims.contracts = 1;
        dims.durations = Some(vec![5]);
        let inst = generate_synthetic(3, &dims);
        match ModelBuilder::new(&inst, false) {
            Err(BuildError::DurationExceedsHorizon { duration, .. }) => assert_eq!(duration, 5),
            other => panic!("expected duration error, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn plant_surrogate_power_evaluates_linearly() {
        // power-per-flow 0.5, air coefficient 0.1, air ratio 2, V = 10:
        // PW = 0.5*10 + 0.1*20 = 7.
        let mut inst = single_firm_profit_50();
        inst.firms[0].power_per_flow = vec![0.5];
        inst.firms[0].air_power_per_flow = 0.1;
        inst.firms[0].air_ratio = vec![2.0];
        let mut b = ModelBuilder::new(&inst, false).unwrap();
        b.build_plant_block();
        let flow = b.vars.flow[0][0][0];
        let power = b.vars.power[0][0];
        let built = b.finish();
        let mut bounds: Vec<(f64, f64)> =
            built.model.vars().iter().map(|v| (v.lb, v.ub)).collect();
        bounds[flow.0] = (10.0, 10.0);
        let sol = solve_lp_with_bounds(&built.model, &SolverConfig::default(), &bounds).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.values[power.0] - 7.0).abs() < 1e-9);
    }

    #[test]
    fn zero_flow_means_zero_power() {
        let inst = single_firm_profit_50();
        let mut b = ModelBuilder::new(&inst, false).unwrap();
        b.build_plant_block();
        let flow = b.vars.flow[0][0][0];
        let power = b.vars.power[0][0];
        let built = b.finish();
        let mut bounds: Vec<(f64, f64)> =
            built.model.vars().iter().map(|v| (v.lb, v.ub)).collect();
        bounds[flow.0] = (0.0, 0.0);
        let sol = solve_lp_with_bounds(&built.model, &SolverConfig::default(), &bounds).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(sol.values[power.0].abs() < 1e-9);
    }

    #[test]
    fn capacity_bounded_by_max_flow_times_hours() {
        // Max flow 100 m3/h over 2000 h caps capacity at 200000 m3.
        let mut inst = single_firm_profit_50();
        inst.hours_per_period = 2000.0;
        inst.firms[0].max_flow = vec![100.0];
        let mut b = ModelBuilder::new(&inst, false).unwrap();
        b.build_plant_block();
        let cap = b.vars.capacity[0][0][0];
        let mut model = b.finish().model;
        model.set_objective(vec![(cap, 1.0)], 0.0);
        let sol = oligofair_solver::simplex::solve_lp(&model, &SolverConfig::default()).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 200_000.0).abs() < 1e-6);
    }

    #[test]
    fn energy_cost_row_carries_penalty_factor() {
        let inst = toy_duopoly();
        let built = build_social_welfare_model(&inst, false).unwrap();
        for c in built.model.constraints() {
            if c.tag == "energy_cost" {
                let band_coef = c
                    .terms
                    .iter()
                    .find(|&&(v, _)| built.vars.band.iter().flatten().any(|&b| b == v))
                    .map(|&(_, coef)| coef)
                    .unwrap();
                let over_coef = c
                    .terms
                    .iter()
                    .find(|&&(v, _)| built.vars.over.iter().flatten().any(|&o| o == v))
                    .map(|&(_, coef)| coef)
                    .unwrap();
                // Exact 1.2 multiplier on deviations versus the band rate.
                assert_eq!(over_coef, 1.2 * band_coef);
            }
        }
    }

    #[test]
    fn profit_grid_spacing() {
        assert_eq!(make_profit_grid(0.0, 10.0, 2, 1.0).unwrap(), vec![1.0, 10.0]);
        let g = make_profit_grid(0.0, 10.0, 10, 1.0).unwrap();
        assert_eq!(g.len(), 10);
        for w in g.windows(2) {
            assert!((w[1] - w[0] - 1.0).abs() < 1e-12, "step must be exactly 1");
        }
        assert!(matches!(
            make_profit_grid(5.0, 5.0, 4, 1.0),
            Err(BuildError::EmptyBargainingRange { .. })
        ));
    }

    #[test]
    fn nash_objective_coefficient_is_log_surplus() {
        // Grid point sq + e gives a coefficient of exactly alpha * 1.
        let mut inst = single_firm_profit_50();
        inst.game.negotiation_power = vec![1.0];
        let sq = vec![5.0];
        let grids = vec![vec![5.0 + std::f64::consts::E, 20.0]];
        let built = build_nash_model(&inst, &sq, &grids).unwrap();
        let lam0 = built.vars.weight[0][0];
        let coef = built
            .model
            .objective
            .terms
            .iter()
            .find(|&&(v, _)| v == lam0)
            .map(|&(_, c)| c)
            .unwrap();
        assert!((coef - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nash_grid_at_status_quo_rejected() {
        let inst = single_firm_profit_50();
        let sq = vec![5.0];
        let grids = vec![vec![5.0, 10.0]];
        assert!(matches!(
            build_nash_model(&inst, &sq, &grids),
            Err(BuildError::LogDomain { .. })
        ));
    }

    #[test]
    fn social_welfare_objective_is_unit_profit_sum() {
        let inst = toy_duopoly();
        let built = build_social_welfare_model(&inst, false).unwrap();
        assert_eq!(built.model.objective.terms.len(), 2);
        for (f, &(v, coef)) in built.model.objective.terms.iter().enumerate() {
            assert_eq!(v, built.vars.profit[f]);
            assert_eq!(coef, 1.0);
        }
    }
}
