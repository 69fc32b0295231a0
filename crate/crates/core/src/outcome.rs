//! Decoded game outcomes: solver values mapped back onto the market
//! structure, serializable as a single JSON document consumed by the
//! report generators.

use serde::{Deserialize, Serialize};

use oligofair_solver::branch::MipSolution;

use crate::builder::BuiltModel;
use crate::instance::Instance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameMode {
    StatusQuo,
    SocialWelfare,
    NashBargaining,
}

impl std::fmt::Display for GameMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GameMode::StatusQuo => write!(f, "status quo"),
            GameMode::SocialWelfare => write!(f, "social welfare"),
            GameMode::NashBargaining => write!(f, "nash bargaining"),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Diagnostics {
    pub status: String,
    pub best_bound: f64,
    pub gap: f64,
    pub nodes: u64,
}

/// Evaluation of the exact bargaining objective at the decoded profits.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct NashEval {
    /// Weighted product of profit surpluses.
    pub product: f64,
    /// Its logarithm.
    pub log: f64,
    /// The piecewise-linear objective the solver actually maximized.
    pub approx_log: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GameOutcome {
    pub mode: GameMode,
    pub objective: f64,
    pub profits: Vec<f64>,
    pub nash: Option<NashEval>,

    pub firms: Vec<String>,
    pub customers: Vec<String>,
    pub products: Vec<String>,
    pub contract_ids: Vec<String>,
    pub contract_durations: Vec<usize>,
    pub periods: usize,
    /// Tank labels as customer/tank, aligned with the global tank order.
    pub tanks: Vec<String>,
    pub tank_customer: Vec<usize>,
    pub tank_product: Vec<usize>,
    pub tank_demand: Vec<Vec<f64>>,

    /// W values indexed [customer][firm][contract][period].
    pub serve: Vec<Vec<Vec<Vec<f64>>>>,
    /// WS values, same indexing.
    pub sign: Vec<Vec<Vec<Vec<f64>>>>,
    /// WN values indexed [customer][firm][period].
    pub acquire: Vec<Vec<Vec<f64>>>,
    /// WD values, same indexing.
    pub forfeit: Vec<Vec<Vec<f64>>>,
    /// Y values indexed [product][firm][tier][period].
    pub tier_active: Vec<Vec<Vec<Vec<f64>>>>,
    /// In-house supply indexed [tank][firm][period].
    pub supply: Vec<Vec<Vec<f64>>>,
    /// Swaps indexed [tank][producing firm][serving firm][period].
    pub swap: Vec<Vec<Vec<Vec<f64>>>>,
    pub spot: Vec<Vec<Vec<f64>>>,
    pub spot_tier: Vec<Vec<Vec<Vec<f64>>>>,
    /// Production indexed [product][firm][period].
    pub production: Vec<Vec<Vec<f64>>>,
    pub inventory: Vec<Vec<Vec<f64>>>,
    pub flow: Vec<Vec<Vec<f64>>>,
    pub air_flow: Vec<Vec<f64>>,
    pub capacity: Vec<Vec<Vec<f64>>>,
    pub power: Vec<Vec<f64>>,
    pub band: Vec<Vec<f64>>,
    pub over: Vec<Vec<f64>>,
    pub under: Vec<Vec<f64>>,
    pub service_cost: Vec<Vec<f64>>,
    pub acquisition_cost: Vec<Vec<f64>>,
    pub forfeit_cost: Vec<Vec<f64>>,
    pub energy_cost: Vec<Vec<f64>>,
    pub inventory_cost: Vec<Vec<f64>>,
    /// SOS2 weights per firm (Nash mode only).
    pub weight: Vec<Vec<f64>>,
    pub grids: Option<Vec<Vec<f64>>>,
    pub diagnostics: Diagnostics,
}

impl GameOutcome {
    pub fn total_profit(&self) -> f64 {
        self.profits.iter().sum()
    }

    /// Decoded (firm, contract) serving customer c in period p.
    pub fn assignment(&self, c: usize, p: usize) -> Option<(usize, usize)> {
        let mut best: Option<((usize, usize), f64)> = None;
        for (f, per_firm) in self.serve[c].iter().enumerate() {
            for (k, series) in per_firm.iter().enumerate() {
                let v = series[p];
                if best.map_or(true, |(_, bv)| v > bv) {
                    best = Some(((f, k), v));
                }
            }
        }
        best.filter(|&(_, v)| v > 0.5).map(|(fk, _)| fk)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("outcome serializes")
    }

    pub fn from_json(text: &str) -> Result<GameOutcome, serde_json::Error> {
        serde_json::from_str(text)
    }
}

fn grab2(values: &[f64], ids: &[Vec<oligofair_solver::VarId>]) -> Vec<Vec<f64>> {
    ids.iter()
        .map(|row| row.iter().map(|v| values[v.0]).collect())
        .collect()
}

fn grab3(values: &[f64], ids: &[Vec<Vec<oligofair_solver::VarId>>]) -> Vec<Vec<Vec<f64>>> {
    ids.iter().map(|x| grab2(values, x)).collect()
}

fn grab4(
    values: &[f64],
    ids: &[Vec<Vec<Vec<oligofair_solver::VarId>>>],
) -> Vec<Vec<Vec<Vec<f64>>>> {
    ids.iter().map(|x| grab3(values, x)).collect()
}

/// Bind a MIP incumbent to the market structure.
pub fn decode_outcome(
    inst: &Instance,
    built: &BuiltModel,
    sol: &MipSolution,
    mode: GameMode,
) -> GameOutcome {
    let values = sol
        .values
        .as_ref()
        .expect("decode requires an incumbent solution");
    let v = &built.vars;
    GameOutcome {
        mode,
        objective: sol.objective.expect("incumbent has an objective"),
        profits: v.profit.iter().map(|&id| values[id.0]).collect(),
        nash: None,
        firms: inst.firms.iter().map(|f| f.id.clone()).collect(),
        customers: inst.customers.iter().map(|c| c.id.clone()).collect(),
        products: inst.products.clone(),
        contract_ids: inst.contracts.iter().map(|k| k.id.clone()).collect(),
        contract_durations: inst.contracts.iter().map(|k| k.duration).collect(),
        periods: inst.periods,
        tanks: (0..inst.num_tanks())
            .map(|t| {
                let (c, local) = inst.tank_index[t];
                format!(
                    "{}/{}",
                    inst.customers[c].id, inst.customers[c].tanks[local].id
                )
            })
            .collect(),
        tank_customer: (0..inst.num_tanks()).map(|t| inst.tank_customer(t)).collect(),
        tank_product: (0..inst.num_tanks()).map(|t| inst.tank(t).product).collect(),
        tank_demand: (0..inst.num_tanks())
            .map(|t| inst.tank(t).demand.clone())
            .collect(),
        serve: grab4(values, &v.serve),
        sign: grab4(values, &v.sign),
        acquire: grab3(values, &v.acquire),
        forfeit: grab3(values, &v.forfeit),
        tier_active: grab4(values, &v.tier_active),
        supply: grab3(values, &v.supply),
        swap: grab4(values, &v.swap),
        spot: grab3(values, &v.spot),
        spot_tier: grab4(values, &v.spot_tier),
        production: grab3(values, &v.production),
        inventory: grab3(values, &v.inventory),
        flow: grab3(values, &v.flow),
        air_flow: grab2(values, &v.air_flow),
        capacity: grab3(values, &v.capacity),
        power: grab2(values, &v.power),
        band: grab2(values, &v.band),
        over: grab2(values, &v.over),
        under: grab2(values, &v.under),
        service_cost: grab2(values, &v.service_cost),
        acquisition_cost: grab2(values, &v.acquisition_cost),
        forfeit_cost: grab2(values, &v.forfeit_cost),
        energy_cost: grab2(values, &v.energy_cost),
        inventory_cost: grab2(values, &v.inventory_cost),
        weight: grab2(values, &v.weight),
        grids: built.grids.clone(),
        diagnostics: Diagnostics {
            status: format!("{:?}", sol.status),
            best_bound: sol.best_bound,
            gap: sol.gap,
            nodes: sol.nodes,
        },
    }
}
