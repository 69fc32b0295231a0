//! Hand-built instances shared by unit, integration and acceptance tests.

use crate::instance::{
    Contract, Customer, EnergyContract, Firm, GameParams, Instance, SwapPolicy, Tank, Tier,
};

fn firm(id: &str, products: usize, periods: usize) -> Firm {
    Firm {
        id: id.to_string(),
        max_flow: vec![10.0; products],
        power_per_flow: vec![0.01; products],
        air_power_per_flow: 0.005,
        air_ratio: vec![2.0; products],
        production_cost: vec![1.0; products],
        inventory_cost: vec![0.05; products],
        initial_inventory: vec![0.0; products],
        inventory_lower_factor: 0.0,
        inventory_upper_factor: 100.0,
        energy: EnergyContract {
            contracted_power: 0.1,
            tolerance: 0.1,
            price: vec![50.0; periods],
            penalty_factor: 1.2,
        },
    }
}

fn tank(
    id: &str,
    demand: Vec<f64>,
    delivery: Vec<Vec<f64>>,
    base_k1: f64,
    base_k2: f64,
) -> Tank {
    let firms = delivery.len();
    Tank {
        id: id.to_string(),
        product: 0,
        demand,
        delivery_cost: delivery.into_iter().map(Some).collect(),
        base_price: (0..firms)
            .map(|_| vec![Some(base_k1), Some(base_k2)])
            .collect(),
        acquisition_variable: vec![0.1; firms],
        forfeit_variable: vec![0.1; firms],
    }
}

/// Two firms, three customers (one incumbent each plus a free one), one
/// product, two periods, two contracts, one spot tier, swaps enabled.
pub fn toy_duopoly() -> Instance {
    let periods = 2;
    let mut contracts = vec![
        Contract {
            id: "k1".into(),
            duration: 1,
            escalation: vec![vec![vec![0.0; 2]; periods]; 2],
        },
        Contract {
            id: "k2".into(),
            duration: 2,
            escalation: vec![vec![vec![0.0; 2]; periods]; 2],
        },
    ];
    for f in 0..2 {
        for s in 0..2 {
            contracts[1].escalation[f][1][s] = 0.05;
        }
    }

    let customers = vec![
        Customer {
            id: "c1".into(),
            incumbent: vec![(0, 0)],
            terms: vec![1.0, 0.5],
            acquisition_fixed: vec![50.0, 50.0],
            forfeit_fixed: vec![40.0, 40.0],
            tanks: vec![tank(
                "t1",
                vec![100.0, 120.0],
                vec![vec![300.0, 320.0], vec![360.0, 380.0]],
                9.0,
                8.5,
            )],
        },
        Customer {
            id: "c2".into(),
            incumbent: vec![(1, 0)],
            terms: vec![1.0, 0.5],
            acquisition_fixed: vec![50.0, 50.0],
            forfeit_fixed: vec![40.0, 40.0],
            tanks: vec![tank(
                "t1",
                vec![90.0, 95.0],
                vec![vec![330.0, 340.0], vec![280.0, 290.0]],
                9.0,
                8.5,
            )],
        },
        Customer {
            id: "c3".into(),
            incumbent: vec![],
            terms: vec![1.0, 0.5],
            acquisition_fixed: vec![50.0, 50.0],
            forfeit_fixed: vec![40.0, 40.0],
            tanks: vec![tank(
                "t1",
                vec![80.0, 85.0],
                vec![vec![310.0, 310.0], vec![310.0, 310.0]],
                9.2,
                8.7,
            )],
        },
    ];

    let mut inst = Instance {
        periods,
        hours_per_period: 100.0,
        products: vec!["lox".into()],
        contracts,
        firms: vec![firm("A", 1, periods), firm("B", 1, periods)],
        customers,
        tiers: vec![Tier {
            id: "b1".into(),
            lower: 0.0,
            upper: 500.0,
            premium: 1.5,
        }],
        swap: SwapPolicy {
            capacity_fraction: 0.2,
            premium: vec![vec![1.0, 1.25], vec![1.25, 1.0]],
            intervals: vec![(1, periods)],
        },
        game: GameParams {
            negotiation_power: vec![0.5, 0.5],
            grid_size: 20,
            refine_rounds: 1,
        },
        tank_index: Vec::new(),
        term_count: 2,
    };
    inst.rebuild_tank_index();
    inst
}

/// One firm, one incumbent customer, one period, numbers chosen so the
/// status-quo profit works out to exactly 50: revenue 100, service cost
/// 30, electricity 20, everything else zero.
pub fn single_firm_profit_50() -> Instance {
    let periods = 1;
    let mut f = firm("A", 1, periods);
    // Demand 10 m3 at V = 10 m3/h over OT = 1 h -> PW = 0.2 * 10 = 2 MW.
    f.max_flow = vec![100.0];
    f.power_per_flow = vec![0.2];
    f.air_power_per_flow = 0.0;
    f.air_ratio = vec![0.0];
    f.inventory_cost = vec![0.0];
    f.energy = EnergyContract {
        contracted_power: 2.0,
        tolerance: 0.0,
        price: vec![10.0; periods],
        penalty_factor: 1.2,
    };

    let customers = vec![Customer {
        id: "c1".into(),
        incumbent: vec![(0, 0)],
        terms: vec![1.0],
        acquisition_fixed: vec![0.0],
        forfeit_fixed: vec![0.0],
        tanks: vec![Tank {
            id: "t1".into(),
            product: 0,
            demand: vec![10.0],
            delivery_cost: vec![Some(vec![30.0])],
            base_price: vec![vec![Some(10.0)]],
            acquisition_variable: vec![0.0],
            forfeit_variable: vec![0.0],
        }],
    }];

    let mut inst = Instance {
        periods,
        hours_per_period: 1.0,
        products: vec!["lox".into()],
        contracts: vec![Contract {
            id: "k1".into(),
            duration: 1,
            escalation: vec![vec![vec![0.0]; periods]],
        }],
        firms: vec![f],
        customers,
        tiers: vec![],
        swap: SwapPolicy {
            capacity_fraction: 0.0,
            premium: vec![vec![1.0]],
            intervals: vec![(1, periods)],
        },
        game: GameParams {
            negotiation_power: vec![1.0],
            grid_size: 10,
            refine_rounds: 0,
        },
        tank_index: Vec::new(),
        term_count: 1,
    };
    inst.rebuild_tank_index();
    inst
}
