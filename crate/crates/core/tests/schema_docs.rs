//! Document-level parsing tests: minimal instances, malformed documents,
//! and a full-size cardinality echo.

use oligofair_core::schema::{parse_instance, serialize_instance, ParseError};

fn minimal_doc() -> String {
    r#"{
        "horizon": { "periods": 1, "hours_per_period": 100.0 },
        "products": ["lox"],
        "contracts": [ { "id": "k1", "duration": 1 } ],
        "firms": [
            {
                "id": "A",
                "plant": { "max_flow": { "lox": 10.0 }, "power_per_flow": { "lox": 0.01 } },
                "production_cost": { "lox": 1.0 },
                "inventory": {}
            }
        ],
        "energy": { "A": { "contracted_power": 0.05, "tolerance": 0.1, "price": [50.0] } },
        "customers": [
            {
                "id": "c1",
                "incumbent": [ { "firm": "A", "contract": "k1" } ],
                "terms": [1.0],
                "tanks": [
                    {
                        "id": "t1",
                        "product": "lox",
                        "demand": [10.0],
                        "delivery_cost": { "A": [30.0] },
                        "base_price": { "A": { "k1": 9.0 } }
                    }
                ]
            }
        ],
        "game": { "negotiation_power": { "A": 1.0 } }
    }"#
    .to_string()
}

#[test]
fn minimal_document_parses_with_expected_cardinalities() {
    let inst = parse_instance(&minimal_doc()).unwrap();
    assert_eq!(inst.firms.len(), 1);
    assert_eq!(inst.customers.len(), 1);
    assert_eq!(inst.num_tanks(), 1);
    assert_eq!(inst.contracts.len(), 1);
    assert_eq!(inst.periods, 1);
    assert!(oligofair_core::validate_instance(&inst).is_empty());
    // Identity round trip.
    let again = parse_instance(&serialize_instance(&inst)).unwrap();
    assert_eq!(inst, again);
}

#[test]
fn zero_duration_contract_rejected_at_parse() {
    let doc = minimal_doc().replace("\"duration\": 1", "\"duration\": 0");
    match parse_instance(&doc) {
        Err(ParseError::BadValue { msg, .. }) => {
            assert!(msg.contains("duration must be >= 1"), "message was '{msg}'")
        }
        other => panic!("expected duration error, got {other:?}"),
    }
}

#[test]
fn unknown_firm_reference_rejected() {
    let doc = minimal_doc().replace("\"firm\": \"A\"", "\"firm\": \"Z\"");
    match parse_instance(&doc) {
        Err(ParseError::UnknownId { id, .. }) => assert_eq!(id, "Z"),
        other => panic!("expected unknown-id error, got {other:?}"),
    }
}

#[test]
fn duplicate_customer_ids_rejected() {
    // Second customer with the same id, no incumbent.
    let doc = minimal_doc().replace(
        "\"game\":",
        r#""spare": 0, "game":"#,
    );
    // Splice a duplicate customer by editing the JSON value tree instead of
    // fragile string surgery.
    let mut value: serde_json::Value = serde_json::from_str(&doc).unwrap();
    let customers = value["customers"].as_array_mut().unwrap();
    let mut dup = customers[0].clone();
    dup["incumbent"] = serde_json::json!([]);
    customers.push(dup);
    match parse_instance(&value.to_string()) {
        Err(ParseError::DuplicateId { id, .. }) => assert_eq!(id, "c1"),
        other => panic!("expected duplicate-id error, got {other:?}"),
    }
}

#[test]
fn wrong_series_length_rejected() {
    let doc = minimal_doc().replace("\"demand\": [10.0]", "\"demand\": [10.0, 11.0]");
    match parse_instance(&doc) {
        Err(ParseError::WrongLength {
            expected, found, ..
        }) => {
            assert_eq!((expected, found), (1, 2));
        }
        other => panic!("expected length error, got {other:?}"),
    }
}

#[test]
fn industrial_scale_cardinalities_echo() {
    // 2 firms, 97 customers, 315 tanks, 2 products, 60 periods.
    use oligofair_core::schema::{
        compile, ContractDoc, CustomerDoc, EnergyDoc, FirmDoc, GameDoc, HorizonDoc,
        IncumbentDoc, InstanceDoc, InventoryDoc, PlantDoc, SwapPolicyDoc, TankDoc,
    };
    use std::collections::BTreeMap;

    let periods = 60;
    let products = vec!["lox".to_string(), "lin".to_string()];
    let firm_ids = ["A", "B"];
    let per_product = |v: f64| -> BTreeMap<String, f64> {
        products.iter().map(|p| (p.clone(), v)).collect()
    };

    let firms: Vec<FirmDoc> = firm_ids
        .iter()
        .map(|id| FirmDoc {
            id: id.to_string(),
            plant: PlantDoc {
                max_flow: per_product(50.0),
                power_per_flow: per_product(0.01),
                air_power_per_flow: 0.005,
                air_ratio: per_product(2.0),
            },
            production_cost: per_product(1.0),
            inventory: InventoryDoc {
                unit_cost: per_product(0.03),
                initial: BTreeMap::new(),
                lower_factor: 0.0,
                upper_factor: Some(100.0),
            },
        })
        .collect();
    let energy: BTreeMap<String, EnergyDoc> = firm_ids
        .iter()
        .map(|id| {
            (
                id.to_string(),
                EnergyDoc {
                    contracted_power: 1.0,
                    tolerance: 0.1,
                    price: vec![50.0; periods],
                    penalty_factor: 1.2,
                },
            )
        })
        .collect();

    // Distribute 315 tanks over 97 customers: 3 each, the first 24 get 4.
    let mut total_tanks = 0;
    let customers: Vec<CustomerDoc> = (0..97)
        .map(|c| {
            let n_tanks = if c < 24 { 4 } else { 3 };
            total_tanks += n_tanks;
            CustomerDoc {
                id: format!("c{c}"),
                incumbent: if c < 81 {
                    vec![IncumbentDoc {
                        firm: firm_ids[c % 2].to_string(),
                        contract: "k1".to_string(),
                    }]
                } else {
                    vec![]
                },
                terms: vec![1.0, 0.5, 0.25],
                acquisition_fixed: BTreeMap::new(),
                forfeit_fixed: BTreeMap::new(),
                tanks: (0..n_tanks)
                    .map(|t| TankDoc {
                        id: format!("t{t}"),
                        product: products[t % 2].clone(),
                        demand: vec![20.0; periods],
                        delivery_cost: firm_ids
                            .iter()
                            .map(|f| (f.to_string(), vec![40.0; periods]))
                            .collect(),
                        base_price: firm_ids
                            .iter()
                            .map(|f| {
                                (
                                    f.to_string(),
                                    [("k1".to_string(), 9.0)].into_iter().collect(),
                                )
                            })
                            .collect(),
                        acquisition_variable: BTreeMap::new(),
                        forfeit_variable: BTreeMap::new(),
                    })
                    .collect(),
            }
        })
        .collect();
    assert_eq!(total_tanks, 315);

    let doc = InstanceDoc {
        horizon: HorizonDoc {
            periods,
            hours_per_period: 2000.0,
        },
        products: products.clone(),
        contracts: vec![ContractDoc {
            id: "k1".to_string(),
            duration: 4,
            escalation: BTreeMap::new(),
        }],
        firms,
        energy,
        customers,
        tiers: vec![],
        swap_policy: SwapPolicyDoc::default(),
        game: GameDoc {
            negotiation_power: [("A".to_string(), 0.5), ("B".to_string(), 0.5)]
                .into_iter()
                .collect(),
            grid_size: 40,
            refine_rounds: 3,
        },
    };
    let inst = compile(&doc).unwrap();
    assert_eq!(inst.firms.len(), 2);
    assert_eq!(inst.customers.len(), 97);
    assert_eq!(inst.num_tanks(), 315);
    assert_eq!(inst.products.len(), 2);
    assert_eq!(inst.periods, 60);
    let free = inst.customers.iter().filter(|c| c.is_free()).count();
    assert_eq!(free, 16);
    assert!(oligofair_core::validate_instance(&inst).is_empty());
}
