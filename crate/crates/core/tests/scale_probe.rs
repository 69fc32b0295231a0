//! Manual scale probe: times the structural-scale solves end to end.
//! Ignored by default; run with `-- --ignored --nocapture` when tuning.

use std::time::Instant;

use oligofair_core::game::{compute_status_quo, solve_social_welfare, GameConfig};
use oligofair_core::generate::{generate_synthetic, Dims};
use oligofair_solver::SolverConfig;

#[test]
#[ignore]
fn structural_scale_timing() {
    let mut dims = Dims::new(3, 20, 12);
    dims.products = 2;
    dims.contracts = 3;
    dims.durations = Some(vec![2, 4, 12]);
    dims.tiers = 2;
    dims.max_tanks_per_customer = 2;
    let inst = generate_synthetic(7, &dims);

    let cfg = GameConfig {
        solver: SolverConfig {
            node_limit: Some(200),
            mip_gap: 1e-4,
            ..SolverConfig::default()
        },
        ..GameConfig::default()
    };

    let t0 = Instant::now();
    let sq = compute_status_quo(&inst, &cfg).unwrap();
    println!(
        "status quo: total {:.6e}, {} nodes, status {}, {:?}",
        sq.total(),
        sq.outcome.diagnostics.nodes,
        sq.outcome.diagnostics.status,
        t0.elapsed()
    );

    let t0 = Instant::now();
    let fsw = solve_social_welfare(&inst, &cfg).unwrap();
    println!(
        "welfare: total {:.6e}, {} nodes, gap {:.3e}, status {}, {:?}",
        fsw.total_profit(),
        fsw.diagnostics.nodes,
        fsw.diagnostics.gap,
        fsw.diagnostics.status,
        t0.elapsed()
    );
}
