//! Cross-check the floating-point simplex against an exact rational
//! vertex-enumeration oracle on small randomly generated LPs.
//!
//! The oracle converts the LP to equality form with one logical column per
//! row, enumerates every basis/bound-assignment combination, solves the
//! square system in exact rational arithmetic and keeps the best feasible
//! basic solution. With all structural bounds finite the feasible region is
//! a polytope, so enumeration is complete: it proves optimality,
//! infeasibility, and the optimal value.

use num_rational::BigRational;
use num_traits::{FromPrimitive, Zero};
use oligofair_solver::model::{Model, RowSense, Sense};
use oligofair_solver::simplex::{solve_lp, LpStatus};
use oligofair_solver::SolverConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Rat = BigRational;

fn rat(v: i64) -> Rat {
    Rat::from_i64(v).unwrap()
}

struct ExactLp {
    /// Columns over structural + logical variables, dense by row.
    cols: Vec<Vec<Rat>>,
    cost: Vec<Rat>,
    lb: Vec<Option<Rat>>,
    ub: Vec<Option<Rat>>,
    rhs: Vec<Rat>,
    m: usize,
}

enum ExactResult {
    Optimal(Rat),
    Infeasible,
}

impl ExactLp {
    fn from_parts(
        n: usize,
        rows: &[(Vec<i64>, RowSense, i64)],
        bounds: &[(i64, i64)],
        obj: &[i64],
        maximize: bool,
    ) -> ExactLp {
        let m = rows.len();
        let total = n + m;
        let mut cols = vec![vec![Rat::zero(); m]; total];
        let mut rhs = vec![Rat::zero(); m];
        for (i, (coeffs, _, b)) in rows.iter().enumerate() {
            rhs[i] = rat(*b);
            for (j, &a) in coeffs.iter().enumerate() {
                cols[j][i] = rat(a);
            }
            cols[n + i][i] = rat(1);
        }
        let mut lb = Vec::with_capacity(total);
        let mut ub = Vec::with_capacity(total);
        for &(l, u) in bounds {
            lb.push(Some(rat(l)));
            ub.push(Some(rat(u)));
        }
        for (_, sense, _) in rows {
            match sense {
                RowSense::Le => {
                    lb.push(Some(Rat::zero()));
                    ub.push(None);
                }
                RowSense::Ge => {
                    lb.push(None);
                    ub.push(Some(Rat::zero()));
                }
                RowSense::Eq => {
                    lb.push(Some(Rat::zero()));
                    ub.push(Some(Rat::zero()));
                }
            }
        }
        let sign = if maximize { 1 } else { -1 };
        let mut cost = vec![Rat::zero(); total];
        for (j, &c) in obj.iter().enumerate() {
            cost[j] = rat(sign * c);
        }
        ExactLp {
            cols,
            cost,
            lb,
            ub,
            rhs,
            m,
        }
    }

    /// Solve B x = r by Gaussian elimination; None when singular.
    fn solve_square(&self, basis: &[usize], r: &[Rat]) -> Option<Vec<Rat>> {
        let m = self.m;
        let mut a: Vec<Vec<Rat>> = (0..m)
            .map(|i| basis.iter().map(|&j| self.cols[j][i].clone()).collect())
            .collect();
        let mut b: Vec<Rat> = r.to_vec();
        for col in 0..m {
            let piv = (col..m).find(|&i| !a[i][col].is_zero())?;
            a.swap(col, piv);
            b.swap(col, piv);
            let d = a[col][col].clone();
            for i in 0..m {
                if i != col && !a[i][col].is_zero() {
                    let f = &a[i][col] / &d;
                    for k in col..m {
                        let t = &a[col][k] * &f;
                        a[i][k] = &a[i][k] - &t;
                    }
                    let t = &b[col] * &f;
                    b[i] = &b[i] - &t;
                }
            }
        }
        Some((0..m).map(|i| &b[i] / &a[i][i]).collect())
    }

    fn maximize(&self) -> ExactResult {
        let total = self.cols.len();
        let m = self.m;
        let mut best: Option<Rat> = None;

        // Enumerate bases as m-subsets of all columns.
        let mut basis: Vec<usize> = (0..m).collect();
        loop {
            self.try_basis(&basis, &mut best);
            // Next combination in lexicographic order.
            let mut i = m;
            loop {
                if i == 0 {
                    // done
                    return match best {
                        Some(v) => ExactResult::Optimal(v),
                        None => ExactResult::Infeasible,
                    };
                }
                i -= 1;
                if basis[i] != i + total - m {
                    break;
                }
            }
            basis[i] += 1;
            for k in i + 1..m {
                basis[k] = basis[k - 1] + 1;
            }
        }
    }

    fn try_basis(&self, basis: &[usize], best: &mut Option<Rat>) {
        let total = self.cols.len();
        let nonbasic: Vec<usize> = (0..total).filter(|j| !basis.contains(j)).collect();
        // Every nonbasic variable sits at one of its finite bounds; branch
        // over the choices (logicals have at most one finite bound).
        let choices: Vec<Vec<&Rat>> = nonbasic
            .iter()
            .map(|&j| {
                let mut c = Vec::new();
                if let Some(l) = &self.lb[j] {
                    c.push(l);
                }
                if let Some(u) = &self.ub[j] {
                    if self.lb[j].as_ref() != Some(u) {
                        c.push(u);
                    }
                }
                c
            })
            .collect();
        if choices.iter().any(|c| c.is_empty()) {
            return; // nonbasic free variable: not a vertex candidate
        }
        let mut pick = vec![0usize; nonbasic.len()];
        loop {
            let mut r = self.rhs.clone();
            for (k, &j) in nonbasic.iter().enumerate() {
                let xj = choices[k][pick[k]];
                if !xj.is_zero() {
                    for i in 0..self.m {
                        if !self.cols[j][i].is_zero() {
                            let t = &self.cols[j][i] * xj;
                            r[i] = &r[i] - &t;
                        }
                    }
                }
            }
            if let Some(xb) = self.solve_square(basis, &r) {
                let feasible = basis.iter().zip(xb.iter()).all(|(&j, x)| {
                    self.lb[j].as_ref().map_or(true, |l| x >= l)
                        && self.ub[j].as_ref().map_or(true, |u| x <= u)
                });
                if feasible {
                    let mut obj = Rat::zero();
                    for (&j, x) in basis.iter().zip(xb.iter()) {
                        if !self.cost[j].is_zero() {
                            obj = &obj + &(&self.cost[j] * x);
                        }
                    }
                    for (k, &j) in nonbasic.iter().enumerate() {
                        if !self.cost[j].is_zero() {
                            obj = &obj + &(&self.cost[j] * choices[k][pick[k]]);
                        }
                    }
                    if best.as_ref().map_or(true, |b| &obj > b) {
                        *best = Some(obj);
                    }
                }
            }
            // Advance the bound-assignment odometer.
            let mut k = 0;
            loop {
                if k == pick.len() {
                    return;
                }
                pick[k] += 1;
                if pick[k] < choices[k].len() {
                    break;
                }
                pick[k] = 0;
                k += 1;
            }
        }
    }
}

#[test]
fn simplex_matches_exact_rational_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(20240811);
    let cfg = SolverConfig::default();
    let mut optimal_cases = 0;
    let mut infeasible_cases = 0;

    for case in 0..250 {
        let n = rng.gen_range(2..=4);
        let m = rng.gen_range(1..=3);
        let maximize = rng.gen_bool(0.5);

        let bounds: Vec<(i64, i64)> = (0..n)
            .map(|_| {
                let l = rng.gen_range(-3..=0);
                let u = rng.gen_range(0..=3);
                (l, u)
            })
            .collect();
        let obj: Vec<i64> = (0..n).map(|_| rng.gen_range(-3..=3)).collect();
        let rows: Vec<(Vec<i64>, RowSense, i64)> = (0..m)
            .map(|_| {
                let coeffs: Vec<i64> = (0..n).map(|_| rng.gen_range(-3..=3)).collect();
                let sense = match rng.gen_range(0..3) {
                    0 => RowSense::Le,
                    1 => RowSense::Ge,
                    _ => RowSense::Eq,
                };
                (coeffs, sense, rng.gen_range(-4..=4))
            })
            .collect();

        let mut model = Model::new(
            format!("case{case}"),
            if maximize {
                Sense::Maximize
            } else {
                Sense::Minimize
            },
        );
        let vars: Vec<_> = (0..n)
            .map(|j| model.add_continuous(format!("x{j}"), bounds[j].0 as f64, bounds[j].1 as f64))
            .collect();
        for (i, (coeffs, sense, rhs)) in rows.iter().enumerate() {
            let terms: Vec<_> = coeffs
                .iter()
                .enumerate()
                .filter(|(_, &a)| a != 0)
                .map(|(j, &a)| (vars[j], a as f64))
                .collect();
            model.add_constraint(format!("r{i}"), "rand", terms, *sense, *rhs as f64);
        }
        model.set_objective(
            obj.iter()
                .enumerate()
                .filter(|(_, &c)| c != 0)
                .map(|(j, &c)| (vars[j], c as f64))
                .collect(),
            0.0,
        );

        let got = solve_lp(&model, &cfg).expect("simplex failed");
        let exact = ExactLp::from_parts(n, &rows, &bounds, &obj, maximize).maximize();

        match (got.status, exact) {
            (LpStatus::Optimal, ExactResult::Optimal(v)) => {
                optimal_cases += 1;
                let sign = if maximize { 1.0 } else { -1.0 };
                let want = sign
                    * (v.numer().to_string().parse::<f64>().unwrap()
                        / v.denom().to_string().parse::<f64>().unwrap());
                assert!(
                    (got.objective - want).abs() <= 1e-9 * want.abs().max(1.0),
                    "case {case}: simplex {} vs exact {}",
                    got.objective,
                    want
                );
            }
            (LpStatus::Infeasible, ExactResult::Infeasible) => {
                infeasible_cases += 1;
            }
            (s, ExactResult::Optimal(v)) => {
                panic!("case {case}: simplex says {s:?}, oracle found optimum {v}")
            }
            (s, ExactResult::Infeasible) => {
                panic!("case {case}: simplex says {s:?}, oracle says infeasible")
            }
        }
    }
    // Make sure the generator exercised both outcomes.
    assert!(optimal_cases > 50, "only {optimal_cases} optimal cases");
    assert!(infeasible_cases > 5, "only {infeasible_cases} infeasible cases");
}

#[test]
fn milp_matches_binary_enumeration() {
    // Independent check of branch-and-bound: enumerate all binary
    // assignments, solve the continuous remainder per assignment, compare.
    use oligofair_solver::branch::{solve_milp, MipStatus};
    use oligofair_solver::simplex::solve_lp_with_bounds;

    let mut rng = ChaCha8Rng::seed_from_u64(7700);
    let cfg = SolverConfig::default();
    for case in 0..60 {
        let nb = rng.gen_range(1..=4);
        let nc = rng.gen_range(0..=2);
        let m = rng.gen_range(1..=3);
        let mut model = Model::new(format!("milp{case}"), Sense::Maximize);
        let mut vars = Vec::new();
        for j in 0..nb {
            vars.push(model.add_binary(format!("b{j}")));
        }
        for j in 0..nc {
            vars.push(model.add_continuous(format!("c{j}"), 0.0, rng.gen_range(1..=3) as f64));
        }
        for i in 0..m {
            let terms: Vec<_> = vars
                .iter()
                .map(|&v| (v, rng.gen_range(-2..=3) as f64))
                .filter(|&(_, a)| a != 0.0)
                .collect();
            if terms.is_empty() {
                continue;
            }
            model.add_constraint(
                format!("r{i}"),
                "rand",
                terms,
                RowSense::Le,
                rng.gen_range(1..=5) as f64,
            );
        }
        model.set_objective(
            vars.iter()
                .map(|&v| (v, rng.gen_range(-2..=4) as f64))
                .collect(),
            0.0,
        );

        let got = solve_milp(&model, &cfg).expect("milp failed");

        let mut best: Option<f64> = None;
        for mask in 0..(1u32 << nb) {
            let mut bounds: Vec<(f64, f64)> =
                model.vars().iter().map(|v| (v.lb, v.ub)).collect();
            for j in 0..nb {
                let fix = if mask & (1 << j) != 0 { 1.0 } else { 0.0 };
                bounds[j] = (fix, fix);
            }
            let sol = solve_lp_with_bounds(&model, &cfg, &bounds).unwrap();
            if sol.status == LpStatus::Optimal {
                best = Some(best.map_or(sol.objective, |b: f64| b.max(sol.objective)));
            }
        }

        match (got.status, best) {
            (MipStatus::Optimal, Some(want)) => {
                let have = got.objective.unwrap();
                assert!(
                    (have - want).abs() <= 1e-7 * want.abs().max(1.0),
                    "case {case}: milp {have} vs enumeration {want}"
                );
            }
            (MipStatus::Infeasible, None) => {}
            (s, b) => panic!("case {case}: milp {s:?} vs enumeration {b:?}"),
        }
    }
}
