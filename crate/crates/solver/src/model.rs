//! Solver-agnostic model representation: variables with bounds and
//! integrality, sparse linear constraints, SOS2 sets and a linear objective.

use std::collections::BTreeMap;

use crate::SolverError;

/// Index of a variable inside a [`Model`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

impl VarId {
    pub fn idx(self) -> usize {
        self.0
    }
}

/// Optimization direction of the objective.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Variable domain kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    /// Integer restricted to {0, 1}; bounds must stay within [0, 1].
    Binary,
}

/// Relation between a constraint row and its right-hand side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct VarDef {
    pub name: String,
    pub kind: VarKind,
    pub lb: f64,
    pub ub: f64,
}

/// A sparse linear row `sum(coeff * var) <sense> rhs`, tagged with the
/// constraint family it belongs to.
#[derive(Clone, Debug)]
pub struct Constraint {
    pub name: String,
    /// Family tag; every row carries one so audits can group rows by origin.
    pub tag: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

/// An ordered set of variables of which at most two may be nonzero, and if
/// two, they must be adjacent in the given order.
#[derive(Clone, Debug)]
pub struct Sos2Set {
    pub name: String,
    pub members: Vec<VarId>,
}

#[derive(Clone, Debug, Default)]
pub struct Objective {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

/// A mixed-integer linear model.
#[derive(Clone, Debug)]
pub struct Model {
    pub name: String,
    pub sense: Sense,
    vars: Vec<VarDef>,
    cons: Vec<Constraint>,
    sos2: Vec<Sos2Set>,
    pub objective: Objective,
}

impl Model {
    pub fn new(name: impl Into<String>, sense: Sense) -> Self {
        Model {
            name: name.into(),
            sense,
            vars: Vec::new(),
            cons: Vec::new(),
            sos2: Vec::new(),
            objective: Objective::default(),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, lb: f64, ub: f64) -> VarId {
        let id = VarId(self.vars.len());
        self.vars.push(VarDef {
            name: name.into(),
            kind,
            lb,
            ub,
        });
        id
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lb: f64, ub: f64) -> VarId {
        self.add_var(name, VarKind::Continuous, lb, ub)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, VarKind::Binary, 0.0, 1.0)
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        tag: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        sense: RowSense,
        rhs: f64,
    ) {
        self.cons.push(Constraint {
            name: name.into(),
            tag: tag.into(),
            terms,
            sense,
            rhs,
        });
    }

    pub fn add_sos2(&mut self, name: impl Into<String>, members: Vec<VarId>) {
        self.sos2.push(Sos2Set {
            name: name.into(),
            members,
        });
    }

    pub fn set_objective(&mut self, terms: Vec<(VarId, f64)>, constant: f64) {
        self.objective = Objective { terms, constant };
    }

    pub fn update_bounds(&mut self, var: VarId, lb: f64, ub: f64) {
        self.vars[var.0].lb = lb;
        self.vars[var.0].ub = ub;
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_cons(&self) -> usize {
        self.cons.len()
    }

    pub fn vars(&self) -> &[VarDef] {
        &self.vars
    }

    pub fn var(&self, id: VarId) -> &VarDef {
        &self.vars[id.0]
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.cons
    }

    pub fn sos2_sets(&self) -> &[Sos2Set] {
        &self.sos2
    }

    /// Look up a variable id by name. Linear scan; intended for tests and
    /// solution import, not hot paths.
    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name).map(VarId)
    }

    /// Number of rows per family tag. With tags mandatory on every row this
    /// doubles as the zero-untagged-rows audit: the counts sum to the total
    /// row count.
    pub fn tag_census(&self) -> BTreeMap<String, usize> {
        let mut census = BTreeMap::new();
        for c in &self.cons {
            *census.entry(c.tag.clone()).or_insert(0) += 1;
        }
        census
    }

    /// Structural checks: bound sanity, variable references, SOS2 set sizes,
    /// nonempty tags, binary bounds within [0, 1].
    pub fn validate(&self) -> Result<(), SolverError> {
        for (i, v) in self.vars.iter().enumerate() {
            if v.lb > v.ub {
                return Err(SolverError::InvalidModel(format!(
                    "variable {} has lb {} > ub {}",
                    v.name, v.lb, v.ub
                )));
            }
            if v.kind == VarKind::Binary && (v.lb < 0.0 || v.ub > 1.0) {
                return Err(SolverError::InvalidModel(format!(
                    "binary variable {} has bounds [{}, {}] outside [0, 1]",
                    v.name, v.lb, v.ub
                )));
            }
            if v.name.is_empty() {
                return Err(SolverError::InvalidModel(format!(
                    "variable #{i} has an empty name"
                )));
            }
        }
        let n = self.vars.len();
        for c in &self.cons {
            if c.tag.is_empty() {
                return Err(SolverError::InvalidModel(format!(
                    "row {} has no family tag",
                    c.name
                )));
            }
            for &(v, coef) in &c.terms {
                if v.0 >= n {
                    return Err(SolverError::InvalidModel(format!(
                        "row {} references undeclared variable #{}",
                        c.name, v.0
                    )));
                }
                if !coef.is_finite() {
                    return Err(SolverError::InvalidModel(format!(
                        "row {} has non-finite coefficient on {}",
                        c.name,
                        self.vars[v.0].name
                    )));
                }
            }
            if !c.rhs.is_finite() {
                return Err(SolverError::InvalidModel(format!(
                    "row {} has non-finite rhs",
                    c.name
                )));
            }
        }
        for s in &self.sos2 {
            if s.members.len() < 2 {
                return Err(SolverError::InvalidModel(format!(
                    "SOS2 set {} has fewer than 2 members",
                    s.name
                )));
            }
            for &v in &s.members {
                if v.0 >= n {
                    return Err(SolverError::InvalidModel(format!(
                        "SOS2 set {} references undeclared variable #{}",
                        s.name, v.0
                    )));
                }
            }
        }
        for &(v, _) in &self.objective.terms {
            if v.0 >= n {
                return Err(SolverError::InvalidModel(format!(
                    "objective references undeclared variable #{}",
                    v.0
                )));
            }
        }
        Ok(())
    }

    /// Objective value of a point, including the constant.
    pub fn eval_objective(&self, values: &[f64]) -> f64 {
        self.objective.constant
            + self
                .objective
                .terms
                .iter()
                .map(|&(v, c)| c * values[v.0])
                .sum::<f64>()
    }

    /// Activity of one row at a point.
    pub fn eval_row(&self, row: &Constraint, values: &[f64]) -> f64 {
        row.terms.iter().map(|&(v, c)| c * values[v.0]).sum()
    }

    /// Maximum violation of all rows, bounds, integrality and SOS2
    /// conditions at a point. Returns the worst offender's description.
    pub fn max_violation(&self, values: &[f64], int_tol: f64) -> (f64, String) {
        let mut worst = (0.0_f64, String::from("none"));
        let mut bump = |v: f64, what: String| {
            if v > worst.0 {
                worst = (v, what);
            }
        };
        for (i, v) in self.vars.iter().enumerate() {
            let x = values[i];
            bump(v.lb - x, format!("lower bound of {}", v.name));
            bump(x - v.ub, format!("upper bound of {}", v.name));
            if v.kind == VarKind::Binary {
                bump(
                    (x - x.round()).abs(),
                    format!("integrality of {}", v.name),
                );
            }
        }
        for c in &self.cons {
            let act = self.eval_row(c, values);
            let viol = match c.sense {
                RowSense::Le => act - c.rhs,
                RowSense::Ge => c.rhs - act,
                RowSense::Eq => (act - c.rhs).abs(),
            };
            bump(viol, format!("row {}", c.name));
        }
        for s in &self.sos2 {
            let nz: Vec<usize> = s
                .members
                .iter()
                .enumerate()
                .filter(|(_, &m)| values[m.0].abs() > int_tol)
                .map(|(i, _)| i)
                .collect();
            let ok = nz.len() <= 1 || (nz.len() == 2 && nz[1] == nz[0] + 1);
            if !ok {
                bump(1.0, format!("SOS2 condition of {}", s.name));
            }
        }
        worst
    }
}
