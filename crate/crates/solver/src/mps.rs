//! Free-format MPS export/import and solution-file exchange.
//!
//! The writer emits OBJSENSE, ROWS, COLUMNS (with integrality markers),
//! RHS, BOUNDS and SOS sections. Bounds are always written explicitly so a
//! file re-imports to an equivalent model. All numbers carry 17 significant
//! digits, which round-trips f64 exactly.

use std::collections::HashMap;

use thiserror::Error;

use crate::branch::{MipSolution, MipStatus};
use crate::model::{Model, RowSense, Sense, VarId, VarKind};
use crate::SolverConfig;

#[derive(Debug, Error)]
pub enum MpsError {
    #[error("name collision after sanitization: {0}")]
    NameCollision(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported construct: {0}")]
    Unsupported(String),
}

#[derive(Debug, Error)]
pub enum ImportError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("solution names variable {0} which the model does not declare")]
    UnknownVariable(String),
    #[error("solution is missing a value for variable {0}")]
    MissingVariable(String),
    #[error("duplicate value for variable {0}")]
    Duplicate(String),
    #[error("imported point violates {what} by {violation:.3e}")]
    Infeasible { what: String, violation: f64 },
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn sanitize(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect();
    if s.is_empty() {
        "_".to_string()
    } else {
        s
    }
}

/// Render a model as free-format MPS text.
pub fn write_mps(model: &Model) -> Result<String, MpsError> {
    let mut var_names = Vec::with_capacity(model.num_vars());
    let mut seen: HashMap<String, ()> = HashMap::new();
    for v in model.vars() {
        let name = sanitize(&v.name);
        if seen.insert(name.clone(), ()).is_some() {
            return Err(MpsError::NameCollision(name));
        }
        var_names.push(name);
    }
    let mut row_names = Vec::with_capacity(model.num_cons());
    let mut seen_rows: HashMap<String, ()> = HashMap::new();
    seen_rows.insert("obj".to_string(), ());
    for c in model.constraints() {
        let name = sanitize(&c.name);
        if seen_rows.insert(name.clone(), ()).is_some() {
            return Err(MpsError::NameCollision(name));
        }
        row_names.push(name);
    }

    let mut out = String::new();
    out.push_str(&format!("NAME {}\n", sanitize(&model.name)));
    out.push_str("OBJSENSE\n");
    out.push_str(match model.sense {
        Sense::Maximize => "    MAX\n",
        Sense::Minimize => "    MIN\n",
    });
    out.push_str("ROWS\n");
    out.push_str(" N obj\n");
    for (i, c) in model.constraints().iter().enumerate() {
        let s = match c.sense {
            RowSense::Le => 'L',
            RowSense::Ge => 'G',
            RowSense::Eq => 'E',
        };
        out.push_str(&format!(" {s} {}\n", row_names[i]));
    }

    // Gather per-column entries: objective first, then rows in order.
    let mut col_entries: Vec<Vec<(String, f64)>> = vec![Vec::new(); model.num_vars()];
    for &(v, coef) in &model.objective.terms {
        col_entries[v.0].push(("obj".to_string(), coef));
    }
    for (i, c) in model.constraints().iter().enumerate() {
        for &(v, coef) in &c.terms {
            col_entries[v.0].push((row_names[i].clone(), coef));
        }
    }

    out.push_str("COLUMNS\n");
    let mut in_int = false;
    for (j, v) in model.vars().iter().enumerate() {
        let want_int = v.kind == VarKind::Binary;
        if want_int && !in_int {
            out.push_str("    MARKER    'MARKER'    'INTORG'\n");
            in_int = true;
        }
        if !want_int && in_int {
            out.push_str("    MARKER    'MARKER'    'INTEND'\n");
            in_int = false;
        }
        if col_entries[j].is_empty() {
            // Keep empty columns alive across the round trip.
            out.push_str(&format!("    {} obj {}\n", var_names[j], fmt17(0.0)));
        }
        for (row, coef) in &col_entries[j] {
            out.push_str(&format!("    {} {} {}\n", var_names[j], row, fmt17(*coef)));
        }
    }
    if in_int {
        out.push_str("    MARKER    'MARKER'    'INTEND'\n");
    }

    out.push_str("RHS\n");
    for (i, c) in model.constraints().iter().enumerate() {
        if c.rhs != 0.0 {
            out.push_str(&format!("    rhs {} {}\n", row_names[i], fmt17(c.rhs)));
        }
    }
    if model.objective.constant != 0.0 {
        // Convention: rhs on the objective row negates the constant.
        out.push_str(&format!(
            "    rhs obj {}\n",
            fmt17(-model.objective.constant)
        ));
    }

    out.push_str("BOUNDS\n");
    for (j, v) in model.vars().iter().enumerate() {
        let name = &var_names[j];
        if v.lb == v.ub {
            out.push_str(&format!(" FX bnd {} {}\n", name, fmt17(v.lb)));
            continue;
        }
        if v.lb.is_finite() {
            out.push_str(&format!(" LO bnd {} {}\n", name, fmt17(v.lb)));
        } else {
            out.push_str(&format!(" MI bnd {}\n", name));
        }
        if v.ub.is_finite() {
            out.push_str(&format!(" UP bnd {} {}\n", name, fmt17(v.ub)));
        } else {
            out.push_str(&format!(" PL bnd {}\n", name));
        }
    }

    if !model.sos2_sets().is_empty() {
        out.push_str("SOS\n");
        for s in model.sos2_sets() {
            out.push_str(&format!(" S2 {}\n", sanitize(&s.name)));
            for (k, &v) in s.members.iter().enumerate() {
                out.push_str(&format!("    {} {}\n", var_names[v.0], k + 1));
            }
        }
    }
    out.push_str("ENDATA\n");
    Ok(out)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    ObjSense,
    Rows,
    Columns,
    Rhs,
    Bounds,
    Sos,
    Done,
}

/// Parse free-format MPS text into a model. Rows and columns keep their
/// file order, so a write/parse round trip preserves variable ids.
pub fn parse_mps(text: &str) -> Result<Model, MpsError> {
    let mut sense = Sense::Minimize;
    let mut name = String::from("model");
    let mut section = Section::None;

    struct RowInfo {
        name: String,
        sense: RowSense,
        terms: Vec<(VarId, f64)>,
        rhs: f64,
    }
    let mut obj_row: Option<String> = None;
    let mut rows: Vec<RowInfo> = Vec::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();

    struct ColInfo {
        name: String,
        integer: bool,
        lb: Option<f64>,
        ub: Option<f64>,
        fixed: Option<f64>,
        obj: f64,
    }
    let mut cols: Vec<ColInfo> = Vec::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut obj_constant = 0.0;
    let mut in_int = false;
    let mut sos_sets: Vec<(String, Vec<(usize, f64)>)> = Vec::new();

    let parse_num = |tok: &str, line: usize| -> Result<f64, MpsError> {
        tok.parse::<f64>().map_err(|_| MpsError::Parse {
            line,
            msg: format!("expected a number, found '{tok}'"),
        })
    };

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('*') {
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        let is_header = !raw.starts_with(' ') && !raw.starts_with('\t');
        if is_header {
            match toks[0] {
                "NAME" => {
                    if toks.len() > 1 {
                        name = toks[1].to_string();
                    }
                    continue;
                }
                "OBJSENSE" => {
                    section = Section::ObjSense;
                    if toks.len() > 1 {
                        sense = parse_objsense(toks[1], line)?;
                        section = Section::None;
                    }
                    continue;
                }
                "ROWS" => {
                    section = Section::Rows;
                    continue;
                }
                "COLUMNS" => {
                    section = Section::Columns;
                    continue;
                }
                "RHS" => {
                    section = Section::Rhs;
                    continue;
                }
                "RANGES" => {
                    return Err(MpsError::Unsupported("RANGES section".into()));
                }
                "BOUNDS" => {
                    section = Section::Bounds;
                    continue;
                }
                "SOS" => {
                    section = Section::Sos;
                    continue;
                }
                "ENDATA" => {
                    section = Section::Done;
                    continue;
                }
                other => {
                    return Err(MpsError::Parse {
                        line,
                        msg: format!("unknown section '{other}'"),
                    });
                }
            }
        }
        match section {
            Section::ObjSense => {
                sense = parse_objsense(toks[0], line)?;
                section = Section::None;
            }
            Section::Rows => {
                if toks.len() != 2 {
                    return Err(MpsError::Parse {
                        line,
                        msg: "ROWS lines need a type and a name".into(),
                    });
                }
                let rname = toks[1].to_string();
                match toks[0] {
                    "N" => {
                        if obj_row.is_some() {
                            return Err(MpsError::Unsupported(
                                "multiple objective (N) rows".into(),
                            ));
                        }
                        obj_row = Some(rname);
                    }
                    t => {
                        let s = match t {
                            "L" => RowSense::Le,
                            "G" => RowSense::Ge,
                            "E" => RowSense::Eq,
                            _ => {
                                return Err(MpsError::Parse {
                                    line,
                                    msg: format!("unknown row type '{t}'"),
                                })
                            }
                        };
                        row_index.insert(rname.clone(), rows.len());
                        rows.push(RowInfo {
                            name: rname,
                            sense: s,
                            terms: Vec::new(),
                            rhs: 0.0,
                        });
                    }
                }
            }
            Section::Columns => {
                if toks.contains(&"'MARKER'") {
                    if toks.contains(&"'INTORG'") {
                        in_int = true;
                    } else if toks.contains(&"'INTEND'") {
                        in_int = false;
                    }
                    continue;
                }
                if toks.len() < 3 || toks.len() % 2 == 0 {
                    return Err(MpsError::Parse {
                        line,
                        msg: "COLUMNS lines need a column then row/value pairs".into(),
                    });
                }
                let cname = toks[0];
                let j = *col_index.entry(cname.to_string()).or_insert_with(|| {
                    cols.push(ColInfo {
                        name: cname.to_string(),
                        integer: in_int,
                        lb: None,
                        ub: None,
                        fixed: None,
                        obj: 0.0,
                    });
                    cols.len() - 1
                });
                let mut k = 1;
                while k + 1 < toks.len() {
                    let rname = toks[k];
                    let val = parse_num(toks[k + 1], line)?;
                    if Some(rname) == obj_row.as_deref() {
                        cols[j].obj += val;
                    } else if let Some(&ri) = row_index.get(rname) {
                        rows[ri].terms.push((VarId(j), val));
                    } else {
                        return Err(MpsError::Parse {
                            line,
                            msg: format!("unknown row '{rname}'"),
                        });
                    }
                    k += 2;
                }
            }
            Section::Rhs => {
                if toks.len() < 3 || toks.len() % 2 == 0 {
                    return Err(MpsError::Parse {
                        line,
                        msg: "RHS lines need a set name then row/value pairs".into(),
                    });
                }
                let mut k = 1;
                while k + 1 < toks.len() {
                    let rname = toks[k];
                    let val = parse_num(toks[k + 1], line)?;
                    if Some(rname) == obj_row.as_deref() {
                        obj_constant = -val;
                    } else if let Some(&ri) = row_index.get(rname) {
                        rows[ri].rhs = val;
                    } else {
                        return Err(MpsError::Parse {
                            line,
                            msg: format!("unknown row '{rname}'"),
                        });
                    }
                    k += 2;
                }
            }
            Section::Bounds => {
                if toks.len() < 3 {
                    return Err(MpsError::Parse {
                        line,
                        msg: "BOUNDS lines need a type, set and column".into(),
                    });
                }
                let cname = toks[2];
                let j = *col_index.get(cname).ok_or_else(|| MpsError::Parse {
                    line,
                    msg: format!("bound on unknown column '{cname}'"),
                })?;
                let bound_val = |kind: &str| -> Result<f64, MpsError> {
                    let tok = toks.get(3).ok_or_else(|| MpsError::Parse {
                        line,
                        msg: format!("{kind} bound needs a value"),
                    })?;
                    parse_num(tok, line)
                };
                match toks[0] {
                    "LO" => cols[j].lb = Some(bound_val("LO")?),
                    "UP" => cols[j].ub = Some(bound_val("UP")?),
                    "FX" => cols[j].fixed = Some(bound_val("FX")?),
                    "FR" => {
                        cols[j].lb = Some(f64::NEG_INFINITY);
                        cols[j].ub = Some(f64::INFINITY);
                    }
                    "MI" => cols[j].lb = Some(f64::NEG_INFINITY),
                    "PL" => cols[j].ub = Some(f64::INFINITY),
                    "BV" => {
                        cols[j].integer = true;
                        cols[j].lb = Some(0.0);
                        cols[j].ub = Some(1.0);
                    }
                    t => {
                        return Err(MpsError::Parse {
                            line,
                            msg: format!("unknown bound type '{t}'"),
                        })
                    }
                }
            }
            Section::Sos => {
                if toks[0] == "S2" {
                    let sname = toks.get(1).unwrap_or(&"sos").to_string();
                    sos_sets.push((sname, Vec::new()));
                } else if toks[0] == "S1" {
                    return Err(MpsError::Unsupported("SOS type S1".into()));
                } else {
                    if sos_sets.is_empty() {
                        return Err(MpsError::Parse {
                            line,
                            msg: "SOS member before set header".into(),
                        });
                    }
                    let cname = toks[0];
                    let j = *col_index.get(cname).ok_or_else(|| MpsError::Parse {
                        line,
                        msg: format!("SOS member references unknown column '{cname}'"),
                    })?;
                    let w = parse_num(toks.get(1).unwrap_or(&"0"), line)?;
                    sos_sets.last_mut().unwrap().1.push((j, w));
                }
            }
            Section::None | Section::Done => {
                return Err(MpsError::Parse {
                    line,
                    msg: "data outside any section".into(),
                });
            }
        }
    }

    let mut model = Model::new(name, sense);
    for c in &cols {
        let (lb, ub) = match c.fixed {
            Some(v) => (v, v),
            None => {
                let lb = c.lb.unwrap_or(0.0);
                let ub = c.ub.unwrap_or(if c.integer { 1.0 } else { f64::INFINITY });
                (lb, ub)
            }
        };
        let kind = if c.integer {
            if lb < -1e-12 || ub > 1.0 + 1e-12 {
                return Err(MpsError::Unsupported(format!(
                    "general integer column {} with bounds [{lb}, {ub}]",
                    c.name
                )));
            }
            VarKind::Binary
        } else {
            VarKind::Continuous
        };
        model.add_var(c.name.clone(), kind, lb, ub);
    }
    for r in rows {
        model.add_constraint(r.name.clone(), "imported", r.terms, r.sense, r.rhs);
    }
    let obj_terms: Vec<(VarId, f64)> = cols
        .iter()
        .enumerate()
        .filter(|(_, c)| c.obj != 0.0)
        .map(|(j, c)| (VarId(j), c.obj))
        .collect();
    model.set_objective(obj_terms, obj_constant);
    for (sname, members) in sos_sets {
        let mut ms = members;
        ms.sort_by(|a, b| a.1.total_cmp(&b.1));
        model.add_sos2(sname, ms.into_iter().map(|(j, _)| VarId(j)).collect());
    }
    Ok(model)
}

fn parse_objsense(tok: &str, line: usize) -> Result<Sense, MpsError> {
    match tok {
        "MAX" | "MAXIMIZE" => Ok(Sense::Maximize),
        "MIN" | "MINIMIZE" => Ok(Sense::Minimize),
        other => Err(MpsError::Parse {
            line,
            msg: format!("unknown objective sense '{other}'"),
        }),
    }
}

/// Render a solution as `name value` pairs, one variable per line.
pub fn write_solution(model: &Model, values: &[f64]) -> String {
    let mut out = String::new();
    for (j, v) in model.vars().iter().enumerate() {
        out.push_str(&format!("{} {}\n", sanitize(&v.name), fmt17(values[j])));
    }
    out
}

/// Bind a `name value` solution file to a model, verify it against every
/// row, bound, integrality and SOS2 condition, and wrap it as a feasible
/// (not optimality-proven) MIP solution.
pub fn import_solution(
    model: &Model,
    text: &str,
    cfg: &SolverConfig,
) -> Result<MipSolution, ImportError> {
    let mut by_name: HashMap<String, f64> = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(ImportError::Parse {
                line,
                msg: format!("expected 'name value', found '{trimmed}'"),
            });
        }
        let val = toks[1].parse::<f64>().map_err(|_| ImportError::Parse {
            line,
            msg: format!("bad number '{}'", toks[1]),
        })?;
        if by_name.insert(toks[0].to_string(), val).is_some() {
            return Err(ImportError::Duplicate(toks[0].to_string()));
        }
    }

    let mut values = vec![0.0; model.num_vars()];
    for (j, v) in model.vars().iter().enumerate() {
        let key = sanitize(&v.name);
        match by_name.remove(&key) {
            Some(val) => values[j] = val,
            None => return Err(ImportError::MissingVariable(key)),
        }
    }
    if let Some((name, _)) = by_name.into_iter().next() {
        return Err(ImportError::UnknownVariable(name));
    }

    let (violation, what) = model.max_violation(&values, cfg.int_tol);
    if violation > cfg.feas_tol {
        return Err(ImportError::Infeasible { what, violation });
    }
    let objective = model.eval_objective(&values);
    let worst = match model.sense {
        Sense::Maximize => f64::INFINITY,
        Sense::Minimize => f64::NEG_INFINITY,
    };
    Ok(MipSolution {
        status: MipStatus::Feasible,
        objective: Some(objective),
        values: Some(values),
        best_bound: worst,
        gap: f64::INFINITY,
        nodes: 0,
        node_log: Vec::new(),
    })
}
