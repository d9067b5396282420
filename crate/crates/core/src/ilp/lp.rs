use std::fmt::Write as _;

use thiserror::Error;

use super::{Cmp, IlpModel};

const LINE_WIDTH: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

/// Shortest text that parses back to the same `f64`.
fn num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn push_terms(out: &mut String, head: &str, terms: impl Iterator<Item = (f64, String)>) {
    let mut line = String::from(head);
    let mut first = true;
    for (c, name) in terms {
        let mag = if c.abs() == 1.0 { name } else { format!("{} {name}", num(c.abs())) };
        let tok = match (first, c < 0.0) {
            (true, false) => format!(" {mag}"),
            (_, true) => format!(" - {mag}"),
            (false, false) => format!(" + {mag}"),
        };
        if line.len() + tok.len() > LINE_WIDTH {
            out.push_str(&line);
            out.push('\n');
            line.clear();
            line.push_str("   ");
        }
        line.push_str(&tok);
        first = false;
    }
    out.push_str(&line);
}

/// CPLEX LP text of the model: objective, constraint rows, binary section.
pub fn export_lp(model: &IlpModel) -> String {
    let mut out = String::new();
    let m = &model.meta;
    let _ = writeln!(out, "\\ joint placement, caching and rate selection");
    let _ = writeln!(out, "\\ instance sha256 {}", m.instance_sha256);
    let _ = writeln!(
        out,
        "\\ mu {} l_max_ms {} p_max_w {} q_max {}",
        num(m.mu),
        num(m.l_max_ms),
        num(m.p_max_w),
        num(m.q_max)
    );
    out.push_str("Minimize\n");
    let obj =
        model.objective.iter().enumerate().filter(|(_, &c)| c != 0.0).map(|(i, &c)| (c, model.vars[i].name.clone()));
    push_terms(&mut out, " obj:", obj);
    if model.constant != 0.0 {
        let sign = if model.constant < 0.0 { "-" } else { "+" };
        let _ = write!(out, " {sign} {}", num(model.constant.abs()));
    }
    out.push_str("\nSubject To\n");
    for row in &model.rows {
        let terms = row.terms.iter().map(|&(v, c)| (c, model.vars[v].name.clone()));
        push_terms(&mut out, &format!(" {}:", row.name), terms);
        let _ = writeln!(out, " {} {}", row.cmp.symbol(), num(row.rhs));
    }
    out.push_str("Binary\n");
    let mut line = String::new();
    for v in &model.vars {
        if line.len() + v.name.len() + 1 > LINE_WIDTH {
            out.push_str(&line);
            out.push('\n');
            line.clear();
        }
        line.push(' ');
        line.push_str(&v.name);
    }
    if !line.is_empty() {
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str("End\n");
    out
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedRow {
    pub name: String,
    pub terms: Vec<(String, f64)>,
    pub cmp: Option<Cmp>,
    pub rhs: f64,
}

/// What [`parse_lp`] recovers from an LP document.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedLp {
    pub objective: Vec<(String, f64)>,
    pub constant: f64,
    pub rows: Vec<ParsedRow>,
    pub binaries: Vec<String>,
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Objective,
    Rows,
    Binary,
}

/// Parse the subset of the CPLEX LP format that [`export_lp`] writes.
pub fn parse_lp(text: &str) -> Result<ParsedLp, LpError> {
    let mut out = ParsedLp::default();
    let mut section = Section::None;
    // statements may span lines; collect (start line, text) per statement
    let mut stmts: Vec<(usize, Section, String)> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('\\').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match line.to_ascii_lowercase().as_str() {
            "minimize" | "minimise" | "min" => {
                section = Section::Objective;
                continue;
            }
            "subject to" | "st" | "s.t." => {
                section = Section::Rows;
                continue;
            }
            "binary" | "binaries" | "bin" => {
                section = Section::Binary;
                continue;
            }
            "end" => break,
            _ => {}
        }
        if section == Section::Binary {
            out.binaries.extend(line.split_whitespace().map(str::to_string));
        } else if line.contains(':') {
            stmts.push((n + 1, section, line.to_string()));
        } else if let Some(last) = stmts.last_mut() {
            last.2.push(' ');
            last.2.push_str(line);
        } else {
            return Err(LpError::Syntax { line: n + 1, message: "expression outside a statement".into() });
        }
    }
    for (line, sec, body) in stmts {
        let err = |message: String| LpError::Syntax { line, message };
        let (name, expr) = body.split_once(':').ok_or_else(|| err("missing `name:`".into()))?;
        let mut row = ParsedRow { name: name.trim().to_string(), ..Default::default() };
        let mut toks: Vec<&str> = expr.split_whitespace().collect();
        if sec == Section::Rows {
            if toks.len() < 2 {
                return Err(err("row without comparator".into()));
            }
            let rhs = toks.pop().unwrap_or_default();
            let cmp = match toks.pop().unwrap_or_default() {
                "<=" | "=<" | "<" => Cmp::Le,
                ">=" | "=>" | ">" => Cmp::Ge,
                "=" => Cmp::Eq,
                other => return Err(err(format!("unknown comparator `{other}`"))),
            };
            row.cmp = Some(cmp);
            row.rhs = rhs.parse().map_err(|_| err(format!("bad right-hand side `{rhs}`")))?;
        }
        let mut sign = 1.0;
        let mut coef: Option<f64> = None;
        let mut constant = 0.0;
        for tok in toks {
            match tok {
                "+" => sign = 1.0,
                "-" => sign = -1.0,
                _ => {
                    if let Ok(v) = tok.parse::<f64>() {
                        if coef.is_some() {
                            constant += sign * coef.take().unwrap_or(0.0);
                            sign = 1.0;
                        }
                        coef = Some(v);
                    } else {
                        row.terms.push((tok.to_string(), sign * coef.take().unwrap_or(1.0)));
                        sign = 1.0;
                    }
                }
            }
        }
        if let Some(c) = coef {
            constant += sign * c;
        }
        match sec {
            Section::Objective => {
                out.objective = row.terms;
                out.constant = constant;
            }
            _ => out.rows.push(row),
        }
    }
    Ok(out)
}
