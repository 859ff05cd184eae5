//! Minimal reader of the LP text format and a point evaluator, written
//! independently of the exporter.

use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct LpRow {
    pub name: String,
    pub terms: Vec<(f64, String)>,
    pub op: Op,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default)]
pub struct LpFile {
    pub objective: Vec<(f64, String)>,
    pub rows: Vec<LpRow>,
    /// Explicit bounds: name → (lower, upper).
    pub bounds: BTreeMap<String, (f64, f64)>,
    pub binaries: BTreeSet<String>,
}

impl LpFile {
    /// Every variable mentioned anywhere.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.objective.iter().map(|(_, v)| v.clone()).collect();
        for r in &self.rows {
            out.extend(r.terms.iter().map(|(_, v)| v.clone()));
        }
        out.extend(self.bounds.keys().cloned());
        out.extend(self.binaries.iter().cloned());
        out
    }
}

fn parse_expr(text: &str) -> Result<Vec<(f64, String)>, String> {
    let mut out = Vec::new();
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    for tok in text.split_whitespace() {
        match tok {
            "+" => sign = 1.0,
            "-" => sign = -1.0,
            _ => {
                if let Ok(c) = tok.parse::<f64>() {
                    if coef.is_some() {
                        return Err(format!("two coefficients in a row at {tok:?}"));
                    }
                    coef = Some(c);
                } else {
                    if !tok.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) {
                        return Err(format!("bad variable name {tok:?}"));
                    }
                    out.push((sign * coef.unwrap_or(1.0), tok.to_string()));
                    sign = 1.0;
                    coef = None;
                }
            }
        }
    }
    if coef.is_some() {
        return Err("dangling coefficient".into());
    }
    Ok(out)
}

/// Joins continuation lines (leading whitespace, no `name:`) onto their
/// statement.
fn statements(lines: &[&str]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for line in lines {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let starts_new = t.split_once(':').is_some_and(|(n, _)| !n.contains(' '));
        if starts_new || out.is_empty() {
            out.push(t.to_string());
        } else {
            let last = out.last_mut().unwrap();
            last.push(' ');
            last.push_str(t);
        }
    }
    out
}

pub fn parse(text: &str) -> Result<LpFile, String> {
    let mut sections: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    let mut current = "";
    let mut seen_end = false;
    for line in text.lines() {
        if line.starts_with('\\') {
            continue;
        }
        let head = line.trim();
        let section = match head.to_ascii_lowercase().as_str() {
            "minimize" => Some("min"),
            "subject to" => Some("st"),
            "bounds" => Some("bounds"),
            "binary" | "binaries" => Some("bin"),
            "end" => {
                seen_end = true;
                Some("end")
            }
            _ => None,
        };
        match section {
            Some(s) => {
                current = s;
                sections.entry(s).or_default();
            }
            None if current.is_empty() || current == "end" => {
                if !head.is_empty() {
                    return Err(format!("text outside any section: {head:?}"));
                }
            }
            None => sections.entry(current).or_default().push(line),
        }
    }
    if !seen_end {
        return Err("missing End".into());
    }
    let mut lp = LpFile::default();
    let obj = statements(sections.get("min").ok_or("missing Minimize")?);
    if obj.len() != 1 {
        return Err(format!("expected one objective, got {}", obj.len()));
    }
    let (_, expr) = obj[0].split_once(':').ok_or("unnamed objective")?;
    lp.objective = parse_expr(expr)?;
    let mut names = BTreeSet::new();
    for stmt in statements(sections.get("st").ok_or("missing Subject To")?) {
        let (name, body) = stmt.split_once(':').ok_or_else(|| format!("unnamed row {stmt:?}"))?;
        let (lhs, op, rhs) = if let Some((l, r)) = body.split_once("<=") {
            (l, Op::Le, r)
        } else if let Some((l, r)) = body.split_once(">=") {
            (l, Op::Ge, r)
        } else if let Some((l, r)) = body.split_once('=') {
            (l, Op::Eq, r)
        } else {
            return Err(format!("row {name} has no relation"));
        };
        let rhs: f64 = rhs.trim().parse().map_err(|_| format!("row {name}: bad right-hand side {rhs:?}"))?;
        if !names.insert(name.trim().to_string()) {
            return Err(format!("duplicate row name {name}"));
        }
        lp.rows.push(LpRow { name: name.trim().to_string(), terms: parse_expr(lhs)?, op, rhs });
    }
    for line in sections.get("bounds").map(Vec::as_slice).unwrap_or(&[]) {
        let t: Vec<&str> = line.split_whitespace().collect();
        match t.as_slice() {
            [lo, "<=", v, "<=", hi] => {
                lp.bounds.insert(v.to_string(), (lo.parse().map_err(|_| "bad bound")?, hi.parse().map_err(|_| "bad bound")?));
            }
            [] => {}
            _ => return Err(format!("unsupported bound {line:?}")),
        }
    }
    for line in sections.get("bin").map(Vec::as_slice).unwrap_or(&[]) {
        lp.binaries.extend(line.split_whitespace().map(str::to_string));
    }
    Ok(lp)
}

/// Rows violated at `point` (missing variables are zero) beyond `tol`,
/// together with bound and integrality violations.
pub fn violated(lp: &LpFile, point: &BTreeMap<String, f64>, tol: f64) -> Vec<String> {
    let val = |v: &str| point.get(v).copied().unwrap_or(0.0);
    let mut out = Vec::new();
    for r in &lp.rows {
        let lhs: f64 = r.terms.iter().map(|(c, v)| c * val(v)).sum();
        let slack = tol * r.rhs.abs().max(1.0);
        let ok = match r.op {
            Op::Le => lhs <= r.rhs + slack,
            Op::Ge => lhs >= r.rhs - slack,
            Op::Eq => (lhs - r.rhs).abs() <= slack,
        };
        if !ok {
            out.push(format!("{} ({lhs} vs {})", r.name, r.rhs));
        }
    }
    for v in lp.variables() {
        let x = val(&v);
        let (lo, hi) = lp.bounds.get(&v).copied().unwrap_or((0.0, f64::INFINITY));
        if x < lo - tol || x > hi + tol {
            out.push(format!("bound of {v}"));
        }
        if lp.binaries.contains(&v) && x != 0.0 && x != 1.0 {
            out.push(format!("integrality of {v}"));
        }
    }
    out
}

pub fn objective(lp: &LpFile, point: &BTreeMap<String, f64>) -> f64 {
    lp.objective.iter().map(|(c, v)| c * point.get(v).copied().unwrap_or(0.0)).sum()
}
