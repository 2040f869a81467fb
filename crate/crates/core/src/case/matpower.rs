//! Reader for the matrix-literal subset of the Matpower case format.

use std::collections::BTreeMap;

use super::{Branch, Bus, Generator, NetworkCase};
use crate::error::{Error, Result};

const BUS_COLS: usize = 13;
const GEN_COLS: usize = 10;
const BRANCH_COLS: usize = 11;

#[derive(Debug)]
enum Value {
    Scalar(f64),
    Text(String),
    Matrix(Vec<Row>),
}

#[derive(Debug)]
struct Row {
    line: usize,
    values: Vec<f64>,
}

struct Block {
    line: usize,
    value: Value,
}

/// Case name plus the assignments in file order.
type Scanned = (Option<String>, Vec<(String, Block)>);

/// Matrix being read: field, opening line, finished rows, current row, current row line.
type OpenMatrix = (String, usize, Vec<Row>, Vec<f64>, usize);

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn strip_comment(line: &str) -> &str {
    match line.find('%') {
        Some(k) => &line[..k],
        None => line,
    }
}

fn parse_number(tok: &str, line: usize) -> Result<f64> {
    match tok {
        "Inf" | "inf" => Ok(f64::INFINITY),
        "-Inf" | "-inf" => Ok(f64::NEG_INFINITY),
        _ => tok.parse::<f64>().map_err(|_| parse_err(line, format!("invalid number `{tok}`"))),
    }
}

/// Splits the text into `mpc.<name> = <value>` assignments.
fn scan(text: &str) -> Result<Scanned> {
    let mut name = None;
    let mut blocks = Vec::new();
    let mut open: Option<OpenMatrix> = None;

    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let mut rest = strip_comment(raw).trim();

        if open.is_none() {
            if rest.is_empty() {
                continue;
            }
            if let Some(header) = rest.strip_prefix("function") {
                let fname = header
                    .split('=')
                    .nth(1)
                    .map(|s| s.trim().trim_end_matches(';').trim().to_string())
                    .filter(|s| !s.is_empty());
                if fname.is_none() {
                    return Err(parse_err(line_no, "malformed function header"));
                }
                name = fname;
                continue;
            }
            let (lhs, rhs) = rest
                .split_once('=')
                .ok_or_else(|| parse_err(line_no, format!("expected assignment, found `{rest}`")))?;
            let field = lhs
                .trim()
                .strip_prefix("mpc.")
                .ok_or_else(|| parse_err(line_no, format!("expected `mpc.<field>`, found `{}`", lhs.trim())))?
                .to_string();
            if field.is_empty() || !field.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(parse_err(line_no, format!("invalid field name `{field}`")));
            }
            let rhs = rhs.trim();
            if let Some(body) = rhs.strip_prefix('[') {
                open = Some((field, line_no, Vec::new(), Vec::new(), line_no));
                rest = body;
            } else {
                let rhs = rhs.trim_end_matches(';').trim();
                let value = if rhs.len() >= 2 && rhs.starts_with('\'') && rhs.ends_with('\'') {
                    Value::Text(rhs[1..rhs.len() - 1].to_string())
                } else {
                    Value::Scalar(parse_number(rhs, line_no)?)
                };
                blocks.push((field, Block { line: line_no, value }));
                continue;
            }
        }

        // Inside a matrix literal.
        let (_, _, rows, current, row_line) = open.as_mut().expect("matrix open");
        let mut closed = false;
        let mut chars = rest;
        loop {
            let cut = chars.find([';', ']']);
            let (segment, delim) = match cut {
                Some(p) => (&chars[..p], chars[p..].chars().next()),
                None => (chars, None),
            };
            for tok in segment.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
                if current.is_empty() {
                    *row_line = line_no;
                }
                current.push(parse_number(tok, line_no)?);
            }
            match delim {
                Some(';') => {
                    if !current.is_empty() {
                        rows.push(Row { line: *row_line, values: std::mem::take(current) });
                    }
                    chars = &chars[cut.unwrap() + 1..];
                }
                Some(']') => {
                    if !current.is_empty() {
                        rows.push(Row { line: *row_line, values: std::mem::take(current) });
                    }
                    let tail = chars[cut.unwrap() + 1..].trim();
                    if !(tail.is_empty() || tail == ";") {
                        return Err(parse_err(line_no, format!("unexpected `{tail}` after `]`")));
                    }
                    closed = true;
                    break;
                }
                _ => break,
            }
        }
        // A newline also terminates a row in a matrix literal.
        if !closed && !current.is_empty() {
            rows.push(Row { line: *row_line, values: std::mem::take(current) });
        }
        if closed {
            let (field, start, rows, _, _) = open.take().unwrap();
            let width = rows.first().map(|r| r.values.len());
            if let Some(w) = width {
                if let Some(bad) = rows.iter().find(|r| r.values.len() != w) {
                    return Err(parse_err(
                        bad.line,
                        format!("row has {} columns, expected {w} in `mpc.{field}`", bad.values.len()),
                    ));
                }
            }
            blocks.push((field, Block { line: start, value: Value::Matrix(rows) }));
        }
    }
    if let Some((field, start, ..)) = open {
        return Err(parse_err(start, format!("unterminated matrix `mpc.{field}`")));
    }
    Ok((name, blocks))
}

fn take_matrix(blocks: &mut BTreeMap<String, Block>, field: &str, min_cols: usize) -> Result<Vec<Row>> {
    let block =
        blocks.remove(field).ok_or_else(|| Error::Structure(format!("missing required block `mpc.{field}`")))?;
    match block.value {
        Value::Matrix(rows) => {
            if let Some(r) = rows.iter().find(|r| r.values.len() < min_cols) {
                return Err(parse_err(
                    r.line,
                    format!("`mpc.{field}` needs at least {min_cols} columns, found {}", r.values.len()),
                ));
            }
            Ok(rows)
        }
        _ => Err(Error::Structure(format!("`mpc.{field}` (line {}) must be a matrix", block.line))),
    }
}

fn bus_id(value: f64, line: usize) -> Result<u32> {
    if value >= 1.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
        Ok(value as u32)
    } else {
        Err(parse_err(line, format!("invalid bus number {value}")))
    }
}

/// Parses Matpower case text into a validated [`NetworkCase`].
///
/// Only `mpc.version`, `mpc.baseMVA`, `mpc.bus`, `mpc.gen`, `mpc.branch` and
/// `mpc.gencost` are accepted. Any other `mpc.*` block, piecewise-linear
/// costs, or isolated (type 4) buses are reported together as
/// [`Error::Unsupported`].
pub fn parse_matpower_case(text: &str) -> Result<NetworkCase> {
    let (name, list) = scan(text)?;
    let mut blocks = BTreeMap::new();
    let mut unsupported = Vec::new();
    for (field, block) in list {
        match field.as_str() {
            "version" | "baseMVA" | "bus" | "gen" | "branch" | "gencost" => {
                if blocks.contains_key(&field) {
                    return Err(parse_err(block.line, format!("duplicate block `mpc.{field}`")));
                }
                blocks.insert(field, block);
            }
            _ => unsupported.push(format!("mpc.{field}")),
        }
    }

    if let Some(block) = blocks.remove("version") {
        match &block.value {
            Value::Text(v) if v == "2" => {}
            Value::Scalar(v) if *v == 2.0 => {}
            _ => unsupported.push("case format version other than 2".into()),
        }
    }

    let base_mva = match blocks.remove("baseMVA") {
        Some(Block { value: Value::Scalar(v), .. }) => v,
        Some(b) => return Err(parse_err(b.line, "`mpc.baseMVA` must be a number")),
        None => return Err(Error::Structure("missing required block `mpc.baseMVA`".into())),
    };

    let bus_rows = take_matrix(&mut blocks, "bus", BUS_COLS)?;
    let gen_rows = take_matrix(&mut blocks, "gen", GEN_COLS)?;
    let branch_rows = take_matrix(&mut blocks, "branch", BRANCH_COLS)?;
    let cost_rows = take_matrix(&mut blocks, "gencost", 4)?;

    if bus_rows.is_empty() {
        return Err(Error::Structure("case has no buses".into()));
    }

    let mut buses = Vec::with_capacity(bus_rows.len());
    for row in &bus_rows {
        let c = &row.values;
        let kind = c[1];
        if kind == 4.0 {
            unsupported.push(format!("isolated bus type 4 (line {})", row.line));
        } else if ![1.0, 2.0, 3.0].contains(&kind) {
            return Err(parse_err(row.line, format!("invalid bus type {kind}")));
        }
        buses.push(Bus {
            id: bus_id(c[0], row.line)?,
            p_demand: c[2],
            q_demand: c[3],
            shunt_g: c[4],
            shunt_b: c[5],
            v_max: c[11],
            v_min: c[12],
            is_reference: kind == 3.0,
        });
    }

    if cost_rows.len() != gen_rows.len() {
        if cost_rows.len() == 2 * gen_rows.len() && !gen_rows.is_empty() {
            unsupported.push("reactive power costs in `mpc.gencost`".into());
        } else {
            return Err(Error::Structure(format!(
                "`mpc.gencost` has {} rows but `mpc.gen` has {}",
                cost_rows.len(),
                gen_rows.len()
            )));
        }
    }

    let mut generators = Vec::with_capacity(gen_rows.len());
    for (row, cost) in gen_rows.iter().zip(&cost_rows) {
        let c = &row.values;
        let k = &cost.values;
        let mut coeffs = Vec::new();
        if k[0] == 1.0 {
            unsupported.push(format!("piecewise-linear generator cost (line {})", cost.line));
        } else if k[0] != 2.0 {
            return Err(parse_err(cost.line, format!("invalid cost model {}", k[0])));
        } else {
            let n = k[3];
            if n < 0.0 || n.fract() != 0.0 {
                return Err(parse_err(cost.line, format!("invalid coefficient count {n}")));
            }
            let n = n as usize;
            if k.len() < 4 + n {
                return Err(parse_err(cost.line, format!("expected {n} cost coefficients")));
            }
            coeffs = k[4..4 + n].iter().rev().copied().collect();
            if coeffs.is_empty() {
                coeffs.push(0.0);
            }
            if coeffs.len() > 3 {
                unsupported.push(format!("cost polynomial of degree {} (line {})", n - 1, cost.line));
            }
        }
        generators.push(Generator {
            at_bus: bus_id(c[0], row.line)?,
            q_max: c[3],
            q_min: c[4],
            in_service: c[7] > 0.0,
            p_max: c[8],
            p_min: c[9],
            cost_coeffs: coeffs,
        });
    }

    let branches = branch_rows
        .iter()
        .map(|row| {
            let c = &row.values;
            Ok(Branch {
                from_bus: bus_id(c[0], row.line)?,
                to_bus: bus_id(c[1], row.line)?,
                r: c[2],
                x: c[3],
                b_charging: c[4],
                rate: c[5],
                tap: if c[8] == 0.0 { 1.0 } else { c[8] },
                shift: c[9].to_radians(),
                in_service: c[10] > 0.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    if !unsupported.is_empty() {
        return Err(Error::Unsupported(unsupported));
    }

    let case = NetworkCase { name: name.unwrap_or_else(|| "unnamed".into()), base_mva, buses, generators, branches };
    case.validate()?;
    Ok(case)
}
