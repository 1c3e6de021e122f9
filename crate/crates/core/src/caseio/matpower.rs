//! Reader for the MATPOWER version 2 case subset used here.

use std::collections::HashMap;

use super::{BusType, CaseBranch, CaseBus, CaseFile, CaseGen};
use crate::error::{Error, Result};

/// A numeric matrix with the source line of each row.
#[derive(Debug, Default)]
struct Matrix {
    rows: Vec<Vec<f64>>,
    lines: Vec<usize>,
}

enum Mode {
    Top,
    Matrix { name: String, pending: Vec<String>, start: usize },
    Cell,
}

pub(super) fn parse(text: &str) -> Result<CaseFile> {
    let mut scalars: HashMap<String, (f64, usize)> = HashMap::new();
    let mut matrices: HashMap<String, Matrix> = HashMap::new();
    let mut mode = Mode::Top;

    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = strip_comment(raw);
        let mut rest: &str = line.trim();
        while !rest.is_empty() {
            match &mut mode {
                Mode::Top => {
                    let Some(stmt) = rest.strip_prefix("mpc.") else {
                        // function headers and unrelated statements
                        break;
                    };
                    let Some((name, value)) = stmt.split_once('=') else {
                        return Err(Error::Syntax {
                            line: line_no,
                            message: format!("expected `=` after `mpc.{}`", stmt.trim()),
                        });
                    };
                    let name = name.trim().to_string();
                    let value = value.trim_start();
                    if let Some(body) = value.strip_prefix('[') {
                        mode = Mode::Matrix {
                            name,
                            pending: Vec::new(),
                            start: line_no,
                        };
                        rest = body;
                    } else if let Some(body) = value.strip_prefix('{') {
                        mode = Mode::Cell;
                        rest = body;
                    } else {
                        let v = value.trim_end().trim_end_matches(';').trim();
                        if !v.starts_with('\'') && !v.starts_with('"') {
                            let x = parse_number(v).ok_or_else(|| Error::Syntax {
                                line: line_no,
                                message: format!("invalid value `{v}` for `mpc.{name}`"),
                            })?;
                            scalars.insert(name, (x, line_no));
                        }
                        break;
                    }
                }
                Mode::Cell => match rest.find('}') {
                    Some(p) => {
                        mode = Mode::Top;
                        rest = after_terminator(&rest[p + 1..]);
                    }
                    None => break,
                },
                Mode::Matrix { name, pending, .. } => {
                    let (body, closed) = match rest.find(']') {
                        Some(p) => (&rest[..p], Some(p)),
                        None => (rest, None),
                    };
                    let mat = matrices.entry(name.clone()).or_default();
                    for (i, piece) in body.split(';').enumerate() {
                        if i > 0 {
                            flush_row(name, pending, mat, line_no)?;
                        }
                        pending.extend(
                            piece
                                .split(|c: char| c.is_whitespace() || c == ',')
                                .filter(|t| !t.is_empty())
                                .map(str::to_string),
                        );
                    }
                    // a newline also ends a row
                    flush_row(name, pending, mat, line_no)?;
                    match closed {
                        Some(p) => {
                            mode = Mode::Top;
                            rest = after_terminator(&rest[p + 1..]);
                        }
                        None => break,
                    }
                }
            }
        }
    }
    if let Mode::Matrix { name, start, .. } = mode {
        return Err(Error::Syntax {
            line: start,
            message: format!("matrix `mpc.{name}` is never closed"),
        });
    }

    let base_mva = scalars
        .get("baseMVA")
        .map(|&(v, _)| v)
        .ok_or_else(|| Error::MissingTable("baseMVA".into()))?;
    let bus = take(&mut matrices, "bus", 13)?;
    let gen = take(&mut matrices, "gen", 8)?;
    let branch = take(&mut matrices, "branch", 11)?;

    let mut buses = Vec::with_capacity(bus.rows.len());
    for (row, &line) in bus.rows.iter().zip(&bus.lines) {
        let kind = match row[1] {
            1.0 => BusType::Pq,
            2.0 => BusType::Pv,
            3.0 => BusType::Ref,
            4.0 => continue,
            t => {
                return Err(Error::Syntax {
                    line,
                    message: format!("unknown bus type {t}"),
                })
            }
        };
        buses.push(CaseBus {
            id: as_id(row[0], line)?,
            kind,
            pd: row[2],
            gs: row[4],
            vm: row[7],
            va: row[8],
        });
    }
    let mut gens = Vec::new();
    for (row, &line) in gen.rows.iter().zip(&gen.lines) {
        if row[7] > 0.0 {
            gens.push(CaseGen {
                bus: as_id(row[0], line)?,
                pg: row[1],
            });
        }
    }
    let mut branches = Vec::new();
    for (row, &line) in branch.rows.iter().zip(&branch.lines) {
        if row[10] > 0.0 {
            branches.push(CaseBranch {
                from: as_id(row[0], line)?,
                to: as_id(row[1], line)?,
                r: row[2],
                x: row[3],
                tap: row[8],
            });
        }
    }
    let case = CaseFile {
        base_mva,
        buses,
        gens,
        branches,
    };
    case.drop_isolated().validate()
}

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '\'' => quoted = !quoted,
            '%' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

fn after_terminator(s: &str) -> &str {
    s.trim_start().trim_start_matches(';').trim_start()
}

fn flush_row(name: &str, pending: &mut Vec<String>, mat: &mut Matrix, line: usize) -> Result<()> {
    if pending.is_empty() {
        return Ok(());
    }
    let row = pending
        .drain(..)
        .map(|t| {
            parse_number(&t).ok_or_else(|| Error::Syntax {
                line,
                message: format!("invalid number `{t}` in `mpc.{name}` row {}", mat.rows.len() + 1),
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    if let Some(first) = mat.rows.first() {
        if first.len() != row.len() {
            return Err(Error::Syntax {
                line,
                message: format!(
                    "`mpc.{name}` row {} has {} columns, expected {}",
                    mat.rows.len() + 1,
                    row.len(),
                    first.len()
                ),
            });
        }
    }
    mat.rows.push(row);
    mat.lines.push(line);
    Ok(())
}

fn take(matrices: &mut HashMap<String, Matrix>, name: &str, min_cols: usize) -> Result<Matrix> {
    let mat = matrices
        .remove(name)
        .ok_or_else(|| Error::MissingTable(name.to_string()))?;
    if let (Some(row), Some(&line)) = (mat.rows.first(), mat.lines.first()) {
        if row.len() < min_cols {
            return Err(Error::Syntax {
                line,
                message: format!(
                    "`mpc.{name}` has {} columns, at least {min_cols} required",
                    row.len()
                ),
            });
        }
    }
    Ok(mat)
}

fn parse_number(t: &str) -> Option<f64> {
    match t {
        "Inf" | "inf" => Some(f64::INFINITY),
        "-Inf" | "-inf" => Some(f64::NEG_INFINITY),
        "NaN" | "nan" => Some(f64::NAN),
        _ => t.parse().ok(),
    }
}

fn as_id(v: f64, line: usize) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 && v < usize::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(Error::Syntax {
            line,
            message: format!("`{v}` is not a valid bus number"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_BUS: &str = "function mpc = two
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
  1 3 0  0 0 0 1 1 0 230 1 1.1 0.9;
  2 2 50 0 0 0 1 1 0 230 1 1.1 0.9;
];
mpc.gen = [ 1 0 0 100 -100 1 100 1 200 0 ];
mpc.branch = [
  1 2 0.2 1.0 0 0 0 0 0 0 1 -360 360; % line
];
mpc.bus_name = {
  'Bus 1';
  'Bus 2';
};
";

    #[test]
    fn minimal_case() {
        let c = parse(TWO_BUS).unwrap();
        assert_eq!(c.base_mva, 100.0);
        assert_eq!(c.buses.len(), 2);
        assert_eq!(c.branches.len(), 1);
        assert_eq!(c.gens.len(), 1);
        assert_eq!(c.buses[1].pd, 50.0);
        assert_eq!(c.branches[0].r, 0.2);
    }

    #[test]
    fn wrong_column_count_names_the_row() {
        let bad = TWO_BUS.replace("2 2 50 0 0 0 1 1 0 230 1 1.1 0.9;", "2 2 50 0 0 0 1 1 0 230 1 1.1;");
        match parse(&bad) {
            Err(Error::Syntax { line, message }) => {
                assert_eq!(line, 6);
                assert!(message.contains("row 2"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_token_and_missing_table() {
        let bad = TWO_BUS.replace("0.2 1.0", "0.2 1.0x");
        assert!(matches!(parse(&bad), Err(Error::Syntax { line: 10, .. })));
        let missing = TWO_BUS.replace("mpc.gen =", "mpc.gencost =");
        assert!(matches!(parse(&missing), Err(Error::MissingTable(t)) if t == "gen"));
    }

    #[test]
    fn reference_bus_count() {
        let two = TWO_BUS.replace("2 2 50", "2 3 50");
        assert!(matches!(parse(&two), Err(Error::ReferenceBusCount(2))));
    }

    #[test]
    fn out_of_service_rows_are_dropped() {
        let off = TWO_BUS.replace("0 0 0 0 0 0 1 -360", "0 0 0 0 0 0 0 -360");
        let c = parse(&off.replace("1 100 1 200", "1 100 0 200")).unwrap();
        assert!(c.branches.is_empty());
        assert!(c.gens.is_empty());
    }
}
