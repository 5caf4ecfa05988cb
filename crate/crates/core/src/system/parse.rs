//! Plain-text system descriptions.
//!
//! ```text
//! # optional header: r | s
//! 2 | 3
//! 3: 1 1 1
//! 2: 1 1 -2
//! ```
//!
//! Statements are separated by newlines or `;`. A header may also prefix the
//! first equation (`2 | 3: 1 1 1 ; 2: 1 1 -2` declares `r = 2`). Documents
//! whose first non-blank character is `{` are read as the JSON mirror
//! `{"degrees": [...], "coeffs": [[...]]}`.

use super::AdditiveSystem;
use crate::error::{Error, Result};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_int<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.trim()
        .parse::<T>()
        .map_err(|_| parse_err(line, format!("malformed {what} '{}'", tok.trim())))
}

pub fn parse_system(text: &str) -> Result<AdditiveSystem> {
    if text.trim_start().starts_with('{') {
        return AdditiveSystem::from_json(text);
    }

    let mut header: Option<(usize, Option<usize>)> = None;
    let mut rows: Vec<(usize, u32, Vec<i64>)> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("");
        for stmt in content.split(';') {
            let stmt = stmt.trim();
            if stmt.is_empty() {
                continue;
            }
            let parts: Vec<&str> = stmt.split('|').collect();
            let (head_fields, body) = if parts.len() == 1 {
                (&parts[..0], Some(parts[0]))
            } else if parts.last().unwrap().contains(':') {
                (&parts[..parts.len() - 1], Some(*parts.last().unwrap()))
            } else {
                (&parts[..], None)
            };
            if !head_fields.is_empty() {
                if header.is_some() || !rows.is_empty() {
                    return Err(parse_err(line, "header must appear once, before any equation"));
                }
                if head_fields.len() > 2 {
                    return Err(parse_err(line, "header has the form 'r | s'"));
                }
                let r: usize = parse_int(head_fields[0], line, "equation count")?;
                let s = match head_fields.get(1) {
                    Some(tok) => Some(parse_int::<usize>(tok, line, "variable count")?),
                    None => None,
                };
                header = Some((r, s));
            }
            if let Some(body) = body {
                let body = body.trim();
                if body.is_empty() {
                    continue;
                }
                let (deg, cs) = body
                    .split_once(':')
                    .ok_or_else(|| parse_err(line, format!("expected 'd: c_1 ... c_s', got '{body}'")))?;
                let d: i64 = parse_int(deg, line, "degree")?;
                if d <= 0 {
                    return Err(parse_err(line, format!("non-positive degree {d}")));
                }
                let d = u32::try_from(d).map_err(|_| parse_err(line, "degree too large"))?;
                let coeffs = cs
                    .split_whitespace()
                    .map(|tok| parse_int::<i64>(tok, line, "coefficient"))
                    .collect::<Result<Vec<_>>>()?;
                if coeffs.is_empty() {
                    return Err(parse_err(line, "equation has no coefficients"));
                }
                rows.push((line, d, coeffs));
            }
        }
    }

    if rows.is_empty() {
        return Err(parse_err(text.lines().count().max(1), "no equations found"));
    }
    let s = match header {
        Some((_, Some(s))) => s,
        _ => rows[0].2.len(),
    };
    for (i, (line, _, cs)) in rows.iter().enumerate() {
        if cs.len() != s {
            return Err(parse_err(
                *line,
                format!("inconsistent column count: {} coefficients, expected {s}", cs.len()),
            ));
        }
        if let Some(j) = cs.iter().position(|&c| c == 0) {
            return Err(parse_err(*line, format!("zero coefficient at ({},{})", i + 1, j + 1)));
        }
    }
    if let Some((r, _)) = header {
        if r != rows.len() {
            let line = rows.last().map(|x| x.0).unwrap_or(1);
            return Err(parse_err(
                line,
                format!("header declares {r} equations, found {}", rows.len()),
            ));
        }
    }
    let (degrees, coeffs) = rows.into_iter().map(|(_, d, c)| (d, c)).unzip();
    AdditiveSystem::new(degrees, coeffs)
}
