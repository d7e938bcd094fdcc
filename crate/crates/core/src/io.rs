//! Points and distance-matrix files.
//!
//! Points file: first line `dim=<ℓ>`, then one row of ℓ comma-separated
//! decimals in `[0, 1]` per point. Labelled point sets (for matrix metrics)
//! use a first line `labels` followed by one label per row.
//!
//! Matrix file: first line `labels=<comma-separated>`, then one row of the
//! square distance matrix per label.
//!
//! Blank lines are ignored; every error names the 1-based line it was found on.

use std::fmt::Write as _;

use crate::metric::{DistanceMatrix, MetricError, MetricSpec, Point, Result};

fn parse_err(line: usize, message: impl Into<String>) -> MetricError {
    MetricError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_decimal(field: &str, line: usize) -> Result<f64> {
    let value: f64 = field
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("`{}` is not a decimal", field.trim())))?;
    if !value.is_finite() {
        return Err(parse_err(
            line,
            format!("non-finite value `{}`", field.trim()),
        ));
    }
    Ok(value)
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// Parses a points file into an ordered list of points.
pub fn parse_points(text: &str) -> Result<Vec<Point>> {
    let mut lines = content_lines(text);
    let (header_line, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing `dim=<l>` header"))?;
    if header == "labels" {
        let points: Vec<Point> = lines.map(|(_, l)| Point::label(l)).collect();
        if points.is_empty() {
            return Err(parse_err(header_line, "n >= 1 required"));
        }
        return Ok(points);
    }
    let dim = header
        .strip_prefix("dim=")
        .ok_or_else(|| parse_err(header_line, "expected `dim=<l>` or `labels` header"))?
        .trim()
        .parse::<usize>()
        .map_err(|_| parse_err(header_line, "dimension must be a positive integer"))?;
    if dim == 0 {
        return Err(parse_err(
            header_line,
            "dimension must be a positive integer",
        ));
    }
    let mut points = Vec::new();
    for (line, row) in lines {
        let coords = row
            .split(',')
            .map(|f| parse_decimal(f, line))
            .collect::<Result<Vec<_>>>()?;
        if coords.len() != dim {
            return Err(parse_err(
                line,
                format!("expected {dim} coordinates, found {}", coords.len()),
            ));
        }
        if let Some(v) = coords.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(parse_err(line, format!("coordinate {v} outside [0, 1]")));
        }
        points.push(Point::Coords(coords));
    }
    if points.is_empty() {
        return Err(parse_err(header_line, "n >= 1 required"));
    }
    Ok(points)
}

/// Parses a matrix metric file, validating the metric axioms.
pub fn parse_matrix(text: &str, check_triangle: bool) -> Result<MetricSpec> {
    let mut lines = content_lines(text);
    let (header_line, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing `labels=` header"))?;
    let labels: Vec<String> = header
        .strip_prefix("labels=")
        .ok_or_else(|| parse_err(header_line, "expected `labels=<comma-separated>` header"))?
        .split(',')
        .map(|l| l.trim().to_string())
        .collect();
    if labels.iter().any(|l| l.is_empty()) {
        return Err(parse_err(header_line, "empty label"));
    }
    let mut rows = Vec::with_capacity(labels.len());
    for (line, row) in lines {
        let values = row
            .split(',')
            .map(|f| parse_decimal(f, line))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != labels.len() {
            return Err(parse_err(
                line,
                format!("expected {} entries, found {}", labels.len(), values.len()),
            ));
        }
        if let Some(v) = values.iter().find(|v| **v < 0.0) {
            return Err(parse_err(line, format!("negative distance {v}")));
        }
        rows.push(values);
    }
    let matrix = DistanceMatrix::new(labels, rows, check_triangle)?;
    Ok(MetricSpec::matrix(matrix))
}

/// Renders points in the points-file format. Coordinates are written with
/// the shortest representation that parses back to the same value.
pub fn format_points(points: &[Point]) -> String {
    let mut out = String::new();
    match points.first() {
        Some(Point::Label(_)) => {
            out.push_str("labels\n");
            for p in points {
                if let Point::Label(l) = p {
                    out.push_str(l);
                    out.push('\n');
                }
            }
        }
        Some(Point::Coords(c)) => {
            writeln!(out, "dim={}", c.len()).unwrap();
            for p in points {
                if let Point::Coords(c) = p {
                    let row: Vec<String> = c.iter().map(|v| format!("{v}")).collect();
                    out.push_str(&row.join(","));
                    out.push('\n');
                }
            }
        }
        None => {}
    }
    out
}
