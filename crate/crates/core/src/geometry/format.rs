//! Plain-text point-cloud files: a header line `n label` followed by `n`
//! lines `x y z`. Coordinates are written in shortest round-trip form, so a
//! save/load cycle is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::PointCloud;
use crate::error::{Error, Result};

pub fn render_cloud(cloud: &PointCloud) -> String {
    let mut out = String::with_capacity(cloud.len() * 64 + 16);
    let _ = writeln!(out, "{} {}", cloud.len(), cloud.label);
    for p in &cloud.points {
        let _ = writeln!(out, "{:?} {:?} {:?}", p[0], p[1], p[2]);
    }
    out
}

/// Parses the text format. `origin` is only used in error messages.
pub fn parse_cloud(text: &str, origin: &Path) -> Result<PointCloud> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (header_no, header) = lines
        .by_ref()
        .find(|(_, l)| !l.is_empty())
        .ok_or_else(|| Error::parse(origin, 1, "missing header line `n label`"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(Error::parse(origin, header_no, "header must be `n label`"));
    }
    let n: usize = fields[0]
        .parse()
        .map_err(|_| Error::parse(origin, header_no, format!("bad point count `{}`", fields[0])))?;
    let label: usize = fields[1]
        .parse()
        .map_err(|_| Error::parse(origin, header_no, format!("bad label `{}`", fields[1])))?;

    let mut points = Vec::with_capacity(n);
    let mut last_line = header_no;
    for (no, line) in lines {
        last_line = no;
        if line.is_empty() {
            continue;
        }
        if points.len() == n {
            return Err(Error::parse(
                origin,
                no,
                format!("header declares {n} points but more lines follow"),
            ));
        }
        let mut coords = [0.0f64; 3];
        let mut it = line.split_whitespace();
        for c in coords.iter_mut() {
            let tok = it
                .next()
                .ok_or_else(|| Error::parse(origin, no, "expected three coordinates"))?;
            *c = tok
                .parse()
                .map_err(|_| Error::parse(origin, no, format!("bad coordinate `{tok}`")))?;
            if !c.is_finite() {
                return Err(Error::parse(origin, no, format!("non-finite coordinate `{tok}`")));
            }
        }
        if it.next().is_some() {
            return Err(Error::parse(origin, no, "expected three coordinates"));
        }
        points.push(coords);
    }
    if points.len() != n {
        return Err(Error::parse(
            origin,
            last_line + 1,
            format!("header declares {n} points but only {} found", points.len()),
        ));
    }
    Ok(PointCloud::new(points, label))
}

pub fn read_cloud(path: &Path) -> Result<PointCloud> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_cloud(&text, path)
}

pub fn write_cloud(path: &Path, cloud: &PointCloud) -> Result<()> {
    fs::write(path, render_cloud(cloud)).map_err(|e| Error::io(path, e))
}
