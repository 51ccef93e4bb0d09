//! Reader and writer for the `EUC_2D` subset of the TSPLIB format.
//!
//! ```text
//! NAME: rue-100-0
//! COMMENT: group=rue
//! TYPE: TSP
//! DIMENSION: 100
//! EDGE_WEIGHT_TYPE: EUC_2D
//! NODE_COORD_SECTION
//! 1 123 456
//! ...
//! EOF
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{DistanceMode, Group, Instance, Point};
use crate::error::{Error, Result};

pub fn read(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let inst = parse(&text, path)?;
    let dups = inst.duplicate_points();
    if !dups.is_empty() {
        log::warn!(
            "{}: {} duplicate point(s), first at city {}",
            path.display(),
            dups.len(),
            dups[0] + 1
        );
    }
    Ok(inst)
}

pub fn parse(text: &str, origin: &Path) -> Result<Instance> {
    let err = |line: usize, msg: String| Error::Parse {
        path: PathBuf::from(origin),
        line,
        msg,
    };

    let mut name = None;
    let mut dimension = None;
    let mut group = Group::Custom;
    let mut in_coords = false;
    let mut coords: Vec<Option<Point>> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line == "EOF" {
            break;
        }
        if in_coords {
            let mut parts = line.split_whitespace();
            let (Some(i), Some(x), Some(y), None) =
                (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(err(
                    lineno,
                    format!("expected `<index> <x> <y>`, got `{line}`"),
                ));
            };
            let i: usize = i
                .parse()
                .map_err(|_| err(lineno, format!("bad node index `{i}`")))?;
            let x: f64 = x
                .parse()
                .map_err(|_| err(lineno, format!("bad x coordinate `{x}`")))?;
            let y: f64 = y
                .parse()
                .map_err(|_| err(lineno, format!("bad y coordinate `{y}`")))?;
            if i == 0 || i > coords.len() {
                return Err(err(
                    lineno,
                    format!("node index {i} outside 1..={}", coords.len()),
                ));
            }
            if coords[i - 1].replace(Point::new(x, y)).is_some() {
                return Err(err(lineno, format!("node {i} listed twice")));
            }
            continue;
        }
        if line == "NODE_COORD_SECTION" {
            let n = dimension
                .ok_or_else(|| err(lineno, "NODE_COORD_SECTION before DIMENSION".into()))?;
            coords = vec![None; n];
            in_coords = true;
            continue;
        }
        let Some((key, value)) = line.split_once(':') else {
            return Err(err(lineno, format!("expected `KEY: VALUE`, got `{line}`")));
        };
        let (key, value) = (key.trim(), value.trim());
        match key {
            "NAME" => name = Some(value.to_string()),
            "TYPE" if value != "TSP" => {
                return Err(err(lineno, format!("unsupported TYPE `{value}`")));
            }
            "EDGE_WEIGHT_TYPE" if value != "EUC_2D" => {
                return Err(err(
                    lineno,
                    format!("unsupported EDGE_WEIGHT_TYPE `{value}`"),
                ));
            }
            "DIMENSION" => {
                dimension = Some(
                    value
                        .parse()
                        .map_err(|_| err(lineno, format!("bad DIMENSION `{value}`")))?,
                )
            }
            "COMMENT" => {
                if let Some(g) = value.strip_prefix("group=") {
                    group = g
                        .trim()
                        .parse()
                        .map_err(|e: Error| err(lineno, e.to_string()))?;
                }
            }
            _ => {}
        }
    }

    if !in_coords {
        return Err(err(0, "missing NODE_COORD_SECTION".into()));
    }
    let points = coords
        .into_iter()
        .enumerate()
        .map(|(i, p)| p.ok_or_else(|| err(0, format!("node {} has no coordinates", i + 1))))
        .collect::<Result<Vec<_>>>()?;
    let id = name.unwrap_or_else(|| {
        origin
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    Instance::new(id, points, group, DistanceMode::RoundedEuclidean)
}

/// Serializes with integer coordinates.
pub fn to_string(inst: &Instance) -> String {
    let mut out = String::with_capacity(32 * inst.len() + 128);
    let _ = writeln!(out, "NAME: {}", inst.id());
    let _ = writeln!(out, "COMMENT: group={}", inst.group());
    let _ = writeln!(out, "TYPE: TSP");
    let _ = writeln!(out, "DIMENSION: {}", inst.len());
    let _ = writeln!(out, "EDGE_WEIGHT_TYPE: EUC_2D");
    let _ = writeln!(out, "NODE_COORD_SECTION");
    for (i, p) in inst.points().iter().enumerate() {
        let (x, y) = p.key();
        let _ = writeln!(out, "{} {} {}", i + 1, x, y);
    }
    out.push_str("EOF\n");
    out
}

pub fn write(inst: &Instance, path: &Path) -> Result<()> {
    fs::write(path, to_string(inst)).map_err(|e| Error::io(path, e))
}
