//! Traffic-flow direction lookup.
//!
//! Stands in for an annotated road map. A field is built from rectangular
//! regions, an optional regular grid and a fallback default; queries return
//! `None` where the flow is undefined (intersections, open areas).
//!
//! Text format, one directive per line, `#` starts a comment:
//!
//! ```text
//! default undefined
//! region -10 -2 200 2 0.0          # xmin ymin xmax ymax direction
//! grid 0 0 5 3 2                   # x0 y0 cell cols rows
//! 0.0 0.0 undefined                # row 0 (lowest y)
//! 1.57 1.57 1.57                   # row 1
//! ```
//!
//! Directions are radians; `undefined` (or `-`) marks no flow. Regions are
//! searched in file order and take precedence over the grid.

use crate::error::{Error, Result};
use crate::types::normalize_angle;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRegion {
    pub min: (f64, f64),
    pub max: (f64, f64),
    pub direction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowGrid {
    pub origin: (f64, f64),
    pub cell: f64,
    pub cols: usize,
    pub rows: usize,
    /// Row-major, row 0 at the lowest y.
    pub cells: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowField {
    pub regions: Vec<FlowRegion>,
    pub grid: Option<FlowGrid>,
    pub default: Option<f64>,
}

impl FlowField {
    /// Flow undefined everywhere; DBSCAN degenerates to circular neighbourhoods.
    pub fn undefined() -> Self {
        Self::default()
    }

    pub fn constant(direction: f64) -> Self {
        Self { default: Some(normalize_angle(direction)), ..Self::default() }
    }

    pub fn with_region(mut self, min: (f64, f64), max: (f64, f64), direction: Option<f64>) -> Self {
        self.regions.push(FlowRegion { min, max, direction: direction.map(normalize_angle) });
        self
    }

    pub fn query(&self, x: f64, y: f64) -> Option<f64> {
        for r in &self.regions {
            if x >= r.min.0 && x <= r.max.0 && y >= r.min.1 && y <= r.max.1 {
                return r.direction;
            }
        }
        if let Some(g) = &self.grid {
            let cx = ((x - g.origin.0) / g.cell).floor();
            let cy = ((y - g.origin.1) / g.cell).floor();
            if cx >= 0.0 && cy >= 0.0 && (cx as usize) < g.cols && (cy as usize) < g.rows {
                return g.cells[cy as usize * g.cols + cx as usize];
            }
        }
        self.default
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut field = FlowField::default();
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, strip_comment(l)));
        while let Some((line_no, line)) = lines.next() {
            let tokens: Vec<&str> = line.split_whitespace().collect();
            let Some((&head, rest)) = tokens.split_first() else { continue };
            let err = |msg: String| Error::Parse { line: line_no, msg };
            match head {
                "default" => {
                    let [d] = rest else { return Err(err("expected `default <direction>`".into())) };
                    field.default = parse_direction(d).map_err(err)?;
                }
                "region" => {
                    let [a, b, c, d, dir] = rest else {
                        return Err(err("expected `region xmin ymin xmax ymax <direction>`".into()));
                    };
                    let xmin = parse_num(a).map_err(err)?;
                    let ymin = parse_num(b).map_err(err)?;
                    let xmax = parse_num(c).map_err(err)?;
                    let ymax = parse_num(d).map_err(err)?;
                    if xmin > xmax || ymin > ymax {
                        return Err(err("region min exceeds max".into()));
                    }
                    field.regions.push(FlowRegion {
                        min: (xmin, ymin),
                        max: (xmax, ymax),
                        direction: parse_direction(dir).map_err(err)?,
                    });
                }
                "grid" => {
                    let [x0, y0, cell, cols, rows] = rest else {
                        return Err(err("expected `grid x0 y0 cell cols rows`".into()));
                    };
                    let x0 = parse_num(x0).map_err(err)?;
                    let y0 = parse_num(y0).map_err(err)?;
                    let cell = parse_num(cell).map_err(err)?;
                    let cols: usize = cols.parse().map_err(|_| err(format!("bad column count `{cols}`")))?;
                    let rows: usize = rows.parse().map_err(|_| err(format!("bad row count `{rows}`")))?;
                    if cell <= 0.0 || cols == 0 || rows == 0 {
                        return Err(err("grid needs a positive cell size and dimensions".into()));
                    }
                    let mut cells = Vec::with_capacity(cols * rows);
                    while cells.len() < cols * rows {
                        let Some((row_no, row)) = lines.next() else {
                            return Err(Error::Parse { line: line_no, msg: format!("grid expects {rows} rows") });
                        };
                        let row_err = |msg: String| Error::Parse { line: row_no, msg };
                        let values: Vec<&str> = row.split_whitespace().collect();
                        if values.is_empty() {
                            continue;
                        }
                        if values.len() != cols {
                            return Err(row_err(format!("expected {cols} values, found {}", values.len())));
                        }
                        for v in values {
                            cells.push(parse_direction(v).map_err(row_err)?);
                        }
                    }
                    field.grid = Some(FlowGrid { origin: (x0, y0), cell, cols, rows, cells });
                }
                other => return Err(err(format!("unknown directive `{other}`"))),
            }
        }
        Ok(field)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

fn parse_num(s: &str) -> std::result::Result<f64, String> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("expected a number, found `{s}`"))
}

fn parse_direction(s: &str) -> std::result::Result<Option<f64>, String> {
    match s {
        "undefined" | "-" | "none" => Ok(None),
        _ => parse_num(s).map(|v| Some(normalize_angle(v))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn regions_take_precedence() {
        let f = FlowField::constant(0.3).with_region((0.0, 0.0), (10.0, 2.0), None);
        assert_eq!(f.query(5.0, 1.0), None);
        assert_eq!(f.query(5.0, 3.0), Some(0.3));
    }

    #[test]
    fn parse_full_file() {
        let text = "\
# test field
default undefined
region -10 -2 200 2 0.0
grid 0 10 5 3 2
0.0 0.0 undefined
1.5707963 - 7.0
";
        let f = FlowField::parse(text).unwrap();
        assert_eq!(f.query(50.0, 0.0), Some(0.0));
        assert_eq!(f.query(-50.0, 50.0), None);
        assert_eq!(f.query(1.0, 11.0), Some(0.0));
        assert_eq!(f.query(11.0, 11.0), None);
        assert!((f.query(1.0, 16.0).unwrap() - PI / 2.0).abs() < 1e-6);
        assert_eq!(f.query(6.0, 16.0), None);
        // 7 rad wraps into (-pi, pi]
        assert!((f.query(12.0, 16.0).unwrap() - (7.0 - 2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn parse_errors_report_lines() {
        match FlowField::parse("default 0\nregion 1 2 3\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match FlowField::parse("grid 0 0 1 2 2\n0 0\n0 x\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(FlowField::parse("lane 1 2\n").is_err());
        assert!(FlowField::parse("grid 0 0 1 2 2\n0 0\n").is_err());
    }
}
