//! Rectangular grid axes and the shared CSV layout for 2-D data.
//!
//! Layout: a header line `# x_min x_max nx p_min p_max np` carrying the axis
//! values, an optional `# unit: ...` line, then `nx` rows of `np`
//! comma-separated values. Numbers use 17 significant digits so a write/read
//! cycle is bit-exact.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, CubistError, Result};

/// Evenly spaced axis including both end points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        if !min.is_finite() || !max.is_finite() {
            return Err(invalid("axis bounds must be finite"));
        }
        if count < 2 || !(max > min) {
            return Err(invalid(format!("axis needs max > min and count >= 2 (got {min}, {max}, {count})")));
        }
        Ok(Axis { min, max, count })
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.count - 1) as f64
    }

    /// Node `i`; computed about the axis centre so that symmetric axes give
    /// exactly mirrored nodes.
    pub fn value(&self, i: usize) -> f64 {
        if i == 0 {
            return self.min;
        }
        if i + 1 == self.count {
            return self.max;
        }
        let centre = 0.5 * (self.min + self.max);
        let half = 0.5 * (self.max - self.min);
        let k = 2.0 * i as f64 - (self.count - 1) as f64;
        centre + half * k / (self.count - 1) as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.value(i)).collect()
    }

    /// Fractional index of `v`; `None` outside the axis.
    pub fn locate(&self, v: f64) -> Option<f64> {
        let f = (v - self.min) / self.step();
        let last = (self.count - 1) as f64;
        if f < -1e-9 || f > last + 1e-9 || !f.is_finite() {
            None
        } else {
            Some(f.clamp(0.0, last))
        }
    }
}

/// Serializes a row-major `x.count × p.count` block.
pub fn write_grid_csv(x: &Axis, p: &Axis, values: &[f64], unit: Option<&str>) -> String {
    let mut out = String::with_capacity(values.len() * 25 + 128);
    let _ = writeln!(
        out,
        "# {:.16e} {:.16e} {} {:.16e} {:.16e} {}",
        x.min, x.max, x.count, p.min, p.max, p.count
    );
    if let Some(u) = unit {
        let _ = writeln!(out, "# unit: {u}");
    }
    for row in values.chunks(p.count) {
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            first = false;
            let _ = write!(out, "{v:.16e}");
        }
        out.push('\n');
    }
    out
}

/// Parsed grid file.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCsv {
    pub x: Axis,
    pub p: Axis,
    pub values: Vec<f64>,
    pub unit: Option<String>,
}

pub fn read_grid_csv(text: &str) -> Result<GridCsv> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| CubistError::Parse("empty grid file".into()))?;
    let fields: Vec<&str> = header
        .strip_prefix('#')
        .ok_or_else(|| CubistError::Parse("grid file must start with a '#' header".into()))?
        .split_whitespace()
        .collect();
    if fields.len() != 6 {
        return Err(CubistError::Parse(format!("grid header needs 6 fields, found {}", fields.len())));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| CubistError::Parse(format!("{s}: {e}")));
    let int = |s: &str| s.parse::<usize>().map_err(|e| CubistError::Parse(format!("{s}: {e}")));
    let x = Axis::new(num(fields[0])?, num(fields[1])?, int(fields[2])?)?;
    let p = Axis::new(num(fields[3])?, num(fields[4])?, int(fields[5])?)?;
    let mut unit = None;
    let mut values = Vec::with_capacity(x.count * p.count);
    let mut rows = 0;
    for line in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(u) = rest.trim().strip_prefix("unit:") {
                unit = Some(u.trim().to_string());
            }
            continue;
        }
        let before = values.len();
        for tok in line.split(',') {
            values.push(num(tok.trim())?);
        }
        if values.len() - before != p.count {
            return Err(CubistError::Parse(format!("row {rows} has {} values, expected {}", values.len() - before, p.count)));
        }
        rows += 1;
    }
    if rows != x.count {
        return Err(CubistError::Parse(format!("found {rows} rows, expected {}", x.count)));
    }
    Ok(GridCsv { x, p, values, unit })
}

/// Serde adapter: complex lists as `[[re, im], ...]`.
pub mod complex_pairs {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::C64;

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = v.iter().map(|c| [c.re, c.im]).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(pairs.into_iter().map(|p| C64::new(p[0], p[1])).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let x = Axis::new(-6.0, 6.0, 3).unwrap();
        let p = Axis::new(-1.0, 2.5, 4).unwrap();
        let vals: Vec<f64> = (0..12).map(|k| (k as f64 * 0.7).sin() / 3.0 + 1e-300 * k as f64).collect();
        let text = write_grid_csv(&x, &p, &vals, Some("dB"));
        let back = read_grid_csv(&text).unwrap();
        assert_eq!(back.x, x);
        assert_eq!(back.p, p);
        assert_eq!(back.unit.as_deref(), Some("dB"));
        for (a, b) in back.values.iter().zip(&vals) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn axis_locate() {
        let a = Axis::new(0.0, 1.0, 11).unwrap();
        assert_eq!(a.locate(0.5), Some(5.0));
        assert!(a.locate(1.2).is_none());
        assert_eq!(a.value(10), 1.0);
        assert!(Axis::new(1.0, 0.0, 4).is_err());
    }

    #[test]
    fn rejects_ragged_rows() {
        let text = "# 0 1 2 0 1 2\n1,2\n3\n";
        assert!(read_grid_csv(text).is_err());
    }
}
