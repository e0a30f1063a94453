use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &str = "BOSE3B-GRID 1";

/// Values on a uniform Cartesian grid, interpolated multilinearly and zero outside.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub shape: Vec<usize>,
    pub spacing: Vec<f64>,
    pub origin: Vec<f64>,
    /// Row-major: the last axis varies fastest.
    pub data: Vec<f64>,
}

impl Grid {
    pub fn new(
        shape: Vec<usize>,
        spacing: Vec<f64>,
        origin: Vec<f64>,
        data: Vec<f64>,
    ) -> Result<Self> {
        let d = shape.len();
        if d == 0 || spacing.len() != d || origin.len() != d {
            return Err(Error::InvalidInput(
                "grid shape, spacing and origin must have equal length".into(),
            ));
        }
        if shape.iter().any(|&n| n < 2) || spacing.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::InvalidInput(
                "grid needs ≥ 2 nodes and positive spacing per axis".into(),
            ));
        }
        let total: usize = shape.iter().product();
        if data.len() != total {
            return Err(Error::InvalidInput(format!(
                "grid data has {} values, shape needs {total}",
                data.len()
            )));
        }
        if data.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidInput(
                "grid values must be finite and non-negative".into(),
            ));
        }
        Ok(Self {
            shape,
            spacing,
            origin,
            data,
        })
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dim()];
        for a in (0..self.dim() - 1).rev() {
            s[a] = s[a + 1] * self.shape[a + 1];
        }
        s
    }

    pub fn node(&self, flat: usize) -> Vec<f64> {
        let mut rem = flat;
        let mut x = vec![0.0; self.dim()];
        for a in (0..self.dim()).rev() {
            let i = rem % self.shape[a];
            rem /= self.shape[a];
            x[a] = self.origin[a] + i as f64 * self.spacing[a];
        }
        x
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        assert_eq!(x.len(), d);
        let strides = self.strides();
        let mut base = 0;
        let mut frac = vec![0.0; d];
        for a in 0..d {
            let t = (x[a] - self.origin[a]) / self.spacing[a];
            let last = (self.shape[a] - 1) as f64;
            if !(t >= 0.0 && t <= last) {
                return 0.0;
            }
            let i = (t.floor() as usize).min(self.shape[a] - 2);
            frac[a] = t - i as f64;
            base += i * strides[a];
        }
        let mut total = 0.0;
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut idx = base;
            for a in 0..d {
                if corner >> a & 1 == 1 {
                    w *= frac[a];
                    idx += strides[a];
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            if w != 0.0 {
                total += w * self.data[idx];
            }
        }
        total
    }

    pub fn sup(&self) -> f64 {
        self.data.iter().cloned().fold(0.0, f64::max)
    }

    /// Exact integral of the multilinear interpolant (tensor trapezoid rule).
    pub fn integral(&self) -> f64 {
        let strides = self.strides();
        let cell: f64 = self.spacing.iter().product();
        let mut total = 0.0;
        for (flat, v) in self.data.iter().enumerate() {
            if *v == 0.0 {
                continue;
            }
            let mut w = cell;
            for a in 0..self.dim() {
                let i = flat / strides[a] % self.shape[a];
                if i == 0 || i + 1 == self.shape[a] {
                    w *= 0.5;
                }
            }
            total += w * v;
        }
        total
    }

    /// Smallest radius, aligned to node distances plus one cell diagonal, outside
    /// of which the interpolant is below 1e-14 of its maximum.
    pub fn support_radius(&self) -> f64 {
        let thr = 1e-14 * self.sup();
        let diag = self.spacing.iter().map(|h| h * h).sum::<f64>().sqrt();
        let mut r: f64 = 0.0;
        for (flat, v) in self.data.iter().enumerate() {
            if *v > thr {
                let x = self.node(flat);
                r = r.max(x.iter().map(|c| c * c).sum::<f64>().sqrt());
            }
        }
        r + diag
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut reader = BufReader::new(file);
        let header = |reader: &mut BufReader<std::fs::File>| -> Result<String> {
            let mut line = String::new();
            reader.read_line(&mut line)?;
            Ok(line.trim_end().to_string())
        };
        let bad = |m: String| Error::InvalidInput(format!("{}: {m}", path.display()));
        if header(&mut reader)? != MAGIC {
            return Err(bad("missing grid header".into()));
        }
        let mut shape = None;
        let mut spacing = None;
        let mut origin = None;
        loop {
            let line = header(&mut reader)?;
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("shape") => {
                    shape = Some(
                        parts
                            .map(|p| p.parse::<usize>())
                            .collect::<std::result::Result<Vec<_>, _>>()
                            .map_err(|e| bad(format!("shape: {e}")))?,
                    )
                }
                Some("spacing") => {
                    spacing = Some(parse_floats(parts).map_err(|e| bad(format!("spacing: {e}")))?)
                }
                Some("origin") => {
                    origin = Some(parse_floats(parts).map_err(|e| bad(format!("origin: {e}")))?)
                }
                Some("data") => {
                    if parts.collect::<Vec<_>>() != ["f64le", "row-major"] {
                        return Err(bad("only `data f64le row-major` is supported".into()));
                    }
                    break;
                }
                _ => return Err(bad(format!("unexpected header line `{line}`"))),
            }
        }
        let shape = shape.ok_or_else(|| bad("missing shape".into()))?;
        let spacing = spacing.ok_or_else(|| bad("missing spacing".into()))?;
        let origin = origin.unwrap_or_else(|| vec![0.0; shape.len()]);
        let mut bytes = Vec::new();
        reader.read_to_end(&mut bytes)?;
        if bytes.len() % 8 != 0 {
            return Err(bad("data length is not a multiple of 8 bytes".into()));
        }
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Grid::new(shape, spacing, origin, data)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "{MAGIC}")?;
        writeln!(out, "shape {}", join(&self.shape))?;
        writeln!(out, "spacing {}", join(&self.spacing))?;
        writeln!(out, "origin {}", join(&self.origin))?;
        writeln!(out, "data f64le row-major")?;
        for v in &self.data {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }
}

fn parse_floats<'a>(
    parts: impl Iterator<Item = &'a str>,
) -> std::result::Result<Vec<f64>, std::num::ParseFloatError> {
    parts.map(|p| p.parse::<f64>()).collect()
}

fn join<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter()
        .map(|x| format!("{x}"))
        .collect::<Vec<_>>()
        .join(" ")
}
