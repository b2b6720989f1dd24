//! Row-indexed point clouds and their CSV form.
//!
//! The CSV layout is one point per line, `dim` comma-separated decimal
//! fields, no header. Values are written with Rust's shortest round-trip
//! float formatting, so writing then reading reproduces the same bits.

use std::io::{BufRead, Write};

use crate::error::{Result, SameError};

/// `n` points in ambient dimension `dim`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    dim: usize,
    data: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(SameError::param("dim", "must be at least 1"));
        }
        if data.len() % dim != 0 {
            return Err(SameError::DimensionMismatch {
                expected: dim,
                found: data.len() % dim,
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(SameError::NonFinite(format!(
                "point {} coordinate {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or_else(|| SameError::EmptySet("point cloud has no rows".into()))?;
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(SameError::DimensionMismatch {
                    expected: dim,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(dim, data)
    }

    /// Builds a cloud from rows that are already known to be finite.
    pub(crate) fn from_flat_unchecked(dim: usize, data: Vec<f64>) -> Self {
        debug_assert!(data.len() % dim == 0);
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Sub-cloud made of the listed rows, in the listed order.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.point(i));
        }
        Self::from_flat_unchecked(self.dim, data)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut line = String::new();
        for p in self.iter() {
            line.clear();
            for (k, v) in p.iter().enumerate() {
                if k > 0 {
                    line.push(',');
                }
                line.push_str(&format_f64(*v));
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut dim = None;
        let mut data = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let row = parse_row(trimmed, lineno)?;
            match dim {
                None => dim = Some(row.len()),
                Some(d) if d != row.len() => {
                    return Err(SameError::Parse {
                        line: lineno,
                        reason: format!("expected {d} fields, found {}", row.len()),
                    })
                }
                _ => {}
            }
            data.extend(row);
        }
        let dim = dim.ok_or_else(|| SameError::EmptySet("CSV contains no points".into()))?;
        Self::new(dim, data)
    }
}

pub(crate) fn parse_row(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split(',')
        .map(|f| {
            let f = f.trim();
            f.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| SameError::Parse {
                    line: lineno,
                    reason: format!("`{f}` is not a finite number"),
                })
        })
        .collect()
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_f64(v: f64) -> String {
    // `{}` never uses exponent notation, which bloats tiny values; `{:e}`
    // is also round-trip exact, so use whichever is shorter.
    let plain = format!("{v}");
    let exp = format!("{v:e}");
    if exp.len() < plain.len() {
        exp
    } else {
        plain
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_non_finite() {
        assert!(PointCloud::new(2, vec![0.0, f64::NAN]).is_err());
        assert!(PointCloud::new(2, vec![0.0, 1.0, 2.0]).is_err());
    }

    #[test]
    fn csv_reports_bad_line() {
        let text = "1,2\n3,x\n";
        match PointCloud::read_csv(text.as_bytes()) {
            Err(SameError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let ragged = "1,2\n3\n";
        assert!(matches!(
            PointCloud::read_csv(ragged.as_bytes()),
            Err(SameError::Parse { line: 2, .. })
        ));
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_bit_exact(rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 3), 1..20)) {
            let cloud = PointCloud::from_rows(&rows).unwrap();
            let mut buf = Vec::new();
            cloud.write_csv(&mut buf).unwrap();
            let back = PointCloud::read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back, cloud);
        }
    }
}
