//! Plain-text field dumps.
//!
//! ```text
//! n=2
//! dims=3,3
//! h=5.0000000000000000e-1
//! origin=-5.0000000000000000e-1,-5.0000000000000000e-1
//! <value or comma-separated tuple per point, row-major>
//! ```
//!
//! Reals are printed with 17 significant digits so dumps round-trip `f64`.

use std::fmt::Write as _;
use std::path::Path;

use super::{GridSpec, ScalarField, SymMatrixField, VectorField};
use crate::error::{Error, Result};
use crate::smallmat::packed_len;
use crate::Real;

/// Anything that can be written as one tuple of reals per grid point.
pub trait PointTuples<T: Real> {
    fn grid(&self) -> &GridSpec<T>;
    fn width(&self) -> usize;
    fn push_point(&self, k: usize, out: &mut Vec<T>);
}

impl<T: Real> PointTuples<T> for ScalarField<T> {
    fn grid(&self) -> &GridSpec<T> {
        &self.spec
    }
    fn width(&self) -> usize {
        1
    }
    fn push_point(&self, k: usize, out: &mut Vec<T>) {
        out.push(self.values[k]);
    }
}

impl<T: Real> PointTuples<T> for VectorField<T> {
    fn grid(&self) -> &GridSpec<T> {
        &self.spec
    }
    fn width(&self) -> usize {
        self.spec.n()
    }
    fn push_point(&self, k: usize, out: &mut Vec<T>) {
        out.extend_from_slice(self.at(k));
    }
}

impl<T: Real> PointTuples<T> for SymMatrixField<T> {
    fn grid(&self) -> &GridSpec<T> {
        &self.spec
    }
    fn width(&self) -> usize {
        packed_len(self.spec.n())
    }
    fn push_point(&self, k: usize, out: &mut Vec<T>) {
        out.extend_from_slice(self.packed(k));
    }
}

fn real<T: Real>(x: T) -> String {
    format!("{:.16e}", x.as_f64())
}

fn join<T: Real>(xs: &[T]) -> String {
    xs.iter().map(|&x| real(x)).collect::<Vec<_>>().join(",")
}

pub fn to_dump_string<T: Real, F: PointTuples<T> + ?Sized>(field: &F) -> String {
    let spec = field.grid();
    let mut s = String::new();
    let dims: Vec<String> = spec.dims().iter().map(|d| d.to_string()).collect();
    let _ = writeln!(s, "n={}", spec.n());
    let _ = writeln!(s, "dims={}", dims.join(","));
    let _ = writeln!(s, "h={}", real(spec.h()));
    let _ = writeln!(s, "origin={}", join(spec.origin()));
    let mut buf = Vec::with_capacity(field.width());
    for k in 0..spec.len() {
        buf.clear();
        field.push_point(k, &mut buf);
        let _ = writeln!(s, "{}", join(&buf));
    }
    s
}

pub fn write_dump<T: Real, F: PointTuples<T> + ?Sized>(path: &Path, field: &F) -> Result<()> {
    std::fs::write(path, to_dump_string(field))?;
    Ok(())
}

/// A parsed dump: grid geometry plus one tuple per point.
#[derive(Clone, Debug, PartialEq)]
pub struct Dump {
    pub spec: GridSpec<f64>,
    pub width: usize,
    pub values: Vec<f64>,
}

fn header<'a>(line: Option<&'a str>, key: &str) -> Result<&'a str> {
    let line = line.ok_or_else(|| Error::Parse(format!("missing `{key}=` header")))?;
    line.strip_prefix(key)
        .and_then(|r| r.strip_prefix('='))
        .ok_or_else(|| Error::Parse(format!("expected `{key}=`, found `{line}`")))
}

fn floats(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| Error::Parse(format!("bad real `{t}`: {e}")))).collect()
}

pub fn parse_dump(text: &str) -> Result<Dump> {
    let mut lines = text.lines();
    let n: usize = header(lines.next(), "n")?.trim().parse().map_err(|e| Error::Parse(format!("bad n: {e}")))?;
    let dims = header(lines.next(), "dims")?
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| Error::Parse(format!("bad dims: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let h = floats(header(lines.next(), "h")?)?;
    let origin = floats(header(lines.next(), "origin")?)?;
    if dims.len() != n || h.len() != 1 {
        return Err(Error::Parse("header dimension mismatch".into()));
    }
    let spec = GridSpec::new(dims, h[0], origin)?;
    let mut width = 0;
    let mut values = Vec::new();
    let mut count = 0;
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let row = floats(line)?;
        if count == 0 {
            width = row.len();
        } else if row.len() != width {
            return Err(Error::Parse(format!("point {count}: tuple width {} != {width}", row.len())));
        }
        values.extend(row);
        count += 1;
    }
    if count != spec.len() {
        return Err(Error::Parse(format!("expected {} points, found {count}", spec.len())));
    }
    Ok(Dump { spec, width, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let g = GridSpec::new(vec![2, 3], 0.5, vec![-0.5, 0.0]).unwrap();
        let u = ScalarField::from_fn(&g, |x| x[0] + 10.0 * x[1]);
        let text = to_dump_string(&u);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n=2");
        assert_eq!(lines[1], "dims=2,3");
        assert_eq!(lines[2], "h=5.0000000000000000e-1");
        assert_eq!(lines[3], "origin=-5.0000000000000000e-1,0.0000000000000000e0");
        assert_eq!(lines.len(), 4 + 6);
        assert_eq!(lines[5], "4.5000000000000000e0");
    }

    #[test]
    fn rejects_truncated_dump() {
        let g = GridSpec::new(vec![3], 1.0, vec![0.0]).unwrap();
        let text = to_dump_string(&ScalarField::constant(&g, 1.0));
        let cut: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
        assert!(matches!(parse_dump(&cut), Err(Error::Parse(_))));
        assert!(parse_dump("dims=3\n").is_err());
    }

    proptest! {
        #[test]
        fn dumps_round_trip_bit_exactly(vals in proptest::collection::vec(-1e6f64..1e6, 3 * 4 * 3), h in 1e-3f64..10.0) {
            let g = GridSpec::new(vec![3, 4], h, vec![-1.25, 3.0]).unwrap();
            let f = VectorField::new(g.clone(), vals[..24].to_vec()).unwrap();
            let d = parse_dump(&to_dump_string(&f)).unwrap();
            prop_assert_eq!(&d.spec, &g);
            prop_assert_eq!(d.width, 2);
            prop_assert_eq!(d.values, f.values);
            let s = SymMatrixField::new(g.clone(), vals.clone()[..36].to_vec()).unwrap();
            let d = parse_dump(&to_dump_string(&s)).unwrap();
            prop_assert_eq!(d.width, 3);
            prop_assert_eq!(d.values, s.values);
        }
    }
}
