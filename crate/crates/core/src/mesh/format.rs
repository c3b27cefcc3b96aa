//! Field snapshot formats.
//!
//! Binary snapshot, all integers and floats little-endian:
//!
//! ```text
//! offset  size      content
//! 0       5         magic "MLAB1"
//! 5       1         geometry code: 1 interval, 2 rectangle, 3 radial ball
//! 6       1         spatial dimension N (1 interval, 2 rectangle, N radial)
//! 7       1         number of resolved axes A (1 or 2)
//! 8       8·A       cells per axis, u64
//! ..      8·A       spacing per axis, f64
//! ..      8·Πcells  values, f64, row-major (x fastest)
//! ```
//!
//! The domain extent per axis is `cells · spacing`.
//!
//! CSV export: header row `index,value`, then one `i,value` line per cell.

use std::io::{BufRead, Read, Write};

use super::{Geometry, Grid, GridSpec, ScalarField};
use crate::{Error, Result};

pub const SNAPSHOT_MAGIC: &[u8; 5] = b"MLAB1";

const CODE_INTERVAL: u8 = 1;
const CODE_RECTANGLE: u8 = 2;
const CODE_RADIAL: u8 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotHeader {
    pub geometry_code: u8,
    pub spatial_dim: u8,
    pub cells: Vec<u64>,
    pub spacing: Vec<f64>,
}

impl SnapshotHeader {
    pub fn for_grid(grid: &Grid) -> Self {
        let geometry_code = match grid.geometry() {
            Geometry::Interval { .. } => CODE_INTERVAL,
            Geometry::Rectangle { .. } => CODE_RECTANGLE,
            Geometry::RadialBall { .. } => CODE_RADIAL,
        };
        SnapshotHeader {
            geometry_code,
            spatial_dim: grid.geometry().spatial_dim() as u8,
            cells: grid.cells().iter().map(|&n| n as u64).collect(),
            spacing: grid.spacing().to_vec(),
        }
    }

    /// Grid described by the header.
    pub fn grid_spec(&self) -> Result<GridSpec> {
        let extent = |i: usize| self.cells[i] as f64 * self.spacing[i];
        let cells = self.cells.iter().map(|&n| n as usize).collect();
        let geometry = match (self.geometry_code, self.cells.len()) {
            (CODE_INTERVAL, 1) => Geometry::Interval { length: extent(0) },
            (CODE_RECTANGLE, 2) => Geometry::Rectangle { lx: extent(0), ly: extent(1) },
            (CODE_RADIAL, 1) => Geometry::RadialBall { radius: extent(0), dim: self.spatial_dim as u32 },
            (code, axes) => return Err(Error::Format(format!("unknown geometry code {code} with {axes} axes"))),
        };
        Ok(GridSpec { geometry, cells })
    }

    /// Whether a grid has the same geometry code, resolution and spacing (to
    /// relative 1e-12).
    pub fn matches(&self, grid: &Grid) -> bool {
        let other = SnapshotHeader::for_grid(grid);
        self.geometry_code == other.geometry_code
            && self.spatial_dim == other.spatial_dim
            && self.cells == other.cells
            && self.spacing.iter().zip(&other.spacing).all(|(a, b)| (a - b).abs() <= 1e-12 * b.abs())
    }

    fn value_count(&self) -> usize {
        self.cells.iter().product::<u64>() as usize
    }
}

pub fn write_snapshot<W: Write>(w: &mut W, grid: &Grid, field: &ScalarField) -> Result<()> {
    grid.check(field)?;
    let header = SnapshotHeader::for_grid(grid);
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&[header.geometry_code, header.spatial_dim, header.cells.len() as u8])?;
    for n in &header.cells {
        w.write_all(&n.to_le_bytes())?;
    }
    for h in &header.spacing {
        w.write_all(&h.to_le_bytes())?;
    }
    for v in field.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_snapshot<R: Read>(r: &mut R) -> Result<(SnapshotHeader, Vec<f64>)> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::Format(format!("bad snapshot magic {magic:?}")));
    }
    let mut head = [0u8; 3];
    r.read_exact(&mut head)?;
    let axes = head[2] as usize;
    if !(1..=2).contains(&axes) {
        return Err(Error::Format(format!("unsupported axis count {axes}")));
    }
    let cells = (0..axes).map(|_| read_u64(r)).collect::<Result<Vec<_>>>()?;
    let spacing = (0..axes).map(|_| read_f64(r)).collect::<Result<Vec<_>>>()?;
    let header = SnapshotHeader { geometry_code: head[0], spatial_dim: head[1], cells, spacing };
    let count = header.value_count();
    let values = (0..count).map(|_| read_f64(r)).collect::<Result<Vec<_>>>()?;
    Ok((header, values))
}

pub fn write_csv<W: Write>(w: &mut W, field: &ScalarField) -> Result<()> {
    writeln!(w, "index,value")?;
    for (i, v) in field.values().iter().enumerate() {
        writeln!(w, "{i},{v}")?;
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(r: R) -> Result<Vec<f64>> {
    let mut lines = r.lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == "index,value" => {}
        _ => return Err(Error::Format("missing `index,value` header".into())),
    }
    let mut out = Vec::new();
    for (row, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (idx, val) =
            line.split_once(',').ok_or_else(|| Error::Format(format!("row {row}: expected `index,value`")))?;
        let idx: usize = idx.trim().parse().map_err(|_| Error::Format(format!("row {row}: bad index")))?;
        if idx != out.len() {
            return Err(Error::Format(format!("row {row}: index {idx} out of sequence")));
        }
        out.push(val.trim().parse().map_err(|_| Error::Format(format!("row {row}: bad value")))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_grid;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let g = build_grid(&GridSpec::rectangle(1.0, 2.0, 4, 8)).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0] - x[1]);
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &g, &f).unwrap();
        assert_eq!(&buf[..5], b"MLAB1");
        assert_eq!(&buf[5..8], &[2, 2, 2]);
        assert_eq!(u64::from_le_bytes(buf[8..16].try_into().unwrap()), 4);
        assert_eq!(u64::from_le_bytes(buf[16..24].try_into().unwrap()), 8);
        assert_eq!(f64::from_le_bytes(buf[24..32].try_into().unwrap()), 0.25);
        assert_eq!(f64::from_le_bytes(buf[32..40].try_into().unwrap()), 0.25);
        assert_eq!(buf.len(), 40 + 8 * 32);
        // First value is cell (0,0), second is (1,0): row-major, x fastest.
        assert_eq!(f64::from_le_bytes(buf[40..48].try_into().unwrap()), f.values()[0]);
        assert_eq!(f64::from_le_bytes(buf[48..56].try_into().unwrap()), 0.375 - 0.125);
    }

    #[test]
    fn radial_header_recovers_grid() {
        let g = build_grid(&GridSpec::radial(1.5, 3, 12)).unwrap();
        let f = ScalarField::constant(&g, 2.0);
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &g, &f).unwrap();
        let (header, values) = read_snapshot(&mut buf.as_slice()).unwrap();
        assert!(header.matches(&g));
        let spec = header.grid_spec().unwrap();
        assert_eq!(build_grid(&spec).unwrap().tag(), g.tag());
        assert_eq!(values, f.values());
    }

    #[test]
    fn bad_magic_rejected() {
        let err = read_snapshot(&mut &b"MLAB2\x01\x01\x01"[..]).unwrap_err();
        assert!(matches!(err, Error::Format(_)));
    }

    #[test]
    fn csv_export() {
        let g = build_grid(&GridSpec::interval(1.0, 3)).unwrap();
        let f = ScalarField::new(&g, vec![0.5, -1.0, 2.0]).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &f).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "index,value\n0,0.5\n1,-1\n2,2\n");
        assert_eq!(read_csv(buf.as_slice()).unwrap(), f.values());
    }

    proptest! {
        #[test]
        fn snapshot_and_csv_roundtrip(values in prop::collection::vec(-1e300f64..1e300, 12)) {
            let g = build_grid(&GridSpec::rectangle(3.0, 1.0, 4, 3)).unwrap();
            let f = ScalarField::new(&g, values).unwrap();
            let mut bin = Vec::new();
            write_snapshot(&mut bin, &g, &f).unwrap();
            let (_, back) = read_snapshot(&mut bin.as_slice()).unwrap();
            prop_assert_eq!(&back, f.values());
            let mut csv = Vec::new();
            write_csv(&mut csv, &f).unwrap();
            prop_assert_eq!(read_csv(csv.as_slice()).unwrap(), back);
        }
    }
}
