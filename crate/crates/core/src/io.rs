//! Grid-function persistence: a small binary format ("FGF1") and CSV export.
//!
//! Binary layout, all little-endian:
//!   magic  4 bytes  "FGF1"
//!   N      u32      spatial dimension
//!   kind   u32      domain kind code (0 interval, 1 disc, 2 ellipse)
//!   R      f64      domain scale
//!   h      f64      grid spacing
//!   n      u64      number of interior nodes
//!   data   n * f64  nodal values in interior-index order

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{build_grid, scale_domain, Domain, DomainKind};
use crate::operator::GridFunction;

const MAGIC: &[u8; 4] = b"FGF1";

/// Serializes a grid function to the binary format.
pub fn write_function(path: &Path, u: &GridFunction) -> Result<()> {
    let g = &u.grid;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(g.dim() as u32).to_le_bytes())?;
    w.write_all(&(g.domain.kind.code() as u32).to_le_bytes())?;
    w.write_all(&g.domain.scale.to_le_bytes())?;
    w.write_all(&g.h.to_le_bytes())?;
    w.write_all(&(u.values.len() as u64).to_le_bytes())?;
    for v in &u.values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a grid function, rebuilding its grid from the header.
///
/// The header stores only the domain kind and scale, so ellipse files are
/// reconstructed with the default unit semiaxes scaled by `R`.
pub fn read_function(path: &Path) -> Result<GridFunction> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::BadFunctionFile("bad magic".into()));
    }
    let dim = read_u32(&mut r)? as usize;
    let kind_code = read_u32(&mut r)?;
    let scale = read_f64(&mut r)?;
    let h = read_f64(&mut r)?;
    let n = read_u64(&mut r)? as usize;

    let kind = DomainKind::from_code(
        u8::try_from(kind_code).map_err(|_| Error::BadFunctionFile("bad kind".into()))?,
    )
    .ok_or_else(|| Error::BadFunctionFile("bad kind".into()))?;
    let base = match kind {
        DomainKind::Interval => Domain::interval(),
        DomainKind::Disc => Domain::disc(),
        DomainKind::AxisEllipse => Domain::ellipse(1.0, 1.0).expect("unit semiaxes"),
    };
    if base.dim != dim {
        return Err(Error::BadFunctionFile("dimension/kind mismatch".into()));
    }
    if !(scale > 0.0 && scale.is_finite() && h > 0.0 && h.is_finite()) {
        return Err(Error::BadFunctionFile("bad scale or spacing".into()));
    }
    let domain = scale_domain(&base, scale)?;
    let grid = Arc::new(build_grid(&domain, h)?);
    if grid.n_interior() != n {
        return Err(Error::BadFunctionFile(format!(
            "node count {} does not match rebuilt grid ({})",
            n,
            grid.n_interior()
        )));
    }
    let mut values = vec![0.0f64; n];
    for v in &mut values {
        *v = read_f64(&mut r)?;
    }
    GridFunction::new(grid, values)
}

/// CSV export: header `x1[,x2],value`, one row per interior node.
pub fn write_csv(path: &Path, u: &GridFunction) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let dim = u.grid.dim();
    if dim == 1 {
        writeln!(w, "x1,value")?;
        for (x, v) in u.grid.coords.iter().zip(&u.values) {
            writeln!(w, "{},{}", x[0], v)?;
        }
    } else {
        writeln!(w, "x1,x2,value")?;
        for (x, v) in u.grid.coords.iter().zip(&u.values) {
            writeln!(w, "{},{},{}", x[0], x[1], v)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn sample() -> GridFunction {
        let d = scale_domain(&Domain::interval(), 2.0).unwrap();
        let grid = Arc::new(build_grid(&d, 0.25).unwrap());
        GridFunction::from_fn(grid, |x| (4.0 - x[0] * x[0]).sqrt())
    }

    #[test]
    fn binary_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.fgf");
        let u = sample();
        write_function(&path, &u).unwrap();
        let v = read_function(&path).unwrap();
        assert_eq!(u.values.len(), v.values.len());
        for (a, b) in u.values.iter().zip(&v.values) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(u.grid.signature(), v.grid.signature());
    }

    #[test]
    fn binary_roundtrip_disc() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u2.fgf");
        let grid = Arc::new(build_grid(&Domain::disc(), 0.25).unwrap());
        let u = GridFunction::from_fn(grid, |x| 1.0 - x[0] * x[0] - x[1] * x[1]);
        write_function(&path, &u).unwrap();
        let v = read_function(&path).unwrap();
        assert_eq!(u.values, v.values);
    }

    #[test]
    fn rejects_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.fgf");
        let mut f = File::create(&path).unwrap();
        f.write_all(b"NOPE").unwrap();
        f.write_all(&[0u8; 64]).unwrap();
        assert!(matches!(
            read_function(&path),
            Err(Error::BadFunctionFile(_))
        ));
    }

    #[test]
    fn rejects_truncated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.fgf");
        let u = sample();
        write_function(&path, &u).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 4]).unwrap();
        assert!(read_function(&path).is_err());
    }

    #[test]
    fn csv_shape() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.csv");
        let u = sample();
        write_csv(&path, &u).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x1,value"));
        assert_eq!(lines.count(), u.values.len());
        assert!(text.contains("-1.75,"));
    }
}
