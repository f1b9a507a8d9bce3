//! Binary field format.
//!
//! ```text
//! offset  type     content
//! 0       [u8; 4]  magic "BMIX"
//! 4       u32      version: 1 = single-particle field, 2 = many-body state
//! 8       u32      dimension d
//! 12      u32      points per axis M
//! 16      f64      box length L
//! 24      u32, u32 N1, N2                      (version 2 only)
//! ...     f64, f64 (re, im) per amplitude, row-major site order
//! ```
//!
//! All integers and floats are little-endian.

use std::io::{Read, Write};

use super::{Field, GridSpec};
use crate::error::{Error, Result};
use crate::C64;

pub const MAGIC: &[u8; 4] = b"BMIX";
pub const VERSION_FIELD: u32 = 1;
pub const VERSION_MANY_BODY: u32 = 2;

fn write_header<W: Write>(w: &mut W, version: u32, grid: &GridSpec) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&version.to_le_bytes())?;
    w.write_all(&(grid.dim() as u32).to_le_bytes())?;
    w.write_all(&(grid.points() as u32).to_le_bytes())?;
    w.write_all(&grid.length().to_le_bytes())?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_header<R: Read>(r: &mut R) -> Result<(u32, GridSpec)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let version = read_u32(r)?;
    let d = read_u32(r)? as usize;
    let m = read_u32(r)? as usize;
    let l = read_f64(r)?;
    Ok((version, GridSpec::new(d, m, l)?))
}

fn write_values<W: Write>(w: &mut W, values: &[C64]) -> Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 16);
    for v in values {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_values<R: Read>(r: &mut R, n: usize) -> Result<Vec<C64>> {
    let mut buf = vec![0u8; n * 16];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            C64::new(re, im)
        })
        .collect())
}

pub fn write_field<W: Write>(w: &mut W, f: &Field) -> Result<()> {
    write_header(w, VERSION_FIELD, f.grid())?;
    write_values(w, f.values())
}

pub fn read_field<R: Read>(r: &mut R) -> Result<Field> {
    let (version, grid) = read_header(r)?;
    if version != VERSION_FIELD {
        return Err(Error::Format(format!("expected field version {VERSION_FIELD}, got {version}")));
    }
    Field::new(grid, read_values(r, grid.sites())?)
}

/// Writes a many-body amplitude vector over `grid^(n1 + n2)`.
pub fn write_many_body<W: Write>(w: &mut W, grid: &GridSpec, n1: usize, n2: usize, values: &[C64]) -> Result<()> {
    write_header(w, VERSION_MANY_BODY, grid)?;
    w.write_all(&(n1 as u32).to_le_bytes())?;
    w.write_all(&(n2 as u32).to_le_bytes())?;
    write_values(w, values)
}

pub fn read_many_body<R: Read>(r: &mut R) -> Result<(GridSpec, usize, usize, Vec<C64>)> {
    let (version, grid) = read_header(r)?;
    if version != VERSION_MANY_BODY {
        return Err(Error::Format(format!(
            "expected many-body version {VERSION_MANY_BODY}, got {version}"
        )));
    }
    let n1 = read_u32(r)? as usize;
    let n2 = read_u32(r)? as usize;
    let n = grid
        .sites()
        .checked_pow((n1 + n2) as u32)
        .ok_or_else(|| Error::Format("state size overflows".into()))?;
    Ok((grid, n1, n2, read_values(r, n)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout_is_fixed() {
        let g = GridSpec::new(2, 4, 1.5).unwrap();
        let f = Field::from_fn(g, |x| C64::new(x[0], -x[1]));
        let mut buf = Vec::new();
        write_field(&mut buf, &f).unwrap();
        assert_eq!(&buf[..4], b"BMIX");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(buf[12..16].try_into().unwrap()), 4);
        assert_eq!(f64::from_le_bytes(buf[16..24].try_into().unwrap()), 1.5);
        assert_eq!(buf.len(), 24 + 16 * 16);
        // site 1 is (x0, x1) = (0, h)
        let im = f64::from_le_bytes(buf[24 + 16 + 8..24 + 32].try_into().unwrap());
        assert_eq!(im, -0.375);
    }

    #[test]
    fn rejects_bad_magic_and_version() {
        let g = GridSpec::new(1, 4, 1.0).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &Field::zeros(g)).unwrap();
        assert!(read_many_body(&mut buf.as_slice()).is_err());
        buf[0] = b'X';
        assert!(matches!(read_field(&mut buf.as_slice()), Err(Error::Format(_))));
    }

    proptest! {
        #[test]
        fn field_roundtrip(values in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 8)) {
            let g = GridSpec::new(1, 8, 2.0).unwrap();
            let f = Field::new(g, values.into_iter().map(|(a, b)| C64::new(a, b)).collect()).unwrap();
            let mut buf = Vec::new();
            write_field(&mut buf, &f).unwrap();
            prop_assert_eq!(read_field(&mut buf.as_slice()).unwrap(), f);
        }

        #[test]
        fn many_body_roundtrip(values in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 64)) {
            let g = GridSpec::new(1, 4, 2.0).unwrap();
            let v: Vec<C64> = values.into_iter().map(|(a, b)| C64::new(a, b)).collect();
            let mut buf = Vec::new();
            write_many_body(&mut buf, &g, 2, 1, &v).unwrap();
            let (g2, n1, n2, v2) = read_many_body(&mut buf.as_slice()).unwrap();
            prop_assert_eq!((g2, n1, n2), (g, 2, 1));
            prop_assert_eq!(v2, v);
        }
    }
}
