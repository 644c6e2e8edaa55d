//! Field snapshot formats, version 1.
//!
//! Binary: a 32-byte little-endian header followed by `N^d` little-endian
//! `f64` values in row-major order.
//!
//! | offset | type    | content              |
//! |--------|---------|----------------------|
//! | 0      | [u8; 4] | magic `PMCF`         |
//! | 4      | u32     | format version (1)   |
//! | 8      | u32     | dimension `d`        |
//! | 12     | u32     | cells per dim `N`    |
//! | 16     | f64     | period `L`           |
//! | 24     | f64     | time `t`             |
//!
//! CSV: a comment line `# pmcontract-field v1 d=<d> N=<N> L=<L> t=<t>`,
//! a header `i,value` (d = 1) or `i,j,value` (d = 2), then one row per cell
//! in row-major order. Floats use the shortest representation that
//! round-trips exactly.

use std::io::{BufRead, Read, Write};

use sha2::{Digest, Sha256};

use super::{ScalarField, TorusGrid};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"PMCF";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 32;

/// A field together with the time it was sampled at.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub field: ScalarField,
}

/// Lowercase hex SHA-256, used for manifest checksums.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn encode_binary(time: f64, field: &ScalarField) -> Vec<u8> {
    let g = field.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * g.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(g.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(g.cells() as u32).to_le_bytes());
    out.extend_from_slice(&g.period().to_le_bytes());
    out.extend_from_slice(&time.to_le_bytes());
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write_binary<W: Write>(mut out: W, time: f64, field: &ScalarField) -> Result<()> {
    out.write_all(&encode_binary(time, field))?;
    Ok(())
}

pub fn read_binary<R: Read>(mut input: R) -> Result<Snapshot> {
    let mut head = [0u8; HEADER_LEN];
    input.read_exact(&mut head)?;
    if &head[0..4] != MAGIC {
        return Err(Error::Format("bad magic in field snapshot".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(head[o..o + 4].try_into().expect("4 bytes"));
    let f64_at = |o: usize| f64::from_le_bytes(head[o..o + 8].try_into().expect("8 bytes"));
    let version = u32_at(4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported snapshot version {version}")));
    }
    let grid = TorusGrid::new(u32_at(8) as usize, u32_at(12) as usize, f64_at(16))?;
    let time = f64_at(24);
    let mut body = vec![0u8; 8 * grid.len()];
    input.read_exact(&mut body)?;
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(Snapshot { time, field: ScalarField::new(grid, values)? })
}

pub fn write_csv<W: Write>(mut out: W, time: f64, field: &ScalarField) -> Result<()> {
    let g = field.grid();
    writeln!(
        out,
        "# pmcontract-field v{VERSION} d={} N={} L={} t={time}",
        g.dim(),
        g.cells(),
        g.period()
    )?;
    match g.dim() {
        1 => {
            writeln!(out, "i,value")?;
            for (i, v) in field.values().iter().enumerate() {
                writeln!(out, "{i},{v}")?;
            }
        }
        _ => {
            writeln!(out, "i,j,value")?;
            for (idx, v) in field.values().iter().enumerate() {
                let [i, j] = g.unravel(idx);
                writeln!(out, "{i},{j},{v}")?;
            }
        }
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(input: R) -> Result<Snapshot> {
    let mut lines = input.lines();
    let first = lines.next().ok_or_else(|| Error::Format("empty snapshot".into()))??;
    let meta = first
        .strip_prefix("# pmcontract-field v")
        .ok_or_else(|| Error::Format("missing snapshot comment line".into()))?;
    let mut parts = meta.split_whitespace();
    let version: u32 = parse_num(parts.next(), "version")?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported snapshot version {version}")));
    }
    let mut kv = |key: &str| -> Result<String> {
        let tok = parts.next().ok_or_else(|| Error::Format(format!("missing {key}")))?;
        tok.strip_prefix(&format!("{key}="))
            .map(str::to_owned)
            .ok_or_else(|| Error::Format(format!("expected {key}=, found {tok:?}")))
    };
    let d: usize = parse_num(Some(&kv("d")?), "d")?;
    let n: usize = parse_num(Some(&kv("N")?), "N")?;
    let l: f64 = parse_num(Some(&kv("L")?), "L")?;
    let time: f64 = parse_num(Some(&kv("t")?), "t")?;
    let grid = TorusGrid::new(d, n, l)?;
    let header = lines.next().ok_or_else(|| Error::Format("missing header".into()))??;
    let expect = if d == 1 { "i,value" } else { "i,j,value" };
    if header.trim() != expect {
        return Err(Error::Format(format!("expected header {expect:?}, found {header:?}")));
    }
    let mut values = vec![f64::NAN; grid.len()];
    let mut seen = 0usize;
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != d + 1 {
            return Err(Error::Format(format!("bad row {line:?}")));
        }
        let mut ij = [0usize; 2];
        for k in 0..d {
            ij[k] = parse_num(Some(cols[k]), "index")?;
            if ij[k] >= n {
                return Err(Error::Format(format!("index out of range in {line:?}")));
            }
        }
        values[grid.ravel(ij)] = parse_num(Some(cols[d]), "value")?;
        seen += 1;
    }
    if seen != grid.len() {
        return Err(Error::Format(format!("expected {} rows, found {seen}", grid.len())));
    }
    Ok(Snapshot { time, field: ScalarField::new(grid, values)? })
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::Format(format!("missing {what}")))?;
    tok.trim().parse().map_err(|_| Error::Format(format!("cannot parse {what} from {tok:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(d: usize, n: usize) -> ScalarField {
        let g = TorusGrid::new(d, n, 2.5).unwrap();
        ScalarField::from_fn(g, |x| 1.0 + (3.0 * x[0]).sin() * (x[1] + 0.3).cos() / 7.0)
    }

    #[test]
    fn binary_header_layout() {
        let f = sample(2, 8);
        let bytes = encode_binary(0.25, &f);
        assert_eq!(bytes.len(), HEADER_LEN + 8 * 64);
        assert_eq!(&bytes[..4], MAGIC);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 2);
        assert_eq!(f64::from_le_bytes(bytes[24..32].try_into().unwrap()), 0.25);
    }

    #[test]
    fn rejects_corrupt_input() {
        let mut bytes = encode_binary(0.0, &sample(1, 8));
        bytes[0] = b'X';
        assert!(matches!(read_binary(&bytes[..]), Err(Error::Format(_))));
        let bytes = encode_binary(0.0, &sample(1, 8));
        assert!(read_binary(&bytes[..40]).is_err());
        assert!(read_csv("i,value\n0,1\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn formats_round_trip(d in 1usize..=2, n in 8usize..12, t in 0.0f64..10.0) {
            let f = sample(d, n);
            let back = read_binary(&encode_binary(t, &f)[..]).unwrap();
            prop_assert_eq!(&back.field, &f);
            prop_assert_eq!(back.time, t);

            let mut buf = Vec::new();
            write_csv(&mut buf, t, &f).unwrap();
            let back = read_csv(&buf[..]).unwrap();
            prop_assert_eq!(&back.field, &f);
            prop_assert_eq!(back.time, t);
        }
    }
}
