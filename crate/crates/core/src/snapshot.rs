//! Cluster snapshots: a compact binary format and CSV.
//!
//! Binary layout: magic `IDLA`, version byte, dimension byte, explorer count
//! and seed as little-endian u64, then every site in explorer-label order as
//! zigzag varints of the coordinate deltas to the previous site.

use std::io::Write;

use crate::error::{Error, Result};
use crate::lattice::Point;

const MAGIC: &[u8; 4] = b"IDLA";
const VERSION: u8 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Snapshot<const D: usize> {
    pub seed: u64,
    pub sites: Vec<Point<D>>,
}

fn put_varint(out: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        out.push(v as u8 | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

fn get_varint(bytes: &[u8], pos: &mut usize) -> Result<u64> {
    let mut v = 0u64;
    for shift in (0..64).step_by(7) {
        let b = *bytes.get(*pos).ok_or_else(|| Error::Snapshot("truncated varint".into()))?;
        *pos += 1;
        v |= ((b & 0x7f) as u64) << shift;
        if b & 0x80 == 0 {
            return Ok(v);
        }
    }
    Err(Error::Snapshot("varint overflow".into()))
}

fn zigzag(v: i64) -> u64 {
    ((v << 1) ^ (v >> 63)) as u64
}

fn unzigzag(v: u64) -> i64 {
    (v >> 1) as i64 ^ -((v & 1) as i64)
}

impl<const D: usize> Snapshot<D> {
    pub fn new(seed: u64, sites: Vec<Point<D>>) -> Self {
        Snapshot { seed, sites }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(22 + self.sites.len() * D * 2);
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(D as u8);
        out.extend_from_slice(&(self.sites.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        let mut prev = Point::<D>::ORIGIN;
        for p in &self.sites {
            for k in 0..D {
                put_varint(&mut out, zigzag(p.0[k] as i64 - prev.0[k] as i64));
            }
            prev = *p;
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 22 || &bytes[..4] != MAGIC {
            return Err(Error::Snapshot("not a cluster snapshot".into()));
        }
        if bytes[4] != VERSION {
            return Err(Error::Snapshot(format!("unsupported version {}", bytes[4])));
        }
        if bytes[5] as usize != D {
            return Err(Error::Snapshot(format!("snapshot has dimension {}, expected {D}", bytes[5])));
        }
        let n = u64::from_le_bytes(bytes[6..14].try_into().expect("8 bytes"));
        let seed = u64::from_le_bytes(bytes[14..22].try_into().expect("8 bytes"));
        let mut pos = 22;
        let mut prev = Point::<D>::ORIGIN;
        let mut sites = Vec::with_capacity(n.min(1 << 24) as usize);
        for _ in 0..n {
            let mut c = [0i32; D];
            for (k, slot) in c.iter_mut().enumerate() {
                let v = prev.0[k] as i64 + unzigzag(get_varint(bytes, &mut pos)?);
                *slot = i32::try_from(v).map_err(|_| Error::Snapshot("coordinate overflow".into()))?;
            }
            prev = Point(c);
            sites.push(prev);
        }
        if pos != bytes.len() {
            return Err(Error::Snapshot("trailing bytes".into()));
        }
        Ok(Snapshot { seed, sites })
    }

    /// CSV with columns `x,y,z[,w,...],settle_order`.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        const NAMES: [&str; 6] = ["x", "y", "z", "w", "v", "u"];
        let header: Vec<&str> = NAMES[..D].to_vec();
        writeln!(w, "{},settle_order", header.join(","))?;
        for (i, p) in self.sites.iter().enumerate() {
            for c in &p.0 {
                write!(w, "{c},")?;
            }
            writeln!(w, "{i}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zigzag_round_trip() {
        for v in [0i64, 1, -1, 63, -64, i32::MAX as i64, i32::MIN as i64] {
            assert_eq!(unzigzag(zigzag(v)), v);
        }
    }

    #[test]
    fn csv_layout() {
        let s = Snapshot::<3>::new(1, vec![Point([0, 0, 0]), Point([1, -2, 0])]);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,y,z,settle_order\n0,0,0,0\n1,-2,0,1\n");
    }

    #[test]
    fn rejects_corruption() {
        let bytes = Snapshot::<3>::new(4, vec![Point([3, 1, -1])]).to_bytes();
        assert!(Snapshot::<4>::from_bytes(&bytes).is_err());
        assert!(Snapshot::<3>::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(Snapshot::<3>::from_bytes(&bad).is_err());
    }

    proptest! {
        #[test]
        fn binary_round_trip(seed in any::<u64>(), raw in prop::collection::vec(prop::array::uniform4(-1000i32..1000), 0..200)) {
            let s = Snapshot::<4>::new(seed, raw.into_iter().map(Point).collect());
            prop_assert_eq!(Snapshot::<4>::from_bytes(&s.to_bytes()).unwrap(), s);
        }
    }
}
