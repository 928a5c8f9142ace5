//! Binary snapshot cache.
//!
//! All integers and floats are little-endian:
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 8    | magic `b"VMPSNAP\0"`                    |
//! | 8      | 4    | format version (`u32`, currently 1)     |
//! | 12     | 8    | run seed (`u64`)                        |
//! | 20     | 4    | number of snapshots `M` (`u32`)         |
//! | 24     | 4    | virtual channels `C` (`u32`)            |
//! | 28     | 4    | samples per channel `K` (`u32`)         |
//! | 32     | ...  | `M` records                             |
//!
//! Each record is the step index (`u64`) followed by `C * K` complex64
//! values (`f32` real, `f32` imaginary), channel-major. The noise precision
//! is not stored; it follows from the radar configuration.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::radar_sim::Snapshot;
use crate::{Error, Result, C64};

pub const MAGIC: [u8; 8] = *b"VMPSNAP\0";
pub const VERSION: u32 = 1;

/// Snapshots of one run.
#[derive(Debug, Clone)]
pub struct SnapshotCache {
    pub seed: u64,
    pub num_channels: usize,
    pub num_samples: usize,
    pub snapshots: Vec<Snapshot>,
}

impl SnapshotCache {
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        let len = self.num_channels * self.num_samples;
        let as_u32 = |v: usize| u32::try_from(v).map_err(|_| Error::Format(format!("{v} does not fit the header")));
        w.write_all(&MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&as_u32(self.snapshots.len())?.to_le_bytes())?;
        w.write_all(&as_u32(self.num_channels)?.to_le_bytes())?;
        w.write_all(&as_u32(self.num_samples)?.to_le_bytes())?;
        for s in &self.snapshots {
            if s.data.len() != len {
                return Err(Error::Dimension { expected: len, got: s.data.len() });
            }
            w.write_all(&(s.step_index as u64).to_le_bytes())?;
            for z in &s.data {
                w.write_all(&(z.re as f32).to_le_bytes())?;
                w.write_all(&(z.im as f32).to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Reads a cache file; every snapshot gets `noise_precision`, whose
    /// length must match the stored dimensions.
    pub fn read(path: impl AsRef<Path>, noise_precision: Arc<[f64]>) -> Result<Self> {
        Self::read_from(&mut BufReader::new(std::fs::File::open(path)?), noise_precision)
    }

    pub fn read_from<R: Read>(r: &mut R, noise_precision: Arc<[f64]>) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if magic != MAGIC {
            return Err(Error::Format("not a snapshot cache (bad magic)".into()));
        }
        let version = read_u32(r)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported snapshot cache version {version}")));
        }
        let seed = read_u64(r)?;
        let count = read_u32(r)? as usize;
        let num_channels = read_u32(r)? as usize;
        let num_samples = read_u32(r)? as usize;
        let len = num_channels * num_samples;
        if noise_precision.len() != len {
            return Err(Error::Dimension { expected: noise_precision.len(), got: len });
        }
        let mut buf = vec![0u8; 8 * len];
        let mut snapshots = Vec::with_capacity(count);
        for _ in 0..count {
            let step_index = read_u64(r)? as usize;
            r.read_exact(&mut buf)?;
            let data = buf
                .chunks_exact(8)
                .map(|c| {
                    let re = f32::from_le_bytes(c[..4].try_into().expect("4 bytes"));
                    let im = f32::from_le_bytes(c[4..].try_into().expect("4 bytes"));
                    C64::new(re as f64, im as f64)
                })
                .collect();
            snapshots.push(Snapshot { step_index, data, noise_precision: noise_precision.clone() });
        }
        Ok(Self { seed, num_channels, num_samples, snapshots })
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}
