//! Trajectory snapshots: 8-byte magic, version byte, little-endian header
//! (dims u8, eta u8, n_points u32, box_length f64, time f64, length u64)
//! and then (re, im) f64 pairs.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::{GridModel, State};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"EUVQCKPT";
pub const VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub dims: u8,
    pub eta: u8,
    pub n_points: u32,
    pub box_length: f64,
    pub time: f64,
    pub state: State,
}

impl Checkpoint {
    pub fn new(model: &GridModel, time: f64, state: State) -> Self {
        Self {
            dims: model.dims() as u8,
            eta: model.eta() as u8,
            n_points: model.n_points() as u32,
            box_length: model.box_length(),
            time,
            state,
        }
    }

    /// Whether the snapshot was taken on the same grid as `model`.
    pub fn matches(&self, model: &GridModel) -> bool {
        self.dims as usize == model.dims()
            && self.eta as usize == model.eta()
            && self.n_points as usize == model.n_points()
            && self.box_length == model.box_length()
            && self.state.len() == model.dim()
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&[VERSION, self.dims, self.eta])?;
        w.write_all(&self.n_points.to_le_bytes())?;
        w.write_all(&self.box_length.to_le_bytes())?;
        w.write_all(&self.time.to_le_bytes())?;
        w.write_all(&(self.state.len() as u64).to_le_bytes())?;
        for z in &self.state {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let mut head = [0u8; 3];
        r.read_exact(&mut head)?;
        if head[0] != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {}", head[0])));
        }
        let n_points = u32::from_le_bytes(read_array(&mut r)?);
        let box_length = f64::from_le_bytes(read_array(&mut r)?);
        let time = f64::from_le_bytes(read_array(&mut r)?);
        let len = u64::from_le_bytes(read_array(&mut r)?);
        if len > super::MAX_DIM as u64 {
            return Err(Error::Checkpoint(format!("state length {len} too large")));
        }
        let mut state = Vec::with_capacity(len as usize);
        for _ in 0..len {
            let re = f64::from_le_bytes(read_array(&mut r)?);
            let im = f64::from_le_bytes(read_array(&mut r)?);
            state.push(Complex64::new(re, im));
        }
        Ok(Self {
            dims: head[1],
            eta: head[2],
            n_points,
            box_length,
            time,
            state,
        })
    }
}

fn read_array<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)
        .map_err(|e| Error::Checkpoint(format!("truncated checkpoint: {e}")))?;
    Ok(b)
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    ckpt.write_to(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let file = std::fs::File::open(path)?;
    Checkpoint::read_from(std::io::BufReader::new(file))
}
