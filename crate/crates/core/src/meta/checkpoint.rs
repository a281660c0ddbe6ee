//! A self-describing binary container of named `f64` arrays.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic "VSCKPT\0\0" | version u32 | entry count u32
//! per entry: name length u32 | name (UTF-8) | ndim u32 | dims u64 * ndim | data f64 * prod(dims)
//! ```

use std::io::{Read, Write};

use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"VSCKPT\0\0";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointEntry {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Checkpoint {
    entries: Vec<CheckpointEntry>,
}

impl Checkpoint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[CheckpointEntry] {
        &self.entries
    }

    pub fn push(&mut self, name: impl Into<String>, dims: Vec<usize>, data: Vec<f64>) {
        debug_assert_eq!(dims.iter().product::<usize>(), data.len());
        self.entries.push(CheckpointEntry {
            name: name.into(),
            dims,
            data,
        });
    }

    pub fn get(&self, name: &str) -> Option<&CheckpointEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Entry `name`, or a format error naming it.
    pub fn require(&self, name: &str) -> Result<&CheckpointEntry> {
        self.get(name)
            .ok_or_else(|| Error::format("checkpoint", format!("missing entry `{name}`")))
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        out.write_all(&(self.entries.len() as u32).to_le_bytes())?;
        for e in &self.entries {
            out.write_all(&(e.name.len() as u32).to_le_bytes())?;
            out.write_all(e.name.as_bytes())?;
            out.write_all(&(e.dims.len() as u32).to_le_bytes())?;
            for &d in &e.dims {
                out.write_all(&(d as u64).to_le_bytes())?;
            }
            for &v in &e.data {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)
            .expect("writing to a Vec cannot fail");
        buf
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        read_exact(&mut input, &mut magic)?;
        if &magic != MAGIC {
            return Err(Error::format("checkpoint", "bad magic"));
        }
        let version = read_u32(&mut input)?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::format(
                "checkpoint",
                format!("unsupported version {version}"),
            ));
        }
        let count = read_u32(&mut input)?;
        let mut entries = Vec::new();
        for _ in 0..count {
            let name_len = read_u32(&mut input)? as usize;
            let mut name = vec![0u8; name_len];
            read_exact(&mut input, &mut name)?;
            let name = String::from_utf8(name)
                .map_err(|_| Error::format("checkpoint", "entry name is not UTF-8"))?;
            let ndim = read_u32(&mut input)? as usize;
            let mut dims = Vec::with_capacity(ndim);
            for _ in 0..ndim {
                let mut b = [0u8; 8];
                read_exact(&mut input, &mut b)?;
                dims.push(u64::from_le_bytes(b) as usize);
            }
            let len = dims
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .ok_or_else(|| Error::format("checkpoint", format!("`{name}` is too large")))?;
            let mut data = Vec::with_capacity(len.min(1 << 24));
            for _ in 0..len {
                let mut b = [0u8; 8];
                read_exact(&mut input, &mut b)?;
                data.push(f64::from_le_bytes(b));
            }
            entries.push(CheckpointEntry { name, dims, data });
        }
        let mut trailing = [0u8; 1];
        if input.read(&mut trailing)? != 0 {
            return Err(Error::format("checkpoint", "trailing bytes"));
        }
        Ok(Self { entries })
    }
}

fn read_exact<R: Read>(input: &mut R, buf: &mut [u8]) -> Result<()> {
    input.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::format("checkpoint", "truncated")
        } else {
            Error::Io(e)
        }
    })
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(input, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let mut c = Checkpoint::new();
        c.push(
            "theta.layer0.weight",
            vec![2, 3],
            vec![1.0, -2.5, 0.0, 1e-300, f64::MAX, 3.25],
        );
        c.push("adam.step", vec![1], vec![7.0]);
        c.push("empty", vec![0], vec![]);
        c
    }

    #[test]
    fn round_trip() {
        let c = sample();
        let back = Checkpoint::read_from(c.to_bytes().as_slice()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn truncation_is_detected() {
        let bytes = sample().to_bytes();
        for cut in [0, 5, 12, bytes.len() - 1] {
            let err = Checkpoint::read_from(&bytes[..cut]).unwrap_err();
            assert!(err.to_string().contains("truncated"), "{err}");
        }
    }

    #[test]
    fn wrong_version_is_rejected() {
        let mut bytes = sample().to_bytes();
        bytes[8] = 99;
        assert!(Checkpoint::read_from(bytes.as_slice()).is_err());
        bytes[0] = b'X';
        assert!(Checkpoint::read_from(bytes.as_slice()).is_err());
    }

    #[test]
    fn missing_entry_is_named() {
        let err = sample().require("policy.beta_raw").unwrap_err();
        assert!(err.to_string().contains("policy.beta_raw"));
    }
}
