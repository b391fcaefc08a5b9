//! Weight container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic      8 bytes  "FRAGRAG\0"
//! version    u32      1
//! header_len u32
//! header     JSON     {"kind", "meta", "tensors": [{"name", "rows", "cols"}]}
//! data       f32 × Σ rows·cols, tensors in header order, row-major
//! ```
//!
//! Tensors are matched by name on load; a missing name or a shape mismatch
//! is an error.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LmError, Result};
use crate::mat::Mat;
use crate::nn::Params;

pub const MAGIC: &[u8; 8] = b"FRAGRAG\0";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TensorInfo {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    kind: String,
    meta: serde_json::Value,
    tensors: Vec<TensorInfo>,
}

pub struct Checkpoint {
    pub kind: String,
    pub meta: serde_json::Value,
    pub tensors: HashMap<String, Mat<f32>>,
}

pub fn write_checkpoint<W: Write>(
    mut w: W,
    kind: &str,
    meta: serde_json::Value,
    params: &impl Params<f32>,
) -> Result<()> {
    let named = params.named();
    let header = Header {
        kind: kind.to_string(),
        meta,
        tensors: named
            .iter()
            .map(|(n, m)| TensorInfo {
                name: n.clone(),
                rows: m.rows,
                cols: m.cols,
            })
            .collect(),
    };
    let header = serde_json::to_vec(&header).map_err(|e| LmError::Checkpoint(e.to_string()))?;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(header.len() as u32).to_le_bytes())?;
    w.write_all(&header)?;
    for (_, m) in named {
        let mut buf = Vec::with_capacity(m.len() * 4);
        for v in &m.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Checkpoint> {
    let bad = |m: &str| LmError::Checkpoint(m.to_string());
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| bad("truncated magic"))?;
    if &magic != MAGIC {
        return Err(bad("not a checkpoint (bad magic)"));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != VERSION {
        return Err(LmError::Checkpoint(format!("unsupported version {version}")));
    }
    r.read_exact(&mut word)?;
    let mut header = vec![0u8; u32::from_le_bytes(word) as usize];
    r.read_exact(&mut header).map_err(|_| bad("truncated header"))?;
    let header: Header = serde_json::from_slice(&header).map_err(|e| LmError::Checkpoint(e.to_string()))?;
    let mut tensors = HashMap::new();
    for t in header.tensors {
        let mut buf = vec![0u8; t.rows * t.cols * 4];
        r.read_exact(&mut buf)
            .map_err(|_| LmError::Checkpoint(format!("truncated data for {}", t.name)))?;
        let data = buf
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        tensors.insert(t.name, Mat::from_vec(t.rows, t.cols, data));
    }
    Ok(Checkpoint {
        kind: header.kind,
        meta: header.meta,
        tensors,
    })
}

impl Checkpoint {
    pub fn save(path: &Path, kind: &str, meta: serde_json::Value, params: &impl Params<f32>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        write_checkpoint(std::io::BufWriter::new(f), kind, meta, params)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        read_checkpoint(std::io::BufReader::new(f))
    }

    pub fn expect_kind(&self, kind: &str) -> Result<()> {
        if self.kind != kind {
            return Err(LmError::Checkpoint(format!(
                "expected a {kind} checkpoint, found {}",
                self.kind
            )));
        }
        Ok(())
    }

    /// Copies every tensor of `params` from this checkpoint by name.
    pub fn fill(&self, params: &mut impl Params<f32>) -> Result<()> {
        let mut err = None;
        params.visit_mut("", &mut |name, m| {
            if err.is_some() {
                return;
            }
            match self.tensors.get(&name) {
                Some(t) if (t.rows, t.cols) == (m.rows, m.cols) => m.data.copy_from_slice(&t.data),
                Some(t) => {
                    err = Some(LmError::Checkpoint(format!(
                        "{name}: stored {}x{}, expected {}x{}",
                        t.rows, t.cols, m.rows, m.cols
                    )))
                }
                None => err = Some(LmError::Checkpoint(format!("missing tensor {name}"))),
            }
        });
        err.map_or(Ok(()), Err)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Linear;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let lin = Linear::<f32>::new(3, 5, 1.0, &mut rng);
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, "linear", serde_json::json!({"x": 1}), &lin).unwrap();
        assert_eq!(&buf[..8], MAGIC);
        let ck = read_checkpoint(&buf[..]).unwrap();
        assert_eq!(ck.meta["x"], 1);
        let mut back = Linear::<f32>::zeros(3, 5);
        ck.fill(&mut back).unwrap();
        assert_eq!(back, lin);
        assert!(ck.expect_kind("backbone").is_err());
    }

    #[test]
    fn rejects_corruption() {
        let lin = Linear::<f32>::zeros(2, 2);
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, "linear", serde_json::Value::Null, &lin).unwrap();
        assert!(read_checkpoint(&buf[..buf.len() - 1]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_checkpoint(&bad[..]).is_err());
        let ck = read_checkpoint(&buf[..]).unwrap();
        assert!(ck.fill(&mut Linear::<f32>::zeros(2, 3)).is_err());
    }
}
