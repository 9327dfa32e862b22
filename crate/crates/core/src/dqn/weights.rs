//! Versioned little-endian weight file.
//!
//! ```text
//! "SHDQ" | version: u16 | layers: u32 | (rows: u32, cols: u32) * layers |
//! per layer: rows*cols f64 weights (row-major), then rows f64 biases
//! ```

use std::fs;
use std::path::Path;

use super::network::{Layer, QNetwork};
use super::DqnError;

pub const MAGIC: &[u8; 4] = b"SHDQ";
pub const FORMAT_VERSION: u16 = 1;

pub fn to_bytes(net: &QNetwork) -> Vec<u8> {
    let layers = net.layers();
    let mut out = Vec::with_capacity(10 + 8 * layers.len() + 8 * net.parameter_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(layers.len() as u32).to_le_bytes());
    for l in layers {
        out.extend_from_slice(&(l.outputs as u32).to_le_bytes());
        out.extend_from_slice(&(l.inputs as u32).to_le_bytes());
    }
    for l in layers {
        for v in l.weights.iter().chain(&l.bias) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DqnError> {
        if self.buf.len() < n {
            return Err(DqnError::Format("weight file is truncated".into()));
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    fn u16(&mut self) -> Result<u16, DqnError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, DqnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, DqnError> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| DqnError::Format("layer too large".into()))?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<QNetwork, DqnError> {
    let mut r = Reader { buf: bytes };
    if r.take(4)? != MAGIC {
        return Err(DqnError::Format("bad magic bytes".into()));
    }
    let version = r.u16()?;
    if version != FORMAT_VERSION {
        return Err(DqnError::Format(format!("unsupported format version {version}")));
    }
    let count = r.u32()? as usize;
    if count == 0 || count > 64 {
        return Err(DqnError::Format(format!("implausible layer count {count}")));
    }
    let mut shapes = Vec::with_capacity(count);
    for _ in 0..count {
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        shapes.push((rows, cols));
    }
    let mut layers = Vec::with_capacity(count);
    for (rows, cols) in shapes {
        let weights = r.f64s(rows * cols)?;
        let bias = r.f64s(rows)?;
        layers.push(Layer { outputs: rows, inputs: cols, weights, bias });
    }
    if !r.buf.is_empty() {
        return Err(DqnError::Format(format!("{} trailing bytes", r.buf.len())));
    }
    QNetwork::from_layers(layers)
}

pub fn save_weights(net: &QNetwork, path: &Path) -> Result<(), DqnError> {
    fs::write(path, to_bytes(net))?;
    Ok(())
}

pub fn load_weights(path: &Path) -> Result<QNetwork, DqnError> {
    from_bytes(&fs::read(path)?)
}

/// Loads and checks the head size (5 for per-agent models, 25 for joint).
pub fn load_weights_with_outputs(path: &Path, outputs: usize) -> Result<QNetwork, DqnError> {
    let net = load_weights(path)?;
    if net.output_dim() != outputs {
        return Err(DqnError::Dimension(format!("expected {outputs} outputs, file has {}", net.output_dim())));
    }
    Ok(net)
}
