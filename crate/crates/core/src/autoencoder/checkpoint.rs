//! Binary autoencoder checkpoints (little-endian throughout).
//!
//! ```text
//! "DCAE" | u32 version
//! u64 input_dim | u64 n_hidden | n_hidden x u64 width | u64 latent
//! u8 activation (0 relu, 1 sigmoid, 2 linear) | u64 epochs | f64 lr | u64 seed
//! u64 batch_size (0 = full batch)
//! u64 tensor count, then per tensor: u64 rows | u64 cols | rows*cols x f64
//! ```
//!
//! Tensors follow encoder then decoder order, weights before bias per layer.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{init_params, AEConfig, AutoencoderParams};
use crate::error::{Error, Result};
use crate::numeric::{Activation, ParamTensors};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"DCAE";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn save_checkpoint(path: impl AsRef<Path>, config: &AEConfig, params: &AutoencoderParams) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut buf: Vec<u8> = Vec::new();
    let u64le = |b: &mut Vec<u8>, v: usize| b.extend_from_slice(&(v as u64).to_le_bytes());
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    u64le(&mut buf, config.input_dim);
    u64le(&mut buf, config.hidden.len());
    for &h in &config.hidden {
        u64le(&mut buf, h);
    }
    u64le(&mut buf, config.latent);
    buf.push(match config.activation {
        Activation::Relu => 0,
        Activation::Sigmoid => 1,
        Activation::Linear => 2,
    });
    u64le(&mut buf, config.epochs);
    buf.extend_from_slice(&config.lr.to_le_bytes());
    buf.extend_from_slice(&config.seed.to_le_bytes());
    u64le(&mut buf, config.batch_size.unwrap_or(0));
    let tensors = params.tensors();
    u64le(&mut buf, tensors.len());
    for t in tensors {
        u64le(&mut buf, t.rows());
        u64le(&mut buf, t.cols());
        for v in t.as_slice() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    w.write_all(&buf).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    path: &'a Path,
    r: BufReader<File>,
}

impl Cursor<'_> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.r.read_exact(&mut b).map_err(|e| Error::io(self.path, e))?;
        Ok(b)
    }

    fn u64(&mut self) -> Result<usize> {
        Ok(u64::from_le_bytes(self.bytes()?) as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(AEConfig, AutoencoderParams)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut c = Cursor {
        path,
        r: BufReader::new(file),
    };
    let bad = |detail: &str| Error::parse(path, 0, detail.to_string());
    if &c.bytes::<4>()? != CHECKPOINT_MAGIC {
        return Err(bad("missing DCAE magic"));
    }
    let version = u32::from_le_bytes(c.bytes()?);
    if version != CHECKPOINT_VERSION {
        return Err(bad(&format!("unsupported checkpoint version {version}")));
    }
    let input_dim = c.u64()?;
    let n_hidden = c.u64()?;
    if n_hidden > 64 {
        return Err(bad("implausible hidden layer count"));
    }
    let hidden = (0..n_hidden).map(|_| c.u64()).collect::<Result<Vec<_>>>()?;
    let latent = c.u64()?;
    let activation = match c.bytes::<1>()?[0] {
        0 => Activation::Relu,
        1 => Activation::Sigmoid,
        2 => Activation::Linear,
        other => return Err(bad(&format!("unknown activation code {other}"))),
    };
    let epochs = c.u64()?;
    let lr = c.f64()?;
    let seed = u64::from_le_bytes(c.bytes()?);
    let batch = c.u64()?;
    let config = AEConfig {
        input_dim,
        hidden,
        latent,
        activation,
        epochs,
        lr,
        seed,
        batch_size: (batch > 0).then_some(batch),
    };
    let mut params = init_params(&config)?;
    let count = c.u64()?;
    let mut tensors = params.tensors_mut();
    if count != tensors.len() {
        return Err(bad(&format!("expected {} tensors, found {count}", tensors.len())));
    }
    for t in tensors.iter_mut() {
        let (rows, cols) = (c.u64()?, c.u64()?);
        if (rows, cols) != t.shape() {
            return Err(bad(&format!("tensor shape {rows}x{cols} does not match {:?}", t.shape())));
        }
        for v in t.as_mut_slice() {
            *v = c.f64()?;
            if !v.is_finite() {
                return Err(bad("non-finite parameter"));
            }
        }
    }
    Ok((config, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autoencoder::pretrain;
    use crate::numeric::Matrix;

    #[test]
    fn round_trip_is_bitwise() {
        let cfg = AEConfig {
            hidden: vec![5, 4],
            latent: 2,
            epochs: 2,
            batch_size: Some(3),
            activation: Activation::Sigmoid,
            ..AEConfig::new(3, 17)
        };
        let x = Matrix::from_fn(6, 3, |i, j| (i * 3 + j) as f64 * 0.1);
        let trained = pretrain(&x, &cfg).unwrap().params;
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ae.bin");
        save_checkpoint(&p, &cfg, &trained).unwrap();
        let (cfg2, params2) = load_checkpoint(&p).unwrap();
        assert_eq!(cfg2, cfg);
        assert_eq!(params2, trained);
    }

    #[test]
    fn truncated_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ae.bin");
        std::fs::write(&p, b"DCAE\x01\x00").unwrap();
        assert!(load_checkpoint(&p).is_err());
        std::fs::write(&p, b"NOPE\x01\x00\x00\x00").unwrap();
        assert!(load_checkpoint(&p).is_err());
    }
}
