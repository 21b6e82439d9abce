//! Binary parameter checkpoints.
//!
//! Layout (little-endian): magic `CFCK`, `u32` version, `u64` length plus
//! UTF-8 JSON model config, `u32` tensor count, then per tensor a `u32`
//! name length, the name, a `u32` rank, `u64` dims and `f64` values.

use std::io::{Read, Write};
use std::path::Path;

use super::model::{CareerModel, ModelConfig};
use super::params::ParamStore;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

const MAGIC: &[u8; 4] = b"CFCK";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn write_checkpoint<T: Scalar>(model: &CareerModel<T>, mut w: impl Write) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    let cfg = serde_json::to_vec(model.config())?;
    w.write_all(&(cfg.len() as u64).to_le_bytes())?;
    w.write_all(&cfg)?;
    w.write_all(&(model.params().len() as u32).to_le_bytes())?;
    for (_, name, t) in model.params().iter() {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&(t.shape().len() as u32).to_le_bytes())?;
        for &d in t.shape() {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for v in t.data() {
            w.write_all(&v.as_f64().to_le_bytes())?;
        }
    }
    Ok(())
}

fn take<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated checkpoint: {e}")))?;
    Ok(buf)
}

fn take_vec(r: &mut impl Read, len: usize) -> Result<Vec<u8>> {
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated checkpoint: {e}")))?;
    Ok(buf)
}

pub fn read_checkpoint<T: Scalar>(mut r: impl Read) -> Result<CareerModel<T>> {
    if &take::<4>(&mut r)? != MAGIC {
        return Err(Error::Format("not a checkpoint (bad magic)".into()));
    }
    let version = u32::from_le_bytes(take(&mut r)?);
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let cfg_len = u64::from_le_bytes(take(&mut r)?) as usize;
    let config: ModelConfig = serde_json::from_slice(&take_vec(&mut r, cfg_len)?)?;
    let count = u32::from_le_bytes(take(&mut r)?);
    let mut store = ParamStore::new();
    for _ in 0..count {
        let name_len = u32::from_le_bytes(take(&mut r)?) as usize;
        let name = String::from_utf8(take_vec(&mut r, name_len)?)
            .map_err(|_| Error::Format("parameter name is not UTF-8".into()))?;
        let rank = u32::from_le_bytes(take(&mut r)?) as usize;
        let shape = (0..rank)
            .map(|_| Ok(u64::from_le_bytes(take(&mut r)?) as usize))
            .collect::<Result<Vec<_>>>()?;
        let n: usize = shape.iter().product();
        let data = (0..n)
            .map(|_| Ok(T::lit(f64::from_le_bytes(take(&mut r)?))))
            .collect::<Result<Vec<_>>>()?;
        store.add(name, Tensor::from_vec(&shape, data));
    }
    CareerModel::from_params(config, store)
}

pub fn save_checkpoint<T: Scalar>(model: &CareerModel<T>, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_checkpoint(model, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<CareerModel<T>> {
    read_checkpoint(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::model::HeadType;

    #[test]
    fn round_trip() {
        let cfg = ModelConfig {
            n_layers: 1,
            t_max: 3,
            ..ModelConfig::for_head(HeadType::Regression)
        };
        let model = CareerModel::<f64>::new(cfg).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&model, &mut buf).unwrap();
        let back: CareerModel<f64> = read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(back.params(), model.params());
        assert_eq!(back.config(), model.config());
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(
            read_checkpoint::<f64>(&b"XXXX"[..]),
            Err(Error::Format(_))
        ));
        let model = CareerModel::<f64>::new(ModelConfig {
            n_layers: 1,
            t_max: 2,
            ..ModelConfig::default()
        })
        .unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&model, &mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(
            read_checkpoint::<f64>(buf.as_slice()),
            Err(Error::Format(_))
        ));
    }
}
