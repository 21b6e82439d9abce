//! Binary dataset container plus JSON manifest.
//!
//! Layout (little-endian): magic `CFDS`, `u32` version, `u32` t_max, `u32`
//! feature count, `u64` example count, then per example a `u32` id length
//! and id bytes, `u8` society, `i32` as-of year, `i32` elected year
//! (`i32::MIN` when absent), `f64` label, `t_max` mask bytes and the
//! row-major `t_max × features` matrix as `f64`.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::build::{Mode, SequenceExample};
use crate::data::{Society, Year};
use crate::error::{Error, Result};
use crate::factors::FACTOR_DIM;
use crate::tensor::Tensor;

const MAGIC: &[u8; 4] = b"CFDS";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub mode: Mode,
    pub cy: Option<Year>,
    pub seed: u64,
    pub t_max: usize,
    pub examples: usize,
    pub positives: usize,
    pub scholars: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub society: Option<String>,
}

impl DatasetManifest {
    pub fn describe(
        examples: &[SequenceExample],
        mode: Mode,
        cy: Option<Year>,
        seed: u64,
        t_max: usize,
        society: Option<Society>,
    ) -> Self {
        let mut ids: Vec<&str> = examples.iter().map(|e| e.scholar_id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        DatasetManifest {
            mode,
            cy,
            seed,
            t_max,
            examples: examples.len(),
            positives: match mode {
                Mode::Classification => examples.iter().filter(|e| e.label > 0.5).count(),
                Mode::Regression => 0,
            },
            scholars: ids.len(),
            society: society.map(|s| s.label().to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoredDataset {
    pub t_max: usize,
    pub examples: Vec<SequenceExample>,
}

fn society_code(s: Society) -> u8 {
    match s {
        Society::Acm => 0,
        Society::Ieee => 1,
        Society::Non => 2,
    }
}

fn society_from(code: u8) -> Result<Society> {
    Ok(match code {
        0 => Society::Acm,
        1 => Society::Ieee,
        2 => Society::Non,
        _ => return Err(Error::Format(format!("bad society code {code}"))),
    })
}

pub fn write_dataset(mut w: impl Write, t_max: usize, examples: &[SequenceExample]) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(t_max as u32).to_le_bytes())?;
    w.write_all(&(FACTOR_DIM as u32).to_le_bytes())?;
    w.write_all(&(examples.len() as u64).to_le_bytes())?;
    for e in examples {
        if e.matrix.shape() != [t_max, FACTOR_DIM] {
            return Err(Error::Config(format!(
                "example {} has shape {:?}",
                e.scholar_id,
                e.matrix.shape()
            )));
        }
        w.write_all(&(e.scholar_id.len() as u32).to_le_bytes())?;
        w.write_all(e.scholar_id.as_bytes())?;
        w.write_all(&[society_code(e.society)])?;
        w.write_all(&e.as_of_year.to_le_bytes())?;
        w.write_all(&e.elected_year.unwrap_or(i32::MIN).to_le_bytes())?;
        w.write_all(&e.label.to_le_bytes())?;
        let mask: Vec<u8> = e.mask.iter().map(|&m| u8::from(m)).collect();
        w.write_all(&mask)?;
        for v in e.matrix.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn take<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated dataset: {e}")))?;
    Ok(buf)
}

fn take_vec(r: &mut impl Read, n: usize) -> Result<Vec<u8>> {
    let mut buf = vec![0u8; n];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated dataset: {e}")))?;
    Ok(buf)
}

pub fn read_dataset(mut r: impl Read) -> Result<StoredDataset> {
    if &take::<4>(&mut r)? != MAGIC {
        return Err(Error::Format("not a dataset container (bad magic)".into()));
    }
    let version = u32::from_le_bytes(take(&mut r)?);
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported dataset version {version}"
        )));
    }
    let t_max = u32::from_le_bytes(take(&mut r)?) as usize;
    let features = u32::from_le_bytes(take(&mut r)?) as usize;
    if features != FACTOR_DIM {
        return Err(Error::Format(format!(
            "expected {FACTOR_DIM} features, found {features}"
        )));
    }
    let count = u64::from_le_bytes(take(&mut r)?) as usize;
    let mut examples = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let n = u32::from_le_bytes(take(&mut r)?) as usize;
        let scholar_id = String::from_utf8(take_vec(&mut r, n)?)
            .map_err(|_| Error::Format("id is not UTF-8".into()))?;
        let society = society_from(take::<1>(&mut r)?[0])?;
        let as_of_year = i32::from_le_bytes(take(&mut r)?);
        let elected = i32::from_le_bytes(take(&mut r)?);
        let label = f64::from_le_bytes(take(&mut r)?);
        let mask = take_vec(&mut r, t_max)?
            .into_iter()
            .map(|b| b != 0)
            .collect();
        let data = (0..t_max * FACTOR_DIM)
            .map(|_| Ok(f64::from_le_bytes(take(&mut r)?)))
            .collect::<Result<Vec<_>>>()?;
        examples.push(SequenceExample {
            scholar_id,
            society,
            elected_year: (elected != i32::MIN).then_some(elected),
            as_of_year,
            matrix: Tensor::matrix(t_max, FACTOR_DIM, data),
            mask,
            label,
            graphs: None,
        });
    }
    Ok(StoredDataset { t_max, examples })
}

impl StoredDataset {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        write_dataset(&mut buf, self.t_max, &self.examples)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_dataset(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let e = SequenceExample {
            scholar_id: "s1".into(),
            society: Society::Acm,
            elected_year: Some(2010),
            as_of_year: 2005,
            matrix: Tensor::from_fn(3, FACTOR_DIM, |r, c| (r * 100 + c) as f64 * 0.5),
            mask: vec![false, true, true],
            label: 5.0,
            graphs: None,
        };
        let mut f = e.clone();
        f.scholar_id = "s2".into();
        f.elected_year = None;
        f.society = Society::Non;
        let stored = StoredDataset {
            t_max: 3,
            examples: vec![e, f],
        };
        let mut buf = Vec::new();
        write_dataset(&mut buf, 3, &stored.examples).unwrap();
        assert_eq!(read_dataset(buf.as_slice()).unwrap(), stored);
        buf.truncate(buf.len() - 1);
        assert!(matches!(
            read_dataset(buf.as_slice()),
            Err(Error::Format(_))
        ));
    }
}
