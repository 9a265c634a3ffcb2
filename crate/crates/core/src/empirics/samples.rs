use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::StepDf;
use crate::error::{Error, Result};
use crate::models::hex_prefix;

/// Where a sample matrix came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub model_id: String,
    pub start: String,
    pub root_seed: u64,
}

/// Running maxima of `replicas` independent trajectories, one column per checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct MaxSampleMatrix {
    checkpoints: Vec<u64>,
    replicas: usize,
    values: Vec<f64>,
    provenance: Provenance,
}

impl MaxSampleMatrix {
    pub fn from_rows(checkpoints: Vec<u64>, rows: Vec<Vec<f64>>, provenance: Provenance) -> Result<Self> {
        let k = checkpoints.len();
        let mut values = Vec::with_capacity(rows.len() * k);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::Contract(format!("replica {r} has {} values, expected {k}", row.len())));
            }
            if row.windows(2).any(|w| !(w[0] <= w[1])) {
                return Err(Error::Contract(format!("replica {r} running maxima decrease")));
            }
            values.extend_from_slice(row);
        }
        Self::from_flat(checkpoints, rows.len(), values, provenance)
    }

    fn from_flat(checkpoints: Vec<u64>, replicas: usize, values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        crate::models::validate_checkpoints(&checkpoints)?;
        if replicas == 0 {
            return Err(Error::Contract("sample matrix needs at least one replica".into()));
        }
        if values.len() != replicas * checkpoints.len() {
            return Err(Error::Contract("sample matrix shape mismatch".into()));
        }
        Ok(MaxSampleMatrix { checkpoints, replicas, values, provenance })
    }

    pub fn checkpoints(&self) -> &[u64] {
        &self.checkpoints
    }

    pub fn replicas(&self) -> usize {
        self.replicas
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let k = self.checkpoints.len();
        &self.values[r * k..(r + 1) * k]
    }

    /// Column index of horizon `n`, if it was simulated.
    pub fn index_of(&self, n: u64) -> Option<usize> {
        self.checkpoints.binary_search(&n).ok()
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        let width = self.checkpoints.len();
        (0..self.replicas).map(|r| self.values[r * width + k]).collect()
    }

    pub fn sorted_column(&self, k: usize) -> Vec<f64> {
        let mut c = self.column(k);
        c.sort_by(f64::total_cmp);
        c
    }

    /// Empirical df of `M_n` at checkpoint index `k`: a jump of `1/R` per sample.
    pub fn empirical_max_df(&self, k: usize) -> Result<StepDf> {
        if k >= self.checkpoints.len() {
            return Err(Error::Contract(format!(
                "checkpoint index {k} out of range for {} checkpoints",
                self.checkpoints.len()
            )));
        }
        StepDf::from_sorted(&self.sorted_column(k))
    }

    /// Fraction of replicas with `M_n <= x` at checkpoint index `k`.
    pub fn fraction_at_most(&self, k: usize, x: f64) -> f64 {
        let width = self.checkpoints.len();
        let hits = (0..self.replicas).filter(|r| self.values[r * width + k] <= x).count();
        hits as f64 / self.replicas as f64
    }

    /// Long-format CSV `replica,checkpoint,max_value`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "replica,checkpoint,max_value")?;
        for r in 0..self.replicas {
            for (n, v) in self.checkpoints.iter().zip(self.row(r)) {
                writeln!(out, "{r},{n},{}", crate::experiment::fmt_float(*v))?;
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R, provenance: Provenance) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut checkpoints: Vec<u64> = Vec::new();
        for (i, line) in input.lines().enumerate().skip(1) {
            let line = line?;
            let parse_err = || Error::Parse(format!("line {}: {line}", i + 1));
            let mut parts = line.split(',');
            let r: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(parse_err)?;
            let n: u64 = parts.next().and_then(|s| s.parse().ok()).ok_or_else(parse_err)?;
            let v: f64 = parts.next().and_then(|s| s.parse().ok()).ok_or_else(parse_err)?;
            if r == rows.len() {
                rows.push(Vec::new());
            } else if r + 1 != rows.len() {
                return Err(parse_err());
            }
            if r == 0 {
                checkpoints.push(n);
            } else if checkpoints.get(rows[r].len()) != Some(&n) {
                return Err(parse_err());
            }
            rows[r].push(v);
        }
        Self::from_rows(checkpoints, rows, provenance)
    }

    const MAGIC: &'static [u8; 8] = b"PHMAXv1\0";

    /// Compact little-endian binary form used by [`SampleCache`].
    pub fn to_bytes(&self) -> Vec<u8> {
        let prov = serde_json::to_vec(&self.provenance).expect("provenance serializes");
        let mut out = Vec::with_capacity(32 + prov.len() + 8 * (self.checkpoints.len() + self.values.len()));
        out.extend_from_slice(Self::MAGIC);
        out.extend_from_slice(&(prov.len() as u64).to_le_bytes());
        out.extend_from_slice(&prov);
        out.extend_from_slice(&(self.replicas as u64).to_le_bytes());
        out.extend_from_slice(&(self.checkpoints.len() as u64).to_le_bytes());
        self.checkpoints.iter().for_each(|n| out.extend_from_slice(&n.to_le_bytes()));
        self.values.iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes()));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = bytes;
        let mut take = |len: usize| -> Result<&[u8]> {
            if cur.len() < len {
                return Err(Error::Parse("truncated sample cache".into()));
            }
            let (head, tail) = cur.split_at(len);
            cur = tail;
            Ok(head)
        };
        if take(8)? != Self::MAGIC {
            return Err(Error::Parse("not a sample cache file".into()));
        }
        let word = |b: &[u8]| u64::from_le_bytes(b.try_into().expect("8 bytes"));
        let prov_len = word(take(8)?) as usize;
        let provenance: Provenance =
            serde_json::from_slice(take(prov_len)?).map_err(|e| Error::Parse(e.to_string()))?;
        let replicas = word(take(8)?) as usize;
        let k = word(take(8)?) as usize;
        let checkpoints = (0..k).map(|_| take(8).map(word)).collect::<Result<Vec<_>>>()?;
        let values = (0..replicas * k)
            .map(|_| take(8).map(|b| f64::from_bits(word(b))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_flat(checkpoints, replicas, values, provenance)
    }
}

/// Directory-backed cache of sample matrices keyed by model, start, seed,
/// replica count and checkpoint grid.
#[derive(Clone, Debug)]
pub struct SampleCache {
    dir: PathBuf,
}

impl SampleCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        SampleCache { dir: dir.into() }
    }

    pub fn key(provenance: &Provenance, replicas: usize, checkpoints: &[u64]) -> String {
        let mut h = Sha256::new();
        checkpoints.iter().for_each(|n| h.update(n.to_le_bytes()));
        let grid = hex_prefix(&h.finalize(), 8);
        format!(
            "{}-{}-{}-r{replicas}-{grid}",
            provenance.model_id,
            sanitize(&provenance.start),
            provenance.root_seed
        )
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.bin"))
    }

    pub fn load(&self, provenance: &Provenance, replicas: usize, checkpoints: &[u64]) -> Result<Option<MaxSampleMatrix>> {
        let path = self.path(&Self::key(provenance, replicas, checkpoints));
        match fs::read(&path) {
            Ok(bytes) => MaxSampleMatrix::from_bytes(&bytes).map(Some),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    pub fn store(&self, m: &MaxSampleMatrix) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let path = self.path(&Self::key(&m.provenance, m.replicas, &m.checkpoints));
        write_atomic(&path, &m.to_bytes())?;
        Ok(path)
    }
}

fn sanitize(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' }).collect()
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(tmp, path)?;
    Ok(())
}
