//! Precomputed table of `log J(k1, k2)` for `0 <= k1 <= k2 <= n_max`, where
//!
//! ```text
//! J(k1, k2) = ∫_0^1 x^k1 (x - 1) / (x^(k2 + 1) - 1) dx
//!           = ∫_0^1 x^k1 / (1 + x + ... + x^k2) dx.
//! ```
//!
//! For fixed `k2`, `J(., k2)` is the distribution of the number of membership
//! flips among `k2` nodes between consecutive layers: the integrands sum to
//! one pointwise, so the quadrature values sum to one up to rounding.
//!
//! Stored values are clamped from below: for each `k2`, every `k1` at or
//! beyond the first index with `J < exp(-16)` is set to `exp(-16)`. The
//! unclamped values stay available through [`JTable::raw_log`].
//!
//! # Cache layout
//!
//! Little-endian: magic `b"HCPJ"`, `u32` format version, `u32` `n_max`,
//! `u32` quadrature order, `f64` log floor, then `(n_max+1)(n_max+2)/2` `f64`
//! raw log values in `(k2, k1)` row-major order.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use super::quadrature::gauss_legendre_unit;
use crate::error::{Error, Result};

pub const DEFAULT_QUADRATURE_ORDER: usize = 64;
/// Natural log of the underflow floor `exp(-16)`.
pub const DEFAULT_LOG_FLOOR: f64 = -16.0;
/// Largest `n_max` accepted by [`JTable::build`] (about 400 MB of table).
pub const MAX_TABLE_NODES: usize = 5_000;

const CACHE_MAGIC: &[u8; 4] = b"HCPJ";
const CACHE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct JTable {
    n_max: usize,
    order: usize,
    log_floor: f64,
    raw: Vec<f64>,
    stored: Vec<f64>,
    floored: Vec<bool>,
}

#[inline]
fn index(k1: usize, k2: usize) -> usize {
    k2 * (k2 + 1) / 2 + k1
}

impl JTable {
    /// Table with the default quadrature order and floor.
    pub fn build(n_max: usize) -> Result<Self> {
        Self::build_with(n_max, DEFAULT_QUADRATURE_ORDER, DEFAULT_LOG_FLOOR)
    }

    pub fn build_with(n_max: usize, order: usize, log_floor: f64) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::Config("J table needs n_max >= 1".into()));
        }
        if n_max > MAX_TABLE_NODES {
            return Err(Error::Config(format!(
                "J table for n_max = {n_max} exceeds the memory budget ({MAX_TABLE_NODES})"
            )));
        }
        if order == 0 {
            return Err(Error::Config("quadrature order must be positive".into()));
        }
        let rule = gauss_legendre_unit(order);
        let mut raw = vec![0.0; index(n_max, n_max) + 1];
        // powers[q] holds x_q^k1 as k1 advances; denom[q] the geometric sum.
        let mut denom = vec![0.0; rule.len()];
        let mut powers = vec![0.0; rule.len()];
        for k2 in 0..=n_max {
            for (q, &(x, _)) in rule.iter().enumerate() {
                // Horner: 1 + x(1 + x(1 + ...)) with k2 multiplications.
                let mut s = 1.0;
                for _ in 0..k2 {
                    s = 1.0 + x * s;
                }
                denom[q] = s;
                powers[q] = 1.0;
            }
            for k1 in 0..=k2 {
                let mut acc = 0.0;
                for (q, &(x, w)) in rule.iter().enumerate() {
                    acc += w * powers[q] / denom[q];
                    powers[q] *= x;
                }
                raw[index(k1, k2)] = acc.ln();
            }
        }
        Ok(Self::from_raw(n_max, order, log_floor, raw))
    }

    fn from_raw(n_max: usize, order: usize, log_floor: f64, raw: Vec<f64>) -> Self {
        let mut stored = raw.clone();
        let mut floored = vec![false; raw.len()];
        for k2 in 0..=n_max {
            if let Some(cut) = (0..=k2).find(|&k1| raw[index(k1, k2)] < log_floor) {
                for k1 in cut..=k2 {
                    stored[index(k1, k2)] = log_floor;
                    floored[index(k1, k2)] = true;
                }
            }
        }
        // J(0,0) = 1 exactly; the integrand is identically one.
        stored[0] = 0.0;
        JTable {
            n_max,
            order,
            log_floor,
            raw,
            stored,
            floored,
        }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn quadrature_order(&self) -> usize {
        self.order
    }

    pub fn log_floor(&self) -> f64 {
        self.log_floor
    }

    /// Floored `log J(k1, k2)`, the value the sampler uses.
    #[inline]
    pub fn log_j(&self, k1: usize, k2: usize) -> f64 {
        debug_assert!(k1 <= k2 && k2 <= self.n_max, "J({k1},{k2}) outside table");
        self.stored[index(k1, k2)]
    }

    /// Quadrature value of `log J(k1, k2)` before flooring.
    pub fn raw_log(&self, k1: usize, k2: usize) -> f64 {
        if k1 == 0 && k2 == 0 {
            return 0.0;
        }
        self.raw[index(k1, k2)]
    }

    pub fn is_floored(&self, k1: usize, k2: usize) -> bool {
        self.floored[index(k1, k2)]
    }

    /// Range-checked lookup.
    pub fn get(&self, k1: usize, k2: usize) -> Result<f64> {
        if k2 > self.n_max {
            return Err(Error::Range {
                what: "J table column",
                value: k2,
                limit: self.n_max + 1,
            });
        }
        if k1 > k2 {
            return Err(Error::Range {
                what: "J table flip count",
                value: k1,
                limit: k2 + 1,
            });
        }
        Ok(self.log_j(k1, k2))
    }

    /// Loads a cached table from `dir` or builds and caches it. Cache misses,
    /// corrupt files and parameter mismatches all fall back to a rebuild.
    pub fn cached(dir: impl AsRef<Path>, n_max: usize) -> Result<Self> {
        let path = Self::cache_path(dir.as_ref(), n_max);
        if let Ok(table) = Self::read_cache(&path) {
            if table.n_max == n_max
                && table.order == DEFAULT_QUADRATURE_ORDER
                && table.log_floor == DEFAULT_LOG_FLOOR
            {
                return Ok(table);
            }
        }
        let table = Self::build(n_max)?;
        if let Err(e) = table.write_cache(&path) {
            log::warn!("could not write J table cache: {e}");
        }
        Ok(table)
    }

    fn cache_path(dir: &Path, n_max: usize) -> PathBuf {
        dir.join(format!(
            "jtable-v{CACHE_VERSION}-n{n_max}-q{DEFAULT_QUADRATURE_ORDER}.bin"
        ))
    }

    pub fn write_cache(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let mut buf = Vec::with_capacity(24 + 8 * self.raw.len());
        buf.extend_from_slice(CACHE_MAGIC);
        buf.extend_from_slice(&CACHE_VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.n_max as u32).to_le_bytes());
        buf.extend_from_slice(&(self.order as u32).to_le_bytes());
        buf.extend_from_slice(&self.log_floor.to_le_bytes());
        for v in &self.raw {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&buf).map_err(|e| Error::io(path, e))
    }

    pub fn read_cache(path: &Path) -> Result<Self> {
        let mut buf = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut buf))
            .map_err(|e| Error::io(path, e))?;
        let bad = |msg: &str| Error::Validation(format!("{}: {msg}", path.display()));
        if buf.len() < 24 || &buf[..4] != CACHE_MAGIC {
            return Err(bad("not a J table cache"));
        }
        let u32_at = |at: usize| u32::from_le_bytes(buf[at..at + 4].try_into().unwrap());
        if u32_at(4) != CACHE_VERSION {
            return Err(bad("cache version mismatch"));
        }
        let n_max = u32_at(8) as usize;
        let order = u32_at(12) as usize;
        let log_floor = f64::from_le_bytes(buf[16..24].try_into().unwrap());
        let len = index(n_max, n_max) + 1;
        if buf.len() != 24 + 8 * len {
            return Err(bad("truncated cache"));
        }
        let raw = buf[24..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self::from_raw(n_max, order, log_floor, raw))
    }
}
