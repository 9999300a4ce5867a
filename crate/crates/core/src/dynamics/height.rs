use std::io::Write;

use super::config::ParticleConfig;
use crate::error::{Error, Result};

/// Height function `h(x, m)` tabulated on `x_lo..=x_hi` for every level.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightField {
    x_lo: i64,
    x_hi: i64,
    levels: usize,
    values: Vec<u32>,
}

impl HeightField {
    pub fn from_config(cfg: &ParticleConfig, x_lo: i64, x_hi: i64) -> Result<Self> {
        if x_hi < x_lo {
            return Err(Error::invalid(format!("empty x range {x_lo}..={x_hi}")));
        }
        let width = (x_hi - x_lo + 1) as usize;
        let mut values = Vec::with_capacity(width * cfg.levels());
        for row in cfg.rows() {
            // walk the row once: h drops by one just right of each particle
            let mut next = 0;
            for x in x_lo..=x_hi {
                while next < row.len() && row[next] < x {
                    next += 1;
                }
                values.push((row.len() - next) as u32);
            }
        }
        Ok(Self { x_lo, x_hi, levels: cfg.levels(), values })
    }

    /// Smallest window containing every particle with one free site on each side.
    pub fn covering(cfg: &ParticleConfig) -> Self {
        let lo = cfg.rows().map(|r| r[0]).min().unwrap_or(0) - 1;
        let hi = cfg.rows().map(|r| r[r.len() - 1]).max().unwrap_or(0) + 1;
        Self::from_config(cfg, lo, hi).expect("non-empty range")
    }

    pub fn x_range(&self) -> (i64, i64) {
        (self.x_lo, self.x_hi)
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn get(&self, x: i64, m: usize) -> Option<u32> {
        if x < self.x_lo || x > self.x_hi || m == 0 || m > self.levels {
            return None;
        }
        let width = (self.x_hi - self.x_lo + 1) as usize;
        Some(self.values[(m - 1) * width + (x - self.x_lo) as usize])
    }

    /// Recovers particle rows: a particle sits wherever `h(x) - h(x+1) = 1`.
    /// Fails unless the window covers all particles with a free site to the right.
    pub fn to_rows(&self) -> Result<Vec<Vec<i64>>> {
        let mut rows = Vec::with_capacity(self.levels);
        for m in 1..=self.levels {
            if self.get(self.x_lo, m) != Some(m as u32) || self.get(self.x_hi, m) != Some(0) {
                return Err(Error::invalid(format!("window does not cover level {m}")));
            }
            let mut row = Vec::with_capacity(m);
            for x in self.x_lo..self.x_hi {
                let (a, b) = (self.get(x, m).unwrap(), self.get(x + 1, m).unwrap());
                match a.checked_sub(b) {
                    Some(0) => {}
                    Some(1) => row.push(x),
                    _ => return Err(Error::invalid(format!("height not a unit-step staircase at ({x}, {m})"))),
                }
            }
            rows.push(row);
        }
        Ok(rows)
    }

    /// CSV with header `x,m,h`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,m,h")?;
        for m in 1..=self.levels {
            for x in self.x_lo..=self.x_hi {
                writeln!(out, "{},{},{}", x, m, self.get(x, m).unwrap())?;
            }
        }
        Ok(())
    }
}
