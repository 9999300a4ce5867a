use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Interlaced particle positions for levels `1..=levels`, stored row by row.
///
/// Row `m` holds `m` strictly increasing positions. Levels `1..=m0` jump at
/// `rate_slow`, levels above `m0` at `rate_fast`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ConfigSnapshot", try_from = "ConfigSnapshot")]
pub struct ParticleConfig {
    positions: Vec<i64>,
    levels: usize,
    m0: usize,
    rate_slow: f64,
    rate_fast: f64,
    clock: f64,
}

/// On-disk form of a [`ParticleConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigSnapshot {
    pub clock: f64,
    pub m0: usize,
    pub rate_slow: f64,
    pub rate_fast: f64,
    pub levels: Vec<Vec<i64>>,
}

/// Result of a single jump attempt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum JumpOutcome {
    Blocked,
    /// Particles displaced by +1, initiator first, on consecutive levels.
    Moved(Vec<(usize, usize)>),
}

impl JumpOutcome {
    pub fn is_blocked(&self) -> bool {
        matches!(self, JumpOutcome::Blocked)
    }

    pub fn moved_chain(&self) -> &[(usize, usize)] {
        match self {
            JumpOutcome::Blocked => &[],
            JumpOutcome::Moved(chain) => chain,
        }
    }
}

#[inline]
pub(crate) fn row_offset(m: usize) -> usize {
    m * (m - 1) / 2
}

impl ParticleConfig {
    /// Densely packed start: row `m` is `[-m, ..., -1]`, clock 0, rates (1, 2).
    pub fn init_packed(levels: usize, m0: usize) -> Result<Self> {
        if levels == 0 {
            return Err(Error::invalid("level count must be at least 1"));
        }
        if m0 == 0 {
            return Err(Error::invalid("m0 must be at least 1"));
        }
        let mut positions = Vec::with_capacity(row_offset(levels + 1));
        for m in 1..=levels as i64 {
            positions.extend(-m..0);
        }
        Ok(Self { positions, levels, m0, rate_slow: 1.0, rate_fast: 2.0, clock: 0.0 })
    }

    pub fn with_rates(mut self, rate_slow: f64, rate_fast: f64) -> Result<Self> {
        if !(rate_slow > 0.0 && rate_slow.is_finite() && rate_fast > 0.0 && rate_fast.is_finite()) {
            return Err(Error::invalid(format!("rates must be positive and finite, got ({rate_slow}, {rate_fast})")));
        }
        self.rate_slow = rate_slow;
        self.rate_fast = rate_fast;
        Ok(self)
    }

    /// Builds a configuration from explicit rows, rejecting anything that
    /// violates the row-length, ordering or interlacing invariants.
    pub fn from_rows(rows: Vec<Vec<i64>>, m0: usize, rate_slow: f64, rate_fast: f64, clock: f64) -> Result<Self> {
        let levels = rows.len();
        if levels == 0 || m0 == 0 {
            return Err(Error::invalid("need at least one level and m0 >= 1"));
        }
        if !(clock >= 0.0 && clock.is_finite()) {
            return Err(Error::invalid(format!("clock must be finite and non-negative, got {clock}")));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != i + 1 {
                return Err(Error::invalid(format!("row {} has {} entries", i + 1, row.len())));
            }
        }
        let cfg = Self {
            positions: rows.into_iter().flatten().collect(),
            levels,
            m0,
            rate_slow: 1.0,
            rate_fast: 2.0,
            clock,
        }
        .with_rates(rate_slow, rate_fast)?;
        if !cfg.verify_interlacing() {
            return Err(Error::invalid("rows violate ordering or interlacing"));
        }
        Ok(cfg)
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn m0(&self) -> usize {
        self.m0
    }

    pub fn rate_slow(&self) -> f64 {
        self.rate_slow
    }

    pub fn rate_fast(&self) -> f64 {
        self.rate_fast
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub(crate) fn set_clock(&mut self, clock: f64) {
        debug_assert!(clock >= self.clock);
        self.clock = clock;
    }

    pub fn particle_count(&self) -> usize {
        self.positions.len()
    }

    /// Number of particles on slow levels (`m <= m0`).
    pub fn slow_count(&self) -> usize {
        row_offset(self.m0.min(self.levels) + 1)
    }

    pub fn rate_of_level(&self, m: usize) -> f64 {
        if m <= self.m0 {
            self.rate_slow
        } else {
            self.rate_fast
        }
    }

    pub fn total_rate(&self) -> f64 {
        let slow = self.slow_count();
        self.rate_slow * slow as f64 + self.rate_fast * (self.particle_count() - slow) as f64
    }

    /// Row `m` (1-based).
    pub fn row(&self, m: usize) -> &[i64] {
        assert!(m >= 1 && m <= self.levels, "level {m} out of range 1..={}", self.levels);
        &self.positions[row_offset(m)..row_offset(m + 1)]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[i64]> + '_ {
        (1..=self.levels).map(move |m| self.row(m))
    }

    pub fn position(&self, m: usize, k: usize) -> Result<i64> {
        self.check_index(m, k)?;
        Ok(self.positions[row_offset(m) + k - 1])
    }

    /// Overwrites one coordinate without any validation; callers are expected
    /// to run [`verify_interlacing`](Self::verify_interlacing) afterwards.
    pub fn set_position_unchecked(&mut self, m: usize, k: usize, x: i64) -> Result<()> {
        self.check_index(m, k)?;
        self.positions[row_offset(m) + k - 1] = x;
        Ok(())
    }

    #[cfg(test)]
    pub(crate) fn flat(&self) -> &[i64] {
        &self.positions
    }

    fn check_index(&self, m: usize, k: usize) -> Result<()> {
        if m == 0 || m > self.levels || k == 0 || k > m {
            return Err(Error::Index { level: m, index: k, levels: self.levels });
        }
        Ok(())
    }

    /// True iff every row has the right length, is strictly increasing and
    /// interlaces with the next: `x_k^{m+1} < x_k^m <= x_{k+1}^{m+1}`.
    pub fn verify_interlacing(&self) -> bool {
        if self.positions.len() != row_offset(self.levels + 1) {
            return false;
        }
        for m in 1..=self.levels {
            let row = self.row(m);
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return false;
            }
            if m < self.levels {
                let up = self.row(m + 1);
                for (k, &x) in row.iter().enumerate() {
                    if !(up[k] < x && x <= up[k + 1]) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Attempts to move particle `(m, k)` one step right under the
    /// blocking/pushing rules. Pushes beyond the top tracked level are dropped.
    pub fn attempt_jump(&mut self, m: usize, k: usize) -> Result<JumpOutcome> {
        self.check_index(m, k)?;
        let idx = row_offset(m) + k - 1;
        let mut chain = Vec::new();
        let moved = self.jump_flat(idx, m, |lvl, i| chain.push((lvl, i)));
        Ok(if moved { JumpOutcome::Moved(chain) } else { JumpOutcome::Blocked })
    }

    /// Flat-index jump used by the event loop. `idx` must belong to level `m`.
    #[inline]
    pub(crate) fn jump_flat(&mut self, idx: usize, m: usize, mut on_move: impl FnMut(usize, usize)) -> bool {
        let k = idx - row_offset(m) + 1;
        let x = self.positions[idx];
        if m > 1 && k < m && self.positions[idx - (m - 1)] == x + 1 {
            return false;
        }
        self.positions[idx] = x + 1;
        on_move(m, k);
        // (m+l, k+l) sits at idx + l*m + l*(l+1)/2.
        let mut level = m;
        let mut cur = idx;
        while level < self.levels {
            let next = cur + level + 1;
            if self.positions[next] != x {
                break;
            }
            self.positions[next] = x + 1;
            level += 1;
            cur = next;
            on_move(level, cur - row_offset(level) + 1);
        }
        true
    }

    /// `h(x, m)`: number of level-`m` particles at or right of `x`.
    pub fn height(&self, x: i64, m: usize) -> usize {
        let row = self.row(m);
        row.len() - row.partition_point(|&p| p < x)
    }
}

impl From<ParticleConfig> for ConfigSnapshot {
    fn from(cfg: ParticleConfig) -> Self {
        ConfigSnapshot {
            clock: cfg.clock,
            m0: cfg.m0,
            rate_slow: cfg.rate_slow,
            rate_fast: cfg.rate_fast,
            levels: cfg.rows().map(<[i64]>::to_vec).collect(),
        }
    }
}

impl TryFrom<ConfigSnapshot> for ParticleConfig {
    type Error = Error;

    fn try_from(s: ConfigSnapshot) -> Result<Self> {
        ParticleConfig::from_rows(s.levels, s.m0, s.rate_slow, s.rate_fast, s.clock)
    }
}
