//! Continuous-time event loop.
//!
//! Every particle carries an exponential clock of its level's rate. The loop
//! draws the next event time at the total rate and picks the ringing particle
//! with probability proportional to its rate, which has the same law as one
//! timer per particle. Blocked attempts still consume their event.

use super::config::{row_offset, JumpOutcome, ParticleConfig};
use super::rng::RngStream;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct StepEvent {
    pub waiting_time: f64,
    pub level: usize,
    pub index: usize,
    pub outcome: JumpOutcome,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunStats {
    pub events: u64,
    pub blocked: u64,
}

#[inline]
fn level_of(idx: usize) -> usize {
    let mut m = ((1.0 + (1.0 + 8.0 * idx as f64).sqrt()) / 2.0) as usize;
    while row_offset(m) > idx {
        m -= 1;
    }
    while row_offset(m + 1) <= idx {
        m += 1;
    }
    m
}

#[derive(Clone, Copy)]
struct Selector {
    slow_count: usize,
    count: usize,
    rate_slow: f64,
    rate_fast: f64,
    slow_mass: f64,
    total: f64,
}

impl Selector {
    fn new(cfg: &ParticleConfig) -> Self {
        let slow_count = cfg.slow_count();
        let slow_mass = cfg.rate_slow() * slow_count as f64;
        Self {
            slow_count,
            count: cfg.particle_count(),
            rate_slow: cfg.rate_slow(),
            rate_fast: cfg.rate_fast(),
            slow_mass,
            total: cfg.total_rate(),
        }
    }

    /// Flat index of the ringing particle for a uniform draw in `[0, 1)`.
    #[inline]
    fn pick(&self, u: f64) -> usize {
        let s = u * self.total;
        if s < self.slow_mass {
            ((s / self.rate_slow) as usize).min(self.slow_count - 1)
        } else {
            let i = self.slow_count + ((s - self.slow_mass) / self.rate_fast) as usize;
            i.min(self.count - 1)
        }
    }
}

/// One event: waiting time, the ringing particle and what happened to it.
pub fn step(cfg: &mut ParticleConfig, rng: &mut RngStream) -> StepEvent {
    let sel = Selector::new(cfg);
    let waiting_time = rng.exp1() / sel.total;
    let idx = sel.pick(rng.uniform());
    let level = level_of(idx);
    let index = idx - row_offset(level) + 1;
    let mut chain = Vec::new();
    let moved = cfg.jump_flat(idx, level, |m, k| chain.push((m, k)));
    let clock = cfg.clock() + waiting_time;
    cfg.set_clock(clock);
    StepEvent {
        waiting_time,
        level,
        index,
        outcome: if moved { JumpOutcome::Moved(chain) } else { JumpOutcome::Blocked },
    }
}

/// Advances `cfg` to model time `horizon`. Stops before the first event that
/// would land past the horizon; the clock is then set to exactly `horizon`.
pub fn run_until(cfg: &mut ParticleConfig, horizon: f64, rng: &mut RngStream) -> Result<RunStats> {
    if !(horizon >= cfg.clock()) || !horizon.is_finite() {
        return Err(Error::invalid(format!("horizon {horizon} precedes clock {}", cfg.clock())));
    }
    let sel = Selector::new(cfg);
    let mut clock = cfg.clock();
    let mut stats = RunStats::default();
    loop {
        let wait = rng.exp1() / sel.total;
        if clock + wait > horizon {
            break;
        }
        clock += wait;
        let idx = sel.pick(rng.uniform());
        stats.events += 1;
        if !cfg.jump_flat(idx, level_of(idx), |_, _| {}) {
            stats.blocked += 1;
        }
    }
    cfg.set_clock(horizon);
    Ok(stats)
}

/// Runs exactly `events` events regardless of model time.
pub fn run_events(cfg: &mut ParticleConfig, events: u64, rng: &mut RngStream) -> RunStats {
    let sel = Selector::new(cfg);
    let mut clock = cfg.clock();
    let mut stats = RunStats::default();
    for _ in 0..events {
        clock += rng.exp1() / sel.total;
        let idx = sel.pick(rng.uniform());
        stats.events += 1;
        if !cfg.jump_flat(idx, level_of(idx), |_, _| {}) {
            stats.blocked += 1;
        }
    }
    cfg.set_clock(clock);
    stats
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_lookup() {
        for m in 1..200 {
            for k in 1..=m {
                assert_eq!(level_of(row_offset(m) + k - 1), m);
            }
        }
    }

    #[test]
    fn selection_is_rate_proportional() {
        // levels 1,2 slow (3 particles), level 3 fast (3 particles, rate 2)
        let cfg = ParticleConfig::init_packed(3, 2).unwrap();
        let sel = Selector::new(&cfg);
        assert_eq!(sel.total, 9.0);
        let n = 90_000;
        let on_top = (0..n).filter(|i| level_of(sel.pick((*i as f64 + 0.5) / n as f64)) == 3).count();
        assert!((on_top as f64 / n as f64 - 2.0 / 3.0).abs() < 1e-4);
    }

    #[test]
    fn waiting_time_has_total_rate() {
        let mut rng = RngStream::new(11, 0);
        let n = 40_000;
        let mut sum = 0.0;
        let mut top = 0;
        for _ in 0..n {
            let mut cfg = ParticleConfig::init_packed(3, 2).unwrap();
            let ev = step(&mut cfg, &mut rng);
            sum += ev.waiting_time;
            top += usize::from(ev.level == 3);
        }
        let mean = sum / n as f64;
        // Exp(9): mean 1/9, sd 1/9
        assert!((mean - 1.0 / 9.0).abs() < 4.0 * (1.0 / 9.0) / (n as f64).sqrt());
        let p = top as f64 / n as f64;
        assert!((p - 2.0 / 3.0).abs() < 4.0 * (2.0f64 / 9.0 / n as f64).sqrt());
    }

    #[test]
    fn steps_are_deterministic_per_stream() {
        let run = || {
            let mut cfg = ParticleConfig::init_packed(8, 4).unwrap();
            let mut rng = RngStream::new(5, 9);
            (0..200).map(|_| step(&mut cfg, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn step_and_run_until_agree() {
        let mut a = ParticleConfig::init_packed(12, 5).unwrap();
        let mut b = a.clone();
        let mut ra = RngStream::new(3, 1);
        let mut rb = RngStream::new(3, 1);
        let stats = run_until(&mut a, 2.5, &mut ra).unwrap();
        let mut events = 0;
        loop {
            let mut probe = b.clone();
            let mut rp = rb.clone();
            let ev = step(&mut probe, &mut rp);
            if b.clock() + ev.waiting_time > 2.5 {
                break;
            }
            b = probe;
            rb = rp;
            events += 1;
        }
        assert_eq!(stats.events, events);
        assert_eq!(a.flat(), b.flat());
        assert_eq!(a.clock(), 2.5);
    }

    #[test]
    fn zero_length_run_is_identity() {
        let mut cfg = ParticleConfig::init_packed(6, 2).unwrap();
        let before = cfg.clone();
        let stats = run_until(&mut cfg, 0.0, &mut RngStream::new(1, 1)).unwrap();
        assert_eq!(stats.events, 0);
        assert_eq!(cfg, before);
        assert!(run_until(&mut cfg, -1.0, &mut RngStream::new(1, 1)).is_err());
    }
}
