use num_complex::Complex64;

use super::bump::TestBump;
use crate::dynamics::{HeightField, ParticleConfig};
use crate::error::{Error, Result};
use crate::shape::{inverse_omega, jacobian, omega, row_extent, ShapeParams, ShapePoint};

/// Lattice weights `-(√π/L²)·Δφ(Ω(x/L, m/L))·J(x/L, m/L)` on the support of
/// `Δφ∘Ω`, stored row by row with running sums for the linear statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct PairingPlan {
    pub bump: TestBump,
    pub scale: f64,
    pub shape: ShapeParams,
    rows: Vec<PlanRow>,
}

#[derive(Debug, Clone, PartialEq)]
struct PlanRow {
    m: usize,
    x_lo: i64,
    weights: Vec<f64>,
    prefix: Vec<f64>,
}

impl PlanRow {
    fn x_hi(&self) -> i64 {
        self.x_lo + self.weights.len() as i64 - 1
    }

    fn f(&self, x: i64) -> f64 {
        if x < self.x_lo {
            return 0.0;
        }
        let i = x.saturating_sub(self.x_lo).min(self.prefix.len() as i64 - 1) as usize;
        self.prefix[i]
    }
}

/// Range of `μ` covered by the preimage of the bump, from a polar sample of
/// the disk through the explicit inverse.
fn mu_range(bump: &TestBump, sp: ShapeParams) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..=64 {
        let r = bump.radius * i as f64 / 64.0;
        for k in 0..256 {
            let z = bump.center + Complex64::from_polar(r, std::f64::consts::TAU * k as f64 / 256.0);
            let p = inverse_omega(z, sp)?;
            lo = lo.min(p.mu);
            hi = hi.max(p.mu);
        }
    }
    let pad = 0.05 * (hi - lo) + 1e-3;
    Ok(((lo - pad).max(0.0), hi + pad))
}

impl PairingPlan {
    pub fn new(bump: TestBump, scale: f64, sp: ShapeParams) -> Result<Self> {
        bump.validate()?;
        if !(scale >= 1.0 && scale.is_finite()) {
            return Err(Error::invalid(format!("scale L must be >= 1, got {scale}")));
        }
        let (mu_lo, mu_hi) = mu_range(&bump, sp)?;
        let norm = -std::f64::consts::PI.sqrt() / (scale * scale);
        let mut rows = Vec::new();
        let m_lo = ((mu_lo * scale).floor() as usize).max(1);
        let m_hi = (mu_hi * scale).ceil() as usize;
        for m in m_lo..=m_hi {
            let mu = m as f64 / scale;
            let Ok((l, r)) = row_extent(mu, sp) else { continue };
            let (x_a, x_b) = ((l * scale).floor() as i64 - 1, (r * scale).ceil() as i64 + 1);
            let mut cells = Vec::new();
            for x in x_a..=x_b {
                let p = ShapePoint::from_lattice(x, m, scale);
                let Some(w) = omega(p, sp) else { continue };
                let lap = bump.laplacian(w);
                if lap != 0.0 {
                    cells.push((x, norm * lap * jacobian(p, sp)?));
                }
            }
            let (Some(&(first, _)), Some(&(last, _))) = (cells.first(), cells.last()) else { continue };
            let mut weights = vec![0.0; (last - first + 1) as usize];
            for (x, w) in cells {
                weights[(x - first) as usize] = w;
            }
            let prefix = weights
                .iter()
                .scan(0.0, |acc, w| {
                    *acc += w;
                    Some(*acc)
                })
                .collect();
            rows.push(PlanRow { m, x_lo: first, weights, prefix });
        }
        Ok(Self { bump, scale, shape: sp, rows })
    }

    /// Highest level carrying a nonzero weight; a simulation truncated above
    /// it yields the same pairing.
    pub fn max_level(&self) -> usize {
        self.rows.last().map_or(0, |r| r.m)
    }

    /// Smallest and largest `x` carrying a nonzero weight.
    pub fn x_range(&self) -> (i64, i64) {
        let lo = self.rows.iter().map(|r| r.x_lo).min().unwrap_or(0);
        let hi = self.rows.iter().map(PlanRow::x_hi).max().unwrap_or(0);
        (lo, hi)
    }

    /// Number of lattice points with a nonzero weight.
    pub fn support_size(&self) -> usize {
        self.rows.iter().map(|r| r.weights.iter().filter(|w| **w != 0.0).count()).sum()
    }

    /// `(x, m, weight)` for every nonzero weight.
    pub fn cells(&self) -> impl Iterator<Item = (i64, usize, f64)> + '_ {
        self.rows.iter().flat_map(|r| {
            r.weights.iter().enumerate().filter(|(_, w)| **w != 0.0).map(move |(i, w)| (r.x_lo + i as i64, r.m, *w))
        })
    }

    /// `⟨F, φ⟩` for a field given pointwise.
    pub fn pair_with(&self, field: impl Fn(i64, usize) -> Option<f64>) -> Result<f64> {
        let mut acc = 0.0;
        for (x, m, w) in self.cells() {
            let v = field(x, m).ok_or(Error::IncompleteField { x, m })?;
            acc += v * w;
        }
        Ok(acc)
    }

    pub fn pair(&self, field: &HeightField) -> Result<f64> {
        self.pair_with(|x, m| field.get(x, m).map(f64::from))
    }

    /// `f(x, m) = Σ_{y <= x} weight(y, m)`; constant right of the support.
    pub fn linear_f(&self, x: i64, m: usize) -> f64 {
        match self.rows.binary_search_by_key(&m, |r| r.m) {
            Ok(i) => self.rows[i].f(x),
            Err(_) => 0.0,
        }
    }

    /// `X_f = Σ f(x, m)` over the particles of `cfg`.
    pub fn linear_statistic(&self, cfg: &ParticleConfig) -> Result<f64> {
        if cfg.levels() < self.max_level() {
            return Err(Error::invalid(format!(
                "configuration has {} levels, the pairing needs {}",
                cfg.levels(),
                self.max_level()
            )));
        }
        let mut acc = 0.0;
        for r in &self.rows {
            let row = cfg.row(r.m);
            // particles left of the support contribute nothing
            let start = row.partition_point(|&x| x < r.x_lo);
            let total = r.prefix[r.prefix.len() - 1];
            for &x in &row[start..] {
                acc += if x >= r.x_hi() { total } else { r.f(x) };
            }
        }
        Ok(acc)
    }
}

/// `-(√π/L²)·Σ F·Δφ∘Ω·J` over the lattice points of `L𝒟`.
pub fn pairing(field: &HeightField, bump: TestBump, scale: f64, sp: ShapeParams) -> Result<f64> {
    PairingPlan::new(bump, scale, sp)?.pair(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{run_until, RngStream};
    use crate::shape::in_domain;
    use approx::assert_abs_diff_eq;

    fn setup(scale: f64) -> PairingPlan {
        let sp = ShapeParams::new(1.0, 1.5).unwrap();
        let bump = TestBump::new(Complex64::new(1.0, 1.0), 0.6, 1.0).unwrap();
        PairingPlan::new(bump, scale, sp).unwrap()
    }

    #[test]
    fn zero_and_linear() {
        let plan = setup(20.0);
        assert_eq!(plan.pair_with(|_, _| Some(0.0)).unwrap(), 0.0);
        let f = |x: i64, m: usize| Some((x as f64 * 0.3).sin() + m as f64);
        let g = |x: i64, m: usize| Some((x * m as i64) as f64 * 1e-2);
        let lhs = plan.pair_with(|x, m| Some(2.0 * f(x, m)? - 3.0 * g(x, m)?)).unwrap();
        let rhs = 2.0 * plan.pair_with(f).unwrap() - 3.0 * plan.pair_with(g).unwrap();
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12 * rhs.abs().max(1.0));
    }

    #[test]
    fn missing_points_are_reported() {
        let plan = setup(20.0);
        let (x0, m0, _) = plan.cells().next().unwrap();
        let r = plan.pair_with(|x, m| if (x, m) == (x0, m0) { None } else { Some(1.0) });
        assert_eq!(r, Err(Error::IncompleteField { x: x0, m: m0 }));
    }

    #[test]
    fn pairing_equals_linear_statistic() {
        let plan = setup(20.0);
        let sp = plan.shape;
        let mut cfg = ParticleConfig::init_packed(plan.max_level(), 30).unwrap();
        run_until(&mut cfg, 20.0, &mut RngStream::new(3, 0)).unwrap();
        let h = HeightField::covering(&cfg);
        let a = plan.pair(&h).unwrap();
        let b = plan.linear_statistic(&cfg).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.abs(), "{a} vs {b}");
        assert_eq!(a, pairing(&h, plan.bump, 20.0, sp).unwrap());
    }

    #[test]
    fn support_stays_away_from_the_frozen_boundary() {
        let plan = setup(30.0);
        assert!(plan.support_size() > 100);
        for (x, m, _) in plan.cells() {
            for (dx, dm) in [(-1, 0), (1, 0), (0, -1), (0, 1), (1, 1), (-1, -1)] {
                let p = ShapePoint::from_lattice(x + dx, (m as i64 + dm) as usize, 30.0);
                assert!(in_domain(p, plan.shape), "({x},{m}) touches the boundary");
            }
        }
    }

    #[test]
    fn constant_field_pairs_to_nearly_zero() {
        let plan = setup(60.0);
        let c = 2.5;
        assert!(plan.pair_with(|_, _| Some(c)).unwrap().abs() <= 0.05 * c);
    }

    #[test]
    fn row_total_is_a_riemann_sum() {
        let scale = 40.0;
        let plan = setup(scale);
        let sp = plan.shape;
        for r in plan.rows.iter().step_by(7) {
            let mu = r.m as f64 / scale;
            let (l, rr) = row_extent(mu, sp).unwrap();
            // composite midpoint rule on a much finer grid
            let n = 20000;
            let h = (rr - l) / n as f64;
            let integral: f64 = (0..n)
                .filter_map(|i| {
                    let p = ShapePoint::new(l + (i as f64 + 0.5) * h, mu);
                    let w = omega(p, sp)?;
                    let lap = plan.bump.laplacian(w);
                    (lap != 0.0).then(|| lap * jacobian(p, sp).unwrap() * h)
                })
                .sum();
            let rightmost = scale * plan.linear_f(i64::MAX, r.m) / std::f64::consts::PI.sqrt();
            assert_abs_diff_eq!(rightmost, -integral, epsilon = 0.05 * integral.abs().max(0.2));
        }
    }

    #[test]
    fn f_vanishes_left_and_is_constant_right() {
        let plan = setup(20.0);
        let r = &plan.rows[plan.rows.len() / 2];
        assert_eq!(plan.linear_f(r.x_lo - 5, r.m), 0.0);
        assert_eq!(plan.linear_f(r.x_hi(), r.m), plan.linear_f(r.x_hi() + 100, r.m));
        assert_eq!(plan.linear_f(0, 10_000), 0.0);
    }
}
