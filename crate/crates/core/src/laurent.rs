//! Laurent polynomials `f(t) = Σ c_i t^(low + i)` on the positive half-line.
//!
//! Ordinary polynomial densities have `low = 0`. Negative powers appear when
//! a density is pulled back through `t ↦ 1/t` (inverse maps), so the class
//! is closed under every operation the measure layer needs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest absolute exponent a density may carry.
pub const MAX_POWER: i32 = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Laurent {
    pub low: i32,
    pub coeffs: Vec<f64>,
}

/// `∫_a^b t^k dt` for `0 <= a <= b`, computed without cancellation.
pub fn power_integral(k: i32, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    if k == -1 {
        return ((b - a) / a).ln_1p();
    }
    let m = (k + 1) as f64;
    if a == 0.0 {
        return b.powi(k + 1) / m;
    }
    a.powi(k + 1) * (m * ((b - a) / a).ln_1p()).exp_m1() / m
}

impl Laurent {
    pub fn new(low: i32, coeffs: Vec<f64>) -> Self {
        let mut p = Laurent { low, coeffs };
        p.trim();
        p
    }

    pub fn constant(c: f64) -> Self {
        Laurent::new(0, vec![c])
    }

    pub fn zero() -> Self {
        Laurent { low: 0, coeffs: vec![] }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn high(&self) -> i32 {
        self.low + self.coeffs.len() as i32 - 1
    }

    fn trim(&mut self) {
        while matches!(self.coeffs.last(), Some(&c) if c == 0.0) {
            self.coeffs.pop();
        }
        let lead = self.coeffs.iter().take_while(|&&c| c == 0.0).count();
        if lead > 0 {
            self.coeffs.drain(..lead);
            self.low += lead as i32;
        }
        if self.coeffs.is_empty() {
            self.low = 0;
        }
    }

    pub fn check_bounds(&self) -> Result<()> {
        if self.coeffs.is_empty() {
            return Ok(());
        }
        for power in [self.low, self.high()] {
            if power.abs() > MAX_POWER {
                return Err(Error::DegreeOverflow { power, bound: MAX_POWER });
            }
        }
        Ok(())
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.coeffs.iter().enumerate().map(move |(i, &c)| (self.low + i as i32, c))
    }

    pub fn eval(&self, t: f64) -> f64 {
        // Horner in t, then shift by t^low
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * t + c;
        }
        acc * t.powi(self.low)
    }

    pub fn derivative_at(&self, t: f64) -> f64 {
        self.terms()
            .filter(|&(k, _)| k != 0)
            .map(|(k, c)| c * k as f64 * t.powi(k - 1))
            .sum()
    }

    /// `∫_a^b f(t) dt`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        self.terms().map(|(k, c)| c * power_integral(k, a, b)).sum()
    }

    /// `∫_a^b t f(t) dt`.
    pub fn first_moment(&self, a: f64, b: f64) -> f64 {
        self.terms().map(|(k, c)| c * power_integral(k + 1, a, b)).sum()
    }

    pub fn scale(&self, s: f64) -> Laurent {
        Laurent::new(self.low, self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Multiplies by `t^by`.
    pub fn shift(&self, by: i32) -> Laurent {
        Laurent { low: self.low + by, coeffs: self.coeffs.clone() }
    }

    pub fn add(&self, other: &Laurent) -> Laurent {
        if self.coeffs.is_empty() {
            return other.clone();
        }
        if other.coeffs.is_empty() {
            return self.clone();
        }
        let low = self.low.min(other.low);
        let high = self.high().max(other.high());
        let mut coeffs = vec![0.0; (high - low + 1) as usize];
        for (k, c) in self.terms().chain(other.terms()) {
            coeffs[(k - low) as usize] += c;
        }
        Laurent::new(low, coeffs)
    }

    pub fn sub(&self, other: &Laurent) -> Laurent {
        self.add(&other.scale(-1.0))
    }

    /// Density of the pushforward of `f(t) dt` under `t ↦ s t` (`s > 0`).
    pub fn dilate(&self, s: f64) -> Laurent {
        if s == 1.0 {
            return self.clone();
        }
        Laurent::new(
            self.low,
            self.terms().map(|(k, c)| c * s.powi(-k - 1)).collect(),
        )
    }

    /// Density of the pushforward of `t f(t) dt` under `t ↦ 1/t`:
    /// `g(s) = s^{-3} f(1/s)`, so `t^k ↦ s^{-k-3}`.
    pub fn weighted_reciprocal(&self) -> Laurent {
        if self.coeffs.is_empty() {
            return Laurent::zero();
        }
        let mut coeffs = self.coeffs.clone();
        coeffs.reverse();
        Laurent::new(-self.high() - 3, coeffs)
    }

    /// Minimum over `[a, b]` sampled at Chebyshev points and the endpoints.
    pub fn sampled_min(&self, a: f64, b: f64) -> f64 {
        const N: usize = 12;
        let mut m = self.eval(a).min(self.eval(b));
        for j in 0..N {
            let c = (std::f64::consts::PI * (j as f64 + 0.5) / N as f64).cos();
            let t = a + (b - a) * 0.5 * (1.0 + c);
            m = m.min(self.eval(t));
        }
        m
    }

    pub fn sampled_max_abs(&self, a: f64, b: f64) -> f64 {
        const N: usize = 12;
        let mut m = self.eval(a).abs().max(self.eval(b).abs());
        for j in 0..N {
            let c = (std::f64::consts::PI * (j as f64 + 0.5) / N as f64).cos();
            let t = a + (b - a) * 0.5 * (1.0 + c);
            m = m.max(self.eval(t).abs());
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_integral_matches_closed_form() {
        assert!((power_integral(2, 1.0, 2.0) - 7.0 / 3.0).abs() < 1e-15);
        assert!((power_integral(-1, 1.0, 2.0) - 2f64.ln()).abs() < 1e-15);
        assert!((power_integral(-3, 0.5, 1.0) - 1.5).abs() < 1e-15);
        assert_eq!(power_integral(0, 0.0, 3.0), 3.0);
        // tiny interval: no cancellation
        let a = 1.0;
        let h = (-30f64).exp2();
        let v = power_integral(4, a, a + h);
        assert!((v / h - 1.0 - 2.0 * h).abs() < 1e-15);
    }

    #[test]
    fn weighted_reciprocal_is_an_involution_up_to_weight() {
        // t f(t) dt pushed by 1/t, then s g(s) ds pushed back gives f(t) dt
        let f = Laurent::new(0, vec![1.0, 2.0, 0.5]);
        let g = f.weighted_reciprocal();
        let back = g.weighted_reciprocal();
        assert_eq!(back, f);
        // mass of g on (1/b, 1/a] = first moment of f on (a, b]
        let (a, b) = (0.5, 1.5);
        assert!((g.integral(1.0 / b, 1.0 / a) - f.first_moment(a, b)).abs() < 1e-14);
        assert!((g.first_moment(1.0 / b, 1.0 / a) - f.integral(a, b)).abs() < 1e-14);
    }

    #[test]
    fn dilation_preserves_mass() {
        let f = Laurent::new(-2, vec![1.0, 0.0, 3.0]);
        let g = f.dilate(2.5);
        assert!((g.integral(2.5, 5.0) - f.integral(1.0, 2.0)).abs() < 1e-14);
        assert!((g.first_moment(2.5, 5.0) - 2.5 * f.first_moment(1.0, 2.0)).abs() < 1e-13);
    }
}
