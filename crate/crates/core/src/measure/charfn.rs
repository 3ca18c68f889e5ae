//! Characteristic functions `χ(z) = ∫ t^z dν(t)` on the strip
//! `0 <= Re z <= 1` and the grid pseudometric built from them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::RMeasure;
use crate::error::{Error, Result};
use crate::numeric::{integrate_vec, QUAD_TOL};

/// Finite grid of nodes `u + iv` in the strip used to compare measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripGrid {
    us: Vec<f64>,
    vs: Vec<f64>,
}

impl Default for StripGrid {
    /// `u ∈ {0, 1/4, 1/2, 3/4, 1}`, `v ∈ {-5, -4.5, …, 5}`.
    fn default() -> Self {
        StripGrid::symmetric(5.0, 0.5).expect("default grid is valid")
    }
}

impl StripGrid {
    pub fn new(mut us: Vec<f64>, mut vs: Vec<f64>) -> Result<Self> {
        us.sort_by(f64::total_cmp);
        us.dedup();
        vs.sort_by(f64::total_cmp);
        vs.dedup();
        if us.iter().any(|u| !(0.0..=1.0).contains(u)) {
            return Err(Error::invalid("strip grid", "real parts must lie in [0, 1]"));
        }
        if !us.contains(&0.0) || !us.contains(&1.0) {
            return Err(Error::invalid("strip grid", "real parts must include 0 and 1"));
        }
        if !vs.contains(&0.0) {
            return Err(Error::invalid("strip grid", "imaginary parts must include 0"));
        }
        if vs.iter().any(|v| !v.is_finite() || !vs.contains(&-v)) {
            return Err(Error::invalid("strip grid", "imaginary parts must be finite and symmetric"));
        }
        Ok(StripGrid { us, vs })
    }

    /// Default real parts with `v` running over `[-n, n]` in steps of `step`.
    pub fn symmetric(n: f64, step: f64) -> Result<Self> {
        if !(n >= 0.0 && step > 0.0) {
            return Err(Error::invalid("strip grid", "need n >= 0 and a positive step"));
        }
        let k = (n / step).round() as i64;
        let vs = (-k..=k).map(|i| i as f64 * step).collect();
        StripGrid::new(vec![0.0, 0.25, 0.5, 0.75, 1.0], vs)
    }

    pub fn us(&self) -> &[f64] {
        &self.us
    }

    pub fn vs(&self) -> &[f64] {
        &self.vs
    }

    pub fn nodes(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.us.len() * self.vs.len());
        for &u in &self.us {
            for &v in &self.vs {
                out.push(Complex64::new(u, v));
            }
        }
        out
    }
}

fn check_strip(z: Complex64) -> Result<()> {
    if !(0.0..=1.0).contains(&z.re) || !z.im.is_finite() {
        return Err(Error::Precondition(format!("z = {z} lies outside the strip 0 <= Re z <= 1")));
    }
    Ok(())
}

#[inline]
fn power(t: f64, z: Complex64) -> Complex64 {
    let l = t.ln();
    let r = (z.re * l).exp();
    let (s, c) = (z.im * l).sin_cos();
    Complex64::new(r * c, r * s)
}

impl RMeasure {
    /// `χ(z) = ∫ t^z dν(t)`.
    pub fn char_fn(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.char_fn_many(&[z])?[0])
    }

    /// `χ` at many nodes at once; density pieces are integrated with one
    /// vector-valued adaptive quadrature per piece.
    pub fn char_fn_many(&self, zs: &[Complex64]) -> Result<Vec<Complex64>> {
        for &z in zs {
            check_strip(z)?;
        }
        let mut out = vec![Complex64::new(0.0, 0.0); zs.len()];
        for at in self.atoms() {
            for (o, &z) in out.iter_mut().zip(zs) {
                *o += power(at.t, z) * at.mass;
            }
        }
        let pieces = self.pieces();
        if pieces.is_empty() {
            return Ok(out);
        }
        let tol = (QUAD_TOL / pieces.len() as f64).max(1e-14);
        for p in pieces {
            let vals = integrate_vec(
                |t, buf| {
                    let f = p.density.eval(t);
                    for (b, &z) in buf.iter_mut().zip(zs) {
                        *b = power(t, z) * f;
                    }
                },
                p.a,
                p.b,
                zs.len(),
                tol,
            )?;
            for (o, v) in out.iter_mut().zip(vals) {
                *o += v;
            }
        }
        Ok(out)
    }
}

/// `max_{z ∈ grid} |χ_ν(z) - χ_μ(z)|`.
pub fn measure_distance(nu: &RMeasure, mu: &RMeasure, grid: &StripGrid) -> Result<f64> {
    if nu == mu {
        return Ok(0.0);
    }
    let nodes = grid.nodes();
    let a = nu.char_fn_many(&nodes)?;
    let b = mu.char_fn_many(&nodes)?;
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Atom;

    #[test]
    fn default_grid_shape() {
        let g = StripGrid::default();
        assert_eq!(g.us().len(), 5);
        assert_eq!(g.vs().len(), 21);
        assert!(StripGrid::new(vec![0.0, 0.5], vec![0.0]).is_err());
        assert!(StripGrid::new(vec![0.0, 1.0], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn atoms_are_exact() {
        let d1 = RMeasure::dirac(1.0, 1.0);
        for z in [Complex64::new(0.3, 2.0), Complex64::new(1.0, -4.0)] {
            assert_eq!(d1.char_fn(z).unwrap(), Complex64::new(1.0, 0.0));
        }
        let two = RMeasure::from_parts(
            vec![Atom { t: 0.5, mass: 0.5 }, Atom { t: 1.5, mass: 0.5 }],
            vec![],
        );
        let v = two.char_fn(Complex64::new(0.5, 0.0)).unwrap();
        assert!((v.re - (2f64.sqrt() + 6f64.sqrt()) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn density_matches_closed_form() {
        // ∫_{1/2}^{3/2} t^z dt = (b^{z+1} - a^{z+1}) / (z + 1)
        let u = RMeasure::uniform(0.5, 1.5, 1.0);
        for z in [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.25, -3.5), Complex64::new(0.75, 5.0)] {
            let zp = z + 1.0;
            let exact = (Complex64::new(1.5, 0.0).powc(zp) - Complex64::new(0.5, 0.0).powc(zp)) / zp;
            assert!((u.char_fn(z).unwrap() - exact).norm() < 1e-12, "z = {z}");
        }
    }

    #[test]
    fn strip_is_enforced() {
        assert!(RMeasure::dirac(1.0, 1.0).char_fn(Complex64::new(1.5, 0.0)).is_err());
    }

    #[test]
    fn distance_examples() {
        let g = StripGrid::default();
        let d1 = RMeasure::dirac(1.0, 1.0);
        assert!(measure_distance(&d1, &RMeasure::dirac(2.0, 1.0), &g).unwrap() >= 1.0);
        assert_eq!(measure_distance(&d1, &d1, &g).unwrap(), 0.0);
        let mut prev = f64::INFINITY;
        for n in 1..=20 {
            let nu = RMeasure::dirac(1.0 + 1.0 / n as f64, 1.0);
            let d = measure_distance(&nu, &d1, &g).unwrap();
            assert!(d < prev);
            prev = d;
        }
        assert!(prev < 0.3);
    }
}
