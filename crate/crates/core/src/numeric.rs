//! Small numerical kernels: error-free summation, adaptive Gauss–Kronrod
//! quadrature for vector-valued complex integrands, safeguarded monotone
//! root finding and Chebyshev–Lobatto interpolation.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Error-free transformation `a + b = s + e`.
#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// Error-free transformation `a * b = p + e`.
#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

/// Correctly rounded floating point summation (Shewchuk partials).
#[derive(Debug, Clone, Default)]
pub struct ExactSum {
    partials: Vec<f64>,
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, mut x: f64) {
        let mut i = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        self.partials.truncate(i);
        self.partials.push(x);
    }

    /// Adds the exact difference `b - a`.
    pub fn add_diff(&mut self, b: f64, a: f64) {
        let (s, e) = two_sum(b, -a);
        self.add(s);
        if e != 0.0 {
            self.add(e);
        }
    }

    /// Adds the exact product `a * b`.
    pub fn add_prod(&mut self, a: f64, b: f64) {
        let (p, e) = two_prod(a, b);
        self.add(p);
        if e != 0.0 {
            self.add(e);
        }
    }

    pub fn value(&self) -> f64 {
        let p = &self.partials;
        if p.is_empty() {
            return 0.0;
        }
        let mut n = p.len() - 1;
        let mut hi = p[n];
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            n -= 1;
            let y = p[n];
            hi = x + y;
            let yr = hi - x;
            lo = y - yr;
            if lo != 0.0 {
                break;
            }
        }
        // round-half-even correction as in CPython's fsum
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            let yr = x - hi;
            if y == yr {
                hi = x;
            }
        }
        hi
    }
}

/// Correctly rounded sum of a slice.
pub fn exact_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = ExactSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Default absolute tolerance for characteristic-function quadrature.
pub const QUAD_TOL: f64 = 1e-10;

const MAX_BISECTIONS: usize = 48;

/// One 15-point Kronrod panel; returns the error estimate.
fn gk15_panel<F>(f: &mut F, a: f64, b: f64, kron: &mut [Complex64], scratch: &mut [Complex64], gauss: &mut [Complex64]) -> f64
where
    F: FnMut(f64, &mut [Complex64]),
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    kron.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
    gauss.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));

    f(center, scratch);
    for k in 0..kron.len() {
        kron[k] += scratch[k] * WGK[7];
        gauss[k] += scratch[k] * WG[3];
    }
    for j in 0..7 {
        let dx = half * XGK[j];
        for x in [center - dx, center + dx] {
            f(x, scratch);
            for k in 0..kron.len() {
                kron[k] += scratch[k] * WGK[j];
                if j % 2 == 1 {
                    gauss[k] += scratch[k] * WG[j / 2];
                }
            }
        }
    }
    let mut err: f64 = 0.0;
    for k in 0..kron.len() {
        kron[k] *= half;
        gauss[k] *= half;
        err = err.max((kron[k] - gauss[k]).norm());
    }
    err
}

/// Adaptive Gauss–Kronrod (7/15) integration of a vector of complex
/// integrands over `[a, b]`. `f(t, out)` writes the `dim` integrand values
/// at `t`. The absolute tolerance is shared between panels in proportion to
/// their length.
pub fn integrate_vec<F>(mut f: F, a: f64, b: f64, dim: usize, tol: f64) -> Result<Vec<Complex64>>
where
    F: FnMut(f64, &mut [Complex64]),
{
    let mut total = vec![Complex64::new(0.0, 0.0); dim];
    if b <= a || dim == 0 {
        return Ok(total);
    }
    let width = b - a;
    let mut kron = vec![Complex64::new(0.0, 0.0); dim];
    let mut gauss = vec![Complex64::new(0.0, 0.0); dim];
    let mut scratch = vec![Complex64::new(0.0, 0.0); dim];
    let mut stack = vec![(a, b, 0usize)];
    let mut worst: f64 = 0.0;
    let mut failed = false;
    while let Some((lo, hi, depth)) = stack.pop() {
        let err = gk15_panel(&mut f, lo, hi, &mut kron, &mut scratch, &mut gauss);
        let budget = tol * (hi - lo) / width;
        if err <= budget || depth >= MAX_BISECTIONS || hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(1.0) {
            if err > budget {
                failed = true;
                worst = worst.max(err);
            }
            for k in 0..dim {
                total[k] += kron[k];
            }
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    if failed && worst > tol {
        return Err(Error::numeric("adaptive quadrature did not converge", worst, tol));
    }
    Ok(total)
}

/// Real-valued convenience wrapper around [`integrate_vec`].
pub fn integrate<F>(f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let v = integrate_vec(|t, out| out[0] = Complex64::new(f(t), 0.0), a, b, 1, tol)?;
    Ok(v[0].re)
}

/// Solves `f(y) = target` for a nondecreasing `f` on `[lo, hi]` with
/// `f(lo) <= target <= f(hi)`. `df` is the derivative used for Newton steps;
/// every step is safeguarded by the current bracket.
pub fn solve_monotone<F, D>(f: F, df: D, mut lo: f64, mut hi: f64, target: f64) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut y = 0.5 * (lo + hi);
    for _ in 0..200 {
        let v = f(y) - target;
        if v == 0.0 {
            return y;
        }
        if v < 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        if hi - lo <= 2.0 * f64::EPSILON * hi.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        let d = df(y);
        let mut next = if d > 0.0 && d.is_finite() { y - v / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next == y {
            break;
        }
        y = next;
    }
    y.clamp(lo, hi)
}

/// Chebyshev–Lobatto points mapped to `[a, b]`, ascending.
pub fn lobatto_points(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let m = (n - 1) as f64;
    (0..n)
        .map(|k| {
            let c = -(std::f64::consts::PI * k as f64 / m).cos();
            if k == 0 {
                a
            } else if k == n - 1 {
                b
            } else {
                a + (b - a) * 0.5 * (c + 1.0)
            }
        })
        .collect()
}

/// Chebyshev series `Σ c_k T_k(s)` on `s ∈ [-1, 1]` built from values at the
/// Lobatto points (ascending order, as produced by [`lobatto_points`]).
#[derive(Debug, Clone, PartialEq)]
pub struct ChebSeries {
    pub coeffs: Vec<f64>,
}

impl ChebSeries {
    pub fn from_lobatto_values(values: &[f64]) -> Self {
        let n = values.len();
        assert!(n >= 2);
        let m = n - 1;
        // values are ordered by s ascending = x_j with s_j = -cos(pi j / m),
        // i.e. node j corresponds to cos(theta) with theta = pi (m - j) / m
        let mut coeffs = vec![0.0; n];
        for (k, ck) in coeffs.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, v) in values.iter().enumerate() {
                let theta = std::f64::consts::PI * (m - j) as f64 / m as f64;
                let w = if j == 0 || j == m { 0.5 } else { 1.0 };
                acc += w * v * (k as f64 * theta).cos();
            }
            let scale = if k == 0 || k == m { 1.0 } else { 2.0 };
            *ck = scale * acc / m as f64;
        }
        ChebSeries { coeffs }
    }

    /// Clenshaw evaluation at `s ∈ [-1, 1]`.
    pub fn eval(&self, s: f64) -> f64 {
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = c + 2.0 * s * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        self.coeffs[0] + s * b1 - b2
    }

    /// Antiderivative in `s`, normalized to vanish at `s = -1`.
    pub fn integral(&self) -> ChebSeries {
        let n = self.coeffs.len();
        let c = |k: usize| if k < n { self.coeffs[k] } else { 0.0 };
        let mut out = vec![0.0; n + 1];
        for k in 1..=n {
            let upper = c(k - 1) * if k == 1 { 2.0 } else { 1.0 };
            out[k] = (upper - c(k + 1)) / (2.0 * k as f64);
        }
        let mut series = ChebSeries { coeffs: out };
        let at_minus_one = series.eval(-1.0);
        series.coeffs[0] -= at_minus_one;
        series
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_sum_recovers_cancelled_terms() {
        let v = [1e16, 1.0, -1e16, 1e-3];
        assert_eq!(exact_sum(v), 1.001);
        let mut acc = ExactSum::new();
        acc.add_diff(0.3, 0.1);
        acc.add_diff(0.1, 0.0);
        assert_eq!(acc.value(), 0.3);
    }

    #[test]
    fn gk_integrates_polynomials_and_oscillations() {
        let v = integrate(|t| t.powi(6), 0.0, 2.0, 1e-13).unwrap();
        assert!((v - 128.0 / 7.0).abs() < 1e-12);
        let w = integrate(|t| (40.0 * t).sin(), 0.0, 1.0, 1e-12).unwrap();
        assert!((w - (1.0 - 40f64.cos()) / 40.0).abs() < 1e-12);
    }

    #[test]
    fn monotone_solver_hits_target() {
        let y = solve_monotone(|x| x * x * x, |x| 3.0 * x * x, 0.0, 2.0, 2.0);
        assert!((y - 2f64.cbrt()).abs() < 1e-15);
    }

    #[test]
    fn chebyshev_series_integrates_cosine() {
        let xs = lobatto_points(-1.0, 1.0, 33);
        let vals: Vec<f64> = xs.iter().map(|x| (2.0 * x).cos()).collect();
        let s = ChebSeries::from_lobatto_values(&vals);
        assert!((s.eval(0.3) - 0.6f64.cos()).abs() < 1e-14);
        let int = s.integral();
        assert!((int.eval(0.5) - ((1.0f64).sin() + 2f64.sin()) / 2.0).abs() < 1e-14);
    }
}
