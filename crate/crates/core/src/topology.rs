//! The coset topology at finite resolution: a pseudometric built from
//! dyadic distribution matrices, the operators `T_{1/p+is}(g)` on sampled
//! functions, and the weak-versus-strong convergence experiments.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixtures;
use crate::measure::{measure_distance, StripGrid};
use crate::transform::{DistributionMatrix, IntervalSet, PwMap};

/// Default number of midpoint cells for grid functions and quadrature.
pub const DEFAULT_GRID_N: usize = 1 << 16;

/// Truncation of the inverse-limit topology: dyadic levels `1..=depth`
/// weighted `2⁻ⁿ`, entries compared with `measure_distance` on `grid`.
#[derive(Debug, Clone, PartialEq)]
pub struct GmsMetricConfig {
    pub depth: u32,
    pub grid: StripGrid,
}

impl Default for GmsMetricConfig {
    fn default() -> Self {
        GmsMetricConfig { depth: 6, grid: StripGrid::default() }
    }
}

impl GmsMetricConfig {
    pub fn new(depth: u32, grid: StripGrid) -> Result<Self> {
        if depth == 0 {
            return Err(Error::invalid("metric config", "depth must be at least 1"));
        }
        Ok(GmsMetricConfig { depth, grid })
    }
}

/// The dyadic distribution matrices `S[g; 𝔥ₙ]`, `n = 1..=depth`, of one map.
/// Precomputing them once pays off when a fixed target is compared with a
/// whole sequence.
#[derive(Debug, Clone)]
pub struct MatrixProfile {
    levels: Vec<DistributionMatrix>,
}

impl MatrixProfile {
    pub fn new(g: &PwMap, depth: u32) -> Self {
        MatrixProfile { levels: (1..=depth).map(|n| g.dyadic_matrix(n)).collect() }
    }

    pub fn depth(&self) -> u32 {
        self.levels.len() as u32
    }

    pub fn level(&self, n: u32) -> &DistributionMatrix {
        &self.levels[n as usize - 1]
    }
}

/// `Σₙ 2⁻ⁿ Σ_{α,β} d(S_{αβ}[g;𝔥ₙ], S_{αβ}[h;𝔥ₙ])` between two profiles of
/// equal depth.
pub fn profile_distance(a: &MatrixProfile, b: &MatrixProfile, grid: &StripGrid) -> Result<f64> {
    if a.depth() != b.depth() {
        return Err(Error::invalid("matrix profiles", format!("depths {} and {} differ", a.depth(), b.depth())));
    }
    let mut total = 0.0;
    for n in 1..=a.depth() {
        let (sa, sb) = (a.level(n), b.level(n));
        let mut level = 0.0;
        for alpha in 0..sa.rows() {
            for beta in 0..sa.rows() {
                level += measure_distance(sa.get(alpha, beta), sb.get(alpha, beta), grid)?;
            }
        }
        total += level * (-(n as f64)).exp2();
    }
    Ok(total)
}

pub fn gms_distance(g: &PwMap, h: &PwMap, cfg: &GmsMetricConfig) -> Result<f64> {
    profile_distance(&MatrixProfile::new(g, cfg.depth), &MatrixProfile::new(h, cfg.depth), &cfg.grid)
}

/// A function on `[0, 1]` sampled at the midpoints of the uniform `n`-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid("grid function", "need at least two samples"));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::invalid("grid function", "samples must be finite"));
        }
        Ok(GridFunction { values })
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new((0..n).map(|i| Complex64::new(f(midpoint(i, n)), 0.0)).collect())
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::from_fn(n, |_| c)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Linear interpolation between midpoints, constant beyond the outer
    /// ones.
    pub fn interpolate(&self, y: f64) -> Complex64 {
        let n = self.values.len();
        let u = y * n as f64 - 0.5;
        if u <= 0.0 {
            return self.values[0];
        }
        if u >= (n - 1) as f64 {
            return self.values[n - 1];
        }
        let i = u.floor() as usize;
        let w = u - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        if self.len() != other.len() {
            return Err(Error::invalid("grid function", "sample counts differ"));
        }
        Ok(GridFunction { values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect() })
    }
}

fn midpoint(i: usize, n: usize) -> f64 {
    (i as f64 + 0.5) / n as f64
}

/// `(∫|f|^p)^{1/p}` by the midpoint rule.
pub fn lp_norm(f: &GridFunction, p: f64) -> f64 {
    let n = f.len() as f64;
    let sum: f64 = f.values.iter().map(|v| v.norm().powf(p)).sum();
    (sum / n).powf(1.0 / p)
}

/// `t^{1/p + is}` for `t ≥ 0` (zero at zero).
fn power(t: f64, z: Complex64) -> Complex64 {
    if t <= 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        (z * t.ln()).exp()
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::invalid("exponent", format!("p = {p} must be finite and at least 1")));
    }
    Ok(())
}

/// `T_{1/p+is}(g) f (x) = f(g(x)) g′(x)^{1/p+is}` at the grid midpoints.
pub fn operator_apply(g: &PwMap, f: &GridFunction, p: f64, s: f64) -> Result<GridFunction> {
    check_p(p)?;
    let n = f.len();
    let z = Complex64::new(1.0 / p, s);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let x = midpoint(i, n);
        let seg = &g.segments()[g.segment_index(x)];
        out.push(f.interpolate(seg.eval(x)) * power(seg.derivative(x), z));
    }
    GridFunction::new(out)
}

/// `∫_{A ∩ g⁻¹B} g′(x)^{1/p+is} dx` by the midpoint rule on the exact
/// pieces of `A ∩ g⁻¹B`, each cut at the segment's kinks, with about
/// `cells` cells per unit length.
pub fn matrix_element_quadrature(
    g: &PwMap,
    a: &IntervalSet,
    b: &IntervalSet,
    p: f64,
    s: f64,
    cells: usize,
) -> Result<Complex64> {
    check_p(p)?;
    let z = Complex64::new(1.0 / p, s);
    let mut total = Complex64::new(0.0, 0.0);
    for (k, xa, xb) in g.preimage_pieces(a, b) {
        let seg = &g.segments()[k];
        let mut cuts = vec![xa];
        cuts.extend(seg.kinks().into_iter().map(|c| seg.x0 + c).filter(|&x| x > xa && x < xb));
        cuts.push(xb);
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let m = ((hi - lo) * cells as f64).ceil().max(1.0) as usize;
            let h = (hi - lo) / m as f64;
            let mut part = Complex64::new(0.0, 0.0);
            for i in 0..m {
                part += power(seg.derivative(lo + (i as f64 + 0.5) * h), z);
            }
            total += part * h;
        }
    }
    Ok(total)
}

/// Both evaluations of `⟨T_{1/p+is}(g) χ_A, χ_B⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatrixElement {
    pub quadrature: Complex64,
    pub char_fn: Complex64,
}

impl MatrixElement {
    pub fn discrepancy(&self) -> f64 {
        (self.quadrature - self.char_fn).norm()
    }
}

pub fn matrix_element(
    g: &PwMap,
    a: &IntervalSet,
    b: &IntervalSet,
    p: f64,
    s: f64,
    cells: usize,
) -> Result<MatrixElement> {
    let quadrature = matrix_element_quadrature(g, a, b, p, s, cells)?;
    let char_fn = g.rn_distribution(a, b).char_fn(Complex64::new(1.0 / p, s))?;
    Ok(MatrixElement { quadrature, char_fn })
}

/// `(1 − 2⁻ᴺ)(1 − 2√2/π)`: lower bound for the distance of every
/// oscillation map to the identity at depth `N`, from the gap
/// `|χ(½) − 1|` of the derivative law at each level.
pub fn oscillation_lower_bound(depth: u32) -> f64 {
    (1.0 - (-(depth as f64)).exp2()) * (1.0 - 2.0 * 2f64.sqrt() / PI)
}

/// Settings shared by the demos.
#[derive(Debug, Clone)]
pub struct DemoConfig {
    pub metric: GmsMetricConfig,
    pub grid_n: usize,
    /// Level of the dyadic test pairs `(A, B)`.
    pub pair_level: u32,
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig { metric: GmsMetricConfig::default(), grid_n: DEFAULT_GRID_N, pair_level: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OscillationRow {
    pub j: usize,
    /// `max_{A,B} |⟨T₁(g_j)χ_A, χ_B⟩ − μ(A∩B)|` over dyadic test pairs.
    pub matrix_element_error: f64,
    /// `‖T₁(g_j)·1 − 1‖₁`.
    pub strong_defect: f64,
    pub gms_distance: f64,
}

/// Weak convergence of `T₁(g_j)` to the identity without strong
/// convergence, for the oscillation maps `g_j`.
pub fn weak_not_strong_demo(js: &[usize], cfg: &DemoConfig) -> Result<Vec<OscillationRow>> {
    let id_profile = MatrixProfile::new(&PwMap::identity(), cfg.metric.depth);
    let pairs = IntervalSet::dyadic_partition(cfg.pair_level);
    let one = GridFunction::constant(cfg.grid_n, 1.0)?;
    let mut rows = Vec::with_capacity(js.len());
    for &j in js {
        if j == 0 {
            return Err(Error::invalid("oscillation demo", "indices start at 1"));
        }
        let g = fixtures::oscillation(j);
        let mut worst: f64 = 0.0;
        for a in &pairs {
            for b in &pairs {
                let m = matrix_element_quadrature(&g, a, b, 1.0, 0.0, cfg.grid_n)?;
                worst = worst.max((m - Complex64::new(a.intersect(b).measure(), 0.0)).norm());
            }
        }
        let t1 = operator_apply(&g, &one, 1.0, 0.0)?;
        let strong_defect = lp_norm(&t1.sub(&one)?, 1.0);
        let gms = profile_distance(&MatrixProfile::new(&g, cfg.metric.depth), &id_profile, &cfg.metric.grid)?;
        rows.push(OscillationRow { j, matrix_element_error: worst, strong_defect, gms_distance: gms });
    }
    Ok(rows)
}

/// `Rf(x) = f(2x mod 1)`: the strong limit of the doubling exchanges.
pub fn doubling_limit(f: &GridFunction) -> GridFunction {
    let n = f.len();
    let values = (0..n)
        .map(|i| {
            let x = midpoint(i, n);
            f.interpolate(if x <= 0.5 { 2.0 * x } else { 2.0 * x - 1.0 })
        })
        .collect();
    GridFunction { values }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DoublingRow {
    pub n: u32,
    /// `sup |g_n(x) − (2x mod 1)|` over the grid.
    pub sup_deviation: f64,
    /// `‖T_{1/p}(g_n) f − Rf‖_p`.
    pub norm_defect: f64,
    pub measure_preserving: bool,
}

/// Strong convergence of `T_{1/p}(g_n)` to the non-invertible `R`.
pub fn doubling_closure_demo(n_max: u32, f: &GridFunction, p: f64) -> Result<Vec<DoublingRow>> {
    check_p(p)?;
    let rf = doubling_limit(f);
    let len = f.len();
    let mut rows = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        let g = fixtures::doubling(n);
        let tf = operator_apply(&g, f, p, 0.0)?;
        let mut sup: f64 = 0.0;
        for i in 0..len {
            let x = midpoint(i, len);
            let target = if x <= 0.5 { 2.0 * x } else { 2.0 * x - 1.0 };
            sup = sup.max((g.evaluate(x)? - target).abs());
        }
        rows.push(DoublingRow {
            n,
            sup_deviation: sup,
            norm_defect: lp_norm(&tf.sub(&rf)?, p),
            measure_preserving: g.is_measure_preserving(),
        });
    }
    Ok(rows)
}

/// Writes serializable rows as CSV preceded by a `# config:` comment line.
pub fn write_rows_csv<W: Write, T: Serialize>(mut out: W, config: &str, rows: &[T]) -> Result<()> {
    writeln!(out, "# config: {config}")?;
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{g0, h2, psi_u};

    fn small() -> GmsMetricConfig {
        GmsMetricConfig { depth: 3, ..Default::default() }
    }

    #[test]
    fn distance_is_a_pseudometric_on_fixtures() {
        let maps = [PwMap::identity(), g0(), psi_u(), h2()];
        let cfg = small();
        for a in &maps {
            assert_eq!(gms_distance(a, a, &cfg).unwrap(), 0.0);
            for b in &maps {
                let ab = gms_distance(a, b, &cfg).unwrap();
                assert_eq!(ab, gms_distance(b, a, &cfg).unwrap());
                for c in &maps {
                    let ac = gms_distance(a, c, &cfg).unwrap();
                    let cb = gms_distance(c, b, &cfg).unwrap();
                    assert!(ab <= ac + cb + 1e-12);
                }
            }
        }
        assert!(gms_distance(&g0(), &PwMap::identity(), &cfg).unwrap() > 0.1);
    }

    #[test]
    fn identity_operator_and_g0_square_roots() {
        let f = GridFunction::from_fn(256, |x| (3.0 * x).sin() + 2.0).unwrap();
        let same = operator_apply(&PwMap::identity(), &f, 2.0, 0.0).unwrap();
        assert_eq!(same, f);
        let one = GridFunction::constant(256, 1.0).unwrap();
        let r = operator_apply(&g0(), &one, 2.0, 0.0).unwrap();
        assert_eq!(r.values()[0].re, 0.5f64.sqrt());
        assert_eq!(r.values()[255].re, 1.5f64.sqrt());
    }

    #[test]
    fn g0_matrix_element_matches_closed_form() {
        let m = matrix_element(&g0(), &IntervalSet::full(), &IntervalSet::full(), 2.0, 0.0, DEFAULT_GRID_N).unwrap();
        let exact = (2f64.sqrt() + 6f64.sqrt()) / 4.0;
        assert!((m.quadrature.re - exact).abs() < 1e-12);
        assert!((m.char_fn.re - exact).abs() < 1e-12);
    }

    #[test]
    fn identity_matrix_elements_are_overlaps() {
        let a = IntervalSet::interval(0.1, 0.6).unwrap();
        let b = IntervalSet::interval(0.4, 0.9).unwrap();
        let m = matrix_element(&PwMap::identity(), &a, &b, 3.0, 0.7, 1024).unwrap();
        assert!((m.quadrature - Complex64::new(0.2, 0.0)).norm() < 1e-15);
        assert!((m.char_fn - Complex64::new(0.2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn lower_bound_oracle() {
        // ∫₀¹ √(1 + cos 2πx) dx by a fine midpoint rule
        let n = 1_000_000;
        let chi: f64 = (0..n)
            .map(|i| (1.0 + (2.0 * PI * (i as f64 + 0.5) / n as f64).cos()).sqrt())
            .sum::<f64>()
            / n as f64;
        let gap = 1.0 - chi;
        assert!((oscillation_lower_bound(3) - 0.875 * gap).abs() < 1e-9);
    }

    #[test]
    fn oscillation_distance_stays_away_from_zero() {
        let cfg = small();
        for j in [8, 16, 24] {
            let d = gms_distance(&fixtures::oscillation(j), &PwMap::identity(), &cfg).unwrap();
            assert!(d >= oscillation_lower_bound(3), "j = {j}: {d}");
        }
    }

    #[test]
    fn doubling_limit_of_a_linear_function() {
        let f = GridFunction::from_fn(1024, |x| x).unwrap();
        let r = doubling_limit(&f);
        assert!((r.values()[100].re - 2.0 * midpoint(100, 1024)).abs() < 1e-12);
        assert!((r.values()[1000].re - (2.0 * midpoint(1000, 1024) - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_exponent() {
        let f = GridFunction::constant(8, 1.0).unwrap();
        assert!(operator_apply(&g0(), &f, 0.5, 0.0).is_err());
        assert!(GridFunction::new(vec![Complex64::new(1.0, 0.0)]).is_err());
    }
}
