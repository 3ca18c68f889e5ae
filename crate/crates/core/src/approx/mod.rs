//! Approximation engines: splitting and spreading of measures, the closure
//! composer, and discretization of derivatives to finitely many values.
//!
//! The engines describe maps between the model spaces `𝓛[ν₁, …; ν∞]` by
//! derivative-law data over a block partition of the value axis (see
//! [`BlockMap`]); the measure-preserving identifications in between are
//! never materialized.

mod blockmap;
mod discretize;

pub use blockmap::{BlockEntry, BlockId, BlockMap, BlockMetric, BlockRow, IdentityTarget, ModelSpace, Sheet, StageRow};
pub use discretize::{discretize_gms, discretize_sequence, DiscretizeRow};

use serde::Serialize;

use crate::cosets::CanonicalLabel;
use crate::error::{Error, Result};
use crate::measure::{RMeasure, ValueInterval};

/// Tolerance for the matching conditions and constraint residuals.
pub const MATCH_TOL: f64 = 1e-10;

/// The partition `C₀ = (0, a₁], …, C_{2ⁿ-1} = (a_{2ⁿ-1}, ∞)` with
/// `a_k = k 2⁻ⁿ / (1 - k 2⁻ⁿ) = k / (2ⁿ - k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SplitPartition {
    pub level: u32,
}

impl SplitPartition {
    pub fn new(level: u32) -> Result<Self> {
        if !(1..=30).contains(&level) {
            return Err(Error::invalid("split partition", format!("level {level} outside 1..=30")));
        }
        Ok(SplitPartition { level })
    }

    pub fn block_count(&self) -> usize {
        1 << self.level
    }

    /// `a_k` as the exact ratio `(k, 2ⁿ - k)`.
    pub fn cut_ratio(&self, k: usize) -> (u64, u64) {
        (k as u64, (self.block_count() - k) as u64)
    }

    /// `a_k`, correctly rounded, for `1 <= k < 2ⁿ`.
    pub fn cut(&self, k: usize) -> f64 {
        let (p, q) = self.cut_ratio(k);
        p as f64 / q as f64
    }

    pub fn cuts(&self) -> Vec<f64> {
        (1..self.block_count()).map(|k| self.cut(k)).collect()
    }

    /// `C_k`.
    pub fn block(&self, k: usize) -> ValueInterval {
        let lo = if k == 0 { 0.0 } else { self.cut(k) };
        if k + 1 == self.block_count() {
            ValueInterval::above(lo)
        } else {
            ValueInterval::new(lo, self.cut(k + 1))
        }
    }

    /// The `k` with `t ∈ C_k`.
    pub fn block_of(&self, t: f64) -> usize {
        let n = self.block_count();
        let guess = (t * n as f64 / (1.0 + t)).ceil() as isize - 1;
        let mut k = guess.clamp(0, n as isize - 1) as usize;
        while k > 0 && t <= self.cut(k) {
            k -= 1;
        }
        while k + 1 < n && t > self.cut(k + 1) {
            k += 1;
        }
        k
    }
}

/// `ν` restricted to a window `[c, c + m]` of its own quantile levels.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    /// Lower level `c`.
    pub level: f64,
    /// The sub-interval `[z, z°]` of values carrying the window.
    pub lo: f64,
    pub hi: f64,
    pub law: RMeasure,
}

/// Finds the window of `rho` with mass `m` and first moment `w`.
///
/// The window moment is continuous and nondecreasing in the lower level, so
/// plain bisection on the level is enough; endpoint residuals are reported
/// when the target moment is out of reach.
pub fn find_window(rho: &RMeasure, m: f64, w: f64) -> Result<Window> {
    let total = rho.mass();
    if !rho.is_continuous() {
        return Err(Error::Precondition("windows need a continuous measure".into()));
    }
    if m <= 0.0 {
        let z = rho.support().map_or(0.0, |s| s.0);
        if w.abs() > MATCH_TOL {
            return Err(Error::numeric("empty window with nonzero moment", w.abs(), MATCH_TOL));
        }
        return Ok(Window { level: 0.0, lo: z, hi: z, law: RMeasure::zero() });
    }
    if m > total * (1.0 + 1e-12) + 1e-15 {
        return Err(Error::Precondition(format!("window mass {m} exceeds available mass {total}")));
    }
    if m >= total * (1.0 - 1e-12) {
        // the whole measure; its moment must already match
        let residual = (rho.moment() - w).abs();
        if residual > MATCH_TOL {
            return Err(Error::numeric("full window moment", residual, MATCH_TOL));
        }
        let (lo, hi) = rho.support().unwrap_or((0.0, 0.0));
        return Ok(Window { level: 0.0, lo, hi, law: rho.clone() });
    }
    let span = (total - m).max(0.0);
    let phi = |c: f64| rho.quantile_window(c, c + m).moment() - w;
    let (mut lo, mut hi) = (0.0, span);
    let (f_lo, f_hi) = (phi(lo), phi(hi));
    let tol = MATCH_TOL;
    if f_lo > tol || f_hi < -tol {
        return Err(Error::numeric(
            &format!("no window matches the moment (endpoint residuals {f_lo:e}, {f_hi:e})"),
            f_lo.abs().min(f_hi.abs()),
            tol,
        ));
    }
    let level = if f_lo >= 0.0 {
        lo
    } else if f_hi <= 0.0 {
        hi
    } else {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if phi(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if phi(lo).abs() <= phi(hi).abs() {
            lo
        } else {
            hi
        }
    };
    let law = rho.quantile_window(level, level + m);
    let residual = (law.moment() - w).abs();
    if residual > tol {
        return Err(Error::numeric("window moment", residual, tol));
    }
    let (z, z_end) = law.support().unwrap_or((0.0, 0.0));
    Ok(Window { level, lo: z, hi: z_end, law })
}

/// `rho` with the window removed.
fn remainder(rho: &RMeasure, win: &Window) -> RMeasure {
    let m = win.law.mass();
    if m <= 0.0 {
        return rho.clone();
    }
    if win.law == *rho {
        return RMeasure::zero();
    }
    rho.quantile_window(0.0, win.level).add(&rho.quantile_window(win.level + m, f64::INFINITY))
}

/// The matching interval `B ⊂ C` with `ν(B) = ν₁(C)` and
/// `(tν)(B) = (tν₁)(C)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchInterval {
    pub lo: f64,
    pub hi: f64,
    /// `ν|_B`.
    pub law: RMeasure,
    pub mass_residual: f64,
    pub moment_residual: f64,
}

pub fn find_bk(nu: &RMeasure, nu1: &RMeasure, c: ValueInterval) -> Result<MatchInterval> {
    let rho = nu.restrict(c);
    if !rho.is_continuous() {
        return Err(Error::Precondition("ν must be continuous on the block".into()));
    }
    let part = nu1.restrict(c);
    rho.checked_sub(&part, 1e-12)
        .map_err(|_| Error::Precondition(format!("ν₁ <= ν fails on ({}, {}]", c.lo, c.hi)))?;
    let (m, w) = (part.mass(), part.moment());
    if m >= rho.mass() * (1.0 - 1e-14) {
        let (lo, hi) = rho.support().unwrap_or((c.lo, c.lo));
        return Ok(MatchInterval {
            lo,
            hi,
            mass_residual: rho.mass() - m,
            moment_residual: rho.moment() - w,
            law: rho,
        });
    }
    let win = find_window(&rho, m, w)?;
    Ok(MatchInterval {
        lo: if m > 0.0 { win.lo } else { c.lo },
        hi: if m > 0.0 { win.hi } else { c.lo },
        mass_residual: win.law.mass() - m,
        moment_residual: win.law.moment() - w,
        law: win.law,
    })
}

fn check_normalized(nu: &RMeasure, what: &str) -> Result<()> {
    let (m, mo) = (nu.mass() - 1.0, nu.moment() - 1.0);
    if m.abs() > MATCH_TOL || mo.abs() > MATCH_TOL {
        return Err(Error::Precondition(format!("{what}: mass residual {m:e}, moment residual {mo:e}")));
    }
    Ok(())
}

/// `θₙ`: splitting `ν = ν₁ + ν₂` on the level-`n` partition. Copy `j` of
/// block `C_k` carries `ν|_{B_k}` (resp. `ν|_{C_k ∖ B_k}`) and maps to itself.
pub fn splitting_theta(nu: &RMeasure, nu1: &RMeasure, nu2: &RMeasure, n: u32) -> Result<BlockMap> {
    if !nu.is_continuous() {
        return Err(Error::Precondition("splitting needs a continuous ν".into()));
    }
    check_normalized(nu, "ν")?;
    let sum = nu1.add(nu2);
    let gap = sum.cdf_distance(nu);
    if gap > MATCH_TOL || (sum.moment() - nu.moment()).abs() > MATCH_TOL {
        return Err(Error::Precondition(format!("ν₁ + ν₂ differs from ν: CDF residual {gap:e}")));
    }
    let part = SplitPartition::new(n)?;
    let source = ModelSpace::new(vec![nu.clone()], RMeasure::zero());
    let target = ModelSpace::new(vec![nu1.clone(), nu2.clone()], RMeasure::zero());
    let mut entries = Vec::new();
    for k in 0..part.block_count() {
        let c = part.block(k);
        let rho = nu.restrict(c);
        if rho.is_zero() {
            continue;
        }
        let m1 = nu1.restrict(c);
        let win = find_window(&rho, m1.mass(), m1.moment())?;
        let rest = remainder(&rho, &win);
        for (j, law, mass) in [(1, win.law, m1.mass()), (2, rest, nu2.restrict(c).mass())] {
            if mass > 0.0 || !law.is_zero() {
                let source = BlockId { sheet: Sheet::Line(1), cell: k };
                let target = BlockId { sheet: Sheet::Line(j), cell: k };
                entries.push(BlockEntry { source, target, law, mass });
            }
        }
    }
    BlockMap::new(n, source, target, entries)
}

/// `υₙ`: spreading a line onto product blocks `C_k × [0, 1]`; block `C_k`
/// of the line goes onto `C_k × [0, 1]` with the law `ν|_{C_k}`.
pub fn spreading_upsilon(nu: &RMeasure, n: u32) -> Result<BlockMap> {
    if !nu.is_continuous() {
        return Err(Error::Precondition("spreading needs a continuous ν".into()));
    }
    check_normalized(nu, "ν")?;
    let part = SplitPartition::new(n)?;
    let mut entries = Vec::new();
    for k in 0..part.block_count() {
        let law = nu.restrict(part.block(k));
        if law.is_zero() {
            continue;
        }
        let source = BlockId { sheet: Sheet::Line(1), cell: k };
        let target = BlockId { sheet: Sheet::Spread, cell: k };
        entries.push(BlockEntry { source, target, mass: law.mass(), law });
    }
    let source = ModelSpace::new(vec![nu.clone()], RMeasure::zero());
    BlockMap::new(n, source, ModelSpace::new(vec![], nu.clone()), entries)
}

/// Inner level `n(k) = k + 2` of the composer.
pub fn composer_level(k: u32) -> u32 {
    k + 2
}

/// Stage `k` of the approximation of `id: 𝓛^∞ → 𝓛^∞_*` by elements of the
/// double coset of the convex section of `ν`: the first `k` lines are split
/// off exactly (consecutive windows per block), the remaining lines share
/// one window in proportion to their masses, and what is left of `ν^c` is
/// spread over the product blocks together with the atoms of `ν`.
pub fn closure_composer(nu: &RMeasure, target: &CanonicalLabel, k: u32) -> Result<BlockMap> {
    check_normalized(nu, "ν")?;
    let total = target.total();
    let gap = total.cdf_distance(nu);
    let (dm, dmo) = (total.mass() - nu.mass(), total.moment() - nu.moment());
    if gap > MATCH_TOL || dm.abs() > MATCH_TOL || dmo.abs() > MATCH_TOL {
        return Err(Error::Precondition(format!(
            "target components do not sum to ν: CDF residual {gap:e}, mass residual {dm:e}, moment residual {dmo:e}"
        )));
    }
    let (nu_c, nu_d) = nu.decompose();
    for at in nu_d.atoms() {
        let have = target.nu_inf.atoms().iter().find(|b| b.t == at.t).map_or(0.0, |b| b.mass);
        if (have - at.mass).abs() > MATCH_TOL {
            return Err(Error::Precondition(format!(
                "atom of ν at {} must sit in ν∞ (residual {:e})",
                at.t,
                have - at.mass
            )));
        }
    }
    let n = composer_level(k);
    let part = SplitPartition::new(n)?;
    let lines = target.nu.len();
    let explicit = (k as usize).min(lines);
    let from_line = |cell| BlockId { sheet: Sheet::Line(1), cell };
    let mut entries = Vec::new();
    for cell in 0..part.block_count() {
        let c = part.block(cell);
        let mut rho = nu_c.restrict(c);
        for j in 0..explicit {
            let piece = target.nu[j].restrict(c);
            if piece.is_zero() {
                continue;
            }
            let win = find_window(&rho, piece.mass(), piece.moment())?;
            rho = remainder(&rho, &win);
            let to = BlockId { sheet: Sheet::Line(j + 1), cell };
            entries.push(BlockEntry { source: from_line(cell), target: to, law: win.law, mass: piece.mass() });
        }
        if lines > explicit {
            let tail: Vec<RMeasure> = target.nu[explicit..].iter().map(|m| m.restrict(c)).collect();
            let tail_sum = RMeasure::sum(&tail);
            if !tail_sum.is_zero() {
                let win = find_window(&rho, tail_sum.mass(), tail_sum.moment())?;
                rho = remainder(&rho, &win);
                let tm = tail_sum.mass();
                for (i, piece) in tail.iter().enumerate() {
                    if piece.is_zero() {
                        continue;
                    }
                    let to = BlockId { sheet: Sheet::Line(explicit + i + 1), cell };
                    let law = win.law.scale(piece.mass() / tm);
                    entries.push(BlockEntry { source: from_line(cell), target: to, law, mass: piece.mass() });
                }
            }
        }
        let to = BlockId { sheet: Sheet::Spread, cell };
        let spread_c = target.nu_inf.restrict(c).mass() - nu_d.restrict(c).mass();
        if !rho.is_zero() || spread_c > MATCH_TOL {
            entries.push(BlockEntry { source: from_line(cell), target: to, law: rho, mass: spread_c.max(0.0) });
        }
        let atoms = nu_d.restrict(c);
        if !atoms.is_zero() {
            let from = BlockId { sheet: Sheet::Spread, cell };
            entries.push(BlockEntry { source: from, target: to, mass: atoms.mass(), law: atoms });
        }
    }
    let source = ModelSpace::new(vec![nu_c], nu_d);
    BlockMap::new(n, source, ModelSpace::new(target.nu.clone(), target.nu_inf.clone()), entries)
}

/// One stage of a convergence run together with the map it measured.
pub type Stage = (StageRow, BlockMap);

fn measure_stages(
    stages: &[u32],
    metric: &BlockMetric,
    target: &ModelSpace,
    build: impl Fn(u32) -> Result<BlockMap>,
) -> Result<Vec<Stage>> {
    let ident = metric.target(target)?;
    stages
        .iter()
        .map(|&s| {
            let map = build(s)?;
            let d = metric.distance(&map, &ident)?;
            Ok((StageRow::new(s, &map, d), map))
        })
        .collect()
}

/// `θₙ` for every `n` in `levels`, measured against the identity of
/// `𝓛[ν₁, ν₂; 0]`.
pub fn run_split(nu: &RMeasure, nu1: &RMeasure, nu2: &RMeasure, levels: &[u32], metric: &BlockMetric) -> Result<Vec<Stage>> {
    let target = ModelSpace::new(vec![nu1.clone(), nu2.clone()], RMeasure::zero());
    measure_stages(levels, metric, &target, |n| splitting_theta(nu, nu1, nu2, n))
}

/// `υₙ` for every `n` in `levels`, measured against the identity of
/// `𝓛[0; ν]`.
pub fn run_spread(nu: &RMeasure, levels: &[u32], metric: &BlockMetric) -> Result<Vec<Stage>> {
    let target = ModelSpace::new(vec![], nu.clone());
    measure_stages(levels, metric, &target, |n| spreading_upsilon(nu, n))
}

/// Composer stages `k`, measured against the identity of the target space.
pub fn run_compose(nu: &RMeasure, label: &CanonicalLabel, stages: &[u32], metric: &BlockMetric) -> Result<Vec<Stage>> {
    let target = ModelSpace::new(label.nu.clone(), label.nu_inf.clone());
    measure_stages(stages, metric, &target, |k| closure_composer(nu, label, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::uniform_nu;

    #[test]
    fn split_points_small_levels() {
        let p = SplitPartition::new(2).unwrap();
        assert_eq!(p.cuts(), vec![1.0 / 3.0, 1.0, 3.0]);
        assert_eq!(SplitPartition::new(1).unwrap().cuts(), vec![1.0]);
        for n in 1..=12 {
            let c = SplitPartition::new(n).unwrap().cuts();
            assert!(c.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn finer_partitions_refine_coarser_ones() {
        let coarse = SplitPartition::new(3).unwrap();
        let fine = SplitPartition::new(6).unwrap();
        for k in 1..coarse.block_count() {
            assert_eq!(coarse.cut(k), fine.cut(k << 3));
        }
        for t in [0.01, 0.5, 1.0, 1.0001, 7.0, 1e6] {
            let k = fine.block_of(t);
            assert!(fine.block(k).contains(t), "{t}");
            assert_eq!(coarse.block_of(t), k >> 3);
        }
    }

    #[test]
    fn bk_for_half_uniform() {
        let nu = uniform_nu();
        let c = ValueInterval::new(1.0 / 3.0, 1.0);
        let b = find_bk(&nu, &nu.scale(0.5), c).unwrap();
        assert!((b.lo - 0.625).abs() < 1e-10 && (b.hi - 0.875).abs() < 1e-10, "{b:?}");
        assert!(b.mass_residual.abs() < 1e-12 && b.moment_residual.abs() < 1e-12);
    }

    #[test]
    fn bk_degenerate_cases() {
        let nu = uniform_nu();
        let c = ValueInterval::new(1.0 / 3.0, 1.0);
        let full = find_bk(&nu, &nu, c).unwrap();
        assert_eq!((full.lo, full.hi), (0.5, 1.0));
        let empty = find_bk(&nu, &RMeasure::zero(), c).unwrap();
        assert_eq!(empty.lo, empty.hi);
        assert!(empty.law.is_zero());
        assert!(find_bk(&nu, &nu.scale(2.0), c).is_err());
    }

    #[test]
    fn theta_block_contents() {
        let nu = uniform_nu();
        let half = nu.scale(0.5);
        let theta = splitting_theta(&nu, &half, &half, 2).unwrap();
        let e = theta.entry(BlockId { sheet: Sheet::Line(1), cell: 1 }).unwrap();
        assert!((e.mass - 0.25).abs() < 1e-15);
        let expected = RMeasure::uniform(0.625, 0.875, 1.0);
        assert!(e.law.cdf_distance(&expected) < 1e-10);
        let copy1: f64 = theta.entries().iter().filter(|e| e.target.sheet == Sheet::Line(1)).map(|e| e.mass).sum();
        assert!((copy1 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn upsilon_block_contents() {
        let nu = uniform_nu();
        let up = spreading_upsilon(&nu, 2).unwrap();
        let e = up.entry(BlockId { sheet: Sheet::Line(1), cell: 1 }).unwrap();
        assert_eq!(e.target, BlockId { sheet: Sheet::Spread, cell: 1 });
        assert_eq!(e.law, RMeasure::uniform(0.5, 1.0, 1.0));
        assert_eq!(e.mass, 0.5);
    }

    fn assert_close(a: &BlockMap, b: &BlockMap) {
        assert_eq!(a.level(), b.level());
        assert_eq!(a.entries().len(), b.entries().len());
        for (x, y) in a.entries().iter().zip(b.entries()) {
            assert_eq!((x.source, x.target), (y.source, y.target));
            assert!((x.mass - y.mass).abs() < 1e-12);
            assert!(x.law.cdf_distance(&y.law) < 1e-12, "{:?}", x.source);
        }
    }

    #[test]
    fn composer_reductions() {
        let nu = uniform_nu();
        let single = CanonicalLabel::new(vec![nu.clone()], RMeasure::zero()).unwrap();
        for k in 1..4 {
            let chi = closure_composer(&nu, &single, k).unwrap();
            let space = ModelSpace::new(vec![nu.clone()], RMeasure::zero());
            assert_close(&chi, &BlockMap::identity(composer_level(k), space).unwrap());
        }
        let half = CanonicalLabel::new(vec![nu.scale(0.5), nu.scale(0.5)], RMeasure::zero()).unwrap();
        let chi = closure_composer(&nu, &half, 3).unwrap();
        assert_close(&chi, &splitting_theta(&nu, &nu.scale(0.5), &nu.scale(0.5), 5).unwrap());
        let spread = CanonicalLabel::new(vec![], nu.clone()).unwrap();
        assert_close(&closure_composer(&nu, &spread, 2).unwrap(), &spreading_upsilon(&nu, 4).unwrap());
    }

    #[test]
    fn engines_conserve_mass_and_stay_in_blocks() {
        let nu = uniform_nu();
        let half = nu.scale(0.5);
        for n in 1..=6 {
            for map in [splitting_theta(&nu, &half, &half, n).unwrap(), spreading_upsilon(&nu, n).unwrap()] {
                let (block, law) = map.mass_residuals();
                assert!(block < 1e-12 && law < 1e-12, "{n}: {block:e} {law:e}");
                let (m, w) = map.totals();
                assert!((m - 1.0).abs() < 1e-12 && (w - 1.0).abs() < 1e-10);
                assert!(map.supports_within_blocks());
            }
        }
    }

    #[test]
    fn identity_is_at_distance_zero() {
        let nu = uniform_nu();
        let metric = BlockMetric { depth: 6, ..BlockMetric::default() };
        let space = ModelSpace::new(vec![nu.scale(0.5), nu.scale(0.5)], RMeasure::zero());
        let target = metric.target(&space).unwrap();
        let id = BlockMap::identity(3, space).unwrap();
        assert!(metric.distance(&id, &target).unwrap() < 1e-12);
    }

    #[test]
    fn splitting_and_spreading_distances_decrease() {
        let nu = uniform_nu();
        let half = nu.scale(0.5);
        let metric = BlockMetric { depth: 8, ..BlockMetric::default() };
        let split_target = metric.target(&ModelSpace::new(vec![half.clone(), half.clone()], RMeasure::zero())).unwrap();
        let spread_target = metric.target(&ModelSpace::new(vec![], nu.clone())).unwrap();
        let dist = |n| {
            let a = metric.distance(&splitting_theta(&nu, &half, &half, n).unwrap(), &split_target).unwrap();
            let b = metric.distance(&spreading_upsilon(&nu, n).unwrap(), &spread_target).unwrap();
            (a, b)
        };
        // levels 1 and 2 cut the support of ν at the same place
        let mut prev = dist(1);
        for n in 2..=6 {
            let (a, b) = dist(n);
            if n == 2 {
                assert!((a - prev.0).abs() < 1e-12 && (b - prev.1).abs() < 1e-12);
            } else {
                assert!(a < prev.0 && b < prev.1, "n = {n}: {a} {b} after {prev:?}");
            }
            prev = (a, b);
        }
    }

    #[test]
    fn composer_rejects_mismatched_targets() {
        let nu = uniform_nu();
        let wrong = CanonicalLabel::new(vec![nu.scale(0.5)], RMeasure::zero()).unwrap();
        let err = closure_composer(&nu, &wrong, 2).unwrap_err().to_string();
        assert!(err.contains("mass residual"), "{err}");
    }
}
