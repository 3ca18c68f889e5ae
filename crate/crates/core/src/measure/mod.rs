//! Finite positive measures on the half-line `(0, ∞)`: finitely many atoms
//! plus a piecewise Laurent-polynomial density.
//!
//! Masses and first moments are closed-form; characteristic functions
//! `χ(z) = ∫ t^z dν` on the strip `0 <= Re z <= 1` are evaluated exactly on
//! atoms and by adaptive quadrature on densities.

mod bins;
mod charfn;
pub mod json;

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::laurent::Laurent;
use crate::numeric::{solve_monotone, ExactSum};

pub(crate) use bins::bin_totals;
pub use bins::ValueBinGrid;
pub use charfn::{measure_distance, StripGrid};

/// Point mass `mass · δ_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub t: f64,
    pub mass: f64,
}

/// Density `f(t)` on the value interval `(a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub a: f64,
    pub b: f64,
    pub density: Laurent,
}

impl Piece {
    pub fn new(a: f64, b: f64, density: Laurent) -> Self {
        Piece { a, b, density }
    }

    pub fn mass(&self) -> f64 {
        self.density.integral(self.a, self.b)
    }

    pub fn moment(&self) -> f64 {
        self.density.first_moment(self.a, self.b)
    }

    fn clipped(&self, lo: f64, hi: f64) -> Option<Piece> {
        let a = self.a.max(lo);
        let b = self.b.min(hi);
        (b > a).then(|| Piece::new(a, b, self.density.clone()))
    }
}

/// Half-open value interval `(lo, hi]`; `hi` may be `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueInterval {
    pub lo: f64,
    pub hi: f64,
}

impl ValueInterval {
    pub fn new(lo: f64, hi: f64) -> Self {
        ValueInterval { lo, hi }
    }

    pub fn above(lo: f64) -> Self {
        ValueInterval { lo, hi: f64::INFINITY }
    }

    pub fn contains(&self, t: f64) -> bool {
        t > self.lo && t <= self.hi
    }
}

/// A finite positive measure on `(0, ∞)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RMeasure {
    atoms: Vec<Atom>,
    pieces: Vec<Piece>,
}

/// Ordered atom or density block used by CDF and quantile walks.
#[derive(Debug, Clone)]
enum Element<'a> {
    Atom(Atom),
    Density { a: f64, b: f64, density: &'a Laurent },
}

impl Element<'_> {
    fn mass(&self) -> f64 {
        match self {
            Element::Atom(at) => at.mass,
            Element::Density { a, b, density } => density.integral(*a, *b),
        }
    }
}

const POSITIVITY_TOL: f64 = 1e-12;

impl RMeasure {
    pub fn zero() -> Self {
        RMeasure::default()
    }

    /// `mass · δ_t`.
    pub fn dirac(t: f64, mass: f64) -> Self {
        RMeasure::from_parts(vec![Atom { t, mass }], vec![])
    }

    /// Constant density `height` on `(a, b]`.
    pub fn uniform(a: f64, b: f64, height: f64) -> Self {
        RMeasure::from_parts(vec![], vec![Piece::new(a, b, Laurent::constant(height))])
    }

    /// Validated constructor for external data: atom locations must be
    /// positive and distinct, pieces disjoint with nonnegative densities.
    pub fn new(atoms: Vec<Atom>, pieces: Vec<Piece>) -> Result<Self> {
        for (i, at) in atoms.iter().enumerate() {
            if !(at.t > 0.0 && at.t.is_finite()) {
                return Err(Error::invalid("measure", format!("atom {i} has non-positive location {}", at.t)));
            }
            if !(at.mass >= 0.0 && at.mass.is_finite()) {
                return Err(Error::invalid("measure", format!("atom {i} has negative mass {}", at.mass)));
            }
        }
        let mut locs: Vec<f64> = atoms.iter().map(|a| a.t).collect();
        locs.sort_by(f64::total_cmp);
        if let Some(w) = locs.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invalid("measure", format!("duplicate atom location {}", w[0])));
        }
        for (i, p) in pieces.iter().enumerate() {
            if !(p.a >= 0.0 && p.b > p.a && p.b.is_finite()) {
                return Err(Error::invalid("measure", format!("piece {i} has bad interval ({}, {}]", p.a, p.b)));
            }
            p.density.check_bounds()?;
            if p.a == 0.0 && p.density.low < 0 {
                return Err(Error::invalid("measure", format!("piece {i} has a non-integrable singularity at 0")));
            }
            let scale = p.density.sampled_max_abs(p.a, p.b).max(1.0);
            if p.density.sampled_min(p.a, p.b) < -POSITIVITY_TOL * scale {
                return Err(Error::invalid("measure", format!("piece {i} has a negative density on ({}, {}]", p.a, p.b)));
            }
        }
        let mut order: Vec<usize> = (0..pieces.len()).collect();
        order.sort_by(|&i, &j| pieces[i].a.total_cmp(&pieces[j].a));
        for w in order.windows(2) {
            if pieces[w[1]].a < pieces[w[0]].b {
                return Err(Error::invalid(
                    "measure",
                    format!("pieces {} and {} overlap", w[0], w[1]),
                ));
            }
        }
        Ok(RMeasure::from_parts(atoms, pieces))
    }

    /// Normalizing constructor for internally produced data: merges atoms at
    /// equal locations (exact sums), adds overlapping densities, drops empty
    /// parts and fuses contiguous pieces with identical densities.
    pub fn from_parts(atoms: Vec<Atom>, pieces: Vec<Piece>) -> Self {
        RMeasure {
            atoms: normalize_atoms(atoms),
            pieces: normalize_pieces(pieces),
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty() && self.pieces.is_empty()
    }

    pub fn is_continuous(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_atomic(&self) -> bool {
        self.pieces.is_empty()
    }

    /// `∫ dν`.
    pub fn mass(&self) -> f64 {
        let mut acc = ExactSum::new();
        for at in &self.atoms {
            acc.add(at.mass);
        }
        for p in &self.pieces {
            acc.add(p.mass());
        }
        acc.value()
    }

    /// `∫ t dν`.
    pub fn moment(&self) -> f64 {
        let mut acc = ExactSum::new();
        for at in &self.atoms {
            acc.add_prod(at.t, at.mass);
        }
        for p in &self.pieces {
            acc.add(p.moment());
        }
        acc.value()
    }

    /// Smallest and largest points of the support, `None` for the zero measure.
    pub fn support(&self) -> Option<(f64, f64)> {
        let lo = self
            .atoms
            .iter()
            .map(|a| a.t)
            .chain(self.pieces.iter().map(|p| p.a))
            .min_by(f64::total_cmp)?;
        let hi = self
            .atoms
            .iter()
            .map(|a| a.t)
            .chain(self.pieces.iter().map(|p| p.b))
            .max_by(f64::total_cmp)?;
        Some((lo, hi))
    }

    /// `ν|_J`.
    pub fn restrict(&self, j: ValueInterval) -> RMeasure {
        let atoms = self.atoms.iter().filter(|a| j.contains(a.t)).copied().collect();
        let pieces = self.pieces.iter().filter_map(|p| p.clipped(j.lo, j.hi)).collect();
        RMeasure { atoms, pieces }
    }

    /// `ν + μ`.
    pub fn add(&self, other: &RMeasure) -> RMeasure {
        let atoms = self.atoms.iter().chain(&other.atoms).copied().collect();
        let pieces = self.pieces.iter().chain(&other.pieces).cloned().collect();
        RMeasure::from_parts(atoms, pieces)
    }

    /// Sum of many measures with a single normalization pass.
    pub fn sum<'a>(items: impl IntoIterator<Item = &'a RMeasure>) -> RMeasure {
        let mut atoms = Vec::new();
        let mut pieces = Vec::new();
        for m in items {
            atoms.extend_from_slice(&m.atoms);
            pieces.extend(m.pieces.iter().cloned());
        }
        RMeasure::from_parts(atoms, pieces)
    }

    /// `c · ν` for `c >= 0`.
    pub fn scale(&self, c: f64) -> RMeasure {
        assert!(c >= 0.0, "scale factor must be nonnegative");
        if c == 0.0 {
            return RMeasure::zero();
        }
        RMeasure {
            atoms: self.atoms.iter().map(|a| Atom { t: a.t, mass: a.mass * c }).collect(),
            pieces: self
                .pieces
                .iter()
                .map(|p| Piece::new(p.a, p.b, p.density.scale(c)))
                .collect(),
        }
    }

    /// The measure `t · ν`.
    pub fn t_weight(&self) -> Result<RMeasure> {
        let mut pieces = Vec::with_capacity(self.pieces.len());
        for p in &self.pieces {
            let d = p.density.shift(1);
            d.check_bounds()?;
            pieces.push(Piece::new(p.a, p.b, d));
        }
        Ok(RMeasure {
            atoms: self.atoms.iter().map(|a| Atom { t: a.t, mass: a.mass * a.t }).collect(),
            pieces,
        })
    }

    /// Pushforward under `t ↦ s t`.
    pub fn dilate(&self, s: f64) -> RMeasure {
        if s == 1.0 {
            return self.clone();
        }
        RMeasure::from_parts(
            self.atoms.iter().map(|a| Atom { t: a.t * s, mass: a.mass }).collect(),
            self.pieces
                .iter()
                .map(|p| Piece::new(p.a * s, p.b * s, p.density.dilate(s)))
                .collect(),
        )
    }

    /// Pushforward of `t · ν` under `t ↦ 1/t`, i.e. `t⁻¹ ν(t⁻¹)` in the
    /// notation of the inverse-map identity.
    pub fn weighted_reciprocal(&self) -> Result<RMeasure> {
        let mut pieces = Vec::with_capacity(self.pieces.len());
        for p in &self.pieces {
            if p.a == 0.0 {
                return Err(Error::Precondition("reciprocal of a density touching 0".into()));
            }
            let d = p.density.weighted_reciprocal();
            d.check_bounds()?;
            pieces.push(Piece::new(1.0 / p.b, 1.0 / p.a, d));
        }
        Ok(RMeasure::from_parts(
            self.atoms.iter().map(|a| Atom { t: 1.0 / a.t, mass: a.mass * a.t }).collect(),
            pieces,
        ))
    }

    /// `(ν^c, ν^d)`: density part and atomic part.
    pub fn decompose(&self) -> (RMeasure, RMeasure) {
        (
            RMeasure { atoms: vec![], pieces: self.pieces.clone() },
            RMeasure { atoms: self.atoms.clone(), pieces: vec![] },
        )
    }

    fn elements(&self) -> Vec<Element<'_>> {
        let mut out: Vec<(f64, u8, Element<'_>)> = Vec::with_capacity(self.atoms.len() + self.pieces.len());
        for at in &self.atoms {
            out.push((at.t, 0, Element::Atom(*at)));
        }
        for p in &self.pieces {
            let mut a = p.a;
            for at in self.atoms.iter().filter(|at| at.t > p.a && at.t < p.b) {
                out.push((a, 1, Element::Density { a, b: at.t, density: &p.density }));
                a = at.t;
            }
            out.push((a, 1, Element::Density { a, b: p.b, density: &p.density }));
        }
        out.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        out.into_iter().map(|(_, _, e)| e).collect()
    }

    /// `F(y) = ν((0, y])`.
    pub fn cdf_at(&self, y: f64) -> f64 {
        let mut acc = ExactSum::new();
        for at in self.atoms.iter().filter(|a| a.t <= y) {
            acc.add(at.mass);
        }
        for p in &self.pieces {
            if y > p.a {
                acc.add(p.density.integral(p.a, y.min(p.b)));
            }
        }
        acc.value()
    }

    /// `ν((0, y))`.
    pub fn cdf_before(&self, y: f64) -> f64 {
        let at_y: f64 = self.atoms.iter().filter(|a| a.t == y).map(|a| a.mass).sum();
        self.cdf_at(y) - at_y
    }

    /// Generalized inverse `G(z) = inf { y : F(y) > z }` for `0 <= z < mass`.
    pub fn quantile_at(&self, z: f64) -> Result<f64> {
        let mass = self.mass();
        if !(z >= 0.0 && z < mass) {
            return Err(Error::OutOfRange { level: z, mass });
        }
        let mut c = 0.0;
        let elements = self.elements();
        for e in &elements {
            let w = e.mass();
            if w <= 0.0 {
                continue;
            }
            if c + w > z {
                return Ok(match e {
                    Element::Atom(at) => at.t,
                    Element::Density { a, b, density } => invert_density(density, *a, *b, z - c),
                });
            }
            c += w;
        }
        // rounding in the running sum: fall back to the top of the support
        Ok(self.support().map(|s| s.1).unwrap_or(0.0))
    }

    /// Lower generalized inverse `inf { y : F(y) >= z }` for `0 < z <= mass`.
    pub fn quantile_left(&self, z: f64) -> Result<f64> {
        let mass = self.mass();
        if !(z > 0.0 && z <= mass * (1.0 + 1e-15)) {
            return Err(Error::OutOfRange { level: z, mass });
        }
        let mut c = 0.0;
        let elements = self.elements();
        let mut last = 0.0;
        for e in &elements {
            let w = e.mass();
            if w <= 0.0 {
                continue;
            }
            if c + w >= z {
                return Ok(match e {
                    Element::Atom(at) => at.t,
                    Element::Density { a, b, density } => {
                        let target = z - c;
                        if target >= w {
                            *b
                        } else {
                            invert_density(density, *a, *b, target)
                        }
                    }
                });
            }
            c += w;
            last = match e {
                Element::Atom(at) => at.t,
                Element::Density { b, .. } => *b,
            };
        }
        Ok(last)
    }

    /// Pushforward of Lebesgue measure on the level window `[z1, z2]` under
    /// the quantile function; equivalently the measure with CDF
    /// `clamp(F(y) - z1, 0, z2 - z1)`.
    pub fn quantile_window(&self, z1: f64, z2: f64) -> RMeasure {
        let mut atoms = Vec::new();
        let mut pieces = Vec::new();
        if z2 <= z1 {
            return RMeasure::zero();
        }
        let mut c = 0.0;
        for e in self.elements() {
            let w = e.mass();
            if w <= 0.0 {
                continue;
            }
            let lo = z1.max(c);
            let hi = z2.min(c + w);
            if hi > lo {
                match e {
                    Element::Atom(at) => atoms.push(Atom { t: at.t, mass: hi - lo }),
                    Element::Density { a, b, density } => {
                        // levels within rounding of a piece end snap to it
                        let slack = 8.0 * f64::EPSILON * (c + w);
                        let ya = if lo <= c + slack { a } else { invert_density(density, a, b, lo - c) };
                        let yb = if hi >= c + w - slack { b } else { invert_density(density, a, b, hi - c) };
                        if yb > ya {
                            pieces.push(Piece::new(ya, yb, density.clone()));
                        }
                    }
                }
            }
            c += w;
            if c >= z2 {
                break;
            }
        }
        RMeasure::from_parts(atoms, pieces)
    }

    /// `ν - μ` when the difference is (numerically) a positive measure.
    /// Residual negativity up to `tol` (relative to the local scale) is
    /// absorbed; anything larger is reported.
    pub fn checked_sub(&self, other: &RMeasure, tol: f64) -> Result<RMeasure> {
        let mut atoms = Vec::new();
        for at in &self.atoms {
            let m = other.atoms.iter().filter(|o| o.t == at.t).map(|o| o.mass).sum::<f64>();
            atoms.push(Atom { t: at.t, mass: at.mass - m });
        }
        for o in &other.atoms {
            if !self.atoms.iter().any(|a| a.t == o.t) {
                atoms.push(Atom { t: o.t, mass: -o.mass });
            }
        }
        for at in atoms.iter_mut() {
            if at.mass < -tol {
                return Err(Error::Precondition(format!(
                    "difference has a negative atom {} at t = {}",
                    at.mass, at.t
                )));
            }
            if at.mass < tol {
                at.mass = 0.0;
            }
        }
        let negated: Vec<Piece> = other
            .pieces
            .iter()
            .map(|p| Piece::new(p.a, p.b, p.density.scale(-1.0)))
            .collect();
        let mut pieces = refine(self.pieces.iter().cloned().chain(negated).collect());
        for p in &pieces {
            let scale = p.density.sampled_max_abs(p.a, p.b);
            if p.density.sampled_min(p.a, p.b) < -tol.max(tol * scale) && p.density.integral(p.a, p.b).abs() > tol {
                return Err(Error::Precondition(format!(
                    "difference has a negative density on ({}, {}]",
                    p.a, p.b
                )));
            }
        }
        pieces.retain(|p| p.density.sampled_max_abs(p.a, p.b) * (p.b - p.a) > tol);
        Ok(RMeasure::from_parts(atoms, pieces))
    }

    /// `sup_y |F_ν(y) - F_μ(y)|`, evaluated at every breakpoint (both sides)
    /// and at interior sample points of each elementary interval.
    pub fn cdf_distance(&self, other: &RMeasure) -> f64 {
        let mut pts: Vec<f64> = Vec::new();
        for m in [self, other] {
            pts.extend(m.atoms.iter().map(|a| a.t));
            for p in &m.pieces {
                pts.push(p.a);
                pts.push(p.b);
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let mut worst: f64 = 0.0;
        for (i, &y) in pts.iter().enumerate() {
            worst = worst.max((self.cdf_at(y) - other.cdf_at(y)).abs());
            worst = worst.max((self.cdf_before(y) - other.cdf_before(y)).abs());
            if let Some(&next) = pts.get(i + 1) {
                for k in 1..8 {
                    let s = y + (next - y) * k as f64 / 8.0;
                    worst = worst.max((self.cdf_at(s) - other.cdf_at(s)).abs());
                }
            }
        }
        worst
    }
}

/// Solves `∫_a^y f = target` for `y ∈ [a, b]`.
fn invert_density(f: &Laurent, a: f64, b: f64, target: f64) -> f64 {
    if target <= 0.0 {
        return a;
    }
    let total = f.integral(a, b);
    if target >= total {
        return b;
    }
    solve_monotone(|y| f.integral(a, y), |y| f.eval(y), a, b, target)
}

fn normalize_atoms(mut atoms: Vec<Atom>) -> Vec<Atom> {
    atoms.retain(|a| a.mass != 0.0);
    atoms.sort_by(|x, y| x.t.total_cmp(&y.t));
    let mut out: Vec<Atom> = Vec::with_capacity(atoms.len());
    let mut i = 0;
    while i < atoms.len() {
        let t = atoms[i].t;
        let mut acc = ExactSum::new();
        while i < atoms.len() && atoms[i].t == t {
            acc.add(atoms[i].mass);
            i += 1;
        }
        let mass = acc.value();
        if mass != 0.0 {
            out.push(Atom { t, mass });
        }
    }
    out
}

fn same_point(x: f64, y: f64) -> bool {
    (x - y).abs() <= 1e-14 * x.abs().max(y.abs()).max(1e-300)
}

/// Common refinement of possibly overlapping pieces, densities summed.
fn refine(mut pieces: Vec<Piece>) -> Vec<Piece> {
    pieces.retain(|p| p.b > p.a && !p.density.is_zero());
    if pieces.len() <= 1 {
        return pieces;
    }
    pieces.sort_by(|x, y| x.a.total_cmp(&y.a));
    let disjoint = pieces.windows(2).all(|w| w[1].a >= w[0].b);
    if disjoint {
        return pieces;
    }
    let mut cuts: Vec<f64> = pieces.iter().flat_map(|p| [p.a, p.b]).collect();
    cuts.sort_by(f64::total_cmp);
    // snap breakpoints that differ only by rounding
    let mut snapped: Vec<f64> = Vec::with_capacity(cuts.len());
    for c in cuts {
        match snapped.last() {
            Some(&last) if same_point(last, c) => {}
            _ => snapped.push(c),
        }
    }
    let snap = |x: f64| -> f64 {
        let i = snapped.partition_point(|&c| c < x);
        let mut best = x;
        for j in [i.saturating_sub(1), i.min(snapped.len() - 1)] {
            if same_point(snapped[j], x) {
                best = snapped[j];
            }
        }
        best
    };
    for p in pieces.iter_mut() {
        p.a = snap(p.a);
        p.b = snap(p.b);
    }
    pieces.retain(|p| p.b > p.a);
    let mut out = Vec::new();
    let mut active: Vec<usize> = Vec::new();
    let mut next = 0;
    for w in snapped.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        active.retain(|&i| pieces[i].b > lo);
        while next < pieces.len() && pieces[next].a <= lo {
            if pieces[next].b > lo {
                active.push(next);
            }
            next += 1;
        }
        let mut density = Laurent::zero();
        let mut any = false;
        for &i in &active {
            if pieces[i].a <= lo && pieces[i].b >= hi {
                density = density.add(&pieces[i].density);
                any = true;
            }
        }
        if any && !density.is_zero() {
            out.push(Piece::new(lo, hi, density));
        }
    }
    out
}

fn normalize_pieces(pieces: Vec<Piece>) -> Vec<Piece> {
    let refined = refine(pieces);
    let mut out: Vec<Piece> = Vec::with_capacity(refined.len());
    for p in refined {
        if let Some(last) = out.last_mut() {
            if last.density == p.density && same_point(last.b, p.a) {
                last.b = p.b;
                continue;
            }
        }
        out.push(p);
    }
    out
}

impl PartialOrd for Atom {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.t.partial_cmp(&other.t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_unit() -> RMeasure {
        RMeasure::uniform(0.5, 1.5, 1.0)
    }

    fn two_atoms() -> RMeasure {
        RMeasure::from_parts(
            vec![Atom { t: 0.5, mass: 0.5 }, Atom { t: 1.5, mass: 0.5 }],
            vec![],
        )
    }

    #[test]
    fn mass_and_moment_examples() {
        let d1 = RMeasure::dirac(1.0, 1.0);
        assert_eq!((d1.mass(), d1.moment()), (1.0, 1.0));
        assert_eq!((two_atoms().mass(), two_atoms().moment()), (1.0, 1.0));
        let u = uniform_unit();
        assert!((u.mass() - 1.0).abs() < 1e-15);
        assert!((u.moment() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn restrict_examples() {
        let d1 = RMeasure::dirac(1.0, 1.0);
        assert_eq!(d1.restrict(ValueInterval::new(0.0, 2.0)), d1);
        let r = uniform_unit().restrict(ValueInterval::new(0.625, 0.875));
        assert_eq!(r, RMeasure::uniform(0.625, 0.875, 1.0));
        assert_eq!(r.mass(), 0.25);
        let upper = two_atoms().restrict(ValueInterval::above(1.0));
        assert_eq!(upper, RMeasure::dirac(1.5, 0.5));
    }

    #[test]
    fn restriction_and_complement_partition_mass() {
        let nu = uniform_unit().add(&two_atoms());
        let j = ValueInterval::new(0.7, 1.2);
        let inside = nu.restrict(j);
        let below = nu.restrict(ValueInterval::new(0.0, 0.7));
        let above = nu.restrict(ValueInterval::above(1.2));
        let total = inside.mass() + below.mass() + above.mass();
        assert!((total - nu.mass()).abs() < 1e-15);
    }

    #[test]
    fn linear_ops() {
        let a = RMeasure::dirac(2.0, 1.0).t_weight().unwrap();
        assert_eq!(a, RMeasure::dirac(2.0, 2.0));
        let tw = uniform_unit().t_weight().unwrap();
        assert_eq!(tw.pieces()[0].density, Laurent::new(1, vec![1.0]));
        assert!((tw.mass() - 1.0).abs() < 1e-15);
        let nu = uniform_unit().add(&two_atoms());
        let halves = nu.scale(0.5).add(&nu.scale(0.5));
        assert_eq!(halves, nu);
    }

    #[test]
    fn overlapping_densities_are_summed() {
        let a = RMeasure::uniform(0.0, 2.0, 1.0);
        let b = RMeasure::uniform(1.0, 3.0, 2.0);
        let s = a.add(&b);
        assert_eq!(s.pieces().len(), 3);
        assert!((s.mass() - 6.0).abs() < 1e-14);
        assert_eq!(s.pieces()[1].density, Laurent::constant(3.0));
    }

    #[test]
    fn degree_overflow_is_reported() {
        let p = Piece::new(1.0, 2.0, Laurent::new(8, vec![1.0]));
        let nu = RMeasure::from_parts(vec![], vec![p]);
        assert!(matches!(nu.t_weight(), Err(Error::DegreeOverflow { .. })));
    }

    #[test]
    fn cdf_and_quantile_examples() {
        let d1 = RMeasure::dirac(1.0, 1.0);
        assert_eq!(d1.cdf_at(2.0), 1.0);
        assert_eq!(d1.quantile_at(0.3).unwrap(), 1.0);
        assert_eq!(uniform_unit().quantile_at(0.25).unwrap(), 0.75);
        let steps = RMeasure::from_parts(
            vec![Atom { t: 2.0, mass: 0.25 }, Atom { t: 2.0 / 3.0, mass: 0.75 }],
            vec![],
        );
        for z in [0.0, 0.3, 0.7499] {
            assert_eq!(steps.quantile_at(z).unwrap(), 2.0 / 3.0);
        }
        for z in [0.75, 0.9, 0.999] {
            assert_eq!(steps.quantile_at(z).unwrap(), 2.0);
        }
        assert!(matches!(steps.quantile_at(1.0), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn quantile_jumps_over_gaps() {
        let nu = RMeasure::uniform(0.5, 1.0, 1.0).add(&RMeasure::uniform(2.0, 2.5, 1.0));
        assert_eq!(nu.quantile_at(0.5).unwrap(), 2.0);
        assert_eq!(nu.quantile_left(0.5).unwrap(), 1.0);
    }

    #[test]
    fn quantile_window_of_mixed_measure() {
        let nu = uniform_unit().scale(0.5).add(&RMeasure::dirac(1.0, 0.5));
        // levels: density on (0.5,1] has mass 0.25, then the atom, then density
        let w = nu.quantile_window(0.2, 0.6);
        assert!((w.mass() - 0.4).abs() < 1e-15);
        assert_eq!(w.atoms(), &[Atom { t: 1.0, mass: 0.35 }]);
    }

    #[test]
    fn validation_rejects_bad_measures() {
        assert!(RMeasure::new(vec![Atom { t: 0.0, mass: 1.0 }], vec![]).is_err());
        assert!(RMeasure::new(vec![Atom { t: 1.0, mass: 1.0 }, Atom { t: 1.0, mass: 1.0 }], vec![]).is_err());
        let neg = Piece::new(0.5, 1.5, Laurent::new(0, vec![1.0, -1.0]));
        assert!(RMeasure::new(vec![], vec![neg]).is_err());
        let p1 = Piece::new(0.5, 1.5, Laurent::constant(1.0));
        let p2 = Piece::new(1.0, 2.0, Laurent::constant(1.0));
        assert!(RMeasure::new(vec![], vec![p1, p2]).is_err());
    }

    #[test]
    fn decompose_splits_representation() {
        let nu = uniform_unit().add(&RMeasure::dirac(2.0, 0.5));
        let (c, d) = nu.decompose();
        assert_eq!(c, uniform_unit());
        assert_eq!(d, RMeasure::dirac(2.0, 0.5));
        assert_eq!(c.mass() + d.mass(), nu.mass());
        let (c1, d1) = RMeasure::dirac(1.0, 1.0).decompose();
        assert!(c1.is_zero());
        assert_eq!(d1, RMeasure::dirac(1.0, 1.0));
    }

    #[test]
    fn weighted_reciprocal_of_two_atoms() {
        let inv = two_atoms().weighted_reciprocal().unwrap();
        let expected = RMeasure::from_parts(
            vec![Atom { t: 2.0, mass: 0.25 }, Atom { t: 1.0 / 1.5, mass: 0.75 }],
            vec![],
        );
        assert_eq!(inv, expected);
    }

    #[test]
    fn checked_sub_rejects_non_dominated() {
        let u = uniform_unit();
        let half = u.scale(0.5);
        let rest = u.checked_sub(&half, 1e-12).unwrap();
        assert!(rest.cdf_distance(&half) < 1e-15);
        assert!(half.checked_sub(&u, 1e-12).is_err());
    }
}
