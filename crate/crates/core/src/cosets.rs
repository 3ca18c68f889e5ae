//! Double-coset invariants: Rokhlin's functions `F, F₁, F₂, …` of the
//! derivative and the canonical label `(ν₁, ν₂, …; ν∞)`.
//!
//! A linear segment makes the derivative constant on a set of positive
//! measure, so every such level has infinite multiplicity and goes to `ν∞`.
//! Each monotone quantile segment is a "sheet" on which the derivative is
//! injective; at a value `y` the multiplicity is the number of sheets whose
//! law has positive density at `y`, and `ν_n` has the `n`-th largest sheet
//! density.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laurent::Laurent;
use crate::measure::{Piece, RMeasure};
use crate::transform::{Form, LawAccumulator, PwMap, Segment};

/// Tolerance for label equality on CDFs and atom masses.
pub const LABEL_TOL: f64 = 1e-10;

/// Residual allowed when validating invariant inequalities.
pub const INVARIANT_TOL: f64 = 1e-12;

/// `(ν₁ ≥ ν₂ ≥ … ; ν∞)`, with `ν_j` continuous.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CanonicalLabel {
    pub nu: Vec<RMeasure>,
    pub nu_inf: RMeasure,
}

#[derive(Deserialize)]
struct RawLabel {
    #[serde(default)]
    nu: Vec<RMeasure>,
    #[serde(default)]
    nu_inf: RMeasure,
}

impl<'de> Deserialize<'de> for CanonicalLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawLabel::deserialize(d)?;
        CanonicalLabel::new(raw.nu, raw.nu_inf).map_err(serde::de::Error::custom)
    }
}

impl CanonicalLabel {
    /// Validates continuity of the finite components and the ordering
    /// `ν_j ≥ ν_{j+1}`; trailing zero components are dropped.
    pub fn new(mut nu: Vec<RMeasure>, nu_inf: RMeasure) -> Result<Self> {
        while nu.last().is_some_and(RMeasure::is_zero) {
            nu.pop();
        }
        for (j, m) in nu.iter().enumerate() {
            if !m.is_continuous() {
                return Err(Error::invalid("label", format!("component ν{} has atoms", j + 1)));
            }
        }
        for j in 1..nu.len() {
            nu[j - 1].checked_sub(&nu[j], INVARIANT_TOL).map_err(|_| {
                Error::invalid("label", format!("ordering ν{} >= ν{} fails", j, j + 1))
            })?;
        }
        Ok(CanonicalLabel { nu, nu_inf })
    }

    /// `ν = Σ ν_j + ν∞`.
    pub fn total(&self) -> RMeasure {
        RMeasure::sum(self.nu.iter().chain(std::iter::once(&self.nu_inf)))
    }

    /// Checks `∫dν = 1` and `∫t dν = 1` within `tol`.
    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        let total = self.total();
        let (m, mo) = (total.mass(), total.moment());
        if (m - 1.0).abs() > tol || (mo - 1.0).abs() > tol {
            return Err(Error::Precondition(format!(
                "label is not normalized: mass residual {:e}, moment residual {:e}",
                m - 1.0,
                mo - 1.0
            )));
        }
        Ok(())
    }

    /// Label equality: matching component counts, CDF sup-distance of every
    /// component within `tol`, and atoms of `ν∞` at identical locations with
    /// masses within `tol`.
    pub fn approx_eq(&self, other: &CanonicalLabel, tol: f64) -> bool {
        if self.nu.len() != other.nu.len() {
            return false;
        }
        if self.nu.iter().zip(&other.nu).any(|(a, b)| a.cdf_distance(b) > tol) {
            return false;
        }
        let (a, b) = (self.nu_inf.atoms(), other.nu_inf.atoms());
        if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| x.t != y.t || (x.mass - y.mass).abs() > tol) {
            return false;
        }
        self.nu_inf.cdf_distance(&other.nu_inf) <= tol
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("label serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Rokhlin invariants stored as measures: `cumulative[n-1]` has CDF `F_n`,
/// `total` has CDF `F`.
#[derive(Debug, Clone, PartialEq)]
pub struct RokhlinInvariants {
    pub cumulative: Vec<RMeasure>,
    pub total: RMeasure,
}

impl RokhlinInvariants {
    /// Number of stored functions `K`; `F_n = F_K` for `n > K`.
    pub fn k(&self) -> usize {
        self.cumulative.len()
    }

    /// `F_n(y)`, with `F_0 ≡ 0`.
    pub fn f_n(&self, n: usize, y: f64) -> f64 {
        match n {
            0 => 0.0,
            n if n <= self.k() => self.cumulative[n - 1].cdf_at(y),
            _ => self.cumulative.last().map_or(0.0, |m| m.cdf_at(y)),
        }
    }

    pub fn f(&self, y: f64) -> f64 {
        self.total.cdf_at(y)
    }

    /// `F_k(y) - 2F_{k+1}(y) + F_{k+2}(y)`.
    pub fn second_difference(&self, k: usize, y: f64) -> f64 {
        self.f_n(k, y) - 2.0 * self.f_n(k + 1, y) + self.f_n(k + 2, y)
    }

    /// Sample points covering every breakpoint of the stored measures plus a
    /// uniform grid of `n` points over the support.
    pub fn sample_points(&self, n: usize) -> Vec<f64> {
        let mut ys = Vec::new();
        for m in self.cumulative.iter().chain(std::iter::once(&self.total)) {
            ys.extend(m.atoms().iter().map(|a| a.t));
            for p in m.pieces() {
                ys.push(p.a);
                ys.push(p.b);
            }
        }
        if let Some((lo, hi)) = self.total.support() {
            let (lo, hi) = (0.5 * lo, hi * 1.5);
            ys.extend((0..n).map(|i| lo + (hi - lo) * i as f64 / (n.max(2) - 1) as f64));
        }
        ys.sort_by(f64::total_cmp);
        ys.dedup();
        ys
    }

    /// Checks the listed conditions: `F` a probability CDF,
    /// `0 <= F₁ <= … <= F`, and the second differences `F_k - 2F_{k+1} +
    /// F_{k+2} <= 0` (decreasing increments, the ordering `ν₁ ≥ ν₂ ≥ …`).
    pub fn check(&self) -> Result<()> {
        let mass = self.total.mass();
        if (mass - 1.0).abs() > 1e-10 {
            return Err(Error::invalid("invariants", format!("F tends to {mass}, not 1")));
        }
        let mut prev = RMeasure::zero();
        for (n, m) in self.cumulative.iter().enumerate() {
            m.checked_sub(&prev, INVARIANT_TOL)
                .map_err(|_| Error::invalid("invariants", format!("F{} <= F{} fails", n, n + 1)))?;
            prev = m.clone();
        }
        self.total
            .checked_sub(&prev, INVARIANT_TOL)
            .map_err(|_| Error::invalid("invariants", format!("F{} <= F fails", self.k())))?;
        for y in self.sample_points(200) {
            for k in 0..=self.k() {
                let d = self.second_difference(k, y);
                if d > INVARIANT_TOL {
                    return Err(Error::invalid(
                        "invariants",
                        format!("F{k} - 2F{} + F{} <= 0 fails at y = {y} (value {d:e})", k + 1, k + 2),
                    ));
                }
            }
        }
        Ok(())
    }

    /// CSV table `y, F1..FK, F` at the given points.
    pub fn write_csv<W: Write>(&self, out: W, ys: &[f64]) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["y".to_string()];
        header.extend((1..=self.k()).map(|n| format!("F{n}")));
        header.push("F".into());
        w.write_record(&header)?;
        for &y in ys {
            let mut row = vec![format!("{y}")];
            row.extend((1..=self.k()).map(|n| format!("{}", self.f_n(n, y))));
            row.push(format!("{}", self.f(y)));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Canonical label of the double coset of `g`.
pub fn canonical_form(g: &PwMap) -> Result<CanonicalLabel> {
    let mut atoms = LawAccumulator::new();
    let mut sheets: Vec<RMeasure> = Vec::new();
    for s in g.segments() {
        match &s.form {
            Form::Linear { slope } => atoms.add_atom_span(*slope, s.x0, s.x1),
            Form::Quantile(q) => sheets.push(Segment::quantile_law(q, s.len(), 0.0, s.len())),
            Form::Sampled(_) => {
                return Err(Error::Unsupported(
                    "canonical forms need exact segments; the map has sampled pieces".into(),
                ))
            }
        }
    }
    let nu = rank_sheets(&sheets);
    CanonicalLabel::new(nu, atoms.finish())
}

pub fn rokhlin_invariants(g: &PwMap) -> Result<RokhlinInvariants> {
    invariants_from_label(&canonical_form(g)?)
}

/// `F_n = Σ_{j≤n} ν_j`, `F = Σ ν_j + ν∞`.
pub fn invariants_from_label(lbl: &CanonicalLabel) -> Result<RokhlinInvariants> {
    let lbl = CanonicalLabel::new(lbl.nu.clone(), lbl.nu_inf.clone())?;
    let mut cumulative = Vec::with_capacity(lbl.nu.len());
    for n in 1..=lbl.nu.len() {
        cumulative.push(RMeasure::sum(&lbl.nu[..n]));
    }
    Ok(RokhlinInvariants { cumulative, total: lbl.total() })
}

/// `ν_n = F_n - F_{n-1}`, `ν∞ = F - F_K`, after validating the invariants.
pub fn label_from_invariants(inv: &RokhlinInvariants) -> Result<CanonicalLabel> {
    inv.check()?;
    let mut nu = Vec::with_capacity(inv.k());
    let mut prev = RMeasure::zero();
    for m in &inv.cumulative {
        nu.push(m.checked_sub(&prev, INVARIANT_TOL)?);
        prev = m.clone();
    }
    let nu_inf = inv.total.checked_sub(&prev, INVARIANT_TOL)?;
    CanonicalLabel::new(nu, nu_inf)
}

/// Whether `g` and `h` lie in the same double coset.
pub fn same_double_coset(g: &PwMap, h: &PwMap) -> Result<bool> {
    Ok(canonical_form(g)?.approx_eq(&canonical_form(h)?, LABEL_TOL))
}

/// One component of the model space `𝓛[ν₁, …; ν∞]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaceComponent {
    /// `"line"` for a copy of the half-line, `"product"` for `ℝ^× × [0,1]`.
    pub kind: &'static str,
    /// Index `j` of the line, absent for the product block.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    /// Mass carried in `𝓛`.
    pub mass: f64,
    /// Mass carried in the `t`-weighted space `𝓛*`.
    pub t_mass: f64,
    pub measure: RMeasure,
}

/// Description of `𝓛[ν₁, …; ν∞]` and `𝓛*`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaceDescription {
    pub components: Vec<SpaceComponent>,
    pub total_mass: f64,
    pub total_t_mass: f64,
}

pub fn canonical_space_description(lbl: &CanonicalLabel) -> SpaceDescription {
    let mut components: Vec<SpaceComponent> = lbl
        .nu
        .iter()
        .enumerate()
        .filter(|(_, m)| !m.is_zero())
        .map(|(j, m)| SpaceComponent {
            kind: "line",
            index: Some(j + 1),
            mass: m.mass(),
            t_mass: m.moment(),
            measure: m.clone(),
        })
        .collect();
    if !lbl.nu_inf.is_zero() {
        components.push(SpaceComponent {
            kind: "product",
            index: None,
            mass: lbl.nu_inf.mass(),
            t_mass: lbl.nu_inf.moment(),
            measure: lbl.nu_inf.clone(),
        });
    }
    let total_mass = crate::numeric::exact_sum(components.iter().map(|c| c.mass));
    let total_t_mass = crate::numeric::exact_sum(components.iter().map(|c| c.t_mass));
    SpaceDescription { components, total_mass, total_t_mass }
}

/// Ranks sheet densities pointwise: `ν_n` gets the `n`-th largest.
fn rank_sheets(sheets: &[RMeasure]) -> Vec<RMeasure> {
    let mut cuts: Vec<f64> = sheets
        .iter()
        .flat_map(|m| m.pieces().iter().flat_map(|p| [p.a, p.b]))
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|b, a| (*b - *a).abs() <= 1e-14 * a.abs().max(b.abs()));
    let mut ranked: Vec<Vec<Piece>> = Vec::new();
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mid = 0.5 * (lo + hi);
        let active: Vec<&Laurent> = sheets
            .iter()
            .filter_map(|m| {
                m.pieces()
                    .iter()
                    .find(|p| p.a <= mid && mid < p.b)
                    .map(|p| &p.density)
            })
            .collect();
        if active.is_empty() {
            continue;
        }
        let mut sub = vec![lo, hi];
        for i in 0..active.len() {
            for j in i + 1..active.len() {
                sub.extend(crossings(active[i], active[j], lo, hi));
            }
        }
        sub.sort_by(f64::total_cmp);
        sub.dedup();
        for s in sub.windows(2) {
            let (a, b) = (s[0], s[1]);
            if b <= a {
                continue;
            }
            let m = 0.5 * (a + b);
            let mut order: Vec<&Laurent> = active.clone();
            order.sort_by(|x, y| y.eval(m).total_cmp(&x.eval(m)));
            if ranked.len() < order.len() {
                ranked.resize(order.len(), Vec::new());
            }
            for (n, d) in order.into_iter().enumerate() {
                ranked[n].push(Piece::new(a, b, d.clone()));
            }
        }
    }
    ranked.into_iter().map(|p| RMeasure::from_parts(vec![], p)).collect()
}

/// Sign changes of `p - q` on `(lo, hi)`, located by bisection. Differences
/// below a relative noise floor are treated as ties.
fn crossings(p: &Laurent, q: &Laurent, lo: f64, hi: f64) -> Vec<f64> {
    if p == q {
        return Vec::new();
    }
    const SAMPLES: usize = 32;
    let scale = p.sampled_max_abs(lo, hi).max(q.sampled_max_abs(lo, hi));
    let floor = 1e-13 * scale;
    let d = |t: f64| p.eval(t) - q.eval(t);
    let mut out = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for k in 0..=SAMPLES {
        let t = lo + (hi - lo) * k as f64 / SAMPLES as f64;
        let v = d(t);
        if v.abs() <= floor {
            continue;
        }
        if let Some((t0, v0)) = prev {
            if v0.signum() != v.signum() {
                let (mut a, mut b) = (t0, t);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if m <= a || m >= b {
                        break;
                    }
                    if d(m).signum() == v0.signum() {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                out.push(0.5 * (a + b));
            }
        }
        prev = Some((t, v));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::measure::Atom;

    #[test]
    fn identity_and_g0_live_in_nu_inf() {
        let id = canonical_form(&PwMap::identity()).unwrap();
        assert!(id.nu.is_empty());
        assert_eq!(id.nu_inf, RMeasure::dirac(1.0, 1.0));
        let g0 = canonical_form(&fixtures::g0()).unwrap();
        assert!(g0.nu.is_empty());
        assert_eq!(g0.nu_inf.atoms(), &[Atom { t: 0.5, mass: 0.5 }, Atom { t: 1.5, mass: 0.5 }]);
    }

    #[test]
    fn psi_u_has_a_single_line() {
        let l = canonical_form(&fixtures::psi_u()).unwrap();
        assert_eq!(l.nu, vec![RMeasure::uniform(0.5, 1.5, 1.0)]);
        assert!(l.nu_inf.is_zero());
        let inv = rokhlin_invariants(&fixtures::psi_u()).unwrap();
        for y in [0.6, 1.0, 1.4] {
            assert_eq!(inv.f_n(1, y), inv.f(y));
        }
    }

    #[test]
    fn h2_splits_into_two_halves() {
        let l = canonical_form(&fixtures::h2()).unwrap();
        let half = RMeasure::uniform(0.5, 1.5, 0.5);
        assert_eq!(l.nu, vec![half.clone(), half]);
        let inv = invariants_from_label(&l).unwrap();
        for y in [0.7, 1.2] {
            assert!((inv.f_n(1, y) - 0.5 * inv.f(y)).abs() < 1e-15);
            assert!((inv.f_n(2, y) - inv.f(y)).abs() < 1e-15);
        }
        let back = label_from_invariants(&inv).unwrap();
        assert!(back.approx_eq(&l, 1e-12));
    }

    #[test]
    fn crossing_sheets_are_ranked() {
        // densities t and 2 - t on (1/2, 3/2] cross at t = 1
        let a = RMeasure::from_parts(vec![], vec![Piece::new(0.5, 1.5, Laurent::new(0, vec![0.0, 1.0]))]);
        let b = RMeasure::from_parts(vec![], vec![Piece::new(0.5, 1.5, Laurent::new(0, vec![2.0, -1.0]))]);
        let nu = rank_sheets(&[a, b]);
        assert_eq!(nu.len(), 2);
        assert!((nu[0].cdf_at(1.0) - 0.625).abs() < 1e-14);
        assert!((nu[1].cdf_at(1.0) - 0.375).abs() < 1e-14);
        assert!(nu[0].checked_sub(&nu[1], 1e-12).is_ok());
    }

    #[test]
    fn labels_from_zero_invariants() {
        let nu = RMeasure::uniform(0.5, 1.5, 1.0);
        let inv = RokhlinInvariants { cumulative: vec![], total: nu.clone() };
        let l = label_from_invariants(&inv).unwrap();
        assert!(l.nu.is_empty());
        assert_eq!(l.nu_inf, nu);
        let single = CanonicalLabel::new(vec![nu.clone()], RMeasure::zero()).unwrap();
        let inv = invariants_from_label(&single).unwrap();
        assert_eq!(inv.cumulative[0], nu);
        assert_eq!(inv.total, nu);
    }

    #[test]
    fn invalid_invariants_name_the_inequality() {
        let nu = RMeasure::uniform(0.5, 1.5, 1.0);
        let inv = RokhlinInvariants { cumulative: vec![nu.scale(0.25), nu.scale(0.75)], total: nu };
        let err = label_from_invariants(&inv).unwrap_err().to_string();
        assert!(err.contains("F0 - 2F1 + F2"), "{err}");
        let over = RokhlinInvariants { cumulative: vec![RMeasure::uniform(0.5, 1.5, 2.0)], total: RMeasure::uniform(0.5, 1.5, 1.0) };
        assert!(label_from_invariants(&over).unwrap_err().to_string().contains("F1 <= F"));
    }

    #[test]
    fn sampled_maps_are_unsupported() {
        let err = canonical_form(&fixtures::oscillation(2)).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn space_descriptions() {
        let nu = RMeasure::uniform(0.5, 1.5, 1.0);
        let line = canonical_space_description(&CanonicalLabel::new(vec![nu.clone()], RMeasure::zero()).unwrap());
        assert_eq!(line.components.len(), 1);
        assert_eq!(line.components[0].kind, "line");
        let spread = canonical_space_description(&CanonicalLabel::new(vec![], nu.clone()).unwrap());
        assert_eq!(spread.components[0].kind, "product");
        let halves = canonical_space_description(
            &CanonicalLabel::new(vec![nu.scale(0.5), nu.scale(0.5)], RMeasure::zero()).unwrap(),
        );
        for c in &halves.components {
            assert!((c.t_mass - 0.5).abs() < 1e-15);
        }
        assert!((halves.total_mass - 1.0).abs() < 1e-15);
    }

    #[test]
    fn labels_are_biinvariant() {
        use crate::transform::random_interval_exchange;
        for g in [fixtures::g0(), fixtures::psi_u(), fixtures::h2(), fixtures::h3()] {
            let base = canonical_form(&g).unwrap();
            for seed in 0..20 {
                let u = random_interval_exchange(seed, 5).unwrap();
                let v = random_interval_exchange(seed + 1000, 4).unwrap();
                let ugv = PwMap::compose(&u, &PwMap::compose(&g, &v).unwrap()).unwrap();
                assert_eq!(canonical_form(&ugv).unwrap(), base, "seed {seed}");
            }
        }
    }

    #[test]
    fn label_json_roundtrip() {
        let l = canonical_form(&fixtures::h2()).unwrap();
        assert_eq!(CanonicalLabel::from_json(&l.to_json()).unwrap(), l);
    }
}
