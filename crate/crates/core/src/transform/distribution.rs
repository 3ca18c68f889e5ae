//! Derivative laws `κ[g; A, B]`: the pushforward of Lebesgue measure on
//! `A ∩ g⁻¹(B)` under `x ↦ g′(x)`.

use std::collections::BTreeMap;

use super::{check_partition, IntervalSet, PwMap, Segment};
use crate::error::Result;
use crate::measure::{Atom, Piece, RMeasure};
use crate::numeric::ExactSum;

/// Collects atoms and density pieces, summing atom masses exactly.
///
/// Atom masses are fed as differences of interval endpoints, so the total
/// mass at a location is the exact sum of the underlying lengths no matter
/// how the domain was cut.
#[derive(Debug, Default)]
pub struct LawAccumulator {
    atoms: BTreeMap<u64, ExactSum>,
    pieces: Vec<Piece>,
}

impl LawAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Atom at `t` with mass `xb - xa` (exact).
    pub fn add_atom_span(&mut self, t: f64, xa: f64, xb: f64) {
        self.atoms.entry(t.to_bits()).or_default().add_diff(xb, xa);
    }

    pub fn add_atom(&mut self, t: f64, mass: f64) {
        self.atoms.entry(t.to_bits()).or_default().add(mass);
    }

    pub fn add_measure(&mut self, m: &RMeasure) {
        for a in m.atoms() {
            self.add_atom(a.t, a.mass);
        }
        self.pieces.extend(m.pieces().iter().cloned());
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty() && self.pieces.is_empty()
    }

    pub fn finish(self) -> RMeasure {
        let atoms = self
            .atoms
            .into_iter()
            .map(|(bits, s)| Atom { t: f64::from_bits(bits), mass: s.value() })
            .collect();
        RMeasure::from_parts(atoms, self.pieces)
    }
}

/// Matrix of derivative laws indexed by (domain part, image part).
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionMatrix {
    pub entries: Vec<Vec<RMeasure>>,
}

impl DistributionMatrix {
    pub fn rows(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, alpha: usize, beta: usize) -> &RMeasure {
        &self.entries[alpha][beta]
    }

    /// Row mass sums, `Σ_β ∫ dκ_{αβ}`.
    pub fn row_masses(&self) -> Vec<f64> {
        self.entries.iter().map(|row| crate::numeric::exact_sum(row.iter().map(RMeasure::mass))).collect()
    }

    /// Column moment sums, `Σ_α ∫ t dκ_{αβ}`.
    pub fn column_moments(&self) -> Vec<f64> {
        let cols = self.entries.first().map_or(0, Vec::len);
        (0..cols)
            .map(|b| crate::numeric::exact_sum(self.entries.iter().map(|row| row[b].moment())))
            .collect()
    }
}

/// Labelled elementary intervals of a family of interval sets, sorted.
fn labelled(parts: &[IntervalSet]) -> Vec<(f64, f64, usize)> {
    let mut v: Vec<(f64, f64, usize)> = parts
        .iter()
        .enumerate()
        .flat_map(|(k, s)| s.parts().iter().map(move |i| (i.lo, i.hi, k)))
        .collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v
}

fn label_of(cells: &[(f64, f64, usize)], x: f64) -> Option<usize> {
    let i = cells.partition_point(|c| c.1 < x);
    cells.get(i).filter(|c| c.0 <= x && x <= c.1).map(|c| c.2)
}

/// Core sweep: splits every segment at the domain cells' endpoints and at
/// preimages of the image cells' endpoints, and hands each sub-piece
/// `[xa, xb]` to `visit` with its (row, column) labels.
fn sweep_with(
    g: &PwMap,
    rows: &[IntervalSet],
    cols: &[IntervalSet],
    mut visit: impl FnMut(usize, &Segment, usize, usize, f64, f64),
) {
    let rcells = labelled(rows);
    let ccells = labelled(cols);
    let mut rcuts: Vec<f64> = rcells.iter().flat_map(|c| [c.0, c.1]).collect();
    rcuts.sort_by(f64::total_cmp);
    rcuts.dedup();
    let mut ccuts: Vec<f64> = ccells.iter().flat_map(|c| [c.0, c.1]).collect();
    ccuts.sort_by(f64::total_cmp);
    ccuts.dedup();

    for (k, seg) in g.segments().iter().enumerate() {
        let mut xs = vec![seg.x0];
        let lo = rcuts.partition_point(|&c| c <= seg.x0);
        let hi = rcuts.partition_point(|&c| c < seg.x1);
        xs.extend_from_slice(&rcuts[lo..hi]);
        let lo = ccuts.partition_point(|&c| c <= seg.y0);
        let hi = ccuts.partition_point(|&c| c < seg.y1);
        xs.extend(ccuts[lo..hi].iter().map(|&y| seg.preimage(y)));
        xs.push(seg.x1);
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        for w in xs.windows(2) {
            let (xa, xb) = (w[0], w[1]);
            if xb <= xa {
                continue;
            }
            let xm = 0.5 * (xa + xb);
            let Some(r) = label_of(&rcells, xm) else { continue };
            let ym = 0.5 * (seg.eval(xa) + seg.eval(xb));
            let Some(c) = label_of(&ccells, ym) else { continue };
            visit(k, seg, r, c, xa, xb);
        }
    }
}

fn sweep(g: &PwMap, rows: &[IntervalSet], cols: &[IntervalSet]) -> Vec<Vec<RMeasure>> {
    let mut acc: Vec<Vec<LawAccumulator>> = (0..rows.len())
        .map(|_| (0..cols.len()).map(|_| LawAccumulator::new()).collect())
        .collect();
    sweep_with(g, rows, cols, |_, seg, r, c, xa, xb| seg.accumulate_law(xa, xb, &mut acc[r][c]));
    acc.into_iter()
        .map(|row| row.into_iter().map(LawAccumulator::finish).collect())
        .collect()
}

impl PwMap {
    /// `κ[g; A, B]`.
    pub fn rn_distribution(&self, a: &IntervalSet, b: &IntervalSet) -> RMeasure {
        sweep(self, std::slice::from_ref(a), std::slice::from_ref(b))
            .pop()
            .and_then(|mut r| r.pop())
            .unwrap_or_default()
    }

    /// The intervals making up `A ∩ g⁻¹(B)`, each inside a single segment,
    /// as `(segment index, xa, xb)`.
    pub fn preimage_pieces(&self, a: &IntervalSet, b: &IntervalSet) -> Vec<(usize, f64, f64)> {
        let mut out = Vec::new();
        sweep_with(self, std::slice::from_ref(a), std::slice::from_ref(b), |k, _, _, _, xa, xb| {
            out.push((k, xa, xb))
        });
        out
    }

    /// `κ[g; M, M]`, the law of the derivative.
    pub fn derivative_law(&self) -> RMeasure {
        self.rn_distribution(&IntervalSet::full(), &IntervalSet::full())
    }

    /// `S_{αβ} = κ[g; M^α, M^β]` for a partition of `[0, 1]`.
    pub fn distribution_matrix(&self, partition: &[IntervalSet]) -> Result<DistributionMatrix> {
        check_partition(partition)?;
        Ok(DistributionMatrix { entries: sweep(self, partition, partition) })
    }

    /// Distribution matrix on the dyadic partition of the given level
    /// (always a valid partition, so no validation is needed).
    pub fn dyadic_matrix(&self, level: u32) -> DistributionMatrix {
        let p = IntervalSet::dyadic_partition(level);
        DistributionMatrix { entries: sweep(self, &p, &p) }
    }
}
