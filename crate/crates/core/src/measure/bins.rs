//! Value-bin discretization: every bin `((j-1) 2^-N, j 2^-N]` is replaced by
//! one atom at its barycenter carrying the bin's mass.

use serde::{Deserialize, Serialize};

use super::{Atom, RMeasure};
use crate::numeric::ExactSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueBinGrid {
    pub level: u32,
}

impl ValueBinGrid {
    pub fn new(level: u32) -> Self {
        assert!(level < 60, "bin level too fine");
        ValueBinGrid { level }
    }

    pub fn width(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    /// Index `j >= 1` of the bin containing `t > 0`.
    pub fn bin_of(&self, t: f64) -> u64 {
        // scaling by a power of two is exact
        let s = t / self.width();
        (s.ceil() as u64).max(1)
    }

    /// The half-open bin `(lo, hi]` with index `j`.
    pub fn bounds(&self, j: u64) -> (f64, f64) {
        let w = self.width();
        ((j - 1) as f64 * w, j as f64 * w)
    }
}

/// Mass and first moment of `ν` per value bin, accumulated exactly.
pub(crate) fn bin_totals(nu: &RMeasure, grid: ValueBinGrid) -> Vec<BinTotal> {
    use std::collections::BTreeMap;
    let mut acc: BTreeMap<u64, (ExactSum, ExactSum, usize, f64)> = BTreeMap::new();
    for at in nu.atoms() {
        let e = acc.entry(grid.bin_of(at.t)).or_default();
        e.0.add(at.mass);
        e.1.add_prod(at.t, at.mass);
        e.2 += 1;
        e.3 = at.t;
    }
    for p in nu.pieces() {
        let first = grid.bin_of(p.a.max(f64::MIN_POSITIVE)).max(1);
        let first = if grid.bounds(first).1 <= p.a { first + 1 } else { first };
        let last = grid.bin_of(p.b);
        for j in first..=last {
            let (lo, hi) = grid.bounds(j);
            let (a, b) = (lo.max(p.a), hi.min(p.b));
            if b > a {
                let e = acc.entry(j).or_default();
                e.0.add(p.density.integral(a, b));
                e.1.add(p.density.first_moment(a, b));
                e.2 += 2;
            }
        }
    }
    acc.into_iter()
        .map(|(j, (m, mo, count, t))| BinTotal {
            bin: j,
            mass: m.value(),
            moment: mo.value(),
            single_atom: (count == 1).then_some(t),
        })
        .filter(|b| b.mass > 0.0)
        .collect()
}

/// Totals of one nonempty bin; `single_atom` is set when the bin holds
/// nothing but one atom, whose location is then its exact barycenter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct BinTotal {
    pub bin: u64,
    pub mass: f64,
    pub moment: f64,
    pub single_atom: Option<f64>,
}

impl BinTotal {
    pub fn barycenter(&self, grid: ValueBinGrid) -> f64 {
        if let Some(t) = self.single_atom {
            return t;
        }
        let (lo, hi) = grid.bounds(self.bin);
        let t = (self.moment / self.mass).clamp(lo, hi);
        // lo itself belongs to the previous bin
        if t <= lo {
            lo.next_up()
        } else {
            t
        }
    }
}

impl RMeasure {
    /// Purely atomic measure with one atom per nonempty bin, located at the
    /// bin barycenter and carrying the bin mass.
    pub fn bin_discretize(&self, grid: ValueBinGrid) -> RMeasure {
        let atoms = bin_totals(self, grid)
            .into_iter()
            .map(|b| Atom { t: b.barycenter(grid), mass: b.mass })
            .collect();
        RMeasure::from_parts(atoms, vec![])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{measure_distance, StripGrid};

    #[test]
    fn bins_partition_the_half_line() {
        let g = ValueBinGrid::new(2);
        assert_eq!(g.bin_of(0.25), 1);
        assert_eq!(g.bin_of(0.2500001), 2);
        assert_eq!(g.bin_of(1e-300), 1);
        assert_eq!(g.bounds(3), (0.5, 0.75));
    }

    #[test]
    fn atom_is_its_own_barycenter() {
        let d = RMeasure::dirac(1.0, 1.0);
        for n in 0..8 {
            assert_eq!(d.bin_discretize(ValueBinGrid::new(n)), d);
        }
    }

    #[test]
    fn uniform_level_one() {
        let u = RMeasure::uniform(0.5, 1.5, 1.0);
        let k = u.bin_discretize(ValueBinGrid::new(1));
        assert_eq!(
            k.atoms(),
            &[Atom { t: 0.75, mass: 0.5 }, Atom { t: 1.25, mass: 0.5 }]
        );
    }

    #[test]
    fn distance_shrinks_with_level() {
        let u = RMeasure::uniform(0.5, 1.5, 1.0).add(&RMeasure::uniform(1.5, 2.0, 0.5));
        let grid = StripGrid::default();
        let mut prev = f64::INFINITY;
        for n in 1..=12 {
            let k = u.bin_discretize(ValueBinGrid::new(n));
            assert!((k.moment() - u.moment()).abs() < 1e-14);
            let d = measure_distance(&k, &u, &grid).unwrap();
            assert!(d < prev, "level {n}: {d} >= {prev}");
            prev = d;
        }
    }
}
