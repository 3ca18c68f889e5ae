//! Interval exchanges: the measure-preserving maps of the class.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::segment::{Form, Segment};
use super::PwMap;
use crate::error::{Error, Result};
use crate::measure::RMeasure;

/// Cut points of random exchanges are multiples of this, so every
/// translation they perform is exact in floating point.
const GRID_BITS: u32 = 16;

/// The exchange that cuts `[0, 1]` at `cuts` (sorted, interior) and lays the
/// pieces out in the order `perm` (piece `perm[0]` first).
pub fn interval_exchange(cuts: &[f64], perm: &[usize]) -> Result<PwMap> {
    let mut ends = vec![0.0];
    ends.extend_from_slice(cuts);
    ends.push(1.0);
    let n = ends.len() - 1;
    if perm.len() != n {
        return Err(Error::invalid("interval exchange", format!("{} pieces but a permutation of {}", n, perm.len())));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::invalid("interval exchange", "not a permutation"));
        }
    }
    if ends.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("interval exchange", "cut points must be increasing inside (0, 1)"));
    }
    let mut starts = vec![0.0; n];
    let mut y = 0.0;
    for &p in perm {
        starts[p] = y;
        y += ends[p + 1] - ends[p];
    }
    let segs = (0..n)
        .map(|i| {
            let len = ends[i + 1] - ends[i];
            let y1 = if starts[i] + len > 1.0 { 1.0 } else { starts[i] + len };
            Segment { x0: ends[i], x1: ends[i + 1], y0: starts[i], y1, form: Form::Linear { slope: 1.0 } }
        })
        .collect();
    PwMap::new(segs)
}

/// Random interval exchange of `n_pieces` pieces with dyadic cut points.
pub fn random_interval_exchange(seed: u64, n_pieces: usize) -> Result<PwMap> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_exchange_with(&mut rng, n_pieces)
}

pub fn random_exchange_with<R: Rng>(rng: &mut R, n_pieces: usize) -> Result<PwMap> {
    if n_pieces == 0 {
        return Err(Error::Precondition("an interval exchange needs at least one piece".into()));
    }
    let scale = (1u64 << GRID_BITS) as f64;
    let mut ticks: Vec<u64> = Vec::with_capacity(n_pieces - 1);
    while ticks.len() + 1 < n_pieces {
        let t = rng.gen_range(1..(1u64 << GRID_BITS));
        if !ticks.contains(&t) {
            ticks.push(t);
        }
    }
    ticks.sort_unstable();
    let cuts: Vec<f64> = ticks.iter().map(|&t| t as f64 / scale).collect();
    let mut perm: Vec<usize> = (0..n_pieces).collect();
    perm.shuffle(rng);
    interval_exchange(&cuts, &perm)
}

impl PwMap {
    /// True iff the derivative law is exactly `δ₁`.
    pub fn is_measure_preserving(&self) -> bool {
        self.derivative_law() == RMeasure::dirac(1.0, 1.0)
    }
}
