//! Piecewise transformations of `[0, 1]`.
//!
//! A [`PwMap`] is an ordered list of increasing segments whose domains
//! partition `[0, 1]` and whose images, in some other order, partition
//! `[0, 1]` too. Each segment is linear, the integral of a quantile function
//! (a convex or concave piece with a continuous derivative law), or a
//! sampled numeric fallback produced when composition leaves the exact class.

mod compose;
mod distribution;
mod exchange;
mod json;
mod section;
mod segment;

use std::fmt;

use crate::error::{Error, Result};

pub use distribution::{DistributionMatrix, LawAccumulator};
pub use exchange::{interval_exchange, random_exchange_with, random_interval_exchange};
pub use segment::{Form, QuantileForm, SampledForm, Segment, SAMPLED_CELLS, SAMPLED_NODES};

const CONTIGUITY_TOL: f64 = 1e-12;

/// Closed interval `[lo, hi] ⊂ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }
}

/// Finite union of sorted, pairwise-disjoint closed subintervals of `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntervalSet {
    parts: Vec<Interval>,
}

impl IntervalSet {
    /// Sorts and merges touching parts; rejects overlaps and points outside
    /// `[0, 1]`.
    pub fn new(parts: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut v: Vec<Interval> = parts
            .into_iter()
            .map(|(lo, hi)| Interval::new(lo, hi))
            .filter(|i| !i.is_empty())
            .collect();
        for i in &v {
            if !(i.lo >= 0.0 && i.hi <= 1.0) {
                return Err(Error::invalid("interval set", format!("[{}, {}] is not inside [0, 1]", i.lo, i.hi)));
            }
        }
        v.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut out: Vec<Interval> = Vec::with_capacity(v.len());
        for i in v {
            match out.last_mut() {
                Some(last) if i.lo < last.hi => {
                    return Err(Error::invalid(
                        "interval set",
                        format!("[{}, {}] overlaps [{}, {}]", last.lo, last.hi, i.lo, i.hi),
                    ))
                }
                Some(last) if i.lo == last.hi => last.hi = i.hi,
                _ => out.push(i),
            }
        }
        Ok(IntervalSet { parts: out })
    }

    pub fn full() -> Self {
        IntervalSet { parts: vec![Interval::new(0.0, 1.0)] }
    }

    pub fn empty() -> Self {
        IntervalSet::default()
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        IntervalSet::new([(lo, hi)])
    }

    /// The `k`-th of the `2^level` dyadic intervals.
    pub fn dyadic(level: u32, k: u64) -> Self {
        let w = (-(level as f64)).exp2();
        IntervalSet { parts: vec![Interval::new(k as f64 * w, (k + 1) as f64 * w)] }
    }

    /// The partition of `[0, 1]` into `2^level` equal intervals.
    pub fn dyadic_partition(level: u32) -> Vec<IntervalSet> {
        (0..1u64 << level).map(|k| IntervalSet::dyadic(level, k)).collect()
    }

    pub fn parts(&self) -> &[Interval] {
        &self.parts
    }

    /// Lebesgue measure.
    pub fn measure(&self) -> f64 {
        crate::numeric::exact_sum(self.parts.iter().map(|i| i.len()))
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.parts.len() && j < other.parts.len() {
            let (a, b) = (self.parts[i], other.parts[j]);
            let lo = a.lo.max(b.lo);
            let hi = a.hi.min(b.hi);
            if hi > lo {
                out.push(Interval::new(lo, hi));
            }
            if a.hi < b.hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalSet { parts: out }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.parts.iter().any(|i| i.lo <= x && x <= i.hi)
    }
}

/// Validates that labelled interval sets form a partition of `[0, 1]`.
pub(crate) fn check_partition(parts: &[IntervalSet]) -> Result<()> {
    let mut all: Vec<(Interval, usize)> = parts
        .iter()
        .enumerate()
        .flat_map(|(k, s)| s.parts.iter().map(move |&i| (i, k)))
        .collect();
    all.sort_by(|a, b| a.0.lo.total_cmp(&b.0.lo));
    let mut reach = 0.0;
    for (i, k) in &all {
        if i.lo < reach {
            return Err(Error::invalid(
                "partition",
                format!("part {k} overlaps another part near {}", i.lo),
            ));
        }
        if i.lo > reach + CONTIGUITY_TOL {
            return Err(Error::invalid("partition", format!("gap ({reach}, {}) is not covered", i.lo)));
        }
        reach = i.hi;
    }
    if (reach - 1.0).abs() > CONTIGUITY_TOL {
        return Err(Error::invalid("partition", format!("parts end at {reach}, not at 1")));
    }
    Ok(())
}

/// An a.e.-bijection of `[0, 1]` made of increasing segments.
#[derive(Debug, Clone, PartialEq)]
pub struct PwMap {
    segments: Vec<Segment>,
}

impl PwMap {
    /// Validated constructor: domains must tile `[0, 1]` in order, images
    /// must tile `[0, 1]` in some order, and every segment must be
    /// internally consistent.
    pub fn new(mut segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::invalid("map", "no segments"));
        }
        segments.sort_by(|a, b| a.x0.total_cmp(&b.x0));
        tile(&mut segments, |s| (&mut s.x0, &mut s.x1), "domain")?;
        let mut order: Vec<usize> = (0..segments.len()).collect();
        order.sort_by(|&i, &j| segments[i].y0.total_cmp(&segments[j].y0));
        {
            let mut refs: Vec<Segment> = order.iter().map(|&i| segments[i].clone()).collect();
            tile(&mut refs, |s| (&mut s.y0, &mut s.y1), "image")?;
            for (k, &i) in order.iter().enumerate() {
                segments[i].y0 = refs[k].y0;
                segments[i].y1 = refs[k].y1;
            }
        }
        for (i, s) in segments.iter().enumerate() {
            s.validate().map_err(|e| match e {
                Error::Invalid { detail, .. } => Error::invalid("map", format!("segment {i}: {detail}")),
                other => other,
            })?;
        }
        Ok(PwMap { segments })
    }

    /// Constructor for internally generated maps that are consistent by
    /// construction.
    pub(crate) fn from_segments(segments: Vec<Segment>) -> Self {
        debug_assert!(!segments.is_empty());
        PwMap { segments }
    }

    pub fn identity() -> Self {
        PwMap::from_segments(vec![Segment::linear(0.0, 1.0, 0.0, 1.0)])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Index of the segment whose domain `(x0, x1]` contains `x`
    /// (the first segment also owns `x = 0`).
    pub fn segment_index(&self, x: f64) -> usize {
        self.segments
            .partition_point(|s| s.x1 < x)
            .min(self.segments.len() - 1)
    }

    fn check_point(x: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Precondition(format!("x = {x} lies outside [0, 1]")));
        }
        Ok(())
    }

    pub fn evaluate(&self, x: f64) -> Result<f64> {
        Self::check_point(x)?;
        Ok(self.segments[self.segment_index(x)].eval(x))
    }

    /// Left-continuous derivative.
    pub fn derivative(&self, x: f64) -> Result<f64> {
        Self::check_point(x)?;
        Ok(self.segments[self.segment_index(x)].derivative(x))
    }

    /// True when no segment uses the sampled numeric fallback.
    pub fn is_exact_class(&self) -> bool {
        self.segments.iter().all(|s| !matches!(s.form, Form::Sampled(_)))
    }

    pub fn is_piecewise_linear(&self) -> bool {
        self.segments.iter().all(|s| matches!(s.form, Form::Linear { .. }))
    }

    /// `sup |g(x) - h(x)|` over segment breakpoints of both maps and a
    /// uniform grid of `samples` points.
    pub fn sup_distance(&self, other: &PwMap, samples: usize) -> f64 {
        let mut xs: Vec<f64> = (0..=samples).map(|i| i as f64 / samples as f64).collect();
        for m in [self, other] {
            for s in &m.segments {
                xs.push(s.x0);
                xs.push(s.x1);
                xs.push(0.5 * (s.x0 + s.x1));
            }
        }
        xs.iter()
            .map(|&x| (self.segments[self.segment_index(x)].eval(x) - other.segments[other.segment_index(x)].eval(x)).abs())
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for PwMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.segments {
            let kind = match &s.form {
                Form::Linear { slope } => format!("linear slope {slope}"),
                Form::Quantile(q) => format!("quantile (offset {}, decreasing {})", q.offset, q.decreasing),
                Form::Sampled(_) => "sampled".to_string(),
            };
            writeln!(f, "[{}, {}] -> [{}, {}]: {kind}", s.x0, s.x1, s.y0, s.y1)?;
        }
        Ok(())
    }
}

/// Checks that consecutive intervals tile `[0, 1]`, snapping endpoints that
/// differ by less than the contiguity tolerance.
fn tile<F>(segs: &mut [Segment], mut ends: F, what: &str) -> Result<()>
where
    F: FnMut(&mut Segment) -> (&mut f64, &mut f64),
{
    let mut reach = 0.0;
    let n = segs.len();
    for (i, s) in segs.iter_mut().enumerate() {
        let (lo, hi) = ends(s);
        if !(*hi > *lo) {
            return Err(Error::invalid("map", format!("{what} interval {i} [{}, {}] is empty or reversed", lo, hi)));
        }
        if (*lo - reach).abs() > CONTIGUITY_TOL {
            let kind = if *lo < reach { "overlaps" } else { "leaves a gap after" };
            return Err(Error::invalid(
                "map",
                format!("{what} interval {i} [{}, {}] {kind} interval {}", lo, hi, i.saturating_sub(1)),
            ));
        }
        *lo = reach;
        if i + 1 == n {
            if (*hi - 1.0).abs() > CONTIGUITY_TOL {
                return Err(Error::invalid("map", format!("{what} intervals end at {}, not at 1", hi)));
            }
            *hi = 1.0;
        }
        reach = *hi;
    }
    Ok(())
}
