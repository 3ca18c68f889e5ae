//! Maps between model spaces described by derivative-law data per block.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use super::SplitPartition;
use crate::error::{Error, Result};
use crate::measure::{measure_distance, RMeasure, StripGrid};
use crate::numeric::ExactSum;

/// A sheet of a model space: one of the lines `ℝ_j` (1-based) or the
/// product part `ℝ × [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sheet {
    Line(usize),
    Spread,
}

impl Sheet {
    fn same_kind(self, other: Sheet) -> bool {
        matches!((self, other), (Sheet::Line(_), Sheet::Line(_)) | (Sheet::Spread, Sheet::Spread))
    }
}

impl fmt::Display for Sheet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sheet::Line(j) => write!(f, "line{j}"),
            Sheet::Spread => write!(f, "spread"),
        }
    }
}

/// Block `C_cell` on a sheet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct BlockId {
    pub sheet: Sheet,
    pub cell: usize,
}

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.sheet, self.cell)
    }
}

/// `𝓛[ν₁, ν₂, …; ν∞]` as a list of line measures plus the measure of the
/// product part.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSpace {
    pub lines: Vec<RMeasure>,
    pub spread: RMeasure,
}

impl ModelSpace {
    pub fn new(lines: Vec<RMeasure>, spread: RMeasure) -> Self {
        ModelSpace { lines, spread }
    }

    pub fn sheet(&self, s: Sheet) -> Option<&RMeasure> {
        match s {
            Sheet::Line(j) if j >= 1 => self.lines.get(j - 1),
            Sheet::Line(_) => None,
            Sheet::Spread => Some(&self.spread),
        }
    }

    /// Sheets carrying mass.
    pub fn sheets(&self) -> Vec<Sheet> {
        let mut out: Vec<Sheet> =
            (1..=self.lines.len()).map(Sheet::Line).filter(|&s| !self.sheet(s).unwrap().is_zero()).collect();
        if !self.spread.is_zero() {
            out.push(Sheet::Spread);
        }
        out
    }

    pub fn total(&self) -> RMeasure {
        RMeasure::sum(self.lines.iter().chain(std::iter::once(&self.spread)))
    }
}

/// Mass `mass` of source block `source` is sent into `target`; `law` is the
/// distribution of the derivative values on that part.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockEntry {
    pub source: BlockId,
    pub target: BlockId,
    pub law: RMeasure,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockMap {
    level: u32,
    source: ModelSpace,
    target: ModelSpace,
    entries: Vec<BlockEntry>,
}

impl BlockMap {
    /// Validates ids against both spaces and merges repeated
    /// `(source, target)` pairs.
    pub fn new(level: u32, source: ModelSpace, target: ModelSpace, entries: Vec<BlockEntry>) -> Result<Self> {
        let part = SplitPartition::new(level)?;
        let mut merged: BTreeMap<(BlockId, BlockId), BlockEntry> = BTreeMap::new();
        for e in entries {
            for (id, space, what) in [(e.source, &source, "source"), (e.target, &target, "target")] {
                if space.sheet(id.sheet).is_none() || id.cell >= part.block_count() {
                    return Err(Error::invalid("block map", format!("{what} block {id} does not exist")));
                }
            }
            if !(e.mass >= 0.0 && e.mass.is_finite()) {
                return Err(Error::invalid("block map", format!("entry mass {} is not a finite nonnegative number", e.mass)));
            }
            match merged.get_mut(&(e.source, e.target)) {
                Some(prev) => {
                    prev.law = prev.law.add(&e.law);
                    prev.mass += e.mass;
                }
                None => {
                    merged.insert((e.source, e.target), e);
                }
            }
        }
        Ok(BlockMap { level, source, target, entries: merged.into_values().collect() })
    }

    /// The identity of `space`: every block keeps its own law.
    pub fn identity(level: u32, space: ModelSpace) -> Result<Self> {
        let part = SplitPartition::new(level)?;
        let mut entries = Vec::new();
        for sheet in space.sheets() {
            let lambda = space.sheet(sheet).unwrap();
            for cell in 0..part.block_count() {
                let law = lambda.restrict(part.block(cell));
                if !law.is_zero() {
                    let id = BlockId { sheet, cell };
                    entries.push(BlockEntry { source: id, target: id, mass: law.mass(), law });
                }
            }
        }
        BlockMap::new(level, space.clone(), space, entries)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn source(&self) -> &ModelSpace {
        &self.source
    }

    pub fn target(&self) -> &ModelSpace {
        &self.target
    }

    pub fn entries(&self) -> &[BlockEntry] {
        &self.entries
    }

    /// First entry leaving `source`.
    pub fn entry(&self, source: BlockId) -> Option<&BlockEntry> {
        self.entries.iter().find(|e| e.source == source)
    }

    /// The whole derivative law.
    pub fn law(&self) -> RMeasure {
        RMeasure::sum(self.entries.iter().map(|e| &e.law))
    }

    /// `(Σ masses, Σ moments)` over all entry laws.
    pub fn totals(&self) -> (f64, f64) {
        let (mut m, mut w) = (ExactSum::new(), ExactSum::new());
        for e in &self.entries {
            m.add(e.law.mass());
            w.add(e.law.moment());
        }
        (m.value(), w.value())
    }

    /// Largest `|Σ masses out of a block − its measure|` over source blocks,
    /// together with the largest `|law mass − entry mass|`.
    pub fn mass_residuals(&self) -> (f64, f64) {
        let part = SplitPartition { level: self.level };
        let mut out: BTreeMap<BlockId, ExactSum> = BTreeMap::new();
        for e in &self.entries {
            out.entry(e.source).or_default().add(e.mass);
        }
        let mut block = 0.0f64;
        for sheet in self.source.sheets() {
            let lambda = self.source.sheet(sheet).unwrap();
            for cell in 0..part.block_count() {
                let id = BlockId { sheet, cell };
                let have = out.get(&id).map_or(0.0, ExactSum::value);
                block = block.max((have - lambda.restrict(part.block(cell)).mass()).abs());
            }
        }
        let law = self.entries.iter().map(|e| (e.law.mass() - e.mass).abs()).fold(0.0, f64::max);
        (block, law)
    }

    /// Whether every entry law lives in the closure of its target block.
    pub fn supports_within_blocks(&self) -> bool {
        let part = SplitPartition { level: self.level };
        self.entries.iter().all(|e| match e.law.support() {
            None => true,
            Some((lo, hi)) => {
                let c = part.block(e.target.cell);
                lo >= c.lo && hi <= c.hi
            }
        })
    }

    /// One report row per entry, measured against the identity law of the
    /// target block.
    pub fn block_rows(&self, grid: &StripGrid) -> Result<Vec<BlockRow>> {
        let part = SplitPartition { level: self.level };
        self.entries
            .iter()
            .map(|e| {
                let ident = self.target.sheet(e.target.sheet).unwrap().restrict(part.block(e.target.cell));
                let (lo, hi) = e.law.support().unwrap_or((f64::NAN, f64::NAN));
                Ok(BlockRow {
                    n: self.level,
                    source: e.source.to_string(),
                    target: e.target.to_string(),
                    mass: e.mass,
                    mass_residual: e.law.mass() - e.mass,
                    support_lo: lo,
                    support_hi: hi,
                    distance: measure_distance(&e.law, &ident, grid)?,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockRow {
    pub n: u32,
    pub source: String,
    pub target: String,
    pub mass: f64,
    pub mass_residual: f64,
    pub support_lo: f64,
    pub support_hi: f64,
    pub distance: f64,
}

/// One stage of a convergence run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageRow {
    pub stage: u32,
    pub n: u32,
    pub distance: f64,
    pub mass_residual: f64,
    pub moment_residual: f64,
    pub blocks: usize,
}

impl StageRow {
    pub fn new(stage: u32, map: &BlockMap, distance: f64) -> Self {
        let (block, law) = map.mass_residuals();
        let (m, w) = map.totals();
        let mass_tot = map.target.total().mass();
        let moment_tot = map.target.total().moment();
        StageRow {
            stage,
            n: map.level,
            distance,
            mass_residual: block.max(law).max((m - mass_tot).abs()),
            moment_residual: (w - moment_tot).abs(),
            blocks: map.entries.len(),
        }
    }
}

/// Multi-level comparison of block maps with the identity of their target
/// space, in the spirit of the dyadic matrices of the coset topology: level
/// `r` compares aggregated laws on the `2^r` blocks of `SplitPartition(r)`
/// and carries weight `2^-r`.
///
/// Below the map's own level the aggregation is exact. Above it the map
/// only fixes laws per block, so the sub-blocks are coupled by a fixed
/// rule: a block that is sent whole into a sheet of the same kind is
/// matched order-preservingly (so identities are at distance zero); every
/// other entry spreads each source sub-block over the target sub-blocks in
/// proportion (product shares).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockMetric {
    pub depth: u32,
    pub grid: StripGrid,
}

impl Default for BlockMetric {
    fn default() -> Self {
        BlockMetric { depth: 12, grid: StripGrid::default() }
    }
}

/// Cached characteristic functions of the identity of a model space on all
/// blocks up to the metric depth.
#[derive(Debug, Clone)]
pub struct IdentityTarget {
    space: ModelSpace,
    depth: u32,
    nodes: Vec<Complex64>,
    levels: Vec<BTreeMap<(Sheet, usize), Vec<Complex64>>>,
}

impl IdentityTarget {
    pub fn space(&self) -> &ModelSpace {
        &self.space
    }
}

type Key = (Sheet, usize);

/// `max_z |χ(z)|` over a grid containing the real points 0 and 1.
fn char_max(m: &RMeasure) -> f64 {
    m.mass().max(m.moment())
}

fn add_into(acc: &mut BTreeMap<Key, Vec<Complex64>>, key: Key, v: &[Complex64], scale: f64) {
    let slot = acc.entry(key).or_insert_with(|| vec![Complex64::new(0.0, 0.0); v.len()]);
    for (a, b) in slot.iter_mut().zip(v) {
        *a += b * scale;
    }
}

impl BlockMetric {
    pub fn new(depth: u32, grid: StripGrid) -> Result<Self> {
        if !(1..=20).contains(&depth) {
            return Err(Error::invalid("block metric", format!("depth {depth} outside 1..=20")));
        }
        Ok(BlockMetric { depth, grid })
    }

    pub fn target(&self, space: &ModelSpace) -> Result<IdentityTarget> {
        let nodes = self.grid.nodes();
        let mut levels = Vec::with_capacity(self.depth as usize);
        for r in 1..=self.depth {
            let part = SplitPartition { level: r };
            let mut cells = BTreeMap::new();
            for sheet in space.sheets() {
                let lambda = space.sheet(sheet).unwrap();
                let Some((lo, hi)) = lambda.support() else { continue };
                for cell in part.block_of(lo)..=part.block_of(hi) {
                    let m = lambda.restrict(part.block(cell));
                    if !m.is_zero() {
                        cells.insert((sheet, cell), m.char_fn_many(&nodes)?);
                    }
                }
            }
            levels.push(cells);
        }
        Ok(IdentityTarget { space: space.clone(), depth: self.depth, nodes, levels })
    }

    /// `Σ_r 2^-r D_r(map, id)` for `r = 1..=depth`.
    pub fn distance(&self, map: &BlockMap, target: &IdentityTarget) -> Result<f64> {
        if target.depth != self.depth || target.nodes != self.grid.nodes() {
            return Err(Error::invalid("block metric", "identity target was built for another metric"));
        }
        let n = map.level;
        let nodes = &target.nodes;
        let laws: Vec<Vec<Complex64>> = map.entries.iter().map(|e| e.law.char_fn_many(nodes)).collect::<Result<_>>()?;
        let mut fan_out: HashMap<BlockId, usize> = HashMap::new();
        for e in &map.entries {
            *fan_out.entry(e.source).or_default() += 1;
        }
        let mut total = 0.0;
        for r in 1..=self.depth {
            let mut diag: BTreeMap<Key, Vec<Complex64>> = BTreeMap::new();
            let mut scalar = ExactSum::new();
            for (e, chi) in map.entries.iter().zip(&laws) {
                if r <= n {
                    let (sc, tc) = (e.source.cell >> (n - r), e.target.cell >> (n - r));
                    if sc == tc {
                        add_into(&mut diag, (e.target.sheet, tc), chi, 1.0);
                    } else {
                        scalar.add(char_max(&e.law));
                    }
                } else if e.source.cell != e.target.cell {
                    scalar.add(char_max(&e.law));
                } else if fan_out[&e.source] == 1 && e.source.sheet.same_kind(e.target.sheet) {
                    self.refine_monotone(map, e, r, nodes, &mut diag, &mut scalar)?;
                } else {
                    self.refine_product(map, e, r, nodes, &mut diag, &mut scalar)?;
                }
            }
            let cells = &target.levels[r as usize - 1];
            let mut level = ExactSum::new();
            level.add(scalar.value());
            for (key, want) in cells {
                let gap = match diag.get(key) {
                    Some(have) => have.iter().zip(want).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max),
                    None => want.iter().map(|v| v.norm()).fold(0.0, f64::max),
                };
                level.add(gap);
            }
            for (key, have) in &diag {
                if !cells.contains_key(key) {
                    level.add(have.iter().map(|v| v.norm()).fold(0.0, f64::max));
                }
            }
            total += level.value() * (-(r as f64)).exp2();
        }
        Ok(total)
    }

    /// Source sub-block `i` is sent onto the `i`-th quantile slice of the law.
    fn refine_monotone(
        &self,
        map: &BlockMap,
        e: &BlockEntry,
        r: u32,
        nodes: &[Complex64],
        diag: &mut BTreeMap<Key, Vec<Complex64>>,
        scalar: &mut ExactSum,
    ) -> Result<()> {
        let part = SplitPartition { level: r };
        let coarse = SplitPartition { level: map.level };
        let shift = r - map.level;
        let first = e.source.cell << shift;
        let lambda = map.source.sheet(e.source.sheet).unwrap().restrict(coarse.block(e.source.cell));
        let (src_mass, law_mass) = (lambda.mass(), e.law.mass());
        if src_mass <= 0.0 || law_mass <= 0.0 {
            scalar.add(char_max(&e.law));
            return Ok(());
        }
        let mut prev = 0.0;
        for i in 0..(1usize << shift) {
            let c = part.block(first + i);
            let frac = if i + 1 == 1 << shift { 1.0 } else { lambda.cdf_at(c.hi) / src_mass };
            let (z1, z2) = (prev * law_mass, frac * law_mass);
            prev = frac;
            let piece = if frac == 1.0 {
                e.law.quantile_window(z1, f64::INFINITY)
            } else {
                e.law.quantile_window(z1, z2)
            };
            let Some((lo, hi)) = piece.support() else { continue };
            for j in part.block_of(lo)..=part.block_of(hi) {
                let sub = piece.restrict(part.block(j));
                if sub.is_zero() {
                    continue;
                }
                if j == first + i {
                    add_into(diag, (e.target.sheet, j), &sub.char_fn_many(nodes)?, 1.0);
                } else {
                    scalar.add(char_max(&sub));
                }
            }
        }
        Ok(())
    }

    /// Source sub-block `i` takes the share `s_i` of every target sub-block.
    fn refine_product(
        &self,
        map: &BlockMap,
        e: &BlockEntry,
        r: u32,
        nodes: &[Complex64],
        diag: &mut BTreeMap<Key, Vec<Complex64>>,
        scalar: &mut ExactSum,
    ) -> Result<()> {
        let part = SplitPartition { level: r };
        let coarse = SplitPartition { level: map.level };
        let lambda = map.source.sheet(e.source.sheet).unwrap().restrict(coarse.block(e.source.cell));
        let src_mass = lambda.mass();
        let Some((lo, hi)) = e.law.support() else { return Ok(()) };
        for j in part.block_of(lo)..=part.block_of(hi) {
            let c = part.block(j);
            let sub = e.law.restrict(c);
            if sub.is_zero() {
                continue;
            }
            let share = if src_mass > 0.0 { lambda.restrict(c).mass() / src_mass } else { 0.0 };
            if share > 0.0 {
                add_into(diag, (e.target.sheet, j), &sub.char_fn_many(nodes)?, share);
            }
            scalar.add((1.0 - share) * char_max(&sub));
        }
        Ok(())
    }
}
