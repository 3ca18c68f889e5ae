//! Replacing the derivative of a map by finitely many values: on the
//! preimage of each value bin the new map is linear with the bin
//! barycenter as slope and covers the same image.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{bin_totals, ValueBinGrid};
use crate::topology::{profile_distance, GmsMetricConfig, MatrixProfile};
use crate::transform::{Form, PwMap, Segment};

/// A domain interval whose derivative values lie in one bin.
#[derive(Debug, Clone, Copy)]
struct Piece {
    xa: f64,
    xb: f64,
    ya: f64,
    yb: f64,
}

/// Relative slack below which a leftover domain or image length is treated
/// as rounding noise.
const SNAP: f64 = 1e-12;

fn split_segment(seg: &Segment, grid: ValueBinGrid, out: &mut BTreeMap<u64, Vec<Piece>>) -> Result<()> {
    let len = seg.len();
    match &seg.form {
        Form::Linear { slope } => {
            out.entry(grid.bin_of(*slope)).or_default().push(Piece { xa: seg.x0, xb: seg.x1, ya: seg.y0, yb: seg.y1 });
        }
        Form::Quantile(q) => {
            let law = Segment::quantile_law(q, len, 0.0, len);
            let Some((lo, hi)) = law.support() else { return Ok(()) };
            let (first, last) = (grid.bin_of(lo), grid.bin_of(hi));
            // local offsets where the derivative leaves each bin
            let mut cuts = vec![0.0];
            for j in first..last {
                let level = law.cdf_at(grid.bounds(j).1).clamp(0.0, len);
                cuts.push(level);
            }
            cuts.push(len);
            for (i, j) in (first..=last).enumerate() {
                let (la, lb) = (cuts[i], cuts[i + 1]);
                if lb <= la {
                    continue;
                }
                let (sa, sb) = if q.decreasing { (len - lb, len - la) } else { (la, lb) };
                let xa = if sa <= 0.0 { seg.x0 } else { seg.x0 + sa };
                let xb = if sb >= len { seg.x1 } else { seg.x0 + sb };
                let ya = if sa <= 0.0 { seg.y0 } else { seg.y0 + seg.local_eval(sa) };
                let yb = if sb >= len { seg.y1 } else { seg.y0 + seg.local_eval(sb) };
                if xb > xa {
                    out.entry(j).or_default().push(Piece { xa, xb, ya, yb });
                }
            }
        }
        Form::Sampled(_) => {
            return Err(Error::Unsupported("discretization needs an exact-class map".into()));
        }
    }
    Ok(())
}

/// Union of the image intervals, merged where they touch.
fn image_union(pieces: &[Piece]) -> Vec<(f64, f64)> {
    let mut ivs: Vec<(f64, f64)> = pieces.iter().map(|p| (p.ya, p.yb)).collect();
    ivs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(ivs.len());
    for (a, b) in ivs {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

/// Lays the domain pieces of one bin, in order of their images, onto the
/// image union with constant slope `t`.
fn fill(pieces: &mut [Piece], t: f64, segs: &mut Vec<Segment>) {
    let comps = image_union(pieces);
    pieces.sort_by(|a, b| a.ya.total_cmp(&b.ya));
    let push = |segs: &mut Vec<Segment>, x0: f64, x1: f64, y0: f64, y1: f64| {
        if x1 > x0 && y1 > y0 {
            segs.push(Segment { x0, x1, y0, y1, form: Form::Linear { slope: t } });
        }
    };
    let (mut ci, mut y) = (0, comps[0].0);
    let n = pieces.len();
    for (pi, p) in pieces.iter().enumerate() {
        let mut x = p.xa;
        while x < p.xb {
            let end = comps[ci].1;
            let final_comp = ci + 1 == comps.len();
            let rest = p.xb - x;
            let room = (end - y) / t;
            if final_comp || room >= rest * (1.0 - SNAP) {
                let snap = (pi + 1 == n && final_comp) || (end - (y + t * rest)).abs() <= SNAP * end.max(1.0);
                let y1 = if snap { end } else { (y + t * rest).min(end) };
                push(segs, x, p.xb, y, y1);
                x = p.xb;
                y = y1;
                if y >= end && !final_comp {
                    ci += 1;
                    y = comps[ci].0;
                }
            } else {
                let x1 = x + room;
                push(segs, x, x1, y, end);
                x = x1;
                ci += 1;
                y = comps[ci].0;
            }
        }
    }
}

/// `g_N`: on the preimage of every value bin `((j-1)2^-N, j 2^-N]` of the
/// derivative, `g_N` has the bin barycenter as slope and the same image as
/// `g`.
pub fn discretize_gms(g: &PwMap, level: u32) -> Result<PwMap> {
    if level >= 60 {
        return Err(Error::invalid("discretization", format!("bin level {level} is too fine")));
    }
    let grid = ValueBinGrid::new(level);
    let mut by_bin: BTreeMap<u64, Vec<Piece>> = BTreeMap::new();
    for seg in g.segments() {
        split_segment(seg, grid, &mut by_bin)?;
    }
    let slopes: BTreeMap<u64, f64> =
        bin_totals(&g.derivative_law(), grid).into_iter().map(|b| (b.bin, b.barycenter(grid))).collect();
    let mut segs = Vec::new();
    for (j, pieces) in by_bin.iter_mut() {
        let t = *slopes
            .get(j)
            .ok_or_else(|| Error::numeric(format!("bin {j} has pieces but no mass"), 0.0, 0.0))?;
        fill(pieces, t, &mut segs);
    }
    PwMap::new(segs)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscretizeRow {
    pub n: u32,
    pub gms_distance: f64,
    /// Largest `|κ_N(bin) − κ(bin)|` over the bins.
    pub mass_residual: f64,
    /// Largest `|(tκ_N)(bin) − (tκ)(bin)|` over the bins.
    pub moment_residual: f64,
    /// Number of derivative values of `g_N`.
    pub values: usize,
}

/// `g_N` for `N = 1..=n_max`, compared with `g`.
pub fn discretize_sequence(g: &PwMap, n_max: u32, cfg: &GmsMetricConfig) -> Result<Vec<DiscretizeRow>> {
    let profile = MatrixProfile::new(g, cfg.depth);
    let law = g.derivative_law();
    let mut rows = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        let grid = ValueBinGrid::new(n);
        let d = discretize_gms(g, n)?;
        let have = d.derivative_law();
        let want = bin_totals(&law, grid);
        let (mut dm, mut dw) = (0.0f64, 0.0f64);
        if have.atoms().len() != want.len() || !have.pieces().is_empty() {
            return Err(Error::numeric(format!("level {n}: discretized law has the wrong number of values"), have.atoms().len() as f64, want.len() as f64));
        }
        for (a, b) in have.atoms().iter().zip(&want) {
            if grid.bin_of(a.t) != b.bin {
                return Err(Error::numeric(format!("level {n}: value {} left its bin", a.t), a.t, b.barycenter(grid)));
            }
            dm = dm.max((a.mass - b.mass).abs());
            dw = dw.max((a.t * a.mass - b.moment).abs());
        }
        let dist = profile_distance(&MatrixProfile::new(&d, cfg.depth), &profile, &cfg.grid)?;
        rows.push(DiscretizeRow { n, gms_distance: dist, mass_residual: dm, moment_residual: dw, values: have.atoms().len() });
    }
    Ok(rows)
}
