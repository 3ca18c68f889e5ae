//! The convex section `ν ↦ ψ`, `ψ(x) = ∫₀ˣ G(z) dz`.

use super::segment::Segment;
use super::PwMap;
use crate::error::{Error, Result};
use crate::measure::{Atom, RMeasure};
use crate::numeric::ExactSum;

const NORMALIZATION_TOL: f64 = 1e-10;

impl PwMap {
    /// The unique convex map of `[0, 1]` whose derivative has law `ν`.
    /// Atoms become linear segments and every maximal run of density
    /// between atoms becomes one quantile segment.
    pub fn convex_section(nu: &RMeasure) -> Result<PwMap> {
        let mass = nu.mass();
        let moment = nu.moment();
        if (mass - 1.0).abs() > NORMALIZATION_TOL || (moment - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Precondition(format!(
                "convex section needs mass 1 and moment 1: mass residual {:e}, moment residual {:e}",
                mass - 1.0,
                moment - 1.0
            )));
        }
        // blocks in value order: atoms and maximal density runs between them
        enum Block {
            Atom(Atom),
            Run(f64, f64),
        }
        let mut blocks = Vec::new();
        let mut run: Option<(f64, f64)> = None;
        let mut atoms = nu.atoms().iter().peekable();
        for p in nu.pieces() {
            while let Some(a) = atoms.peek() {
                if a.t <= p.a {
                    if let Some(r) = run.take() {
                        blocks.push(Block::Run(r.0, r.1));
                    }
                    blocks.push(Block::Atom(**a));
                    atoms.next();
                } else if a.t < p.b {
                    // atom inside a piece: split the run there
                    let (lo, _) = run.take().unwrap_or((p.a, p.a));
                    blocks.push(Block::Run(lo, a.t));
                    blocks.push(Block::Atom(**a));
                    run = Some((a.t, a.t));
                    atoms.next();
                } else {
                    break;
                }
            }
            run = Some(match run {
                Some((lo, _)) => (lo, p.b),
                None => (p.a, p.b),
            });
        }
        if let Some(r) = run.take() {
            blocks.push(Block::Run(r.0, r.1));
        }
        blocks.extend(atoms.map(|a| Block::Atom(*a)));

        let mut segments = Vec::new();
        let mut x = ExactSum::new();
        let mut y = ExactSum::new();
        for b in blocks {
            let (x0, y0) = (x.value(), y.value());
            match b {
                Block::Atom(a) => {
                    x.add(a.mass);
                    y.add_prod(a.t, a.mass);
                    segments.push(Segment {
                        x0,
                        x1: x.value(),
                        y0,
                        y1: y.value(),
                        form: super::Form::Linear { slope: a.t },
                    });
                }
                Block::Run(lo, hi) => {
                    let part = nu.restrict(crate::measure::ValueInterval::new(lo, hi));
                    let base = RMeasure::from_parts(vec![], part.pieces().to_vec());
                    if base.is_zero() {
                        continue;
                    }
                    x.add(base.mass());
                    y.add(base.moment());
                    segments.push(Segment::quantile(x0, x.value(), y0, y.value(), base, 0.0, false));
                }
            }
        }
        segments.retain(|s| s.x1 > s.x0);
        if let Some(last) = segments.last_mut() {
            last.x1 = 1.0;
            last.y1 = 1.0;
        }
        Ok(PwMap::from_segments(segments))
    }

    /// True when every segment is convex-compatible (slopes nondecreasing
    /// in `x`, images in domain order), i.e. the map lies in the convex
    /// class with `ψ(0) = 0`, `ψ(1) = 1`.
    pub fn is_convex(&self) -> bool {
        let segs = self.segments();
        let mut prev_slope = 0.0;
        for s in segs {
            if s.derivative(s.x0 + 0.0) + 1e-12 < prev_slope && s.len() > 0.0 {
                return false;
            }
            if let super::Form::Quantile(q) = &s.form {
                if q.decreasing {
                    return false;
                }
            }
            prev_slope = s.derivative(s.x1);
        }
        segs.windows(2).all(|w| w[0].y1 == w[1].y0)
    }
}
