//! Group operations: inversion and composition.

use super::segment::{Form, QuantileForm, SampledForm, Segment};
use super::PwMap;
use crate::error::{Error, Result};

impl PwMap {
    /// `g⁻¹`. Linear pieces invert exactly; a quantile piece with law `W`
    /// inverts to a quantile piece with law `t⁻¹W(t⁻¹)` and the opposite
    /// monotonicity; sampled pieces are resampled.
    pub fn invert(&self) -> Result<PwMap> {
        let mut out = Vec::with_capacity(self.segments().len());
        for s in self.segments() {
            let form = match &s.form {
                Form::Linear { slope } => Form::Linear { slope: 1.0 / slope },
                Form::Quantile(q) => {
                    let w = Segment::quantile_law(q, s.len(), 0.0, s.len());
                    Form::Quantile(QuantileForm {
                        base: w.weighted_reciprocal()?,
                        offset: 0.0,
                        decreasing: !q.decreasing,
                    })
                }
                Form::Sampled(_) => {
                    let ilen = s.img_len();
                    let nodes = crate::numeric::lobatto_points(0.0, ilen, super::SAMPLED_NODES);
                    let mut values = Vec::with_capacity(nodes.len());
                    for dy in nodes {
                        let d = s.local_derivative(s.local_preimage(dy));
                        if !(d > 1e-300) {
                            return Err(Error::numeric("inverse of a sampled piece with vanishing derivative", d, 1e-300));
                        }
                        values.push(1.0 / d);
                    }
                    Form::Sampled(SampledForm::from_values(values, ilen, s.len())?)
                }
            };
            out.push(Segment { x0: s.y0, x1: s.y1, y0: s.x0, y1: s.x1, form });
        }
        out.sort_by(|a, b| a.x0.total_cmp(&b.x0));
        Ok(PwMap::from_segments(out))
    }

    /// `g ∘ h` (apply `h` first). The domain of each segment of `h` is cut
    /// at the preimages of the breakpoints of `g`.
    pub fn compose(g: &PwMap, h: &PwMap) -> Result<PwMap> {
        let gbreaks: Vec<f64> = g.segments().iter().skip(1).map(|s| s.x0).collect();
        let mut out: Vec<Segment> = Vec::new();
        for s in h.segments() {
            let lo = gbreaks.partition_point(|&c| c <= s.y0);
            let hi = gbreaks.partition_point(|&c| c < s.y1);
            let mut ys = vec![s.y0];
            ys.extend_from_slice(&gbreaks[lo..hi]);
            ys.push(s.y1);
            let mut xs: Vec<f64> = ys.iter().map(|&y| s.preimage(y)).collect();
            xs[0] = s.x0;
            *xs.last_mut().unwrap() = s.x1;
            for k in 0..ys.len() - 1 {
                let (xa, xb, ya, yb) = (xs[k], xs[k + 1], ys[k], ys[k + 1]);
                if xb <= xa {
                    continue;
                }
                let t = &g.segments()[g.segment_index(0.5 * (ya + yb))];
                let za = t.eval(ya);
                let zb = t.eval(yb);
                compose_piece(t, s, xa, xb, ya, yb, za, zb, &mut out)?;
            }
        }
        Ok(PwMap::from_segments(merge_linear(out)))
    }

    /// `self ∘ other`.
    pub fn then_after(&self, other: &PwMap) -> Result<PwMap> {
        PwMap::compose(self, other)
    }
}

/// Composes outer segment `t` with the part `[xa, xb] → [ya, yb]` of inner
/// segment `s`; `[za, zb]` is the final image.
#[allow(clippy::too_many_arguments)]
fn compose_piece(
    t: &Segment,
    s: &Segment,
    xa: f64,
    xb: f64,
    ya: f64,
    yb: f64,
    za: f64,
    zb: f64,
    out: &mut Vec<Segment>,
) -> Result<()> {
    let form = match (&t.form, &s.form) {
        (Form::Linear { slope: a }, Form::Linear { slope: b }) => Some(Form::Linear { slope: a * b }),
        (Form::Linear { slope: a }, Form::Quantile(q)) => {
            let w = Segment::quantile_law(q, s.len(), xa - s.x0, xb - s.x0);
            Some(Form::Quantile(QuantileForm { base: w.dilate(*a), offset: 0.0, decreasing: q.decreasing }))
        }
        (Form::Quantile(q), Form::Linear { slope: b }) => {
            let w = Segment::quantile_law(q, t.len(), ya - t.x0, yb - t.x0);
            Some(Form::Quantile(QuantileForm {
                base: w.dilate(*b).scale(1.0 / b),
                offset: 0.0,
                decreasing: q.decreasing,
            }))
        }
        _ => None,
    };
    if let Some(form) = form {
        out.push(Segment { x0: xa, x1: xb, y0: za, y1: zb, form });
        return Ok(());
    }
    // numeric fallback, split where either factor has a kink
    let mut cuts = vec![xa, xb];
    for k in s.kinks() {
        let x = s.x0 + k;
        if x > xa && x < xb {
            cuts.push(x);
        }
    }
    for k in t.kinks() {
        let y = t.x0 + k;
        if y > ya && y < yb {
            cuts.push(s.preimage(y));
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut z_prev = za;
    for (i, w) in cuts.windows(2).enumerate() {
        let (ca, cb) = (w[0], w[1]);
        if cb <= ca {
            continue;
        }
        let z_end = if i + 2 == cuts.len() { zb } else { t.eval(s.eval(cb)) };
        let f = |r: f64| {
            let x = ca + r;
            t.derivative(s.eval(x)) * s.derivative(x)
        };
        let sampled = SampledForm::from_fn(f, cb - ca, z_end - z_prev)?;
        out.push(Segment { x0: ca, x1: cb, y0: z_prev, y1: z_end, form: Form::Sampled(sampled) });
        z_prev = z_end;
    }
    Ok(())
}

/// Fuses neighbouring linear segments with equal slopes whose domains and
/// images are both contiguous.
fn merge_linear(segs: Vec<Segment>) -> Vec<Segment> {
    let mut out: Vec<Segment> = Vec::with_capacity(segs.len());
    for s in segs {
        if let Some(last) = out.last_mut() {
            if let (Form::Linear { slope: a }, Form::Linear { slope: b }) = (&last.form, &s.form) {
                if a == b && last.x1 == s.x0 && last.y1 == s.y0 {
                    last.x1 = s.x1;
                    last.y1 = s.y1;
                    continue;
                }
            }
        }
        out.push(s);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{Atom, RMeasure};

    fn g0() -> PwMap {
        PwMap::new(vec![Segment::linear(0.0, 0.5, 0.0, 0.25), Segment::linear(0.5, 1.0, 0.25, 1.0)]).unwrap()
    }

    fn psi_u() -> PwMap {
        PwMap::new(vec![Segment::quantile(0.0, 1.0, 0.0, 1.0, RMeasure::uniform(0.5, 1.5, 1.0), 0.0, false)]).unwrap()
    }

    #[test]
    fn inverse_of_g0_has_reciprocal_slopes() {
        let inv = g0().invert().unwrap();
        let segs = inv.segments();
        assert_eq!((segs[0].x0, segs[0].x1), (0.0, 0.25));
        assert_eq!(segs[0].form, Form::Linear { slope: 2.0 });
        assert_eq!(segs[1].form, Form::Linear { slope: 2.0 / 3.0 });
        let law = inv.derivative_law();
        assert_eq!(law.atoms()[1], Atom { t: 2.0, mass: 0.25 });
        assert!((law.atoms()[0].mass - 0.75).abs() < 1e-15);
    }

    #[test]
    fn g0_squared_by_chain_rule() {
        let gg = PwMap::compose(&g0(), &g0()).unwrap();
        let law = gg.derivative_law();
        // [0,1/2] at slope 1/4; [1/2,2/3] at 3/4; [2/3,1] at 9/4
        let expected = [(0.25, 0.5), (0.75, 1.0 / 6.0), (2.25, 1.0 / 3.0)];
        assert_eq!(law.atoms().len(), 3);
        for (a, (t, m)) in law.atoms().iter().zip(expected) {
            assert_eq!(a.t, t);
            assert!((a.mass - m).abs() < 1e-15);
        }
        assert!((law.moment() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn group_laws() {
        for g in [g0(), psi_u()] {
            let inv = g.invert().unwrap();
            let left = PwMap::compose(&g, &inv).unwrap();
            let right = PwMap::compose(&inv, &g).unwrap();
            assert!(left.sup_distance(&PwMap::identity(), 1000) < 1e-10);
            assert!(right.sup_distance(&PwMap::identity(), 1000) < 1e-10);
        }
    }

    #[test]
    fn inverse_of_quantile_segment_is_concave() {
        let inv = psi_u().invert().unwrap();
        // g(x) = x²/2 + x/2 ⇒ g⁻¹(y) = (-1 + sqrt(1 + 8y)) / 2
        for y in [0.1f64, 0.4, 0.75] {
            let exact = (-1.0 + (1.0f64 + 8.0 * y).sqrt()) / 2.0;
            assert!((inv.evaluate(y).unwrap() - exact).abs() < 1e-13);
            assert!((inv.derivative(y).unwrap() - 2.0 / (1.0f64 + 8.0 * y).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_then_quantile_stays_exact() {
        let u = PwMap::new(vec![Segment::linear(0.0, 0.5, 0.5, 1.0), Segment::linear(0.5, 1.0, 0.0, 0.5)]).unwrap();
        let c = PwMap::compose(&psi_u(), &u).unwrap();
        assert!(c.is_exact_class());
        for x in [0.1, 0.3, 0.6, 0.95] {
            let direct = psi_u().evaluate(u.evaluate(x).unwrap()).unwrap();
            assert!((c.evaluate(x).unwrap() - direct).abs() < 1e-15);
        }
        assert_eq!(c.derivative_law(), psi_u().derivative_law());
    }
}
