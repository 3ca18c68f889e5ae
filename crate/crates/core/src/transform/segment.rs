use crate::error::{Error, Result};
use crate::measure::RMeasure;
use crate::numeric::{lobatto_points, solve_monotone, ChebSeries};

use super::distribution::LawAccumulator;

/// Number of Chebyshev–Lobatto nodes used for sampled segments.
pub const SAMPLED_NODES: usize = 33;

/// Barycenter cells per full sampled segment when its derivative law is
/// discretized.
pub const SAMPLED_CELLS: usize = 64;

const CONSISTENCY_TOL: f64 = 1e-12;

/// Derivative data of a convex (or, when `decreasing`, concave) segment:
/// at local offset `s` the derivative is `G(offset + s)` (resp.
/// `G(offset + L - s)`), `G` the quantile function of `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileForm {
    pub base: RMeasure,
    pub offset: f64,
    pub decreasing: bool,
}

/// Numeric segment: derivative interpolated through Chebyshev–Lobatto
/// samples, normalized so that it integrates to the image length.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledForm {
    values: Vec<f64>,
    series: ChebSeries,
    antiderivative: ChebSeries,
}

impl SampledForm {
    /// Builds the form from derivative samples at the Lobatto nodes of the
    /// local domain `[0, len]`, rescaled to integrate to `img_len`.
    pub fn from_values(values: Vec<f64>, len: f64, img_len: f64) -> Result<Self> {
        if values.len() < 2 || values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("sampled segment", "need at least two finite nonnegative samples"));
        }
        let raw = ChebSeries::from_lobatto_values(&values);
        let integral = 0.5 * len * raw.integral().eval(1.0);
        if !(integral > 0.0) {
            return Err(Error::invalid("sampled segment", "derivative integrates to zero"));
        }
        let scale = img_len / integral;
        let values: Vec<f64> = values.iter().map(|v| v * scale).collect();
        let series = ChebSeries::from_lobatto_values(&values);
        let antiderivative = series.integral();
        Ok(SampledForm { values, series, antiderivative })
    }

    /// Samples `f` on the local domain `[0, len]`.
    pub fn from_fn(f: impl Fn(f64) -> f64, len: f64, img_len: f64) -> Result<Self> {
        let values = lobatto_points(0.0, len, SAMPLED_NODES)
            .into_iter()
            .map(|s| f(s).max(0.0))
            .collect();
        Self::from_values(values, len, img_len)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn local(&self, s: f64, len: f64) -> f64 {
        (2.0 * s / len - 1.0).clamp(-1.0, 1.0)
    }

    fn integral_to(&self, s: f64, len: f64) -> f64 {
        0.5 * len * self.antiderivative.eval(self.local(s, len))
    }

    fn derivative(&self, s: f64, len: f64) -> f64 {
        self.series.eval(self.local(s, len)).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Form {
    Linear { slope: f64 },
    Quantile(QuantileForm),
    Sampled(SampledForm),
}

/// Increasing segment mapping `[x0, x1]` onto `[y0, y1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub form: Form,
}

impl Segment {
    pub fn linear(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        let slope = (y1 - y0) / (x1 - x0);
        Segment { x0, x1, y0, y1, form: Form::Linear { slope } }
    }

    pub fn with_slope(x0: f64, x1: f64, y0: f64, slope: f64) -> Self {
        Segment { x0, x1, y0, y1: y0 + slope * (x1 - x0), form: Form::Linear { slope } }
    }

    pub fn quantile(x0: f64, x1: f64, y0: f64, y1: f64, base: RMeasure, offset: f64, decreasing: bool) -> Self {
        Segment { x0, x1, y0, y1, form: Form::Quantile(QuantileForm { base, offset, decreasing }) }
    }

    pub fn len(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn img_len(&self) -> f64 {
        self.y1 - self.y0
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let len = self.len();
        let expected = match &self.form {
            Form::Linear { slope } => {
                if !(*slope > 0.0 && slope.is_finite()) {
                    return Err(Error::invalid("map", format!("slope {slope} is not positive")));
                }
                slope * len
            }
            Form::Quantile(q) => {
                if !q.base.is_continuous() {
                    return Err(Error::invalid("map", "quantile base measure must be continuous"));
                }
                let mass = q.base.mass();
                if q.offset < 0.0 || q.offset + len > mass * (1.0 + CONSISTENCY_TOL) + CONSISTENCY_TOL {
                    return Err(Error::invalid(
                        "map",
                        format!("quantile window [{}, {}] exceeds base mass {mass}", q.offset, q.offset + len),
                    ));
                }
                q.base.quantile_window(q.offset, q.offset + len).moment()
            }
            Form::Sampled(_) => return Ok(()),
        };
        let il = self.img_len();
        if (expected - il).abs() > CONSISTENCY_TOL * il.max(1.0) {
            return Err(Error::invalid(
                "map",
                format!("image length {il} differs from the integrated derivative {expected}"),
            ));
        }
        Ok(())
    }

    /// Level window `[z1, z2]` of the base measure swept by local offsets
    /// `[s1, s2]`.
    fn levels(q: &QuantileForm, len: f64, s1: f64, s2: f64) -> (f64, f64) {
        let (z1, z2, to_end) = if q.decreasing {
            (q.offset + (len - s2), q.offset + (len - s1), s1 <= 0.0)
        } else {
            (q.offset + s1, q.offset + s2, s2 >= len)
        };
        // A window reaching the segment end takes the rest of the base when
        // the two agree up to the consistency tolerance; this keeps the top
        // of the support exact after domain lengths pick up rounding.
        if to_end {
            let mass = q.base.mass();
            if (z2 - mass).abs() <= CONSISTENCY_TOL * mass.max(1.0) {
                return (z1, f64::INFINITY);
            }
        }
        (z1, z2)
    }

    /// `g(x0 + s) - y0`.
    pub fn local_eval(&self, s: f64) -> f64 {
        let len = self.len();
        if s <= 0.0 {
            return 0.0;
        }
        if s >= len {
            return self.img_len();
        }
        match &self.form {
            Form::Linear { slope } => slope * s,
            Form::Quantile(q) => {
                let (z1, z2) = Self::levels(q, len, 0.0, s);
                q.base.quantile_window(z1, z2).moment()
            }
            Form::Sampled(f) => f.integral_to(s, len),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.x0 {
            return self.y0;
        }
        if x >= self.x1 {
            return self.y1;
        }
        self.y0 + self.local_eval(x - self.x0)
    }

    /// Derivative at local offset `s`, left-continuous.
    pub fn local_derivative(&self, s: f64) -> f64 {
        let len = self.len();
        match &self.form {
            Form::Linear { slope } => *slope,
            Form::Quantile(q) => {
                // left limits in x are left limits of G when increasing and
                // right limits of G when decreasing
                let mass = q.base.mass();
                let level = if q.decreasing { q.offset + (len - s) } else { q.offset + s };
                let value = if level >= mass {
                    q.base.quantile_left(mass)
                } else if !q.decreasing && level > 0.0 {
                    q.base.quantile_left(level)
                } else {
                    q.base.quantile_at(level.max(0.0))
                };
                value.unwrap_or(0.0)
            }
            Form::Sampled(f) => f.derivative(s, len),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.local_derivative((x - self.x0).clamp(0.0, self.len()))
    }

    /// Local offset `s` with `local_eval(s) = dy`.
    pub fn local_preimage(&self, dy: f64) -> f64 {
        let len = self.len();
        if dy <= 0.0 {
            return 0.0;
        }
        if dy >= self.img_len() {
            return len;
        }
        match &self.form {
            Form::Linear { slope } => (dy / slope).min(len),
            _ => solve_monotone(|s| self.local_eval(s), |s| self.local_derivative(s), 0.0, len, dy),
        }
    }

    pub fn preimage(&self, y: f64) -> f64 {
        if y <= self.y0 {
            return self.x0;
        }
        if y >= self.y1 {
            return self.x1;
        }
        self.x0 + self.local_preimage(y - self.y0)
    }

    /// Derivative law over the local window `[s1, s2]` of a quantile
    /// segment, as a continuous measure of mass `s2 - s1`.
    pub(crate) fn quantile_law(q: &QuantileForm, len: f64, s1: f64, s2: f64) -> RMeasure {
        let (z1, z2) = Self::levels(q, len, s1, s2);
        q.base.quantile_window(z1, z2)
    }

    /// Adds the law of the derivative over `[xa, xb] ⊂ [x0, x1]` to `acc`.
    pub(crate) fn accumulate_law(&self, xa: f64, xb: f64, acc: &mut LawAccumulator) {
        if xb <= xa {
            return;
        }
        let len = self.len();
        match &self.form {
            Form::Linear { slope } => acc.add_atom_span(*slope, xa, xb),
            Form::Quantile(q) => {
                let w = Self::quantile_law(q, len, xa - self.x0, xb - self.x0);
                acc.add_measure(&w);
            }
            Form::Sampled(f) => {
                let (s1, s2) = (xa - self.x0, xb - self.x0);
                let cells = ((SAMPLED_CELLS as f64 * (s2 - s1) / len).ceil() as usize).max(1);
                let mut a = s1;
                let mut ia = f.integral_to(a, len);
                for k in 1..=cells {
                    let b = if k == cells { s2 } else { s1 + (s2 - s1) * k as f64 / cells as f64 };
                    let ib = f.integral_to(b, len);
                    if b > a {
                        let t = ((ib - ia) / (b - a)).max(f64::MIN_POSITIVE);
                        acc.add_atom_span(t, self.x0 + a, self.x0 + b);
                    }
                    a = b;
                    ia = ib;
                }
            }
        }
    }

    /// Interior local offsets where the derivative may fail to be smooth.
    pub fn kinks(&self) -> Vec<f64> {
        let len = self.len();
        match &self.form {
            Form::Quantile(q) => {
                let mut out = Vec::new();
                let mut c = 0.0;
                let mut levels = Vec::new();
                for p in q.base.pieces() {
                    levels.push(c);
                    c += p.mass();
                }
                for level in levels.into_iter().skip(1) {
                    let s = if q.decreasing { q.offset + len - level } else { level - q.offset };
                    if s > 0.0 && s < len {
                        out.push(s);
                    }
                }
                out.sort_by(f64::total_cmp);
                out
            }
            _ => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn psi_u_segment() -> Segment {
        Segment::quantile(0.0, 1.0, 0.0, 1.0, RMeasure::uniform(0.5, 1.5, 1.0), 0.0, false)
    }

    #[test]
    fn quantile_segment_integrates_quantile() {
        let s = psi_u_segment();
        for x in [0.1, 0.25, 0.5, 0.9] {
            assert!((s.eval(x) - (x * x / 2.0 + x / 2.0)).abs() < 1e-15);
            assert!((s.derivative(x) - (x + 0.5)).abs() < 1e-15);
            assert!((s.preimage(s.eval(x)) - x).abs() < 1e-14);
        }
        assert!(s.validate().is_ok());
    }

    #[test]
    fn decreasing_quantile_segment() {
        let s = Segment::quantile(0.0, 1.0, 0.0, 1.0, RMeasure::uniform(0.5, 1.5, 1.0), 0.0, true);
        // derivative 3/2 - x, so g(x) = 3x/2 - x^2/2
        for x in [0.1, 0.5, 0.8] {
            assert!((s.eval(x) - (1.5 * x - x * x / 2.0)).abs() < 1e-15);
            assert!((s.derivative(x) - (1.5 - x)).abs() < 1e-14);
        }
    }

    #[test]
    fn sampled_segment_tracks_function() {
        let f = SampledForm::from_fn(|s| 1.0 + (std::f64::consts::PI * s).cos(), 1.0, 1.0).unwrap();
        let seg = Segment { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0, form: Form::Sampled(f) };
        for x in [0.2, 0.5, 0.7] {
            let exact = x + (std::f64::consts::PI * x).sin() / std::f64::consts::PI;
            assert!((seg.eval(x) - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn inconsistent_image_is_rejected() {
        let mut s = psi_u_segment();
        s.y1 = 0.9;
        assert!(s.validate().is_err());
    }
}
