//! JSON encoding of measures. Numbers may be plain floats or exact rationals
//! `{"num": p, "den": q}`; rationals are rounded once to the nearest `f64`.

use serde::{Deserialize, Serialize};

use super::{Atom, Piece, RMeasure};
use crate::error::{Error, Result};
use crate::laurent::Laurent;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Float(f64),
    Ratio { num: i64, den: i64 },
}

impl Number {
    pub fn value(self) -> Result<f64> {
        match self {
            Number::Float(x) if x.is_finite() => Ok(x),
            Number::Float(x) => Err(Error::invalid("number", format!("{x} is not finite"))),
            Number::Ratio { den: 0, .. } => Err(Error::invalid("number", "zero denominator")),
            Number::Ratio { num, den } => Ok(ratio_to_f64(num, den)),
        }
    }
}

/// Correctly rounded `num / den` for arbitrary `i64` inputs.
fn ratio_to_f64(num: i64, den: i64) -> f64 {
    let negative = (num < 0) != (den < 0);
    let (n, d) = (num.unsigned_abs() as u128, den.unsigned_abs() as u128);
    if n == 0 {
        return 0.0;
    }
    // scale so the integer quotient carries at least 56 significant bits,
    // then fold the remainder into a sticky bit before the final rounding
    let bits = |x: u128| 128 - x.leading_zeros() as i32;
    let shift = (56 + bits(d) - bits(n)).max(0) as u32;
    let scaled = n << shift;
    let (q, r) = (scaled / d, scaled % d);
    let q = if r != 0 { q | 1 } else { q };
    let v = q as f64 * (-(shift as f64)).exp2();
    if negative { -v } else { v }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawAtom {
    t: Number,
    mass: Number,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawPiece {
    a: Number,
    b: Number,
    coeffs: Vec<Number>,
    #[serde(default, skip_serializing_if = "is_zero")]
    low: i32,
}

fn is_zero(x: &i32) -> bool {
    *x == 0
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub(crate) struct RawMeasure {
    #[serde(default)]
    atoms: Vec<RawAtom>,
    #[serde(default)]
    pieces: Vec<RawPiece>,
}

impl TryFrom<RawMeasure> for RMeasure {
    type Error = Error;

    fn try_from(raw: RawMeasure) -> Result<Self> {
        let atoms = raw
            .atoms
            .into_iter()
            .map(|a| Ok(Atom { t: a.t.value()?, mass: a.mass.value()? }))
            .collect::<Result<Vec<_>>>()?;
        let pieces = raw
            .pieces
            .into_iter()
            .map(|p| {
                let coeffs = p.coeffs.into_iter().map(Number::value).collect::<Result<Vec<_>>>()?;
                Ok(Piece::new(p.a.value()?, p.b.value()?, Laurent::new(p.low, coeffs)))
            })
            .collect::<Result<Vec<_>>>()?;
        RMeasure::new(atoms, pieces)
    }
}

impl From<&RMeasure> for RawMeasure {
    fn from(m: &RMeasure) -> Self {
        RawMeasure {
            atoms: m
                .atoms()
                .iter()
                .map(|a| RawAtom { t: Number::Float(a.t), mass: Number::Float(a.mass) })
                .collect(),
            pieces: m
                .pieces()
                .iter()
                .map(|p| RawPiece {
                    a: Number::Float(p.a),
                    b: Number::Float(p.b),
                    coeffs: p.density.coeffs.iter().map(|&c| Number::Float(c)).collect(),
                    low: p.density.low,
                })
                .collect(),
        }
    }
}

impl Serialize for RMeasure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawMeasure::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for RMeasure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawMeasure::deserialize(d)?;
        RMeasure::try_from(raw).map_err(serde::de::Error::custom)
    }
}

impl RMeasure {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawMeasure = serde_json::from_str(text)?;
        RMeasure::try_from(raw)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("measure serialization cannot fail")
    }
}
