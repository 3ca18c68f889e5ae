//! JSON encoding of maps:
//! `{"segments":[{"dom":[x0,x1],"img":[y0,y1],"form":{...}}]}` with forms
//! `{"linear":{"slope":s}}`, `{"quantile":{"measure":…,"offset":o}}` or
//! `{"sampled":{"values":[…]}}`.

use serde::{Deserialize, Serialize};

use super::segment::{Form, QuantileForm, SampledForm, Segment};
use super::PwMap;
use crate::error::{Error, Result};
use crate::measure::json::Number;
use crate::measure::RMeasure;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RawForm {
    Linear {
        slope: Number,
    },
    Quantile {
        measure: RMeasure,
        #[serde(default = "zero")]
        offset: Number,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        decreasing: bool,
    },
    Sampled {
        values: Vec<f64>,
    },
}

fn zero() -> Number {
    Number::Float(0.0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawSegment {
    dom: [Number; 2],
    img: [Number; 2],
    form: RawForm,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawMap {
    segments: Vec<RawSegment>,
}

impl TryFrom<RawMap> for PwMap {
    type Error = Error;

    fn try_from(raw: RawMap) -> Result<Self> {
        let mut segs = Vec::with_capacity(raw.segments.len());
        for (i, s) in raw.segments.into_iter().enumerate() {
            let (x0, x1) = (s.dom[0].value()?, s.dom[1].value()?);
            let (y0, y1) = (s.img[0].value()?, s.img[1].value()?);
            let form = match s.form {
                RawForm::Linear { slope } => Form::Linear { slope: slope.value()? },
                RawForm::Quantile { measure, offset, decreasing } => {
                    Form::Quantile(QuantileForm { base: measure, offset: offset.value()?, decreasing })
                }
                RawForm::Sampled { values } => Form::Sampled(
                    SampledForm::from_values(values, x1 - x0, y1 - y0)
                        .map_err(|e| Error::invalid("map", format!("segment {i}: {e}")))?,
                ),
            };
            segs.push(Segment { x0, x1, y0, y1, form });
        }
        PwMap::new(segs)
    }
}

impl From<&PwMap> for RawMap {
    fn from(m: &PwMap) -> Self {
        RawMap {
            segments: m
                .segments()
                .iter()
                .map(|s| RawSegment {
                    dom: [Number::Float(s.x0), Number::Float(s.x1)],
                    img: [Number::Float(s.y0), Number::Float(s.y1)],
                    form: match &s.form {
                        Form::Linear { slope } => RawForm::Linear { slope: Number::Float(*slope) },
                        Form::Quantile(q) => RawForm::Quantile {
                            measure: q.base.clone(),
                            offset: Number::Float(q.offset),
                            decreasing: q.decreasing,
                        },
                        Form::Sampled(f) => RawForm::Sampled { values: f.values().to_vec() },
                    },
                })
                .collect(),
        }
    }
}

impl Serialize for PwMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawMap::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for PwMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawMap::deserialize(d)?;
        PwMap::try_from(raw).map_err(serde::de::Error::custom)
    }
}

impl PwMap {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawMap = serde_json::from_str(text)?;
        PwMap::try_from(raw)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("map serialization cannot fail")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_g0_with_rationals() {
        let g = PwMap::from_json(
            r#"{"segments":[
                {"dom":[0,0.5],"img":[0,0.25],"form":{"linear":{"slope":0.5}}},
                {"dom":[0.5,1],"img":[0.25,1],"form":{"linear":{"slope":{"num":3,"den":2}}}}]}"#,
        )
        .unwrap();
        assert_eq!(g.evaluate(0.75).unwrap(), 0.625);
    }

    #[test]
    fn quantile_form_roundtrip() {
        let text = r#"{"segments":[{"dom":[0,1],"img":[0,1],
            "form":{"quantile":{"measure":{"pieces":[{"a":0.5,"b":1.5,"coeffs":[1]}]},"offset":0}}}]}"#;
        let g = PwMap::from_json(text).unwrap();
        assert!((g.evaluate(0.5).unwrap() - 0.375).abs() < 1e-15);
        assert_eq!(PwMap::from_json(&g.to_json()).unwrap(), g);
    }

    #[test]
    fn overlapping_domains_are_named() {
        let err = PwMap::from_json(
            r#"{"segments":[
                {"dom":[0,0.6],"img":[0,0.6],"form":{"linear":{"slope":1}}},
                {"dom":[0.5,1],"img":[0.6,1],"form":{"linear":{"slope":0.8}}}]}"#,
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("domain interval 1") && err.contains("overlaps interval 0"), "{err}");
    }
}
