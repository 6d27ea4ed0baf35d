//! JSON schemas for instances, schedules and CPS instances.
//!
//! Rationals are serialized as decimal-string pairs `["num", "den"]` so round
//! trips stay exact.

use std::collections::BTreeSet;
use std::str::FromStr;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::{CbgtInstance, ConvexCombination, Element, GrowthVector, Rational, Schedule};
use crate::pinwheel::{CpsInstance, DensityCertificate};
use crate::set_systems::SetSystemDescriptor;
use crate::Result;

/// Serde adapter serializing a [`Rational`] as `["num", "den"]`.
pub mod rational_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Rational, ser: S) -> std::result::Result<S::Ok, S::Error> {
        RationalDoc::from(value).serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Rational, D::Error> {
        let doc = RationalDoc::deserialize(de)?;
        doc.to_rational().map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Option<Rational>`.
pub mod rational_opt_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        value: &Option<Rational>,
        ser: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        value.as_ref().map(RationalDoc::from).serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        de: D,
    ) -> std::result::Result<Option<Rational>, D::Error> {
        let doc = Option::<RationalDoc>::deserialize(de)?;
        doc.map(|d| d.to_rational().map_err(serde::de::Error::custom))
            .transpose()
    }
}

/// A rational as a decimal-string pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RationalDoc(pub String, pub String);

impl From<&Rational> for RationalDoc {
    fn from(r: &Rational) -> Self {
        RationalDoc(r.numer().to_string(), r.denom().to_string())
    }
}

impl RationalDoc {
    pub fn to_rational(&self) -> Result<Rational> {
        let numer = BigInt::from_str(&self.0)
            .map_err(|e| Error::InvalidDescriptor(format!("bad numerator {:?}: {e}", self.0)))?;
        let denom = BigInt::from_str(&self.1)
            .map_err(|e| Error::InvalidDescriptor(format!("bad denominator {:?}: {e}", self.1)))?;
        if denom <= BigInt::from(0) {
            return Err(Error::InvalidDescriptor(format!(
                "denominator {} must be positive",
                self.1
            )));
        }
        Ok(Rational::new(numer, denom))
    }
}

/// One witness or certificate term: an independent set and its weight.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightedSetDoc {
    pub set: Vec<usize>,
    pub weight: RationalDoc,
}

/// Instance file format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceDoc {
    pub elements: Vec<String>,
    pub system: SetSystemDescriptor,
    pub growth: Vec<RationalDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<WeightedSetDoc>>,
}

impl InstanceDoc {
    pub fn from_instance(inst: &CbgtInstance) -> Self {
        InstanceDoc {
            elements: inst.elements.iter().map(|e| e.name()).collect(),
            system: inst.system.clone(),
            growth: inst.growth.rates().iter().map(RationalDoc::from).collect(),
            witness: inst.witness.as_ref().map(|w| {
                w.terms
                    .iter()
                    .map(|(set, weight)| WeightedSetDoc {
                        set: set.iter().copied().collect(),
                        weight: RationalDoc::from(weight),
                    })
                    .collect()
            }),
        }
    }

    pub fn into_instance(self) -> Result<CbgtInstance> {
        let elements = self
            .elements
            .into_iter()
            .enumerate()
            .map(|(id, label)| Element::labeled(id, label))
            .collect();
        let growth = GrowthVector::new(
            self.growth
                .iter()
                .map(RationalDoc::to_rational)
                .collect::<Result<Vec<_>>>()?,
        )?;
        let witness = self
            .witness
            .map(|terms| {
                let terms = terms
                    .into_iter()
                    .map(|t| Ok((t.set.into_iter().collect::<BTreeSet<_>>(), t.weight.to_rational()?)))
                    .collect::<Result<Vec<_>>>()?;
                ConvexCombination::new(terms)
            })
            .transpose()?;
        CbgtInstance::new(elements, self.system, growth, witness)
    }
}

/// Schedule file format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduleDoc {
    pub periodic: bool,
    pub core: Vec<Vec<usize>>,
}

impl ScheduleDoc {
    pub fn from_schedule(sched: &Schedule) -> Self {
        ScheduleDoc {
            periodic: sched.periodic,
            core: sched
                .core
                .iter()
                .map(|set| set.iter().copied().collect())
                .collect(),
        }
    }

    pub fn into_schedule(self) -> Schedule {
        Schedule {
            periodic: self.periodic,
            core: self
                .core
                .into_iter()
                .map(|set| set.into_iter().collect())
                .collect(),
        }
    }
}

/// CPS instance file format: mirrors the CBGT schema with integer periods.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CpsDoc {
    pub elements: Vec<String>,
    pub system: SetSystemDescriptor,
    pub periods: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Vec<WeightedSetDoc>>,
}

impl CpsDoc {
    pub fn from_cps(cps: &CpsInstance) -> Self {
        CpsDoc {
            elements: cps.elements.iter().map(|e| e.name()).collect(),
            system: cps.system.clone(),
            periods: cps.periods.clone(),
            certificate: cps.certificate.as_ref().map(|cert| {
                cert.terms
                    .iter()
                    .map(|(set, weight)| WeightedSetDoc {
                        set: set.iter().copied().collect(),
                        weight: RationalDoc::from(weight),
                    })
                    .collect()
            }),
        }
    }

    pub fn into_cps(self) -> Result<CpsInstance> {
        let elements: Vec<Element> = self
            .elements
            .into_iter()
            .enumerate()
            .map(|(id, label)| Element::labeled(id, label))
            .collect();
        let certificate = self
            .certificate
            .map(|terms| {
                let terms = terms
                    .into_iter()
                    .map(|t| Ok((t.set.into_iter().collect::<BTreeSet<_>>(), t.weight.to_rational()?)))
                    .collect::<Result<Vec<_>>>()?;
                Ok::<_, Error>(DensityCertificate { terms })
            })
            .transpose()?;
        CpsInstance::new(elements, self.system, self.periods, certificate)
    }
}

/// A bundled instance + schedule, the unit passed between CLI stages.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunDoc {
    pub instance: InstanceDoc,
    pub schedule: ScheduleDoc,
}

pub fn instance_to_json(inst: &CbgtInstance) -> String {
    serde_json::to_string_pretty(&InstanceDoc::from_instance(inst)).expect("instance serializes")
}

pub fn instance_from_json(json: &str) -> Result<CbgtInstance> {
    let doc: InstanceDoc = serde_json::from_str(json)?;
    doc.into_instance()
}

pub fn schedule_to_json(sched: &Schedule) -> String {
    serde_json::to_string_pretty(&ScheduleDoc::from_schedule(sched)).expect("schedule serializes")
}

pub fn schedule_from_json(json: &str) -> Result<Schedule> {
    let doc: ScheduleDoc = serde_json::from_str(json)?;
    Ok(doc.into_schedule())
}

pub fn cps_to_json(cps: &CpsInstance) -> String {
    serde_json::to_string_pretty(&CpsDoc::from_cps(cps)).expect("cps serializes")
}

pub fn cps_from_json(json: &str) -> Result<CpsInstance> {
    let doc: CpsDoc = serde_json::from_str(json)?;
    doc.into_cps()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rational;

    #[test]
    fn instance_round_trip() {
        let growth = GrowthVector::new(vec![rational(1, 10), rational(1, 2)]).unwrap();
        let witness = ConvexCombination::new(vec![
            (BTreeSet::from([1]), rational(1, 2)),
            (BTreeSet::from([0]), rational(1, 10)),
            (BTreeSet::new(), rational(2, 5)),
        ])
        .unwrap();
        let inst = CbgtInstance::unlabeled(
            2,
            SetSystemDescriptor::Uniform { k: 1 },
            growth,
            Some(witness),
        )
        .unwrap();
        let json = instance_to_json(&inst);
        let back = instance_from_json(&json).unwrap();
        assert_eq!(back.growth, inst.growth);
        assert_eq!(back.system, inst.system);
        assert_eq!(back.witness, inst.witness);
    }

    #[test]
    fn growth_is_decimal_string_pairs() {
        let growth = GrowthVector::new(vec![rational(4, 11)]).unwrap();
        let inst =
            CbgtInstance::unlabeled(1, SetSystemDescriptor::Uniform { k: 1 }, growth, None).unwrap();
        let json =
            serde_json::to_string(&InstanceDoc::from_instance(&inst)).unwrap();
        assert!(json.contains(r#"["4","11"]"#), "{json}");
    }

    #[test]
    fn schedule_round_trip() {
        let sched = Schedule::periodic(vec![BTreeSet::from([0, 2]), BTreeSet::from([1])]);
        let back = schedule_from_json(&schedule_to_json(&sched)).unwrap();
        assert_eq!(back, sched);
    }

    #[test]
    fn rejects_nonpositive_denominator() {
        let json = r#"{
            "elements": ["a"],
            "system": {"uniform": {"k": 1}},
            "growth": [["1", "0"]]
        }"#;
        assert!(instance_from_json(json).is_err());
    }
}
