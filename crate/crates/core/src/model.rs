//! Exact-arithmetic domain types shared by every scheduler and verifier.
//!
//! Growth rates, witnesses and heights are `BigRational`s: arithmetic is
//! exact, values are kept in lowest terms with a positive denominator, and no
//! rounding happens anywhere in the model.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::Error;
use crate::set_systems::SetSystemDescriptor;
use crate::Result;

/// Exact rational number, always in lowest terms with positive denominator.
pub type Rational = num_rational::BigRational;

/// Shorthand for building a rational from machine integers.
pub fn rational(numerator: i64, denominator: i64) -> Rational {
    Rational::new(BigInt::from(numerator), BigInt::from(denominator))
}

/// A ground-set element: dense id within `[0, n)` plus an optional label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Element {
    pub id: usize,
    pub label: Option<String>,
}

impl Element {
    pub fn new(id: usize) -> Self {
        Element { id, label: None }
    }

    pub fn labeled(id: usize, label: impl Into<String>) -> Self {
        Element {
            id,
            label: Some(label.into()),
        }
    }

    /// Display name: the label if set, otherwise `e<id>`.
    pub fn name(&self) -> String {
        self.label.clone().unwrap_or_else(|| format!("e{}", self.id))
    }
}

/// Growth rates indexed by element id; every rate lies in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrowthVector {
    rates: Vec<Rational>,
}

impl GrowthVector {
    pub fn new(rates: Vec<Rational>) -> Result<Self> {
        for (id, rate) in rates.iter().enumerate() {
            if rate.is_negative() || rate > &Rational::one() {
                return Err(Error::InvalidGrowth(format!(
                    "rate of element {id} is {rate}, outside [0, 1]"
                )));
            }
        }
        Ok(GrowthVector { rates })
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn rate(&self, element: usize) -> &Rational {
        &self.rates[element]
    }

    pub fn rates(&self) -> &[Rational] {
        &self.rates
    }

    pub fn total(&self) -> Rational {
        self.rates.iter().sum()
    }
}

/// Convex combination of independent sets: nonnegative weights summing to 1.
///
/// The normalization witness of an instance; `generated_growth` recovers
/// `g(e) = sum of weights of sets containing e`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvexCombination {
    pub terms: Vec<(BTreeSet<usize>, Rational)>,
}

impl ConvexCombination {
    pub fn new(terms: Vec<(BTreeSet<usize>, Rational)>) -> Result<Self> {
        let mut sum = Rational::zero();
        for (_, weight) in &terms {
            if weight.is_negative() {
                return Err(Error::InvalidGrowth(format!(
                    "negative witness weight {weight}"
                )));
            }
            sum += weight;
        }
        if !sum.is_one() {
            return Err(Error::InvalidGrowth(format!(
                "witness weights sum to {sum}, expected 1"
            )));
        }
        Ok(ConvexCombination { terms })
    }

    /// The growth vector this combination generates.
    pub fn generated_growth(&self, ground: usize) -> Vec<Rational> {
        let mut rates = vec![Rational::zero(); ground];
        for (set, weight) in &self.terms {
            for &e in set {
                rates[e] += weight;
            }
        }
        rates
    }

    pub fn weight_sum(&self) -> Rational {
        self.terms.iter().map(|(_, w)| w).sum()
    }

    /// Restriction to a sub-ground-set, relabeling by `remap[old] = new id`.
    pub fn restrict(&self, remap: &[Option<usize>]) -> ConvexCombination {
        let terms = self
            .terms
            .iter()
            .map(|(set, w)| {
                let set = set.iter().filter_map(|&e| remap[e]).collect();
                (set, w.clone())
            })
            .collect();
        ConvexCombination { terms }
    }
}

/// A CBGT instance: ground set, set system, growth rates, optional witness.
#[derive(Debug, Clone)]
pub struct CbgtInstance {
    pub elements: Vec<Element>,
    pub system: SetSystemDescriptor,
    pub growth: GrowthVector,
    pub witness: Option<ConvexCombination>,
}

impl CbgtInstance {
    pub fn new(
        elements: Vec<Element>,
        system: SetSystemDescriptor,
        growth: GrowthVector,
        witness: Option<ConvexCombination>,
    ) -> Result<Self> {
        if growth.len() != elements.len() {
            return Err(Error::InvalidGrowth(format!(
                "growth vector has {} entries for {} elements",
                growth.len(),
                elements.len()
            )));
        }
        for (idx, el) in elements.iter().enumerate() {
            if el.id != idx {
                return Err(Error::InvalidDescriptor(format!(
                    "element ids must be dense: position {idx} holds id {}",
                    el.id
                )));
            }
        }
        system.validate(elements.len())?;
        if let Some(witness) = &witness {
            let generated = witness.generated_growth(elements.len());
            if generated != growth.rates() {
                return Err(Error::InvalidGrowth(
                    "witness does not generate the growth vector".into(),
                ));
            }
        }
        Ok(CbgtInstance {
            elements,
            system,
            growth,
            witness,
        })
    }

    /// Instance over `n` unlabeled elements.
    pub fn unlabeled(
        n: usize,
        system: SetSystemDescriptor,
        growth: GrowthVector,
        witness: Option<ConvexCombination>,
    ) -> Result<Self> {
        let elements = (0..n).map(Element::new).collect();
        CbgtInstance::new(elements, system, growth, witness)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// A schedule: a finite list of cut sets, optionally repeated forever.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub core: Vec<BTreeSet<usize>>,
    pub periodic: bool,
}

impl Schedule {
    pub fn finite(core: Vec<BTreeSet<usize>>) -> Self {
        Schedule {
            core,
            periodic: false,
        }
    }

    pub fn periodic(core: Vec<BTreeSet<usize>>) -> Self {
        Schedule {
            core,
            periodic: true,
        }
    }

    pub fn period(&self) -> usize {
        self.core.len()
    }

    /// Cut set on (1-based) day `t`. `None` past the end of a finite schedule.
    pub fn cut(&self, day: usize) -> Option<&BTreeSet<usize>> {
        debug_assert!(day >= 1);
        if self.periodic {
            if self.core.is_empty() {
                return None;
            }
            Some(&self.core[(day - 1) % self.core.len()])
        } else {
            self.core.get(day - 1)
        }
    }

    /// Ensure every cut set lies inside `[0, ground)`.
    pub fn check_ground(&self, ground: usize) -> Result<()> {
        for set in &self.core {
            if let Some(&e) = set.iter().next_back() {
                if e >= ground {
                    return Err(Error::ElementOutOfRange { element: e, ground });
                }
            }
        }
        Ok(())
    }
}

/// Least common multiple of growth-rate denominators and the per-element
/// integer cut counts `T * g(e)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenominatorLcm {
    /// Smallest `T` with `T * g(e)` integral for every element.
    pub period: u64,
    /// `T * g(e)` per element.
    pub cuts_per_period: Vec<u64>,
}

/// Computes the smallest `T` such that `T * g(e)` is an integer for all `e`.
///
/// All rates must be nonzero; strip zero-rate elements first. The lcm is
/// computed in arbitrary precision and only then narrowed, so an overgrown
/// period fails loudly instead of wrapping.
pub fn lcm_of_denominators(growth: &GrowthVector) -> Result<DenominatorLcm> {
    let mut lcm = BigInt::one();
    for (id, rate) in growth.rates().iter().enumerate() {
        if rate.is_zero() {
            return Err(Error::ZeroRate(id));
        }
        lcm = lcm.lcm(rate.denom());
    }
    let period = lcm
        .to_u64()
        .ok_or(Error::PeriodTooLarge { partial: lcm.clone() })?;
    let cuts_per_period = growth
        .rates()
        .iter()
        .map(|rate| {
            let cuts = (rate * Rational::from_integer(lcm.clone())).to_integer();
            cuts.to_u64().ok_or(Error::PeriodTooLarge {
                partial: lcm.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DenominatorLcm {
        period,
        cuts_per_period,
    })
}

/// Removes all zero-rate elements, restricting the set system and witness.
///
/// Returns the reduced instance and the removed elements. Idempotent.
pub fn strip_zero_rate(inst: &CbgtInstance) -> Result<(CbgtInstance, Vec<Element>)> {
    let n = inst.len();
    let mut remap: Vec<Option<usize>> = vec![None; n];
    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for e in 0..n {
        if inst.growth.rate(e).is_zero() {
            removed.push(inst.elements[e].clone());
        } else {
            remap[e] = Some(kept.len());
            kept.push(e);
        }
    }
    if removed.is_empty() {
        return Ok((inst.clone(), removed));
    }
    let elements = kept
        .iter()
        .enumerate()
        .map(|(new_id, &old)| Element {
            id: new_id,
            label: inst.elements[old].label.clone(),
        })
        .collect();
    let growth = GrowthVector::new(kept.iter().map(|&e| inst.growth.rate(e).clone()).collect())?;
    let system = inst.system.delete(&remap)?;
    let witness = inst.witness.as_ref().map(|w| w.restrict(&remap));
    CbgtInstance::new(elements, system, growth, witness).map(|inst| (inst, removed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn growth(rates: &[(i64, i64)]) -> GrowthVector {
        GrowthVector::new(rates.iter().map(|&(n, d)| rational(n, d)).collect()).unwrap()
    }

    #[test]
    fn lcm_single_denominator() {
        let g = growth(&[(4, 11)]);
        let lcm = lcm_of_denominators(&g).unwrap();
        assert_eq!(lcm.period, 11);
        assert_eq!(lcm.cuts_per_period, vec![4]);
    }

    #[test]
    fn lcm_example_rates() {
        // lcm(10, 5, 2, 2, 10) = 10, computed by hand.
        let g = growth(&[(1, 10), (1, 5), (1, 2), (1, 2), (3, 10)]);
        let lcm = lcm_of_denominators(&g).unwrap();
        assert_eq!(lcm.period, 10);
        assert_eq!(lcm.cuts_per_period, vec![1, 2, 5, 5, 3]);
    }

    #[test]
    fn lcm_mixed_pair() {
        let g = growth(&[(4, 11), (1, 2)]);
        assert_eq!(lcm_of_denominators(&g).unwrap().period, 22);
    }

    #[test]
    fn lcm_rejects_zero_rate() {
        let g = growth(&[(0, 1), (1, 2)]);
        assert!(matches!(lcm_of_denominators(&g), Err(Error::ZeroRate(0))));
    }

    #[test]
    fn strip_keeps_positive_instance() {
        let inst = CbgtInstance::unlabeled(
            2,
            SetSystemDescriptor::Uniform { k: 1 },
            growth(&[(1, 2), (1, 2)]),
            None,
        )
        .unwrap();
        let (stripped, removed) = strip_zero_rate(&inst).unwrap();
        assert!(removed.is_empty());
        assert_eq!(stripped.len(), 2);
    }

    #[test]
    fn strip_removes_zero_rate() {
        let inst = CbgtInstance::unlabeled(
            2,
            SetSystemDescriptor::Uniform { k: 1 },
            growth(&[(0, 1), (1, 2)]),
            None,
        )
        .unwrap();
        let (stripped, removed) = strip_zero_rate(&inst).unwrap();
        assert_eq!(removed.len(), 1);
        assert_eq!(removed[0].id, 0);
        assert_eq!(stripped.len(), 1);
        assert_eq!(stripped.growth.rate(0), &rational(1, 2));
        // Idempotent.
        let (again, removed) = strip_zero_rate(&stripped).unwrap();
        assert!(removed.is_empty());
        assert_eq!(again.len(), 1);
    }

    #[test]
    fn witness_must_generate_growth() {
        let witness = ConvexCombination::new(vec![
            ([0].into(), rational(1, 2)),
            ([1].into(), rational(1, 2)),
        ])
        .unwrap();
        let bad = CbgtInstance::unlabeled(
            2,
            SetSystemDescriptor::Uniform { k: 1 },
            growth(&[(1, 2), (1, 3)]),
            Some(witness),
        );
        assert!(bad.is_err());
    }

    #[test]
    fn witness_weights_must_sum_to_one() {
        let bad = ConvexCombination::new(vec![([0].into(), rational(1, 2))]);
        assert!(bad.is_err());
    }
}
