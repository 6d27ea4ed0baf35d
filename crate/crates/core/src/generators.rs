//! Instance factories: lower-bound constructions, tight examples and random
//! normalized instances for property testing.
//!
//! Every generator attaches the convex-combination witness it built the
//! growth vector from, so validation always has an exact certificate. Random
//! instances are pure functions of their parameters and a ChaCha8 seed.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::model::{
    strip_zero_rate, CbgtInstance, ConvexCombination, Element, GrowthVector, Rational,
};
use crate::pinwheel::{CpsInstance, DensityCertificate};
use crate::set_systems::{is_independent, maximal_independent_sets, DirectSumPart, SetSystemDescriptor};
use crate::Result;

/// Binomial lower-bound instance: elements are the k-subsets of `[2k]`,
/// cuttable sets are "all subsets containing i" for each `i`, every rate is
/// 1/2. Any `k` cuts miss some element, which therefore reaches height `k/2`.
pub fn gen_binomial_lb(k: usize) -> Result<CbgtInstance> {
    if k == 0 || k > 6 {
        return Err(Error::InvalidDescriptor(format!(
            "binomial construction supports 1 <= k <= 6, got {k}"
        )));
    }
    let universe = 2 * k;
    let subsets = k_subsets(universe, k);
    let elements: Vec<Element> = subsets
        .iter()
        .enumerate()
        .map(|(id, s)| {
            let label = s
                .iter()
                .map(|i| (i + 1).to_string())
                .collect::<Vec<_>>()
                .join(",");
            Element::labeled(id, format!("{{{label}}}"))
        })
        .collect();
    let generators: Vec<BTreeSet<usize>> = (0..universe)
        .map(|i| {
            subsets
                .iter()
                .enumerate()
                .filter(|(_, s)| s.contains(&i))
                .map(|(id, _)| id)
                .collect()
        })
        .collect();
    let weight = Rational::new(BigInt::one(), BigInt::from(universe));
    let witness = ConvexCombination::new(
        generators
            .iter()
            .map(|g| (g.clone(), weight.clone()))
            .collect(),
    )?;
    let growth = GrowthVector::new(witness.generated_growth(elements.len()))?;
    debug_assert!(growth.rates().iter().all(|g| g == &Rational::new(1.into(), 2.into())));
    CbgtInstance::new(
        elements,
        SetSystemDescriptor::Explicit { generators },
        growth,
        Some(witness),
    )
}

fn k_subsets(universe: usize, k: usize) -> Vec<BTreeSet<usize>> {
    let mut out = Vec::new();
    let mut current = BTreeSet::new();
    fn recurse(
        universe: usize,
        k: usize,
        from: usize,
        current: &mut BTreeSet<usize>,
        out: &mut Vec<BTreeSet<usize>>,
    ) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in from..universe {
            if universe - i < k - current.len() {
                break;
            }
            current.insert(i);
            recurse(universe, k, i + 1, current, out);
            current.remove(&i);
        }
    }
    recurse(universe, k, 0, &mut current, &mut out);
    out
}

/// Hypercube lower-bound instance: elements are the nonzero points of
/// `{0,1}^k`, cuttable sets are the affine hyperplanes `H_v = {u : v.u = 1
/// mod 2}`, every rate is `2^(k-1) / (2^k - 1)`. Fewer than `k` hyperplanes
/// never cover all points.
pub fn gen_hypercube_lb(k: usize) -> Result<CbgtInstance> {
    if k == 0 || k > 5 {
        return Err(Error::InvalidDescriptor(format!(
            "hypercube construction supports 1 <= k <= 5, got {k}"
        )));
    }
    let n = (1usize << k) - 1;
    let elements: Vec<Element> = (1..=n)
        .map(|u| Element::labeled(u - 1, format!("{u:0k$b}", k = k)))
        .collect();
    let generators: Vec<BTreeSet<usize>> = (1..=n)
        .map(|v| {
            (1..=n)
                .filter(|&u| (u & v).count_ones() % 2 == 1)
                .map(|u| u - 1)
                .collect()
        })
        .collect();
    let weight = Rational::new(BigInt::one(), BigInt::from(n));
    let witness = ConvexCombination::new(
        generators
            .iter()
            .map(|g| (g.clone(), weight.clone()))
            .collect(),
    )?;
    let growth = GrowthVector::new(witness.generated_growth(n))?;
    let expected = Rational::new(BigInt::from(1usize << (k - 1)), BigInt::from(n));
    debug_assert!(growth.rates().iter().all(|g| g == &expected));
    CbgtInstance::new(
        elements,
        SetSystemDescriptor::Explicit { generators },
        growth,
        Some(witness),
    )
}

/// The height-2 tightness pair: one bamboo at rate `1 - eps`, one at `eps`.
pub fn gen_tight_pair(eps: &Rational) -> Result<CbgtInstance> {
    if eps <= &Rational::zero() || eps >= &Rational::one() {
        return Err(Error::InvalidDescriptor(format!(
            "eps must lie strictly between 0 and 1, got {eps}"
        )));
    }
    let witness = ConvexCombination::new(vec![
        (BTreeSet::from([0]), Rational::one() - eps),
        (BTreeSet::from([1]), eps.clone()),
    ])?;
    let growth = GrowthVector::new(vec![Rational::one() - eps, eps.clone()])?;
    CbgtInstance::new(
        vec![Element::labeled(0, "a"), Element::labeled(1, "b")],
        SetSystemDescriptor::Uniform { k: 1 },
        growth,
        Some(witness),
    )
}

/// Which set-system family to randomize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RandomSystemKind {
    Uniform,
    Partition,
    Graphic,
    Laminar,
    Transversal,
    /// A small matroid re-encoded as an explicit list of its bases.
    ExplicitBases,
    DirectSum,
}

impl RandomSystemKind {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "uniform" => RandomSystemKind::Uniform,
            "partition" => RandomSystemKind::Partition,
            "graphic" => RandomSystemKind::Graphic,
            "laminar" => RandomSystemKind::Laminar,
            "transversal" => RandomSystemKind::Transversal,
            "explicit" => RandomSystemKind::ExplicitBases,
            "direct_sum" => RandomSystemKind::DirectSum,
            other => {
                return Err(Error::InvalidDescriptor(format!(
                    "unknown system kind {other:?}"
                )))
            }
        })
    }
}

/// Parameters of a random normalized instance.
#[derive(Debug, Clone)]
pub struct RandomInstanceParams {
    pub kind: RandomSystemKind,
    /// Ground-set size.
    pub elements: usize,
    /// Common denominator of the witness weights; growth denominators divide
    /// it.
    pub denominator: u64,
    /// Number of independent sets to sample (merged if drawn twice, capped
    /// at `denominator`).
    pub terms: usize,
}

/// Samples a random normalized instance: a random system of the requested
/// kind, random independent sets via oracle-guided random greedy, and random
/// weights `w_i / denominator` summing to one. The witness is attached.
pub fn gen_random_normalized(params: &RandomInstanceParams, seed: u64) -> Result<CbgtInstance> {
    let n = params.elements;
    if n == 0 {
        return Err(Error::EmptyInstance);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let system = random_system(params.kind, n, &mut rng)?;

    let denominator = params.denominator.max(1);
    let term_count = params.terms.clamp(1, denominator as usize);
    let mut weights = vec![1u64; term_count];
    for _ in 0..denominator - term_count as u64 {
        let at = rng.gen_range(0..term_count);
        weights[at] += 1;
    }

    let mut merged: BTreeMap<BTreeSet<usize>, Rational> = BTreeMap::new();
    for &w in &weights {
        let set = random_independent_set(&system, n, &mut rng);
        let weight = Rational::new(BigInt::from(w), BigInt::from(denominator));
        *merged.entry(set).or_insert_with(Rational::zero) += weight;
    }
    let witness = ConvexCombination::new(merged.into_iter().collect())?;
    let growth = GrowthVector::new(witness.generated_growth(n))?;
    CbgtInstance::unlabeled(n, system, growth, Some(witness))
}

fn random_system(
    kind: RandomSystemKind,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<SetSystemDescriptor> {
    Ok(match kind {
        RandomSystemKind::Uniform => SetSystemDescriptor::Uniform {
            k: rng.gen_range(1..=n),
        },
        RandomSystemKind::Partition => {
            let block_count = rng.gen_range(1..=n);
            let mut blocks: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); block_count];
            for e in 0..n {
                blocks[rng.gen_range(0..block_count)].insert(e);
            }
            blocks.retain(|b| !b.is_empty());
            let caps = blocks.iter().map(|b| rng.gen_range(1..=b.len())).collect();
            SetSystemDescriptor::Partition { blocks, caps }
        }
        RandomSystemKind::Graphic => {
            let vertices = rng.gen_range(2..=(n + 1).max(3));
            let edges = (0..n)
                .map(|_| {
                    let u = rng.gen_range(0..vertices);
                    let mut v = rng.gen_range(0..vertices - 1);
                    if v >= u {
                        v += 1;
                    }
                    (u, v)
                })
                .collect();
            SetSystemDescriptor::Graphic { vertices, edges }
        }
        RandomSystemKind::Laminar => {
            let mut family = Vec::new();
            let mut caps = Vec::new();
            // Recursive interval splitting keeps the family laminar.
            let mut stack = vec![(0usize, n)];
            while let Some((lo, hi)) = stack.pop() {
                if hi - lo < 2 {
                    continue;
                }
                if rng.gen_bool(0.7) {
                    let set: BTreeSet<usize> = (lo..hi).collect();
                    caps.push(rng.gen_range(1..=set.len()));
                    family.push(set);
                }
                if hi - lo >= 3 && rng.gen_bool(0.8) {
                    let mid = rng.gen_range(lo + 1..hi);
                    stack.push((lo, mid));
                    stack.push((mid, hi));
                }
            }
            SetSystemDescriptor::Laminar { family, caps }
        }
        RandomSystemKind::Transversal => {
            let rights = rng.gen_range(1..=n);
            let adjacency = (0..n)
                .map(|_| {
                    let degree = rng.gen_range(1..=rights.min(3));
                    let mut row = BTreeSet::new();
                    while row.len() < degree {
                        row.insert(rng.gen_range(0..rights));
                    }
                    row
                })
                .collect();
            SetSystemDescriptor::Transversal { adjacency }
        }
        RandomSystemKind::ExplicitBases => {
            let base = if rng.gen_bool(0.5) {
                random_system(RandomSystemKind::Uniform, n, rng)?
            } else {
                random_system(RandomSystemKind::Partition, n, rng)?
            };
            let generators = maximal_independent_sets(&base, n)?;
            SetSystemDescriptor::Explicit { generators }
        }
        RandomSystemKind::DirectSum => {
            let first = n / 2;
            if first == 0 || n - first == 0 {
                return random_system(RandomSystemKind::Uniform, n, rng);
            }
            let parts = vec![
                DirectSumPart {
                    system: random_system(RandomSystemKind::Uniform, first, rng)?,
                    size: first,
                },
                DirectSumPart {
                    system: random_system(RandomSystemKind::Graphic, n - first, rng)?,
                    size: n - first,
                },
            ];
            SetSystemDescriptor::DirectSum { parts }
        }
    })
}

/// Oracle-guided random greedy: walk a random permutation, keep what stays
/// independent, stop at a random target size.
fn random_independent_set(
    system: &SetSystemDescriptor,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> BTreeSet<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let target = rng.gen_range(1..=n);
    let mut set = BTreeSet::new();
    for e in order {
        set.insert(e);
        if !is_independent(system, &set, n).unwrap_or(false) {
            set.remove(&e);
        }
        if set.len() >= target {
            break;
        }
    }
    set
}

/// Random CPS instance with a density certificate of total weight exactly
/// 1/2: halve a random instance's witness and set `a(e) = ceil(1 /
/// coverage(e))`. Zero-rate elements are stripped first.
pub fn gen_random_half_density_cps(
    params: &RandomInstanceParams,
    seed: u64,
) -> Result<CpsInstance> {
    let inst = gen_random_normalized(params, seed)?;
    let (inst, _) = strip_zero_rate(&inst)?;
    if inst.is_empty() {
        return Err(Error::EmptyInstance);
    }
    let witness = inst.witness.as_ref().expect("generator attaches a witness");
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    let cert = DensityCertificate {
        terms: witness
            .terms
            .iter()
            .map(|(set, w)| (set.clone(), w * &half))
            .collect(),
    };
    let periods: Vec<u64> = (0..inst.len())
        .map(|e| {
            let coverage = cert.coverage(e);
            let a = (Rational::one() / coverage).ceil().to_integer();
            u64::try_from(a).expect("period fits u64")
        })
        .collect();
    CpsInstance::new(inst.elements.clone(), inst.system.clone(), periods, Some(cert))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rational;
    use crate::set_systems::validate_growth;

    #[test]
    fn binomial_k2_shape() {
        let inst = gen_binomial_lb(2).unwrap();
        assert_eq!(inst.len(), 6);
        let SetSystemDescriptor::Explicit { generators } = &inst.system else {
            panic!("binomial instances are explicit");
        };
        assert_eq!(generators.len(), 4);
        for g in generators {
            assert_eq!(g.len(), 3);
        }
        for rate in inst.growth.rates() {
            assert_eq!(rate, &rational(1, 2));
        }
        assert!(validate_growth(&inst).unwrap().valid);
    }

    #[test]
    fn binomial_k1_is_a_pair() {
        let inst = gen_binomial_lb(1).unwrap();
        assert_eq!(inst.len(), 2);
        let SetSystemDescriptor::Explicit { generators } = &inst.system else {
            panic!();
        };
        assert_eq!(generators.len(), 2);
        for g in generators {
            assert_eq!(g.len(), 1);
        }
    }

    #[test]
    fn hypercube_k2_shape() {
        let inst = gen_hypercube_lb(2).unwrap();
        assert_eq!(inst.len(), 3);
        let SetSystemDescriptor::Explicit { generators } = &inst.system else {
            panic!();
        };
        // Each affine hyperplane of the 2-cube holds 2 of the 3 points.
        for g in generators {
            assert_eq!(g.len(), 2);
        }
        for rate in inst.growth.rates() {
            assert_eq!(rate, &rational(2, 3));
        }
    }

    #[test]
    fn hypercube_k1_is_a_single_element() {
        let inst = gen_hypercube_lb(1).unwrap();
        assert_eq!(inst.len(), 1);
        assert_eq!(inst.growth.rate(0), &rational(1, 1));
    }

    #[test]
    fn tight_pair_rates() {
        let inst = gen_tight_pair(&rational(1, 4)).unwrap();
        assert_eq!(inst.growth.rates(), &[rational(3, 4), rational(1, 4)]);
        assert!(validate_growth(&inst).unwrap().valid);
    }

    #[test]
    fn random_instances_are_reproducible_and_valid() {
        for kind in [
            RandomSystemKind::Uniform,
            RandomSystemKind::Partition,
            RandomSystemKind::Graphic,
            RandomSystemKind::Laminar,
            RandomSystemKind::Transversal,
            RandomSystemKind::ExplicitBases,
            RandomSystemKind::DirectSum,
        ] {
            let params = RandomInstanceParams {
                kind,
                elements: 6,
                denominator: 8,
                terms: 4,
            };
            let a = gen_random_normalized(&params, 7).unwrap();
            let b = gen_random_normalized(&params, 7).unwrap();
            assert_eq!(a.growth, b.growth, "{kind:?} must be seed-deterministic");
            assert_eq!(a.system, b.system);
            let verdict = validate_growth(&a).unwrap();
            assert!(verdict.valid, "{kind:?}: {:?}", verdict.violation);
        }
    }

    #[test]
    fn random_half_density_cps_has_exact_half_certificate() {
        let params = RandomInstanceParams {
            kind: RandomSystemKind::Graphic,
            elements: 6,
            denominator: 6,
            terms: 3,
        };
        let cps = gen_random_half_density_cps(&params, 11).unwrap();
        let cert = cps.certificate.as_ref().unwrap();
        assert_eq!(cert.rho(), rational(1, 2));
        cps.check_certificate(cert).unwrap();
    }
}
