//! Fuse-Unfuse tree schedules for uniform and partition matroids.
//!
//! Preprocessing repeatedly fuses the two slowest bamboos into a pseudo-bamboo
//! of rate `2 * max(g(e), g(f))` until `k` binary trees remain. Playback walks
//! each tree root-to-leaf once per day, flipping a status bit at every
//! internal node, and cuts the reached leaves; this unfuses every fusion by
//! alternation. On a valid `k`-uniform instance the resulting schedule has
//! height below 2.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use num_traits::Zero;

use crate::error::Error;
use crate::model::{CbgtInstance, Rational, Schedule};
use crate::set_systems::SetSystemDescriptor;
use crate::Result;

#[derive(Debug, Clone)]
enum FusionNode {
    Leaf {
        element: usize,
        rate: Rational,
    },
    Internal {
        left: usize,
        right: usize,
        rate: Rational,
    },
}

impl FusionNode {
    fn rate(&self) -> &Rational {
        match self {
            FusionNode::Leaf { rate, .. } | FusionNode::Internal { rate, .. } => rate,
        }
    }
}

/// A forest of fusion trees over (global) element ids.
///
/// Node indices double as creation sequence numbers, which is the tie-break
/// order of the fusion heap.
#[derive(Debug, Clone)]
pub struct FusionForest {
    nodes: Vec<FusionNode>,
    roots: Vec<usize>,
}

impl FusionForest {
    /// Runs the fusion loop on `(element, rate)` pairs until `k` trees remain.
    ///
    /// `k` is clamped to the number of elements. All rates must be positive.
    pub fn build(leaves: &[(usize, Rational)], k: usize) -> Result<FusionForest> {
        if leaves.is_empty() {
            return Err(Error::EmptyInstance);
        }
        for (element, rate) in leaves {
            if rate.is_zero() {
                return Err(Error::ZeroRate(*element));
            }
        }
        let k = k.min(leaves.len()).max(1);
        let mut nodes: Vec<FusionNode> = leaves
            .iter()
            .map(|(element, rate)| FusionNode::Leaf {
                element: *element,
                rate: rate.clone(),
            })
            .collect();
        let mut heap: BinaryHeap<Reverse<(Rational, usize)>> = nodes
            .iter()
            .enumerate()
            .map(|(idx, node)| Reverse((node.rate().clone(), idx)))
            .collect();
        while heap.len() > k {
            // First extraction is the slower tree and becomes the left child.
            let Reverse((left_rate, left)) = heap.pop().expect("len > k >= 1");
            let Reverse((right_rate, right)) = heap.pop().expect("len > k >= 1");
            debug_assert!(left_rate <= right_rate);
            let rate = Rational::from_integer(2.into()) * right_rate.max(left_rate);
            let idx = nodes.len();
            nodes.push(FusionNode::Internal { left, right, rate: rate.clone() });
            heap.push(Reverse((rate, idx)));
        }
        let mut roots: Vec<(Rational, usize)> =
            heap.into_iter().map(|Reverse(pair)| pair).collect();
        roots.sort();
        Ok(FusionForest {
            nodes,
            roots: roots.into_iter().map(|(_, idx)| idx).collect(),
        })
    }

    pub fn tree_count(&self) -> usize {
        self.roots.len()
    }

    /// Rates of the final trees, in root order.
    pub fn root_rates(&self) -> Vec<Rational> {
        self.roots
            .iter()
            .map(|&r| self.nodes[r].rate().clone())
            .collect()
    }

    fn depth(&self, node: usize) -> usize {
        match &self.nodes[node] {
            FusionNode::Leaf { .. } => 0,
            FusionNode::Internal { left, right, .. } => {
                1 + self.depth(*left).max(self.depth(*right))
            }
        }
    }

    /// Playback period: `2^max_depth` over all trees.
    pub fn period(&self) -> usize {
        let depth = self.roots.iter().map(|&r| self.depth(r)).max().unwrap_or(0);
        1usize << depth
    }
}

/// Single-owner playback state over one or more forests.
pub struct FunStream<'a> {
    forests: Vec<&'a FusionForest>,
    /// Status bit per node, per forest.
    bits: Vec<Vec<bool>>,
}

impl<'a> FunStream<'a> {
    pub fn new(forests: Vec<&'a FusionForest>) -> Self {
        let bits = forests.iter().map(|f| vec![false; f.nodes.len()]).collect();
        FunStream { forests, bits }
    }

    /// Cut set for the next day: one leaf per tree per forest.
    pub fn next_cut(&mut self) -> BTreeSet<usize> {
        let mut cut = BTreeSet::new();
        for (forest, bits) in self.forests.iter().zip(self.bits.iter_mut()) {
            for &root in &forest.roots {
                let mut v = root;
                loop {
                    match &forest.nodes[v] {
                        FusionNode::Leaf { element, .. } => {
                            cut.insert(*element);
                            break;
                        }
                        FusionNode::Internal { left, right, .. } => {
                            bits[v] = !bits[v];
                            v = if bits[v] { *right } else { *left };
                        }
                    }
                }
            }
        }
        cut
    }
}

/// A built Fuse-Unfuse scheduler: one forest for a uniform matroid, one per
/// block for a partition matroid.
pub struct FunScheduler {
    forests: Vec<FusionForest>,
}

impl FunScheduler {
    pub fn stream(&self) -> FunStream<'_> {
        FunStream::new(self.forests.iter().collect())
    }

    /// Period of the composed playback (forest periods are powers of two).
    pub fn period(&self) -> usize {
        self.forests.iter().map(|f| f.period()).max().unwrap_or(1)
    }

    /// Materializes one full period as a periodic schedule.
    pub fn periodic_schedule(&self) -> Schedule {
        let mut stream = self.stream();
        let core = (0..self.period()).map(|_| stream.next_cut()).collect();
        Schedule::periodic(core)
    }

    pub fn forests(&self) -> &[FusionForest] {
        &self.forests
    }
}

fn positive_leaves(inst: &CbgtInstance, members: impl Iterator<Item = usize>) -> Vec<(usize, Rational)> {
    members
        .filter(|&e| !inst.growth.rate(e).is_zero())
        .map(|e| (e, inst.growth.rate(e).clone()))
        .collect()
}

/// Fuse-Unfuse scheduler for a `k`-uniform instance.
///
/// Zero-rate elements are skipped; `k` larger than the ground set is clamped.
/// The final trees are checked against the rate bound 2 implied by a valid
/// growth vector.
pub fn fun_schedule_uniform(inst: &CbgtInstance) -> Result<FunScheduler> {
    let SetSystemDescriptor::Uniform { k } = inst.system else {
        return Err(Error::Unsupported {
            op: "fun_schedule_uniform on a non-uniform descriptor",
        });
    };
    let leaves = positive_leaves(inst, 0..inst.len());
    let total: Rational = leaves.iter().map(|(_, r)| r).sum();
    if total > Rational::from_integer(k.into()) {
        return Err(Error::InvalidGrowth(format!(
            "total growth {total} exceeds the uniform rank {k}"
        )));
    }
    let forest = FusionForest::build(&leaves, k)?;
    for rate in forest.root_rates() {
        assert!(
            rate < Rational::from_integer(2.into()),
            "fusion produced a tree of rate {rate} >= 2 on a valid instance"
        );
    }
    Ok(FunScheduler { forests: vec![forest] })
}

/// Fuse-Unfuse scheduler for a partition instance: per-block forests run in
/// parallel, the daily cut being the union of the per-block cuts.
pub fn fun_schedule_partition(inst: &CbgtInstance) -> Result<FunScheduler> {
    let SetSystemDescriptor::Partition { ref blocks, ref caps } = inst.system else {
        return Err(Error::Unsupported {
            op: "fun_schedule_partition on a non-partition descriptor",
        });
    };
    let mut forests = Vec::new();
    for (block, &cap) in blocks.iter().zip(caps) {
        let leaves = positive_leaves(inst, block.iter().copied());
        if leaves.is_empty() {
            continue;
        }
        let total: Rational = leaves.iter().map(|(_, r)| r).sum();
        if total > Rational::from_integer(cap.into()) {
            return Err(Error::InvalidGrowth(format!(
                "block growth {total} exceeds its cap {cap}"
            )));
        }
        let forest = FusionForest::build(&leaves, cap)?;
        for rate in forest.root_rates() {
            assert!(
                rate < Rational::from_integer(2.into()),
                "fusion produced a tree of rate {rate} >= 2 on a valid instance"
            );
        }
        forests.push(forest);
    }
    if forests.is_empty() {
        return Err(Error::EmptyInstance);
    }
    Ok(FunScheduler { forests })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{rational, GrowthVector};

    fn example_instance() -> CbgtInstance {
        let growth = GrowthVector::new(vec![
            rational(1, 10), // a
            rational(1, 5),  // b
            rational(1, 2),  // c
            rational(1, 2),  // d
            rational(3, 10), // e
        ])
        .unwrap();
        CbgtInstance::unlabeled(5, SetSystemDescriptor::Uniform { k: 2 }, growth, None).unwrap()
    }

    #[test]
    fn example_forest_shape() {
        let scheduler = fun_schedule_uniform(&example_instance()).unwrap();
        let rates = scheduler.forests()[0].root_rates();
        // Trees T_eab (rate 0.8) and T_cd (rate 1).
        assert_eq!(rates, vec![rational(4, 5), rational(1, 1)]);
        assert_eq!(scheduler.period(), 4);
    }

    #[test]
    fn example_first_four_days() {
        // Ids: a=0, b=1, c=2, d=3, e=4. Expected: ({b,d},{e,c},{a,d},{e,c}).
        let scheduler = fun_schedule_uniform(&example_instance()).unwrap();
        let mut stream = scheduler.stream();
        assert_eq!(stream.next_cut(), BTreeSet::from([1, 3]));
        assert_eq!(stream.next_cut(), BTreeSet::from([2, 4]));
        assert_eq!(stream.next_cut(), BTreeSet::from([0, 3]));
        assert_eq!(stream.next_cut(), BTreeSet::from([2, 4]));
    }

    #[test]
    fn k_at_least_ground_size_means_no_fusion() {
        let growth = GrowthVector::new(vec![rational(1, 2), rational(1, 3)]).unwrap();
        let inst =
            CbgtInstance::unlabeled(2, SetSystemDescriptor::Uniform { k: 5 }, growth, None).unwrap();
        let scheduler = fun_schedule_uniform(&inst).unwrap();
        assert_eq!(scheduler.forests()[0].tree_count(), 2);
        let mut stream = scheduler.stream();
        assert_eq!(stream.next_cut(), BTreeSet::from([0, 1]));
    }

    #[test]
    fn single_fusion_doubles_the_faster_rate() {
        let forest =
            FusionForest::build(&[(0, rational(1, 3)), (1, rational(2, 3))], 1).unwrap();
        assert_eq!(forest.root_rates(), vec![rational(4, 3)]);
    }

    #[test]
    fn two_leaf_tree_alternates_right_first() {
        let forest =
            FusionForest::build(&[(7, rational(1, 4)), (9, rational(1, 2))], 1).unwrap();
        let mut stream = FunStream::new(vec![&forest]);
        let days: Vec<BTreeSet<usize>> = (0..4).map(|_| stream.next_cut()).collect();
        assert_eq!(
            days,
            vec![
                BTreeSet::from([9]),
                BTreeSet::from([7]),
                BTreeSet::from([9]),
                BTreeSet::from([7]),
            ]
        );
    }

    #[test]
    fn partition_of_singletons_cuts_everything_daily() {
        let growth = GrowthVector::new(vec![rational(1, 2), rational(1, 2)]).unwrap();
        let system = SetSystemDescriptor::Partition {
            blocks: vec![BTreeSet::from([0]), BTreeSet::from([1])],
            caps: vec![1, 1],
        };
        let inst = CbgtInstance::unlabeled(2, system, growth, None).unwrap();
        let scheduler = fun_schedule_partition(&inst).unwrap();
        let mut stream = scheduler.stream();
        assert_eq!(stream.next_cut(), BTreeSet::from([0, 1]));
        assert_eq!(stream.next_cut(), BTreeSet::from([0, 1]));
    }

    #[test]
    fn partition_two_blocks_alternates_within_the_shared_block() {
        let growth =
            GrowthVector::new(vec![rational(1, 2), rational(1, 2), rational(1, 1)]).unwrap();
        let system = SetSystemDescriptor::Partition {
            blocks: vec![BTreeSet::from([0, 1]), BTreeSet::from([2])],
            caps: vec![1, 1],
        };
        let inst = CbgtInstance::unlabeled(3, system, growth, None).unwrap();
        let scheduler = fun_schedule_partition(&inst).unwrap();
        let mut stream = scheduler.stream();
        // Right child first within {0, 1}; element 2 every day.
        assert_eq!(stream.next_cut(), BTreeSet::from([1, 2]));
        assert_eq!(stream.next_cut(), BTreeSet::from([0, 2]));
        assert_eq!(stream.next_cut(), BTreeSet::from([1, 2]));
    }

    #[test]
    fn cuts_always_one_leaf_per_tree() {
        let scheduler = fun_schedule_uniform(&example_instance()).unwrap();
        let mut stream = scheduler.stream();
        for _ in 0..16 {
            assert_eq!(stream.next_cut().len(), 2);
        }
    }

    #[test]
    fn empty_after_stripping_is_an_error() {
        let growth = GrowthVector::new(vec![]).unwrap();
        let inst =
            CbgtInstance::unlabeled(0, SetSystemDescriptor::Uniform { k: 1 }, growth, None).unwrap();
        assert!(matches!(fun_schedule_uniform(&inst), Err(Error::EmptyInstance)));
    }
}
