//! Uniform oracle interface over explicit set systems and matroid families.
//!
//! A [`SetSystemDescriptor`] is plain data describing `(E, I)`; the
//! operations here answer independence, rank and max-weight queries against
//! it, validate growth vectors against the polytope constraints, and compute
//! maximum common independent sets of two matroids via exchange-graph
//! augmenting paths.

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::{CbgtInstance, Rational};
use crate::Result;

/// Ground-set size above which exhaustive checks on explicit systems refuse
/// to run.
pub const EXPLICIT_SIZE_GUARD: usize = 20;

/// One summand of a direct sum, covering the next `size` element ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectSumPart {
    pub system: SetSystemDescriptor,
    pub size: usize,
}

/// Description of a set system over elements `0..n`.
///
/// `Explicit` stores the generating antichain of an independence system:
/// a set is independent iff it is a subset of some listed generator. All
/// other variants are matroids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetSystemDescriptor {
    Explicit {
        generators: Vec<BTreeSet<usize>>,
    },
    Uniform {
        k: usize,
    },
    Partition {
        blocks: Vec<BTreeSet<usize>>,
        caps: Vec<usize>,
    },
    Graphic {
        vertices: usize,
        /// Endpoint pair of the edge with element id `i`.
        edges: Vec<(usize, usize)>,
    },
    Laminar {
        family: Vec<BTreeSet<usize>>,
        caps: Vec<usize>,
    },
    Transversal {
        /// Right-vertex neighborhood of each element.
        adjacency: Vec<BTreeSet<usize>>,
    },
    DirectSum {
        parts: Vec<DirectSumPart>,
    },
}

impl SetSystemDescriptor {
    /// Checks structural invariants against a ground set of size `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        let check_members = |sets: &[BTreeSet<usize>]| -> Result<()> {
            for set in sets {
                for &e in set {
                    if e >= n {
                        return Err(Error::ElementOutOfRange { element: e, ground: n });
                    }
                }
            }
            Ok(())
        };
        match self {
            SetSystemDescriptor::Explicit { generators } => {
                if generators.is_empty() {
                    return Err(Error::InvalidDescriptor(
                        "explicit system needs at least one generator (use the empty set)".into(),
                    ));
                }
                check_members(generators)
            }
            SetSystemDescriptor::Uniform { .. } => Ok(()),
            SetSystemDescriptor::Partition { blocks, caps } => {
                if blocks.len() != caps.len() {
                    return Err(Error::InvalidDescriptor(
                        "partition blocks and caps differ in length".into(),
                    ));
                }
                check_members(blocks)?;
                let mut seen = vec![false; n];
                for block in blocks {
                    for &e in block {
                        if seen[e] {
                            return Err(Error::InvalidDescriptor(format!(
                                "element {e} appears in two partition blocks"
                            )));
                        }
                        seen[e] = true;
                    }
                }
                if let Some(e) = seen.iter().position(|covered| !covered) {
                    return Err(Error::InvalidDescriptor(format!(
                        "element {e} is in no partition block"
                    )));
                }
                Ok(())
            }
            SetSystemDescriptor::Graphic { vertices, edges } => {
                if edges.len() != n {
                    return Err(Error::InvalidDescriptor(format!(
                        "graphic descriptor has {} edges for {} elements",
                        edges.len(),
                        n
                    )));
                }
                for &(u, v) in edges {
                    if u >= *vertices || v >= *vertices {
                        return Err(Error::InvalidDescriptor(format!(
                            "edge ({u}, {v}) outside vertex range 0..{vertices}"
                        )));
                    }
                }
                Ok(())
            }
            SetSystemDescriptor::Laminar { family, caps } => {
                if family.len() != caps.len() {
                    return Err(Error::InvalidDescriptor(
                        "laminar family and caps differ in length".into(),
                    ));
                }
                if caps.iter().any(|&b| b == 0) {
                    return Err(Error::InvalidDescriptor("laminar caps must be positive".into()));
                }
                check_members(family)?;
                for (i, a) in family.iter().enumerate() {
                    for b in family.iter().skip(i + 1) {
                        let nested = a.is_subset(b) || b.is_subset(a);
                        let disjoint = a.intersection(b).next().is_none();
                        if !nested && !disjoint {
                            return Err(Error::InvalidDescriptor(
                                "family is not laminar: two sets overlap without nesting".into(),
                            ));
                        }
                    }
                }
                Ok(())
            }
            SetSystemDescriptor::Transversal { adjacency } => {
                if adjacency.len() != n {
                    return Err(Error::InvalidDescriptor(format!(
                        "transversal adjacency has {} rows for {} elements",
                        adjacency.len(),
                        n
                    )));
                }
                Ok(())
            }
            SetSystemDescriptor::DirectSum { parts } => {
                let total: usize = parts.iter().map(|p| p.size).sum();
                if total != n {
                    return Err(Error::InvalidDescriptor(format!(
                        "direct-sum parts cover {total} elements, ground set has {n}"
                    )));
                }
                for part in parts {
                    part.system.validate(part.size)?;
                }
                Ok(())
            }
        }
    }

    /// True for variants guaranteed to be matroids.
    pub fn is_matroid_variant(&self) -> bool {
        match self {
            SetSystemDescriptor::Explicit { .. } => false,
            SetSystemDescriptor::DirectSum { parts } => {
                parts.iter().all(|p| p.system.is_matroid_variant())
            }
            _ => true,
        }
    }

    /// Deletion: restricts the descriptor to elements with `remap[e] = Some`.
    ///
    /// New ids must be assigned in increasing old-id order.
    pub fn delete(&self, remap: &[Option<usize>]) -> Result<SetSystemDescriptor> {
        let remap_set = |set: &BTreeSet<usize>| -> BTreeSet<usize> {
            set.iter().filter_map(|&e| remap[e]).collect()
        };
        Ok(match self {
            SetSystemDescriptor::Explicit { generators } => SetSystemDescriptor::Explicit {
                generators: generators.iter().map(remap_set).collect(),
            },
            SetSystemDescriptor::Uniform { k } => SetSystemDescriptor::Uniform { k: *k },
            SetSystemDescriptor::Partition { blocks, caps } => {
                let mut new_blocks = Vec::new();
                let mut new_caps = Vec::new();
                for (block, &cap) in blocks.iter().zip(caps) {
                    let block = remap_set(block);
                    if !block.is_empty() {
                        new_blocks.push(block);
                        new_caps.push(cap);
                    }
                }
                SetSystemDescriptor::Partition {
                    blocks: new_blocks,
                    caps: new_caps,
                }
            }
            SetSystemDescriptor::Graphic { vertices, edges } => {
                let mut new_edges = Vec::new();
                for (e, &pair) in edges.iter().enumerate() {
                    if remap[e].is_some() {
                        new_edges.push(pair);
                    }
                }
                SetSystemDescriptor::Graphic {
                    vertices: *vertices,
                    edges: new_edges,
                }
            }
            SetSystemDescriptor::Laminar { family, caps } => {
                let mut new_family = Vec::new();
                let mut new_caps = Vec::new();
                for (set, &cap) in family.iter().zip(caps) {
                    let set = remap_set(set);
                    if !set.is_empty() {
                        new_family.push(set);
                        new_caps.push(cap);
                    }
                }
                SetSystemDescriptor::Laminar {
                    family: new_family,
                    caps: new_caps,
                }
            }
            SetSystemDescriptor::Transversal { adjacency } => {
                let mut rows = Vec::new();
                for (e, row) in adjacency.iter().enumerate() {
                    if remap[e].is_some() {
                        rows.push(row.clone());
                    }
                }
                SetSystemDescriptor::Transversal { adjacency: rows }
            }
            SetSystemDescriptor::DirectSum { parts } => {
                let mut new_parts = Vec::new();
                let mut offset = 0;
                for part in parts {
                    let mut local = vec![None; part.size];
                    let mut kept = 0;
                    for i in 0..part.size {
                        if remap[offset + i].is_some() {
                            local[i] = Some(kept);
                            kept += 1;
                        }
                    }
                    if kept > 0 {
                        new_parts.push(DirectSumPart {
                            system: part.system.delete(&local)?,
                            size: kept,
                        });
                    }
                    offset += part.size;
                }
                SetSystemDescriptor::DirectSum { parts: new_parts }
            }
        })
    }
}

// ---------------------------------------------------------------------------
// Independence and rank

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false if `x` and `y` were already connected.
    fn union(&mut self, x: usize, y: usize) -> bool {
        let (rx, ry) = (self.find(x), self.find(y));
        if rx == ry {
            return false;
        }
        self.parent[rx] = ry;
        true
    }
}

/// Maximum bipartite matching size from `members` into right vertices.
fn matching_size(adjacency: &[BTreeSet<usize>], members: &BTreeSet<usize>) -> usize {
    let right = adjacency
        .iter()
        .flat_map(|row| row.iter().copied())
        .max()
        .map_or(0, |m| m + 1);
    let mut matched_to: Vec<Option<usize>> = vec![None; right];
    let mut size = 0;
    for &e in members {
        let mut visited = vec![false; right];
        if augment(adjacency, e, &mut matched_to, &mut visited) {
            size += 1;
        }
    }
    size
}

fn augment(
    adjacency: &[BTreeSet<usize>],
    e: usize,
    matched_to: &mut [Option<usize>],
    visited: &mut [bool],
) -> bool {
    for &r in &adjacency[e] {
        if visited[r] {
            continue;
        }
        visited[r] = true;
        let free = match matched_to[r] {
            None => true,
            Some(other) => augment(adjacency, other, matched_to, visited),
        };
        if free {
            matched_to[r] = Some(e);
            return true;
        }
    }
    false
}

fn check_bounds(set: &BTreeSet<usize>, n: usize) -> Result<()> {
    if let Some(&e) = set.iter().next_back() {
        if e >= n {
            return Err(Error::ElementOutOfRange { element: e, ground: n });
        }
    }
    Ok(())
}

/// Is `set` independent? `n` is the ground-set size.
pub fn is_independent(sys: &SetSystemDescriptor, set: &BTreeSet<usize>, n: usize) -> Result<bool> {
    check_bounds(set, n)?;
    Ok(independent_unchecked(sys, set, n))
}

fn independent_unchecked(sys: &SetSystemDescriptor, set: &BTreeSet<usize>, _n: usize) -> bool {
    match sys {
        SetSystemDescriptor::Explicit { generators } => {
            generators.iter().any(|g| set.is_subset(g))
        }
        SetSystemDescriptor::Uniform { k } => set.len() <= *k,
        SetSystemDescriptor::Partition { blocks, caps } => {
            blocks
                .iter()
                .zip(caps)
                .all(|(block, &cap)| set.intersection(block).count() <= cap)
        }
        SetSystemDescriptor::Graphic { vertices, edges } => {
            let mut uf = UnionFind::new(*vertices);
            set.iter().all(|&e| {
                let (u, v) = edges[e];
                u != v && uf.union(u, v)
            })
        }
        SetSystemDescriptor::Laminar { family, caps } => family
            .iter()
            .zip(caps)
            .all(|(l, &cap)| set.intersection(l).count() <= cap),
        SetSystemDescriptor::Transversal { adjacency } => {
            matching_size(adjacency, set) == set.len()
        }
        SetSystemDescriptor::DirectSum { parts } => {
            let mut offset = 0;
            for part in parts {
                let local: BTreeSet<usize> = set
                    .range(offset..offset + part.size)
                    .map(|&e| e - offset)
                    .collect();
                if !independent_unchecked(&part.system, &local, part.size) {
                    return false;
                }
                offset += part.size;
            }
            true
        }
    }
}

/// Exact rank of `set`: the maximum size of an independent subset.
///
/// Matroid variants only; explicit systems are served under the size guard.
pub fn rank(sys: &SetSystemDescriptor, set: &BTreeSet<usize>, n: usize) -> Result<usize> {
    check_bounds(set, n)?;
    match sys {
        SetSystemDescriptor::Explicit { generators } => {
            if n > EXPLICIT_SIZE_GUARD {
                return Err(Error::Unsupported {
                    op: "rank of an explicit system above the size guard",
                });
            }
            Ok(generators
                .iter()
                .map(|g| g.intersection(set).count())
                .max()
                .unwrap_or(0))
        }
        SetSystemDescriptor::Uniform { k } => Ok(set.len().min(*k)),
        SetSystemDescriptor::Partition { blocks, caps } => Ok(blocks
            .iter()
            .zip(caps)
            .map(|(block, &cap)| set.intersection(block).count().min(cap))
            .sum()),
        SetSystemDescriptor::Graphic { vertices, edges } => {
            let mut uf = UnionFind::new(*vertices);
            let mut rank = 0;
            for &e in set {
                let (u, v) = edges[e];
                if u != v && uf.union(u, v) {
                    rank += 1;
                }
            }
            Ok(rank)
        }
        SetSystemDescriptor::Laminar { .. } => Ok(greedy_rank(sys, set, n)),
        SetSystemDescriptor::Transversal { adjacency } => Ok(matching_size(adjacency, set)),
        SetSystemDescriptor::DirectSum { parts } => {
            let mut offset = 0;
            let mut total = 0;
            for part in parts {
                let local: BTreeSet<usize> = set
                    .range(offset..offset + part.size)
                    .map(|&e| e - offset)
                    .collect();
                total += rank(&part.system, &local, part.size)?;
                offset += part.size;
            }
            Ok(total)
        }
    }
}

/// Matroid greedy: scan in id order, keep what stays independent.
fn greedy_rank(sys: &SetSystemDescriptor, set: &BTreeSet<usize>, n: usize) -> usize {
    let mut kept = BTreeSet::new();
    for &e in set {
        kept.insert(e);
        if !independent_unchecked(sys, &kept, n) {
            kept.remove(&e);
        }
    }
    kept.len()
}

/// Rank of the full ground set.
pub fn full_rank(sys: &SetSystemDescriptor, n: usize) -> Result<usize> {
    rank(sys, &(0..n).collect(), n)
}

// ---------------------------------------------------------------------------
// Linear optimization

/// Returns an independent set maximizing the total weight of its members
/// with nonnegative weight.
///
/// Matroid variants run the matroid greedy over strictly positive weights
/// (ties by element id). Explicit systems pick the best generator with
/// negative-weight members dropped (ties by list order).
pub fn max_weight_independent(
    sys: &SetSystemDescriptor,
    weights: &[f64],
    n: usize,
) -> BTreeSet<usize> {
    debug_assert_eq!(weights.len(), n);
    match sys {
        SetSystemDescriptor::Explicit { generators } => {
            let mut best: Option<(f64, BTreeSet<usize>)> = None;
            for gen in generators {
                let cleaned: BTreeSet<usize> =
                    gen.iter().copied().filter(|&e| weights[e] >= 0.0).collect();
                let value: f64 = cleaned.iter().map(|&e| weights[e]).sum();
                if best.as_ref().map_or(true, |(v, _)| value > *v) {
                    best = Some((value, cleaned));
                }
            }
            best.map(|(_, set)| set).unwrap_or_default()
        }
        SetSystemDescriptor::DirectSum { parts } => {
            let mut result = BTreeSet::new();
            let mut offset = 0;
            for part in parts {
                let local = max_weight_independent(
                    &part.system,
                    &weights[offset..offset + part.size],
                    part.size,
                );
                result.extend(local.into_iter().map(|e| e + offset));
                offset += part.size;
            }
            result
        }
        _ => {
            let mut order: Vec<usize> = (0..n).filter(|&e| weights[e] > 0.0).collect();
            order.sort_by(|&a, &b| {
                weights[b]
                    .total_cmp(&weights[a])
                    .then_with(|| a.cmp(&b))
            });
            let mut kept = BTreeSet::new();
            for e in order {
                kept.insert(e);
                if !independent_unchecked(sys, &kept, n) {
                    kept.remove(&e);
                }
            }
            kept
        }
    }
}

// ---------------------------------------------------------------------------
// Growth validation

/// Outcome of [`validate_growth`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrowthVerdict {
    pub valid: bool,
    /// False when only the necessary battery was checked.
    pub fully_verified: bool,
    /// Human-readable description of the violation, if any.
    pub violation: Option<String>,
}

impl GrowthVerdict {
    fn ok(fully_verified: bool) -> Self {
        GrowthVerdict {
            valid: true,
            fully_verified,
            violation: None,
        }
    }

    fn fail(violation: String) -> Self {
        GrowthVerdict {
            valid: false,
            fully_verified: true,
            violation: Some(violation),
        }
    }
}

/// Checks that the growth vector lies in the set-system polytope.
///
/// With a witness the verification is exact: weights are nonnegative, sum to
/// one, generate the growth vector, and every set is independent. Without a
/// witness, matroid variants are checked against `sum g(X) <= r(X)` for all
/// `X` when the ground set is small, and against a sound necessary battery
/// otherwise (reported as not fully verified).
pub fn validate_growth(inst: &CbgtInstance) -> Result<GrowthVerdict> {
    let n = inst.len();
    if let Some(witness) = &inst.witness {
        let mut sum = Rational::zero();
        for (set, weight) in &witness.terms {
            if weight.is_negative() {
                return Ok(GrowthVerdict::fail(format!(
                    "witness weight {weight} is negative"
                )));
            }
            sum += weight;
            if !is_independent(&inst.system, set, n)? {
                return Ok(GrowthVerdict::fail(format!(
                    "witness set {set:?} is not independent"
                )));
            }
        }
        if !sum.is_one() {
            return Ok(GrowthVerdict::fail(format!(
                "witness weights sum to {sum}, expected 1"
            )));
        }
        let generated = witness.generated_growth(n);
        if generated != inst.growth.rates() {
            return Ok(GrowthVerdict::fail(
                "witness does not generate the growth vector".into(),
            ));
        }
        return Ok(GrowthVerdict::ok(true));
    }

    if !inst.system.is_matroid_variant() {
        return Err(Error::WitnessRequired(
            "explicit systems can only be validated through a witness",
        ));
    }

    if n <= EXPLICIT_SIZE_GUARD {
        // Full polytope check over all subsets.
        for mask in 1u32..(1u32 << n) {
            let set: BTreeSet<usize> = (0..n).filter(|&e| mask & (1 << e) != 0).collect();
            let total: Rational = set.iter().map(|&e| inst.growth.rate(e)).sum();
            let r = rank(&inst.system, &set, n)?;
            if total > Rational::from_integer(r.into()) {
                return Ok(GrowthVerdict::fail(format!(
                    "sum of rates over {set:?} is {total}, rank is {r}"
                )));
            }
        }
        return Ok(GrowthVerdict::ok(true));
    }

    // Necessary battery: singletons, the full ground set and the
    // family-specific tight sets.
    let mut battery: Vec<BTreeSet<usize>> = (0..n).map(|e| BTreeSet::from([e])).collect();
    battery.push((0..n).collect());
    match &inst.system {
        SetSystemDescriptor::Partition { blocks, .. } => battery.extend(blocks.iter().cloned()),
        SetSystemDescriptor::Laminar { family, .. } => battery.extend(family.iter().cloned()),
        SetSystemDescriptor::Graphic { vertices, edges } => {
            for v in 0..*vertices {
                battery.push(
                    (0..n)
                        .filter(|&e| edges[e].0 == v || edges[e].1 == v)
                        .collect(),
                );
            }
        }
        _ => {}
    }
    for set in battery {
        if set.is_empty() {
            continue;
        }
        let total: Rational = set.iter().map(|&e| inst.growth.rate(e)).sum();
        let r = rank(&inst.system, &set, n)?;
        if total > Rational::from_integer(r.into()) {
            return Ok(GrowthVerdict::fail(format!(
                "sum of rates over {set:?} is {total}, rank is {r}"
            )));
        }
    }
    Ok(GrowthVerdict::ok(false))
}

// ---------------------------------------------------------------------------
// Matroid intersection

/// Independence oracle used by the exchange-graph intersection.
///
/// `can_add` and `can_exchange` have generic fallbacks; implementations with
/// structure (direct sums) override them with constant-size checks.
pub trait MatroidOracle {
    fn ground_size(&self) -> usize;

    fn is_independent_set(&self, set: &BTreeSet<usize>) -> bool;

    fn can_add(&self, current: &BTreeSet<usize>, add: usize) -> bool {
        let mut set = current.clone();
        set.insert(add);
        self.is_independent_set(&set)
    }

    fn can_exchange(&self, current: &BTreeSet<usize>, remove: usize, add: usize) -> bool {
        let mut set = current.clone();
        set.remove(&remove);
        set.insert(add);
        self.is_independent_set(&set)
    }
}

/// Oracle backed by a descriptor.
pub struct DescriptorOracle<'a> {
    pub system: &'a SetSystemDescriptor,
    pub ground: usize,
}

impl MatroidOracle for DescriptorOracle<'_> {
    fn ground_size(&self) -> usize {
        self.ground
    }

    fn is_independent_set(&self, set: &BTreeSet<usize>) -> bool {
        independent_unchecked(self.system, set, self.ground)
    }
}

/// Maximum-cardinality common independent set of two matroids given by
/// oracles, via breadth-first shortest augmenting paths in the exchange
/// graph. Fully deterministic: vertices are scanned in id order.
pub fn max_common_independent(
    m1: &dyn MatroidOracle,
    m2: &dyn MatroidOracle,
) -> BTreeSet<usize> {
    let n = m1.ground_size();
    assert_eq!(n, m2.ground_size(), "oracles must share the ground set");

    // Greedy start: keeps augmentation counts low.
    let mut current = BTreeSet::new();
    for y in 0..n {
        if m1.can_add(&current, y) && m2.can_add(&current, y) {
            current.insert(y);
        }
    }

    loop {
        match shortest_augmenting_path(m1, m2, &current) {
            Some(path) => {
                for v in path {
                    if current.contains(&v) {
                        current.remove(&v);
                    } else {
                        current.insert(v);
                    }
                }
            }
            None => return current,
        }
    }
}

/// BFS over the exchange graph of `current`; returns the vertices of a
/// shortest path from the m1-addable sources to an m2-addable sink.
fn shortest_augmenting_path(
    m1: &dyn MatroidOracle,
    m2: &dyn MatroidOracle,
    current: &BTreeSet<usize>,
) -> Option<Vec<usize>> {
    let n = m1.ground_size();
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut queue = std::collections::VecDeque::new();

    for y in 0..n {
        if !current.contains(&y) && m1.can_add(current, y) {
            seen[y] = true;
            queue.push_back(y);
        }
    }

    while let Some(v) = queue.pop_front() {
        if !current.contains(&v) {
            if m2.can_add(current, v) {
                // Sink reached; unwind the parent chain.
                let mut path = vec![v];
                let mut at = v;
                while let Some(p) = parent[at] {
                    path.push(p);
                    at = p;
                }
                return Some(path);
            }
            for &x in current {
                if !seen[x] && m2.can_exchange(current, x, v) {
                    seen[x] = true;
                    parent[x] = Some(v);
                    queue.push_back(x);
                }
            }
        } else {
            for y in 0..n {
                if !seen[y] && !current.contains(&y) && m1.can_exchange(current, v, y) {
                    seen[y] = true;
                    parent[y] = Some(v);
                    queue.push_back(y);
                }
            }
        }
    }
    None
}

/// All inclusion-maximal independent sets: maximal generators for explicit
/// systems, bases for matroids (enumerated under the size guard).
pub fn maximal_independent_sets(
    system: &SetSystemDescriptor,
    n: usize,
) -> Result<Vec<BTreeSet<usize>>> {
    if let SetSystemDescriptor::Explicit { generators } = system {
        let mut maximal: Vec<BTreeSet<usize>> = Vec::new();
        for g in generators {
            if generators
                .iter()
                .any(|other| other != g && g.is_subset(other))
            {
                continue;
            }
            if !maximal.contains(g) {
                maximal.push(g.clone());
            }
        }
        return Ok(maximal);
    }
    if n > EXPLICIT_SIZE_GUARD {
        return Err(Error::Unsupported {
            op: "base enumeration above the size guard",
        });
    }
    let r = full_rank(system, n)?;
    let mut bases = Vec::new();
    let mut current = BTreeSet::new();
    enumerate_bases(system, n, r, 0, &mut current, &mut bases);
    Ok(bases)
}

fn enumerate_bases(
    system: &SetSystemDescriptor,
    n: usize,
    r: usize,
    from: usize,
    current: &mut BTreeSet<usize>,
    out: &mut Vec<BTreeSet<usize>>,
) {
    if current.len() == r {
        out.push(current.clone());
        return;
    }
    let needed = r - current.len();
    for e in from..n {
        if n - e < needed {
            break;
        }
        current.insert(e);
        if independent_unchecked(system, current, n) {
            enumerate_bases(system, n, r, e + 1, current, out);
        }
        current.remove(&e);
    }
}

/// Maximum common independent set of two matroid descriptors over the same
/// ground set `0..n`.
pub fn matroid_intersection(
    m1: &SetSystemDescriptor,
    m2: &SetSystemDescriptor,
    n: usize,
) -> Result<BTreeSet<usize>> {
    if !m1.is_matroid_variant() || !m2.is_matroid_variant() {
        return Err(Error::Unsupported {
            op: "matroid intersection of a non-matroid variant",
        });
    }
    m1.validate(n)?;
    m2.validate(n)?;
    let o1 = DescriptorOracle { system: m1, ground: n };
    let o2 = DescriptorOracle { system: m2, ground: n };
    Ok(max_common_independent(&o1, &o2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{rational, GrowthVector};

    fn set(members: &[usize]) -> BTreeSet<usize> {
        members.iter().copied().collect()
    }

    /// The 6-vertex, 10-edge graph used by the rainbow-coloring example.
    pub(crate) fn example_graph() -> SetSystemDescriptor {
        SetSystemDescriptor::Graphic {
            vertices: 6,
            edges: vec![
                (0, 1), // e1
                (0, 5), // e2
                (5, 1), // e3
                (5, 2), // e4
                (5, 4), // e5
                (4, 1), // e6
                (4, 3), // e7
                (1, 2), // e8
                (1, 3), // e9
                (2, 3), // e10
            ],
        }
    }

    #[test]
    fn uniform_cardinality() {
        let sys = SetSystemDescriptor::Uniform { k: 2 };
        assert!(!is_independent(&sys, &set(&[0, 1, 2]), 3).unwrap());
        assert!(is_independent(&sys, &set(&[0, 1]), 3).unwrap());
        assert_eq!(rank(&sys, &set(&[0, 1, 2]), 3).unwrap(), 2);
    }

    #[test]
    fn graphic_forest_check() {
        let sys = example_graph();
        // Edges e1, e3, e6, e8, e10 (ids 0, 2, 5, 7, 9) form a forest.
        assert!(is_independent(&sys, &set(&[0, 2, 5, 7, 9]), 10).unwrap());
        // The triangle v1-v2-v5 (ids 0, 2, 1... e1=v1v2, e3=v6v2, e2=v1v6) is a cycle.
        assert!(!is_independent(&sys, &set(&[0, 1, 2]), 10).unwrap());
        assert_eq!(rank(&sys, &(0..10).collect(), 10).unwrap(), 5);
    }

    #[test]
    fn triangle_rank() {
        let sys = SetSystemDescriptor::Graphic {
            vertices: 3,
            edges: vec![(0, 1), (1, 2), (2, 0)],
        };
        assert_eq!(rank(&sys, &set(&[0, 1, 2]), 3).unwrap(), 2);
    }

    #[test]
    fn laminar_cap() {
        let sys = SetSystemDescriptor::Laminar {
            family: vec![set(&[0, 1])],
            caps: vec![1],
        };
        assert!(!is_independent(&sys, &set(&[0, 1]), 3).unwrap());
        assert!(is_independent(&sys, &set(&[0, 2]), 3).unwrap());
    }

    #[test]
    fn laminarity_enforced_at_load() {
        let sys = SetSystemDescriptor::Laminar {
            family: vec![set(&[0, 1]), set(&[1, 2])],
            caps: vec![1, 1],
        };
        assert!(sys.validate(3).is_err());
    }

    #[test]
    fn transversal_matching() {
        // Two elements competing for one right vertex.
        let sys = SetSystemDescriptor::Transversal {
            adjacency: vec![set(&[0]), set(&[0]), set(&[1])],
        };
        assert!(is_independent(&sys, &set(&[0, 2]), 3).unwrap());
        assert!(!is_independent(&sys, &set(&[0, 1]), 3).unwrap());
        assert_eq!(rank(&sys, &set(&[0, 1, 2]), 3).unwrap(), 2);
    }

    #[test]
    fn explicit_membership() {
        let sys = SetSystemDescriptor::Explicit {
            generators: vec![set(&[]), set(&[0]), set(&[1, 2])],
        };
        assert!(is_independent(&sys, &set(&[]), 3).unwrap());
        assert!(is_independent(&sys, &set(&[2]), 3).unwrap());
        assert!(!is_independent(&sys, &set(&[0, 1]), 3).unwrap());
    }

    #[test]
    fn max_weight_explicit_picks_best_generator() {
        let sys = SetSystemDescriptor::Explicit {
            generators: vec![set(&[]), set(&[0]), set(&[1]), set(&[1, 2])],
        };
        let w = vec![5.0, 1.0, 1.0];
        assert_eq!(max_weight_independent(&sys, &w, 3), set(&[0]));
    }

    #[test]
    fn max_weight_uniform_singleton() {
        let sys = SetSystemDescriptor::Uniform { k: 1 };
        let w = vec![0.3, 0.9, 0.1];
        assert_eq!(max_weight_independent(&sys, &w, 3), set(&[1]));
    }

    #[test]
    fn direct_sum_splits_by_range() {
        let sys = SetSystemDescriptor::DirectSum {
            parts: vec![
                DirectSumPart {
                    system: SetSystemDescriptor::Uniform { k: 1 },
                    size: 2,
                },
                DirectSumPart {
                    system: SetSystemDescriptor::Uniform { k: 1 },
                    size: 2,
                },
            ],
        };
        assert!(is_independent(&sys, &set(&[0, 2]), 4).unwrap());
        assert!(!is_independent(&sys, &set(&[0, 1]), 4).unwrap());
        assert_eq!(rank(&sys, &set(&[0, 1, 2, 3]), 4).unwrap(), 2);
    }

    #[test]
    fn out_of_range_is_a_domain_error() {
        let sys = SetSystemDescriptor::Uniform { k: 2 };
        assert!(is_independent(&sys, &set(&[5]), 3).is_err());
    }

    #[test]
    fn validate_growth_uniform_example() {
        // Rates 0.1, 0.2, 0.5, 0.5, 0.3 on a 2-uniform matroid; sum 1.6 <= 2.
        let growth = GrowthVector::new(vec![
            rational(1, 10),
            rational(1, 5),
            rational(1, 2),
            rational(1, 2),
            rational(3, 10),
        ])
        .unwrap();
        let inst = CbgtInstance::unlabeled(5, SetSystemDescriptor::Uniform { k: 2 }, growth, None)
            .unwrap();
        let verdict = validate_growth(&inst).unwrap();
        assert!(verdict.valid && verdict.fully_verified);
    }

    #[test]
    fn validate_growth_detects_rank_violation() {
        let growth = GrowthVector::new(vec![rational(3, 5), rational(3, 5)]).unwrap();
        let inst = CbgtInstance::unlabeled(2, SetSystemDescriptor::Uniform { k: 1 }, growth, None)
            .unwrap();
        let verdict = validate_growth(&inst).unwrap();
        assert!(!verdict.valid);
        assert!(verdict.violation.is_some());
    }

    #[test]
    fn intersection_uniform_pair() {
        let sys = SetSystemDescriptor::Uniform { k: 2 };
        let common = matroid_intersection(&sys, &sys, 4).unwrap();
        assert_eq!(common.len(), 2);
    }

    #[test]
    fn intersection_triangle_vs_partition() {
        let triangle = SetSystemDescriptor::Graphic {
            vertices: 3,
            edges: vec![(0, 1), (1, 2), (2, 0)],
        };
        let partition = SetSystemDescriptor::Partition {
            blocks: vec![set(&[0]), set(&[1, 2])],
            caps: vec![1, 1],
        };
        let common = matroid_intersection(&triangle, &partition, 3).unwrap();
        assert_eq!(common.len(), 2);
        assert!(is_independent(&triangle, &common, 3).unwrap());
        assert!(is_independent(&partition, &common, 3).unwrap());
    }

    #[test]
    fn intersection_rejects_explicit() {
        let explicit = SetSystemDescriptor::Explicit {
            generators: vec![set(&[0])],
        };
        let uniform = SetSystemDescriptor::Uniform { k: 1 };
        assert!(matroid_intersection(&explicit, &uniform, 1).is_err());
    }

    #[test]
    fn descriptor_json_field_names() {
        let sys = SetSystemDescriptor::Uniform { k: 2 };
        assert_eq!(serde_json::to_string(&sys).unwrap(), r#"{"uniform":{"k":2}}"#);
        let sys = SetSystemDescriptor::Partition {
            blocks: vec![set(&[0]), set(&[1])],
            caps: vec![1, 1],
        };
        assert_eq!(
            serde_json::to_string(&sys).unwrap(),
            r#"{"partition":{"blocks":[[0],[1]],"caps":[1,1]}}"#
        );
        let round: SetSystemDescriptor = serde_json::from_str(
            r#"{"direct_sum":{"parts":[{"system":{"uniform":{"k":1}},"size":2}]}}"#,
        )
        .unwrap();
        assert!(matches!(round, SetSystemDescriptor::DirectSum { .. }));
    }
}
