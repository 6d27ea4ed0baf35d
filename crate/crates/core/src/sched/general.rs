//! Schedulers for arbitrary set systems through a linear-optimization oracle.
//!
//! Elements are split at the threshold `tau_n = c ln(n) / n` into slow and
//! fast. Slow elements are served by a period-`n` round robin (one oracle
//! call per element). Fast elements are served either by the potential greedy
//! (each day cut the independent set minimizing `sum exp(height)` over fast
//! elements, realized as one max-weight oracle call) or, for the existential
//! construction, by a randomized block of `n` sets drawn from the witness
//! distribution and accepted when its height stays under `c ln n`.
//!
//! Heights feeding the exponential weights are floats; exact rational
//! mirrors are kept for reporting, so every correctness claim is about exact
//! heights.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::model::{CbgtInstance, Rational, Schedule};
use crate::set_systems::max_weight_independent;
use crate::Result;

/// Saturation point for exponential weights; heights this large mean the
/// 4 ln n analysis already failed, so the flag is purely diagnostic.
const EXP_CLAMP: f64 = 700.0;

/// The slow/fast partition at threshold `tau_n = c ln(n) / n`.
#[derive(Debug, Clone)]
pub struct SpeedSplit {
    pub c: f64,
    pub tau: f64,
    /// `fast[e]` iff `g(e) > tau`.
    pub fast: Vec<bool>,
}

impl SpeedSplit {
    pub fn fast_elements(&self) -> Vec<usize> {
        (0..self.fast.len()).filter(|&e| self.fast[e]).collect()
    }
}

/// Splits the ground set; requires `c > 2`.
pub fn speed_split(inst: &CbgtInstance, c: f64) -> Result<SpeedSplit> {
    if c <= 2.0 {
        return Err(Error::InstanceInconsistency(format!(
            "the slow/fast threshold needs c > 2, got {c}"
        )));
    }
    let n = inst.len();
    let tau = if n == 0 {
        0.0
    } else {
        c * (n as f64).ln() / n as f64
    };
    let fast = inst
        .growth
        .rates()
        .iter()
        .map(|g| g.to_f64().unwrap_or(0.0) > tau)
        .collect();
    Ok(SpeedSplit { c, tau, fast })
}

/// Period-`n` round robin: for each element in id order, one oracle call
/// returns an independent set containing it.
///
/// An element with positive rate contained in no independent set makes the
/// instance inconsistent with its own normalization.
pub fn round_robin_slow(inst: &CbgtInstance) -> Result<Schedule> {
    let n = inst.len();
    let mut core = Vec::with_capacity(n);
    for e in 0..n {
        let mut weights = vec![0.0; n];
        weights[e] = 1.0;
        let cut = max_weight_independent(&inst.system, &weights, n);
        if !cut.contains(&e) && !inst.growth.rate(e).is_zero() {
            return Err(Error::InstanceInconsistency(format!(
                "element {e} has positive rate but lies in no independent set"
            )));
        }
        core.push(cut);
    }
    Ok(Schedule::periodic(core))
}

/// Mutable state of the potential greedy: fast-element heights as floats for
/// the exponential weights, mirrored exactly for reporting.
#[derive(Debug, Clone)]
pub struct PotentialState {
    pub heights: Vec<f64>,
    pub exact_heights: Vec<Rational>,
    pub step: usize,
    /// Set when an exponent was clamped; heights should never get there.
    pub saturated: bool,
}

impl PotentialState {
    pub fn new(n: usize) -> Self {
        PotentialState {
            heights: vec![0.0; n],
            exact_heights: vec![Rational::zero(); n],
            step: 0,
            saturated: false,
        }
    }

    /// Post-cut update: cut elements restart at `g(e)` (they regrow before
    /// the next decision), uncut elements grow by `g(e)`.
    pub fn apply_cut(&mut self, inst: &CbgtInstance, cut: &BTreeSet<usize>) {
        for e in 0..inst.len() {
            let rate = inst.growth.rate(e);
            let rate_f = rate.to_f64().unwrap_or(0.0);
            if cut.contains(&e) {
                self.heights[e] = rate_f;
                self.exact_heights[e] = rate.clone();
            } else {
                self.heights[e] += rate_f;
                self.exact_heights[e] += rate;
            }
        }
        self.step += 1;
    }
}

/// Potential of a height vector: `sum over fast elements of exp(h(e))`.
pub fn potential(split: &SpeedSplit, heights: &[f64]) -> f64 {
    heights
        .iter()
        .enumerate()
        .filter(|(e, _)| split.fast[*e])
        .map(|(_, h)| h.min(EXP_CLAMP).exp())
        .sum()
}

/// Potential after cutting `cut`: uncut fast elements grow, cut ones restart.
pub fn potential_after(
    inst: &CbgtInstance,
    split: &SpeedSplit,
    heights: &[f64],
    cut: &BTreeSet<usize>,
) -> f64 {
    (0..inst.len())
        .filter(|&e| split.fast[e])
        .map(|e| {
            let g = inst.growth.rate(e).to_f64().unwrap_or(0.0);
            if cut.contains(&e) {
                g.exp()
            } else {
                (heights[e] + g).min(EXP_CLAMP).exp()
            }
        })
        .sum()
}

/// One step of the potential greedy: minimizing `Phi(h, I)` over independent
/// sets is a max-weight oracle call with weights
/// `exp(h(e) + g(e)) - exp(g(e))` on fast elements.
pub fn greedy_potential_step(
    inst: &CbgtInstance,
    split: &SpeedSplit,
    state: &mut PotentialState,
) -> BTreeSet<usize> {
    let n = inst.len();
    let mut weights = vec![0.0; n];
    for e in 0..n {
        if !split.fast[e] {
            continue;
        }
        let g = inst.growth.rate(e).to_f64().unwrap_or(0.0);
        let exponent = state.heights[e] + g;
        if exponent > EXP_CLAMP {
            state.saturated = true;
        }
        weights[e] = exponent.min(EXP_CLAMP).exp() - g.exp();
    }
    let cut = max_weight_independent(&inst.system, &weights, n);
    state.apply_cut(inst, &cut);
    cut
}

/// Trace of a potential-greedy run.
#[derive(Debug)]
pub struct GreedyPotentialRun {
    pub split: SpeedSplit,
    pub cuts: Vec<BTreeSet<usize>>,
    /// `Phi` before the first step and after every step: `steps + 1` values.
    pub phi_trace: Vec<f64>,
    /// Exact heights observed on fast elements, per step.
    pub max_fast_height: Rational,
    pub state: PotentialState,
}

/// Runs the potential greedy for `steps` days from zero heights.
pub fn run_greedy_potential(inst: &CbgtInstance, c: f64, steps: usize) -> Result<GreedyPotentialRun> {
    let split = speed_split(inst, c)?;
    let mut state = PotentialState::new(inst.len());
    let mut cuts = Vec::with_capacity(steps);
    let mut phi_trace = Vec::with_capacity(steps + 1);
    let mut max_fast_height = Rational::zero();
    phi_trace.push(potential(&split, &state.heights));
    for _ in 0..steps {
        let cut = greedy_potential_step(inst, &split, &mut state);
        phi_trace.push(potential(&split, &state.heights));
        for e in 0..inst.len() {
            if split.fast[e] && state.exact_heights[e] > max_fast_height {
                max_fast_height = state.exact_heights[e].clone();
            }
        }
        cuts.push(cut);
    }
    Ok(GreedyPotentialRun {
        split,
        cuts,
        phi_trace,
        max_fast_height,
        state,
    })
}

/// An accepted randomized fast block.
#[derive(Debug)]
pub struct FastBlock {
    pub cuts: Vec<BTreeSet<usize>>,
    /// Exact maximum height reached inside one block started from height 0.
    pub max_height: Rational,
    /// Draws used until acceptance.
    pub draws: usize,
}

/// Draws blocks of `n` independent sets i.i.d. from the witness distribution
/// until a block keeps every element at height `c ln n` or below; repeated
/// forever, such a block keeps fast elements below `2 c ln n`.
///
/// At `n = 1` the bound degenerates to 0 and a single-day block is accepted
/// unconditionally (its height is at most `g(e) <= 1`). Gives up after
/// `max_draws` rejections.
pub fn randomized_fast_block(
    inst: &CbgtInstance,
    split: &SpeedSplit,
    seed: u64,
    max_draws: usize,
) -> Result<FastBlock> {
    let witness = inst.witness.as_ref().ok_or(Error::WitnessRequired(
        "randomized blocks sample from the witness distribution",
    ))?;
    let n = inst.len();
    if n == 0 {
        return Err(Error::EmptyInstance);
    }
    let bound = split.c * (n as f64).ln();
    let weights: Vec<f64> = witness
        .terms
        .iter()
        .map(|(_, w)| w.to_f64().unwrap_or(0.0))
        .collect();
    let total: f64 = weights.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for draw in 1..=max_draws {
        let cuts: Vec<BTreeSet<usize>> = (0..n)
            .map(|_| {
                let mut u = rng.gen::<f64>() * total;
                for (term, w) in witness.terms.iter().zip(&weights) {
                    u -= w;
                    if u <= 0.0 {
                        return term.0.clone();
                    }
                }
                witness.terms.last().expect("witness is nonempty").0.clone()
            })
            .collect();
        let max_height = block_max_height(inst, &cuts);
        let accept = n == 1 || max_height.to_f64().unwrap_or(f64::INFINITY) <= bound;
        if accept {
            return Ok(FastBlock {
                cuts,
                max_height,
                draws: draw,
            });
        }
    }
    Err(Error::RejectionLimit {
        draws: max_draws,
        rejected: max_draws,
    })
}

/// Exact maximum post-growth height over a finite block started at height 0.
fn block_max_height(inst: &CbgtInstance, cuts: &[BTreeSet<usize>]) -> Rational {
    let n = inst.len();
    let mut last_cut = vec![0usize; n];
    let mut max = Rational::zero();
    for (day0, cut) in cuts.iter().enumerate() {
        let t = day0 + 1;
        for e in 0..n {
            let h = Rational::from_integer(BigInt::from(t - last_cut[e])) * inst.growth.rate(e);
            if h > max {
                max = h;
            }
        }
        for &e in cut {
            last_cut[e] = t;
        }
    }
    max
}

/// Interleaving flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterleaveMode {
    /// Alternate potential-greedy steps (odd days) with round-robin steps
    /// (even days); the greedy state tracks true wall-clock heights.
    Efficient,
    /// Two randomized-block steps, then one round-robin step.
    Existential,
}

/// Streaming interleaved scheduler.
pub struct InterleavedScheduler<'a> {
    inst: &'a CbgtInstance,
    split: SpeedSplit,
    slow: Vec<BTreeSet<usize>>,
    slow_next: usize,
    day: usize,
    flavor: Flavor,
}

enum Flavor {
    /// Fewer than 3 elements: the round robin alone guarantees height 2.
    RoundRobinOnly,
    Efficient { state: PotentialState },
    Existential { block: Vec<BTreeSet<usize>>, block_next: usize },
}

impl<'a> InterleavedScheduler<'a> {
    pub fn new(
        inst: &'a CbgtInstance,
        mode: InterleaveMode,
        c: f64,
        seed: u64,
    ) -> Result<Self> {
        let split = speed_split(inst, c)?;
        let slow = round_robin_slow(inst)?.core;
        let n = inst.len();
        let flavor = if n < 3 {
            Flavor::RoundRobinOnly
        } else {
            match mode {
                InterleaveMode::Efficient => Flavor::Efficient {
                    state: PotentialState::new(n),
                },
                InterleaveMode::Existential => {
                    let block = randomized_fast_block(inst, &split, seed, 64)?;
                    Flavor::Existential {
                        block: block.cuts,
                        block_next: 0,
                    }
                }
            }
        };
        Ok(InterleavedScheduler {
            inst,
            split,
            slow,
            slow_next: 0,
            day: 0,
            flavor,
        })
    }

    fn next_slow(&mut self) -> BTreeSet<usize> {
        let cut = self.slow[self.slow_next].clone();
        self.slow_next = (self.slow_next + 1) % self.slow.len();
        cut
    }

    pub fn next_cut(&mut self) -> BTreeSet<usize> {
        self.day += 1;
        match &mut self.flavor {
            Flavor::RoundRobinOnly => self.next_slow(),
            Flavor::Efficient { .. } => {
                let cut = if self.day % 2 == 1 {
                    let Flavor::Efficient { state } = &mut self.flavor else {
                        unreachable!()
                    };
                    let mut weights = vec![0.0; self.inst.len()];
                    for e in 0..self.inst.len() {
                        if !self.split.fast[e] {
                            continue;
                        }
                        let g = self.inst.growth.rate(e).to_f64().unwrap_or(0.0);
                        let exponent = state.heights[e] + g;
                        if exponent > EXP_CLAMP {
                            state.saturated = true;
                        }
                        weights[e] = exponent.min(EXP_CLAMP).exp() - g.exp();
                    }
                    max_weight_independent(&self.inst.system, &weights, self.inst.len())
                } else {
                    self.next_slow()
                };
                let Flavor::Efficient { state } = &mut self.flavor else {
                    unreachable!()
                };
                // Wall-clock bookkeeping: fast heights evolve on slow days too.
                state.apply_cut(self.inst, &cut);
                cut
            }
            Flavor::Existential { block, block_next } => {
                if self.day % 3 == 0 {
                    self.next_slow()
                } else {
                    let cut = block[*block_next].clone();
                    *block_next = (*block_next + 1) % block.len();
                    cut
                }
            }
        }
    }
}

/// Materializes `days` steps of the interleaved schedule.
pub fn interleaved_schedule(
    inst: &CbgtInstance,
    mode: InterleaveMode,
    c: f64,
    seed: u64,
    days: usize,
) -> Result<Schedule> {
    let mut scheduler = InterleavedScheduler::new(inst, mode, c, seed)?;
    let core = (0..days).map(|_| scheduler.next_cut()).collect();
    Ok(Schedule::finite(core))
}

/// The experimental Reduce-Max greedy: cut the independent set of maximum
/// total current height. No guarantee is known; this is a conjecture probe.
pub struct ReduceMaxStream<'a> {
    inst: &'a CbgtInstance,
    heights: Vec<Rational>,
    max_seen: Rational,
}

impl<'a> ReduceMaxStream<'a> {
    pub fn new(inst: &'a CbgtInstance) -> Self {
        ReduceMaxStream {
            inst,
            heights: vec![Rational::zero(); inst.len()],
            max_seen: Rational::zero(),
        }
    }

    pub fn next_cut(&mut self) -> BTreeSet<usize> {
        let n = self.inst.len();
        for e in 0..n {
            self.heights[e] += self.inst.growth.rate(e);
            if self.heights[e] > self.max_seen {
                self.max_seen = self.heights[e].clone();
            }
        }
        let weights: Vec<f64> = self
            .heights
            .iter()
            .map(|h| h.to_f64().unwrap_or(0.0))
            .collect();
        let cut = max_weight_independent(&self.inst.system, &weights, n);
        for &e in &cut {
            self.heights[e] = Rational::zero();
        }
        cut
    }

    /// Maximum exact post-growth height observed so far.
    pub fn max_height(&self) -> &Rational {
        &self.max_seen
    }
}

/// Runs Reduce-Max for `days` steps, returning the schedule and the exact
/// maximum height reached.
pub fn reduce_max_greedy(inst: &CbgtInstance, days: usize) -> (Schedule, Rational) {
    let mut stream = ReduceMaxStream::new(inst);
    let core = (0..days).map(|_| stream.next_cut()).collect();
    (Schedule::finite(core), stream.max_seen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{rational, ConvexCombination, GrowthVector};
    use crate::set_systems::{is_independent, SetSystemDescriptor};

    fn bgt_with_witness(rates: &[(i64, i64)]) -> CbgtInstance {
        let growth =
            GrowthVector::new(rates.iter().map(|&(a, b)| rational(a, b)).collect()).unwrap();
        let used: Rational = growth.total();
        let mut terms: Vec<(BTreeSet<usize>, Rational)> = rates
            .iter()
            .enumerate()
            .map(|(e, &(a, b))| (BTreeSet::from([e]), rational(a, b)))
            .filter(|(_, w)| !w.is_zero())
            .collect();
        let slack = Rational::from_integer(1.into()) - used;
        if !slack.is_zero() {
            terms.push((BTreeSet::new(), slack));
        }
        let witness = ConvexCombination::new(terms).unwrap();
        CbgtInstance::unlabeled(
            rates.len(),
            SetSystemDescriptor::Uniform { k: 1 },
            growth,
            Some(witness),
        )
        .unwrap()
    }

    #[test]
    fn split_requires_c_above_two() {
        let inst = bgt_with_witness(&[(1, 2), (1, 4)]);
        assert!(speed_split(&inst, 2.0).is_err());
        assert!(speed_split(&inst, 6.0).is_ok());
    }

    #[test]
    fn round_robin_covers_every_element() {
        let inst = bgt_with_witness(&[(1, 3), (1, 3), (1, 3)]);
        let sched = round_robin_slow(&inst).unwrap();
        assert_eq!(sched.period(), 3);
        for (e, cut) in sched.core.iter().enumerate() {
            assert!(cut.contains(&e));
        }
    }

    #[test]
    fn greedy_alternates_two_equal_fast_elements() {
        // Two fast elements on a 1-uniform matroid: after the first cut, the
        // uncut element's weight strictly dominates, forcing alternation.
        let inst = bgt_with_witness(&[(1, 2), (1, 2)]);
        let split = SpeedSplit {
            c: 6.0,
            tau: 0.0,
            fast: vec![true, true],
        };
        let mut state = PotentialState::new(2);
        let mut seen = Vec::new();
        for _ in 0..6 {
            seen.push(greedy_potential_step(&inst, &split, &mut state));
        }
        // Step 1 cuts nothing (all weights zero; cutting cannot lower Phi).
        assert!(seen[0].is_empty());
        for pair in seen[1..].windows(2) {
            assert_ne!(pair[0], pair[1], "greedy must alternate: {seen:?}");
        }
    }

    #[test]
    fn greedy_cuts_are_valid(){
        let inst = bgt_with_witness(&[(1, 2), (1, 4), (1, 8)]);
        let run = run_greedy_potential(&inst, 6.0, 12).unwrap();
        for cut in &run.cuts {
            assert!(is_independent(&inst.system, cut, 3).unwrap());
        }
        assert!(!run.state.saturated);
    }

    #[test]
    fn randomized_block_accepts_degenerate_witness() {
        let growth = GrowthVector::new(vec![rational(1, 1)]).unwrap();
        let witness =
            ConvexCombination::new(vec![(BTreeSet::from([0]), rational(1, 1))]).unwrap();
        let inst = CbgtInstance::unlabeled(
            1,
            SetSystemDescriptor::Uniform { k: 1 },
            growth,
            Some(witness),
        )
        .unwrap();
        let split = speed_split(&inst, 6.0).unwrap();
        let block = randomized_fast_block(&inst, &split, 1234, 8).unwrap();
        assert_eq!(block.cuts, vec![BTreeSet::from([0])]);
        assert_eq!(block.draws, 1);
    }

    #[test]
    fn interleaved_single_element_is_round_robin() {
        let inst = bgt_with_witness(&[(1, 1)]);
        let sched =
            interleaved_schedule(&inst, InterleaveMode::Efficient, 6.0, 7, 5).unwrap();
        for cut in &sched.core {
            assert_eq!(cut, &BTreeSet::from([0]));
        }
    }

    #[test]
    fn interleaved_existential_places_slow_steps_every_third_day() {
        let inst = bgt_with_witness(&[(1, 2), (1, 4), (1, 8)]);
        let mut scheduler =
            InterleavedScheduler::new(&inst, InterleaveMode::Existential, 6.0, 99).unwrap();
        let slow = round_robin_slow(&inst).unwrap();
        let cuts: Vec<BTreeSet<usize>> = (0..9).map(|_| scheduler.next_cut()).collect();
        // Days 3, 6, 9 come from the round robin in order.
        assert_eq!(cuts[2], slow.core[0]);
        assert_eq!(cuts[5], slow.core[1]);
        assert_eq!(cuts[8], slow.core[2]);
    }

    #[test]
    fn reduce_max_prefers_the_tall_element() {
        let inst = bgt_with_witness(&[(9, 10), (1, 10)]);
        let (sched, max) = reduce_max_greedy(&inst, 100);
        // The fast element is cut most days; the slow one occasionally.
        let fast_cuts = sched.core.iter().filter(|c| c.contains(&0)).count();
        let slow_cuts = sched.core.iter().filter(|c| c.contains(&1)).count();
        assert!(fast_cuts > 80, "fast element cut {fast_cuts} times");
        assert!(slow_cuts >= 1, "slow element cut {slow_cuts} times");
        assert!(max < rational(2, 1), "observed height {max}");
    }

    #[test]
    fn single_element_reduce_max() {
        let inst = bgt_with_witness(&[(1, 2)]);
        let (_, max) = reduce_max_greedy(&inst, 10);
        assert_eq!(max, rational(1, 2));
    }
}
