//! Exact period-`T` schedules with discrepancy below 1 for matroid instances.
//!
//! The pipeline: normalize the growth vector to full rank, take `T` as the
//! lcm of the rate denominators, and search for a common basis of two
//! matroids over `E x [T]`: the direct sum of `T` copies of the input matroid
//! (one per day, enforcing validity) and the direct sum of per-element
//! "window" matroids (enforcing that the i-th cut of `e` falls inside its cut
//! window `C_i`, which pins the discrepancy below 1). The common basis is
//! found combinatorially with exchange-graph augmenting paths, decoded into a
//! periodic schedule, and replayed by the simulator before being returned.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::Error;
use crate::model::{
    lcm_of_denominators, strip_zero_rate, CbgtInstance, ConvexCombination, GrowthVector, Rational,
    Schedule,
};
use crate::set_systems::{full_rank, is_independent, max_common_independent, MatroidOracle};
use crate::simulator::{simulate, SimulationReport};
use crate::Result;

/// Default cap on `|E| * T`.
pub const DEFAULT_PRODUCT_BUDGET: u128 = 1_000_000;

/// The interval of days in which the `i`-th cut of an element must fall for
/// its discrepancy to stay below 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CutWindow {
    /// 1-based cut index.
    pub index: u64,
    /// First feasible day.
    pub lo: u64,
    /// Last feasible day.
    pub hi: u64,
}

/// The `T * g` cut windows of an element with rate `g`:
/// `C_i = [floor((i-1)/g) + 1, ceil(i/g)]`.
///
/// Requires `T * g` integral and `0 < g <= 1`. The returned windows satisfy
/// the chaining law: consecutive windows share exactly their boundary day
/// when `i/g` is fractional and are disjoint adjacent when `i/g` is integral.
pub fn cut_windows(rate: &Rational, period: u64) -> Vec<CutWindow> {
    assert!(rate > &Rational::zero() && rate <= &Rational::one());
    let cuts = rate * Rational::from_integer(BigInt::from(period));
    assert!(cuts.is_integer(), "T * g must be integral");
    let cuts = u64::try_from(cuts.to_integer()).expect("cut count fits u64");
    let numer = rate.numer();
    let denom = rate.denom();
    let mut windows = Vec::with_capacity(cuts as usize);
    for i in 1..=cuts {
        // floor((i-1) * den / num) + 1 and ceil(i * den / num).
        let lo = (BigInt::from(i - 1) * denom).div_floor(numer) + 1;
        let hi = (BigInt::from(i) * denom).div_ceil(numer);
        let lo = u64::try_from(lo).expect("window start fits u64");
        let hi = u64::try_from(hi).expect("window end fits u64");
        debug_assert!(1 <= lo && lo <= hi && hi <= period);
        windows.push(CutWindow { index: i, lo, hi });
    }
    // Chaining law of consecutive windows.
    for pair in windows.windows(2) {
        let i_over_g = Rational::from_integer(BigInt::from(pair[0].index)) / rate;
        if i_over_g.is_integer() {
            assert_eq!(pair[0].hi + 1, pair[1].lo);
        } else {
            assert!(pair[0].lo < pair[0].hi);
            assert_eq!(pair[0].hi, pair[1].lo);
        }
    }
    windows
}

/// Window-matroid independence: do the (ascending) days admit an
/// order-preserving assignment to distinct windows?
///
/// Greedy over the staircase structure: each successive day takes the
/// smallest unused window containing it. Equivalent to bipartite matching in
/// the window graph; the equivalence is exercised against brute force in the
/// acceptance suite.
pub fn me_is_independent(windows: &[CutWindow], days: &[u64]) -> bool {
    debug_assert!(days.windows(2).all(|p| p[0] < p[1]));
    let mut next = 0usize;
    for &day in days {
        while next < windows.len() && windows[next].hi < day {
            next += 1;
        }
        if next == windows.len() || windows[next].lo > day {
            return false;
        }
        next += 1;
    }
    true
}

/// One window's fractional-matching entries: `(day, x)` pairs.
#[derive(Debug, Clone)]
pub struct WindowFractional {
    pub window: CutWindow,
    pub entries: Vec<(u64, Rational)>,
}

/// The explicit fractional matching placing weight `g` on each day: the
/// boundary days of window `i` get `t g - i + 1` and `i - (t-1) g`, interior
/// days get `g`.
///
/// Per-day sums equal `g` and per-window sums equal 1; both identities are
/// exact and are what puts the constant vector inside the window-matroid
/// polytope.
pub fn fractional_matching(rate: &Rational, period: u64) -> Vec<WindowFractional> {
    cut_windows(rate, period)
        .into_iter()
        .map(|window| {
            let i = Rational::from_integer(BigInt::from(window.index));
            let entries = (window.lo..=window.hi)
                .map(|day| {
                    let t = Rational::from_integer(BigInt::from(day));
                    let x = if day == window.lo {
                        t * rate - &i + Rational::one()
                    } else if day == window.hi {
                        &i - (t - Rational::one()) * rate
                    } else {
                        rate.clone()
                    };
                    (day, x)
                })
                .collect();
            WindowFractional { window, entries }
        })
        .collect()
}

/// Rewrites the witness so that only bases carry weight, which raises the
/// growth vector pointwise until it sums to the matroid rank.
///
/// Every witness set is greedily completed to a basis (elements tried in id
/// order); weights of coinciding completions merge. Schedules for the output
/// instance dominate schedules for the input.
pub fn normalize_full_rank(inst: &CbgtInstance) -> Result<CbgtInstance> {
    let witness = inst.witness.as_ref().ok_or(Error::WitnessRequired(
        "full-rank normalization completes witness sets to bases",
    ))?;
    let n = inst.len();
    let mut completed: BTreeMap<BTreeSet<usize>, Rational> = BTreeMap::new();
    for (set, weight) in &witness.terms {
        if !is_independent(&inst.system, set, n)? {
            return Err(Error::InstanceInconsistency(format!(
                "witness set {set:?} is not independent"
            )));
        }
        let mut basis = set.clone();
        for e in 0..n {
            if !basis.contains(&e) {
                basis.insert(e);
                if !is_independent(&inst.system, &basis, n)? {
                    basis.remove(&e);
                }
            }
        }
        *completed.entry(basis).or_insert_with(Rational::zero) += weight;
    }
    let witness = ConvexCombination::new(completed.into_iter().collect())?;
    let growth = GrowthVector::new(witness.generated_growth(n))?;
    let rank = full_rank(&inst.system, n)?;
    debug_assert_eq!(growth.total(), Rational::from_integer(rank.into()));
    CbgtInstance::new(
        inst.elements.clone(),
        inst.system.clone(),
        growth,
        Some(witness),
    )
}

// ---------------------------------------------------------------------------
// Product-ground oracles
//
// Pairs (e, t) are indexed element-major: idx = e * T + (t - 1). Both
// matroids are direct sums, so exchange queries only ever touch one summand;
// the overrides below exploit that.

fn day_members(current: &BTreeSet<usize>, day0: usize, n: usize, period: usize) -> BTreeSet<usize> {
    (0..n)
        .filter(|e| current.contains(&(e * period + day0)))
        .collect()
}

/// `M_T`: one copy of the instance matroid per day.
struct TimeCopiesOracle<'a> {
    system: &'a crate::set_systems::SetSystemDescriptor,
    n: usize,
    period: usize,
}

impl MatroidOracle for TimeCopiesOracle<'_> {
    fn ground_size(&self) -> usize {
        self.n * self.period
    }

    fn is_independent_set(&self, set: &BTreeSet<usize>) -> bool {
        (0..self.period).all(|day0| {
            let members = day_members(set, day0, self.n, self.period);
            is_independent(self.system, &members, self.n).unwrap_or(false)
        })
    }

    fn can_add(&self, current: &BTreeSet<usize>, add: usize) -> bool {
        let day0 = add % self.period;
        let mut members = day_members(current, day0, self.n, self.period);
        members.insert(add / self.period);
        is_independent(self.system, &members, self.n).unwrap_or(false)
    }

    fn can_exchange(&self, current: &BTreeSet<usize>, remove: usize, add: usize) -> bool {
        let day0 = add % self.period;
        if remove % self.period != day0 {
            return self.can_add(current, add);
        }
        let mut members = day_members(current, day0, self.n, self.period);
        members.remove(&(remove / self.period));
        members.insert(add / self.period);
        is_independent(self.system, &members, self.n).unwrap_or(false)
    }
}

/// `M_E`: one window matroid per element.
struct WindowsOracle {
    windows: Vec<Vec<CutWindow>>,
    period: usize,
}

impl WindowsOracle {
    fn element_days(&self, current: &BTreeSet<usize>, element: usize) -> Vec<u64> {
        current
            .range(element * self.period..(element + 1) * self.period)
            .map(|&idx| (idx % self.period) as u64 + 1)
            .collect()
    }
}

impl MatroidOracle for WindowsOracle {
    fn ground_size(&self) -> usize {
        self.windows.len() * self.period
    }

    fn is_independent_set(&self, set: &BTreeSet<usize>) -> bool {
        (0..self.windows.len()).all(|e| {
            let days = self.element_days(set, e);
            me_is_independent(&self.windows[e], &days)
        })
    }

    fn can_add(&self, current: &BTreeSet<usize>, add: usize) -> bool {
        let element = add / self.period;
        let day = (add % self.period) as u64 + 1;
        let mut days = self.element_days(current, element);
        let at = days.partition_point(|&d| d < day);
        days.insert(at, day);
        me_is_independent(&self.windows[element], &days)
    }

    fn can_exchange(&self, current: &BTreeSet<usize>, remove: usize, add: usize) -> bool {
        let element = add / self.period;
        if remove / self.period != element {
            return self.can_add(current, add);
        }
        let removed_day = (remove % self.period) as u64 + 1;
        let day = (add % self.period) as u64 + 1;
        let mut days = self.element_days(current, element);
        days.retain(|&d| d != removed_day);
        let at = days.partition_point(|&d| d < day);
        days.insert(at, day);
        me_is_independent(&self.windows[element], &days)
    }
}

// ---------------------------------------------------------------------------
// Gap repair
//
// A common basis pins the discrepancy below 1, but it may still place cut i
// late in C_i and cut i+1 at the very end of C_{i+1}, stretching one cut gap
// to 2/g or beyond (the height then touches or exceeds 2). Among the common
// bases there are ones without such gaps; the pass below moves cut days
// within their windows, keeping the order-preserving assignment (so the
// discrepancy bound survives) and re-checking day independence (so validity
// survives), until every gap g-scaled stays below 2.

/// Largest gap `G` with `G * g < 2`.
fn gap_target(rate: &Rational) -> u64 {
    let two_denom: BigInt = BigInt::from(2) * rate.denom() - 1;
    u64::try_from(two_denom.div_floor(rate.numer())).expect("gap target fits u64")
}

/// Maximum cut gap of sorted in-period days, wrap included.
fn max_gap(days: &[u64], period: u64) -> u64 {
    let mut gap = days[0] + period - days[days.len() - 1];
    for pair in days.windows(2) {
        gap = gap.max(pair[1] - pair[0]);
    }
    gap
}

/// Searches an assignment of one day per window with all gaps at most
/// `bound`, using only days in `allowed` (1-based bitmask). Returns sorted
/// days, or `None`.
fn assign_days_with_gap(
    windows: &[CutWindow],
    allowed: &[bool],
    period: u64,
    bound: u64,
) -> Option<Vec<u64>> {
    let k = windows.len();
    // Fix the first cut day, then a forward reachability sweep; the wrap
    // constraint closes the loop.
    for first in windows[0].lo..=windows[0].hi {
        if !allowed[first as usize] {
            continue;
        }
        let mut reach: Vec<Vec<bool>> = vec![vec![false; period as usize + 1]; k];
        reach[0][first as usize] = true;
        for i in 1..k {
            for d in windows[i].lo..=windows[i].hi {
                if !allowed[d as usize] {
                    continue;
                }
                let lo = d.saturating_sub(bound).max(1);
                let mut ok = false;
                for prev in lo..d {
                    if prev <= period && reach[i - 1][prev as usize] {
                        ok = true;
                        break;
                    }
                }
                if ok {
                    reach[i][d as usize] = true;
                }
            }
        }
        // Latest reachable last day satisfying the wrap bound.
        let need_last = (first + period).saturating_sub(bound);
        let mut last = None;
        for d in (windows[k - 1].lo..=windows[k - 1].hi).rev() {
            if reach[k - 1][d as usize] && d >= need_last {
                last = Some(d);
                break;
            }
        }
        let Some(mut day) = last else { continue };
        if k == 1 {
            return Some(vec![day]);
        }
        // Backtrack one chain.
        let mut days = vec![day];
        for i in (0..k - 1).rev() {
            let lo = day.saturating_sub(bound).max(1);
            let mut prev_day = None;
            for d in (windows[i].lo..=windows[i].hi).rev() {
                if d >= lo && d < day && reach[i][d as usize] {
                    prev_day = Some(d);
                    break;
                }
            }
            day = prev_day.expect("reachable day has a predecessor");
            days.push(day);
        }
        days.reverse();
        return Some(days);
    }
    None
}

struct GapRepair<'a> {
    core: Vec<BTreeSet<usize>>,
    stripped: &'a CbgtInstance,
    windows: &'a [Vec<CutWindow>],
    period: u64,
    targets: Vec<u64>,
}

impl GapRepair<'_> {
    fn cut(&self, day: u64) -> &BTreeSet<usize> {
        &self.core[day as usize - 1]
    }

    fn days_of(&self, e: usize) -> Vec<u64> {
        (1..=self.period)
            .filter(|&t| self.cut(t).contains(&e))
            .collect()
    }

    fn day_accepts(&self, day: u64, e: usize) -> bool {
        let mut with_e = self.cut(day).clone();
        with_e.insert(e);
        is_independent(&self.stripped.system, &with_e, self.stripped.len()).unwrap_or(false)
    }

    /// Would `f`'s assignment stay a clean full window SDR after moving one
    /// of its cuts from `from` to `to`?
    fn relocation_keeps_f_clean(&self, f: usize, from: u64, to: u64) -> bool {
        let mut days = self.days_of(f);
        days.retain(|&d| d != from);
        if days.contains(&to) {
            return false;
        }
        let at = days.partition_point(|&d| d < to);
        days.insert(at, to);
        me_is_independent(&self.windows[f], &days)
            && days.len() == self.windows[f].len()
            && max_gap(&days, self.period) <= self.targets[f]
    }

    /// Repairs one element: finds a window SDR with every gap at most the
    /// target, opening full days by relocating one blocking element when
    /// needed. Applies the moves; returns false when no assignment exists.
    fn repair_element(&mut self, e: usize) -> bool {
        let period = self.period;
        let mut allowed = vec![false; period as usize + 1];
        let mut eviction: Vec<Option<(usize, u64)>> = vec![None; period as usize + 1];
        for day in 1..=period {
            if self.cut(day).contains(&e) || self.day_accepts(day, e) {
                allowed[day as usize] = true;
                continue;
            }
            // One-step eviction: move the lowest-id blocker to the earliest
            // day that takes it without dirtying its own gaps.
            'blockers: for &f in self.cut(day).clone().iter() {
                let mut without_f = self.cut(day).clone();
                without_f.remove(&f);
                without_f.insert(e);
                if !is_independent(&self.stripped.system, &without_f, self.stripped.len())
                    .unwrap_or(false)
                {
                    continue;
                }
                for new_day in 1..=period {
                    if new_day == day || self.cut(new_day).contains(&f) {
                        continue;
                    }
                    if self.day_accepts(new_day, f)
                        && self.relocation_keeps_f_clean(f, day, new_day)
                    {
                        allowed[day as usize] = true;
                        eviction[day as usize] = Some((f, new_day));
                        break 'blockers;
                    }
                }
            }
        }
        let Some(new_days) =
            assign_days_with_gap(&self.windows[e], &allowed, period, self.targets[e])
        else {
            return false;
        };

        // Apply evictions needed by the chosen days, with a rollback log;
        // earlier evictions can invalidate later ones.
        let mut log: Vec<(usize, u64, u64)> = Vec::new();
        let mut ok = true;
        for &day in &new_days {
            if self.cut(day).contains(&e) || self.day_accepts(day, e) {
                continue;
            }
            let planned = eviction[day as usize];
            let applied = planned.is_some_and(|(f, new_day)| {
                if self.cut(day).contains(&f)
                    && !self.cut(new_day).contains(&f)
                    && self.day_accepts(new_day, f)
                    && self.relocation_keeps_f_clean(f, day, new_day)
                {
                    self.core[day as usize - 1].remove(&f);
                    self.core[new_day as usize - 1].insert(f);
                    log.push((f, day, new_day));
                    true
                } else {
                    false
                }
            });
            if !applied || !self.day_accepts(day, e) {
                ok = false;
                break;
            }
        }
        if !ok {
            for (f, day, new_day) in log.into_iter().rev() {
                self.core[new_day as usize - 1].remove(&f);
                self.core[day as usize - 1].insert(f);
            }
            return false;
        }
        for day in self.days_of(e) {
            self.core[day as usize - 1].remove(&e);
        }
        for &day in &new_days {
            self.core[day as usize - 1].insert(e);
        }
        true
    }

    fn offenders(&self) -> Vec<usize> {
        (0..self.stripped.len())
            .filter(|&e| max_gap(&self.days_of(e), self.period) > self.targets[e])
            .collect()
    }
}

/// Reassigns cut days element by element until every gap `G` has
/// `G * g(e) < 2`. Returns false if some element could not be repaired.
fn repair_gaps(
    core: &mut [BTreeSet<usize>],
    stripped: &CbgtInstance,
    windows: &[Vec<CutWindow>],
    period: u64,
) -> bool {
    let n = stripped.len();
    let targets = stripped.growth.rates().iter().map(gap_target).collect();
    let mut repair = GapRepair {
        core: core.to_vec(),
        stripped,
        windows,
        period,
        targets,
    };
    let mut done = false;
    for _pass in 0..4 * n.max(1) {
        let offenders = repair.offenders();
        if offenders.is_empty() {
            done = true;
            break;
        }
        let mut improved = false;
        for e in offenders {
            if repair.repair_element(e) {
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    done = done || repair.offenders().is_empty();
    if done {
        core.clone_from_slice(&repair.core);
    }
    done
}

/// Output of the exact pipeline.
#[derive(Debug)]
pub struct ExactSchedule {
    /// Periodic schedule over the original element ids.
    pub schedule: Schedule,
    /// `T`: the schedule's period.
    pub period: u64,
    /// The full-rank instance actually scheduled (original ids; removed
    /// zero-rate elements keep rate 0).
    pub normalized: CbgtInstance,
    /// Replay of the schedule against `normalized` over `3 T` days.
    pub report: SimulationReport,
}

/// Runs the full pipeline on a matroid instance with a witness.
///
/// Fails loudly when `|E| * T` exceeds `budget`. The returned report
/// certifies validity, exact discrepancy below 1 and height below 2.
pub fn exact_schedule(inst: &CbgtInstance, budget: u128) -> Result<ExactSchedule> {
    let normalized = normalize_full_rank(inst)?;
    let (stripped, removed) = strip_zero_rate(&normalized)?;
    if stripped.is_empty() {
        let schedule = Schedule::periodic(vec![BTreeSet::new()]);
        let report = simulate(&normalized, &schedule, 3)?;
        return Ok(ExactSchedule {
            schedule,
            period: 1,
            normalized,
            report,
        });
    }
    let kept: Vec<usize> = {
        let removed_ids: BTreeSet<usize> = removed.iter().map(|e| e.id).collect();
        (0..normalized.len())
            .filter(|id| !removed_ids.contains(id))
            .collect()
    };

    let n = stripped.len();
    let lcm = lcm_of_denominators(&stripped.growth)?;
    let period = lcm.period;
    let product = n as u128 * period as u128;
    if product > budget {
        return Err(Error::BudgetExceeded {
            period,
            product,
            budget,
        });
    }
    let rank = full_rank(&stripped.system, n)?;
    let target = period as u128 * rank as u128;
    debug_assert_eq!(
        lcm.cuts_per_period.iter().map(|&c| c as u128).sum::<u128>(),
        target,
        "full-rank normalization must equalize the two matroid ranks"
    );

    let windows: Vec<Vec<CutWindow>> = stripped
        .growth
        .rates()
        .iter()
        .map(|rate| cut_windows(rate, period))
        .collect();
    let m_t = TimeCopiesOracle {
        system: &stripped.system,
        n,
        period: period as usize,
    };
    let m_e = WindowsOracle {
        windows: windows.clone(),
        period: period as usize,
    };
    let common = max_common_independent(&m_t, &m_e);
    if common.len() as u128 != target {
        return Err(Error::InternalInconsistency(format!(
            "matroid intersection found {} pairs, a common basis has {target}; \
             either an independence oracle is defective or the system is not a matroid",
            common.len()
        )));
    }

    // Decode on stripped ids first; repair runs against the stripped system.
    let mut local_core = vec![BTreeSet::new(); period as usize];
    for idx in common {
        let element = idx / period as usize;
        let day0 = idx % period as usize;
        local_core[day0].insert(element);
    }
    if !repair_gaps(&mut local_core, &stripped, &windows, period) {
        return Err(Error::InternalInconsistency(
            "no common basis with every cut gap below 2/g was found".into(),
        ));
    }
    let mut core = vec![BTreeSet::new(); period as usize];
    for (day0, cut) in local_core.iter().enumerate() {
        for &element in cut {
            core[day0].insert(kept[element]);
        }
    }
    // The finite-to-infinite lemma needs exactly T g(e) cuts per element.
    for (e, &cuts) in lcm.cuts_per_period.iter().enumerate() {
        let occurrences = core.iter().filter(|cut| cut.contains(&kept[e])).count();
        if occurrences as u64 != cuts {
            return Err(Error::InternalInconsistency(format!(
                "element {} is cut {occurrences} times per period, want {cuts}",
                kept[e]
            )));
        }
    }
    let schedule = Schedule::periodic(core);

    let report = simulate(&normalized, &schedule, 3 * period as usize)?;
    if !report.valid {
        return Err(Error::InternalInconsistency(
            "decoded schedule failed the independence replay".into(),
        ));
    }
    match report.max_discrepancy() {
        Some(d) if d < Rational::one() => {}
        other => {
            return Err(Error::InternalInconsistency(format!(
                "decoded schedule has discrepancy {other:?}, expected below 1"
            )));
        }
    }
    if report.max_height >= Rational::from_integer(2.into()) {
        return Err(Error::InternalInconsistency(format!(
            "decoded schedule reaches height {}, expected below 2",
            report.max_height
        )));
    }
    Ok(ExactSchedule {
        schedule,
        period,
        normalized,
        report,
    })
}

#[cfg(test)]
mod tests {
    use num_traits::Signed;

    use super::*;
    use crate::model::rational;
    use crate::set_systems::SetSystemDescriptor;

    #[test]
    fn windows_for_rate_one_are_singletons() {
        let windows = cut_windows(&rational(1, 1), 4);
        assert_eq!(windows.len(), 4);
        for (i, w) in windows.iter().enumerate() {
            assert_eq!((w.lo, w.hi), ((i + 1) as u64, (i + 1) as u64));
        }
    }

    #[test]
    fn windows_for_one_half() {
        let windows = cut_windows(&rational(1, 2), 4);
        assert_eq!(
            windows.iter().map(|w| (w.lo, w.hi)).collect::<Vec<_>>(),
            vec![(1, 2), (3, 4)]
        );
    }

    #[test]
    fn windows_for_four_elevenths() {
        let windows = cut_windows(&rational(4, 11), 22);
        assert_eq!(
            windows.iter().map(|w| (w.lo, w.hi)).collect::<Vec<_>>(),
            vec![
                (1, 3),
                (3, 6),
                (6, 9),
                (9, 11),
                (12, 14),
                (14, 17),
                (17, 20),
                (20, 22)
            ]
        );
    }

    #[test]
    fn greedy_window_assignment() {
        let windows = cut_windows(&rational(4, 11), 22);
        // The window minima always fit.
        let minima: Vec<u64> = windows.iter().map(|w| w.lo).collect();
        assert!(me_is_independent(&windows, &minima));
        // Days 1 and 2 both need the first window.
        assert!(!me_is_independent(&windows, &[1, 2]));
        assert!(me_is_independent(&windows, &[]));
    }

    #[test]
    fn fractional_matching_sums() {
        let rate = rational(4, 11);
        let fractional = fractional_matching(&rate, 22);
        let mut day_sums = vec![Rational::zero(); 23];
        for wf in &fractional {
            let window_sum: Rational = wf.entries.iter().map(|(_, x)| x.clone()).sum();
            assert_eq!(window_sum, rational(1, 1));
            for (day, x) in &wf.entries {
                assert!(!x.is_negative());
                day_sums[*day as usize] += x;
            }
        }
        for day in 1..=22 {
            assert_eq!(day_sums[day], rate, "day {day}");
        }
    }

    fn one_uniform(rates: &[(i64, i64)]) -> CbgtInstance {
        let growth =
            GrowthVector::new(rates.iter().map(|&(a, b)| rational(a, b)).collect()).unwrap();
        let witness = ConvexCombination::new(
            rates
                .iter()
                .enumerate()
                .map(|(e, &(a, b))| (BTreeSet::from([e]), rational(a, b)))
                .chain(std::iter::once({
                    let used: Rational = rates.iter().map(|&(a, b)| rational(a, b)).sum();
                    (BTreeSet::new(), Rational::one() - used)
                }))
                .filter(|(_, w)| !w.is_zero())
                .collect(),
        )
        .unwrap();
        CbgtInstance::unlabeled(
            rates.len(),
            SetSystemDescriptor::Uniform { k: 1 },
            growth,
            Some(witness),
        )
        .unwrap()
    }

    #[test]
    fn normalize_completes_to_bases() {
        // lambda({a}) = 1 on a 2-uniform matroid over three elements: the
        // completion adds the next element by id.
        let witness = ConvexCombination::new(vec![(BTreeSet::from([0]), rational(1, 1))]).unwrap();
        let growth =
            GrowthVector::new(vec![rational(1, 1), rational(0, 1), rational(0, 1)]).unwrap();
        let inst = CbgtInstance::unlabeled(
            3,
            SetSystemDescriptor::Uniform { k: 2 },
            growth,
            Some(witness),
        )
        .unwrap();
        let normalized = normalize_full_rank(&inst).unwrap();
        assert_eq!(
            normalized.growth.rates(),
            &[rational(1, 1), rational(1, 1), rational(0, 1)]
        );
        assert_eq!(
            normalized.witness.unwrap().terms,
            vec![(BTreeSet::from([0, 1]), rational(1, 1))]
        );
    }

    #[test]
    fn normalize_leaves_basis_witness_alone() {
        let inst = one_uniform(&[(1, 2), (1, 2)]);
        let normalized = normalize_full_rank(&inst).unwrap();
        assert_eq!(normalized.growth, inst.growth);
    }

    #[test]
    fn exact_schedule_balanced_pair() {
        let inst = one_uniform(&[(1, 2), (1, 2)]);
        let result = exact_schedule(&inst, DEFAULT_PRODUCT_BUDGET).unwrap();
        assert_eq!(result.period, 2);
        // Each element once per period, alternating.
        let occurrences: Vec<usize> = (0..2)
            .map(|e| result.schedule.core.iter().filter(|c| c.contains(&e)).count())
            .collect();
        assert_eq!(occurrences, vec![1, 1]);
        assert_eq!(result.report.max_height, rational(1, 1));
        assert!(result.report.max_discrepancy().unwrap() < Rational::one());
    }

    #[test]
    fn exact_schedule_two_thirds_one_third() {
        let inst = one_uniform(&[(2, 3), (1, 3)]);
        let result = exact_schedule(&inst, DEFAULT_PRODUCT_BUDGET).unwrap();
        assert_eq!(result.period, 3);
        assert!(result.report.valid);
        assert!(result.report.max_height < rational(2, 1));
        assert!(result.report.max_discrepancy().unwrap() < Rational::one());
    }

    #[test]
    fn exact_schedule_requires_witness() {
        let growth = GrowthVector::new(vec![rational(1, 2)]).unwrap();
        let inst =
            CbgtInstance::unlabeled(1, SetSystemDescriptor::Uniform { k: 1 }, growth, None).unwrap();
        assert!(matches!(
            exact_schedule(&inst, DEFAULT_PRODUCT_BUDGET),
            Err(Error::WitnessRequired(_))
        ));
    }

    #[test]
    fn exact_schedule_honors_budget() {
        let inst = one_uniform(&[(1, 97), (1, 89)]);
        assert!(matches!(
            exact_schedule(&inst, 100),
            Err(Error::BudgetExceeded { .. })
        ));
    }
}
