//! Exact replay of a schedule against an instance.
//!
//! Heights use grow-then-cut semantics: `h_t(e)` is recorded after growth on
//! day `t` and before the cut of `pi(t)`; a cut resets the height to exactly
//! zero. All arithmetic is rational. The replay keeps two independent height
//! computations (incremental grow/cut loop and the closed form
//! `(t - last_cut) * g(e)`) and insists they agree at every step.
//!
//! For periodic schedules in which every element occurs in the core, the
//! recurrence time, maximum height and discrepancy reported are exact for the
//! infinite repetition; otherwise they are horizon-truncated lower bounds and
//! flagged as such.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::Error;
use crate::model::{CbgtInstance, Rational, Schedule};
use crate::set_systems::is_independent;
use crate::Result;

/// Per-element statistics of a replay.
#[derive(Debug, Clone, Serialize)]
pub struct ElementReport {
    /// Maximum post-growth height; exact for covered periodic schedules.
    #[serde(with = "crate::io::rational_serde")]
    pub max_height: Rational,
    /// Longest gap between consecutive cuts (day 0 counts as a cut).
    /// `None` when the element is never cut in scope.
    pub recurrence: Option<usize>,
    /// `sup_t |t g(e) - A(pi, e, t)|` over the verified range.
    #[serde(with = "crate::io::rational_serde")]
    pub discrepancy: Rational,
    /// True when the periodic cut count drifts, which makes the true
    /// discrepancy exactly unbounded; `discrepancy` then holds only the
    /// observed sup.
    pub discrepancy_unbounded: bool,
    /// `A(pi, e, horizon)`.
    pub occurrences: usize,
    /// Whether the values above are exact for the infinite schedule.
    pub exact: bool,
}

/// Result of replaying a schedule.
#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub horizon: usize,
    /// True when every replayed cut set was independent.
    pub valid: bool,
    pub first_invalid_step: Option<usize>,
    #[serde(with = "crate::io::rational_serde")]
    pub max_height: Rational,
    pub per_element: Vec<ElementReport>,
    /// True when every per-element report is exact for the infinite schedule.
    pub exact_for_infinite: bool,
}

impl SimulationReport {
    /// Largest per-element discrepancy; `None` when some element's
    /// discrepancy is unbounded.
    pub fn max_discrepancy(&self) -> Option<Rational> {
        if self.per_element.iter().any(|e| e.discrepancy_unbounded) {
            return None;
        }
        Some(
            self.per_element
                .iter()
                .map(|e| e.discrepancy.clone())
                .max()
                .unwrap_or_else(Rational::zero),
        )
    }
}

/// Number of occurrences of `element` among the first `t` cuts.
pub fn occurrence_count(sched: &Schedule, element: usize, t: usize) -> usize {
    (1..=t)
        .filter(|&day| sched.cut(day).is_some_and(|cut| cut.contains(&element)))
        .count()
}

/// Replays `sched` against `inst` for `horizon` days.
///
/// Invalid cuts are recorded and do not abort the run. Cut sets outside the
/// ground set are a domain error.
pub fn simulate(inst: &CbgtInstance, sched: &Schedule, horizon: usize) -> Result<SimulationReport> {
    let n = inst.len();
    sched.check_ground(n)?;
    if horizon == 0 {
        return Err(Error::Schedule("horizon must be at least 1".into()));
    }
    if !sched.periodic && horizon > sched.core.len() {
        return Err(Error::Schedule(format!(
            "horizon {horizon} exceeds the {}-day finite schedule",
            sched.core.len()
        )));
    }
    if sched.periodic && sched.core.is_empty() {
        return Err(Error::Schedule("periodic schedule with empty core".into()));
    }

    let mut heights = vec![Rational::zero(); n];
    let mut last_cut = vec![0usize; n];
    let mut occurrences = vec![0usize; n];
    let mut max_height = vec![Rational::zero(); n];
    let mut max_gap = vec![0usize; n];
    let mut discrepancy_sup = vec![Rational::zero(); n];
    let mut within_unit_band = vec![true; n];
    let mut valid = true;
    let mut first_invalid_step = None;

    for t in 1..=horizon {
        let cut = sched
            .cut(t)
            .expect("cut availability checked above")
            .clone();
        for e in 0..n {
            heights[e] += inst.growth.rate(e);
            // Closed form must match the incremental loop exactly.
            let by_formula =
                Rational::from_integer(BigInt::from(t - last_cut[e])) * inst.growth.rate(e);
            assert_eq!(
                heights[e], by_formula,
                "height bookkeeping diverged for element {e} at day {t}"
            );
            if heights[e] > max_height[e] {
                max_height[e] = heights[e].clone();
            }
        }
        if valid && !is_independent(&inst.system, &cut, n)? {
            valid = false;
            first_invalid_step = Some(t);
        } else if !valid {
            // Still replaying; only the first violation is recorded.
            let _ = is_independent(&inst.system, &cut, n)?;
        }
        for e in 0..n {
            let scheduled = cut.contains(&e);
            if scheduled {
                occurrences[e] += 1;
                max_gap[e] = max_gap[e].max(t - last_cut[e]);
                heights[e] = Rational::zero();
                last_cut[e] = t;
            }
            let ideal = Rational::from_integer(BigInt::from(t)) * inst.growth.rate(e);
            let deviation = (ideal.clone() - Rational::from_integer(occurrences[e].into())).abs();
            if deviation > discrepancy_sup[e] {
                discrepancy_sup[e] = deviation;
            }
            let within = Rational::from_integer(ideal.floor().to_integer())
                <= Rational::from_integer(BigInt::from(occurrences[e]))
                && Rational::from_integer(BigInt::from(occurrences[e]))
                    <= Rational::from_integer(ideal.ceil().to_integer());
            within_unit_band[e] &= within;
            // d < 1 iff floor(tg) <= A <= ceil(tg), checked live.
            assert_eq!(
                discrepancy_sup[e] < Rational::one(),
                within_unit_band[e],
                "discrepancy-band equivalence broke for element {e} at day {t}"
            );
        }
    }

    // Trailing open gap is a lower bound on some future gap.
    for e in 0..n {
        max_gap[e] = max_gap[e].max(horizon - last_cut[e]);
    }

    let per_element = if sched.periodic {
        exact_periodic_stats(inst, sched, &occurrences, &max_height, &max_gap, &discrepancy_sup)?
    } else {
        (0..n)
            .map(|e| ElementReport {
                max_height: max_height[e].clone(),
                recurrence: (occurrences[e] > 0).then_some(max_gap[e]),
                discrepancy: discrepancy_sup[e].clone(),
                discrepancy_unbounded: false,
                occurrences: occurrences[e],
                exact: false,
            })
            .collect()
    };

    let report_max_height = per_element
        .iter()
        .map(|e| e.max_height.clone())
        .max()
        .unwrap_or_else(Rational::zero);
    let exact_for_infinite = !per_element.is_empty() && per_element.iter().all(|e| e.exact);
    Ok(SimulationReport {
        horizon,
        valid,
        first_invalid_step,
        max_height: report_max_height,
        per_element,
        exact_for_infinite,
    })
}

/// Exact per-element statistics for a periodic schedule, falling back to the
/// horizon-truncated observations for elements missing from the core.
fn exact_periodic_stats(
    inst: &CbgtInstance,
    sched: &Schedule,
    horizon_occurrences: &[usize],
    horizon_max_height: &[Rational],
    horizon_max_gap: &[usize],
    horizon_discrepancy: &[Rational],
) -> Result<Vec<ElementReport>> {
    let n = inst.len();
    let period = sched.core.len();
    let mut reports = Vec::with_capacity(n);
    for e in 0..n {
        let positions: Vec<usize> = (1..=period)
            .filter(|&t| sched.core[t - 1].contains(&e))
            .collect();
        if positions.is_empty() {
            reports.push(ElementReport {
                max_height: horizon_max_height[e].clone(),
                recurrence: None,
                discrepancy: horizon_discrepancy[e].clone(),
                discrepancy_unbounded: !inst.growth.rate(e).is_zero(),
                occurrences: horizon_occurrences[e],
                exact: false,
            });
            continue;
        }
        // Max gap over two concatenated periods: consecutive gaps plus the
        // gap wrapping around the period boundary.
        let mut gamma = positions[0] + period - positions[positions.len() - 1];
        for pair in positions.windows(2) {
            gamma = gamma.max(pair[1] - pair[0]);
        }
        debug_assert!(gamma >= horizon_max_gap[e].min(gamma));
        let rate = inst.growth.rate(e);
        let max_height = Rational::from_integer(BigInt::from(gamma)) * rate;

        // Zero drift over one period makes the one-period sup exact for the
        // infinite repetition; any drift makes the discrepancy unbounded.
        let cuts_per_period = positions.len();
        let drift = Rational::from_integer(BigInt::from(period)) * rate
            - Rational::from_integer(BigInt::from(cuts_per_period));
        let (discrepancy, unbounded) = if drift.is_zero() {
            let mut sup = Rational::zero();
            let mut seen = 0usize;
            for t in 1..=period {
                if sched.core[t - 1].contains(&e) {
                    seen += 1;
                }
                let dev = (Rational::from_integer(BigInt::from(t)) * rate
                    - Rational::from_integer(BigInt::from(seen)))
                .abs();
                if dev > sup {
                    sup = dev;
                }
            }
            (sup, false)
        } else {
            (horizon_discrepancy[e].clone(), true)
        };
        reports.push(ElementReport {
            max_height,
            recurrence: Some(gamma),
            discrepancy,
            discrepancy_unbounded: unbounded,
            occurrences: horizon_occurrences[e],
            exact: true,
        });
    }
    Ok(reports)
}

/// Per-element discrepancies plus the maximum, from a full replay.
pub fn discrepancy(
    inst: &CbgtInstance,
    sched: &Schedule,
    horizon: usize,
) -> Result<(Vec<Rational>, Option<Rational>)> {
    let report = simulate(inst, sched, horizon)?;
    let per_element = report
        .per_element
        .iter()
        .map(|e| e.discrepancy.clone())
        .collect();
    let max = report.max_discrepancy();
    Ok((per_element, max))
}

/// Outcome of checking `d(pi) < 1  =>  h(pi) < 2` on a report.
#[derive(Debug, Clone, Serialize)]
pub struct ImplicationCheck {
    pub holds: bool,
    /// Antecedent `d(pi) < 1`.
    pub discrepancy_below_one: bool,
    #[serde(with = "crate::io::rational_serde")]
    pub max_height: Rational,
    /// `None` when the discrepancy is unbounded.
    #[serde(with = "crate::io::rational_opt_serde")]
    pub max_discrepancy: Option<Rational>,
}

/// Checks the implication "discrepancy below 1 forces height below 2".
pub fn check_disc_height_implication(report: &SimulationReport) -> ImplicationCheck {
    let max_discrepancy = report.max_discrepancy();
    let discrepancy_below_one = max_discrepancy
        .as_ref()
        .is_some_and(|d| d < &Rational::one());
    let height_below_two = report.max_height < crate::model::rational(2, 1);
    ImplicationCheck {
        holds: !discrepancy_below_one || height_below_two,
        discrepancy_below_one,
        max_height: report.max_height.clone(),
        max_discrepancy,
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::model::{rational, CbgtInstance, GrowthVector};
    use crate::set_systems::SetSystemDescriptor;

    fn bgt(rates: &[(i64, i64)]) -> CbgtInstance {
        let growth =
            GrowthVector::new(rates.iter().map(|&(a, b)| rational(a, b)).collect()).unwrap();
        CbgtInstance::unlabeled(rates.len(), SetSystemDescriptor::Uniform { k: 1 }, growth, None)
            .unwrap()
    }

    fn alternating(n: usize) -> Schedule {
        Schedule::periodic((0..n).map(|e| BTreeSet::from([e])).collect())
    }

    #[test]
    fn single_element_full_rate() {
        let inst = bgt(&[(1, 1)]);
        let sched = Schedule::periodic(vec![BTreeSet::from([0])]);
        let report = simulate(&inst, &sched, 6).unwrap();
        assert!(report.valid);
        assert_eq!(report.max_height, rational(1, 1));
        assert_eq!(report.per_element[0].discrepancy, rational(0, 1));
        assert!(report.exact_for_infinite);
    }

    #[test]
    fn unbalanced_alternation_has_unbounded_discrepancy() {
        // Rates 0.9/0.1 alternating: height stays at 1.8 but the cut counts
        // drift away from t*g.
        let inst = bgt(&[(9, 10), (1, 10)]);
        let report = simulate(&inst, &alternating(2), 20).unwrap();
        assert!(report.valid);
        assert_eq!(report.max_height, rational(9, 5));
        assert!(report.per_element[0].discrepancy_unbounded);
        assert!(report.per_element[1].discrepancy_unbounded);
        // By day 10 the slow element's deviation reached at least 4/5.
        let (devs, _) = {
            let r = simulate(&inst, &alternating(2), 10).unwrap();
            (r.per_element[1].discrepancy.clone(), r)
        };
        assert!(devs >= rational(4, 5));
        // At t = 2 the fast element deviates by |1.8 - 1| = 0.8.
        let short = simulate(&inst, &Schedule::finite(vec![
            BTreeSet::from([0]),
            BTreeSet::from([1]),
        ]), 2)
        .unwrap();
        assert!(short.per_element[0].discrepancy >= rational(4, 5));
    }

    #[test]
    fn implication_vacuous_when_discrepancy_large() {
        let inst = bgt(&[(9, 10), (1, 10)]);
        let report = simulate(&inst, &alternating(2), 20).unwrap();
        let check = check_disc_height_implication(&report);
        assert!(check.holds);
        assert!(!check.discrepancy_below_one);
    }

    #[test]
    fn example_schedule_height_one() {
        // Rates .1, .2, .5, .5, .3 on a 2-uniform matroid; the published
        // period-4 schedule ({b,d},{e,c},{a,d},{e,c}) has height exactly 1.
        let growth = GrowthVector::new(vec![
            rational(1, 10),
            rational(1, 5),
            rational(1, 2),
            rational(1, 2),
            rational(3, 10),
        ])
        .unwrap();
        let inst =
            CbgtInstance::unlabeled(5, SetSystemDescriptor::Uniform { k: 2 }, growth, None)
                .unwrap();
        let sched = Schedule::periodic(vec![
            BTreeSet::from([1, 3]),
            BTreeSet::from([4, 2]),
            BTreeSet::from([0, 3]),
            BTreeSet::from([4, 2]),
        ]);
        let report = simulate(&inst, &sched, 8).unwrap();
        assert!(report.valid);
        assert!(report.exact_for_infinite);
        assert_eq!(report.max_height, rational(1, 1));
    }

    #[test]
    fn invalid_cut_recorded_but_replay_continues() {
        let inst = bgt(&[(1, 2), (1, 2)]);
        let sched = Schedule::periodic(vec![BTreeSet::from([0, 1])]);
        let report = simulate(&inst, &sched, 4).unwrap();
        assert!(!report.valid);
        assert_eq!(report.first_invalid_step, Some(1));
        assert_eq!(report.horizon, 4);
    }

    #[test]
    fn cut_outside_ground_set_is_an_error() {
        let inst = bgt(&[(1, 2)]);
        let sched = Schedule::periodic(vec![BTreeSet::from([3])]);
        assert!(simulate(&inst, &sched, 2).is_err());
    }

    #[test]
    fn element_missing_from_core_is_flagged() {
        let inst = bgt(&[(1, 2), (1, 2)]);
        let sched = Schedule::periodic(vec![BTreeSet::from([0])]);
        let report = simulate(&inst, &sched, 6).unwrap();
        assert!(!report.exact_for_infinite);
        assert!(report.per_element[1].discrepancy_unbounded);
        assert_eq!(report.per_element[1].recurrence, None);
    }

    #[test]
    fn occurrences_count_matches_replay() {
        let inst = bgt(&[(1, 2), (1, 2)]);
        let sched = alternating(2);
        let report = simulate(&inst, &sched, 7).unwrap();
        assert_eq!(report.per_element[0].occurrences, occurrence_count(&sched, 0, 7));
        assert_eq!(report.per_element[0].occurrences, 4);
        assert_eq!(report.per_element[1].occurrences, 3);
    }
}
