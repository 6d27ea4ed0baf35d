//! Combinatorial pinwheel scheduling: instances, the height reduction from
//! bamboo trimming, exact schedulability search, and density.
//!
//! A CPS instance asks for a valid schedule in which element `e` occurs in
//! every window of `a(e)` consecutive days. With periods `a(e) = floor(c /
//! g(e))`, schedulability is equivalent to a trimming schedule of height at
//! most `c`; both directions of that reduction live here. Density (the
//! cheapest fractional cover of the rates `1/a(e)` by independent sets) is
//! solved exactly over the rationals with a small Bland-rule simplex.

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::Error;
use crate::model::{CbgtInstance, ConvexCombination, Element, GrowthVector, Rational, Schedule};
use crate::set_systems::{is_independent, maximal_independent_sets, SetSystemDescriptor, EXPLICIT_SIZE_GUARD};
use crate::Result;

/// Default cap on the schedulability search's state space.
pub const DEFAULT_STATE_BUDGET: u128 = 10_000_000;

/// A fractional cover: nonnegative weights on independent sets with
/// `sum over sets containing e >= 1/a(e)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityCertificate {
    pub terms: Vec<(BTreeSet<usize>, Rational)>,
}

impl DensityCertificate {
    /// Total weight `rho`.
    pub fn rho(&self) -> Rational {
        self.terms.iter().map(|(_, w)| w).sum()
    }

    /// Coverage of one element.
    pub fn coverage(&self, element: usize) -> Rational {
        self.terms
            .iter()
            .filter(|(set, _)| set.contains(&element))
            .map(|(_, w)| w)
            .sum()
    }
}

/// A combinatorial pinwheel instance.
#[derive(Debug, Clone)]
pub struct CpsInstance {
    pub elements: Vec<Element>,
    pub system: SetSystemDescriptor,
    /// `a(e) >= 1` per element.
    pub periods: Vec<u64>,
    pub certificate: Option<DensityCertificate>,
}

impl CpsInstance {
    pub fn new(
        elements: Vec<Element>,
        system: SetSystemDescriptor,
        periods: Vec<u64>,
        certificate: Option<DensityCertificate>,
    ) -> Result<Self> {
        let n = elements.len();
        if periods.len() != n {
            return Err(Error::InvalidDescriptor(format!(
                "{} periods for {n} elements",
                periods.len()
            )));
        }
        if let Some(e) = periods.iter().position(|&a| a == 0) {
            return Err(Error::InvalidDescriptor(format!(
                "period of element {e} must be at least 1"
            )));
        }
        system.validate(n)?;
        let cps = CpsInstance {
            elements,
            system,
            periods,
            certificate: None,
        };
        if let Some(cert) = &certificate {
            cps.check_certificate(cert)?;
        }
        Ok(CpsInstance {
            certificate,
            ..cps
        })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Verifies a cover exactly: nonnegative weights on independent sets
    /// whose per-element coverage reaches `1/a(e)`.
    pub fn check_certificate(&self, cert: &DensityCertificate) -> Result<()> {
        let n = self.len();
        for (set, weight) in &cert.terms {
            if weight.is_negative() {
                return Err(Error::InvalidGrowth(format!(
                    "certificate weight {weight} is negative"
                )));
            }
            if !is_independent(&self.system, set, n)? {
                return Err(Error::InvalidGrowth(format!(
                    "certificate set {set:?} is not independent"
                )));
            }
        }
        for e in 0..n {
            let need = Rational::new(BigInt::one(), BigInt::from(self.periods[e]));
            if cert.coverage(e) < need {
                return Err(Error::InvalidGrowth(format!(
                    "certificate covers element {e} with {}, needs {need}",
                    cert.coverage(e)
                )));
            }
        }
        Ok(())
    }
}

/// The reduction from trimming: `a(e) = floor(c / g(e))`.
///
/// Fails when some `a(e)` would be 0, i.e. the target height is below that
/// element's growth rate. When the instance carries a witness, the scaled
/// cover `(2/c) lambda` is attached as a density certificate of total weight
/// `2/c`.
pub fn cps_from_cbgt(inst: &CbgtInstance, c: &Rational) -> Result<CpsInstance> {
    if c <= &Rational::zero() {
        return Err(Error::InvalidDescriptor("target height must be positive".into()));
    }
    let n = inst.len();
    let mut periods = Vec::with_capacity(n);
    for e in 0..n {
        let rate = inst.growth.rate(e);
        if rate.is_zero() {
            return Err(Error::ZeroRate(e));
        }
        let a = (c / rate).floor().to_integer();
        let a = u64::try_from(a).unwrap_or(0);
        if a == 0 {
            return Err(Error::TargetHeightTooSmall {
                target: c.to_string(),
                element: e,
            });
        }
        periods.push(a);
    }
    let certificate = inst.witness.as_ref().map(|w| {
        let scale = Rational::from_integer(2.into()) / c;
        DensityCertificate {
            terms: w
                .terms
                .iter()
                .map(|(set, weight)| (set.clone(), weight * &scale))
                .collect(),
        }
    });
    CpsInstance::new(inst.elements.clone(), inst.system.clone(), periods, certificate)
}

/// The density corollary's reduction to trimming: `g(e) = 2 / a(e)`.
///
/// Needs a certificate of density at most 1/2. The doubled cover is trimmed
/// down (elements are dropped from sets, splitting weights) until it
/// generates `g` exactly, so the result is a normalized instance ready for
/// the exact scheduler.
pub fn cbgt_from_cps(cps: &CpsInstance) -> Result<CbgtInstance> {
    let cert = cps.certificate.as_ref().ok_or(Error::WitnessRequired(
        "the schedulability reduction needs a density certificate",
    ))?;
    cps.check_certificate(cert)?;
    let rho = cert.rho();
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    if rho > half {
        return Err(Error::InvalidGrowth(format!(
            "certificate density {rho} exceeds 1/2"
        )));
    }
    let n = cps.len();
    let growth: Vec<Rational> = cps
        .periods
        .iter()
        .map(|&a| Rational::new(BigInt::from(2), BigInt::from(a)))
        .collect();
    if let Some(e) = growth.iter().position(|g| g > &Rational::one()) {
        return Err(Error::InvalidGrowth(format!(
            "period of element {e} is below 2; no height-2 reduction exists"
        )));
    }

    // Double the cover, then cancel each element's excess coverage exactly by
    // moving weight onto the set minus that element (still independent by
    // downward closure). Pad with the empty set to reach total weight 1.
    let two = Rational::from_integer(2.into());
    let mut terms: Vec<(BTreeSet<usize>, Rational)> = cert
        .terms
        .iter()
        .map(|(set, w)| (set.clone(), w * &two))
        .collect();
    for e in 0..n {
        let coverage: Rational = terms
            .iter()
            .filter(|(set, _)| set.contains(&e))
            .map(|(_, w)| w)
            .sum();
        let mut excess = coverage - &growth[e];
        debug_assert!(!excess.is_negative());
        let mut idx = 0;
        while excess.is_positive() && idx < terms.len() {
            if terms[idx].0.contains(&e) && terms[idx].1.is_positive() {
                let delta = excess.clone().min(terms[idx].1.clone());
                terms[idx].1 -= &delta;
                let mut reduced = terms[idx].0.clone();
                reduced.remove(&e);
                terms.push((reduced, delta.clone()));
                excess -= delta;
            }
            idx += 1;
        }
        debug_assert!(excess.is_zero());
    }
    terms.retain(|(_, w)| w.is_positive());
    let total: Rational = terms.iter().map(|(_, w)| w).sum();
    let slack = Rational::one() - total;
    debug_assert!(!slack.is_negative());
    if slack.is_positive() {
        terms.push((BTreeSet::new(), slack));
    }
    // Merge duplicate sets for a tidy witness.
    let mut merged: std::collections::BTreeMap<BTreeSet<usize>, Rational> = Default::default();
    for (set, w) in terms {
        *merged.entry(set).or_insert_with(Rational::zero) += w;
    }
    let witness = ConvexCombination::new(merged.into_iter().collect())?;
    CbgtInstance::new(
        cps.elements.clone(),
        cps.system.clone(),
        GrowthVector::new(growth)?,
        Some(witness),
    )
}

/// Outcome of a pinwheel verification.
#[derive(Debug, Clone)]
pub struct PinwheelVerdict {
    pub satisfied: bool,
    /// `(element, recurrence, period)` for each violated element.
    pub violations: Vec<(usize, Option<usize>, u64)>,
}

/// Checks a periodic schedule against the periods: element `e` must occur in
/// every window of `a(e)` consecutive days, equivalently its recurrence time
/// over the infinite repetition is at most `a(e)`.
pub fn verify_pinwheel(cps: &CpsInstance, sched: &Schedule) -> Result<PinwheelVerdict> {
    if !sched.periodic {
        return Err(Error::Schedule(
            "pinwheel verification needs a periodic schedule".into(),
        ));
    }
    sched.check_ground(cps.len())?;
    let period = sched.core.len();
    if period == 0 {
        return Err(Error::Schedule("periodic schedule with empty core".into()));
    }
    let mut violations = Vec::new();
    for e in 0..cps.len() {
        let positions: Vec<usize> = (1..=period)
            .filter(|&t| sched.core[t - 1].contains(&e))
            .collect();
        let recurrence = if positions.is_empty() {
            None
        } else {
            let mut gamma = positions[0] + period - positions[positions.len() - 1];
            for pair in positions.windows(2) {
                gamma = gamma.max(pair[1] - pair[0]);
            }
            Some(gamma)
        };
        let ok = recurrence.is_some_and(|g| g as u64 <= cps.periods[e]);
        if !ok {
            violations.push((e, recurrence, cps.periods[e]));
        }
    }
    Ok(PinwheelVerdict {
        satisfied: violations.is_empty(),
        violations,
    })
}

/// Literal window scan over two concatenated periods; used to cross-check
/// [`verify_pinwheel`] where the window length permits.
pub fn window_scan(cps: &CpsInstance, sched: &Schedule) -> Result<bool> {
    let period = sched.core.len();
    for e in 0..cps.len() {
        let a = cps.periods[e] as usize;
        if a > 2 * period {
            return Err(Error::Schedule(format!(
                "window of element {e} is longer than two periods"
            )));
        }
        for start in 1..=period {
            let covered = (start..start + a).any(|t| {
                sched.core[(t - 1) % period].contains(&e)
            });
            if !covered {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Exact schedulability search

/// Decision of the schedulability search.
#[derive(Debug, Clone)]
pub struct SchedulabilityDecision {
    pub schedulable: bool,
    /// A periodic schedule realizing the periods, when one exists.
    pub witness: Option<Schedule>,
}

/// Exhaustive schedulability decision.
///
/// Explores the graph of urgency states (days since each element's last
/// cut, starting fresh) under inclusion-maximal cuts; the instance is
/// schedulable iff a directed cycle is reachable, and the cycle's cuts form a
/// valid periodic witness. Refuses when the state space `prod a(e)` exceeds
/// the budget.
pub fn decide_schedulable(cps: &CpsInstance, budget: u128) -> Result<SchedulabilityDecision> {
    let n = cps.len();
    if n == 0 {
        return Ok(SchedulabilityDecision {
            schedulable: true,
            witness: Some(Schedule::periodic(vec![BTreeSet::new()])),
        });
    }
    let mut states: u128 = 1;
    for &a in &cps.periods {
        states = states.saturating_mul(a as u128);
        if states > budget {
            return Err(Error::StateSpaceTooLarge {
                size: states,
                budget,
            });
        }
    }
    let cuts = maximal_independent_sets(&cps.system, n)?;

    // Iterative DFS with tricolor marking; a back edge to the active path is
    // a reachable cycle.
    const WHITE: u8 = 0;
    const GRAY: u8 = 1;
    const BLACK: u8 = 2;
    let start = vec![0u32; n];
    let mut color: HashMap<Vec<u32>, u8> = HashMap::new();
    // (state, next cut index to try); parallel to the gray path.
    let mut stack: Vec<(Vec<u32>, usize)> = vec![(start.clone(), 0)];
    let mut path_cuts: Vec<usize> = Vec::new();
    color.insert(start, GRAY);

    while let Some((state, cut_idx)) = stack.last().cloned() {
        if cut_idx >= cuts.len() {
            color.insert(state.clone(), BLACK);
            stack.pop();
            path_cuts.pop();
            continue;
        }
        stack.last_mut().expect("nonempty").1 += 1;
        let Some(next) = apply_cut(&state, &cuts[cut_idx], &cps.periods) else {
            continue;
        };
        match color.get(&next).copied().unwrap_or(WHITE) {
            GRAY => {
                // Cycle: from the occurrence of `next` on the path to here.
                path_cuts.push(cut_idx);
                let at = stack
                    .iter()
                    .position(|(s, _)| s == &next)
                    .expect("gray state is on the path");
                let core: Vec<BTreeSet<usize>> = path_cuts[at..]
                    .iter()
                    .map(|&c| cuts[c].clone())
                    .collect();
                return Ok(SchedulabilityDecision {
                    schedulable: true,
                    witness: Some(Schedule::periodic(core)),
                });
            }
            WHITE => {
                color.insert(next.clone(), GRAY);
                stack.push((next, 0));
                path_cuts.push(cut_idx);
            }
            _ => {}
        }
    }
    Ok(SchedulabilityDecision {
        schedulable: false,
        witness: None,
    })
}

/// Successor state under a cut; `None` when some element overruns its period.
fn apply_cut(state: &[u32], cut: &BTreeSet<usize>, periods: &[u64]) -> Option<Vec<u32>> {
    let mut next = Vec::with_capacity(state.len());
    for (e, &u) in state.iter().enumerate() {
        if cut.contains(&e) {
            next.push(0);
        } else if (u + 1) as u64 > periods[e] - 1 {
            return None;
        } else {
            next.push(u + 1);
        }
    }
    Some(next)
}

// ---------------------------------------------------------------------------
// Density

/// Result of a density computation.
#[derive(Debug, Clone)]
pub struct DensityResult {
    pub rho: Rational,
    pub certificate: DensityCertificate,
    /// False when the closed form was used instead of the simplex.
    pub via_lp: bool,
}

/// Minimum total weight of a fractional cover of the rates `1/a(e)`.
///
/// 1-uniform systems use the closed form `sum 1/a(e)`. Explicit systems run
/// the exact simplex over the generator columns; matroids under the size
/// guard enumerate their bases as columns. Anything larger is refused
/// (certificate checking stays available).
pub fn density(cps: &CpsInstance) -> Result<DensityResult> {
    let n = cps.len();
    if let SetSystemDescriptor::Uniform { k: 1 } = cps.system {
        let terms: Vec<(BTreeSet<usize>, Rational)> = (0..n)
            .map(|e| {
                (
                    BTreeSet::from([e]),
                    Rational::new(BigInt::one(), BigInt::from(cps.periods[e])),
                )
            })
            .collect();
        let certificate = DensityCertificate { terms };
        return Ok(DensityResult {
            rho: certificate.rho(),
            certificate,
            via_lp: false,
        });
    }
    let columns = match &cps.system {
        SetSystemDescriptor::Explicit { .. } => maximal_independent_sets(&cps.system, n)?,
        _ if n <= EXPLICIT_SIZE_GUARD => maximal_independent_sets(&cps.system, n)?,
        _ => {
            return Err(Error::Unsupported {
                op: "density beyond the enumeration guards (use certificate checking)",
            })
        }
    };
    let requirements: Vec<Rational> = cps
        .periods
        .iter()
        .map(|&a| Rational::new(BigInt::one(), BigInt::from(a)))
        .collect();
    let (rho, weights) = solve_min_cover(&columns, &requirements)?;
    let terms = columns
        .into_iter()
        .zip(weights)
        .filter(|(_, w)| w.is_positive())
        .collect();
    let certificate = DensityCertificate { terms };
    cps.check_certificate(&certificate)?;
    Ok(DensityResult {
        rho,
        certificate,
        via_lp: true,
    })
}

/// Exact-rational covering LP: minimize the total weight over columns
/// subject to per-element coverage requirements.
///
/// Two-phase dense simplex with Bland's rule, so every pivot is exact and
/// termination is guaranteed.
pub fn solve_min_cover(
    columns: &[BTreeSet<usize>],
    requirements: &[Rational],
) -> Result<(Rational, Vec<Rational>)> {
    let rows = requirements.len();
    let m = columns.len();
    for (e, req) in requirements.iter().enumerate() {
        if req.is_positive() && !columns.iter().any(|c| c.contains(&e)) {
            return Err(Error::UncoverableElement(e));
        }
    }

    // Variables: m column weights, `rows` surplus, `rows` artificial.
    // Constraint row e:  sum_{j: e in I_j} x_j - s_e + a_e = req_e.
    let total_vars = m + 2 * rows;
    let mut tableau: Vec<Vec<Rational>> = Vec::with_capacity(rows);
    let mut basis: Vec<usize> = Vec::with_capacity(rows);
    for e in 0..rows {
        let mut row = vec![Rational::zero(); total_vars + 1];
        for (j, col) in columns.iter().enumerate() {
            if col.contains(&e) {
                row[j] = Rational::one();
            }
        }
        row[m + e] = -Rational::one();
        row[m + rows + e] = Rational::one();
        row[total_vars] = requirements[e].clone();
        tableau.push(row);
        basis.push(m + rows + e);
    }

    // Phase 1: drive artificials to zero.
    let phase1_cost = |j: usize| -> Rational {
        if j >= m + rows {
            Rational::one()
        } else {
            Rational::zero()
        }
    };
    simplex(&mut tableau, &mut basis, total_vars, &phase1_cost, None)?;
    let phase1_value: Rational = basis
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            if b >= m + rows {
                tableau[i][total_vars].clone()
            } else {
                Rational::zero()
            }
        })
        .sum();
    if !phase1_value.is_zero() {
        return Err(Error::InternalInconsistency(
            "covering LP infeasible despite coverage pre-check".into(),
        ));
    }
    // Degenerate leftover artificials: pivot them out or drop their rows.
    let mut row = 0;
    while row < tableau.len() {
        if basis[row] >= m + rows {
            let pivot_col = (0..m + rows).find(|&j| !tableau[row][j].is_zero());
            match pivot_col {
                Some(j) => {
                    pivot(&mut tableau, &mut basis, row, j, total_vars);
                }
                None => {
                    tableau.remove(row);
                    basis.remove(row);
                    continue;
                }
            }
        }
        row += 1;
    }

    // Phase 2: minimize the total column weight, artificials forbidden.
    let phase2_cost = |j: usize| -> Rational {
        if j < m {
            Rational::one()
        } else {
            Rational::zero()
        }
    };
    simplex(&mut tableau, &mut basis, total_vars, &phase2_cost, Some(m + rows))?;

    let mut weights = vec![Rational::zero(); m];
    for (i, &b) in basis.iter().enumerate() {
        if b < m {
            weights[b] = tableau[i][total_vars].clone();
        }
    }
    let rho = weights.iter().sum();
    Ok((rho, weights))
}

/// Bland-rule phase on an equality-form tableau: entering = lowest-index
/// variable with negative reduced cost, leaving = lowest-index minimum
/// ratio. `forbidden_from` blocks a suffix of variables from entering.
fn simplex(
    tableau: &mut Vec<Vec<Rational>>,
    basis: &mut Vec<usize>,
    total_vars: usize,
    cost: &dyn Fn(usize) -> Rational,
    forbidden_from: Option<usize>,
) -> Result<()> {
    loop {
        let limit = forbidden_from.unwrap_or(total_vars);
        let mut entering = None;
        for j in 0..limit {
            if basis.contains(&j) {
                continue;
            }
            // Reduced cost: c_j - sum_i c_basis(i) * T[i][j].
            let mut reduced = cost(j);
            for (i, &b) in basis.iter().enumerate() {
                let cb = cost(b);
                if !cb.is_zero() && !tableau[i][j].is_zero() {
                    reduced -= cb * &tableau[i][j];
                }
            }
            if reduced.is_negative() {
                entering = Some(j);
                break;
            }
        }
        let Some(j) = entering else { return Ok(()) };
        let mut leaving: Option<(usize, Rational)> = None;
        for i in 0..tableau.len() {
            if tableau[i][j].is_positive() {
                let ratio = &tableau[i][total_vars] / &tableau[i][j];
                let better = match &leaving {
                    None => true,
                    Some((li, lr)) => {
                        ratio < *lr || (ratio == *lr && basis[i] < basis[*li])
                    }
                };
                if better {
                    leaving = Some((i, ratio));
                }
            }
        }
        let Some((i, _)) = leaving else {
            return Err(Error::InternalInconsistency(
                "covering LP unbounded, which a covering objective forbids".into(),
            ));
        };
        pivot(tableau, basis, i, j, total_vars);
    }
}

fn pivot(
    tableau: &mut [Vec<Rational>],
    basis: &mut [usize],
    row: usize,
    col: usize,
    total_vars: usize,
) {
    let denom = tableau[row][col].clone();
    for j in 0..=total_vars {
        tableau[row][j] /= &denom;
    }
    for i in 0..tableau.len() {
        if i == row || tableau[i][col].is_zero() {
            continue;
        }
        let factor = tableau[i][col].clone();
        for j in 0..=total_vars {
            let delta = &factor * &tableau[row][j];
            tableau[i][j] -= delta;
        }
    }
    basis[row] = col;
}
