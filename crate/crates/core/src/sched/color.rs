//! Rainbow-circuit-free colorings for graphic and laminar matroids, composed
//! with one single-tree Fuse-Unfuse stream per color class.
//!
//! A coloring is rainbow-circuit-free when any set picking at most one
//! element per color is independent, so cutting one element per class each
//! day is always valid. The colorings built here additionally bound each
//! class's total growth (below `2 - 2/n` for graphic, at most 2 for laminar),
//! which caps the composed schedule's height below 4.

use std::collections::BTreeSet;

use num_traits::Zero;

use crate::error::Error;
use crate::model::{CbgtInstance, Rational, Schedule};
use crate::sched::fun::{FusionForest, FunStream};
use crate::set_systems::{is_independent, SetSystemDescriptor};
use crate::Result;

/// An element coloring together with each class's total growth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coloring {
    /// Color index per element id.
    pub color: Vec<usize>,
    /// Total growth per color class.
    pub class_growth: Vec<Rational>,
}

impl Coloring {
    pub fn class_count(&self) -> usize {
        self.class_growth.len()
    }

    /// Element ids per color class.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut classes = vec![Vec::new(); self.class_growth.len()];
        for (e, &c) in self.color.iter().enumerate() {
            classes[c].push(e);
        }
        classes
    }
}

/// Vertex-elimination coloring of a graphic matroid.
///
/// Repeatedly removes the vertex of minimum incident growth (ties by vertex
/// id) and colors its incident edges in the residual graph with a fresh
/// color. Each class is a star, so the coloring is rainbow-circuit-free, and
/// on a valid instance each class's growth is at most `2 - 2/n`.
pub fn graphic_coloring(inst: &CbgtInstance) -> Result<Coloring> {
    let SetSystemDescriptor::Graphic { vertices, ref edges } = inst.system else {
        return Err(Error::Unsupported {
            op: "graphic_coloring on a non-graphic descriptor",
        });
    };
    let n = inst.len();
    let mut vertex_alive = vec![true; vertices];
    let mut edge_colored = vec![false; n];
    let mut color = vec![usize::MAX; n];
    let mut class_growth = Vec::new();

    for _ in 0..vertices {
        let mut best: Option<(Rational, usize)> = None;
        for v in 0..vertices {
            if !vertex_alive[v] {
                continue;
            }
            let incident_growth: Rational = (0..n)
                .filter(|&e| !edge_colored[e] && (edges[e].0 == v || edges[e].1 == v))
                .map(|e| inst.growth.rate(e))
                .sum();
            if best.as_ref().map_or(true, |(g, _)| incident_growth < *g) {
                best = Some((incident_growth, v));
            }
        }
        let Some((_, v)) = best else { break };
        vertex_alive[v] = false;
        let star: Vec<usize> = (0..n)
            .filter(|&e| !edge_colored[e] && (edges[e].0 == v || edges[e].1 == v))
            .collect();
        if star.is_empty() {
            continue;
        }
        let class = class_growth.len();
        let growth = star.iter().map(|&e| inst.growth.rate(e)).sum();
        for e in star {
            edge_colored[e] = true;
            color[e] = class;
        }
        class_growth.push(growth);
    }
    debug_assert!(edge_colored.iter().all(|&c| c));
    Ok(Coloring { color, class_growth })
}

/// Set-fusion coloring of a laminar matroid.
///
/// Processes family sets inclusion-minimal first; while a set holds more
/// fused groups than its cap, the two cheapest groups (rate sum, ties by
/// creation order) are fused. Final groups become the color classes. On a
/// valid instance every class's growth is at most 2.
pub fn laminar_coloring(inst: &CbgtInstance) -> Result<Coloring> {
    let SetSystemDescriptor::Laminar { ref family, ref caps } = inst.system else {
        return Err(Error::Unsupported {
            op: "laminar_coloring on a non-laminar descriptor",
        });
    };
    let n = inst.len();
    // Group per element, with rate and creation index. Elements covered by no
    // family set simply keep their singleton group.
    let mut group_of: Vec<usize> = (0..n).collect();
    let mut group_rate: Vec<Rational> = (0..n).map(|e| inst.growth.rate(e).clone()).collect();

    // Inclusion order: in a laminar family a proper subset is strictly
    // smaller, so size-ascending processing handles children first.
    let mut order: Vec<usize> = (0..family.len()).collect();
    order.sort_by_key(|&i| (family[i].len(), family[i].iter().copied().collect::<Vec<_>>()));

    for i in order {
        let cap = caps[i];
        loop {
            let mut groups: Vec<usize> = family[i].iter().map(|&e| group_of[e]).collect();
            groups.sort_unstable();
            groups.dedup();
            if groups.len() <= cap {
                break;
            }
            // Two cheapest groups by (rate, creation index).
            groups.sort_by(|&a, &b| {
                group_rate[a]
                    .cmp(&group_rate[b])
                    .then_with(|| a.cmp(&b))
            });
            let (first, second) = (groups[0], groups[1]);
            let fused = group_rate.len();
            let rate = group_rate[first].clone() + group_rate[second].clone();
            group_rate.push(rate);
            for g in group_of.iter_mut() {
                if *g == first || *g == second {
                    *g = fused;
                }
            }
        }
    }

    // Fresh colors in order of each group's minimum element.
    let mut first_member = vec![usize::MAX; group_rate.len()];
    for e in 0..n {
        let g = group_of[e];
        if first_member[g] == usize::MAX {
            first_member[g] = e;
        }
    }
    let mut live_groups: Vec<usize> = (0..group_rate.len())
        .filter(|&g| first_member[g] != usize::MAX)
        .collect();
    live_groups.sort_by_key(|&g| first_member[g]);
    let mut color_of_group = vec![usize::MAX; group_rate.len()];
    let mut class_growth = Vec::with_capacity(live_groups.len());
    for (c, &g) in live_groups.iter().enumerate() {
        color_of_group[g] = c;
        class_growth.push(group_rate[g].clone());
    }
    let color: Vec<usize> = (0..n).map(|e| color_of_group[group_of[e]]).collect();

    // The cap condition of the coloring lemma, checked directly.
    for (set, &cap) in family.iter().zip(caps) {
        let distinct: BTreeSet<usize> = set.iter().map(|&e| color[e]).collect();
        assert!(
            distinct.len() <= cap,
            "laminar coloring left {} colors on a set with cap {cap}",
            distinct.len()
        );
    }
    Ok(Coloring { color, class_growth })
}

/// Composition of per-class single-tree Fuse-Unfuse streams.
pub struct ColoredScheduler {
    forests: Vec<FusionForest>,
    system: SetSystemDescriptor,
    ground: usize,
}

impl ColoredScheduler {
    pub fn period(&self) -> usize {
        self.forests.iter().map(|f| f.period()).max().unwrap_or(1)
    }

    pub fn stream(&self) -> ColoredStream<'_> {
        ColoredStream {
            streams: FunStream::new(self.forests.iter().collect()),
            system: &self.system,
            ground: self.ground,
        }
    }

    pub fn periodic_schedule(&self) -> Schedule {
        let mut stream = self.stream();
        let core = (0..self.period()).map(|_| stream.next_cut()).collect();
        Schedule::periodic(core)
    }
}

/// Playback over the composed per-class streams; every emitted cut is checked
/// against the independence oracle.
pub struct ColoredStream<'a> {
    streams: FunStream<'a>,
    system: &'a SetSystemDescriptor,
    ground: usize,
}

impl ColoredStream<'_> {
    pub fn next_cut(&mut self) -> BTreeSet<usize> {
        let cut = self.streams.next_cut();
        let independent =
            is_independent(self.system, &cut, self.ground).expect("cut within ground set");
        assert!(
            independent,
            "rainbow coloring emitted a dependent cut {cut:?}"
        );
        cut
    }
}

/// Builds the composed schedule from a coloring: one 1-uniform Fuse-Unfuse
/// stream per color class. Refuses classes with growth above 2.
pub fn colored_schedule(inst: &CbgtInstance, coloring: &Coloring) -> Result<ColoredScheduler> {
    let two = Rational::from_integer(2.into());
    let four = Rational::from_integer(4.into());
    let mut forests = Vec::new();
    for (class, members) in coloring.classes().iter().enumerate() {
        let growth = &coloring.class_growth[class];
        if growth > &two {
            return Err(Error::InvalidGrowth(format!(
                "color class {class} has growth {growth} > 2"
            )));
        }
        let leaves: Vec<(usize, Rational)> = members
            .iter()
            .filter(|&&e| !inst.growth.rate(e).is_zero())
            .map(|&e| (e, inst.growth.rate(e).clone()))
            .collect();
        if leaves.is_empty() {
            continue;
        }
        let forest = FusionForest::build(&leaves, 1)?;
        for rate in forest.root_rates() {
            assert!(
                rate < four,
                "class {class} fused to rate {rate} >= 4 despite growth {growth} <= 2"
            );
        }
        forests.push(forest);
    }
    Ok(ColoredScheduler {
        forests,
        system: inst.system.clone(),
        ground: inst.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{rational, GrowthVector};
    use crate::simulator::simulate;

    /// The 6-vertex, 10-edge coloring example with g = 1/2 everywhere.
    fn example_graphic() -> CbgtInstance {
        let system = SetSystemDescriptor::Graphic {
            vertices: 6,
            edges: vec![
                (0, 1),
                (0, 5),
                (5, 1),
                (5, 2),
                (5, 4),
                (4, 1),
                (4, 3),
                (1, 2),
                (1, 3),
                (2, 3),
            ],
        };
        let growth = GrowthVector::new(vec![rational(1, 2); 10]).unwrap();
        CbgtInstance::unlabeled(10, system, growth, None).unwrap()
    }

    #[test]
    fn example_coloring_has_five_star_classes() {
        let inst = example_graphic();
        let coloring = graphic_coloring(&inst).unwrap();
        assert_eq!(coloring.class_count(), 5);
        // The unique minimum-growth vertex is v0, so e1 and e2 share color 0.
        assert_eq!(coloring.color[0], 0);
        assert_eq!(coloring.color[1], 0);
        let bound = rational(2, 1) - rational(2, 6);
        for growth in &coloring.class_growth {
            assert!(growth <= &bound, "class growth {growth} exceeds 2 - 2/n");
        }
    }

    #[test]
    fn single_edge_gets_one_class() {
        let system = SetSystemDescriptor::Graphic {
            vertices: 2,
            edges: vec![(0, 1)],
        };
        let growth = GrowthVector::new(vec![rational(1, 2)]).unwrap();
        let inst = CbgtInstance::unlabeled(1, system, growth, None).unwrap();
        let coloring = graphic_coloring(&inst).unwrap();
        assert_eq!(coloring.class_count(), 1);
    }

    #[test]
    fn triangle_coloring_respects_the_bound() {
        let system = SetSystemDescriptor::Graphic {
            vertices: 3,
            edges: vec![(0, 1), (1, 2), (2, 0)],
        };
        let growth = GrowthVector::new(vec![rational(2, 3); 3]).unwrap();
        let inst = CbgtInstance::unlabeled(3, system, growth, None).unwrap();
        let coloring = graphic_coloring(&inst).unwrap();
        assert_eq!(coloring.class_count(), 2);
        // First class: the two edges at the eliminated vertex; 4/3 <= 2 - 2/3.
        assert_eq!(coloring.class_growth[0], rational(4, 3));
        assert_eq!(coloring.class_growth[1], rational(2, 3));
        // Composed schedule stays a forest with height below 4.
        let scheduler = colored_schedule(&inst, &coloring).unwrap();
        let report = simulate(&inst, &scheduler.periodic_schedule(), 8).unwrap();
        assert!(report.valid);
        assert!(report.max_height < rational(4, 1));
    }

    #[test]
    fn laminar_empty_family_keeps_distinct_colors() {
        let system = SetSystemDescriptor::Laminar {
            family: vec![],
            caps: vec![],
        };
        let growth = GrowthVector::new(vec![rational(1, 3); 4]).unwrap();
        let inst = CbgtInstance::unlabeled(4, system, growth, None).unwrap();
        let coloring = laminar_coloring(&inst).unwrap();
        assert_eq!(coloring.class_count(), 4);
    }

    #[test]
    fn laminar_cap_one_fuses_the_whole_set() {
        let system = SetSystemDescriptor::Laminar {
            family: vec![BTreeSet::from([0, 1, 2])],
            caps: vec![1],
        };
        let growth = GrowthVector::new(vec![rational(1, 2); 3]).unwrap();
        let inst = CbgtInstance::unlabeled(3, system, growth, None).unwrap();
        let coloring = laminar_coloring(&inst).unwrap();
        assert_eq!(coloring.class_count(), 1);
        assert_eq!(coloring.class_growth[0], rational(3, 2));
    }

    #[test]
    fn laminar_nested_sets_respect_both_caps() {
        let system = SetSystemDescriptor::Laminar {
            family: vec![BTreeSet::from([0, 1]), BTreeSet::from([0, 1, 2, 3])],
            caps: vec![1, 2],
        };
        let growth = GrowthVector::new(vec![rational(1, 2); 4]).unwrap();
        let inst = CbgtInstance::unlabeled(4, system, growth, None).unwrap();
        let coloring = laminar_coloring(&inst).unwrap();
        assert_eq!(coloring.class_count(), 2);
        assert_eq!(coloring.color[0], coloring.color[1]);
        let two = rational(2, 1);
        for growth in &coloring.class_growth {
            assert!(growth <= &two);
        }
    }

    #[test]
    fn composed_graphic_schedule_is_valid_with_height_below_four() {
        let inst = example_graphic();
        let coloring = graphic_coloring(&inst).unwrap();
        let scheduler = colored_schedule(&inst, &coloring).unwrap();
        let sched = scheduler.periodic_schedule();
        let report = simulate(&inst, &sched, 4 * scheduler.period()).unwrap();
        assert!(report.valid);
        assert!(report.max_height < rational(4, 1));
        // One element per nonempty class each day.
        for cut in &sched.core {
            assert_eq!(cut.len(), 5);
        }
    }

    #[test]
    fn overloaded_class_is_refused() {
        let inst = example_graphic();
        let coloring = Coloring {
            color: vec![0; 10],
            class_growth: vec![rational(5, 1)],
        };
        assert!(colored_schedule(&inst, &coloring).is_err());
    }
}
