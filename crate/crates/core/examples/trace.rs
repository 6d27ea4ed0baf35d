use cbgt_core::generators::{gen_random_normalized, RandomInstanceParams, RandomSystemKind};
use cbgt_core::model::strip_zero_rate;
use cbgt_core::sched::exact::{cut_windows, normalize_full_rank};
use cbgt_core::model::lcm_of_denominators;

fn main() {
    let params = RandomInstanceParams {
        kind: RandomSystemKind::Laminar,
        elements: 2 + (19 % 7),
        denominator: 2 + (19u64 % 5),
        terms: 1 + (19 % 5),
    };
    let inst = gen_random_normalized(&params, 3019).unwrap();
    let normalized = normalize_full_rank(&inst).unwrap();
    let (stripped, removed) = strip_zero_rate(&normalized).unwrap();
    println!("removed: {:?}", removed.iter().map(|e| e.id).collect::<Vec<_>>());
    println!("system: {:?}", stripped.system);
    println!("rates: {:?}", stripped.growth.rates().iter().map(|r| r.to_string()).collect::<Vec<_>>());
    let lcm = lcm_of_denominators(&stripped.growth).unwrap();
    println!("T = {}, cuts = {:?}", lcm.period, lcm.cuts_per_period);
    for (e, rate) in stripped.growth.rates().iter().enumerate() {
        let w = cut_windows(rate, lcm.period);
        println!("e{e} windows: {:?}", w.iter().map(|w| (w.lo, w.hi)).collect::<Vec<_>>());
    }
}
