use std::time::Instant;
use cbgt_core::generators::{gen_random_normalized, RandomInstanceParams, RandomSystemKind};
use cbgt_core::sched::exact::exact_schedule;
use cbgt_core::io::instance_to_json;

fn main() {
    let kinds = [
        RandomSystemKind::Uniform,
        RandomSystemKind::Partition,
        RandomSystemKind::Graphic,
        RandomSystemKind::Laminar,
        RandomSystemKind::ExplicitBases,
    ];
    let start = Instant::now();
    let mut worst = std::time::Duration::ZERO;
    let mut worst_desc = String::new();
    let mut runs = 0;
    for (ki, kind) in kinds.iter().enumerate() {
        for i in 0..20 {
            let params = RandomInstanceParams {
                kind: *kind,
                elements: 2 + (i % 7),
                denominator: 2 + (i as u64 % 5),
                terms: 1 + (i % 5),
            };
            let seed = (ki as u64) * 1000 + i as u64;
            let inst = gen_random_normalized(&params, seed).unwrap();
            let t = Instant::now();
            match exact_schedule(&inst, 100_000) {
                Ok(result) => {
                    let dt = t.elapsed();
                    runs += 1;
                    if dt > worst {
                        worst = dt;
                        worst_desc = format!("{kind:?} n={} T={} seed={seed}", inst.len(), result.period);
                    }
                    assert!(result.report.valid);
                }
                Err(e) => {
                    println!("FAILED {kind:?} seed={seed}: {e}");
                    println!("{}", instance_to_json(&inst));
                    return;
                }
            }
        }
    }
    println!("{runs} runs in {:?}, worst {:?} ({worst_desc})", start.elapsed(), worst);
}
