//! Throughput of the round loop for the main policy variants.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use banker_omd::environment::{ActionChoice, DelaySchedule, Environment, LossModel};
use banker_omd::ledger::AllocationRule;
use banker_omd::{MabPolicy, MabVariant};

fn run_rounds(variant: MabVariant, k: usize, t: u64, delay: u64) {
    let model = LossModel::Bernoulli {
        means: (0..k).map(|i| 0.2 + 0.6 * i as f64 / k as f64).collect(),
    };
    let mut env = Environment::new(
        &model,
        &DelaySchedule::UniformConst { d: delay },
        t,
        7,
    )
    .unwrap();
    let mut policy = MabPolicy::new(variant, k, t, AllocationRule::Greedy, None, 7).unwrap();
    for round in 1..=t {
        let events = env.release(round);
        policy.ingest(&events).unwrap();
        let (_, arm) = policy.decide(round).unwrap();
        env.play(round, &ActionChoice::Arm(arm)).unwrap();
    }
}

fn bench_policies(c: &mut Criterion) {
    let mut group = c.benchmark_group("rounds");
    for (name, variant) in [
        ("tinf", MabVariant::Tinf { prefactor: 1.0 }),
        ("sftinf", MabVariant::Sftinf),
        ("sflbinf", MabVariant::Sflbinf),
    ] {
        for delay in [0u64, 16] {
            group.bench_with_input(
                BenchmarkId::new(name, delay),
                &delay,
                |b, &d| b.iter(|| run_rounds(variant, 8, 2000, d)),
            );
        }
    }
    group.finish();
}

criterion_group!(benches, bench_policies);
criterion_main!(benches);
