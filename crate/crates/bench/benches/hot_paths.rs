use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use smirl_core::agent::{policy_act, ppo_update, value, Batch, Transition};
use smirl_core::env::DayEnvironment;
use smirl_core::sampler::sample_fixed_l1;
use smirl_core::{
    EntropyTracker, EnvConfig, Environment, PolicyParams, PpoConfig, PriceVector, SmirlBuffer, SmirlConfig,
};

fn day(rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..10).map(|_| rng.gen_range(0.0..1.0)).collect()
}

fn smirl_buffer(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut buf = SmirlBuffer::new(10, &SmirlConfig::default());
    for _ in 0..100 {
        buf.update(&day(&mut rng)).unwrap();
    }
    let obs = day(&mut rng);
    c.bench_function("smirl_update", |b| {
        b.iter(|| buf.clone().update(black_box(&obs)).unwrap())
    });
    c.bench_function("smirl_reward", |b| {
        b.iter(|| buf.reward(black_box(&obs)).unwrap())
    });
}

fn entropy(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut t = EntropyTracker::new(EntropyTracker::DEFAULT_WINDOW);
    for _ in 0..100 {
        t.push(&day(&mut rng));
    }
    c.bench_function("sample_entropy_window_100", |b| {
        b.iter(|| black_box(&t).sample_entropy())
    });
}

fn policy(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let params = PolicyParams::new(31, 10, 64, 0.0, &mut rng);
    let features: Vec<f64> = (0..31).map(|_| rng.gen_range(-1.0..1.0)).collect();
    c.bench_function("policy_act", |b| {
        b.iter(|| policy_act(&params, black_box(&features), 10.0, &mut rng))
    });
    c.bench_function("value", |b| b.iter(|| value(&params, black_box(&features))));
}

fn env_step(c: &mut Criterion) {
    let mut env = Environment::new(EnvConfig::default(), 0).unwrap();
    env.reset();
    let p = PriceVector((0..10).map(|i| i as f64).collect());
    c.bench_function("env_step", |b| b.iter(|| env.step(black_box(&p)).unwrap()));
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    c.bench_function("sample_fixed_l1", |b| {
        b.iter(|| sample_fixed_l1(10, 10.0, &mut rng))
    });
}

fn update(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = PpoConfig::default();
    let params = PolicyParams::new(31, 10, cfg.hidden, 0.0, &mut rng);
    let transitions: Vec<Transition> = (0..cfg.batch_size)
        .map(|i| {
            let obs: Vec<f64> = (0..31).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let s = policy_act(&params, &obs, 10.0, &mut rng);
            Transition {
                value: value(&params, &obs),
                obs,
                raw_action: s.raw_action,
                action: s.action,
                logprob: s.logprob,
                r_combined: rng.gen_range(0.0..0.7),
                r_energy: 0.0,
                r_smirl: 0.0,
                done: i % 30 == 29,
            }
        })
        .collect();
    let batch = Batch::new(transitions, 0.0, &cfg).unwrap();
    let mut group = c.benchmark_group("ppo");
    group.sample_size(10);
    group.bench_function("update_batch_256", |b| {
        b.iter_batched(
            || params.clone(),
            |mut p| ppo_update(&mut p, &batch, &cfg, &mut rng).unwrap(),
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

criterion_group!(benches, smirl_buffer, entropy, policy, env_step, update);
criterion_main!(benches);
