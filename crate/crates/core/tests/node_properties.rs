use effadam_core::linalg::{DenseVector, RandomStream};
use effadam_core::node::{HyperParams, Schedule, Server, Worker};
use effadam_core::quantize::QuantizerKind;
use effadam_core::transport::Cluster;
use proptest::prelude::*;

fn kind() -> impl Strategy<Value = QuantizerKind> {
    prop_oneof![
        Just(QuantizerKind::Identity),
        Just(QuantizerKind::ExactIdentity),
        (1u32..=3).prop_map(|k| QuantizerKind::NormUniform { k }),
        Just(QuantizerKind::LogGrid {
            min_exp: -14,
            max_exp: -4
        }),
        Just(QuantizerKind::Terngrad),
        (0.1f64..=1.0).prop_map(|fraction| QuantizerKind::TopK { fraction }),
    ]
}

/// Kinds whose wire format reproduces the quantized vector exactly, so the
/// error-feedback bookkeeping telescopes without binary32 rounding.
fn exact_wire_kind() -> impl Strategy<Value = QuantizerKind> {
    kind().prop_filter("binary32 wire", |k| {
        !matches!(k, QuantizerKind::Identity | QuantizerKind::TopK { .. })
    })
}

fn schedule() -> impl Strategy<Value = Schedule> {
    prop_oneof![Just(Schedule::Constant), Just(Schedule::Horizon)]
}

struct Setup {
    uplink: QuantizerKind,
    downlink: QuantizerKind,
    worker_ef: bool,
    server_ef: bool,
    workers: usize,
    dim: usize,
    hp: HyperParams,
    seed: u64,
}

fn cluster(s: &Setup) -> Cluster {
    let x1 = DenseVector::zeros(s.dim);
    let workers = (0..s.workers)
        .map(|i| {
            Worker::adam(x1.clone(), s.uplink, &s.hp)
                .unwrap()
                .with_error_feedback(s.worker_ef)
                .with_stream(RandomStream::derive(s.seed, 100 + i as u64))
        })
        .collect();
    let server = Server::new(x1, s.downlink)
        .unwrap()
        .with_error_feedback(s.server_ef)
        .with_stream(RandomStream::derive(s.seed, 99));
    Cluster::new(workers, server, s.hp).unwrap()
}

/// Gradients whose scale drifts over several binades from round to round.
fn gradients(stream: &mut RandomStream, workers: usize, dim: usize) -> Vec<DenseVector> {
    let scale = (stream.uniform() * 12.0 - 6.0).exp2();
    (0..workers)
        .map(|_| {
            DenseVector::new((0..dim).map(|_| scale * stream.standard_normal()).collect()).unwrap()
        })
        .collect()
}

fn setup(
    (uplink, downlink): (QuantizerKind, QuantizerKind),
    (worker_ef, server_ef): (bool, bool),
    workers: usize,
    dim: usize,
    schedule: Schedule,
    seed: u64,
) -> Setup {
    Setup {
        uplink,
        downlink,
        worker_ef,
        server_ef,
        workers,
        dim,
        hp: HyperParams::new(
            1e-3,
            0.9,
            if schedule == Schedule::Constant {
                0.99
            } else {
                0.5
            },
            1e-8,
            60,
            schedule,
        )
        .unwrap(),
        seed,
    }
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    diff / b
        .iter()
        .map(|y| y * y)
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn error_feedback_telescopes(
        up in exact_wire_kind(),
        down in exact_wire_kind(),
        workers in 1usize..5,
        dim in 1usize..24,
        sched in schedule(),
        seed in any::<u64>(),
    ) {
        let s = setup((up, down), (true, true), workers, dim, sched, seed);
        let mut c = cluster(&s);
        let mut grads = RandomStream::new(seed);
        let mut sum_avg = vec![0.0; dim];
        let mut sum_raw = vec![0.0; dim];
        for _ in 0..s.hp.horizon {
            let out = c.run_round(&gradients(&mut grads, workers, dim)).unwrap();
            for j in 0..dim {
                sum_avg[j] += out.average[j];
                sum_raw[j] += out.mean_raw_update[j];
            }
            let server: Vec<f64> = c.server.x.iter().zip(c.server.e.iter()).map(|(x, e)| x - e).collect();
            let system: Vec<f64> = server.iter().zip(c.mean_worker_error().iter()).map(|(a, e)| a - e).collect();
            let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<f64>>();
            prop_assert!(rel_err(&server, &neg(&sum_avg)) <= 1e-9);
            prop_assert!(rel_err(&system, &neg(&sum_raw)) <= 1e-9);
        }
    }

    #[test]
    fn iterates_stay_synchronized(
        up in kind(),
        down in kind(),
        worker_ef in any::<bool>(),
        server_ef in any::<bool>(),
        workers in 1usize..5,
        dim in 1usize..24,
        seed in any::<u64>(),
    ) {
        let s = setup((up, down), (worker_ef, server_ef), workers, dim, Schedule::Constant, seed);
        let mut c = cluster(&s);
        let mut grads = RandomStream::new(seed);
        let mut bits = 0;
        for t in 1..=s.hp.horizon {
            let out = c.run_round(&gradients(&mut grads, workers, dim)).unwrap();
            prop_assert!(c.iterate_synced());
            bits += out.trace.per_worker_msgs.iter().map(|m| m.bit_len as u64).sum::<u64>();
            prop_assert_eq!(c.ledger.uplink_bits, bits);
            prop_assert_eq!(c.ledger.rounds, t);
            prop_assert_eq!(out.trace.ledger_snapshot, c.ledger);
            if !worker_ef {
                prop_assert!(c.workers.iter().all(|w| w.e.iter().all(|&e| e == 0.0)));
            }
        }
        // horizon exhausted
        prop_assert!(c.run_round(&gradients(&mut grads, workers, dim)).is_err());
    }

    #[test]
    fn moment_and_log_sum_bounds_hold(
        up in kind(),
        workers in 1usize..4,
        dim in 1usize..24,
        sched in schedule(),
        seed in any::<u64>(),
    ) {
        let s = setup((up, QuantizerKind::ExactIdentity), (true, true), workers, dim, sched, seed);
        let mut c = cluster(&s);
        let mut grads = RandomStream::new(seed);
        let hp = s.hp;
        for t in 1..=hp.horizon {
            c.run_round(&gradients(&mut grads, workers, dim)).unwrap();
            let v_floor = match sched {
                Schedule::Horizon => (1.0 - hp.theta / hp.horizon as f64).powi(t as i32),
                Schedule::Constant => hp.theta.powi(t as i32),
            } * hp.epsilon - 1e-15;
            for w in &c.workers {
                prop_assert!(w.diagnostics.worst_moment_excess <= 1e-12);
                prop_assert!(w.diagnostics.normalized_grad_sum <= w.diagnostics.log_sum_bound(&hp, dim) + 1e-6);
                prop_assert!(w.v.iter().all(|&v| v >= v_floor));
            }
        }
    }

    #[test]
    fn identical_setups_give_identical_traces(
        up in kind(),
        down in kind(),
        workers in 1usize..4,
        dim in 1usize..16,
        seed in any::<u64>(),
    ) {
        let s = setup((up, down), (true, true), workers, dim, Schedule::Constant, seed);
        let (mut a, mut b) = (cluster(&s), cluster(&s));
        let (mut ga, mut gb) = (RandomStream::new(seed), RandomStream::new(seed));
        for _ in 0..20 {
            let ta = a.run_round(&gradients(&mut ga, workers, dim)).unwrap().trace;
            let tb = b.run_round(&gradients(&mut gb, workers, dim)).unwrap().trace;
            prop_assert_eq!(ta, tb);
        }
    }

    #[test]
    fn exact_identity_cluster_is_serial_adam(workers in 1usize..6, dim in 1usize..16, seed in any::<u64>()) {
        let s = setup(
            (QuantizerKind::ExactIdentity, QuantizerKind::ExactIdentity),
            (true, true),
            workers,
            dim,
            Schedule::Constant,
            seed,
        );
        let hp = s.hp;
        let mut c = cluster(&s);
        let mut grads = RandomStream::new(seed);
        let mut m = vec![vec![0.0; dim]; workers];
        let mut v = vec![vec![hp.epsilon; dim]; workers];
        let mut x = vec![0.0; dim];
        for _ in 0..hp.horizon {
            let g = gradients(&mut grads, workers, dim);
            c.run_round(&g).unwrap();
            let mut sum = vec![0.0; dim];
            for i in 0..workers {
                for j in 0..dim {
                    let gj = g[i][j];
                    v[i][j] = hp.theta * v[i][j] + (1.0 - hp.theta) * (gj * gj);
                    m[i][j] = hp.beta * m[i][j] + (1.0 - hp.beta) * gj;
                    sum[j] += hp.alpha * m[i][j] / v[i][j].sqrt();
                }
            }
            for j in 0..dim {
                x[j] -= sum[j] / workers as f64;
            }
            let same = x.iter().zip(c.x().iter()).all(|(a, b)| a.to_bits() == b.to_bits());
            prop_assert!(same);
        }
    }
}
