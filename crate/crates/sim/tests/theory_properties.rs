mod oracle;

use effadam_core::node::{HyperParams, Schedule};
use effadam_core::quantize::{contract_of, Provenance, QuantizerContract, QuantizerKind};
use effadam_core::theory::{self, BoundForm, TheoryInputs};
use effadam_sim::config::{OptimizerChoice, QuantizerChoice, ScheduleChoice};
use effadam_sim::theory_report::{estimate, Overrides};
use effadam_sim::{run, Algo, RunConfig};
use oracle::{ceil_close, rel_close, Oracle};
use proptest::prelude::*;

const LOG_GRID: QuantizerKind = QuantizerKind::LogGrid {
    min_exp: -17,
    max_exp: -11,
};

/// The documented tuple: the toy problem's scale with the LogGrid contract
/// at d = 500.
fn log_grid_tuple() -> TheoryInputs {
    let c = contract_of(&LOG_GRID, 500).unwrap();
    TheoryInputs {
        g_bound: 350.0,
        lipschitz: 4000.0,
        f_gap: 52.0,
        dim: 500,
        hp: HyperParams::new(1e-4, 0.9, 0.99, 1e-8, 5000, Schedule::Horizon).unwrap(),
        contract_w: c,
        contract_s: c,
        workers: 10,
        target: 1.0,
    }
}

fn contract() -> impl Strategy<Value = QuantizerContract> {
    (0.01f64..=1.0, prop_oneof![Just(0.0), 1e-8f64..1.0])
        .prop_map(|(d, dp)| QuantizerContract::new(d, dp, Provenance::Analytic).unwrap())
}

fn inputs() -> impl Strategy<Value = TheoryInputs> {
    (
        (1e-2f64..1e3, 1e-2f64..1e4, 1e-3f64..1e3, 1usize..2000),
        (
            1e-5f64..1e-1,
            0.0f64..0.95,
            0.01f64..0.99,
            1e-10f64..1e-2,
            10u64..1_000_000,
        ),
        (contract(), contract(), 1e-4f64..1.0),
    )
        .prop_filter_map(
            "gamma below one",
            |((g, l, f, d), (a, b, th, e, t), (cw, cs, target))| {
                let inp = TheoryInputs {
                    g_bound: g,
                    lipschitz: l,
                    f_gap: f,
                    dim: d,
                    hp: HyperParams::new(a, b, th, e, t, Schedule::Horizon).ok()?,
                    contract_w: cw,
                    contract_s: cs,
                    workers: 10,
                    target,
                };
                inp.validate().ok().map(|_| inp)
            },
        )
}

#[test]
fn log_grid_tuple_matches_extended_precision() {
    let inp = log_grid_tuple();
    let r = theory::constants(&inp).unwrap();
    let exact = Oracle::new().evaluate(&inp);
    assert!(rel_close(r.error_floor, &exact.floor, 1e-10));
    assert!(r.error_floor > 0.0);
    assert!(rel_close(r.c1, &exact.c1, 1e-10));
    assert!(rel_close(r.c2, &exact.c2, 1e-10));
    assert!(rel_close(r.c3, &exact.c3, 1e-10));
    assert!(rel_close(r.c4, &exact.c4, 1e-10));
    assert!(ceil_close(r.t_bound_corollary, &exact.t_corollary, 1e-10));
    assert!(ceil_close(r.t_bound, &exact.t_theorem, 1e-10));
    let bits = theory::bits_bound(&inp, Some(&LOG_GRID)).unwrap();
    assert!(rel_close(bits.c5, exact.c5.as_ref().unwrap(), 1e-10));
    assert_eq!(bits.codec_bits, Some(2000));
}

#[test]
fn c4_is_c2_at_half_contracts() {
    let mut inp = log_grid_tuple();
    let half = QuantizerContract::new(0.5, 0.0, Provenance::Analytic).unwrap();
    inp.contract_w = half;
    inp.contract_s = half;
    let r = theory::constants(&inp).unwrap();
    assert_eq!(r.c2, r.c4);
}

/// Direction check only: at the bound's horizon, runs with a compressor on
/// a small toy problem reach the target in at least 90% of seeds. The
/// bound is loose by about twelve orders of magnitude at this scale.
#[test]
fn simulated_runs_reach_the_target_at_the_bound() {
    let rounds = 2000;
    let mut hits = 0;
    for seed in 1..=20 {
        let config = RunConfig {
            algo: Algo::Custom,
            optimizer: Some(OptimizerChoice::Adam),
            uplink: Some(QuantizerChoice::TopK),
            downlink: Some(QuantizerChoice::TopK),
            error_feedback: Some(true),
            schedule: ScheduleChoice::Horizon,
            alpha: 1.0,
            rounds,
            dim: 8,
            workers: 4,
            case_seed: seed,
            noise_seed: seed,
            ..RunConfig::default()
        };
        let inp = estimate(&config, 1.0, Overrides::default()).unwrap().inputs;
        assert_eq!(theory::error_floor(&inp).unwrap(), 0.0);
        // smallest target on a fine geometric ladder whose bound fits the run
        let mut eps = 1e-12;
        while theory::iteration_bound(&inp, eps, BoundForm::Theorem).unwrap() > rounds as f64 {
            eps *= 1.01;
        }
        let best = run(&config)
            .unwrap()
            .iter()
            .map(|r| r.grad_norm_sq)
            .fold(f64::INFINITY, f64::min);
        if best <= eps {
            hits += 1;
        }
    }
    assert!(hits >= 18, "{hits}/20 runs reached the target");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn bound_scales_as_inverse_square_of_accuracy(inp in inputs()) {
        let t1 = theory::iteration_bound(&inp, inp.target, BoundForm::Theorem).unwrap();
        let t2 = theory::iteration_bound(&inp, inp.target / 2.0, BoundForm::Theorem).unwrap();
        // below ~1e4 the rounding up dominates the ratio
        prop_assume!(t1 > 1e4);
        let ratio = t2 / t1;
        prop_assert!((3.99..=4.01).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn bound_is_nonincreasing_in_accuracy(inp in inputs()) {
        for form in [BoundForm::Theorem, BoundForm::Corollary] {
            let mut last = f64::INFINITY;
            for k in 0..12 {
                let t = theory::iteration_bound(&inp, inp.target * 1.7f64.powi(k - 6), form).unwrap();
                prop_assert!(t <= last);
                last = t;
            }
        }
    }

    #[test]
    fn floor_is_linear_in_worker_offset(inp in inputs(), k in 0.5f64..4.0) {
        let mut zero = inp;
        zero.contract_w.delta_prime = 0.0;
        let mut scaled = inp;
        scaled.contract_w.delta_prime = inp.contract_w.delta_prime * k;
        let base = theory::error_floor(&zero).unwrap();
        let f1 = theory::error_floor(&inp).unwrap() - base;
        let fk = theory::error_floor(&scaled).unwrap() - base;
        prop_assert!((fk - k * f1).abs() <= 1e-9 * (fk.abs() + base.abs()) + f64::MIN_POSITIVE);
    }

    #[test]
    fn compressors_have_no_floor(inp in inputs()) {
        let mut c = inp;
        c.contract_w.delta_prime = 0.0;
        c.contract_s.delta_prime = 0.0;
        prop_assert_eq!(theory::error_floor(&c).unwrap(), 0.0);
    }

    #[test]
    fn doubling_the_dimension_more_than_doubles_c5(inp in inputs()) {
        let mut big = inp;
        big.dim *= 2;
        if let (Ok(a), Ok(b)) = (theory::bits_bound(&inp, None), theory::bits_bound(&big, None)) {
            prop_assert!(b.c5 > 2.0 * a.c5);
        }
    }

    #[test]
    fn all_constants_are_positive_and_finite(inp in inputs()) {
        let r = theory::constants(&inp).unwrap();
        for v in [r.c1, r.c2, r.c3, r.c4, r.t_bound, r.t_bound_corollary] {
            prop_assert!(v.is_finite() && v > 0.0, "{r:?}");
        }
        prop_assert!(r.error_floor >= 0.0 && r.error_floor.is_finite());
        prop_assert!(r.c1 >= 1.0);
    }
}
