//! Independent 256-bit evaluation of the bound formulas with astro-float.
//!
//! Written straight from the formulas, sharing no code with
//! `effadam_core::theory`; every input is converted exactly from its binary64
//! value. Shared by several test targets, each using a subset.
#![allow(dead_code)]

use astro_float::{BigFloat, Consts, RoundingMode};
use effadam_core::theory::TheoryInputs;

const P: usize = 256;
const RM: RoundingMode = RoundingMode::ToEven;

pub struct Oracle {
    cc: Consts,
}

/// Exact values; the iteration bounds are before rounding up.
pub struct Values {
    pub c1: BigFloat,
    pub c2: BigFloat,
    pub c3: BigFloat,
    pub c4: BigFloat,
    pub c5: Option<BigFloat>,
    pub t_theorem: BigFloat,
    pub t_corollary: BigFloat,
    pub floor: BigFloat,
}

fn f(x: f64) -> BigFloat {
    BigFloat::from_f64(x, P)
}

fn add(a: &BigFloat, b: &BigFloat) -> BigFloat {
    a.add(b, P, RM)
}
fn sub(a: &BigFloat, b: &BigFloat) -> BigFloat {
    a.sub(b, P, RM)
}
fn mul(a: &BigFloat, b: &BigFloat) -> BigFloat {
    a.mul(b, P, RM)
}
fn div(a: &BigFloat, b: &BigFloat) -> BigFloat {
    a.div(b, P, RM)
}
fn sqrt(a: &BigFloat) -> BigFloat {
    a.sqrt(P, RM)
}

impl Oracle {
    pub fn new() -> Self {
        Oracle {
            cc: Consts::new().expect("astro-float constants"),
        }
    }

    fn ln(&mut self, a: &BigFloat) -> BigFloat {
        a.ln(P, RM, &mut self.cc)
    }

    pub fn evaluate(&mut self, inp: &TheoryInputs) -> Values {
        let one = f(1.0);
        let two = f(2.0);
        let h = &inp.hp;
        let (alpha, beta, theta, eps) = (f(h.alpha), f(h.beta), f(h.theta), f(h.epsilon));
        let t = f(h.horizon as f64);
        let d = f(inp.dim as f64);
        let (g, l, gap, target) = (
            f(inp.g_bound),
            f(inp.lipschitz),
            f(inp.f_gap),
            f(inp.target),
        );
        let (dw, dwp) = (f(inp.contract_w.delta), f(inp.contract_w.delta_prime));
        let (ds, dsp) = (f(inp.contract_s.delta), f(inp.contract_s.delta_prime));

        let theta1 = sub(&one, &div(&theta, &t));
        let gamma = div(&beta, &theta1);
        let omg = sub(&one, &gamma);
        let oms = sub(&one, &sqrt(&gamma));
        let one_minus_beta = sub(&one, &beta);
        let g2 = mul(&g, &g);
        let ed = mul(&eps, &d);
        let log_arg = add(&one, &div(&g2, &ed));
        let log_term = add(&self.ln(&log_arg), &div(&theta, &sub(&one, &theta)));

        // C1 = (β/(1−β)/√((1−γ)θ₁) + 1)²
        let c1_inner = add(
            &div(&div(&beta, &one_minus_beta), &sqrt(&mul(&omg, &theta1))),
            &one,
        );
        let c1 = mul(&c1_inner, &c1_inner);

        let oms2 = mul(&oms, &oms);
        let c2_for = |ratio: &BigFloat| {
            let quant = div(
                &mul(&mul(ratio, &mul(&alpha, &alpha)), &l),
                &mul(&theta, &oms2),
            );
            let moment = div(&mul(&mul(&mul(&two, &c1), &g), &alpha), &sqrt(&theta));
            mul(&mul(&div(&d, &oms), &add(&quant, &moment)), &log_term)
        };
        let ratio = div(&mul(&sub(&two, &dw), &sub(&two, &ds)), &mul(&dw, &ds));
        let c2 = c2_for(&ratio);
        let c4 = c2_for(&f(9.0));
        let c3 = sqrt(&mul(&div(&d, &mul(&theta, &mul(&oms2, &oms2))), &log_term));

        let r2 = add(&g2, &ed);
        let radius = sqrt(&r2);
        let t_for = |factor: f64, c: &BigFloat, eps_target: &BigFloat| {
            let lead = div(
                &mul(&f(factor), &r2),
                &mul(
                    &mul(&mul(&one_minus_beta, &one_minus_beta), &mul(&alpha, &alpha)),
                    &mul(eps_target, eps_target),
                ),
            );
            let s = add(&gap, c);
            mul(&lead, &mul(&s, &s))
        };
        let t_theorem = t_for(4.0, &c2, &target);
        let t_corollary = t_for(16.0, &c4, &target);

        let weight = add(
            &div(&mul(&sub(&two, &ds), &dsp), &ds),
            &div(
                &mul(&mul(&sub(&two, &ds), &sub(&two, &dw)), &dwp),
                &mul(&ds, &dw),
            ),
        );
        let floor = div(
            &mul(&mul(&mul(&mul(&weight, &two), &l), &radius), &c3),
            &one_minus_beta,
        );

        let first = self.ln(&div(&alpha, &mul(&omg, &theta)));
        let second_arg = div(
            &mul(&mul(&mul(&mul(&f(24.0), &l), &d), &radius), &c3),
            &mul(&target, &one_minus_beta),
        );
        let second = self.ln(&second_arg);
        let outer = add(&add(&first, &second), &one);
        let c5 = outer
            .is_positive()
            .then(|| mul(&d, &add(&one, &self.ln(&outer))));

        Values {
            c1,
            c2,
            c3,
            c4,
            c5,
            t_theorem,
            t_corollary,
            floor,
        }
    }

    /// Same as [`Oracle::evaluate`]'s theorem bound at accuracy `eps`.
    pub fn t_theorem_at(&mut self, inp: &TheoryInputs, eps: f64) -> BigFloat {
        let mut other = *inp;
        other.target = eps;
        self.evaluate(&other).t_theorem
    }
}

/// `|ours − exact| ≤ tol·|exact|`, decided in extended precision.
pub fn rel_close(ours: f64, exact: &BigFloat, tol: f64) -> bool {
    let diff = sub(&f(ours), exact).abs();
    let allowed = mul(&exact.abs(), &f(tol));
    diff.cmp(&allowed).is_some_and(|c| c <= 0)
}

/// `ours` is the rounded-up bound of a value within `tol` of `exact`:
/// `⌈exact(1 − tol)⌉ ≤ ours ≤ ⌈exact(1 + tol)⌉`.
pub fn ceil_close(ours: f64, exact: &BigFloat, tol: f64) -> bool {
    let lo = mul(exact, &f(1.0 - tol)).ceil();
    let hi = mul(exact, &f(1.0 + tol)).ceil();
    let x = f(ours);
    x.is_int() && x.cmp(&lo).is_some_and(|c| c >= 0) && x.cmp(&hi).is_some_and(|c| c <= 0)
}

/// Exact zero check.
pub fn is_zero(x: &BigFloat) -> bool {
    x.is_zero()
}
