//! Cross-checks of the closed-form amplitudes against an explicit product of
//! 2x2 transfer matrices over the (upper, lower) spatial modes. Polarization
//! factors out of the single-photon problem and is ignored here.

use lgsim_core::harness::{ExperimentType, STANDARD_CONTEXTS};
use lgsim_core::optics::{Blockers, Context, OpticalParams};
use lgsim_core::oracle::{amplitudes, predicted_pmfs, report, unity_sum};
use lgsim_core::stats::{k_statistic, marginal_12};
use num_complex::Complex64;
use proptest::prelude::*;

type M2 = [[Complex64; 2]; 2];

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn mul(a: &M2, b: &M2) -> M2 {
    let mut out = [[c(0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn diag(a: Complex64, b: Complex64) -> M2 {
    [[a, c(0.0)], [c(0.0), b]]
}

/// Photon amplitudes at (D2, D3) for a photon entering mode a2.
fn transfer(bits: [u8; 4], o: &OpticalParams) -> (Complex64, Complex64) {
    let b = |i: usize| c(bits[i - 1] as f64);
    let split = |t: f64| -> M2 {
        let (st, sr) = (c(t.sqrt()), c((1.0 - t).sqrt()));
        [[sr, -st], [st, sr]]
    };
    let bs1 = split(o.t1);
    let pd1 = diag(c(1.0), Complex64::from_polar(1.0, o.theta1));
    let bb12 = diag(b(2), b(1));
    let bs2 = split(o.t2);
    let pd2 = diag(Complex64::from_polar(1.0, o.theta2), c(1.0));
    let bb34 = diag(b(3), b(4));
    let (st3, sr3) = (c(o.t3.sqrt()), c((1.0 - o.t3).sqrt()));
    let bs3: M2 = [[st3, sr3], [sr3, -st3]];

    let mut m = mul(&pd1, &bs1);
    m = mul(&bb12, &m);
    m = mul(&bs2, &m);
    m = mul(&pd2, &m);
    m = mul(&bb34, &m);
    m = mul(&bs3, &m);
    (m[0][0], m[1][0])
}

fn assert_matches(bits: [u8; 4], o: &OpticalParams) {
    let a = amplitudes(&Context::new(Blockers(bits), *o));
    let (p, m) = transfer(bits, o);
    assert!((a.alpha_plus - p).norm() < 1e-12, "{bits:?} {o:?}");
    assert!((a.alpha_minus - m).norm() < 1e-12, "{bits:?} {o:?}");
}

#[test]
fn closed_form_matches_matrix_product_on_all_blocker_patterns() {
    let o = OpticalParams {
        t1: 0.37,
        t2: 0.81,
        t3: 0.22,
        theta1: 0.9,
        theta2: -2.1,
    };
    for code in 0u8..16 {
        let bits = [code & 1, (code >> 1) & 1, (code >> 2) & 1, (code >> 3) & 1];
        assert_matches(bits, &o);
    }
}

fn matrix_k(o: &OpticalParams) -> f64 {
    let probs = |k: usize| {
        let (p, m) = transfer(STANDARD_CONTEXTS[k].blockers.0, o);
        [p.norm_sqr(), m.norm_sqr()]
    };
    let corr = |rows: [[f64; 2]; 2]| rows[0][0] + rows[1][1] - rows[0][1] - rows[1][0];
    let c13 = corr([probs(1), probs(2)]);
    let c23 = corr([probs(3), probs(4)]);
    // t1,t2 marginal: sum over the t3 outcome in each two-blocker context.
    let s = |k: usize| probs(k)[0] + probs(k)[1];
    let c12 = corr([[s(5), s(6)], [s(7), s(8)]]);
    c12 + c23 - c13
}

#[test]
fn k_with_pi_phase_matches_matrix_oracle() {
    let o = OpticalParams {
        theta1: std::f64::consts::PI,
        ..OpticalParams::default()
    };
    let (p13, p23, p3) = predicted_pmfs(&o);
    let k = k_statistic(&marginal_12(&p3), &p23, &p13);
    assert!((k - matrix_k(&o)).abs() < 1e-12);
    assert!((report(&o).k - k).abs() < 1e-15);
}

#[test]
fn ideal_k_matches_matrix_oracle() {
    let o = OpticalParams::default();
    assert!((matrix_k(&o) - 1.5).abs() < 1e-12);
    assert!((report(&o).k - 1.5).abs() < 1e-12);
}

fn optics() -> impl Strategy<Value = OpticalParams> {
    (0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64, -7.0..7.0f64, -7.0..7.0f64).prop_map(
        |(t1, t2, t3, theta1, theta2)| OpticalParams {
            t1,
            t2,
            t3,
            theta1,
            theta2,
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1_000))]

    #[test]
    fn unity_sum_per_experiment_type(o in optics()) {
        for kind in [ExperimentType::T3, ExperimentType::T1T3, ExperimentType::T2T3, ExperimentType::T1T2T3] {
            prop_assert!((unity_sum(&o, kind) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn standard_contexts_match_matrix_product(o in optics()) {
        for sc in STANDARD_CONTEXTS {
            assert_matches(sc.blockers.0, &o);
        }
    }

    #[test]
    fn k_symmetric_under_swapping_t2_t3(t1 in 0.0..=1.0f64, t2 in 0.0..=1.0f64, t3 in 0.0..=1.0f64) {
        let a = OpticalParams { t1, t2, t3, theta1: 0.0, theta2: 0.0 };
        let b = OpticalParams { t2: t3, t3: t2, ..a };
        prop_assert!((report(&a).k - report(&b).k).abs() < 1e-12);
    }

    #[test]
    fn predicted_marginal_forms_obey_bounds(o in optics()) {
        let r = report(&o);
        prop_assert!(r.k_marginal <= 1.0 + 1e-12);
        prop_assert!(r.w_marginal <= 1e-12);
    }
}
