//! Closed-form quantum predictions for a single heralded photon.
//!
//! `alpha_plus` and `alpha_minus` are the amplitudes for the photon to leave
//! BS3 towards D2 and D3. Blocked arms project the amplitude out, so the
//! per-context probabilities only sum to one across the contexts of an
//! experiment type.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::harness::{slot, slots_of, ExperimentType, STANDARD_CONTEXTS};
use crate::optics::{Context, OpticalParams};
use crate::stats::{
    correlation, k_statistic, marginal_12, marginal_13, marginal_23, w_statistic, Pmf2, Pmf3,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplitudePair {
    pub alpha_plus: Complex64,
    pub alpha_minus: Complex64,
}

impl AmplitudePair {
    pub fn probabilities(&self) -> (f64, f64) {
        (self.alpha_plus.norm_sqr(), self.alpha_minus.norm_sqr())
    }

    pub fn total(&self) -> f64 {
        let (p, m) = self.probabilities();
        p + m
    }
}

pub fn amplitudes(ctx: &Context) -> AmplitudePair {
    let o = &ctx.optics;
    let b = |i| ctx.blockers.bit(i);
    let (t1, t2, t3) = (o.t1, o.t2, o.t3);
    let (r1, r2, r3) = (o.r1(), o.r2(), o.r3());
    let e1 = Complex64::from_polar(1.0, o.theta1);
    let e2 = Complex64::from_polar(1.0, o.theta2);
    let e12 = Complex64::from_polar(1.0, o.theta1 + o.theta2);

    let alpha_plus = e2 * (b(2) * b(3) * (r1 * r2 * t3).sqrt())
        - e12 * (b(1) * b(3) * (t1 * t2 * t3).sqrt())
        + b(2) * b(4) * (r1 * t2 * r3).sqrt()
        + e1 * (b(1) * b(4) * (t1 * r2 * r3).sqrt());
    let alpha_minus = e2 * (b(2) * b(3) * (r1 * r2 * r3).sqrt())
        - e12 * (b(1) * b(3) * (t1 * t2 * r3).sqrt())
        - b(2) * b(4) * (r1 * t2 * t3).sqrt()
        - e1 * (b(1) * b(4) * (t1 * r2 * t3).sqrt());
    AmplitudePair {
        alpha_plus,
        alpha_minus,
    }
}

fn slot_probs(optics: &OpticalParams, k: usize) -> [f64; 2] {
    let (p, m) = amplitudes(&Context::new(STANDARD_CONTEXTS[k].blockers, *optics)).probabilities();
    [p, m]
}

/// Predicted `(P13, P23, P123)`; cells are the raw `|alpha|^2` values.
pub fn predicted_pmfs(optics: &OpticalParams) -> (Pmf2, Pmf2, Pmf3) {
    let p13 = Pmf2 {
        p: [
            slot_probs(optics, slot::T13_PLUS),
            slot_probs(optics, slot::T13_MINUS),
        ],
    };
    let p23 = Pmf2 {
        p: [
            slot_probs(optics, slot::T23_PLUS),
            slot_probs(optics, slot::T23_MINUS),
        ],
    };
    let p3 = Pmf3 {
        p: [
            [
                slot_probs(optics, slot::T123_PP),
                slot_probs(optics, slot::T123_PM),
            ],
            [
                slot_probs(optics, slot::T123_MP),
                slot_probs(optics, slot::T123_MM),
            ],
        ],
    };
    (p13, p23, p3)
}

/// `Σ (|α+|² + |α-|²)` over the contexts of one experiment type.
pub fn unity_sum(optics: &OpticalParams, kind: ExperimentType) -> f64 {
    slots_of(kind)
        .iter()
        .map(|&k| slot_probs(optics, k).iter().sum::<f64>())
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitySums {
    pub t3: f64,
    pub t1t3: f64,
    pub t2t3: f64,
    pub t1t2t3: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub optics: OpticalParams,
    pub p13: Pmf2,
    pub p23: Pmf2,
    pub p123: Pmf3,
    pub p12: Pmf2,
    #[serde(rename = "C12")]
    pub c12: f64,
    #[serde(rename = "C23")]
    pub c23: f64,
    #[serde(rename = "C13")]
    pub c13: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "W")]
    pub w: f64,
    /// Marginal-form values computed from the predicted joint PMF.
    #[serde(rename = "K_marginal")]
    pub k_marginal: f64,
    #[serde(rename = "W_marginal")]
    pub w_marginal: f64,
    pub unity_sums: UnitySums,
}

pub fn report(optics: &OpticalParams) -> OracleReport {
    let (p13, p23, p123) = predicted_pmfs(optics);
    let p12 = marginal_12(&p123);
    let (m13, m23) = (marginal_13(&p123), marginal_23(&p123));
    OracleReport {
        optics: *optics,
        p13,
        p23,
        p123,
        p12,
        c12: correlation(&p12),
        c23: correlation(&p23),
        c13: correlation(&p13),
        k: k_statistic(&p12, &p23, &p13),
        w: w_statistic(&p13, &p23, &p12),
        k_marginal: k_statistic(&p12, &m23, &m13),
        w_marginal: w_statistic(&m13, &m23, &p12),
        unity_sums: UnitySums {
            t3: unity_sum(optics, ExperimentType::T3),
            t1t3: unity_sum(optics, ExperimentType::T1T3),
            t2t3: unity_sum(optics, ExperimentType::T2T3),
            t1t2t3: unity_sum(optics, ExperimentType::T1T2T3),
        },
    }
}
