//! PMFs, correlations, the K and W statistics, their marginal-form
//! counterparts, and context-dependent detection efficiencies.
//!
//! PMF cells are indexed by [`Sign::index`], so `p[0][1]` is `(+, -)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::StatsError;
use crate::harness::{
    slot, slots_of, ContextCounts, CounterfactualRecord, ExperimentType, Sign, NUM_CONTEXTS,
    STANDARD_CONTEXTS,
};

/// Joint PMF over two labels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Pmf2 {
    pub p: [[f64; 2]; 2],
}

/// Joint PMF over `(q1, q2, q3)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Pmf3 {
    pub p: [[[f64; 2]; 2]; 2],
}

impl Pmf2 {
    pub fn get(&self, a: Sign, b: Sign) -> f64 {
        self.p[a.index()][b.index()]
    }

    pub fn total(&self) -> f64 {
        self.p.iter().flatten().sum()
    }

    pub fn uniform() -> Self {
        Self { p: [[0.25; 2]; 2] }
    }

    pub fn max_abs_diff(&self, other: &Pmf2) -> f64 {
        self.p
            .iter()
            .flatten()
            .zip(other.p.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Pmf3 {
    pub fn get(&self, a: Sign, b: Sign, c: Sign) -> f64 {
        self.p[a.index()][b.index()][c.index()]
    }

    pub fn total(&self) -> f64 {
        self.p.iter().flatten().flatten().sum()
    }

    pub fn uniform() -> Self {
        Self {
            p: [[[0.125; 2]; 2]; 2],
        }
    }

    /// Normalize arbitrary non-negative weights. `None` if they sum to zero.
    pub fn from_weights(w: [[[f64; 2]; 2]; 2]) -> Option<Self> {
        let total: f64 = w.iter().flatten().flatten().sum();
        if total <= 0.0 || !total.is_finite() {
            return None;
        }
        let mut p = w;
        p.iter_mut()
            .flatten()
            .flatten()
            .for_each(|x| *x /= total);
        Some(Self { p })
    }
}

fn ratio(n: u64, total: u64) -> f64 {
    n as f64 / total as f64
}

/// PMF of a two-context experiment: row `+` from `plus_ctx`, row `-` from
/// `minus_ctx`; columns are the outcome at t3.
pub fn pmf2_from_counts(
    plus_ctx: &ContextCounts,
    minus_ctx: &ContextCounts,
) -> Result<Pmf2, StatsError> {
    let total = plus_ctx.coincidences() + minus_ctx.coincidences();
    if total == 0 {
        return Err(StatsError::ZeroCoincidences("two-context PMF"));
    }
    Ok(Pmf2 {
        p: [
            [ratio(plus_ctx.n_plus, total), ratio(plus_ctx.n_minus, total)],
            [
                ratio(minus_ctx.n_plus, total),
                ratio(minus_ctx.n_minus, total),
            ],
        ],
    })
}

/// PMF over the four two-blocker contexts, given in `(q1, q2)` order
/// `(+,+), (+,-), (-,+), (-,-)`.
pub fn pmf3_from_counts(ctxs: [&ContextCounts; 4]) -> Result<Pmf3, StatsError> {
    let total: u64 = ctxs.iter().map(|c| c.coincidences()).sum();
    if total == 0 {
        return Err(StatsError::ZeroCoincidences("three-time PMF"));
    }
    let mut p = [[[0.0; 2]; 2]; 2];
    for (k, c) in ctxs.iter().enumerate() {
        p[k / 2][k % 2] = [ratio(c.n_plus, total), ratio(c.n_minus, total)];
    }
    Ok(Pmf3 { p })
}

/// Sum over q3.
pub fn marginal_12(p: &Pmf3) -> Pmf2 {
    let mut out = Pmf2::default();
    for i in 0..2 {
        for j in 0..2 {
            out.p[i][j] = p.p[i][j][0] + p.p[i][j][1];
        }
    }
    out
}

/// Sum over q2.
pub fn marginal_13(p: &Pmf3) -> Pmf2 {
    let mut out = Pmf2::default();
    for i in 0..2 {
        for k in 0..2 {
            out.p[i][k] = p.p[i][0][k] + p.p[i][1][k];
        }
    }
    out
}

/// Sum over q1.
pub fn marginal_23(p: &Pmf3) -> Pmf2 {
    let mut out = Pmf2::default();
    for j in 0..2 {
        for k in 0..2 {
            out.p[j][k] = p.p[0][j][k] + p.p[1][j][k];
        }
    }
    out
}

/// Equal-sign mass minus opposite-sign mass.
pub fn correlation(p: &Pmf2) -> f64 {
    p.p[0][0] + p.p[1][1] - p.p[0][1] - p.p[1][0]
}

/// K = C12 + C23 - C13.
pub fn k_statistic(p12: &Pmf2, p23: &Pmf2, p13: &Pmf2) -> f64 {
    correlation(p12) + correlation(p23) - correlation(p13)
}

/// W = P13(-,+) - P23(-,+) - P12(-,+).
pub fn w_statistic(p13: &Pmf2, p23: &Pmf2, p12: &Pmf2) -> f64 {
    let mp = |p: &Pmf2| p.get(Sign::Minus, Sign::Plus);
    mp(p13) - mp(p23) - mp(p12)
}

/// Tolerance for `p12 == marginal_12(p3)` in [`marginal_lg`].
pub const MARGINAL_CONSISTENCY_TOL: f64 = 1e-9;

/// K and W with the t1,t3 and t2,t3 PMFs replaced by marginals of the joint
/// PMF. These can never exceed 1 and 0 respectively.
pub fn marginal_lg(p12: &Pmf2, p3: &Pmf3) -> Result<(f64, f64), StatsError> {
    let diff = p12.max_abs_diff(&marginal_12(p3));
    if !(diff <= MARGINAL_CONSISTENCY_TOL) {
        return Err(StatsError::InconsistentInputs(diff));
    }
    let p13 = marginal_13(p3);
    let p23 = marginal_23(p3);
    Ok((k_statistic(p12, &p23, &p13), w_statistic(&p13, &p23, p12)))
}

/// Statistics of a single repetition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LgValues {
    pub k: f64,
    pub w: f64,
    pub c12: f64,
    pub c23: f64,
    pub c13: f64,
    pub k_marginal: f64,
    pub w_marginal: f64,
}

/// The three PMFs of the protocol: `(P13, P23, P123)`.
pub fn experiment_pmfs(
    counts: &[ContextCounts; NUM_CONTEXTS],
) -> Result<(Pmf2, Pmf2, Pmf3), StatsError> {
    let p13 = pmf2_from_counts(&counts[slot::T13_PLUS], &counts[slot::T13_MINUS])?;
    let p23 = pmf2_from_counts(&counts[slot::T23_PLUS], &counts[slot::T23_MINUS])?;
    let p3 = pmf3_from_counts([
        &counts[slot::T123_PP],
        &counts[slot::T123_PM],
        &counts[slot::T123_MP],
        &counts[slot::T123_MM],
    ])?;
    Ok((p13, p23, p3))
}

pub fn lg_values(p13: &Pmf2, p23: &Pmf2, p3: &Pmf3) -> Result<LgValues, StatsError> {
    let p12 = marginal_12(p3);
    let (k_marginal, w_marginal) = marginal_lg(&p12, p3)?;
    Ok(LgValues {
        k: k_statistic(&p12, p23, p13),
        w: w_statistic(p13, p23, &p12),
        c12: correlation(&p12),
        c23: correlation(p23),
        c13: correlation(p13),
        k_marginal,
        w_marginal,
    })
}

pub fn lg_from_counts(counts: &[ContextCounts; NUM_CONTEXTS]) -> Result<LgValues, StatsError> {
    let (p13, p23, p3) = experiment_pmfs(counts)?;
    lg_values(&p13, &p23, &p3)
}

/// Mean and spread of a quantity over repetitions. `std` is the sample
/// standard deviation and `sem = std / sqrt(n)`; both are 0 for one value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub sem: f64,
    pub values: Vec<f64>,
}

impl Summary {
    pub fn new(values: Vec<f64>) -> Self {
        let n = values.len() as f64;
        let mean = if values.is_empty() {
            f64::NAN
        } else {
            values.iter().sum::<f64>() / n
        };
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        let sem = if values.is_empty() { 0.0 } else { std / n.sqrt() };
        Self {
            mean,
            std,
            sem,
            values,
        }
    }

    pub fn of<T>(items: &[T], f: impl Fn(&T) -> f64) -> Self {
        Self::new(items.iter().map(f).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LgResult {
    #[serde(rename = "K")]
    pub k: Summary,
    #[serde(rename = "W")]
    pub w: Summary,
    #[serde(rename = "C12")]
    pub c12: Summary,
    #[serde(rename = "C23")]
    pub c23: Summary,
    #[serde(rename = "C13")]
    pub c13: Summary,
    #[serde(rename = "K_marginal")]
    pub k_marginal: Summary,
    #[serde(rename = "W_marginal")]
    pub w_marginal: Summary,
}

impl LgResult {
    pub fn from_reps(reps: &[LgValues]) -> Self {
        Self {
            k: Summary::of(reps, |v| v.k),
            w: Summary::of(reps, |v| v.w),
            c12: Summary::of(reps, |v| v.c12),
            c23: Summary::of(reps, |v| v.c23),
            c13: Summary::of(reps, |v| v.c13),
            k_marginal: Summary::of(reps, |v| v.k_marginal),
            w_marginal: Summary::of(reps, |v| v.w_marginal),
        }
    }
}

/// Summed conditional coincidence rate `Σ_b μ[E(b)] / μ[D1]` of one
/// experiment type. With separate draws per context each context supplies
/// its own herald count.
pub fn efficiency_bound(counts: &[ContextCounts; NUM_CONTEXTS], kind: ExperimentType) -> Result<f64, StatsError> {
    slots_of(kind)
        .iter()
        .map(|&k| {
            let c = &counts[k];
            if c.n_herald == 0 {
                Err(StatsError::NoHeralds)
            } else {
                Ok(ratio(c.coincidences(), c.n_herald))
            }
        })
        .sum()
}

/// δ(b) per context slot.
pub fn double_detection(
    counts: &[ContextCounts; NUM_CONTEXTS],
) -> Result<[f64; NUM_CONTEXTS], StatsError> {
    let mut out = [0.0; NUM_CONTEXTS];
    for (o, c) in out.iter_mut().zip(counts) {
        if c.n_herald == 0 {
            return Err(StatsError::NoHeralds);
        }
        *o = ratio(c.n_double, c.n_herald);
    }
    Ok(out)
}

pub fn keyed_by_context(values: &[f64; NUM_CONTEXTS]) -> BTreeMap<String, f64> {
    STANDARD_CONTEXTS
        .iter()
        .zip(values)
        .map(|(c, &v)| (c.blockers.to_string(), v))
        .collect()
}

/// Counterfactual efficiencies of one shared-draw repetition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub n_herald: u64,
    pub eta_t3: f64,
    pub eta_t1t3: f64,
    pub eta_t2t3: f64,
    pub eta_t1t2t3: f64,
    pub bound_t1t3: f64,
    pub bound_t2t3: f64,
    pub bound_t1t2t3: f64,
    pub delta: BTreeMap<String, f64>,
}

/// Direct efficiencies `μ[Λ] / μ[D1]` from set unions, the summed bounds and
/// the double-detection probabilities.
pub fn efficiencies(record: &CounterfactualRecord) -> Result<EfficiencyReport, StatsError> {
    let n1 = record.herald_count();
    if n1 == 0 {
        return Err(StatsError::NoHeralds);
    }
    let eta = |kind| ratio(record.union_count(slots_of(kind)), n1);
    let counts = record.context_counts();
    Ok(EfficiencyReport {
        n_herald: n1,
        eta_t3: eta(ExperimentType::T3),
        eta_t1t3: eta(ExperimentType::T1T3),
        eta_t2t3: eta(ExperimentType::T2T3),
        eta_t1t2t3: eta(ExperimentType::T1T2T3),
        bound_t1t3: efficiency_bound(&counts, ExperimentType::T1T3)?,
        bound_t2t3: efficiency_bound(&counts, ExperimentType::T2T3)?,
        bound_t1t2t3: efficiency_bound(&counts, ExperimentType::T1T2T3)?,
        delta: keyed_by_context(&double_detection(&counts)?),
    })
}

/// W written as herald-conditioned rates divided by context-group
/// efficiencies, once with the directly measured PMFs and once with the
/// marginals of the joint PMF.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopholeReport {
    pub eta_t1t3: f64,
    pub eta_t2t3: f64,
    pub eta_t1t2t3: f64,
    pub p13_minus_plus: f64,
    pub p23_minus_plus: f64,
    pub p12_minus_plus: f64,
    pub w_direct: f64,
    pub p13_minus_plus_marginal: f64,
    pub p23_minus_plus_marginal: f64,
    pub w_marginal: f64,
}

pub fn loophole_report(record: &CounterfactualRecord) -> Result<LoopholeReport, StatsError> {
    let n1 = record.herald_count();
    if n1 == 0 {
        return Err(StatsError::NoHeralds);
    }
    let union = |kind| ratio(record.union_count(slots_of(kind)), n1);
    let (e13, e23, e123) = (
        union(ExperimentType::T1T3),
        union(ExperimentType::T2T3),
        union(ExperimentType::T1T2T3),
    );
    if e13 == 0.0 || e23 == 0.0 || e123 == 0.0 {
        return Err(StatsError::ZeroCoincidences("efficiency decomposition"));
    }
    let c = record.context_counts();
    let plus = |k: usize| ratio(c[k].n_plus, n1);
    let both = |k: usize| ratio(c[k].coincidences(), n1);

    let p13 = plus(slot::T13_MINUS) / e13;
    let p23 = plus(slot::T23_MINUS) / e23;
    let p12 = both(slot::T123_MP) / e123;
    let p13m = (plus(slot::T123_MP) + plus(slot::T123_MM)) / e123;
    let p23m = (plus(slot::T123_PM) + plus(slot::T123_MM)) / e123;
    Ok(LoopholeReport {
        eta_t1t3: e13,
        eta_t2t3: e23,
        eta_t1t2t3: e123,
        p13_minus_plus: p13,
        p23_minus_plus: p23,
        p12_minus_plus: p12,
        w_direct: p13 - p23 - p12,
        p13_minus_plus_marginal: p13m,
        p23_minus_plus_marginal: p23m,
        w_marginal: p13m - p23m - p12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cc(n_plus: u64, n_minus: u64) -> ContextCounts {
        ContextCounts {
            n_total: 100,
            n_herald: 50,
            n_plus,
            n_minus,
            n_double: 0,
        }
    }

    fn point3(i: usize, j: usize, k: usize) -> Pmf3 {
        let mut p = Pmf3::default();
        p.p[i][j][k] = 1.0;
        p
    }

    #[test]
    fn pmf2_cases() {
        let u = pmf2_from_counts(&cc(1, 1), &cc(1, 1)).unwrap();
        assert_eq!(u, Pmf2::uniform());
        let p = pmf2_from_counts(&cc(3, 1), &cc(0, 0)).unwrap();
        assert_eq!(p.p, [[0.75, 0.25], [0.0, 0.0]]);
        assert_eq!(
            pmf2_from_counts(&cc(0, 0), &cc(0, 0)),
            Err(StatsError::ZeroCoincidences("two-context PMF"))
        );
    }

    #[test]
    fn pmf3_cases() {
        let e = cc(2, 2);
        assert_eq!(pmf3_from_counts([&e; 4]).unwrap(), Pmf3::uniform());
        let z = cc(0, 0);
        let p = pmf3_from_counts([&z, &cc(0, 7), &z, &z]).unwrap();
        assert_eq!(p, point3(0, 1, 1));
        assert!(pmf3_from_counts([&z; 4]).is_err());
    }

    #[test]
    fn marginals_of_simple_pmfs() {
        let u = Pmf3::uniform();
        for m in [marginal_12(&u), marginal_13(&u), marginal_23(&u)] {
            assert_eq!(m, Pmf2::uniform());
        }
        let p = point3(0, 1, 1);
        assert_eq!(marginal_12(&p).p, [[0.0, 1.0], [0.0, 0.0]]);
        assert_eq!(marginal_13(&p).p, [[0.0, 1.0], [0.0, 0.0]]);
        assert_eq!(marginal_23(&p).p, [[0.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn correlation_and_statistics_of_uniform() {
        let u = Pmf2::uniform();
        assert_eq!(correlation(&u), 0.0);
        assert_eq!(correlation(&Pmf2 { p: [[0.5, 0.0], [0.0, 0.5]] }), 1.0);
        assert_eq!(k_statistic(&u, &u, &u), 0.0);
        assert_eq!(w_statistic(&u, &u, &u), -0.25);
    }

    #[test]
    fn marginal_lg_boundary_and_errors() {
        let p = point3(0, 0, 0);
        let (k, w) = marginal_lg(&marginal_12(&p), &p).unwrap();
        assert_eq!((k, w), (1.0, 0.0));
        assert!(matches!(
            marginal_lg(&Pmf2::uniform(), &p),
            Err(StatsError::InconsistentInputs(_))
        ));
    }

    #[test]
    fn summary_uses_sample_std() {
        let s = Summary::new(vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert_abs_diff_eq!(s.std, (5.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.sem, s.std / 2.0, epsilon = 1e-15);
        let one = Summary::new(vec![7.0]);
        assert_eq!((one.mean, one.std, one.sem), (7.0, 0.0, 0.0));
    }

    #[test]
    fn gamma_zero_record_has_zero_efficiency() {
        let all = [(true, true); NUM_CONTEXTS];
        let rec = CounterfactualRecord::from_rows(vec![CounterfactualRecord::pack(true, &all); 10]);
        let e = efficiencies(&rec).unwrap();
        assert_eq!(e.eta_t3, 0.0);
        assert_eq!(e.eta_t1t2t3, 0.0);
        assert!(e.delta.values().all(|&d| d == 1.0));
        let dark = CounterfactualRecord::from_rows(vec![0; 10]);
        assert_eq!(efficiencies(&dark), Err(StatsError::NoHeralds));
    }

    #[test]
    fn union_efficiency_never_exceeds_bound() {
        // Hand-made record: row 0 coincides in both t1,t3 contexts.
        let mut bits = [(false, false); NUM_CONTEXTS];
        bits[slot::T13_PLUS] = (true, false);
        bits[slot::T13_MINUS] = (false, true);
        let r0 = CounterfactualRecord::pack(true, &bits);
        let mut bits1 = [(false, false); NUM_CONTEXTS];
        bits1[slot::T13_MINUS] = (true, false);
        let r1 = CounterfactualRecord::pack(true, &bits1);
        let rec = CounterfactualRecord::from_rows(vec![r0, r1, 1, 0]);
        let e = efficiencies(&rec).unwrap();
        assert_eq!(e.n_herald, 3);
        assert_abs_diff_eq!(e.eta_t1t3, 2.0 / 3.0);
        assert_abs_diff_eq!(e.bound_t1t3, 1.0);
    }

    fn weights() -> impl Strategy<Value = [[[f64; 2]; 2]; 2]> {
        prop::array::uniform2(prop::array::uniform2(prop::array::uniform2(0.0f64..1.0)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn marginal_bounds_hold(w in weights()) {
            if let Some(p3) = Pmf3::from_weights(w) {
                let (k, w) = marginal_lg(&marginal_12(&p3), &p3).unwrap();
                prop_assert!(k <= 1.0 + 1e-12, "K~ = {}", k);
                prop_assert!(w <= 1e-12, "W~ = {}", w);
            }
        }

        #[test]
        fn correlation_in_range(w in weights()) {
            if let Some(p3) = Pmf3::from_weights(w) {
                for m in [marginal_12(&p3), marginal_13(&p3), marginal_23(&p3)] {
                    let c = correlation(&m);
                    prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&c));
                    prop_assert!((m.total() - 1.0).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn count_pmfs_normalize(a in prop::array::uniform8(0u64..1000)) {
            let c: Vec<_> = (0..4).map(|k| cc(a[2 * k], a[2 * k + 1])).collect();
            if let Ok(p) = pmf3_from_counts([&c[0], &c[1], &c[2], &c[3]]) {
                prop_assert!((p.total() - 1.0).abs() < 1e-12);
                prop_assert!(p.p.iter().flatten().flatten().all(|&x| x >= 0.0));
            }
            if let Ok(p) = pmf2_from_counts(&c[0], &c[1]) {
                prop_assert!((p.total() - 1.0).abs() < 1e-12);
            }
        }
    }
}
