use lgsim_core::harness::{run_counterfactual, run_independent, DrawMode, ExperimentPlan, NUM_CONTEXTS, STANDARD_CONTEXTS};
use lgsim_core::optics::{OpticalParams, SourceParams};
use lgsim_core::stats::efficiencies;

fn plan(mode: DrawMode) -> ExperimentPlan {
    ExperimentPlan {
        source: SourceParams::new(0.3).unwrap(),
        optics: OpticalParams::default(),
        gamma: 2.0,
        samples: 1 << 20,
        reps: 1,
        mode,
        seed: 8_675_309,
    }
}

/// Two-sample z-score of Poisson-like counts.
fn z(a: u64, b: u64) -> f64 {
    if a + b == 0 {
        return 0.0;
    }
    (a as f64 - b as f64).abs() / ((a + b) as f64).sqrt()
}

#[test]
fn shared_and_independent_counts_are_compatible() {
    let independent = run_independent(&plan(DrawMode::Independent), 0);
    let record = run_counterfactual(&plan(DrawMode::Shared), 0);
    let shared = record.context_counts();
    for k in 0..NUM_CONTEXTS {
        let (a, b) = (&independent[k], &shared[k]);
        for (name, x, y) in [
            ("herald", a.n_herald, b.n_herald),
            ("plus", a.n_plus, b.n_plus),
            ("minus", a.n_minus, b.n_minus),
            ("double", a.n_double, b.n_double),
        ] {
            let score = z(x, y);
            assert!(score < 4.0, "{} {name}: {x} vs {y} (z = {score:.2})", STANDARD_CONTEXTS[k].blockers);
        }
    }

    let e = efficiencies(&record).unwrap();
    let n1 = e.n_herald as f64;
    for (eta, bound) in [
        (e.eta_t1t3, e.bound_t1t3),
        (e.eta_t2t3, e.bound_t2t3),
        (e.eta_t1t2t3, e.bound_t1t2t3),
    ] {
        let se = (bound * (1.0 - bound) / n1).sqrt();
        assert!(eta <= bound + 4.0 * se, "{eta} > {bound}");
        assert!((0.0..=1.0).contains(&eta));
    }
}
