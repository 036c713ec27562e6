//! Experiment orchestration and result serialization.
//!
//! Repetitions and contexts run in order; realizations within a context run
//! on the rayon pool. Nothing written to disk depends on the thread count.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::harness::{
    run_counterfactual, run_independent, slots_of, ContextCounts, DrawMode, ExperimentPlan,
    ExperimentType, NUM_CONTEXTS, STANDARD_CONTEXTS,
};
use crate::oracle::{self, OracleReport};
use crate::stats::{
    double_detection, efficiencies, efficiency_bound, lg_from_counts, loophole_report,
    EfficiencyReport, LgResult, LgValues, LoopholeReport, Summary,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Slack allowed on the marginal-form bounds before a run is rejected.
pub const MARGINAL_BOUND_TOL: f64 = 1e-12;

pub const SUMMARY_FILE: &str = "summary.json";
pub const COUNTS_FILE: &str = "counts.csv";
pub const SWEEP_FILE: &str = "sweep.csv";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EfficiencyBounds {
    pub t3: Summary,
    pub t1t3: Summary,
    pub t2t3: Summary,
    pub t1t2t3: Summary,
}

/// Sizes of the pairwise symmetric differences of the Λ sets.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaDifferences {
    pub t1t3_vs_t2t3: Summary,
    pub t1t3_vs_t1t2t3: Summary,
    pub t2t3_vs_t1t2t3: Summary,
}

/// Shared-draw only: efficiencies from set unions and the loophole report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterfactualSummary {
    pub eta_t3: Summary,
    pub eta_t1t3: Summary,
    pub eta_t2t3: Summary,
    pub eta_t1t2t3: Summary,
    pub lambda_symmetric_differences: LambdaDifferences,
    pub loophole: LoopholeSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LoopholeSummary {
    pub w_direct: Summary,
    pub w_marginal: Summary,
    pub per_rep: Vec<LoopholeReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub schema_version: u32,
    pub config: RunConfig,
    pub statistics: LgResult,
    pub efficiency_bounds: EfficiencyBounds,
    pub double_detection: BTreeMap<String, Summary>,
    pub counterfactual: Option<CounterfactualSummary>,
    pub oracle: OracleReport,
    #[serde(skip)]
    pub counts: Vec<[ContextCounts; NUM_CONTEXTS]>,
    #[serde(skip)]
    pub lg: Vec<LgValues>,
    #[serde(skip)]
    pub efficiency_reports: Vec<EfficiencyReport>,
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build()?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

struct RepOutcome {
    counts: [ContextCounts; NUM_CONTEXTS],
    shared: Option<(EfficiencyReport, LoopholeReport, [u64; 3])>,
}

fn run_rep(plan: &ExperimentPlan, rep: u64) -> Result<RepOutcome> {
    match plan.mode {
        DrawMode::Independent => Ok(RepOutcome {
            counts: run_independent(plan, rep),
            shared: None,
        }),
        DrawMode::Shared => {
            let record = run_counterfactual(plan, rep);
            let eff = efficiencies(&record)?;
            let loophole = loophole_report(&record)?;
            let l13 = slots_of(ExperimentType::T1T3);
            let l23 = slots_of(ExperimentType::T2T3);
            let l123 = slots_of(ExperimentType::T1T2T3);
            let diffs = [
                record.symmetric_difference_count(l13, l23),
                record.symmetric_difference_count(l13, l123),
                record.symmetric_difference_count(l23, l123),
            ];
            Ok(RepOutcome {
                counts: record.context_counts(),
                shared: Some((eff, loophole, diffs)),
            })
        }
    }
}

fn check_invariants(counts: &[ContextCounts; NUM_CONTEXTS], lg: &LgValues, rep: u64) -> Result<()> {
    for (c, sc) in counts.iter().zip(STANDARD_CONTEXTS.iter()) {
        if !c.is_consistent() {
            return Err(Error::Invariant(format!(
                "rep {rep}, context {}: inconsistent counts {c:?}",
                sc.blockers
            )));
        }
    }
    if lg.k_marginal > 1.0 + MARGINAL_BOUND_TOL || lg.w_marginal > MARGINAL_BOUND_TOL {
        return Err(Error::Invariant(format!(
            "rep {rep}: marginal bounds broken (K~ = {}, W~ = {})",
            lg.k_marginal, lg.w_marginal
        )));
    }
    Ok(())
}

/// Run every repetition of the nine-context experiment.
pub fn run_experiment(config: &RunConfig) -> Result<ExperimentResult> {
    let plan = config.plan()?;
    let outcomes = with_pool(config.threads, || {
        (0..plan.reps)
            .map(|rep| run_rep(&plan, rep))
            .collect::<Result<Vec<_>>>()
    })??;

    let mut lg = Vec::with_capacity(outcomes.len());
    for (rep, o) in outcomes.iter().enumerate() {
        let values = lg_from_counts(&o.counts)?;
        check_invariants(&o.counts, &values, rep as u64)?;
        lg.push(values);
    }

    let counts: Vec<_> = outcomes.iter().map(|o| o.counts).collect();
    let bound = |kind| -> Result<Summary> {
        Ok(Summary::new(
            counts
                .iter()
                .map(|c| efficiency_bound(c, kind))
                .collect::<Result<Vec<_>, _>>()?,
        ))
    };
    let efficiency_bounds = EfficiencyBounds {
        t3: bound(ExperimentType::T3)?,
        t1t3: bound(ExperimentType::T1T3)?,
        t2t3: bound(ExperimentType::T2T3)?,
        t1t2t3: bound(ExperimentType::T1T2T3)?,
    };

    let deltas = counts
        .iter()
        .map(double_detection)
        .collect::<Result<Vec<_>, _>>()?;
    let double_detection = STANDARD_CONTEXTS
        .iter()
        .enumerate()
        .map(|(k, sc)| (sc.blockers.to_string(), Summary::of(&deltas, |d| d[k])))
        .collect();

    let shared: Vec<_> = outcomes.iter().filter_map(|o| o.shared.clone()).collect();
    let efficiency_reports: Vec<EfficiencyReport> =
        shared.iter().map(|(e, _, _)| e.clone()).collect();
    let counterfactual = (!shared.is_empty()).then(|| {
        let e = &efficiency_reports;
        let loops: Vec<LoopholeReport> = shared.iter().map(|(_, l, _)| *l).collect();
        let diff = |i: usize| Summary::of(&shared, |(_, _, d)| d[i] as f64);
        CounterfactualSummary {
            eta_t3: Summary::of(e, |r| r.eta_t3),
            eta_t1t3: Summary::of(e, |r| r.eta_t1t3),
            eta_t2t3: Summary::of(e, |r| r.eta_t2t3),
            eta_t1t2t3: Summary::of(e, |r| r.eta_t1t2t3),
            lambda_symmetric_differences: LambdaDifferences {
                t1t3_vs_t2t3: diff(0),
                t1t3_vs_t1t2t3: diff(1),
                t2t3_vs_t1t2t3: diff(2),
            },
            loophole: LoopholeSummary {
                w_direct: Summary::of(&loops, |l| l.w_direct),
                w_marginal: Summary::of(&loops, |l| l.w_marginal),
                per_rep: loops,
            },
        }
    });

    Ok(ExperimentResult {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        statistics: LgResult::from_reps(&lg),
        efficiency_bounds,
        double_detection,
        counterfactual,
        oracle: oracle::report(&plan.optics),
        counts,
        lg,
        efficiency_reports,
    })
}

pub fn write_counts_csv<W: Write>(result: &ExperimentResult, mut w: W) -> std::io::Result<()> {
    w.write_all(b"rep,context_bits,n_total,n_herald,n_plus,n_minus,n_double\n")?;
    for (rep, counts) in result.counts.iter().enumerate() {
        for (c, sc) in counts.iter().zip(STANDARD_CONTEXTS.iter()) {
            writeln!(
                w,
                "{rep},{},{},{},{},{},{}",
                sc.blockers, c.n_total, c.n_herald, c.n_plus, c.n_minus, c.n_double
            )?;
        }
    }
    Ok(())
}

pub fn write_summary_json<W: Write>(result: &ExperimentResult, mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, result)?;
    w.write_all(b"\n")?;
    Ok(())
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Run the experiment and write `summary.json` and `counts.csv` into
/// `config.out`. Returns the result and the paths written.
pub fn run(config: &RunConfig) -> Result<(ExperimentResult, Vec<PathBuf>)> {
    let result = run_experiment(config)?;
    let mut summary = create(&config.out, SUMMARY_FILE)?;
    write_summary_json(&result, &mut summary)?;
    summary.flush()?;
    let mut counts = create(&config.out, COUNTS_FILE)?;
    write_counts_csv(&result, &mut counts)?;
    counts.flush()?;
    Ok((
        result,
        vec![config.out.join(SUMMARY_FILE), config.out.join(COUNTS_FILE)],
    ))
}

/// Classical bound on K.
pub const MACROREALIST_BOUND: f64 = 1.0;
/// Largest K allowed by quantum mechanics.
pub const QUANTUM_BOUND: f64 = 1.5;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub r: f64,
    pub gamma: f64,
    pub k: Summary,
    pub w: Summary,
}

/// Run the experiment over the `gamma_grid x r_grid` product, gamma outer.
pub fn sweep(config: &RunConfig) -> Result<Vec<SweepRow>> {
    config.validate_grids()?;
    let mut rows = Vec::with_capacity(config.r_grid.len() * config.gamma_grid.len());
    for &gamma in &config.gamma_grid {
        for &r in &config.r_grid {
            let cell = RunConfig {
                r,
                gamma,
                ..config.clone()
            };
            let res = run_experiment(&cell)?;
            rows.push(SweepRow {
                r,
                gamma,
                k: res.statistics.k,
                w: res.statistics.w,
            });
        }
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut w: W) -> std::io::Result<()> {
    w.write_all(b"r,gamma,K_mean,K_std,W_mean,W_std,macrorealist_bound,quantum_bound\n")?;
    for row in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            row.r,
            row.gamma,
            row.k.mean,
            row.k.std,
            row.w.mean,
            row.w.std,
            MACROREALIST_BOUND,
            QUANTUM_BOUND
        )?;
    }
    Ok(())
}

/// Sweep and write `sweep.csv` into `config.out`.
pub fn run_sweep(config: &RunConfig) -> Result<(Vec<SweepRow>, PathBuf)> {
    let rows = sweep(config)?;
    let mut f = create(&config.out, SWEEP_FILE)?;
    write_sweep_csv(&rows, &mut f)?;
    f.flush()?;
    Ok((rows, config.out.join(SWEEP_FILE)))
}

/// Quantum predictions for the configured optics.
pub fn oracle_report(config: &RunConfig) -> Result<OracleReport> {
    let optics = config.optics();
    optics.validate()?;
    Ok(oracle::report(&optics))
}
