//! Runs the nine standard measurement contexts and tallies post-selected
//! coincidences.
//!
//! Two draw modes exist. In independent mode every (repetition, context) pair
//! reads its own substream. In shared mode each realization is evaluated
//! under all nine contexts, which gives exact counterfactual records.
//!
//! Only heralded realizations can contribute to any tally, so independent
//! runs decode the source vectors first and skip the interferometer when D1
//! stays dark. The counter-addressed streams make this skip invisible: the
//! tallies equal those of the full pipeline.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::jones::JonesVector;
use crate::optics::{
    detect, source_output, stage1, stage2, stage3, Blockers, Context, OpticalParams,
    SourceParams, SIGMA,
};
use crate::sampling::{HiddenState, HiddenStream, StreamId, UniformBlock};

/// Realizations per parallel work item. Has no effect on results.
const CHUNK: u64 = 1 << 12;

pub const NUM_CONTEXTS: usize = 9;

/// Slot indices of the standard contexts.
pub mod slot {
    pub const OPEN: usize = 0;
    pub const T13_PLUS: usize = 1;
    pub const T13_MINUS: usize = 2;
    pub const T23_PLUS: usize = 3;
    pub const T23_MINUS: usize = 4;
    pub const T123_PP: usize = 5;
    pub const T123_PM: usize = 6;
    pub const T123_MP: usize = 7;
    pub const T123_MM: usize = 8;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentType {
    /// No blockers.
    T3,
    /// One of BB1/BB2 inserted.
    T1T3,
    /// One of BB3/BB4 inserted.
    T2T3,
    /// One blocker from each stage.
    T1T2T3,
}

/// Sign of a macroscopic label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }

    pub fn index(self) -> usize {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }
}

/// One of the nine standard contexts with its `(q1, q2)` labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StandardContext {
    pub blockers: Blockers,
    pub kind: ExperimentType,
    pub q1: Option<Sign>,
    pub q2: Option<Sign>,
}

const fn sc(
    bits: [u8; 4],
    kind: ExperimentType,
    q1: Option<Sign>,
    q2: Option<Sign>,
) -> StandardContext {
    StandardContext {
        blockers: Blockers(bits),
        kind,
        q1,
        q2,
    }
}

use ExperimentType::*;
use Sign::*;

/// The nine contexts in slot order.
pub const STANDARD_CONTEXTS: [StandardContext; NUM_CONTEXTS] = [
    sc([1, 1, 1, 1], T3, None, None),
    sc([1, 0, 1, 1], T1T3, Some(Plus), None),
    sc([0, 1, 1, 1], T1T3, Some(Minus), None),
    sc([1, 1, 1, 0], T2T3, None, Some(Plus)),
    sc([1, 1, 0, 1], T2T3, None, Some(Minus)),
    sc([1, 0, 1, 0], T1T2T3, Some(Plus), Some(Plus)),
    sc([1, 0, 0, 1], T1T2T3, Some(Plus), Some(Minus)),
    sc([0, 1, 1, 0], T1T2T3, Some(Minus), Some(Plus)),
    sc([0, 1, 0, 1], T1T2T3, Some(Minus), Some(Minus)),
];

pub fn slot_of(blockers: Blockers) -> Option<usize> {
    STANDARD_CONTEXTS.iter().position(|c| c.blockers == blockers)
}

/// Slots belonging to one experiment type, in label order.
pub fn slots_of(kind: ExperimentType) -> &'static [usize] {
    match kind {
        T3 => &[slot::OPEN],
        T1T3 => &[slot::T13_PLUS, slot::T13_MINUS],
        T2T3 => &[slot::T23_PLUS, slot::T23_MINUS],
        T1T2T3 => &[
            slot::T123_PP,
            slot::T123_PM,
            slot::T123_MP,
            slot::T123_MM,
        ],
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionTriple {
    pub d1: bool,
    pub d2: bool,
    pub d3: bool,
}

impl DetectionTriple {
    /// E+ : herald with D2 only.
    pub fn plus(&self) -> bool {
        self.d1 && self.d2 && !self.d3
    }

    /// E- : herald with D3 only.
    pub fn minus(&self) -> bool {
        self.d1 && !self.d2 && self.d3
    }

    pub fn double(&self) -> bool {
        self.d1 && self.d2 && self.d3
    }

    /// E = E+ ∪ E-.
    pub fn coincidence(&self) -> bool {
        self.d1 && (self.d2 ^ self.d3)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextCounts {
    pub n_total: u64,
    pub n_herald: u64,
    pub n_plus: u64,
    pub n_minus: u64,
    pub n_double: u64,
}

impl ContextCounts {
    pub fn record(&mut self, t: DetectionTriple) {
        self.n_total += 1;
        self.n_herald += t.d1 as u64;
        self.n_plus += t.plus() as u64;
        self.n_minus += t.minus() as u64;
        self.n_double += t.double() as u64;
    }

    pub fn merge(mut self, other: ContextCounts) -> ContextCounts {
        self.n_total += other.n_total;
        self.n_herald += other.n_herald;
        self.n_plus += other.n_plus;
        self.n_minus += other.n_minus;
        self.n_double += other.n_double;
        self
    }

    /// `n_plus + n_minus`.
    pub fn coincidences(&self) -> u64 {
        self.n_plus + self.n_minus
    }

    pub fn is_consistent(&self) -> bool {
        self.n_plus + self.n_minus + self.n_double <= self.n_herald
            && self.n_herald <= self.n_total
    }
}

/// Full reference pipeline for one context.
pub fn evaluate_context(
    h: &HiddenState,
    src: &SourceParams,
    ctx: &Context,
    gamma: f64,
) -> DetectionTriple {
    let (a1, a2, a3) = source_output(h, src);
    let (a2, a3) = stage1(a2, a3, h, ctx);
    let (a2, a3) = stage2(a2, a3, h, ctx);
    let (a2, a3) = stage3(a2, a3, ctx);
    DetectionTriple {
        d1: detect(a1, gamma),
        d2: detect(a2, gamma),
        d3: detect(a3, gamma),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DrawMode {
    Independent,
    Shared,
}

impl std::str::FromStr for DrawMode {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "independent" => Ok(DrawMode::Independent),
            "shared" => Ok(DrawMode::Shared),
            other => Err(ConfigError::Mode(other.to_string())),
        }
    }
}

impl std::fmt::Display for DrawMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DrawMode::Independent => "independent",
            DrawMode::Shared => "shared",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExperimentPlan {
    pub source: SourceParams,
    pub optics: OpticalParams,
    pub gamma: f64,
    pub samples: u64,
    pub reps: u64,
    pub mode: DrawMode,
    pub seed: u64,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<(), ConfigError> {
        SourceParams::new(self.source.r)?;
        self.optics.validate()?;
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(ConfigError::Threshold(self.gamma));
        }
        if self.samples == 0 {
            return Err(ConfigError::NoSamples);
        }
        if self.reps == 0 {
            return Err(ConfigError::NoRepetitions);
        }
        Ok(())
    }

    pub fn context(&self, slot: usize) -> Context {
        Context::new(STANDARD_CONTEXTS[slot].blockers, self.optics)
    }

    pub fn contexts(&self) -> [Context; NUM_CONTEXTS] {
        std::array::from_fn(|k| self.context(k))
    }
}

/// Precomputed coefficients of the whole network for one context.
#[derive(Clone, Copy, Debug)]
struct Network {
    ch: f64,
    sh: f64,
    open: [bool; 4],
    s_t1: f64,
    s_r1: f64,
    s_t2: f64,
    s_r2: f64,
    s_t3: f64,
    s_r3: f64,
    ph1: num_complex::Complex64,
    ph2: num_complex::Complex64,
    gamma_sq: f64,
}

impl Network {
    fn new(src: &SourceParams, ctx: &Context, gamma: f64) -> Self {
        let o = &ctx.optics;
        Self {
            ch: SIGMA * src.r.cosh(),
            sh: SIGMA * src.r.sinh(),
            open: std::array::from_fn(|i| ctx.blockers.is_open(i + 1)),
            s_t1: o.t1.sqrt(),
            s_r1: o.r1().sqrt(),
            s_t2: o.t2.sqrt(),
            s_r2: o.r2().sqrt(),
            s_t3: o.t3.sqrt(),
            s_r3: o.r3().sqrt(),
            ph1: num_complex::Complex64::from_polar(1.0, o.theta1),
            ph2: num_complex::Complex64::from_polar(1.0, o.theta2),
            gamma_sq: gamma * gamma,
        }
    }

    fn herald(&self, z1: JonesVector, z2: JonesVector) -> bool {
        (z1 * self.ch + z2.conj() * self.sh).norm_sqr() > self.gamma_sq
    }

    /// `(d2, d3)` for a realization.
    fn interferometer(&self, h: &HiddenState) -> (bool, bool) {
        let a2 = h.z2 * self.ch + h.z1.conj() * self.sh;
        let a3 = h.z3 * SIGMA;
        let b2 = if self.open[1] {
            a2 * self.s_r1 - a3 * self.s_t1
        } else {
            h.zp2 * SIGMA
        };
        let b3 = if self.open[0] {
            (a2 * self.s_t1 + a3 * self.s_r1) * self.ph1
        } else {
            h.zp1 * SIGMA
        };
        let c2 = if self.open[2] {
            (b2 * self.s_r2 - b3 * self.s_t2) * self.ph2
        } else {
            h.zp3 * SIGMA
        };
        let c3 = if self.open[3] {
            b2 * self.s_t2 + b3 * self.s_r2
        } else {
            h.zp4 * SIGMA
        };
        let d2 = c2 * self.s_t3 + c3 * self.s_r3;
        let d3 = c2 * self.s_r3 - c3 * self.s_t3;
        (
            d2.norm_sqr() > self.gamma_sq,
            d3.norm_sqr() > self.gamma_sq,
        )
    }

    fn triple(&self, block: &UniformBlock) -> DetectionTriple {
        let (z1, z2) = block.source_pair();
        if !self.herald(z1, z2) {
            return DetectionTriple::default();
        }
        let (d2, d3) = self.interferometer(&block.complete(z1, z2));
        DetectionTriple { d1: true, d2, d3 }
    }
}

fn chunk_bounds(samples: u64) -> impl IndexedParallelIterator<Item = (u64, u64)> {
    let n_chunks = samples.div_ceil(CHUNK) as usize;
    (0..n_chunks).into_par_iter().map(move |c| {
        let c = c as u64;
        (c * CHUNK, ((c + 1) * CHUNK).min(samples))
    })
}

/// Tally one context over `samples` realizations of a given stream.
pub fn count_stream(
    plan: &ExperimentPlan,
    ctx: &Context,
    id: StreamId,
    samples: u64,
) -> ContextCounts {
    let net = Network::new(&plan.source, ctx, plan.gamma);
    chunk_bounds(samples)
        .map(|(start, end)| {
            let mut stream = HiddenStream::new(plan.seed, id);
            stream.seek(start);
            let mut counts = ContextCounts::default();
            for _ in start..end {
                counts.record(net.triple(&stream.next_block()));
            }
            counts
        })
        .reduce(ContextCounts::default, ContextCounts::merge)
}

/// Independent-draw tallies for standard context `slot` in repetition `rep`.
pub fn run_context(plan: &ExperimentPlan, slot: usize, rep: u64) -> ContextCounts {
    let id = StreamId::Context {
        rep,
        slot: slot as u8,
    };
    count_stream(plan, &plan.context(slot), id, plan.samples)
}

/// Independent-draw tallies for all nine contexts.
pub fn run_independent(plan: &ExperimentPlan, rep: u64) -> [ContextCounts; NUM_CONTEXTS] {
    std::array::from_fn(|k| run_context(plan, k, rep))
}

/// Per-realization membership bits under all nine contexts.
///
/// Row layout: bit 0 is D1; bits `1 + 2k` and `2 + 2k` are D2 and D3 under
/// context slot `k`. 19 bits are used.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CounterfactualRecord {
    rows: Vec<u32>,
}

impl CounterfactualRecord {
    pub fn from_rows(rows: Vec<u32>) -> Self {
        Self { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[u32] {
        &self.rows
    }

    pub fn pack(d1: bool, per_context: &[(bool, bool); NUM_CONTEXTS]) -> u32 {
        let mut row = d1 as u32;
        for (k, &(d2, d3)) in per_context.iter().enumerate() {
            row |= (d2 as u32) << (1 + 2 * k);
            row |= (d3 as u32) << (2 + 2 * k);
        }
        row
    }

    pub fn triple(&self, i: usize, slot: usize) -> DetectionTriple {
        let row = self.rows[i];
        DetectionTriple {
            d1: row & 1 == 1,
            d2: (row >> (1 + 2 * slot)) & 1 == 1,
            d3: (row >> (2 + 2 * slot)) & 1 == 1,
        }
    }

    pub fn herald(&self, i: usize) -> bool {
        self.rows[i] & 1 == 1
    }

    pub fn herald_count(&self) -> u64 {
        self.rows.iter().filter(|&&r| r & 1 == 1).count() as u64
    }

    /// Membership of realization `i` in E(b) for context `slot`.
    pub fn coincidence(&self, i: usize, slot: usize) -> bool {
        self.triple(i, slot).coincidence()
    }

    /// μ[∪ E(b)] over the given slots.
    pub fn union_count(&self, slots: &[usize]) -> u64 {
        (0..self.rows.len())
            .filter(|&i| slots.iter().any(|&k| self.coincidence(i, k)))
            .count() as u64
    }

    /// μ[A △ B] for A, B unions over the given slot groups.
    pub fn symmetric_difference_count(&self, a: &[usize], b: &[usize]) -> u64 {
        (0..self.rows.len())
            .filter(|&i| {
                let in_a = a.iter().any(|&k| self.coincidence(i, k));
                let in_b = b.iter().any(|&k| self.coincidence(i, k));
                in_a != in_b
            })
            .count() as u64
    }

    pub fn context_counts(&self) -> [ContextCounts; NUM_CONTEXTS] {
        std::array::from_fn(|k| {
            let mut c = ContextCounts::default();
            for i in 0..self.rows.len() {
                c.record(self.triple(i, k));
            }
            c
        })
    }
}

/// Shared-draw run: one hidden state per realization, evaluated under all
/// nine contexts.
pub fn run_counterfactual(plan: &ExperimentPlan, rep: u64) -> CounterfactualRecord {
    let nets: [Network; NUM_CONTEXTS] =
        std::array::from_fn(|k| Network::new(&plan.source, &plan.context(k), plan.gamma));
    let id = StreamId::Shared { rep };
    let mut rows = vec![0u32; plan.samples as usize];
    rows.par_chunks_mut(CHUNK as usize)
        .enumerate()
        .for_each(|(c, out)| {
            let mut stream = HiddenStream::new(plan.seed, id);
            stream.seek(c as u64 * CHUNK);
            for row in out.iter_mut() {
                let block = stream.next_block();
                let h = block.hidden_state();
                let d1 = nets[0].herald(h.z1, h.z2);
                let bits = std::array::from_fn(|k| nets[k].interferometer(&h));
                *row = CounterfactualRecord::pack(d1, &bits);
            }
        });
    CounterfactualRecord { rows }
}

/// Per-context tallies of the shared stream without materializing the record.
pub fn run_shared_context(plan: &ExperimentPlan, slot: usize, rep: u64) -> ContextCounts {
    count_stream(
        plan,
        &plan.context(slot),
        StreamId::Shared { rep },
        plan.samples,
    )
}
