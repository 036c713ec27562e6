//! Source, interferometer stages and threshold detectors.
//!
//! The beam `a1` travels to the heralding detector untouched. Beams `a2` and
//! `a3` pass through two blocker-equipped stages and a final beam splitter.
//! A blocked arm is replaced by a fresh vacuum vector `sigma * zp`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::jones::JonesVector;
use crate::sampling::HiddenState;

/// Scale of the vacuum fluctuations.
pub const SIGMA: f64 = FRAC_1_SQRT_2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceParams {
    /// Squeezing strength.
    pub r: f64,
}

impl SourceParams {
    pub fn new(r: f64) -> Result<Self, ConfigError> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(ConfigError::Squeezing(r));
        }
        Ok(Self { r })
    }

    pub fn sigma(&self) -> f64 {
        SIGMA
    }
}

/// Beam-splitter transmittances and phase delays.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpticalParams {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub theta1: f64,
    pub theta2: f64,
}

impl Default for OpticalParams {
    fn default() -> Self {
        Self {
            t1: 0.5,
            t2: 0.75,
            t3: 0.75,
            theta1: 0.0,
            theta2: 0.0,
        }
    }
}

impl OpticalParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, t) in [("t1", self.t1), ("t2", self.t2), ("t3", self.t3)] {
            if !(0.0..=1.0).contains(&t) {
                return Err(ConfigError::Transmittance { name, value: t });
            }
        }
        for (name, th) in [("theta1", self.theta1), ("theta2", self.theta2)] {
            if !th.is_finite() {
                return Err(ConfigError::Phase { name, value: th });
            }
        }
        Ok(())
    }

    pub fn r1(&self) -> f64 {
        1.0 - self.t1
    }

    pub fn r2(&self) -> f64 {
        1.0 - self.t2
    }

    pub fn r3(&self) -> f64 {
        1.0 - self.t3
    }
}

/// Blocker configuration `(b1, b2, b3, b4)`; a bit of 1 means the arm is open.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Blockers(pub [u8; 4]);

impl Blockers {
    pub const OPEN: Blockers = Blockers([1, 1, 1, 1]);

    pub fn new(bits: [u8; 4]) -> Result<Self, ConfigError> {
        if bits.iter().any(|&b| b > 1) {
            return Err(ConfigError::BlockerBits(bits));
        }
        Ok(Self(bits))
    }

    pub fn is_open(&self, arm: usize) -> bool {
        self.0[arm - 1] == 1
    }

    pub fn bit(&self, arm: usize) -> f64 {
        self.0[arm - 1] as f64
    }
}

impl fmt::Display for Blockers {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.0;
        write!(f, "{a}{b}{c}{d}")
    }
}

impl std::str::FromStr for Blockers {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().trim_start_matches('(').trim_end_matches(')');
        let digits: Vec<u8> = s
            .chars()
            .filter(|c| !matches!(c, ',' | ' '))
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(ConfigError::BlockerString(s.to_string())),
            })
            .collect::<Result<_, _>>()?;
        let bits: [u8; 4] = digits
            .try_into()
            .map_err(|_| ConfigError::BlockerString(s.to_string()))?;
        Blockers::new(bits)
    }
}

/// A measurement context: blocker bits plus the optical settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Context {
    pub blockers: Blockers,
    pub optics: OpticalParams,
}

impl Context {
    pub fn new(blockers: Blockers, optics: OpticalParams) -> Self {
        Self { blockers, optics }
    }
}

/// Beams leaving the squeezed source plus the vacuum entering BS1's free port.
pub fn source_output(
    h: &HiddenState,
    p: &SourceParams,
) -> (JonesVector, JonesVector, JonesVector) {
    let (ch, sh) = (p.r.cosh(), p.r.sinh());
    let a1 = (h.z1 * ch + h.z2.conj() * sh) * SIGMA;
    let a2 = (h.z2 * ch + h.z1.conj() * sh) * SIGMA;
    let a3 = h.z3 * SIGMA;
    (a1, a2, a3)
}

fn phase(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

/// BS1, PD1 and blockers BB1/BB2.
pub fn stage1(
    a2: JonesVector,
    a3: JonesVector,
    h: &HiddenState,
    ctx: &Context,
) -> (JonesVector, JonesVector) {
    let o = &ctx.optics;
    let (st, sr) = (o.t1.sqrt(), o.r1().sqrt());
    let out2 = if ctx.blockers.is_open(2) {
        a2 * sr - a3 * st
    } else {
        h.zp2 * SIGMA
    };
    let out3 = if ctx.blockers.is_open(1) {
        (a2 * st + a3 * sr) * phase(o.theta1)
    } else {
        h.zp1 * SIGMA
    };
    (out2, out3)
}

/// BS2, PD2 and blockers BB3/BB4.
pub fn stage2(
    a2: JonesVector,
    a3: JonesVector,
    h: &HiddenState,
    ctx: &Context,
) -> (JonesVector, JonesVector) {
    let o = &ctx.optics;
    let (st, sr) = (o.t2.sqrt(), o.r2().sqrt());
    let out2 = if ctx.blockers.is_open(3) {
        (a2 * sr - a3 * st) * phase(o.theta2)
    } else {
        h.zp3 * SIGMA
    };
    let out3 = if ctx.blockers.is_open(4) {
        a2 * st + a3 * sr
    } else {
        h.zp4 * SIGMA
    };
    (out2, out3)
}

/// BS3, no blockers.
pub fn stage3(a2: JonesVector, a3: JonesVector, ctx: &Context) -> (JonesVector, JonesVector) {
    let o = &ctx.optics;
    let (st, sr) = (o.t3.sqrt(), o.r3().sqrt());
    (a2 * st + a3 * sr, a2 * sr - a3 * st)
}

/// Threshold detector: fires iff the field norm strictly exceeds `gamma`.
pub fn detect(a: JonesVector, gamma: f64) -> bool {
    // Compare squares; both sides are non-negative.
    a.norm_sqr() > gamma * gamma
}
