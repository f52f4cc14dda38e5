//! Real single-qubit states and two-outcome projective measurements.
//!
//! A state `cos x |0> + sin x |1>` is stored as its angle `x`. Because `x` and
//! `x + pi` differ only by a global phase, state angles are canonical in
//! `[0, pi)`. A measurement with eigenbasis `{u, u + pi/2}` is canonical in
//! `[0, pi/2)`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduces `raw` into `[0, period)` by floor division.
fn reduce(raw: f64, period: f64) -> f64 {
    let r = raw - period * (raw / period).floor();
    // rounding can land exactly on the period for tiny negative inputs
    if r >= period || r < 0.0 {
        0.0
    } else {
        r
    }
}

/// Qubit state angle, canonical in `[0, pi)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateAngle(f64);

impl StateAngle {
    pub const ZERO: StateAngle = StateAngle(0.0);

    pub fn new(raw: f64) -> Result<Self> {
        canonicalize_state(raw)
    }

    /// Angle given in units of pi, e.g. `0.5` for `pi/2`.
    pub fn from_pi_units(units: f64) -> Result<Self> {
        canonicalize_state(units * PI)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for StateAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Measurement angle, canonical in `[0, pi/2)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MeasurementAngle(f64);

impl MeasurementAngle {
    pub fn new(raw: f64) -> Result<Self> {
        canonicalize_measurement(raw)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for MeasurementAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Outcome of a two-outcome projective measurement.
///
/// `Left` collapses onto the eigenstate at `u`, `Right` onto `u + pi/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Left,
    Right,
}

impl Outcome {
    pub const ALL: [Outcome; 2] = [Outcome::Left, Outcome::Right];

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Left => "L",
            Outcome::Right => "R",
        }
    }
}

pub fn canonicalize_state(raw: f64) -> Result<StateAngle> {
    if !raw.is_finite() {
        return Err(Error::NonFinite(raw));
    }
    Ok(StateAngle(reduce(raw, PI)))
}

pub fn canonicalize_measurement(raw: f64) -> Result<MeasurementAngle> {
    if !raw.is_finite() {
        return Err(Error::NonFinite(raw));
    }
    Ok(MeasurementAngle(reduce(raw, FRAC_PI_2)))
}

/// Post-measurement state for outcome `y` of measurement `u`.
pub fn eigenstate(u: MeasurementAngle, y: Outcome) -> StateAngle {
    match y {
        Outcome::Left => StateAngle(u.0),
        Outcome::Right => StateAngle(reduce(u.0 + FRAC_PI_2, PI)),
    }
}

/// Born-rule probability `cos^2(eigenstate(u, y) - x)`.
pub fn outcome_probability(x: StateAngle, u: MeasurementAngle, y: Outcome) -> f64 {
    let c = (eigenstate(u, y).0 - x.0).cos();
    (c * c).clamp(0.0, 1.0)
}

/// Samples an outcome and collapses onto the matching eigenstate.
///
/// Consumes exactly one uniform variate from `rng`.
pub fn measure<R: Rng + ?Sized>(
    x: StateAngle,
    u: MeasurementAngle,
    rng: &mut R,
) -> (Outcome, StateAngle) {
    let p_left = outcome_probability(x, u, Outcome::Left);
    let r: f64 = rng.gen();
    let y = if r < p_left { Outcome::Left } else { Outcome::Right };
    (y, eigenstate(u, y))
}

/// Overlap magnitude `|<a|b>| = |cos(a - b)|`.
pub fn fidelity(a: StateAngle, b: StateAngle) -> f64 {
    (a.0 - b.0).cos().abs().min(1.0)
}

/// Real symmetric 2x2 density operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DensityOperator(pub [[f64; 2]; 2]);

impl DensityOperator {
    pub const ZERO: DensityOperator = DensityOperator([[0.0; 2]; 2]);

    /// The maximally mixed state `I/2`.
    pub const MIXED: DensityOperator = DensityOperator([[0.5, 0.0], [0.0, 0.5]]);

    pub fn entries(&self) -> &[[f64; 2]; 2] {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    /// Eigenvalues in ascending order (closed form for symmetric 2x2).
    pub fn eigenvalues(&self) -> [f64; 2] {
        let half_tr = 0.5 * self.trace();
        let d = 0.5 * (self.0[0][0] - self.0[1][1]);
        let r = (d * d + self.0[0][1] * self.0[1][0]).max(0.0).sqrt();
        [half_tr - r, half_tr + r]
    }

    /// Largest absolute eigenvalue, i.e. the spectral norm of a symmetric matrix.
    pub fn spectral_norm(&self) -> f64 {
        let [lo, hi] = self.eigenvalues();
        lo.abs().max(hi.abs())
    }

    pub fn matmul(&self, other: &DensityOperator) -> [[f64; 2]; 2] {
        let (a, b) = (&self.0, &other.0);
        [
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ]
    }

    pub fn scale(&self, s: f64) -> DensityOperator {
        let a = &self.0;
        DensityOperator([[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]])
    }

    pub fn add(&self, other: &DensityOperator) -> DensityOperator {
        let (a, b) = (&self.0, &other.0);
        DensityOperator([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }

    pub fn sub(&self, other: &DensityOperator) -> DensityOperator {
        self.add(&other.scale(-1.0))
    }

    /// Symmetric, unit trace and positive semidefinite within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        (self.0[0][1] - self.0[1][0]).abs() <= tol
            && (self.trace() - 1.0).abs() <= tol
            && self.eigenvalues()[0] >= -tol
    }

    /// Flattened `[r00, r01, r10, r11]`.
    pub fn flat(&self) -> [f64; 4] {
        [self.0[0][0], self.0[0][1], self.0[1][0], self.0[1][1]]
    }

    pub fn max_abs_diff(&self, other: &DensityOperator) -> f64 {
        self.flat()
            .iter()
            .zip(other.flat())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Projector onto the pure state at angle `x`.
pub fn density_of(x: StateAngle) -> DensityOperator {
    let (s, c) = x.0.sin_cos();
    let cs = c * s;
    DensityOperator([[c * c, cs], [cs, s * s]])
}

/// `Tr(p q)`.
pub fn trace_product(p: &DensityOperator, q: &DensityOperator) -> f64 {
    let m = p.matmul(q);
    m[0][0] + m[1][1]
}
