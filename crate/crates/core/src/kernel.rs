//! Connection kernels and network models.
//!
//! A kernel gives the probability that two nodes are linked as a function of
//! their angular separation. On a circle the separation is a single wrapped
//! angle; on a flat torus it is one wrapped angle per dimension and the kernel
//! is a product of one-dimensional factors.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values of a reconstructed cosine series are accepted this far outside [0, 1].
pub const RANGE_TOLERANCE: f64 = 1e-9;

/// Wraps an angle into [-pi, pi].
pub fn wrap_angle(phi: f64) -> f64 {
    let w = phi - 2.0 * PI * (phi / (2.0 * PI)).round();
    w.clamp(-PI, PI)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectionKernel {
    /// `p` inside the half-width `phi`, zero outside.
    UniformWindow { p: f64, phi: f64 },
    /// `a0 + 2 * sum_k a_k cos(k x)`.
    CosineSeries { coeffs: Vec<f64> },
    /// Product of one-dimensional factors, one per torus dimension.
    Product { factors: Vec<ConnectionKernel> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    ProbabilityOutOfRange { p: f64 },
    HalfWidthOutOfRange { phi: f64 },
    NonFinite { index: usize },
    EmptySeries,
    NegativeProbability { angle: f64, value: f64 },
    ProbabilityAboveOne { angle: f64, value: f64 },
    EmptyProduct,
    NestedProduct { factor: usize },
    Factor { factor: usize, inner: Box<Violation> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ProbabilityOutOfRange { p } => write!(f, "p out of [0,1] (p = {p})"),
            Violation::HalfWidthOutOfRange { phi } => {
                if *phi == 0.0 {
                    write!(f, "phi out of (0,pi]: mean degree is zero")
                } else {
                    write!(f, "phi out of (0,pi] (phi = {phi})")
                }
            }
            Violation::NonFinite { index } => write!(f, "coefficient {index} is not finite"),
            Violation::EmptySeries => write!(f, "cosine series has no coefficients"),
            Violation::NegativeProbability { angle, value } => {
                write!(f, "negative probability {value} at angle {angle}")
            }
            Violation::ProbabilityAboveOne { angle, value } => {
                write!(f, "probability {value} above 1 at angle {angle}")
            }
            Violation::EmptyProduct => write!(f, "product kernel has no factors"),
            Violation::NestedProduct { factor } => {
                write!(f, "factor {factor} is itself a product kernel")
            }
            Violation::Factor { factor, inner } => write!(f, "factor {factor}: {inner}"),
        }
    }
}

impl ConnectionKernel {
    pub fn uniform(p: f64, phi: f64) -> Result<Self> {
        Self::UniformWindow { p, phi }.validated()
    }

    pub fn cosine(coeffs: Vec<f64>) -> Result<Self> {
        Self::CosineSeries { coeffs }.validated()
    }

    pub fn product(factors: Vec<ConnectionKernel>) -> Result<Self> {
        Self::Product { factors }.validated()
    }

    /// Constant kernel `Q = c` everywhere.
    pub fn constant(c: f64) -> Result<Self> {
        Self::cosine(vec![c])
    }

    pub fn validated(self) -> Result<Self> {
        let v = self.validate();
        if v.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidKernel(v))
        }
    }

    /// Lists every violation; an empty list means the kernel is usable.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        match self {
            ConnectionKernel::UniformWindow { p, phi } => {
                if !(0.0..=1.0).contains(p) {
                    out.push(Violation::ProbabilityOutOfRange { p: *p });
                }
                if !(*phi > 0.0 && *phi <= PI) {
                    out.push(Violation::HalfWidthOutOfRange { phi: *phi });
                }
            }
            ConnectionKernel::CosineSeries { coeffs } => {
                if coeffs.is_empty() {
                    out.push(Violation::EmptySeries);
                    return out;
                }
                for (index, c) in coeffs.iter().enumerate() {
                    if !c.is_finite() {
                        out.push(Violation::NonFinite { index });
                    }
                }
                if !out.is_empty() {
                    return out;
                }
                // A truncated series can overshoot near steep features, so the
                // range is checked on a grid denser than the highest harmonic.
                let m = coeffs.len() - 1;
                let points = 4 * m + 64;
                let mut worst_low: Option<(f64, f64)> = None;
                let mut worst_high: Option<(f64, f64)> = None;
                for i in 0..points {
                    let angle = -PI + 2.0 * PI * i as f64 / points as f64;
                    let v = cosine_value(coeffs, angle);
                    if v < -RANGE_TOLERANCE && worst_low.map_or(true, |(_, w)| v < w) {
                        worst_low = Some((angle, v));
                    }
                    if v > 1.0 + RANGE_TOLERANCE && worst_high.map_or(true, |(_, w)| v > w) {
                        worst_high = Some((angle, v));
                    }
                }
                if let Some((angle, value)) = worst_low {
                    out.push(Violation::NegativeProbability { angle, value });
                }
                if let Some((angle, value)) = worst_high {
                    out.push(Violation::ProbabilityAboveOne { angle, value });
                }
            }
            ConnectionKernel::Product { factors } => {
                if factors.is_empty() {
                    out.push(Violation::EmptyProduct);
                }
                for (i, f) in factors.iter().enumerate() {
                    if matches!(f, ConnectionKernel::Product { .. }) {
                        out.push(Violation::NestedProduct { factor: i });
                        continue;
                    }
                    out.extend(f.validate().into_iter().map(|inner| Violation::Factor {
                        factor: i,
                        inner: Box::new(inner),
                    }));
                }
            }
        }
        out
    }

    /// Number of angular coordinates the kernel takes.
    pub fn dim(&self) -> usize {
        match self {
            ConnectionKernel::Product { factors } => factors.len(),
            _ => 1,
        }
    }

    /// The one-dimensional factors: the kernel itself unless it is a product.
    pub fn factors(&self) -> &[ConnectionKernel] {
        match self {
            ConnectionKernel::Product { factors } => factors,
            other => std::slice::from_ref(other),
        }
    }

    pub fn eval(&self, angles: &[f64]) -> Result<f64> {
        if angles.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: angles.len(),
            });
        }
        Ok(self
            .factors()
            .iter()
            .zip(angles)
            .map(|(f, &a)| f.value_1d(a))
            .product())
    }

    pub fn eval_scalar(&self, angle: f64) -> Result<f64> {
        self.eval(std::slice::from_ref(&angle))
    }

    /// Evaluates a one-dimensional kernel. Product kernels evaluate every
    /// factor at the same angle, which is only meaningful for diagnostics.
    pub(crate) fn value_1d(&self, angle: f64) -> f64 {
        match self {
            ConnectionKernel::UniformWindow { p, phi } => {
                if wrap_angle(angle).abs() <= *phi {
                    *p
                } else {
                    0.0
                }
            }
            ConnectionKernel::CosineSeries { coeffs } => cosine_value(coeffs, wrap_angle(angle)),
            ConnectionKernel::Product { factors } => {
                factors.iter().map(|f| f.value_1d(angle)).product()
            }
        }
    }

    /// Angles in [-pi, pi] where a one-dimensional kernel jumps.
    pub fn discontinuities(&self) -> Vec<f64> {
        match self {
            ConnectionKernel::UniformWindow { phi, .. } if *phi < PI => vec![-phi, *phi],
            _ => Vec::new(),
        }
    }

    /// Half-width outside of which a one-dimensional kernel vanishes, if any.
    pub fn support_half_width(&self) -> Option<f64> {
        match self {
            ConnectionKernel::UniformWindow { p, .. } if *p == 0.0 => Some(0.0),
            ConnectionKernel::UniformWindow { phi, .. } if *phi < PI => Some(*phi),
            _ => None,
        }
    }

    /// Scales every probability by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        match self {
            ConnectionKernel::UniformWindow { p, phi } => Self::uniform(p * c, *phi),
            ConnectionKernel::CosineSeries { coeffs } => {
                Self::cosine(coeffs.iter().map(|a| a * c).collect())
            }
            ConnectionKernel::Product { factors } => {
                let mut factors = factors.clone();
                if let Some(first) = factors.first_mut() {
                    *first = first.scaled(c)?;
                }
                Self::product(factors)
            }
        }
    }
}

fn cosine_value(coeffs: &[f64], angle: f64) -> f64 {
    let tail: f64 = coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, a)| a * (k as f64 * angle).cos())
        .sum();
    coeffs[0] + 2.0 * tail
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    Circle { radius: f64 },
    Torus { radii: Vec<f64> },
}

impl Space {
    pub fn dim(&self) -> usize {
        match self {
            Space::Circle { .. } => 1,
            Space::Torus { radii } => radii.len(),
        }
    }

    pub fn radii(&self) -> &[f64] {
        match self {
            Space::Circle { radius } => std::slice::from_ref(radius),
            Space::Torus { radii } => radii,
        }
    }
}

/// Radius at which `n` equispaced nodes sit one unit apart.
pub fn unit_spacing_radius(n: usize) -> f64 {
    n as f64 / (2.0 * PI)
}

/// Mean degree, flagged when it vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanDegree {
    pub value: f64,
}

impl MeanDegree {
    pub fn is_degenerate(&self) -> bool {
        !(self.value > 0.0)
    }

    /// The value, or an error if clustering normalization would divide by zero.
    pub fn nonzero(&self) -> Result<f64> {
        if self.is_degenerate() {
            Err(Error::ZeroMeanDegree)
        } else {
            Ok(self.value)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel")]
pub struct NetworkModel {
    space: Space,
    kernel: ConnectionKernel,
}

#[derive(Deserialize)]
struct RawModel {
    space: Space,
    kernel: ConnectionKernel,
}

impl TryFrom<RawModel> for NetworkModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        NetworkModel::new(raw.space, raw.kernel)
    }
}

impl NetworkModel {
    pub fn new(space: Space, kernel: ConnectionKernel) -> Result<Self> {
        let radii = space.radii();
        if radii.is_empty() {
            return Err(Error::InvalidModel("torus needs at least one dimension".into()));
        }
        if let Some(r) = radii.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::InvalidModel(format!("radius must be positive, got {r}")));
        }
        match (&space, &kernel) {
            (Space::Circle { .. }, ConnectionKernel::Product { .. }) => {
                return Err(Error::InvalidModel(
                    "a product kernel needs a torus space".into(),
                ))
            }
            (Space::Torus { .. }, ConnectionKernel::Product { .. }) => {}
            (Space::Torus { .. }, _) => {
                return Err(Error::InvalidModel(
                    "a torus space needs a product kernel with one factor per dimension".into(),
                ))
            }
            _ => {}
        }
        if kernel.dim() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                got: kernel.dim(),
            });
        }
        let kernel = kernel.validated()?;
        Ok(Self { space, kernel })
    }

    pub fn circle(radius: f64, kernel: ConnectionKernel) -> Result<Self> {
        Self::new(Space::Circle { radius }, kernel)
    }

    pub fn torus(radii: Vec<f64>, factors: Vec<ConnectionKernel>) -> Result<Self> {
        Self::new(Space::Torus { radii }, ConnectionKernel::Product { factors })
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn kernel(&self) -> &ConnectionKernel {
        &self.kernel
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn radii(&self) -> &[f64] {
        self.space.radii()
    }

    /// Expected degree: the kernel integrated over the space.
    pub fn mean_degree(&self) -> MeanDegree {
        let value = self
            .kernel
            .factors()
            .iter()
            .zip(self.radii())
            .map(|(f, r)| factor_mean_degree(f, *r))
            .product();
        MeanDegree { value }
    }
}

fn factor_mean_degree(kernel: &ConnectionKernel, radius: f64) -> f64 {
    match kernel {
        ConnectionKernel::UniformWindow { p, phi } => 2.0 * radius * p * phi,
        ConnectionKernel::CosineSeries { coeffs } => 2.0 * PI * radius * coeffs[0],
        ConnectionKernel::Product { .. } => unreachable!("validated models have flat products"),
    }
}
