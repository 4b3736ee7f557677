//! Fourier-series evaluation of clustering and separation statistics.
//!
//! An even kernel on the circle is stored through its coefficients
//! `a_0, a_1, ..., a_M` with `Q(x) = a_0 + 2 * sum_{n>=1} a_n cos(n x)`.
//! Chains of acquaintances become convolutions of the kernel with itself, and
//! convolutions become powers of the coefficients, so every chain statistic is
//! a single cosine sum. All sums run over the symmetric index range and are
//! evaluated in real cosine form.
//!
//! Values are returned with a bound on the truncation error. Coefficients of
//! the uniform window decay like `p / (pi n)`; the series records that decay
//! constant so tail bounds can be computed for any power of the coefficients.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::ConnectionKernel;
use crate::quadrature::integrate_periodic;

/// Default truncation for single sums.
pub const DEFAULT_TRUNCATION: usize = 4096;
/// Default truncation for the double and triple correction sums.
pub const DEFAULT_CORRECTION_TRUNCATION: usize = 128;
/// Work above which a correction evaluation is reported as expensive.
pub const CORRECTION_BUDGET: f64 = 1e8;

/// Truncated cosine coefficients of an even, real, 2pi-periodic function.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSeries {
    coeffs: Vec<f64>,
    tail_decay: Option<f64>,
}

/// A truncated-series value with a bound on the neglected tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: f64,
    pub error_bound: f64,
}

impl SeriesValue {
    fn scaled(self, c: f64) -> Self {
        Self {
            value: self.value * c,
            error_bound: self.error_bound * c.abs(),
        }
    }
}

impl FourierSeries {
    /// A series whose coefficients vanish beyond the last one given.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidArgument("empty coefficient list".into()));
        }
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(format!("coefficient {i} is not finite")));
        }
        Ok(Self {
            coeffs,
            tail_decay: None,
        })
    }

    /// Declares `|a_n| <= c / n` for every `n` beyond the truncation.
    pub fn with_tail_decay(mut self, c: f64) -> Self {
        self.tail_decay = Some(c.abs());
        self
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn truncation(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn tail_decay(&self) -> Option<f64> {
        self.tail_decay
    }

    /// Coefficient at any signed index; zero beyond the truncation.
    pub fn coeff(&self, index: i64) -> f64 {
        self.coeffs
            .get(index.unsigned_abs() as usize)
            .copied()
            .unwrap_or(0.0)
    }

    pub fn eval(&self, phi: f64) -> f64 {
        eval_series(self, phi)
    }

    /// Bound on `2 * sum_{n > M} |a_n|^power`.
    fn tail_power_bound(&self, power: u32) -> f64 {
        match self.tail_decay {
            None => 0.0,
            Some(c) => 2.0 * c.powi(power as i32) * zeta_tail(power, self.truncation()),
        }
    }
}

/// Bound on `sum_{n > m} n^-s` for `s >= 2`, and the harmonic-style
/// `1/m` for `s = 1` (which is only used with an oscillating factor).
fn zeta_tail(s: u32, m: usize) -> f64 {
    let m = m.max(1) as f64;
    if s <= 1 {
        1.0 / m
    } else {
        1.0 / ((s - 1) as f64 * m.powi(s as i32 - 1))
    }
}

/// Coefficients of the uniform window, `a_0 = p phi / pi`,
/// `a_n = p sin(n phi) / (pi n)`.
pub fn coeffs_uniform(p: f64, phi: f64, m: usize) -> Result<FourierSeries> {
    ConnectionKernel::uniform(p, phi)?;
    if m < 1 {
        return Err(Error::InvalidArgument("truncation must be at least 1".into()));
    }
    let mut coeffs = Vec::with_capacity(m + 1);
    coeffs.push(p * phi / PI);
    coeffs.extend((1..=m).map(|n| p * (n as f64 * phi).sin() / (PI * n as f64)));
    Ok(FourierSeries {
        coeffs,
        tail_decay: Some(p / PI),
    })
}

/// Coefficients by numerical integration, `a_n = (1/2pi) int Q(x) cos(n x) dx`,
/// split at the kernel's jumps.
pub fn coeffs_numeric(kernel: &ConnectionKernel, m: usize, tol: f64) -> Result<FourierSeries> {
    if kernel.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: kernel.dim(),
        });
    }
    if m < 1 {
        return Err(Error::InvalidArgument("truncation must be at least 1".into()));
    }
    let bps = kernel.discontinuities();
    let coeffs = (0..=m)
        .map(|n| {
            let r = integrate_periodic(
                |x| kernel.value_1d(x) * (n as f64 * x).cos(),
                &bps,
                2.0 * PI * tol,
            )?;
            Ok(r.value / (2.0 * PI))
        })
        .collect::<Result<Vec<_>>>()?;
    let tail_decay = match kernel {
        ConnectionKernel::UniformWindow { p, phi } if *phi < PI => Some(p / PI),
        ConnectionKernel::CosineSeries { coeffs: own } if own.len() > m + 1 => Some(
            own.iter()
                .enumerate()
                .skip(m + 1)
                .map(|(n, a)| a.abs() * n as f64)
                .fold(0.0, f64::max),
        ),
        _ => None,
    };
    Ok(FourierSeries { coeffs, tail_decay })
}

/// `a_0 + 2 sum_{k=1}^M a_k cos(k phi)`.
pub fn eval_series(s: &FourierSeries, phi: f64) -> f64 {
    let tail: f64 = s
        .coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, a)| a * (k as f64 * phi).cos())
        .sum();
    s.coeffs[0] + 2.0 * tail
}

/// `a_0^power + 2 sum_{n>=1} a_n^power cos(n b)`, the symmetric-index sum.
fn power_cosine_sum(s: &FourierSeries, power: u32, b: f64) -> SeriesValue {
    let tail: f64 = s
        .coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(n, a)| a.powi(power as i32) * (n as f64 * b).cos())
        .sum();
    SeriesValue {
        value: s.coeffs[0].powi(power as i32) + 2.0 * tail,
        error_bound: s.tail_power_bound(power),
    }
}

/// Leading-order expected number of chains with `k` intermediates between
/// two nodes at angular distance `b`:
/// `(2 pi R)^k [a_0^{k+1} + 2 sum a_n^{k+1} cos(n b)]`.
///
/// This counts chains; it reads as a probability only when it is small.
pub fn p_sep_leading(s: &FourierSeries, radius: f64, k: u32, b: f64) -> SeriesValue {
    power_cosine_sum(s, k + 1, b).scaled((2.0 * PI * radius).powi(k as i32))
}

/// Separation-one value with the factor that excludes a direct link.
pub fn p1_full(s: &FourierSeries, radius: f64, b: f64, q_b: f64) -> SeriesValue {
    p_sep_leading(s, radius, 1, b).scaled(1.0 - q_b)
}

/// Work done by the correction sums at truncation `m_corr`.
pub fn correction_cost(m_corr: usize) -> f64 {
    let w = (2 * m_corr + 1) as f64;
    w * w
}

/// A warning when the correction sums exceed [`CORRECTION_BUDGET`].
pub fn correction_cost_warning(m_corr: usize) -> Option<String> {
    let cost = correction_cost(m_corr);
    (cost > CORRECTION_BUDGET).then(|| {
        format!("correction truncation {m_corr} needs {cost:e} operations (budget {CORRECTION_BUDGET:e})")
    })
}

/// The double and triple sums that correct the leading three-coefficient term:
/// returns `(D, T)` with
/// `D = sum_{m,n} a_m a_n a_{m+n}^2 cos(m b)` and
/// `T = sum_{m,n,p} a_{m+n+p} a_{m+n} a_m a_n a_p cos((m+p) b)`,
/// every free index running over `-m_corr..=m_corr`.
///
/// The innermost index of the triple sum only meets `s = m + n` and `b`, so
/// `sum_p a_{s+p} a_p cos((m+p) b)` is split with the angle-addition formula
/// into two tables over `s`, which brings the cost down to `O(m_corr^2)`.
fn correction_sums(s: &FourierSeries, b: f64, m_corr: usize) -> (f64, f64) {
    let mc = m_corr as i64;
    let a = |i: i64| s.coeff(i);
    let offset = 2 * mc;
    let width = (4 * mc + 1) as usize;
    let mut cos_table = vec![0.0; width];
    let mut sin_table = vec![0.0; width];
    for (idx, (c, sn)) in cos_table.iter_mut().zip(sin_table.iter_mut()).enumerate() {
        let sum_index = idx as i64 - offset;
        for p in -mc..=mc {
            let w = a(sum_index + p) * a(p);
            if w != 0.0 {
                let angle = p as f64 * b;
                *c += w * angle.cos();
                *sn += w * angle.sin();
            }
        }
    }
    let mut double = 0.0;
    let mut triple = 0.0;
    for m in -mc..=mc {
        let am = a(m);
        if am == 0.0 {
            continue;
        }
        let (sin_mb, cos_mb) = (m as f64 * b).sin_cos();
        for n in -mc..=mc {
            let sum_index = m + n;
            let w = am * a(n) * a(sum_index);
            if w == 0.0 {
                continue;
            }
            double += w * a(sum_index) * cos_mb;
            let idx = (sum_index + offset) as usize;
            triple += w * (cos_mb * cos_table[idx] - sin_mb * sin_table[idx]);
        }
    }
    (double, triple)
}

/// Bracketed three-, four- and five-coefficient combination, with the
/// corrections disabled when `m_corr == 0`.
fn bracket(s: &FourierSeries, b: f64, m_corr: usize) -> SeriesValue {
    let lead = power_cosine_sum(s, 3, b);
    if m_corr == 0 {
        return lead;
    }
    let (d, t) = correction_sums(s, b, m_corr);
    let value = lead.value - 2.0 * d + t;
    // The corrections converge like 1/m_corr with oscillation, so the change
    // over one halving can undershoot; take the larger of the last two.
    let (dh, th) = correction_sums(s, b, m_corr / 2);
    let (dq, tq) = correction_sums(s, b, m_corr / 4);
    let step = |d1: f64, t1: f64, d0: f64, t0: f64| (-2.0 * (d1 - d0) + (t1 - t0)).abs();
    let gauge = step(d, t, dh, th).max(step(dh, th, dq, tq));
    SeriesValue {
        value,
        error_bound: lead.error_bound + gauge,
    }
}

/// Separation-two value with all exclusion factors:
/// `(2 pi R)^2 (1 - Q(b)) [sum a^3 cos - 2 D + T]`.
///
/// `m_corr = 0` drops the correction sums, leaving the leading term times
/// `(1 - q_b)`.
pub fn p2_full(s: &FourierSeries, radius: f64, b: f64, q_b: f64, m_corr: usize) -> SeriesValue {
    let m_corr = m_corr.min(s.truncation());
    bracket(s, b, m_corr)
        .scaled((2.0 * PI * radius).powi(2))
        .scaled(1.0 - q_b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusteringMode {
    Leading,
    Full,
}

/// Clustering coefficient `(2 pi R / N)^2 [sum a^3 (- 2 D + T)]`.
///
/// The full mode carries no `(1 - Q(0))` factor.
pub fn clustering_from_series(
    s: &FourierSeries,
    radius: f64,
    mean_degree: f64,
    mode: ClusteringMode,
    m_corr: usize,
) -> Result<SeriesValue> {
    if !(mean_degree > 0.0) {
        return Err(Error::ZeroMeanDegree);
    }
    let norm = (2.0 * PI * radius / mean_degree).powi(2);
    let inner = match mode {
        ClusteringMode::Leading => power_cosine_sum(s, 3, 0.0),
        ClusteringMode::Full => bracket(s, 0.0, m_corr.min(s.truncation())),
    };
    Ok(inner.scaled(norm))
}

/// `sum_{n=1}^M (sin(n phi) / n)^power cos(n b)` for several powers in one pass.
fn sine_power_sums(phi: f64, powers: &[u32], b: f64, m: usize) -> Vec<f64> {
    let mut sums = vec![0.0; powers.len()];
    // smallest terms first
    for n in (1..=m).rev() {
        let x = (n as f64 * phi).sin() / n as f64;
        let c = if b == 0.0 { 1.0 } else { (n as f64 * b).cos() };
        for (acc, &pw) in sums.iter_mut().zip(powers) {
            *acc += x.powi(pw as i32) * c;
        }
    }
    sums
}

/// Closed-form clustering of the uniform window,
/// `(p / (pi phi^2)) [phi^3 + 2 sum sin^3(n phi) / n^3]`.
pub fn clustering_uniform_closed(p: f64, phi: f64, m_tail: usize) -> Result<SeriesValue> {
    ConnectionKernel::uniform(p, phi)?;
    let m_tail = m_tail.max(1);
    let sum = sine_power_sums(phi, &[3], 0.0, m_tail)[0];
    let pref = p / (PI * phi * phi);
    Ok(SeriesValue {
        value: pref * (phi.powi(3) + 2.0 * sum),
        error_bound: pref * 2.0 * zeta_tail(3, m_tail),
    })
}

/// Closed-form leading-order chain count of the uniform window,
/// `(p/pi) (N/phi)^k [phi^{k+1} + 2 sum sin^{k+1}(n phi)/n^{k+1} cos(n b)]`.
pub fn p_k_b_uniform(
    p: f64,
    phi: f64,
    mean_degree: f64,
    k: u32,
    b: f64,
    m_tail: usize,
) -> Result<SeriesValue> {
    ConnectionKernel::uniform(p, phi)?;
    if k < 1 {
        return Err(Error::InvalidArgument("separation k must be at least 1".into()));
    }
    let m_tail = m_tail.max(1);
    let sum = sine_power_sums(phi, &[k + 1], b, m_tail)[0];
    let pref = p / PI * (mean_degree / phi).powi(k as i32);
    Ok(SeriesValue {
        value: pref * (phi.powi(k as i32 + 1) + 2.0 * sum),
        error_bound: pref * 2.0 * zeta_tail(k + 1, m_tail),
    })
}

/// Chain count at the antipode and its normalization `P / (pi N^k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AntipodalSeparation {
    pub value: SeriesValue,
    pub normalized: SeriesValue,
}

pub fn p_k_pi_uniform(
    p: f64,
    phi: f64,
    mean_degree: f64,
    k: u32,
    m_tail: usize,
) -> Result<AntipodalSeparation> {
    let value = p_k_b_uniform(p, phi, mean_degree, k, PI, m_tail)?;
    let norm = 1.0 / (PI * mean_degree.powi(k as i32));
    Ok(AntipodalSeparation {
        value,
        normalized: value.scaled(norm),
    })
}

/// Normalized antipodal curves `P(k, pi) / (pi N^k)` for several `k` at one
/// half-width. The result does not depend on the radius.
pub fn normalized_antipodal_uniform(p: f64, phi: f64, ks: &[u32], m_tail: usize) -> Result<Vec<SeriesValue>> {
    ConnectionKernel::uniform(p, phi)?;
    if ks.iter().any(|&k| k < 1) {
        return Err(Error::InvalidArgument("separation k must be at least 1".into()));
    }
    let m_tail = m_tail.max(1);
    let powers: Vec<u32> = ks.iter().map(|k| k + 1).collect();
    let sums = sine_power_sums(phi, &powers, PI, m_tail);
    Ok(ks
        .iter()
        .zip(sums)
        .map(|(&k, sum)| {
            let pref = p / (PI * PI * phi.powi(k as i32));
            SeriesValue {
                value: pref * (phi.powi(k as i32 + 1) + 2.0 * sum),
                error_bound: pref * 2.0 * zeta_tail(k + 1, m_tail),
            }
        })
        .collect())
}

/// Leading-order chain count on a torus with a product kernel: the product
/// of the per-dimension circle values.
pub fn p_sep_torus(factors: &[FourierSeries], radii: &[f64], k: u32, b: &[f64]) -> Result<SeriesValue> {
    if factors.len() != radii.len() || factors.len() != b.len() || factors.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: factors.len(),
            got: if radii.len() != factors.len() { radii.len() } else { b.len() },
        });
    }
    Ok(product_of(
        factors
            .iter()
            .zip(radii)
            .zip(b)
            .map(|((s, r), bi)| p_sep_leading(s, *r, k, *bi)),
    ))
}

/// Leading-order clustering on a torus: the product of per-dimension values,
/// each normalized by its own mean degree `2 pi R a_0`.
pub fn clustering_torus(factors: &[FourierSeries], radii: &[f64]) -> Result<SeriesValue> {
    if factors.len() != radii.len() || factors.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: factors.len(),
            got: radii.len(),
        });
    }
    let parts = factors
        .iter()
        .zip(radii)
        .map(|(s, r)| {
            let n = 2.0 * PI * r * s.coeffs[0];
            clustering_from_series(s, *r, n, ClusteringMode::Leading, 0)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(product_of(parts.into_iter()))
}

fn product_of(parts: impl Iterator<Item = SeriesValue>) -> SeriesValue {
    // relative errors add to first order
    let mut value = 1.0;
    let mut abs_sum = 1.0;
    let mut err_sum = 1.0;
    for p in parts {
        value *= p.value;
        abs_sum *= p.value.abs();
        err_sum *= p.value.abs() + p.error_bound;
    }
    SeriesValue {
        value,
        error_bound: err_sum - abs_sum,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveMode {
    Kernel,
    Closed,
    Leading,
    Full,
    Quadrature,
    Mc,
}

impl fmt::Display for CurveMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CurveMode::Kernel => "kernel",
            CurveMode::Closed => "closed",
            CurveMode::Leading => "leading",
            CurveMode::Full => "full",
            CurveMode::Quadrature => "quadrature",
            CurveMode::Mc => "mc",
        };
        f.write_str(s)
    }
}

/// Tabulated separation values over a grid of angles for one `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationCurve {
    pub k: u32,
    pub b_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    pub mode: CurveMode,
    pub model: String,
}

impl SeparationCurve {
    pub fn new(
        k: u32,
        b_grid: Vec<f64>,
        values: Vec<f64>,
        errors: Vec<f64>,
        mode: CurveMode,
        model: impl Into<String>,
    ) -> Result<Self> {
        if b_grid.len() != values.len() || values.len() != errors.len() {
            return Err(Error::InvalidArgument("curve columns differ in length".into()));
        }
        if b_grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("b grid must be strictly increasing".into()));
        }
        if values.iter().chain(&errors).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("curve values must be finite".into()));
        }
        Ok(Self {
            k,
            b_grid,
            values,
            errors,
            mode,
            model: model.into(),
        })
    }
}
