//! Numerical integration and exact lattice sums.
//!
//! Everything here evaluates the defining integrals and sums directly, with no
//! Fourier algebra, so it can serve as ground truth for the series engine.
//! Integrals over the circle are split at the kernel's jump points: Gauss-Legendre
//! is exact on each constant piece of a window kernel, while smooth periodic
//! integrands use the equispaced rule, which converges spectrally.

use std::cell::Cell;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kernel::{wrap_angle, ConnectionKernel, NetworkModel};

/// Default tolerance for one- and two-dimensional integrals.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default tolerance for tensor grids on the torus.
pub const DEFAULT_TENSOR_TOL: f64 = 1e-6;
/// Work ceiling for exact lattice sums.
pub const DISCRETE_BUDGET: f64 = 4e9;

const GL_ORDER: usize = 10;
const MAX_EVALS: usize = 20_000_000;
const BREAKPOINT_MERGE: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut deriv = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
            }
            deriv = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / deriv;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            x = 0.0;
            deriv = 1.0;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * deriv * deriv);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Sorted breakpoints in [-pi, pi], always including both ends.
fn normalize_breakpoints(points: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut out: Vec<f64> = points
        .into_iter()
        .filter(|p| p.is_finite())
        .map(wrap_angle)
        .chain([-PI, PI])
        .collect();
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() < BREAKPOINT_MERGE);
    if let Some(first) = out.first_mut() {
        *first = -PI;
    }
    if let Some(last) = out.last_mut() {
        *last = PI;
    }
    out
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error).is_eq()
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    fn apply<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        half * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
    }

    /// Panel value from its two halves, with the disagreement as error.
    fn panel<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64, whole: f64) -> (Panel, Panel) {
        let m = 0.5 * (a + b);
        let left = self.apply(f, a, m);
        let right = self.apply(f, m, b);
        let err = (left + right - whole).abs();
        // children start with the parent's error split evenly
        (
            Panel { a, b: m, value: left, error: 0.5 * err },
            Panel { a: m, b, value: right, error: 0.5 * err },
        )
    }
}

/// Integrates `f` over one period, splitting at `breakpoints`.
///
/// With no breakpoints the integrand is assumed smooth and periodic and the
/// equispaced rule is doubled until successive values agree to `tol`.
/// Otherwise each piece gets Gauss-Legendre panels, and the panel with the
/// largest error estimate is bisected until the total estimate is below `tol`.
pub fn integrate_periodic<F>(f: F, breakpoints: &[f64], tol: f64) -> Result<IntegrationResult>
where
    F: Fn(f64) -> f64,
{
    let bps = normalize_breakpoints(breakpoints.iter().copied());
    if bps.len() == 2 {
        return periodic_trapezoid(&f, tol);
    }
    let (nodes, weights) = gauss_legendre(GL_ORDER);
    let rule = GaussRule { nodes, weights };
    let per_panel = 2 * GL_ORDER;
    let mut evaluations = 0;
    let mut heap = std::collections::BinaryHeap::new();
    for w in bps.windows(2) {
        let whole = rule.apply(&f, w[0], w[1]);
        let (l, r) = rule.panel(&f, w[0], w[1], whole);
        evaluations += GL_ORDER + per_panel;
        heap.push(l);
        heap.push(r);
    }
    loop {
        let total_err: f64 = heap.iter().map(|p| p.error).sum();
        if total_err <= tol && total_err.is_finite() {
            break;
        }
        let worst = match heap.peek() {
            Some(p) if p.b - p.a > 1e-15 && evaluations < MAX_EVALS => heap.pop().unwrap(),
            _ => {
                return Err(Error::QuadratureNonConvergence {
                    requested: tol,
                    achieved: total_err,
                    evaluations,
                })
            }
        };
        let (l, r) = rule.panel(&f, worst.a, worst.b, worst.value);
        evaluations += per_panel;
        heap.push(l);
        heap.push(r);
    }
    // sum in position order so the result does not depend on heap layout
    let mut panels = heap.into_vec();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value: f64 = panels.iter().map(|p| p.value).sum();
    let error_estimate: f64 = panels.iter().map(|p| p.error).sum();
    if !value.is_finite() {
        return Err(Error::QuadratureNonConvergence {
            requested: tol,
            achieved: error_estimate,
            evaluations,
        });
    }
    Ok(IntegrationResult {
        value,
        error_estimate,
        evaluations,
    })
}

fn periodic_trapezoid<F: Fn(f64) -> f64>(f: &F, tol: f64) -> Result<IntegrationResult> {
    let trap = |n: usize| -> f64 {
        let h = 2.0 * PI / n as f64;
        h * (0..n).map(|i| f(-PI + h * i as f64)).sum::<f64>()
    };
    let mut n = 16;
    let mut prev = trap(n);
    let mut evaluations = n;
    loop {
        n *= 2;
        let next = trap(n);
        evaluations += n;
        let err = (next - prev).abs();
        if err <= tol && next.is_finite() {
            return Ok(IntegrationResult {
                value: next,
                error_estimate: err,
                evaluations,
            });
        }
        if evaluations > MAX_EVALS || !next.is_finite() {
            return Err(Error::QuadratureNonConvergence {
                requested: tol,
                achieved: err,
                evaluations,
            });
        }
        prev = next;
    }
}

fn shifted(set: &[f64], by: f64) -> impl Iterator<Item = f64> + '_ {
    set.iter().map(move |d| d + by)
}

fn pair_sums(set: &[f64]) -> Vec<f64> {
    set.iter()
        .flat_map(|a| set.iter().map(move |b| a + b))
        .collect()
}

/// Nested adaptive integration over two angles.
///
/// The inner integral's error is folded into the reported estimate.
fn integrate_2d<F, G>(f: F, outer_bps: &[f64], inner_bps: G, tol: f64) -> Result<IntegrationResult>
where
    F: Fn(f64, f64) -> f64,
    G: Fn(f64) -> Vec<f64>,
{
    let inner_tol = tol / (8.0 * PI);
    let inner_err = Cell::new(0.0f64);
    let inner_evals = Cell::new(0usize);
    let failure = Cell::new(None::<Error>);
    let outer = integrate_periodic(
        |x| {
            let bps = inner_bps(x);
            match integrate_periodic(|y| f(x, y), &bps, inner_tol) {
                Ok(r) => {
                    inner_err.set(inner_err.get().max(r.error_estimate));
                    inner_evals.set(inner_evals.get() + r.evaluations);
                    r.value
                }
                Err(e) => {
                    let prev = failure.take();
                    failure.set(prev.or(Some(e)));
                    f64::NAN
                }
            }
        },
        outer_bps,
        0.5 * tol,
    );
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let outer = outer?;
    Ok(IntegrationResult {
        value: outer.value,
        error_estimate: outer.error_estimate + 2.0 * PI * inner_err.get(),
        evaluations: inner_evals.get(),
    })
}

/// Mean degree by direct integration of the kernel over the circle.
pub fn mean_degree_quad(kernel: &ConnectionKernel, radius: f64, tol: f64) -> Result<IntegrationResult> {
    let r = integrate_periodic(|x| kernel.value_1d(x), &kernel.discontinuities(), tol / radius)?;
    Ok(IntegrationResult {
        value: radius * r.value,
        error_estimate: radius * r.error_estimate,
        evaluations: r.evaluations,
    })
}

/// Clustering coefficient by integrating the triangle density around `anchor`.
pub fn clustering_quad_at(
    kernel: &ConnectionKernel,
    radius: f64,
    anchor: f64,
    tol: f64,
) -> Result<IntegrationResult> {
    let d = kernel.discontinuities();
    let n = mean_degree_quad(kernel, radius, tol)?;
    if !(n.value > 0.0) {
        return Err(Error::ZeroMeanDegree);
    }
    let outer: Vec<f64> = shifted(&d, anchor)
        .chain(shifted(&pair_sums(&d), anchor))
        .collect();
    let q = |a: f64| kernel.value_1d(a);
    // Scale the target so that the relative accuracy of the ratio stays near tol.
    let scale = (n.value / radius).powi(2);
    let tri = integrate_2d(
        |x, y| q(x - anchor) * q(x - y) * q(y - anchor),
        &outer,
        |x| shifted(&d, anchor).chain(shifted(&d, x)).collect(),
        tol * scale,
    )?;
    let r2 = radius * radius;
    let value = r2 * tri.value / (n.value * n.value);
    let rel = r2 * tri.error_estimate / (n.value * n.value)
        + 2.0 * value * n.error_estimate / n.value;
    Ok(IntegrationResult {
        value,
        error_estimate: rel,
        evaluations: tri.evaluations + n.evaluations,
    })
}

/// Clustering coefficient of a model by direct quadrature.
///
/// On a torus the product integrand factorizes into per-dimension circle
/// integrals; the result is cross-checked against the unfactorized tensor
/// grid and their difference is folded into the error estimate.
pub fn clustering_quad(model: &NetworkModel, tol: f64) -> Result<IntegrationResult> {
    model.mean_degree().nonzero()?;
    match model.space() {
        crate::kernel::Space::Circle { radius } => clustering_quad_at(model.kernel(), *radius, 0.0, tol),
        crate::kernel::Space::Torus { radii } => {
            let mut value = 1.0;
            let mut rel = 0.0;
            let mut evaluations = 0;
            for (f, r) in model.kernel().factors().iter().zip(radii) {
                let c = clustering_quad_at(f, *r, 0.0, tol)?;
                value *= c.value;
                rel += c.error_estimate / c.value;
                evaluations += c.evaluations;
            }
            let tensor = clustering_tensor(model, DEFAULT_TENSOR_TOL)?;
            let gap = (tensor.value - value).abs();
            let error_estimate = (rel * value).max(gap);
            if gap > DEFAULT_TENSOR_TOL * value.abs().max(f64::MIN_POSITIVE) + tensor.error_estimate {
                return Err(Error::QuadratureNonConvergence {
                    requested: DEFAULT_TENSOR_TOL,
                    achieved: gap / value.abs(),
                    evaluations: evaluations + tensor.evaluations,
                });
            }
            Ok(IntegrationResult {
                value,
                error_estimate,
                evaluations: evaluations + tensor.evaluations,
            })
        }
    }
}

/// Continuum chain integral between the origin and `b` with `k` intermediate
/// nodes, with or without the exclusion factors that remove shorter chains.
pub fn p_chain_quad(
    model: &NetworkModel,
    k: usize,
    b: &[f64],
    with_exclusion: bool,
    tol: f64,
) -> Result<IntegrationResult> {
    if !(1..=2).contains(&k) {
        return Err(Error::InvalidArgument(format!("chain length k = {k} not in {{1, 2}}")));
    }
    if b.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: b.len(),
        });
    }
    match model.space() {
        crate::kernel::Space::Circle { radius } => {
            chain_quad_circle(model.kernel(), *radius, k, b[0], with_exclusion, tol)
        }
        crate::kernel::Space::Torus { .. } => {
            chain_tensor(model, k, b, with_exclusion, DEFAULT_TENSOR_TOL.max(tol))
        }
    }
}

fn chain_quad_circle(
    kernel: &ConnectionKernel,
    radius: f64,
    k: usize,
    b: f64,
    with_exclusion: bool,
    tol: f64,
) -> Result<IntegrationResult> {
    let d = kernel.discontinuities();
    let q = |a: f64| kernel.value_1d(a);
    let end = if with_exclusion { 1.0 - q(b) } else { 1.0 };
    if k == 1 {
        let bps: Vec<f64> = d.iter().copied().chain(shifted(&d, b)).collect();
        let r = integrate_periodic(|x| q(x) * q(x - b), &bps, tol / radius)?;
        return Ok(IntegrationResult {
            value: radius * r.value * end,
            error_estimate: radius * r.error_estimate,
            evaluations: r.evaluations,
        });
    }
    let dd = pair_sums(&d);
    let outer: Vec<f64> = d
        .iter()
        .copied()
        .chain(shifted(&d, b))
        .chain(dd.iter().copied())
        .chain(shifted(&dd, b))
        .collect();
    let r2 = radius * radius;
    let r = integrate_2d(
        |x, y| {
            let base = q(x) * q(x - y) * q(y - b);
            if with_exclusion && base != 0.0 {
                base * (1.0 - q(y)) * (1.0 - q(x - b))
            } else {
                base
            }
        },
        &outer,
        |x| {
            d.iter()
                .copied()
                .chain(shifted(&d, x))
                .chain(shifted(&d, b))
                .collect()
        },
        tol / r2,
    )?;
    Ok(IntegrationResult {
        value: r2 * r.value * end,
        error_estimate: r2 * r.error_estimate,
        evaluations: r.evaluations,
    })
}

/// Fixed composite rule over a nested set of angular variables.
///
/// Each variable's breakpoints may depend on the variables fixed before it.
struct TensorGrid<'a> {
    dims: usize,
    breakpoints: &'a dyn Fn(usize, &[f64]) -> Vec<f64>,
    smooth_panels: usize,
}

impl TensorGrid<'_> {
    fn integrate(&self, f: &dyn Fn(&[f64]) -> f64, order: usize) -> (f64, usize) {
        let (nodes, weights) = gauss_legendre(order);
        let mut point = vec![0.0; self.dims];
        let mut evals = 0;
        let v = self.level(0, &mut point, f, &nodes, &weights, &mut evals);
        (v, evals)
    }

    fn level(
        &self,
        l: usize,
        point: &mut Vec<f64>,
        f: &dyn Fn(&[f64]) -> f64,
        nodes: &[f64],
        weights: &[f64],
        evals: &mut usize,
    ) -> f64 {
        if l == self.dims {
            *evals += 1;
            return f(point);
        }
        let mut bps = normalize_breakpoints((self.breakpoints)(l, &point[..l]));
        if bps.len() == 2 {
            bps = (0..=self.smooth_panels)
                .map(|i| -PI + 2.0 * PI * i as f64 / self.smooth_panels as f64)
                .collect();
        }
        let mut total = 0.0;
        for w in bps.windows(2) {
            let half = 0.5 * (w[1] - w[0]);
            let mid = 0.5 * (w[1] + w[0]);
            let mut panel = 0.0;
            for (x, wt) in nodes.iter().zip(weights) {
                point[l] = mid + half * x;
                panel += wt * self.level(l + 1, point, f, nodes, weights, evals);
            }
            total += half * panel;
        }
        total
    }

    /// Integrates at two orders; the difference is the error estimate.
    fn run(&self, f: &dyn Fn(&[f64]) -> f64, tol: f64) -> Result<IntegrationResult> {
        let (fine, e1) = self.integrate(f, 6);
        let (coarse, e2) = self.integrate(f, 3);
        let err = (fine - coarse).abs();
        let evaluations = e1 + e2;
        if !(err <= tol * fine.abs().max(f64::MIN_POSITIVE)) && err > tol * 1e-3 {
            return Err(Error::QuadratureNonConvergence {
                requested: tol,
                achieved: err,
                evaluations,
            });
        }
        Ok(IntegrationResult {
            value: fine,
            error_estimate: err,
            evaluations,
        })
    }
}

fn torus_factors(model: &NetworkModel) -> (&[ConnectionKernel], &[f64]) {
    (model.kernel().factors(), model.radii())
}

/// Mean degree of a torus model from the unfactorized K-dimensional grid.
pub fn mean_degree_tensor(model: &NetworkModel, tol: f64) -> Result<IntegrationResult> {
    let (factors, radii) = torus_factors(model);
    let kdim = factors.len();
    let bps = |l: usize, _: &[f64]| factors[l].discontinuities();
    let grid = TensorGrid {
        dims: kdim,
        breakpoints: &bps,
        smooth_panels: 8,
    };
    let kernel = model.kernel();
    let r = grid.run(&|x| kernel.eval(x).unwrap_or(f64::NAN), tol)?;
    let vol: f64 = radii.iter().product();
    Ok(IntegrationResult {
        value: vol * r.value,
        error_estimate: vol * r.error_estimate,
        evaluations: r.evaluations,
    })
}

/// Clustering on any model from the unfactorized tensor grid over (x, y).
pub fn clustering_tensor(model: &NetworkModel, tol: f64) -> Result<IntegrationResult> {
    let (factors, radii) = torus_factors(model);
    let kdim = factors.len();
    let n = mean_degree_tensor(model, tol)?;
    if !(n.value > 0.0) {
        return Err(Error::ZeroMeanDegree);
    }
    let disc: Vec<Vec<f64>> = factors.iter().map(|f| f.discontinuities()).collect();
    let bps = |l: usize, fixed: &[f64]| -> Vec<f64> {
        if l < kdim {
            let d = &disc[l];
            d.iter().copied().chain(pair_sums(d)).collect()
        } else {
            let i = l - kdim;
            let d = &disc[i];
            d.iter().copied().chain(shifted(d, fixed[i])).collect()
        }
    };
    let grid = TensorGrid {
        dims: 2 * kdim,
        breakpoints: &bps,
        smooth_panels: 8,
    };
    let kernel = model.kernel();
    let integrand = |p: &[f64]| -> f64 {
        let (x, y) = p.split_at(kdim);
        let qx = kernel.eval(x).unwrap_or(f64::NAN);
        if qx == 0.0 {
            return 0.0;
        }
        let qy = kernel.eval(y).unwrap_or(f64::NAN);
        if qy == 0.0 {
            return 0.0;
        }
        let diff: Vec<f64> = x.iter().zip(y).map(|(a, c)| a - c).collect();
        qx * qy * kernel.eval(&diff).unwrap_or(f64::NAN)
    };
    let tri = grid.run(&integrand, tol)?;
    let vol2: f64 = radii.iter().map(|r| r * r).product();
    let value = vol2 * tri.value / (n.value * n.value);
    Ok(IntegrationResult {
        value,
        error_estimate: vol2 * tri.error_estimate / (n.value * n.value)
            + 2.0 * value * n.error_estimate / n.value,
        evaluations: tri.evaluations + n.evaluations,
    })
}

/// Chain integral on any model from the unfactorized tensor grid.
pub fn chain_tensor(
    model: &NetworkModel,
    k: usize,
    b: &[f64],
    with_exclusion: bool,
    tol: f64,
) -> Result<IntegrationResult> {
    let (factors, radii) = torus_factors(model);
    let kdim = factors.len();
    if b.len() != kdim {
        return Err(Error::DimensionMismatch {
            expected: kdim,
            got: b.len(),
        });
    }
    if !(1..=2).contains(&k) {
        return Err(Error::InvalidArgument(format!("chain length k = {k} not in {{1, 2}}")));
    }
    let kernel = model.kernel();
    let q = |v: &[f64]| kernel.eval(v).unwrap_or(f64::NAN);
    let end = if with_exclusion { 1.0 - q(b) } else { 1.0 };
    let disc: Vec<Vec<f64>> = factors.iter().map(|f| f.discontinuities()).collect();
    let sub = |u: &[f64], v: &[f64]| -> Vec<f64> { u.iter().zip(v).map(|(a, c)| a - c).collect() };

    let r = if k == 1 {
        let bps = |l: usize, _: &[f64]| -> Vec<f64> {
            let d = &disc[l];
            d.iter().copied().chain(shifted(d, b[l])).collect()
        };
        let grid = TensorGrid {
            dims: kdim,
            breakpoints: &bps,
            smooth_panels: 8,
        };
        grid.run(&|x| q(x) * q(&sub(x, b)), tol)?
    } else {
        let bps = |l: usize, fixed: &[f64]| -> Vec<f64> {
            if l < kdim {
                let d = &disc[l];
                let dd = pair_sums(d);
                d.iter()
                    .copied()
                    .chain(shifted(d, b[l]))
                    .chain(dd.iter().copied())
                    .chain(shifted(&dd, b[l]))
                    .collect()
            } else {
                let i = l - kdim;
                let d = &disc[i];
                d.iter()
                    .copied()
                    .chain(shifted(d, fixed[i]))
                    .chain(shifted(d, b[i]))
                    .collect()
            }
        };
        let grid = TensorGrid {
            dims: 2 * kdim,
            breakpoints: &bps,
            smooth_panels: 8,
        };
        grid.run(
            &|p| {
                let (x, y) = p.split_at(kdim);
                let qx = q(x);
                if qx == 0.0 {
                    return 0.0;
                }
                let base = qx * q(&sub(x, y)) * q(&sub(y, b));
                if with_exclusion && base != 0.0 {
                    base * (1.0 - q(y)) * (1.0 - q(&sub(x, b)))
                } else {
                    base
                }
            },
            tol,
        )?
    };
    let scale = radii.iter().product::<f64>().powi(k as i32);
    Ok(IntegrationResult {
        value: scale * r.value * end,
        error_estimate: scale * r.error_estimate,
        evaluations: r.evaluations,
    })
}

/// Exact expected chain counts on a ring of `n` equispaced nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainCount {
    /// Expected number of simple chains with `k` distinct intermediates.
    pub reduced: f64,
    /// The same sum with exclusion factors, for `k` in {1, 2}.
    pub with_exclusion: Option<f64>,
}

fn ring_table(n: usize, kernel: &ConnectionKernel) -> Result<Vec<f64>> {
    if kernel.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: kernel.dim(),
        });
    }
    if n < 3 {
        return Err(Error::InvalidArgument(format!("ring needs n >= 3 nodes, got {n}")));
    }
    Ok((0..n)
        .map(|d| kernel.value_1d(2.0 * PI * d as f64 / n as f64))
        .collect())
}

/// Expected degree of a node on the ring lattice.
pub fn discrete_mean_degree(n: usize, kernel: &ConnectionKernel) -> Result<f64> {
    let q = ring_table(n, kernel)?;
    Ok(q[1..].iter().sum())
}

/// Expected value of the pooled clustering ratio on the ring lattice:
/// expected linked neighbor pairs over expected neighbor pairs.
pub fn discrete_clustering(n: usize, kernel: &ConnectionKernel) -> Result<f64> {
    let q = ring_table(n, kernel)?;
    if (n as f64).powi(2) > DISCRETE_BUDGET {
        return Err(Error::BudgetExceeded {
            what: "discrete clustering sum".into(),
            cost: (n as f64).powi(2),
            budget: DISCRETE_BUDGET,
        });
    }
    let mut closed = 0.0;
    let mut pairs = 0.0;
    for j in 1..n {
        if q[j] == 0.0 {
            continue;
        }
        for k in (j + 1)..n {
            let w = q[j] * q[k];
            pairs += w;
            closed += w * q[k - j];
        }
    }
    if pairs == 0.0 {
        return Err(Error::UndefinedEstimate("no neighbor pairs on the lattice".into()));
    }
    Ok(closed / pairs)
}

/// Brute-force expected chain counts between node 0 and node `offset`.
pub fn discrete_chain_count(
    n: usize,
    kernel: &ConnectionKernel,
    k: usize,
    offset: usize,
) -> Result<ChainCount> {
    let q = ring_table(n, kernel)?;
    if !(1..=3).contains(&k) {
        return Err(Error::InvalidArgument(format!("chain length k = {k} not in {{1, 2, 3}}")));
    }
    let b = offset % n;
    if b == 0 {
        return Err(Error::InvalidArgument("offset must not coincide with node 0".into()));
    }
    let cost = (n as f64).powi(k as i32);
    if cost > DISCRETE_BUDGET {
        return Err(Error::BudgetExceeded {
            what: format!("{k}-chain lattice sum"),
            cost,
            budget: DISCRETE_BUDGET,
        });
    }
    let qd = |i: usize, j: usize| q[(i + n - j) % n];
    let q_ab = qd(b, 0);
    let inner = |c: usize| c != 0 && c != b;
    match k {
        1 => {
            let reduced: f64 = (0..n).filter(|&c| inner(c)).map(|c| qd(c, 0) * qd(b, c)).sum();
            Ok(ChainCount {
                reduced,
                with_exclusion: Some(reduced * (1.0 - q_ab)),
            })
        }
        2 => {
            let mut reduced = 0.0;
            let mut excl = 0.0;
            for c1 in (0..n).filter(|&c| inner(c)) {
                let a1 = qd(c1, 0);
                if a1 == 0.0 {
                    continue;
                }
                let not_b1 = 1.0 - qd(b, c1);
                for c2 in (0..n).filter(|&c| inner(c) && c != c1) {
                    let t = a1 * qd(c2, c1) * qd(b, c2);
                    reduced += t;
                    excl += t * (1.0 - qd(c2, 0)) * not_b1;
                }
            }
            Ok(ChainCount {
                reduced,
                with_exclusion: Some(excl * (1.0 - q_ab)),
            })
        }
        _ => {
            let mut reduced = 0.0;
            for c1 in (0..n).filter(|&c| inner(c)) {
                let a1 = qd(c1, 0);
                if a1 == 0.0 {
                    continue;
                }
                for c3 in (0..n).filter(|&c| inner(c) && c != c1) {
                    let a3 = qd(b, c3);
                    if a3 == 0.0 {
                        continue;
                    }
                    let mid: f64 = (0..n)
                        .filter(|&c| inner(c) && c != c1 && c != c3)
                        .map(|c2| qd(c2, c1) * qd(c3, c2))
                        .sum();
                    reduced += a1 * a3 * mid;
                }
            }
            Ok(ChainCount {
                reduced,
                with_exclusion: None,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(10);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // degree 19 is the highest integrated exactly by 10 nodes
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((v - 2.0 / 19.0).abs() < 1e-14);
        let (x1, w1) = gauss_legendre(1);
        assert_eq!((x1[0], w1[0]), (0.0, 2.0));
    }

    #[test]
    fn constant_and_orthogonality() {
        let r = integrate_periodic(|_| 0.7, &[], 1e-12).unwrap();
        assert!((r.value - 2.0 * PI * 0.7).abs() < 1e-12);
        for n in 1..6 {
            let r = integrate_periodic(|x| (n as f64 * x).cos(), &[], 1e-12).unwrap();
            assert!(r.value.abs() < 1e-12);
            let r = integrate_periodic(|x| (n as f64 * x).cos(), &[-0.3, 1.1], 1e-12).unwrap();
            assert!(r.value.abs() < 1e-12);
        }
    }

    #[test]
    fn window_integrates_to_twice_p_phi() {
        let k = ConnectionKernel::uniform(0.3, 0.8).unwrap();
        let r = integrate_periodic(|x| k.value_1d(x), &k.discontinuities(), 1e-12).unwrap();
        assert!((r.value - 2.0 * 0.3 * 0.8).abs() < 1e-13);
        assert!(r.error_estimate >= 0.0 && r.evaluations > 0);
    }

    #[test]
    fn missing_breakpoint_still_converges() {
        let k = ConnectionKernel::uniform(0.3, 0.8).unwrap();
        let r = integrate_periodic(|x| k.value_1d(x), &[0.0], 1e-9).unwrap();
        assert!((r.value - 2.0 * 0.3 * 0.8).abs() < 1e-9);
    }

    #[test]
    fn unreachable_tolerance_is_an_error() {
        // an unbounded integrand never settles
        let r = integrate_periodic(|x: f64| 1.0 / x.abs(), &[0.5], 1e-12);
        assert!(matches!(r, Err(Error::QuadratureNonConvergence { .. })));
    }

    #[test]
    fn discrete_single_chain_by_hand() {
        let k = ConnectionKernel::constant(0.3).unwrap();
        let c = discrete_chain_count(4, &k, 1, 2).unwrap();
        let p: f64 = 0.3;
        assert!((c.reduced - 2.0 * p * p).abs() < 1e-15);
        assert!((c.with_exclusion.unwrap() - 2.0 * p * p * (1.0 - p)).abs() < 1e-15);
    }

    #[test]
    fn discrete_counts_with_constant_kernel() {
        // every ordered choice of distinct intermediates contributes p^(k+1)
        let p: f64 = 0.2;
        let k = ConnectionKernel::constant(p).unwrap();
        let n = 7usize;
        let m = (n - 2) as f64;
        let c2 = discrete_chain_count(n, &k, 2, 3).unwrap();
        assert!((c2.reduced - m * (m - 1.0) * p.powi(3)).abs() < 1e-14);
        let c3 = discrete_chain_count(n, &k, 3, 3).unwrap();
        assert!((c3.reduced - m * (m - 1.0) * (m - 2.0) * p.powi(4)).abs() < 1e-14);
    }

    #[test]
    fn discrete_rejects_bad_arguments() {
        let k = ConnectionKernel::uniform(0.1, 0.5).unwrap();
        assert!(discrete_chain_count(2, &k, 1, 1).is_err());
        assert!(discrete_chain_count(10, &k, 4, 1).is_err());
        assert!(discrete_chain_count(10, &k, 1, 10).is_err());
        assert!(matches!(
            discrete_chain_count(5000, &k, 3, 10),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn zero_kernel_gives_zero_everywhere() {
        let z = ConnectionKernel::constant(0.0).unwrap();
        for k in 1..=3 {
            assert_eq!(discrete_chain_count(12, &z, k, 6).unwrap().reduced, 0.0);
        }
        let m = NetworkModel::circle(5.0, z).unwrap();
        for k in 1..=2 {
            assert_eq!(p_chain_quad(&m, k, &[1.0], false, 1e-9).unwrap().value, 0.0);
        }
        assert_eq!(clustering_quad(&m, 1e-9), Err(Error::ZeroMeanDegree));
    }

    #[test]
    fn full_circle_clustering_is_p() {
        for p in [0.01, 0.1, 0.5, 1.0] {
            let m = NetworkModel::circle(10.0, ConnectionKernel::uniform(p, PI).unwrap()).unwrap();
            let c = clustering_quad(&m, 1e-9).unwrap();
            assert!((c.value - p).abs() < 1e-9, "{p}: {}", c.value);
        }
    }

    #[test]
    fn discrete_mean_degree_counts_window_nodes() {
        // n = 256, phi = 0.2: offsets |d| <= 8 fall inside the window
        let k = ConnectionKernel::uniform(0.5, 0.2).unwrap();
        assert_eq!(discrete_mean_degree(256, &k).unwrap(), 8.0);
    }
}
