use std::f64::consts::PI;

use rayon::prelude::*;
use symnet_core::fourier::{
    clustering_from_series, clustering_torus, clustering_uniform_closed, coeffs_numeric, coeffs_uniform,
    correction_cost_warning, normalized_antipodal_uniform, p1_full, p2_full, p_k_b_uniform, p_sep_leading,
    p_sep_torus, ClusteringMode, FourierSeries, SeriesValue,
};
use symnet_core::mc::{Ensemble, Lattice, McEstimate};
use symnet_core::quadrature::{
    clustering_quad, discrete_chain_count, discrete_clustering, discrete_mean_degree, mean_degree_quad,
    p_chain_quad,
};
use symnet_core::ConnectionKernel;

use crate::config::{Mode, Resolved};
use crate::report::{Cell, Report, Table};
use crate::CliError;

/// z-score threshold for Monte Carlo checks.
pub const Z_LIMIT: f64 = 3.0;
/// Fixed relative tolerance between the series and the quadrature oracle.
pub const SERIES_QUAD_RTOL: f64 = 1e-6;

type Res<T> = Result<T, CliError>;

/// Per-dimension Fourier series of the model's kernel.
fn series(cfg: &Resolved) -> Res<Vec<FourierSeries>> {
    cfg.model
        .kernel()
        .factors()
        .iter()
        .map(|f| match f {
            ConnectionKernel::UniformWindow { p, phi } => coeffs_uniform(*p, *phi, cfg.truncation),
            other => coeffs_numeric(other, cfg.truncation, cfg.tol),
        })
        .collect::<Result<_, _>>()
        .map_err(CliError::from)
}

fn ensemble(cfg: &Resolved) -> Res<Ensemble> {
    let lattice = Lattice::torus(cfg.lattice.clone())?;
    Ok(Ensemble::new(lattice, cfg.model.kernel().clone(), cfg.seed, cfg.trials)?)
}

fn quad_tol(cfg: &Resolved) -> f64 {
    if cfg.is_circle() {
        cfg.tol
    } else {
        cfg.tensor_tol
    }
}

/// Angle vector for a displacement `b` along the first axis.
fn along_first_axis(cfg: &Resolved, b: f64) -> Vec<f64> {
    let mut v = vec![0.0; cfg.model.dim()];
    v[0] = b;
    v
}

fn skip(report: &mut Report, mode: Mode, why: &str) {
    report.note(format!("{mode}: {why}; skipped"));
}

struct Estimate {
    mode: String,
    value: f64,
    error: Option<f64>,
    std_error: Option<f64>,
    trials: Option<usize>,
}

impl Estimate {
    fn analytic(mode: &str, v: SeriesValue) -> Self {
        Self {
            mode: mode.into(),
            value: v.value,
            error: Some(v.error_bound),
            std_error: None,
            trials: None,
        }
    }

    fn quadrature(mode: &str, value: f64, err: f64) -> Self {
        Self {
            mode: mode.into(),
            value,
            error: Some(err),
            std_error: None,
            trials: None,
        }
    }

    fn mc(mode: &str, e: McEstimate) -> Self {
        Self {
            mode: mode.into(),
            value: e.mean,
            error: None,
            std_error: Some(e.std_error),
            trials: Some(e.trials),
        }
    }
}

pub fn clustering(cfg: &Resolved) -> Res<Report> {
    let mut report = Report::new("clustering", cfg);
    let n_mean = cfg.model.mean_degree().nonzero()?;
    let needs_series = cfg.has(Mode::Leading) || (cfg.has(Mode::Full) && cfg.is_circle());
    let s = if needs_series { series(cfg)? } else { Vec::new() };
    let mut rows: Vec<Estimate> = Vec::new();
    for &mode in &cfg.modes {
        match mode {
            Mode::Closed => match cfg.uniform() {
                Some((p, phi)) => rows.push(Estimate::analytic(
                    "closed",
                    clustering_uniform_closed(p, phi, cfg.tail_truncation)?,
                )),
                None => skip(&mut report, mode, "needs a uniform window on a circle"),
            },
            Mode::Leading => {
                let v = if cfg.is_circle() {
                    clustering_from_series(&s[0], cfg.radius(), n_mean, ClusteringMode::Leading, 0)?
                } else {
                    clustering_torus(&s, cfg.model.radii())?
                };
                rows.push(Estimate::analytic("leading", v));
            }
            Mode::Full => {
                if !cfg.is_circle() {
                    skip(&mut report, mode, "correction sums are implemented on the circle only");
                    continue;
                }
                if let Some(w) = correction_cost_warning(cfg.correction_truncation) {
                    report.note(w);
                }
                let v = clustering_from_series(
                    &s[0],
                    cfg.radius(),
                    n_mean,
                    ClusteringMode::Full,
                    cfg.correction_truncation,
                )?;
                rows.push(Estimate::analytic("full", v));
            }
            Mode::Quadrature => {
                let r = clustering_quad(&cfg.model, quad_tol(cfg))?;
                rows.push(Estimate::quadrature("quadrature", r.value, r.error_estimate));
            }
            Mode::Lattice => {
                if !cfg.is_circle() {
                    skip(&mut report, mode, "lattice sums are implemented on the ring only");
                    continue;
                }
                let v = discrete_clustering(cfg.lattice[0], cfg.model.kernel())?;
                rows.push(Estimate::quadrature("lattice", v, 0.0));
            }
            Mode::Mc => rows.push(Estimate::mc("mc", ensemble(cfg)?.clustering()?)),
        }
    }
    if rows.iter().any(|r| r.mode == "full") {
        report.note("full mode carries the exclusion corrections and is not expected to match the other modes");
    }

    let mut t = Table::new("clustering", &["mode", "value", "error_estimate", "std_error", "trials"]);
    for r in &rows {
        t.push(vec![
            r.mode.as_str().into(),
            r.value.into(),
            r.error.into(),
            r.std_error.into(),
            r.trials.into(),
        ]);
    }
    report.tables.push(t);
    report.tables.push(agreement(&rows));
    Ok(report)
}

/// Compares each mode against the first exact-route mode, and the Monte
/// Carlo estimate against the lattice expectation.
fn agreement(rows: &[Estimate]) -> Table {
    let mut t = Table::new(
        "agreement",
        &["mode", "reference", "delta", "tolerance", "z", "status"],
    );
    let exact = ["closed", "quadrature", "leading"];
    let find = |m: &str| rows.iter().find(|r| r.mode == m);
    let Some(reference) = exact.iter().find_map(|m| find(m)) else {
        return t;
    };
    for r in rows.iter().filter(|r| r.mode != reference.mode) {
        let delta = r.value - reference.value;
        if exact.contains(&r.mode.as_str()) {
            let tol = reference.error.unwrap_or(0.0)
                + r.error.unwrap_or(0.0)
                + 1e-12 * reference.value.abs();
            t.push(vec![
                r.mode.as_str().into(),
                reference.mode.as_str().into(),
                delta.into(),
                tol.into(),
                Cell::Empty,
                if delta.abs() <= tol { "pass" } else { "fail" }.into(),
            ]);
        } else {
            t.push(vec![
                r.mode.as_str().into(),
                reference.mode.as_str().into(),
                delta.into(),
                Cell::Empty,
                Cell::Empty,
                "info".into(),
            ]);
        }
    }
    if let (Some(mc), Some(lat)) = (find("mc"), find("lattice")) {
        let se = mc.std_error.unwrap_or(f64::INFINITY);
        let delta = mc.value - lat.value;
        let z = if delta == 0.0 { 0.0 } else { delta.abs() / se };
        t.push(vec![
            "mc".into(),
            "lattice".into(),
            delta.into(),
            (Z_LIMIT * se).into(),
            z.into(),
            if z <= Z_LIMIT { "pass" } else { "fail" }.into(),
        ]);
    }
    t
}

pub fn separation(cfg: &Resolved) -> Res<Report> {
    let mut report = Report::new("separation", cfg);
    report.note(format!(
        "b is an angle in radians; arc length is R*b with R = {:?}",
        cfg.model.radii()
    ));
    report.note("k >= 1 values are expected chain counts (leading order unless mode says otherwise), not probabilities");
    if !cfg.is_circle() {
        report.note("torus: b is a displacement along the first axis");
    }
    let n_mean = cfg.model.mean_degree().value;
    let kernel = cfg.model.kernel();
    let needs_series = cfg.has(Mode::Leading) || (cfg.has(Mode::Full) && cfg.is_circle());
    let s = if needs_series { series(cfg)? } else { Vec::new() };
    let mut t = Table::new(
        "separation",
        &["k", "b", "mode", "value", "error_estimate", "std_error", "trials", "lattice_b"],
    );
    let row = |t: &mut Table, k: u32, b: f64, e: Estimate, lb: Option<f64>| {
        t.push(vec![
            k.into(),
            b.into(),
            e.mode.as_str().into(),
            e.value.into(),
            e.error.into(),
            e.std_error.into(),
            e.trials.into(),
            lb.into(),
        ]);
    };

    // lattice targets, one per distinct offset
    let mut targets: Vec<(f64, usize)> = cfg
        .b_grid
        .iter()
        .map(|&b| (b, cfg.offset_for(b)))
        .filter(|&(_, o)| o > 0)
        .collect();
    targets.dedup_by_key(|x| x.1);
    let offsets: Vec<usize> = targets.iter().map(|x| x.1).collect();
    let mut noted_offsets = false;

    let mc = if cfg.has(Mode::Mc) && !offsets.is_empty() {
        let e = ensemble(cfg)?;
        let max_k = cfg.k.iter().copied().max().unwrap_or(0) as usize;
        let chain_ks: Vec<usize> = {
            let mut v: Vec<usize> = cfg.k.iter().map(|&k| k as usize).filter(|k| (1..=3).contains(k)).collect();
            v.sort();
            v.dedup();
            v
        };
        let hist = e.separation_histograms(&offsets, cfg.max_sep.max(max_k))?;
        let chains = e.chain_counts(&offsets, &chain_ks)?;
        Some((hist, chains, chain_ks))
    } else {
        None
    };

    for &k in &cfg.k {
        if k == 0 {
            for &b in &cfg.b_grid {
                let q = kernel.eval(&along_first_axis(cfg, b))?;
                row(&mut t, 0, b, Estimate::quadrature("kernel", q, 0.0), None);
            }
        }
        for &mode in &cfg.modes {
            match mode {
                Mode::Closed if k >= 1 => match cfg.uniform() {
                    Some((p, phi)) => {
                        for &b in &cfg.b_grid {
                            let v = p_k_b_uniform(p, phi, n_mean, k, b, cfg.tail_truncation)?;
                            row(&mut t, k, b, Estimate::analytic("closed", v), None);
                        }
                    }
                    None => skip(&mut report, mode, "needs a uniform window on a circle"),
                },
                Mode::Leading if k >= 1 => {
                    for &b in &cfg.b_grid {
                        let v = if cfg.is_circle() {
                            p_sep_leading(&s[0], cfg.radius(), k, b)
                        } else {
                            p_sep_torus(&s, cfg.model.radii(), k, &along_first_axis(cfg, b))?
                        };
                        row(&mut t, k, b, Estimate::analytic("leading", v), None);
                    }
                }
                Mode::Full if k >= 1 => {
                    if !cfg.is_circle() || k > 2 {
                        skip(&mut report, mode, &format!("k = {k} is not available with exclusion factors here"));
                        continue;
                    }
                    for &b in &cfg.b_grid {
                        let q_b = kernel.eval_scalar(b)?;
                        let v = if k == 1 {
                            p1_full(&s[0], cfg.radius(), b, q_b)
                        } else {
                            p2_full(&s[0], cfg.radius(), b, q_b, cfg.correction_truncation)
                        };
                        row(&mut t, k, b, Estimate::analytic("full", v), None);
                    }
                }
                Mode::Quadrature if k >= 1 => {
                    if k > 2 {
                        skip(&mut report, mode, &format!("k = {k} has no quadrature oracle"));
                        continue;
                    }
                    for &b in &cfg.b_grid {
                        let r = p_chain_quad(&cfg.model, k as usize, &along_first_axis(cfg, b), false, quad_tol(cfg))?;
                        row(&mut t, k, b, Estimate::quadrature("quadrature", r.value, r.error_estimate), None);
                    }
                }
                Mode::Lattice if k >= 1 => {
                    if !cfg.is_circle() || k > 3 {
                        skip(&mut report, mode, &format!("k = {k} has no lattice sum here"));
                        continue;
                    }
                    if !noted_offsets {
                        report.note("lattice and mc rows sit on the nearest lattice angle, given in lattice_b");
                        noted_offsets = true;
                    }
                    for &(b, off) in &targets {
                        let c = discrete_chain_count(cfg.lattice[0], kernel, k as usize, off)?;
                        row(&mut t, k, b, Estimate::quadrature("lattice", c.reduced, 0.0), Some(cfg.lattice_angle(off)));
                    }
                }
                Mode::Mc => {
                    let Some((hist, chains, chain_ks)) = &mc else { continue };
                    if !noted_offsets {
                        report.note("lattice and mc rows sit on the nearest lattice angle, given in lattice_b");
                        noted_offsets = true;
                    }
                    for (i, &(b, off)) in targets.iter().enumerate() {
                        let lb = Some(cfg.lattice_angle(off));
                        let h = &hist[i];
                        row(&mut t, k, b, Estimate::mc("mc_histogram", h.probabilities[k as usize]), lb);
                        if let Some(j) = chain_ks.iter().position(|&c| c == k as usize) {
                            row(&mut t, k, b, Estimate::mc("mc_chains", chains[i][j]), lb);
                        }
                    }
                }
                _ => {}
            }
        }
    }
    report.tables.push(t);
    Ok(report)
}

pub fn sweep_phi(cfg: &Resolved) -> Res<Report> {
    let Some((p, _)) = cfg.uniform() else {
        return Err(CliError::Config("sweep-phi needs a uniform window on a circle".into()));
    };
    let mut report = Report::new("sweep-phi", cfg);
    report.note("columns are (phi, value); phi is the window half-width in radians");
    report.note("p_tilde_k = P(k, pi) / (pi N^k); independent of the radius");
    let ks = cfg.sweep_k.clone();
    let m = cfg.tail_truncation;
    let points = cfg
        .phi_grid
        .par_iter()
        .map(|&phi| {
            let c = clustering_uniform_closed(p, phi, m)?;
            let curves = normalized_antipodal_uniform(p, phi, &ks, m)?;
            Ok((phi, c, curves))
        })
        .collect::<Result<Vec<_>, symnet_core::Error>>()?;

    let mut left = Table::new("clustering_ratio", &["phi", "clustering_ratio", "error_estimate"]);
    let mut cols = vec!["phi".to_string()];
    for k in &ks {
        cols.push(format!("p_tilde_k{k}"));
        cols.push(format!("error_k{k}"));
    }
    let mut right = Table {
        name: "separation_pi".into(),
        columns: cols,
        rows: Vec::new(),
    };
    for (phi, c, curves) in points {
        left.push(vec![phi.into(), (c.value / p).into(), (c.error_bound / p).into()]);
        let mut r: Vec<Cell> = vec![phi.into()];
        for v in curves {
            r.push(v.value.into());
            r.push(v.error_bound.into());
        }
        right.push(r);
    }
    report.tables.push(left);
    report.tables.push(right);
    Ok(report)
}

struct Battery {
    table: Table,
    failures: usize,
}

impl Battery {
    fn new() -> Self {
        Self {
            table: Table::new(
                "checks",
                &["check", "value", "reference", "delta", "tolerance", "z", "status"],
            ),
            failures: 0,
        }
    }

    fn tolerance(&mut self, name: &str, value: f64, reference: f64, tol: f64) {
        let delta = value - reference;
        let ok = delta.abs() <= tol;
        self.push(name, value, reference, tol, None, ok);
    }

    fn statistical(&mut self, name: &str, est: McEstimate, reference: f64) {
        let z = est.z_score(reference);
        let ok = z <= Z_LIMIT;
        self.push(name, est.mean, reference, Z_LIMIT * est.std_error, Some(z), ok);
    }

    fn push(&mut self, name: &str, value: f64, reference: f64, tol: f64, z: Option<f64>, ok: bool) {
        if !ok {
            self.failures += 1;
        }
        self.table.push(vec![
            name.into(),
            value.into(),
            reference.into(),
            (value - reference).into(),
            tol.into(),
            z.into(),
            if ok { "pass" } else { "fail" }.into(),
        ]);
    }
}

/// The three-route consistency battery. Returns the report and the number of
/// failed checks.
pub fn mc_validate(cfg: &Resolved) -> Res<(Report, usize)> {
    let Some((p, phi)) = cfg.uniform() else {
        return Err(CliError::Config("mc-validate needs a uniform window on a circle".into()));
    };
    let mut report = Report::new("mc-validate", cfg);
    let kernel = cfg.model.kernel();
    let r = cfg.radius();
    let n = cfg.lattice[0];
    let n_mean = cfg.model.mean_degree().nonzero()?;
    let s = coeffs_uniform(p, phi, cfg.truncation)?;
    let mut bat = Battery::new();
    let rel = |x: f64| SERIES_QUAD_RTOL * x.abs();

    // analytic routes
    let closed = clustering_uniform_closed(p, phi, cfg.tail_truncation)?;
    let lead = clustering_from_series(&s, r, n_mean, ClusteringMode::Leading, 0)?;
    let quad = clustering_quad(&cfg.model, cfg.tol)?;
    bat.tolerance(
        "clustering: series vs closed form",
        lead.value,
        closed.value,
        closed.error_bound + lead.error_bound + 1e-10 * closed.value,
    );
    bat.tolerance("clustering: series vs quadrature", lead.value, quad.value, rel(quad.value));
    let md = mean_degree_quad(kernel, r, cfg.tol)?;
    bat.tolerance("mean degree: quadrature vs exact", md.value, n_mean, 1e-9 * n_mean);

    let inside = cfg.offset_for(phi / 2.0).max(1);
    let beyond = cfg.offset_for((1.5 * phi).min(PI)).max(1);
    for off in [inside, beyond] {
        let b = cfg.lattice_angle(off);
        let q1 = p_chain_quad(&cfg.model, 1, &[b], false, cfg.tol)?;
        let s1 = p_sep_leading(&s, r, 1, b);
        bat.tolerance(
            &format!("chains k=1 b={b:.6}: series vs quadrature"),
            s1.value,
            q1.value,
            rel(q1.value) + s1.error_bound + q1.error_estimate,
        );
        let q2 = p_chain_quad(&cfg.model, 2, &[b], false, cfg.tol)?;
        let s2 = p_sep_leading(&s, r, 2, b);
        bat.tolerance(&format!("chains k=2 b={b:.6}: series vs quadrature"), s2.value, q2.value, rel(q2.value));
        let q2x = p_chain_quad(&cfg.model, 2, &[b], true, cfg.tol)?;
        let f2 = p2_full(&s, r, b, kernel.eval_scalar(b)?, cfg.correction_truncation);
        bat.tolerance(
            &format!("chains k=2 b={b:.6}: full series vs quadrature with exclusion"),
            f2.value,
            q2x.value,
            f2.error_bound + q2x.error_estimate + rel(q2x.value),
        );
    }

    // lattice against continuum: one lattice step lost per window edge
    let lat_md = discrete_mean_degree(n, kernel)?;
    bat.tolerance(
        "mean degree: lattice vs continuum",
        lat_md,
        n_mean,
        n_mean / (phi * r),
    );

    // Monte Carlo against the lattice
    let e = ensemble(cfg)?;
    bat.statistical("mc mean degree vs lattice", e.mean_degree()?, lat_md);
    bat.statistical("mc clustering vs lattice", e.clustering()?, discrete_clustering(n, kernel)?);
    let offsets = [inside, beyond];
    let chains = e.chain_counts(&offsets, &[1, 2])?;
    let hist = e.separation_histograms(&offsets, 2)?;
    for (i, &off) in offsets.iter().enumerate() {
        for (j, k) in [1usize, 2].into_iter().enumerate() {
            let exact = discrete_chain_count(n, kernel, k, off)?.reduced;
            bat.statistical(&format!("mc chains k={k} offset={off} vs lattice"), chains[i][j], exact);
        }
        let q = kernel.eval_scalar(cfg.lattice_angle(off))?;
        bat.statistical(&format!("mc S=0 offset={off} vs kernel"), hist[i].probabilities[0], q);
    }

    let failures = bat.failures;
    report.note(format!("{failures} failed of {} checks", bat.table.rows.len()));
    report.tables.push(bat.table);
    Ok((report, failures))
}

pub fn kernel_info(cfg: &Resolved) -> Res<Report> {
    let mut report = Report::new("kernel-info", cfg);
    let kernel = cfg.model.kernel();
    let mut t = Table::new("kernel", &["property", "value"]);
    let kind = match kernel {
        ConnectionKernel::UniformWindow { .. } => "uniform_window",
        ConnectionKernel::CosineSeries { .. } => "cosine_series",
        ConnectionKernel::Product { .. } => "product",
    };
    t.push(vec!["kind".into(), kind.into()]);
    t.push(vec!["dimension".into(), kernel.dim().into()]);
    for (i, r) in cfg.model.radii().iter().enumerate() {
        t.push(vec![format!("radius_{i}").as_str().into(), (*r).into()]);
    }
    for (i, n) in cfg.lattice.iter().enumerate() {
        t.push(vec![format!("lattice_{i}").as_str().into(), (*n).into()]);
    }
    let n_mean = cfg.model.mean_degree().value;
    t.push(vec!["mean_degree".into(), n_mean.into()]);
    if cfg.is_circle() {
        let q = mean_degree_quad(kernel, cfg.radius(), cfg.tol)?;
        t.push(vec!["mean_degree_quadrature".into(), q.value.into()]);
        t.push(vec!["mean_degree_lattice".into(), discrete_mean_degree(cfg.lattice[0], kernel)?.into()]);
    }
    for (i, f) in kernel.factors().iter().enumerate() {
        t.push(vec![
            format!("support_half_width_{i}").as_str().into(),
            f.support_half_width().into(),
        ]);
        t.push(vec![format!("value_at_0_{i}").as_str().into(), f.eval_scalar(0.0)?.into()]);
        t.push(vec![format!("value_at_pi_{i}").as_str().into(), f.eval_scalar(PI)?.into()]);
    }
    report.tables.push(t);

    let mut c = Table::new("coefficients", &["factor", "n", "a_n"]);
    let shown = cfg.truncation.min(16);
    let short = Resolved {
        truncation: shown,
        ..cfg.clone()
    };
    for (i, sr) in series(&short)?.iter().enumerate() {
        for (nn, a) in sr.coeffs().iter().enumerate() {
            c.push(vec![i.into(), nn.into(), (*a).into()]);
        }
    }
    report.tables.push(c);
    Ok(report)
}
