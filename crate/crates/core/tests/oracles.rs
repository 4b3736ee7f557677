//! Worked values and cross-route agreement, each checked against an oracle
//! written out here rather than taken from the library.

use std::f64::consts::PI;

use symnet_core::fourier::{
    clustering_from_series, clustering_uniform_closed, coeffs_numeric, coeffs_uniform, eval_series, p1_full, p2_full,
    p_k_b_uniform, p_k_pi_uniform, p_sep_leading, p_sep_torus, ClusteringMode, FourierSeries,
};
use symnet_core::quadrature::{
    clustering_quad, discrete_chain_count, discrete_mean_degree, integrate_periodic, mean_degree_tensor,
    p_chain_quad, DEFAULT_TOL,
};
use symnet_core::{ConnectionKernel, NetworkModel};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

/// Plain partial sum of the window clustering series, summed small terms first.
fn clustering_partial_sum(p: f64, phi: f64, m: usize) -> f64 {
    let mut s = 0.0;
    for n in (1..=m).rev() {
        let x = (n as f64 * phi).sin() / n as f64;
        s += x * x * x;
    }
    p / (PI * phi * phi) * (phi.powi(3) + 2.0 * s)
}

#[test]
fn kernel_worked_values() {
    let k = ConnectionKernel::uniform(0.3, 1.0).unwrap();
    assert_eq!(k.eval(&[0.5]).unwrap(), 0.3);
    assert_eq!(k.eval(&[2.0]).unwrap(), 0.0);
    assert_eq!(k.eval(&[-0.5]).unwrap(), k.eval(&[0.5]).unwrap());
}

#[test]
fn mean_degree_worked_values() {
    let m = NetworkModel::circle(10.0, ConnectionKernel::uniform(0.1, 0.5).unwrap()).unwrap();
    assert!((m.mean_degree().value - 1.0).abs() < 1e-15);

    let c = NetworkModel::circle(3.0, ConnectionKernel::constant(0.2).unwrap()).unwrap();
    assert!(rel(c.mean_degree().value, 2.0 * PI * 3.0 * 0.2) < 1e-15);

    let t = NetworkModel::torus(
        vec![5.0, 8.0],
        vec![
            ConnectionKernel::uniform(0.3, 0.7).unwrap(),
            ConnectionKernel::uniform(0.6, 1.2).unwrap(),
        ],
    )
    .unwrap();
    let expect = (2.0 * 5.0 * 0.3 * 0.7) * (2.0 * 8.0 * 0.6 * 1.2);
    assert!(rel(t.mean_degree().value, expect) < 1e-12);
    let quad = mean_degree_tensor(&t, 1e-8).unwrap();
    assert!(rel(quad.value, expect) < 1e-8, "{} vs {}", quad.value, expect);
}

#[test]
fn integrator_worked_values() {
    let c = integrate_periodic(|_| 0.7, &[], 1e-12).unwrap();
    assert!((c.value - 2.0 * PI * 0.7).abs() < 1e-12);

    let w = ConnectionKernel::uniform(0.4, 0.9).unwrap();
    let r = integrate_periodic(|x| w.eval_scalar(x).unwrap(), &w.discontinuities(), 1e-12).unwrap();
    assert!((r.value - 2.0 * 0.4 * 0.9).abs() < 1e-11);

    for n in 1..6 {
        let r = integrate_periodic(|x| (n as f64 * x).cos(), &[], 1e-12).unwrap();
        assert!(r.value.abs() < 1e-12);
    }
}

#[test]
fn uniform_coefficients() {
    let s = coeffs_uniform(0.1, PI, 16).unwrap();
    assert!((s.coeffs()[0] - 0.1).abs() < 1e-16);
    assert!(s.coeffs()[1..].iter().all(|a| a.abs() < 1e-16));

    let s = coeffs_uniform(0.2, PI / 2.0, 4).unwrap();
    assert!((s.coeffs()[1] - 0.2 / PI).abs() < 1e-16);
}

#[test]
fn numeric_coefficients_match_closed_form() {
    let w = ConnectionKernel::uniform(0.35, 0.8).unwrap();
    let a = coeffs_numeric(&w, 40, 1e-13).unwrap();
    let b = coeffs_uniform(0.35, 0.8, 40).unwrap();
    for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
        assert!((x - y).abs() <= 1e-10 * y.abs().max(1e-3), "{x} vs {y}");
    }
}

#[test]
fn series_converges_to_kernel_inside_window() {
    let m = 20000;
    let s = coeffs_uniform(0.3, 1.0, m).unwrap();
    // |tail| of a 1/n series summed against cos near 0 is at worst ~ p / (pi m |sin|)
    for phi in [0.0, 0.3, -0.5] {
        let v = eval_series(&s, phi);
        assert!((v - 0.3).abs() < 1e-3, "phi {phi}: {v}");
    }
    assert!(eval_series(&s, 2.0).abs() < 1e-3);
}

#[test]
fn closed_clustering_matches_partial_sum_oracle() {
    for (p, phi) in [(0.1, 1.0), (0.4, 2.5), (1.0, 0.05), (0.2, 3.0)] {
        let c = clustering_uniform_closed(p, phi, 200_000).unwrap();
        let o = clustering_partial_sum(p, phi, 1_000_000);
        assert!((c.value - o).abs() <= c.error_bound + 1e-14, "{p} {phi}");
    }
    let c = clustering_uniform_closed(0.1, 1.0, 1_000_000).unwrap();
    assert!((c.value / 0.1 - 0.75).abs() < 1e-9);
}

#[test]
fn full_circle_identity() {
    for p in [0.01, 0.1, 0.5, 1.0] {
        let c = clustering_uniform_closed(p, PI, 4096).unwrap();
        assert!((c.value - p).abs() < 1e-12);
        let s = coeffs_uniform(p, PI, 64).unwrap();
        let n = 2.0 * 7.0 * p * PI;
        let l = clustering_from_series(&s, 7.0, n, ClusteringMode::Leading, 0).unwrap();
        assert!((l.value - p).abs() < 1e-12);
        // both exclusion factors are 1 - p when Q is constant
        let f = clustering_from_series(&s, 7.0, n, ClusteringMode::Full, 16).unwrap();
        assert!((f.value - p * (1.0 - p).powi(2)).abs() < 1e-12);
        let pi = p_k_pi_uniform(p, PI, 2.0 * 5.0 * p * PI, 3, 4096).unwrap();
        assert!((pi.normalized.value - p / PI).abs() < 1e-12);
    }
}

#[test]
fn closed_and_series_routes_agree() {
    let (p, phi, r) = (0.3, 0.9, 17.0);
    let s = coeffs_uniform(p, phi, 4096).unwrap();
    let n = 2.0 * r * p * phi;
    let a = clustering_uniform_closed(p, phi, 4096).unwrap();
    let b = clustering_from_series(&s, r, n, ClusteringMode::Leading, 0).unwrap();
    assert!(rel(a.value, b.value) < 1e-10);
    for k in [1, 2, 5] {
        for bb in [0.0, 0.4, 2.0, PI] {
            let x = p_k_b_uniform(p, phi, n, k, bb, 4096).unwrap();
            let y = p_sep_leading(&s, r, k, bb);
            assert!((x.value - y.value).abs() <= 1e-10 * x.value.abs().max(1e-12) + x.error_bound + y.error_bound);
        }
        let a = p_k_pi_uniform(p, phi, n, k, 4096).unwrap();
        let b = p_k_b_uniform(p, phi, n, k, PI, 4096).unwrap();
        assert_eq!(a.value, b);
    }
}

#[test]
fn full_sums_reduce_to_leading() {
    let s = coeffs_uniform(0.02, 0.5, 512).unwrap();
    for b in [0.3, 1.0, PI] {
        let lead = p_sep_leading(&s, 20.0, 2, b);
        let f = p2_full(&s, 20.0, b, 0.0, 0);
        assert_eq!(f.value, lead.value);
        let f = p2_full(&s, 20.0, b, 0.25, 0);
        assert_eq!(f.value, lead.value * 0.75);
        assert_eq!(p1_full(&s, 20.0, b, 1.0).value, 0.0);
        assert_eq!(p1_full(&s, 20.0, b, 0.0).value, p_sep_leading(&s, 20.0, 1, b).value);
    }
    let zero = FourierSeries::new(vec![0.0; 8]).unwrap();
    assert_eq!(p2_full(&zero, 3.0, 1.0, 0.0, 8).value, 0.0);
}

#[test]
fn leading_chains_match_continuum_quadrature() {
    let (p, phi, r) = (0.05, 0.5, 20.0);
    let k = ConnectionKernel::uniform(p, phi).unwrap();
    let m = NetworkModel::circle(r, k).unwrap();
    let s = coeffs_uniform(p, phi, 65536).unwrap();
    for kk in [1u32, 2] {
        for b in [0.2, 0.7, 1.5] {
            let q = p_chain_quad(&m, kk as usize, &[b], false, 1e-10).unwrap();
            let f = p_sep_leading(&s, r, kk, b);
            // the k = 1 series converges slowly near kinks; allow its bound
            assert!(
                (q.value - f.value).abs() <= 1e-6 * q.value.abs() + f.error_bound + q.error_estimate + 1e-12,
                "k {kk} b {b}: {} vs {}",
                q.value,
                f.value
            );
        }
    }
}

#[test]
fn full_p2_matches_quadrature_with_exclusion() {
    // the corrections are small here; the leading term alone misses by ~p
    let (p, phi, r) = (0.3, 0.8, 4.0);
    let k = ConnectionKernel::uniform(p, phi).unwrap();
    let m = NetworkModel::circle(r, k.clone()).unwrap();
    let s = coeffs_uniform(p, phi, 256).unwrap();
    let b = 1.2;
    let q_b = k.eval_scalar(b).unwrap();
    let quad = p_chain_quad(&m, 2, &[b], true, 1e-10).unwrap();
    let full = p2_full(&s, r, b, q_b, 256);
    let lead = p_sep_leading(&s, r, 2, b);
    assert!(rel(quad.value, full.value) < 2e-2, "{} vs {}", quad.value, full.value);
    assert!((quad.value - full.value).abs() < (quad.value - lead.value).abs());
}

#[test]
fn torus_reduces_to_circle() {
    let s = coeffs_uniform(0.2, 0.6, 1024).unwrap();
    for b in [0.0, 0.5, 2.0] {
        let t = p_sep_torus(std::slice::from_ref(&s), &[9.0], 2, &[b]).unwrap();
        assert_eq!(t.value, p_sep_leading(&s, 9.0, 2, b).value);
    }
    let zero = FourierSeries::new(vec![0.0; 4]).unwrap();
    let t = p_sep_torus(&[s, zero], &[9.0, 9.0], 1, &[0.1, 0.1]).unwrap();
    assert_eq!(t.value, 0.0);
}

#[test]
fn discrete_chain_hand_count() {
    let p = 0.3;
    let k = ConnectionKernel::constant(p).unwrap();
    let c = discrete_chain_count(4, &k, 1, 2).unwrap();
    assert!((c.reduced - 2.0 * p * p).abs() < 1e-15);
    assert!((c.with_exclusion.unwrap() - 2.0 * p * p * (1.0 - p)).abs() < 1e-15);

    let z = ConnectionKernel::constant(0.0).unwrap();
    assert_eq!(discrete_chain_count(16, &z, 3, 5).unwrap().reduced, 0.0);
}

/// Brute sum over ordered distinct intermediates, written without tables.
fn brute_chains(n: usize, q: impl Fn(f64) -> f64, k: usize, off: usize) -> f64 {
    let ang = |i: usize, j: usize| 2.0 * PI * ((i + n - j) % n) as f64 / n as f64;
    let mut total = 0.0;
    let mut stack = vec![(0usize, vec![0usize], 1.0f64)];
    while let Some((depth, path, w)) = stack.pop() {
        let last = *path.last().unwrap();
        if depth == k {
            total += w * q(ang(off, last));
            continue;
        }
        for c in 0..n {
            if c == off || path.contains(&c) {
                continue;
            }
            let qc = q(ang(c, last));
            if qc != 0.0 {
                let mut p2 = path.clone();
                p2.push(c);
                stack.push((depth + 1, p2, w * qc));
            }
        }
    }
    total
}

#[test]
fn discrete_chains_match_brute_enumeration() {
    let k = ConnectionKernel::uniform(0.4, 1.1).unwrap();
    let q = |a: f64| k.eval_scalar(a).unwrap();
    for kk in 1..=3 {
        for off in [1, 5, 9] {
            let c = discrete_chain_count(18, &k, kk, off).unwrap();
            let b = brute_chains(18, q, kk, off);
            assert!((c.reduced - b).abs() < 1e-12 * b.max(1.0), "k {kk} off {off}");
        }
    }
}

#[test]
fn discrete_to_continuum_gap_scales_inversely_with_window() {
    // n = round(2 pi R); the gap times Phi R should stay bounded and the gap shrink
    let (p, phi, b) = (0.05, 0.5, 0.3);
    let k = ConnectionKernel::uniform(p, phi).unwrap();
    let mut gaps = Vec::new();
    for r in [40.0, 160.0] {
        let n = (2.0 * PI * r).round() as usize;
        let m = NetworkModel::circle(r, k.clone()).unwrap();
        let d = discrete_mean_degree(n, &k).unwrap();
        // up to one lattice step lost at each window edge
        assert!(rel(d, m.mean_degree().value) * phi * r <= 1.0 + 1e-9);
        let off = (b * n as f64 / (2.0 * PI)).round() as usize;
        let cont = p_chain_quad(&m, 2, &[2.0 * PI * off as f64 / n as f64], false, 1e-10)
            .unwrap()
            .value;
        let disc = discrete_chain_count(n, &k, 2, off).unwrap().reduced;
        let gap = rel(cont, disc);
        assert!(gap * phi * r < 5.0, "R {r}: {cont} vs {disc}");
        gaps.push(gap);
    }
    assert!(gaps[1] < gaps[0] / 2.0, "{gaps:?}");
}

#[test]
fn clustering_quadrature_oracle() {
    let m = NetworkModel::circle(12.0, ConnectionKernel::uniform(0.1, 1.0).unwrap()).unwrap();
    let q = clustering_quad(&m, DEFAULT_TOL).unwrap();
    let c = clustering_uniform_closed(0.1, 1.0, 1_000_000).unwrap();
    assert!((q.value - c.value).abs() < 1e-8);

    let full = NetworkModel::circle(3.0, ConnectionKernel::constant(0.37).unwrap()).unwrap();
    assert!((clustering_quad(&full, DEFAULT_TOL).unwrap().value - 0.37).abs() < 1e-9);
}
