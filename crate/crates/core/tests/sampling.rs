use std::f64::consts::PI;

use symnet_core::mc::{
    empirical_chain_count, empirical_clustering, empirical_mean_degree, empirical_separation_histogram, sample_graph,
    trial_seed, Ensemble, Lattice,
};
use symnet_core::quadrature::{discrete_chain_count, discrete_clustering, discrete_mean_degree};
use symnet_core::ConnectionKernel;

fn ring_ensemble(n: usize, p: f64, phi: f64, seed: u64, trials: usize) -> Ensemble {
    Ensemble::new(Lattice::ring(n).unwrap(), ConnectionKernel::uniform(p, phi).unwrap(), seed, trials).unwrap()
}

#[test]
fn trivial_kernels() {
    let l = Lattice::ring(40).unwrap();
    let empty = sample_graph(&l, &ConnectionKernel::constant(0.0).unwrap(), 1).unwrap();
    assert_eq!(empty.edge_count(), 0);
    let full = sample_graph(&l, &ConnectionKernel::uniform(1.0, PI).unwrap(), 1).unwrap();
    assert_eq!(full.edge_count(), 40 * 39 / 2);
    assert_eq!(empirical_clustering([&full]).unwrap().mean, 1.0);
    let c = empirical_chain_count([&full], 7, 1).unwrap();
    assert_eq!(c.mean, 38.0);

    let h = empirical_separation_histogram([&empty, &empty], 5, 3).unwrap();
    assert_eq!(h.unreached.mean, 1.0);
    assert!(h.probabilities.iter().all(|e| e.mean == 0.0));
    assert_eq!(empirical_chain_count([&empty], 5, 2).unwrap().mean, 0.0);
}

#[test]
fn cycle_has_no_triangles() {
    let n = 12;
    let k = ConnectionKernel::uniform(1.0, 1.5 * 2.0 * PI / n as f64).unwrap();
    let g = sample_graph(&Lattice::ring(n).unwrap(), &k, 9).unwrap();
    assert_eq!(g.edge_count(), n);
    assert_eq!(empirical_clustering([&g]).unwrap().mean, 0.0);
}

#[test]
fn same_seed_same_graph() {
    let l = Lattice::ring(500).unwrap();
    let k = ConnectionKernel::uniform(0.3, 0.4).unwrap();
    let a = sample_graph(&l, &k, 77).unwrap();
    let b = sample_graph(&l, &k, 77).unwrap();
    let c = sample_graph(&l, &k, 78).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.edges(), c.edges());
    for (i, j) in a.edges() {
        assert!(a.has_edge(j as usize, i as usize));
        assert_ne!(i, j);
    }
    assert_ne!(trial_seed(5, 0), trial_seed(5, 1));
}

#[test]
fn mean_degree_matches_lattice_count() {
    // R = 256 / 2 pi, Phi R = 8.15, so 8 lattice steps each side
    let e = ring_ensemble(256, 0.5, 0.2, 11, 1000);
    let est = e.mean_degree().unwrap();
    let oracle = 0.5 * 2.0 * (0.2 * 256.0 / (2.0 * PI)).floor();
    assert_eq!(oracle, 8.0);
    let lattice = discrete_mean_degree(256, &e.kernel).unwrap();
    assert!((lattice - oracle).abs() < 1e-12);
    assert!(est.z_score(oracle) < 3.0, "{est:?}");
}

#[test]
fn clustering_matches_lattice_expectation() {
    let e = ring_ensemble(600, 0.3, 0.6, 3, 40);
    let est = e.clustering().unwrap();
    let oracle = discrete_clustering(600, &e.kernel).unwrap();
    assert!(est.z_score(oracle) < 3.0, "{est:?} vs {oracle}");
    // the ensemble and the free function agree
    let graphs: Vec<_> = (0..40).map(|t| e.sample(t).unwrap()).collect();
    assert_eq!(empirical_clustering(&graphs).unwrap(), est);
}

#[test]
fn chain_counts_match_lattice_sums() {
    let e = ring_ensemble(60, 0.2, 0.7, 5, 4000);
    for k in 1..=3 {
        for off in [3, 11] {
            let est = e.chain_count(off, k).unwrap();
            let oracle = discrete_chain_count(60, &e.kernel, k, off).unwrap().reduced;
            assert!(est.z_score(oracle) < 3.5, "k {k} off {off}: {est:?} vs {oracle}");
        }
    }
}

#[test]
fn histogram_is_normalized_and_direct_links_follow_kernel() {
    let e = ring_ensemble(100, 0.15, 0.5, 21, 3000);
    let h = e.separation_histogram(4, 6).unwrap();
    let total: f64 = h.probabilities.iter().map(|x| x.mean).sum::<f64>() + h.unreached.mean;
    assert!((total - 1.0).abs() < 1e-12);
    assert!(h.probabilities[0].z_score(0.15) < 3.0);

    let far = e.separation_histogram(40, 6).unwrap();
    assert_eq!(far.probabilities[0].mean, 0.0);
}

#[test]
fn one_intermediate_entry_in_the_sparse_regime() {
    // expected 1-chain count well below one, so P(S=1) ~ 1 - exp(-count)
    let e = ring_ensemble(200, 0.05, 0.4, 8, 20000);
    let off = 40;
    let h = e.separation_histogram(off, 4).unwrap();
    let c = discrete_chain_count(200, &e.kernel, 1, off).unwrap();
    let mu = c.with_exclusion.unwrap();
    let poisson = 1.0 - (-mu).exp();
    assert!((h.probabilities[1].mean - poisson).abs() <= 3.0 * h.probabilities[1].std_error + mu * mu);
}

#[test]
fn relabeling_the_source_does_not_matter() {
    let e = ring_ensemble(90, 0.3, 0.5, 13, 3000);
    let a = e.chain_count(6, 1).unwrap();
    let b = e.chain_count(90 - 6, 1).unwrap();
    let z = (a.mean - b.mean).abs() / (a.std_error.hypot(b.std_error));
    assert!(z < 4.0, "{a:?} {b:?}");
}

#[test]
fn std_error_shrinks_like_inverse_sqrt_trials() {
    let small = ring_ensemble(300, 0.3, 0.5, 2, 400).mean_degree().unwrap();
    let large = ring_ensemble(300, 0.3, 0.5, 2, 800).mean_degree().unwrap();
    let ratio = large.std_error / small.std_error;
    assert!((ratio - 1.0 / 2f64.sqrt()).abs() < 0.12, "{ratio}");
}

#[test]
fn torus_grid_mean_degree() {
    let k = ConnectionKernel::product(vec![
        ConnectionKernel::uniform(0.8, 0.5).unwrap(),
        ConnectionKernel::uniform(0.5, 0.9).unwrap(),
    ])
    .unwrap();
    let e = Ensemble::new(Lattice::torus(vec![30, 20]).unwrap(), k.clone(), 4, 300).unwrap();
    let est = e.mean_degree().unwrap();
    let f = k.factors();
    let per = |n: usize, q: &ConnectionKernel| -> f64 {
        (0..n).map(|d| q.eval_scalar(2.0 * PI * d as f64 / n as f64).unwrap()).sum()
    };
    // product of per-axis sums, minus the self pair
    let oracle = per(30, &f[0]) * per(20, &f[1]) - 0.8 * 0.5;
    assert!(est.z_score(oracle) < 3.0, "{est:?} vs {oracle}");
}

#[test]
fn undefined_clustering_is_an_error() {
    let g = sample_graph(&Lattice::ring(10).unwrap(), &ConnectionKernel::constant(0.0).unwrap(), 0).unwrap();
    assert!(empirical_clustering([&g]).is_err());
    assert!(empirical_mean_degree(Vec::<symnet_core::mc::GraphSample>::new()).is_err());
}

#[test]
fn batched_queries_match_single_queries() {
    let e = ring_ensemble(80, 0.3, 0.5, 17, 200);
    let offsets = [1, 7, 25, 40];
    let hs = e.separation_histograms(&offsets, 5).unwrap();
    let cs = e.chain_counts(&offsets, &[1, 2]).unwrap();
    for (i, &o) in offsets.iter().enumerate() {
        assert_eq!(hs[i], e.separation_histogram(o, 5).unwrap());
        assert_eq!(cs[i][0], e.chain_count(o, 1).unwrap());
        assert_eq!(cs[i][1], e.chain_count(o, 2).unwrap());
    }
}
