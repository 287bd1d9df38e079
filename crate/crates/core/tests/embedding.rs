use mocomp_core::embed::{embed_joint_states, joint_trace_polyline, trustworthiness, EmbeddingMethod, EmbeddingParams, Pca};
use mocomp_core::fixtures::{gaussian_clusters, FixtureCase};
use mocomp_core::JointTrajectory;
use nalgebra as na;
use proptest::prelude::*;

fn rows(trajs: &[JointTrajectory]) -> Vec<Vec<f64>> {
    trajs.iter().flat_map(|t| t.configurations().to_vec()).collect()
}

/// Trustworthiness from its definition, using explicit neighbour sets.
fn trustworthiness_oracle(high: &[Vec<f64>], low: &[[f64; 2]], k: usize) -> f64 {
    let n = high.len();
    let order = |i: usize, d: &dyn Fn(usize) -> f64| {
        let mut idx: Vec<usize> = (0..n).filter(|j| *j != i).collect();
        idx.sort_by(|a, b| d(*a).partial_cmp(&d(*b)).unwrap().then(a.cmp(b)));
        idx
    };
    let mut sum = 0.0;
    for i in 0..n {
        let hd = |j: usize| high[i].iter().zip(&high[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        let ld = |j: usize| (low[i][0] - low[j][0]).powi(2) + (low[i][1] - low[j][1]).powi(2);
        let high_order = order(i, &hd);
        let low_order = order(i, &ld);
        for j in &low_order[..k] {
            let rank = high_order.iter().position(|x| x == j).unwrap() + 1;
            if !high_order[..k].contains(j) {
                sum += (rank - k) as f64;
            }
        }
    }
    1.0 - 2.0 / (n as f64 * k as f64 * (2.0 * n as f64 - 3.0 * k as f64 - 1.0)) * sum
}

#[test]
fn trustworthiness_matches_definition() {
    let clusters = gaussian_clusters(3);
    let high = rows(&clusters);
    // a deliberately poor projection: two raw coordinates
    let low: Vec<[f64; 2]> = high.iter().map(|r| [r[1], r[2]]).collect();
    for k in [1, 5, 15] {
        let ours = trustworthiness(&high, &low, k).unwrap();
        assert!((ours - trustworthiness_oracle(&high, &low, k)).abs() < 1e-12);
    }
    let identity: Vec<Vec<f64>> = (0..20).map(|k| vec![k as f64, 0.0]).collect();
    let same: Vec<[f64; 2]> = identity.iter().map(|r| [r[0], r[1]]).collect();
    assert_eq!(trustworthiness(&identity, &same, 5).unwrap(), 1.0);
}

#[test]
fn umap_is_bit_identical_under_a_seed() {
    let clusters = gaussian_clusters(5);
    let params = EmbeddingParams { seed: 42, ..Default::default() };
    let a = embed_joint_states(&clusters, &params).unwrap();
    let b = embed_joint_states(&clusters, &params).unwrap();
    assert_eq!(a, b);
    let c = embed_joint_states(&clusters, &EmbeddingParams { seed: 43, ..params }).unwrap();
    assert_ne!(a.points, c.points);
}

#[test]
fn two_clusters_are_trustworthy() {
    let clusters = gaussian_clusters(1);
    let e = embed_joint_states(&clusters, &EmbeddingParams::default()).unwrap();
    let t = trustworthiness(&rows(&clusters), &e.points, 15).unwrap();
    assert!(t >= 0.9, "trustworthiness {t}");
}

#[test]
fn outlier_motion_stays_apart() {
    let motions: Vec<JointTrajectory> = FixtureCase::C.motions().into_iter().map(|m| m.motion.joints).collect();
    for seed in 0..10 {
        let e = embed_joint_states(&motions, &EmbeddingParams { seed, ..Default::default() }).unwrap();
        let c: Vec<[f64; 2]> = (0..5).map(|k| e.centroid(k).unwrap()).collect();
        let d = |a: usize, b: usize| ((c[a][0] - c[b][0]).powi(2) + (c[a][1] - c[b][1]).powi(2)).sqrt();
        let within = (0..4).flat_map(|a| (a + 1..4).map(move |b| (a, b))).map(|(a, b)| d(a, b)).fold(0.0, f64::max);
        let to_outlier = (0..4).map(|a| d(a, 4)).fold(f64::INFINITY, f64::min);
        assert!(within < to_outlier, "seed {seed}: {within} vs {to_outlier}");
    }
}

#[test]
fn duplicates_share_a_point() {
    let names: Vec<String> = vec!["a".into(), "b".into()];
    let mut rows: Vec<Vec<f64>> = (0..30).map(|k| vec![(k as f64).sin(), (k as f64 * 0.3).cos()]).collect();
    rows.extend((0..10).map(|_| vec![0.5, 0.5]));
    let ts: Vec<f64> = (0..rows.len()).map(|k| k as f64).collect();
    let t = JointTrajectory::new(names, ts, rows).unwrap();
    let e = embed_joint_states(&[t], &EmbeddingParams { n_neighbors: 5, ..Default::default() }).unwrap();
    assert_eq!(e.unique_points, 31);
    assert!(e.points[30..].iter().all(|p| *p == e.points[30]));
    let trace = joint_trace_polyline(&e, 0).unwrap();
    assert_eq!(trace.points.len(), 40);
    assert!(joint_trace_polyline(&e, 1).is_err());
}

#[test]
fn pca_matches_nalgebra_eigenvectors() {
    let clusters = gaussian_clusters(9);
    let data = rows(&clusters);
    let refs: Vec<&[f64]> = data.iter().map(Vec::as_slice).collect();
    let pca = Pca::fit(&refs);
    let n = data.len();
    let m = na::DMatrix::from_fn(n, 7, |i, j| data[i][j] - pca.mean[j]);
    let eig = na::SymmetricEigen::new(m.transpose() * &m);
    let mut order: Vec<usize> = (0..7).collect();
    order.sort_by(|a, b| eig.eigenvalues[*b].partial_cmp(&eig.eigenvalues[*a]).unwrap());
    for (rank, c) in order.iter().enumerate() {
        assert!((pca.eigenvalues[rank] - eig.eigenvalues[*c]).abs() < 1e-8 * eig.eigenvalues[order[0]]);
        let v = eig.eigenvectors.column(*c);
        let dot: f64 = (0..7).map(|k| v[k] * pca.components[rank][k]).sum();
        assert!((dot.abs() - 1.0).abs() < 1e-8, "component {rank}: |dot| = {}", dot.abs());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pca_preserves_planar_distances(
        coords in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 3..40),
        basis_seed in prop::collection::vec(-1.0..1.0f64, 14),
    ) {
        // orthonormal pair in R^7 by Gram-Schmidt
        let u: Vec<f64> = basis_seed[..7].to_vec();
        let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assume!(nu > 0.1);
        let u: Vec<f64> = u.iter().map(|x| x / nu).collect();
        let mut v: Vec<f64> = basis_seed[7..].to_vec();
        let p: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
        v.iter_mut().zip(&u).for_each(|(x, a)| *x -= p * a);
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assume!(nv > 0.1);
        let v: Vec<f64> = v.iter().map(|x| x / nv).collect();
        let offset = [0.3, -1.0, 2.0, 0.0, 0.5, 1.5, -0.7];
        let pts: Vec<Vec<f64>> = coords
            .iter()
            .map(|(a, b)| (0..7).map(|k| offset[k] + a * u[k] + b * v[k]).collect())
            .collect();
        let names: Vec<String> = (0..7).map(|k| format!("j{k}")).collect();
        let ts: Vec<f64> = (0..pts.len()).map(|k| k as f64).collect();
        let t = JointTrajectory::new(names, ts, pts.clone()).unwrap();
        let e = embed_joint_states(&[t], &EmbeddingParams { method: EmbeddingMethod::Pca, ..Default::default() }).unwrap();
        for i in 0..pts.len() {
            for j in 0..i {
                let high: f64 = pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                let low = ((e.points[i][0] - e.points[j][0]).powi(2) + (e.points[i][1] - e.points[j][1]).powi(2)).sqrt();
                prop_assert!((high - low).abs() <= 1e-9, "{} vs {}", high, low);
            }
        }
    }
}
