mod common;

use common::*;
use drforest::eval::{generate, Simulation, SimulationSpec};
use drforest::lsvi::lsvi_from_weights;
use drforest::{compute_lsvi, compute_lsvi_batch, Forest, ForestParams, TreeParams};
use nalgebra::DMatrix;
use rand::Rng;

fn fixture(seed: u64) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let mut r = rng(seed);
    let p = 3;
    let rows: Vec<Vec<f64>> = (0..40)
        .map(|_| (0..p).map(|j| r.random_range(-1.0..1.0) * (j + 1) as f64).collect())
        .collect();
    let w: Vec<f64> = (0..40).map(|_| r.random_range(0.0..1.0)).collect();
    let x0: Vec<f64> = (0..p).map(|_| r.random_range(-0.5..0.5)).collect();
    (rows, w, x0)
}

#[test]
fn matches_straight_line_computation() {
    for seed in 0..10 {
        let (rows, w, x0) = fixture(seed);
        let data = dataset(&rows, vec![0.0; rows.len()]);
        let got = lsvi_from_weights(&data, &w, &x0).unwrap();
        let (want, lambda) = lsvi_oracle(&rows, &w, &x0);
        let sign = if got.direction.iter().zip(&want).map(|(a, b)| a * b).sum::<f64>() < 0.0 {
            -1.0
        } else {
            1.0
        };
        for (a, b) in got.direction.iter().zip(&want) {
            assert!((a - sign * b).abs() < 1e-10);
        }
        assert!((got.min_eigenvalue - lambda.max(0.0)).abs() < 1e-10);
        assert!((got.weight_mass - w.iter().sum::<f64>()).abs() < 1e-12);
    }
}

#[test]
fn rotation_maps_the_span() {
    let (rows, w, x0) = fixture(11);
    let theta: f64 = 0.7;
    let (c, s) = (theta.cos(), theta.sin());
    let q = DMatrix::from_row_slice(3, 3, &[c, -s, 0.0, s * 0.6, c * 0.6, -0.8, s * 0.8, c * 0.8, 0.6]);
    assert!((q.transpose() * &q - DMatrix::identity(3, 3)).abs().max() < 1e-12);
    let rot = |v: &[f64]| -> Vec<f64> { (&q * DMatrix::from_column_slice(3, 1, v)).iter().copied().collect() };
    let rows_r: Vec<Vec<f64>> = rows.iter().map(|r| rot(r)).collect();
    let a = lsvi_from_weights(&dataset(&rows, vec![0.0; 40]), &w, &x0).unwrap();
    let b = lsvi_from_weights(&dataset(&rows_r, vec![0.0; 40]), &w, &rot(&x0)).unwrap();
    assert!(!a.ambiguous);
    assert!(abs_cos(&rot(&a.direction), &b.direction) >= 1.0 - 1e-6);
}

#[test]
fn first_simulation_direction_follows_the_ridge() {
    let sim = generate(&SimulationSpec::new(Simulation::Sim1, 2000, 5)).unwrap();
    let params = ForestParams {
        tree: TreeParams {
            n_min: 10,
            ..TreeParams::default()
        },
        n_trees: 100,
        seed: 1,
    };
    let f = Forest::fit(&sim.data, &params).unwrap();
    let li = compute_lsvi(&f, &sim.data, &[0.5, -0.5, 0.0, 0.0, 0.0]).unwrap();
    let target = [1.0, -1.0, 0.0, 0.0, 0.0];
    assert!(abs_cos(&li.direction, &target) > 0.8, "{:?}", li.direction);
    let norm: f64 = li.direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!((norm - 1.0).abs() < 1e-12);

    let queries = sim.data.subset(&[0, 1, 2]);
    let batch = compute_lsvi_batch(&f, &sim.data, &queries).unwrap();
    for (i, r) in batch.into_iter().enumerate() {
        assert_eq!(r.unwrap(), compute_lsvi(&f, &sim.data, queries.row(i)).unwrap());
    }
}
