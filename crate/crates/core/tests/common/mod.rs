//! Shared helpers for the integration suites.
#![allow(dead_code)] // each test target compiles its own copy

use chrono::NaiveDate;
use ddgf_core::data::DemandMatrix;
use ddgf_core::Tensor;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Spectral radius by power iteration — an oracle independent of the crate's
/// linear algebra beyond plain matmul.
pub fn spectral_radius(m: &Tensor) -> f64 {
    assert_eq!(m.rows(), m.cols());
    let n = m.rows();
    // Deterministic start with non-uniform entries so it is not orthogonal
    // to the dominant eigenvector in practice.
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64) * 0.013).collect();
    let norm = |x: &[f64]| x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut radius = 0.0;
    for _ in 0..600 {
        let mut next = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                next[i] += m.get(i, j) * v[j];
            }
        }
        let len = norm(&next);
        if len == 0.0 {
            return 0.0;
        }
        radius = len / norm(&v);
        for x in next.iter_mut() {
            *x /= len;
        }
        v = next;
    }
    radius
}

/// Synthetic demand with planted cross-station structure: next-hour demand
/// is a rounded mix of current demands through a hidden symmetric ring
/// matrix plus noise. With `temporal` set, a 12-hour multiplicative wave is
/// layered on top so the sequence order of the lags matters.
pub fn planted_demand(seed: u64, n: usize, t: usize, temporal: bool) -> DemandMatrix {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Hidden symmetric mixing: own weight 0.2, ring neighbours 0.35 each.
    let mut mix = vec![vec![0.0; n]; n];
    for j in 0..n {
        mix[j][j] = 0.2;
        mix[j][(j + 1) % n] += 0.35;
        mix[(j + 1) % n][j] += 0.35;
    }
    let base: Vec<f64> = (0..n).map(|_| rng.random_range(2.0..6.0)).collect();

    let mut state: Vec<f64> = (0..n).map(|_| rng.random_range(10.0..40.0)).collect();
    let mut columns: Vec<Vec<u32>> = vec![state.iter().map(|v| *v as u32).collect()];
    for step in 1..t {
        let wave = if temporal {
            1.0 + 0.6 * (std::f64::consts::TAU * step as f64 / 12.0).sin()
        } else {
            1.0
        };
        let mut next = vec![0.0; n];
        for j in 0..n {
            let mixed: f64 = (0..n).map(|k| mix[j][k] * state[k]).sum();
            let noise = rng.random_range(-1.5..1.5);
            next[j] = (wave * (mixed + base[j]) + noise).round().max(0.0);
        }
        columns.push(next.iter().map(|v| *v as u32).collect());
        state = next;
    }

    let counts: Vec<u32> = (0..n)
        .flat_map(|j| columns.iter().map(move |col| col[j]))
        .collect();
    let stations = (0..n).map(|i| format!("S{i:02}")).collect();
    let t0 = NaiveDate::from_ymd_opt(2015, 3, 2)
        .unwrap()
        .and_hms_opt(0, 0, 0)
        .unwrap();
    DemandMatrix::from_parts(stations, t0, t, counts).unwrap()
}

/// Frozen uniform-random demand matrix for overfit experiments.
pub fn frozen_random_demand(seed: u64, n: usize, t: usize, max_count: u32) -> DemandMatrix {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts: Vec<u32> = (0..n * t)
        .map(|_| rng.random_range(0..=max_count))
        .collect();
    let stations = (0..n).map(|i| format!("S{i:02}")).collect();
    let t0 = NaiveDate::from_ymd_opt(2016, 1, 4)
        .unwrap()
        .and_hms_opt(0, 0, 0)
        .unwrap();
    DemandMatrix::from_parts(stations, t0, t, counts).unwrap()
}
