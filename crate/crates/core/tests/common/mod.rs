use muskat_core::{InterfaceState, TorusGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeded band-limited profiles with mean 1, modes `k <= max_mode` and
/// `sum k (|a_k| + |b_k|) = slope`, so `||f_x|| <= slope` and `min f >= 1 - slope`.
#[allow(dead_code)]
pub fn corpus(seed: u64, count: usize, n: usize, max_mode: usize, slope: f64) -> Vec<InterfaceState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = TorusGrid::new(n).unwrap();
    (0..count)
        .map(|_| {
            let mut modes: Vec<(f64, f64, f64)> = (1..=max_mode)
                .map(|k| (k as f64, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let total: f64 = modes.iter().map(|(k, a, b)| k * (a.abs() + b.abs())).sum();
            modes.iter_mut().for_each(|m| {
                m.1 *= slope / total;
                m.2 *= slope / total;
            });
            InterfaceState::from_fn(
                &grid,
                |x| 1.0 + modes.iter().map(|(k, a, b)| a * (k * x).cos() + b * (k * x).sin()).sum::<f64>(),
                0.0,
            )
            .unwrap()
        })
        .collect()
}
