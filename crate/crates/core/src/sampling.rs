//! Deterministic point sets: Halton sequences, ball and sphere designs.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{normalized, scale};

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    r
}

/// `i`-th Halton point in `[0, 1)^dim` (index shifted by one to skip the origin).
pub fn halton(i: u64, dim: usize) -> Vec<f64> {
    (0..dim).map(|k| radical_inverse(i + 1, PRIMES[k % PRIMES.len()])).collect()
}

/// Standard normal deviate by Box–Muller.
pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// `count` unit vectors in `ℝ^dim`. Exact designs for `dim ≤ 3`, Gaussian
/// directions otherwise.
pub fn sphere_directions(dim: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    match dim {
        0 => Vec::new(),
        1 => (0..count).map(|i| vec![if i % 2 == 0 { 1.0 } else { -1.0 }]).collect(),
        2 => (0..count)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let a = golden * i as f64;
                    vec![r * a.cos(), r * a.sin(), z]
                })
                .collect()
        }
        _ => (0..count)
            .map(|_| loop {
                let g: Vec<f64> = (0..dim).map(|_| gaussian(rng)).collect();
                if let Some(u) = normalized(&g) {
                    break u;
                }
            })
            .collect(),
    }
}

/// Halton points mapped into the ball of radius `r` (radial law `r·u^{1/dim}`).
pub fn ball_points(dim: usize, count: usize, r: f64, offset: u64) -> Vec<Vec<f64>> {
    (0..count as u64)
        .map(|i| {
            let h = halton(offset + i, dim + 1);
            let dir = sphere_from_cube(&h[..dim]);
            let rad = r * h[dim].powf(1.0 / dim as f64);
            scale(&dir, rad)
        })
        .collect()
}

fn sphere_from_cube(u: &[f64]) -> Vec<f64> {
    // Inverse-normal approximation would be heavier than needed; a cube point
    // recentered and normalized gives a direction set dense on the sphere.
    let c: Vec<f64> = u.iter().map(|v| 2.0 * v - 1.0).collect();
    normalized(&c).unwrap_or_else(|| {
        let mut e = vec![0.0; u.len()];
        e[0] = 1.0;
        e
    })
}
