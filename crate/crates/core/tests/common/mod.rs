#![allow(dead_code)]

use isea_core::{GrayImage, Permutation, SecretKey};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn published_key() -> SecretKey {
    SecretKey::new(20, 51, 1, 0.2009, 3.98).unwrap()
}

pub fn random_key(rng: &mut impl Rng, rounds: usize) -> SecretKey {
    SecretKey::new(
        rng.gen_range(1..100),
        rng.gen_range(1..100),
        rounds,
        rng.gen_range(0.01..0.99),
        rng.gen_range(3.6..3.9999),
    )
    .unwrap()
}

pub fn random_image(rng: &mut impl Rng, h: usize, w: usize) -> GrayImage {
    GrayImage::from_fn(h, w, |_, _| rng.gen()).unwrap()
}

pub fn random_perm(rng: &mut impl Rng, n: usize) -> Permutation {
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(rng);
    Permutation::from_vec(v).unwrap()
}

fn clamp(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Smooth field in `[0, 1]`: a few low-frequency waves.
fn field(i: usize, j: usize, phase: f64) -> f64 {
    let (y, x) = (i as f64, j as f64);
    let v = (y / 37.0 + phase).sin() * 0.35
        + (x / 53.0 - phase * 0.7).cos() * 0.35
        + ((x + y) / 91.0 + phase * 1.3).sin() * 0.3;
    0.5 + 0.5 * v.clamp(-1.0, 1.0)
}

/// Natural-looking 256x256 scene: smooth shading with sensor-like noise.
/// Every pixel column left of `dark_cols` stays below 128.
pub fn scene(seed: u64, dark_cols: usize) -> GrayImage {
    let mut r = rng(seed);
    let phase = seed as f64 * 0.917;
    GrayImage::from_fn(256, 256, |i, j| {
        let noise: f64 = r.gen_range(-3.0..3.0);
        let f = field(i, j, phase);
        if j < dark_cols {
            clamp(16.0 + 90.0 * f + noise)
        } else {
            clamp(12.0 + 230.0 * f + noise)
        }
    })
    .unwrap()
}

/// Busy, fur-like texture over the full intensity range.
pub fn textured(seed: u64) -> GrayImage {
    let mut r = rng(seed);
    GrayImage::from_fn(256, 256, |i, j| {
        let (y, x) = (i as f64, j as f64);
        let base = 128.0 + 70.0 * (x / 5.0 + (y / 9.0).sin() * 3.0).sin() + 40.0 * (y / 7.0).cos();
        clamp(base + r.gen_range(-12.0..12.0))
    })
    .unwrap()
}

/// Three distinct natural-like test images: a scene with a dark left half,
/// one with a dark left quarter, and a textured one.
pub fn natural_triplet() -> [GrayImage; 3] {
    [scene(1, 128), scene(2, 64), textured(3)]
}
