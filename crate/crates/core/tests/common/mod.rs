#![allow(dead_code)]

use coarray_lab::bounds::{eigen_gap, BoundConstants};
use coarray_lab::metrics::torus_distance;
use coarray_lab::{CMatrix, SensorArray, SourceScene, C64};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn complex_gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// `count` points on [0, 1) with pairwise torus distance at least `min_sep`,
/// by rejection. Callers keep count · min_sep well below 1.
pub fn separated_omegas(rng: &mut ChaCha8Rng, count: usize, min_sep: f64) -> Vec<f64> {
    loop {
        let mut out: Vec<f64> = Vec::with_capacity(count);
        for _ in 0..1000 {
            let w: f64 = rng.random_range(0.0..1.0);
            if out.iter().all(|&v| torus_distance(v, w) >= min_sep) {
                out.push(w);
                if out.len() == count {
                    return out;
                }
            }
        }
    }
}

/// Random hole-free array of 4 to 8 sensors starting at 0.
pub fn random_hole_free(rng: &mut ChaCha8Rng) -> SensorArray {
    loop {
        let n: usize = rng.random_range(4..=8);
        let span: i64 = rng.random_range((n as i64 - 1)..=(n * (n - 1) / 2) as i64);
        let mut pos = vec![0, span];
        while pos.len() < n {
            let p = rng.random_range(1..span);
            if !pos.contains(&p) {
                pos.push(p);
            }
        }
        let a = SensorArray::from_positions(pos).expect("distinct positions");
        if a.coarray().is_hole_free() {
            return a;
        }
    }
}

/// One (geometry, scene, L) cell of the tail-bound calibration suite.
pub struct CalibrationCell {
    pub array: SensorArray,
    pub scene: SourceScene,
    pub snapshots: usize,
}

/// Small arrays, one or two separated sources, positive eigen-gap.
pub fn calibration_cells(count: usize, seed: u64) -> Vec<CalibrationCell> {
    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    let arrays = [
        SensorArray::ula(3).unwrap(),
        SensorArray::ula(4).unwrap(),
        SensorArray::ula(6).unwrap(),
        SensorArray::nested(2, 2).unwrap(),
        SensorArray::nested(3, 2).unwrap(),
        SensorArray::nested(3, 3).unwrap(),
    ];
    let noise = [0.1, 0.5, 1.0, 2.0];
    let lengths = [10, 20, 50, 100, 200, 500];
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let array = arrays[rng.random_range(0..arrays.len())].clone();
        let s = rng.random_range(1..=2);
        let omegas = separated_omegas(&mut rng, s, 0.1);
        let powers: Vec<f64> = (0..s).map(|_| rng.random_range(0.5..2.0)).collect();
        let scene = SourceScene::new(omegas, powers, noise[rng.random_range(0..noise.len())]).unwrap();
        if eigen_gap(&scene, &array.coarray()).unwrap() <= 0.0 {
            continue;
        }
        let snapshots = lengths[rng.random_range(0..lengths.len())];
        out.push(CalibrationCell { array, scene, snapshots });
    }
    out
}

/// ε at which the tail bound equals `target` for the given inputs.
pub fn epsilon_for_bound(
    target: f64,
    snapshots: usize,
    m_ca: usize,
    ry_norm: f64,
    delta_s: f64,
    k: &BoundConstants,
) -> f64 {
    let r = (8.0 * m_ca as f64 / target).ln() / (k.c1() * snapshots as f64);
    // min(c₂u², u) with u = ε/(‖R‖√Δ); the quadratic branch applies for u ≤ 1/c₂
    let u = if r <= 1.0 / k.c2 { (r / k.c2).sqrt() } else { r };
    u * ry_norm * delta_s.sqrt()
}

/// Largest |a_i − b_π(i)| under greedy nearest matching of two complex multisets.
pub fn multiset_gap(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
