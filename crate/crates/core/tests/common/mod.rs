#![allow(dead_code)]

use freqcache::Frame;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform `[0, 1)` pixels.
pub fn random_frame(rng: &mut ChaCha8Rng, h: usize, w: usize) -> Frame {
    Frame::new(h, w, (0..h * w).map(|_| rng.gen::<f64>()).collect()).unwrap()
}

/// Pixels on a 1/64 grid, so sums and products stay exact and ties survive.
pub fn dyadic_frame(rng: &mut ChaCha8Rng, h: usize, w: usize) -> Frame {
    Frame::new(
        h,
        w,
        (0..h * w)
            .map(|_| rng.gen_range(0..64) as f64 / 64.0)
            .collect(),
    )
    .unwrap()
}

/// Cyclic shift `d` maximizing the mean-removed cross-correlation
/// `sum prev(r - di, c - dj) * curr(r, c)`, searched over every shift.
/// Ties go to the smallest `|di| + |dj|`.
pub fn brute_force_shift(prev: &Frame, curr: &Frame) -> (i64, i64) {
    let (h, w) = (prev.height(), prev.width());
    let mp = prev.data().iter().sum::<f64>() / (h * w) as f64;
    let mc = curr.data().iter().sum::<f64>() / (h * w) as f64;
    let p: Vec<f64> = prev.data().iter().map(|v| v - mp).collect();
    let c: Vec<f64> = curr.data().iter().map(|v| v - mc).collect();
    let canon = |x: usize, n: usize| {
        if 2 * x >= n {
            x as i64 - n as i64
        } else {
            x as i64
        }
    };
    let mut best = (f64::NEG_INFINITY, u64::MAX, (0, 0));
    for di in 0..h {
        for dj in 0..w {
            let mut acc = 0.0;
            for r in 0..h {
                let pr = (r + h - di) % h;
                for col in 0..w {
                    acc += p[pr * w + (col + w - dj) % w] * c[r * w + col];
                }
            }
            let d = (canon(di, h), canon(dj, w));
            let l1 = d.0.unsigned_abs() + d.1.unsigned_abs();
            if acc > best.0 || (acc == best.0 && l1 < best.1) {
                best = (acc, l1, d);
            }
        }
    }
    best.2
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
