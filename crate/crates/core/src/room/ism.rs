//! Image-source simulation of shoebox-room impulse responses.

use std::f64::consts::PI;

use crate::audio::sinc;

/// Half-width of the fractional-delay interpolation kernel, in samples.
const KERNEL_HALF_WIDTH: usize = 16;

/// Impulse response of a shoebox room with uniform wall reflection
/// coefficient `beta`, from `src` to `mic`, `len` samples at `sr`.
///
/// Every image arriving before sample `cutoff` is included, so the reflection
/// order grows with the cutoff. Each arrival is a
/// Hann-windowed sinc centred on its exact (fractional) delay, scaled by
/// spherical spreading `1 / (4 pi r)` and one factor of `beta` per wall hit.
pub fn image_source(
    dims: [f64; 3],
    src: [f64; 3],
    mic: [f64; 3],
    beta: f64,
    len: usize,
    cutoff: usize,
    sr: u32,
    speed_of_sound: f64,
) -> Vec<f64> {
    let mut h = vec![0.0f64; len];
    let sr_f = sr as f64;
    let max_dist = cutoff.min(len) as f64 * speed_of_sound / sr_f;
    let n: Vec<i64> = dims
        .iter()
        .map(|&d| (max_dist / (2.0 * d)).ceil() as i64 + 1)
        .collect();
    let hw = KERNEL_HALF_WIDTH as i64;

    // per-axis image offsets and reflection counts
    let axis = |a: usize| -> Vec<(f64, i32)> {
        let mut v = Vec::new();
        for m in -n[a]..=n[a] {
            for q in 0..=1i64 {
                let pos = (1 - 2 * q) as f64 * src[a] + 2.0 * m as f64 * dims[a];
                let refl = ((m - q).abs() + m.abs()) as i32;
                v.push((pos - mic[a], refl));
            }
        }
        v
    };
    let (ax, ay, az) = (axis(0), axis(1), axis(2));
    let max_sq = max_dist * max_dist;

    for &(dx, rx) in &ax {
        if dx * dx > max_sq {
            continue;
        }
        for &(dy, ry) in &ay {
            let dxy = dx * dx + dy * dy;
            if dxy > max_sq {
                continue;
            }
            for &(dz, rz) in &az {
                let d2 = dxy + dz * dz;
                if d2 > max_sq {
                    continue;
                }
                let dist = d2.sqrt();
                let gain = beta.powi(rx + ry + rz) / (4.0 * PI * dist.max(1e-3));
                if gain == 0.0 {
                    continue;
                }
                let delay = dist / speed_of_sound * sr_f;
                let center = delay.floor() as i64;
                for k in (center - hw + 1)..=(center + hw) {
                    if k < 0 || k >= len as i64 {
                        continue;
                    }
                    let t = k as f64 - delay;
                    let w = 0.5 * (1.0 + (PI * t / hw as f64).cos());
                    h[k as usize] += gain * w * sinc(t);
                }
            }
        }
    }
    h
}
