//! Radix-2 complex FFT. Forward transform uses `e^{-2πi jk/N}`; the inverse
//! carries the `1/N` factor.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::linalg::C64;

fn bit_reverse(data: &mut [C64]) {
    let n = data.len();
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            data.swap(i, j);
        }
    }
}

fn transform(data: &mut [C64], sign: f64) {
    let n = data.len();
    assert!(n.is_power_of_two(), "FFT length must be a power of two");
    bit_reverse(data);
    let twiddles: Vec<C64> = (0..n / 2)
        .map(|k| {
            let ang = sign * 2.0 * PI * (k as f64) / (n as f64);
            C64::new(ang.cos(), ang.sin())
        })
        .collect();
    let mut len = 2;
    while len <= n {
        let step = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..len / 2 {
                let w = twiddles[k * step];
                let u = data[start + k];
                let v = data[start + k + len / 2] * w;
                data[start + k] = u + v;
                data[start + k + len / 2] = u - v;
            }
        }
        len <<= 1;
    }
}

pub fn forward(data: &mut [C64]) {
    transform(data, -1.0);
}

pub fn inverse(data: &mut [C64]) {
    transform(data, 1.0);
    let s = 1.0 / data.len() as f64;
    for z in data.iter_mut() {
        *z *= s;
    }
}
