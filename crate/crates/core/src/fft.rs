//! Separable multi-dimensional FFT over a row-major `n^q` array.

use rustfft::num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

pub(crate) fn transform(data: &mut [Complex64], n: usize, q: usize, direction: FftDirection) {
    debug_assert_eq!(data.len(), n.pow(q as u32));
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft(n, direction);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];

    // Last axis is contiguous.
    for row in data.chunks_exact_mut(n) {
        fft.process_with_scratch(row, &mut scratch);
    }
    let mut line = vec![Complex64::default(); n];
    for axis in 0..q.saturating_sub(1) {
        let stride = n.pow((q - 1 - axis) as u32);
        let block = stride * n;
        for base in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let start = base + offset;
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = data[start + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, value) in line.iter().enumerate() {
                    data[start + j * stride] = *value;
                }
            }
        }
    }
}

/// Flat bin of a signed frequency vector.
pub(crate) fn bin_of(k: &[i32], n: usize) -> usize {
    k.iter()
        .fold(0usize, |acc, &v| acc * n + v.rem_euclid(n as i32) as usize)
}

/// Signed frequency vector of a flat bin, with bin `n/2` mapped to `-n/2`.
pub(crate) fn frequency_of(bin: usize, n: usize, q: usize) -> [i64; 3] {
    let mut k = [0i64; 3];
    let mut rest = bin;
    for d in (0..q).rev() {
        let j = (rest % n) as i64;
        k[d] = if j >= (n / 2) as i64 { j - n as i64 } else { j };
        rest /= n;
    }
    k
}
