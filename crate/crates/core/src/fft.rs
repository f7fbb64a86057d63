//! Iterative radix-2 decimation-in-time FFT.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::math;
use crate::{Error, Result};

/// Precomputed twiddles and bit-reversal permutation for one power-of-two size.
///
/// Tables are built once in [`Radix2Fft::new`] and only read afterwards, so a
/// plan can be shared between threads.
#[derive(Debug, Clone)]
pub struct Radix2Fft {
    len: usize,
    twiddles: Vec<Complex64>,
    bitrev: Vec<usize>,
}

impl Radix2Fft {
    pub fn new(len: usize) -> Result<Self> {
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidParameter(alloc::format!(
                "FFT length {len} is not a power of two ≥ 2"
            )));
        }
        let twiddles = (0..len / 2)
            .map(|k| {
                let angle = -2.0 * PI * k as f64 / len as f64;
                Complex64::new(math::cos(angle), math::sin(angle))
            })
            .collect();
        let bits = len.trailing_zeros();
        let bitrev = (0..len)
            .map(|k| k.reverse_bits() >> (usize::BITS - bits))
            .collect();
        Ok(Self {
            len,
            twiddles,
            bitrev,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// In-place forward transform, no normalization.
    pub fn process(&self, data: &mut [Complex64]) -> Result<()> {
        if data.len() != self.len {
            return Err(Error::DimensionMismatch {
                expected: self.len,
                got: data.len(),
            });
        }
        for (k, &r) in self.bitrev.iter().enumerate() {
            if k < r {
                data.swap(k, r);
            }
        }
        let mut half = 1;
        while half < self.len {
            let stride = self.len / (2 * half);
            for block in data.chunks_exact_mut(2 * half) {
                let (lo, hi) = block.split_at_mut(half);
                for (j, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                    let t = self.twiddles[j * stride] * *b;
                    *b = *a - t;
                    *a += t;
                }
            }
            half *= 2;
        }
        Ok(())
    }

    /// Forward transform of a real sequence zero-padded to the plan length.
    pub fn process_real(&self, samples: &[f64]) -> Result<Vec<Complex64>> {
        if samples.len() > self.len {
            return Err(Error::DimensionMismatch {
                expected: self.len,
                got: samples.len(),
            });
        }
        let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        buf.resize(self.len, Complex64::new(0.0, 0.0));
        self.process(&mut buf)?;
        Ok(buf)
    }
}
