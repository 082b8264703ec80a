//! Multi-dimensional FFT plumbing on top of rustfft.
//!
//! All spectral arrays are dense complex tensors in row-major axis order.
//! The forward transform carries the 1/N^n normalization, so a coefficient
//! c_k is the amplitude of exp(i k.x) and the inverse transform is an
//! unnormalized synthesis. Mode-count resampling (zero padding and
//! truncation) splits and re-merges the Nyquist coefficient so that real
//! trigonometric interpolants stay real and `truncate(pad(c)) == c`.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

thread_local! {
    static PLANS: RefCell<PlanCache> = RefCell::new(PlanCache::default());
}

#[derive(Default)]
struct PlanCache {
    planner: Option<FftPlanner<f64>>,
    forward: HashMap<usize, Arc<dyn Fft<f64>>>,
    inverse: HashMap<usize, Arc<dyn Fft<f64>>>,
}

fn with_plan<R>(n: usize, forward: bool, f: impl FnOnce(&Arc<dyn Fft<f64>>) -> R) -> R {
    PLANS.with(|cell| {
        let mut cache = cell.borrow_mut();
        if cache.planner.is_none() {
            cache.planner = Some(FftPlanner::new());
        }
        let plan = if forward {
            if !cache.forward.contains_key(&n) {
                let p = cache.planner.as_mut().unwrap().plan_fft_forward(n);
                cache.forward.insert(n, p);
            }
            cache.forward.get(&n).unwrap().clone()
        } else {
            if !cache.inverse.contains_key(&n) {
                let p = cache.planner.as_mut().unwrap().plan_fft_inverse(n);
                cache.inverse.insert(n, p);
            }
            cache.inverse.get(&n).unwrap().clone()
        };
        f(&plan)
    })
}

/// Shape descriptor: `n` points per axis, `dim` axes, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub dim: usize,
    pub n: usize,
}

impl Shape {
    pub fn new(dim: usize, n: usize) -> Self {
        Self { dim, n }
    }

    pub fn total(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.dim - 1 - axis) as u32)
    }
}

fn transform_axis(data: &mut [Complex64], shape: Shape, axis: usize, forward: bool) {
    let n = shape.n;
    let stride = shape.stride(axis);
    let total = shape.total();
    let block = n * stride;
    with_plan(n, forward, |plan| {
        let mut line = vec![Complex64::ZERO; n];
        let mut scratch = vec![Complex64::ZERO; plan.get_inplace_scratch_len()];
        for base_block in (0..total).step_by(block) {
            for offset in 0..stride {
                let base = base_block + offset;
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + j * stride];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for (j, slot) in line.iter().enumerate() {
                    data[base + j * stride] = *slot;
                }
            }
        }
    });
}

/// Physical samples -> spectral coefficients (normalized analysis).
pub fn forward(physical: &[f64], shape: Shape) -> Vec<Complex64> {
    debug_assert_eq!(physical.len(), shape.total());
    let mut data: Vec<Complex64> = physical.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    for axis in 0..shape.dim {
        transform_axis(&mut data, shape, axis, true);
    }
    let scale = 1.0 / shape.total() as f64;
    for v in &mut data {
        *v *= scale;
    }
    data
}

/// Spectral coefficients -> physical samples (synthesis; real part taken).
pub fn inverse(spectral: &[Complex64], shape: Shape) -> Vec<f64> {
    debug_assert_eq!(spectral.len(), shape.total());
    let mut data = spectral.to_vec();
    for axis in 0..shape.dim {
        transform_axis(&mut data, shape, axis, false);
    }
    data.into_iter().map(|v| v.re).collect()
}

fn resample_axis(src: &[Complex64], shape_src: Shape, axis: usize, n_dst: usize) -> Vec<Complex64> {
    let n_src = shape_src.n;
    debug_assert!(n_src % 2 == 0 && n_dst % 2 == 0);
    // Destination shape differs only along `axis`; since all our shapes are
    // hypercubes the callers resample every axis in turn, so intermediate
    // tensors are rectangular. Handle that with explicit extents.
    let mut ext_src = vec![n_src; shape_src.dim];
    ext_src[..axis].iter_mut().for_each(|e| *e = n_dst); // axes already resampled
    let mut ext_dst = ext_src.clone();
    ext_dst[axis] = n_dst;

    let stride = |ext: &[usize], a: usize| -> usize { ext[a + 1..].iter().product() };
    let total_dst: usize = ext_dst.iter().product();
    let mut dst = vec![Complex64::ZERO; total_dst];

    let s_src = stride(&ext_src, axis);
    let s_dst = stride(&ext_dst, axis);
    let lines: usize = ext_src.iter().product::<usize>() / ext_src[axis];

    // map line index -> base offsets in src and dst
    let outer: usize = ext_src[..axis].iter().product();
    let inner: usize = s_src; // product of axes after `axis`
    for line in 0..lines {
        let o = line / inner;
        let i = line % inner;
        debug_assert!(o < outer);
        let base_src = o * ext_src[axis] * s_src + i;
        let base_dst = o * ext_dst[axis] * s_dst + i;
        if n_dst >= n_src {
            // zero pad; split Nyquist
            let half = n_src / 2;
            for j in 0..half {
                dst[base_dst + j * s_dst] = src[base_src + j * s_src];
            }
            for j in (half + 1)..n_src {
                let k = j as i64 - n_src as i64; // negative wavenumber
                let jd = (k + n_dst as i64) as usize;
                dst[base_dst + jd * s_dst] = src[base_src + j * s_src];
            }
            let nyq = src[base_src + half * s_src];
            if n_dst == n_src {
                dst[base_dst + half * s_dst] = nyq;
            } else {
                let hv = nyq * 0.5;
                dst[base_dst + half * s_dst] += hv; // +N/2
                dst[base_dst + (n_dst - half) * s_dst] += hv; // -N/2
            }
        } else {
            // truncate; fold the destination Nyquist pair back together
            let half = n_dst / 2;
            for j in 0..half {
                dst[base_dst + j * s_dst] = src[base_src + j * s_src];
            }
            for k in -(half as i64 - 1)..0 {
                let js = (k + n_src as i64) as usize;
                let jd = (k + n_dst as i64) as usize;
                dst[base_dst + jd * s_dst] = src[base_src + js * s_src];
            }
            let plus = src[base_src + half * s_src];
            let minus = src[base_src + (n_src - half) * s_src];
            dst[base_dst + half * s_dst] = plus + minus;
        }
    }
    dst
}

/// Resample a spectral hypercube from `n_src` to `n_dst` modes per axis.
pub fn resample(src: &[Complex64], shape_src: Shape, n_dst: usize) -> Vec<Complex64> {
    let mut buf = src.to_vec();
    for axis in 0..shape_src.dim {
        buf = resample_axis(&buf, shape_src, axis, n_dst);
    }
    buf
}

/// Synthesize on a finer collocation grid (trigonometric interpolation).
pub fn inverse_oversampled(spectral: &[Complex64], shape: Shape, n_dst: usize) -> Vec<f64> {
    let padded = resample(spectral, shape, n_dst);
    inverse(&padded, Shape::new(shape.dim, n_dst))
}

/// Analyze samples taken on a finer grid down to `n_dst` modes per axis.
pub fn forward_truncating(physical: &[f64], shape_fine: Shape, n_dst: usize) -> Vec<Complex64> {
    let spec_fine = forward(physical, shape_fine);
    resample(&spec_fine, shape_fine, n_dst)
}
