//! Orthonormal DFT helpers and the SC-FDMA transform precoder.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// In-place forward DFT scaled by 1/sqrt(N).
pub(crate) fn forward_unitary(buf: &mut [Complex64]) {
    if buf.is_empty() {
        return;
    }
    plan(buf.len(), false).process(buf);
    let scale = 1.0 / (buf.len() as f64).sqrt();
    buf.iter_mut().for_each(|x| *x *= scale);
}

/// In-place inverse DFT scaled by 1/sqrt(N).
pub(crate) fn inverse_unitary(buf: &mut [Complex64]) {
    if buf.is_empty() {
        return;
    }
    plan(buf.len(), true).process(buf);
    let scale = 1.0 / (buf.len() as f64).sqrt();
    buf.iter_mut().for_each(|x| *x *= scale);
}

/// Unscaled forward/inverse transforms, used by FFT-based correlation.
pub(crate) fn forward_raw(buf: &mut [Complex64]) {
    plan(buf.len(), false).process(buf);
}

pub(crate) fn inverse_raw(buf: &mut [Complex64]) {
    plan(buf.len(), true).process(buf);
}

fn check_allocation(len: usize, allocation: usize) -> Result<()> {
    if allocation == 0 || !allocation.is_multiple_of(12) {
        return invalid(format!("allocation of {allocation} subcarriers is not a whole number of PRBs"));
    }
    if len != allocation {
        return invalid(format!("block of {len} symbols does not match the {allocation}-subcarrier allocation"));
    }
    Ok(())
}

/// Transform precoding at the SC-FDMA transmitter: orthonormal DFT of one
/// block of `allocation` modulation symbols.
pub fn dft_precode(x: &[Complex64], allocation: usize) -> Result<Vec<Complex64>> {
    check_allocation(x.len(), allocation)?;
    let mut y = x.to_vec();
    forward_unitary(&mut y);
    Ok(y)
}

/// Receiver-side inverse of [`dft_precode`].
pub fn idft_despread(y: &[Complex64], allocation: usize) -> Result<Vec<Complex64>> {
    check_allocation(y.len(), allocation)?;
    let mut x = y.to_vec();
    inverse_unitary(&mut x);
    Ok(x)
}
