//! Gray-mapped QPSK / 16-QAM / 64-QAM with max-log LLR demapping.
//!
//! Bit layout follows the LTE convention: even-indexed bits of a symbol drive
//! the in-phase axis, odd-indexed bits the quadrature axis; the first bit of
//! each axis is the sign (0 -> positive). LLRs are positive for a likely 0.

use num_complex::Complex64;

use crate::error::{invalid, Result};

fn check_order(order: usize) -> Result<()> {
    match order {
        2 | 4 | 6 => Ok(()),
        _ => invalid(format!("unsupported modulation order {order}")),
    }
}

fn scale(order: usize) -> f64 {
    match order {
        2 => 1.0 / 2f64.sqrt(),
        4 => 1.0 / 10f64.sqrt(),
        _ => 1.0 / 42f64.sqrt(),
    }
}

/// PAM amplitude for the axis bits `b[0..m]`, before normalization.
fn pam_level(axis_bits: &[u8]) -> f64 {
    let sign = 1.0 - 2.0 * f64::from(axis_bits[0]);
    let rest = &axis_bits[1..];
    let mut mag = 1.0;
    for (i, &b) in rest.iter().enumerate().rev() {
        // amp_m = 2^(m-1) - (1 - 2b) * amp_(m-1)
        mag = f64::from(1u32 << (rest.len() - i)) - (1.0 - 2.0 * f64::from(b)) * mag;
    }
    sign * mag
}

/// Points of one axis with their bit labels, unnormalized.
fn axis_points(per_axis: usize) -> Vec<(f64, Vec<u8>)> {
    (0..1usize << per_axis)
        .map(|v| {
            let bits: Vec<u8> = (0..per_axis).rev().map(|i| ((v >> i) & 1) as u8).collect();
            (pam_level(&bits), bits)
        })
        .collect()
}

pub fn modulate_bits(bits: &[u8], order: usize) -> Result<Vec<Complex64>> {
    check_order(order)?;
    if !bits.len().is_multiple_of(order) {
        return invalid(format!("{} bits is not a multiple of order {order}", bits.len()));
    }
    let s = scale(order);
    let per_axis = order / 2;
    let mut i_bits = vec![0u8; per_axis];
    let mut q_bits = vec![0u8; per_axis];
    Ok(bits
        .chunks_exact(order)
        .map(|chunk| {
            for j in 0..per_axis {
                i_bits[j] = chunk[2 * j];
                q_bits[j] = chunk[2 * j + 1];
            }
            Complex64::new(pam_level(&i_bits) * s, pam_level(&q_bits) * s)
        })
        .collect())
}

/// Max-log LLRs for symbols observed in complex noise of variance `noise_var`.
pub fn demodulate_llr(symbols: &[Complex64], order: usize, noise_var: f64) -> Result<Vec<f64>> {
    check_order(order)?;
    let mut out = Vec::with_capacity(symbols.len() * order);
    demodulate_llr_into(symbols, order, noise_var, &mut out);
    Ok(out)
}

pub(crate) fn demodulate_llr_into(symbols: &[Complex64], order: usize, noise_var: f64, out: &mut Vec<f64>) {
    let s = scale(order);
    let per_axis = order / 2;
    let points: Vec<(f64, Vec<u8>)> = axis_points(per_axis).into_iter().map(|(a, b)| (a * s, b)).collect();
    let inv = 1.0 / noise_var.max(1e-12);
    let mut llr_i = vec![0.0; per_axis];
    let mut llr_q = vec![0.0; per_axis];
    for z in symbols {
        axis_llrs(z.re, &points, inv, &mut llr_i);
        axis_llrs(z.im, &points, inv, &mut llr_q);
        for j in 0..per_axis {
            out.push(llr_i[j]);
            out.push(llr_q[j]);
        }
    }
}

fn axis_llrs(y: f64, points: &[(f64, Vec<u8>)], inv_var: f64, out: &mut [f64]) {
    for (j, llr) in out.iter_mut().enumerate() {
        let mut d0 = f64::INFINITY;
        let mut d1 = f64::INFINITY;
        for (a, bits) in points {
            let d = (y - a) * (y - a);
            if bits[j] == 0 {
                d0 = d0.min(d);
            } else {
                d1 = d1.min(d);
            }
        }
        *llr = (d1 - d0) * inv_var;
    }
}

pub fn hard_decisions(llrs: &[f64]) -> Vec<u8> {
    llrs.iter().map(|&l| u8::from(l < 0.0)).collect()
}
