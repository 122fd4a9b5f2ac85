//! Fully-active reference: all three panels receive the UEs directly and are
//! combined jointly with ZF or MRC.

use nalgebra::Complex;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::isi::CapacityReport;
use crate::linalg::{checked_inverse, complex_gaussian, condition_number, stream_rng, CMat, MAX_CONDITION};

/// Stream used for the third panel's channel `H3`.
pub const STREAM_H3: u64 = 4;

/// `[H0; H2; H3]` stacked over the three panels.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedActiveChannel {
    /// 3M×K.
    pub h_all: CMat,
    pub n0: f64,
}

/// Stacks `H0`, `H2` and a fresh unit-variance `H3`.
///
/// `fairness_scale` multiplies the power of `H2` and `H3`; `1.0` leaves the
/// channels as drawn.
pub fn stack_active(cs: &ChannelSet, seed: u64, fairness_scale: f64) -> Result<StackedActiveChannel> {
    if !(fairness_scale >= 0.0 && fairness_scale.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "fairness_scale must be non-negative, got {fairness_scale}"
        )));
    }
    let (m, k) = cs.h0.shape();
    let h3 = complex_gaussian(m, k, 1.0, &mut stream_rng(seed, STREAM_H3));
    let mut h_all = CMat::zeros(3 * m, k);
    h_all.rows_mut(0, m).copy_from(&cs.h0);
    if fairness_scale == 1.0 {
        h_all.rows_mut(m, m).copy_from(&cs.h2);
        h_all.rows_mut(2 * m, m).copy_from(&h3);
    } else {
        let amp = Complex::new(fairness_scale.sqrt(), 0.0);
        h_all.rows_mut(m, m).copy_from(&(&cs.h2 * amp));
        h_all.rows_mut(2 * m, m).copy_from(&(h3 * amp));
    }
    Ok(StackedActiveChannel { h_all, n0: cs.n0 })
}

/// Joint ZF: `SINR_k = 1 / (N0 [(HᴴH)⁻¹]_kk)`.
pub fn zf_capacity(sc: &StackedActiveChannel) -> Result<CapacityReport> {
    let condition = condition_number(&sc.h_all);
    if !(condition < MAX_CONDITION) {
        return Err(Error::IllConditioned {
            what: "stacked active channel",
            condition,
        });
    }
    let gram_inv = checked_inverse(&(sc.h_all.adjoint() * &sc.h_all), "stacked Gram matrix")?;
    let per_ue = (0..sc.h_all.ncols())
        .map(|k| {
            let sinr = 1.0 / (sc.n0 * gram_inv[(k, k)].re);
            (1.0 + sinr).log2()
        })
        .collect();
    Ok(CapacityReport::from_per_ue(per_ue, false))
}

/// Joint MRC: `SINR_k = ‖h_k‖⁴ / (N0 ‖h_k‖² + Σ_{j≠k} |h_kᴴ h_j|²)`.
pub fn mrc_capacity(sc: &StackedActiveChannel) -> Result<CapacityReport> {
    let gram = sc.h_all.adjoint() * &sc.h_all;
    let k_count = gram.nrows();
    let mut per_ue = Vec::with_capacity(k_count);
    for k in 0..k_count {
        let energy = gram[(k, k)].re;
        if !(energy > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "column {k} of the stacked channel is zero"
            )));
        }
        let interference: f64 = (0..k_count).filter(|&j| j != k).map(|j| gram[(k, j)].norm_sqr()).sum();
        let sinr = energy * energy / (sc.n0 * energy + interference);
        per_ue.push((1.0 + sinr).log2());
    }
    Ok(CapacityReport::from_per_ue(per_ue, false))
}
