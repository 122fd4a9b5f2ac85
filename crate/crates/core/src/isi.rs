//! Stacked space-time ISI channel, time-domain uplink simulation, MRC and
//! per-UE capacities.
//!
//! The receiver listens for T+1 slots while the UEs transmit for T, so the
//! stacked channel is (T+1)M × TK with `H0` on the block diagonal and the
//! aggregate RRTx channel `H̃` one block below it.

use nalgebra::Complex;

use crate::channel::{ChannelSet, Dimensions};
use crate::error::{Error, Result};
use crate::linalg::{cn_sample, stream_rng, CMat, CVec};
use crate::ortho::RrtxSolution;
use crate::stats::compensated_mean;

/// Random stream for the active-panel noise `n[t]`.
pub const STREAM_ACTIVE_NOISE: u64 = 0;
/// Random stream for the LP-Rx noise `ñ[t]`.
pub const STREAM_RRTX_NOISE: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct IsiChannel {
    /// (T+1)M × TK.
    pub matrix: CMat,
    pub beta: f64,
    pub dims: Dimensions,
}

impl IsiChannel {
    /// `𝓗ᴴ𝓗`.
    pub fn gram(&self) -> CMat {
        self.matrix.adjoint() * &self.matrix
    }

    /// ‖𝓗ᴴ𝓗 − βI‖_F / (β √(TK)).
    pub fn orthogonality_residual(&self) -> f64 {
        let n = self.matrix.ncols();
        let diff = self.gram() - CMat::identity(n, n) * Complex::new(self.beta, 0.0);
        diff.norm() / (self.beta * (n as f64).sqrt())
    }

    /// K×K block (row, col) of `𝓗ᴴ𝓗`.
    pub fn gram_block(&self, row: usize, col: usize) -> CMat {
        let k = self.dims.k;
        let gram = self.gram();
        gram.view((row * k, col * k), (k, k)).into_owned()
    }
}

/// Stacks `H0` and `H̃` into the block bi-diagonal ISI matrix.
pub fn build_isi_matrix(h0: &CMat, htilde: &CMat, t: usize, beta: f64) -> Result<IsiChannel> {
    if h0.shape() != htilde.shape() {
        return Err(Error::Dimension(format!(
            "H0 and H̃ must have equal shapes, got {:?} and {:?}",
            h0.shape(),
            htilde.shape()
        )));
    }
    let (m, k) = h0.shape();
    let dims = Dimensions::new(m, k, t)?;
    let mut matrix = CMat::zeros((t + 1) * m, t * k);
    for slot in 0..t {
        matrix.view_mut((slot * m, slot * k), (m, k)).copy_from(h0);
        matrix.view_mut(((slot + 1) * m, slot * k), (m, k)).copy_from(htilde);
    }
    Ok(IsiChannel { matrix, beta, dims })
}

/// Runs the slot-by-slot recursion
///
/// ```text
/// y[t] = H0 s[t] + H1 Θ r[t−1] + n[t]
/// r[t] = H2 s[t] + H12 r[t−1] + ñ[t]
/// ```
///
/// for t = 1..=T+1 with `r[0] = 0` and `s[T+1] = 0`, and returns the stacked
/// `y[1..=T+1]`. `ñ` is drawn only when `include_rrtx_noise` is set; `H12` is used
/// when present in `cs`.
pub fn simulate_uplink(
    cs: &ChannelSet,
    theta: &CMat,
    symbols: &CVec,
    seed: u64,
    include_rrtx_noise: bool,
) -> Result<CVec> {
    let Dimensions { m, k, t } = cs.dims;
    if theta.shape() != (m, m) {
        return Err(Error::Dimension(format!("Θ must be {m}x{m}, got {:?}", theta.shape())));
    }
    if symbols.len() != t * k {
        return Err(Error::Dimension(format!(
            "expected {} symbols, got {}",
            t * k,
            symbols.len()
        )));
    }
    let mut active_noise = stream_rng(seed, STREAM_ACTIVE_NOISE);
    let mut rrtx_noise = stream_rng(seed, STREAM_RRTX_NOISE);
    let retransmit = &cs.h1 * theta;

    let mut received = CVec::zeros((t + 1) * m);
    let mut r_prev = CVec::zeros(m);
    for slot in 0..=t {
        let s = if slot < t {
            symbols.rows(slot * k, k).into_owned()
        } else {
            CVec::zeros(k)
        };
        let noise = CVec::from_fn(m, |_, _| cn_sample(&mut active_noise, cs.n0));
        let y = &cs.h0 * &s + &retransmit * &r_prev + noise;
        received.rows_mut(slot * m, m).copy_from(&y);

        let mut r = &cs.h2 * &s;
        if let Some(h12) = &cs.h12 {
            r += h12 * &r_prev;
        }
        if include_rrtx_noise {
            r += CVec::from_fn(m, |_, _| cn_sample(&mut rrtx_noise, cs.ntilde0));
        }
        r_prev = r;
    }
    Ok(received)
}

/// `𝓗ᴴ y / β`.
pub fn mrc_combine(ch: &IsiChannel, received: &CVec) -> Result<CVec> {
    if !(ch.beta > 0.0) {
        return Err(Error::InvalidParameter(format!("β must be positive, got {}", ch.beta)));
    }
    if received.len() != ch.matrix.nrows() {
        return Err(Error::Dimension(format!(
            "received vector must have length {}, got {}",
            ch.matrix.nrows(),
            received.len()
        )));
    }
    Ok(ch.matrix.adjoint() * received / Complex::new(ch.beta, 0.0))
}

/// Per-UE capacities in bits/s/Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityReport {
    pub per_ue: Vec<f64>,
    pub best: f64,
    pub worst: f64,
    /// Computed under the white retransmitted-noise approximation.
    pub assumption1: bool,
}

impl CapacityReport {
    pub fn from_per_ue(per_ue: Vec<f64>, assumption1: bool) -> Self {
        let best = per_ue.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let worst = per_ue.iter().copied().fold(f64::INFINITY, f64::min);
        CapacityReport {
            per_ue,
            best,
            worst,
            assumption1,
        }
    }
}

/// Every UE sees an AWGN channel with SNR β/N0.
pub fn capacity_white(beta: f64, n0: f64, k: usize) -> Result<CapacityReport> {
    if !(beta > 0.0) || !(n0 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "β and N0 must be positive, got β={beta}, N0={n0}"
        )));
    }
    if k == 0 {
        return Err(Error::Dimension("K must be at least 1".into()));
    }
    let c = (1.0 + beta / n0).log2();
    Ok(CapacityReport::from_per_ue(vec![c; k], true))
}

/// Post-MRC capacities with the retransmitted LP-Rx noise kept in the model.
///
/// The stacked noise covariance is `N0 I` on slot 1 and `N0 I + Ñ0 (H1Θ)(H1Θ)ᴴ`
/// on slots 2..T+1. Stream j gets SINR `β² / [𝓗ᴴ C 𝓗]_jj` and each UE's capacity is
/// the mean over its T streams.
pub fn capacity_exact(cs: &ChannelSet, sol: &RrtxSolution, t: usize) -> Result<CapacityReport> {
    let (m, k) = cs.h0.shape();
    if !(sol.beta > 0.0) || !(cs.n0 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "β and N0 must be positive, got β={}, N0={}",
            sol.beta, cs.n0
        )));
    }
    let isi = build_isi_matrix(&cs.h0, &sol.htilde, t, sol.beta)?;
    let retransmit_adj = (&cs.h1 * &sol.theta).adjoint();
    let beta_sq = sol.beta * sol.beta;

    let per_ue = (0..k)
        .map(|ue| {
            let per_stream: Vec<f64> = (0..t)
                .map(|slot| {
                    let col = isi.matrix.column(slot * k + ue);
                    let white = cs.n0 * col.norm_squared();
                    let colored: f64 = (1..=t)
                        .map(|block| (&retransmit_adj * col.rows(block * m, m)).norm_squared())
                        .sum();
                    (1.0 + beta_sq / (white + cs.ntilde0 * colored)).log2()
                })
                .collect();
            compensated_mean(&per_stream)
        })
        .collect();
    Ok(CapacityReport::from_per_ue(per_ue, false))
}
