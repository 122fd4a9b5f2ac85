//! Construction of the RRTx processing that makes the stacked ISI channel
//! orthogonal in space and time.
//!
//! With the SVD `H0 = U0 [Λ0^½; 0] V0ᴴ`, the aggregate RRTx channel is chosen as
//! `H̃ = U0 [0; B]` so that its columns lie in the null space of `H0ᴴ`, and
//! `B = Ũ (βI − Λ0)^½ V0ᴴ` for any semi-unitary `Ũ` so that
//! `H0ᴴH0 + H̃ᴴH̃ = βI`. The processing matrix is then `Θ = H1⁻¹ H̃ H2⁺`.

use std::fmt;

use nalgebra::Complex;

use crate::channel::{ChannelSet, Dimensions};
use crate::error::{Error, Result};
use crate::linalg::{
    checked_inverse, checked_pseudo_inverse, complete_unitary, fro_norm_sq, semi_unitarity_residual, CMat, Complex64,
};

/// Relative slack on the `β ≥ λ0,max` comparison.
pub const BETA_SLACK: f64 = 1e-12;
/// Tolerance on `ŨᴴŨ = I` accepted by [`build_b`].
pub const SEMI_UNITARY_TOL: f64 = 1e-8;

/// Full SVD of the direct channel, `H0 = U0 [diag(√λ0); 0] V0ᴴ`.
#[derive(Debug, Clone, PartialEq)]
pub struct H0Svd {
    /// M×M unitary.
    pub u0: CMat,
    /// Eigenvalues of `H0ᴴH0`, descending.
    pub lambda0: Vec<f64>,
    /// K×K unitary whose columns are the right singular vectors.
    pub v0: CMat,
}

impl H0Svd {
    pub fn m(&self) -> usize {
        self.u0.nrows()
    }

    pub fn k(&self) -> usize {
        self.v0.nrows()
    }

    /// `U0 [diag(√λ0); 0] V0ᴴ`.
    pub fn reconstruct(&self) -> CMat {
        let (m, k) = (self.m(), self.k());
        let mut sigma = CMat::zeros(m, k);
        for (i, &l) in self.lambda0.iter().enumerate() {
            sigma[(i, i)] = Complex::new(l.sqrt(), 0.0);
        }
        &self.u0 * sigma * self.v0.adjoint()
    }

    /// Last M−K columns of `U0`, an orthonormal basis of the null space of `H0ᴴ`.
    pub fn null_basis(&self) -> CMat {
        let (m, k) = (self.m(), self.k());
        self.u0.columns(k, m - k).into_owned()
    }
}

/// Full SVD of `H0` with descending singular values.
///
/// Phase convention: the leading non-negligible component of every right singular
/// vector is real positive, and the matching left vector is rotated with it. The
/// trailing M−K columns of `U0` complete the basis deterministically.
pub fn decompose_h0(h0: &CMat) -> Result<H0Svd> {
    let (m, k) = h0.shape();
    if m < k || k == 0 {
        return Err(Error::Dimension(format!("H0 must satisfy M ≥ K ≥ 1, got {m}x{k}")));
    }
    let svd = h0.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let v = svd.v_t.expect("v_t requested").adjoint();

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let mut u_thin = CMat::zeros(m, k);
    let mut v0 = CMat::zeros(k, k);
    let mut lambda0 = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        let s = svd.singular_values[src];
        lambda0.push(s * s);
        let mut vcol = v.column(src).into_owned();
        let mut ucol = u.column(src).into_owned();
        if let Some(lead) = vcol.iter().copied().find(|z| z.norm() > 1e-8) {
            let phase = (lead / lead.norm()).conj();
            vcol *= phase;
            ucol *= phase;
        }
        v0.set_column(dst, &vcol);
        u_thin.set_column(dst, &ucol);
    }
    let u0 = complete_unitary(&u_thin);
    Ok(H0Svd { u0, lambda0, v0 })
}

/// Smallest β for which `BᴴB = βI − H0ᴴH0` is solvable: `λ0,max`.
pub fn min_beta(svd: &H0Svd) -> f64 {
    svd.lambda0.first().copied().unwrap_or(0.0).max(0.0)
}

/// Which orthogonalization condition failed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Infeasibility {
    /// M < 2K: `BᴴB` cannot reach rank K.
    Rank { m: usize, k: usize },
    /// β below `λ0,max`.
    Gain { beta: f64, min_beta: f64 },
}

impl fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Infeasibility::Rank { m, k } => write!(f, "rank condition M ≥ 2K violated (M={m}, K={k})"),
            Infeasibility::Gain { beta, min_beta } => {
                write!(f, "gain condition β ≥ λ0,max violated (β={beta}, λ0,max={min_beta})")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Feasibility {
    Feasible,
    Infeasible(Infeasibility),
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible)
    }

    pub fn into_result(self) -> Result<()> {
        match self {
            Feasibility::Feasible => Ok(()),
            Feasibility::Infeasible(why) => Err(Error::Infeasible(why)),
        }
    }
}

fn gain_ok(beta: f64, min_beta: f64) -> bool {
    beta >= min_beta * (1.0 - BETA_SLACK)
}

/// Checks M ≥ 2K first, then β ≥ λ0,max.
pub fn check_feasibility(dims: &Dimensions, beta: f64, svd: &H0Svd) -> Feasibility {
    if !dims.supports_orthogonalization() {
        return Feasibility::Infeasible(Infeasibility::Rank { m: dims.m, k: dims.k });
    }
    let lmax = min_beta(svd);
    if !gain_ok(beta, lmax) {
        return Feasibility::Infeasible(Infeasibility::Gain { beta, min_beta: lmax });
    }
    Feasibility::Feasible
}

/// `(βI − Λ0)^½` as a vector of diagonal entries; negative round-off at the
/// boundary is clamped to zero.
pub(crate) fn gain_margin_sqrt(svd: &H0Svd, beta: f64) -> Result<Vec<f64>> {
    let lmax = min_beta(svd);
    if !gain_ok(beta, lmax) {
        return Err(Error::Infeasible(Infeasibility::Gain { beta, min_beta: lmax }));
    }
    Ok(svd.lambda0.iter().map(|&l| (beta - l).max(0.0).sqrt()).collect())
}

/// `B = Ũ (βI − Λ0)^½ V0ᴴ`.
pub fn build_b(svd: &H0Svd, beta: f64, utilde: &CMat) -> Result<CMat> {
    let (m, k) = (svd.m(), svd.k());
    if m < 2 * k {
        return Err(Error::Infeasible(Infeasibility::Rank { m, k }));
    }
    if utilde.shape() != (m - k, k) {
        return Err(Error::Dimension(format!(
            "Ũ must be {}x{k}, got {:?}",
            m - k,
            utilde.shape()
        )));
    }
    let margin = gain_margin_sqrt(svd, beta)?;
    let residual = semi_unitarity_residual(utilde);
    if !(residual < SEMI_UNITARY_TOL) {
        return Err(Error::Constraint {
            what: "Ũ semi-unitarity",
            residual,
        });
    }
    let mut scaled = utilde.clone();
    for (j, &s) in margin.iter().enumerate() {
        scaled.column_mut(j).iter_mut().for_each(|z| *z *= s);
    }
    Ok(scaled * svd.v0.adjoint())
}

/// `H̃ = U0 [0_{K×K}; B]`.
pub fn build_htilde(svd: &H0Svd, b: &CMat) -> Result<CMat> {
    let (m, k) = (svd.m(), svd.k());
    if b.shape() != (m - k, k) {
        return Err(Error::Dimension(format!(
            "B must be {}x{k}, got {:?}",
            m - k,
            b.shape()
        )));
    }
    Ok(svd.null_basis() * b)
}

/// `Θ = H1⁻¹ H̃ H2⁺` with the Moore–Penrose pseudo-inverse of `H2`, which gives
/// the minimum-norm Θ among all left inverses of `H2`.
pub fn solve_theta(htilde: &CMat, h1: &CMat, h2: &CMat) -> Result<CMat> {
    let (m, k) = htilde.shape();
    if h1.shape() != (m, m) || h2.shape() != (m, k) {
        return Err(Error::Dimension(format!(
            "expected H1 {m}x{m} and H2 {m}x{k}, got {:?} and {:?}",
            h1.shape(),
            h2.shape()
        )));
    }
    let h1_inv = checked_inverse(h1, "H1")?;
    let h2_pinv = checked_pseudo_inverse(h2, "H2")?;
    Ok(h1_inv * htilde * h2_pinv)
}

/// `G = H0ᴴH0 + H̃ᴴH̃` and `Z = H0ᴴH̃`, the diagonal and sub-diagonal blocks of `𝓗ᴴ𝓗`.
pub fn gram_blocks(h0: &CMat, htilde: &CMat) -> Result<(CMat, CMat)> {
    if h0.shape() != htilde.shape() {
        return Err(Error::Dimension(format!(
            "H0 and H̃ must have equal shapes, got {:?} and {:?}",
            h0.shape(),
            htilde.shape()
        )));
    }
    let g = h0.adjoint() * h0 + htilde.adjoint() * htilde;
    let z = h0.adjoint() * htilde;
    Ok((g, z))
}

/// RRTx processing that orthogonalizes the ISI channel for one semi-unitary DoF choice.
#[derive(Debug, Clone, PartialEq)]
pub struct RrtxSolution {
    pub utilde: CMat,
    pub b: CMat,
    pub htilde: CMat,
    pub theta: CMat,
    pub beta: f64,
    /// ‖Θ‖²_F.
    pub power: f64,
}

impl RrtxSolution {
    /// max(‖G − βI‖_F, ‖Z‖_F) / β, the departure from the per-block orthogonality conditions.
    pub fn gram_residual(&self, h0: &CMat) -> f64 {
        let (g, z) = gram_blocks(h0, &self.htilde).expect("shapes fixed at construction");
        let k = g.nrows();
        let eg = (g - CMat::identity(k, k) * Complex::new(self.beta, 0.0)).norm();
        eg.max(z.norm()) / self.beta.max(f64::MIN_POSITIVE)
    }

    /// ‖H1 Θ H2 − H̃‖_F / ‖H̃‖_F.
    pub fn cascade_residual(&self, h1: &CMat, h2: &CMat) -> f64 {
        let diff = (h1 * &self.theta * h2 - &self.htilde).norm();
        diff / self.htilde.norm().max(f64::MIN_POSITIVE)
    }
}

/// Runs the full construction for one channel realization, gain and DoF choice.
pub fn orthogonalize(cs: &ChannelSet, beta: f64, utilde: &CMat) -> Result<RrtxSolution> {
    let svd = decompose_h0(&cs.h0)?;
    orthogonalize_with_svd(cs, &svd, beta, utilde)
}

pub fn orthogonalize_with_svd(cs: &ChannelSet, svd: &H0Svd, beta: f64, utilde: &CMat) -> Result<RrtxSolution> {
    check_feasibility(&cs.dims, beta, svd).into_result()?;
    let b = build_b(svd, beta, utilde)?;
    let htilde = build_htilde(svd, &b)?;
    let theta = solve_theta(&htilde, &cs.h1, &cs.h2)?;
    let power = fro_norm_sq(&theta);
    Ok(RrtxSolution {
        utilde: utilde.clone(),
        b,
        htilde,
        theta,
        beta,
        power,
    })
}

/// `[I_K; 0]`, the canonical semi-unitary DoF.
pub fn canonical_utilde(m: usize, k: usize) -> CMat {
    CMat::from_fn(m - k, k, |r, c| {
        if r == c {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}
