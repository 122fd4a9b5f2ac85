//! Minimum-power selection of the semi-unitary DoF `Ũ`.
//!
//! With `Ȟ1 = H1⁻¹ U0 [0; I_{M−K}]` and `Ȟ2 = (βI − Λ0)^½ V0ᴴ H2⁺` the processing
//! matrix is `Θ(Ũ) = Ȟ1 Ũ Ȟ2`, so
//!
//! ```text
//! ‖Θ(Ũ)‖²_F = tr(Ǧ1 Ũ Ǧ2 Ũᴴ),   Ǧ1 = Ȟ1ᴴȞ1,  Ǧ2 = Ȟ2Ȟ2ᴴ.
//! ```
//!
//! Stationary points on the Stiefel manifold align the columns of `Ũ` with
//! eigenvectors of both Gram matrices, and the objective reduces to a sum of
//! pairwise eigenvalue products. The minimum picks the K smallest eigenvalues of
//! `Ǧ1` and pairs them in opposite order with the eigenvalues of `Ǧ2`.
//!
//! [`brute_force_min`] and [`descent_verifier`] are independent checks of that
//! closed form: one enumerates every stationary-point candidate, the other runs
//! geodesic gradient descent on the unitary group.

use itertools::Itertools;
use nalgebra::Complex;
use rand::Rng;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::linalg::{
    checked_inverse, checked_pseudo_inverse, complete_unitary, hermitian_eigen_ascending, random_unitary, real_diag,
    stream_rng, CMat, Complex64,
};
use crate::ortho::{check_feasibility, decompose_h0, gain_margin_sqrt, orthogonalize_with_svd, H0Svd, RrtxSolution};

/// Relative eigenvalue gap below which two eigenvalues count as tied.
pub const DEGENERACY_GAP: f64 = 1e-8;
/// Largest K accepted by [`brute_force_min`].
pub const BRUTE_FORCE_MAX_K: usize = 8;
/// Largest number of eigenvalue subsets accepted by [`brute_force_min`].
pub const BRUTE_FORCE_MAX_SUBSETS: u128 = 10_000;

/// Channels folded into the power objective together with their Gram eigendecompositions.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckedChannels {
    /// M×(M−K).
    pub hcheck1: CMat,
    /// K×M.
    pub hcheck2: CMat,
    /// (M−K)×(M−K), `Ȟ1ᴴȞ1`.
    pub gcheck1: CMat,
    /// K×K, `Ȟ2Ȟ2ᴴ`.
    pub gcheck2: CMat,
    /// Eigenvalues of `Ǧ1`, ascending.
    pub eigs1: Vec<f64>,
    /// Eigenvalues of `Ǧ2`, ascending.
    pub eigs2: Vec<f64>,
    /// Eigenvectors of `Ǧ1`, column i for `eigs1[i]`.
    pub ucheck1: CMat,
    /// Eigenvectors of `Ǧ2`, column i for `eigs2[i]`.
    pub ucheck2: CMat,
}

/// Which Gram matrix has (near-)repeated eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramSide {
    First,
    Second,
}

/// Two eigenvalues closer than [`DEGENERACY_GAP`] (relative); the closed-form
/// family still attains the minimum but is no longer the complete stationary set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Degeneracy {
    pub side: GramSide,
    /// Index of the lower eigenvalue of the tied pair.
    pub index: usize,
    pub relative_gap: f64,
}

fn first_tie(values: &[f64], side: GramSide) -> Option<Degeneracy> {
    values.windows(2).enumerate().find_map(|(i, w)| {
        let scale = w[0].abs().max(w[1].abs());
        let gap = if scale > 0.0 { (w[1] - w[0]).abs() / scale } else { 0.0 };
        (gap < DEGENERACY_GAP).then_some(Degeneracy {
            side,
            index: i,
            relative_gap: gap,
        })
    })
}

impl CheckedChannels {
    /// Builds the structure directly from the two Gram matrices, with
    /// `Ȟ1 = Λ1^½ Ǔ1ᴴ` and `Ȟ2 = Ǔ2 Λ2^½` as factors.
    pub fn from_grams(gcheck1: CMat, gcheck2: CMat) -> Result<Self> {
        if gcheck1.nrows() != gcheck1.ncols() || gcheck2.nrows() != gcheck2.ncols() {
            return Err(Error::Dimension("Gram matrices must be square".into()));
        }
        if gcheck1.nrows() < gcheck2.nrows() {
            return Err(Error::Dimension(format!(
                "first Gram matrix must be at least as large as the second ({} < {})",
                gcheck1.nrows(),
                gcheck2.nrows()
            )));
        }
        let (eigs1, ucheck1) = hermitian_eigen_ascending(&gcheck1);
        let (eigs2, ucheck2) = hermitian_eigen_ascending(&gcheck2);
        let sqrt1: Vec<f64> = eigs1.iter().map(|v| v.max(0.0).sqrt()).collect();
        let sqrt2: Vec<f64> = eigs2.iter().map(|v| v.max(0.0).sqrt()).collect();
        let hcheck1 = real_diag(&sqrt1) * ucheck1.adjoint();
        let hcheck2 = &ucheck2 * real_diag(&sqrt2);
        Ok(CheckedChannels {
            hcheck1,
            hcheck2,
            gcheck1,
            gcheck2,
            eigs1,
            eigs2,
            ucheck1,
            ucheck2,
        })
    }

    fn from_factors(hcheck1: CMat, hcheck2: CMat) -> Self {
        let gcheck1 = hcheck1.adjoint() * &hcheck1;
        let gcheck2 = &hcheck2 * hcheck2.adjoint();
        let (eigs1, ucheck1) = hermitian_eigen_ascending(&gcheck1);
        let (eigs2, ucheck2) = hermitian_eigen_ascending(&gcheck2);
        CheckedChannels {
            hcheck1,
            hcheck2,
            gcheck1,
            gcheck2,
            eigs1,
            eigs2,
            ucheck1,
            ucheck2,
        }
    }

    /// Number of UEs, K.
    pub fn k(&self) -> usize {
        self.gcheck2.nrows()
    }

    /// M − K.
    pub fn free_dim(&self) -> usize {
        self.gcheck1.nrows()
    }

    pub fn degeneracy(&self) -> Option<Degeneracy> {
        first_tie(&self.eigs1, GramSide::First).or_else(|| first_tie(&self.eigs2, GramSide::Second))
    }

    /// `tr(Ǧ1 Ũ Ǧ2 Ũᴴ)`, which equals ‖Θ(Ũ)‖²_F.
    pub fn objective(&self, utilde: &CMat) -> f64 {
        (&self.gcheck1 * utilde * &self.gcheck2 * utilde.adjoint()).trace().re
    }

    /// `Θ(Ũ) = Ȟ1 Ũ Ȟ2`.
    pub fn theta(&self, utilde: &CMat) -> CMat {
        &self.hcheck1 * utilde * &self.hcheck2
    }

    /// ‖Ǧ1ŨǦ2Ũᴴ − ŨǦ2ᴴŨᴴǦ1ᴴ‖_F, zero exactly at stationary points.
    pub fn stationarity_residual(&self, utilde: &CMat) -> f64 {
        let lhs = &self.gcheck1 * utilde * &self.gcheck2 * utilde.adjoint();
        let rhs = utilde * self.gcheck2.adjoint() * utilde.adjoint() * self.gcheck1.adjoint();
        (lhs - rhs).norm()
    }
}

/// Folds `H1`, `H2`, the SVD of `H0` and the gain β into the objective's Gram matrices.
pub fn checked_channels(cs: &ChannelSet, svd: &H0Svd, beta: f64) -> Result<CheckedChannels> {
    check_feasibility(&cs.dims, beta, svd).into_result()?;
    let h1_inv = checked_inverse(&cs.h1, "H1")?;
    let h2_pinv = checked_pseudo_inverse(&cs.h2, "H2")?;
    let margin = gain_margin_sqrt(svd, beta)?;
    let hcheck1 = h1_inv * svd.null_basis();
    let hcheck2 = real_diag(&margin) * svd.v0.adjoint() * h2_pinv;
    Ok(CheckedChannels::from_factors(hcheck1, hcheck2))
}

/// Eigenvalue pairing realizing one member of the stationary-point family.
///
/// Pair `i` couples `eigs1[pi1[i]]` with `eigs2[pi2[i]]` and carries phase `phases[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairingPlan {
    pub pi1: Vec<usize>,
    pub pi2: Vec<usize>,
    pub phases: Vec<Complex64>,
}

impl PairingPlan {
    pub fn k(&self) -> usize {
        self.pi2.len()
    }

    pub fn with_phases(mut self, phases: Vec<Complex64>) -> Self {
        self.phases = phases;
        self
    }

    /// Checks the plan against eigenvalue lists of lengths `n1` and `k`.
    pub fn validate(&self, n1: usize, k: usize) -> Result<()> {
        if self.pi1.len() != k || self.pi2.len() != k || self.phases.len() != k {
            return Err(Error::Dimension(format!(
                "pairing plan must have {k} entries per field, got {}/{}/{}",
                self.pi1.len(),
                self.pi2.len(),
                self.phases.len()
            )));
        }
        let mut seen1 = vec![false; n1];
        for &i in &self.pi1 {
            if i >= n1 || std::mem::replace(&mut seen1[i], true) {
                return Err(Error::InvalidParameter(format!(
                    "pi1 entry {i} is out of range or repeated"
                )));
            }
        }
        let mut seen2 = vec![false; k];
        for &i in &self.pi2 {
            if i >= k || std::mem::replace(&mut seen2[i], true) {
                return Err(Error::InvalidParameter(format!("pi2 is not a permutation of 0..{k}")));
            }
        }
        if let Some(p) = self.phases.iter().find(|p| (p.norm() - 1.0).abs() > 1e-12) {
            return Err(Error::InvalidParameter(format!("phase {p} is not unit-modulus")));
        }
        Ok(())
    }
}

/// Closed-form minimizer: the K smallest eigenvalues of `Ǧ1` (ascending) paired
/// with the eigenvalues of `Ǧ2` in descending order, all phases one.
pub fn optimal_pairing(eigs1: &[f64], eigs2: &[f64]) -> Result<PairingPlan> {
    let k = eigs2.len();
    if k == 0 || eigs1.len() < k {
        return Err(Error::Dimension(format!(
            "need 1 ≤ K ≤ len(eigs1), got K={k}, len(eigs1)={}",
            eigs1.len()
        )));
    }
    // Lists are ascending, so the K smallest of eigs1 are its first K entries.
    Ok(PairingPlan {
        pi1: (0..k).collect(),
        pi2: (0..k).rev().collect(),
        phases: vec![Complex::new(1.0, 0.0); k],
    })
}

/// `Σᵢ eigs1[pi1(i)] · eigs2[pi2(i)]`.
pub fn pairing_power(eigs1: &[f64], eigs2: &[f64], plan: &PairingPlan) -> Result<f64> {
    plan.validate(eigs1.len(), eigs2.len())?;
    Ok(plan.pi1.iter().zip(&plan.pi2).map(|(&a, &b)| eigs1[a] * eigs2[b]).sum())
}

/// Semi-unitary `Ũ` of the stationary family selected by `plan`, together with
/// any eigenvalue tie that makes the family incomplete.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledUtilde {
    pub utilde: CMat,
    pub degeneracy: Option<Degeneracy>,
}

/// `Ũ = Σᵢ φᵢ ǔ1[pi1(i)] ǔ2[pi2(i)]ᴴ`.
pub fn assemble_utilde(cc: &CheckedChannels, plan: &PairingPlan) -> Result<AssembledUtilde> {
    plan.validate(cc.eigs1.len(), cc.eigs2.len())?;
    let mut utilde = CMat::zeros(cc.free_dim(), cc.k());
    for i in 0..plan.k() {
        let left = cc.ucheck1.column(plan.pi1[i]) * plan.phases[i];
        let right = cc.ucheck2.column(plan.pi2[i]);
        utilde += left * right.adjoint();
    }
    Ok(AssembledUtilde {
        utilde,
        degeneracy: cc.degeneracy(),
    })
}

/// Full output of [`minimize_power_detailed`].
#[derive(Debug, Clone)]
pub struct MinimizedPower {
    pub solution: RrtxSolution,
    pub checked: CheckedChannels,
    pub plan: PairingPlan,
    pub degeneracy: Option<Degeneracy>,
}

/// Minimum-power orthogonalizing processing for gain β.
pub fn minimize_power(cs: &ChannelSet, beta: f64) -> Result<RrtxSolution> {
    minimize_power_detailed(cs, beta).map(|m| m.solution)
}

pub fn minimize_power_detailed(cs: &ChannelSet, beta: f64) -> Result<MinimizedPower> {
    let svd = decompose_h0(&cs.h0)?;
    minimize_power_with_svd(cs, &svd, beta)
}

pub fn minimize_power_with_svd(cs: &ChannelSet, svd: &H0Svd, beta: f64) -> Result<MinimizedPower> {
    let checked = checked_channels(cs, svd, beta)?;
    let plan = optimal_pairing(&checked.eigs1, &checked.eigs2)?;
    let AssembledUtilde { utilde, degeneracy } = assemble_utilde(&checked, &plan)?;
    let solution = orthogonalize_with_svd(cs, svd, beta, &utilde)?;
    Ok(MinimizedPower {
        solution,
        checked,
        plan,
        degeneracy,
    })
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i as u128 + 1))
}

/// Minimum of the pairing objective over every K-subset of `eigs1` and every
/// ordering of `eigs2`.
pub fn brute_force_min(cc: &CheckedChannels) -> Result<f64> {
    brute_force_pairing(&cc.eigs1, &cc.eigs2)
}

/// Enumeration behind [`brute_force_min`], on raw eigenvalue lists.
pub fn brute_force_pairing(eigs1: &[f64], eigs2: &[f64]) -> Result<f64> {
    let k = eigs2.len();
    if k == 0 || eigs1.len() < k {
        return Err(Error::Dimension(format!(
            "need 1 ≤ K ≤ len(eigs1), got K={k}, len(eigs1)={}",
            eigs1.len()
        )));
    }
    if k > BRUTE_FORCE_MAX_K {
        return Err(Error::Budget {
            needed: (1..=k as u128).product(),
            limit: (1..=BRUTE_FORCE_MAX_K as u128).product(),
        });
    }
    let subsets = binomial(eigs1.len(), k);
    if subsets > BRUTE_FORCE_MAX_SUBSETS {
        return Err(Error::Budget {
            needed: subsets,
            limit: BRUTE_FORCE_MAX_SUBSETS,
        });
    }
    let orders: Vec<Vec<usize>> = (0..k).permutations(k).collect();
    let best = (0..eigs1.len())
        .combinations(k)
        .flat_map(|subset| {
            orders
                .iter()
                .map(move |order| {
                    subset
                        .iter()
                        .zip(order)
                        .map(|(&a, &b)| eigs1[a] * eigs2[b])
                        .sum::<f64>()
                })
                .collect::<Vec<_>>()
        })
        .fold(f64::INFINITY, f64::min);
    Ok(best)
}

/// `Γ = Ǧ1 Ũ Ǧ2`, the gradient of `tr(Ǧ1ŨǦ2Ũᴴ)` with respect to `Ũ*`.
pub fn euclidean_gradient(utilde: &CMat, gcheck1: &CMat, gcheck2: &CMat) -> CMat {
    gcheck1 * utilde * gcheck2
}

/// `Γ − U Γᴴ U`, the Riemannian gradient on the unitary group.
pub fn riemannian_gradient(u: &CMat, gamma_full: &CMat) -> CMat {
    gamma_full - u * gamma_full.adjoint() * u
}

/// Γ for the full unitary `U`: the Euclidean gradient on the first K columns,
/// zero on the remaining ones.
pub fn padded_gradient(cc: &CheckedChannels, u: &CMat) -> CMat {
    let k = cc.k();
    let utilde = u.columns(0, k).into_owned();
    let mut gamma = CMat::zeros(u.nrows(), u.ncols());
    gamma
        .columns_mut(0, k)
        .copy_from(&euclidean_gradient(&utilde, &cc.gcheck1, &cc.gcheck2));
    gamma
}

/// Result of a geodesic descent run.
#[derive(Debug, Clone, PartialEq)]
pub struct DescentOutcome {
    /// Best objective value reached.
    pub objective: f64,
    pub steps: usize,
    /// The Riemannian gradient vanished (relative to the objective scale) before the budget ran out.
    pub converged: bool,
    pub final_gradient_norm: f64,
    /// Unitary iterate attaining `objective`.
    pub point: CMat,
}

/// Geodesic gradient descent from a Haar-random unitary start.
///
/// The step is `U ← U exp(−μ Uᴴ∇̃J(U))`, with μ measured in units of
/// `1 / (λ1,max λ2,max)` so that `step_size` does not depend on the channel scale.
/// A step that fails to decrease the objective is retried with μ halved.
pub fn descent_verifier(cc: &CheckedChannels, seed: u64, max_steps: usize, step_size: f64) -> Result<DescentOutcome> {
    let start = random_unitary(cc.free_dim(), &mut stream_rng(seed, 0));
    descend_from(cc, start, max_steps, step_size)
}

/// Same as [`descent_verifier`] from a caller-provided unitary start, or from
/// an (M−K)×K semi-unitary start completed to a unitary.
pub fn descend_from(cc: &CheckedChannels, start: CMat, max_steps: usize, step_size: f64) -> Result<DescentOutcome> {
    if max_steps == 0 || !(step_size > 0.0) {
        return Err(Error::InvalidParameter(
            "descent budget and step size must be positive".into(),
        ));
    }
    let n = cc.free_dim();
    let k = cc.k();
    let mut u = match start.shape() {
        (r, c) if r == n && c == n => start,
        (r, c) if r == n && c == k => complete_unitary(&start),
        shape => {
            return Err(Error::Dimension(format!(
                "start point must be {n}x{n} or {n}x{k}, got {shape:?}"
            )))
        }
    };

    let top1 = cc.eigs1.last().copied().unwrap_or(0.0);
    let top2 = cc.eigs2.last().copied().unwrap_or(0.0);
    let lipschitz = (top1 * top2).max(f64::MIN_POSITIVE);
    let base_mu = step_size / lipschitz;
    let mut mu = base_mu;

    let eval = |u: &CMat| cc.objective(&u.columns(0, k).into_owned());
    let mut value = eval(&u);
    let mut grad_norm = f64::INFINITY;
    let mut converged = false;
    let mut steps = 0;

    while steps < max_steps {
        let grad = riemannian_gradient(&u, &padded_gradient(cc, &u));
        grad_norm = grad.norm();
        if grad_norm <= 1e-13 * lipschitz {
            converged = true;
            break;
        }
        // Uᴴ∇̃ is skew-Hermitian: Uᴴ∇̃ = iH with H Hermitian, so exp(−μUᴴ∇̃) = V e^{−iμΛ} Vᴴ
        // and one eigendecomposition serves every trial step.
        let direction = u.adjoint() * &grad;
        let (lambda, v) = hermitian_eigen_ascending(&(direction * Complex::new(0.0, -1.0)));
        let v_adj = v.adjoint();
        let mut accepted = false;
        for _ in 0..60 {
            let mut rotated = v.clone();
            for (j, &l) in lambda.iter().enumerate() {
                let phase = Complex::from_polar(1.0, -mu * l);
                rotated.column_mut(j).iter_mut().for_each(|z| *z *= phase);
            }
            let candidate = &u * (rotated * &v_adj);
            let candidate_value = eval(&candidate);
            if candidate_value < value {
                u = candidate;
                value = candidate_value;
                accepted = true;
                break;
            }
            mu *= 0.5;
        }
        steps += 1;
        if !accepted {
            // No decrease even for a vanishing step: numerically stationary.
            converged = true;
            break;
        }
        mu = (mu * 2.0).min(base_mu * 64.0);
    }

    Ok(DescentOutcome {
        objective: value,
        steps,
        converged,
        final_gradient_norm: grad_norm,
        point: u,
    })
}

/// Haar-random semi-unitary DoF; its power is the reference the optimizer is compared against.
pub fn random_utilde<R: Rng + ?Sized>(cc: &CheckedChannels, rng: &mut R) -> CMat {
    crate::linalg::random_semi_unitary(cc.free_dim(), cc.k(), rng)
}
