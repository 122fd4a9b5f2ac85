//! Invariant suite run by `rrtx verify`.

use std::fmt;

use nalgebra::Complex;
use rrtx::linalg::{complete_unitary, complex_gaussian, complex_gaussian_vec, random_semi_unitary, stream_rng};
use rrtx::ortho::{orthogonalize_with_svd, Infeasibility};
use rrtx::powmin::{brute_force_min, minimize_power_with_svd, padded_gradient};
use rrtx::stats::from_db;
use rrtx::{
    assemble_utilde, build_isi_matrix, check_feasibility, decompose_h0, euclidean_gradient, min_beta,
    riemannian_gradient, sample_channel_set, simulate_uplink, CMat, CheckedChannels, Complex64, Feasibility,
};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::seeds::{trial_seed, SALT_NOISE, SALT_VERIFY};

/// Random instances checked per property; the config's trial count is capped here.
pub const MAX_VERIFY_INSTANCES: usize = 100;

pub const ORTHOGONALITY_TOL: f64 = 1e-9;
pub const CASCADE_TOL: f64 = 1e-8;
pub const ORACLE_TOL: f64 = 1e-8;
pub const STATIONARITY_TOL: f64 = 1e-8;
pub const GRADIENT_TOL: f64 = 1e-5;
pub const GRADIENT_STEP: f64 = 1e-5;
pub const PHASE_TOL: f64 = 1e-10;
pub const RECURSION_TOL: f64 = 1e-10;
/// Size of the Θ perturbation injected by the self-test.
pub const CORRUPTION: f64 = 1e-3;
/// Oracle equivalence is only checked up to this many UEs.
pub const ORACLE_MAX_K: usize = 4;

/// One verified property.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Largest residual seen over all instances.
    pub max_residual: f64,
    pub tolerance: f64,
    pub instances: usize,
    pub note: Option<String>,
}

impl PropertyCheck {
    fn below(name: &'static str, residuals: &[f64], tolerance: f64) -> Self {
        let max_residual = residuals.iter().copied().fold(0.0, f64::max);
        let passed = residuals.iter().all(|r| *r < tolerance);
        PropertyCheck {
            name,
            passed,
            max_residual,
            tolerance,
            instances: residuals.len(),
            note: None,
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub checks: Vec<PropertyCheck>,
    /// Set when the configured dimensions cannot be orthogonalized. The report
    /// then holds only the rejection check.
    pub rejected: Option<Infeasibility>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &PropertyCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&PropertyCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            write!(
                f,
                "{:<5} {:<22} max residual {:.3e} (tol {:.0e}, {} instances)",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.max_residual,
                c.tolerance,
                c.instances
            )?;
            if let Some(note) = &c.note {
                write!(f, "  {note}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// `Γ` by central differences on the real and imaginary part of every entry.
fn finite_difference_gradient(cc: &CheckedChannels, u: &CMat, h: f64) -> CMat {
    let mut grad = CMat::zeros(u.nrows(), u.ncols());
    for i in 0..u.nrows() {
        for j in 0..u.ncols() {
            let partial = |delta: Complex64| {
                let mut plus = u.clone();
                let mut minus = u.clone();
                plus[(i, j)] += delta;
                minus[(i, j)] -= delta;
                (cc.objective(&plus) - cc.objective(&minus)) / (2.0 * h)
            };
            let d_re = partial(Complex::new(h, 0.0));
            let d_im = partial(Complex::new(0.0, h));
            // ∂J/∂Ũ* = (∂J/∂Re + i ∂J/∂Im) / 2
            grad[(i, j)] = Complex::new(d_re, d_im) * 0.5;
        }
    }
    grad
}

/// Largest per-entry relative deviation of `approx` from `exact`.
pub fn max_relative_entry_error(approx: &CMat, exact: &CMat) -> f64 {
    approx
        .iter()
        .zip(exact.iter())
        .map(|(a, e)| (a - e).norm() / e.norm().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

#[derive(Default)]
struct Residuals {
    orthogonality: Vec<f64>,
    gram_blocks: Vec<f64>,
    cascade: Vec<f64>,
    gain_boundary: Vec<f64>,
    oracle: Vec<f64>,
    stationarity: Vec<f64>,
    gradient: Vec<f64>,
    phase: Vec<f64>,
    recursion: Vec<f64>,
    corrupted: Vec<f64>,
}

/// Runs the invariant suite on `min(trials, MAX_VERIFY_INSTANCES)` random
/// instances at the configured dimensions, cycling through the η grid.
///
/// With `self_test` set, a Θ perturbed by [`CORRUPTION`] is also pushed through
/// the orthogonality check, which must reject it.
pub fn run_verify(cfg: &ExperimentConfig, self_test: bool) -> Result<VerifyReport, CliError> {
    cfg.validate()?;
    let dims = cfg.dimensions()?;
    if !dims.supports_orthogonalization() {
        return Ok(rejection_report(cfg));
    }

    let instances = cfg.trials.min(MAX_VERIFY_INSTANCES);
    let (m, k, t) = (dims.m, dims.k, dims.t);
    let mut res = Residuals::default();

    for trial in 0..instances {
        let eta_db = cfg.eta_grid_db[trial % cfg.eta_grid_db.len()];
        let wrap = |source| CliError::Numerical { eta_db, trial, source };
        let seed = trial_seed(cfg.master_seed, trial as u64, SALT_VERIFY);
        let cs = sample_channel_set(dims, from_db(eta_db), cfg.noise.n0, cfg.noise.ntilde0, seed).map_err(wrap)?;
        let svd = decompose_h0(&cs.h0).map_err(wrap)?;
        let beta = min_beta(&svd);

        let below = check_feasibility(&dims, beta * 0.999, &svd);
        let at = check_feasibility(&dims, beta, &svd);
        res.gain_boundary.push(if at.is_feasible() && !below.is_feasible() {
            0.0
        } else {
            1.0
        });

        let opt = minimize_power_with_svd(&cs, &svd, beta).map_err(wrap)?;
        let sol = &opt.solution;
        let isi = build_isi_matrix(&cs.h0, &sol.htilde, t, beta).map_err(wrap)?;
        res.orthogonality.push(isi.orthogonality_residual());
        res.gram_blocks.push(sol.gram_residual(&cs.h0));
        res.cascade.push(sol.cascade_residual(&cs.h1, &cs.h2));

        let cc = &opt.checked;
        if k <= ORACLE_MAX_K {
            match brute_force_min(cc) {
                Ok(oracle) => res.oracle.push(relative(sol.power, oracle)),
                Err(rrtx::Error::Budget { .. }) => {}
                Err(e) => return Err(wrap(e)),
            }
        }

        let u_full = complete_unitary(&sol.utilde);
        let riem = riemannian_gradient(&u_full, &padded_gradient(cc, &u_full));
        res.stationarity.push(riem.norm());

        let mut rng = stream_rng(trial_seed(cfg.master_seed, trial as u64, SALT_NOISE), 2);
        let point = random_semi_unitary(m - k, k, &mut rng);
        let exact = euclidean_gradient(&point, &cc.gcheck1, &cc.gcheck2);
        let fd = finite_difference_gradient(cc, &point, GRADIENT_STEP);
        res.gradient.push(max_relative_entry_error(&fd, &exact));

        let phases: Vec<Complex64> = (0..k)
            .map(|_| Complex::from_polar(1.0, rand::Rng::random_range(&mut rng, 0.0..std::f64::consts::TAU)))
            .collect();
        let rotated = assemble_utilde(cc, &opt.plan.clone().with_phases(phases)).map_err(wrap)?;
        let rotated_sol = orthogonalize_with_svd(&cs, &svd, beta, &rotated.utilde).map_err(wrap)?;
        res.phase.push(relative(rotated_sol.power, sol.power));

        let noiseless = cs.with_noise(0.0, 0.0);
        let symbols = complex_gaussian_vec(t * k, 1.0, &mut rng);
        let noise_seed = trial_seed(cfg.master_seed, trial as u64, SALT_NOISE);
        let y = simulate_uplink(&noiseless, &sol.theta, &symbols, noise_seed, false).map_err(wrap)?;
        let stacked = &isi.matrix * &symbols;
        res.recursion
            .push((y - &stacked).norm() / stacked.norm().max(f64::MIN_POSITIVE));

        if self_test {
            let bump = complex_gaussian(m, m, 1.0, &mut rng);
            let bump = &bump * Complex::new(CORRUPTION / bump.norm(), 0.0);
            let corrupted_htilde = &cs.h1 * (&sol.theta + bump) * &cs.h2;
            let bad = build_isi_matrix(&cs.h0, &corrupted_htilde, t, beta).map_err(wrap)?;
            res.corrupted.push(bad.orthogonality_residual());
        }
    }

    let mut checks = vec![
        PropertyCheck::below("orthogonality", &res.orthogonality, ORTHOGONALITY_TOL),
        PropertyCheck::below("gram-blocks", &res.gram_blocks, ORTHOGONALITY_TOL),
        PropertyCheck::below("cascade", &res.cascade, CASCADE_TOL),
        PropertyCheck::below("gain-boundary", &res.gain_boundary, 0.5)
            .with_note("0.999·λ0,max rejected, λ0,max accepted"),
    ];
    if res.oracle.is_empty() {
        checks.push(PropertyCheck {
            name: "oracle-equivalence",
            passed: true,
            max_residual: 0.0,
            tolerance: ORACLE_TOL,
            instances: 0,
            note: Some(format!("skipped: K={k} exceeds the enumeration budget")),
        });
    } else {
        checks.push(PropertyCheck::below("oracle-equivalence", &res.oracle, ORACLE_TOL));
    }
    checks.extend([
        PropertyCheck::below("stationarity", &res.stationarity, STATIONARITY_TOL),
        PropertyCheck::below("gradient", &res.gradient, GRADIENT_TOL),
        PropertyCheck::below("phase-invariance", &res.phase, PHASE_TOL),
        PropertyCheck::below("recursion-equivalence", &res.recursion, RECURSION_TOL),
    ]);
    if self_test {
        // The control passes when every corrupted instance is rejected.
        let min_residual = res.corrupted.iter().copied().fold(f64::INFINITY, f64::min);
        checks.push(PropertyCheck {
            name: "negative-control",
            passed: res.corrupted.iter().all(|r| !(*r < ORTHOGONALITY_TOL)),
            max_residual: min_residual,
            tolerance: ORTHOGONALITY_TOL,
            instances: res.corrupted.len(),
            note: Some(format!(
                "Θ perturbed by {CORRUPTION:.0e}; residual shown is the smallest and must exceed tol"
            )),
        });
    }
    Ok(VerifyReport { checks, rejected: None })
}

/// M < 2K: the only property is that the construction refuses the instance.
fn rejection_report(cfg: &ExperimentConfig) -> VerifyReport {
    let dims = cfg.dimensions().expect("validated");
    let seed = trial_seed(cfg.master_seed, 0, SALT_VERIFY);
    let verdict = sample_channel_set(dims, 1.0, cfg.noise.n0, cfg.noise.ntilde0, seed)
        .and_then(|cs| decompose_h0(&cs.h0))
        .map(|svd| check_feasibility(&dims, min_beta(&svd), &svd));
    let (passed, rejected) = match verdict {
        Ok(Feasibility::Infeasible(why @ Infeasibility::Rank { .. })) => (true, Some(why)),
        _ => (false, None),
    };
    let note = match &rejected {
        Some(why) => format!("expected rejection: {why}"),
        None => "rank-deficient instance was not rejected".to_string(),
    };
    VerifyReport {
        checks: vec![PropertyCheck {
            name: "feasibility-rejection",
            passed,
            max_residual: 0.0,
            tolerance: 0.0,
            instances: 1,
            note: Some(note),
        }],
        rejected,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::DimsConfig;

    fn cfg(m: usize, k: usize, trials: usize) -> ExperimentConfig {
        ExperimentConfig {
            dims: DimsConfig { m, k, t: 4 },
            trials,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn default_dims_pass() {
        let report = run_verify(&cfg(8, 2, 10), false).unwrap();
        assert!(report.passed(), "{report}");
        assert!(report.get("orthogonality").unwrap().max_residual < ORTHOGONALITY_TOL);
        assert!(report.get("negative-control").is_none());
    }

    #[test]
    fn self_test_rejects_corruption() {
        let report = run_verify(&cfg(8, 2, 5), true).unwrap();
        let control = report.get("negative-control").unwrap();
        assert!(control.passed && control.max_residual > ORTHOGONALITY_TOL);
        assert!(report.passed());
    }

    #[test]
    fn rank_deficient_dims_are_rejected_cleanly() {
        let report = run_verify(&cfg(3, 2, 5), false).unwrap();
        assert!(report.passed());
        assert!(matches!(report.rejected, Some(Infeasibility::Rank { m: 3, k: 2 })));
    }

    #[test]
    fn fd_gradient_helper_matches_on_diagonal_example() {
        let cc = CheckedChannels::from_grams(
            rrtx::linalg::real_diag(&[1.0, 2.0, 3.0]),
            rrtx::linalg::real_diag(&[5.0, 4.0]),
        )
        .unwrap();
        let u = random_semi_unitary(3, 2, &mut stream_rng(9, 0));
        let exact = euclidean_gradient(&u, &cc.gcheck1, &cc.gcheck2);
        let fd = finite_difference_gradient(&cc, &u, GRADIENT_STEP);
        assert!(max_relative_entry_error(&fd, &exact) < 1e-7);
    }
}
