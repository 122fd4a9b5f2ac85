//! Monte-Carlo checks of the channel model, the uplink simulation and the
//! capacity formulas against simulated statistics.

use nalgebra::Complex;
use rrtx::linalg::{complex_gaussian_vec, fro_norm_sq, random_semi_unitary, stream_rng};
use rrtx::powmin::minimize_power_with_svd;
use rrtx::{
    build_isi_matrix, capacity_exact, capacity_white, checked_channels, decompose_h0, min_beta, minimize_power,
    mrc_capacity, mrc_combine, orthogonalize, sample_channel_set, simulate_uplink, stack_active, CMat, ChannelSet,
    Dimensions,
};

fn dims(m: usize, k: usize, t: usize) -> Dimensions {
    Dimensions::new(m, k, t).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn mean_entry_power(m: &CMat) -> f64 {
    fro_norm_sq(m) / m.len() as f64
}

#[test]
fn channel_second_moments() {
    // 10⁵ entries of each matrix: 6250 draws of 8×2 for H0/H2, 1563 of 8×8 for H1.
    let eta = 2.5;
    let (mut p0, mut p1, mut p2) = (0.0, 0.0, 0.0);
    let (mut n0, mut n1, mut n2) = (0usize, 0usize, 0usize);
    for seed in 0..6250 {
        let cs = sample_channel_set(dims(8, 2, 1), eta, 1.0, 1.0, seed).unwrap();
        p0 += fro_norm_sq(&cs.h0);
        n0 += cs.h0.len();
        p2 += fro_norm_sq(&cs.h2);
        n2 += cs.h2.len();
        if seed < 1563 {
            p1 += fro_norm_sq(&cs.h1);
            n1 += cs.h1.len();
        }
    }
    assert!(n0 >= 100_000 && n1 >= 100_000);
    assert!(rel(p0 / n0 as f64, eta) < 0.02, "H0 {}", p0 / n0 as f64);
    assert!(rel(p1 / n1 as f64, 1.0) < 0.02, "H1 {}", p1 / n1 as f64);
    assert!(rel(p2 / n2 as f64, 1.0) < 0.02, "H2 {}", p2 / n2 as f64);
}

#[test]
fn h12_entry_variance() {
    let cs = sample_channel_set(dims(64, 2, 1), 1.0, 1.0, 1.0, 3).unwrap();
    let h12 = cs.with_h12(0.01, 7).unwrap().h12.unwrap();
    // 4096 entries: standard error of the mean power is about 1.6%.
    assert!(rel(mean_entry_power(&h12), 0.01) < 0.06);
}

#[test]
fn stacked_column_norms_follow_gain_bookkeeping() {
    let (m, eta) = (8, 0.5);
    let mut total = 0.0;
    let mut cols = 0usize;
    for seed in 0..50_000 {
        let cs = sample_channel_set(dims(m, 2, 1), eta, 1.0, 1.0, seed).unwrap();
        let sc = stack_active(&cs, seed ^ 0x5555, 1.0).unwrap();
        for c in sc.h_all.column_iter() {
            total += c.norm_squared();
            cols += 1;
        }
    }
    let expected = m as f64 * (eta + 2.0);
    assert!(cols == 100_000);
    assert!(rel(total / cols as f64, expected) < 0.02, "{}", total / cols as f64);
}

/// Empirical per-UE SINR of joint MRC on `[H0; H2; H3]` from simulated symbols.
#[test]
fn baseline_mrc_sinr_matches_simulation() {
    let cs = sample_channel_set(dims(8, 2, 1), 1.0, 1.0, 1.0, 11).unwrap();
    let sc = stack_active(&cs, 12, 1.0).unwrap();
    let h = &sc.h_all;
    let k = h.ncols();
    let mut rng = stream_rng(13, 0);
    let trials = 100_000;
    let mut distortion = vec![0.0; k];
    for _ in 0..trials {
        let s = complex_gaussian_vec(k, 1.0, &mut rng);
        let n = complex_gaussian_vec(h.nrows(), sc.n0, &mut rng);
        let y = h * &s + n;
        for (ue, d) in distortion.iter_mut().enumerate() {
            let col = h.column(ue);
            let z = col.dotc(&y);
            *d += (z - s[ue] * col.norm_squared()).norm_sqr();
        }
    }
    let report = mrc_capacity(&sc).unwrap();
    for (ue, d) in distortion.iter().enumerate() {
        let energy = h.column(ue).norm_squared();
        let sinr_mc = energy * energy / (d / trials as f64);
        let sinr_formula = 2f64.powf(report.per_ue[ue]) - 1.0;
        assert!(
            rel(sinr_mc, sinr_formula) < 0.03,
            "ue {ue}: {sinr_mc} vs {sinr_formula}"
        );
    }
}

#[test]
fn mrc_error_variance_is_n0_over_beta() {
    let (n0, t) = (0.7, 4);
    let cs = sample_channel_set(dims(8, 2, t), 1.0, n0, 1.0, 21).unwrap();
    let sol = minimize_power(&cs, min_beta(&decompose_h0(&cs.h0).unwrap())).unwrap();
    let isi = build_isi_matrix(&cs.h0, &sol.htilde, t, sol.beta).unwrap();
    let mut rng = stream_rng(22, 0);
    let trials = 10_000;
    let streams = t * 2;
    let mut err = vec![0.0; streams];
    for trial in 0..trials {
        let s = complex_gaussian_vec(streams, 1.0, &mut rng);
        let y = simulate_uplink(&cs, &sol.theta, &s, 1000 + trial, false).unwrap();
        let est = mrc_combine(&isi, &y).unwrap();
        for (j, e) in err.iter_mut().enumerate() {
            *e += (est[j] - s[j]).norm_sqr();
        }
    }
    for e in err {
        assert!(rel(e / trials as f64, n0 / sol.beta) < 0.05);
    }
}

/// `𝓗ᴴ C 𝓗` with the retransmitted-noise covariance formed explicitly.
fn post_mrc_noise(cs: &ChannelSet, htilde: &CMat, theta: &CMat, t: usize, beta: f64) -> CMat {
    let m = cs.dims.m;
    let isi = build_isi_matrix(&cs.h0, htilde, t, beta).unwrap();
    let a = &cs.h1 * theta;
    let mut cov = CMat::identity((t + 1) * m, (t + 1) * m) * Complex::new(cs.n0, 0.0);
    for block in 1..=t {
        let mut view = cov.view_mut((block * m, block * m), (m, m));
        view += &a * a.adjoint() * Complex::new(cs.ntilde0, 0.0);
    }
    isi.matrix.adjoint() * cov * &isi.matrix
}

#[test]
fn exact_capacity_matches_explicit_covariance_and_simulation() {
    let t = 3;
    let cs = sample_channel_set(dims(8, 2, t), 1.0, 1.0, 0.8, 31).unwrap();
    let sol = minimize_power(&cs, min_beta(&decompose_h0(&cs.h0).unwrap())).unwrap();
    let noise = post_mrc_noise(&cs, &sol.htilde, &sol.theta, t, sol.beta);

    let report = capacity_exact(&cs, &sol, t).unwrap();
    for ue in 0..2 {
        let c: f64 = (0..t)
            .map(|slot| {
                let j = slot * 2 + ue;
                (1.0 + sol.beta * sol.beta / noise[(j, j)].re).log2()
            })
            .sum::<f64>()
            / t as f64;
        assert!((report.per_ue[ue] - c).abs() < 1e-12);
    }

    let isi = build_isi_matrix(&cs.h0, &sol.htilde, t, sol.beta).unwrap();
    let zeros = rrtx::CVec::zeros(2 * t);
    let trials = 20_000;
    let mut var = vec![0.0; 2 * t];
    for trial in 0..trials {
        let y = simulate_uplink(&cs, &sol.theta, &zeros, 5000 + trial, true).unwrap();
        let est = mrc_combine(&isi, &y).unwrap();
        for (j, v) in var.iter_mut().enumerate() {
            *v += est[j].norm_sqr();
        }
    }
    for (j, v) in var.iter().enumerate() {
        let analytic = noise[(j, j)].re / (sol.beta * sol.beta);
        assert!(rel(v / trials as f64, analytic) < 0.05, "stream {j}");
    }
}

#[test]
fn exact_capacity_never_exceeds_white_on_many_instances() {
    for seed in 0..1000 {
        let eta = 10f64.powf((seed % 7) as f64 / 2.0 - 1.5);
        let cs = sample_channel_set(dims(8, 2, 4), eta, 1.0, 1.0, seed).unwrap();
        let sol = minimize_power(&cs, min_beta(&decompose_h0(&cs.h0).unwrap())).unwrap();
        let white = capacity_white(sol.beta, cs.n0, 2).unwrap();
        let exact = capacity_exact(&cs, &sol, 4).unwrap();
        for c in &exact.per_ue {
            assert!(*c <= white.best + 1e-12);
        }
    }
}

#[test]
fn strong_rrtx_channels_make_the_white_model_accurate() {
    let base = sample_channel_set(dims(8, 2, 8), 1.0, 1.0, 1.0, 41).unwrap();
    let amp = Complex::new(10.0, 0.0);
    let strong = ChannelSet::from_parts(base.h0.clone(), &base.h1 * amp, &base.h2 * amp, 8, 1.0, 1.0, 1.0).unwrap();
    let svd = decompose_h0(&strong.h0).unwrap();
    let sol = minimize_power_with_svd(&strong, &svd, min_beta(&svd)).unwrap().solution;
    let white = capacity_white(sol.beta, 1.0, 2).unwrap();
    let exact = capacity_exact(&strong, &sol, 8).unwrap();
    assert!(rel(exact.worst, white.worst) < 0.05);
}

/// Noiseless runs with and without `H12`; the difference is first order in the
/// H12 amplitude, so its energy scales with the gain.
#[test]
fn h12_leakage_energy_scales_with_gain() {
    let t = 8;
    let cs = sample_channel_set(dims(8, 2, t), 1.0, 1.0, 1.0, 51)
        .unwrap()
        .with_noise(0.0, 0.0);
    let sol = minimize_power(&cs, min_beta(&decompose_h0(&cs.h0).unwrap())).unwrap();
    let s = complex_gaussian_vec(2 * t, 1.0, &mut stream_rng(52, 0));
    let clean = simulate_uplink(&cs, &sol.theta, &s, 53, false).unwrap();
    let leak = |g: f64| {
        let with = cs.with_h12(g, 54).unwrap();
        (simulate_uplink(&with, &sol.theta, &s, 53, false).unwrap() - &clean).norm_squared()
    };
    let ratio = leak(1e-2) / leak(1e-4);
    assert!(ratio > 100.0 / 3.0 && ratio < 300.0, "{ratio}");
}

/// For Haar-distributed Ũ, E tr(Ǧ1ŨǦ2Ũᴴ) = tr(Ǧ1) tr(Ǧ2) / (M − K).
#[test]
fn random_dof_power_has_the_haar_mean() {
    let cs = sample_channel_set(dims(8, 2, 1), 1.0, 1.0, 1.0, 61).unwrap();
    let svd = decompose_h0(&cs.h0).unwrap();
    let beta = min_beta(&svd) * 1.5;
    let cc = checked_channels(&cs, &svd, beta).unwrap();
    let expected = cc.gcheck1.trace().re * cc.gcheck2.trace().re / cc.free_dim() as f64;
    let mut rng = stream_rng(62, 0);
    let trials = 20_000;
    let mut total = 0.0;
    for _ in 0..trials {
        let u = random_semi_unitary(6, 2, &mut rng);
        total += orthogonalize(&cs, beta, &u).unwrap().power;
    }
    assert!(rel(total / trials as f64, expected) < 0.03);
}
