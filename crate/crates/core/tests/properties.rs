use proptest::prelude::*;
use rrtx::linalg::real_diag;
use rrtx::powmin::brute_force_pairing;
use rrtx::{
    assemble_utilde, build_isi_matrix, checked_channels, decompose_h0, min_beta, minimize_power, optimal_pairing,
    pairing_power, sample_channel_set, CheckedChannels, Complex64, Dimensions,
};

fn ascending(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..100.0, len).prop_map(|mut v| {
        v.sort_by(f64::total_cmp);
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn descending_pairing_is_the_enumerated_minimum(
        (e1, e2) in (1usize..=4).prop_flat_map(|k| (ascending(k..k + 4), ascending(k..k + 1)))
    ) {
        let plan = optimal_pairing(&e1, &e2).unwrap();
        let closed = pairing_power(&e1, &e2, &plan).unwrap();
        let oracle = brute_force_pairing(&e1, &e2).unwrap();
        prop_assert!((closed - oracle).abs() <= 1e-12 * oracle.abs());
    }

    #[test]
    fn phases_do_not_change_the_power(
        seed in any::<u64>(),
        angles in prop::collection::vec(0.0f64..std::f64::consts::TAU, 2),
    ) {
        let cs = sample_channel_set(Dimensions::new(8, 2, 1).unwrap(), 1.0, 1.0, 1.0, seed).unwrap();
        let svd = decompose_h0(&cs.h0).unwrap();
        let cc = checked_channels(&cs, &svd, min_beta(&svd)).unwrap();
        let plan = optimal_pairing(&cc.eigs1, &cc.eigs2).unwrap();
        let base = assemble_utilde(&cc, &plan).unwrap().utilde;
        let phases: Vec<Complex64> = angles.iter().map(|a| Complex64::from_polar(1.0, *a)).collect();
        let rotated = assemble_utilde(&cc, &plan.with_phases(phases)).unwrap().utilde;
        let (a, b) = (cc.objective(&base), cc.objective(&rotated));
        prop_assert!((a - b).abs() <= 1e-10 * a);
    }

    #[test]
    fn minimized_processing_orthogonalizes(seed in any::<u64>(), eta_db in -10.0f64..20.0, t in 1usize..6) {
        let cs = sample_channel_set(Dimensions::new(6, 3, t).unwrap(), 10f64.powf(eta_db / 10.0), 1.0, 1.0, seed).unwrap();
        let beta = min_beta(&decompose_h0(&cs.h0).unwrap());
        let sol = minimize_power(&cs, beta).unwrap();
        let isi = build_isi_matrix(&cs.h0, &sol.htilde, t, beta).unwrap();
        prop_assert!(isi.orthogonality_residual() < 1e-9);
    }

    #[test]
    fn diagonal_grams_attain_the_sorted_product_sum(e1 in ascending(3..6), e2 in ascending(2..3)) {
        let cc = CheckedChannels::from_grams(real_diag(&e1), real_diag(&e2)).unwrap();
        let plan = optimal_pairing(&cc.eigs1, &cc.eigs2).unwrap();
        let u = assemble_utilde(&cc, &plan).unwrap().utilde;
        let expected = e1[0] * e2[1] + e1[1] * e2[0];
        prop_assert!((cc.objective(&u) - expected).abs() <= 1e-10 * expected);
    }
}
