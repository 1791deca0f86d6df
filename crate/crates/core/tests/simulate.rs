use wetspell::distributions::TemperedSFParams;
use wetspell::fitting::fit_tempered_sf_ls;
use wetspell::hypothesis::StatisticName;
use wetspell::simulate::{
    binomial_band, calibrate_test, ks_cdf_exact, ks_critical_99, ks_critical_99_asymptotic, sample_scaled_negbin_sums,
    sample_tempered_sf_par, verify_lln_negbin_sums, verify_max_daily_law, DailyLaw, LlnConfig,
};

fn in_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let cfg = LlnConfig {
        r: 0.85,
        mu: 1.0,
        q: 0.5,
        daily: DailyLaw::Pareto { alpha: 2.5, scale: 1.0 },
    };
    let one = in_pool(1, || sample_scaled_negbin_sums(&cfg, 100, 5_000, 9).unwrap());
    let many = in_pool(6, || sample_scaled_negbin_sums(&cfg, 100, 5_000, 9).unwrap());
    assert_eq!(one, many);
    let p = TemperedSFParams::new(0.85, 0.01, 2.2).unwrap();
    assert_eq!(
        in_pool(1, || sample_tempered_sf_par(&p, 10_000, 4)),
        in_pool(5, || sample_tempered_sf_par(&p, 10_000, 4))
    );
    let a = in_pool(1, || {
        calibrate_test(StatisticName::Sr0, 15, 1, 0.85, 0.05, 20_000, 2).unwrap()
    });
    let b = in_pool(7, || {
        calibrate_test(StatisticName::Sr0, 15, 1, 0.85, 0.05, 20_000, 2).unwrap()
    });
    assert_eq!(a.to_bits(), b.to_bits());
}

#[test]
fn degenerate_dailies_converge() {
    let cfg = LlnConfig {
        r: 0.85,
        mu: 1.0,
        q: 0.5,
        daily: DailyLaw::Degenerate { value: 3.0 },
    };
    let pts = verify_lln_negbin_sums(&cfg, &[10, 100, 10_000], 50_000, 1).unwrap();
    assert!(pts[0].ks > pts[1].ks && pts[1].ks > pts[2].ks, "{pts:?}");
    assert!(pts[2].ks < 0.01);
}

#[test]
fn small_n_is_further_from_the_limit() {
    let cfg = LlnConfig {
        r: 0.85,
        mu: 1.0,
        q: 0.5,
        daily: DailyLaw::Exponential { mean: 2.0 },
    };
    let (mut at_10, mut at_10k) = (0.0, 0.0);
    for seed in 0..5 {
        let pts = verify_lln_negbin_sums(&cfg, &[10, 10_000], 20_000, 40 + seed).unwrap();
        at_10 += pts[0].ks;
        at_10k += pts[1].ks;
    }
    assert!(at_10 > at_10k, "{at_10} vs {at_10k}");
}

#[test]
fn autocorrelated_and_heavy_tailed_dailies_converge() {
    for daily in [
        DailyLaw::LognormalAr1 {
            mean: 2.0,
            sigma: 0.8,
            rho: 0.5,
        },
        DailyLaw::Pareto { alpha: 3.0, scale: 1.0 },
    ] {
        let cfg = LlnConfig {
            r: 0.85,
            mu: 1.0,
            q: 0.5,
            daily,
        };
        let pts = verify_lln_negbin_sums(&cfg, &[10, 1_000], 20_000, 6).unwrap();
        assert!(pts[1].ks < pts[0].ks, "{daily:?}: {pts:?}");
        assert!(pts[1].ks < 0.03, "{daily:?}: {pts:?}");
    }
}

#[test]
fn maxima_sampler_matches_its_cdf() {
    for p in [
        TemperedSFParams::new(0.85, 0.01, 2.261).unwrap(),
        TemperedSFParams::new(1.0, 1.0, 1.0).unwrap(),
    ] {
        let d = verify_max_daily_law(&p, 1_000_000, 12).unwrap();
        assert!(d < 1.63 / 1000.0, "{d}");
    }
}

#[test]
fn sampled_maxima_refit_within_five_percent() {
    let truth = TemperedSFParams::new(0.85, 0.02, 1.9).unwrap();
    let xs = sample_tempered_sf_par(&truth, 100_000, 77);
    let fit = fit_tempered_sf_ls(&xs, 0.85).unwrap();
    assert!((fit.gamma() / 1.9 - 1.0).abs() < 0.05);
    assert!((fit.lambda() / 0.02 - 1.0).abs() < 0.05);
}

#[test]
fn calibration_examples() {
    let rate = calibrate_test(StatisticName::Sr, 2, 1, 1.0, 0.5, 100_000, 3).unwrap();
    let (lo, hi) = binomial_band(0.5, 100_000);
    assert!(rate > lo && rate < hi, "{rate}");
    let rate = calibrate_test(StatisticName::Sr0Group, 15, 3, 0.85, 0.05, 100_000, 4).unwrap();
    let (lo, hi) = binomial_band(0.05, 100_000);
    assert!(rate > lo && rate < hi, "{rate}");
    assert!((hi - 0.05 - 0.0021).abs() < 1e-4);
}

#[test]
fn ks_exact_distribution() {
    // tabulated 1% critical values of the one-sample statistic
    for (n, crit) in [(5, 0.66853), (10, 0.48893), (20, 0.35241), (40, 0.25205)] {
        assert!((ks_critical_99(n) - crit).abs() < 2e-3, "n={n}: {}", ks_critical_99(n));
    }
    assert!((ks_cdf_exact(3, 0.9) - (1.0 - 2.0 * 0.1_f64.powi(3))).abs() < 1e-12);
    assert!((ks_critical_99(100) - ks_critical_99_asymptotic(100)).abs() < 5e-3);
}
