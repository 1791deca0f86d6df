use chrono::NaiveDate;
use proptest::prelude::*;
use wetspell::distributions::{sample_negbin, sample_tempered_sf, NegBinParams, TemperedSFParams};
use wetspell::fitting::{
    censor_and_collect_maxima, fit_negbin, fit_report, fit_table, fit_tempered_sf_ls, fit_tempered_sf_quantile,
    sup_discrepancy, FittedParams, MleOptions, ModelKind, DEFAULT_QUANTILE_ORDERS, TABLE_MIN_DURATIONS,
};
use wetspell::segmentation::{extract_wet_periods, MissingPolicy};
use wetspell::simulate::{synthetic_series, DailyLaw, SeriesConfig};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tempered_estimators_scale_equivariant(seed in 0u64..1_000, c in 0.01..100.0_f64,
                                             r in 0.3..3.0_f64, gamma in 0.5..4.0_f64) {
        let truth = TemperedSFParams::new(r, 0.05, gamma).unwrap();
        let xs = sample_tempered_sf(&truth, 500, seed);
        let ys: Vec<f64> = xs.iter().map(|x| c * x).collect();
        let pairs = [
            (fit_tempered_sf_quantile(&xs, r, [0.25, 0.5, 0.75]), fit_tempered_sf_quantile(&ys, r, [0.25, 0.5, 0.75])),
            (fit_tempered_sf_ls(&xs, r), fit_tempered_sf_ls(&ys, r)),
        ];
        for (a, b) in pairs {
            let (a, b) = (a.unwrap(), b.unwrap());
            prop_assert!((b.gamma() / a.gamma() - 1.0).abs() <= 1e-9);
            prop_assert!((b.lambda() / (a.lambda() * c.powf(-a.gamma())) - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn discrepancy_is_a_probability(xs in prop::collection::vec(0.01..100.0_f64, 1..200)) {
        let p = TemperedSFParams::new(0.85, 0.01, 2.2).unwrap();
        let d = sup_discrepancy(&xs, |x| p.cdf(x));
        prop_assert!((0.0..=1.0).contains(&d));
        // at least the largest one-sided step at the smallest point
        prop_assert!(d >= 0.5 / xs.len() as f64 - 1e-15);
    }

    #[test]
    fn censoring_counts(durations in prop::collection::vec(1u32..30, 0..100), min in 1u32..20) {
        let periods: Vec<_> = durations.iter().enumerate().map(|(i, &d)| wetspell::segmentation::WetPeriod {
            station: None,
            start_date: NaiveDate::from_ymd_opt(2000, 1, 1).unwrap() + chrono::Duration::days(40 * i as i64),
            duration: d,
            dailies: vec![1.0 + i as f64; d as usize],
            total: d as f64 * (1.0 + i as f64),
            max_daily: 1.0 + i as f64,
            flagged: false,
        }).collect();
        let maxima = censor_and_collect_maxima(&periods, min).unwrap();
        prop_assert_eq!(maxima.len(), durations.iter().filter(|&&d| d >= min).count());
        prop_assert!(maxima.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn negbin_round_trips_through_the_sampler() {
    // sampler counts n ≥ 0 become durations n + 1; the fit undoes the shift
    let truth = NegBinParams::new(0.6, 0.2).unwrap();
    let counts = sample_negbin(&truth, 60_000, 17);
    let durations: Vec<u32> = counts.iter().map(|&n| n as u32 + 1).collect();
    let fit = fit_negbin::<f64>(&durations, &MleOptions::default()).unwrap();
    assert!((fit.params.r() - 0.6).abs() < 0.02, "{}", fit.params.r());
    assert!((fit.params.p() - 0.2).abs() < 0.01, "{}", fit.params.p());
    assert!(!fit.fallback);
}

#[test]
fn discrepancy_shrinks_with_sample_size() {
    let truth = TemperedSFParams::new(0.85, 0.01, 2.26).unwrap();
    let mean_disc = |m: usize| {
        (0..8)
            .map(|seed| {
                let xs = sample_tempered_sf(&truth, m, 1_000 + seed);
                let fit = fit_tempered_sf_quantile(&xs, 0.85, [0.25, 0.5, 0.75]).unwrap();
                sup_discrepancy(&xs, |x| fit.cdf(x))
            })
            .sum::<f64>()
            / 8.0
    };
    let d = [mean_disc(1_000), mean_disc(10_000), mean_disc(100_000)];
    assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
}

fn synthetic_periods() -> Vec<wetspell::segmentation::WetPeriod> {
    let cfg = SeriesConfig {
        durations: NegBinParams::new(0.85, 0.3).unwrap(),
        daily: DailyLaw::Gamma { shape: 0.8, rate: 0.2 },
        dry_p: 0.25,
        periods: 4_000,
        start: NaiveDate::from_ymd_opt(1950, 1, 1).unwrap(),
    };
    let series = synthetic_series(&cfg, 5).unwrap();
    extract_wet_periods(&series, 0.0, MissingPolicy::Break).unwrap()
}

#[test]
fn reports_follow_the_censoring() {
    let periods = synthetic_periods();
    let nb = fit_report(
        ModelKind::Negbin,
        &periods,
        1,
        None,
        DEFAULT_QUANTILE_ORDERS,
        &MleOptions::default(),
    )
    .unwrap();
    let r = match nb.params {
        FittedParams::NegBin(p) => p.r(),
        _ => panic!("negative binomial report expected"),
    };
    assert!((r - 0.85).abs() < 0.08, "{r}");
    assert_eq!(nb.duration_shift, 1);
    assert_eq!(nb.sample_size, periods.len());

    for model in [ModelKind::TemperedSfQuantile, ModelKind::TemperedSfLs] {
        let rep = fit_report(
            model,
            &periods,
            3,
            Some(r),
            DEFAULT_QUANTILE_ORDERS,
            &MleOptions::default(),
        )
        .unwrap();
        assert_eq!(rep.sample_size, periods.iter().filter(|p| p.duration >= 3).count());
        assert!((0.0..=1.0).contains(&rep.discrepancy));
        assert_eq!(rep.quantile_orders.is_some(), model == ModelKind::TemperedSfQuantile);
    }
    let g = fit_report(
        ModelKind::GammaTotals,
        &periods,
        1,
        None,
        DEFAULT_QUANTILE_ORDERS,
        &MleOptions::default(),
    )
    .unwrap();
    assert!(g.discrepancy < 0.2);
    let json = serde_json::to_string(&g).unwrap();
    assert!(json.contains("\"model\":\"gamma_totals\""));
    let back: wetspell::FitReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, g);
}

#[test]
fn table_sweeps_every_threshold() {
    let periods = synthetic_periods();
    let rows = fit_table(&periods, 0.85, DEFAULT_QUANTILE_ORDERS, &TABLE_MIN_DURATIONS).unwrap();
    let mins: Vec<u32> = rows.iter().map(|r| r.min_duration).collect();
    assert_eq!(mins, [1, 2, 3, 4, 6, 8, 10, 15]);
    assert!(rows.windows(2).all(|w| w[1].sample_size <= w[0].sample_size));
    assert!(rows[0].gamma_ls.is_some() && rows[0].gamma_quantile.is_some());
}
