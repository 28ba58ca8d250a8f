use bsmix::bs::{
    alpha_from_mode, bs_cdf, bs_mode, bs_moment, bs_pdf, bs_pdf_mode_param, bs_quantile, bs_sample,
    bs_sf, log_bs_pdf,
};
use bsmix::mixture::{mix_antimodes, mix_cdf, mix_median, mix_modes, mix_pdf, mix_sample_labeled};
use bsmix::quad::{integrate, QuadOptions};
use bsmix::rng::stream;
use bsmix::{BsParams, MixtureParams};
use proptest::prelude::*;
use rand::Rng;

fn bs(a: f64, b: f64) -> BsParams {
    BsParams::new(a, b).unwrap()
}

/// Composite Simpson on `t = e^u`, independent of the library quadrature.
fn simpson_log(f: impl Fn(f64) -> f64, t_lo: f64, t_hi: f64, panels: usize) -> f64 {
    let (u0, u1) = (t_lo.ln(), t_hi.ln());
    let h = (u1 - u0) / panels as f64;
    let g = |u: f64| {
        let t = u.exp();
        f(t) * t
    };
    let mut s = g(u0) + g(u1);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * g(u0 + i as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn bs_pdf_integrates_to_one() {
    let p = bs(0.25, 1.0);
    let simpson = simpson_log(|t| bs_pdf(t, &p).unwrap(), 1e-6, 1e4, 200_000);
    assert!((simpson - 1.0).abs() < 1e-8, "simpson {simpson}");
    let cuts = [1e-12, 1.0, 10.0, 1e4];
    let gk: f64 = cuts
        .windows(2)
        .map(|w| {
            integrate(
                |t| bs_pdf(t, &p).unwrap(),
                w[0],
                w[1],
                QuadOptions::default(),
            )
            .unwrap()
            .value
        })
        .sum();
    assert!((gk - 1.0).abs() < 1e-8, "adaptive {gk}");
}

#[test]
fn mixture_pdf_integrates_to_one() {
    let m = MixtureParams::two_component(0.6, 0.25, 0.5, 0.5, 1.5).unwrap();
    let simpson = simpson_log(|t| mix_pdf(t, &m).unwrap(), 1e-6, 1.5e3, 200_000);
    assert!((simpson - 1.0).abs() < 1e-8, "simpson {simpson}");
}

#[test]
fn quantile_round_trip_grid() {
    let p = bs(0.7, 3.0);
    let probs = [
        0.001, 0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99, 0.999,
    ];
    for &q in &probs {
        let t = bs_quantile(q, &p).unwrap();
        assert!((bs_cdf(t, &p).unwrap() - q).abs() < 1e-10, "p = {q}");
    }
    let t = bs_quantile(0.921_350, &bs(0.5, 1.0)).unwrap();
    assert!((t - 2.0).abs() < 1e-4);
}

#[test]
fn sample_mean_and_median() {
    let mut x = bs_sample(1_000_000, &bs(0.25, 1.0), &mut stream(2024));
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    assert!((mean / 1.03125 - 1.0).abs() < 0.005);
    x.sort_by(f64::total_cmp);
    let median = 0.5 * (x[499_999] + x[500_000]);
    assert!((median - 1.0).abs() < 0.005);
}

#[test]
fn variance_formula_cross_check() {
    for &(a, b) in &[(0.25, 1.0), (0.8, 2.0), (1.7, 0.3)] {
        let p = bs(a, b);
        let var = bs_moment(2.0, &p).unwrap() - bs_moment(1.0, &p).unwrap().powi(2);
        let closed = (a * b) * (a * b) * (1.0 + 1.25 * a * a);
        assert!((var / closed - 1.0).abs() < 1e-12);
    }
}

#[test]
fn mode_parameterization_matches_alpha_inversion() {
    let mut rng = stream(77);
    for _ in 0..20 {
        let beta = rng.random_range(0.2..20.0);
        let m = beta * rng.random_range(0.05..0.99);
        let t = beta * rng.random_range(0.1..3.0);
        let a2 = (beta - m) * (m + beta) * (m + beta) / (beta * m * (m + 3.0 * beta));
        let direct = bs_pdf(t, &bs(a2.sqrt(), beta)).unwrap();
        let via_mode = bs_pdf_mode_param(t, m, beta).unwrap();
        assert!(((via_mode - direct) / direct).abs() <= 1e-10);
        assert!((alpha_from_mode(m, beta).unwrap() - a2.sqrt()).abs() < 1e-14 * a2.sqrt().max(1.0));
    }
}

#[test]
fn log_bs_change_of_variables() {
    let mut rng = stream(5);
    for _ in 0..50 {
        let alpha = rng.random_range(0.1..3.0);
        let gamma = rng.random_range(-3.0..3.0);
        let w = gamma + rng.random_range(-2.0..2.0);
        let lhs = log_bs_pdf(w, alpha, gamma).unwrap();
        let rhs = bs_pdf(w.exp(), &bs(alpha, gamma.exp())).unwrap() * w.exp();
        assert!(
            ((lhs - rhs) / rhs).abs() <= 1e-12,
            "w={w} alpha={alpha} gamma={gamma}"
        );
        let d = rng.random_range(0.0..2.0);
        let up = log_bs_pdf(gamma + d, alpha, gamma).unwrap();
        let dn = log_bs_pdf(gamma - d, alpha, gamma).unwrap();
        assert!((up - dn).abs() <= 1e-12 * up.max(1e-300));
    }
}

#[test]
fn table1_medians_and_unimodal_modes() {
    let rows = [
        ((0.2, 0.5, 0.75, 3.0, 7.0), 2.8649, 5.7670),
        ((0.3, 0.5, 0.75, 3.0, 7.0), 2.6698, 5.1786),
        ((0.4, 0.5, 0.75, 3.0, 7.0), 2.5521, 4.6549),
    ];
    for ((p, a1, a2, b1, b2), mode, median) in rows {
        let m = MixtureParams::two_component(p, a1, a2, b1, b2).unwrap();
        let modes = mix_modes(&m);
        assert_eq!(modes.len(), 1);
        assert!((modes[0] - mode).abs() < 1e-3);
        assert!((mix_median(&m) - median).abs() < 1e-3);
    }
    let m = MixtureParams::two_component(0.2, 0.5, 0.75, 3.0, 7.0).unwrap();
    assert!((mix_cdf(5.7670, &m).unwrap() - 0.5).abs() < 5e-4);
}

#[test]
fn table1_bimodal_rows_second_values_are_antimodes() {
    // independent grid search: (first mode, density minimum, second mode)
    let rows = [
        (0.2, 2.975611, 3.9871105, 6.111678, 6.2635),
        (0.3, 2.893782, 4.5233495, 6.0588175, 5.7541),
        (0.4, 2.8625255, 4.9818955, 5.9629965, 5.0735),
    ];
    for (p, first, dip, second, median) in rows {
        let m = MixtureParams::two_component(p, 0.25, 0.35, 3.0, 7.0).unwrap();
        let modes = mix_modes(&m);
        let anti = mix_antimodes(&m);
        assert_eq!((modes.len(), anti.len()), (2, 1));
        assert!(
            (modes[0] - first).abs() < 1e-5 && (modes[1] - second).abs() < 1e-5,
            "{modes:?}"
        );
        assert!((anti[0] - dip).abs() < 1e-5, "{anti:?}");
        assert!((mix_median(&m) - median).abs() < 1e-3);
    }
}

#[test]
fn label_frequencies_and_ecdf() {
    let m = MixtureParams::two_component(0.6, 0.25, 0.5, 0.5, 1.5).unwrap();
    let n = 1_000_000;
    let (mut y, labels) = mix_sample_labeled(n, &m, &mut stream(31));
    let share = labels.iter().filter(|&&l| l == 0).count() as f64 / n as f64;
    assert!((share - 0.6).abs() < 0.003);
    y.sort_by(f64::total_cmp);
    let mut sup: f64 = 0.0;
    for i in 1..=20 {
        let t = 0.1 * i as f64;
        let ecdf = y.partition_point(|&v| v <= t) as f64 / n as f64;
        sup = sup.max((ecdf - mix_cdf(t, &m).unwrap()).abs());
    }
    assert!(sup <= 0.005, "sup {sup}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cdf_derivative_is_pdf(alpha in 0.1f64..3.0, beta in 0.1f64..10.0, r in 0.05f64..20.0) {
        let p = bs(alpha, beta);
        let t = beta * r;
        let h = 1e-5 * t;
        let fd = if t <= beta {
            (bs_cdf(t + h, &p).unwrap() - bs_cdf(t - h, &p).unwrap()) / (2.0 * h)
        } else {
            (bs_sf(t - h, &p).unwrap() - bs_sf(t + h, &p).unwrap()) / (2.0 * h)
        };
        let pdf = bs_pdf(t, &p).unwrap();
        prop_assume!(pdf > 1e-8);
        prop_assert!((fd - pdf).abs() <= 1e-6 * pdf);
    }

    #[test]
    fn mode_below_median(alpha in 0.01f64..5.0, beta in 0.01f64..100.0) {
        prop_assert!(bs_mode(&bs(alpha, beta)) < beta);
    }

    #[test]
    fn sampling_scales_linearly(alpha in 0.05f64..3.0, c in 0.01f64..100.0, seed in 0u64..1000) {
        let x = bs_sample(20, &bs(alpha, 1.0), &mut stream(seed));
        let y = bs_sample(20, &bs(alpha, c), &mut stream(seed));
        for (a, b) in x.iter().zip(&y) {
            prop_assert!((c * a - b).abs() <= 1e-13 * b);
        }
    }
}
