mod common;

use common::{lad_bruteforce, path_oracle, random_orthogonal, rel_close, study_like, study_like_n};
use mediation::distributions::{sample_std_normal, RngStream};
use mediation::estimation::{fit_lad_matrix, fit_lse_matrix, lad_fit, sobel_statistic};
use mediation::linalg::Matrix;
use mediation::{fit_lad, fit_lse, ols_fit, sobel_test, DataMatrix, Dataset, MediationError, ModelSpec};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

#[test]
fn ols_hand_example() {
    let x = [0.0, 1.0, 2.0, 3.0, 4.0];
    let y = [1.0, 3.0, 5.0, 7.0, 9.0];
    let fit = ols_fit(&y, &Matrix::from_columns(&[&[1.0; 5], &x])).unwrap();
    assert!((fit.coefficients[0] - 1.0).abs() < 1e-12);
    assert!((fit.coefficients[1] - 2.0).abs() < 1e-12);
    assert!(fit.residuals.iter().all(|r| r.abs() < 1e-12));
}

#[test]
fn lse_matches_normal_equations_oracle() {
    for stream in 0..20 {
        let dm = study_like(50, stream, 50);
        let fit = fit_lse_matrix(&dm).unwrap();
        let o = path_oracle(&dm);
        for (ours, theirs) in [(fit.a_hat, o.a), (fit.b_hat, o.b), (fit.d_hat, o.d), (fit.c_hat, o.c)] {
            assert!(rel_close(ours, theirs, 1e-10), "{ours} vs {theirs}");
        }
        for (ours, theirs) in [(fit.f_a, o.f_a), (fit.f_b, o.f_b), (fit.f_d, o.f_d), (fit.f_c, o.f_c)] {
            assert!(rel_close(ours, theirs, 1e-8));
        }
        for (ours, theirs) in [(fit.p_a, o.p_a), (fit.p_b, o.p_b), (fit.p_d, o.p_d), (fit.p_c, o.p_c)] {
            assert!((ours - theirs).abs() < 1e-9);
        }
        assert!(rel_close(fit.sobel_s.unwrap(), o.sobel, 1e-9));
        assert!((fit.p_ab.unwrap() - o.p_ab).abs() < 1e-9);
    }
}

#[test]
fn f_pvalue_equals_two_sided_t_pvalue() {
    let dm = study_like(51, 0, 40);
    let fit = fit_lse_matrix(&dm).unwrap();
    assert!(rel_close(fit.f_a, fit.t_a * fit.t_a, 1e-10));
    let t = StudentsT::new(0.0, 1.0, fit.df_mediator as f64).unwrap();
    let p_t = 2.0 * t.cdf(-fit.t_a.abs());
    assert!((fit.p_a - p_t).abs() < 1e-8);
}

#[test]
fn noiseless_outcome_recovers_paths() {
    // Y = M exactly; M carries noise so the design stays full rank
    let mut rng = RngStream::new(3, 0);
    let x: Vec<f64> = (0..30).map(|_| sample_std_normal(&mut rng)).collect();
    let m: Vec<f64> = x.iter().map(|v| 0.5 + v + 0.3 * sample_std_normal(&mut rng)).collect();
    let y = m.clone();
    let ds = Dataset::from_complete(vec![("X", x), ("M", m), ("Y", y)]).unwrap();
    let fit = fit_lse(&ds, &ModelSpec::new("Y", "M", "X")).unwrap();
    assert!((fit.b_hat - 1.0).abs() < 1e-10);
    assert!(fit.d_hat.abs() < 1e-10);
    assert!((fit.c_hat - fit.a_hat).abs() < 1e-10);
    // the mediator regression itself recovers a = 1 up to noise
    assert!((fit.a_hat - 1.0).abs() < 0.2);
}

#[test]
fn noiseless_mediator_is_collinear() {
    // M = 1 + X exactly leaves the outcome design [1, M, X] rank deficient
    let x: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin()).collect();
    let m: Vec<f64> = x.iter().map(|v| 1.0 + v).collect();
    let y: Vec<f64> = m.iter().map(|v| v + 0.1 * v.cos()).collect();
    let dm = DataMatrix::new(x, m, y).unwrap();
    assert!(matches!(fit_lse_matrix(&dm), Err(MediationError::Collinear { .. })));
}

#[test]
fn controls_keep_identity_and_reduce_df() {
    let mut rng = RngStream::new(4, 0);
    let n = 60;
    let x: Vec<f64> = (0..n).map(|_| sample_std_normal(&mut rng)).collect();
    let c1: Vec<f64> = (0..n).map(|_| sample_std_normal(&mut rng)).collect();
    let m: Vec<f64> = x.iter().zip(&c1).map(|(a, c)| 0.4 * a + 0.2 * c + sample_std_normal(&mut rng)).collect();
    let y: Vec<f64> = (0..n).map(|i| 0.3 * m[i] - 0.2 * x[i] + 0.5 * c1[i] + sample_std_normal(&mut rng)).collect();
    let ds = Dataset::from_complete(vec![("X", x), ("M", m), ("Y", y), ("C", c1)]).unwrap();
    let fit = fit_lse(&ds, &ModelSpec::new("Y", "M", "X").with_controls(["C"])).unwrap();
    assert_eq!((fit.df_mediator, fit.df_outcome), (n - 3, n - 4));
    assert!(rel_close(fit.c_hat, fit.a_hat * fit.b_hat + fit.d_hat, 1e-10));
}

#[test]
fn sobel_examples() {
    let (s, p) = sobel_statistic(0.0, 0.1, 0.5, 0.2).unwrap();
    assert_eq!((s, p), (0.0, 1.0));
    assert!(matches!(sobel_statistic(0.3, 0.0, 0.5, 0.2), Err(MediationError::Degenerate(_))));

    let dm = study_like(52, 1, 50);
    let fit = fit_lse_matrix(&dm).unwrap();
    let hand = fit.a_hat * fit.b_hat
        / (fit.a_hat.powi(2) * fit.se_b.powi(2) + fit.b_hat.powi(2) * fit.se_a.powi(2)).sqrt();
    let (s, _) = sobel_test(&fit).unwrap();
    assert!(rel_close(s, hand, 1e-12));
}

#[test]
fn lad_noiseless_is_exact() {
    let x: Vec<f64> = (0..12).map(|i| i as f64 * 0.7 - 3.0).collect();
    let y: Vec<f64> = x.iter().map(|v| 2.0 - 1.5 * v).collect();
    let fit = lad_fit(&y, &Matrix::from_columns(&[&[1.0; 12], &x])).unwrap();
    assert!((fit.coefficients[0] - 2.0).abs() < 1e-9);
    assert!((fit.coefficients[1] + 1.5).abs() < 1e-9);
    assert!(fit.residuals.iter().all(|r| r.abs() < 1e-9));
}

#[test]
fn lad_ignores_outlier_magnitude() {
    let x: Vec<f64> = (0..9).map(|i| i as f64).collect();
    let mut y: Vec<f64> = x.iter().map(|v| 1.0 + 0.5 * v + 0.1 * (v * 1.3).sin()).collect();
    y[4] += 50.0;
    let design = Matrix::from_columns(&[&[1.0; 9], &x]);
    let first = lad_fit(&y, &design).unwrap();
    y[4] += 50.0;
    let second = lad_fit(&y, &design).unwrap();
    for (a, b) in first.coefficients.iter().zip(&second.coefficients) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
    assert!((first.coefficients[1] - 0.5).abs() < 0.1);
}

#[test]
fn lad_objective_matches_basis_enumeration() {
    for stream in 0..6 {
        let dm = study_like(53, stream, 50);
        let one = dm.intercept.clone();
        for cols in [vec![&one[..], &dm.x[..]], vec![&one[..], &dm.m[..], &dm.x[..]]] {
            let (_, best) = lad_bruteforce(&dm.y, &cols);
            let fit = lad_fit(&dm.y, &Matrix::from_columns(&cols)).unwrap();
            assert!(fit.objective <= best + 1e-8, "{} vs oracle {}", fit.objective, best);
            assert!(fit.objective >= best - 1e-8);
        }
    }
}

#[test]
fn lad_fit_reports_z_tests() {
    let dm = study_like(54, 0, 60);
    let fit = fit_lad_matrix(&dm).unwrap();
    assert!(fit.sobel_s.is_none() && fit.p_ab.is_none());
    for p in [fit.p_a, fit.p_b, fit.p_c, fit.p_d] {
        assert!((0.0..=1.0).contains(&p));
    }
    assert!(rel_close(fit.f_a, fit.t_a * fit.t_a, 1e-12));
}

#[test]
fn lad_through_dataset_api() {
    let dm = study_like(55, 0, 30);
    let ds = Dataset::from_complete(vec![("X", dm.x.clone()), ("M", dm.m.clone()), ("Y", dm.y.clone())]).unwrap();
    let a = fit_lad(&ds, &ModelSpec::new("Y", "M", "X")).unwrap();
    let b = fit_lad_matrix(&dm).unwrap();
    assert_eq!(a, b);
}

#[test]
fn lse_json_field_names_are_stable() {
    let fit = fit_lse_matrix(&study_like(56, 0, 20)).unwrap();
    let v: serde_json::Value = serde_json::from_str(&fit.to_json().unwrap()).unwrap();
    for key in ["a_hat", "b_hat", "d_hat", "c_hat", "i_m_hat", "se_a", "t_a", "f_a", "p_a", "p_ab", "sobel_s", "n_used", "framework"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["framework"], "LSE-F");
}

/// Applies `γΓ` to every column, including the intercept.
fn transform(dm: &DataMatrix, seed: u64, gamma: f64) -> DataMatrix {
    let g = random_orthogonal(seed, dm.n());
    let t = |v: &[f64]| g(v).into_iter().map(|a| gamma * a).collect::<Vec<_>>();
    DataMatrix {
        intercept: t(&dm.intercept),
        x: t(&dm.x),
        m: t(&dm.m),
        y: t(&dm.y),
        controls: Vec::new(),
    }
}

#[test]
fn orthogonal_and_scale_invariance() {
    for stream in 0..20 {
        let dm = study_like_n(57, stream, 5, 100);
        let tdm = transform(&dm, stream, 0.1 + stream as f64);
        let a = fit_lse_matrix(&dm).unwrap();
        let b = fit_lse_matrix(&tdm).unwrap();
        for (x, y) in [
            (a.a_hat, b.a_hat),
            (a.b_hat, b.b_hat),
            (a.d_hat, b.d_hat),
            (a.c_hat, b.c_hat),
            (a.f_a, b.f_a),
            (a.f_b, b.f_b),
            (a.sobel_s.unwrap(), b.sobel_s.unwrap()),
        ] {
            assert!(rel_close(x, y, 1e-8), "{x} vs {y}");
        }
        assert!((a.p_c - b.p_c).abs() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn total_effect_identity(seed in any::<u64>(), n in 5usize..120) {
        let fit = fit_lse_matrix(&study_like(seed, 0, n)).unwrap();
        prop_assert!(rel_close(fit.c_hat, fit.a_hat * fit.b_hat + fit.d_hat, 1e-10));
        prop_assert!(rel_close(fit.f_a, fit.t_a * fit.t_a, 1e-10));
        for p in [fit.p_a, fit.p_b, fit.p_c, fit.p_d, fit.p_ab.unwrap()] {
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn rejection_is_monotone_in_alpha(seed in any::<u64>(), a1 in 0.001f64..0.999, a2 in 0.001f64..0.999) {
        let fit = fit_lse_matrix(&study_like(seed, 1, 25)).unwrap();
        let (lo, hi) = if a1 < a2 { (a1, a2) } else { (a2, a1) };
        for p in [fit.p_a, fit.p_b, fit.p_c, fit.p_d] {
            prop_assert!(!(p < lo) || p < hi);
        }
    }

    #[test]
    fn lad_never_beats_oracle_on_small_instances(seed in any::<u64>(), n in 6usize..14) {
        let dm = study_like(seed, 2, n);
        let cols = [&dm.intercept[..], &dm.m[..], &dm.x[..]];
        let (_, best) = lad_bruteforce(&dm.y, &cols);
        let fit = lad_fit(&dm.y, &Matrix::from_columns(&cols)).unwrap();
        prop_assert!((fit.objective - best).abs() <= 1e-8 * best.max(1.0));
    }
}
