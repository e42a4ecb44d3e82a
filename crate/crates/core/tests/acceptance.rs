//! End-to-end acceptance checks. Each test writes one `PASS`/`FAIL` line
//! straight to stdout so the verdicts show up even when output is captured.

mod common;

use std::io::Write;
use std::sync::OnceLock;

use common::{f_critical_oracle, random_orthogonal, study_like_n};
use mediation::distributions::f_upper_critical;
use mediation::estimation::fit_lse_matrix;
use mediation::geometry::*;
use mediation::reduction::canonical_reduce_matrix;
use mediation::simulation::Condition;
use mediation::{
    classify, coords_to_estimates, geometry_point, percent_contributions, run_study, DataMatrix, EffectTests,
    Framework, SimulationConfig, SimulationReport,
};

const ALPHAS: [f64; 5] = [0.01, 0.05, 0.1, 0.5, 0.9];

fn report(k: u32, ok: bool, detail: String) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(out, "{verdict} criterion {k}: {detail}").unwrap();
    out.flush().unwrap();
    assert!(ok, "criterion {k}: {detail}");
}

fn default_study() -> &'static SimulationReport {
    static STUDY: OnceLock<SimulationReport> = OnceLock::new();
    STUDY.get_or_init(|| run_study(&SimulationConfig::default()).unwrap())
}

#[test]
fn criterion_01_headline_proportion() {
    let rep = default_study();
    let (hits, count) = rep.tally(Framework::LseF, Condition::IndirectOnly, 0.1);
    let prop = hits as f64 / count as f64;
    report(
        1,
        rep.records.len() == 10_000 && prop >= 0.35,
        format!("LSE-F P(p_c >= .1 | indirect-only) = {hits}/{count} = {prop:.4} (need >= 0.35)"),
    );
}

#[test]
fn criterion_02_non_empty_erroneous_rejections() {
    let rep = default_study();
    let hits: Vec<(Framework, u64)> = Framework::ALL
        .iter()
        .map(|&fw| (fw, rep.tally(fw, Condition::IndirectOnly, 0.1).0))
        .collect();
    report(
        2,
        hits.iter().all(|&(_, h)| h > 0),
        format!("erroneous rejections at alpha = .1: {hits:?}"),
    );
}

#[test]
fn criterion_03_indirect_only_witnesses() {
    let mut checked = 0;
    let mut failures = Vec::new();
    for n in 5..=200 {
        for alpha in ALPHAS {
            let cv = critical_values(n, alpha).unwrap();
            for subtype in [Subtype::DPlementary, Subtype::DPetitive] {
                checked += 1;
                let ok = witness_indirect_only(n, alpha, subtype).is_ok_and(|w| {
                    [RegionId::of(Region::Ra), RegionId::of(Region::Rb), RegionId::not(Region::Rd), RegionId::not(Region::Rc)]
                        .into_iter()
                        .all(|id| in_region(&w, id, &cv).unwrap())
                        && match subtype {
                            Subtype::DPlementary => w.sign_abd > 0,
                            Subtype::DPetitive => w.sign_abd < 0,
                        }
                });
                if !ok {
                    failures.push((n, alpha, subtype));
                }
            }
        }
    }
    report(
        3,
        failures.is_empty(),
        format!("{} of {checked} indirect-only witnesses verified; failures {failures:?}", checked - failures.len()),
    );
}

#[test]
fn criterion_04_competitive_witnesses() {
    let (mut checked, mut sobel_checked) = (0, 0);
    let mut failures = Vec::new();
    for n in 5..=200 {
        for alpha in ALPHAS {
            let cv = critical_values(n, alpha).unwrap();
            for ctx in [1i8, -1] {
                checked += 1;
                let ok = witness_competitive(n, alpha, ctx).is_ok_and(|w| {
                    let regions = [RegionId::of(Region::Ra), RegionId::of(Region::Rb), RegionId::of(Region::Rd), RegionId::not(Region::Rc)]
                        .into_iter()
                        .all(|id| in_region(&w, id, &cv).unwrap());
                    let signs = w.sign_abd < 0 && w.sign_abc == ctx;
                    let sobel = if (n as f64 - 2.0) * w.r * w.r > cv.z_half * cv.z_half {
                        sobel_checked += 1;
                        in_region(&w, Region::RabSobel, &cv).unwrap() && w.p > p0_boundary(w.r, n, alpha).unwrap()
                    } else {
                        true
                    };
                    regions && signs && sobel
                });
                if !ok {
                    failures.push((n, alpha, ctx));
                }
            }
        }
    }
    report(
        4,
        failures.is_empty() && sobel_checked > 0,
        format!(
            "{} of {checked} competitive witnesses verified ({sobel_checked} also in the Sobel region with p > p0); failures {failures:?}",
            checked - failures.len()
        ),
    );
}

#[test]
fn criterion_05_superfluity_scan() {
    let mut lines = Vec::new();
    let mut total = 0;
    for n in [10, 50, 100] {
        for alpha in [0.05, 0.1] {
            let rep = verify_complementary_superfluous(n, alpha, 500).unwrap();
            total += rep.violations();
            lines.push(format!("n={n} a={alpha}: {} pts, {} violations", rep.points_checked, rep.violations()));
        }
    }
    report(5, total == 0, lines.join("; "));
}

#[test]
fn criterion_06_sobel_complementary_trend() {
    let rep = default_study();
    let buckets = [(10, 30), (40, 70), (80, 100)];
    let alpha = 0.05;
    let props: Vec<f64> = buckets
        .iter()
        .map(|&(lo, hi)| {
            let (mut hit, mut total) = (0usize, 0usize);
            for r in rep.records.iter().filter(|r| (lo..=hi).contains(&r.n)) {
                let o = r.outcome(Framework::LseSobel).unwrap();
                if o.sign_abd > 0 {
                    total += 1;
                    if o.p_ab.unwrap() < alpha && o.p_d < alpha && o.p_c >= alpha {
                        hit += 1;
                    }
                }
            }
            hit as f64 / total as f64
        })
        .collect();
    let ok = props.windows(2).all(|w| w[1] <= w[0] + 0.02);
    report(6, ok, format!("P(Rab & Rd & !Rc | abd > 0) by n bucket {buckets:?} at alpha = .05: {props:?}"));
}

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
fn criterion_07_orthogonal_scale_invariance() {
    let mut worst = 0.0f64;
    for stream in 0..100 {
        let dm = study_like_n(700, stream, 5, 100);
        let gamma = 0.05 * (1 + stream) as f64;
        let (a, b) = (fit_lse_matrix(&dm).unwrap(), fit_lse_matrix(&transform(&dm, 7000 + stream, gamma)).unwrap());
        let pairs = [
            (a.a_hat, b.a_hat),
            (a.b_hat, b.b_hat),
            (a.c_hat, b.c_hat),
            (a.d_hat, b.d_hat),
            (a.f_a, b.f_a),
            (a.f_b, b.f_b),
            (a.f_c, b.f_c),
            (a.f_d, b.f_d),
            (a.sobel_s.unwrap(), b.sobel_s.unwrap()),
        ];
        for (x, y) in pairs {
            worst = worst.max((x - y).abs() / x.abs().max(1.0));
        }
        for (x, y) in [(a.p_a, b.p_a), (a.p_b, b.p_b), (a.p_c, b.p_c), (a.p_d, b.p_d), (a.p_ab.unwrap(), b.p_ab.unwrap())] {
            worst = worst.max((x - y).abs());
        }
    }
    report(7, worst < 1e-8, format!("max discrepancy over 100 transformed datasets: {worst:.2e}"));
}

#[test]
fn criterion_08_reduction_matches_regression() {
    let mut worst = 0.0f64;
    for stream in 0..1000 {
        let dm = study_like_n(800, stream, 5, 100);
        let n = dm.n() as f64;
        let cc = canonical_reduce_matrix(&dm).unwrap();
        let est = coords_to_estimates(&cc);
        let pt = geometry_point(&cc);
        let fit = fit_lse_matrix(&dm).unwrap();
        for (x, y) in [
            (est.a_hat, fit.a_hat),
            (est.b_hat, fit.b_hat),
            (est.c_hat, fit.c_hat),
            (est.d_hat, fit.d_hat),
            ((n - 2.0) * pt.r * pt.r, fit.f_a),
            ((n - 3.0) * pt.p * pt.p, fit.f_b),
        ] {
            worst = worst.max((x - y).abs() / y.abs().max(1.0));
        }
    }
    report(8, worst < 1e-10, format!("max relative discrepancy over 1000 datasets: {worst:.2e}"));
}

#[test]
fn criterion_09_opposed_direct_sign_lies_below_diagonal() {
    let (mut cases, mut violations) = (0, 0);
    for stream in 0..10_000 {
        let pt = geometry_point(&canonical_reduce_matrix(&study_like_n(900, stream, 5, 100)).unwrap());
        if pt.sign_abd < 0 && pt.sign_abc >= 0 {
            cases += 1;
            if !(pt.q < pt.r * pt.p) {
                violations += 1;
            }
        }
    }
    report(
        9,
        violations == 0 && cases > 0,
        format!("{cases} of 10000 datasets with abd < 0, abc >= 0; {violations} with q >= rp"),
    );
}

#[test]
fn criterion_10_reference_fixtures() {
    let m1 = EffectTests {
        framework: Framework::LseF,
        a_hat: 0.1631,
        b_hat: 0.1012,
        d_hat: -0.0167,
        c_hat: 0.000014,
        p_a: 0.0005,
        p_b: 0.0005,
        p_d: 0.6411,
        p_c: 0.9997,
        p_ab: None,
    };
    let m2 = EffectTests {
        framework: Framework::LseF,
        a_hat: -0.0656,
        b_hat: -0.1552,
        d_hat: 0.0243,
        c_hat: 0.0342,
        p_a: 0.0005,
        p_b: 0.0005,
        p_d: 0.2704,
        p_c: 0.1169,
        p_ab: None,
    };
    let (v1, v2) = (classify(&m1, 0.05).unwrap(), classify(&m2, 0.05).unwrap());
    let cp_ab = percent_contributions(&m1).unwrap().c_p.ab * 100.0;
    let cp_d = percent_contributions(&m2).unwrap().c_p.d * 100.0;
    let ok = v1.label() == "directionally competitive indirect-only"
        && v2.label() == "directionally complementary indirect-only"
        && v1.erroneous_rejection
        && v2.erroneous_rejection
        && (cp_ab / 117_857.0 - 1.0).abs() <= 0.01
        && (cp_d - 71.0).abs() <= 1.0;
    report(
        10,
        ok,
        format!("model 1: {} ; model 2: {} ; c_p(ab) = {cp_ab:.0}% ; c_p(d) = {cp_d:.2}%", v1.label(), v2.label()),
    );
}

#[test]
fn criterion_11_f_critical_accuracy() {
    let mut worst = (0.0f64, 0u64, 0.0f64);
    for d2 in 7..=10_000u64 {
        for alpha in [0.01, 0.05, 0.1, 0.5] {
            let ours = f_upper_critical(d2, alpha).unwrap();
            let oracle = f_critical_oracle(d2, alpha);
            let err = (ours - oracle).abs() / oracle.max(1.0);
            if err > worst.0 {
                worst = (err, d2, alpha);
            }
        }
    }
    report(
        11,
        worst.0 < 1e-8,
        format!("max relative error {:.2e} at d2 = {}, alpha = {} over d2 in 7..=10000", worst.0, worst.1, worst.2),
    );
}
