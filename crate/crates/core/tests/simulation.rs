use mediation::distributions::RngStream;
use mediation::simulation::*;
use mediation::{run_study, Framework, SimulationConfig};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn config(replicates: usize) -> SimulationConfig {
    SimulationConfig {
        replicates,
        alpha_points: 99,
        seed: 99,
        ..Default::default()
    }
}

#[test]
fn sample_size_is_uniform() {
    let cfg = SimulationConfig::default();
    let mut counts = [0u64; 91];
    for i in 0..10_000 {
        let rep = generate_replicate(&mut RngStream::new(5, i), &cfg).unwrap();
        counts[rep.n - 10] += 1;
    }
    let expected = 10_000.0 / 91.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new(90.0).unwrap().cdf(chi2);
    assert!(p > 0.001, "χ² = {chi2}, p = {p}");
}

#[test]
fn report_is_identical_across_thread_counts() {
    let cfg = config(300);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| run_study(&cfg).unwrap());
    let b = four.install(|| run_study(&cfg).unwrap());
    assert_eq!(a, b);
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
}

#[test]
fn curves_are_proportions_with_denominators() {
    let rep = run_study(&config(400)).unwrap();
    assert_eq!(rep.curves.len(), 3 * Condition::ALL.len());
    for c in &rep.curves {
        assert_eq!(c.counts.len(), rep.alpha_grid.len());
        for (p, &n) in c.proportions().iter().zip(&c.counts) {
            match p {
                Some(v) => assert!((0.0..=1.0).contains(v) && n > 0),
                None => assert_eq!(n, 0),
            }
        }
    }
    // curve entries agree with a direct recount at each grid point
    let c = rep.curve(Framework::LseF, Condition::IndirectOnly).unwrap();
    for (i, &alpha) in rep.alpha_grid.iter().enumerate().step_by(10) {
        assert_eq!(rep.tally(Framework::LseF, Condition::IndirectOnly, alpha), (c.hits[i], c.counts[i]));
    }
    for r in &rep.records {
        for o in &r.outcomes {
            for p in [o.p_a, o.p_b, o.p_c, o.p_d] {
                assert!((0.0..=1.0).contains(&p));
            }
            assert_eq!(o.p_ab.is_some(), o.framework == Framework::LseSobel);
        }
    }
}

#[test]
fn json_round_trip() {
    let rep = run_study(&config(120)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = export_report(&rep, dir.path(), ExportFormat::Json).unwrap();
    assert_eq!(files.len(), 1);
    let text = std::fs::read_to_string(&files[0]).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["schema_version"], SCHEMA_VERSION);
    assert_eq!(import_report(dir.path(), ExportFormat::Json).unwrap(), rep);
}

#[test]
fn csv_round_trip_and_row_count() {
    let rep = run_study(&config(120)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    export_report(&rep, dir.path(), ExportFormat::Csv).unwrap();
    let curves = std::fs::read_to_string(dir.path().join(CURVES_CSV)).unwrap();
    let rows = curves.lines().count() - 1;
    assert_eq!(rows, rep.alpha_grid.len() * rep.curves.len());
    let manifest = std::fs::read_to_string(dir.path().join(MANIFEST_JSON)).unwrap();
    assert!(manifest.contains("\"schema_version\": 1"));
    assert_eq!(import_report(dir.path(), ExportFormat::Csv).unwrap(), rep);
}

#[test]
fn unwritable_path_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain");
    std::fs::write(&file, "x").unwrap();
    let rep = run_study(&config(2)).unwrap();
    assert!(export_report(&rep, file.join("sub"), ExportFormat::Json).is_err());
}

#[test]
fn opposite_signs_err_more_often() {
    let rep = run_study(&SimulationConfig {
        replicates: 3000,
        alpha_points: 10,
        seed: 7,
        ..Default::default()
    })
    .unwrap();
    for fw in Framework::ALL {
        let neg = rep.conditional_proportion(fw, Condition::IndirectOnlyAbdNeg, 0.05).unwrap();
        let pos = rep.conditional_proportion(fw, Condition::IndirectOnlyAbdPos, 0.05).unwrap();
        assert!(neg + 0.05 >= pos, "{fw}: neg {neg} pos {pos}");
    }
}

#[test]
fn key_value_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sim.conf");
    std::fs::write(&path, "# small study\nreplicates = 25\nseed = 3\nalpha_points = 5\n").unwrap();
    let cfg = SimulationConfig::load(&path).unwrap();
    assert_eq!((cfg.replicates, cfg.seed, cfg.alpha_points), (25, 3, 5));
    assert!(SimulationConfig::load(dir.path().join("missing")).is_err());
}
