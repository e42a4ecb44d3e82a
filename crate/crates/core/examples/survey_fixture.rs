//! Writes the synthetic survey extract used by the pipeline tests.
//!
//! `cargo run -p mediation-core --example survey_fixture -- tests/data/survey_synthetic.csv`
//!
//! Values are drawn from a fixed seed with a mediated structure
//! (CG -> PD -> SM, EM -> PD -> PA) plus noise. The missingness pattern is
//! laid out by row ranges so that the per-variable counts and the listwise
//! sample sizes of both models are known exactly.

use std::ops::Range;

use mediation::distributions::{sample_std_normal, sample_uniform_int, RngStream};

const ROWS: usize = 3865;
const COLUMNS: [&str; 9] = ["SM", "PD", "CG", "Age", "Income", "Edu", "PA", "EM", "Gender"];

fn missing(column: &str) -> Vec<Range<usize>> {
    match column {
        "SM" => vec![0..44],
        "PD" => vec![0..55],
        "CG" => vec![0..89, 1417..1455],
        "Age" => vec![0..127],
        "Income" => vec![1000..1417],
        "Edu" => vec![0..143],
        "PA" => vec![143..269],
        "EM" => vec![143..230],
        "Gender" => vec![0..98, 269..271],
        _ => vec![],
    }
}

fn clamp_round(v: f64, lo: f64, hi: f64) -> f64 {
    v.round().clamp(lo, hi)
}

fn main() {
    let path = std::env::args().nth(1).unwrap_or_else(|| "survey_synthetic.csv".into());
    let mut rng = RngStream::new(3865, 0);
    let mut w = csv::Writer::from_path(&path).expect("cannot create output file");
    w.write_record(COLUMNS).unwrap();
    let holes: Vec<Vec<Range<usize>>> = COLUMNS.iter().map(|c| missing(c)).collect();

    for row in 0..ROWS {
        let mut z = || sample_std_normal(&mut rng);
        let age = sample_uniform_int(18, 104, &mut RngStream::new(3866, row as u64)).unwrap() as f64;
        let edu = clamp_round(4.9 + 1.6 * z(), 1.0, 7.0);
        let income = clamp_round(5.6 + 0.3 * (edu - 4.9) + 2.1 * z(), 1.0, 9.0);
        let gender = if z() < 0.23 { 2.0 } else { 1.0 };
        let em = if z() + 0.02 * (50.0 - age) > 0.0 { 1.0 } else { 0.0 };
        let cg = clamp_round((z() - 1.2).max(0.0) * 1.5, 0.0, 5.0);
        let pd = clamp_round(0.75 + 0.25 * cg - 0.25 * em + 0.9 * z(), 0.0, 4.0);
        let sm = clamp_round(0.3 + 0.12 * pd - 0.05 * cg + 0.55 * z(), 0.0, 3.0);
        let pa = clamp_round((160.0 - 25.0 * pd + 10.0 * em + 260.0 * z()).max(0.0), 0.0, 4620.0);
        let values = [sm, pd, cg, age, income, edu, pa, em, gender];

        let record: Vec<String> = values
            .iter()
            .zip(&holes)
            .map(|(v, h)| if h.iter().any(|r| r.contains(&row)) { String::new() } else { v.to_string() })
            .collect();
        w.write_record(&record).unwrap();
    }
    w.flush().unwrap();
}
