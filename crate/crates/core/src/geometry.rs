//! Rejection regions in canonical `(r, p, q)` coordinates.
//!
//! With `r_crit = [λ_{1,n-2}(α)/(n-2)]^½`, `p_crit = [λ_{1,n-3}(α)/(n-3)]^½`
//! and `z = z_{α/2}`:
//!
//! | region | condition |
//! |--------|-----------|
//! | `Ra` | `r > r_crit` |
//! | `Rb` | `p > p_crit` |
//! | `Rc` | `q > r_crit (p² + 1)^½` |
//! | `Rd`, `âb̂ĉ ≥ 0` | `|q - rp| > p_crit (r² + 1)^½` |
//! | `Rd`, `âb̂ĉ < 0` | `|q + rp| > p_crit (r² + 1)^½` |
//! | `Rab` (Sobel) | `1/[(n-2)r²] + 1/[(n-3)p²] < 1/z²` |
//!
//! All inequalities are strict; boundary points are outside the region.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{f_upper_critical, std_normal_quantile};
use crate::error::{domain, MediationError, Result};
use crate::reduction::GeometryPoint;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalValues {
    pub n: usize,
    pub alpha: f64,
    pub r_crit: f64,
    pub p_crit: f64,
    pub z_half: f64,
}

impl CriticalValues {
    /// `r_0(n) = z_{α/2} / √(n-2)`, the smallest `r` at which the Sobel
    /// region can be entered.
    pub fn r0(&self) -> f64 {
        self.z_half / (self.n as f64 - 2.0).sqrt()
    }

    /// Lower edge `r_crit (p² + 1)^½` of `Rc` at `p`.
    pub fn rc_boundary(&self, p: f64) -> f64 {
        self.r_crit * (p * p + 1.0).sqrt()
    }

    /// Half-width `p_crit (r² + 1)^½` of the `Rd` complement band at `r`.
    pub fn rd_halfwidth(&self, r: f64) -> f64 {
        self.p_crit * (r * r + 1.0).sqrt()
    }
}

pub fn critical_values(n: usize, alpha: f64) -> Result<CriticalValues> {
    if n < 4 {
        return domain(format!("critical values need n ≥ 4, got {n}"));
    }
    let lam_a = f_upper_critical(n as u64 - 2, alpha)?;
    let lam_b = f_upper_critical(n as u64 - 3, alpha)?;
    Ok(CriticalValues {
        n,
        alpha,
        r_crit: (lam_a / (n as f64 - 2.0)).sqrt(),
        p_crit: (lam_b / (n as f64 - 3.0)).sqrt(),
        z_half: std_normal_quantile(1.0 - alpha / 2.0)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    Ra,
    Rb,
    Rc,
    Rd,
    RabSobel,
}

/// A rejection region or its complement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RegionId {
    pub region: Region,
    pub complement: bool,
}

impl RegionId {
    pub const fn of(region: Region) -> Self {
        Self {
            region,
            complement: false,
        }
    }

    pub const fn not(region: Region) -> Self {
        Self {
            region,
            complement: true,
        }
    }
}

impl From<Region> for RegionId {
    fn from(region: Region) -> Self {
        Self::of(region)
    }
}

fn raw_membership(pt: &GeometryPoint, region: Region, cv: &CriticalValues) -> bool {
    let (r, p, q) = (pt.r, pt.p, pt.q);
    match region {
        Region::Ra => r > cv.r_crit,
        Region::Rb => p > cv.p_crit,
        Region::Rc => q > cv.rc_boundary(p),
        Region::Rd => {
            let lhs = if pt.sign_abc >= 0 { (q - r * p).abs() } else { (q + r * p).abs() };
            lhs > cv.rd_halfwidth(r)
        }
        Region::RabSobel => {
            if r == 0.0 || p == 0.0 {
                return false;
            }
            let n = pt.n as f64;
            1.0 / ((n - 2.0) * r * r) + 1.0 / ((n - 3.0) * p * p) < 1.0 / (cv.z_half * cv.z_half)
        }
    }
}

/// Exact membership test.
pub fn in_region(pt: &GeometryPoint, region: impl Into<RegionId>, cv: &CriticalValues) -> Result<bool> {
    if pt.n != cv.n {
        return domain(format!("point has n = {} but critical values are for n = {}", pt.n, cv.n));
    }
    let id = region.into();
    Ok(raw_membership(pt, id.region, cv) != id.complement)
}

fn all_in(pt: &GeometryPoint, regions: &[RegionId], cv: &CriticalValues) -> bool {
    regions.iter().all(|id| raw_membership(pt, id.region, cv) != id.complement)
}

/// `p₀(r)` solving `1/[(n-2)r²] + 1/[(n-3)p₀²] = 1/z²`; the Sobel region at
/// this `r` is `{p > p₀(r)}`.
pub fn p0_boundary(r: f64, n: usize, alpha: f64) -> Result<f64> {
    if n < 4 {
        return domain(format!("need n ≥ 4, got {n}"));
    }
    let z = std_normal_quantile(1.0 - alpha / 2.0)?;
    p0_with_z(r, n, z)
}

fn p0_with_z(r: f64, n: usize, z: f64) -> Result<f64> {
    let nf = n as f64;
    let fa = (nf - 2.0) * r * r;
    let z2 = z * z;
    if !(fa > z2) {
        return Err(MediationError::BoundaryUndefined(format!(
            "(n-2)r² = {fa} must exceed z² = {z2}"
        )));
    }
    let inv = 1.0 / z2 - 1.0 / fa;
    Ok(1.0 / ((nf - 3.0) * inv).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subtype {
    /// `â·b̂·d̂ > 0`: indirect and direct paths point the same way.
    #[serde(rename = "d_plementary")]
    DPlementary,
    /// `â·b̂·d̂ < 0`.
    #[serde(rename = "d_petitive")]
    DPetitive,
}

impl std::str::FromStr for Subtype {
    type Err = MediationError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "d-plementary" | "dplementary" | "complementary" => Ok(Subtype::DPlementary),
            "d-petitive" | "dpetitive" | "competitive" => Ok(Subtype::DPetitive),
            other => domain(format!("unknown subtype `{other}`")),
        }
    }
}

fn point(n: usize, r: f64, p: f64, q: f64, sign_abc: i8) -> GeometryPoint {
    // realizable sign of â·b̂·d̂ given the â·b̂·ĉ context
    let sign_abd = if sign_abc < 0 {
        -1
    } else if q > r * p {
        1
    } else if q < r * p {
        -1
    } else {
        0
    };
    GeometryPoint {
        r,
        p,
        q,
        n,
        sign_abd,
        sign_abc,
    }
}

const INDIRECT_ONLY_F: [RegionId; 4] = [
    RegionId::of(Region::Ra),
    RegionId::of(Region::Rb),
    RegionId::not(Region::Rd),
    RegionId::not(Region::Rc),
];

const COMPETITIVE_F: [RegionId; 4] = [
    RegionId::of(Region::Ra),
    RegionId::of(Region::Rb),
    RegionId::of(Region::Rd),
    RegionId::not(Region::Rc),
];

const INDIRECT_ONLY_SOBEL: [RegionId; 3] = [
    RegionId::of(Region::RabSobel),
    RegionId::not(Region::Rd),
    RegionId::not(Region::Rc),
];

/// Deterministic grid search over `r` (log-spaced above `r_min`), `p`
/// (linear) and `q ∈ [0, r_crit (p²+1)^½]` for a point in every region of
/// `regions` whose sign context satisfies `accept`.
fn grid_search(
    cv: &CriticalValues,
    r_min: f64,
    regions: &[RegionId],
    contexts: &[i8],
    accept: impl Fn(&GeometryPoint) -> bool + Sync,
) -> Option<GeometryPoint> {
    const G: usize = 80;
    let r_max = 10.0 * cv.r_crit.max(r_min);
    let p_max = 10.0 * cv.p_crit.max(cv.z_half / (cv.n as f64 - 3.0).sqrt());
    let ln_lo = r_min.max(1e-12).ln();
    let ln_hi = r_max.ln();
    (1..=G).into_par_iter().find_map_first(|i| {
        let r = (ln_lo + (ln_hi - ln_lo) * i as f64 / G as f64).exp();
        for j in 1..=G {
            let p = p_max * j as f64 / G as f64;
            let q_hi = cv.rc_boundary(p);
            for k in 0..=G {
                let q = q_hi * k as f64 / G as f64;
                for &ctx in contexts {
                    let pt = point(cv.n, r, p, q, ctx);
                    if all_in(&pt, regions, cv) && accept(&pt) {
                        return Some(pt);
                    }
                }
            }
        }
        None
    })
}

fn verified(pt: GeometryPoint, regions: &[RegionId], cv: &CriticalValues) -> Option<GeometryPoint> {
    all_in(&pt, regions, cv).then_some(pt)
}

fn witness_n_check(n: usize) -> Result<()> {
    if n < 5 {
        return domain(format!("witness construction needs n ≥ 5, got {n}"));
    }
    Ok(())
}

/// A point in `Ra ∩ Rb ∩ R̄d ∩ R̄c`: the F-test path tests establish
/// indirect-only mediation while the total-effect test fails. The
/// directionally competitive subtype is placed in the `âb̂ĉ < 0` context.
pub fn witness_indirect_only(n: usize, alpha: f64, subtype: Subtype) -> Result<GeometryPoint> {
    let ctx = match subtype {
        Subtype::DPlementary => 1,
        Subtype::DPetitive => -1,
    };
    witness_indirect_only_in_context(n, alpha, subtype, ctx)
}

/// As [`witness_indirect_only`] with an explicit `âb̂ĉ` sign context. The
/// directionally complementary subtype exists only for `âb̂ĉ > 0`.
pub fn witness_indirect_only_in_context(
    n: usize,
    alpha: f64,
    subtype: Subtype,
    sign_abc: i8,
) -> Result<GeometryPoint> {
    witness_n_check(n)?;
    let cv = critical_values(n, alpha)?;
    let (rc, pc) = (cv.r_crit, cv.p_crit);
    let analytic = match (subtype, sign_abc >= 0) {
        (Subtype::DPlementary, false) => {
            return domain("â·b̂·d̂ > 0 forces â·b̂·ĉ > 0");
        }
        (Subtype::DPlementary, true) => {
            // r in (r_crit, r_crit (1 + 1/p_crit²)^½), p in (p_crit, r_crit/(r² - r_crit²)^½),
            // q in (rp, r_crit (p²+1)^½]
            let r_hi = rc * (1.0 + 1.0 / (pc * pc)).sqrt();
            let r = 0.5 * (rc + r_hi);
            let p_hi = rc / (r * r - rc * rc).sqrt();
            let p = 0.5 * (pc + p_hi);
            let q = 0.5 * (r * p + cv.rc_boundary(p));
            point(n, r, p, q, 1)
        }
        (Subtype::DPetitive, nonneg) => {
            let r = 2.0 * rc;
            let p_hi = cv.rd_halfwidth(r) / r;
            let p = 0.5 * (pc + p_hi);
            let q = if nonneg {
                0.5 * (r * p).min(cv.rc_boundary(p))
            } else {
                0.5 * cv.rc_boundary(p).min(cv.rd_halfwidth(r) - r * p)
            };
            point(n, r, p, q, if nonneg { 1 } else { -1 })
        }
    };
    let want_abd = match subtype {
        Subtype::DPlementary => 1,
        Subtype::DPetitive => -1,
    };
    let ctx = if sign_abc >= 0 { 1 } else { -1 };
    verified(analytic, &INDIRECT_ONLY_F, &cv)
        .filter(|pt| pt.sign_abd == want_abd)
        .or_else(|| grid_search(&cv, rc, &INDIRECT_ONLY_F, &[ctx], |pt| pt.sign_abd == want_abd))
        .ok_or_else(|| MediationError::WitnessNotFound(format!("indirect-only {subtype:?} at n = {n}, α = {alpha}")))
}

/// A point in `Ra ∩ Rb ∩ Rd ∩ R̄c` with `â·b̂·d̂ < 0` and the requested
/// `â·b̂·ĉ` sign, placed with `p > p₀(r)` so it also lies in the Sobel
/// region.
pub fn witness_competitive(n: usize, alpha: f64, sign_abc: i8) -> Result<GeometryPoint> {
    witness_n_check(n)?;
    let cv = critical_values(n, alpha)?;
    let (rc, pc) = (cv.r_crit, cv.p_crit);
    let r = 2.0 * rc;
    let p0 = p0_with_z(r, n, cv.z_half)?;
    let ctx: i8 = if sign_abc >= 0 { 1 } else { -1 };
    let mut regions = COMPETITIVE_F.to_vec();
    regions.push(RegionId::of(Region::RabSobel));

    let analytic = if ctx > 0 {
        // Rd needs q < rp - p_crit (r²+1)^½, so p must exceed p_crit (r²+1)^½ / r
        let p = 1.5 * pc.max(cv.rd_halfwidth(r) / r).max(p0);
        let q = 0.5 * (r * p - cv.rd_halfwidth(r)).min(cv.rc_boundary(p));
        point(n, r, p, q, 1)
    } else {
        // Rd: q > p_crit (r²+1)^½ - rp; R̄c: q ≤ r_crit (p²+1)^½
        let mut p = 1.5 * pc.max(p0);
        while cv.rd_halfwidth(r) - r * p >= cv.rc_boundary(p) {
            p *= 2.0;
        }
        let lo = (cv.rd_halfwidth(r) - r * p).max(0.0);
        let q = 0.5 * (lo + cv.rc_boundary(p));
        point(n, r, p, q, -1)
    };
    verified(analytic, &regions, &cv)
        .filter(|pt| pt.sign_abd < 0)
        .or_else(|| grid_search(&cv, rc, &regions, &[ctx], |pt| pt.sign_abd < 0))
        .ok_or_else(|| MediationError::WitnessNotFound(format!("competitive, âb̂ĉ sign {ctx}, n = {n}, α = {alpha}")))
}

/// A point in `Rab ∩ R̄d ∩ R̄c` under the Sobel test, built from
/// `r² = 2z²/(n-2)` when `p₀(r) < p_crit (r²+1)^½ / r` and found by grid
/// search otherwise. Small `n` may have no such point.
pub fn witness_sobel_io(n: usize, alpha: f64) -> Result<GeometryPoint> {
    witness_n_check(n)?;
    let cv = critical_values(n, alpha)?;
    let z = cv.z_half;
    let r = (2.0 * z * z / (n as f64 - 2.0)).sqrt();
    let p0 = p0_with_z(r, n, z)?;
    let p_hi = cv.rd_halfwidth(r) / r;
    let analytic = (p0 < p_hi).then(|| {
        let p = 0.5 * (p0 + p_hi);
        let q_hi = cv.rc_boundary(p).min(r * p + cv.rd_halfwidth(r));
        point(n, r, p, 0.5 * q_hi, 1)
    });
    analytic
        .and_then(|pt| verified(pt, &INDIRECT_ONLY_SOBEL, &cv))
        .or_else(|| grid_search(&cv, cv.r0(), &INDIRECT_ONLY_SOBEL, &[1, -1], |_| true))
        .ok_or_else(|| MediationError::WitnessNotFound(format!("Sobel indirect-only at n = {n}, α = {alpha}")))
}

/// `r_crit / r_0(n)`; tends to 1 as `n` grows, closing the band of `r`
/// where Sobel-complementary mediation can coexist with a failed total test.
pub fn sobel_gap_ratio(n: usize, alpha: f64) -> Result<f64> {
    let cv = critical_values(n, alpha)?;
    Ok(cv.r_crit / cv.r0())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperfluityReport {
    pub n: usize,
    pub alpha: f64,
    pub grid_density: usize,
    pub r_range: (f64, f64),
    pub p_range: (f64, f64),
    /// `(r, p)` cells examined.
    pub cells: usize,
    /// `(r, p, q)` points evaluated with exact membership tests.
    pub points_checked: usize,
    /// Cells whose analytic `q` interval for `Ra ∩ Rb ∩ Rd ∩ R̄c` is nonempty.
    pub interval_violations: usize,
    /// Probe points found in `Ra ∩ Rb ∩ Rd ∩ R̄c`.
    pub point_violations: usize,
    pub first_violation: Option<GeometryPoint>,
}

impl SuperfluityReport {
    pub fn violations(&self) -> usize {
        self.interval_violations + self.point_violations
    }
}

/// Scans the complementary sign context (`q > rp`, `â·b̂·ĉ > 0`) over
/// `r ∈ (r_crit, 10 r_crit]`, `p ∈ (0, 10 p_crit]` for points in
/// `Ra ∩ Rb ∩ Rd ∩ R̄c`. Each `(r, p)` cell checks the analytic `q`
/// interval and probes `q` on a grid over `(rp, rp + 2 r_crit (p²+1)^½]`.
pub fn verify_complementary_superfluous(n: usize, alpha: f64, grid_density: usize) -> Result<SuperfluityReport> {
    if grid_density < 100 {
        return domain(format!("grid density must be at least 100, got {grid_density}"));
    }
    let cv = critical_values(n, alpha)?;
    let g = grid_density;
    let q_steps = (g / 5).max(20);
    let r_range = (cv.r_crit, 10.0 * cv.r_crit);
    let p_range = (0.0, 10.0 * cv.p_crit);

    struct Acc {
        interval: usize,
        points: usize,
        checked: usize,
        first: Option<GeometryPoint>,
    }
    let rows: Vec<Acc> = (1..=g)
        .into_par_iter()
        .map(|i| {
            let r = r_range.0 + (r_range.1 - r_range.0) * i as f64 / g as f64;
            let mut acc = Acc {
                interval: 0,
                points: 0,
                checked: 0,
                first: None,
            };
            for j in 1..=g {
                let p = p_range.1 * j as f64 / g as f64;
                let rp = r * p;
                let lo = rp + cv.rd_halfwidth(r);
                let hi = cv.rc_boundary(p);
                if p > cv.p_crit && lo < hi {
                    acc.interval += 1;
                    acc.first.get_or_insert(point(n, r, p, 0.5 * (lo + hi), 1));
                }
                let span = 2.0 * hi;
                for k in 1..=q_steps {
                    let q = rp + span * k as f64 / q_steps as f64;
                    let pt = point(n, r, p, q, 1);
                    acc.checked += 1;
                    if all_in(&pt, &COMPETITIVE_F, &cv) {
                        acc.points += 1;
                        acc.first.get_or_insert(pt);
                    }
                }
            }
            acc
        })
        .collect();

    let mut report = SuperfluityReport {
        n,
        alpha,
        grid_density,
        r_range,
        p_range,
        cells: g * g,
        points_checked: 0,
        interval_violations: 0,
        point_violations: 0,
        first_violation: None,
    };
    for acc in rows {
        report.points_checked += acc.checked;
        report.interval_violations += acc.interval;
        report.point_violations += acc.points;
        if report.first_violation.is_none() {
            report.first_violation = acc.first;
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// Region boundaries in the `p`-`q` plane at fixed `r`, for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySamples {
    pub n: usize,
    pub alpha: f64,
    pub r: f64,
    pub critical: CriticalValues,
    pub polylines: Vec<Polyline>,
}

impl BoundarySamples {
    /// Long-format CSV: `curve,p,q`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["curve", "p", "q"])?;
        for line in &self.polylines {
            for (p, q) in &line.points {
                w.write_record([line.name.as_str(), &p.to_string(), &q.to_string()])?;
            }
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Samples of the region boundaries on `p ∈ [0, p_max]`:
/// `rc` is `q = r_crit (p²+1)^½`; `rd_upper_abc_nonneg` and
/// `rd_lower_abc_nonneg` are `q = rp ± p_crit (r²+1)^½`; `rd_abc_neg` is
/// `q = -rp + p_crit (r²+1)^½`; `q_eq_rp` separates the sign contexts;
/// `rb` and, when defined, `rab_sobel` are the vertical lines `p = p_crit`
/// and `p = p₀(r)`. Curves are clipped to `q ≥ 0`.
pub fn region_boundary_samples(n: usize, alpha: f64, r: f64, p_max: f64, count: usize) -> Result<BoundarySamples> {
    if !(r > 0.0) {
        return domain("r must be positive");
    }
    if !(p_max > 0.0) || count < 2 {
        return domain("need p_max > 0 and at least two samples");
    }
    let cv = critical_values(n, alpha)?;
    let ps: Vec<f64> = (0..count).map(|i| p_max * i as f64 / (count - 1) as f64).collect();
    let curve = |name: &str, f: &dyn Fn(f64) -> f64| Polyline {
        name: name.to_string(),
        points: ps.iter().map(|&p| (p, f(p))).filter(|&(_, q)| q >= 0.0).collect(),
    };
    let half = cv.rd_halfwidth(r);
    let mut polylines = vec![
        curve("rc", &|p| cv.rc_boundary(p)),
        curve("rd_upper_abc_nonneg", &|p| r * p + half),
        curve("rd_lower_abc_nonneg", &|p| r * p - half),
        curve("rd_abc_neg", &|p| half - r * p),
        curve("q_eq_rp", &|p| r * p),
    ];
    let q_top = ps.iter().map(|&p| cv.rc_boundary(p).max(r * p + half)).fold(0.0, f64::max);
    let vertical = |name: &str, p: f64| Polyline {
        name: name.to_string(),
        points: vec![(p, 0.0), (p, q_top)],
    };
    polylines.push(vertical("rb", cv.p_crit));
    if let Ok(p0) = p0_with_z(r, n, cv.z_half) {
        polylines.push(vertical("rab_sobel", p0));
    }
    Ok(BoundarySamples {
        n,
        alpha,
        r,
        critical: cv,
        polylines,
    })
}
