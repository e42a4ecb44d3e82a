//! Reference distributions for the path tests and samplers for the Monte
//! Carlo generator.
//!
//! The F distribution is evaluated through the regularized incomplete beta
//! function; its upper critical value is found by safeguarded Newton
//! iteration on `ln λ`. The normal CDF is built on `erfc`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{domain, Result};

const LN_2PI_HALF: f64 = 0.918_938_533_204_672_8; // ln(2π)/2
const MAX_CF_ITER: usize = 100_000;

/// `ln Γ(a) - ln Γ(a + b)`, accurate when `a` is large and `b` is small
/// (the F(1, d2) case with large `d2`).
fn ln_gamma_ratio(a: f64, b: f64) -> f64 {
    if a < 20.0 {
        return libm::lgamma(a) - libm::lgamma(a + b);
    }
    // Stirling: lnΓ(z) = (z-½)ln z - z + ½ln 2π + Σ B_2k / (2k(2k-1) z^{2k-1})
    fn series(z: f64) -> f64 {
        let z2 = z * z;
        (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - 1.0 / (1680.0 * z2)) / z2) / z2) / z
    }
    let c = a + b;
    -b * a.ln() - (c - 0.5) * (b / a).ln_1p() + b + series(a) - series(c)
}

/// `ln B(a, b)`.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    let (big, small) = if a >= b { (a, b) } else { (b, a) };
    libm::lgamma(small) + ln_gamma_ratio(big, small)
}

/// Regularized incomplete beta `I_x(a, b)`; `y` must equal `1 - x` but is
/// passed separately so callers can supply it without cancellation.
pub fn beta_reg(a: f64, b: f64, x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return 1.0;
    }
    if x > (a + 1.0) / (a + b + 2.0) {
        return 1.0 - beta_reg_cf(b, a, y, x);
    }
    beta_reg_cf(a, b, x, y)
}

/// `1 - I_x(a, b)` without forming the difference when the tail is small.
pub fn beta_reg_complement(a: f64, b: f64, x: f64, y: f64) -> f64 {
    beta_reg(b, a, y, x)
}

fn ln_of(x: f64, one_minus_x: f64) -> f64 {
    if x > 0.5 {
        (-one_minus_x).ln_1p()
    } else {
        x.ln()
    }
}

/// Continued-fraction evaluation (modified Lentz); valid for
/// `x < (a + 1) / (a + b + 2)`.
fn beta_reg_cf(a: f64, b: f64, x: f64, y: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let ln_front = a * ln_of(x, y) + b * ln_of(y, x) - ln_beta(a, b) - a.ln();
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..MAX_CF_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    (ln_front.exp() * h).clamp(0.0, 1.0)
}

/// Upper tail `P(F_{d1,d2} ≥ x)`.
pub fn f_upper_tail(x: f64, d1: f64, d2: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    // w = d2/(d2 + d1 x), 1 - w = d1 x/(d2 + d1 x)
    let denom = d2 + d1 * x;
    let w = d2 / denom;
    let one_minus_w = d1 * x / denom;
    beta_reg(d2 / 2.0, d1 / 2.0, w, one_minus_w)
}

/// Density of `F_{d1,d2}` at `x > 0`.
pub fn f_density(x: f64, d1: f64, d2: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let ln_f = 0.5 * (d1 * (d1 * x).ln() - d2 * (d1 * x / d2).ln_1p() - d1 * (d1 * x + d2).ln())
        - x.ln()
        - ln_beta(d1 / 2.0, d2 / 2.0);
    ln_f.exp()
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("alpha must lie in (0, 1), got {alpha}"));
    }
    Ok(())
}

/// Upper-tail p-value `P(F_{1,d2} ≥ stat)`.
pub fn f_pvalue(stat: f64, d2: u64) -> Result<f64> {
    if d2 == 0 {
        return domain("F denominator degrees of freedom must be positive");
    }
    if stat.is_nan() || stat < 0.0 {
        return domain(format!("F statistic must be nonnegative, got {stat}"));
    }
    Ok(f_upper_tail(stat, 1.0, d2 as f64))
}

/// Upper critical value `λ` with `P(F_{1,d2} > λ) = alpha`.
pub fn f_upper_critical(d2: u64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if d2 == 0 {
        return domain("F denominator degrees of freedom must be positive");
    }
    let d2f = d2 as f64;
    let g = |s: f64| f_upper_tail(s.exp(), 1.0, d2f) - alpha;

    // normal-square starting point, then bracket in s = ln λ
    let z = std_normal_quantile(1.0 - alpha / 2.0)?;
    let mut s = (z * z).max(1e-300).ln();
    let (mut lo, mut hi) = (s - 1.0, s + 1.0);
    while g(lo) < 0.0 {
        lo -= 2.0;
    }
    while g(hi) > 0.0 {
        hi += 2.0;
    }
    s = s.clamp(lo, hi);

    for _ in 0..200 {
        let gs = g(s);
        if gs == 0.0 {
            return Ok(s.exp());
        }
        if gs > 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let lambda = s.exp();
        let slope = -f_density(lambda, 1.0, d2f) * lambda;
        let newton = s - gs / slope;
        let next = if slope.is_finite() && slope != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - s).abs();
        s = next;
        if step < 1e-14 * s.abs().max(1.0) || hi - lo < 1e-15 * s.abs().max(1.0) {
            break;
        }
    }
    Ok(s.exp())
}

/// Standard normal CDF.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Two-sided normal tail probability `P(|Z| ≥ |z|)`.
pub fn two_sided_normal_pvalue(z: f64) -> f64 {
    libm::erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0)
}

pub fn std_normal_density(x: f64) -> f64 {
    (-0.5 * x * x - LN_2PI_HALF).exp()
}

/// Inverse of the standard normal CDF.
pub fn std_normal_quantile(prob: f64) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return domain(format!("probability must lie in (0, 1), got {prob}"));
    }
    if prob > 0.5 {
        // 1 - prob is exact for prob in [0.5, 1)
        return Ok(-lower_quantile(1.0 - prob));
    }
    Ok(lower_quantile(prob))
}

/// Quantile for `p ≤ 0.5`: Acklam's rational approximation refined by
/// Halley steps against `erfc`.
fn lower_quantile(p: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let mut x = if p < 0.02425 {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    for _ in 0..3 {
        let e = std_normal_cdf(x) - p;
        let u = e / std_normal_density(x);
        let next = x - u / (1.0 + 0.5 * x * u);
        if (next - x).abs() < 1e-16 * x.abs().max(1.0) {
            x = next;
            break;
        }
        x = next;
    }
    x
}

/// Reproducible random stream identified by `(seed, stream_id)`.
///
/// Backed by ChaCha8, which is counter based: draw `k` of a stream depends
/// only on `(seed, stream_id, k)`, so replicates can run on any thread.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of 32-bit words consumed so far.
    pub fn word_position(&self) -> u128 {
        self.rng.get_word_pos()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

pub fn sample_std_normal(rng: &mut RngStream) -> f64 {
    StandardNormal.sample(rng)
}

/// Uniform integer on the closed range `[lo, hi]`.
pub fn sample_uniform_int(lo: i64, hi: i64, rng: &mut RngStream) -> Result<i64> {
    if lo > hi {
        return domain(format!("empty integer range [{lo}, {hi}]"));
    }
    Ok(rand::Rng::random_range(rng, lo..=hi))
}

/// Uniform real on `[lo, hi]`.
pub fn sample_uniform_real(lo: f64, hi: f64, rng: &mut RngStream) -> Result<f64> {
    if !(lo <= hi) {
        return domain(format!("empty real range [{lo}, {hi}]"));
    }
    if lo == hi {
        return Ok(lo);
    }
    let u: f64 = rand::Rng::random(rng);
    Ok(lo + (hi - lo) * u)
}

/// Inverse-gamma(1, 1): reciprocal of a unit-rate exponential.
pub fn sample_inv_gamma_1_1(rng: &mut RngStream) -> f64 {
    let e: f64 = Exp1.sample(rng);
    1.0 / e
}
