//! Mediation typology and percent-contribution effect sizes.
//!
//! PAPA classifies from the indirect (`ab`) and direct (`d`) tests alone;
//! the causal-steps procedure additionally demands a significant total
//! effect `c`. When the path tests establish mediation but `p_c ≥ α`, the
//! causal-steps gate has erroneously rejected it.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, MediationError, Result};
use crate::estimation::{sign, Framework, MediationFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediationType {
    Complementary,
    Competitive,
    IndirectOnly,
    NoneEstablished,
}

impl MediationType {
    pub fn is_mediation(self) -> bool {
        self != MediationType::NoneEstablished
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionalSubtype {
    #[serde(rename = "d_plementary")]
    DPlementary,
    #[serde(rename = "d_petitive")]
    DPetitive,
    NotApplicable,
}

/// Split of the non-mediation bucket by the direct-effect test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonMediation {
    DirectOnly,
    NoEffect,
    NotApplicable,
}

/// The numbers classification needs: estimates (for signs) and p-values.
/// `p_ab` is required only under LSE-Sobel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectTests {
    pub framework: Framework,
    pub a_hat: f64,
    pub b_hat: f64,
    pub d_hat: f64,
    pub c_hat: f64,
    pub p_a: f64,
    pub p_b: f64,
    pub p_d: f64,
    pub p_c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_ab: Option<f64>,
}

impl From<&MediationFit> for EffectTests {
    fn from(fit: &MediationFit) -> Self {
        Self {
            framework: fit.framework,
            a_hat: fit.a_hat,
            b_hat: fit.b_hat,
            d_hat: fit.d_hat,
            c_hat: fit.c_hat,
            p_a: fit.p_a,
            p_b: fit.p_b,
            p_d: fit.p_d,
            p_c: fit.p_c,
            p_ab: fit.p_ab,
        }
    }
}

impl EffectTests {
    pub fn sign_abd(&self) -> f64 {
        sign(self.a_hat * self.b_hat * self.d_hat)
    }

    pub fn sign_abc(&self) -> f64 {
        sign(self.a_hat * self.b_hat * self.c_hat)
    }

    /// Indirect-effect significance: both path tests for LSE-F and LAD-Z,
    /// the Sobel test for LSE-Sobel.
    pub fn indirect_significant(&self, alpha: f64) -> Result<bool> {
        match self.framework {
            Framework::LseSobel => match self.p_ab {
                Some(p) => Ok(p < alpha),
                None => domain("LSE-Sobel classification needs p_ab"),
            },
            _ => Ok(self.p_a < alpha && self.p_b < alpha),
        }
    }

    fn validate(&self) -> Result<()> {
        let ps = [Some(self.p_a), Some(self.p_b), Some(self.p_d), Some(self.p_c), self.p_ab];
        for p in ps.into_iter().flatten() {
            if !(0.0..=1.0).contains(&p) {
                return domain(format!("p-value {p} outside [0, 1]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypologyVerdict {
    pub papa_type: MediationType,
    pub directional_subtype: DirectionalSubtype,
    pub causal_steps_type: MediationType,
    pub erroneous_rejection: bool,
    pub framework: Framework,
    pub alpha: f64,
    /// Direct-only versus no-effect, when no mediation is established.
    pub non_mediation: NonMediation,
}

impl TypologyVerdict {
    /// Human-readable label such as "directionally competitive indirect-only".
    pub fn label(&self) -> String {
        let base = match self.papa_type {
            MediationType::Complementary => "complementary",
            MediationType::Competitive => "competitive",
            MediationType::IndirectOnly => "indirect-only",
            MediationType::NoneEstablished => {
                return match self.non_mediation {
                    NonMediation::DirectOnly => "no mediation (direct-only)".into(),
                    NonMediation::NoEffect => "no mediation (no effect)".into(),
                    NonMediation::NotApplicable => "no mediation".into(),
                };
            }
        };
        match self.directional_subtype {
            DirectionalSubtype::DPlementary => format!("directionally complementary {base}"),
            DirectionalSubtype::DPetitive => format!("directionally competitive {base}"),
            DirectionalSubtype::NotApplicable => base.to_string(),
        }
    }
}

impl fmt::Display for TypologyVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Classifies under PAPA and causal steps. Significance is strict: `p < α`.
pub fn classify(tests: &EffectTests, alpha: f64) -> Result<TypologyVerdict> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("alpha must lie in (0, 1), got {alpha}"));
    }
    tests.validate()?;
    let ab = tests.indirect_significant(alpha)?;
    let d = tests.p_d < alpha;
    let abd = tests.sign_abd();

    let papa_type = match (ab, d) {
        (true, true) if abd > 0.0 => MediationType::Complementary,
        (true, true) => MediationType::Competitive,
        (true, false) => MediationType::IndirectOnly,
        (false, _) => MediationType::NoneEstablished,
    };
    let directional_subtype = match papa_type {
        MediationType::IndirectOnly if abd > 0.0 => DirectionalSubtype::DPlementary,
        MediationType::IndirectOnly if abd < 0.0 => DirectionalSubtype::DPetitive,
        _ => DirectionalSubtype::NotApplicable,
    };
    let non_mediation = match (papa_type, d) {
        (MediationType::NoneEstablished, true) => NonMediation::DirectOnly,
        (MediationType::NoneEstablished, false) => NonMediation::NoEffect,
        _ => NonMediation::NotApplicable,
    };
    let causal_steps_type = if tests.p_c < alpha {
        papa_type
    } else {
        MediationType::NoneEstablished
    };
    Ok(TypologyVerdict {
        papa_type,
        directional_subtype,
        causal_steps_type,
        erroneous_rejection: papa_type.is_mediation() && !causal_steps_type.is_mediation(),
        framework: tests.framework,
        alpha,
        non_mediation,
    })
}

/// One value per path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathValues {
    pub a: f64,
    pub b: f64,
    pub ab: f64,
    pub d: f64,
    pub c: f64,
}

/// Percentage coefficients `b_p` and their contributions `c_p` relative to
/// `|b_p(c)|`. With all variables on 0-1 scales the coefficients are
/// already `b_p` values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContributionReport {
    pub b_p: PathValues,
    pub c_p: PathValues,
}

/// `c_p(c) = b_p(c)/|b_p(c)|`, `c_p(ab) = b_p(ab)/|b_p(c)|`,
/// `c_p(d) = b_p(d)/|b_p(c)|`, and `c_p(ab)` shared between `a` and `b` in
/// proportion to `|b_p(a)|` and `|b_p(b)|`.
pub fn percent_contributions(tests: &EffectTests) -> Result<ContributionReport> {
    let (a, b, d, c) = (tests.a_hat, tests.b_hat, tests.d_hat, tests.c_hat);
    if c == 0.0 || !c.is_finite() {
        return Err(MediationError::UndefinedContribution(format!(
            "total effect b_p(c) = {c} leaves contributions undefined"
        )));
    }
    let split = a.abs() + b.abs();
    if split == 0.0 {
        return Err(MediationError::UndefinedContribution(
            "|b_p(a)| + |b_p(b)| = 0 leaves the a/b split undefined".into(),
        ));
    }
    let ab = a * b;
    let cp_ab = ab / c.abs();
    Ok(ContributionReport {
        b_p: PathValues { a, b, ab, d, c },
        c_p: PathValues {
            a: a.abs() / split * cp_ab,
            b: b.abs() / split * cp_ab,
            ab: cp_ab,
            d: d / c.abs(),
            c: c / c.abs(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tests(p_a: f64, p_b: f64, p_d: f64, p_c: f64, abd: f64) -> EffectTests {
        EffectTests {
            framework: Framework::LseF,
            a_hat: 0.5,
            b_hat: 0.5,
            d_hat: 0.1 * abd,
            c_hat: 0.3,
            p_a,
            p_b,
            p_d,
            p_c,
            p_ab: None,
        }
    }

    #[test]
    fn nothing_significant() {
        let v = classify(&tests(0.3, 0.4, 0.5, 0.6, 1.0), 0.05).unwrap();
        assert_eq!(v.papa_type, MediationType::NoneEstablished);
        assert_eq!(v.non_mediation, NonMediation::NoEffect);
        assert!(!v.erroneous_rejection);
    }

    #[test]
    fn direct_only_annotation() {
        let v = classify(&tests(0.3, 0.01, 0.01, 0.01, 1.0), 0.05).unwrap();
        assert_eq!(v.papa_type, MediationType::NoneEstablished);
        assert_eq!(v.non_mediation, NonMediation::DirectOnly);
    }

    #[test]
    fn competitive_with_significant_total() {
        let v = classify(&tests(0.01, 0.01, 0.01, 0.01, -1.0), 0.05).unwrap();
        assert_eq!(v.papa_type, MediationType::Competitive);
        assert_eq!(v.causal_steps_type, MediationType::Competitive);
        assert_eq!(v.directional_subtype, DirectionalSubtype::NotApplicable);
        assert!(!v.erroneous_rejection);
    }

    #[test]
    fn zero_abd_has_no_subtype() {
        let v = classify(&tests(0.01, 0.01, 0.5, 0.5, 0.0), 0.05).unwrap();
        assert_eq!(v.papa_type, MediationType::IndirectOnly);
        assert_eq!(v.directional_subtype, DirectionalSubtype::NotApplicable);
    }

    #[test]
    fn significance_is_strict() {
        let v = classify(&tests(0.05, 0.01, 0.5, 0.5, 1.0), 0.05).unwrap();
        assert_eq!(v.papa_type, MediationType::NoneEstablished);
    }

    #[test]
    fn sobel_requires_p_ab() {
        let mut t = tests(0.01, 0.01, 0.5, 0.5, 1.0);
        t.framework = Framework::LseSobel;
        assert!(classify(&t, 0.05).is_err());
        t.p_ab = Some(0.2);
        assert_eq!(classify(&t, 0.05).unwrap().papa_type, MediationType::NoneEstablished);
    }

    #[test]
    fn zero_total_effect_is_undefined() {
        let mut t = tests(0.01, 0.01, 0.5, 0.5, 1.0);
        t.c_hat = 0.0;
        assert!(matches!(percent_contributions(&t), Err(MediationError::UndefinedContribution(_))));
        t.c_hat = 0.2;
        t.a_hat = 0.0;
        t.b_hat = 0.0;
        assert!(percent_contributions(&t).is_err());
    }

    #[test]
    fn contribution_split_sums() {
        let mut t = tests(0.01, 0.01, 0.5, 0.5, 1.0);
        t.a_hat = -0.3;
        t.b_hat = 0.6;
        t.d_hat = 0.1;
        t.c_hat = t.a_hat * t.b_hat + t.d_hat;
        let r = percent_contributions(&t).unwrap();
        assert_eq!(r.c_p.c.abs(), 1.0);
        assert!((r.c_p.a.abs() + r.c_p.b.abs() - r.c_p.ab.abs()).abs() < 1e-15);
        assert!((r.c_p.ab + r.c_p.d - r.c_p.c).abs() < 1e-12);
    }
}
