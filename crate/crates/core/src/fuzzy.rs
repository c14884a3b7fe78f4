//! Single-input Mamdani-style inference that turns local texture into an
//! embedding strength.
//!
//! The pipeline is the usual four blocks: the fuzzifier evaluates triangular
//! input terms, the knowledge base pairs input labels with output labels, the
//! inference engine fires each rule with the membership of its antecedent, and
//! the defuzzifier takes the firing-weighted average of the consequent peaks:
//!
//! ```text
//! alpha = sum_i(w_i * z_i) / sum_i(w_i)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Triangular membership with breakpoints `a <= b <= c`. `a == b` or `b == c`
/// gives a shoulder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipFunction {
    pub label: String,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl MembershipFunction {
    pub fn triangle(label: impl Into<String>, a: f64, b: f64, c: f64) -> Self {
        Self {
            label: label.into(),
            a,
            b,
            c,
        }
    }

    pub fn degree(&self, x: f64) -> f64 {
        if x < self.a || x > self.c {
            0.0
        } else if x == self.b {
            1.0
        } else if x < self.b {
            (x - self.a) / (self.b - self.a)
        } else {
            (self.c - x) / (self.c - self.b)
        }
    }

    /// The point of full membership, used as the rule output value.
    pub fn peak(&self) -> f64 {
        self.b
    }

    fn validate(&self) -> Result<()> {
        let finite = self.a.is_finite() && self.b.is_finite() && self.c.is_finite();
        if !finite || self.a > self.b || self.b > self.c {
            return Err(Error::Parameter(format!(
                "term '{}' needs finite a <= b <= c, got ({}, {}, {})",
                self.label, self.a, self.b, self.c
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuzzyRule {
    #[serde(rename = "if")]
    pub antecedent: String,
    #[serde(rename = "then")]
    pub consequent: String,
}

impl FuzzyRule {
    pub fn new(antecedent: impl Into<String>, consequent: impl Into<String>) -> Self {
        Self {
            antecedent: antecedent.into(),
            consequent: consequent.into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
struct RawSystem {
    input_terms: Vec<MembershipFunction>,
    output_terms: Vec<MembershipFunction>,
    rules: Vec<FuzzyRule>,
}

/// Validated rule base. Rule labels are resolved to term indices once at
/// construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSystem")]
pub struct FuzzySystem {
    input_terms: Vec<MembershipFunction>,
    output_terms: Vec<MembershipFunction>,
    rules: Vec<FuzzyRule>,
    #[serde(skip)]
    resolved: Vec<(usize, usize)>,
}

impl TryFrom<RawSystem> for FuzzySystem {
    type Error = Error;

    fn try_from(raw: RawSystem) -> Result<Self> {
        FuzzySystem::new(raw.input_terms, raw.output_terms, raw.rules)
    }
}

impl FuzzySystem {
    pub fn new(
        input_terms: Vec<MembershipFunction>,
        output_terms: Vec<MembershipFunction>,
        rules: Vec<FuzzyRule>,
    ) -> Result<Self> {
        if input_terms.is_empty() || output_terms.is_empty() {
            return Err(Error::Parameter("term sets must be non-empty".into()));
        }
        if rules.is_empty() {
            return Err(Error::Parameter("rule base is empty".into()));
        }
        for t in input_terms.iter().chain(&output_terms) {
            t.validate()?;
        }
        let find = |terms: &[MembershipFunction], label: &str, side: &str| {
            terms
                .iter()
                .position(|t| t.label == label)
                .ok_or_else(|| Error::Parameter(format!("unknown {side} term '{label}'")))
        };
        let resolved = rules
            .iter()
            .map(|r| {
                Ok((
                    find(&input_terms, &r.antecedent, "input")?,
                    find(&output_terms, &r.consequent, "output")?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            input_terms,
            output_terms,
            rules,
            resolved,
        })
    }

    /// The default knowledge base: low/medium/high on both sides with rules
    /// low→low, medium→medium, high→high. Inputs partition [0, 1]; the output
    /// peaks sit at `alpha_min`, the midpoint and `alpha_max`.
    pub fn standard(alpha_min: f64, alpha_max: f64) -> Result<Self> {
        if !(alpha_min > 0.0 && alpha_min <= alpha_max && alpha_max.is_finite()) {
            return Err(Error::Parameter(format!(
                "strength bounds need 0 < min <= max, got ({alpha_min}, {alpha_max})"
            )));
        }
        let mid = 0.5 * (alpha_min + alpha_max);
        Self::new(
            vec![
                MembershipFunction::triangle("low", 0.0, 0.0, 0.5),
                MembershipFunction::triangle("medium", 0.0, 0.5, 1.0),
                MembershipFunction::triangle("high", 0.5, 1.0, 1.0),
            ],
            vec![
                MembershipFunction::triangle("low", alpha_min, alpha_min, mid),
                MembershipFunction::triangle("medium", alpha_min, mid, alpha_max),
                MembershipFunction::triangle("high", mid, alpha_max, alpha_max),
            ],
            vec![
                FuzzyRule::new("low", "low"),
                FuzzyRule::new("medium", "medium"),
                FuzzyRule::new("high", "high"),
            ],
        )
    }

    pub fn input_terms(&self) -> &[MembershipFunction] {
        &self.input_terms
    }

    pub fn output_terms(&self) -> &[MembershipFunction] {
        &self.output_terms
    }

    pub fn rules(&self) -> &[FuzzyRule] {
        &self.rules
    }

    /// Smallest and largest consequent peak. Every inference result lies in
    /// this range.
    pub fn output_range(&self) -> (f64, f64) {
        self.resolved
            .iter()
            .map(|&(_, o)| self.output_terms[o].peak())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), z| {
                (lo.min(z), hi.max(z))
            })
    }

    /// Membership of `x` (clamped to [0, 1]) in each input term, in term order.
    pub fn fuzzify(&self, x: f64) -> Vec<f64> {
        let x = clamp_unit(x);
        self.input_terms.iter().map(|t| t.degree(x)).collect()
    }

    /// Crisp strength for normalized sensitivity `x`. Falls back to the lower
    /// end of [`output_range`](Self::output_range) when no rule fires.
    pub fn infer(&self, x: f64) -> f64 {
        let mu = self.fuzzify(x);
        let (mut num, mut den) = (0.0, 0.0);
        for &(i, o) in &self.resolved {
            let w = mu[i];
            num += w * self.output_terms[o].peak();
            den += w;
        }
        if den > 0.0 {
            num / den
        } else {
            self.output_range().0
        }
    }
}

fn clamp_unit(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(0.0, 1.0)
    }
}

/// Texture sensitivity of one coefficient window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TextureSensitivity {
    /// Number of window entries whose quantized value is non-zero.
    pub raw: usize,
    /// `raw` divided by the window length.
    pub normalized: f64,
}

/// Counts the coefficients `t` for which `round((t + offset) / q) != 0`.
/// Rounding is half away from zero.
pub fn texture_sensitivity(coeffs: &[f64], q: f64, offset: i64) -> Result<TextureSensitivity> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::Parameter(format!(
            "quantization step must be > 0, got {q}"
        )));
    }
    if coeffs.is_empty() {
        return Err(Error::Parameter("texture window is empty".into()));
    }
    let shift = offset as f64;
    let raw = coeffs
        .iter()
        .filter(|&&t| ((t + shift) / q).round() != 0.0)
        .count();
    Ok(TextureSensitivity {
        raw,
        normalized: raw as f64 / coeffs.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn sensitivity_hand_examples() {
        let s = texture_sensitivity(&[0.4, 3.2, -7.1], 2.0, 0).unwrap();
        assert_eq!(s.raw, 2);
        assert!(close(s.normalized, 2.0 / 3.0));
        let s = texture_sensitivity(&[5.0; 4], 2.0, 0).unwrap();
        assert_eq!((s.raw, s.normalized), (4, 1.0));
        let s = texture_sensitivity(&[0.0; 9], 7.5, 0).unwrap();
        assert_eq!(s.raw, 0);
    }

    #[test]
    fn sensitivity_offset_shifts_before_rounding() {
        // 0.4 + 1 = 1.4 → round(0.7) = 1
        assert_eq!(texture_sensitivity(&[0.4], 2.0, 1).unwrap().raw, 1);
        assert_eq!(texture_sensitivity(&[0.4], 2.0, 0).unwrap().raw, 0);
    }

    #[test]
    fn sensitivity_errors() {
        assert!(texture_sensitivity(&[1.0], 0.0, 0).is_err());
        assert!(texture_sensitivity(&[1.0], -3.0, 0).is_err());
        assert!(texture_sensitivity(&[], 1.0, 0).is_err());
    }

    #[test]
    fn fuzzify_default_partition() {
        let fs = FuzzySystem::standard(0.5, 2.5).unwrap();
        assert_eq!(fs.fuzzify(0.0), vec![1.0, 0.0, 0.0]);
        assert_eq!(fs.fuzzify(0.5), vec![0.0, 1.0, 0.0]);
        assert_eq!(fs.fuzzify(0.25), vec![0.5, 0.5, 0.0]);
        assert_eq!(fs.fuzzify(1.0), vec![0.0, 0.0, 1.0]);
        // clamped
        assert_eq!(fs.fuzzify(-3.0), fs.fuzzify(0.0));
        assert_eq!(fs.fuzzify(7.0), fs.fuzzify(1.0));
    }

    #[test]
    fn infer_hand_examples() {
        let fs = FuzzySystem::standard(0.5, 2.5).unwrap();
        assert!(close(fs.infer(0.0), 0.5));
        // w = (0.5, 0.5, 0) with z = (0.5, 1.5, 2.5)
        assert!(close(fs.infer(0.25), 1.0));
        assert!(close(fs.infer(1.0), 2.5));
    }

    #[test]
    fn no_firing_returns_lower_bound() {
        let fs = FuzzySystem::new(
            vec![MembershipFunction::triangle("narrow", 0.4, 0.5, 0.6)],
            vec![
                MembershipFunction::triangle("weak", 1.0, 1.0, 2.0),
                MembershipFunction::triangle("strong", 1.0, 3.0, 3.0),
            ],
            vec![
                FuzzyRule::new("narrow", "strong"),
                FuzzyRule::new("narrow", "weak"),
            ],
        )
        .unwrap();
        assert_eq!(fs.infer(0.9), 1.0);
        assert_eq!(fs.output_range(), (1.0, 3.0));
    }

    #[test]
    fn construction_errors() {
        let t = || vec![MembershipFunction::triangle("low", 0.0, 0.0, 1.0)];
        assert!(FuzzySystem::new(t(), t(), vec![]).is_err());
        assert!(FuzzySystem::new(t(), t(), vec![FuzzyRule::new("high", "low")]).is_err());
        assert!(FuzzySystem::new(t(), t(), vec![FuzzyRule::new("low", "mid")]).is_err());
        let bad = vec![MembershipFunction::triangle("low", 1.0, 0.5, 2.0)];
        assert!(FuzzySystem::new(bad, t(), vec![FuzzyRule::new("low", "low")]).is_err());
        assert!(FuzzySystem::standard(0.0, 1.0).is_err());
        assert!(FuzzySystem::standard(2.0, 1.0).is_err());
    }

    #[test]
    fn serde_round_trip_revalidates() {
        let fs = FuzzySystem::standard(2.0, 7.2).unwrap();
        let json = serde_json::to_string(&fs).unwrap();
        let back: FuzzySystem = serde_json::from_str(&json).unwrap();
        assert_eq!(back, fs);
        let broken = json.replace("\"then\":\"high\"", "\"then\":\"extreme\"");
        assert!(serde_json::from_str::<FuzzySystem>(&broken).is_err());
    }

    #[test]
    fn partition_of_unity_and_monotone() {
        let fs = FuzzySystem::standard(2.0, 7.2).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            let s: f64 = fs.fuzzify(x).iter().sum();
            assert!((s - 1.0).abs() < 1e-12, "x={x} sum={s}");
            let a = fs.infer(x);
            assert!(a >= prev - 1e-12);
            assert!((2.0..=7.2).contains(&a));
            prev = a;
        }
    }
}
