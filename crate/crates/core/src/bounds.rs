use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// A factor of the inequality could not be computed.
    Indeterminate,
}

/// `lhs ≤ rhs` (or `lhs < rhs` when `strict`), judged with an absolute
/// tolerance. `slack = rhs − lhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub tolerance: f64,
    pub strict: bool,
    pub verdict: Verdict,
}

impl BoundCheck {
    pub fn le(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self::build(name.into(), lhs, rhs, tolerance, false)
    }

    /// Strict inequality. A violation still needs `slack < −tolerance`; whether
    /// the slack is actually positive is reported by [`BoundCheck::strictly_holds`].
    pub fn lt(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self::build(name.into(), lhs, rhs, tolerance, true)
    }

    pub fn indeterminate(name: impl Into<String>) -> Self {
        BoundCheck {
            name: name.into(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            slack: f64::NAN,
            tolerance: 0.0,
            strict: false,
            verdict: Verdict::Indeterminate,
        }
    }

    fn build(name: String, lhs: f64, rhs: f64, tolerance: f64, strict: bool) -> Self {
        let slack = rhs - lhs;
        let verdict = if !slack.is_finite() {
            Verdict::Indeterminate
        } else if slack >= -tolerance {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        BoundCheck { name, lhs, rhs, slack, tolerance, strict, verdict }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn failed(&self) -> bool {
        self.verdict == Verdict::Fail
    }

    pub fn strictly_holds(&self) -> bool {
        self.slack > 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts() {
        assert!(BoundCheck::le("a", 1.0, 1.0, 0.0).passed());
        assert!(BoundCheck::le("a", 1.0 + 1e-12, 1.0, 1e-9).passed());
        assert!(BoundCheck::le("a", 1.1, 1.0, 1e-9).failed());
        let lt = BoundCheck::lt("b", 1.0, 1.0, 1e-9);
        assert!(lt.passed() && !lt.strictly_holds());
        let nan = BoundCheck::le("c", f64::NAN, 1.0, 1e-9);
        assert_eq!(nan.verdict, Verdict::Indeterminate);
    }
}
