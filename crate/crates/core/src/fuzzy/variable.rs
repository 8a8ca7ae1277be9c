use alloc::string::String;
use alloc::vec::Vec;

use super::{FuzzyError, MembershipFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub label: String,
    pub mf: MembershipFunction,
}

impl Term {
    pub fn new(label: impl Into<String>, mf: MembershipFunction) -> Self {
        Term { label: label.into(), mf }
    }
}

/// A named quantity with a closed universe and an ordered list of terms.
/// Term order is rank order: later terms rank higher.
#[derive(Debug, Clone, PartialEq)]
pub struct LinguisticVariable {
    pub name: String,
    pub role: Role,
    pub units: String,
    pub universe: (f64, f64),
    pub terms: Vec<Term>,
}

const SUPPORT_SLACK: f64 = 1e-9;

impl LinguisticVariable {
    pub fn new(
        name: impl Into<String>,
        role: Role,
        units: impl Into<String>,
        universe: (f64, f64),
        terms: Vec<Term>,
    ) -> Result<Self, FuzzyError> {
        let var = LinguisticVariable { name: name.into(), role, units: units.into(), universe, terms };
        var.validate()?;
        Ok(var)
    }

    pub fn validate(&self) -> Result<(), FuzzyError> {
        let (lo, hi) = self.universe;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(FuzzyError::BadUniverse { variable: self.name.clone() });
        }
        if self.terms.is_empty() {
            return Err(FuzzyError::NoTerms { variable: self.name.clone() });
        }
        for (i, term) in self.terms.iter().enumerate() {
            term.mf.validate()?;
            if self.terms[..i].iter().any(|t| t.label == term.label) {
                return Err(FuzzyError::DuplicateTerm { variable: self.name.clone(), term: term.label.clone() });
            }
            let (s_lo, s_hi) = match term.mf {
                // A ramp saturates at 1 forever; only its thresholds must sit
                // inside the universe.
                MembershipFunction::RampUp { th1, th2 } => (th1, th2),
                _ => term.mf.support(),
            };
            if s_lo < lo - SUPPORT_SLACK || s_hi > hi + SUPPORT_SLACK {
                return Err(FuzzyError::SupportOutsideUniverse {
                    variable: self.name.clone(),
                    term: term.label.clone(),
                });
            }
        }
        if self.role == Role::Input {
            if let Some(x) = self.coverage_gap() {
                return Err(FuzzyError::CoverageGap { variable: self.name.clone(), at: x });
            }
        }
        Ok(())
    }

    /// Returns a point of the universe where every term is zero, if any.
    ///
    /// All terms are linear between consecutive breakpoints and only vanish
    /// at breakpoints or outside their supports, so it is enough to probe
    /// every breakpoint and every midpoint between neighboring breakpoints.
    pub fn coverage_gap(&self) -> Option<f64> {
        let (lo, hi) = self.universe;
        let mut knots: Vec<f64> =
            self.terms.iter().flat_map(|t| t.mf.thresholds()).filter(|k| *k > lo && *k < hi).collect();
        knots.push(lo);
        knots.push(hi);
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let mids: Vec<f64> = knots.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        knots.into_iter().chain(mids).find(|&x| self.terms.iter().all(|t| t.mf.eval(x) == 0.0))
    }

    pub fn term_index(&self, label: &str) -> Option<usize> {
        self.terms.iter().position(|t| t.label == label)
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.universe.0, self.universe.1)
    }

    /// Maps `[0, 1]` onto the universe.
    pub fn denormalize(&self, x: f64) -> f64 {
        let (lo, hi) = self.universe;
        lo + x * (hi - lo)
    }

    /// Index of the term with maximal membership at `x`; ties go to the
    /// higher-ranked term. Where every term is zero, the term whose support
    /// lies closest to `x` wins.
    pub fn best_term(&self, x: f64) -> usize {
        let mut best = 0;
        let mut best_deg = f64::NEG_INFINITY;
        for (i, t) in self.terms.iter().enumerate() {
            let d = t.mf.eval(x);
            if d >= best_deg {
                best = i;
                best_deg = d;
            }
        }
        if best_deg > 0.0 {
            return best;
        }
        let dist = |t: &Term| {
            let (a, b) = t.mf.support();
            if x < a {
                a - x
            } else if x > b {
                x - b
            } else {
                0.0
            }
        };
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (i, t) in self.terms.iter().enumerate() {
            let d = dist(t);
            if d <= best_dist {
                best = i;
                best_dist = d;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn tri(a: f64, b: f64, c: f64) -> MembershipFunction {
        MembershipFunction::triangle(a, b, c).unwrap()
    }

    #[test]
    fn detects_coverage_gap() {
        let err = LinguisticVariable::new(
            "x",
            Role::Input,
            "",
            (0.0, 10.0),
            vec![Term::new("lo", tri(0.0, 0.0, 4.0)), Term::new("hi", tri(5.0, 10.0, 10.0))],
        )
        .unwrap_err();
        match err {
            FuzzyError::CoverageGap { at, .. } => assert!((4.0..=5.0).contains(&at)),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn touching_feet_leave_a_hole() {
        // Both terms vanish exactly at 5.
        let var = LinguisticVariable {
            name: "x".into(),
            role: Role::Input,
            units: "".into(),
            universe: (0.0, 10.0),
            terms: vec![Term::new("lo", tri(0.0, 0.0, 5.0)), Term::new("hi", tri(5.0, 10.0, 10.0))],
        };
        assert_eq!(var.coverage_gap(), Some(5.0));
    }

    #[test]
    fn outputs_need_no_coverage() {
        LinguisticVariable::new("F", Role::Output, "s", (0.0, 10.0), vec![Term::new("a", tri(1.0, 2.0, 3.0))]).unwrap();
    }

    #[test]
    fn support_must_fit_universe() {
        let err = LinguisticVariable::new("x", Role::Output, "", (0.0, 1.0), vec![Term::new("a", tri(0.0, 0.5, 1.5))]);
        assert!(matches!(err, Err(FuzzyError::SupportOutsideUniverse { .. })));
    }

    #[test]
    fn best_term_breaks_ties_upward() {
        let var = LinguisticVariable::new(
            "x",
            Role::Output,
            "",
            (0.0, 3.0),
            vec![Term::new("a", tri(0.0, 1.0, 2.0)), Term::new("b", tri(1.0, 2.0, 3.0))],
        )
        .unwrap();
        assert_eq!(var.best_term(1.5), 1);
        assert_eq!(var.best_term(1.25), 0);
        // zero everywhere at 0: nearest support is "a"
        assert_eq!(var.best_term(0.0), 0);
    }
}
