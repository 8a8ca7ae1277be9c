use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::{FuzzyError, LinguisticVariable, MembershipFunction, Role, Term};

/// Sample count for centroid integration when a definition does not say
/// otherwise. Trades accuracy (midpoint-rule error shrinks with the square
/// of the step) against per-call cost.
pub const DEFAULT_CENTROID_RESOLUTION: usize = 4096;

/// One AND-connected rule. `antecedent[i]` indexes a term of input `i`,
/// `consequent` a term of the output.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rule {
    pub antecedent: Vec<usize>,
    pub consequent: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Defuzzifier {
    Centroid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateDecision {
    Transmit,
    Defer,
}

/// Result of one Mamdani evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    /// Inputs after clamping (and denormalization, when enabled).
    pub inputs: Vec<f64>,
    /// Firing degree of each rule, in rule order.
    pub activations: Vec<f64>,
    /// Clip level of each output term: the strongest activation among the
    /// rules that conclude it.
    pub term_levels: Vec<f64>,
    /// Aggregated output membership at the integration midpoints.
    pub aggregated: Vec<f64>,
    pub crisp: f64,
}

impl Inference {
    /// Output term whose clipped consequent stands highest in the aggregate;
    /// ties go to the higher-ranked term.
    pub fn dominant_term(&self) -> usize {
        let mut best = 0;
        for (i, &l) in self.term_levels.iter().enumerate() {
            if l >= self.term_levels[best] {
                best = i;
            }
        }
        best
    }
}

/// Status a vehicle feeds into the transmit gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleStatus {
    /// m/s
    pub speed: f64,
    pub sender_gain: f64,
    /// Gain of the nearest known neighbor.
    pub receiver_gain: f64,
}

impl VehicleStatus {
    pub fn as_inputs(&self) -> [f64; 3] {
        [self.speed, self.sender_gain, self.receiver_gain]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FisDefinition {
    pub name: String,
    pub inputs: Vec<LinguisticVariable>,
    pub output: LinguisticVariable,
    pub rules: Vec<Rule>,
    pub defuzzifier: Defuzzifier,
    pub resolution: usize,
    /// When set, inputs arrive in `[0, 1]` and are mapped onto each
    /// universe before fuzzification.
    pub normalized_inputs: bool,
}

impl FisDefinition {
    pub fn new(
        name: impl Into<String>,
        inputs: Vec<LinguisticVariable>,
        output: LinguisticVariable,
        rules: Vec<Rule>,
    ) -> Result<Self, FuzzyError> {
        let fis = FisDefinition {
            name: name.into(),
            inputs,
            output,
            rules,
            defuzzifier: Defuzzifier::Centroid,
            resolution: DEFAULT_CENTROID_RESOLUTION,
            normalized_inputs: false,
        };
        fis.validate()?;
        Ok(fis)
    }

    pub fn with_resolution(mut self, resolution: usize) -> Result<Self, FuzzyError> {
        if resolution == 0 {
            return Err(FuzzyError::ZeroResolution);
        }
        self.resolution = resolution;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), FuzzyError> {
        if self.inputs.is_empty() || self.rules.is_empty() {
            return Err(FuzzyError::Empty);
        }
        if self.resolution == 0 {
            return Err(FuzzyError::ZeroResolution);
        }
        for v in &self.inputs {
            if v.role != Role::Input {
                return Err(FuzzyError::WrongRole(v.name.clone()));
            }
            v.validate()?;
        }
        if self.output.role != Role::Output {
            return Err(FuzzyError::WrongRole(self.output.name.clone()));
        }
        self.output.validate()?;
        for (index, rule) in self.rules.iter().enumerate() {
            if rule.antecedent.len() != self.inputs.len() {
                return Err(FuzzyError::BadRule {
                    index,
                    reason: format!(
                        "antecedent names {} inputs, definition has {}",
                        rule.antecedent.len(),
                        self.inputs.len()
                    ),
                });
            }
            for (var, &t) in self.inputs.iter().zip(&rule.antecedent) {
                if t >= var.terms.len() {
                    return Err(FuzzyError::BadRule { index, reason: format!("input {} has no term #{t}", var.name) });
                }
            }
            if rule.consequent >= self.output.terms.len() {
                return Err(FuzzyError::BadRule {
                    index,
                    reason: format!("output {} has no term #{}", self.output.name, rule.consequent),
                });
            }
        }
        Ok(())
    }

    /// Runs Mamdani inference. Inputs outside a universe are clamped to it.
    pub fn infer(&self, inputs: &[f64]) -> Result<Inference, FuzzyError> {
        if inputs.len() != self.inputs.len() {
            return Err(FuzzyError::InputArity { expected: self.inputs.len(), got: inputs.len() });
        }
        let mut xs = Vec::with_capacity(inputs.len());
        for (i, (var, &x)) in self.inputs.iter().zip(inputs).enumerate() {
            if !x.is_finite() {
                return Err(FuzzyError::NonFiniteInput(i));
            }
            let x = if self.normalized_inputs { var.denormalize(x.clamp(0.0, 1.0)) } else { x };
            xs.push(var.clamp(x));
        }

        // Fuzzify once per (input, term).
        let degrees: Vec<Vec<f64>> =
            self.inputs.iter().zip(&xs).map(|(var, &x)| var.terms.iter().map(|t| t.mf.eval(x)).collect()).collect();

        let activations: Vec<f64> = self
            .rules
            .iter()
            .map(|r| r.antecedent.iter().zip(&degrees).map(|(&t, d)| d[t]).fold(1.0, f64::min))
            .collect();

        // max over rules of min(a_r, mu_c(x)) equals min(max a_r, mu_c(x))
        // grouped by consequent, since min(., mu) is monotone.
        let mut term_levels = vec![0.0f64; self.output.terms.len()];
        for (r, &a) in self.rules.iter().zip(&activations) {
            term_levels[r.consequent] = term_levels[r.consequent].max(a);
        }
        if term_levels.iter().all(|&l| l <= 0.0) {
            return Err(FuzzyError::NoRuleFired);
        }

        let (lo, hi) = self.output.universe;
        let n = self.resolution;
        let step = (hi - lo) / n as f64;
        let mut aggregated = Vec::with_capacity(n);
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n {
            let x = lo + (i as f64 + 0.5) * step;
            let mu = self
                .output
                .terms
                .iter()
                .zip(&term_levels)
                .filter(|(_, &l)| l > 0.0)
                .map(|(t, &l)| t.mf.eval(x).min(l))
                .fold(0.0, f64::max);
            aggregated.push(mu);
            num += x * mu;
            den += mu;
        }
        if den <= 0.0 {
            // Fired terms too narrow for the sampling grid.
            return Err(FuzzyError::NoRuleFired);
        }
        Ok(Inference { inputs: xs, activations, term_levels, aggregated, crisp: num / den })
    }

    /// Integration midpoints matching [`Inference::aggregated`].
    pub fn sample_points(&self) -> Vec<f64> {
        let (lo, hi) = self.output.universe;
        let step = (hi - lo) / self.resolution as f64;
        (0..self.resolution).map(|i| lo + (i as f64 + 0.5) * step).collect()
    }

    /// Output term with maximal membership at `crisp`; ties go up.
    pub fn classify_output(&self, crisp: f64) -> usize {
        self.output.best_term(crisp)
    }

    /// Transmit iff inference succeeds and the crisp score classifies at or
    /// above the `acceptance` output term. A silent rule base defers.
    pub fn gate_decision(&self, inputs: &[f64], acceptance: usize) -> GateDecision {
        match self.infer(inputs) {
            Ok(inf) if self.classify_output(inf.crisp) >= acceptance => GateDecision::Transmit,
            _ => GateDecision::Defer,
        }
    }

    pub fn output_term(&self, label: &str) -> Result<usize, FuzzyError> {
        self.output
            .term_index(label)
            .ok_or_else(|| FuzzyError::UnknownTerm { variable: self.output.name.clone(), term: label.to_string() })
    }

    /// Renders a rule as `IF S is Fast AND SG is Medium ... THEN F is VGood`.
    pub fn format_rule(&self, rule: &Rule) -> String {
        let mut s = String::from("IF");
        for (i, (var, &t)) in self.inputs.iter().zip(&rule.antecedent).enumerate() {
            if i > 0 {
                s.push_str(" AND");
            }
            s.push_str(&format!(" {} is {}", var.name, var.terms[t].label));
        }
        s.push_str(&format!(" THEN {} is {}", self.output.name, self.output.terms[rule.consequent].label));
        s
    }

    /// Parses the syntax produced by [`format_rule`](Self::format_rule).
    /// Antecedent clauses may come in any order but must name every input
    /// exactly once. Keywords are case-insensitive.
    pub fn parse_rule(&self, text: &str) -> Result<Rule, FuzzyError> {
        let syntax = |m: &str| FuzzyError::RuleSyntax(format!("{m} in `{}`", text.trim()));
        let words: Vec<&str> = text.split_whitespace().collect();
        if words.first().map(|w| w.eq_ignore_ascii_case("if")) != Some(true) {
            return Err(syntax("expected IF"));
        }
        let then_at =
            words.iter().position(|w| w.eq_ignore_ascii_case("then")).ok_or_else(|| syntax("missing THEN"))?;

        let clause = |ws: &[&str]| -> Result<(String, String), FuzzyError> {
            match ws {
                [var, is, term] if is.eq_ignore_ascii_case("is") => Ok((var.to_string(), term.to_string())),
                _ => Err(syntax("clause must read `<variable> is <term>`")),
            }
        };

        let mut antecedent = vec![usize::MAX; self.inputs.len()];
        for chunk in words[1..then_at].split(|w| w.eq_ignore_ascii_case("and")) {
            let (var, term) = clause(chunk)?;
            let vi = self
                .inputs
                .iter()
                .position(|v| v.name == var)
                .ok_or_else(|| FuzzyError::UnknownVariable(var.clone()))?;
            if antecedent[vi] != usize::MAX {
                return Err(syntax("input named twice"));
            }
            antecedent[vi] =
                self.inputs[vi].term_index(&term).ok_or(FuzzyError::UnknownTerm { variable: var, term })?;
        }
        if let Some(missing) = antecedent.iter().position(|&t| t == usize::MAX) {
            return Err(syntax(&format!("input {} not mentioned", self.inputs[missing].name)));
        }

        let (var, term) = clause(&words[then_at + 1..])?;
        if var != self.output.name {
            return Err(FuzzyError::UnknownVariable(var));
        }
        let consequent = self.output.term_index(&term).ok_or(FuzzyError::UnknownTerm { variable: var, term })?;
        Ok(Rule { antecedent, consequent })
    }

    /// The transmit gate's rule base: three inputs (speed, sender gain,
    /// receiver gain), one output (channel idle factor) and nine rules.
    ///
    /// Each term's support is the listed interval. Interior triangles peak
    /// at the midpoint and interior trapezoids keep the middle third flat.
    /// The outermost input terms are shoulders pinned at the universe edge
    /// so that every input value has some membership. The lowest output
    /// term stays a symmetric triangle; the top one is a right shoulder.
    pub fn f802_11p() -> Self {
        fn tri(a: f64, b: f64, c: f64) -> MembershipFunction {
            MembershipFunction::Triangle { a, b, c }
        }
        fn mid_tri(lo: f64, hi: f64) -> MembershipFunction {
            tri(lo, 0.5 * (lo + hi), hi)
        }
        fn mid_trap(lo: f64, hi: f64) -> MembershipFunction {
            let w = (hi - lo) / 3.0;
            MembershipFunction::Trapezoid { a: lo, b: lo + w, c: lo + 2.0 * w, d: hi }
        }
        fn right_shoulder_trap(lo: f64, hi: f64) -> MembershipFunction {
            MembershipFunction::Trapezoid { a: lo, b: lo + (hi - lo) / 3.0, c: hi, d: hi }
        }

        let speed = LinguisticVariable {
            name: "S".into(),
            role: Role::Input,
            units: "m/s".into(),
            universe: (0.0, 27.78),
            terms: vec![
                Term::new("Resident", tri(0.0, 0.0, 8.3)),
                Term::new("Move", mid_tri(5.0, 11.1)),
                Term::new("Normal", mid_tri(8.3, 19.2)),
                Term::new("Slow", mid_trap(10.0, 22.2)),
                Term::new("Fast", right_shoulder_trap(13.0, 27.78)),
            ],
        };
        let gain = |name: &str| LinguisticVariable {
            name: name.into(),
            role: Role::Input,
            units: "".into(),
            universe: (0.0, 1.0),
            terms: vec![
                Term::new("Weak", tri(0.0, 0.0, 0.4)),
                Term::new("Medium", mid_tri(0.1, 0.9)),
                Term::new("Excellent", tri(0.5, 1.0, 1.0)),
            ],
        };
        let factor = LinguisticVariable {
            name: "F".into(),
            role: Role::Output,
            units: "s".into(),
            universe: (0.0, 87.1),
            terms: vec![
                Term::new("Bad", mid_tri(0.0, 32.8)),
                Term::new("Good", mid_tri(17.0, 63.0)),
                Term::new("VGood", right_shoulder_trap(40.0, 87.1)),
            ],
        };

        const RULES: [([usize; 3], usize); 9] = [
            ([0, 1, 1], 0), // Resident, Medium, Medium -> Bad
            ([1, 1, 1], 0), // Move
            ([2, 1, 1], 0), // Normal
            ([3, 1, 1], 1), // Slow -> Good
            ([4, 1, 1], 1), // Fast -> Good
            ([4, 1, 2], 2), // Fast, Medium, Excellent -> VGood
            ([0, 0, 1], 0), // Resident, Weak, Medium -> Bad
            ([3, 2, 0], 0), // Slow, Excellent, Weak -> Bad
            ([4, 1, 0], 0), // Fast, Medium, Weak -> Bad
        ];
        let rules = RULES.iter().map(|(a, c)| Rule { antecedent: a.to_vec(), consequent: *c }).collect();

        FisDefinition::new("f802_11p", vec![speed, gain("SG"), gain("RG")], factor, rules)
            .expect("built-in definition is valid")
    }
}
