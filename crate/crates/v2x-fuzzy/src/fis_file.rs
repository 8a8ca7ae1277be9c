//! Rule-base definition files: variables, term shapes, rules and inference
//! settings as TOML.

use std::fmt::Write as _;

use serde::Deserialize;
use toml::Spanned;
use v2x_fuzzy_core::fuzzy::{
    Defuzzifier, FisDefinition, FuzzyError, LinguisticVariable, MembershipFunction, Role, Term,
};

use crate::issues::{ConfigErrors, ConfigIssue, SourceMap};
use crate::scenario_file::quote;

pub const F802_11P_FIS: &str = include_str!("../assets/f802_11p.fis");

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFis {
    name: Spanned<String>,
    #[serde(default)]
    and: Option<Spanned<String>>,
    #[serde(default)]
    aggregation: Option<Spanned<String>>,
    #[serde(default)]
    defuzzifier: Option<Spanned<String>>,
    #[serde(default)]
    resolution: Option<Spanned<i64>>,
    #[serde(default)]
    normalized_inputs: bool,
    input: Vec<Spanned<RawVariable>>,
    output: Spanned<RawVariable>,
    rules: Vec<Spanned<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVariable {
    name: String,
    #[serde(default)]
    units: String,
    universe: Spanned<[f64; 2]>,
    terms: Vec<Spanned<RawTerm>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTerm {
    label: String,
    shape: String,
    params: Vec<f64>,
}

/// Parses and fully validates a definition. Every problem names the key
/// and where in the file it sits.
pub fn parse_fis(text: &str, path: &str) -> Result<FisDefinition, ConfigErrors> {
    let map = SourceMap { path, text };
    let raw: RawFis = toml::from_str(text).map_err(|e| ConfigErrors(vec![map.parse_issue(&e)]))?;
    let mut issues = Vec::new();
    let mut issue = |key: String, span: std::ops::Range<usize>, message: String| {
        issues.push(ConfigIssue { key, location: map.locate(span), message });
    };

    for (key, value, expected) in [
        ("and", &raw.and, "min"),
        ("aggregation", &raw.aggregation, "max"),
        ("defuzzifier", &raw.defuzzifier, "centroid"),
    ] {
        if let Some(v) = value {
            if v.get_ref() != expected {
                issue(key.into(), v.span(), format!("only `{expected}` is supported, found `{}`", v.get_ref()));
            }
        }
    }
    let mut resolution = v2x_fuzzy_core::fuzzy::DEFAULT_CENTROID_RESOLUTION;
    if let Some(r) = &raw.resolution {
        match usize::try_from(*r.get_ref()) {
            Ok(n) if n > 0 => resolution = n,
            _ => issue("resolution".into(), r.span(), "must be a positive integer".into()),
        }
    }

    let mut build = |key: String, rv: &Spanned<RawVariable>, role: Role| -> Option<LinguisticVariable> {
        let v = rv.get_ref();
        let mut terms = Vec::new();
        for (i, t) in v.terms.iter().enumerate() {
            let tr = t.get_ref();
            match MembershipFunction::from_parts(&tr.shape, &tr.params) {
                Ok(mf) => terms.push(Term::new(tr.label.clone(), mf)),
                Err(e) => issue(format!("{key}.terms[{i}]"), t.span(), format!("term {}: {e}", tr.label)),
            }
        }
        if terms.len() != v.terms.len() {
            return None;
        }
        let [lo, hi] = *v.universe.get_ref();
        let var = LinguisticVariable { name: v.name.clone(), role, units: v.units.clone(), universe: (lo, hi), terms };
        match var.validate() {
            Ok(()) => Some(var),
            Err(e) => {
                let span = match &e {
                    FuzzyError::BadUniverse { .. } => v.universe.span(),
                    FuzzyError::DuplicateTerm { term, .. } | FuzzyError::SupportOutsideUniverse { term, .. } => {
                        v.terms.iter().rfind(|t| &t.get_ref().label == term).map_or(rv.span(), |t| t.span())
                    }
                    _ => rv.span(),
                };
                issue(key, span, e.to_string());
                None
            }
        }
    };
    let inputs: Vec<Option<LinguisticVariable>> =
        raw.input.iter().enumerate().map(|(i, v)| build(format!("input[{i}]"), v, Role::Input)).collect();
    let output = build("output".into(), &raw.output, Role::Output);

    let (Some(inputs), Some(output)) = (inputs.into_iter().collect::<Option<Vec<_>>>(), output) else {
        return Err(ConfigErrors(issues));
    };
    if inputs.is_empty() {
        issue("input".into(), raw.name.span(), "definition declares no inputs".into());
    }
    let mut fis = FisDefinition {
        name: raw.name.get_ref().clone(),
        inputs,
        output,
        rules: Vec::new(),
        defuzzifier: Defuzzifier::Centroid,
        resolution,
        normalized_inputs: raw.normalized_inputs,
    };
    for (i, r) in raw.rules.iter().enumerate() {
        match fis.parse_rule(r.get_ref()) {
            Ok(rule) => fis.rules.push(rule),
            Err(e) => issue(format!("rules[{i}]"), r.span(), e.to_string()),
        }
    }
    if raw.rules.is_empty() {
        issue("rules".into(), raw.name.span(), "definition declares no rules".into());
    }
    if !issues.is_empty() {
        return Err(ConfigErrors(issues));
    }
    fis.validate().map_err(|e| ConfigErrors::single("fis", map.locate(raw.name.span()), e.to_string()))?;
    Ok(fis)
}

/// Writes a definition that [`parse_fis`] reads back unchanged.
pub fn fis_to_toml(fis: &FisDefinition) -> String {
    let mut o = String::new();
    let _ = writeln!(o, "name = {}", quote(&fis.name));
    let _ = writeln!(o, "and = \"min\"\naggregation = \"max\"\ndefuzzifier = \"centroid\"");
    let _ = writeln!(o, "resolution = {}", fis.resolution);
    let _ = writeln!(o, "normalized_inputs = {}", fis.normalized_inputs);
    let _ = writeln!(o, "rules = [");
    for r in &fis.rules {
        let _ = writeln!(o, "    {},", quote(&fis.format_rule(r)));
    }
    let _ = writeln!(o, "]");
    let var = |o: &mut String, header: &str, v: &LinguisticVariable| {
        let _ = writeln!(o, "\n{header}\nname = {}\nunits = {}", quote(&v.name), quote(&v.units));
        let _ = writeln!(o, "universe = [{:?}, {:?}]\nterms = [", v.universe.0, v.universe.1);
        for t in &v.terms {
            let params: Vec<String> = t.mf.thresholds().iter().map(|p| format!("{p:?}")).collect();
            let _ = writeln!(
                o,
                "    {{ label = {}, shape = \"{}\", params = [{}] }},",
                quote(&t.label),
                t.mf.shape_name(),
                params.join(", ")
            );
        }
        let _ = writeln!(o, "]");
    };
    for v in &fis.inputs {
        var(&mut o, "[[input]]", v);
    }
    var(&mut o, "[output]", &fis.output);
    o
}
