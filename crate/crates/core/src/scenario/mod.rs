//! Security scenarios: types, states, action sets, transition and payoff tables.
//!
//! A [`Scenario`] is always validated. It is built from a [`ScenarioDoc`], the
//! serde image of the JSON file format, by [`Scenario::new`] or
//! [`load_scenario`].

mod templates;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use templates::{
    absorb_name, channels, g_name, instantiate_all, instantiate_processes, marker_terms, type_tag, Instantiation,
    ABSORB_VERTEX, ACES, DEFD, LOG, REC, TELL_D, TELL_U,
};

/// Tolerance on probability sums (priors, transition rows).
pub const SUM_TOLERANCE: f64 = 1e-9;

/// `(s, t, u, v)`.
pub type InteractionKey = (String, String, String, String);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PayoffPair {
    pub user: f64,
    pub defender: f64,
}

impl PayoffPair {
    pub const ZERO: PayoffPair = PayoffPair { user: 0.0, defender: 0.0 };

    pub fn new(user: f64, defender: f64) -> Self {
        PayoffPair { user, defender }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypeDoc {
    pub id: String,
    pub prior: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionDoc {
    pub s: String,
    pub t: String,
    pub u: String,
    pub v: String,
    pub s2: String,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayoffDoc {
    pub s: String,
    pub t: String,
    pub u: String,
    pub v: String,
    pub ru: f64,
    pub rd: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LikelihoodDoc {
    pub u: String,
    pub t: String,
    pub p: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioOptions {
    #[serde(default)]
    pub absorb_missing: bool,
}

/// The scenario file format.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    #[serde(default)]
    pub types: Vec<TypeDoc>,
    #[serde(default)]
    pub states: Vec<String>,
    /// state → type → actions
    #[serde(default)]
    pub user_actions: BTreeMap<String, BTreeMap<String, Vec<String>>>,
    /// state → actions
    #[serde(default)]
    pub defender_actions: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub transitions: Vec<TransitionDoc>,
    #[serde(default)]
    pub payoffs: Vec<PayoffDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub likelihoods: Option<Vec<LikelihoodDoc>>,
    #[serde(default)]
    pub options: ScenarioOptions,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed scenario at line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
    #[error("scenario declares no {0}")]
    Empty(&'static str),
    #[error("type priors sum to {0}")]
    PriorSum(f64),
    #[error("transition row {key}: probabilities sum to {sum}")]
    RowSum { key: String, sum: f64 },
    #[error("{context}: unknown state `{id}`")]
    UnknownState { context: String, id: String },
    #[error("{context}: unknown type `{id}`")]
    UnknownType { context: String, id: String },
    #[error("{context}: `{id}` is not an available action")]
    UnknownAction { context: String, id: String },
    #[error("{context}: {value} is not a valid probability")]
    Probability { context: String, value: f64 },
    #[error("{context}: payoff is not finite")]
    NonFinite { context: String },
    #[error("{context}: duplicate entry")]
    Duplicate { context: String },
}

/// A validated scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    types: Vec<TypeDoc>,
    states: Vec<String>,
    user_actions: BTreeMap<(String, String), Vec<String>>,
    defender_actions: BTreeMap<String, Vec<String>>,
    transitions: BTreeMap<InteractionKey, Vec<(String, f64)>>,
    payoffs: BTreeMap<InteractionKey, PayoffPair>,
    likelihoods: Option<BTreeMap<(String, String), f64>>,
    options: ScenarioOptions,
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
    Scenario::from_json(&text)
}

fn key_text(k: &InteractionKey) -> String {
    format!("({},{},{},{})", k.0, k.1, k.2, k.3)
}

fn check_unique(ids: &[String], context: &str) -> Result<(), ScenarioError> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(ScenarioError::Duplicate { context: format!("{context} `{id}`") });
        }
    }
    Ok(())
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let doc: ScenarioDoc = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        })?;
        Scenario::new(doc)
    }

    pub fn new(doc: ScenarioDoc) -> Result<Self, ScenarioError> {
        if doc.types.is_empty() {
            return Err(ScenarioError::Empty("types"));
        }
        if doc.states.is_empty() {
            return Err(ScenarioError::Empty("states"));
        }
        check_unique(&doc.states, "state")?;
        let type_ids: Vec<String> = doc.types.iter().map(|t| t.id.clone()).collect();
        check_unique(&type_ids, "type")?;
        for t in &doc.types {
            if !(t.prior.is_finite() && (0.0..=1.0).contains(&t.prior)) {
                return Err(ScenarioError::Probability {
                    context: format!("prior of type `{}`", t.id),
                    value: t.prior,
                });
            }
        }
        let prior_sum: f64 = doc.types.iter().map(|t| t.prior).sum();
        if (prior_sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(ScenarioError::PriorSum(prior_sum));
        }

        let states: BTreeSet<&String> = doc.states.iter().collect();
        let types: BTreeSet<&String> = type_ids.iter().collect();
        let need_state = |id: &String, context: &str| {
            if states.contains(id) {
                Ok(())
            } else {
                Err(ScenarioError::UnknownState { context: context.to_string(), id: id.clone() })
            }
        };
        let need_type = |id: &String, context: &str| {
            if types.contains(id) {
                Ok(())
            } else {
                Err(ScenarioError::UnknownType { context: context.to_string(), id: id.clone() })
            }
        };

        let mut user_actions = BTreeMap::new();
        for (s, per_type) in &doc.user_actions {
            need_state(s, "user_actions")?;
            for (t, acts) in per_type {
                need_type(t, &format!("user_actions.{s}"))?;
                check_unique(acts, &format!("user_actions.{s}.{t}"))?;
                user_actions.insert((s.clone(), t.clone()), acts.clone());
            }
        }
        let mut defender_actions = BTreeMap::new();
        for (s, acts) in &doc.defender_actions {
            need_state(s, "defender_actions")?;
            check_unique(acts, &format!("defender_actions.{s}"))?;
            defender_actions.insert(s.clone(), acts.clone());
        }

        let has_user = |s: &str, t: &str, u: &str| {
            user_actions.get(&(s.to_string(), t.to_string())).is_some_and(|a: &Vec<String>| a.iter().any(|x| x == u))
        };
        let has_defender =
            |s: &str, v: &str| defender_actions.get(s).is_some_and(|a: &Vec<String>| a.iter().any(|x| x == v));
        let check_key = |k: &InteractionKey, context: &str| -> Result<(), ScenarioError> {
            need_state(&k.0, context)?;
            need_type(&k.1, context)?;
            if !has_user(&k.0, &k.1, &k.2) {
                return Err(ScenarioError::UnknownAction { context: context.to_string(), id: k.2.clone() });
            }
            if !has_defender(&k.0, &k.3) {
                return Err(ScenarioError::UnknownAction { context: context.to_string(), id: k.3.clone() });
            }
            Ok(())
        };

        let mut transitions: BTreeMap<InteractionKey, Vec<(String, f64)>> = BTreeMap::new();
        for (i, row) in doc.transitions.iter().enumerate() {
            let key = (row.s.clone(), row.t.clone(), row.u.clone(), row.v.clone());
            let context = format!("transitions[{i}] {}", key_text(&key));
            check_key(&key, &context)?;
            need_state(&row.s2, &context)?;
            if !(row.p.is_finite() && row.p > 0.0 && row.p <= 1.0 + SUM_TOLERANCE) {
                return Err(ScenarioError::Probability { context, value: row.p });
            }
            let targets = transitions.entry(key).or_default();
            if targets.iter().any(|(s2, _)| s2 == &row.s2) {
                return Err(ScenarioError::Duplicate { context: format!("{context} -> {}", row.s2) });
            }
            targets.push((row.s2.clone(), row.p));
        }
        for (key, targets) in &transitions {
            let sum: f64 = targets.iter().map(|(_, p)| p).sum();
            if (sum - 1.0).abs() > SUM_TOLERANCE {
                return Err(ScenarioError::RowSum { key: key_text(key), sum });
            }
        }

        let mut payoffs = BTreeMap::new();
        for (i, row) in doc.payoffs.iter().enumerate() {
            let key = (row.s.clone(), row.t.clone(), row.u.clone(), row.v.clone());
            let context = format!("payoffs[{i}] {}", key_text(&key));
            check_key(&key, &context)?;
            if !(row.ru.is_finite() && row.rd.is_finite()) {
                return Err(ScenarioError::NonFinite { context });
            }
            if payoffs.insert(key, PayoffPair::new(row.ru, row.rd)).is_some() {
                return Err(ScenarioError::Duplicate { context });
            }
        }

        let likelihoods = match &doc.likelihoods {
            None => None,
            Some(rows) => {
                let mut map = BTreeMap::new();
                for (i, row) in rows.iter().enumerate() {
                    let context = format!("likelihoods[{i}] ({},{})", row.u, row.t);
                    need_type(&row.t, &context)?;
                    let known = user_actions.iter().any(|((_, t), acts)| t == &row.t && acts.contains(&row.u));
                    if !known {
                        return Err(ScenarioError::UnknownAction { context, id: row.u.clone() });
                    }
                    if !(row.p.is_finite() && row.p >= 0.0) {
                        return Err(ScenarioError::Probability { context, value: row.p });
                    }
                    if map.insert((row.u.clone(), row.t.clone()), row.p).is_some() {
                        return Err(ScenarioError::Duplicate { context });
                    }
                }
                Some(map)
            }
        };

        Ok(Scenario {
            types: doc.types,
            states: doc.states,
            user_actions,
            defender_actions,
            transitions,
            payoffs,
            likelihoods,
            options: doc.options,
        })
    }

    pub fn types(&self) -> impl Iterator<Item = (&str, f64)> {
        self.types.iter().map(|t| (t.id.as_str(), t.prior))
    }

    pub fn type_ids(&self) -> Vec<String> {
        self.types.iter().map(|t| t.id.clone()).collect()
    }

    pub fn prior(&self, t: &str) -> Option<f64> {
        self.types.iter().find(|x| x.id == t).map(|x| x.prior)
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn has_state(&self, s: &str) -> bool {
        self.states.iter().any(|x| x == s)
    }

    /// `A^u(s,t)`; empty when undeclared.
    pub fn user_actions(&self, s: &str, t: &str) -> &[String] {
        self.user_actions.get(&(s.to_string(), t.to_string())).map(Vec::as_slice).unwrap_or(&[])
    }

    /// `A^d(s)`; empty when undeclared.
    pub fn defender_actions(&self, s: &str) -> &[String] {
        self.defender_actions.get(s).map(Vec::as_slice).unwrap_or(&[])
    }

    /// `ṗ(s,t,u,v,·)` in document order, or `None` when no row exists.
    pub fn transition_row(&self, s: &str, t: &str, u: &str, v: &str) -> Option<&[(String, f64)]> {
        self.transitions.get(&(s.to_string(), t.to_string(), u.to_string(), v.to_string())).map(Vec::as_slice)
    }

    pub fn payoff(&self, s: &str, t: &str, u: &str, v: &str) -> Option<PayoffPair> {
        self.payoffs.get(&(s.to_string(), t.to_string(), u.to_string(), v.to_string())).copied()
    }

    /// `p(u∣t)` at state `s`, normalized over `A^u(s,t)`. Uniform when the
    /// scenario gives no likelihoods; 0 when `u ∉ A^u(s,t)`.
    pub fn likelihood(&self, s: &str, t: &str, u: &str) -> f64 {
        let acts = self.user_actions(s, t);
        if !acts.iter().any(|a| a == u) {
            return 0.0;
        }
        match &self.likelihoods {
            None => 1.0 / acts.len() as f64,
            Some(map) => {
                let raw = |a: &str| map.get(&(a.to_string(), t.to_string())).copied().unwrap_or(0.0);
                let total: f64 = acts.iter().map(|a| raw(a)).sum();
                if total > 0.0 {
                    raw(u) / total
                } else {
                    0.0
                }
            }
        }
    }

    pub fn absorb_missing(&self) -> bool {
        self.options.absorb_missing
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.values().map(Vec::len).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> ScenarioDoc {
        serde_json::from_str(
            r#"{
            "types": [{"id": "t", "prior": 1.0}],
            "states": ["s1"],
            "user_actions": {"s1": {"t": ["a", "b"]}},
            "defender_actions": {"s1": ["x"]},
            "transitions": [{"s": "s1", "t": "t", "u": "a", "v": "x", "s2": "s1", "p": 1.0}],
            "payoffs": [{"s": "s1", "t": "t", "u": "a", "v": "x", "ru": 10, "rd": -10}]
        }"#,
        )
        .unwrap()
    }

    #[test]
    fn loads_minimal_document() {
        let sc = Scenario::new(minimal()).unwrap();
        assert_eq!(sc.states(), ["s1".to_string()]);
        assert_eq!(sc.prior("t"), Some(1.0));
        assert_eq!(sc.transition_row("s1", "t", "a", "x").unwrap(), [("s1".to_string(), 1.0)]);
        assert_eq!(sc.payoff("s1", "t", "a", "x"), Some(PayoffPair::new(10.0, -10.0)));
        assert!(!sc.absorb_missing());
    }

    #[test]
    fn prior_sum_error_names_total() {
        let mut doc = minimal();
        doc.types = vec![TypeDoc { id: "t".into(), prior: 0.6 }, TypeDoc { id: "w".into(), prior: 0.5 }];
        let err = Scenario::new(doc).unwrap_err();
        assert_eq!(err.to_string(), "type priors sum to 1.1");
    }

    #[test]
    fn likelihood_defaults_to_uniform() {
        let sc = Scenario::new(minimal()).unwrap();
        assert_eq!(sc.likelihood("s1", "t", "a"), 0.5);
        assert_eq!(sc.likelihood("s1", "t", "b"), 0.5);
        assert_eq!(sc.likelihood("s1", "t", "zzz"), 0.0);
    }

    #[test]
    fn explicit_likelihoods_normalize_per_state() {
        let mut doc = minimal();
        doc.likelihoods = Some(vec![
            LikelihoodDoc { u: "a".into(), t: "t".into(), p: 3.0 },
            LikelihoodDoc { u: "b".into(), t: "t".into(), p: 1.0 },
        ]);
        let sc = Scenario::new(doc).unwrap();
        assert_eq!(sc.likelihood("s1", "t", "a"), 0.75);
    }

    #[test]
    fn row_sum_violation_names_row() {
        let mut doc = minimal();
        doc.transitions[0].p = 0.7;
        let err = Scenario::new(doc).unwrap_err();
        assert!(matches!(err, ScenarioError::RowSum { .. }));
        assert!(err.to_string().contains("(s1,t,a,x)"));
    }

    #[test]
    fn dangling_references_are_rejected() {
        let mut doc = minimal();
        doc.transitions[0].s2 = "nowhere".into();
        assert!(matches!(Scenario::new(doc).unwrap_err(), ScenarioError::UnknownState { .. }));

        let mut doc = minimal();
        doc.payoffs[0].v = "y".into();
        assert!(matches!(Scenario::new(doc).unwrap_err(), ScenarioError::UnknownAction { .. }));

        let mut doc = minimal();
        doc.payoffs[0].t = "ghost".into();
        assert!(matches!(Scenario::new(doc).unwrap_err(), ScenarioError::UnknownType { .. }));
    }

    #[test]
    fn empty_document_is_rejected() {
        let err = Scenario::from_json("{}").unwrap_err();
        assert_eq!(err.to_string(), "scenario declares no types");
    }

    #[test]
    fn parse_error_carries_position() {
        let err = Scenario::from_json("{\n  \"types\": [ }").unwrap_err();
        assert!(matches!(err, ScenarioError::Parse { line: 2, .. }));
    }

    #[test]
    fn non_finite_payoff_is_rejected() {
        let mut doc = minimal();
        doc.payoffs[0].ru = f64::INFINITY;
        assert!(matches!(Scenario::new(doc).unwrap_err(), ScenarioError::NonFinite { .. }));
    }
}
