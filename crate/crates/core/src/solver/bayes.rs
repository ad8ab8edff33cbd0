use super::SolverError;
use crate::graph::SecModel;
use crate::scenario::Scenario;

/// What the defender knows about user types.
pub trait Beliefs {
    fn types(&self) -> Vec<String>;
    /// `q(t)`.
    fn prior(&self, t: &str) -> f64;
    /// `p(u∣t)` at state `s`.
    fn likelihood(&self, s: &str, t: &str, u: &str) -> f64;
    /// `ḟ^d(s,t,u,v)`.
    fn defender_payoff(&self, s: &str, t: &str, u: &str, v: &str) -> f64;
}

impl Beliefs for Scenario {
    fn types(&self) -> Vec<String> {
        self.type_ids()
    }

    fn prior(&self, t: &str) -> f64 {
        Scenario::prior(self, t).unwrap_or(0.0)
    }

    fn likelihood(&self, s: &str, t: &str, u: &str) -> f64 {
        Scenario::likelihood(self, s, t, u)
    }

    /// Pairs without a payoff entry are worth 0, as in the instantiated templates.
    fn defender_payoff(&self, s: &str, t: &str, u: &str, v: &str) -> f64 {
        self.payoff(s, t, u, v).map_or(0.0, |w| w.defender)
    }
}

/// `δ(t∣u) = p(u∣t)·q(t) / Σ_t′ p(u∣t′)·q(t′)` for every type, at state `s`.
pub fn posterior(b: &impl Beliefs, s: &str, u: &str) -> Result<Vec<(String, f64)>, SolverError> {
    let joint: Vec<(String, f64)> = b
        .types()
        .into_iter()
        .map(|t| {
            let w = b.likelihood(s, &t, u) * b.prior(&t);
            (t, w)
        })
        .collect();
    let total: f64 = joint.iter().map(|(_, w)| w).sum();
    if total <= 0.0 {
        return Err(SolverError::ZeroPosterior { state: s.to_string(), user: u.to_string() });
    }
    Ok(joint.into_iter().map(|(t, w)| (t, w / total)).collect())
}

pub fn bay_exp(m: &SecModel, sc: &Scenario) -> Result<SecModel, SolverError> {
    bay_exp_with(m, sc)
}

/// Replaces each edge's defender weight by `Σ_t δ(t∣u)·ḟ^d(s,t,u,v)`, the
/// defender's expected payoff having observed `u`. User weights are kept.
pub fn bay_exp_with(m: &SecModel, b: &impl Beliefs) -> Result<SecModel, SolverError> {
    let mut out = m.clone();
    for e in &mut out.edges {
        let s = &m.vertices[e.source].id;
        let post = posterior(b, s, &e.label.user)?;
        e.label.weight.defender = post
            .iter()
            .filter(|(_, d)| *d > 0.0)
            .map(|(t, d)| d * b.defender_payoff(s, t, &e.label.user, &e.label.defender))
            .sum();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_types(l1: f64, l2: f64, d1: f64, d2: f64) -> Scenario {
        // Type t1 has a second action so that per-state normalization keeps l1.
        let json = format!(
            r#"{{
            "types": [{{"id": "t1", "prior": 0.5}}, {{"id": "t2", "prior": 0.5}}],
            "states": ["s"],
            "user_actions": {{"s": {{"t1": ["u", "w"], "t2": ["u", "w"]}}}},
            "defender_actions": {{"s": ["v"]}},
            "transitions": [
                {{"s": "s", "t": "t1", "u": "u", "v": "v", "s2": "s", "p": 1}},
                {{"s": "s", "t": "t2", "u": "u", "v": "v", "s2": "s", "p": 1}}
            ],
            "payoffs": [
                {{"s": "s", "t": "t1", "u": "u", "v": "v", "ru": 1, "rd": {d1}}},
                {{"s": "s", "t": "t2", "u": "u", "v": "v", "ru": 1, "rd": {d2}}}
            ],
            "likelihoods": [
                {{"u": "u", "t": "t1", "p": {l1}}}, {{"u": "w", "t": "t1", "p": {}}},
                {{"u": "u", "t": "t2", "p": {l2}}}, {{"u": "w", "t": "t2", "p": {}}}
            ]
        }}"#,
            1.0 - l1,
            1.0 - l2
        );
        Scenario::from_json(&json).unwrap()
    }

    #[test]
    fn single_type_posterior_is_one() {
        let sc = Scenario::from_json(
            r#"{"types": [{"id": "t", "prior": 1}], "states": ["s"],
                "user_actions": {"s": {"t": ["u"]}}, "defender_actions": {"s": ["v"]}}"#,
        )
        .unwrap();
        assert_eq!(posterior(&sc, "s", "u").unwrap(), vec![("t".to_string(), 1.0)]);
    }

    #[test]
    fn uniform_posterior_averages() {
        let sc = two_types(1.0, 1.0, -4.0, -6.0);
        let post = posterior(&sc, "s", "u").unwrap();
        assert_eq!(post, vec![("t1".into(), 0.5), ("t2".into(), 0.5)]);
        let expected: f64 = post.iter().zip([-4.0, -6.0]).map(|((_, d), f)| d * f).sum();
        assert_eq!(expected, -5.0);
    }

    #[test]
    fn skewed_likelihood() {
        let sc = two_types(0.8, 0.2, 10.0, 0.0);
        let post = posterior(&sc, "s", "u").unwrap();
        assert!((post[0].1 - 0.8).abs() < 1e-15);
        let total: f64 = post.iter().map(|(_, d)| d).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn impossible_action_is_an_error() {
        let sc = two_types(1.0, 1.0, 0.0, 0.0);
        let err = posterior(&sc, "s", "w").unwrap_err();
        assert_eq!(err, SolverError::ZeroPosterior { state: "s".into(), user: "w".into() });
    }
}
