use super::SolverConfig;
use crate::graph::SecModel;
use crate::scenario::PayoffPair;

/// A t-execution: a walk from `start` along `edges` that either closes a cycle
/// back to the source of `edges[k]` (`cycle_start = Some(k)`) or stops at a
/// vertex with no type-t edge (`None`).
#[derive(Clone, Debug, PartialEq)]
pub struct Execution {
    pub start: usize,
    pub edges: Vec<usize>,
    pub cycle_start: Option<usize>,
}

/// `PF(π) = r + β·p·PF(π[1])` for the execution, both coordinates.
pub fn execution_payoff(m: &SecModel, pi: &Execution, cfg: &SolverConfig) -> PayoffPair {
    let steps: Vec<(PayoffPair, f64)> =
        pi.edges.iter().map(|&e| (m.edges[e].label.weight, m.edges[e].label.tran_p)).collect();
    lasso_values(&steps, pi.cycle_start, cfg.beta).first().copied().unwrap_or(PayoffPair::ZERO)
}

/// Discounted payoffs at every position of a lasso given as `(weight, tran_p)`
/// steps.
///
/// On the cycle the values solve `V_j = r_j + β p_j V_{j+1}` with wrap-around,
/// whose solution at the cycle entry is
/// `Σ_j (Π_{l<j} βp_l) r_j / (1 − Π_l βp_l)`; the rest follows by
/// back-substitution. Without a cycle the value after the last step is 0.
pub fn lasso_values(steps: &[(PayoffPair, f64)], cycle_start: Option<usize>, beta: f64) -> Vec<PayoffPair> {
    chain_values(steps, cycle_start, beta, PayoffPair::ZERO)
}

/// As [`lasso_values`], with `end` as the value after the last step of an
/// acyclic walk.
pub(crate) fn chain_values(
    steps: &[(PayoffPair, f64)],
    cycle_start: Option<usize>,
    beta: f64,
    end: PayoffPair,
) -> Vec<PayoffPair> {
    let n = steps.len();
    let mut values = vec![PayoffPair::ZERO; n];
    let mut next = end;
    let tail_end = match cycle_start {
        Some(k) if k < n => {
            let mut factor = 1.0;
            let mut sum = PayoffPair::ZERO;
            for (r, p) in &steps[k..] {
                sum.user += factor * r.user;
                sum.defender += factor * r.defender;
                factor *= beta * p;
            }
            let entry = PayoffPair::new(sum.user / (1.0 - factor), sum.defender / (1.0 - factor));
            next = entry;
            for j in (k..n).rev() {
                let (r, p) = steps[j];
                values[j] = if j == k {
                    entry
                } else {
                    PayoffPair::new(r.user + beta * p * next.user, r.defender + beta * p * next.defender)
                };
                next = values[j];
            }
            k
        }
        _ => n,
    };
    for j in (0..tail_end).rev() {
        let (r, p) = steps[j];
        values[j] = PayoffPair::new(r.user + beta * p * next.user, r.defender + beta * p * next.defender);
        next = values[j];
    }
    values
}
