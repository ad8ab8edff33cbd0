//! Probabilistic value-passing process terms and their operational semantics.

mod eval;
mod semantics;
mod syntax;

pub use eval::{eval_bool, eval_value, substitute, Binding};
pub use semantics::{derive_transitions, normalize, restriction_mass, unfold, Transition};
pub use syntax::{
    Action, BoolExpr, Branch, DefEnv, Definition, Prefix, ProcessExpr, Relabeling, Value, ValueExpr,
    CHOICE_SUM_HARD_LIMIT, CHOICE_SUM_TOLERANCE,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalculusError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("unknown process constant `{0}`")]
    UnknownConstant(String),
    #[error("constant `{name}` expects {expected} argument(s), got {got}")]
    Arity { name: String, expected: usize, got: usize },
    #[error("no value domain declared for input channel `{0}`")]
    UndeclaredDomain(String),
    #[error("choice probability {0} outside (0,1]")]
    ProbabilityRange(f64),
    #[error("choice probabilities sum to {0}, not 1")]
    ProbabilitySum(f64),
    #[error("relabelling is not a bijection on its channels")]
    NotBijective,
    #[error("unguarded recursion through `{0}`")]
    UnguardedRecursion(String),
    #[error("definition `{name}` has free variable `{var}`")]
    FreeVariable { name: String, var: String },
}
