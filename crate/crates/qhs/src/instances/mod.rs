//! Problem authoring: the expression language, the builtin registry,
//! equilibrium verifiers, and discretized integral couplings.

mod builtins;
mod expr;
mod integral;
mod nash;

pub use builtins::{builtin, Builtin, BOUNDED_BUILTIN_NAMES, BUILTIN_NAMES};
pub use expr::{parse_expr, CompiledExpr, Expr, Node};
pub use integral::{
    growth_check, inequality_i_gap, integral_functional, GrowthCheckReport, GrowthWitness,
    IntegralFunctional, QuadRule, QuadratureSpec,
};
pub use nash::{nash_eq_verify, nash_gdp_verify};
