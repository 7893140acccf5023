//! The builtin problem registry: small fully-assembled systems chosen to
//! satisfy the existence hypotheses, used as ground truth throughout the
//! test and acceptance suites.

use crate::error::{Error, Result};
use crate::geometry::ConvexSet;
use crate::instances::expr::parse_expr;
use crate::instances::integral::{IntegralFunctional, QuadRule, QuadratureSpec};
use crate::nonsmooth::{ClarkeParams, ScalarFn};
use crate::solvers::TruncationSpec;
use crate::system::{LinearMap, QhsSystem, VectorField};

/// A registry entry: the system plus its truncation data when unbounded.
#[derive(Debug, Clone)]
pub struct Builtin {
    pub name: &'static str,
    pub system: QhsSystem,
    pub truncation: Option<TruncationSpec>,
}

pub const BUILTIN_NAMES: &[&str] = &[
    "bilinear_zero_sum",
    "quadratic_smooth",
    "absdiff_nonsmooth",
    "coercive_unbounded",
    "fj_system",
    "integral_obstacle",
];

/// The registry entries whose constraint sets are all bounded.
pub const BOUNDED_BUILTIN_NAMES: &[&str] = &[
    "bilinear_zero_sum",
    "quadratic_smooth",
    "absdiff_nonsmooth",
    "fj_system",
    "integral_obstacle",
];

fn unit_box() -> ConvexSet {
    ConvexSet::new_box(vec![-1.0], vec![1.0]).unwrap()
}

fn two_player(a1: ScalarFn, a2: ScalarFn, f: Option<Vec<VectorField>>, j: Option<ScalarFn>) -> Result<QhsSystem> {
    QhsSystem::new(
        vec![unit_box(), unit_box()],
        vec![LinearMap::identity(1), LinearMap::identity(1)],
        vec![LinearMap::identity(1), LinearMap::identity(1)],
        vec![a1, a2],
        f,
        j,
        ClarkeParams::default(),
    )
}

fn expr_payoff(text: &str, regular: bool) -> Result<ScalarFn> {
    Ok(parse_expr(text, 2)?
        .to_scalar_fn(vec![1, 1])?
        .with_regular(regular))
}

/// Look up a builtin instance by name.
pub fn builtin(name: &str) -> Result<Builtin> {
    match name {
        "bilinear_zero_sum" => Ok(Builtin {
            name: "bilinear_zero_sum",
            system: two_player(
                expr_payoff("x1*x2", false)?,
                expr_payoff("-(x1*x2)", false)?,
                None,
                None,
            )?,
            truncation: None,
        }),
        "quadratic_smooth" => {
            let a1 = expr_payoff("(x1 - x2)^2", true)?
                .with_analytic_dd(|u, v| 2.0 * (u[0] - u[1]) * (v[0] - v[1]));
            let a2 = expr_payoff("(x1 + x2)^2", true)?
                .with_analytic_dd(|u, v| 2.0 * (u[0] + u[1]) * (v[0] + v[1]));
            Ok(Builtin {
                name: "quadratic_smooth",
                system: two_player(a1, a2, None, None)?,
                truncation: None,
            })
        }
        "absdiff_nonsmooth" => Ok(Builtin {
            name: "absdiff_nonsmooth",
            system: two_player(
                expr_payoff("abs(x1 - x2)", true)?,
                expr_payoff("abs(x1 + x2)", true)?,
                None,
                None,
            )?,
            truncation: None,
        }),
        "coercive_unbounded" => {
            let a = parse_expr("x1^2", 1)?
                .to_scalar_fn(vec![1])?
                .with_regular(true);
            let system = QhsSystem::new(
                vec![ConvexSet::new_box(vec![f64::NEG_INFINITY], vec![f64::INFINITY]).unwrap()],
                vec![LinearMap::identity(1)],
                vec![LinearMap::identity(1)],
                vec![a],
                None,
                None,
                ClarkeParams::default(),
            )?;
            let truncation = TruncationSpec::new(
                vec![ConvexSet::new_box(vec![-1.0], vec![1.0]).unwrap()],
                vec![0.0],
                vec![2.5, 5.0, 10.0],
            )?;
            Ok(Builtin {
                name: "coercive_unbounded",
                system,
                truncation: Some(truncation),
            })
        }
        "fj_system" => {
            let a1 = ScalarFn::constant(vec![1, 1], 0.0).with_regular(true);
            let a2 = ScalarFn::constant(vec![1, 1], 0.0).with_regular(true);
            let f = vec![
                VectorField::new(1, |u: &[f64]| vec![u[0]]),
                VectorField::new(1, |u: &[f64]| vec![u[1]]),
            ];
            let j = parse_expr("abs(x1) + abs(x2)", 2)?
                .to_scalar_fn(vec![1, 1])?
                .with_regular(true);
            Ok(Builtin {
                name: "fj_system",
                system: two_player(a1, a2, Some(f), Some(j))?,
                truncation: None,
            })
        }
        "integral_obstacle" => {
            let quad = QuadratureSpec::new(0.0, 1.0, 4, QuadRule::Midpoint)?;
            // Strategies are affine coefficient vectors (c0, c1); the
            // coupling samples c0 + c1 x at the quadrature nodes.
            let node_map = quad.node_eval_map(2)?;
            let j = IntegralFunctional::new(
                parse_expr("abs(x2)", 2)?,
                quad,
                vec![node_map.clone()],
                true,
            )?
            .scalar_fn();
            let a = ScalarFn::constant(vec![2], 0.0).with_regular(true);
            let f = vec![VectorField::new(2, |u: &[f64]| u.to_vec())];
            let system = QhsSystem::new(
                vec![ConvexSet::new_box(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap()],
                vec![LinearMap::identity(2)],
                vec![node_map],
                vec![a],
                Some(f),
                Some(j),
                ClarkeParams::default(),
            )?;
            Ok(Builtin {
                name: "integral_obstacle",
                system,
                truncation: None,
            })
        }
        other => Err(Error::invalid(format!(
            "unknown builtin `{other}`; available: {BUILTIN_NAMES:?}"
        ))),
    }
}
