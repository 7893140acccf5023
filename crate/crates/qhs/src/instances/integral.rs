//! Discretized integral couplings `J(z) = sum_k w_k j(x_k, z_1[k], ..., z_n[k])`
//! built from a 1-D quadrature rule, plus the pointwise-vs-functional
//! derivative inequality and the subgradient growth check on integrands.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::expr::Expr;
use crate::nonsmooth::{partial_clarke_dd, ClarkeParams, ScalarFn};
use crate::system::LinearMap;

/// Largest supported player count for integrands (stack-allocated args).
const MAX_PLAYERS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadRule {
    Midpoint,
    Trapezoid,
}

/// A 1-D quadrature rule on `[a, b]` with positive weights summing to the
/// interval length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub a: f64,
    pub b: f64,
    pub nodes: usize,
    pub rule: QuadRule,
}

impl QuadratureSpec {
    pub fn new(a: f64, b: f64, nodes: usize, rule: QuadRule) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::invalid(format!("quadrature domain must satisfy a < b, got [{a}, {b}]")));
        }
        if nodes == 0 || (rule == QuadRule::Trapezoid && nodes < 2) {
            return Err(Error::invalid("quadrature needs at least one node (two for trapezoid)"));
        }
        Ok(QuadratureSpec { a, b, nodes, rule })
    }

    pub fn points(&self) -> Vec<f64> {
        let m = self.nodes;
        match self.rule {
            QuadRule::Midpoint => {
                let h = (self.b - self.a) / m as f64;
                (0..m).map(|k| self.a + h * (k as f64 + 0.5)).collect()
            }
            QuadRule::Trapezoid => {
                let h = (self.b - self.a) / (m - 1) as f64;
                (0..m).map(|k| self.a + h * k as f64).collect()
            }
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        let m = self.nodes;
        match self.rule {
            QuadRule::Midpoint => vec![(self.b - self.a) / m as f64; m],
            QuadRule::Trapezoid => {
                let h = (self.b - self.a) / (m - 1) as f64;
                (0..m)
                    .map(|k| if k == 0 || k + 1 == m { 0.5 * h } else { h })
                    .collect()
            }
        }
    }

    /// The node-evaluation matrix for a monomial parameterization: row `k`
    /// is `(1, x_k, x_k^2, ...)` with `basis_dim` columns. Composing it
    /// with a coefficient vector samples the parameterized function at the
    /// quadrature nodes, realizing the coupling as a finite-rank operator.
    pub fn node_eval_map(&self, basis_dim: usize) -> Result<LinearMap> {
        if basis_dim == 0 {
            return Err(Error::invalid("node evaluation map needs basis_dim >= 1"));
        }
        let points = self.points();
        let mut data = Vec::with_capacity(points.len() * basis_dim);
        for &x in &points {
            let mut pow = 1.0;
            for _ in 0..basis_dim {
                data.push(pow);
                pow *= x;
            }
        }
        LinearMap::new(points.len(), basis_dim, data)
    }
}

/// An integrand `j(x, y_1, ..., y_n)` discretized over a quadrature rule,
/// with the per-player node-evaluation maps that realize the couplings.
#[derive(Debug, Clone)]
pub struct IntegralFunctional {
    integrand: Expr,
    quad: QuadratureSpec,
    node_maps: Vec<LinearMap>,
    claims_regular: bool,
}

impl IntegralFunctional {
    pub fn new(
        integrand: Expr,
        quad: QuadratureSpec,
        node_maps: Vec<LinearMap>,
        claims_regular: bool,
    ) -> Result<Self> {
        let n = node_maps.len();
        if n == 0 || n > MAX_PLAYERS {
            return Err(Error::invalid(format!(
                "integral functional supports 1..={MAX_PLAYERS} players, got {n}"
            )));
        }
        if integrand.arity() != 1 + n {
            return Err(Error::dim("integrand arity", 1 + n, integrand.arity()));
        }
        for (i, map) in node_maps.iter().enumerate() {
            if map.rows() != quad.nodes {
                return Err(Error::dim("node map rows", quad.nodes, node_maps[i].rows()));
            }
        }
        Ok(IntegralFunctional {
            integrand,
            quad,
            node_maps,
            claims_regular,
        })
    }

    pub fn integrand(&self) -> &Expr {
        &self.integrand
    }

    pub fn quad(&self) -> &QuadratureSpec {
        &self.quad
    }

    pub fn node_maps(&self) -> &[LinearMap] {
        &self.node_maps
    }

    pub fn players(&self) -> usize {
        self.node_maps.len()
    }

    /// The weighted quadrature sum as a function of the node values, one
    /// block of `nodes` values per player.
    pub fn scalar_fn(&self) -> ScalarFn {
        let prog = self.integrand.compile();
        let points = self.quad.points();
        let weights = self.quad.weights();
        let n = self.players();
        let m = self.quad.nodes;
        ScalarFn::new(vec![m; n], move |z| {
            let mut args = [0.0f64; MAX_PLAYERS + 1];
            let mut total = 0.0;
            for k in 0..m {
                args[0] = points[k];
                for i in 0..n {
                    args[1 + i] = z[i * m + k];
                }
                total += weights[k] * prog.eval_raw(&args[..1 + n]);
            }
            total
        })
        .with_regular(self.claims_regular)
    }

    /// The pointwise section `y -> j(x_k, y)` at node `k`.
    fn section(&self, k: usize) -> ScalarFn {
        let prog = self.integrand.compile();
        let x = self.quad.points()[k];
        let n = self.players();
        ScalarFn::new(vec![1; n], move |y| {
            let mut args = [0.0f64; MAX_PLAYERS + 1];
            args[0] = x;
            args[1..1 + n].copy_from_slice(y);
            prog.eval_raw(&args[..1 + n])
        })
        .with_regular(self.claims_regular)
    }
}

/// Thin functional constructor mirroring the discretization contract.
pub fn integral_functional(
    integrand: &Expr,
    quad: &QuadratureSpec,
    node_maps: &[LinearMap],
    claims_regular: bool,
) -> Result<ScalarFn> {
    IntegralFunctional::new(integrand.clone(), *quad, node_maps.to_vec(), claims_regular)
        .map(|f| f.scalar_fn())
}

/// Slack of the derivative interchange inequality
/// `J_i°(z; h) <= sum_k w_k j_i°(x_k, z[., k]; h[k])`:
/// returns `RHS - LHS`, which must be `>= -eps` at estimator precision.
///
/// `z` collects the node values of all players, `dir` the node values of
/// the deviation for player `block`. The two routes are independent: the
/// left side estimates the derivative of the assembled functional, the
/// right side sums pointwise estimates of the integrand sections.
pub fn inequality_i_gap(
    functional: &IntegralFunctional,
    z: &[f64],
    block: usize,
    dir: &[f64],
    params: &ClarkeParams,
) -> Result<f64> {
    let m = functional.quad.nodes;
    let n = functional.players();
    if z.len() != m * n {
        return Err(Error::dim("inequality_i_gap point", m * n, z.len()));
    }
    if dir.len() != m {
        return Err(Error::dim("inequality_i_gap direction", m, dir.len()));
    }
    if block >= n {
        return Err(Error::invalid(format!("block {block} out of range for {n} players")));
    }
    let j_fn = functional.scalar_fn();
    let lhs = partial_clarke_dd(&j_fn, block, z, dir, params)?;
    let weights = functional.quad.weights();
    let mut rhs = 0.0;
    for k in 0..m {
        let section = functional.section(k);
        let y: Vec<f64> = (0..n).map(|i| z[i * m + k]).collect();
        rhs += weights[k] * partial_clarke_dd(&section, block, &y, &[dir[k]], params)?;
    }
    Ok(rhs - lhs)
}

/// One offending sample of the growth check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthWitness {
    pub x: f64,
    pub y: Vec<f64>,
    pub block: usize,
    pub derivative: f64,
    pub bound: f64,
}

/// Outcome of sampling the directional-derivative growth bound
/// `|j_i°(x, y; ±1)| <= h1(x) + h2(x) |y|^(p-1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthCheckReport {
    pub samples: usize,
    pub violations: usize,
    /// Largest observed `|derivative| - bound` (<= tolerance when passing).
    pub worst_margin: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub witness: Option<GrowthWitness>,
}

/// Estimator slack allowed on the growth bound.
const GROWTH_TOL: f64 = 0.1;

/// Check the growth bound on sampled `(x_k, y)` pairs and unit directions
/// `±e_i` in every player block.
pub fn growth_check(
    integrand: &Expr,
    h1: &Expr,
    h2: &Expr,
    p: f64,
    quad: &QuadratureSpec,
    samples: usize,
    seed: u64,
) -> Result<GrowthCheckReport> {
    if !(p > 1.0) {
        return Err(Error::invalid(format!("growth exponent must satisfy p > 1, got {p}")));
    }
    if integrand.arity() < 2 {
        return Err(Error::invalid("integrand must have arity 1 + n with n >= 1"));
    }
    let n = integrand.arity() - 1;
    if h1.arity() != 1 || h2.arity() != 1 {
        return Err(Error::invalid("h1 and h2 must be functions of x alone"));
    }
    let functional = IntegralFunctional::new(
        integrand.clone(),
        *quad,
        vec![LinearMap::identity(quad.nodes); n],
        false,
    )?;
    let params = ClarkeParams::default();
    let points = quad.points();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0usize;
    let mut worst_margin = f64::NEG_INFINITY;
    let mut witness = None;
    for _ in 0..samples {
        let k = rng.random_range(0..points.len());
        let x = points[k];
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let bound = h1.eval(&[x])? + h2.eval(&[x])? * y_norm.powf(p - 1.0);
        let section = functional.section(k);
        for block in 0..n {
            for dir in [1.0, -1.0] {
                let d = partial_clarke_dd(&section, block, &y, &[dir], &params)?;
                let margin = d.abs() - bound;
                if margin > worst_margin {
                    worst_margin = margin;
                    if margin > GROWTH_TOL {
                        witness = Some(GrowthWitness {
                            x,
                            y: y.clone(),
                            block,
                            derivative: d,
                            bound,
                        });
                    }
                }
                if margin > GROWTH_TOL {
                    violations += 1;
                }
            }
        }
    }
    Ok(GrowthCheckReport {
        samples,
        violations,
        worst_margin,
        tolerance: GROWTH_TOL,
        pass: violations == 0,
        witness,
    })
}
