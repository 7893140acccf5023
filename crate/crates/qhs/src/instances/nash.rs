//! Verifiers for classical Nash equilibrium points and for their derivative
//! relaxation: points where every player's partial Clarke derivative is
//! nonnegative along admissible deviations. Every equilibrium point is a
//! derivative point, and the test suite exercises that implication.

use crate::error::{Error, Result};
use crate::geometry::ConvexSet;
use crate::nonsmooth::{partial_clarke_dd, ClarkeParams, ScalarFn};

fn validate_inputs(
    payoffs: &[ScalarFn],
    sets: &[ConvexSet],
    u0: &[f64],
    grids: &[Vec<Vec<f64>>],
) -> Result<Vec<usize>> {
    let n = payoffs.len();
    if n == 0 || sets.len() != n || grids.len() != n {
        return Err(Error::invalid(format!(
            "expected matching payoff/set/grid counts, got {}/{}/{}",
            n,
            sets.len(),
            grids.len()
        )));
    }
    let dims: Vec<usize> = sets.iter().map(|s| s.dim()).collect();
    for (i, f) in payoffs.iter().enumerate() {
        if f.input_dims() != dims.as_slice() {
            return Err(Error::invalid(format!(
                "payoff {i} must take the per-player blocks {dims:?}, got {:?}",
                f.input_dims()
            )));
        }
    }
    let total: usize = dims.iter().sum();
    if u0.len() != total {
        return Err(Error::dim("nash verify point", total, u0.len()));
    }
    let mut offset = 0usize;
    for (i, set) in sets.iter().enumerate() {
        if !set.contains(&u0[offset..offset + dims[i]], 1e-6)? {
            return Err(Error::invalid(format!("u0 is infeasible for player {i}")));
        }
        offset += dims[i];
    }
    for (i, grid) in grids.iter().enumerate() {
        if grid.is_empty() {
            return Err(Error::invalid(format!("empty deviation grid for player {i}")));
        }
        for v in grid {
            if v.len() != dims[i] {
                return Err(Error::dim("nash deviation", dims[i], v.len()));
            }
        }
    }
    Ok(dims)
}

/// True iff no sampled unilateral deviation lowers any player's payoff by
/// more than `tol`.
pub fn nash_eq_verify(
    payoffs: &[ScalarFn],
    sets: &[ConvexSet],
    u0: &[f64],
    grids: &[Vec<Vec<f64>>],
    tol: f64,
) -> Result<bool> {
    let dims = validate_inputs(payoffs, sets, u0, grids)?;
    let offsets: Vec<usize> = std::iter::once(0)
        .chain(dims.iter().scan(0, |acc, d| {
            *acc += d;
            Some(*acc)
        }))
        .collect();
    for (i, payoff) in payoffs.iter().enumerate() {
        let base = payoff.eval(u0)?;
        let mut point = u0.to_vec();
        for v in &grids[i] {
            point[offsets[i]..offsets[i] + dims[i]].copy_from_slice(v);
            if payoff.eval(&point)? < base - tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// True iff every sampled admissible direction has a nonnegative partial
/// Clarke derivative (within `tol`) for its player.
pub fn nash_gdp_verify(
    payoffs: &[ScalarFn],
    sets: &[ConvexSet],
    u0: &[f64],
    params: &ClarkeParams,
    grids: &[Vec<Vec<f64>>],
    tol: f64,
) -> Result<bool> {
    let dims = validate_inputs(payoffs, sets, u0, grids)?;
    let offsets: Vec<usize> = std::iter::once(0)
        .chain(dims.iter().scan(0, |acc, d| {
            *acc += d;
            Some(*acc)
        }))
        .collect();
    for (i, payoff) in payoffs.iter().enumerate() {
        for v in &grids[i] {
            let dir: Vec<f64> = v
                .iter()
                .zip(&u0[offsets[i]..offsets[i] + dims[i]])
                .map(|(a, b)| a - b)
                .collect();
            if partial_clarke_dd(payoff, i, u0, &dir, params)? < -tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
