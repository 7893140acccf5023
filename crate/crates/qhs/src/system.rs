//! The n-player problem object and its inequality residuals.
//!
//! A system holds per-player constraint sets `K_i`, linear couplings
//! `T_i: X_i -> Y_i` and `S_i: X_i -> Z_i`, payoffs `A_i` over the `Y`
//! product, an optional vector field family `F_i`, and an optional regular
//! coupling `J` over the `Z` product. A point `u` solves the system when for
//! every player `i` and every admissible deviation `v_i`
//!
//! `A_i°(Tu; T_i(v_i - u_i)) + <F_i(u), v_i - u_i> + J_i°(Su; S_i(v_i - u_i)) >= 0`.
//!
//! `player_term` evaluates that left-hand side, `aggregate_term` its sum
//! with the joint `J°` in place of the per-player one, and `verify_qhs`
//! reports the worst sampled violation per player.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::ConvexSet;
use crate::linalg::{all_zero, dist, dot};
use crate::nonsmooth::{ClarkeParams, ClarkeSession, ScalarFn};

/// Inputs at most this far outside their set are accepted verbatim.
const FEASIBILITY_TOL: f64 = 1e-6;
/// Inputs farther than `FEASIBILITY_TOL` but within this distance of the
/// set are projected instead of rejected.
const PROJECT_TOL: f64 = 1e-3;

/// A dense linear operator stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearMap {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl LinearMap {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("LinearMap must have positive dimensions"));
        }
        if data.len() != rows * cols {
            return Err(Error::dim("LinearMap data", rows * cols, data.len()));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("LinearMap entries must be finite"));
        }
        Ok(LinearMap { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let r = rows.len();
        if r == 0 {
            return Err(Error::invalid("LinearMap must have at least one row"));
        }
        let c = rows[0].len();
        let mut data = Vec::with_capacity(r * c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(Error::dim("LinearMap row", c, rows[i].len()));
            }
            data.extend_from_slice(row);
        }
        LinearMap::new(r, c, data)
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        LinearMap {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        let mut out = vec![0.0; self.rows];
        self.apply_into(x, &mut out);
        out
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (r, slot) in out.iter_mut().enumerate() {
            *slot = dot(&self.data[r * self.cols..(r + 1) * self.cols], x);
        }
    }
}

/// A coupling `u -> F_i(u)` mapping the full feasible point to a dual
/// vector for one player.
#[derive(Clone)]
pub struct VectorField {
    dim_out: usize,
    evaluator: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("dim_out", &self.dim_out)
            .finish()
    }
}

impl VectorField {
    pub fn new<F>(dim_out: usize, evaluator: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        VectorField {
            dim_out,
            evaluator: Arc::new(evaluator),
        }
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn eval(&self, u: &[f64]) -> Result<Vec<f64>> {
        let v = (self.evaluator)(u);
        if v.len() != self.dim_out {
            return Err(Error::dim("VectorField output", self.dim_out, v.len()));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NumericDomain("vector field returned non-finite value".into()));
        }
        Ok(v)
    }
}

/// Per-player dimensions: `x` of the strategy space, `y` of the payoff
/// coupling codomain, `z` of the `J` coupling codomain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerDims {
    pub x: usize,
    pub y: usize,
    pub z: usize,
}

/// Worst sampled violation for one player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerResidual {
    pub player: usize,
    pub worst_violation: f64,
    pub argmin_direction: Vec<f64>,
}

/// Result of checking the system inequalities against sampled deviations.
///
/// `verdict` certifies only the sampled directions; it is true iff every
/// player's worst violation is `>= -tol`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub per_player: Vec<PlayerResidual>,
    pub overall_worst: f64,
    pub tol: f64,
    pub verdict: bool,
    pub samples_used: usize,
    pub seed: u64,
}

/// The assembled n-player problem. Immutable after construction; all
/// residual evaluations are pure.
#[derive(Debug, Clone)]
pub struct QhsSystem {
    k: Vec<ConvexSet>,
    t: Vec<LinearMap>,
    s: Vec<LinearMap>,
    a: Vec<ScalarFn>,
    f: Option<Vec<VectorField>>,
    j: Option<ScalarFn>,
    params: ClarkeParams,
    dims: Vec<PlayerDims>,
    x_offsets: Vec<usize>,
    z_offsets: Vec<usize>,
}

impl QhsSystem {
    pub fn new(
        k: Vec<ConvexSet>,
        t: Vec<LinearMap>,
        s: Vec<LinearMap>,
        a: Vec<ScalarFn>,
        f: Option<Vec<VectorField>>,
        j: Option<ScalarFn>,
        params: ClarkeParams,
    ) -> Result<Self> {
        params.validate()?;
        let n = k.len();
        if n == 0 {
            return Err(Error::invalid("system needs at least one player"));
        }
        if t.len() != n || s.len() != n || a.len() != n {
            return Err(Error::invalid(format!(
                "player count mismatch: K={}, T={}, S={}, A={}",
                n,
                t.len(),
                s.len(),
                a.len()
            )));
        }
        let mut dims = Vec::with_capacity(n);
        for i in 0..n {
            let d = k[i].dim();
            if t[i].cols() != d {
                return Err(Error::dim("T domain", d, t[i].cols()));
            }
            if s[i].cols() != d {
                return Err(Error::dim("S domain", d, s[i].cols()));
            }
            dims.push(PlayerDims {
                x: d,
                y: t[i].rows(),
                z: s[i].rows(),
            });
        }
        let y_dims: Vec<usize> = dims.iter().map(|d| d.y).collect();
        for (i, ai) in a.iter().enumerate() {
            if ai.input_dims() != y_dims.as_slice() {
                return Err(Error::invalid(format!(
                    "A[{i}] must be a function over the Y blocks {:?}, got {:?}",
                    y_dims,
                    ai.input_dims()
                )));
            }
        }
        if let Some(fs) = &f {
            if fs.len() != n {
                return Err(Error::invalid("F must supply one field per player"));
            }
            for (i, fi) in fs.iter().enumerate() {
                if fi.dim_out() != dims[i].x {
                    return Err(Error::dim("F output", dims[i].x, fi.dim_out()));
                }
            }
        }
        if let Some(jf) = &j {
            let z_dims: Vec<usize> = dims.iter().map(|d| d.z).collect();
            if jf.input_dims() != z_dims.as_slice() {
                return Err(Error::invalid(format!(
                    "J must be a function over the Z blocks {:?}, got {:?}",
                    z_dims,
                    jf.input_dims()
                )));
            }
            if !jf.claims_regular() {
                return Err(Error::invalid("J must claim regularity"));
            }
        }
        let mut x_offsets = vec![0usize; n + 1];
        let mut z_offsets = vec![0usize; n + 1];
        for i in 0..n {
            x_offsets[i + 1] = x_offsets[i] + dims[i].x;
            z_offsets[i + 1] = z_offsets[i] + dims[i].z;
        }
        Ok(QhsSystem {
            k,
            t,
            s,
            a,
            f,
            j,
            params,
            dims,
            x_offsets,
            z_offsets,
        })
    }

    pub fn player_count(&self) -> usize {
        self.k.len()
    }

    pub fn dims(&self) -> &[PlayerDims] {
        &self.dims
    }

    pub fn total_x_dim(&self) -> usize {
        *self.x_offsets.last().unwrap()
    }

    pub fn sets(&self) -> &[ConvexSet] {
        &self.k
    }

    pub fn t_maps(&self) -> &[LinearMap] {
        &self.t
    }

    pub fn s_maps(&self) -> &[LinearMap] {
        &self.s
    }

    pub fn payoffs(&self) -> &[ScalarFn] {
        &self.a
    }

    pub fn fields(&self) -> Option<&[VectorField]> {
        self.f.as_deref()
    }

    pub fn coupling(&self) -> Option<&ScalarFn> {
        self.j.as_ref()
    }

    pub fn params(&self) -> &ClarkeParams {
        &self.params
    }

    /// Replace the constraint sets, keeping everything else (used by the
    /// truncation pathway).
    pub fn with_sets(&self, k: Vec<ConvexSet>) -> Result<QhsSystem> {
        QhsSystem::new(
            k,
            self.t.clone(),
            self.s.clone(),
            self.a.clone(),
            self.f.clone(),
            self.j.clone(),
            self.params,
        )
    }

    pub fn x_offset(&self, player: usize) -> usize {
        self.x_offsets[player]
    }

    pub fn x_block<'a>(&self, u: &'a [f64], player: usize) -> &'a [f64] {
        &u[self.x_offsets[player]..self.x_offsets[player + 1]]
    }

    fn check_point_dim(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.total_x_dim() {
            return Err(Error::dim("system point", self.total_x_dim(), u.len()));
        }
        Ok(())
    }

    /// Accept, project, or reject a block against its set: inputs within
    /// `1e-6` pass verbatim, drift up to `1e-3` is projected away, anything
    /// farther is a modeling error.
    fn admit_block(&self, player: usize, x: &[f64]) -> Result<Vec<f64>> {
        let set = &self.k[player];
        if set.contains(x, FEASIBILITY_TOL)? {
            return Ok(x.to_vec());
        }
        let p = set.project(x)?;
        if dist(x, &p) <= PROJECT_TOL {
            return Ok(p);
        }
        Err(Error::invalid(format!(
            "infeasible input for player {player}: {:.3e} outside the set",
            dist(x, &p)
        )))
    }

    /// Admit a full point blockwise.
    pub fn admit_point(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_point_dim(u)?;
        let mut out = Vec::with_capacity(u.len());
        for i in 0..self.player_count() {
            out.extend(self.admit_block(i, self.x_block(u, i))?);
        }
        Ok(out)
    }

    pub fn apply_t(&self, u: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dims.iter().map(|d| d.y).sum());
        for i in 0..self.player_count() {
            out.extend(self.t[i].apply(self.x_block(u, i)));
        }
        out
    }

    pub fn apply_s(&self, u: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dims.iter().map(|d| d.z).sum());
        for i in 0..self.player_count() {
            out.extend(self.s[i].apply(self.x_block(u, i)));
        }
        out
    }

    /// Left-hand side of player `i`'s inequality at `u` against deviation
    /// `v_i`. Absent `F` or `J` contribute zero; zero increments skip the
    /// estimator entirely, so `player_term(i, u, u_i) == 0` exactly.
    pub fn player_term(&self, player: usize, u: &[f64], v_i: &[f64]) -> Result<f64> {
        let mut anchor = SystemAnchor::prepare(self, u, AnchorNeeds::player_terms())?;
        anchor.player_term(player, v_i)
    }

    /// The aggregated form: summed payoff and field terms plus the joint
    /// `J°(Su; Sv - Su)`. Exactly zero at `v = u`.
    pub fn aggregate_term(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        let mut anchor = SystemAnchor::prepare(self, u, AnchorNeeds::aggregate())?;
        anchor.aggregate_term(v)
    }

    /// Check the per-player inequalities against explicit per-player sample
    /// lists. Ties on the worst violation keep the earliest sample.
    pub fn verify_qhs(
        &self,
        u: &[f64],
        v_samples: &[Vec<Vec<f64>>],
        tol: f64,
    ) -> Result<ResidualReport> {
        if !(tol > 0.0) {
            return Err(Error::invalid("verification tolerance must be > 0"));
        }
        if v_samples.len() != self.player_count() {
            return Err(Error::invalid(format!(
                "expected {} per-player sample lists, got {}",
                self.player_count(),
                v_samples.len()
            )));
        }
        for (i, list) in v_samples.iter().enumerate() {
            if list.is_empty() {
                return Err(Error::invalid(format!("empty sample list for player {i}")));
            }
        }
        let mut anchor = SystemAnchor::prepare(self, u, AnchorNeeds::player_terms())?;
        let mut per_player = Vec::with_capacity(self.player_count());
        let mut samples_used = 0usize;
        for (i, list) in v_samples.iter().enumerate() {
            let mut worst = f64::INFINITY;
            let mut argmin = &list[0];
            for v in list {
                let term = anchor.player_term(i, v)?;
                if term < worst {
                    worst = term;
                    argmin = v;
                }
            }
            samples_used += list.len();
            per_player.push(PlayerResidual {
                player: i,
                worst_violation: worst,
                argmin_direction: argmin.clone(),
            });
        }
        let overall_worst = per_player
            .iter()
            .map(|p| p.worst_violation)
            .fold(f64::INFINITY, f64::min);
        Ok(ResidualReport {
            per_player,
            overall_worst,
            tol,
            verdict: overall_worst >= -tol,
            samples_used,
            seed: self.params.seed,
        })
    }

    /// Probe the "aggregated inequality implies the per-player system" step
    /// at estimator precision: scanning the sampled deviations embedded one
    /// player at a time, no sample may pass the aggregated check at `tol`
    /// while failing its per-player check at `3 * tol`.
    pub fn implication_check(
        &self,
        u: &[f64],
        v_samples: &[Vec<Vec<f64>>],
        tol: f64,
    ) -> Result<bool> {
        if v_samples.len() != self.player_count() {
            return Err(Error::invalid(format!(
                "expected {} per-player sample lists, got {}",
                self.player_count(),
                v_samples.len()
            )));
        }
        let mut anchor = SystemAnchor::prepare(self, u, AnchorNeeds::all())?;
        for i in 0..self.player_count() {
            for v in &v_samples[i] {
                let aggregate = anchor.embedded_aggregate_term(i, v)?;
                if aggregate >= -tol {
                    let player = anchor.player_term(i, v)?;
                    if player < -3.0 * tol {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }
}

#[derive(Clone, Copy)]
pub(crate) struct AnchorNeeds {
    pub partial_j: bool,
    pub full_j: bool,
}

impl AnchorNeeds {
    pub fn player_terms() -> Self {
        AnchorNeeds {
            partial_j: true,
            full_j: false,
        }
    }

    pub fn aggregate() -> Self {
        AnchorNeeds {
            partial_j: false,
            full_j: true,
        }
    }

    pub fn all() -> Self {
        AnchorNeeds {
            partial_j: true,
            full_j: true,
        }
    }
}

/// Evaluation state anchored at one feasible point `u`.
///
/// Estimator sessions share their base samples across every deviation
/// queried at `u`, which is what makes grid verification affordable.
pub(crate) struct SystemAnchor<'s> {
    sys: &'s QhsSystem,
    u: Vec<f64>,
    tu: Vec<f64>,
    su: Vec<f64>,
    f_vals: Option<Vec<Vec<f64>>>,
    /// Per player: session for the payoff block (None when analytic).
    a_sessions: Vec<Option<ClarkeSession<'s>>>,
    /// Per player: session for `J` restricted to the player's Z block.
    j_partial_sessions: Vec<Option<ClarkeSession<'s>>>,
    j_full_session: Option<ClarkeSession<'s>>,
    y_offsets: Vec<usize>,
}

impl<'s> SystemAnchor<'s> {
    pub fn prepare(sys: &'s QhsSystem, u: &[f64], needs: AnchorNeeds) -> Result<Self> {
        let u = sys.admit_point(u)?;
        let tu = sys.apply_t(&u);
        let su = sys.apply_s(&u);
        let f_vals = match sys.fields() {
            Some(fields) => {
                let mut vals = Vec::with_capacity(fields.len());
                for fi in fields {
                    vals.push(fi.eval(&u)?);
                }
                Some(vals)
            }
            None => None,
        };
        let n = sys.player_count();
        let mut a_sessions = Vec::with_capacity(n);
        for i in 0..n {
            if sys.a[i].has_analytic_dd() {
                a_sessions.push(None);
            } else {
                a_sessions.push(Some(ClarkeSession::new(&sys.a[i], &tu, Some(i), &sys.params)?));
            }
        }
        let mut j_partial_sessions = Vec::new();
        let mut j_full_session = None;
        if let Some(j) = &sys.j {
            if !j.has_analytic_dd() {
                if needs.partial_j {
                    for i in 0..n {
                        j_partial_sessions.push(Some(ClarkeSession::new(
                            j,
                            &su,
                            Some(i),
                            &sys.params,
                        )?));
                    }
                }
                if needs.full_j {
                    j_full_session = Some(ClarkeSession::new(j, &su, None, &sys.params)?);
                }
            }
        }
        if j_partial_sessions.is_empty() {
            j_partial_sessions = (0..n).map(|_| None).collect();
        }
        let mut y_offsets = vec![0usize; n + 1];
        for i in 0..n {
            y_offsets[i + 1] = y_offsets[i] + sys.dims[i].y;
        }
        Ok(SystemAnchor {
            sys,
            u,
            tu,
            su,
            f_vals,
            a_sessions,
            j_partial_sessions,
            j_full_session,
            y_offsets,
        })
    }

    fn u_block(&self, i: usize) -> &[f64] {
        self.sys.x_block(&self.u, i)
    }

    /// `A_i°(Tu; T_i(v_i - u_i))` via analytic derivative or session.
    fn a_term(&mut self, i: usize, diff: &[f64]) -> Result<f64> {
        let dir = self.sys.t[i].apply(diff);
        if all_zero(&dir) {
            return Ok(0.0);
        }
        match &mut self.a_sessions[i] {
            Some(session) => session.estimate(&dir),
            None => {
                let mut embedded = vec![0.0; self.sys.a[i].total_dim()];
                embedded[self.y_offsets[i]..self.y_offsets[i + 1]].copy_from_slice(&dir);
                Ok(self.sys.a[i].analytic_dd_at(&self.tu, &embedded).unwrap())
            }
        }
    }

    fn f_term(&self, i: usize, diff: &[f64]) -> f64 {
        match &self.f_vals {
            Some(vals) => dot(&vals[i], diff),
            None => 0.0,
        }
    }

    /// `J_i°(Su; S_i(v_i - u_i))`.
    fn j_partial_term(&mut self, i: usize, diff: &[f64]) -> Result<f64> {
        let Some(j) = &self.sys.j else { return Ok(0.0) };
        let dir = self.sys.s[i].apply(diff);
        if all_zero(&dir) {
            return Ok(0.0);
        }
        match &mut self.j_partial_sessions[i] {
            Some(session) => session.estimate(&dir),
            None => {
                let mut embedded = vec![0.0; j.total_dim()];
                let start = self.sys.z_offsets[i];
                embedded[start..start + dir.len()].copy_from_slice(&dir);
                Ok(j.analytic_dd_at(&self.su, &embedded).unwrap())
            }
        }
    }

    /// `J°(Su; dir)` for a full Z-space direction.
    fn j_full_term(&mut self, dir: &[f64]) -> Result<f64> {
        let Some(j) = &self.sys.j else { return Ok(0.0) };
        if all_zero(dir) {
            return Ok(0.0);
        }
        match &mut self.j_full_session {
            Some(session) => session.estimate(dir),
            None => Ok(j.analytic_dd_at(&self.su, dir).unwrap()),
        }
    }

    fn admit_deviation(&self, i: usize, v_i: &[f64]) -> Result<Vec<f64>> {
        if v_i.len() != self.sys.dims[i].x {
            return Err(Error::dim("deviation", self.sys.dims[i].x, v_i.len()));
        }
        self.sys.admit_block(i, v_i)
    }

    pub fn player_term(&mut self, i: usize, v_i: &[f64]) -> Result<f64> {
        let v_i = self.admit_deviation(i, v_i)?;
        let diff: Vec<f64> = v_i
            .iter()
            .zip(self.u_block(i))
            .map(|(a, b)| a - b)
            .collect();
        Ok(self.a_term(i, &diff)? + self.f_term(i, &diff) + self.j_partial_term(i, &diff)?)
    }

    /// Summed payoff and field terms plus the joint coupling derivative
    /// `J°(Su; Sv - Su)`. Zero increments contribute exactly zero.
    pub fn aggregate_term(&mut self, v: &[f64]) -> Result<f64> {
        let v = self.sys.admit_point(v)?;
        let mut total = 0.0;
        let mut s_dir = vec![0.0; self.su.len()];
        for i in 0..self.sys.player_count() {
            let diff: Vec<f64> = self
                .sys
                .x_block(&v, i)
                .iter()
                .zip(self.u_block(i))
                .map(|(a, b)| a - b)
                .collect();
            total += self.a_term(i, &diff)? + self.f_term(i, &diff);
            let z = self.sys.s[i].apply(&diff);
            let start = self.sys.z_offsets[i];
            s_dir[start..start + z.len()].copy_from_slice(&z);
        }
        total += self.j_full_term(&s_dir)?;
        Ok(total)
    }

    /// Aggregate term of the deviation `u` with block `i` replaced by `v_i`:
    /// the direction the aggregated-implies-per-player argument uses.
    pub fn embedded_aggregate_term(&mut self, i: usize, v_i: &[f64]) -> Result<f64> {
        let v_i = self.admit_deviation(i, v_i)?;
        let diff: Vec<f64> = v_i
            .iter()
            .zip(self.u_block(i))
            .map(|(a, b)| a - b)
            .collect();
        let mut total = self.a_term(i, &diff)? + self.f_term(i, &diff);
        if self.sys.j.is_some() {
            let z = self.sys.s[i].apply(&diff);
            let mut s_dir = vec![0.0; self.su.len()];
            let start = self.sys.z_offsets[i];
            s_dir[start..start + z.len()].copy_from_slice(&z);
            total += self.j_full_term(&s_dir)?;
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::builtin;

    fn bilinear() -> QhsSystem {
        builtin("bilinear_zero_sum").unwrap().system
    }

    fn quadratic() -> QhsSystem {
        builtin("quadratic_smooth").unwrap().system
    }

    #[test]
    fn linear_map_apply() {
        let m = LinearMap::from_rows(vec![vec![1.0, 2.0], vec![0.0, -1.0]]).unwrap();
        assert_eq!(m.apply(&[3.0, 4.0]), vec![11.0, -4.0]);
        let id = LinearMap::identity(3);
        assert_eq!(id.apply(&[1.0, 2.0, 3.0]), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn player_term_examples() {
        let sys = bilinear();
        let t = sys.player_term(0, &[0.0, 0.0], &[1.0]).unwrap();
        assert!(t.abs() <= 5e-2, "expected ~0, got {t}");

        let t = sys.player_term(0, &[1.0, 1.0], &[-1.0]).unwrap();
        assert!((t + 2.0).abs() <= 5e-2, "expected ~-2, got {t}");
    }

    #[test]
    fn single_player_abs_term() {
        use crate::instances::parse_expr;
        let a = parse_expr("abs(x1)", 1)
            .unwrap()
            .to_scalar_fn(vec![1])
            .unwrap();
        let sys = QhsSystem::new(
            vec![ConvexSet::new_box(vec![-1.0], vec![1.0]).unwrap()],
            vec![LinearMap::identity(1)],
            vec![LinearMap::identity(1)],
            vec![a],
            None,
            None,
            ClarkeParams::default(),
        )
        .unwrap();
        let t = sys.player_term(0, &[0.0], &[-1.0]).unwrap();
        assert!((t - 1.0).abs() <= 5e-2, "A°(0; -1) should be ~1, got {t}");
    }

    #[test]
    fn aggregate_examples() {
        let sys = bilinear();
        assert_eq!(sys.aggregate_term(&[0.3, -0.4], &[0.3, -0.4]).unwrap(), 0.0);

        let v = sys.aggregate_term(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!(v.abs() <= 0.1, "bilinear aggregate at origin: {v}");

        // Quadratic system at u=(1,0), v=(0,0): the per-block directions give
        // A_1° = 2(u1-u2)(v1-u1) = -2 and A_2° = 2(u1+u2)(v2-u2) = 0, so the
        // aggregate is -2 (cross-checked by finite differences below).
        let sys = quadratic();
        let v = sys.aggregate_term(&[1.0, 0.0], &[0.0, 0.0]).unwrap();
        assert!((v + 2.0).abs() <= 0.2, "expected ~-2, got {v}");

        // Finite-difference oracle: each payoff is perturbed only in its own
        // block, direction v_i - u_i.
        let h = 1e-6;
        let u = [1.0, 0.0];
        let v = [0.0, 0.0];
        let mut fd = 0.0;
        for (i, a) in sys.payoffs().iter().enumerate() {
            let mut up = u;
            up[i] += h * (v[i] - u[i]);
            fd += (a.eval(&up).unwrap() - a.eval(&u).unwrap()) / h;
        }
        assert!((fd + 2.0).abs() <= 1e-3, "finite-difference oracle gives {fd}");
    }

    #[test]
    fn verify_examples() {
        let sys = bilinear();
        let grid: Vec<Vec<f64>> = sys.sets()[0].sample_grid(21).unwrap();
        let samples = vec![grid.clone(), grid];

        let report = sys.verify_qhs(&[0.0, 0.0], &samples, 1e-2).unwrap();
        assert!(report.verdict, "origin should verify: {report:?}");

        let report = sys.verify_qhs(&[1.0, 1.0], &samples, 1e-2).unwrap();
        assert!(!report.verdict);
        assert!((report.overall_worst + 2.0).abs() <= 0.1);

        let sys = builtin("absdiff_nonsmooth").unwrap().system;
        let grid: Vec<Vec<f64>> = sys.sets()[0].sample_grid(21).unwrap();
        let samples = vec![grid.clone(), grid];
        let report = sys.verify_qhs(&[0.0, 0.0], &samples, 1e-2).unwrap();
        assert!(report.verdict, "nonsmooth origin should verify: {report:?}");
    }

    #[test]
    fn verify_rejects_empty_samples() {
        let sys = bilinear();
        let samples = vec![vec![], vec![vec![0.0]]];
        assert!(matches!(
            sys.verify_qhs(&[0.0, 0.0], &samples, 1e-2),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn verify_rejects_far_infeasible_point() {
        let sys = bilinear();
        assert!(matches!(
            sys.player_term(0, &[5.0, 0.0], &[0.0]),
            Err(Error::InvalidArgument(_))
        ));
        // Small drift is projected instead.
        assert!(sys.player_term(0, &[1.0 + 1e-4, 0.0], &[0.0]).is_ok());
    }

    #[test]
    fn implication_check_examples() {
        let sys = bilinear();
        let grid: Vec<Vec<f64>> = sys.sets()[0].sample_grid(11).unwrap();
        let samples = vec![grid.clone(), grid];
        assert!(sys.implication_check(&[0.0, 0.0], &samples, 1e-2).unwrap());
        assert!(sys.implication_check(&[1.0, 1.0], &samples, 1e-2).unwrap());
    }

    #[test]
    fn aggregate_vanishes_at_diagonal_randomized() {
        for name in ["bilinear_zero_sum", "quadratic_smooth", "fj_system"] {
            let sys = builtin(name).unwrap().system;
            let mut all = Vec::new();
            for (i, set) in sys.sets().iter().enumerate() {
                all.push(set.sample_random(100, 40 + i as u64).unwrap());
            }
            for t in 0..100 {
                let u: Vec<f64> = all.iter().flat_map(|list| list[t].clone()).collect();
                assert_eq!(sys.aggregate_term(&u, &u).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn additivity_without_f_and_j() {
        let sys = builtin("absdiff_nonsmooth").unwrap().system;
        let u = [0.3, -0.2];
        let v = [-0.5, 0.8];
        let agg = sys.aggregate_term(&u, &v).unwrap();
        let sum = sys.player_term(0, &u, &[v[0]]).unwrap() + sys.player_term(1, &u, &[v[1]]).unwrap();
        assert!(
            (agg - sum).abs() <= 1e-9,
            "aggregate {agg} != player sum {sum}"
        );
    }

    #[test]
    fn aggregate_convex_in_second_argument() {
        use rand::Rng;
        use rand::SeedableRng;
        let sys = quadratic();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for _ in 0..100 {
            let u: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
            let v1: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
            let v2: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
            let lam: f64 = rng.random_range(0.0..1.0);
            let mix: Vec<f64> = v1
                .iter()
                .zip(&v2)
                .map(|(a, b)| lam * a + (1.0 - lam) * b)
                .collect();
            let lhs = sys.aggregate_term(&u, &mix).unwrap();
            let rhs = lam * sys.aggregate_term(&u, &v1).unwrap()
                + (1.0 - lam) * sys.aggregate_term(&u, &v2).unwrap();
            assert!(lhs <= rhs + 0.1, "convexity violated: {lhs} > {rhs} + 0.1");
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let sys = bilinear();
        let grid: Vec<Vec<f64>> = sys.sets()[0].sample_grid(9).unwrap();
        let samples = vec![grid.clone(), grid];
        let a = sys.verify_qhs(&[0.5, -0.5], &samples, 1e-2).unwrap();
        let b = sys.verify_qhs(&[0.5, -0.5], &samples, 1e-2).unwrap();
        assert_eq!(a, b);
    }
}
