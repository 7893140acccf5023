//! Clarke generalized directional derivatives for locally Lipschitz
//! functions: difference quotients, a seeded sampling estimator for the
//! limsup, one-sided derivatives, and the calculus gap checks built on them.
//!
//! The estimator discretizes
//! `f°(u; v) = limsup_{w -> u, tau -> 0+} (f(w + tau v) - f(w)) / tau`
//! by drawing base points `w` uniformly in shrinking balls `B(u, delta_k)`
//! and step sizes `tau` uniformly in `(0, delta_k]`, recording the maximum
//! quotient per scale. The returned value is the maximum over the two finest
//! scales; coarser scales only inflate the bias and cannot change the
//! result, so they are not evaluated.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{all_zero, substream_seed};

type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type AnalyticDd = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// A locally Lipschitz scalar function over a product of blocks.
///
/// `input_dims` lists the block dimensions; the evaluator consumes the
/// concatenated coordinates. An evaluator signals a domain error by
/// returning a non-finite value, which every caller converts into
/// [`Error::NumericDomain`].
#[derive(Clone)]
pub struct ScalarFn {
    input_dims: Vec<usize>,
    evaluator: Evaluator,
    analytic_dd: Option<AnalyticDd>,
    claims_regular: bool,
}

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarFn")
            .field("input_dims", &self.input_dims)
            .field("analytic_dd", &self.analytic_dd.is_some())
            .field("claims_regular", &self.claims_regular)
            .finish()
    }
}

impl ScalarFn {
    pub fn new<F>(input_dims: Vec<usize>, evaluator: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        ScalarFn {
            input_dims,
            evaluator: Arc::new(evaluator),
            analytic_dd: None,
            claims_regular: false,
        }
    }

    /// Attach the exact Clarke directional derivative `(u, v) -> f°(u; v)`.
    ///
    /// When present it wins over estimation everywhere. For directions
    /// supported in a single block the closure must return the partial
    /// Clarke derivative of that block, which holds for the smooth and
    /// separable regular functions the instances supply.
    pub fn with_analytic_dd<F>(mut self, dd: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        self.analytic_dd = Some(Arc::new(dd));
        self
    }

    /// Declare that the function is regular (one-sided derivative exists and
    /// equals the Clarke derivative everywhere). This is a user assertion.
    pub fn with_regular(mut self, claims_regular: bool) -> Self {
        self.claims_regular = claims_regular;
        self
    }

    pub fn constant(input_dims: Vec<usize>, value: f64) -> Self {
        ScalarFn::new(input_dims, move |_| value)
    }

    pub fn input_dims(&self) -> &[usize] {
        &self.input_dims
    }

    pub fn total_dim(&self) -> usize {
        self.input_dims.iter().sum()
    }

    pub fn claims_regular(&self) -> bool {
        self.claims_regular
    }

    pub fn has_analytic_dd(&self) -> bool {
        self.analytic_dd.is_some()
    }

    /// Offset of block `i` in the concatenated coordinates.
    pub fn block_offset(&self, block: usize) -> usize {
        self.input_dims[..block].iter().sum()
    }

    pub(crate) fn eval_raw(&self, x: &[f64]) -> f64 {
        (self.evaluator)(x)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.total_dim() {
            return Err(Error::dim("ScalarFn::eval", self.total_dim(), x.len()));
        }
        let v = self.eval_raw(x);
        if !v.is_finite() {
            return Err(Error::NumericDomain(format!(
                "evaluator returned {v} at {x:?}"
            )));
        }
        Ok(v)
    }

    pub(crate) fn analytic_dd_at(&self, u: &[f64], v: &[f64]) -> Option<f64> {
        self.analytic_dd.as_ref().map(|dd| dd(u, v))
    }
}

/// Discretization parameters for the Clarke limsup.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ClarkeParams {
    /// Initial neighborhood radius, in input coordinate units.
    pub delta0: f64,
    /// Scale shrink factor in (0, 1).
    pub shrink: f64,
    /// Number of scales (>= 2).
    pub scales: u32,
    /// Samples drawn per scale (>= 1).
    pub samples_per_scale: u32,
    /// Seed of the substream family; one substream per (scale, sample).
    pub seed: u64,
}

impl Default for ClarkeParams {
    fn default() -> Self {
        ClarkeParams {
            delta0: 0.1,
            shrink: 0.5,
            scales: 6,
            samples_per_scale: 64,
            seed: 0,
        }
    }
}

impl ClarkeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta0 > 0.0 && self.delta0.is_finite()) {
            return Err(Error::invalid("ClarkeParams::delta0 must be > 0"));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::invalid("ClarkeParams::shrink must be in (0, 1)"));
        }
        if self.scales < 2 {
            return Err(Error::invalid("ClarkeParams::scales must be >= 2"));
        }
        if self.samples_per_scale < 1 {
            return Err(Error::invalid("ClarkeParams::samples_per_scale must be >= 1"));
        }
        Ok(())
    }

    /// Radii of the two finest scales, coarser first.
    fn finest_deltas(&self) -> [f64; 2] {
        let d = self.delta0 * self.shrink.powi(self.scales as i32 - 2);
        [d, d * self.shrink]
    }
}

/// Frozen unit-ball offsets and step fractions for the two finest scales.
///
/// Entries are generated from one RNG substream per (scale, sample) pair and
/// scaled by `delta_k` at use, so every estimate with the same params reuses
/// the same draws regardless of call order.
struct SampleTable {
    samples: usize,
    dim: usize,
    /// `2 * samples * dim` unit-ball offsets.
    offsets: Vec<f64>,
    /// `2 * samples` step fractions in (0, 1].
    fracs: Vec<f64>,
}

impl SampleTable {
    fn generate(seed: u64, scales: u32, samples: usize, dim: usize) -> SampleTable {
        let mut offsets = Vec::with_capacity(2 * samples * dim);
        let mut fracs = Vec::with_capacity(2 * samples);
        for s in 0..2u32 {
            let scale_index = scales - 2 + s;
            for j in 0..samples {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(substream_seed(seed, scale_index as u64, j as u64));
                let mut g: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                let r = rng.random::<f64>().powf(1.0 / dim as f64);
                if n > 0.0 {
                    for x in &mut g {
                        *x *= r / n;
                    }
                }
                offsets.extend_from_slice(&g);
                // 1 - U lies in (0, 1].
                fracs.push(1.0 - rng.random::<f64>());
            }
        }
        SampleTable {
            samples,
            dim,
            offsets,
            fracs,
        }
    }

    fn offset(&self, scale: usize, j: usize) -> &[f64] {
        let base = (scale * self.samples + j) * self.dim;
        &self.offsets[base..base + self.dim]
    }

    fn frac(&self, scale: usize, j: usize) -> f64 {
        self.fracs[scale * self.samples + j]
    }
}

type TableKey = (u64, u32, u32, usize);

fn table_for(params: &ClarkeParams, dim: usize) -> Arc<SampleTable> {
    static TABLES: OnceLock<Mutex<HashMap<TableKey, Arc<SampleTable>>>> = OnceLock::new();
    let key = (params.seed, params.scales, params.samples_per_scale, dim);
    let mut map = TABLES
        .get_or_init(|| Mutex::new(HashMap::new()))
        .lock()
        .expect("sample table lock poisoned");
    map.entry(key)
        .or_insert_with(|| {
            Arc::new(SampleTable::generate(
                params.seed,
                params.scales,
                params.samples_per_scale as usize,
                dim,
            ))
        })
        .clone()
}

/// Estimation state for one base point and one perturbed block.
///
/// The base values `f(w)` are shared by every direction queried at this
/// point, which matters when a verifier scans hundreds of deviations.
pub(crate) struct ClarkeSession<'f> {
    f: &'f ScalarFn,
    point: Vec<f64>,
    block_start: usize,
    block_dim: usize,
    deltas: [f64; 2],
    table: Arc<SampleTable>,
    base_vals: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'f> ClarkeSession<'f> {
    /// Prepare a session perturbing `block` (or the full input when `block`
    /// is `None`) around `point`.
    pub(crate) fn new(
        f: &'f ScalarFn,
        point: &[f64],
        block: Option<usize>,
        params: &ClarkeParams,
    ) -> Result<Self> {
        params.validate()?;
        if point.len() != f.total_dim() {
            return Err(Error::dim("ClarkeSession point", f.total_dim(), point.len()));
        }
        let (block_start, block_dim) = match block {
            Some(i) => {
                if i >= f.input_dims.len() {
                    return Err(Error::invalid(format!(
                        "block index {i} out of range for {} blocks",
                        f.input_dims.len()
                    )));
                }
                (f.block_offset(i), f.input_dims[i])
            }
            None => (0, f.total_dim()),
        };
        let deltas = params.finest_deltas();
        let table = table_for(params, block_dim);
        let samples = table.samples;
        let mut scratch = point.to_vec();
        let mut base_vals = Vec::with_capacity(2 * samples);
        for s in 0..2 {
            for j in 0..samples {
                let off = table.offset(s, j);
                for c in 0..block_dim {
                    scratch[block_start + c] = point[block_start + c] + deltas[s] * off[c];
                }
                let v = f.eval_raw(&scratch);
                if !v.is_finite() {
                    return Err(Error::NumericDomain(format!(
                        "evaluator returned {v} near base point"
                    )));
                }
                base_vals.push(v);
            }
        }
        scratch[block_start..block_start + block_dim]
            .copy_from_slice(&point[block_start..block_start + block_dim]);
        Ok(ClarkeSession {
            f,
            point: point.to_vec(),
            block_start,
            block_dim,
            deltas,
            table,
            base_vals,
            scratch,
        })
    }

    /// Estimate the Clarke derivative in direction `dir` (block coordinates).
    ///
    /// The zero direction returns exactly 0 without touching the evaluator.
    pub(crate) fn estimate(&mut self, dir: &[f64]) -> Result<f64> {
        if dir.len() != self.block_dim {
            return Err(Error::dim("ClarkeSession direction", self.block_dim, dir.len()));
        }
        if all_zero(dir) {
            return Ok(0.0);
        }
        let samples = self.table.samples;
        let mut result = f64::NEG_INFINITY;
        for s in 0..2 {
            let delta = self.deltas[s];
            let mut scale_max = f64::NEG_INFINITY;
            for j in 0..samples {
                let off = self.table.offset(s, j);
                let tau = delta * self.table.frac(s, j);
                for c in 0..self.block_dim {
                    self.scratch[self.block_start + c] =
                        self.point[self.block_start + c] + delta * off[c] + tau * dir[c];
                }
                let shifted = self.f.eval_raw(&self.scratch);
                let q = (shifted - self.base_vals[s * samples + j]) / tau;
                if !q.is_finite() {
                    return Err(Error::NumericDomain(
                        "non-finite difference quotient in Clarke estimate".into(),
                    ));
                }
                if q > scale_max {
                    scale_max = q;
                }
            }
            if scale_max > result {
                result = scale_max;
            }
        }
        Ok(result)
    }
}

/// The inner difference quotient `(f(w + tau v) - f(w)) / tau`.
pub fn directional_quotient(f: &ScalarFn, w: &[f64], v: &[f64], tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::invalid(format!("tau must be > 0, got {tau}")));
    }
    if w.len() != f.total_dim() || v.len() != f.total_dim() {
        return Err(Error::dim("directional_quotient", f.total_dim(), w.len().max(v.len())));
    }
    let shifted: Vec<f64> = w.iter().zip(v).map(|(&a, &b)| a + tau * b).collect();
    let q = (f.eval(&shifted)? - f.eval(w)?) / tau;
    if !q.is_finite() {
        return Err(Error::NumericDomain("non-finite difference quotient".into()));
    }
    Ok(q)
}

/// Clarke generalized directional derivative `f°(u; v)`.
///
/// Returns the analytic value when the function carries one; otherwise the
/// sampled estimate. Deterministic for fixed params.
pub fn clarke_dd(f: &ScalarFn, u: &[f64], v: &[f64], params: &ClarkeParams) -> Result<f64> {
    if u.len() != f.total_dim() || v.len() != f.total_dim() {
        return Err(Error::dim("clarke_dd", f.total_dim(), u.len().max(v.len())));
    }
    if let Some(dd) = f.analytic_dd_at(u, v) {
        return Ok(dd);
    }
    if all_zero(v) {
        return Ok(0.0);
    }
    ClarkeSession::new(f, u, None, params)?.estimate(v)
}

/// One-sided directional derivative `f'(u; v)` from forward quotients at the
/// two finest scales with one Richardson extrapolation step.
pub fn one_sided_dd(f: &ScalarFn, u: &[f64], v: &[f64], params: &ClarkeParams) -> Result<f64> {
    params.validate()?;
    if u.len() != f.total_dim() || v.len() != f.total_dim() {
        return Err(Error::dim("one_sided_dd", f.total_dim(), u.len().max(v.len())));
    }
    if all_zero(v) {
        return Ok(0.0);
    }
    let [tau_coarse, tau_fine] = params.finest_deltas();
    let q_coarse = directional_quotient(f, u, v, tau_coarse)?;
    let q_fine = directional_quotient(f, u, v, tau_fine)?;
    // q(tau) ~ L + c tau: eliminate the linear error term.
    Ok((q_fine - params.shrink * q_coarse) / (1.0 - params.shrink))
}

/// `f°(u; v) - f'(u; v)`; nonnegative in exact arithmetic, and large exactly
/// at non-regular points.
pub fn regularity_gap(f: &ScalarFn, u: &[f64], v: &[f64], params: &ClarkeParams) -> Result<f64> {
    Ok(clarke_dd(f, u, v, params)? - one_sided_dd(f, u, v, params)?)
}

/// Partial Clarke derivative in block `i`: the Clarke derivative of
/// `w -> f(u_1, ..., w, ..., u_n)` at `u_i` in direction `v_i`.
pub fn partial_clarke_dd(
    f: &ScalarFn,
    block: usize,
    u: &[f64],
    v_block: &[f64],
    params: &ClarkeParams,
) -> Result<f64> {
    if block >= f.input_dims().len() {
        return Err(Error::invalid(format!(
            "block index {block} out of range for {} blocks",
            f.input_dims().len()
        )));
    }
    if u.len() != f.total_dim() {
        return Err(Error::dim("partial_clarke_dd point", f.total_dim(), u.len()));
    }
    if v_block.len() != f.input_dims()[block] {
        return Err(Error::dim(
            "partial_clarke_dd direction",
            f.input_dims()[block],
            v_block.len(),
        ));
    }
    if f.has_analytic_dd() {
        let mut embedded = vec![0.0; f.total_dim()];
        let start = f.block_offset(block);
        embedded[start..start + v_block.len()].copy_from_slice(v_block);
        return Ok(f.analytic_dd_at(u, &embedded).unwrap());
    }
    if all_zero(v_block) {
        return Ok(0.0);
    }
    ClarkeSession::new(f, u, Some(block), params)?.estimate(v_block)
}

/// Gap of the regular-sum rule `J°(u; 0,..,v_i,..,0) <= J_i°(u; v_i)`:
/// returns `J_i°(u; v_i) - J°(u; embedded v_i)`, which must be >= -eps for
/// regular `J` at estimator precision.
pub fn sum_rule_gap(
    j: &ScalarFn,
    u: &[f64],
    block: usize,
    v_block: &[f64],
    params: &ClarkeParams,
) -> Result<f64> {
    if !j.claims_regular() {
        return Err(Error::invalid(
            "sum_rule_gap requires a function that claims regularity",
        ));
    }
    let partial = partial_clarke_dd(j, block, u, v_block, params)?;
    let mut embedded = vec![0.0; j.total_dim()];
    let start = j.block_offset(block);
    embedded[start..start + v_block.len()].copy_from_slice(v_block);
    let joint = clarke_dd(j, u, &embedded, params)?;
    Ok(partial - joint)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abs_fn() -> ScalarFn {
        ScalarFn::new(vec![1], |x| x[0].abs()).with_regular(true)
    }

    fn neg_abs_fn() -> ScalarFn {
        ScalarFn::new(vec![1], |x| -x[0].abs())
    }

    fn square_fn() -> ScalarFn {
        ScalarFn::new(vec![1], |x| x[0] * x[0]).with_regular(true)
    }

    fn max_xy_fn() -> ScalarFn {
        ScalarFn::new(vec![1, 1], |x| x[0].max(x[1])).with_regular(true)
    }

    fn absdiff_fn() -> ScalarFn {
        ScalarFn::new(vec![1, 1], |x| (x[0] - x[1]).abs()).with_regular(true)
    }

    fn relu_fn() -> ScalarFn {
        ScalarFn::new(vec![1], |x| x[0].max(0.0)).with_regular(true)
    }

    fn p() -> ClarkeParams {
        ClarkeParams::default()
    }

    #[test]
    fn quotient_examples() {
        let sq = square_fn();
        assert_eq!(directional_quotient(&sq, &[1.0], &[1.0], 0.5).unwrap(), 2.5);
        let a = abs_fn();
        assert_eq!(directional_quotient(&a, &[0.0], &[1.0], 0.1).unwrap(), 1.0);
        assert_eq!(directional_quotient(&a, &[0.0], &[-1.0], 0.1).unwrap(), 1.0);
    }

    #[test]
    fn quotient_rejects_bad_tau() {
        let sq = square_fn();
        assert!(directional_quotient(&sq, &[1.0], &[1.0], 0.0).is_err());
    }

    #[test]
    fn clarke_estimates_match_closed_forms() {
        // (function, point, direction, exact Clarke value)
        let cases: Vec<(ScalarFn, Vec<f64>, Vec<f64>, f64)> = vec![
            (abs_fn(), vec![0.0], vec![1.0], 1.0),
            (abs_fn(), vec![0.0], vec![-1.0], 1.0),
            (neg_abs_fn(), vec![0.0], vec![1.0], 1.0),
            (square_fn(), vec![3.0], vec![2.0], 12.0),
            (square_fn(), vec![1.0], vec![1.0], 2.0),
            (max_xy_fn(), vec![0.0, 0.0], vec![1.0, 0.0], 1.0),
            (absdiff_fn(), vec![1.0, 1.0], vec![1.0, -1.0], 2.0),
            (absdiff_fn(), vec![0.0, 0.0], vec![1.0, 0.0], 1.0),
            (relu_fn(), vec![0.0], vec![1.0], 1.0),
            (relu_fn(), vec![0.0], vec![-1.0], 0.0),
        ];
        for (f, u, v, exact) in cases {
            let est = clarke_dd(&f, &u, &v, &p()).unwrap();
            assert!(
                (est - exact).abs() <= 5e-2,
                "clarke_dd({u:?}; {v:?}) = {est}, expected {exact}"
            );
        }
    }

    #[test]
    fn analytic_dd_wins() {
        let f = ScalarFn::new(vec![1], |x| x[0] * x[0]).with_analytic_dd(|u, v| 2.0 * u[0] * v[0]);
        assert_eq!(clarke_dd(&f, &[3.0], &[2.0], &p()).unwrap(), 12.0);
    }

    #[test]
    fn one_sided_examples() {
        assert!((one_sided_dd(&neg_abs_fn(), &[0.0], &[1.0], &p()).unwrap() + 1.0).abs() <= 5e-2);
        assert!((one_sided_dd(&square_fn(), &[1.0], &[1.0], &p()).unwrap() - 2.0).abs() <= 5e-2);
        assert!(
            (one_sided_dd(&max_xy_fn(), &[0.0, 0.0], &[1.0, 0.0], &p()).unwrap() - 1.0).abs()
                <= 5e-2
        );
    }

    #[test]
    fn regularity_gap_examples() {
        assert!(regularity_gap(&square_fn(), &[1.0], &[1.0], &p()).unwrap().abs() <= 0.1);
        assert!(regularity_gap(&abs_fn(), &[0.0], &[1.0], &p()).unwrap().abs() <= 0.1);
        let gap = regularity_gap(&neg_abs_fn(), &[0.0], &[1.0], &p()).unwrap();
        assert!((gap - 2.0).abs() <= 0.1, "non-regular witness gap = {gap}");
    }

    #[test]
    fn partial_clarke_examples() {
        let prod = ScalarFn::new(vec![1, 1], |x| x[0] * x[1]);
        let d = partial_clarke_dd(&prod, 0, &[0.0, 3.0], &[1.0], &p()).unwrap();
        assert!((d - 3.0).abs() <= 5e-2);

        let d = partial_clarke_dd(&absdiff_fn(), 0, &[0.0, 0.0], &[1.0], &p()).unwrap();
        assert!((d - 1.0).abs() <= 5e-2);

        let sq2 = ScalarFn::new(vec![1, 1], |x| x[0] * x[0] + x[1] * x[1]);
        let d = partial_clarke_dd(&sq2, 1, &[1.0, 1.0], &[-1.0], &p()).unwrap();
        assert!((d + 2.0).abs() <= 5e-2);
    }

    #[test]
    fn sum_rule_examples() {
        let sep_sq =
            ScalarFn::new(vec![1, 1], |x| x[0] * x[0] + x[1] * x[1]).with_regular(true);
        assert!(sum_rule_gap(&sep_sq, &[1.0, 1.0], 0, &[1.0], &p()).unwrap().abs() <= 0.1);

        let sep_abs = ScalarFn::new(vec![1, 1], |x| x[0].abs() + x[1].abs()).with_regular(true);
        assert!(sum_rule_gap(&sep_abs, &[0.0, 0.0], 0, &[1.0], &p()).unwrap().abs() <= 0.1);

        // (z1 + z2)^2 at the origin: both routes are exactly 0 analytically.
        let coupled = ScalarFn::new(vec![1, 1], |x| (x[0] + x[1]) * (x[0] + x[1]))
            .with_regular(true);
        assert!(sum_rule_gap(&coupled, &[0.0, 0.0], 1, &[1.0], &p()).unwrap().abs() <= 0.1);
    }

    #[test]
    fn sum_rule_requires_regular_claim() {
        let f = ScalarFn::new(vec![1, 1], |x| x[0] + x[1]);
        assert!(matches!(
            sum_rule_gap(&f, &[0.0, 0.0], 0, &[1.0], &p()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn estimates_are_deterministic() {
        let f = absdiff_fn();
        let a = clarke_dd(&f, &[0.3, 0.1], &[1.0, -0.5], &p()).unwrap();
        let b = clarke_dd(&f, &[0.3, 0.1], &[1.0, -0.5], &p()).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn numeric_domain_propagates() {
        // sqrt is NaN on the negative half of every sampling ball around 0.
        let f = ScalarFn::new(vec![1], |x| x[0].sqrt());
        assert!(matches!(
            clarke_dd(&f, &[0.0], &[1.0], &p()),
            Err(Error::NumericDomain(_))
        ));
        assert!(matches!(
            f.eval(&[-1.0]),
            Err(Error::NumericDomain(_))
        ));
    }

    /// Regular corpus used by the invariance checks below.
    fn regular_corpus() -> Vec<ScalarFn> {
        vec![abs_fn(), square_fn(), relu_fn(), max_xy_fn(), absdiff_fn()]
    }

    fn seeded_point(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
        (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn positive_homogeneity_on_regular_corpus() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        let corpus = regular_corpus();
        for t in 0..100 {
            let f = &corpus[t % corpus.len()];
            let d = f.total_dim();
            let u = seeded_point(&mut rng, d);
            let v = seeded_point(&mut rng, d);
            let one = clarke_dd(f, &u, &v, &p()).unwrap();
            let two = clarke_dd(f, &u, &v.iter().map(|x| 2.0 * x).collect::<Vec<_>>(), &p())
                .unwrap();
            assert!(
                (two - 2.0 * one).abs() <= 0.1 * (1.0 + one.abs()),
                "homogeneity violated: f°(u;2v)={two}, f°(u;v)={one}"
            );
        }
    }

    #[test]
    fn subadditivity_on_regular_corpus() {
        let mut rng = ChaCha8Rng::seed_from_u64(200);
        let corpus = regular_corpus();
        for t in 0..100 {
            let f = &corpus[t % corpus.len()];
            let d = f.total_dim();
            let u = seeded_point(&mut rng, d);
            let v = seeded_point(&mut rng, d);
            let w = seeded_point(&mut rng, d);
            let vw: Vec<f64> = v.iter().zip(&w).map(|(a, b)| a + b).collect();
            let lhs = clarke_dd(f, &u, &vw, &p()).unwrap();
            let rhs = clarke_dd(f, &u, &v, &p()).unwrap() + clarke_dd(f, &u, &w, &p()).unwrap();
            assert!(lhs <= rhs + 0.1, "subadditivity violated: {lhs} > {rhs} + 0.1");
        }
    }

    #[test]
    fn clarke_dominates_one_sided() {
        let mut rng = ChaCha8Rng::seed_from_u64(300);
        let mut corpus = regular_corpus();
        corpus.push(neg_abs_fn());
        for t in 0..100 {
            let f = &corpus[t % corpus.len()];
            let d = f.total_dim();
            let u = seeded_point(&mut rng, d);
            let v = seeded_point(&mut rng, d);
            let c = clarke_dd(f, &u, &v, &p()).unwrap();
            let o = one_sided_dd(f, &u, &v, &p()).unwrap();
            assert!(c >= o - 0.1, "dominance violated: f°={c} < f'={o} - 0.1");
        }
    }
}
