//! Closed convex feasible sets: membership, Euclidean projection, and
//! deterministic sampling.
//!
//! Four variants cover the desk-scale constraint sets the solvers need:
//! axis-aligned boxes (bounds may be infinite), Euclidean balls, scaled
//! simplices `{x >= 0, sum x <= scale}`, and intersections of halfspaces
//! `{x : Mx <= b}`. Box/Ball/Simplex projections are exact; halfspace
//! intersections use Dykstra's alternating projections.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{dist, dot};

/// Residual threshold for the Dykstra sweep displacement.
const DYKSTRA_DISPLACEMENT: f64 = 1e-12;
/// Constraint violation accepted as "inside" for projection output.
const DYKSTRA_VIOLATION: f64 = 1e-10;
const DYKSTRA_MAX_SWEEPS: usize = 10_000;
/// Coordinates beyond this magnitude mark a direction as unbounded.
const UNBOUNDED_THRESHOLD: f64 = 1e6;
/// Distance of the probe point used to estimate halfspace bounding boxes.
const BBOX_PROBE_DISTANCE: f64 = 1e7;

/// Intersection of finitely many halfspaces `{x : normals[r] . x <= offsets[r]}`.
///
/// A feasible witness must be supplied at construction; it declares the set
/// nonempty and seeds the bounding-box probes.
#[derive(Debug, Clone)]
pub struct Halfspaces {
    normals: Vec<Vec<f64>>,
    offsets: Vec<f64>,
    witness: Vec<f64>,
    /// Approximate per-coordinate bounds obtained by projecting far probe
    /// points; infinite entries mark unbounded directions.
    bbox: (Vec<f64>, Vec<f64>),
}

/// A closed convex set with projection, membership, and sampling.
#[derive(Debug, Clone)]
pub enum ConvexSet {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Simplex { dim: usize, scale: f64 },
    HalfspaceIntersection(Halfspaces),
}

impl ConvexSet {
    /// Axis-aligned box; entries of `lo`/`hi` may be `-inf`/`+inf`.
    pub fn new_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::dim("box bounds", lo.len(), hi.len()));
        }
        if lo.is_empty() {
            return Err(Error::invalid("box must have dimension >= 1"));
        }
        for (i, (&l, &h)) in lo.iter().zip(&hi).enumerate() {
            if l.is_nan() || h.is_nan() || l > h {
                return Err(Error::invalid(format!(
                    "box bounds must satisfy lo <= hi componentwise (coordinate {i}: {l} > {h})"
                )));
            }
        }
        Ok(ConvexSet::Box { lo, hi })
    }

    pub fn new_ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::invalid("ball must have dimension >= 1"));
        }
        if !radius.is_finite() || radius <= 0.0 {
            return Err(Error::invalid(format!("ball radius must be > 0, got {radius}")));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("ball center must be finite"));
        }
        Ok(ConvexSet::Ball { center, radius })
    }

    /// The scaled simplex `{x >= 0, sum_j x_j <= scale}` in `dim` dimensions.
    pub fn new_simplex(dim: usize, scale: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("simplex must have dimension >= 1"));
        }
        if !scale.is_finite() || scale <= 0.0 {
            return Err(Error::invalid(format!("simplex scale must be > 0, got {scale}")));
        }
        Ok(ConvexSet::Simplex { dim, scale })
    }

    /// Intersection of halfspaces with a feasible witness point.
    pub fn new_halfspaces(
        normals: Vec<Vec<f64>>,
        offsets: Vec<f64>,
        witness: Vec<f64>,
    ) -> Result<Self> {
        if witness.is_empty() {
            return Err(Error::invalid("halfspace witness must have dimension >= 1"));
        }
        if normals.len() != offsets.len() {
            return Err(Error::dim("halfspace rows", normals.len(), offsets.len()));
        }
        let dim = witness.len();
        for (r, row) in normals.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::dim("halfspace normal", dim, row.len()));
            }
            if row.iter().any(|x| !x.is_finite()) || !offsets[r].is_finite() {
                return Err(Error::invalid(format!("halfspace row {r} must be finite")));
            }
            if row.iter().all(|&x| x == 0.0) {
                return Err(Error::invalid(format!("halfspace row {r} has zero normal")));
            }
        }
        for (r, row) in normals.iter().enumerate() {
            if dot(row, &witness) > offsets[r] + 1e-9 {
                return Err(Error::invalid(format!(
                    "witness violates halfspace row {r} by {}",
                    dot(row, &witness) - offsets[r]
                )));
            }
        }
        let mut hs = Halfspaces {
            normals,
            offsets,
            witness,
            bbox: (Vec::new(), Vec::new()),
        };
        hs.bbox = hs.estimate_bbox();
        Ok(ConvexSet::HalfspaceIntersection(hs))
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Box { lo, .. } => lo.len(),
            ConvexSet::Ball { center, .. } => center.len(),
            ConvexSet::Simplex { dim, .. } => *dim,
            ConvexSet::HalfspaceIntersection(hs) => hs.witness.len(),
        }
    }

    fn check_dim(&self, x: &[f64], context: &'static str) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::dim(context, self.dim(), x.len()));
        }
        Ok(())
    }

    /// Worst violation of the defining constraints at `x` (<= 0 inside).
    pub fn violation(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x, "violation")?;
        let v = match self {
            ConvexSet::Box { lo, hi } => x
                .iter()
                .enumerate()
                .map(|(j, &xj)| (lo[j] - xj).max(xj - hi[j]))
                .fold(f64::NEG_INFINITY, f64::max),
            ConvexSet::Ball { center, radius } => dist(x, center) - radius,
            ConvexSet::Simplex { scale, .. } => {
                let neg = x.iter().map(|&xj| -xj).fold(f64::NEG_INFINITY, f64::max);
                neg.max(x.iter().sum::<f64>() - scale)
            }
            ConvexSet::HalfspaceIntersection(hs) => hs.violation(x),
        };
        Ok(v)
    }

    /// True iff `x` violates no defining constraint by more than `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        if tol < 0.0 {
            return Err(Error::invalid("contains tolerance must be >= 0"));
        }
        Ok(self.violation(x)? <= tol)
    }

    /// Euclidean projection onto the set. Exact for Box/Ball/Simplex;
    /// Dykstra's alternating projections for halfspace intersections.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x, "project")?;
        match self {
            ConvexSet::Box { lo, hi } => Ok(x
                .iter()
                .enumerate()
                .map(|(j, &xj)| xj.clamp(lo[j], hi[j]))
                .collect()),
            ConvexSet::Ball { center, radius } => {
                let d = dist(x, center);
                if d <= *radius {
                    Ok(x.to_vec())
                } else {
                    let t = radius / d;
                    Ok(x
                        .iter()
                        .zip(center)
                        .map(|(&xj, &cj)| cj + t * (xj - cj))
                        .collect())
                }
            }
            ConvexSet::Simplex { scale, .. } => Ok(project_simplex(x, *scale)),
            ConvexSet::HalfspaceIntersection(hs) => hs.project(x),
        }
    }

    /// False as soon as any direction has infinite extent.
    pub fn bounded(&self) -> bool {
        match self {
            ConvexSet::Box { lo, hi } => {
                lo.iter().all(|l| l.is_finite()) && hi.iter().all(|h| h.is_finite())
            }
            ConvexSet::Ball { .. } | ConvexSet::Simplex { .. } => true,
            ConvexSet::HalfspaceIntersection(hs) => {
                hs.bbox.0.iter().all(|l| l.is_finite()) && hs.bbox.1.iter().all(|h| h.is_finite())
            }
        }
    }

    /// Per-coordinate bounds enclosing the set. Exact for Box/Ball/Simplex,
    /// probe-estimated (then padded) for halfspace intersections.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            ConvexSet::Box { lo, hi } => (lo.clone(), hi.clone()),
            ConvexSet::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            ConvexSet::Simplex { dim, scale } => (vec![0.0; *dim], vec![*scale; *dim]),
            ConvexSet::HalfspaceIntersection(hs) => hs.bbox.clone(),
        }
    }

    /// Diameter of the set (None when unbounded). The halfspace variant
    /// reports its bounding-box diagonal, an upper bound.
    pub fn diameter(&self) -> Option<f64> {
        if !self.bounded() {
            return None;
        }
        Some(match self {
            ConvexSet::Box { lo, hi } => dist(hi, lo),
            ConvexSet::Ball { radius, .. } => 2.0 * radius,
            ConvexSet::Simplex { dim, scale } => {
                if *dim == 1 {
                    *scale
                } else {
                    scale * 2.0_f64.sqrt()
                }
            }
            ConvexSet::HalfspaceIntersection(hs) => dist(&hs.bbox.1, &hs.bbox.0),
        })
    }

    /// Deterministic lattice covering the set.
    ///
    /// Box: tensor lattice with `resolution` nodes per axis (endpoints
    /// included). Ball/halfspaces: bounding-box lattice filtered by
    /// membership. Simplex: barycentric lattice of denominator
    /// `resolution - 1` (feasible by construction).
    pub fn sample_grid(&self, resolution: usize) -> Result<Vec<Vec<f64>>> {
        if resolution == 0 {
            return Err(Error::invalid("grid resolution must be >= 1"));
        }
        if !self.bounded() {
            return Err(Error::UnsupportedOperation(
                "cannot grid-sample an unbounded set; truncate it first".into(),
            ));
        }
        match self {
            ConvexSet::Box { lo, hi } => {
                let axes: Vec<Vec<f64>> = lo
                    .iter()
                    .zip(hi)
                    .map(|(&l, &h)| axis_nodes(l, h, resolution))
                    .collect();
                Ok(cartesian_product(&axes))
            }
            ConvexSet::Simplex { dim, scale } => {
                let q = resolution - 1;
                let mut out = Vec::new();
                let mut k = vec![0usize; *dim];
                simplex_lattice(&mut out, &mut k, 0, q, *scale, *dim);
                Ok(out)
            }
            ConvexSet::Ball { .. } | ConvexSet::HalfspaceIntersection(_) => {
                let (lo, hi) = self.bounding_box();
                let axes: Vec<Vec<f64>> = lo
                    .iter()
                    .zip(&hi)
                    .map(|(&l, &h)| axis_nodes(l, h, resolution))
                    .collect();
                let mut out = Vec::new();
                for p in cartesian_product(&axes) {
                    if self.contains(&p, 1e-9)? {
                        out.push(p);
                    }
                }
                Ok(out)
            }
        }
    }

    /// `count` uniform samples in the bounding box, projected onto the set.
    /// Deterministic for a fixed seed.
    pub fn sample_random(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        if !self.bounded() {
            return Err(Error::UnsupportedOperation(
                "cannot random-sample an unbounded set; truncate it first".into(),
            ));
        }
        let (lo, hi) = self.bounding_box();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let p: Vec<f64> = lo
                .iter()
                .zip(&hi)
                .map(|(&l, &h)| l + (h - l) * rng.random::<f64>())
                .collect();
            out.push(self.project(&p)?);
        }
        Ok(out)
    }

    /// Intersect with the box `[center - radius, center + radius]`.
    ///
    /// Only Box and HalfspaceIntersection variants can be unbounded, so the
    /// already-compact Ball/Simplex variants are returned unchanged.
    pub fn truncate(&self, center: &[f64], radius: f64) -> Result<ConvexSet> {
        self.check_dim(center, "truncate")?;
        if !radius.is_finite() || radius <= 0.0 {
            return Err(Error::invalid("truncation radius must be positive"));
        }
        match self {
            ConvexSet::Box { lo, hi } => {
                let nlo: Vec<f64> = lo
                    .iter()
                    .zip(center)
                    .map(|(&l, &c)| l.max(c - radius))
                    .collect();
                let nhi: Vec<f64> = hi
                    .iter()
                    .zip(center)
                    .map(|(&h, &c)| h.min(c + radius))
                    .collect();
                ConvexSet::new_box(nlo, nhi)
            }
            ConvexSet::Ball { .. } | ConvexSet::Simplex { .. } => Ok(self.clone()),
            ConvexSet::HalfspaceIntersection(hs) => {
                let dim = hs.witness.len();
                let mut normals = hs.normals.clone();
                let mut offsets = hs.offsets.clone();
                for j in 0..dim {
                    let mut row = vec![0.0; dim];
                    row[j] = 1.0;
                    normals.push(row.clone());
                    offsets.push(center[j] + radius);
                    row[j] = -1.0;
                    normals.push(row);
                    offsets.push(radius - center[j]);
                }
                // The truncation center is feasible in practice (it comes
                // from a compact core inside the set); fall back to a
                // projection when it is not.
                let witness = if hs.violation(center) <= 1e-9 {
                    center.to_vec()
                } else {
                    hs.project(center)?
                };
                ConvexSet::new_halfspaces(normals, offsets, witness)
            }
        }
    }
}

fn axis_nodes(lo: f64, hi: f64, resolution: usize) -> Vec<f64> {
    if resolution == 1 {
        return vec![0.5 * (lo + hi)];
    }
    let step = (hi - lo) / (resolution - 1) as f64;
    (0..resolution)
        .map(|i| {
            if i + 1 == resolution {
                hi
            } else {
                lo + step * i as f64
            }
        })
        .collect()
}

fn cartesian_product(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let total: usize = axes.iter().map(|a| a.len()).product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; axes.len()];
    for _ in 0..total {
        out.push(idx.iter().enumerate().map(|(j, &i)| axes[j][i]).collect());
        for j in (0..axes.len()).rev() {
            idx[j] += 1;
            if idx[j] < axes[j].len() {
                break;
            }
            idx[j] = 0;
        }
    }
    out
}

fn simplex_lattice(
    out: &mut Vec<Vec<f64>>,
    k: &mut Vec<usize>,
    pos: usize,
    q: usize,
    scale: f64,
    dim: usize,
) {
    if pos == dim {
        let point = if q == 0 {
            vec![0.0; dim]
        } else {
            k.iter().map(|&ki| scale * ki as f64 / q as f64).collect()
        };
        out.push(point);
        return;
    }
    let used: usize = k[..pos].iter().sum();
    for v in 0..=(q - used) {
        k[pos] = v;
        simplex_lattice(out, k, pos + 1, q, scale, dim);
        if q == 0 {
            break;
        }
    }
    k[pos] = 0;
}

/// Euclidean projection onto `{x >= 0, sum x <= scale}`.
///
/// If clipping to the nonnegative orthant already satisfies the sum bound the
/// clip is the projection; otherwise the optimum lies on `sum x = scale` and
/// is found by the sorted threshold rule.
fn project_simplex(x: &[f64], scale: f64) -> Vec<f64> {
    let clipped: Vec<f64> = x.iter().map(|&v| v.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= scale {
        return clipped;
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &v) in sorted.iter().enumerate() {
        cumsum += v;
        let t = (cumsum - scale) / (j + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    x.iter().map(|&v| (v - theta).max(0.0)).collect()
}

impl Halfspaces {
    pub fn normals(&self) -> &[Vec<f64>] {
        &self.normals
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn witness(&self) -> &[f64] {
        &self.witness
    }

    fn violation(&self, x: &[f64]) -> f64 {
        self.normals
            .iter()
            .zip(&self.offsets)
            .map(|(row, &b)| dot(row, x) - b)
            .fold(f64::NEG_INFINITY, f64::max)
            .max(f64::NEG_INFINITY)
    }

    /// Dykstra's alternating projections onto the halfspaces.
    ///
    /// Already-feasible inputs return unchanged, which also makes the
    /// projection exactly idempotent.
    fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if self.normals.is_empty() || self.violation(x) <= DYKSTRA_VIOLATION {
            return Ok(x.to_vec());
        }
        let dim = x.len();
        let m = self.normals.len();
        let mut y = x.to_vec();
        let mut corrections = vec![vec![0.0; dim]; m];
        for _ in 0..DYKSTRA_MAX_SWEEPS {
            let y_prev = y.clone();
            for (r, row) in self.normals.iter().enumerate() {
                let corrected: Vec<f64> = y.iter().zip(&corrections[r]).map(|(a, b)| a + b).collect();
                let slack = dot(row, &corrected) - self.offsets[r];
                let projected = if slack <= 0.0 {
                    corrected.clone()
                } else {
                    let nn = dot(row, row);
                    corrected
                        .iter()
                        .zip(row)
                        .map(|(&c, &n)| c - slack / nn * n)
                        .collect()
                };
                for j in 0..dim {
                    corrections[r][j] = corrected[j] - projected[j];
                }
                y = projected;
            }
            if dist(&y, &y_prev) <= DYKSTRA_DISPLACEMENT && self.violation(&y) <= DYKSTRA_VIOLATION
            {
                return Ok(y);
            }
        }
        Err(Error::NumericDomain(
            "halfspace projection did not converge within the sweep cap".into(),
        ))
    }

    /// Approximate per-coordinate bounds by projecting far probe points.
    ///
    /// The projection of `witness + L e_j` onto a bounded set lands near the
    /// face maximizing `x_j`; if it escapes toward the probe the direction is
    /// unbounded.
    fn estimate_bbox(&self) -> (Vec<f64>, Vec<f64>) {
        let dim = self.witness.len();
        let mut lo = vec![f64::NEG_INFINITY; dim];
        let mut hi = vec![f64::INFINITY; dim];
        if self.normals.is_empty() {
            return (lo, hi);
        }
        for j in 0..dim {
            for sign in [1.0, -1.0] {
                let mut probe = self.witness.clone();
                probe[j] += sign * BBOX_PROBE_DISTANCE;
                match self.project(&probe) {
                    Ok(p) if p[j].abs() <= UNBOUNDED_THRESHOLD => {
                        let pad = 1e-3 * (1.0 + p[j].abs());
                        if sign > 0.0 {
                            hi[j] = p[j] + pad;
                        } else {
                            lo[j] = p[j] - pad;
                        }
                    }
                    // Escaped or failed to converge: treat as unbounded.
                    _ => {}
                }
            }
        }
        (lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm(a: &[f64]) -> f64 {
        a.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    fn box1d(lo: f64, hi: f64) -> ConvexSet {
        ConvexSet::new_box(vec![lo], vec![hi]).unwrap()
    }

    #[test]
    fn project_box_clamps() {
        let s = box1d(-1.0, 1.0);
        assert_eq!(s.project(&[2.0]).unwrap(), vec![1.0]);
        assert_eq!(s.project(&[-3.0]).unwrap(), vec![-1.0]);
        assert_eq!(s.project(&[0.25]).unwrap(), vec![0.25]);
    }

    #[test]
    fn project_ball_radial() {
        let s = ConvexSet::new_ball(vec![0.0, 0.0], 1.0).unwrap();
        let p = s.project(&[3.0, 4.0]).unwrap();
        assert!((p[0] - 0.6).abs() < 1e-15);
        assert!((p[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn project_simplex_symmetric() {
        let s = ConvexSet::new_simplex(2, 1.0).unwrap();
        let p = s.project(&[2.0, 2.0]).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12);
        assert!((p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn contains_examples() {
        let b = box1d(-1.0, 1.0);
        assert!(b.contains(&[0.5], 0.0).unwrap());
        let ball = ConvexSet::new_ball(vec![0.0, 0.0], 1.0).unwrap();
        assert!(!ball.contains(&[1.0 + 1e-6, 0.0], 1e-9).unwrap());
        let sx = ConvexSet::new_simplex(2, 1.0).unwrap();
        assert!(sx.contains(&[0.3, 0.3], 0.0).unwrap());
    }

    #[test]
    fn grid_box_1d() {
        let s = ConvexSet::new_box(vec![0.0], vec![1.0]).unwrap();
        let g = s.sample_grid(3).unwrap();
        assert_eq!(g, vec![vec![0.0], vec![0.5], vec![1.0]]);
    }

    #[test]
    fn grid_simplex_count() {
        let s = ConvexSet::new_simplex(2, 1.0).unwrap();
        let g = s.sample_grid(3).unwrap();
        assert_eq!(g.len(), 6);
        for p in &g {
            assert!(s.contains(p, 0.0).unwrap());
        }
    }

    #[test]
    fn grid_ball_excludes_corners() {
        let s = ConvexSet::new_ball(vec![0.0, 0.0], 1.0).unwrap();
        let g = s.sample_grid(3).unwrap();
        assert_eq!(g.len(), 5);
    }

    #[test]
    fn grid_box_point_count() {
        let s = ConvexSet::new_box(vec![0.0, -1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(s.sample_grid(4).unwrap().len(), 16);
    }

    #[test]
    fn random_sampling_is_deterministic_and_feasible() {
        let s = ConvexSet::new_box(vec![0.0], vec![1.0]).unwrap();
        assert!(s.sample_random(0, 1).unwrap().is_empty());
        let a = s.sample_random(5, 42).unwrap();
        let b = s.sample_random(5, 42).unwrap();
        assert_eq!(a, b);

        let ball = ConvexSet::new_ball(vec![0.0, 0.0], 1.0).unwrap();
        for p in ball.sample_random(100, 7).unwrap() {
            assert!(norm(&p) <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn unbounded_box_rejects_sampling() {
        let s = ConvexSet::new_box(vec![f64::NEG_INFINITY], vec![f64::INFINITY]).unwrap();
        assert!(!s.bounded());
        assert!(matches!(
            s.sample_grid(3),
            Err(Error::UnsupportedOperation(_))
        ));
        assert!(matches!(
            s.sample_random(3, 0),
            Err(Error::UnsupportedOperation(_))
        ));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let s = ConvexSet::new_ball(vec![0.0, 0.0], 1.0).unwrap();
        assert!(matches!(
            s.project(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            s.contains(&[1.0], 0.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn halfspace_projection_meets_contract() {
        // The diamond |x| + |y| <= 1.
        let s = ConvexSet::new_halfspaces(
            vec![
                vec![1.0, 1.0],
                vec![1.0, -1.0],
                vec![-1.0, 1.0],
                vec![-1.0, -1.0],
            ],
            vec![1.0, 1.0, 1.0, 1.0],
            vec![0.0, 0.0],
        )
        .unwrap();
        assert!(s.bounded());
        let p = s.project(&[2.0, 2.0]).unwrap();
        assert!(s.contains(&p, 1e-9).unwrap());
        assert!((p[0] - 0.5).abs() < 1e-6 && (p[1] - 0.5).abs() < 1e-6);
        // Idempotence is exact because feasible points return unchanged.
        assert_eq!(s.project(&p).unwrap(), p);
        // bbox should be close to [-1, 1]^2.
        let (lo, hi) = s.bounding_box();
        assert!((lo[0] + 1.0).abs() < 0.01 && (hi[1] - 1.0).abs() < 0.01);
    }

    #[test]
    fn halfspace_unbounded_detected() {
        // x <= 1 in 2-D leaves three directions free.
        let s =
            ConvexSet::new_halfspaces(vec![vec![1.0, 0.0]], vec![1.0], vec![0.0, 0.0]).unwrap();
        assert!(!s.bounded());
    }

    #[test]
    fn halfspace_requires_feasible_witness() {
        let r = ConvexSet::new_halfspaces(vec![vec![1.0]], vec![0.0], vec![1.0]);
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn truncate_box_and_bounded_variants() {
        let s = ConvexSet::new_box(vec![f64::NEG_INFINITY], vec![f64::INFINITY]).unwrap();
        let t = s.truncate(&[0.0], 2.0).unwrap();
        assert!(t.bounded());
        assert_eq!(t.bounding_box(), (vec![-2.0], vec![2.0]));

        let ball = ConvexSet::new_ball(vec![0.0], 1.0).unwrap();
        let tb = ball.truncate(&[0.0], 5.0).unwrap();
        assert!(matches!(tb, ConvexSet::Ball { .. }));
    }

    #[test]
    fn projection_idempotent_and_feasible_randomized() {
        let sets = vec![
            ConvexSet::new_box(vec![-1.0, 0.0], vec![1.0, 2.0]).unwrap(),
            ConvexSet::new_ball(vec![0.5, -0.5], 1.5).unwrap(),
            ConvexSet::new_simplex(3, 2.0).unwrap(),
            ConvexSet::new_halfspaces(
                vec![vec![1.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]],
                vec![2.0, 0.0, 0.0],
                vec![0.5, 0.5],
            )
            .unwrap(),
        ];
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for s in &sets {
            for _ in 0..1000 {
                let x: Vec<f64> = (0..s.dim()).map(|_| rng.random_range(-5.0..5.0)).collect();
                let p = s.project(&x).unwrap();
                assert!(s.contains(&p, 1e-9).unwrap(), "projection infeasible");
                let pp = s.project(&p).unwrap();
                assert!(dist(&pp, &p) <= 1e-12, "projection not idempotent");
            }
        }
    }

    #[test]
    fn projection_is_nearest_point() {
        // Box/Ball/Simplex projections must beat random feasible points.
        let sets = vec![
            ConvexSet::new_box(vec![-1.0, 0.0], vec![1.0, 2.0]).unwrap(),
            ConvexSet::new_ball(vec![0.5, -0.5], 1.5).unwrap(),
            ConvexSet::new_simplex(3, 2.0).unwrap(),
        ];
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for s in &sets {
            for t in 0..20 {
                let x: Vec<f64> = (0..s.dim()).map(|_| rng.random_range(-4.0..4.0)).collect();
                let p = s.project(&x).unwrap();
                for y in s.sample_random(100, 1000 + t).unwrap() {
                    assert!(dist(&x, &p) <= dist(&x, &y) + 1e-9);
                }
            }
        }
    }
}
