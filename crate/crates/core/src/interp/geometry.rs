//! Poisedness measurement and sample-set geometry repair.
//!
//! The inner maximization of |l_i| over a ball is approximate: the quadratic
//! is maximized along the +-gradient direction and a 2n-point axis stencil,
//! with exact 1-D maximization on each ray clipped to the x box.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::basis::{dim_diagonal, dim_linear, dim_quadratic, eval_monomials};
use super::model::{frame_for, Interpolator, LagrangeBasis};
use super::{InterpError, ModelVariant};

/// Region over which poisedness is measured: a Euclidean ball intersected
/// with the x box.
#[derive(Debug, Clone)]
pub struct Region {
    pub center: DVector<f64>,
    pub radius: f64,
}

/// Maximizes |p| over the region for a quadratic given by its value, gradient
/// and Hessian at the region center. Returns (max, argmax).
fn max_abs_quadratic(
    val_c: f64,
    grad_c: &DVector<f64>,
    hess: &DMatrix<f64>,
    region: &Region,
    lo: &DVector<f64>,
    hi: &DVector<f64>,
) -> (f64, DVector<f64>) {
    let n = grad_c.len();
    let mut best = (val_c.abs(), region.center.clone());
    let mut consider = |dir: &DVector<f64>| {
        let nrm = dir.norm();
        if nrm == 0.0 {
            return;
        }
        let u = dir / nrm;
        // Largest feasible step along u inside box and ball.
        let mut tmax = region.radius;
        for i in 0..n {
            if u[i] > 0.0 && hi[i].is_finite() {
                tmax = tmax.min((hi[i] - region.center[i]) / u[i]);
            } else if u[i] < 0.0 && lo[i].is_finite() {
                tmax = tmax.min((lo[i] - region.center[i]) / u[i]);
            }
        }
        if tmax <= 0.0 {
            return;
        }
        let a = (u.transpose() * hess * &u)[(0, 0)];
        let b = grad_c.dot(&u);
        let mut ts = vec![tmax];
        if a.abs() > 0.0 {
            let t_star = -b / a;
            if t_star > 0.0 && t_star < tmax {
                ts.push(t_star);
            }
        }
        for t in ts {
            let q = val_c + t * b + 0.5 * t * t * a;
            if q.abs() > best.0 {
                let mut x = &region.center + t * &u;
                for i in 0..n {
                    x[i] = x[i].clamp(lo[i], hi[i]);
                }
                best = (q.abs(), x);
            }
        }
    };
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        consider(&e);
        e[i] = -1.0;
        consider(&e);
    }
    consider(grad_c);
    consider(&(-grad_c));
    best
}

/// Poisedness measure: `max_i max_{x in region} |l_i(x)|` (approximate inner
/// maximization). Also reports, per polynomial, its maximizer. Degenerate
/// sets yield infinity.
pub fn lambda_poisedness(
    points: &[DVector<f64>],
    cur: usize,
    region: &Region,
    lo: &DVector<f64>,
    hi: &DVector<f64>,
) -> (f64, Vec<(f64, DVector<f64>)>) {
    let interp = match Interpolator::new(points, cur, ModelVariant::MinL2) {
        Ok(i) => i,
        Err(_) => {
            return (
                f64::INFINITY,
                points.iter().map(|p| (f64::INFINITY, p.clone())).collect(),
            )
        }
    };
    let basis = match interp.lagrange() {
        Ok(b) => b,
        Err(_) => {
            return (
                f64::INFINITY,
                points.iter().map(|p| (f64::INFINITY, p.clone())).collect(),
            )
        }
    };
    lambda_from_basis(&basis, points.len(), region, lo, hi)
}

pub fn lambda_from_basis(
    basis: &LagrangeBasis,
    count: usize,
    region: &Region,
    lo: &DVector<f64>,
    hi: &DVector<f64>,
) -> (f64, Vec<(f64, DVector<f64>)>) {
    let mut lambda: f64 = 0.0;
    let mut per_poly = Vec::with_capacity(count);
    for i in 0..count {
        let (v, g, h) = basis.poly_parts(i, &region.center);
        let m = max_abs_quadratic(v, &g, &h, region, lo, hi);
        lambda = lambda.max(m.0);
        per_poly.push(m);
    }
    (lambda, per_poly)
}

fn is_degenerate(points: &[DVector<f64>], cur: usize) -> bool {
    Interpolator::new(points, cur, ModelVariant::MinL2).is_err()
}

/// Candidate locations used to recover from a degenerate configuration.
fn stencil(region: &Region, lo: &DVector<f64>, hi: &DVector<f64>) -> Vec<DVector<f64>> {
    let n = region.center.len();
    let mut out = Vec::new();
    let mut push = |x: DVector<f64>| {
        let mut x = x;
        for i in 0..n {
            x[i] = x[i].clamp(lo[i], hi[i]);
        }
        out.push(x);
    };
    for i in 0..n {
        for s in [1.0, -1.0, 0.5, -0.5] {
            let mut x = region.center.clone();
            x[i] += s * region.radius;
            push(x);
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            for (si, sj) in [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)] {
                let mut x = region.center.clone();
                let step = region.radius / std::f64::consts::SQRT_2;
                x[i] += si * step;
                x[j] += sj * step;
                push(x);
            }
        }
    }
    out
}

fn min_singular_ratio(points: &[DVector<f64>], cur: usize) -> f64 {
    let p1 = points.len();
    let n = points[0].len();
    let b = if p1 == dim_linear(n) {
        dim_linear(n)
    } else {
        dim_quadratic(n)
    };
    let frame = frame_for(points, cur);
    let mut m = DMatrix::zeros(p1, b);
    for (r, p) in points.iter().enumerate() {
        let u = frame.to_local(p);
        m.row_mut(r).copy_from_slice(eval_monomials(n, b, &u).as_slice());
    }
    let sv = m.svd(false, false).singular_values;
    let smax = sv.max();
    if smax == 0.0 {
        return 0.0;
    }
    sv[p1.min(b) - 1] / smax
}

fn duplicates(points: &[DVector<f64>], cand: &DVector<f64>, scale: f64) -> bool {
    points.iter().any(|p| (p - cand).amax() <= 1e-13 * (1.0 + scale))
}

/// Iteratively replaces the points whose Lagrange polynomials blow up inside
/// the region until the set is `lambda_target`-poised (or a cap is hit).
/// Points outside the region are pulled in first; the point at `cur` is never
/// touched. Returns the replacement log `(index, new point)`.
pub fn repair_points(
    points: &mut Vec<DVector<f64>>,
    cur: usize,
    region: &Region,
    lo: &DVector<f64>,
    hi: &DVector<f64>,
    lambda_target: f64,
) -> Result<Vec<(usize, DVector<f64>)>, InterpError> {
    let mut log: Vec<(usize, DVector<f64>)> = Vec::new();
    let cap = 30 + 6 * points.len();
    for _ in 0..cap {
        if is_degenerate(points, cur) {
            // Swap the most redundant point for the stencil candidate that
            // best restores rank.
            let mut best: Option<(f64, usize, DVector<f64>)> = None;
            let far_j = most_redundant_noncur(points, cur);
            for cand in stencil(region, lo, hi) {
                if duplicates(points, &cand, region.radius) {
                    continue;
                }
                let mut trial = points.clone();
                trial[far_j] = cand.clone();
                let score = min_singular_ratio(&trial, cur);
                if best.as_ref().is_none_or(|b| score > b.0) {
                    best = Some((score, far_j, cand));
                }
            }
            let Some((score, j, cand)) = best else {
                return Err(InterpError::IllConditioned);
            };
            if score == 0.0 {
                return Err(InterpError::IllConditioned);
            }
            points[j] = cand.clone();
            record(&mut log, j, cand);
            continue;
        }

        // Pull the farthest outlier into the region.
        let interp = Interpolator::new(points, cur, ModelVariant::MinL2)?;
        let basis = interp.lagrange()?;
        let mut out_j: Option<usize> = None;
        let mut out_d = region.radius * (1.0 + 1e-12);
        for (j, p) in points.iter().enumerate() {
            if j == cur {
                continue;
            }
            let d = (p - &region.center).norm();
            if d > out_d {
                out_d = d;
                out_j = Some(j);
            }
        }
        if let Some(j) = out_j {
            let (_, per) = lambda_from_basis(&basis, points.len(), region, lo, hi);
            let mut cand = per[j].1.clone();
            if duplicates(points, &cand, region.radius) {
                cand = fallback_candidate(points, region, lo, hi, cur);
            }
            points[j] = cand.clone();
            record(&mut log, j, cand);
            continue;
        }

        // All points inside: fix the worst Lagrange polynomial.
        let (lambda, per) = lambda_from_basis(&basis, points.len(), region, lo, hi);
        if lambda <= lambda_target {
            return Ok(log);
        }
        let mut worst: Option<(f64, usize)> = None;
        for (j, (v, _)) in per.iter().enumerate() {
            if j == cur {
                continue;
            }
            if worst.as_ref().is_none_or(|w| *v > w.0) {
                worst = Some((*v, j));
            }
        }
        let Some((wv, j)) = worst else {
            return Ok(log);
        };
        if wv <= lambda_target {
            // Only the current iterate exceeds the target; nothing movable.
            return Ok(log);
        }
        let mut cand = per[j].1.clone();
        if duplicates(points, &cand, region.radius) {
            cand = fallback_candidate(points, region, lo, hi, cur);
        }
        points[j] = cand.clone();
        record(&mut log, j, cand);
    }
    Ok(log)
}

fn record(log: &mut Vec<(usize, DVector<f64>)>, j: usize, cand: DVector<f64>) {
    if let Some(entry) = log.iter_mut().find(|(i, _)| *i == j) {
        entry.1 = cand;
    } else {
        log.push((j, cand));
    }
}

fn farthest_noncur(points: &[DVector<f64>], cur: usize, center: &DVector<f64>) -> usize {
    let mut best = (f64::NEG_INFINITY, if cur == 0 { 1 } else { 0 });
    for (j, p) in points.iter().enumerate() {
        if j == cur {
            continue;
        }
        let d = (p - center).norm();
        if d > best.0 {
            best = (d, j);
        }
    }
    best.1
}

/// The point whose system-matrix row contributes least to the rank: largest
/// component of the left singular vector of the smallest singular value.
fn most_redundant_noncur(points: &[DVector<f64>], cur: usize) -> usize {
    let p1 = points.len();
    let n = points[0].len();
    let b = if p1 == dim_linear(n) {
        dim_linear(n)
    } else {
        dim_quadratic(n)
    };
    let frame = frame_for(points, cur);
    let mut m = DMatrix::zeros(p1, b);
    for (r, p) in points.iter().enumerate() {
        let u = frame.to_local(p);
        m.row_mut(r).copy_from_slice(eval_monomials(n, b, &u).as_slice());
    }
    let svd = m.svd(true, false);
    let Some(u) = svd.u.as_ref() else {
        return farthest_noncur(points, cur, &points[cur]);
    };
    // Smallest singular value column (nalgebra does not sort).
    let mut k_min = 0;
    for k in 0..svd.singular_values.len() {
        if svd.singular_values[k] < svd.singular_values[k_min] {
            k_min = k;
        }
    }
    let mut best = (f64::NEG_INFINITY, if cur == 0 { 1 } else { 0 });
    for j in 0..p1 {
        if j == cur {
            continue;
        }
        let w = u[(j, k_min)].abs();
        if w > best.0 {
            best = (w, j);
        }
    }
    best.1
}

fn fallback_candidate(
    points: &[DVector<f64>],
    region: &Region,
    lo: &DVector<f64>,
    hi: &DVector<f64>,
    cur: usize,
) -> DVector<f64> {
    let mut best: Option<(f64, DVector<f64>)> = None;
    for cand in stencil(region, lo, hi) {
        if duplicates(points, &cand, region.radius) {
            continue;
        }
        let mut trial = points.to_vec();
        let j = farthest_noncur(&trial, cur, &region.center);
        trial[j] = cand.clone();
        let score = min_singular_ratio(&trial, cur);
        if best.as_ref().is_none_or(|b| score > b.0) {
            best = Some((score, cand));
        }
    }
    best.map(|b| b.1).unwrap_or_else(|| region.center.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    Simplex,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitDegree {
    Linear,
    Diagonal,
    Quadratic,
}

impl InitDegree {
    pub fn count(self, n: usize) -> usize {
        match self {
            InitDegree::Linear => dim_linear(n),
            InitDegree::Diagonal => dim_diagonal(n),
            InitDegree::Quadratic => dim_quadratic(n),
        }
    }
}

/// Axis offset from `x0` of magnitude up to `delta`, flipped inward where a
/// bound blocks; errors when the coordinate has (numerically) no room.
fn axis_offset(x0: &DVector<f64>, i: usize, delta: f64, lo: &DVector<f64>, hi: &DVector<f64>) -> Result<f64, InterpError> {
    let room_up = (hi[i] - x0[i]).max(0.0);
    let room_dn = (x0[i] - lo[i]).max(0.0);
    if room_up >= delta {
        Ok(delta)
    } else if room_dn >= delta {
        Ok(-delta)
    } else if room_up.max(room_dn) > 0.0 {
        Ok(if room_up >= room_dn { room_up } else { -room_dn })
    } else {
        Err(InterpError::DegenerateBox(i))
    }
}

/// Builds the initial interpolation points inside `B(x0; delta)` and the
/// x box: a coordinate simplex (optionally extended to diagonal or full
/// quadratic size) or uniform random draws repaired to poisedness.
pub fn initial_points<R: Rng + ?Sized>(
    x0: &DVector<f64>,
    delta: f64,
    mode: InitMode,
    degree: InitDegree,
    lo: &DVector<f64>,
    hi: &DVector<f64>,
    lambda_target: f64,
    rng: &mut R,
) -> Result<Vec<DVector<f64>>, InterpError> {
    let n = x0.len();
    let count = degree.count(n);
    let mut points = vec![x0.clone()];
    match mode {
        InitMode::Simplex => {
            let mut first_offsets = vec![0.0; n];
            for i in 0..n {
                let off = axis_offset(x0, i, delta, lo, hi)?;
                first_offsets[i] = off;
                let mut p = x0.clone();
                p[i] += off;
                points.push(p);
            }
            if degree != InitDegree::Linear {
                for i in 0..n {
                    // Opposite side; fall back to a half step inward.
                    let off = first_offsets[i];
                    let opp = -off;
                    let feasible =
                        x0[i] + opp >= lo[i] - 0.0 && x0[i] + opp <= hi[i] + 0.0;
                    let second = if feasible { opp } else { off * 0.5 };
                    let mut p = x0.clone();
                    p[i] += second;
                    points.push(p);
                }
            }
            if degree == InitDegree::Quadratic {
                let step = delta / std::f64::consts::SQRT_2;
                for i in 0..n {
                    for j in (i + 1)..n {
                        let si = first_offsets[i].signum();
                        let sj = first_offsets[j].signum();
                        let mut p = x0.clone();
                        p[i] = (p[i] + si * step).clamp(lo[i], hi[i]);
                        p[j] = (p[j] + sj * step).clamp(lo[j], hi[j]);
                        points.push(p);
                    }
                }
            }
        }
        InitMode::Random => {
            for i in 0..n {
                if !(hi[i] - lo[i] > 0.0) && hi[i] != lo[i] {
                    return Err(InterpError::DegenerateBox(i));
                }
            }
            while points.len() < count {
                let mut p = x0.clone();
                let mut ok = false;
                for _ in 0..200 {
                    for i in 0..n {
                        let a = lo[i].max(x0[i] - delta);
                        let b = hi[i].min(x0[i] + delta);
                        if !(b > a) {
                            return Err(InterpError::DegenerateBox(i));
                        }
                        p[i] = rng.random_range(a..=b);
                    }
                    if (&p - x0).norm() <= delta {
                        ok = true;
                        break;
                    }
                }
                if !ok {
                    // Scale the last draw back into the ball.
                    let d = &p - x0;
                    let nrm = d.norm();
                    if nrm > 0.0 {
                        p = x0 + d * (delta / nrm);
                        for i in 0..n {
                            p[i] = p[i].clamp(lo[i], hi[i]);
                        }
                    }
                }
                points.push(p);
            }
        }
    }
    points.truncate(count);
    let region = Region {
        center: x0.clone(),
        radius: delta,
    };
    repair_points(&mut points, 0, &region, lo, hi, lambda_target)?;
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn free_box(n: usize) -> (DVector<f64>, DVector<f64>) {
        (
            DVector::from_element(n, f64::NEG_INFINITY),
            DVector::from_element(n, f64::INFINITY),
        )
    }

    #[test]
    fn linear_lambda_analytic() {
        // Y = {(0,0),(1,0),(0,1)}, B((0,0);1): Lambda = 1 + sqrt(2).
        let pts = vec![
            DVector::from_vec(vec![0.0, 0.0]),
            DVector::from_vec(vec![1.0, 0.0]),
            DVector::from_vec(vec![0.0, 1.0]),
        ];
        let (lo, hi) = free_box(2);
        let region = Region {
            center: DVector::zeros(2),
            radius: 1.0,
        };
        let (lambda, _) = lambda_poisedness(&pts, 0, &region, &lo, &hi);
        assert!((lambda - (1.0 + std::f64::consts::SQRT_2)).abs() < 1e-9);

        // Dense-grid cross check on the ball boundary and interior.
        let mut grid_max: f64 = 0.0;
        for a in -50..=50 {
            for b in -50..=50 {
                let x = DVector::from_vec(vec![a as f64 / 50.0, b as f64 / 50.0]);
                if x.norm() <= 1.0 {
                    let l0 = (1.0 - x[0] - x[1]).abs();
                    grid_max = grid_max.max(l0.max(x[0].abs()).max(x[1].abs()));
                }
            }
        }
        assert!(lambda >= grid_max - 1e-6);
    }

    #[test]
    fn zero_radius_region_gives_delta_at_center() {
        let pts = vec![
            DVector::from_vec(vec![0.0, 0.0]),
            DVector::from_vec(vec![1.0, 0.0]),
            DVector::from_vec(vec![0.0, 1.0]),
        ];
        let (lo, hi) = free_box(2);
        let region = Region {
            center: DVector::zeros(2),
            radius: 0.0,
        };
        let (lambda, _) = lambda_poisedness(&pts, 0, &region, &lo, &hi);
        assert!((lambda - 1.0).abs() < 1e-9);
    }

    #[test]
    fn near_collinear_lambda_blows_up_monotonically() {
        let (lo, hi) = free_box(2);
        let region = Region {
            center: DVector::zeros(2),
            radius: 1.0,
        };
        let mut last = 0.0;
        for gap in [0.5, 0.1, 0.02, 0.004] {
            let pts = vec![
                DVector::from_vec(vec![0.0, 0.0]),
                DVector::from_vec(vec![1.0, 0.0]),
                DVector::from_vec(vec![0.5, gap]),
            ];
            let (lambda, _) = lambda_poisedness(&pts, 0, &region, &lo, &hi);
            assert!(lambda > last);
            last = lambda;
        }
        assert!(last > 100.0);
    }

    #[test]
    fn repair_fixes_collinear_draws() {
        let (lo, hi) = free_box(2);
        let region = Region {
            center: DVector::zeros(2),
            radius: 1.0,
        };
        let mut pts = vec![
            DVector::from_vec(vec![0.0, 0.0]),
            DVector::from_vec(vec![0.4, 0.4]),
            DVector::from_vec(vec![0.8, 0.8]),
        ];
        let log = repair_points(&mut pts, 0, &region, &lo, &hi, 100.0).unwrap();
        assert!(!log.is_empty());
        let (lambda, _) = lambda_poisedness(&pts, 0, &region, &lo, &hi);
        assert!(lambda <= 100.0);
    }

    #[test]
    fn repair_noop_when_already_poised() {
        let (lo, hi) = free_box(2);
        let region = Region {
            center: DVector::zeros(2),
            radius: 1.0,
        };
        let mut pts = vec![
            DVector::from_vec(vec![0.0, 0.0]),
            DVector::from_vec(vec![1.0, 0.0]),
            DVector::from_vec(vec![0.0, 1.0]),
        ];
        let log = repair_points(&mut pts, 0, &region, &lo, &hi, 100.0).unwrap();
        assert!(log.is_empty());
    }

    #[test]
    fn repair_pulls_far_points_in() {
        let (lo, hi) = free_box(2);
        let region = Region {
            center: DVector::zeros(2),
            radius: 0.5,
        };
        let mut pts = vec![
            DVector::from_vec(vec![0.0, 0.0]),
            DVector::from_vec(vec![4.0, 0.0]),
            DVector::from_vec(vec![0.0, 4.0]),
        ];
        repair_points(&mut pts, 0, &region, &lo, &hi, 100.0).unwrap();
        for p in &pts {
            assert!(p.norm() <= 0.5 + 1e-9);
        }
    }

    #[test]
    fn simplex_respects_bounds() {
        let x0 = DVector::from_vec(vec![0.95, 0.0]);
        let lo = DVector::from_vec(vec![0.0, 0.0]);
        let hi = DVector::from_vec(vec![1.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pts = initial_points(
            &x0,
            0.2,
            InitMode::Simplex,
            InitDegree::Linear,
            &lo,
            &hi,
            100.0,
            &mut rng,
        )
        .unwrap();
        assert_eq!(pts.len(), 3);
        // First axis flipped inward.
        assert!(pts[1][0] < 0.95);
        for p in &pts {
            assert!(p[0] >= 0.0 && p[0] <= 1.0 && p[1] >= 0.0 && p[1] <= 1.0);
        }
    }

    #[test]
    fn quadratic_simplex_in_1d_has_three_points() {
        let x0 = DVector::from_vec(vec![0.0]);
        let (lo, hi) = free_box(1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pts = initial_points(
            &x0,
            1.0,
            InitMode::Simplex,
            InitDegree::Quadratic,
            &lo,
            &hi,
            100.0,
            &mut rng,
        )
        .unwrap();
        assert_eq!(pts.len(), 3);
        let interp = Interpolator::new(&pts, 0, ModelVariant::MinL2).unwrap();
        let vals: Vec<f64> = pts.iter().map(|p| 2.0 * p[0] * p[0] - p[0]).collect();
        let model = interp.fit(&vals).unwrap();
        assert!((model.value(&DVector::from_vec(vec![3.0])) - 15.0).abs() < 1e-8);
    }

    #[test]
    fn random_mode_is_poised_after_repair() {
        let x0 = DVector::from_vec(vec![0.3, 0.3]);
        let lo = DVector::from_vec(vec![0.0, 0.0]);
        let hi = DVector::from_vec(vec![1.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts = initial_points(
            &x0,
            0.5,
            InitMode::Random,
            InitDegree::Quadratic,
            &lo,
            &hi,
            100.0,
            &mut rng,
        )
        .unwrap();
        assert_eq!(pts.len(), 6);
        let region = Region {
            center: x0.clone(),
            radius: 0.5,
        };
        let (lambda, _) = lambda_poisedness(&pts, 0, &region, &lo, &hi);
        assert!(lambda <= 100.0);
    }

    #[test]
    fn degenerate_box_is_reported() {
        let x0 = DVector::from_vec(vec![0.5, 0.5]);
        let lo = DVector::from_vec(vec![0.0, 0.5]);
        let hi = DVector::from_vec(vec![1.0, 0.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = initial_points(
            &x0,
            0.2,
            InitMode::Simplex,
            InitDegree::Linear,
            &lo,
            &hi,
            100.0,
            &mut rng,
        )
        .unwrap_err();
        assert!(matches!(err, InterpError::DegenerateBox(1)));
    }
}
