//! Nonmonotone spectral projected gradient method with Barzilai-Borwein
//! steplengths, after Birgin, Martinez and Raydan.

use nalgebra::DVector;

use super::SubsolverError;

pub struct SpgOptions {
    pub max_iters: usize,
    pub memory: usize,
    pub sufficient_decrease: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub tol_rel: f64,
}

impl Default for SpgOptions {
    fn default() -> Self {
        SpgOptions {
            max_iters: 200,
            memory: 10,
            sufficient_decrease: 1e-4,
            lambda_min: 1e-10,
            lambda_max: 1e10,
            tol_rel: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpgSolution {
    pub x: DVector<f64>,
    pub value: f64,
    pub capped: bool,
}

/// Minimizes a smooth objective over a closed convex set given through a
/// projector. The returned point satisfies
/// `||P(x - g) - x|| <= tol_rel (1 + ||g(x0)||)` unless the cap was hit.
pub fn spg_solve<F, P>(
    mut obj_grad: F,
    project: P,
    x0: &DVector<f64>,
    opts: &SpgOptions,
) -> Result<SpgSolution, SubsolverError>
where
    F: FnMut(&DVector<f64>) -> (f64, DVector<f64>),
    P: Fn(&DVector<f64>) -> Result<DVector<f64>, SubsolverError>,
{
    let mut x = project(x0)?;
    let (mut fx, mut g) = obj_grad(&x);
    let tol = opts.tol_rel * (1.0 + g.norm());
    let mut history = vec![fx];
    let mut lambda = {
        let pg = project(&(&x - &g))? - &x;
        let nrm = pg.amax();
        if nrm > 0.0 {
            (1.0 / nrm).clamp(opts.lambda_min, opts.lambda_max)
        } else {
            1.0
        }
    };
    let mut capped = true;

    for _ in 0..opts.max_iters {
        let pg = project(&(&x - &g))? - &x;
        if pg.norm() <= tol {
            capped = false;
            break;
        }
        let d = project(&(&x - lambda * &g))? - &x;
        if d.norm() == 0.0 {
            capped = false;
            break;
        }
        let slope = g.dot(&d);
        let fmax = history.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let xt = &x + t * &d;
            let (ft, gt) = obj_grad(&xt);
            if ft <= fmax + opts.sufficient_decrease * t * slope {
                accepted = Some((xt, ft, gt));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            capped = false;
            break;
        };
        let s = &xn - &x;
        let y = &gn - &g;
        let sy = s.dot(&y);
        lambda = if sy > 0.0 {
            (s.norm_squared() / sy).clamp(opts.lambda_min, opts.lambda_max)
        } else {
            opts.lambda_max
        };
        x = xn;
        fx = fn_;
        g = gn;
        history.push(fx);
        if history.len() > opts.memory {
            history.remove(0);
        }
    }

    Ok(SpgSolution {
        x,
        value: fx,
        capped,
    })
}

/// Dykstra's alternating projection onto the intersection of two closed
/// convex sets. Used for the null-space-and-box feasible sets of the tangent
/// subproblem.
pub fn dykstra_pair<P1, P2>(
    v: &DVector<f64>,
    pa: P1,
    pb: P2,
    max_alternations: usize,
    tol: f64,
) -> Result<DVector<f64>, SubsolverError>
where
    P1: Fn(&DVector<f64>) -> DVector<f64>,
    P2: Fn(&DVector<f64>) -> DVector<f64>,
{
    let n = v.len();
    let mut x = v.clone();
    let mut p = DVector::zeros(n);
    let mut q = DVector::zeros(n);
    for _ in 0..max_alternations {
        let y = pa(&(&x + &p));
        let p_new = &x + &p - &y;
        let x_new = pb(&(&y + &q));
        let q_new = &y + &q - &x_new;
        let delta = (&x_new - &x).norm() + (&p_new - &p).norm() + (&q_new - &q).norm();
        x = x_new;
        p = p_new;
        q = q_new;
        if delta <= tol * (1.0 + v.norm()) {
            return Ok(x);
        }
    }
    // The alternation cap was hit. The iterate is feasible for the second
    // set by construction; accept it when it is also essentially feasible
    // for the first one, otherwise report a genuine failure.
    let scale = 1.0 + v.norm();
    if (pa(&x) - &x).norm() <= 1e-6 * scale {
        return Ok(x);
    }
    Err(SubsolverError::ProjectionFailure)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn box_projector(lo: DVector<f64>, hi: DVector<f64>) -> impl Fn(&DVector<f64>) -> Result<DVector<f64>, SubsolverError> {
        move |v: &DVector<f64>| {
            Ok(DVector::from_fn(v.len(), |i, _| v[i].clamp(lo[i], hi[i])))
        }
    }

    #[test]
    fn quadratic_over_box_is_projection() {
        let a = DVector::from_vec(vec![2.0, -0.5, 0.3]);
        let target = a.clone();
        let obj = move |x: &DVector<f64>| {
            let d = x - &target;
            (0.5 * d.norm_squared(), d)
        };
        let proj = box_projector(
            DVector::from_vec(vec![0.0, 0.0, 0.0]),
            DVector::from_vec(vec![1.0, 1.0, 1.0]),
        );
        let sol = spg_solve(obj, proj, &DVector::zeros(3), &SpgOptions::default()).unwrap();
        assert_relative_eq!(sol.x[0], 1.0, epsilon = 1e-6);
        assert_relative_eq!(sol.x[1], 0.0, epsilon = 1e-6);
        assert_relative_eq!(sol.x[2], 0.3, epsilon = 1e-6);
    }

    #[test]
    fn stationary_start_returns_immediately() {
        let obj = |x: &DVector<f64>| (0.5 * x.norm_squared(), x.clone());
        let proj = box_projector(
            DVector::from_vec(vec![-1.0, -1.0]),
            DVector::from_vec(vec![1.0, 1.0]),
        );
        let sol = spg_solve(obj, proj, &DVector::zeros(2), &SpgOptions::default()).unwrap();
        assert_eq!(sol.x, DVector::zeros(2));
        assert!(!sol.capped);
    }

    #[test]
    fn dykstra_meets_both_sets() {
        // Intersection of the halfplane-free affine line x0 = x1 and a box.
        let pa = |v: &DVector<f64>| {
            let avg = (v[0] + v[1]) / 2.0;
            DVector::from_vec(vec![avg, avg])
        };
        let pb = |v: &DVector<f64>| {
            DVector::from_vec(vec![v[0].clamp(0.25, 1.0), v[1].clamp(-1.0, 0.5)])
        };
        let v = DVector::from_vec(vec![2.0, -2.0]);
        let x = dykstra_pair(&v, pa, pb, 500, 1e-12).unwrap();
        assert_relative_eq!(x[0], x[1], epsilon = 1e-8);
        assert!(x[0] >= 0.25 - 1e-10 && x[1] <= 0.5 + 1e-10);
    }
}
