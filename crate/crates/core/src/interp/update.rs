//! Self-correcting geometry update of the interpolation set around a trial
//! point: augment while below capacity, swap on success, otherwise recycle
//! the trial point to replace a far or badly-poised interpolation point.

use nalgebra::DVector;

use super::model::LagrangeBasis;
use super::SampleSet;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UpdateOutcome {
    Augmented,
    Replaced(usize),
    Unchanged,
}

impl UpdateOutcome {
    pub fn changed(&self) -> bool {
        !matches!(self, UpdateOutcome::Unchanged)
    }
}

const NONZERO_TOL: f64 = 1e-12;

/// Inserts the evaluated trial point into the set. `criterion` is the
/// success test of the current iteration type; `at_marker` tells whether the
/// iterate sits at the last criticality marker. Tie-breaks take the lowest
/// index for reproducibility.
#[allow(clippy::too_many_arguments)]
pub fn update_interpolation_set(
    set: &mut SampleSet,
    basis: &LagrangeBasis,
    x_plus: &DVector<f64>,
    values_plus: DVector<f64>,
    delta: f64,
    eps_i: f64,
    criterion: bool,
    at_marker: bool,
    zeta: f64,
    lambda: f64,
) -> UpdateOutcome {
    // A trial that coincides with a stored point must not be re-inserted.
    if set.position_of(x_plus).is_some() {
        return UpdateOutcome::Unchanged;
    }

    // Step 1: augment while there is capacity.
    if set.len() < set.p_max {
        set.push(x_plus.clone(), values_plus);
        return UpdateOutcome::Augmented;
    }

    let lvals = basis.eval_all(x_plus);
    let weight = |j: usize| (&set.points[j] - x_plus).norm_squared() * lvals[j].abs();

    // Step 2: successful iteration swaps out the weighted argmax. The
    // current iterate itself is never discarded.
    if criterion {
        let mut best: Option<(f64, usize)> = None;
        for j in 0..set.len() {
            if j == set.cur {
                continue;
            }
            let w = weight(j);
            if best.is_none_or(|(bw, _)| w > bw) {
                best = Some((w, j));
            }
        }
        if let Some((_, j)) = best {
            set.replace(j, x_plus.clone(), values_plus);
            return UpdateOutcome::Replaced(j);
        }
        return UpdateOutcome::Unchanged;
    }

    // Steps 3 and 4 are gated on "x_k != theta_i or Delta_k <= eps_i".
    let gate = !at_marker || delta <= eps_i;
    if gate {
        let xk = set.points[set.cur].clone();
        // Step 3: far points with a nonzero Lagrange value at the trial.
        let far: Vec<usize> = (0..set.len())
            .filter(|&j| {
                j != set.cur
                    && (&set.points[j] - &xk).norm() > zeta * delta
                    && lvals[j].abs() > NONZERO_TOL
            })
            .collect();
        if let Some(j) = argmax_weight(&far, &weight) {
            set.replace(j, x_plus.clone(), values_plus);
            return UpdateOutcome::Replaced(j);
        }
        // Step 4: close points whose Lagrange value at the trial exceeds
        // the poisedness threshold.
        let close: Vec<usize> = (0..set.len())
            .filter(|&j| {
                j != set.cur
                    && (&set.points[j] - &xk).norm() <= zeta * delta
                    && lvals[j].abs() > lambda
            })
            .collect();
        if let Some(j) = argmax_weight(&close, &weight) {
            set.replace(j, x_plus.clone(), values_plus);
            return UpdateOutcome::Replaced(j);
        }
    }

    UpdateOutcome::Unchanged
}

fn argmax_weight(candidates: &[usize], weight: &impl Fn(usize) -> f64) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for &j in candidates {
        let w = weight(j);
        if best.is_none_or(|(bw, _)| w > bw) {
            best = Some((w, j));
        }
    }
    best.map(|(_, j)| j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::model::Interpolator;
    use crate::interp::ModelVariant;

    fn set_2d() -> SampleSet {
        let points = vec![
            DVector::from_vec(vec![0.0, 0.0]),
            DVector::from_vec(vec![1.0, 0.0]),
            DVector::from_vec(vec![0.0, 1.0]),
        ];
        let values = points
            .iter()
            .map(|p| DVector::from_vec(vec![p[0] + p[1]]))
            .collect();
        SampleSet {
            points,
            values,
            cur: 0,
            p_max: 3,
        }
    }

    fn basis_of(set: &SampleSet) -> LagrangeBasis {
        Interpolator::new(&set.points, set.cur, ModelVariant::MinL2)
            .unwrap()
            .lagrange()
            .unwrap()
    }

    #[test]
    fn augments_below_capacity() {
        let mut set = set_2d();
        set.p_max = 6;
        let basis = basis_of(&set);
        let out = update_interpolation_set(
            &mut set,
            &basis,
            &DVector::from_vec(vec![0.5, 0.5]),
            DVector::from_vec(vec![1.0]),
            1.0,
            0.01,
            false,
            false,
            1.0,
            100.0,
        );
        assert_eq!(out, UpdateOutcome::Augmented);
        assert_eq!(set.len(), 4);
    }

    #[test]
    fn success_swaps_weighted_argmax() {
        let mut set = set_2d();
        let basis = basis_of(&set);
        let x_plus = DVector::from_vec(vec![0.9, 0.05]);
        // Brute-force the expected argmax of ||y_j - x+||^2 |l_j(x+)|.
        let lv = basis.eval_all(&x_plus);
        let mut want = 0;
        let mut best = f64::NEG_INFINITY;
        for j in 0..3 {
            if j == set.cur {
                continue;
            }
            let w = (&set.points[j] - &x_plus).norm_squared() * lv[j].abs();
            if w > best {
                best = w;
                want = j;
            }
        }
        let out = update_interpolation_set(
            &mut set,
            &basis,
            &x_plus,
            DVector::from_vec(vec![0.95]),
            1.0,
            0.01,
            true,
            false,
            1.0,
            100.0,
        );
        assert_eq!(out, UpdateOutcome::Replaced(want));
        assert!(set.points.iter().any(|p| p == &x_plus));
    }

    #[test]
    fn no_replacement_when_gate_closed_and_sets_empty() {
        let mut set = set_2d();
        let basis = basis_of(&set);
        // criterion fails, x_k == theta (at_marker), Delta > eps_i
        let out = update_interpolation_set(
            &mut set,
            &basis,
            &DVector::from_vec(vec![0.2, 0.2]),
            DVector::from_vec(vec![0.4]),
            1.0,
            0.01,
            false,
            true,
            1.0,
            100.0,
        );
        assert_eq!(out, UpdateOutcome::Unchanged);
    }

    #[test]
    fn far_point_replaced_on_failure() {
        let mut set = set_2d();
        set.points[1] = DVector::from_vec(vec![10.0, 0.0]); // far from x_k
        set.values[1] = DVector::from_vec(vec![10.0]);
        let basis = basis_of(&set);
        let out = update_interpolation_set(
            &mut set,
            &basis,
            &DVector::from_vec(vec![0.1, 0.1]),
            DVector::from_vec(vec![0.2]),
            1.0,
            0.01,
            false,
            false,
            1.0,
            100.0,
        );
        assert_eq!(out, UpdateOutcome::Replaced(1));
    }

    #[test]
    fn never_discards_current_iterate() {
        let set = set_2d();
        let basis = basis_of(&set);
        for criterion in [true, false] {
            let mut s = set.clone();
            update_interpolation_set(
                &mut s,
                &basis,
                &DVector::from_vec(vec![0.4, 0.3]),
                DVector::from_vec(vec![0.7]),
                1.0,
                0.01,
                criterion,
                false,
                1.0,
                1.0, // tiny lambda so the close set is wide open
            );
            let xk = &set.points[set.cur];
            assert!(s.points.iter().any(|p| p == xk) || s.cur < s.len() && &s.points[s.cur] == xk);
        }
        let _ = set;
    }
}
