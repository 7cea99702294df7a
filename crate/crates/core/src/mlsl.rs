//! Clustering multistart: uniform sampling over the x box, merit-based
//! ranking, critical-distance filtering of start points, local-search
//! dispatch and bookkeeping of the minima found.

use nalgebra::DVector;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::funnel::{local_search, FunnelParams, IterationRecord, StopReason};
use crate::problem::{EvaluationLedger, SlackProblem, FEASIBILITY_TOL};

#[derive(Debug, Error)]
pub enum MlslError {
    #[error("multistart requires finite bounds on every x variable")]
    UnboundedDomain,
}

/// Global-phase settings. `None` fields fall back to the documented
/// defaults at run time.
#[derive(Clone, Debug)]
pub struct MultistartConfig {
    /// Fresh sample points per outer iteration; default `min(50, 10 n)`.
    pub samples_per_iter: Option<usize>,
    pub sigma: f64,
    pub max_outer: usize,
    /// Penalty of the l1 merit used to rank start points.
    pub penalty: f64,
    /// Per-local-search budget; default `0.7 * budget`.
    pub maxeval_ls: Option<usize>,
    pub f_global_optimum: Option<f64>,
    pub seed: u64,
}

impl Default for MultistartConfig {
    fn default() -> Self {
        MultistartConfig {
            samples_per_iter: None,
            sigma: 4.0,
            max_outer: 1000,
            penalty: 100.0,
            maxeval_ls: None,
            f_global_optimum: None,
            seed: 0,
        }
    }
}

/// One registered local minimum (or best point of a truncated search).
#[derive(Clone, Debug)]
pub struct LocalMinimumRecord {
    pub x: DVector<f64>,
    pub f: f64,
    pub cv: f64,
    pub multipliers: DVector<f64>,
    pub pi_f: Option<f64>,
    pub evaluations: usize,
    pub converged: bool,
    /// Merit value at the minimum, used by the exclusion test.
    pub phi: f64,
}

#[derive(Clone, Debug)]
pub struct GlobalSummary {
    /// Best feasible record, or the least-infeasible one when flagged.
    pub best: LocalMinimumRecord,
    /// Set when nothing reached the feasibility filter.
    pub no_feasible_minimum: bool,
    pub minima: Vec<LocalMinimumRecord>,
    pub f_of_minima: Vec<f64>,
    pub total_eval: usize,
    pub n_local_searches: usize,
    pub traces: Vec<Vec<IterationRecord>>,
}

/// Gamma(1 + n/2) evaluated exactly by the half-integer recurrence.
fn gamma_one_plus_half(n: usize) -> f64 {
    let mut x = 1.0 + n as f64 / 2.0;
    let mut acc = 1.0;
    while x > 1.5 {
        x -= 1.0;
        acc *= x;
    }
    if (x - 1.0).abs() < 1e-12 {
        acc
    } else {
        // remaining factor is Gamma(3/2) = sqrt(pi)/2
        acc * 0.5 * std::f64::consts::PI.sqrt()
    }
}

/// Critical exclusion distance of iteration `k` with `n_per` samples per
/// iteration over a box of measure `prod(hi - lo)`.
pub fn critical_radius(
    k: usize,
    n_per: usize,
    dim: usize,
    lo: &DVector<f64>,
    hi: &DVector<f64>,
    sigma: f64,
) -> f64 {
    debug_assert!(k >= 1 && n_per >= 2);
    let measure: f64 = (0..dim).map(|i| hi[i] - lo[i]).product();
    let kn = (k * n_per) as f64;
    let inner = gamma_one_plus_half(dim) * measure * sigma * kn.ln() / kn;
    std::f64::consts::FRAC_1_PI.sqrt() * inner.powf(1.0 / dim as f64)
}

struct Sample {
    x: DVector<f64>,
    phi: f64,
    dispatched: bool,
}

/// Appends a candidate to the minima list with tolerance-based dedup: two
/// records collapse only when both their points and their objectives agree;
/// the one with lower violation (then lower objective) survives.
pub fn register_minimum(minima: &mut Vec<LocalMinimumRecord>, candidate: LocalMinimumRecord) {
    for existing in minima.iter_mut() {
        let close_x = (&existing.x - &candidate.x).norm() <= 1e-4 * (1.0 + existing.x.norm());
        let close_f = (existing.f - candidate.f).abs() <= 1e-6 * (1.0 + existing.f.abs());
        if close_x && close_f {
            if (candidate.cv, candidate.f) < (existing.cv, existing.f) {
                *existing = candidate;
            }
            return;
        }
    }
    minima.push(candidate);
}

/// Runs the full global search. Outer iterations draw fresh uniform samples,
/// re-rank the whole pool by merit, and start a local search from every
/// candidate that has no better-ranked neighbor within the critical radius.
/// The exclusion test of iteration `k` only uses data available when the
/// iteration started, so dispatch decisions are reproducible.
pub fn global_search(
    slack: &SlackProblem,
    ledger: &EvaluationLedger,
    params: &FunnelParams,
    config: &MultistartConfig,
) -> Result<GlobalSummary, MlslError> {
    let n = slack.n();
    let lo = slack.parent.l_x.clone();
    let hi = slack.parent.u_x.clone();
    for i in 0..n {
        if !lo[i].is_finite() || !hi[i].is_finite() {
            return Err(MlslError::UnboundedDomain);
        }
    }
    let n_per = config
        .samples_per_iter
        .unwrap_or_else(|| (10 * n).min(50))
        .max(2);
    let maxeval_ls = config
        .maxeval_ls
        .unwrap_or_else(|| ((ledger.budget() as f64) * 0.7).round() as usize)
        .max(1);

    let mut samples: Vec<Sample> = Vec::new();
    let mut minima: Vec<LocalMinimumRecord> = Vec::new();
    let mut traces: Vec<Vec<IterationRecord>> = Vec::new();
    let mut n_searches = 0usize;
    let mut seed_stream = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_cafe);

    let target_reached = |ledger: &EvaluationLedger| -> bool {
        match config.f_global_optimum {
            None => false,
            Some(fo) => ledger
                .best_feasible()
                .is_some_and(|(_, f, _)| f <= fo + 1e-4 * (1.0 + fo.abs())),
        }
    };

    'outer: for k in 1..=config.max_outer {
        // Global phase: N fresh uniform samples, merit charged to the ledger.
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(k as u64);
        for _ in 0..n_per {
            let x = DVector::from_fn(n, |i, _| {
                if hi[i] > lo[i] {
                    rng.random_range(lo[i]..=hi[i])
                } else {
                    lo[i]
                }
            });
            match ledger.evaluate(slack, &x) {
                Ok(ev) => {
                    let phi = slack.merit_phi(ev.f, &ev.z, config.penalty);
                    samples.push(Sample {
                        x,
                        phi,
                        dispatched: false,
                    });
                }
                Err(_) => break 'outer,
            }
        }
        if target_reached(ledger) {
            break 'outer;
        }

        // Snapshot of everything known at the start of the local phase.
        let snapshot: Vec<(DVector<f64>, f64)> = samples
            .iter()
            .map(|s| (s.x.clone(), s.phi))
            .chain(minima.iter().map(|m| (m.x.clone(), m.phi)))
            .collect();
        let r_k = critical_radius(k, n_per, n, &lo, &hi, config.sigma);

        let mut order: Vec<usize> = (0..samples.len()).collect();
        order.sort_by(|&a, &b| {
            samples[a]
                .phi
                .partial_cmp(&samples[b].phi)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });

        for idx in order {
            if samples[idx].dispatched {
                continue;
            }
            let phi_i = samples[idx].phi;
            let xi = samples[idx].x.clone();
            let excluded = snapshot
                .iter()
                .any(|(xo, po)| *po < phi_i && (xo - &xi).norm() <= r_k);
            if excluded {
                continue;
            }
            if ledger.remaining() == 0 {
                break 'outer;
            }
            samples[idx].dispatched = true;
            let cap = maxeval_ls.min(ledger.remaining());
            let search_seed = seed_stream.next_u64();
            let out = local_search(slack, ledger, params, &xi, cap, search_seed);
            n_searches += 1;
            if params.trace {
                traces.push(out.trace.clone());
            }
            let phi = ledger
                .evaluate(slack, &out.x)
                .map(|ev| slack.merit_phi(ev.f, &ev.z, config.penalty))
                .unwrap_or(f64::INFINITY);
            register_minimum(
                &mut minima,
                LocalMinimumRecord {
                    x: out.x,
                    f: out.f,
                    cv: out.cv,
                    multipliers: out.multipliers,
                    pi_f: out.pi_f,
                    evaluations: out.evaluations,
                    converged: out.converged,
                    phi,
                },
            );
            if target_reached(ledger) {
                break 'outer;
            }
            if out.stop == StopReason::BudgetExhausted && ledger.remaining() == 0 {
                break 'outer;
            }
        }
    }

    // Best feasible record: the minima list first, backed by any evaluated
    // point the sampling phase produced.
    let mut best: Option<LocalMinimumRecord> = None;
    for rec in &minima {
        if rec.cv <= FEASIBILITY_TOL && best.as_ref().is_none_or(|b| rec.f < b.f) {
            best = Some(rec.clone());
        }
    }
    if let Some((x, f, cv)) = ledger.best_feasible() {
        if best.as_ref().is_none_or(|b| f < b.f) {
            best = Some(LocalMinimumRecord {
                x,
                f,
                cv,
                multipliers: DVector::zeros(slack.m),
                pi_f: None,
                evaluations: 0,
                converged: false,
                phi: f,
            });
        }
    }
    let (best, no_feasible) = match best {
        Some(b) => (b, false),
        None => {
            let mut fallback: Option<LocalMinimumRecord> = None;
            for rec in &minima {
                if fallback
                    .as_ref()
                    .is_none_or(|b| (rec.cv, rec.f) < (b.cv, b.f))
                {
                    fallback = Some(rec.clone());
                }
            }
            if let Some((x, f, cv)) = ledger.least_infeasible() {
                if fallback.as_ref().is_none_or(|b| (cv, f) < (b.cv, b.f)) {
                    fallback = Some(LocalMinimumRecord {
                        x,
                        f,
                        cv,
                        multipliers: DVector::zeros(slack.m),
                        pi_f: None,
                        evaluations: 0,
                        converged: false,
                        phi: f64::INFINITY,
                    });
                }
            }
            let fb = fallback.unwrap_or(LocalMinimumRecord {
                x: DVector::zeros(n),
                f: f64::INFINITY,
                cv: f64::INFINITY,
                multipliers: DVector::zeros(slack.m),
                pi_f: None,
                evaluations: 0,
                converged: false,
                phi: f64::INFINITY,
            });
            (fb, true)
        }
    };

    Ok(GlobalSummary {
        f_of_minima: minima.iter().map(|m| m.f).collect(),
        best,
        no_feasible_minimum: no_feasible,
        minima,
        total_eval: ledger.bb_calls(),
        n_local_searches: n_searches,
        traces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{FnKind, GreyBoxProblem, ScalarFn};
    use std::sync::Arc;

    fn unit_box(n: usize) -> (DVector<f64>, DVector<f64>) {
        (DVector::zeros(n), DVector::from_element(n, 1.0))
    }

    #[test]
    fn critical_radius_reference_value() {
        // n = 2, sigma = 4, unit box, kN = 50.
        let (lo, hi) = unit_box(2);
        let r = critical_radius(1, 50, 2, &lo, &hi, 4.0);
        assert!((r - 0.3156).abs() < 1e-3, "r = {r}");
    }

    #[test]
    fn critical_radius_strictly_decreasing() {
        let (lo, hi) = unit_box(3);
        let mut prev = f64::INFINITY;
        for k in 1..=20 {
            let r = critical_radius(k, 50, 3, &lo, &hi, 4.0);
            assert!(r < prev);
            prev = r;
        }
    }

    #[test]
    fn critical_radius_scales_with_box_width() {
        let (lo, hi) = unit_box(2);
        let r1 = critical_radius(3, 50, 2, &lo, &hi, 4.0);
        let hi2 = DVector::from_element(2, 2.0);
        let r2 = critical_radius(3, 50, 2, &lo, &hi2, 4.0);
        assert!((r2 / r1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gamma_half_integers() {
        assert!((gamma_one_plus_half(2) - 1.0).abs() < 1e-14); // Gamma(2)
        assert!((gamma_one_plus_half(4) - 2.0).abs() < 1e-14); // Gamma(3)
        let g25 = 0.75 * std::f64::consts::PI.sqrt(); // Gamma(5/2)
        assert!((gamma_one_plus_half(3) - g25).abs() < 1e-14);
    }

    #[test]
    fn register_minimum_dedup_rules() {
        let mk = |x: f64, f: f64, cv: f64| LocalMinimumRecord {
            x: DVector::from_vec(vec![x]),
            f,
            cv,
            multipliers: DVector::zeros(0),
            pi_f: None,
            evaluations: 0,
            converged: true,
            phi: f,
        };
        let mut l = Vec::new();
        register_minimum(&mut l, mk(1.0, 5.0, 0.0));
        assert_eq!(l.len(), 1);
        // Exact re-find: unchanged.
        register_minimum(&mut l, mk(1.0, 5.0, 0.0));
        assert_eq!(l.len(), 1);
        // Nearby point but very different objective: both kept.
        register_minimum(&mut l, mk(1.0 + 5e-5, 9.0, 0.0));
        assert_eq!(l.len(), 2);
    }

    #[test]
    fn unimodal_problem_rarely_dispatches_twice() {
        let mut total = 0;
        for seed in 0..6 {
            let f: ScalarFn = Arc::new(|x: &[f64]| x[0] * x[0] + x[1] * x[1]);
            let prob = GreyBoxProblem::builder(2, FnKind::BlackBox, f)
                .x_bounds(&[-1.0, -1.0], &[1.0, 1.0])
                .build()
                .unwrap();
            let slack = SlackProblem::new(prob).unwrap();
            let ledger = EvaluationLedger::new(200);
            let config = MultistartConfig {
                samples_per_iter: Some(10),
                max_outer: 1,
                seed,
                ..Default::default()
            };
            let summary =
                global_search(&slack, &ledger, &FunnelParams::default(), &config).unwrap();
            assert!(summary.n_local_searches >= 1);
            total += summary.n_local_searches;
        }
        // The ranked-and-excluded dispatch should start one search per
        // basin; allow a little slack across seeds.
        assert!(total <= 12, "dispatched {total} searches over 6 seeds");
    }

    #[test]
    fn double_well_finds_both_minima_and_returns_best() {
        // f(x) = (x^2-1)^2 + 0.1 x on [-2, 2]: minima near -1.012 and 0.987,
        // global at the negative one.
        let f: ScalarFn = Arc::new(|x: &[f64]| {
            let w = x[0] * x[0] - 1.0;
            w * w + 0.1 * x[0]
        });
        let prob = GreyBoxProblem::builder(1, FnKind::BlackBox, f)
            .x_bounds(&[-2.0], &[2.0])
            .build()
            .unwrap();
        let slack = SlackProblem::new(prob).unwrap();
        let ledger = EvaluationLedger::new(400);
        let config = MultistartConfig {
            samples_per_iter: Some(10),
            max_outer: 6,
            maxeval_ls: Some(60),
            seed: 3,
            ..Default::default()
        };
        let summary = global_search(&slack, &ledger, &FunnelParams::default(), &config).unwrap();
        let near = |target: f64| {
            summary
                .minima
                .iter()
                .any(|m| (m.x[0] - target).abs() < 2e-2)
        };
        assert!(near(-1.0124), "minima: {:?}", summary.f_of_minima);
        assert!(near(0.98727), "minima: {:?}", summary.f_of_minima);
        assert!(!summary.no_feasible_minimum);
        assert!((summary.best.x[0] + 1.0124).abs() < 2e-2);
        assert_eq!(summary.total_eval, ledger.bb_calls());
    }

    #[test]
    fn budget_zero_after_sampling_flags_no_feasible() {
        // Infeasible-everywhere constraint and a budget that dies during
        // sampling: the summary is flagged and carries the least-infeasible
        // point seen.
        let f: ScalarFn = Arc::new(|x: &[f64]| x[0]);
        let c: crate::problem::VectorFn = Arc::new(|x: &[f64]| vec![x[0] * x[0]]);
        let prob = GreyBoxProblem::builder(1, FnKind::BlackBox, f)
            .black_constraints(1, c, &[10.0], &[f64::INFINITY])
            .x_bounds(&[-1.0], &[1.0])
            .build()
            .unwrap();
        let slack = SlackProblem::new(prob).unwrap();
        let ledger = EvaluationLedger::new(5);
        let config = MultistartConfig {
            samples_per_iter: Some(10),
            seed: 1,
            ..Default::default()
        };
        let summary = global_search(&slack, &ledger, &FunnelParams::default(), &config).unwrap();
        assert!(summary.no_feasible_minimum);
        assert!(summary.best.cv > FEASIBILITY_TOL);
        assert!(summary.best.cv.is_finite());
    }

    #[test]
    fn unbounded_box_is_rejected() {
        let f: ScalarFn = Arc::new(|x: &[f64]| x[0]);
        let prob = GreyBoxProblem::builder(1, FnKind::BlackBox, f)
            .build()
            .unwrap();
        let slack = SlackProblem::new(prob).unwrap();
        let ledger = EvaluationLedger::new(10);
        assert!(matches!(
            global_search(
                &slack,
                &ledger,
                &FunnelParams::default(),
                &MultistartConfig::default()
            ),
            Err(MlslError::UnboundedDomain)
        ));
    }
}
