use nalgebra::DVector;
use trust_funnel::bench::{get_problem, ProblemMode};
use trust_funnel::{local_search, EvaluationLedger, FunnelParams, SlackProblem};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let name = args.get(1).map(|s| s.as_str()).unwrap_or("HS23");
    let grey = args.get(2).map(|s| s == "grey").unwrap_or(false);
    let mode = if grey { ProblemMode::GreyBox } else { ProblemMode::BlackBox };
    let x0: Vec<f64> = args.get(3).map(|s| s.split(',').map(|v| v.parse().unwrap()).collect())
        .unwrap_or(vec![2.0, 2.0]);
    let budget: usize = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(100);
    let prob = get_problem(name, mode).unwrap();
    let slack = SlackProblem::new(prob).unwrap();
    let ledger = EvaluationLedger::new(budget);
    let params = FunnelParams { trace: true, ..FunnelParams::default() };
    let out = local_search(&slack, &ledger, &params, &DVector::from_column_slice(&x0), budget, 7);
    println!("stop={:?} f={:.6} cv={:.3e} x={:?} evals={}", out.stop, out.f, out.cv, out.x.as_slice(), out.evaluations);
    for r in out.trace.iter().take(60) {
        println!("k={:<3} d={} {:<2} df={:9.3e} dz={:9.3e} v={:9.3e} vmax={:9.3e} pif={:?} acc={} dinf={:9.3e} ninf={:9.3e} tn={:9.3e} |Y|={} bb={}",
            r.k, r.depth, r.iter_type, r.delta_f, r.delta_z, r.v, r.v_max, r.pi_f.map(|v| format!("{v:.2e}")), r.accepted, r.d_inf, r.n_inf, r.t_norm, r.y_size, r.bb_calls);
    }
}
