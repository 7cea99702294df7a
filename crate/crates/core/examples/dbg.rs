use trust_funnel::bench::{get_problem, ProblemMode};
use trust_funnel::{global_search, EvaluationLedger, FunnelParams, MultistartConfig, SlackProblem};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let name = args.get(1).map(|s| s.as_str()).unwrap_or("G6");
    let budget: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(100);
    let trials: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(10);
    let grey = args.get(4).map(|s| s == "grey").unwrap_or(false);
    let mode = if grey { ProblemMode::GreyBox } else { ProblemMode::BlackBox };
    let mut best = f64::INFINITY;
    let mut worst = f64::NEG_INFINITY;
    let mut sum = 0.0;
    let mut feas_count = 0;
    let t0 = std::time::Instant::now();
    for seed in 0..trials {
        let prob = get_problem(name, mode).unwrap();
        let slack = SlackProblem::new(prob).unwrap();
        let ledger = EvaluationLedger::new(budget);
        let config = MultistartConfig { seed, ..Default::default() };
        let summary = global_search(&slack, &ledger, &FunnelParams::default(), &config).unwrap();
        if !summary.no_feasible_minimum {
            feas_count += 1;
            sum += summary.best.f;
            if summary.best.f < best { best = summary.best.f; }
            if summary.best.f > worst { worst = summary.best.f; }
        }
    }
    println!("{name}{}: best {best:+.6}  avg {:+.4}  worst {worst:+.4}  feasible {feas_count}/{trials}  ({:?})",
        if grey { " (grey)" } else { "" }, sum / feas_count.max(1) as f64, t0.elapsed());
}
