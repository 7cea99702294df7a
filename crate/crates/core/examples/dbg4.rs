use trust_funnel::bench::{get_problem, ProblemMode};
use trust_funnel::{global_search, EvaluationLedger, FunnelParams, MultistartConfig, SlackProblem};

fn main() {
    let mut wins = 0;
    for seed in 0..50u64 {
        let prob = get_problem("HS23", ProblemMode::GreyBox).unwrap();
        let slack = SlackProblem::new(prob).unwrap();
        let ledger = EvaluationLedger::new(100);
        let config = MultistartConfig { seed, ..Default::default() };
        let s = global_search(&slack, &ledger, &FunnelParams::default(), &config).unwrap();
        let near = s.minima.iter().map(|m| format!("f={:.2}@({:.1},{:.1})cv={:.0e}", m.f, m.x[0], m.x[1], m.cv)).collect::<Vec<_>>();
        if (s.best.f - 2.0).abs() < 1e-2 && s.best.cv <= 1e-4 { wins += 1; }
        if seed < 12 || ((s.best.f - 2.0).abs() < 0.5) {
            println!("seed {seed}: best={:.3} minima {near:?}", s.best.f);
        }
    }
    println!("wins: {wins}/50");
}
