use nalgebra::DVector;
use trust_funnel::bench::{get_problem, ProblemMode};
use trust_funnel::{local_search, EvaluationLedger, FunnelParams, SlackProblem};

fn main() {
    let mut hits = 0;
    let mut total = 0;
    for i in 0..9 {
        for j in 0..9 {
            let x0 = vec![-5.0 + 1.5 * i as f64, -5.0 + 1.5 * j as f64];
            let prob = get_problem("HS23", ProblemMode::GreyBox).unwrap();
            let slack = SlackProblem::new(prob).unwrap();
            let ledger = EvaluationLedger::new(70);
            let params = FunnelParams::default();
            let out = local_search(&slack, &ledger, &params, &DVector::from_column_slice(&x0), 70, 11);
            total += 1;
            let ok = out.cv <= 1e-4 && (out.f - 2.0).abs() <= 1e-2;
            if ok { hits += 1; }
            print!("{}", if ok { 'X' } else { '.' });
        }
        println!();
    }
    println!("basin hits: {hits}/{total}");
}
