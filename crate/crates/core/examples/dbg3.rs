use nalgebra::{DMatrix, DVector};
use trust_funnel::subsolvers::{dykstra_pair, lp_solve, spg_solve, LpProblem, SpgOptions};

fn main() {
    // HS23-like tangent subproblem at x ~ (1.4, 1.4), active g4 g5-ish.
    // J rows: models of [9x1^2+x2^2, x1^2-x2, x2^2-x1, x1+x2, x1^2+x2^2] wrt x, then -I5.
    let x = [1.4, 1.4];
    let jx = DMatrix::from_row_slice(5, 2, &[
        18.0 * x[0], 2.0 * x[1],
        2.0 * x[0], -1.0,
        -1.0, 2.0 * x[1],
        1.0, 1.0,
        2.0 * x[0], 2.0 * x[1],
    ]);
    let m = 5;
    let dim = 7;
    let mut j = DMatrix::zeros(m, dim);
    j.view_mut((0, 0), (m, 2)).copy_from(&jx);
    for i in 0..m { j[(i, 2 + i)] = -1.0; }
    // g_N: grad f = (2x1, 2x2) in x block.
    let mut g = DVector::zeros(dim);
    g[0] = 2.0 * x[0];
    g[1] = 2.0 * x[1];
    // B: x block = 2I.
    let mut b = DMatrix::zeros(dim, dim);
    b[(0, 0)] = 2.0;
    b[(1, 1)] = 2.0;
    // box: |t| <= 1 everywhere, slacks loose except rows 1,2 at lower bound 0 (active).
    let lo = DVector::from_vec(vec![-1.0, -1.0, -1.0, -0.0, -0.0, -1.0, -1.0]);
    let hi = DVector::from_element(7, 1.0);

    let jsvd = j.clone().svd(true, true);
    let null_proj = {
        let j = j.clone();
        move |v: &DVector<f64>| {
            let rhs = &j * v;
            match jsvd.solve(&rhs, 1e-12) { Ok(c) => v - c, Err(_) => v.clone() }
        }
    };
    let box_proj = {
        let lo = lo.clone(); let hi = hi.clone();
        move |v: &DVector<f64>| DVector::from_fn(v.len(), |i, _| v[i].clamp(lo[i], hi[i]))
    };
    let project = move |v: &DVector<f64>| dykstra_pair(v, &null_proj, &box_proj, 200, 1e-10);
    let bq = b.clone(); let gq = g.clone();
    let quad = move |tv: &DVector<f64>| {
        let bt = &bq * tv;
        (gq.dot(tv) + 0.5 * tv.dot(&bt), &gq + bt)
    };
    match spg_solve(quad, project, &DVector::zeros(dim), &SpgOptions::default()) {
        Ok(sol) => {
            println!("t = {:?}", sol.x.as_slice());
            println!("q(t) = {}  ||Jt|| = {}", sol.value, (&j * &sol.x).norm());
        }
        Err(e) => println!("SPG failed: {e}"),
    }
    let lp = LpProblem { cost: g.clone(), eq: j.clone(), lo: lo.clone(), hi: hi.clone() };
    println!("LP value would be {:?}", lp_solve(&lp).map(|s| s.value));
}
