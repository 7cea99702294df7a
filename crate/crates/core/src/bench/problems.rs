//! Closed-form definitions of the benchmark problems, their bounds, best
//! known feasible values and reference solutions.
//!
//! Sources: the G-suite problems follow the Michalewicz-Schoenauer
//! collection; the welded beam, gas transmission compressor, pressure vessel
//! and speed reducer designs follow their classical engineering statements;
//! the pooling problem is the 600-profit demand case of the Haverly system;
//! HS21/HS23 are from the Hock-Schittkowski collection. Reference points were
//! refined to satisfy the feasibility filter at double precision.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::{BenchmarkEntry, GreyBoxSplit};
use crate::problem::{FnKind, GreyBoxProblem, JacobianFn, ScalarFn, VectorFn};

const INF: f64 = f64::INFINITY;

fn black(
    n: usize,
    f: ScalarFn,
    c: VectorFn,
    q: usize,
    clo: &[f64],
    chi: &[f64],
    xlo: &[f64],
    xhi: &[f64],
) -> GreyBoxProblem {
    GreyBoxProblem::builder(n, FnKind::BlackBox, f)
        .black_constraints(q, c, clo, chi)
        .x_bounds(xlo, xhi)
        .build()
        .expect("valid benchmark definition")
}

pub(super) fn registry_entries() -> Vec<BenchmarkEntry> {
    vec![
        harley(),
        wb4(),
        gtcd4(),
        pvd4(),
        sr7(),
        hesse(),
        gomez3(),
        g3(),
        g4(),
        g6(),
        g7(),
        g8(),
        g9(),
        g11(),
        hs21(),
        hs23(),
    ]
}

// ---------------------------------------------------------------- Harley

fn harley_f(x: &[f64]) -> f64 {
    // Variables: A, B, Cx, Cy, Px, Py, x, y, p (pool feeds, direct feeds,
    // pool outflows, product flows, pool quality). Profit is maximized, so
    // the objective is its negation.
    let (a, b, cx, cy, _px, _py, xf, yf, _p) = unpack9(x);
    -(9.0 * xf + 15.0 * yf - 6.0 * a - 16.0 * b - 10.0 * (cx + cy))
}

fn unpack9(x: &[f64]) -> (f64, f64, f64, f64, f64, f64, f64, f64, f64) {
    (x[0], x[1], x[2], x[3], x[4], x[5], x[6], x[7], x[8])
}

fn harley() -> BenchmarkEntry {
    let f: ScalarFn = Arc::new(harley_f);
    let c: VectorFn = Arc::new(|x: &[f64]| {
        let (a, b, cx, cy, px, py, xf, yf, p) = unpack9(x);
        vec![
            px + py - a - b,
            xf - px - cx,
            yf - py - cy,
            p * (px + py) - 3.0 * a - b,
            p * px + 2.0 * cx - 2.5 * xf,
            p * py + 2.0 * cy - 1.5 * yf,
        ]
    });
    let clo = [0.0, 0.0, 0.0, 0.0, -INF, -INF];
    let chi = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let xlo = [0.0; 9];
    let xhi = [600.0, 600.0, 600.0, 600.0, 600.0, 600.0, 600.0, 200.0, 3.0];
    let mut xlo_v = xlo.to_vec();
    xlo_v[8] = 1.0;
    BenchmarkEntry {
        name: "Harley",
        key: "harley",
        n: 9,
        constraints: 6,
        best_known: -600.0,
        reference: vec![300.0, 0.0, 300.0, 0.0, 300.0, 0.0, 600.0, 0.0, 3.0],
        make_black: Arc::new(move || black(9, f.clone(), c.clone(), 6, &clo, &chi, &xlo_v, &xhi)),
        greybox: None,
    }
}

// ------------------------------------------------------------------- WB4

fn wb4_parts(x: &[f64]) -> (f64, f64, f64, f64) {
    let (h, l, t, b) = (x[0], x[1], x[2], x[3]);
    let p = 6000.0;
    let ll = 14.0;
    let e = 30e6;
    let g = 12e6;
    let tp = p / (2.0f64.sqrt() * h * l);
    let mm = p * (ll + l / 2.0);
    let r = (l * l / 4.0 + ((h + t) / 2.0).powi(2)).sqrt();
    let j = 2.0 * (2.0f64.sqrt() * h * l * (l * l / 12.0 + ((h + t) / 2.0).powi(2)));
    let tpp = mm * r / j;
    let tau = (tp * tp + 2.0 * tp * tpp * l / (2.0 * r) + tpp * tpp).sqrt();
    let sigma = 6.0 * p * ll / (b * t * t);
    let delta = 4.0 * p * ll.powi(3) / (e * t.powi(3) * b);
    let pc = 4.013 * e * (t * t * b.powi(6) / 36.0).sqrt() / (ll * ll)
        * (1.0 - t / (2.0 * ll) * (e / (4.0 * g)).sqrt());
    (tau, sigma, delta, pc)
}

fn wb4() -> BenchmarkEntry {
    let f: ScalarFn =
        Arc::new(|x: &[f64]| 1.10471 * x[0] * x[0] * x[1] + 0.04811 * x[2] * x[3] * (14.0 + x[1]));
    let c: VectorFn = Arc::new(|x: &[f64]| {
        let (tau, sigma, delta, pc) = wb4_parts(x);
        vec![
            tau,
            sigma,
            x[0] - x[3],
            0.10471 * x[0] * x[0] + 0.04811 * x[2] * x[3] * (14.0 + x[1]),
            delta,
            pc,
        ]
    });
    let clo = [-INF, -INF, -INF, -INF, -INF, 6000.0];
    let chi = [13600.0, 30000.0, 0.0, 5.0, 0.25, INF];
    let xlo = [0.125, 0.1, 0.1, 0.1];
    let xhi = [10.0, 10.0, 10.0, 10.0];
    BenchmarkEntry {
        name: "WB4",
        key: "wb4",
        n: 4,
        constraints: 6,
        best_known: 1.7250,
        reference: vec![
            0.20572963978606135,
            3.4704886656279896,
            9.036623910357577,
            0.2057296397860101,
        ],
        make_black: Arc::new(move || black(4, f.clone(), c.clone(), 6, &clo, &chi, &xlo, &xhi)),
        greybox: None,
    }
}

// ----------------------------------------------------------------- GTCD4

fn gtcd4_f(x: &[f64]) -> f64 {
    8.61e5 * x[0].sqrt() * x[1] * x[2].powf(-2.0 / 3.0) * x[3].powf(-0.5)
        + 3.69e4 * x[2]
        + 7.72e8 / x[0] * x[1].powf(0.219)
        - 765.43e6 / x[0]
}

fn gtcd4_con(x: &[f64]) -> f64 {
    x[3] / (x[1] * x[1]) + 1.0 / (x[1] * x[1])
}

fn gtcd4() -> BenchmarkEntry {
    let f: ScalarFn = Arc::new(gtcd4_f);
    let c: VectorFn = Arc::new(|x: &[f64]| vec![gtcd4_con(x)]);
    let clo = [-INF];
    let chi = [1.0];
    let xlo = [20.0, 1.0, 20.0, 0.1];
    let xhi = [50.0, 10.0, 50.0, 60.0];
    let make_grey: Arc<dyn Fn() -> GreyBoxProblem + Send + Sync> = Arc::new(move || {
        let fb: ScalarFn = Arc::new(gtcd4_f);
        let h: VectorFn = Arc::new(|x: &[f64]| vec![gtcd4_con(x)]);
        let jac: JacobianFn = Arc::new(|x: &[f64]| {
            DMatrix::from_row_slice(
                1,
                4,
                &[
                    0.0,
                    -2.0 * (x[3] + 1.0) / (x[1] * x[1] * x[1]),
                    0.0,
                    1.0 / (x[1] * x[1]),
                ],
            )
        });
        GreyBoxProblem::builder(4, FnKind::BlackBox, fb)
            .white_constraints(1, h, jac, &[-INF], &[1.0])
            .x_bounds(&[20.0, 1.0, 20.0, 0.1], &[50.0, 10.0, 50.0, 60.0])
            .build()
            .unwrap()
    });
    BenchmarkEntry {
        name: "GTCD4",
        key: "gtcd4",
        n: 4,
        constraints: 1,
        best_known: 2964893.85,
        reference: vec![
            50.0,
            1.1782839570779644,
            24.592590119551637,
            0.3883530825073063,
        ],
        make_black: Arc::new(move || black(4, f.clone(), c.clone(), 1, &clo, &chi, &xlo, &xhi)),
        greybox: Some(GreyBoxSplit {
            bb_constraints: 0,
            wb_constraints: 1,
            objective_white: false,
            make: make_grey,
        }),
    }
}

// ------------------------------------------------------------------ PVD4

fn pvd4() -> BenchmarkEntry {
    let f: ScalarFn = Arc::new(|x: &[f64]| {
        0.6224 * x[0] * x[2] * x[3]
            + 1.7781 * x[1] * x[2] * x[2]
            + 3.1661 * x[0] * x[0] * x[3]
            + 19.84 * x[0] * x[0] * x[2]
    });
    let c: VectorFn = Arc::new(|x: &[f64]| {
        vec![
            -x[0] + 0.0193 * x[2],
            -x[1] + 0.00954 * x[2],
            PI * x[2] * x[2] * x[3] + 4.0 / 3.0 * PI * x[2].powi(3),
        ]
    });
    let clo = [-INF, -INF, 1296000.0];
    let chi = [0.0, 0.0, INF];
    let xlo = [0.0; 4];
    let xhi = [1.0, 1.0, 50.0, 240.0];
    BenchmarkEntry {
        name: "PVD4",
        key: "pvd4",
        n: 4,
        constraints: 3,
        best_known: 5804.45,
        reference: vec![
            0.7275909293543436,
            0.35964857336997086,
            37.69901188360704,
            240.0,
        ],
        make_black: Arc::new(move || black(4, f.clone(), c.clone(), 3, &clo, &chi, &xlo, &xhi)),
        greybox: None,
    }
}

// ------------------------------------------------------------------- SR7

fn sr7_f(x: &[f64]) -> f64 {
    let a = 3.3333 * x[2] * x[2] + 14.9334 * x[2] - 43.0934;
    0.7854 * x[0] * x[1] * x[1] * a - 1.508 * x[0] * (x[5] * x[5] + x[6] * x[6])
        + 7.4777 * (x[5].powi(3) + x[6].powi(3))
        + 0.7854 * (x[3] * x[5] * x[5] + x[4] * x[6] * x[6])
}

fn sr7_f_grad(x: &[f64]) -> nalgebra::DVector<f64> {
    let a = 3.3333 * x[2] * x[2] + 14.9334 * x[2] - 43.0934;
    nalgebra::DVector::from_vec(vec![
        0.7854 * x[1] * x[1] * a - 1.508 * (x[5] * x[5] + x[6] * x[6]),
        2.0 * 0.7854 * x[0] * x[1] * a,
        0.7854 * x[0] * x[1] * x[1] * (6.6666 * x[2] + 14.9334),
        0.7854 * x[5] * x[5],
        0.7854 * x[6] * x[6],
        -3.016 * x[0] * x[5] + 3.0 * 7.4777 * x[5] * x[5] + 2.0 * 0.7854 * x[3] * x[5],
        -3.016 * x[0] * x[6] + 3.0 * 7.4777 * x[6] * x[6] + 2.0 * 0.7854 * x[4] * x[6],
    ])
}

/// First nine (black-box) speed-reducer constraints.
fn sr7_c9(x: &[f64]) -> Vec<f64> {
    let (x1, x2, x3, x4, x5, x6, x7) = (x[0], x[1], x[2], x[3], x[4], x[5], x[6]);
    vec![
        27.0 / (x1 * x2 * x2 * x3),
        397.5 / (x1 * x2 * x2 * x3 * x3),
        1.93 * x4.powi(3) / (x2 * x3 * x6.powi(4)),
        1.93 * x5.powi(3) / (x2 * x3 * x7.powi(4)),
        ((745.0 * x4 / (x2 * x3)).powi(2) + 16.9e6).sqrt() / (110.0 * x6.powi(3)),
        ((745.0 * x5 / (x2 * x3)).powi(2) + 157.5e6).sqrt() / (85.0 * x7.powi(3)),
        x2 * x3,
        x1 / x2,
        x1 / x2,
    ]
}

/// Last two (white-box, linear) constraints.
fn sr7_c2(x: &[f64]) -> Vec<f64> {
    vec![1.5 * x[5] + 1.9 - x[3], 1.1 * x[6] + 1.9 - x[4]]
}

const SR7_C9_LO: [f64; 9] = [-INF, -INF, -INF, -INF, -INF, -INF, -INF, 5.0, -INF];
const SR7_C9_HI: [f64; 9] = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 40.0, INF, 12.0];
const SR7_XLO: [f64; 7] = [2.6, 0.7, 17.0, 7.3, 7.3, 2.9, 5.0];
const SR7_XHI: [f64; 7] = [3.6, 0.8, 28.0, 8.3, 8.3, 3.9, 5.5];

fn sr7() -> BenchmarkEntry {
    let f: ScalarFn = Arc::new(sr7_f);
    let c: VectorFn = Arc::new(|x: &[f64]| {
        let mut v = sr7_c9(x);
        v.extend(sr7_c2(x));
        v
    });
    let mut clo = SR7_C9_LO.to_vec();
    clo.extend([-INF, -INF]);
    let mut chi = SR7_C9_HI.to_vec();
    chi.extend([0.0, 0.0]);
    let make_grey: Arc<dyn Fn() -> GreyBoxProblem + Send + Sync> = Arc::new(|| {
        let fw: ScalarFn = Arc::new(sr7_f);
        let grad: crate::problem::GradientFn = Arc::new(sr7_f_grad);
        let cb: VectorFn = Arc::new(|x: &[f64]| sr7_c9(x));
        let h: VectorFn = Arc::new(|x: &[f64]| sr7_c2(x));
        let jac: JacobianFn = Arc::new(|_x: &[f64]| {
            DMatrix::from_row_slice(
                2,
                7,
                &[
                    0.0, 0.0, 0.0, -1.0, 0.0, 1.5, 0.0, //
                    0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.1,
                ],
            )
        });
        GreyBoxProblem::builder(7, FnKind::WhiteBox, fw)
            .f_grad(grad)
            .black_constraints(9, cb, &SR7_C9_LO, &SR7_C9_HI)
            .white_constraints(2, h, jac, &[-INF, -INF], &[0.0, 0.0])
            .x_bounds(&SR7_XLO, &SR7_XHI)
            .build()
            .unwrap()
    });
    BenchmarkEntry {
        name: "SR7",
        key: "sr7",
        n: 7,
        constraints: 11,
        best_known: 2994.42,
        reference: vec![
            3.5,
            0.7,
            17.0,
            7.3,
            7.715319911478245,
            3.350214666096447,
            5.286654464980222,
        ],
        make_black: Arc::new(move || {
            black(7, f.clone(), c.clone(), 11, &clo, &chi, &SR7_XLO, &SR7_XHI)
        }),
        greybox: Some(GreyBoxSplit {
            bb_constraints: 9,
            wb_constraints: 2,
            objective_white: true,
            make: make_grey,
        }),
    }
}

// ----------------------------------------------------------------- Hesse

fn hesse_f(x: &[f64]) -> f64 {
    -25.0 * (x[0] - 2.0).powi(2)
        - (x[1] - 2.0).powi(2)
        - (x[2] - 1.0).powi(2)
        - (x[3] - 4.0).powi(2)
        - (x[4] - 1.0).powi(2)
        - (x[5] - 4.0).powi(2)
}

const HESSE_XLO: [f64; 6] = [0.0, 0.0, 1.0, 0.0, 1.0, 0.0];
const HESSE_XHI: [f64; 6] = [5.0, 5.0, 5.0, 6.0, 5.0, 10.0];

fn hesse() -> BenchmarkEntry {
    let f: ScalarFn = Arc::new(hesse_f);
    let c: VectorFn = Arc::new(|x: &[f64]| {
        vec![
            (x[2] - 3.0).powi(2) + x[3],
            (x[4] - 3.0).powi(2) + x[5],
            x[0] + x[1],
            x[0] - 3.0 * x[1],
            -x[0] + x[1],
            x[0] + x[1],
        ]
    });
    let clo = [4.0, 4.0, 2.0, -INF, -INF, -INF];
    let chi = [INF, INF, INF, 2.0, 2.0, 6.0];
    let make_grey: Arc<dyn Fn() -> GreyBoxProblem + Send + Sync> = Arc::new(|| {
        let fw: ScalarFn = Arc::new(hesse_f);
        let grad: crate::problem::GradientFn = Arc::new(|x: &[f64]| {
            nalgebra::DVector::from_vec(vec![
                -50.0 * (x[0] - 2.0),
                -2.0 * (x[1] - 2.0),
                -2.0 * (x[2] - 1.0),
                -2.0 * (x[3] - 4.0),
                -2.0 * (x[4] - 1.0),
                -2.0 * (x[5] - 4.0),
            ])
        });
        let cb: VectorFn = Arc::new(|x: &[f64]| {
            vec![
                (x[2] - 3.0).powi(2) + x[3],
                (x[4] - 3.0).powi(2) + x[5],
                x[0] + x[1],
            ]
        });
        let h: VectorFn = Arc::new(|x: &[f64]| {
            vec![x[0] - 3.0 * x[1], -x[0] + x[1], x[0] + x[1]]
        });
        let jac: JacobianFn = Arc::new(|_x: &[f64]| {
            DMatrix::from_row_slice(
                3,
                6,
                &[
                    1.0, -3.0, 0.0, 0.0, 0.0, 0.0, //
                    -1.0, 1.0, 0.0, 0.0, 0.0, 0.0, //
                    1.0, 1.0, 0.0, 0.0, 0.0, 0.0,
                ],
            )
        });
        GreyBoxProblem::builder(6, FnKind::WhiteBox, fw)
            .f_grad(grad)
            .black_constraints(3, cb, &[4.0, 4.0, 2.0], &[INF, INF, INF])
            .white_constraints(3, h, jac, &[-INF, -INF, -INF], &[2.0, 2.0, 6.0])
            .x_bounds(&HESSE_XLO, &HESSE_XHI)
            .build()
            .unwrap()
    });
    BenchmarkEntry {
        name: "Hesse",
        key: "hesse",
        n: 6,
        constraints: 6,
        best_known: -310.0,
        reference: vec![5.0, 1.0, 5.0, 0.0, 5.0, 10.0],
        make_black: Arc::new(move || {
            black(6, f.clone(), c.clone(), 6, &clo, &chi, &HESSE_XLO, &HESSE_XHI)
        }),
        greybox: Some(GreyBoxSplit {
            bb_constraints: 3,
            wb_constraints: 3,
            objective_white: true,
            make: make_grey,
        }),
    }
}

// --------------------------------------------------------------- Gomez 3

fn gomez3() -> BenchmarkEntry {
    let f: ScalarFn = Arc::new(|x: &[f64]| {
        (4.0 - 2.1 * x[0] * x[0] + x[0].powi(4) / 3.0) * x[0] * x[0]
            + x[0] * x[1]
            + (-4.0 + 4.0 * x[1] * x[1]) * x[1] * x[1]
    });
    let c: VectorFn = Arc::new(|x: &[f64]| {
        vec![-(4.0 * PI * x[0]).sin() + 2.0 * (2.0 * PI * x[1]).sin().powi(2)]
    });
    let clo = [-INF];
    let chi = [0.0];
    let xlo = [-1.0, -1.0];
    let xhi = [1.0, 1.0];
    BenchmarkEntry {
        name: "Gómez #3",
        key: "gomez3",
        n: 2,
        constraints: 1,
        best_known: -0.9711,
        reference: vec![0.10926013188848, -0.6234483519177579],
        make_black: Arc::new(move || black(2, f.clone(), c.clone(), 1, &clo, &chi, &xlo, &xhi)),
        greybox: None,
    }
}

// --------------------------------------------------------------- G suite

fn g3() -> BenchmarkEntry {
    // Two-variable member of the scalable product problem:
    // min -(sqrt(n))^n prod x_i subject to sum x_i^2 = 1.
    let f: ScalarFn = Arc::new(|x: &[f64]| -2.0 * x[0] * x[1]);
    let c: VectorFn = Arc::new(|x: &[f64]| vec![x[0] * x[0] + x[1] * x[1]]);
    let clo = [1.0];
    let chi = [1.0];
    let xlo = [0.0, 0.0];
    let xhi = [1.0, 1.0];
    BenchmarkEntry {
        name: "G3",
        key: "g3",
        n: 2,
        constraints: 1,
        best_known: -1.0,
        reference: vec![std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2],
        make_black: Arc::new(move || black(2, f.clone(), c.clone(), 1, &clo, &chi, &xlo, &xhi)),
        greybox: None,
    }
}

fn g4() -> BenchmarkEntry {
    // Each range constraint is registered on both sides, matching the
    // published count of six.
    let f: ScalarFn = Arc::new(|x: &[f64]| {
        5.3578547 * x[2] * x[2] + 0.8356891 * x[0] * x[4] + 37.293239 * x[0] - 40792.141
    });
    let c: VectorFn = Arc::new(|x: &[f64]| {
        let u = 85.334407 + 0.0056858 * x[1] * x[4] + 0.0006262 * x[0] * x[3]
            - 0.0022053 * x[2] * x[4];
        let v = 80.51249 + 0.0071317 * x[1] * x[4] + 0.0029955 * x[0] * x[1]
            + 0.0021813 * x[2] * x[2];
        let w = 9.300961 + 0.0047026 * x[2] * x[4] + 0.0012547 * x[0] * x[2]
            + 0.0019085 * x[2] * x[3];
        vec![u, u, v, v, w, w]
    });
    let clo = [0.0, -INF, 90.0, -INF, 20.0, -INF];
    let chi = [INF, 92.0, INF, 110.0, INF, 25.0];
    let xlo = [78.0, 33.0, 27.0, 27.0, 27.0];
    let xhi = [102.0, 45.0, 45.0, 45.0, 45.0];
    BenchmarkEntry {
        name: "G4",
        key: "g4",
        n: 5,
        constraints: 6,
        best_known: -30665.539,
        reference: vec![
            78.0,
            33.000000000000135,
            29.99525602351004,
            45.0,
            36.77581290534816,
        ],
        make_black: Arc::new(move || black(5, f.clone(), c.clone(), 6, &clo, &chi, &xlo, &xhi)),
        greybox: None,
    }
}

fn g6() -> BenchmarkEntry {
    let f: ScalarFn = Arc::new(|x: &[f64]| (x[0] - 10.0).powi(3) + (x[1] - 20.0).powi(3));
    let c: VectorFn = Arc::new(|x: &[f64]| {
        vec![
            (x[0] - 5.0).powi(2) + (x[1] - 5.0).powi(2),
            (x[0] - 6.0).powi(2) + (x[1] - 5.0).powi(2),
        ]
    });
    let clo = [100.0, -INF];
    let chi = [INF, 82.81];
    let xlo = [13.0, 0.0];
    let xhi = [100.0, 100.0];
    BenchmarkEntry {
        name: "G6",
        key: "g6",
        n: 2,
        constraints: 2,
        best_known: -6961.8139,
        reference: vec![14.095, 0.8429607892154776],
        make_black: Arc::new(move || black(2, f.clone(), c.clone(), 2, &clo, &chi, &xlo, &xhi)),
        greybox: None,
    }
}

fn g7() -> BenchmarkEntry {
    let f: ScalarFn = Arc::new(|x: &[f64]| {
        x[0] * x[0] + x[1] * x[1] + x[0] * x[1] - 14.0 * x[0] - 16.0 * x[1]
            + (x[2] - 10.0).powi(2)
            + 4.0 * (x[3] - 5.0).powi(2)
            + (x[4] - 3.0).powi(2)
            + 2.0 * (x[5] - 1.0).powi(2)
            + 5.0 * x[6] * x[6]
            + 7.0 * (x[7] - 11.0).powi(2)
            + 2.0 * (x[8] - 10.0).powi(2)
            + (x[9] - 7.0).powi(2)
            + 45.0
    });
    let c: VectorFn = Arc::new(|x: &[f64]| {
        vec![
            4.0 * x[0] + 5.0 * x[1] - 3.0 * x[6] + 9.0 * x[7],
            10.0 * x[0] - 8.0 * x[1] - 17.0 * x[6] + 2.0 * x[7],
            -8.0 * x[0] + 2.0 * x[1] + 5.0 * x[8] - 2.0 * x[9],
            3.0 * (x[0] - 2.0).powi(2) + 4.0 * (x[1] - 3.0).powi(2) + 2.0 * x[2] * x[2]
                - 7.0 * x[3],
            5.0 * x[0] * x[0] + 8.0 * x[1] + (x[2] - 6.0).powi(2) - 2.0 * x[3],
            x[0] * x[0] + 2.0 * (x[1] - 2.0).powi(2) - 2.0 * x[0] * x[1] + 14.0 * x[4]
                - 6.0 * x[5],
            0.5 * (x[0] - 8.0).powi(2) + 2.0 * (x[1] - 4.0).powi(2) + 3.0 * x[4] * x[4] - x[5],
            -3.0 * x[0] + 6.0 * x[1] + 12.0 * (x[8] - 8.0).powi(2) - 7.0 * x[9],
        ]
    });
    let clo = [-INF; 8];
    let chi = [105.0, 0.0, 12.0, 120.0, 40.0, 0.0, 30.0, 0.0];
    let xlo = [-10.0; 10];
    let xhi = [10.0; 10];
    BenchmarkEntry {
        name: "G7",
        key: "g7",
        n: 10,
        constraints: 8,
        best_known: 24.3062091,
        reference: vec![
            2.1719963687365897,
            2.363682971950595,
            8.77392572272667,
            5.095984409879308,
            0.9906547642365376,
            1.4305739782395588,
            1.321644207727414,
            9.828725809839767,
            8.280091438504838,
            8.375926093267582,
        ],
        make_black: Arc::new(move || black(10, f.clone(), c.clone(), 8, &clo, &chi, &xlo, &xhi)),
        greybox: None,
    }
}

fn g8() -> BenchmarkEntry {
    let f: ScalarFn = Arc::new(|x: &[f64]| {
        -(2.0 * PI * x[0]).sin().powi(3) * (2.0 * PI * x[1]).sin()
            / (x[0].powi(3) * (x[0] + x[1]))
    });
    let c: VectorFn = Arc::new(|x: &[f64]| {
        vec![
            x[0] * x[0] - x[1] + 1.0,
            1.0 - x[0] + (x[1] - 4.0).powi(2),
        ]
    });
    let clo = [-INF, -INF];
    let chi = [0.0, 0.0];
    let xlo = [0.0, 0.0];
    let xhi = [10.0, 10.0];
    BenchmarkEntry {
        name: "G8",
        key: "g8",
        n: 2,
        constraints: 2,
        best_known: -0.095825,
        reference: vec![1.2279713462659883, 4.245373361286233],
        make_black: Arc::new(move || black(2, f.clone(), c.clone(), 2, &clo, &chi, &xlo, &xhi)),
        greybox: None,
    }
}

fn g9() -> BenchmarkEntry {
    let f: ScalarFn = Arc::new(|x: &[f64]| {
        (x[0] - 10.0).powi(2)
            + 5.0 * (x[1] - 12.0).powi(2)
            + x[2].powi(4)
            + 3.0 * (x[3] - 11.0).powi(2)
            + 10.0 * x[4].powi(6)
            + 7.0 * x[5] * x[5]
            + x[6].powi(4)
            - 4.0 * x[5] * x[6]
            - 10.0 * x[5]
            - 8.0 * x[6]
    });
    let c: VectorFn = Arc::new(|x: &[f64]| {
        vec![
            2.0 * x[0] * x[0] + 3.0 * x[1].powi(4) + x[2] + 4.0 * x[3] * x[3] + 5.0 * x[4],
            7.0 * x[0] + 3.0 * x[1] + 10.0 * x[2] * x[2] + x[3] - x[4],
            23.0 * x[0] + x[1] * x[1] + 6.0 * x[5] * x[5] - 8.0 * x[6],
            4.0 * x[0] * x[0] + x[1] * x[1] - 3.0 * x[0] * x[1] + 2.0 * x[2] * x[2] + 5.0 * x[5]
                - 11.0 * x[6],
        ]
    });
    let clo = [-INF; 4];
    let chi = [127.0, 282.0, 196.0, 0.0];
    let xlo = [-10.0; 7];
    let xhi = [10.0; 7];
    BenchmarkEntry {
        name: "G9",
        key: "g9",
        n: 7,
        constraints: 4,
        best_known: 680.6300573,
        reference: vec![
            2.3304989722055085,
            1.9513725544336142,
            -0.47754420314446155,
            4.365726053018921,
            -0.6244876284571823,
            1.0381302623400075,
            1.5942263390637552,
        ],
        make_black: Arc::new(move || black(7, f.clone(), c.clone(), 4, &clo, &chi, &xlo, &xhi)),
        greybox: None,
    }
}

fn g11() -> BenchmarkEntry {
    let f: ScalarFn = Arc::new(|x: &[f64]| x[0] * x[0] + (x[1] - 1.0).powi(2));
    let c: VectorFn = Arc::new(|x: &[f64]| vec![x[1] - x[0] * x[0]]);
    let clo = [0.0];
    let chi = [0.0];
    let xlo = [-1.0, -1.0];
    let xhi = [1.0, 1.0];
    BenchmarkEntry {
        name: "G11",
        key: "g11",
        n: 2,
        constraints: 1,
        best_known: 0.75000455,
        reference: vec![std::f64::consts::FRAC_1_SQRT_2, 0.5],
        make_black: Arc::new(move || black(2, f.clone(), c.clone(), 1, &clo, &chi, &xlo, &xhi)),
        greybox: None,
    }
}

// ---------------------------------------------------- Hock-Schittkowski

fn hs21() -> BenchmarkEntry {
    let f: ScalarFn = Arc::new(|x: &[f64]| x[0] * x[0] / 100.0 + x[1] * x[1] - 100.0);
    let c: VectorFn = Arc::new(|x: &[f64]| vec![10.0 * x[0] - x[1]]);
    let clo = [10.0];
    let chi = [INF];
    let xlo = [2.0, -50.0];
    let xhi = [50.0, 50.0];
    let make_grey: Arc<dyn Fn() -> GreyBoxProblem + Send + Sync> = Arc::new(|| {
        let fw: ScalarFn = Arc::new(|x: &[f64]| x[0] * x[0] / 100.0 + x[1] * x[1] - 100.0);
        let grad: crate::problem::GradientFn = Arc::new(|x: &[f64]| {
            nalgebra::DVector::from_vec(vec![x[0] / 50.0, 2.0 * x[1]])
        });
        let cb: VectorFn = Arc::new(|x: &[f64]| vec![10.0 * x[0] - x[1]]);
        GreyBoxProblem::builder(2, FnKind::WhiteBox, fw)
            .f_grad(grad)
            .black_constraints(1, cb, &[10.0], &[INF])
            .x_bounds(&[2.0, -50.0], &[50.0, 50.0])
            .build()
            .unwrap()
    });
    BenchmarkEntry {
        name: "HS21",
        key: "hs21",
        n: 2,
        constraints: 1,
        best_known: -99.96,
        reference: vec![2.0, 0.0],
        make_black: Arc::new(move || black(2, f.clone(), c.clone(), 1, &clo, &chi, &xlo, &xhi)),
        greybox: Some(GreyBoxSplit {
            bb_constraints: 1,
            wb_constraints: 0,
            objective_white: true,
            make: make_grey,
        }),
    }
}

fn hs23() -> BenchmarkEntry {
    let f: ScalarFn = Arc::new(|x: &[f64]| x[0] * x[0] + x[1] * x[1]);
    let c: VectorFn = Arc::new(|x: &[f64]| {
        vec![
            x[0] + x[1],
            x[0] * x[0] + x[1] * x[1],
            9.0 * x[0] * x[0] + x[1] * x[1],
            x[0] * x[0] - x[1],
            x[1] * x[1] - x[0],
        ]
    });
    let clo = [1.0, 1.0, 9.0, 0.0, 0.0];
    let chi = [INF; 5];
    let xlo = [-50.0, -50.0];
    let xhi = [50.0, 50.0];
    let make_grey: Arc<dyn Fn() -> GreyBoxProblem + Send + Sync> = Arc::new(|| {
        let fb: ScalarFn = Arc::new(|x: &[f64]| x[0] * x[0] + x[1] * x[1]);
        let cb: VectorFn = Arc::new(|x: &[f64]| {
            vec![
                9.0 * x[0] * x[0] + x[1] * x[1],
                x[0] * x[0] - x[1],
                x[1] * x[1] - x[0],
            ]
        });
        let h: VectorFn = Arc::new(|x: &[f64]| vec![x[0] + x[1], x[0] * x[0] + x[1] * x[1]]);
        let jac: JacobianFn = Arc::new(|x: &[f64]| {
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0 * x[0], 2.0 * x[1]])
        });
        GreyBoxProblem::builder(2, FnKind::BlackBox, fb)
            .black_constraints(3, cb, &[9.0, 0.0, 0.0], &[INF, INF, INF])
            .white_constraints(2, h, jac, &[1.0, 1.0], &[INF, INF])
            .x_bounds(&[-50.0, -50.0], &[50.0, 50.0])
            .build()
            .unwrap()
    });
    BenchmarkEntry {
        name: "HS23",
        key: "hs23",
        n: 2,
        constraints: 5,
        best_known: 2.0,
        reference: vec![1.0, 1.0],
        make_black: Arc::new(move || black(2, f.clone(), c.clone(), 5, &clo, &chi, &xlo, &xhi)),
        greybox: Some(GreyBoxSplit {
            bb_constraints: 3,
            wb_constraints: 2,
            objective_white: false,
            make: make_grey,
        }),
    }
}
