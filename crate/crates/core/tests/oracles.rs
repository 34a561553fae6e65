#![allow(clippy::needless_range_loop)]

//! Checks against independently computed reference values: naive loops,
//! explicit inverses, and traces evaluated in exact rational arithmetic.

use blcirs::diagnostics::{
    bound_appendix, bound_thm22, bound_thm41, check_thm41_assumptions, gamma, residual_gap, true_residual,
    BoundInputs, OrthoMethod, DEFAULT_GAMMA_TILDE_C,
};
use blcirs::ingest::{gen_convection_diffusion, gen_rhs, ConvectionDiffusion};
use blcirs::qr::{orthonormality_departure, qf, right_solve, solve_small, thin_qr};
use blcirs::smoothing::{cirs_ortho_step, cirs_underlying_step, gl_cirs_step, srs_step, SmootherState};
use blcirs::{bicgstab_pq_run, Block, CsrMatrix, SmallMat, SolverOptions, Variant};

const U: f64 = f64::EPSILON / 2.0;

fn lcg(seed: u64) -> impl FnMut() -> f64 {
    let mut st = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    move || {
        st = st.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((st >> 11) as f64) / (1u64 << 53) as f64 * 2.0 - 1.0
    }
}

fn rand_block(n: usize, s: usize, seed: u64) -> Block<f64> {
    let mut r = lcg(seed);
    Block::from_fn(n, s, |_, _| r())
}

fn rel_diff(a: &Block<f64>, b: &Block<f64>) -> f64 {
    a.sub(b).unwrap().frobenius_norm() / b.frobenius_norm().max(f64::MIN_POSITIVE)
}

#[test]
fn spmm_first_unit_column_is_first_matrix_column() {
    let a = gen_convection_diffusion(5, 4, 12.0, -3.0);
    let mut e = Block::zeros(a.n(), 1);
    e.set(0, 0, 1.0);
    let y = a.spmm(&e).unwrap();
    let dense = a.to_dense();
    for i in 0..a.n() {
        assert_eq!(y.get(i, 0), dense[i][0]);
    }
}

#[test]
fn frobenius_inner_matches_double_loop() {
    let x = rand_block(7, 3, 1);
    let y = rand_block(7, 3, 2);
    let mut acc = 0.0;
    for i in 0..7 {
        for j in 0..3 {
            acc += x.get(i, j) * y.get(i, j);
        }
    }
    let got = x.frobenius_inner(&y).unwrap();
    assert!((got - acc).abs() <= 8.0 * f64::EPSILON * acc.abs().max(1.0));
}

#[test]
fn gemm_matches_triple_loop() {
    let p = rand_block(6, 2, 3);
    let m = SmallMat::from_rows(&[vec![0.5, -1.25], vec![2.0, 0.75]]).unwrap();
    let got = p.mul_small(&m).unwrap();
    for i in 0..6 {
        for j in 0..2 {
            let mut acc = 0.0;
            for l in 0..2 {
                acc += p.get(i, l) * m.get(l, j);
            }
            assert!((got.get(i, j) - acc).abs() <= 4.0 * f64::EPSILON);
        }
    }
}

#[test]
fn small_norms_by_hand() {
    let v: Block<f64> = Block::from_columns(&[vec![3.0, 4.0]]).unwrap();
    assert_eq!(v.frobenius_norm(), 5.0);
    let d = CsrMatrix::from_diagonal(&[3.0, 4.0]);
    assert_eq!(d.frobenius_norm(), 5.0);
    let f = thin_qr(&v).unwrap();
    assert!((f.q.get(0, 0) - 0.6).abs() < 1e-15 && (f.q.get(1, 0) - 0.8).abs() < 1e-15);
    assert!((f.xi.get(0, 0) - 5.0).abs() < 1e-14);
}

#[test]
fn generated_norm_matches_dense_sum() {
    let a = ConvectionDiffusion::CDDE2_TWIN.matrix();
    let dense: f64 = a.to_dense().iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    let got = a.frobenius_norm();
    assert!(got.is_finite() && got > 0.0);
    assert!((got - dense).abs() <= 1e-12 * dense);
}

// 4x4 inverse by Gauss-Jordan without pivoting: an independent oracle for a
// diagonally dominant matrix.
fn gauss_jordan_inverse(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let s = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..s).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for c in 0..s {
        let p = a[c][c];
        for v in a[c].iter_mut() {
            *v /= p;
        }
        for r in 0..s {
            if r != c {
                let f = a[r][c];
                let pivot_row = a[c].clone();
                for (v, pv) in a[r].iter_mut().zip(pivot_row) {
                    *v -= f * pv;
                }
            }
        }
    }
    a.into_iter().map(|r| r[s..].to_vec()).collect()
}

fn dominant(s: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = lcg(seed);
    (0..s)
        .map(|i| (0..s).map(|j| r() + if i == j { 4.0 } else { 0.0 }).collect())
        .collect()
}

#[test]
fn solve_small_matches_explicit_inverse() {
    let rows = dominant(4, 11);
    let inv = gauss_jordan_inverse(&rows);
    let m = SmallMat::from_rows(&rows).unwrap();
    let c = SmallMat::from_fn(4, |i, j| ((i * 4 + j) as f64).sin());
    let z = solve_small(&m, &c).unwrap();
    let resid = m.matmul(&z).unwrap().sub(&c).unwrap().frobenius_norm() / c.frobenius_norm();
    assert!(resid <= 1e-12);
    for i in 0..4 {
        for j in 0..4 {
            let want: f64 = (0..4).map(|l| inv[i][l] * c.get(l, j)).sum();
            assert!((z.get(i, j) - want).abs() <= 1e-12);
        }
    }
}

#[test]
fn right_solve_matches_explicit_inverse() {
    let rows = dominant(2, 12);
    let inv = gauss_jordan_inverse(&rows);
    let m = SmallMat::from_rows(&rows).unwrap();
    let c = rand_block(5, 2, 13);
    let v = right_solve(&c, &m).unwrap();
    assert!(rel_diff(&v.mul_small(&m).unwrap(), &c) <= 1e-12);
    for i in 0..5 {
        for j in 0..2 {
            let want: f64 = (0..2).map(|l| c.get(i, l) * inv[l][j]).sum();
            assert!((v.get(i, j) - want).abs() <= 1e-12);
        }
    }
}

#[test]
fn least_squares_hand_case() {
    let u = Block::from_columns(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
    let s = Block::from_columns(&[vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]]).unwrap();
    let eta = blcirs::qr::least_squares_eta(&u, &s).unwrap();
    assert_eq!(eta, SmallMat::identity(2));
    let r = s.sub(&u.mul_small(&eta).unwrap()).unwrap();
    assert_eq!(r.col(0), &[0.0, 0.0, 1.0]);
    assert_eq!(r.col(1), &[0.0, 0.0, 0.0]);
}

#[test]
fn householder_departure_on_random_tall_block() {
    let q = qf(&rand_block(100, 8, 21)).unwrap();
    assert!(orthonormality_departure(&q) <= 1e-13);
}

#[test]
fn srs_hand_step() {
    let x0: Block<f64> = Block::zeros(2, 1);
    let r0 = Block::from_columns(&[vec![1.0, 0.0]]).unwrap();
    let mut st = SmootherState::new(&x0, &r0).unwrap();
    let rk = Block::from_columns(&[vec![0.0, 1.0]]).unwrap();
    srs_step(&mut st, &Block::zeros(2, 1), &rk).unwrap();
    assert!((st.eta.get(0, 0) - 0.5).abs() < 1e-16);
    assert_eq!(st.s_res.col(0), &[0.5, 0.5]);
}

// Primary sequences and the smoothed iterates they produce, evaluated with
// rational arithmetic. Bl-SRS and the underlying CIRS recursion give
// identical rational traces.
struct ExactCase {
    a: CsrMatrix<f64>,
    b: Block<f64>,
    xs: Vec<Block<f64>>,
    y: Vec<Block<f64>>,
    s: Vec<Block<f64>>,
}

fn cols(n: usize, s: usize, rows: &[f64]) -> Block<f64> {
    Block::from_fn(n, s, |i, j| rows[i * s + j])
}

fn exact_cases() -> Vec<ExactCase> {
    vec![
        ExactCase {
            a: CsrMatrix::from_diagonal(&[1.0, 2.0]),
            b: cols(2, 1, &[1.0, 1.0]),
            xs: vec![Block::zeros(2, 1), cols(2, 1, &[0.5, 0.0]), cols(2, 1, &[1.0, 0.25])],
            y: vec![cols(2, 1, &[1.0, 0.0]), cols(2, 1, &[1.0, 0.5])],
            s: vec![cols(2, 1, &[0.0, 1.0]), cols(2, 1, &[0.0, 0.0])],
        },
        ExactCase {
            a: CsrMatrix::from_dense(
                3,
                &[vec![2.0, 1.0, 0.0], vec![0.0, 3.0, 1.0], vec![1.0, 0.0, 4.0]],
            )
            .unwrap(),
            b: cols(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]),
            xs: vec![
                Block::zeros(3, 2),
                cols(3, 2, &[1.0 / 3.0, 0.0, 0.0, 0.25, 0.2, 0.2]),
                cols(3, 2, &[0.5, -0.1, -0.125, 1.0 / 3.0, 1.0 / 6.0, 0.25]),
            ],
            y: vec![
                cols(
                    3,
                    2,
                    &[
                        0.41899441340782123,
                        -0.01899441340782123,
                        -0.08379888268156424,
                        0.2837988826815642,
                        0.18435754189944134,
                        0.21564245810055865,
                    ],
                ),
                cols(
                    3,
                    2,
                    &[
                        0.4568198384686243,
                        -0.0568198384686243,
                        -0.10787298519665013,
                        0.30787298519665013,
                        0.16642619941784215,
                        0.23357380058215788,
                    ],
                ),
            ],
            s: vec![
                cols(
                    3,
                    2,
                    &[
                        0.24581005586592178,
                        -0.24581005586592178,
                        0.0670391061452514,
                        -0.0670391061452514,
                        -0.1564245810055866,
                        0.1564245810055866,
                    ],
                ),
                cols(
                    3,
                    2,
                    &[
                        0.19423330825940152,
                        -0.19423330825940152,
                        0.15719275617210826,
                        -0.15719275617210826,
                        -0.12252463613999286,
                        0.12252463613999286,
                    ],
                ),
            ],
        },
    ]
}

fn close_blocks(got: &Block<f64>, want: &Block<f64>, tol: f64) -> bool {
    got.sub(want).unwrap().frobenius_norm() <= tol * want.frobenius_norm().max(1.0)
}

#[test]
fn srs_matches_exact_trace() {
    for case in exact_cases() {
        let mut st = SmootherState::new(&case.xs[0], &case.b).unwrap();
        for k in 1..case.xs.len() {
            let r = case.b.sub(&case.a.spmm(&case.xs[k]).unwrap()).unwrap();
            srs_step(&mut st, &case.xs[k], &r).unwrap();
            assert!(close_blocks(&st.y, &case.y[k - 1], 1e-14), "Y at k={k}");
            assert!(close_blocks(&st.s_res, &case.s[k - 1], 1e-14), "S at k={k}");
        }
    }
}

#[test]
fn underlying_cirs_matches_exact_trace() {
    for case in exact_cases() {
        let mut st = SmootherState::new(&case.xs[0], &case.b).unwrap();
        for k in 1..case.xs.len() {
            let p = case.xs[k].sub(&case.xs[k - 1]).unwrap();
            cirs_underlying_step(&mut st, &p, &case.a).unwrap();
            assert!(close_blocks(&st.y, &case.y[k - 1], 1e-14), "Y at k={k}");
            assert!(close_blocks(&st.s_res, &case.s[k - 1], 1e-14), "S at k={k}");
        }
    }
}

fn small_problem() -> (CsrMatrix<f64>, Block<f64>) {
    let mut t = Vec::new();
    for i in 0..6 {
        t.push((i, i, 5.0 + i as f64 * 0.5));
        if i > 0 {
            t.push((i, i - 1, -1.0));
        }
        if i + 1 < 6 {
            t.push((i, i + 1, 0.7));
        }
    }
    (CsrMatrix::from_triplets(6, &t).unwrap(), rand_block(6, 2, 31))
}

#[test]
fn ortho_and_underlying_cirs_agree_over_five_steps() {
    let (a, b) = small_problem();
    let x0 = Block::zeros(6, 2);
    let mut st1 = SmootherState::new(&x0, &b).unwrap();
    let mut st2 = st1.clone();
    let mut dirs = Vec::new();
    for k in 0..5 {
        dirs.push(rand_block(6, 2, 100 + k));
    }
    for (k, p) in dirs.iter().enumerate() {
        let o1 = cirs_underlying_step(&mut st1, p, &a).unwrap();
        let o2 = cirs_ortho_step(&mut st2, p, &a).unwrap();
        assert!(rel_diff(&st2.y, &st1.y) <= 1e-10, "Y at step {k}");
        assert!(rel_diff(&st2.s_res, &st1.s_res) <= 1e-10, "S at step {k}");
        assert!(rel_diff(&o2.x_next, &o1.x_next) <= 1e-10);
        assert!(rel_diff(&o2.r_next, &o1.r_next) <= 1e-10);
    }
}

#[test]
fn single_column_schemes_coincide() {
    let (a, b) = small_problem();
    let b = Block::from_columns(&[b.col(0).to_vec()]).unwrap();
    let x0 = Block::zeros(6, 1);
    let mut su = SmootherState::new(&x0, &b).unwrap();
    let mut sg = su.clone();
    for k in 0..4 {
        let p = rand_block(6, 1, 200 + k);
        // scalar CIRS: S_k = S_{k-1} - η A V_k
        let s_prev = su.s_res.clone();
        cirs_underlying_step(&mut su, &p, &a).unwrap();
        gl_cirs_step(&mut sg, &p, &a).unwrap();
        let av = a.spmm(&su.v).unwrap();
        let want = s_prev.sub(&av.scale(su.eta.get(0, 0))).unwrap();
        assert_eq!(su.s_res, want);
        assert_eq!(su.y, sg.y);
        assert_eq!(su.s_res, sg.s_res);
    }
}

#[test]
fn gamma_one_in_extended_precision() {
    // ku/(1-ku) at u = 2^-53, rounded from a 50-digit evaluation
    assert_eq!(gamma(1, U).unwrap(), 1.1102230246251568e-16);
}

#[test]
fn thm41_assumption_plug_ins() {
    assert!(check_thm41_assumptions(961, 32, U, DEFAULT_GAMMA_TILDE_C, OrthoMethod::Householder));
    assert!(check_thm41_assumptions(2, 1, U, DEFAULT_GAMMA_TILDE_C, OrthoMethod::Householder));
    assert!(check_thm41_assumptions(2, 1, U, DEFAULT_GAMMA_TILDE_C, OrthoMethod::Givens));
    assert!(!check_thm41_assumptions(961, 32, 0.1, DEFAULT_GAMMA_TILDE_C, OrthoMethod::Householder));
}

fn fixed_inputs() -> BoundInputs {
    // k = 3, s = 4, m = 5, ‖A‖ = 10, ‖X_i‖ = i, ‖R_i‖ = 2^-i, exactly orthonormal Q
    let xs = [0.0, 1.0, 2.0, 3.0];
    let rs = [1.0, 0.5, 0.25, 0.125];
    let qs = vec![(Some(2.0), Some(0.0)); 3];
    BoundInputs::from_history(4, 5, U, 10.0, &xs, &rs, &qs).unwrap()
}

#[test]
fn bounds_with_exact_q_inputs() {
    // 50-digit reference evaluations of each formula
    let inp = fixed_inputs();
    let rel = |got: f64, want: f64| (got - want).abs() / want;
    assert!(rel(bound_appendix(&inp).unwrap(), 5.263428581869801e-13) < 1e-13);
    assert!(rel(bound_thm41(&inp).unwrap(), 2.7279845049577086e-12) < 1e-13);
    assert!(rel(bound_thm22(&inp), 5.508926648190027e-13) < 1e-13);
}

#[test]
fn thm41_single_column_reduction() {
    let inp = BoundInputs::from_history(1, 1, U, 3.0, &[0.0, 2.0], &[1.0, 0.5], &[(None, None)]).unwrap();
    let g4 = gamma(4, U).unwrap();
    let g1 = gamma(1, U).unwrap();
    let want = (8.0 * g4 + g1) * 3.0 * 2.0 + g1 * 0.5;
    assert!((bound_thm41(&inp).unwrap() - want).abs() <= 1e-15 * want);
}

#[test]
fn unsmoothed_gap_accounts_for_final_true_residual() {
    let a = ConvectionDiffusion::CDDE2_TWIN.matrix();
    let b = gen_rhs(a.n(), 4, 0);
    let mut opts = SolverOptions::new(Variant::NoSmoothing);
    opts.record_gap_every = 0;
    let res = bicgstab_pq_run(&a, &b, &Block::zeros(a.n(), 4), None, &opts).unwrap();
    assert!(res.iterations > 10);
    let norm_b = b.frobenius_norm();
    let last = res.records.last().unwrap();
    let gap = last.gap_r.unwrap() / norm_b;
    let true_rel = last.true_rel_r.unwrap();
    // the recursive residual is far below the true one, so the gap carries it
    assert!(last.rel_r < 0.1 * true_rel);
    assert!((gap - true_rel).abs() <= 0.1 * true_rel, "gap {gap:e} true {true_rel:e}");
    let direct = residual_gap(&a, &b, &res.x_final, &true_residual(&a, &b, &res.x_final).unwrap()).unwrap();
    assert!(direct <= 1e-14 * norm_b);
}
