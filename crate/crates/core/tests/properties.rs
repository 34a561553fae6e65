#![allow(clippy::needless_range_loop)]

use proptest::prelude::*;

use blcirs::diagnostics::{bound_thm41, gamma, BoundInputs};
use blcirs::ingest::{gen_convection_diffusion, gen_rhs, parse_matrix_market, write_matrix_market};
use blcirs::qr::{least_squares_eta, orthonormality_departure, right_solve, thin_qr};
use blcirs::smoothing::{srs_step, CirsScheme, SmootherState};
use blcirs::{Block, CsrMatrix, SmallMat};

const U: f64 = f64::EPSILON / 2.0;

fn block(n: usize, s: usize) -> impl Strategy<Value = Block<f64>> {
    prop::collection::vec(-1.0f64..1.0, n * s).prop_map(move |d| Block::from_col_major(n, s, d).unwrap())
}

fn sized_block(max_n: usize, max_s: usize) -> impl Strategy<Value = Block<f64>> {
    (1..=max_s).prop_flat_map(move |s| (s..=max_n).prop_flat_map(move |n| block(n, s)))
}

fn sparse(max_n: usize) -> impl Strategy<Value = CsrMatrix<f64>> {
    (1..=max_n).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n, -5.0f64..5.0), 0..4 * n)
            .prop_map(move |t| CsrMatrix::from_triplets(n, &t).unwrap())
    })
}

fn dist(a: &Block<f64>, b: &Block<f64>) -> f64 {
    a.sub(b).unwrap().frobenius_norm()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spmm_matches_dense((a, x) in sparse(25).prop_flat_map(|a| { let n = a.n(); (Just(a), block(n, 3)) })) {
        let y = a.spmm(&x).unwrap();
        let d = a.to_dense();
        for i in 0..a.n() {
            for j in 0..3 {
                let want: f64 = (0..a.n()).map(|l| d[i][l] * x.get(l, j)).sum();
                prop_assert!((y.get(i, j) - want).abs() <= 1e-12 * (1.0 + want.abs()));
            }
        }
        let yt = a.spmm_transpose(&x).unwrap();
        prop_assert!(dist(&yt, &a.transpose().spmm(&x).unwrap()) <= 1e-12 * (1.0 + yt.frobenius_norm()));
    }

    #[test]
    fn norm_squared_is_self_inner(x in sized_block(40, 6)) {
        let n = x.frobenius_norm();
        let ip = x.frobenius_inner(&x).unwrap();
        prop_assert!((n * n - ip).abs() <= 1e-13 * ip.max(1.0));
    }

    #[test]
    fn thin_qr_is_orthonormal_and_reconstructs(v in sized_block(120, 8)) {
        let f = thin_qr(&v).unwrap();
        prop_assert!(orthonormality_departure(&f.q) <= 1e-13);
        let s = v.ncols();
        for i in 0..s {
            prop_assert!(f.xi.get(i, i) >= 0.0);
            for j in 0..i {
                prop_assert_eq!(f.xi.get(i, j), 0.0);
            }
        }
        prop_assert!(dist(&f.q.mul_small(&f.xi).unwrap(), &v) <= 1e-13 * v.frobenius_norm());
    }

    #[test]
    fn least_squares_is_optimal(
        (u, s) in (1usize..5).prop_flat_map(|s| (s + 2..30).prop_flat_map(move |n| (block(n, s), block(n, s)))),
        pi in 0usize..5, pj in 0usize..5, sign in prop::bool::ANY,
    ) {
        let eta = least_squares_eta(&u, &s).unwrap();
        let base = dist(&s, &u.mul_small(&eta).unwrap());
        let sz = u.ncols();
        let mut pert = eta.clone();
        let h = if sign { 1e-6 } else { -1e-6 };
        pert.set(pi % sz, pj % sz, eta.get(pi % sz, pj % sz) + h);
        let other = dist(&s, &u.mul_small(&pert).unwrap());
        prop_assert!(base <= other * (1.0 + 1e-12));
    }

    #[test]
    fn right_solve_round_trip(
        c in sized_block(50, 6).prop_filter("rows", |c| c.nrows() > 0),
        seed in any::<u64>(),
    ) {
        let s = c.ncols();
        let mut st = seed | 1;
        let m = SmallMat::from_fn(s, |i, j| {
            st ^= st << 13; st ^= st >> 7; st ^= st << 17;
            (st >> 11) as f64 / 2f64.powi(53) - 0.5 + if i == j { s as f64 } else { 0.0 }
        });
        let v = right_solve(&c, &m).unwrap();
        prop_assert!(dist(&v.mul_small(&m).unwrap(), &c) <= 1e-12 * c.frobenius_norm().max(1e-300));
    }

    #[test]
    fn matrix_market_round_trip(a in sparse(30)) {
        prop_assume!(a.n() > 0);
        let mut buf = Vec::new();
        write_matrix_market(&a, &mut buf).unwrap();
        prop_assert_eq!(parse_matrix_market(&buf[..]).unwrap(), a);
    }

    #[test]
    fn generated_round_trip_and_dominance(nx in 2usize..12, ny in 2usize..12, px in -800.0f64..800.0, py in -800.0f64..800.0) {
        let a = gen_convection_diffusion(nx, ny, px, py);
        let mut buf = Vec::new();
        write_matrix_market(&a, &mut buf).unwrap();
        prop_assert_eq!(&parse_matrix_market(&buf[..]).unwrap(), &a);
        prop_assert!(a.max_row_nnz() <= 5);
        for i in 0..a.n() {
            let mut d = 0.0;
            let mut off = 0.0;
            for (j, v) in a.row(i) {
                if i == j { d = v } else { off += v.abs() }
            }
            prop_assert!(d > 0.0 && d >= off * (1.0 - 1e-14));
        }
    }

    #[test]
    fn gamma_is_increasing_and_convex(k in 1usize..100_000) {
        let g0 = gamma(k, U).unwrap();
        let g1 = gamma(k + 1, U).unwrap();
        prop_assert!(g0 < g1);
        // convex with γ_0 = 0, hence superadditive
        prop_assert!(gamma(2 * k, U).unwrap() >= 2.0 * g0);
        prop_assert!(gamma(3 * k, U).unwrap() >= g0 + gamma(2 * k, U).unwrap());
    }

    #[test]
    fn thm41_is_monotone(k in 1usize..60, s in 1usize..33, m in 1usize..10, x in 0.0f64..1e3, r in 0.0f64..1e3, bump in 1.0f64..10.0) {
        let mk = |k: usize, x: f64, r: f64| {
            let xs: Vec<f64> = std::iter::once(0.0).chain(std::iter::repeat_n(x, k)).collect();
            let rs = vec![r; k + 1];
            BoundInputs::from_history(s, m, U, 7.0, &xs, &rs, &vec![(None, None); k]).unwrap()
        };
        let b = bound_thm41(&mk(k, x, r)).unwrap();
        prop_assert!(b >= 0.0);
        prop_assert!(bound_thm41(&mk(k + 1, x, r)).unwrap() >= b);
        prop_assert!(bound_thm41(&mk(k, x * bump, r)).unwrap() >= b);
        prop_assert!(bound_thm41(&mk(k, x, r * bump)).unwrap() >= b);
    }

    #[test]
    fn rhs_is_deterministic(n in 1usize..200, s in 1usize..6, seed in any::<u64>()) {
        let a = gen_rhs(n, s, seed);
        prop_assert_eq!(&a, &gen_rhs(n, s, seed));
        prop_assert!(a.as_slice().iter().all(|v| *v > -1.0 && *v < 1.0));
    }

    #[test]
    fn srs_never_increases_residual(
        (s0, rk) in (1usize..5).prop_flat_map(|s| (s + 1..40).prop_flat_map(move |n| (block(n, s), block(n, s)))),
    ) {
        let (n, s) = s0.shape();
        let mut st = SmootherState::new(&Block::zeros(n, s), &s0).unwrap();
        let before = st.s_res.frobenius_norm();
        srs_step(&mut st, &Block::zeros(n, s), &rk).unwrap();
        let after = st.s_res.frobenius_norm();
        prop_assert!(after <= before.min(rk.frobenius_norm()) * (1.0 + 16.0 * s as f64 * U));
    }

    #[test]
    fn cirs_schemes_never_increase_residual(
        (b, dirs) in (1usize..5).prop_flat_map(|s| (s + 2..40).prop_flat_map(move |n| {
            (block(n, s), prop::collection::vec(block(n, s), 1..6))
        })),
    ) {
        let (n, s) = b.shape();
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0));
            if i > 0 { t.push((i, i - 1, -1.0)); }
            if i + 1 < n { t.push((i, i + 1, -2.0)); }
        }
        let a = CsrMatrix::from_triplets(n, &t).unwrap();
        for scheme in [CirsScheme::Underlying, CirsScheme::Orthonormalized, CirsScheme::Global] {
            let mut st = SmootherState::new(&Block::zeros(n, s), &b).unwrap();
            for p in &dirs {
                let before = st.s_res.frobenius_norm();
                if scheme.step(&mut st, p, &a).is_err() {
                    break;
                }
                prop_assert!(st.s_res.frobenius_norm() <= before * (1.0 + 16.0 * s as f64 * U), "{:?}", scheme);
            }
        }
    }
}
