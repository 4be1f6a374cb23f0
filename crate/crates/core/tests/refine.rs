mod common;

use std::collections::VecDeque;
use std::sync::Arc;

use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use stableir::backend::{FpFormat, LinearOperator, Mode, NoiseModel};
use stableir::krylov::{run_krylov, BasicMethod, BasicSolverSpec, Method};
use stableir::linalg::Matrix;
use stableir::refine::{
    error_metrics, ir_classic, normal_equation_coefficients, refine, residual_expansion_check, stable_ir,
    stable_ir_multidir, stable_ir_stochastic, RefineConfig, RefineOutcome, RefineProblem, Termination, Variant,
};

fn cfg(variant: Variant) -> RefineConfig {
    RefineConfig::new(variant, BasicSolverSpec::new(Method::Gmres))
}

fn run(p: &RefineProblem, basic: &mut dyn BasicMethod, c: &RefineConfig) -> RefineOutcome {
    match c.variant {
        Variant::Classic => ir_classic(p, basic, c),
        Variant::Stable => stable_ir(p, basic, c),
        Variant::MultiDir(_) => stable_ir_multidir(p, basic, c),
        Variant::StochasticMultiDir(_) => stable_ir_stochastic(p, basic, c),
    }
    .unwrap()
}

fn attack_strategy() -> impl Strategy<Value = Attack> {
    prop_oneof![
        Just(Attack::Noise),
        Just(Attack::SignFlip),
        Just(Attack::Zero),
        Just(Attack::Swamped),
        Just(Attack::Mixed),
    ]
}

fn stable_variant() -> impl Strategy<Value = Variant> {
    prop_oneof![
        Just(Variant::Stable),
        (1usize..=8).prop_map(Variant::MultiDir),
        (1usize..=8).prop_map(Variant::StochasticMultiDir),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn stable_variants_never_grow_the_residual(
        n in 2usize..24,
        spd in any::<bool>(),
        attack in attack_strategy(),
        variant in stable_variant(),
        seed in any::<u64>(),
        single in any::<bool>(),
    ) {
        let mut g = rng(seed);
        let a = if spd { random_spd(n, &mut g) } else { random_nonsymmetric(n, &mut g) };
        let b = gaussian_vec(n, &mut g);
        let mut basic = Adversary::new(&a, attack, seed);
        let a = dense(a);
        let mut c = cfg(variant);
        c.max_outer_iters = 15;
        if single {
            c.residual_precision = FpFormat::BINARY32;
        }
        let out = run(&RefineProblem::new(&a, &b), &mut basic, &c);
        for w in out.trace.records.windows(2) {
            prop_assert!(w[1].res_norm <= w[0].res_norm * (1.0 + 1e-12), "{} -> {}", w[0].res_norm, w[1].res_norm);
        }
        prop_assert_ne!(out.trace.status, Termination::Diverged);
    }

    #[test]
    fn expansion_identity_holds(n in 1usize..60, seed in any::<u64>(), scale in -20.0f64..20.0) {
        let mut g = rng(seed);
        let s = 2f64.powf(scale);
        let r = gaussian_vec(n, &mut g);
        let w: Vec<f64> = gaussian_vec(n, &mut g).iter().map(|v| v * s).collect();
        let chk = residual_expansion_check(&r, &w).unwrap();
        let bound = 1e-10 * (l2(&r) + l2(&w)).powi(2);
        prop_assert!(chk.abs() <= bound);
    }

    #[test]
    fn line_search_beats_any_other_step(n in 1usize..30, seed in any::<u64>(), t in -50.0f64..50.0) {
        let mut g = rng(seed);
        let r = gaussian_vec(n, &mut g);
        let w = gaussian_vec(n, &mut g);
        let alpha = stableir::refine::line_search_alpha(&r, &w).unwrap();
        // ‖r − βw‖² − ‖r − αw‖² = (β − α)²‖w‖² ≥ 0; evaluate both sides directly
        let beta = alpha + t;
        let f = |c: f64| r.iter().zip(&w).map(|(x, y)| (x - c * y).powi(2)).sum::<f64>();
        let gap = f(beta) - f(alpha);
        let expected = t * t * w.iter().map(|v| v * v).sum::<f64>();
        prop_assert!(gap >= -1e-12 * f(alpha).max(1e-300));
        prop_assert!((gap - expected).abs() <= 1e-9 * (expected + f(alpha)));
    }

    /// Classic IR with `d = θ A⁻¹ r` multiplies the residual by `1 − θ` each
    /// step, so the terminal state and step count are known in advance.
    #[test]
    fn exit_codes_follow_the_contraction(theta in 0.05f64..3.5, max_iters in 1usize..60) {
        let rate = (1.0 - theta).abs();
        prop_assume!(rate > 1e-3 && (rate - 1.0).abs() > 1e-3);
        let tol = 1e-8f64;
        let limit = 1e8f64;
        let steps = if rate < 1.0 { tol.ln() / rate.ln() } else { limit.ln() / rate.ln() };
        prop_assume!((steps - steps.round()).abs() > 1e-4);
        let needed = if rate < 1.0 { steps.ceil() as usize } else { steps.floor() as usize + 1 };
        let (expected, code) = if needed > max_iters {
            (Termination::MaxIterations, 2)
        } else if rate < 1.0 {
            (Termination::Converged, 0)
        } else {
            (Termination::Diverged, 3)
        };

        let mut g = rng(11);
        let a_d = random_spd(6, &mut g);
        let m = to_na(&a_d).try_inverse().unwrap() * theta;
        let a = dense(a_d);
        let b = gaussian_vec(6, &mut g);
        let mut c = cfg(Variant::Classic);
        c.outer_tol = tol;
        c.divergence_factor = limit;
        c.max_outer_iters = max_iters;
        let out = ir_classic(&RefineProblem::new(&a, &b), &mut LinearInner { m: m.clone() }, &c).unwrap();
        prop_assert_eq!(out.trace.status, expected);
        prop_assert_eq!(out.trace.status.exit_code(), code);
        prop_assert_eq!(out.trace.iterations(), needed.min(max_iters));
        prop_assert_eq!(out.trace.diverged(), expected == Termination::Diverged);

        // The line search undoes any scaling: α = 1/θ and one step suffices.
        let mut c = cfg(Variant::Stable);
        c.outer_tol = tol;
        let out = stable_ir(&RefineProblem::new(&a, &b), &mut LinearInner { m }, &c).unwrap();
        prop_assert_eq!(out.trace.status, Termination::Converged);
        prop_assert_eq!(out.trace.iterations(), 1);
        let alpha = out.trace.records[1].step.unwrap();
        prop_assert!((alpha * theta - 1.0).abs() <= 1e-10);
    }
}

#[test]
fn stagnation_and_max_iterations_exit_two() {
    let mut g = rng(12);
    let a = dense(random_spd(5, &mut g));
    let b = gaussian_vec(5, &mut g);
    let mut c = cfg(Variant::Stable);
    c.stagnation_window = 3;
    let out = stable_ir(&RefineProblem::new(&a, &b), &mut Scripted { n: 5, queue: VecDeque::new() }, &c).unwrap();
    assert_eq!(out.trace.status, Termination::Stagnated);
    assert_eq!(out.trace.iterations(), 3);
    assert_eq!(out.trace.status.exit_code(), 2);
    assert!(out.trace.records.iter().all(|r| r.res_norm == l2(&b)));
}

/// With the unrealistic `α = dᵀ(x* − x)/‖d‖²` the error cannot grow, even
/// when the directions come from a noisy inner solver.
#[test]
fn error_optimal_step_never_grows_the_error() {
    let n = 60;
    let a = Arc::new(Matrix::Dense(stableir::io::gen_decay_spd(n).unwrap()));
    let x_star = vec![1.0; n];
    let b = a.matvec(&x_star).unwrap();
    let op = LinearOperator::new(a.clone(), Mode::Noisy(NoiseModel::new(0.3, 5).unwrap()));
    let spec = BasicSolverSpec::new(Method::Minres);
    let mut x = vec![0.0; n];
    let mut call = 0;
    let mut err = l2(&x_star);
    for _ in 0..30 {
        let r = diff(&b, &a.matvec(&x).unwrap());
        let (d, stats) = run_krylov(&spec, &op, &r, call);
        call += stats.matvecs as u64 + 1;
        let e = diff(&x_star, &x);
        let dd: f64 = d.iter().map(|v| v * v).sum();
        let alpha = d.iter().zip(&e).map(|(u, v)| u * v).sum::<f64>() / dd;
        x.iter_mut().zip(&d).for_each(|(xi, di)| *xi += alpha * di);
        let new_err = l2(&diff(&x_star, &x));
        assert!(new_err <= err * (1.0 + 1e-12), "{err:e} -> {new_err:e}");
        err = new_err;
    }
    assert!(err < l2(&x_star));
}

#[test]
fn metrics_match_direct_evaluation() {
    for seed in 0..20 {
        let mut g = rng(1300 + seed);
        let n = 3 + seed as usize;
        let a = random_nonsymmetric(n, &mut g);
        let x = gaussian_vec(n, &mut g);
        let x_ref = gaussian_vec(n, &mut g);
        let b = gaussian_vec(n, &mut g);
        let a_na = to_na(&a);
        let r_na = DVector::from_column_slice(&b) - &a_na * DVector::from_column_slice(&x);
        let r: Vec<f64> = r_na.iter().copied().collect();
        let m = error_metrics(&x, &x_ref, &r, &Matrix::Dense(a), &b).unwrap();

        let inf = |v: &DVector<f64>| v.amax();
        let xv = DVector::from_column_slice(&x);
        let bv = DVector::from_column_slice(&b);
        let ferr = inf(&(&xv - DVector::from_column_slice(&x_ref))) / inf(&DVector::from_column_slice(&x_ref));
        let a_inf = (0..n).map(|i| a_na.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        let nbe = inf(&r_na) / (a_inf * inf(&xv) + inf(&bv));
        let denom = a_na.abs() * xv.abs() + bv.abs();
        let cbe = r_na.iter().zip(denom.iter()).map(|(ri, di)| ri.abs() / di).fold(0.0, f64::max);
        for (got, want) in [(m.ferr, ferr), (m.nbe, nbe), (m.cbe, cbe)] {
            assert!((got - want).abs() <= 1e-14 * want, "{got:e} vs {want:e}");
        }
    }
}

#[test]
fn full_window_of_canonical_solves_is_exact() {
    let n = 12;
    let mut g = rng(14);
    let a_d = random_nonsymmetric(n, &mut g);
    let a_inv = to_na(&a_d).try_inverse().unwrap();
    let queue: VecDeque<Vec<f64>> = (0..n).map(|j| a_inv.column(j).iter().copied().collect()).collect();
    let a = dense(a_d);
    let b = gaussian_vec(n, &mut g);
    let mut c = cfg(Variant::MultiDir(n));
    c.max_outer_iters = n;
    c.outer_tol = 1e-14;
    c.stagnation_window = n + 1;
    let out = stable_ir_multidir(&RefineProblem::new(&a, &b), &mut Scripted { n, queue }, &c).unwrap();
    let last = out.trace.records.last().unwrap();
    assert!(last.iter <= n);
    assert!(last.rel_res <= 1e-10, "{:e}", last.rel_res);
    let oracle = na_solve(&a.to_dense(), &b);
    assert!(l2(&diff(&out.x, &oracle)) <= 1e-9 * l2(&oracle));
}

#[test]
fn badly_scaled_columns_match_qr() {
    let n = 30;
    let mut g = rng(15);
    for scales in [[1.0, 1e-8, 1e-15], [1e12, 1.0, 1e-6], [1.0, 1.0, 1.0]] {
        let cols: Vec<Vec<f64>> = scales.iter().map(|s| gaussian_vec(n, &mut g).iter().map(|v| v * s).collect()).collect();
        let r = gaussian_vec(n, &mut g);
        let views: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
        let c = normal_equation_coefficients(&views, &r, FpFormat::BINARY64).unwrap();
        let w = DMatrix::from_fn(n, 3, |i, j| cols[j][i]);
        let oracle = qr_lstsq(&w, &r);
        for j in 0..3 {
            assert!((c[j] - oracle[j]).abs() <= 1e-8 * oracle[j].abs(), "{scales:?}: {c:?} vs {oracle:?}");
        }
    }
}

#[test]
fn stochastic_window_beats_single_direction_on_noisy_gmres() {
    let n = 100;
    let a = Arc::new(Matrix::Dense(stableir::io::gen_decay_spd(n).unwrap()));
    let b = a.matvec(&vec![1.0; n]).unwrap();
    let p = RefineProblem::new(&a, &b);
    let mut wins = 0;
    for seed in 0..10 {
        let op = LinearOperator::new(a.clone(), Mode::Noisy(NoiseModel::new(0.02, seed).unwrap()));
        let mut c = cfg(Variant::Stable);
        c.max_outer_iters = 5;
        c.outer_tol = f64::MIN_POSITIVE;
        let single = refine(&p, &op, &c).unwrap().trace.final_relres();
        c.variant = Variant::StochasticMultiDir(10);
        let multi = refine(&p, &op, &c).unwrap().trace.final_relres();
        wins += usize::from(multi <= single);
    }
    assert!(wins >= 9, "{wins}/10");
}

#[test]
fn exact_backend_stochastic_warns_and_equals_stable() {
    let n = 20;
    let mut g = rng(16);
    let a = Arc::new(Matrix::Dense(random_spd(n, &mut g)));
    let b = gaussian_vec(n, &mut g);
    let op = LinearOperator::exact(a.clone());
    let p = RefineProblem::new(&a, &b);
    let mut c = cfg(Variant::Stable);
    c.basic.inner_tol = 1e-2;
    c.max_outer_iters = 4;
    let s = refine(&p, &op, &c).unwrap();
    c.variant = Variant::StochasticMultiDir(4);
    let m = refine(&p, &op, &c).unwrap();
    assert!(m.trace.warnings.iter().any(|w| w.contains("deterministic")));
    for (x, y) in s.trace.records.iter().zip(&m.trace.records) {
        // recursive residuals carry absolute rounding of order eps·‖r_0‖
        assert!((x.res_norm - y.res_norm).abs() <= 1e-13 * l2(&b));
    }
}
