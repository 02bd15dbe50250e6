mod common;

use approx::assert_abs_diff_eq;
use common::{brute_force_milp, dataset, primal_bias_oracle, random_ordinal, separable_1d, signed, sym_eigs, well_separated};
use nordic::data::{gen_ordered_gaussians, GeneratorConfig, GeneratorFamily};
use nordic::eval::{error_rate, weighted_error, CostMatrix};
use nordic::kernel::{bandwidth_candidates, gram_sym, KernelSpec};
use nordic::nordic::{
    assemble_dual, assemble_dual_factored, assemble_milp_nordic2, bias_from_support_vectors, default_grid, recover_bias,
    recover_bias_unordered, recover_omega, solve_dual, train, train_bsvm, train_ck, train_nordic0, train_nordic1,
    train_nordic2, tune, DualLayout, DualSolution, DualVariant, GridCell, Method, Nordic2Layout, TuneMetric,
};
use nordic::predict::{box_probes, check_noncrossing, predict, CrossingMode};
use nordic::qp::{Hessian, KktResiduals, QpStatus};
use nordic::{Dataset, Mat, Nordic2Settings, Params};
use proptest::prelude::*;

fn rbf_params(c: f64, ds: &Dataset) -> Params {
    let w = bandwidth_candidates(ds.features()).unwrap()[1];
    Params::new(c, 1.0, KernelSpec::rbf(w).unwrap())
}

fn train_mat(ds: &Dataset, model: &nordic::Model) -> Mat {
    model.decision_values(ds.features()).unwrap()
}

/// Stacked `ω` as a linear map of `θ` for the NORDIC-1 dual: row `k·n + i`
/// of the result is `ω_{k,i}`.
fn omega_map(n: usize, k_classes: usize, y: &[Vec<f64>]) -> Mat {
    let l = DualLayout::new(n, k_classes);
    let mut r = Mat::zeros(l.m * n, l.len());
    for k in 0..l.m {
        for i in 0..n {
            r[(k * n + i, l.alpha(k, i))] = y[k][i];
            if k + 1 < l.m {
                r[(k * n + i, l.phi(k, i))] += 1.0;
            }
            if k >= 1 {
                r[(k * n + i, l.phi(k - 1, i))] -= 1.0;
            }
        }
    }
    r
}

fn dense(h: &Hessian<f64>) -> Mat {
    h.to_dense()
}

#[test]
fn binary_dual_is_the_svm_dual() {
    let ds = random_ordinal(8, 2, 2, 1);
    let g = gram_sym(ds.features(), &KernelSpec::rbf(1.3).unwrap()).unwrap();
    let qp = assemble_dual(&ds, &g, &Params::new(2.0, 1.0, KernelSpec::Linear), DualVariant::Nordic1).unwrap();
    let y = &signed(&ds)[0];
    assert_eq!(qp.num_vars(), 8);
    let q = dense(&qp.q);
    for i in 0..8 {
        for j in 0..8 {
            assert_abs_diff_eq!(q[(i, j)], y[i] * y[j] * g[(i, j)], epsilon = 1e-14);
        }
        assert_eq!(qp.c[i], -1.0);
        assert_eq!(qp.upper[i], 2.0);
        assert_eq!(qp.lower[i], 0.0);
        assert_eq!(qp.a_eq[(0, i)], -y[i]);
    }
    assert_eq!(qp.a_eq.rows(), 1);
}

#[test]
fn three_class_two_point_dual_has_seven_entries() {
    let ds = dataset(&[vec![0.0], vec![1.0]], &[1, 3], 3);
    let g = gram_sym(ds.features(), &KernelSpec::rbf(1.0).unwrap()).unwrap();
    let qp = assemble_dual(&ds, &g, &Params::new(1.0, 1.0, KernelSpec::Linear), DualVariant::Nordic1).unwrap();
    assert_eq!(qp.num_vars(), 7);
    assert_eq!(qp.a_eq.rows(), 2);
    // φ and γ are nonnegative and unbounded above
    for j in 4..7 {
        assert_eq!(qp.lower[j], 0.0);
        assert!(qp.upper[j].is_infinite());
        assert_eq!(qp.c[j], 0.0);
    }
}

#[test]
fn nordic1_hessian_matches_block_form() {
    for (n, k) in [(5, 3), (4, 4), (6, 2)] {
        let ds = random_ordinal(n, 2, k, 30 + n as u64);
        let g = gram_sym(ds.features(), &KernelSpec::rbf(0.9).unwrap()).unwrap();
        let params = Params::new(1.0, 1.0, KernelSpec::Linear);
        let qp = assemble_dual(&ds, &g, &params, DualVariant::Nordic1).unwrap();
        let r = omega_map(n, k, &signed(&ds));
        // Rᵀ (I ⊗ K) R
        let mut big = Mat::zeros((k - 1) * n, (k - 1) * n);
        for b in 0..k - 1 {
            for i in 0..n {
                for j in 0..n {
                    big[(b * n + i, b * n + j)] = g[(i, j)];
                }
            }
        }
        let want = r.transpose().matmul(&big).unwrap().matmul(&r).unwrap();
        let q = dense(&qp.q);
        for i in 0..q.rows() {
            for j in 0..q.cols() {
                assert_abs_diff_eq!(q[(i, j)], want[(i, j)], epsilon = 1e-12);
            }
        }
        let fq = dense(&assemble_dual_factored(&ds, &g, &params, DualVariant::Nordic1).unwrap().q);
        for i in 0..q.rows() {
            for j in 0..q.cols() {
                assert_abs_diff_eq!(fq[(i, j)], q[(i, j)], epsilon = 1e-8);
            }
        }
    }
}

#[test]
fn dual_hessians_are_psd() {
    let ds = random_ordinal(7, 2, 3, 5);
    let g = gram_sym(ds.features(), &KernelSpec::rbf(1.0).unwrap()).unwrap();
    let params = Params::new(1.0, 1.0, KernelSpec::Linear);
    for v in [DualVariant::Nordic0, DualVariant::Nordic1] {
        let q = dense(&assemble_dual(&ds, &g, &params, v).unwrap().q);
        let ev = sym_eigs(&q);
        assert!(ev[0] >= -1e-8 * ev.last().unwrap().abs(), "{v:?}: {}", ev[0]);
        let fq = dense(&assemble_dual_factored(&ds, &g, &params, v).unwrap().q);
        for i in 0..q.rows() {
            for j in 0..q.cols() {
                assert_abs_diff_eq!(fq[(i, j)], q[(i, j)], epsilon = 1e-6 * (1.0 + q[(i, j)].abs()));
            }
        }
    }
}

#[test]
fn omega_without_phi_is_signed_alpha() {
    let ds = random_ordinal(6, 1, 3, 2);
    let g = gram_sym(ds.features(), &KernelSpec::rbf(1.0).unwrap()).unwrap();
    let alpha: Vec<f64> = (0..12).map(|j| 0.1 * j as f64).collect();
    let dual = DualSolution {
        alpha: alpha.clone(),
        phi: vec![0.0; 6],
        gamma: vec![0.0],
        objective: 0.0,
        status: QpStatus::Optimal,
        iterations: 0,
        residuals: KktResiduals::default(),
    };
    let y = signed(&ds);
    for v in [DualVariant::Nordic0, DualVariant::Nordic1] {
        let omega = recover_omega(&ds, &dual, v, &g).unwrap();
        for k in 0..2 {
            for i in 0..6 {
                assert_abs_diff_eq!(omega[(k, i)], y[k][i] * alpha[k * 6 + i], epsilon = 1e-12);
            }
        }
    }
}

#[test]
fn omega_hand_example() {
    // n = 2, K = 3, labels (1, 3): y_1 = (−1, +1), y_2 = (−1, +1)
    let ds = dataset(&[vec![0.0], vec![1.0]], &[1, 3], 3);
    let g = gram_sym(ds.features(), &KernelSpec::rbf(1.0).unwrap()).unwrap();
    let dual = DualSolution {
        alpha: vec![0.5, 0.25, 1.0, 0.75],
        phi: vec![0.1, 0.2],
        gamma: vec![0.0],
        objective: 0.0,
        status: QpStatus::Optimal,
        iterations: 0,
        residuals: KktResiduals::default(),
    };
    let omega = recover_omega(&ds, &dual, DualVariant::Nordic1, &g).unwrap();
    let want = [[-0.5 + 0.1, 0.25 + 0.2], [-1.0 - 0.1, 0.75 - 0.2]];
    for k in 0..2 {
        for i in 0..2 {
            assert_abs_diff_eq!(omega[(k, i)], want[k][i], epsilon = 1e-15);
        }
    }
}

#[test]
fn nordic1_dual_complementarity() {
    // φ_{k,i} > 0 only where the ordering row is tight
    let ds = random_ordinal(30, 2, 3, 8);
    let params = rbf_params(4.0, &ds);
    let g = gram_sym(ds.features(), &params.kernel).unwrap();
    let dual = solve_dual(&ds, &g, &params, DualVariant::Nordic1).unwrap();
    assert_eq!(dual.status, QpStatus::Optimal);
    let omega = recover_omega(&ds, &dual, DualVariant::Nordic1, &g).unwrap();
    let f = omega.matmul(&g).unwrap();
    for i in 0..30 {
        let slack = f[(0, i)] - f[(1, i)];
        assert!(slack >= -1e-6);
        assert!(dual.phi[i] * slack <= 1e-5, "φ={} slack={}", dual.phi[i], slack);
    }
}

#[test]
fn binary_bias_matches_support_vectors() {
    let ds = random_ordinal(25, 2, 2, 4);
    let params = rbf_params(1.0, &ds);
    let g = gram_sym(ds.features(), &params.kernel).unwrap();
    let dual = solve_dual(&ds, &g, &params, DualVariant::Nordic1).unwrap();
    let omega = recover_omega(&ds, &dual, DualVariant::Nordic1, &g).unwrap();
    let lp = recover_bias(&ds, &g, &omega, params.c).unwrap();
    let sv = bias_from_support_vectors(&ds, &g, &omega, &dual.alpha, params.c);
    let sv = sv[0].expect("an interior support vector exists");
    assert_abs_diff_eq!(lp[0], sv, epsilon = 1e-4);
}

#[test]
fn ordered_bias_from_lp() {
    for seed in 0..6 {
        let ds = random_ordinal(20, 2, 4, 100 + seed);
        let params = rbf_params(2.0, &ds);
        let g = gram_sym(ds.features(), &params.kernel).unwrap();
        let dual = solve_dual(&ds, &g, &params, DualVariant::Nordic1).unwrap();
        let omega = recover_omega(&ds, &dual, DualVariant::Nordic1, &g).unwrap();
        let f = omega.matmul(&g).unwrap();
        let y = signed(&ds);
        let b = recover_bias(&ds, &g, &omega, params.c).unwrap();
        for k in 1..b.len() {
            assert!(b[k] <= b[k - 1]);
        }
        let (_, want) = primal_bias_oracle(&y, &f, params.c, true);
        assert_abs_diff_eq!(common::bias_objective(&y, &f, &b, params.c), want, epsilon = 1e-8 * (1.0 + want));
        let bu = recover_bias_unordered(&ds, &g, &omega, params.c).unwrap();
        let (_, want_u) = primal_bias_oracle(&y, &f, params.c, false);
        assert_abs_diff_eq!(common::bias_objective(&y, &f, &bu, params.c), want_u, epsilon = 1e-8 * (1.0 + want_u));
        assert!(want_u <= want + 1e-9);
        // interior support vectors agree with the LP when they exist
        let sv = bias_from_support_vectors(&ds, &g, &omega, &dual.alpha, params.c);
        for (k, s) in sv.iter().enumerate() {
            if let Some(s) = s {
                assert_abs_diff_eq!(*s, b[k], epsilon = 1e-4);
            }
        }
    }
}

#[test]
fn separable_line_is_classified_exactly() {
    let ds = separable_1d(10, 3);
    let params = Params::new(10.0, 1.0, KernelSpec::rbf(1.0).unwrap());
    let m = train_nordic1(&ds, &params).unwrap();
    let p = predict(&m, ds.features()).unwrap();
    assert_eq!(p.labels, ds.labels());
    assert!(p.ambiguous.iter().all(|a| !a));
    let f = train_mat(&ds, &m);
    for i in 0..ds.len() {
        assert!(f[(0, i)] >= f[(1, i)] - 1e-6);
    }
    assert!(m.bias[0] >= m.bias[1]);
}

#[test]
fn nordic0_rejects_linear_kernel() {
    let ds = separable_1d(5, 1);
    assert!(train_nordic0(&ds, &Params::new(1.0, 1.0, KernelSpec::Linear)).is_err());
    assert!(train_nordic1(&ds, &Params::new(1.0, 1.0, KernelSpec::Linear)).is_ok());
}

#[test]
fn one_sided_subproblem_is_an_error() {
    let ds = dataset(&[vec![0.0], vec![1.0], vec![2.0]], &[1, 1, 2], 3);
    let p = Params::new(1.0, 1.0, KernelSpec::rbf(1.0).unwrap());
    for m in Method::ALL {
        assert!(train(&ds, m, &p, &Nordic2Settings::default()).is_err(), "{m}");
    }
}

#[test]
fn nordic1_equals_bsvm_for_two_classes() {
    let ds = random_ordinal(30, 2, 2, 9);
    let params = rbf_params(1.0, &ds);
    let n1 = train_nordic1(&ds, &params).unwrap();
    let bs = train_bsvm(&ds, &params).unwrap();
    assert_abs_diff_eq!(n1.info.objective, bs.info.objective, epsilon = 1e-6 * (1.0 + bs.info.objective));
    let probes = box_probes(ds.features(), 200, 1).unwrap();
    let (a, b) = (n1.decision_values(&probes).unwrap(), bs.decision_values(&probes).unwrap());
    for j in 0..200 {
        assert_abs_diff_eq!(a[(0, j)], b[(0, j)], epsilon = 1e-3);
    }
}

#[test]
fn ordering_rows_cost_objective() {
    // BSVM solves the same problem without the ordering rows
    for seed in 0..4 {
        let ds = random_ordinal(25, 2, 4, 60 + seed);
        let params = rbf_params(2.0, &ds);
        let n1 = train_nordic1(&ds, &params).unwrap();
        let bs = train_bsvm(&ds, &params).unwrap();
        assert!(n1.info.objective >= bs.info.objective - 1e-6 * (1.0 + bs.info.objective));
    }
}

#[test]
fn bsvm_linear_boundaries_cross() {
    let ds: Dataset = gen_ordered_gaussians(&[-1.0, 0.0, 1.0], 1.0, 200, 3).unwrap();
    let m = train_bsvm(&ds, &Params::new(1.0, 1.0, KernelSpec::Linear)).unwrap();
    let (w1, w2) = (m.omega[(0, 0)], m.omega[(1, 0)]);
    assert!((w1 - w2).abs() > 1e-6);
    // the two lines meet at x* and swap order beyond it
    let x_star = (m.bias[1] - m.bias[0]) / (w1 - w2);
    let probes = Mat::from_rows(&[vec![x_star - 1.0], vec![x_star + 1.0]]).unwrap();
    let rep = check_noncrossing(&m, &probes, CrossingMode::Values).unwrap();
    assert_eq!(rep.violations, 1);
}

#[test]
fn ck_boundaries_are_parallel() {
    let ds = random_ordinal(30, 2, 4, 21);
    let params = rbf_params(1.0, &ds);
    let m = train_ck(&ds, &params).unwrap();
    for k in 1..3 {
        assert_eq!(m.omega.row(k), m.omega.row(0));
        assert!(m.bias[k] <= m.bias[k - 1]);
    }
    let f = train_mat(&ds, &m);
    for i in 0..ds.len() {
        assert!(f[(0, i)] >= f[(1, i)] && f[(1, i)] >= f[(2, i)]);
    }
    assert!(m.info.objective >= m.info.dual_objective.unwrap() - 1e-5 * (1.0 + m.info.objective));
}

#[test]
fn ck_fits_donut_worse_than_nordic1() {
    let ds: Dataset = GeneratorConfig { family: GeneratorFamily::Donut, n: 120, d: 2, sigma: 0.0, seed: 2 }.generate().unwrap();
    let params = rbf_params(16.0, &ds);
    let ck = predict(&train_ck(&ds, &params).unwrap(), ds.features()).unwrap();
    let n1 = predict(&train_nordic1(&ds, &params).unwrap(), ds.features()).unwrap();
    let (ek, e1) = (error_rate(&ck.labels, ds.labels()).unwrap(), error_rate(&n1.labels, ds.labels()).unwrap());
    assert!(ek > e1, "ck {ek} nordic1 {e1}");
}

#[test]
fn nordic2_binary_has_no_binaries() {
    let ds = random_ordinal(10, 2, 2, 3);
    let design = gram_sym(ds.features(), &KernelSpec::rbf(1.0).unwrap()).unwrap();
    let params = Params::new(1.0, 0.5, KernelSpec::rbf(1.0).unwrap());
    let (p, _) = assemble_milp_nordic2(&ds, &design, &params, &Nordic2Settings::default()).unwrap();
    assert!(p.binary.iter().all(|b| !b));
}

#[test]
fn nordic2_variable_count() {
    let (n, k) = (6, 4);
    let ds = random_ordinal(n, 2, k, 13);
    let design = gram_sym(ds.features(), &KernelSpec::rbf(1.0).unwrap()).unwrap();
    let params = Params::new(1.0, 0.5, KernelSpec::rbf(1.0).unwrap());
    let (p, l) = assemble_milp_nordic2(&ds, &design, &params, &Nordic2Settings::default()).unwrap();
    let m = k - 1;
    assert_eq!(p.num_vars(), 2 * m * n + m + m * n + 2 * (m - 1) * n);
    assert_eq!(l.num_binaries(), 2 * (m - 1) * n);
    let reduced = Nordic2Settings { reduce_binaries: true, ..Default::default() };
    let (pr, lr) = assemble_milp_nordic2(&ds, &design, &params, &reduced).unwrap();
    assert_eq!(lr.num_binaries(), (m - 1) * n);
    assert_eq!(pr.num_vars(), 2 * m * n + m + m * n + (m - 1) * n);
}

#[test]
fn nordic2_both_switches_off_is_infeasible() {
    let ds = random_ordinal(5, 1, 3, 17);
    let design = ds.features().clone();
    let params = Params::new(1.0, 0.1, KernelSpec::Linear);
    let (p, l) = assemble_milp_nordic2(&ds, &design, &params, &Nordic2Settings::default()).unwrap();
    let m = train_nordic2(&ds, &params, &Nordic2Settings::default()).unwrap();
    let mut x = vec![0.0; p.num_vars()];
    // rebuild a feasible point from the trained model
    for k in 0..2 {
        let w = m.omega[(k, 0)];
        x[l.omega_plus(k, 0)] = w.max(0.0);
        x[l.omega_minus(k, 0)] = (-w).max(0.0);
        x[l.bias(k)] = m.bias[k];
    }
    let y = signed(&ds);
    let f = m.decision_values(ds.features()).unwrap();
    for k in 0..2 {
        for i in 0..5 {
            x[l.xi(k, i)] = (1.0 - y[k][i] * f[(k, i)]).max(0.0);
        }
    }
    for i in 0..5 {
        let first_positive = f[(0, i)] >= 1e-6;
        x[l.z1(0, i)] = if first_positive { 0.0 } else { 1.0 };
        x[l.z2(0, i).unwrap()] = if first_positive { 1.0 } else { 0.0 };
    }
    assert!(p.max_violation(&x) <= 1e-7);
    // z1 = z2 = 1 breaks the pair row
    x[l.z1(0, 0)] = 1.0;
    x[l.z2(0, 0).unwrap()] = 1.0;
    assert!(p.max_violation(&x) >= 1.0 - 1e-9);
}

#[test]
fn nordic2_unordered_signs_are_infeasible() {
    // a point with f_1 < 0 and f_2 > 0 cannot satisfy the logical rows for
    // any binary choice
    let ds = dataset(&[vec![0.0], vec![1.0], vec![2.0]], &[1, 2, 3], 3);
    let design = ds.features().clone();
    let params = Params::new(1.0, 0.1, KernelSpec::Linear);
    let (p, l) = assemble_milp_nordic2(&ds, &design, &params, &Nordic2Settings::default()).unwrap();
    // f_1 = −1 + 0·x, f_2 = +1 + 0·x everywhere
    let mut lp = p.relaxation();
    lp.lower[l.bias(0)] = -1.0;
    lp.upper[l.bias(0)] = -1.0;
    lp.lower[l.bias(1)] = 1.0;
    lp.upper[l.bias(1)] = 1.0;
    for k in 0..2 {
        lp.upper[l.omega_plus(k, 0)] = 0.0;
        lp.upper[l.omega_minus(k, 0)] = 0.0;
    }
    let fixed = nordic::milp::MilpProblem {
        c: p.c.clone(),
        a_in: lp.a_ub.clone(),
        b_in: lp.b_ub.clone(),
        a_eq: lp.a_eq.clone(),
        b_eq: lp.b_eq.clone(),
        lower: lp.lower.clone(),
        upper: lp.upper.clone(),
        binary: p.binary.clone(),
    };
    assert_eq!(brute_force_milp(&fixed), None);
}

#[test]
fn nordic2_matches_enumeration() {
    for seed in 0..4 {
        let ds = random_ordinal(4, 1, 3, 200 + seed);
        let params = Params::new(1.0, 0.2, KernelSpec::Linear);
        let design = ds.features().clone();
        let cfg = Nordic2Settings::default();
        let (p, _) = assemble_milp_nordic2(&ds, &design, &params, &cfg).unwrap();
        let want = brute_force_milp(&p).unwrap();
        let m = train_nordic2(&ds, &params, &cfg).unwrap();
        assert_abs_diff_eq!(m.info.objective, want, epsilon = 1e-8);
    }
}

#[test]
fn nordic2_huge_big_m() {
    let ds = separable_1d(4, 2);
    let params = Params::new(1.0, 0.1, KernelSpec::rbf(1.0).unwrap());
    let cfg = Nordic2Settings { m1: Some(1e12), m2: Some(1e12), ..Default::default() };
    let m = train_nordic2(&ds, &params, &cfg).unwrap();
    let rep = check_noncrossing(&m, ds.features(), CrossingMode::Signs).unwrap();
    assert_eq!(rep.violations, 0);
    assert!(m.info.warnings.is_empty(), "{:?}", m.info.warnings);
}

#[test]
fn nordic2_layout_indices_are_distinct() {
    for reduced in [false, true] {
        let l = Nordic2Layout::new(3, 2, 4, reduced);
        let mut seen = vec![false; l.num_vars()];
        let mut mark = |j: usize| {
            assert!(!seen[j]);
            seen[j] = true;
        };
        for k in 0..3 {
            for j in 0..2 {
                mark(l.omega_plus(k, j));
                mark(l.omega_minus(k, j));
            }
            mark(l.bias(k));
            for i in 0..3 {
                mark(l.xi(k, i));
            }
        }
        for k in 0..2 {
            for i in 0..3 {
                mark(l.z1(k, i));
                if let Some(z) = l.z2(k, i) {
                    mark(z);
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
    }
}

#[test]
fn grid_sizes() {
    let ds = random_ordinal(20, 2, 3, 1);
    assert_eq!(default_grid(&ds, false).unwrap().len(), 27);
    assert_eq!(default_grid(&ds, true).unwrap().len(), 9);
}

#[test]
fn tune_single_cell_and_ties() {
    let ds = well_separated(8, 3, 8.0, 2);
    let tune_set = well_separated(8, 3, 8.0, 3);
    let n2 = Nordic2Settings::default();
    let cell = GridCell { penalty: 2.0, kernel: KernelSpec::rbf(1.5).unwrap() };
    let (p, t) = tune(&ds, &tune_set, Method::Nordic1, &[cell], &TuneMetric::ErrorRate, &n2).unwrap();
    assert_eq!(t.rows.len(), 1);
    assert_eq!((p.c, p.kernel), (2.0, cell.kernel));
    // ties resolve to the smallest penalty, then the smallest width
    let grid = default_grid(&ds, false).unwrap();
    let (p, t) = tune(&ds, &tune_set, Method::Bsvm, &grid, &TuneMetric::ErrorRate, &n2).unwrap();
    let low = t.rows.iter().filter_map(|r| r.metric).fold(f64::INFINITY, f64::min);
    let width = |k: &nordic::Kernel| match *k {
        KernelSpec::Rbf { width } => width,
        KernelSpec::Linear => 0.0,
    };
    let want = t
        .rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.metric == Some(low))
        .min_by(|(_, a), (_, b)| {
            a.cell.penalty.total_cmp(&b.cell.penalty).then(width(&a.cell.kernel).total_cmp(&width(&b.cell.kernel)))
        })
        .unwrap()
        .0;
    assert_eq!(t.best, want);
    assert_eq!((p.c, p.kernel), (grid[want].penalty, grid[want].kernel));
}

#[test]
fn tune_metric_is_the_selected_score() {
    let ds = random_ordinal(30, 2, 3, 41);
    let tune_set = random_ordinal(30, 2, 3, 42);
    let n2 = Nordic2Settings::default();
    let grid = default_grid(&ds, false).unwrap();
    let cost = CostMatrix::new(&[vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]]).unwrap();
    let (p, t) = tune(&ds, &tune_set, Method::Nordic1, &grid, &TuneMetric::Weighted(cost.clone()), &n2).unwrap();
    let best = t.rows[t.best].metric.unwrap();
    assert!(t.rows.iter().all(|r| r.metric.unwrap() >= best));
    let m = train_nordic1(&ds, &p).unwrap();
    let pred = predict(&m, tune_set.features()).unwrap();
    assert_eq!(weighted_error(&pred.labels, tune_set.labels(), &cost).unwrap(), best);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn nordic1_dual_is_feasible_and_tight(seed in 0u64..100_000, k in 2usize..5, c in 0.25f64..8.0) {
        let ds = random_ordinal(24, 2, k, seed);
        let params = rbf_params(c, &ds);
        let g = gram_sym(ds.features(), &params.kernel).unwrap();
        let dual = solve_dual(&ds, &g, &params, DualVariant::Nordic1).unwrap();
        prop_assert_eq!(dual.status, QpStatus::Optimal);
        prop_assert!(dual.alpha.iter().all(|&a| (0.0..=c).contains(&a)));
        prop_assert!(dual.phi.iter().chain(&dual.gamma).all(|&v| v >= 0.0));
        let y = signed(&ds);
        for kk in 0..k - 1 {
            let mut s: f64 = (0..24).map(|i| y[kk][i] * dual.alpha[kk * 24 + i]).sum();
            if kk + 1 < k - 1 {
                s += dual.gamma[kk];
            }
            if kk >= 1 {
                s -= dual.gamma[kk - 1];
            }
            prop_assert!(s.abs() <= 1e-7, "row {}: {}", kk, s);
        }
        let m = train_nordic1(&ds, &params).unwrap();
        let (pr, du) = (m.info.objective, m.info.dual_objective.unwrap());
        prop_assert!((pr - du).abs() <= 1e-5 * (1.0 + pr.abs()), "primal {} dual {}", pr, du);
        let rep = check_noncrossing(&m, ds.features(), CrossingMode::Values).unwrap();
        prop_assert_eq!(rep.violations, 0);
    }

    #[test]
    fn nordic0_orders_the_whole_box(seed in 0u64..100_000, k in 3usize..5, c in 0.25f64..8.0) {
        let ds = random_ordinal(20, 2, k, seed);
        let params = rbf_params(c, &ds);
        let m = train_nordic0(&ds, &params).unwrap();
        for kk in 1..k - 1 {
            for i in 0..20 {
                prop_assert!(m.omega[(kk, i)] <= m.omega[(kk - 1, i)]);
            }
            prop_assert!(m.bias[kk] <= m.bias[kk - 1]);
        }
        let probes = box_probes(ds.features(), 500, seed).unwrap();
        prop_assert_eq!(check_noncrossing(&m, &probes, CrossingMode::Values).unwrap().violations, 0);
        let du = m.info.dual_objective.unwrap();
        prop_assert!((m.info.objective - du).abs() <= 1e-5 * (1.0 + du.abs()));
    }

    #[test]
    fn nordic2_signs_ordered_on_training_points(seed in 0u64..100_000, lambda in 0.05f64..2.0) {
        let ds = random_ordinal(10, 2, 3, seed);
        let params = rbf_params(1.0, &ds).with_penalty(Method::Nordic2, lambda);
        let m = train_nordic2(&ds, &params, &Nordic2Settings::default()).unwrap();
        prop_assert_eq!(check_noncrossing(&m, ds.features(), CrossingMode::Signs).unwrap().violations, 0);
        prop_assert!(predict(&m, ds.features()).unwrap().ambiguous.iter().all(|a| !a));
    }
}
