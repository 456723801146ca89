use qreg_core::analysis::{self, aux_cost_check, eta_star_formula, gap_bound, slope_report};
use qreg_core::homotopy::{Event, PathState};
use qreg_core::linalg::{self, dist_inf, norm};
use qreg_core::oracle::{
    self, eta_star_bruteforce, lp_solve_bruteforce, min_norm_over_m, path_verify,
};
use qreg_core::ot::{self, ot_eta_star, separated_bounds, CouplingView, OtInstance};
use qreg_core::projection::project_from;
use qreg_core::{project, solve_qlp, trace_path, Polytope, PolytopeSpec, QlpInstance, Tolerances};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn birkhoff_projection_of_origin_is_uniform() {
    for n in [2, 3, 5, 12] {
        let poly = ot::birkhoff_polytope(n, 1.0, Tolerances::default());
        let x = project(&poly, &vec![0.0; n * n]).unwrap().x;
        assert!(x.iter().all(|&v| close(v, 1.0 / n as f64, 1e-14)));
    }
    // through full validation and enumeration as well
    let poly = Polytope::new(PolytopeSpec::birkhoff(3)).unwrap();
    let x = project(&poly, &[0.0; 9]).unwrap().x;
    assert!(x.iter().all(|&v| close(v, 1.0 / 3.0, 1e-12)));
}

#[test]
fn neg_identity_midpoint() {
    let inst = OtInstance::neg_identity(3).qlp();
    let x = solve_qlp(&inst, 3.0).unwrap().x;
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j { 2.0 / 3.0 } else { 1.0 / 6.0 };
            assert!(close(x[i * 3 + j], want, 1e-12));
        }
    }
    let view = CouplingView::from_pi(&x, 3);
    assert!(view.marginal_error() < 1e-12);
    assert_eq!(view.support.len(), 9);
}

#[test]
fn neg_identity_blocks_all_off_diagonals_at_once() {
    for n in [2, 3, 4] {
        let inst = OtInstance::neg_identity(n).qlp();
        let mut st = PathState::start(&inst).unwrap();
        let bp = st.next_breakpoint().unwrap();
        assert!(close(bp.eta, 2.0 * n as f64, 1e-9));
        let Event::BlockingConstraint(rows) = &bp.event else {
            panic!("{:?}", bp.event)
        };
        // every off-diagonal reaches 0; rows dependent on the others are left out
        assert!(rows.iter().all(|&r| r % (n + 1) != 0));
        assert!(rows.len() >= (n - 1) * (n - 1));
        st.advance(&bp).unwrap();
        assert_eq!(st.next_breakpoint().unwrap().event, Event::Stationary);
    }
}

#[test]
fn quadratic_three_points_threshold() {
    let inst = OtInstance::quadratic_1d(3);
    let path = trace_path(&inst.qlp()).unwrap();
    assert!(close(path.eta_star, 54.0, 1e-8));
    assert!(path.n_segments() >= 2);
    let formula = ot_eta_star(&inst).unwrap();
    assert!(close(formula, 54.0, 1e-8));
    let r = ot::analyze(&inst.qlp(), &path, 64).unwrap();
    assert!(r.bounds_ok());
    assert!(r.small_eta_bounds.iter().all(|p| p.half_constant));
}

#[test]
fn neg_identity_suboptimality_at_three() {
    let inst = OtInstance::neg_identity(3).qlp();
    let path = trace_path(&inst).unwrap();
    let e = analysis::suboptimality_on_path(&path, &inst.c, 3.0);
    assert!(close(e, 1.0 / 3.0, 1e-12));
}

#[test]
fn neg_identity_two_auxiliary_cost() {
    let inst = OtInstance::neg_identity(2).qlp();
    let path = trace_path(&inst).unwrap();
    let vs = inst.polytope.vertex_set().unwrap();
    let tol = Tolerances::default();
    let f = eta_star_formula(&vs, &inst.c, &path.x_star, &tol);
    assert!(close(f.eta_star, 4.0, 1e-12));
    let aux = aux_cost_check(&path, &inst.c, &vs, &f.argmax, &tol);
    assert!(aux.passed, "{aux:?}");
    // with c = C / N and eta* = 2N, c* = C + pi*; it is flat along the swap
    let swap = [0.0, 1.0, 1.0, 0.0];
    let cost = [-1.0, 0.0, 0.0, -1.0];
    assert!(dist_inf(&aux.c_star, &linalg::add(&cost, &path.x_star)) < 1e-12);
    let lhs = linalg::dot(&aux.c_star, &linalg::sub(&swap, &path.x_star));
    assert!(lhs.abs() < 1e-12);
    // 2 B D / Delta = 2 sqrt(2) 2 / 1
    let g = gap_bound(&vs, &inst.c, &tol).unwrap();
    assert!(close(g, 4.0 * 2f64.sqrt(), 1e-12));
}

#[test]
fn neg_identity_small_eta_distance() {
    for n in [2usize, 3, 5] {
        let nf = n as f64;
        let inst = OtInstance::neg_identity(n).qlp();
        let path = trace_path(&inst).unwrap();
        let eta = 0.1;
        let pts = analysis::small_eta_report(&inst, &path, &[eta]);
        assert!(pts[0].half_constant);
        assert!(close(
            pts[0].distance,
            eta / (2.0 * nf) * (nf - 1.0).sqrt(),
            1e-12
        ));
        assert!(close(pts[0].bound, 0.5 * norm(&inst.c) * eta, 1e-15));
        assert!(pts[0].passed);
    }
}

#[test]
fn quadratic_slope_within_bound() {
    let inst = OtInstance::quadratic_1d(3);
    let path = trace_path(&inst.qlp()).unwrap();
    let s = slope_report(&path, &inst.scaled_cost).unwrap();
    assert!(s.slope > 0.0 && s.slope <= 2.0 / 729.0);
    assert!(s.slope <= ot::ot_slope_bound(&inst) + 1e-9);
}

#[test]
fn oracle_examples() {
    let perms = ot::permutation_matrices(3);
    let c = OtInstance::neg_identity(3).scaled_cost;
    let (value, opt) = lp_solve_bruteforce(&perms, &c);
    assert!(close(value, -1.0, 1e-15));
    assert_eq!(opt.len(), 1);
    assert_eq!(
        perms[opt[0]],
        vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]
    );

    let flat = vec![0.0; 4];
    let both = ot::permutation_matrices(2);
    let (_, opt) = lp_solve_bruteforce(&both, &flat);
    assert_eq!(opt.len(), 2);
    let x = min_norm_over_m(&both).unwrap();
    assert!(x.iter().all(|&v| close(v, 0.5, 1e-14)));

    let perms4 = ot::permutation_matrices(4);
    let c4 = OtInstance::neg_identity(4).scaled_cost;
    let x4 = min_norm_over_m(&[perms4[0].clone()]).unwrap();
    assert!(close(
        eta_star_bruteforce(&perms4, &c4, &x4).unwrap(),
        8.0,
        1e-12
    ));

    let q2 = OtInstance::quadratic_1d(2);
    let id2 = vec![1.0, 0.0, 0.0, 1.0];
    assert!(close(
        eta_star_bruteforce(&both, &q2.scaled_cost, &id2).unwrap(),
        16.0,
        1e-12
    ));
}

#[test]
fn path_verify_on_closed_form() {
    let inst = OtInstance::neg_identity(3).qlp();
    let path = trace_path(&inst).unwrap();
    let r = path_verify(&inst, &path, 50, 4).unwrap();
    assert!(r.passed && r.max_discrepancy < 1e-12);

    // random planar polytope with a handful of vertices
    let spec = PolytopeSpec::hypercube(2)
        .inequality(vec![1.0, 1.0], 1.6)
        .inequality(vec![-1.0, 0.6], 0.5);
    let poly = Polytope::new(spec).unwrap();
    assert_eq!(poly.vertices().unwrap().len(), 6);
    let inst = QlpInstance::new(poly, vec![-0.7, -1.3]).unwrap();
    let path = trace_path(&inst).unwrap();
    assert!(path_verify(&inst, &path, 100, 9).unwrap().passed);
}

#[test]
fn asymmetric_separated_cost_brackets_threshold() {
    let cost = vec![
        vec![0.0, 1.0, 3.0],
        vec![2.0, 0.0, 1.0],
        vec![4.0, 5.0, 0.0],
    ];
    let inst = OtInstance::from_cost(cost).unwrap();
    let b = separated_bounds(&inst, None).unwrap();
    assert!(b.exact.is_none());
    assert!(b.lower < b.upper);
    let traced = trace_path(&inst.qlp()).unwrap().eta_star;
    assert!(
        b.lower <= traced + 1e-9 && traced <= b.upper + 1e-9,
        "{b:?} vs {traced}"
    );
    assert!(close(ot_eta_star(&inst).unwrap(), traced, 1e-7 * traced));
}

#[test]
fn separated_bounds_follow_the_matching() {
    // zero cost on the anti-diagonal
    let cost = vec![vec![2.0, 0.0], vec![0.0, 2.0]];
    let inst = OtInstance::from_cost(cost).unwrap();
    assert!(separated_bounds(&inst, None).is_err());
    let b = separated_bounds(&inst, Some(&[1, 0])).unwrap();
    assert_eq!(b.exact, Some(2.0));
    let traced = trace_path(&inst.qlp()).unwrap().eta_star;
    assert!(close(traced, 2.0, 1e-9));
}

#[test]
fn solves_agree_across_warm_starts() {
    for seed in 0..10 {
        let inst = oracle::random_instance(seed).unwrap();
        let z = inst.target(3.0);
        let cold = project(&inst.polytope, &z).unwrap().x;
        for v in inst.polytope.vertices().unwrap() {
            let warm = project_from(&inst.polytope, &z, v, &[]).unwrap().x;
            assert!(dist_inf(&cold, &warm) <= 1e-8, "seed {seed}");
        }
    }
}

#[test]
fn path_invariants_on_random_instances() {
    for seed in 100..130 {
        let inst = oracle::random_instance(seed).unwrap();
        let path = trace_path(&inst).unwrap();
        assert_eq!(
            path.x_zero,
            project(&inst.polytope, &vec![0.0; inst.c.len()]).unwrap().x
        );
        for w in path.breakpoints.windows(2) {
            assert!(w[0] < w[1]);
            let mid = 0.5 * (w[0] + w[1]);
            let x = solve_qlp(&inst, mid).unwrap().x;
            assert!(
                dist_inf(&x, &path.eval(mid)) <= 1e-7,
                "seed {seed} eta {mid}"
            );
        }
        let base = if path.eta_star > 0.0 {
            path.eta_star
        } else {
            1.0
        };
        for k in [1.01, 2.0, 10.0] {
            let x = solve_qlp(&inst, k * base).unwrap().x;
            assert!(dist_inf(&x, &path.x_star) <= 1e-8, "seed {seed}");
        }
        let vs = inst.polytope.vertices().unwrap();
        let (_, opt) = lp_solve_bruteforce(vs, &inst.c);
        for &k in &opt {
            assert!(norm(&path.x_star) <= norm(&vs[k]) + 1e-9);
        }
    }
}

#[test]
fn breakpoints_ignore_row_order() {
    for seed in 200..215 {
        let inst = oracle::random_instance(seed).unwrap();
        let mut spec = inst.polytope.spec().clone();
        spec.ineq_matrix.reverse();
        spec.h.reverse();
        let flipped = QlpInstance::new(Polytope::new(spec).unwrap(), inst.c.clone()).unwrap();
        let a = trace_path(&inst).unwrap();
        let b = trace_path(&flipped).unwrap();
        assert_eq!(a.breakpoints.len(), b.breakpoints.len(), "seed {seed}");
        for (x, y) in a.breakpoints.iter().zip(&b.breakpoints) {
            assert!((x - y).abs() <= 1e-8 * (1.0 + x), "seed {seed}");
        }
    }
}
