//! Library results against the brute-force joint-table oracle.

mod common;

use common::Brute;
use dirinfo::compression::{independent_mismatch_penalty, mismatch_redundancy, Link};
use dirinfo::fixtures;
use dirinfo::gambling::{growth, growth_increase, optimal_bets, Odds};
use dirinfo::hyptest::{error_probs, exponent_estimates, neyman_pearson_beta, outcomes};
use dirinfo::info::{directed_lautum1, directed_lautum2, info_report, Direction, RateEstimate};
use dirinfo::sample::replica_rng;
use rand::Rng;
use dirinfo::JointProcessModel;

fn models() -> Vec<(String, JointProcessModel)> {
    let mut out = vec![
        ("example1".to_string(), fixtures::example1(0.8, 0.1).unwrap()),
        ("noisy copy".to_string(), fixtures::iid_noisy_copy(0.2).unwrap()),
    ];
    let mut rng = replica_rng(11, 0);
    for (k, (nx, ny, order)) in [(2, 2, 1), (3, 2, 1), (2, 3, 0), (2, 2, 2)].into_iter().enumerate() {
        out.push((format!("random {k}"), fixtures::random_model(&mut rng, nx, ny, order).unwrap()));
    }
    out.push(("no feedback".to_string(), fixtures::random_no_feedback(&mut rng, 2, 2, 1).unwrap()));
    out
}

fn close(a: f64, b: f64, what: &str, name: &str) {
    assert!((a - b).abs() < 1e-10, "{name}: {what} {a} vs oracle {b}");
}

#[test]
fn information_measures() {
    for (name, m) in models() {
        for n in 1..=3 {
            let o = Brute::new(&m, n);
            let r = info_report(&m, n).unwrap();
            close(r.h_joint, o.entropy(), "H(X,Y)", &name);
            close(r.h_x, o.entropy_x(), "H(X)", &name);
            close(r.h_x_given_y_causal, o.causal_entropy_x(), "H(X||Y)", &name);
            close(r.mi, o.mi(), "I(X;Y)", &name);
            close(r.di_x_to_y, o.di_xy(), "I(X->Y)", &name);
            close(r.di_y_to_x, o.di_yx(0), "I(Y->X)", &name);
            close(r.di_y_delayed_to_x, o.di_yx(1), "I(Y^{n-1}->X)", &name);
            close(r.lautum.unwrap(), o.lautum(), "L", &name);
            close(r.lautum_dir1.unwrap(), o.l1_xy(), "L1(X->Y)", &name);
            close(r.lautum_dir2.unwrap(), o.l2_xy(), "L2(X->Y)", &name);
            let l1 = directed_lautum1(&m, n, Direction::YToX, 1).unwrap();
            close(l1, o.l1_yx_delayed(), "L1(Y^{n-1}->X)", &name);
            let l2 = directed_lautum2(&m, n, Direction::YToX, 0).unwrap();
            close(l2, o.l2_yx(), "L2(Y->X)", &name);
        }
    }
}

#[test]
fn growth_against_oracle() {
    for (name, m) in models() {
        let n = 3;
        let o = Brute::new(&m, n);
        let g = growth(&m, &optimal_bets(&m), &Odds::fair(m.x_size()), n).unwrap();
        let expect = n as f64 * (m.x_size() as f64).log2() - o.causal_entropy_x();
        close(g.growth, expect, "W*", &name);
        let inc = growth_increase(&m, n).unwrap();
        close(inc.delta_w * n as f64, o.di_yx(0), "delta W", &name);
    }
}

#[test]
fn compression_redundancies() {
    for (name, m) in models() {
        let n = 3;
        let o = Brute::new(&m, n);
        close(mismatch_redundancy(&m, n, Link::Forward).unwrap(), o.di_xy(), "forward", &name);
        close(mismatch_redundancy(&m, n, Link::Backward).unwrap(), o.di_yx(1), "backward", &name);
        close(mismatch_redundancy(&m, n, Link::Both).unwrap(), o.mi(), "both", &name);
        close(independent_mismatch_penalty(&m, n, Link::Forward).unwrap(), o.l1_xy(), "L1 forward", &name);
        close(independent_mismatch_penalty(&m, n, Link::Backward).unwrap(), o.l1_yx_delayed(), "L1 backward", &name);
        close(independent_mismatch_penalty(&m, n, Link::Both).unwrap(), o.lautum(), "L", &name);
    }
}

#[test]
fn hypothesis_laws() {
    for (name, m) in models() {
        let n = 3;
        let o = Brute::new(&m, n);
        let mut h1: Vec<f64> =
            o.pairs.iter().map(|(x, y, _)| o.x_given_y(x, y, 1) * o.py(y)).filter(|&p| p > 0.0).collect();
        let mut lib: Vec<f64> = outcomes(&m, n).unwrap().iter().map(|o| o.p1).filter(|&p| p > 0.0).collect();
        h1.sort_by(f64::total_cmp);
        lib.sort_by(f64::total_cmp);
        assert_eq!(h1.len(), lib.len(), "{name}");
        for (a, b) in h1.iter().zip(&lib) {
            close(*a, *b, "p_H1", &name);
        }
        assert!((h1.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        // Error probabilities of the typical region, straight from the table.
        let rate = RateEstimate { value: o.di_xy() / n as f64, n, achieved_tol: 0.0, converged: true };
        let delta = 0.1;
        let (mut alpha, mut beta) = (0.0, 0.0);
        for (x, y, p) in &o.pairs {
            let p1 = o.x_given_y(x, y, 1) * o.py(y);
            let llr = if *p > 0.0 { (o.y_given_x(x, y, 0) / o.py(y)).log2() } else { f64::NEG_INFINITY };
            if (llr / n as f64 - rate.value).abs() < delta {
                beta += p1;
            } else {
                alpha += p;
            }
        }
        let r = error_probs(&m, n, delta, &rate).unwrap();
        close(r.alpha, alpha, "alpha", &name);
        close(r.beta, beta, "beta", &name);
    }
}

/// Over every acceptance region of a small problem, the best set-based test
/// lies between the randomized optimum and the whole-level test.
#[test]
fn neyman_pearson_against_all_regions() {
    let m = fixtures::iid_noisy_copy(0.2).unwrap();
    let n = 2;
    let o = Brute::new(&m, n);
    let table: Vec<(f64, f64)> = o.pairs.iter().map(|(x, y, p)| (*p, o.x_given_y(x, y, 1) * o.py(y))).collect();
    let eps = 0.3;
    let np = neyman_pearson_beta(&m, n, eps).unwrap();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << table.len()) {
        let (mut a0, mut b1) = (0.0, 0.0);
        for (k, (p0, p1)) in table.iter().enumerate() {
            if mask >> k & 1 == 1 {
                b1 += p1;
            } else {
                a0 += p0;
            }
        }
        if a0 < eps {
            best = f64::min(best, b1);
        }
    }
    assert!(np.optimum_randomized <= best + 1e-12);
    assert!(np.optimum + 1e-12 >= best);
}

fn typical(m: &JointProcessModel, n: usize) -> RateEstimate {
    RateEstimate { value: Brute::new(m, n).di_xy() / n as f64, n, achieved_tol: 0.0, converged: true }
}

/// The typical region is one feasible test, so it never beats the optimum.
#[test]
fn neyman_pearson_dominates_the_typical_region() {
    let mut checked = 0;
    for (name, m) in models() {
        for n in 2..=4 {
            let rate = typical(&m, n);
            for delta in [0.05, 0.2, 0.5] {
                let aep = error_probs(&m, n, delta, &rate).unwrap();
                let eps = aep.alpha + 1e-9;
                if eps >= 0.5 {
                    continue;
                }
                let np = neyman_pearson_beta(&m, n, eps).unwrap();
                assert!(aep.beta + 1e-12 >= np.optimum_randomized, "{name} n={n}: {} < {}", aep.beta, np.optimum_randomized);
                checked += 1;
            }
        }
    }
    assert!(checked >= 10, "only {checked} feasible cases");
}

/// Any region with `alpha < eps` keeps `beta >= 2^(-n(rate+delta)) (1 - alpha - Pr(A^c | H0))`.
#[test]
fn converse_bound_on_random_regions() {
    let mut rng = replica_rng(12, 0);
    let mut checked = 0;
    for (name, m) in models() {
        for n in 2..=4 {
            let rate = typical(&m, n);
            let delta = 0.1;
            let outside = error_probs(&m, n, delta, &rate).unwrap().alpha;
            let table = outcomes(&m, n).unwrap();
            for _ in 0..50 {
                let keep: f64 = rng.random();
                let (mut alpha, mut beta) = (0.0, 0.0);
                for o in &table {
                    if rng.random::<f64>() < keep {
                        beta += o.p1;
                    } else {
                        alpha += o.p0;
                    }
                }
                if alpha >= 0.5 {
                    continue;
                }
                let bound = (-(n as f64) * (rate.value + delta)).exp2() * (1.0 - alpha - outside);
                assert!(beta + 1e-12 >= bound, "{name} n={n}: beta {beta} below {bound}");
                checked += 1;
            }
        }
    }
    assert!(checked > 200);
}

/// Distance of the per-n exponent estimates to their target shrinks with n,
/// allowing one increase.
fn trend_violations(estimates: &[f64], target: f64) -> usize {
    let d: Vec<f64> = estimates.iter().map(|e| (e - target).abs()).collect();
    d.windows(2).filter(|w| w[1] > w[0] + 1e-12).count()
}

#[test]
fn exponent_estimates_approach_their_targets() {
    let ns: Vec<usize> = (1..=10).collect();
    let per_n = |e: f64, n: usize| -e.log2() / n as f64;
    for (name, m) in [
        ("copy", fixtures::deterministic_copy(2).unwrap()),
        ("independent", fixtures::independent_uniform(2, 2).unwrap()),
        ("example1", fixtures::example1(0.8, 0.1).unwrap()),
    ] {
        let r = exponent_estimates(&m, &ns, 0.25, 1e-9).unwrap();
        let beta: Vec<f64> = r.points.iter().map(|p| per_n(p.beta_np_randomized, p.n)).collect();
        assert!(trend_violations(&beta, r.target_di_rate) <= 1, "{name}: {beta:?}");
        if name == "independent" {
            let alpha: Vec<f64> = r.points.iter().map(|p| per_n(p.alpha_np_randomized, p.n)).collect();
            assert!(trend_violations(&alpha, r.target_l2_rate.unwrap()) <= 1, "{name}: {alpha:?}");
        }
    }
}
