use proptest::prelude::*;
use sw_core::discrete_ot::wasserstein_exact;
use sw_core::hilbert::{DiscreteMeasure, Weights};
use sw_core::ot1d::{w1d, w1d_pow, Projected1DMeasure};
use sw_core::sliced::sw_estimate;
use sw_core::surface::{sample_directions, GaussianReference};

/// Equal-size uniform measures on the line: minimum over all permutations.
fn brute_force_wpp(a: &[f64], b: &[f64], p: f64) -> f64 {
    fn permute(k: usize, idx: &mut Vec<usize>, a: &[f64], b: &[f64], p: f64, best: &mut f64) {
        if k == idx.len() {
            let cost: f64 = idx
                .iter()
                .enumerate()
                .map(|(i, &j)| (a[i] - b[j]).abs().powf(p))
                .sum();
            *best = best.min(cost / a.len() as f64);
            return;
        }
        for i in k..idx.len() {
            idx.swap(k, i);
            permute(k + 1, idx, a, b, p, best);
            idx.swap(k, i);
        }
    }
    let mut best = f64::INFINITY;
    permute(0, &mut (0..b.len()).collect(), a, b, p, &mut best);
    best
}

fn line(v: &[f64]) -> Projected1DMeasure {
    Projected1DMeasure::new(v.to_vec(), Weights::Uniform(v.len())).unwrap()
}

fn atoms(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, n)
}

fn measure(dim: usize) -> impl Strategy<Value = DiscreteMeasure> {
    (1usize..=5).prop_flat_map(move |n| {
        (
            prop::collection::vec(-2.0f64..2.0, n * dim),
            prop::collection::vec(0.05f64..1.0, n),
        )
            .prop_map(move |(coords, w)| {
                let pts = coords
                    .chunks(dim)
                    .map(|c| sw_core::hilbert::CoefficientVector::new(c.to_vec()).unwrap())
                    .collect();
                DiscreteMeasure::weighted(pts, w).unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn w1d_matches_permutation_oracle((a, b) in (1usize..=6).prop_flat_map(|n| (atoms(n), atoms(n))),
                                      p in prop::sample::select(vec![1.0, 1.5, 2.0, 3.0])) {
        let fast = w1d_pow(&line(&a), &line(&b), p).unwrap();
        let slow = brute_force_wpp(&a, &b, p);
        prop_assert!((fast - slow).abs() <= 1e-10 * slow.max(1.0), "{} vs {}", fast, slow);
    }

    #[test]
    fn w1d_is_a_metric(a in atoms(5), b in atoms(3), c in atoms(4), p in 1.0f64..3.0) {
        let (a, b, c) = (line(&a), line(&b), line(&c));
        let ab = w1d(&a, &b, p).unwrap();
        prop_assert_eq!(ab, w1d(&b, &a, p).unwrap());
        prop_assert_eq!(w1d(&a, &a, p).unwrap(), 0.0);
        let ac = w1d(&a, &c, p).unwrap();
        let cb = w1d(&c, &b, p).unwrap();
        prop_assert!(ab <= ac + cb + 1e-10);
    }

    #[test]
    fn flow_solver_agrees_with_line_formula(mu in measure(1), nu in measure(1), p in prop::sample::select(vec![1.0, 2.0])) {
        let (w, plan) = wasserstein_exact(&mu, &nu, p).unwrap();
        let a = Projected1DMeasure::new(mu.points().map(|x| x[0]).collect(), mu.weights().clone()).unwrap();
        let b = Projected1DMeasure::new(nu.points().map(|x| x[0]).collect(), nu.weights().clone()).unwrap();
        let line_w = w1d(&a, &b, p).unwrap();
        prop_assert!((w - line_w).abs() <= 1e-9 * line_w.max(1.0), "{} vs {}", w, line_w);
        prop_assert!(plan.marginal_residual(&mu, &nu) < 1e-10);
    }

    #[test]
    fn sliced_distance_is_a_metric(mu in measure(3), nu in measure(3), eta in measure(3), seed in 0u64..1000) {
        let dirs = sample_directions(&GaussianReference::isotropic(3).unwrap(), 128, 0.05, seed, 1 << 20).unwrap();
        let ab = sw_estimate(&mu, &nu, 2.0, &dirs).unwrap().value;
        prop_assert_eq!(ab, sw_estimate(&nu, &mu, 2.0, &dirs).unwrap().value);
        prop_assert_eq!(sw_estimate(&mu, &mu, 2.0, &dirs).unwrap().value, 0.0);
        let ae = sw_estimate(&mu, &eta, 2.0, &dirs).unwrap().value;
        let eb = sw_estimate(&eta, &nu, 2.0, &dirs).unwrap().value;
        prop_assert!(ab <= ae + eb + 1e-10);
        let (w, _) = wasserstein_exact(&mu, &nu, 2.0).unwrap();
        prop_assert!(ab <= w + 1e-10);
    }
}
