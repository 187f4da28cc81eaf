use halfspace_core::cover::{build_grid, recommended_holdout, select_best, Classifier};
use halfspace_core::datasets::{generate, opt_oracle_grid, NoiseSpec, PlantedModel};
use halfspace_core::gaussian::{sample_gaussian, std_normal_cdf, std_normal_pdf, RngStream};
use halfspace_core::influence::{influence_matrix, select_subspace, Subspace};
use halfspace_core::linalg::dot;
use halfspace_core::proper::{learn_proper_halfspace, ProperLearnerConfig, SearchMode};
use halfspace_core::regression::{default_ridge, fit_l2};
use halfspace_core::{LabelMode, SampleBatch};

fn planted(d: usize, noise: NoiseSpec, t: f64, n: usize, n_test: usize, seed: u64) -> (SampleBatch, SampleBatch, Vec<f64>) {
    let mut model = PlantedModel::halfspace(d, noise);
    model.t_star = t;
    let train = generate(&model, n, &RngStream::new(seed, 0)).unwrap();
    let test_model = model.clone().with_target(train.w_star.clone(), t);
    let test = generate(&test_model, n_test, &RngStream::new(seed, 1)).unwrap();
    (train.batch, test.batch, train.w_star)
}

fn overrides(eps: f64, seed: u64) -> ProperLearnerConfig {
    ProperLearnerConfig { eps, degree_override: Some(3), eta_override: Some(0.05), seed, ..Default::default() }
}

#[test]
fn clean_halfspace_in_eight_dimensions() {
    let (train, test, _) = planted(8, NoiseSpec::Clean, 0.0, 200_000, 100_000, 1);
    let out = learn_proper_halfspace(&overrides(0.2, 1), &train).unwrap();
    let err = out.classifier.error_rate(&test).unwrap();
    assert!(err <= 0.05, "{err}");
    assert_eq!(out.subspace.dim(), 1);
}

#[test]
fn pure_noise_labels() {
    let n = 50_000;
    let rng = RngStream::new(2, 0);
    let noise = |r: &RngStream| {
        let pts = sample_gaussian(2, n, r);
        let labels = r.substream(9).uniforms(n).iter().map(|&u| if u < 0.5 { 1.0 } else { -1.0 }).collect();
        SampleBatch::new(pts, labels, LabelMode::Halfspace).unwrap()
    };
    let (train, test) = (noise(&rng.substream(1)), noise(&rng.substream(2)));
    let out = learn_proper_halfspace(&ProperLearnerConfig { seed: 2, ..Default::default() }, &train).unwrap();
    let err = out.classifier.error_rate(&test).unwrap();
    assert!(err <= 0.52, "{err}");
    let oracle = opt_oracle_grid(&test, 0.01).unwrap().error_rate;
    assert!((0.48..=0.5).contains(&oracle), "{oracle}");
}

#[test]
fn random_classification_noise_in_six_dimensions() {
    let (train, test, _) = planted(6, NoiseSpec::Rcn { rate: 0.1 }, 0.2, 150_000, 100_000, 3);
    let out = learn_proper_halfspace(&overrides(0.1, 3), &train).unwrap();
    let err = out.classifier.error_rate(&test).unwrap();
    assert!(err <= 0.15, "{err}");
}

#[test]
fn brute_force_matches_the_oracle_in_two_dimensions() {
    let (train, test, _) = planted(2, NoiseSpec::Rcn { rate: 0.15 }, -0.4, 60_000, 60_000, 4);
    let cfg = ProperLearnerConfig { eps: 0.1, search: SearchMode::BruteForce, seed: 4, ..Default::default() };
    let out = learn_proper_halfspace(&cfg, &train).unwrap();
    assert_eq!(out.subspace.dim(), 2);
    let err = out.classifier.error_rate(&test).unwrap();
    let oracle = opt_oracle_grid(&test, 0.01).unwrap().error_rate;
    assert!((err - oracle).abs() <= 0.05, "{err} vs {oracle}");
}

#[test]
fn same_seed_same_hypothesis() {
    let (train, _, _) = planted(3, NoiseSpec::Rcn { rate: 0.1 }, 0.1, 20_000, 10, 5);
    let a = learn_proper_halfspace(&overrides(0.2, 5), &train).unwrap();
    let b = learn_proper_halfspace(&overrides(0.2, 5), &train).unwrap();
    assert_eq!(a.classifier, b.classifier);
    assert_eq!(a.report.deterministic_json(), b.report.deterministic_json());
}

#[test]
fn subspace_captures_the_planted_normal() {
    for seed in 0..20u64 {
        let d = [2, 4, 6, 8][seed as usize % 4];
        let rate = [0.0, 0.1, 0.2][seed as usize % 3];
        let noise = if rate == 0.0 { NoiseSpec::Clean } else { NoiseSpec::Rcn { rate } };
        let (train, _, w) = planted(d, noise, 0.2, 50_000, 10, seed);
        let out = learn_proper_halfspace(&overrides(0.2, seed), &train).unwrap();
        let captured = out.subspace.project(&w).unwrap().iter().map(|c| c * c).sum::<f64>().sqrt();
        assert!(captured >= 0.9, "seed {seed}, d {d}, rate {rate}: {captured}");
    }
}

#[test]
fn selected_error_is_at_most_the_constants() {
    let (train, _, _) = planted(4, NoiseSpec::Rcn { rate: 0.3 }, 1.2, 20_000, 10, 6);
    let out = learn_proper_halfspace(&overrides(0.2, 6), &train).unwrap();
    let (nr, _) = overrides(0.2, 6).split(train.len()).unwrap();
    let hold = train.slice(nr, train.len());
    let best_constant = [1.0, -1.0]
        .map(|value| Classifier::Constant { value }.error_rate(&hold).unwrap())
        .into_iter()
        .fold(1.0, f64::min);
    assert!(out.report.errors.holdout.unwrap() <= best_constant);
}

fn subspace_of(train: &SampleBatch, k: usize, eta: f64) -> Subspace {
    let fit = fit_l2(train, k, default_ridge(train.len())).unwrap();
    select_subspace(&influence_matrix(&fit.poly).unwrap(), eta).unwrap()
}

#[test]
fn subspace_contains_a_near_optimal_halfspace() {
    let models = [
        NoiseSpec::Rcn { rate: 0.1 },
        NoiseSpec::BandFlip { width: 0.1 },
        NoiseSpec::FarFlip { budget: 0.05, radius: 1.5 },
        NoiseSpec::Rcn { rate: 0.25 },
    ];
    for (i, noise) in models.into_iter().enumerate() {
        for d in [2, 3] {
            let seed = 10 * i as u64 + d as u64;
            let n_eval = if d == 2 { 60_000 } else { 30_000 };
            let (train, eval, _) = planted(d, noise, 0.3, 60_000, n_eval, seed);
            let v = subspace_of(&train, 3, 0.05);
            let grid = build_grid(&v, 0.05, 1_000_000).unwrap();
            let in_v = select_best(&grid, &eval).unwrap().error_rate;
            let global = opt_oracle_grid(&eval, if d == 2 { 0.01 } else { 0.04 }).unwrap().error_rate;
            assert!(in_v <= global + 0.05, "{noise:?}, d {d}: {in_v} vs {global}");
        }
    }
}

/// Population error of `sign(w·x + t)` when labels are `sign(u·x + s)` flipped at `rate`.
fn population_error(c: &Classifier, u: &[f64], s: f64, rate: f64) -> f64 {
    let disagree = match c {
        Classifier::Constant { value } => {
            let positive = std_normal_cdf(s);
            if *value > 0.0 {
                1.0 - positive
            } else {
                positive
            }
        }
        Classifier::Halfspace(h) => {
            // condition on a = u·x; along u⊥ the hypothesis is a threshold
            let cos = dot(&h.w, u).clamp(-1.0, 1.0);
            let sin = (1.0 - cos * cos).sqrt();
            let inner = |a: f64| {
                let p_pos = if sin < 1e-12 {
                    if cos * a + h.t >= 0.0 { 1.0 } else { 0.0 }
                } else {
                    std_normal_cdf((cos * a + h.t) / sin)
                };
                let wrong = if a + s >= 0.0 { 1.0 - p_pos } else { p_pos };
                std_normal_pdf(a) * wrong
            };
            simpson(inner, -10.0, -s) + simpson(inner, -s, 10.0)
        }
    };
    rate + (1.0 - 2.0 * rate) * disagree
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let n = 20_000;
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(a) + f(b) + inner) * h / 3.0
}

#[test]
fn recommended_holdout_bounds_the_selection_gap() {
    let (eps, delta, rate, s) = (0.1, 0.05, 0.1, 0.3);
    let grid = build_grid(&Subspace::full(2), eps, 1_000_000).unwrap();
    let n = recommended_holdout(grid.len(), eps, delta);
    let mut within = 0;
    for seed in 0..20u64 {
        let mut model = PlantedModel::halfspace(2, NoiseSpec::Rcn { rate });
        model.t_star = s;
        let g = generate(&model, n, &RngStream::new(seed, 7)).unwrap();
        let sel = select_best(&grid, &g.batch).unwrap();
        let pop = population_error(&sel.classifier, &g.w_star, s, rate);
        if (sel.error_rate - pop).abs() <= eps {
            within += 1;
        }
    }
    assert!(within >= 19, "{within}/20 within ε");
}

#[test]
fn population_error_oracle_matches_monte_carlo() {
    let mut model = PlantedModel::halfspace(2, NoiseSpec::Rcn { rate: 0.1 });
    model.t_star = 0.3;
    let g = generate(&model, 400_000, &RngStream::new(8, 0)).unwrap();
    let grid = build_grid(&Subspace::full(2), 0.5, 1_000_000).unwrap();
    for i in (0..grid.len()).step_by(7) {
        let c = grid.candidate(i).unwrap();
        let mc = c.error_rate(&g.batch).unwrap();
        let exact = population_error(&c, &g.w_star, 0.3, 0.1);
        assert!((mc - exact).abs() <= 0.004, "candidate {i}: {mc} vs {exact}");
    }
}
