//! Desk-scale invariant suites: each check prints one PASS/FAIL line.

use std::f64::consts::PI;

use halfspace_core::cover::{threshold_grid, unit_ball_cover, Classifier, HalfspaceHypothesis};
use halfspace_core::datasets::random_unit;
use halfspace_core::gaussian::{gauss_hermite_rule, sample_gaussian, RngStream, TensorQuadrature};
use halfspace_core::hermite::{HermitePoly, IndexSet};
use halfspace_core::influence::{influence_matrix, select_subspace};
use halfspace_core::linalg::{dot, norm};
use halfspace_core::ptas::{angle, disagreement_mc, gaussian_band_mass, rejection_sample, LocalizationParams};
use halfspace_core::regression::{design_matrix, fit_l2_with, Solver};
use halfspace_core::relu::{relu_hermite_1d, relu_tail};
use halfspace_core::{LabelMode, Result, SampleBatch};

use crate::{Status, VerifyArgs};

#[derive(clap::ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Hermite,
    Regression,
    Influence,
    Cover,
    Localization,
    Disagreement,
    Relu,
    All,
}

pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check { name: name.to_string(), passed, detail }
}

fn random_poly(d: usize, k: usize, rng: &RngStream) -> Result<HermitePoly> {
    let basis = IndexSet::new(d, k)?;
    let coeffs = rng.normals(basis.len());
    HermitePoly::from_coeffs(basis, coeffs)
}

fn hermite(seed: u64) -> Result<Vec<Check>> {
    let rule = gauss_hermite_rule(8)?;
    let mut worst = 0.0f64;
    for d in 1..=3 {
        let basis = IndexSet::new(d, 6)?;
        let quad = TensorQuadrature::new(&rule, d)?;
        let p = basis.len();
        let mut table = vec![0.0; basis.table_len()];
        let mut f = vec![0.0; p];
        let mut gram = vec![0.0; p * p];
        for (x, w) in quad.points.rows().zip(&quad.weights) {
            basis.features_into(x, &mut table, &mut f);
            for i in 0..p {
                for j in 0..p {
                    gram[i * p + j] += w * f[i] * f[j];
                }
            }
        }
        for i in 0..p {
            for j in 0..p {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[i * p + j] - target).abs());
            }
        }
    }
    let mut out = vec![check("orthonormality |α|,|β| ≤ 6, d ≤ 3", worst <= 1e-10, format!("max deviation {worst:.2e}"))];

    let rng = RngStream::new(seed, 0).substream(1);
    let poly = random_poly(3, 4, &rng)?;
    let pts = sample_gaussian(3, 200, &rng.substream(1));
    let h = 0.25;
    let mut worst = 0.0f64;
    for x in pts.rows() {
        for i in 0..3 {
            let at = |s: f64| {
                let mut y = x.to_vec();
                y[i] += s * h;
                poly.eval(&y)
            };
            let fd = (at(-2.0)? - 8.0 * at(-1.0)? + 8.0 * at(1.0)? - at(2.0)?) / (12.0 * h);
            let g = poly.gradient(i)?.eval(x)?;
            worst = worst.max((g - fd).abs() / g.abs().max(1.0));
        }
    }
    out.push(check("gradient identity ∂H_α = √α_i H_{α−e_i}", worst <= 1e-8, format!("max deviation {worst:.2e}")));

    let m = influence_matrix(&poly)?;
    let weighted: f64 = poly
        .basis()
        .indices()
        .iter()
        .zip(poly.coeffs())
        .map(|(a, c)| a.total_degree() as f64 * c * c)
        .sum();
    let rel = (m.trace() - weighted).abs() / weighted;
    out.push(check("trace(M) = Σ|α|c_α²", rel <= 1e-12, format!("relative deviation {rel:.2e}")));
    Ok(out)
}

fn sign_batch(d: usize, n: usize, rng: &RngStream) -> Result<SampleBatch> {
    let pts = sample_gaussian(d, n, rng);
    let labels = pts.rows().map(|x| if x[0] + 0.5 * x[1] >= 0.2 { 1.0 } else { -1.0 }).collect();
    SampleBatch::new(pts, labels, LabelMode::Halfspace)
}

fn regression(seed: u64) -> Result<Vec<Check>> {
    let batch = sign_batch(3, 20_000, &RngStream::new(seed, 0).substream(2))?;
    let mut out = vec![];
    for solver in [Solver::Qr, Solver::Gram] {
        let basis = IndexSet::new(3, 3)?;
        let fit = fit_l2_with(&batch, &basis, 0.0, solver)?;
        let x = design_matrix(&basis, &batch.points);
        let p = basis.len();
        let mut grad = vec![0.0; p];
        let mut rhs = vec![0.0; p];
        for (row, &y) in x.chunks_exact(p).zip(&batch.labels) {
            let r = y - dot(row, fit.poly.coeffs());
            for j in 0..p {
                grad[j] += row[j] * r;
                rhs[j] += row[j] * y;
            }
        }
        let rel = norm(&grad) / norm(&rhs);
        out.push(check(&format!("KKT residual orthogonality ({solver:?})"), rel <= 1e-6, format!("relative {rel:.2e}")));
    }
    let mut losses = vec![];
    for k in 0..=4 {
        let basis = IndexSet::new(3, k)?;
        losses.push(fit_l2_with(&batch, &basis, 0.0, Solver::Auto)?.train_loss);
    }
    let monotone = losses.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    out.push(check("training loss nonincreasing in degree", monotone, format!("{losses:.4?}")));
    Ok(out)
}

fn influence(seed: u64) -> Result<Vec<Check>> {
    let rng = RngStream::new(seed, 0).substream(3);
    let poly = random_poly(4, 3, &rng)?;
    let m = influence_matrix(&poly)?;
    let eig = m.eigen()?;
    let d = m.dim();
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let r: f64 = (0..d).map(|k| eig.values[k] * eig.vectors[k][i] * eig.vectors[k][j]).sum();
            worst = worst.max((r - m.get(i, j)).abs());
        }
    }
    let scale = m.trace().max(1.0);
    let mut out = vec![check("eigendecomposition reconstructs M", worst <= 1e-10 * scale, format!("max deviation {worst:.2e}"))];
    let psd = eig.values.iter().all(|&v| v >= -1e-12 * scale);
    out.push(check("M is positive semidefinite", psd, format!("smallest eigenvalue {:.2e}", eig.values[d - 1])));
    let eta = m.trace() / 3.0;
    let v = select_subspace(&m, eta)?;
    let ok = v.dim() as f64 * eta <= m.trace() + 1e-9 * scale;
    out.push(check("dim V · η ≤ trace(M)", ok, format!("dim {} at η = {eta:.3}", v.dim())));
    Ok(out)
}

fn cover(seed: u64) -> Result<Vec<Check>> {
    let eps = 0.25;
    let mut out = vec![];
    for m in 1..=3 {
        let c = unit_ball_cover(m, eps, 1_000_000)?;
        let rng = RngStream::new(seed, 0).substream(40 + m as u64);
        let worst = (0..2000u64)
            .map(|i| {
                let u = random_unit(m, &rng.substream(i));
                c.iter()
                    .map(|p| p.iter().zip(&u).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max);
        out.push(check(
            &format!("ε-cover of the unit sphere, m = {m}"),
            worst <= eps,
            format!("{} points, worst distance {worst:.3}", c.len()),
        ));
    }
    let g = threshold_grid(0.1)?;
    let ok = g.len() == 31 && (g[30] - 1.5).abs() < 1e-12;
    out.push(check("threshold grid ε = 0.1 spans ±1.5", ok, format!("{} thresholds", g.len())));
    Ok(out)
}

fn localization(seed: u64) -> Result<Vec<Check>> {
    let n = 200_000;
    let d = 3;
    let rng = RngStream::new(seed, 0).substream(5);
    let pts = sample_gaussian(d, n, &rng);
    let batch = SampleBatch::new(pts, vec![1.0; n], LabelMode::Halfspace)?;
    let w0 = random_unit(d, &rng.substream(1));
    let mut out = vec![];
    for (i, sigma) in [0.3, 0.5, 0.8].into_iter().enumerate() {
        let alpha = 0.05;
        let params = LocalizationParams::new(w0.clone(), sigma, 0.4, alpha)?;
        let (acc, rep) = rejection_sample(&batch, &params, &rng.substream(10 + i as u64))?;
        let sd = (sigma * (1.0 - sigma) / n as f64).sqrt();
        out.push(check(
            &format!("acceptance rate σ = {sigma}"),
            (rep.rate - sigma).abs() <= 3.0 * sd,
            format!("rate {:.4}, 3σ band ±{:.4}", rep.rate, 3.0 * sd),
        ));
        let along = acc.points.rows().map(|x| dot(&w0, x).powi(2)).sum::<f64>() / acc.len() as f64;
        out.push(check(
            &format!("accepted variance along w0, σ = {sigma}"),
            (along / (sigma * sigma) - 1.0).abs() <= 0.05,
            format!("{along:.4} vs σ² = {:.4}", sigma * sigma),
        ));
    }
    Ok(out)
}

fn disagreement(seed: u64) -> Result<Vec<Check>> {
    let d = 3;
    let n = 50_000;
    let rng = RngStream::new(seed, 0).substream(6);
    let mut worst_angle = f64::INFINITY;
    let mut worst_band = f64::INFINITY;
    for i in 0..20u64 {
        let r = rng.substream(i);
        let u = random_unit(d, &r.substream(1));
        let mut v = random_unit(d, &r.substream(2));
        // the angle bound holds for θ ≤ π/2 only
        if dot(&u, &v) < 0.0 {
            v.iter_mut().for_each(|a| *a = -*a);
        }
        let t = r.substream(8).normals(1)[0];
        let hu = Classifier::Halfspace(HalfspaceHypothesis::new(u.clone(), 0.0)?);
        let hv = Classifier::Halfspace(HalfspaceHypothesis::new(v.clone(), t)?);
        let est = disagreement_mc(&hu, &hv, d, n, &r.substream(3), None)?;
        worst_angle = worst_angle.min((est.p - angle(&u, &v) / PI) / est.std_err.max(1e-12));

        let w0 = random_unit(d, &r.substream(4));
        let sigma = 0.2 + 0.7 * r.substream(5).uniforms(1)[0];
        let ts: Vec<f64> = r.substream(6).normals(2);
        let h1 = HalfspaceHypothesis::new(u.clone(), ts[0])?;
        let h2 = HalfspaceHypothesis::new(v.clone(), ts[1])?;
        let scale = |w: &[f64]| {
            // ‖Σ^{1/2} w‖ with Σ = I − (1 − σ²) w0 w0ᵀ
            let z = dot(w0.as_slice(), w);
            (dot(w, w) - (1.0 - sigma * sigma) * z * z).sqrt()
        };
        let band = gaussian_band_mass(h1.t / scale(&h1.w), h2.t / scale(&h2.w));
        let est = disagreement_mc(
            &Classifier::Halfspace(h1),
            &Classifier::Halfspace(h2),
            d,
            n,
            &r.substream(7),
            Some((&w0, sigma)),
        )?;
        worst_band = worst_band.min((est.p - band) / est.std_err.max(1e-12));
    }
    Ok(vec![
        check("homogeneous vs biased: disagreement ≥ θ/π − 3 s.e. (20 pairs)", worst_angle >= -3.0, format!("min z-score {worst_angle:.2}")),
        check("disagreement ≥ band mass − 3 s.e. (20 pairs)", worst_band >= -3.0, format!("min z-score {worst_band:.2}")),
    ])
}

fn relu(_seed: u64) -> Result<Vec<Check>> {
    let c0 = relu_hermite_1d(0);
    let c1 = relu_hermite_1d(1);
    let want0 = 1.0 / (2.0 * PI).sqrt();
    let ks = [4usize, 8, 16];
    let tails: Vec<f64> = ks.iter().map(|&k| relu_tail(k)).collect();
    let kappa = ks.iter().zip(&tails).map(|(&k, t)| t * (k as f64).powf(1.5)).fold(0.0, f64::max);
    let decreasing = tails.windows(2).all(|w| w[1] < w[0]);
    let tail32 = relu_tail(32) * 32f64.powf(1.5);
    Ok(vec![
        check("ρ coefficient c₀ = 1/√(2π)", (c0 - want0).abs() <= 1e-6, format!("{c0:.9}")),
        check("ρ coefficient c₁ = 1/2", (c1 - 0.5).abs() <= 1e-6, format!("{c1:.9}")),
        check(
            "tail Σ_{n>k} c_n² ≤ κ k^{-3/2}, k ∈ {4, 8, 16, 32}",
            decreasing && tail32 <= 1.1 * kappa,
            format!("κ = {kappa:.4}, tails {:?}", tails.iter().map(|t| format!("{t:.3e}")).collect::<Vec<_>>()),
        ),
    ])
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<Check>> {
    Ok(match suite {
        Suite::Hermite => hermite(seed)?,
        Suite::Regression => regression(seed)?,
        Suite::Influence => influence(seed)?,
        Suite::Cover => cover(seed)?,
        Suite::Localization => localization(seed)?,
        Suite::Disagreement => disagreement(seed)?,
        Suite::Relu => relu(seed)?,
        Suite::All => {
            let mut all = vec![];
            for s in [
                Suite::Hermite,
                Suite::Regression,
                Suite::Influence,
                Suite::Cover,
                Suite::Localization,
                Suite::Disagreement,
                Suite::Relu,
            ] {
                all.extend(run_suite(s, seed)?);
            }
            all
        }
    })
}

pub fn run(a: &VerifyArgs) -> Result<Status> {
    let checks = run_suite(a.suite, a.seed)?;
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("verify: {} checks, {failed} failed", checks.len());
    Ok(if failed == 0 { Status::Ok } else { Status::Flagged })
}
