//! Deterministic Gaussian sampling, Gauss–Hermite quadrature and scalar
//! Gaussian-measure utilities.

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::parallel::{map_blocks, ROW_BLOCK};
use crate::sample::Points;
use crate::{Error, Result};

/// Addressable random stream: `(seed, stream_id)` names an infinite sequence
/// of 64-bit words, and word `i` can be reached directly.
///
/// Every variate consumes exactly one 64-bit word, so variate `i` of a stream
/// is the same no matter how the consumer splits the work.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Child stream for a named purpose; distinct labels give distinct streams.
    pub fn substream(&self, label: u64) -> Self {
        Self {
            seed: self.seed,
            stream_id: splitmix64(self.stream_id ^ splitmix64(label.wrapping_add(1))),
        }
    }

    fn generator_at(&self, word: u64) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng.set_word_pos(2 * u128::from(word));
        rng
    }

    /// Fills `out` with uniforms on the open interval (0, 1), starting at
    /// variate index `start`.
    pub fn fill_uniform(&self, start: u64, out: &mut [f64]) {
        let mut rng = self.generator_at(start);
        for v in out.iter_mut() {
            *v = word_to_open_unit(rng.next_u64());
        }
    }

    /// Fills `out` with standard normals via the inverse CDF, starting at
    /// variate index `start`.
    pub fn fill_normal(&self, start: u64, out: &mut [f64]) {
        let mut rng = self.generator_at(start);
        for v in out.iter_mut() {
            *v = std_normal_quantile(word_to_open_unit(rng.next_u64()));
        }
    }

    /// `n` uniforms, generated block-parallel.
    pub fn uniforms(&self, n: usize) -> Vec<f64> {
        map_blocks(n, ROW_BLOCK * 4, |r| {
            let mut buf = vec![0.0; r.len()];
            self.fill_uniform(r.start as u64, &mut buf);
            buf
        })
        .concat()
    }

    /// `n` standard normals, generated block-parallel.
    pub fn normals(&self, n: usize) -> Vec<f64> {
        map_blocks(n, ROW_BLOCK * 4, |r| {
            let mut buf = vec![0.0; r.len()];
            self.fill_normal(r.start as u64, &mut buf);
            buf
        })
        .concat()
    }
}

fn word_to_open_unit(w: u64) -> f64 {
    ((w >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// `n` i.i.d. points from `N(0, I_d)`.
pub fn sample_gaussian(d: usize, n: usize, rng: &RngStream) -> Points {
    assert!(d >= 1, "dimension must be positive");
    let coords = rng.normals(d * n);
    Points::new(d, coords).expect("shape is consistent by construction")
}

/// Standard normal CDF `Φ(x)`.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Inverse of `Φ` on (0, 1).
///
/// Acklam's rational approximation followed by one Halley step against the
/// `erfc`-based CDF, which brings the result to full double precision.
pub fn std_normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;
    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    // Halley refinement; the residual is taken on the smaller tail for accuracy.
    let e = if x < 0.0 {
        std_normal_cdf(x) - p
    } else {
        (1.0 - p) - std_normal_cdf(-x)
    };
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// One-dimensional quadrature rule against the standard normal density.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `E[f(x)]` for `x ~ N(0, 1)`.
    ///
    /// Mirrored nodes are summed pairwise, so odd integrands cancel exactly.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let q = self.len();
        let mut sum = 0.0;
        for i in 0..q / 2 {
            let j = q - 1 - i;
            sum += self.weights[i] * f(self.nodes[i]) + self.weights[j] * f(self.nodes[j]);
        }
        if q % 2 == 1 {
            sum += self.weights[q / 2] * f(self.nodes[q / 2]);
        }
        sum
    }
}

pub const MAX_QUADRATURE_NODES: usize = 64;

/// Probabilists' Gauss–Hermite rule with `q` nodes, normalized so the
/// weights sum to one; exact for polynomials of degree ≤ 2q − 1 against
/// `N(0, 1)`.
pub fn gauss_hermite_rule(q: usize) -> Result<QuadratureRule> {
    if !(1..=MAX_QUADRATURE_NODES).contains(&q) {
        return Err(Error::config(
            "quadrature_nodes",
            format!("node count {q} outside 1..={MAX_QUADRATURE_NODES}"),
        ));
    }
    // Symmetric Jacobi matrix of the orthonormal recurrence; its eigenvalues
    // seed Newton's method on H_q.
    let mut jacobi = vec![0.0; q * q];
    for i in 1..q {
        let b = (i as f64).sqrt();
        jacobi[(i - 1) * q + i] = b;
        jacobi[i * q + (i - 1)] = b;
    }
    let mut nodes = linalg::eig_sym(&jacobi, q)?.values;
    for x in nodes.iter_mut() {
        for _ in 0..8 {
            let (hq, hq1) = hermite_pair(q, *x);
            let step = hq / ((q as f64).sqrt() * hq1);
            *x -= step;
            if step.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
    }
    nodes.sort_by(f64::total_cmp);
    // Enforce exact symmetry of the rule.
    for i in 0..q / 2 {
        let m = 0.5 * (nodes[q - 1 - i] - nodes[i]);
        nodes[i] = -m;
        nodes[q - 1 - i] = m;
    }
    if q % 2 == 1 {
        nodes[q / 2] = 0.0;
    }
    // Christoffel weights: 1 / Σ_{n<q} H_n(x)².
    let weights = nodes
        .iter()
        .map(|&x| {
            let mut prev = 0.0;
            let mut cur = 1.0;
            let mut sum = 1.0;
            for n in 1..q {
                let next = (x * cur - ((n - 1) as f64).sqrt() * prev) / (n as f64).sqrt();
                prev = cur;
                cur = next;
                sum += cur * cur;
            }
            1.0 / sum
        })
        .collect();
    Ok(QuadratureRule { nodes, weights })
}

/// `(H_q(x), H_{q−1}(x))` for the normalized Hermite recurrence.
fn hermite_pair(q: usize, x: f64) -> (f64, f64) {
    let mut prev = 0.0;
    let mut cur = 1.0;
    for n in 0..q {
        let next = (x * cur - (n as f64).sqrt() * prev) / ((n + 1) as f64).sqrt();
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// Tensor-product rule on `R^d`: all `q^d` node combinations.
#[derive(Debug, Clone)]
pub struct TensorQuadrature {
    pub dim: usize,
    /// Row-major `q^d × d` nodes.
    pub points: Points,
    pub weights: Vec<f64>,
}

impl TensorQuadrature {
    pub fn new(rule: &QuadratureRule, dim: usize) -> Result<Self> {
        let q = rule.len();
        let count = (q as f64).powi(dim as i32);
        if count > 1e7 {
            return Err(Error::resource("tensor quadrature grid", count, 1e7));
        }
        let count = count as usize;
        let mut coords = Vec::with_capacity(count * dim);
        let mut weights = Vec::with_capacity(count);
        let mut idx = vec![0usize; dim];
        for _ in 0..count {
            let mut w = 1.0;
            for &i in &idx {
                coords.push(rule.nodes[i]);
                w *= rule.weights[i];
            }
            weights.push(w);
            for slot in idx.iter_mut().rev() {
                *slot += 1;
                if *slot < q {
                    break;
                }
                *slot = 0;
            }
        }
        Ok(Self {
            dim,
            points: Points::new(dim, coords)?,
            weights,
        })
    }

    /// `E[f(x)]` for `x ~ N(0, I_d)`.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.points
            .rows()
            .zip(&self.weights)
            .map(|(x, &w)| w * f(x))
            .sum()
    }
}
