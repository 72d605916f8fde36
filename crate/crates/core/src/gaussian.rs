//! Gaussian-moment representation of the partition function at zero
//! coupling.
//!
//! With `W = (e^{h_A} e^{h_AB}; e^{h_AB} e^{h_B})` positive definite and `ξ`
//! a centred Gaussian vector with covariance `W/N`,
//! `Z_N = E[(1+ξ_A)^{N_A} (1+ξ_B)^{N_B}]`. Everything here is computed in the
//! whitened coordinates `ξ = L z`, `L Lᵀ = W/N`, `z` standard normal.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{split_sizes, A, AB, B};
use crate::numeric::LogSumExp;
use crate::quadrature::{composite_legendre, gauss_hermite_normal, gauss_legendre, Rule};

/// Default largest `N` accepted by the quadrature routines.
pub const QUADRATURE_CAP: u64 = 200;
/// Largest `N` accepted by [`z_complement`], whose box grows with `N`.
pub const COMPLEMENT_CAP: u64 = 60;
/// Largest Monte-Carlo sample count.
pub const MONTE_CARLO_SAMPLE_CAP: u64 = 100_000_000;
/// Slack in the super-additivity comparison.
pub const SUPERADDITIVITY_SLACK: f64 = 1e-9;

/// The dimer weight matrix together with its determinant certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimerWeightMatrix {
    pub w: [[f64; 2]; 2],
    pub det: f64,
}

impl DimerWeightMatrix {
    pub fn w_a(&self) -> f64 {
        self.w[0][0]
    }

    pub fn w_b(&self) -> f64 {
        self.w[1][1]
    }

    pub fn w_ab(&self) -> f64 {
        self.w[0][1]
    }

    pub fn inverse(&self) -> [[f64; 2]; 2] {
        let d = self.det;
        [
            [self.w_b() / d, -self.w_ab() / d],
            [-self.w_ab() / d, self.w_a() / d],
        ]
    }

    /// Lower Cholesky factor `[l11, l21, l22]` of `W/n`.
    pub fn cholesky_scaled(&self, n: f64) -> [f64; 3] {
        let l11 = (self.w_a() / n).sqrt();
        let l21 = self.w_ab() / n / l11;
        let l22 = (self.det / self.w_a() / n).sqrt();
        [l11, l21, l22]
    }

    /// Largest entry, used as the matrix scale.
    pub fn norm(&self) -> f64 {
        // spectral norm of a symmetric 2x2
        let tr = self.w_a() + self.w_b();
        0.5 * (tr + (tr * tr - 4.0 * self.det).max(0.0).sqrt())
    }
}

/// Build `W` from the fields, rejecting anything that is not strictly
/// positive definite.
pub fn weight_matrix(h: [f64; 3]) -> Result<DimerWeightMatrix> {
    if !h[A].is_finite() || !h[B].is_finite() {
        return Err(Error::invalid("h", "h_A and h_B must be finite"));
    }
    if h[AB].is_nan() || h[AB] == f64::INFINITY {
        return Err(Error::invalid("h", "h_AB must be a real number or -inf"));
    }
    let sum = h[A] + h[B];
    let twice_mixed = 2.0 * h[AB];
    if sum <= twice_mixed {
        return Err(Error::NotPositiveDefinite { sum, twice_mixed });
    }
    let (wa, wb, wab) = (h[A].exp(), h[B].exp(), h[AB].exp());
    // e^{h_A+h_B} (1 − e^{2h_AB − h_A − h_B}) keeps precision near the boundary
    let det = (sum).exp() * -(twice_mixed - sum).exp_m1();
    if !(det > 0.0) || !det.is_finite() {
        return Err(Error::NotPositiveDefinite { sum, twice_mixed });
    }
    Ok(DimerWeightMatrix {
        w: [[wa, wab], [wab, wb]],
        det,
    })
}

/// How the Gaussian expectation is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GaussianMethod {
    Quadrature,
    MonteCarlo { samples: u64, seed: u64 },
}

/// A log-scale estimate with its error bar. `error` bounds the absolute
/// error of `log_value`: the truncation/doubling difference for quadrature,
/// the relative standard error for Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianEstimate {
    pub log_value: f64,
    pub error: f64,
    pub method: GaussianMethod,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianOptions {
    pub cap: u64,
}

impl Default for GaussianOptions {
    fn default() -> Self {
        Self {
            cap: QUADRATURE_CAP,
        }
    }
}

fn check_inputs(n: u64, alpha: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("N", "must be positive"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha", format!("must lie in (0,1), got {alpha}")));
    }
    Ok(())
}

/// Signed accumulation in log space.
#[derive(Debug, Clone, Copy, Default)]
struct SignedSum {
    pos: LogSumExp<0>,
    neg: LogSumExp<0>,
}

impl SignedSum {
    fn push(&mut self, log_abs: f64, negative: bool) {
        if negative {
            self.neg.push(log_abs, []);
        } else {
            self.pos.push(log_abs, []);
        }
    }

    fn merge(self, other: Self) -> Self {
        Self {
            pos: self.pos.merge(other.pos),
            neg: self.neg.merge(other.neg),
        }
    }

    /// `(log|total|, total < 0, log of the largest partial sum)`.
    fn finish(&self) -> (f64, bool, f64) {
        let lp = self.pos.log_sum();
        let ln = self.neg.log_sum();
        let scale = lp.max(ln);
        if lp >= ln {
            (lp + (-(ln - lp).exp()).ln_1p(), false, scale)
        } else {
            (ln + (-(lp - ln).exp()).ln_1p(), true, scale)
        }
    }
}

/// `p·ln|1+x|` and whether `(1+x)^p` is negative, for integer `p`.
#[inline]
fn signed_power(x: f64, p: u64) -> (f64, bool) {
    let base = 1.0 + x;
    let log_abs = if p == 0 { 0.0 } else { p as f64 * base.abs().ln() };
    (log_abs, base < 0.0 && p % 2 == 1)
}

fn hermite_sum(rule: &Rule, l: [f64; 3], n_a: u64, n_b: u64) -> SignedSum {
    let log_w: Vec<f64> = rule.weights.iter().map(|w| w.ln()).collect();
    let parts: Vec<SignedSum> = (0..rule.nodes.len())
        .into_par_iter()
        .map(|i| {
            let mut acc = SignedSum::default();
            if log_w[i] == f64::NEG_INFINITY {
                return acc;
            }
            let z1 = rule.nodes[i];
            let (la, na) = signed_power(l[0] * z1, n_a);
            for (j, &z2) in rule.nodes.iter().enumerate() {
                if log_w[j] == f64::NEG_INFINITY {
                    continue;
                }
                let (lb, nb) = signed_power(l[1] * z1 + l[2] * z2, n_b);
                acc.push(log_w[i] + log_w[j] + la + lb, na ^ nb);
            }
            acc
        })
        .collect();
    parts.into_iter().fold(SignedSum::default(), SignedSum::merge)
}

/// `log Z_N` through the Gaussian representation, with the default cap.
pub fn z_via_gaussian(n: u64, alpha: f64, h: [f64; 3], method: GaussianMethod) -> Result<GaussianEstimate> {
    z_via_gaussian_with(n, alpha, h, method, GaussianOptions::default())
}

pub fn z_via_gaussian_with(
    n: u64,
    alpha: f64,
    h: [f64; 3],
    method: GaussianMethod,
    opts: GaussianOptions,
) -> Result<GaussianEstimate> {
    check_inputs(n, alpha)?;
    let w = weight_matrix(h)?;
    let sizes = split_sizes(n, alpha)?;
    let l = w.cholesky_scaled(n as f64);
    match method {
        GaussianMethod::Quadrature => {
            if n > opts.cap {
                return Err(Error::ResourceCap {
                    what: "Gaussian quadrature",
                    n,
                    cap: opts.cap,
                });
            }
            // A rule with k nodes is exact for degree 2k−1, and the integrand
            // has degree N in each whitened coordinate.
            let k = (n as usize / 2 + 2).max(200);
            let coarse = hermite_sum(&gauss_hermite_normal(k), l, sizes.n_a, sizes.n_b);
            let fine = hermite_sum(&gauss_hermite_normal(2 * k), l, sizes.n_a, sizes.n_b);
            let (lc, negc, _) = coarse.finish();
            let (lf, negf, scale) = fine.finish();
            if negc || negf || !lf.is_finite() {
                return Err(Error::NoConvergence {
                    what: "Gaussian quadrature (non-positive estimate)",
                    iterations: 2 * k,
                    last_change: f64::NAN,
                });
            }
            // cancellation between signed parts limits the attainable accuracy
            let roundoff = 64.0 * f64::EPSILON * (scale - lf).exp();
            Ok(GaussianEstimate {
                log_value: lf,
                error: (lf - lc).abs().max(roundoff),
                method,
            })
        }
        GaussianMethod::MonteCarlo { samples, seed } => {
            if samples < 2 || samples > MONTE_CARLO_SAMPLE_CAP {
                return Err(Error::ResourceCap {
                    what: "Monte-Carlo sample count",
                    n: samples,
                    cap: MONTE_CARLO_SAMPLE_CAP,
                });
            }
            monte_carlo(l, sizes.n_a, sizes.n_b, samples, seed, method)
        }
    }
}

const MC_CHUNK: u64 = 1 << 16;

fn mc_chunk<F: FnMut(f64, bool)>(l: [f64; 3], n_a: u64, n_b: u64, seed: u64, chunk: u64, len: u64, mut f: F) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    for _ in 0..len {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let (la, na) = signed_power(l[0] * z1, n_a);
        let (lb, nb) = signed_power(l[1] * z1 + l[2] * z2, n_b);
        f(la + lb, na ^ nb);
    }
}

fn monte_carlo(l: [f64; 3], n_a: u64, n_b: u64, samples: u64, seed: u64, method: GaussianMethod) -> Result<GaussianEstimate> {
    let chunks: Vec<(u64, u64)> = (0..samples.div_ceil(MC_CHUNK))
        .map(|c| (c, MC_CHUNK.min(samples - c * MC_CHUNK)))
        .collect();
    // first pass: the scale, second pass: first and second moments on it
    let max = chunks
        .par_iter()
        .map(|&(c, len)| {
            let mut m = f64::NEG_INFINITY;
            mc_chunk(l, n_a, n_b, seed, c, len, |v, _| m = m.max(v));
            m
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let sums = chunks
        .par_iter()
        .map(|&(c, len)| {
            let (mut s1, mut s2) = (0.0, 0.0);
            mc_chunk(l, n_a, n_b, seed, c, len, |v, neg| {
                let t = (v - max).exp();
                s1 += if neg { -t } else { t };
                s2 += t * t;
            });
            (s1, s2)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let nf = samples as f64;
    let mean = sums.0 / nf;
    let var = (sums.1 / nf - mean * mean).max(0.0) * nf / (nf - 1.0);
    let se = (var / nf).sqrt();
    if !(mean > 0.0) {
        return Err(Error::NoConvergence {
            what: "Monte-Carlo Gaussian moment (non-positive sample mean)",
            iterations: samples as usize,
            last_change: se,
        });
    }
    Ok(GaussianEstimate {
        log_value: max + mean.ln(),
        error: se / mean,
        method,
    })
}

/// Maximum of `−½⟨W⁻¹ξ,ξ⟩ + α ln|1+ξ_A| + (1−α) ln|1+ξ_B|` within one of the
/// four regions cut out by the singular lines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceMax {
    /// `[1+ξ_A > 0, 1+ξ_B > 0]` for the region searched.
    pub region: [bool; 2],
    pub xi: [f64; 2],
    pub value: f64,
    pub grad_norm: f64,
}

/// The Laplace function `f(ξ)`.
pub fn laplace_exponent(xi: [f64; 2], alpha: f64, w: &DimerWeightMatrix) -> Result<f64> {
    if xi[0] == -1.0 || xi[1] == -1.0 {
        return Err(Error::invalid("xi", "f is singular on the lines xi_A = -1 and xi_B = -1"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha", format!("must lie in (0,1), got {alpha}")));
    }
    Ok(laplace_raw(xi, alpha, &w.inverse()))
}

fn laplace_raw(xi: [f64; 2], alpha: f64, wi: &[[f64; 2]; 2]) -> f64 {
    let q = wi[0][0] * xi[0] * xi[0] + 2.0 * wi[0][1] * xi[0] * xi[1] + wi[1][1] * xi[1] * xi[1];
    -0.5 * q + alpha * (1.0 + xi[0]).abs().ln() + (1.0 - alpha) * (1.0 + xi[1]).abs().ln()
}

/// Gradient of `f`.
pub fn laplace_gradient(xi: [f64; 2], alpha: f64, w: &DimerWeightMatrix) -> [f64; 2] {
    let wi = w.inverse();
    [
        -(wi[0][0] * xi[0] + wi[0][1] * xi[1]) + alpha / (1.0 + xi[0]),
        -(wi[1][0] * xi[0] + wi[1][1] * xi[1]) + (1.0 - alpha) / (1.0 + xi[1]),
    ]
}

/// Newton ascent inside one region; `f` is strictly concave on each.
fn laplace_region_max(alpha: f64, w: &DimerWeightMatrix, region: [bool; 2]) -> Result<LaplaceMax> {
    let wi = w.inverse();
    let weights = [alpha, 1.0 - alpha];
    let mut xi = [
        if region[0] { 0.0 } else { -2.0 },
        if region[1] { 0.0 } else { -2.0 },
    ];
    let mut value = laplace_raw(xi, alpha, &wi);
    for it in 0..200 {
        let g = laplace_gradient(xi, alpha, w);
        let gn = g[0].hypot(g[1]);
        if gn < 1e-13 * (1.0 + value.abs()) {
            return Ok(LaplaceMax {
                region,
                xi,
                value,
                grad_norm: gn,
            });
        }
        // negative Hessian, positive definite everywhere off the lines
        let s = [1.0 + xi[0], 1.0 + xi[1]];
        let h00 = wi[0][0] + weights[0] / (s[0] * s[0]);
        let h11 = wi[1][1] + weights[1] / (s[1] * s[1]);
        let h01 = wi[0][1];
        let det = h00 * h11 - h01 * h01;
        let step = [(h11 * g[0] - h01 * g[1]) / det, (h00 * g[1] - h01 * g[0]) / det];
        // keep 1+ξ on the same side of zero
        let mut t = 1.0f64;
        for k in 0..2 {
            if step[k] * s[k].signum() < 0.0 {
                t = t.min(0.99 * s[k].abs() / step[k].abs());
            }
        }
        let slope = g[0] * step[0] + g[1] * step[1];
        let mut accepted = false;
        for _ in 0..60 {
            let cand = [xi[0] + t * step[0], xi[1] + t * step[1]];
            let v = laplace_raw(cand, alpha, &wi);
            if v >= value + 1e-4 * t * slope {
                let change = (cand[0] - xi[0]).abs().max((cand[1] - xi[1]).abs());
                xi = cand;
                value = v;
                accepted = true;
                if change < 1e-16 * (1.0 + xi[0].abs().max(xi[1].abs())) && it > 0 {
                    let g = laplace_gradient(xi, alpha, w);
                    return Ok(LaplaceMax {
                        region,
                        xi,
                        value,
                        grad_norm: g[0].hypot(g[1]),
                    });
                }
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            let g = laplace_gradient(xi, alpha, w);
            return Ok(LaplaceMax {
                region,
                xi,
                value,
                grad_norm: g[0].hypot(g[1]),
            });
        }
    }
    Err(Error::NoConvergence {
        what: "Laplace maximizer",
        iterations: 200,
        last_change: f64::NAN,
    })
}

/// Maxima of `f` in each of the four regions, quadrant `Q` first.
pub fn laplace_region_maxima(alpha: f64, w: &DimerWeightMatrix) -> Result<[LaplaceMax; 4]> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha", format!("must lie in (0,1), got {alpha}")));
    }
    Ok([
        laplace_region_max(alpha, w, [true, true])?,
        laplace_region_max(alpha, w, [false, true])?,
        laplace_region_max(alpha, w, [true, false])?,
        laplace_region_max(alpha, w, [false, false])?,
    ])
}

/// Global maximizer of `f` over the plane minus the singular lines.
pub fn laplace_maximizer(alpha: f64, w: &DimerWeightMatrix) -> Result<LaplaceMax> {
    let all = laplace_region_maxima(alpha, w)?;
    Ok(all
        .into_iter()
        .fold(all[0], |best, m| if m.value > best.value { m } else { best }))
}

/// Iterated composite Gauss–Legendre over the quadrant, in whitened
/// coordinates. `panel` is the panel width in standard deviations.
fn quadrant_integral(l: [f64; 3], p_a: f64, p_b: f64, mode: [f64; 2], panel: f64, base: &Rule) -> f64 {
    const INNER_HALF_WIDTH: f64 = 13.0;
    const OUTER_DROP: f64 = 80.0;
    let a1 = -1.0 / l[0];
    // log of ∫ g(z1, z2) dz2 at fixed z1
    let inner = |z1: f64| -> f64 {
        let c = 1.0 + l[1] * z1;
        let a2 = -c / l[2];
        // conditional mode of z2 in closed form
        let u = 0.5 * (c + (c * c + 4.0 * p_b * l[2] * l[2]).sqrt());
        let c2 = (u - c) / l[2];
        let lo = (c2 - INNER_HALF_WIDTH).max(a2);
        let hi = c2 + INNER_HALF_WIDTH;
        let graded = lo == a2;
        let la = p_a * (1.0 + l[0] * z1).ln() - 0.5 * z1 * z1;
        let mut acc = LogSumExp::<0>::new();
        for (z2, wt) in composite_legendre(lo, hi, panel, graded, base) {
            let sb = c + l[2] * z2;
            if sb <= 0.0 || wt <= 0.0 {
                continue;
            }
            acc.push(wt.ln() + la + p_b * sb.ln() - 0.5 * z2 * z2, []);
        }
        acc.log_sum()
    };
    // walk out from the mode until the marginal has dropped far enough
    let c1 = mode[0].max(a1 + 1e-12);
    let peak = inner(c1);
    let mut hi = c1;
    loop {
        hi += 1.0;
        if hi - c1 >= 12.0 && inner(hi) < peak - OUTER_DROP {
            break;
        }
    }
    let mut lo = c1;
    loop {
        lo -= 1.0;
        if lo <= a1 {
            lo = a1;
            break;
        }
        if c1 - lo >= 12.0 && inner(lo) < peak - OUTER_DROP {
            break;
        }
    }
    let graded = lo == a1;
    let nodes = composite_legendre(lo, hi, panel, graded, base);
    let parts: Vec<f64> = nodes
        .par_iter()
        .map(|&(z1, wt)| {
            if z1 <= a1 || wt <= 0.0 {
                f64::NEG_INFINITY
            } else {
                wt.ln() + inner(z1)
            }
        })
        .collect();
    let mut acc = LogSumExp::<0>::new();
    for p in parts {
        acc.push(p, []);
    }
    acc.log_sum() - std::f64::consts::TAU.ln()
}

/// `log Z*_N`: the Gaussian moment restricted to the quadrant
/// `ξ_A > −1, ξ_B > −1`, with real exponents `αN` and `(1−α)N`.
pub fn z_star(n: u64, alpha: f64, h: [f64; 3]) -> Result<GaussianEstimate> {
    z_star_with(n, alpha, h, GaussianOptions::default())
}

pub fn z_star_with(n: u64, alpha: f64, h: [f64; 3], opts: GaussianOptions) -> Result<GaussianEstimate> {
    check_inputs(n, alpha)?;
    let w = weight_matrix(h)?;
    if n > opts.cap {
        return Err(Error::ResourceCap {
            what: "restricted Gaussian quadrature",
            n,
            cap: opts.cap,
        });
    }
    let nf = n as f64;
    let l = w.cholesky_scaled(nf);
    let peak = laplace_region_max(alpha, &w, [true, true])?;
    // ξ = L z  ⇒  z = L⁻¹ ξ
    let z1 = peak.xi[0] / l[0];
    let z2 = (peak.xi[1] - l[1] * z1) / l[2];
    let base = gauss_legendre(16);
    let (p_a, p_b) = (alpha * nf, (1.0 - alpha) * nf);
    let coarse = quadrant_integral(l, p_a, p_b, [z1, z2], 1.0, &base);
    let fine = quadrant_integral(l, p_a, p_b, [z1, z2], 0.5, &base);
    if !fine.is_finite() {
        return Err(Error::NoConvergence {
            what: "restricted Gaussian quadrature",
            iterations: 0,
            last_change: f64::NAN,
        });
    }
    Ok(GaussianEstimate {
        log_value: fine,
        error: (fine - coarse).abs().max(16.0 * f64::EPSILON * fine.abs().max(1.0)),
        method: GaussianMethod::Quadrature,
    })
}

/// The signed off-quadrant part `E[(1+ξ_A)^{N_A}(1+ξ_B)^{N_B} 𝟙_{Qᶜ}]`,
/// with the integer sizes used by [`z_via_gaussian`]. Plain scale, not log.
pub fn z_complement(n: u64, alpha: f64, h: [f64; 3]) -> Result<f64> {
    check_inputs(n, alpha)?;
    let w = weight_matrix(h)?;
    if n > COMPLEMENT_CAP {
        return Err(Error::ResourceCap {
            what: "off-quadrant quadrature",
            n,
            cap: COMPLEMENT_CAP,
        });
    }
    let sizes = split_sizes(n, alpha)?;
    let l = w.cholesky_scaled(n as f64);
    let base = gauss_legendre(16);
    let r = 20.0 + 3.0 * (n as f64).sqrt();
    let a1 = -1.0 / l[0];
    let term = |z1: f64, z2: f64| -> f64 {
        let (la, na) = signed_power(l[0] * z1, sizes.n_a);
        let (lb, nb) = signed_power(l[1] * z1 + l[2] * z2, sizes.n_b);
        let v = (la + lb - 0.5 * (z1 * z1 + z2 * z2)).exp();
        if na ^ nb {
            -v
        } else {
            v
        }
    };
    let mut total = 0.0;
    // ξ_A ≤ −1, any ξ_B
    if a1 > -r {
        for (z1, w1) in composite_legendre(-r, a1.min(r), 0.5, false, &base) {
            for (z2, w2) in composite_legendre(-r, r, 0.5, false, &base) {
                total += w1 * w2 * term(z1, z2);
            }
        }
    }
    // ξ_A > −1, ξ_B ≤ −1
    for (z1, w1) in composite_legendre(a1.max(-r), r, 0.5, false, &base) {
        let a2 = -(1.0 + l[1] * z1) / l[2];
        if a2 <= -r {
            continue;
        }
        for (z2, w2) in composite_legendre(-r, a2.min(r), 0.5, false, &base) {
            total += w1 * w2 * term(z1, z2);
        }
    }
    Ok(total / std::f64::consts::TAU)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuperAdditivity {
    /// `log Z*_{N1} + log Z*_{N2}`
    pub lhs: f64,
    /// `log Z*_{N1+N2}`
    pub rhs: f64,
    pub holds: bool,
}

pub fn superadditivity_check(n1: u64, n2: u64, alpha: f64, h: [f64; 3]) -> Result<SuperAdditivity> {
    if n1 == 0 || n2 == 0 {
        return Err(Error::invalid("N1, N2", "must be positive"));
    }
    let z1 = z_star(n1, alpha, h)?;
    let z2 = z_star(n2, alpha, h)?;
    let z = z_star(n1 + n2, alpha, h)?;
    let lhs = z1.log_value + z2.log_value;
    let rhs = z.log_value;
    Ok(SuperAdditivity {
        lhs,
        rhs,
        holds: lhs <= rhs + SUPERADDITIVITY_SLACK,
    })
}

/// Outcome of the randomized checks of the two mixing lemmas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingReport {
    pub trials: u64,
    /// Largest relative entrywise error of `γ²W/N1 + (1−γ)²W/N2 = W/N`.
    pub covariance_max_rel_err: f64,
    /// Largest `LHS − RHS` of `(1+x)^γ(1+y)^{1−γ} ≤ 1+γx+(1−γ)y`; should be ≤ 0 up to rounding.
    pub inequality_max_excess: f64,
    /// Largest `|LHS − RHS|` over pairs with `|x−y| < 1e-9`.
    pub equality_max_gap: f64,
    /// Smallest `RHS − LHS` over pairs with `|x−y| ≥ 1e-3`.
    pub strict_min_gap: f64,
    pub passed: bool,
}

pub const MIXING_DEFAULT_SEED: u64 = 0x5eed_d1e5;

fn amgm_sides(x: f64, y: f64, gamma: f64) -> (f64, f64) {
    let lhs = (gamma * x.ln_1p() + (1.0 - gamma) * y.ln_1p()).exp();
    (lhs, 1.0 + gamma * x + (1.0 - gamma) * y)
}

pub fn mixing_lemma_checks(trials: u64) -> Result<MixingReport> {
    mixing_lemma_checks_seeded(trials, MIXING_DEFAULT_SEED)
}

pub fn mixing_lemma_checks_seeded(trials: u64, seed: u64) -> Result<MixingReport> {
    if trials == 0 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cov_err: f64 = 0.0;
    let mut excess = f64::NEG_INFINITY;
    let mut eq_gap: f64 = 0.0;
    let mut strict_gap = f64::INFINITY;
    for _ in 0..trials {
        let n1: u64 = rng.random_range(1..=1000);
        let n2: u64 = rng.random_range(1..=1000);
        let n = n1 + n2;
        let gamma = n1 as f64 / n as f64;
        let h = [
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-4.0..-2.0),
        ];
        let w = weight_matrix(h)?;
        for row in w.w {
            for entry in row {
                let lhs = gamma * gamma * entry / n1 as f64 + (1.0 - gamma) * (1.0 - gamma) * entry / n2 as f64;
                let rhs = entry / n as f64;
                cov_err = cov_err.max((lhs - rhs).abs() / rhs);
            }
        }

        let g: f64 = rng.random_range(0.01..0.99);
        let x: f64 = rng.random_range(-0.99..10.0);
        // equal pair, and one separated by at most 1e-10
        for y in [x, x + rng.random_range(-1e-10..1e-10)] {
            let (l, r) = amgm_sides(x, y, g);
            eq_gap = eq_gap.max((l - r).abs());
            excess = excess.max(l - r);
        }
        let mut y: f64 = rng.random_range(-0.99..10.0);
        while (x - y).abs() < 1e-3 {
            y = rng.random_range(-0.99..10.0);
        }
        let (l, r) = amgm_sides(x, y, g);
        excess = excess.max(l - r);
        strict_gap = strict_gap.min(r - l);
    }
    let passed = cov_err <= 1e-14 && excess <= 1e-12 && eq_gap < 1e-12 && strict_gap >= 1e-12;
    Ok(MixingReport {
        trials,
        covariance_max_rel_err: cov_err,
        inequality_max_excess: excess,
        equality_max_gap: eq_gap,
        strict_min_gap: strict_gap,
        passed,
    })
}
