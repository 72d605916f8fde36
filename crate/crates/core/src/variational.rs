//! Thermodynamic limit: the variational pressure `ψ = s − ε` over the
//! density region `Ω_α`, its stationarity (fixed-point) system and its
//! global maximization.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, A, AB, B};
use crate::numeric::brent;

/// Slack allowed on the hard-core inequalities before a point counts as
/// outside `Ω_α`.
pub const DOMAIN_TOL: f64 = 1e-12;

/// A point `(d_A, d_B, d_AB)` of dimer densities per site.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DimerDensities {
    pub d_a: f64,
    pub d_b: f64,
    pub d_ab: f64,
}

impl DimerDensities {
    pub fn new(d_a: f64, d_b: f64, d_ab: f64) -> Self {
        DimerDensities { d_a, d_b, d_ab }
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        DimerDensities::new(v[A], v[B], v[AB])
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.d_a, self.d_b, self.d_ab]
    }

    /// Monomer densities `(m_A, m_B)`.
    pub fn monomers(&self, alpha: f64) -> (f64, f64) {
        (
            alpha - 2.0 * self.d_a - self.d_ab,
            1.0 - alpha - 2.0 * self.d_b - self.d_ab,
        )
    }

    pub fn in_domain(&self, alpha: f64) -> bool {
        let (m_a, m_b) = self.monomers(alpha);
        self.as_array().iter().all(|&x| x >= -DOMAIN_TOL) && m_a >= -DOMAIN_TOL && m_b >= -DOMAIN_TOL
    }

    /// All three densities and both monomer densities strictly positive.
    pub fn is_interior(&self, alpha: f64) -> bool {
        let (m_a, m_b) = self.monomers(alpha);
        self.as_array().iter().all(|&x| x > 0.0) && m_a > 0.0 && m_b > 0.0
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Effective dimer activities `w = exp(h + J d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveWeights {
    pub w_a: f64,
    pub w_b: f64,
    pub w_ab: f64,
}

impl EffectiveWeights {
    pub fn from_field(field: [f64; 3]) -> Self {
        EffectiveWeights {
            w_a: field[A].exp(),
            w_b: field[B].exp(),
            w_ab: field[AB].exp(),
        }
    }

    /// Weights at `d` using the symmetrised coupling.
    pub fn at(d: &DimerDensities, params: &ModelParams) -> Self {
        Self::from_field(effective_field(d, params))
    }
}

/// `h + ½(J + Jᵀ) d`.
pub fn effective_field(d: &DimerDensities, params: &ModelParams) -> [f64; 3] {
    let js = params.symmetric_coupling();
    let v = d.as_array();
    let mut f = params.h;
    for r in 0..3 {
        for c in 0..3 {
            f[r] += js[r][c] * v[c];
        }
    }
    f
}

/// `x log x − x`, extended continuously by 0 at `x = 0`.
pub fn log_gamma_fn(x: f64) -> Result<f64> {
    if x < 0.0 || x.is_nan() {
        return Err(Error::invalid("x", format!("log_gamma_fn needs x ≥ 0, got {x}")));
    }
    Ok(lg(x))
}

#[inline]
fn lg(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln() - x
    }
}

fn check_domain(d: &DimerDensities, alpha: f64) -> Result<()> {
    if d.in_domain(alpha) {
        Ok(())
    } else {
        Err(Error::OutsideDomain {
            point: d.as_array(),
            alpha,
        })
    }
}

/// Entropy density `s(d; α)`. Finite on the whole of `Ω_α`, boundary included.
pub fn entropy(d: &DimerDensities, alpha: f64) -> Result<f64> {
    check_domain(d, alpha)?;
    let (m_a, m_b) = d.monomers(alpha);
    Ok(lg(alpha) + lg(1.0 - alpha)
        - lg(m_a)
        - lg(m_b)
        - lg(d.d_a)
        - lg(d.d_b)
        - lg(d.d_ab)
        - (d.d_a + d.d_b) * std::f64::consts::LN_2)
}

/// Energy density `ε(d; h, J) = −h·d − ½ (Jd)·d`.
pub fn energy(d: &DimerDensities, params: &ModelParams) -> f64 {
    let v = d.as_array();
    let mut quad = 0.0;
    for r in 0..3 {
        for c in 0..3 {
            quad += v[r] * params.j[r][c] * v[c];
        }
    }
    let lin: f64 = params.h.iter().zip(&v).map(|(h, x)| h * x).sum();
    -lin - 0.5 * quad
}

/// Variational pressure `ψ = s − ε`.
pub fn psi(d: &DimerDensities, params: &ModelParams) -> Result<f64> {
    Ok(entropy(d, params.alpha)? - energy(d, params))
}

fn require_interior(what: &'static str, d: &DimerDensities, alpha: f64) -> Result<()> {
    if d.is_interior(alpha) {
        Ok(())
    } else {
        Err(Error::BoundaryPoint {
            what,
            point: d.as_array(),
        })
    }
}

/// `∇_d ψ` at an interior point. The energy part uses `½(J + Jᵀ)`.
pub fn grad_psi(d: &DimerDensities, params: &ModelParams) -> Result<[f64; 3]> {
    require_interior("grad_psi", d, params.alpha)?;
    let (m_a, m_b) = d.monomers(params.alpha);
    let field = effective_field(d, params);
    Ok([
        (m_a * m_a / (2.0 * d.d_a)).ln() + field[A],
        (m_b * m_b / (2.0 * d.d_b)).ln() + field[B],
        (m_a * m_b / d.d_ab).ln() + field[AB],
    ])
}

/// Hessian of `ψ` at an interior point.
pub fn hessian_psi(d: &DimerDensities, params: &ModelParams) -> Result<[[f64; 3]; 3]> {
    require_interior("hessian_psi", d, params.alpha)?;
    let (m_a, m_b) = d.monomers(params.alpha);
    let mut h = params.symmetric_coupling();
    h[A][A] += -4.0 / m_a - 1.0 / d.d_a;
    h[B][B] += -4.0 / m_b - 1.0 / d.d_b;
    h[AB][AB] += -1.0 / m_a - 1.0 / m_b - 1.0 / d.d_ab;
    h[A][AB] += -2.0 / m_a;
    h[AB][A] += -2.0 / m_a;
    h[B][AB] += -2.0 / m_b;
    h[AB][B] += -2.0 / m_b;
    Ok(h)
}

/// Residual of the fixed-point system
/// `d_A = (w_A/2) m_A², d_B = (w_B/2) m_B², d_AB = w_AB m_A m_B`.
pub fn fixed_point_residual(d: &DimerDensities, params: &ModelParams) -> [f64; 3] {
    let (m_a, m_b) = d.monomers(params.alpha);
    let w = EffectiveWeights::at(d, params);
    [
        d.d_a - 0.5 * w.w_a * m_a * m_a,
        d.d_b - 0.5 * w.w_b * m_b * m_b,
        d.d_ab - w.w_ab * m_a * m_b,
    ]
}

/// Positive root of `a m² + b m − c = 0` for `a, b, c ≥ 0`, cancellation free.
#[inline]
fn positive_root(a: f64, b: f64, c: f64) -> f64 {
    if c <= 0.0 {
        return 0.0;
    }
    2.0 * c / (b + (b * b + 4.0 * a * c).sqrt())
}

/// Solve the fixed-point system at constant activities `w = exp(field)`,
/// returning the monomer densities `(m_A, m_B)`.
///
/// The first hard-core identity gives `m_A` explicitly as a function of
/// `m_B`; substituting into the second leaves a strictly increasing scalar
/// equation in `m_B` on `[0, 1−α]`.
pub fn zero_coupling_monomers(field: [f64; 3], alpha: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    if field.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("h", "field entries must be finite"));
    }
    let w = EffectiveWeights::from_field(field);
    let m_a_of = |m_b: f64| positive_root(w.w_a, 1.0 + w.w_ab * m_b, alpha);
    let residual = |m_b: f64| {
        let m_a = m_a_of(m_b);
        m_b + w.w_b * m_b * m_b + w.w_ab * m_a * m_b - (1.0 - alpha)
    };
    let m_b = brent(residual, 0.0, 1.0 - alpha, f64::MIN_POSITIVE, 400)?;
    Ok((m_a_of(m_b), m_b))
}

/// The unique solution `g(field, α)` of the fixed-point system when the
/// activities do not depend on `d`.
pub fn solve_zero_coupling(field: [f64; 3], alpha: f64) -> Result<DimerDensities> {
    let (m_a, m_b) = zero_coupling_monomers(field, alpha)?;
    let w = EffectiveWeights::from_field(field);
    Ok(DimerDensities::new(
        0.5 * w.w_a * m_a * m_a,
        0.5 * w.w_b * m_b * m_b,
        w.w_ab * m_a * m_b,
    ))
}

#[derive(Debug, Clone, Copy)]
pub struct FixedPointOptions {
    /// Initial damping `λ` in `d ← (1−λ) d + λ g(h + J d)`.
    pub damping: f64,
    pub max_iter: usize,
    /// Stop once successive iterates differ by less than this (max norm).
    pub tol: f64,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions {
            damping: 0.5,
            max_iter: 100_000,
            tol: 1e-12,
        }
    }
}

/// Damped iteration of `d ← g(h + J d, α)`.
///
/// The damping is halved whenever the step length grows for several
/// consecutive iterations. Once the iteration has settled, a few Newton
/// steps on `∇ψ = 0` remove the residual left by slow linear convergence.
pub fn fixed_point_solve(
    params: &ModelParams,
    d0: &DimerDensities,
    opts: FixedPointOptions,
) -> Result<DimerDensities> {
    params.validate()?;
    check_domain(d0, params.alpha)?;
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::invalid("damping", format!("must lie in (0, 1], got {}", opts.damping)));
    }
    let alpha = params.alpha;
    if !params.has_coupling() {
        return solve_zero_coupling(params.h, alpha);
    }

    let mut lambda = opts.damping;
    let mut d = *d0;
    let mut prev_step = f64::INFINITY;
    let mut growing = 0usize;
    let mut step = f64::INFINITY;
    for it in 0..opts.max_iter {
        let g = solve_zero_coupling(effective_field(&d, params), alpha)?;
        let next = DimerDensities::from_array(std::array::from_fn(|i| {
            (1.0 - lambda) * d.as_array()[i] + lambda * g.as_array()[i]
        }));
        step = next.max_abs_diff(&d);
        d = next;
        if step < opts.tol {
            return Ok(polish_stationary(params, d));
        }
        if step > prev_step && it > 2 {
            growing += 1;
            if growing >= 3 {
                lambda *= 0.5;
                growing = 0;
            }
        } else {
            growing = 0;
        }
        prev_step = step;
    }
    Err(Error::NoConvergence {
        what: "fixed_point_solve",
        iterations: opts.max_iter,
        last_change: step,
    })
}

fn grad_norm(d: &DimerDensities, params: &ModelParams) -> f64 {
    grad_psi(d, params)
        .map(|g| g.iter().fold(0.0f64, |m, x| m.max(x.abs())))
        .unwrap_or(f64::INFINITY)
}

/// Plain Newton steps on `∇ψ = 0`, kept only while they lower the gradient.
fn polish_stationary(params: &ModelParams, mut d: DimerDensities) -> DimerDensities {
    let mut gn = grad_norm(&d, params);
    for _ in 0..8 {
        if !gn.is_finite() || gn < 1e-14 {
            break;
        }
        let Some(step) = newton_direction(&d, params, false) else {
            break;
        };
        let cand = DimerDensities::from_array(std::array::from_fn(|i| d.as_array()[i] + step[i]));
        if !cand.is_interior(params.alpha) {
            break;
        }
        let cn = grad_norm(&cand, params);
        if cn >= gn {
            break;
        }
        d = cand;
        gn = cn;
    }
    d
}

/// Newton direction `−H⁻¹ ∇ψ`. With `ascent` set, the Hessian is shifted
/// until it is negative definite so the direction always increases `ψ`.
fn newton_direction(d: &DimerDensities, params: &ModelParams, ascent: bool) -> Option<[f64; 3]> {
    let g = Vector3::from(grad_psi(d, params).ok()?);
    let h = Matrix3::from(hessian_psi(d, params).ok()?).transpose();
    if !ascent {
        let x = h.lu().solve(&(-g))?;
        return Some([x[0], x[1], x[2]]);
    }
    let neg = -h;
    let scale = neg.diagonal().abs().max().max(1.0);
    let mut mu = 0.0;
    for _ in 0..60 {
        if let Some(ch) = (neg + Matrix3::identity() * mu).cholesky() {
            let x = ch.solve(&g);
            return Some([x[0], x[1], x[2]]);
        }
        mu = if mu == 0.0 { 1e-10 * scale } else { mu * 10.0 };
    }
    None
}

/// Largest step fraction in `(0, 1]` keeping every density and monomer
/// density above 1% of its current value.
fn fraction_to_boundary(d: &DimerDensities, dir: &[f64; 3], alpha: f64) -> f64 {
    let (m_a, m_b) = d.monomers(alpha);
    let vals = [d.d_a, d.d_b, d.d_ab, m_a, m_b];
    let rates = [
        dir[A],
        dir[B],
        dir[AB],
        -2.0 * dir[A] - dir[AB],
        -2.0 * dir[B] - dir[AB],
    ];
    let mut t = 1.0f64;
    for (v, r) in vals.iter().zip(rates) {
        if r < 0.0 {
            t = t.min(-0.99 * v / r);
        }
    }
    t
}

/// Local maximization of `ψ` from an interior start by line-searched
/// Newton ascent.
pub fn ascend(params: &ModelParams, start: &DimerDensities) -> Result<DimerDensities> {
    require_interior("ascend", start, params.alpha)?;
    let alpha = params.alpha;
    let mut d = *start;
    let mut val = psi(&d, params)?;
    for _ in 0..500 {
        let g = grad_psi(&d, params)?;
        let gmax = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if gmax < 1e-13 {
            break;
        }
        let Some(dir) = newton_direction(&d, params, true) else {
            break;
        };
        let slope: f64 = g.iter().zip(&dir).map(|(a, b)| a * b).sum();
        let mut t = fraction_to_boundary(&d, &dir, alpha);
        let mut accepted = None;
        while t > 1e-14 {
            let cand = DimerDensities::from_array(std::array::from_fn(|i| d.as_array()[i] + t * dir[i]));
            if cand.is_interior(alpha) {
                let v = psi(&cand, params)?;
                if v >= val + 1e-4 * t * slope {
                    accepted = Some((cand, v));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((cand, v)) => {
                let moved = cand.max_abs_diff(&d);
                d = cand;
                val = v;
                if moved <= 1e-16 * d.as_array().iter().fold(0.0f64, |m, x| m.max(x.abs())) {
                    break;
                }
            }
            None => break,
        }
    }
    // ψ stops resolving progress near the top; finish on the gradient.
    Ok(polish_stationary(params, d))
}

/// One global maximizer of `ψ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Maximizer {
    pub d: DimerDensities,
    pub value: f64,
    pub interior: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct MaximizeOptions {
    /// Grid points per axis of the coarse scan.
    pub grid: usize,
    /// Maximizers within this of the best value are reported as ties.
    pub tie_tol: f64,
    /// Ties closer than this (max norm) are merged.
    pub dedup_dist: f64,
    /// Most local grid maxima refined.
    pub max_starts: usize,
}

impl Default for MaximizeOptions {
    fn default() -> Self {
        MaximizeOptions {
            grid: 64,
            tie_tol: 1e-9,
            dedup_dist: 1e-6,
            max_starts: 64,
        }
    }
}

/// Map unit-cube coordinates onto `Ω_α`: `u` fills the room left for A
/// dimers, `v` for B dimers, `w` scales the mixed density.
fn cube_to_domain(u: f64, v: f64, w: f64, alpha: f64) -> DimerDensities {
    let d_ab = w * alpha.min(1.0 - alpha);
    DimerDensities::new(
        0.5 * u * (alpha - d_ab),
        0.5 * v * (1.0 - alpha - d_ab),
        d_ab,
    )
}

/// All global maximizers of `ψ` over `Ω_α`, sorted lexicographically.
///
/// A coarse grid (boundary faces included) locates the local maxima; each
/// is refined by Newton ascent from a point nudged into the interior.
pub fn maximize_psi_with(params: &ModelParams, opts: MaximizeOptions) -> Result<Vec<Maximizer>> {
    params.validate()?;
    let n = opts.grid.max(3);
    let alpha = params.alpha;
    let coord = |i: usize| i as f64 / (n - 1) as f64;
    let idx = |i: usize, j: usize, k: usize| (i * n + j) * n + k;

    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            (0..n).flat_map(move |j| {
                (0..n).map(move |k| {
                    let d = cube_to_domain(coord(i), coord(j), coord(k), alpha);
                    psi(&d, params).unwrap_or(f64::NEG_INFINITY)
                })
            })
        })
        .collect();

    let mut local: Vec<(f64, [usize; 3])> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let v = values[idx(i, j, k)];
                let mut is_max = true;
                'nb: for di in -1i64..=1 {
                    for dj in -1i64..=1 {
                        for dk in -1i64..=1 {
                            if di == 0 && dj == 0 && dk == 0 {
                                continue;
                            }
                            let (a, b, c) = (i as i64 + di, j as i64 + dj, k as i64 + dk);
                            if a < 0 || b < 0 || c < 0 || a >= n as i64 || b >= n as i64 || c >= n as i64 {
                                continue;
                            }
                            if values[idx(a as usize, b as usize, c as usize)] > v {
                                is_max = false;
                                break 'nb;
                            }
                        }
                    }
                }
                if is_max {
                    local.push((v, [i, j, k]));
                }
            }
        }
    }
    local.sort_by(|a, b| b.0.total_cmp(&a.0));
    local.truncate(opts.max_starts);

    let nudge = |i: usize| coord(i).clamp(0.25 / (n - 1) as f64, 1.0 - 0.25 / (n - 1) as f64);
    let mut candidates: Vec<Maximizer> = local
        .par_iter()
        .filter_map(|&(_, [i, j, k])| {
            let start = cube_to_domain(nudge(i), nudge(j), nudge(k), alpha);
            let d = ascend(params, &start).ok()?;
            let value = psi(&d, params).ok()?;
            Some(Maximizer {
                d,
                value,
                interior: d.is_interior(alpha),
            })
        })
        .collect();

    if candidates.is_empty() {
        let (v, [i, j, k]) = local[0];
        let d = cube_to_domain(coord(i), coord(j), coord(k), alpha);
        candidates.push(Maximizer {
            d,
            value: v,
            interior: d.is_interior(alpha),
        });
    }

    let best = candidates
        .iter()
        .map(|m| m.value)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut ties: Vec<Maximizer> = Vec::new();
    candidates.sort_by(|a, b| b.value.total_cmp(&a.value));
    for m in candidates {
        if m.value < best - opts.tie_tol {
            continue;
        }
        if ties.iter().all(|t| t.d.max_abs_diff(&m.d) > opts.dedup_dist) {
            ties.push(m);
        }
    }
    ties.sort_by(|a, b| {
        a.d.as_array()
            .partial_cmp(&b.d.as_array())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(ties)
}

/// [`maximize_psi_with`] under default options.
pub fn maximize_psi(params: &ModelParams) -> Result<Vec<Maximizer>> {
    maximize_psi_with(params, MaximizeOptions::default())
}

/// `p(h, J, α) = max ψ`.
pub fn pressure(params: &ModelParams) -> Result<f64> {
    Ok(maximize_psi(params)?[0].value)
}

/// Closed form at `h = 0, J = 0, α = ½`: `m_A = m_B = (√5 − 1)/4`.
pub fn symmetric_free_solution() -> DimerDensities {
    let m = (5f64.sqrt() - 1.0) / 4.0;
    DimerDensities::new(0.5 * m * m, 0.5 * m * m, m * m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free(alpha: f64) -> ModelParams {
        ModelParams::zero_coupling(alpha, [0.0; 3]).unwrap()
    }

    #[test]
    fn log_gamma_values() {
        assert_eq!(log_gamma_fn(0.0).unwrap(), 0.0);
        assert_eq!(log_gamma_fn(1.0).unwrap(), -1.0);
        assert!(log_gamma_fn(std::f64::consts::E).unwrap().abs() < 1e-15);
        assert!(log_gamma_fn(-1e-3).is_err());
    }

    #[test]
    fn entropy_at_origin_and_symmetry() {
        assert!(entropy(&DimerDensities::default(), 0.3).unwrap().abs() < 1e-15);
        let d = DimerDensities::new(0.05, 0.1, 0.07);
        let mirrored = DimerDensities::new(0.1, 0.05, 0.07);
        let (s1, s2) = (entropy(&d, 0.3).unwrap(), entropy(&mirrored, 0.7).unwrap());
        assert!((s1 - s2).abs() < 1e-14);
        assert!(entropy(&DimerDensities::new(0.2, 0.0, 0.0), 0.3).is_err());
        // boundary: m_A = 0 exactly
        assert!(entropy(&DimerDensities::new(0.1, 0.0, 0.1), 0.3).unwrap().is_finite());
    }

    #[test]
    fn energy_examples() {
        let d = DimerDensities::new(0.0, 0.0, 0.1);
        assert_eq!(energy(&d, &free(0.5)), 0.0);
        let p = ModelParams::zero_coupling(0.5, [0.0, 0.0, 1.0]).unwrap();
        assert!((energy(&d, &p) + 0.1).abs() < 1e-16);
        let p = ModelParams::mixed_only(0.5, 0.0, 4.0).unwrap();
        assert!((energy(&d, &p) + 0.02).abs() < 1e-16);
    }

    #[test]
    fn psi_zero_coupling_identity() {
        let h = [0.3, -0.7, 1.1];
        let p = ModelParams::zero_coupling(0.4, h).unwrap();
        let d = DimerDensities::new(0.03, 0.1, 0.12);
        let lhs = psi(&d, &p).unwrap() - psi(&DimerDensities::default(), &p).unwrap();
        let hd: f64 = h.iter().zip(d.as_array()).map(|(a, b)| a * b).sum();
        assert!((lhs - (entropy(&d, 0.4).unwrap() + hd)).abs() < 1e-15);
    }

    #[test]
    fn gradient_vanishes_at_symmetric_solution() {
        let d = symmetric_free_solution();
        assert!((d.d_a - 0.047_745_751_406_263_16).abs() < 1e-15);
        let g = grad_psi(&d, &free(0.5)).unwrap();
        assert!(g.iter().all(|x| x.abs() < 1e-14), "{g:?}");
        assert!(grad_psi(&DimerDensities::new(0.0, 0.1, 0.1), &free(0.5)).is_err());
    }

    #[test]
    fn gradient_third_component_zero_coupling() {
        let p = ModelParams::zero_coupling(0.4, [0.2, 0.1, -0.3]).unwrap();
        let d = DimerDensities::new(0.03, 0.1, 0.12);
        let (m_a, m_b) = d.monomers(0.4);
        let g = grad_psi(&d, &p).unwrap();
        assert!((g[AB] - ((m_a * m_b / d.d_ab).ln() - 0.3)).abs() < 1e-15);
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let p = ModelParams::new(
            0.35,
            [0.1, -0.4, 0.2],
            [[0.5, 1.0, -0.3], [0.2, -0.7, 0.4], [0.9, 0.1, 1.3]],
        )
        .unwrap();
        let d = DimerDensities::new(0.04, 0.12, 0.09);
        let h = hessian_psi(&d, &p).unwrap();
        let step = 1e-7;
        for c in 0..3 {
            let mut up = d.as_array();
            let mut dn = d.as_array();
            up[c] += step;
            dn[c] -= step;
            let gu = grad_psi(&DimerDensities::from_array(up), &p).unwrap();
            let gd = grad_psi(&DimerDensities::from_array(dn), &p).unwrap();
            for r in 0..3 {
                let fd = (gu[r] - gd[r]) / (2.0 * step);
                assert!((fd - h[r][c]).abs() < 1e-5 * h[r][c].abs().max(1.0));
            }
        }
    }

    #[test]
    fn zero_coupling_closed_form() {
        let d = solve_zero_coupling([0.0; 3], 0.5).unwrap();
        let want = symmetric_free_solution();
        assert!(d.max_abs_diff(&want) < 1e-15);
        let (m_a, m_b) = zero_coupling_monomers([0.0; 3], 0.5).unwrap();
        let m = (5f64.sqrt() - 1.0) / 4.0;
        assert!((m_a - m).abs() < 1e-15 && (m_b - m).abs() < 1e-15);
    }

    #[test]
    fn zero_coupling_vanishing_weights() {
        for alpha in [0.01, 0.3, 0.9] {
            let (m_a, m_b) = zero_coupling_monomers([-50.0; 3], alpha).unwrap();
            assert!((m_a - alpha).abs() < 1e-15 && (m_b - (1.0 - alpha)).abs() < 1e-15);
            let d = solve_zero_coupling([-50.0; 3], alpha).unwrap();
            assert!(d.as_array().iter().all(|&x| x < 1e-20));
        }
    }

    #[test]
    fn zero_coupling_residuals_small_for_extreme_fields() {
        for field in [[50.0, 50.0, 50.0], [-20.0, 30.0, 5.0], [3.0, -3.0, 10.0]] {
            for alpha in [1e-3, 0.5, 0.97] {
                let (m_a, m_b) = zero_coupling_monomers(field, alpha).unwrap();
                let d = solve_zero_coupling(field, alpha).unwrap();
                let r_a = alpha - m_a - 2.0 * d.d_a - d.d_ab;
                let r_b = 1.0 - alpha - m_b - 2.0 * d.d_b - d.d_ab;
                assert!(r_a.abs() < 1e-12 && r_b.abs() < 1e-12, "{field:?} {alpha}: {r_a} {r_b}");
            }
        }
    }

    #[test]
    fn fixed_point_without_coupling_ignores_start() {
        let p = ModelParams::zero_coupling(0.3, [0.4, -0.2, 0.6]).unwrap();
        let g = solve_zero_coupling(p.h, 0.3).unwrap();
        for d0 in [DimerDensities::default(), DimerDensities::new(0.1, 0.2, 0.05)] {
            let d = fixed_point_solve(&p, &d0, FixedPointOptions::default()).unwrap();
            assert_eq!(d, g);
        }
    }

    #[test]
    fn fixed_point_rejects_bad_inputs() {
        let p = ModelParams::mixed_only(0.5, 0.0, 1.0).unwrap();
        let bad = DimerDensities::new(0.3, 0.0, 0.0);
        assert!(fixed_point_solve(&p, &bad, FixedPointOptions::default()).is_err());
        let opts = FixedPointOptions {
            damping: 0.0,
            ..Default::default()
        };
        assert!(fixed_point_solve(&p, &DimerDensities::default(), opts).is_err());
    }

    #[test]
    fn fixed_point_with_coupling_is_stationary() {
        let p = ModelParams::new(
            0.4,
            [0.3, -0.5, 0.2],
            [[0.8, -0.2, 0.1], [0.3, 0.5, -0.4], [0.0, 0.6, 1.2]],
        )
        .unwrap();
        let d = fixed_point_solve(&p, &DimerDensities::new(0.05, 0.05, 0.05), FixedPointOptions::default())
            .unwrap();
        let g = grad_psi(&d, &p).unwrap();
        assert!(g.iter().all(|x| x.abs() < 1e-8), "{g:?}");
        assert!(fixed_point_residual(&d, &p).iter().all(|x| x.abs() < 1e-10));
    }

    #[test]
    fn maximize_empty_phase() {
        let p = ModelParams::new(0.4, [-50.0; 3], [[0.5; 3]; 3]).unwrap();
        let m = maximize_psi(&p).unwrap();
        assert_eq!(m.len(), 1);
        assert!(m[0].d.as_array().iter().all(|&x| x < 1e-15));
        assert!(m[0].value.abs() < 1e-15);
    }

    #[test]
    fn maximize_free_symmetric() {
        let m = maximize_psi(&free(0.5)).unwrap();
        assert_eq!(m.len(), 1);
        let want = symmetric_free_solution();
        assert!(m[0].d.max_abs_diff(&want) < 1e-12);
        let s = entropy(&want, 0.5).unwrap();
        assert!((m[0].value - s).abs() < 1e-14);
        assert!((pressure(&free(0.5)).unwrap() - s).abs() < 1e-14);
    }
}
