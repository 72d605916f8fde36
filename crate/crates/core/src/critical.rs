//! One-dimensional reduction with only `h_AB` and `J_AB^AB` switched on.
//!
//! With `d = d_AB`, stationarity in `d_A`, `d_B` fixes
//! `m_A = x_α(d)`, `m_B = y_α(d)`, and the remaining condition reads
//! `f_α(d) = h + J d` with `f_α(d) = ln d − ln x_α(d) − ln y_α(d)`.
//! `f_α` is the inverse of a sigmoid; its inflection point is the critical
//! point where the solution branches.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::numeric::{brent, fit_line, safeguarded_newton};
use crate::variational::{psi, DimerDensities};

/// `α`, `h ≡ h_AB`, `J ≡ J_AB^AB`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedParams {
    pub alpha: f64,
    pub h: f64,
    pub j: f64,
}

impl ReducedParams {
    pub fn new(alpha: f64, h: f64, j: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid("alpha", format!("must lie in (0, 1), got {alpha}")));
        }
        if !h.is_finite() {
            return Err(Error::invalid("h", "must be finite"));
        }
        if !(j > 0.0 && j.is_finite()) {
            return Err(Error::invalid("J", format!("must be positive and finite, got {j}")));
        }
        Ok(ReducedParams { alpha, h, j })
    }

    pub fn to_model(&self) -> ModelParams {
        ModelParams {
            alpha: self.alpha,
            h: [0.0, 0.0, self.h],
            j: [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, self.j]],
        }
    }
}

/// The point `(d_c, h_c, J_c)` where `f_α″(d_c) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub alpha: f64,
    pub d_c: f64,
    pub h_c: f64,
    pub j_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stability {
    GlobalMax,
    LocalMax,
    Unstable,
}

/// One solution of `f_α(d) = h + J d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchSolution {
    pub d: f64,
    pub psi1_value: f64,
    pub stability: Stability,
}

/// Positive root of `t² + t − c = 0`, written to avoid cancellation.
#[inline]
fn quad_root(c: f64) -> f64 {
    2.0 * c / (1.0 + (1.0 + 4.0 * c).sqrt())
}

/// `x_α(d)`: positive root of `x² + x − (α − d) = 0`.
pub fn x_alpha(d: f64, alpha: f64) -> Result<f64> {
    if !(0.0..=alpha).contains(&d) {
        return Err(Error::invalid("d", format!("x_alpha needs 0 ≤ d ≤ α={alpha}, got {d}")));
    }
    Ok(quad_root(alpha - d))
}

/// `y_α(d)`: positive root of `y² + y − (1 − α − d) = 0`.
pub fn y_alpha(d: f64, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0 - alpha).contains(&d) {
        return Err(Error::invalid("d", format!("y_alpha needs 0 ≤ d ≤ 1−α={}, got {d}", 1.0 - alpha)));
    }
    Ok(quad_root(1.0 - alpha - d))
}

/// Value and first three derivatives of `ln t(d)` where `t² + t = c₀ − d`.
#[inline]
fn log_root_derivs(t: f64) -> [f64; 4] {
    let s = 1.0 + 2.0 * t;
    let t1 = -1.0 / s;
    let t2 = -2.0 / (s * s * s);
    let t3 = -12.0 / (s * s * s * s * s);
    let r1 = t1 / t;
    [
        t.ln(),
        r1,
        t2 / t - r1 * r1,
        t3 / t - 3.0 * t1 * t2 / (t * t) + 2.0 * r1 * r1 * r1,
    ]
}

/// `[f_α, f_α′, f_α″, f_α‴]` at `d ∈ (0, α)`, all in closed form.
pub fn f_alpha_derivatives(d: f64, alpha: f64) -> Result<[f64; 4]> {
    if !(d > 0.0 && d < alpha) {
        return Err(Error::invalid("d", format!("f_alpha needs 0 < d < α={alpha}, got {d}")));
    }
    let lx = log_root_derivs(quad_root(alpha - d));
    let ly = log_root_derivs(quad_root(1.0 - alpha - d));
    Ok([
        d.ln() - lx[0] - ly[0],
        1.0 / d - lx[1] - ly[1],
        -1.0 / (d * d) - lx[2] - ly[2],
        2.0 / (d * d * d) - lx[3] - ly[3],
    ])
}

pub fn f_alpha(d: f64, alpha: f64) -> Result<f64> {
    Ok(f_alpha_derivatives(d, alpha)?[0])
}

pub fn f_alpha_d1(d: f64, alpha: f64) -> Result<f64> {
    Ok(f_alpha_derivatives(d, alpha)?[1])
}

pub fn f_alpha_d2(d: f64, alpha: f64) -> Result<f64> {
    Ok(f_alpha_derivatives(d, alpha)?[2])
}

pub fn f_alpha_d3(d: f64, alpha: f64) -> Result<f64> {
    Ok(f_alpha_derivatives(d, alpha)?[3])
}

/// The reduced point `(x²/2, y²/2, d)` in `Ω_α`.
pub fn reduced_point(d: f64, alpha: f64) -> Result<DimerDensities> {
    let x = x_alpha(d, alpha)?;
    let y = y_alpha(d, alpha)?;
    Ok(DimerDensities::new(0.5 * x * x, 0.5 * y * y, d))
}

/// `ψ₁(d) = ψ(x_α(d)²/2, y_α(d)²/2, d)`.
pub fn psi1(d: f64, rp: &ReducedParams) -> Result<f64> {
    psi(&reduced_point(d, rp.alpha)?, &rp.to_model())
}

/// `[ψ₁′, ψ₁″, ψ₁‴, ψ₁⁗]` from `ψ₁′ = h + J d − f_α(d)`.
pub fn psi1_derivatives(d: f64, rp: &ReducedParams) -> Result<[f64; 4]> {
    let f = f_alpha_derivatives(d, rp.alpha)?;
    Ok([rp.h + rp.j * d - f[0], rp.j - f[1], -f[2], -f[3]])
}

/// Mixed-dimer fraction `d / (x²/2 + y²/2 + d)` at the reduced point.
pub fn d_mix_reduced(d: f64, alpha: f64) -> Result<f64> {
    let p = reduced_point(d, alpha)?;
    Ok(d / (p.d_a + p.d_b + d))
}

/// Scan points on `(0, α)`: log-spaced towards both ends, uniform in the
/// middle.
fn scan_grid(alpha: f64, per_segment: usize) -> Vec<f64> {
    let mut ts: Vec<f64> = Vec::with_capacity(3 * per_segment);
    for i in 0..per_segment {
        // 1e-12 .. 0.05 log-spaced
        let e = -12.0 + (12.0 + 0.05f64.log10()) * i as f64 / per_segment as f64;
        ts.push(10f64.powf(e));
    }
    for i in 0..per_segment {
        ts.push(0.05 + 0.9 * i as f64 / per_segment as f64);
    }
    for i in (0..=per_segment).rev() {
        let e = -12.0 + (12.0 + 0.05f64.log10()) * i as f64 / per_segment as f64;
        ts.push(1.0 - 10f64.powf(e));
    }
    ts.into_iter().map(|t| alpha * t).filter(|&d| d > 0.0 && d < alpha).collect()
}

/// Sign changes of `f_α″` on the scan grid: `(count, last bracket)`.
pub fn f2_sign_changes(alpha: f64, per_segment: usize) -> Result<(usize, Option<(f64, f64)>)> {
    let grid = scan_grid(alpha, per_segment);
    let mut count = 0;
    let mut bracket = None;
    let mut prev: Option<(f64, f64)> = None;
    for &d in &grid {
        let v = f_alpha_d2(d, alpha)?;
        if let Some((pd, pv)) = prev {
            if pv.signum() != v.signum() && pv != 0.0 {
                count += 1;
                bracket = Some((pd, d));
            }
        }
        prev = Some((d, v));
    }
    Ok((count, bracket))
}

/// The unique inflection point of `f_α` and the associated `(h_c, J_c)`.
pub fn critical_point(alpha: f64) -> Result<CriticalPoint> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    let (_, bracket) = f2_sign_changes(alpha, 200)?;
    let (lo, hi) = bracket.ok_or(Error::NoBracket {
        what: "f_alpha''",
        lo: 0.0,
        hi: alpha,
    })?;
    let d_c = safeguarded_newton(
        |d| {
            let f = f_alpha_derivatives(d, alpha).expect("bracket lies inside (0, alpha)");
            (f[2], f[3])
        },
        lo,
        hi,
        0.0,
        200,
    )?;
    let f = f_alpha_derivatives(d_c, alpha)?;
    let j_c = f[1];
    Ok(CriticalPoint {
        alpha,
        d_c,
        h_c: f[0] - j_c * d_c,
        j_c,
    })
}

/// `h_c(0) = −2 − ln((√5 − 1)/2)`, the small-α limit of `h_c`.
pub fn h_c_limit() -> f64 {
    -2.0 - ((5f64.sqrt() - 1.0) / 2.0).ln()
}

/// Two roots of `ψ₁` value closer than this are treated as tied.
pub const BRANCH_TIE_TOL: f64 = 1e-9;

/// Move from `inside` towards `edge` by halving the gap until `pred` holds.
fn walk_to_edge(inside: f64, edge: f64, mut pred: impl FnMut(f64) -> bool) -> Result<f64> {
    let mut gap = edge - inside;
    for _ in 0..2000 {
        gap *= 0.5;
        let p = edge - gap;
        if p == edge {
            break;
        }
        if pred(p) {
            return Ok(p);
        }
    }
    Err(Error::NoBracket {
        what: "branch equation near the interval end",
        lo: inside.min(edge),
        hi: inside.max(edge),
    })
}

/// All solutions of `f_α(d) = h + J d` on `(0, α)`, classified by `ψ₁`.
///
/// `r(d) = f_α(d) − h − J d` has `r″ = f_α″`, which changes sign once, so the
/// points where `f_α′ = J` split `(0, α)` into at most three monotone
/// pieces. Each piece holds at most one root, found by Brent's method.
pub fn solve_branches(rp: &ReducedParams) -> Result<Vec<BranchSolution>> {
    solve_branches_at(rp, &critical_point(rp.alpha)?)
}

/// As [`solve_branches`] with the critical point of `rp.alpha` supplied.
pub fn solve_branches_at(rp: &ReducedParams, cp: &CriticalPoint) -> Result<Vec<BranchSolution>> {
    let rp = ReducedParams::new(rp.alpha, rp.h, rp.j)?;
    let alpha = rp.alpha;
    let r = |d: f64| f_alpha(d, alpha).map(|f| f - rp.h - rp.j * d).unwrap_or(f64::NAN);
    let f1 = |d: f64| f_alpha_d1(d, alpha).unwrap_or(f64::NAN) - rp.j;

    // Monotone pieces as (lo, hi, increasing).
    let mut pieces: Vec<(f64, f64)> = Vec::new();
    if rp.j <= cp.j_c {
        pieces.push((0.0, alpha));
    } else {
        let lo_edge = walk_to_edge(cp.d_c, 0.0, |d| f1(d) > 0.0)?;
        let d_minus = brent(f1, lo_edge, cp.d_c, 0.0, 400)?;
        let hi_edge = walk_to_edge(cp.d_c, alpha, |d| f1(d) > 0.0)?;
        let d_plus = brent(f1, cp.d_c, hi_edge, 0.0, 400)?;
        pieces.push((0.0, d_minus));
        pieces.push((d_minus, d_plus));
        pieces.push((d_plus, alpha));
    }

    let mut roots: Vec<(f64, bool)> = Vec::new();
    let n_pieces = pieces.len();
    for (i, &(lo, hi)) in pieces.iter().enumerate() {
        let increasing = i != 1;
        let (mut a, mut b) = (lo, hi);
        if lo == 0.0 {
            a = walk_to_edge(hi, 0.0, |d| r(d) < 0.0)?;
        }
        if hi == alpha {
            b = walk_to_edge(lo.max(a), alpha, |d| r(d) > 0.0)?;
        }
        let (ra, rb) = (r(a), r(b));
        let brackets = if increasing {
            ra <= 0.0 && rb >= 0.0
        } else {
            ra >= 0.0 && rb <= 0.0
        };
        if !brackets {
            continue;
        }
        let root = brent(r, a, b, 0.0, 400)?;
        let stable = n_pieces == 1 || i != 1;
        if roots.last().is_none_or(|&(p, _)| (root - p).abs() > 1e-15 * alpha) {
            roots.push((root, stable));
        }
    }

    let mut out: Vec<BranchSolution> = roots
        .iter()
        .map(|&(d, stable)| {
            Ok(BranchSolution {
                d,
                psi1_value: psi1(d, &rp)?,
                stability: if stable {
                    Stability::LocalMax
                } else {
                    Stability::Unstable
                },
            })
        })
        .collect::<Result<_>>()?;
    let best = out
        .iter()
        .filter(|b| b.stability != Stability::Unstable)
        .map(|b| b.psi1_value)
        .fold(f64::NEG_INFINITY, f64::max);
    for b in &mut out {
        if b.stability == Stability::LocalMax && b.psi1_value >= best - BRANCH_TIE_TOL {
            b.stability = Stability::GlobalMax;
        }
    }
    Ok(out)
}

/// The largest-`d` global branch.
pub fn upper_global_branch(branches: &[BranchSolution]) -> Option<BranchSolution> {
    branches
        .iter()
        .filter(|b| b.stability == Stability::GlobalMax)
        .max_by(|a, b| a.d.total_cmp(&b.d))
        .copied()
}

/// One row of a scan along `h − h_c = −d_c (J − J_c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentPoint {
    pub offset: f64,
    pub j: f64,
    pub h: f64,
    pub d_star: f64,
    /// `d* − d_c`.
    pub excess: f64,
    pub branches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentScan {
    pub critical: CriticalPoint,
    pub points: Vec<ExponentPoint>,
    pub fit: PowerLawFit,
}

/// Largest offset, relative to `J_c`, accepted by [`exponent_scan`].
pub const MAX_RELATIVE_OFFSET: f64 = 0.05;

/// Follow `J = J_c + δ`, `h = h_c − d_c δ` and record the upper global
/// branch. No restriction on the size of `δ`.
pub fn scan_tangent_path(cp: &CriticalPoint, offsets: &[f64]) -> Result<Vec<ExponentPoint>> {
    offsets
        .iter()
        .map(|&delta| {
            if !(delta > 0.0 && delta.is_finite()) {
                return Err(Error::invalid("offset", format!("must be positive, got {delta}")));
            }
            let j = cp.j_c + delta;
            let h = cp.h_c - cp.d_c * delta;
            let rp = ReducedParams::new(cp.alpha, h, j)?;
            let branches = solve_branches_at(&rp, cp)?;
            let top = upper_global_branch(&branches).ok_or_else(|| {
                Error::Precondition(format!("no global branch at offset {delta}"))
            })?;
            if top.d <= cp.d_c {
                return Err(Error::Precondition(format!(
                    "offset {delta}: upper global branch d={} lies below d_c={}",
                    top.d, cp.d_c
                )));
            }
            Ok(ExponentPoint {
                offset: delta,
                j,
                h,
                d_star: top.d,
                excess: top.d - cp.d_c,
                branches: branches.len(),
            })
        })
        .collect()
}

/// Least-squares fit of `ln y = exponent · ln x + ln prefactor`.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<PowerLawFit> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return Err(Error::Precondition("power-law fit needs at least two points".into()));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0)) {
        return Err(Error::Precondition("power-law fit needs positive data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let (slope, intercept) = fit_line(&lx, &ly);
    Ok(PowerLawFit {
        exponent: slope,
        prefactor: intercept.exp(),
    })
}

/// Square-root law along the tangent path: fit `d* − d_c` against `J − J_c`.
///
/// Every offset must be positive and at most `0.05·J_c`.
pub fn exponent_scan(alpha: f64, offsets: &[f64]) -> Result<ExponentScan> {
    let cp = critical_point(alpha)?;
    if offsets.len() < 2 {
        return Err(Error::Precondition("exponent_scan needs at least two offsets".into()));
    }
    if let Some(&bad) = offsets
        .iter()
        .find(|&&o| !(o > 0.0 && o <= MAX_RELATIVE_OFFSET * cp.j_c * (1.0 + 1e-12)))
    {
        return Err(Error::Precondition(format!(
            "offset {bad} outside (0, {}·J_c] = (0, {}]",
            MAX_RELATIVE_OFFSET,
            MAX_RELATIVE_OFFSET * cp.j_c
        )));
    }
    let points = scan_tangent_path(&cp, offsets)?;
    let xs: Vec<f64> = points.iter().map(|p| p.offset).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.excess).collect();
    let fit = fit_power_law(&xs, &ys)?;
    Ok(ExponentScan {
        critical: cp,
        points,
        fit,
    })
}

/// `√(3α³/16)`, the leading small-α prefactor of the square-root law.
pub fn sqrt_law_prefactor(alpha: f64) -> f64 {
    (3.0 * alpha.powi(3) / 16.0).sqrt()
}

/// Critical point in the `(α, h)` plane at scaled coupling `J = α(1−α)J′`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaledCritical {
    pub jprime: f64,
    pub alpha_c: f64,
    pub h_c: f64,
    pub d_c: f64,
    pub j_c: f64,
    pub d_mix_c: f64,
}

/// Smallest `J′` accepted by [`scaled_coupling_critical`].
pub const MIN_JPRIME: f64 = 100.0;

/// Solve `J_c(α) = α(1−α)J′` for `α_c`, bracketed by `[1/√J′, 4/√J′]`.
pub fn scaled_coupling_critical(jprime: f64) -> Result<ScaledCritical> {
    if !(jprime >= MIN_JPRIME && jprime.is_finite()) {
        return Err(Error::invalid("Jprime", format!("must be at least {MIN_JPRIME}, got {jprime}")));
    }
    let s = jprime.sqrt();
    let (lo, hi) = (1.0 / s, (4.0 / s).min(0.5));
    let gap = |a: f64| {
        critical_point(a)
            .map(|cp| cp.j_c - a * (1.0 - a) * jprime)
            .unwrap_or(f64::NAN)
    };
    let alpha_c = brent(gap, lo, hi, 0.0, 400)?;
    let cp = critical_point(alpha_c)?;
    Ok(ScaledCritical {
        jprime,
        alpha_c,
        h_c: cp.h_c,
        d_c: cp.d_c,
        j_c: cp.j_c,
        d_mix_c: d_mix_reduced(cp.d_c, alpha_c)?,
    })
}

/// How `h` is moved with `α` in [`d_mix_scan`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaPath {
    /// At each `α`, `h = h_c(α) − d_c(α)(J(α) − J_c(α))`: the square-root
    /// path of the fixed-`α` analysis.
    #[default]
    Tangent,
    /// `h = h_c − d_c (α − α_c)` with the critical values frozen at `α_c`.
    /// The ordering field then grows linearly in `α − α_c` and the excess
    /// scales with exponent 1/3.
    Frozen,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DMixRow {
    pub alpha: f64,
    pub j: f64,
    pub h: f64,
    pub d: f64,
    pub d_mix: f64,
    pub branches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DMixScan {
    pub critical: ScaledCritical,
    pub path: AlphaPath,
    pub rows: Vec<DMixRow>,
    /// Fit of `d_mix − (d_mix)_c` against `α − α_c`.
    pub fit: PowerLawFit,
}

/// Mixed-dimer fraction above `α_c` at fixed `J′`, with a power-law fit of
/// its excess over the critical value.
pub fn d_mix_scan(jprime: f64, alphas: &[f64], path: AlphaPath) -> Result<DMixScan> {
    let sc = scaled_coupling_critical(jprime)?;
    if alphas.is_empty() {
        return Err(Error::Precondition("d_mix_scan needs at least one alpha".into()));
    }
    if let Some(&bad) = alphas.iter().find(|&&a| !(a > sc.alpha_c && a < 1.0)) {
        return Err(Error::Precondition(format!(
            "alpha {bad} must exceed alpha_c = {}",
            sc.alpha_c
        )));
    }
    let rows: Vec<DMixRow> = alphas
        .iter()
        .map(|&alpha| {
            let j = alpha * (1.0 - alpha) * jprime;
            let cp = critical_point(alpha)?;
            let h = match path {
                AlphaPath::Tangent => cp.h_c - cp.d_c * (j - cp.j_c),
                AlphaPath::Frozen => sc.h_c - sc.d_c * (alpha - sc.alpha_c),
            };
            let branches = solve_branches_at(&ReducedParams::new(alpha, h, j)?, &cp)?;
            let top = upper_global_branch(&branches)
                .ok_or_else(|| Error::Precondition(format!("no global branch at alpha {alpha}")))?;
            Ok(DMixRow {
                alpha,
                j,
                h,
                d: top.d,
                d_mix: d_mix_reduced(top.d, alpha)?,
                branches: branches.len(),
            })
        })
        .collect::<Result<_>>()?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .map(|r| (r.alpha - sc.alpha_c, r.d_mix - sc.d_mix_c))
        .filter(|&(_, y)| y > 0.0)
        .unzip();
    let fit = fit_power_law(&xs, &ys)?;
    Ok(DMixScan {
        critical: sc,
        path,
        rows,
        fit,
    })
}
