//! One function per subcommand: resolve defaults, call the library, fill a
//! [`Report`]. Each returns the resolved parameters for the run record.

use mdimer::critical::{
    critical_point, d_mix_scan, exponent_scan, h_c_limit, scaled_coupling_critical, solve_branches_at,
    sqrt_law_prefactor, AlphaPath, MAX_RELATIVE_OFFSET,
};
use mdimer::gaussian::{
    laplace_maximizer, superadditivity_check, weight_matrix, z_star, z_via_gaussian, GaussianMethod,
    QUADRATURE_CAP,
};
use mdimer::model::{enumerate, EnumerationOptions};
use mdimer::numeric::logspace;
use mdimer::variational::{fixed_point_residual, grad_psi, maximize_psi};
use mdimer::{Error, ModelParams, ReducedParams, Result};
use serde_json::{json, Value};

use crate::args::{Command, MethodArg, ModelArgs, PathArg};
use crate::table::{col, Cell, Report};

fn model_params(m: &ModelArgs) -> Result<ModelParams> {
    let h: [f64; 3] = m
        .h
        .as_slice()
        .try_into()
        .map_err(|_| Error::InvalidParameter {
            name: "h",
            reason: format!("expected 3 comma-separated values, got {}", m.h.len()),
        })?;
    let j: [f64; 9] = m
        .j
        .as_slice()
        .try_into()
        .map_err(|_| Error::InvalidParameter {
            name: "j",
            reason: format!("expected 9 comma-separated values, got {}", m.j.len()),
        })?;
    ModelParams::new(m.alpha, h, [[j[0], j[1], j[2]], [j[3], j[4], j[5]], [j[6], j[7], j[8]]])
}

fn field3(h: &[f64]) -> Result<[f64; 3]> {
    h.try_into().map_err(|_| Error::InvalidParameter {
        name: "h",
        reason: format!("expected 3 comma-separated values, got {}", h.len()),
    })
}

fn require(cond: bool, name: &'static str, reason: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: reason.to_string(),
        })
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

pub fn run(cmd: &Command, seed: Option<u64>) -> Result<(Report, Value)> {
    match cmd {
        Command::Exact { model, n, cap, .. } => exact(model, n, *cap),
        Command::Pressure { model, .. } => pressure(model),
        Command::Critical { alpha, .. } => critical(alpha),
        Command::Branches {
            alpha,
            h_min,
            h_max,
            h_steps,
            j_min,
            j_max,
            j_steps,
            ..
        } => branches(*alpha, *h_min, *h_max, *h_steps, *j_min, *j_max, *j_steps),
        Command::Exponent {
            alpha,
            offset_min,
            offset_max,
            points,
            ..
        } => exponent(*alpha, *offset_min, *offset_max, *points),
        Command::Scaled {
            jprime,
            path,
            rel_min,
            rel_max,
            points,
            ..
        } => scaled(*jprime, *path, *rel_min, *rel_max, *points),
        Command::Gauss {
            alpha,
            h,
            n,
            method,
            samples,
            ..
        } => gauss(*alpha, h, n, *method, *samples, seed.unwrap_or(0)),
        Command::Convergence { model, n, .. } => convergence(model, n),
    }
}

fn exact(m: &ModelArgs, ns: &[u64], cap: u64) -> Result<(Report, Value)> {
    let p = model_params(m)?;
    require(!ns.is_empty(), "N", "needs at least one size")?;
    let mut r = Report::new(vec![
        col("N", "sites"),
        col("N_A", "sites"),
        col("N_B", "sites"),
        col("log_Z", "nat"),
        col("log_Z_per_site", "nat/site"),
        col("d_A", "dimers/site"),
        col("d_B", "dimers/site"),
        col("d_AB", "dimers/site"),
        col("d_mix", "1"),
        col("classes", "count"),
    ]);
    for &n in ns {
        let s = enumerate(n, &p, EnumerationOptions { cap })?;
        r.push(vec![
            n.into(),
            s.sizes.n_a.into(),
            s.sizes.n_b.into(),
            s.log_z.into(),
            (s.log_z / n as f64).into(),
            s.densities[0].into(),
            s.densities[1].into(),
            s.densities[2].into(),
            s.d_mix.into(),
            s.classes.into(),
        ]);
    }
    Ok((r, json!({ "params": p, "N": ns, "cap": cap })))
}

fn pressure(m: &ModelArgs) -> Result<(Report, Value)> {
    let p = model_params(m)?;
    let maxima = maximize_psi(&p)?;
    let mut r = Report::new(vec![
        col("index", "1"),
        col("d_A", "dimers/site"),
        col("d_B", "dimers/site"),
        col("d_AB", "dimers/site"),
        col("psi", "nat/site"),
        col("interior", "bool"),
        col("grad_psi_max", "nat/site"),
        col("fixed_point_residual_max", "dimers/site"),
    ]);
    for (i, mx) in maxima.iter().enumerate() {
        let grad = if mx.interior {
            Cell::F(max_abs(&grad_psi(&mx.d, &p)?))
        } else {
            Cell::Null
        };
        r.push(vec![
            i.into(),
            mx.d.d_a.into(),
            mx.d.d_b.into(),
            mx.d.d_ab.into(),
            mx.value.into(),
            mx.interior.into(),
            grad,
            max_abs(&fixed_point_residual(&mx.d, &p)).into(),
        ]);
    }
    r.summarize(col("pressure", "nat/site"), maxima[0].value);
    r.summarize(col("maximizers", "count"), maxima.len());
    Ok((r, json!({ "params": p })))
}

fn critical(alphas: &[f64]) -> Result<(Report, Value)> {
    require(!alphas.is_empty(), "alpha", "needs at least one value")?;
    let h0 = h_c_limit();
    let mut r = Report::new(vec![
        col("alpha", "1"),
        col("d_c", "dimers/site"),
        col("h_c", "1"),
        col("J_c", "1"),
        col("d_c_minus_alpha_half", "dimers/site"),
        col("J_c_minus_4_over_alpha", "1"),
        col("h_c_minus_limit", "1"),
        col("d_residual_over_alpha3", "1"),
        col("J_residual_over_alpha", "1"),
        col("h_residual_over_alpha", "1"),
    ]);
    for &a in alphas {
        let cp = critical_point(a)?;
        let rd = cp.d_c - a / 2.0;
        let rj = cp.j_c - 4.0 / a;
        let rh = cp.h_c - h0;
        r.push(vec![
            a.into(),
            cp.d_c.into(),
            cp.h_c.into(),
            cp.j_c.into(),
            rd.into(),
            rj.into(),
            rh.into(),
            (rd / a.powi(3)).into(),
            (rj / a).into(),
            (rh / a).into(),
        ]);
    }
    r.summarize(col("h_c_limit", "1"), h0);
    r.summarize(col("J_c_minus_4_over_alpha_limit", "1"), (5f64.sqrt() - 5.0) / 10.0);
    Ok((r, json!({ "alpha": alphas })))
}

fn branches(
    alpha: f64,
    h_min: Option<f64>,
    h_max: Option<f64>,
    h_steps: usize,
    j_min: Option<f64>,
    j_max: Option<f64>,
    j_steps: usize,
) -> Result<(Report, Value)> {
    let cp = critical_point(alpha)?;
    let h_min = h_min.unwrap_or(cp.h_c - 0.25 * cp.d_c * cp.j_c - 0.5);
    let h_max = h_max.unwrap_or(cp.h_c + 0.5);
    let j_min = j_min.unwrap_or(0.9 * cp.j_c);
    let j_max = j_max.unwrap_or(1.5 * cp.j_c);
    require(h_steps >= 1 && j_steps >= 1, "steps", "grids need at least one point")?;
    require(h_min <= h_max && j_min <= j_max, "range", "min must not exceed max")?;
    let mut r = Report::new(vec![
        col("h", "1"),
        col("J", "1"),
        col("root", "1"),
        col("d", "dimers/site"),
        col("psi1", "nat/site"),
        col("stability", "label"),
        col("roots", "count"),
    ]);
    for j in linspace(j_min, j_max, j_steps) {
        for h in linspace(h_min, h_max, h_steps) {
            let rp = ReducedParams::new(alpha, h, j)?;
            let b = solve_branches_at(&rp, &cp)?;
            for (k, s) in b.iter().enumerate() {
                let label = serde_json::to_value(s.stability)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default();
                r.push(vec![
                    h.into(),
                    j.into(),
                    k.into(),
                    s.d.into(),
                    s.psi1_value.into(),
                    Cell::S(label),
                    b.len().into(),
                ]);
            }
        }
    }
    r.summarize(col("d_c", "dimers/site"), cp.d_c);
    r.summarize(col("h_c", "1"), cp.h_c);
    r.summarize(col("J_c", "1"), cp.j_c);
    Ok((
        r,
        json!({
            "alpha": alpha,
            "h_min": h_min, "h_max": h_max, "h_steps": h_steps,
            "j_min": j_min, "j_max": j_max, "j_steps": j_steps,
        }),
    ))
}

fn exponent(alpha: f64, offset_min: f64, offset_max: Option<f64>, points: usize) -> Result<(Report, Value)> {
    let cp = critical_point(alpha)?;
    let offset_max = offset_max.unwrap_or(MAX_RELATIVE_OFFSET * cp.j_c);
    require(points >= 2, "points", "needs at least two")?;
    require(offset_min > 0.0 && offset_max > offset_min, "offset", "need 0 < offset_min < offset_max")?;
    let scan = exponent_scan(alpha, &logspace(offset_min, offset_max, points))?;
    let mut r = Report::new(vec![
        col("offset", "1"),
        col("J", "1"),
        col("h", "1"),
        col("d_star", "dimers/site"),
        col("excess", "dimers/site"),
        col("roots", "count"),
    ]);
    for p in &scan.points {
        r.push(vec![
            p.offset.into(),
            p.j.into(),
            p.h.into(),
            p.d_star.into(),
            p.excess.into(),
            p.branches.into(),
        ]);
    }
    let target = sqrt_law_prefactor(alpha);
    r.summarize(col("exponent", "1"), scan.fit.exponent);
    r.summarize(col("prefactor", "dimers/site"), scan.fit.prefactor);
    r.summarize(col("sqrt_law_prefactor", "dimers/site"), target);
    r.summarize(col("prefactor_ratio", "1"), scan.fit.prefactor / target);
    r.summarize(col("d_c", "dimers/site"), cp.d_c);
    r.summarize(col("h_c", "1"), cp.h_c);
    r.summarize(col("J_c", "1"), cp.j_c);
    Ok((
        r,
        json!({ "alpha": alpha, "offset_min": offset_min, "offset_max": offset_max, "points": points }),
    ))
}

fn scaled(jprime: f64, path: PathArg, rel_min: f64, rel_max: f64, points: usize) -> Result<(Report, Value)> {
    require(points >= 2, "points", "needs at least two")?;
    require(rel_min > 0.0 && rel_max > rel_min, "rel", "need 0 < rel_min < rel_max")?;
    let sc = scaled_coupling_critical(jprime)?;
    let alphas: Vec<f64> = logspace(rel_min, rel_max, points)
        .iter()
        .map(|t| sc.alpha_c * (1.0 + t))
        .collect();
    let lib_path = match path {
        PathArg::Tangent => AlphaPath::Tangent,
        PathArg::Frozen => AlphaPath::Frozen,
    };
    let scan = d_mix_scan(jprime, &alphas, lib_path)?;
    let mut r = Report::new(vec![
        col("alpha", "1"),
        col("J", "1"),
        col("h", "1"),
        col("d", "dimers/site"),
        col("d_mix", "1"),
        col("roots", "count"),
    ]);
    for row in &scan.rows {
        r.push(vec![
            row.alpha.into(),
            row.j.into(),
            row.h.into(),
            row.d.into(),
            row.d_mix.into(),
            row.branches.into(),
        ]);
    }
    r.summarize(col("alpha_c", "1"), sc.alpha_c);
    r.summarize(col("h_c", "1"), sc.h_c);
    r.summarize(col("d_c", "dimers/site"), sc.d_c);
    r.summarize(col("J_c", "1"), sc.j_c);
    r.summarize(col("d_mix_c", "1"), sc.d_mix_c);
    r.summarize(col("exponent", "1"), scan.fit.exponent);
    r.summarize(col("prefactor", "1"), scan.fit.prefactor);
    Ok((
        r,
        json!({ "jprime": jprime, "path": path, "rel_min": rel_min, "rel_max": rel_max, "points": points }),
    ))
}

fn gauss(alpha: f64, h: &[f64], ns: &[u64], method: MethodArg, samples: u64, seed: u64) -> Result<(Report, Value)> {
    let h = field3(h)?;
    require(!ns.is_empty(), "N", "needs at least one size")?;
    let w = weight_matrix(h)?;
    let gm = match method {
        MethodArg::Quadrature => GaussianMethod::Quadrature,
        MethodArg::MonteCarlo => GaussianMethod::MonteCarlo { samples, seed },
    };
    let p = ModelParams::zero_coupling(alpha, h)?;
    let mut r = Report::new(vec![
        col("N", "sites"),
        col("log_Z_gauss", "nat"),
        col("log_Z_gauss_error", "nat"),
        col("log_Z_exact", "nat"),
        col("relative_delta", "1"),
        col("log_Z_star", "nat"),
        col("log_Z_star_error", "nat"),
        col("Z_over_Z_star_minus_one", "1"),
        col("superadditivity_lhs", "nat"),
        col("superadditivity_rhs", "nat"),
        col("superadditivity_holds", "bool"),
    ]);
    for &n in ns {
        let g = z_via_gaussian(n, alpha, h, gm)?;
        let e = enumerate(n, &p, EnumerationOptions::default())?.log_z;
        let zs = z_star(n, alpha, h)?;
        let sa = if 2 * n <= QUADRATURE_CAP {
            Some(superadditivity_check(n, n, alpha, h)?)
        } else {
            None
        };
        r.push(vec![
            n.into(),
            g.log_value.into(),
            g.error.into(),
            e.into(),
            (g.log_value - e).exp_m1().into(),
            zs.log_value.into(),
            zs.error.into(),
            (g.log_value - zs.log_value).exp_m1().into(),
            sa.map(|s| s.lhs).into(),
            sa.map(|s| s.rhs).into(),
            sa.map(|s| s.holds).into(),
        ]);
    }
    let lm = laplace_maximizer(alpha, &w)?;
    r.summarize(col("laplace_xi_A", "1"), lm.xi[0]);
    r.summarize(col("laplace_xi_B", "1"), lm.xi[1]);
    r.summarize(col("laplace_max", "nat/site"), lm.value);
    r.summarize(col("det_W", "1"), w.det);
    Ok((
        r,
        json!({ "alpha": alpha, "h": h, "N": ns, "method": method, "samples": samples, "seed": seed }),
    ))
}

fn convergence(m: &ModelArgs, ns: &[u64]) -> Result<(Report, Value)> {
    let p = model_params(m)?;
    require(!ns.is_empty(), "N", "needs at least one size")?;
    let limit = maximize_psi(&p)?[0].value;
    let rows: Vec<(u64, f64, f64)> = ns
        .iter()
        .map(|&n| {
            let per_site = enumerate(n, &p, EnumerationOptions::default())?.log_z / n as f64;
            Ok((n, per_site, per_site - limit))
        })
        .collect::<Result<_>>()?;
    let scaled = |n: u64, e: f64| e.abs() * n as f64 / (n as f64).ln();
    let envelope = rows.iter().map(|&(n, _, e)| scaled(n, e)).fold(0.0, f64::max);
    let mut r = Report::new(vec![
        col("N", "sites"),
        col("log_Z_per_site", "nat/site"),
        col("error", "nat/site"),
        col("error_times_N_over_log_N", "nat"),
        col("envelope", "nat/site"),
    ]);
    for &(n, v, e) in &rows {
        r.push(vec![
            n.into(),
            v.into(),
            e.into(),
            scaled(n, e).into(),
            (envelope * (n as f64).ln() / n as f64).into(),
        ]);
    }
    r.summarize(col("pressure", "nat/site"), limit);
    r.summarize(col("envelope_C", "nat"), envelope);
    Ok((r, json!({ "params": p, "N": ns })))
}
