//! Gauss rules.

/// A one-dimensional rule: `∫ g(x) w(x) dx ≈ Σ weights[i] g(nodes[i])`.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Gauss–Hermite rule for the weight `exp(−x²)`.
///
/// Nodes start from the eigenvalues of the Jacobi matrix and are polished by
/// Newton on the orthonormal Hermite recurrence; weights come from the
/// recurrence too, so they keep full relative accuracy at the extreme nodes
/// where the eigenvector formula would only give absolute accuracy.
pub fn gauss_hermite(n: usize) -> Rule {
    assert!(n >= 1);
    const PIM4: f64 = 0.751_125_544_464_942_5; // π^(-1/4)
    let jacobi = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let mut guesses: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    guesses.sort_by(|a, b| a.total_cmp(b));
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // polish the non-negative half and mirror
        let mut z = guesses[n - 1 - i].abs();
        let mut pp = 0.0;
        for _ in 0..20 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        if 2 * i + 1 == n {
            z = 0.0;
        }
        x[n - 1 - i] = z;
        x[i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    Rule { nodes: x, weights: w }
}

/// Gauss–Hermite rule rescaled to the standard normal density.
pub fn gauss_hermite_normal(n: usize) -> Rule {
    let r = gauss_hermite(n);
    let s = std::f64::consts::SQRT_2;
    let norm = std::f64::consts::PI.sqrt();
    Rule {
        nodes: r.nodes.iter().map(|x| x * s).collect(),
        weights: r.weights.iter().map(|w| w / norm).collect(),
    }
}

/// Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    Rule { nodes: x, weights: w }
}

/// Composite Gauss–Legendre nodes on `[lo, hi]`.
///
/// Panels are geometrically graded towards `lo` when `graded` is set, which
/// handles integrands behaving like `(x − lo)^p` with non-integer `p`.
pub fn composite_legendre(lo: f64, hi: f64, panel_width: f64, graded: bool, base: &Rule) -> Vec<(f64, f64)> {
    let mut edges: Vec<f64> = Vec::new();
    if hi <= lo {
        return Vec::new();
    }
    let len = hi - lo;
    let uniform_start = if graded {
        let first = len.min(panel_width);
        let mut e = first;
        let mut small = Vec::new();
        for _ in 0..40 {
            small.push(lo + e);
            e *= 0.5;
        }
        edges.push(lo);
        edges.extend(small.into_iter().rev());
        lo + first
    } else {
        edges.push(lo);
        lo
    };
    let rest = hi - uniform_start;
    if rest > 0.0 {
        let panels = (rest / panel_width).ceil().max(1.0) as usize;
        for k in 1..=panels {
            edges.push(uniform_start + rest * k as f64 / panels as f64);
        }
    }
    edges.dedup();
    let mut out = Vec::with_capacity((edges.len() - 1) * base.nodes.len());
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b <= a {
            continue;
        }
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (x, w) in base.nodes.iter().zip(&base.weights) {
            out.push((mid + half * x, half * w));
        }
    }
    out
}
