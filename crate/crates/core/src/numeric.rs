//! Small numerical kernels shared by the solvers: stable log-domain
//! accumulation, log-factorials, bracketed root finding and a straight-line
//! least-squares fit.

use crate::error::{Error, Result};

/// Running `log Σ exp(x_i)` with a moving maximum.
///
/// Optional side sums `Σ exp(x_i)·v_i` are carried on the same scale so that
/// weighted averages come out without ever leaving log space.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp<const K: usize> {
    max: f64,
    sum: f64,
    side: [f64; K],
}

impl<const K: usize> Default for LogSumExp<K> {
    fn default() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
            side: [0.0; K],
        }
    }
}

impl<const K: usize> LogSumExp<K> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, log_weight: f64, values: [f64; K]) {
        if log_weight == f64::NEG_INFINITY {
            return;
        }
        if log_weight > self.max {
            let scale = (self.max - log_weight).exp();
            self.sum *= scale;
            for s in &mut self.side {
                *s *= scale;
            }
            self.max = log_weight;
        }
        let w = (log_weight - self.max).exp();
        self.sum += w;
        for (s, v) in self.side.iter_mut().zip(values) {
            *s += w * v;
        }
    }

    /// Combine two partial accumulations. The result does not depend on
    /// thread scheduling as long as merges happen in a fixed order.
    pub fn merge(mut self, other: Self) -> Self {
        if other.max == f64::NEG_INFINITY {
            return self;
        }
        if self.max == f64::NEG_INFINITY {
            return other;
        }
        let (hi, lo) = if self.max >= other.max {
            (self, other)
        } else {
            (other, self)
        };
        let scale = (lo.max - hi.max).exp();
        self = hi;
        self.sum += lo.sum * scale;
        for (s, o) in self.side.iter_mut().zip(lo.side) {
            *s += o * scale;
        }
        self
    }

    pub fn log_sum(&self) -> f64 {
        self.max + self.sum.ln()
    }

    /// Weighted mean of the `k`-th side value.
    pub fn mean(&self, k: usize) -> f64 {
        self.side[k] / self.sum
    }
}

/// Table of `ln n!` for `n = 0..=n_max`, built by cumulative summation.
#[derive(Debug, Clone)]
pub struct LnFactorial(Vec<f64>);

impl LnFactorial {
    pub fn new(n_max: u64) -> Self {
        let mut table = Vec::with_capacity(n_max as usize + 1);
        let mut acc = 0.0f64;
        table.push(0.0);
        for k in 1..=n_max {
            acc += (k as f64).ln();
            table.push(acc);
        }
        LnFactorial(table)
    }

    #[inline]
    pub fn get(&self, n: u64) -> f64 {
        self.0[n as usize]
    }
}

/// Brent's method on a bracket `[lo, hi]` with `f(lo)·f(hi) ≤ 0`.
pub fn brent<F>(mut f: F, lo: f64, hi: f64, xtol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoBracket {
            what: "brent",
            lo,
            hi,
        });
    }
    let (mut c, mut fc) = (b, fb);
    let (mut d, mut e) = (b - a, b - a);
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 {
            d
        } else {
            tol1.copysign(xm)
        };
        fb = f(b);
    }
    Err(Error::NoConvergence {
        what: "brent",
        iterations: max_iter,
        last_change: d.abs(),
    })
}

/// Newton's method kept inside a shrinking bracket; falls back to bisection
/// whenever the Newton step leaves the bracket or fails to halve it.
///
/// `fdf` returns the value and the derivative.
pub fn safeguarded_newton<F>(mut fdf: F, lo: f64, hi: f64, xtol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let (flo, _) = fdf(lo);
    let (fhi, _) = fdf(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NoBracket {
            what: "safeguarded newton",
            lo,
            hi,
        });
    }
    // orient so that f(xl) < 0
    let (mut xl, mut xh) = if flo < 0.0 { (lo, hi) } else { (hi, lo) };
    let mut x = 0.5 * (lo + hi);
    let mut dx_old = (hi - lo).abs();
    let mut dx = dx_old;
    let (mut fx, mut dfx) = fdf(x);
    for _ in 0..max_iter {
        let newton_out = ((x - xh) * dfx - fx) * ((x - xl) * dfx - fx) > 0.0;
        let slow = (2.0 * fx).abs() > (dx_old * dfx).abs();
        dx_old = dx;
        if newton_out || slow {
            dx = 0.5 * (xh - xl);
            x = xl + dx;
        } else {
            dx = fx / dfx;
            x -= dx;
        }
        if dx.abs() < xtol + 4.0 * f64::EPSILON * x.abs() {
            return Ok(x);
        }
        let next = fdf(x);
        fx = next.0;
        dfx = next.1;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            xl = x;
        } else {
            xh = x;
        }
    }
    Err(Error::NoConvergence {
        what: "safeguarded newton",
        iterations: max_iter,
        last_change: dx.abs(),
    })
}

/// Ordinary least-squares line `y = slope·x + intercept`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need at least two points for a line fit");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// `n` points spaced evenly in log between `lo` and `hi` (both included).
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > 0.0 && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_matches_direct_sum() {
        let xs = [-3.0, 0.5, 2.0, -700.0, 1.0];
        let mut acc = LogSumExp::<1>::new();
        for &x in &xs {
            acc.push(x, [x]);
        }
        let direct: f64 = xs.iter().map(|x| x.exp()).sum();
        assert!((acc.log_sum() - direct.ln()).abs() < 1e-14);
        let mean: f64 = xs.iter().map(|x| x * x.exp()).sum::<f64>() / direct;
        assert!((acc.mean(0) - mean).abs() < 1e-13);
    }

    #[test]
    fn merge_is_consistent_with_sequential_push() {
        let xs: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin() * 300.0).collect();
        let mut whole = LogSumExp::<0>::new();
        xs.iter().for_each(|&x| whole.push(x, []));
        let (l, r) = xs.split_at(17);
        let mut a = LogSumExp::<0>::new();
        let mut b = LogSumExp::<0>::new();
        l.iter().for_each(|&x| a.push(x, []));
        r.iter().for_each(|&x| b.push(x, []));
        assert!((a.merge(b).log_sum() - whole.log_sum()).abs() < 1e-12);
        assert_eq!(LogSumExp::<0>::new().merge(a).log_sum(), a.log_sum());
    }

    #[test]
    fn ln_factorial_small_values() {
        let t = LnFactorial::new(10);
        assert_eq!(t.get(0), 0.0);
        assert_eq!(t.get(1), 0.0);
        assert!((t.get(5) - 120f64.ln()).abs() < 1e-14);
        assert!((t.get(10) - 3628800f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn brent_finds_sqrt_two() {
        let r = brent(|x| x * x - 2.0, 0.0, 2.0, 1e-15, 100).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
        assert!(matches!(
            brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 100),
            Err(Error::NoBracket { .. })
        ));
    }

    #[test]
    fn newton_with_bracket() {
        let r = safeguarded_newton(|x| (x.cos() - x, -x.sin() - 1.0), 0.0, 1.0, 1e-15, 100)
            .unwrap();
        assert!((r - 0.739_085_133_215_160_6).abs() < 1e-14);
    }

    #[test]
    fn line_fit_recovers_exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.5];
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 * x - 2.0).collect();
        let (s, i) = fit_line(&xs, &ys);
        assert!((s - 0.5).abs() < 1e-14 && (i + 2.0).abs() < 1e-14);
    }
}
