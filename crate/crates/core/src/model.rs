//! Exact finite-size model.
//!
//! A configuration enters the Hamiltonian only through its dimer counts
//! `D = (D_A, D_B, D_AB)`, so the partition function is a triple sum over
//! count classes weighted by the number of configurations in each class.
//! Everything is done in log space.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{LnFactorial, LogSumExp};

/// Index of intra-A quantities in 3-vectors.
pub const A: usize = 0;
/// Index of intra-B quantities in 3-vectors.
pub const B: usize = 1;
/// Index of mixed A–B quantities in 3-vectors.
pub const AB: usize = 2;

/// Default upper bound on `N` for exact enumeration (the sum has O(N³) terms).
pub const DEFAULT_ENUMERATION_CAP: u64 = 2000;

/// Full parameter set of the Hamiltonian.
///
/// `h = (h_A, h_B, h_AB)`; `j[row][col]` with rows and columns ordered
/// `A, B, AB`, so `j[AB][AB]` couples mixed dimers to mixed dimers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: f64,
    pub h: [f64; 3],
    pub j: [[f64; 3]; 3],
}

impl ModelParams {
    pub fn new(alpha: f64, h: [f64; 3], j: [[f64; 3]; 3]) -> Result<Self> {
        let p = ModelParams { alpha, h, j };
        p.validate()?;
        Ok(p)
    }

    /// Only the field vector, no couplings.
    pub fn zero_coupling(alpha: f64, h: [f64; 3]) -> Result<Self> {
        Self::new(alpha, h, [[0.0; 3]; 3])
    }

    /// Only `h_AB` and `J_AB^AB` nonzero.
    pub fn mixed_only(alpha: f64, h_ab: f64, j_ab: f64) -> Result<Self> {
        let mut j = [[0.0; 3]; 3];
        j[AB][AB] = j_ab;
        Self::new(alpha, [0.0, 0.0, h_ab], j)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid("alpha", format!("must lie in (0, 1), got {}", self.alpha)));
        }
        if self.h.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("h", "entries must be finite"));
        }
        if self.j.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::invalid("J", "entries must be finite"));
        }
        Ok(())
    }

    pub fn has_coupling(&self) -> bool {
        self.j.iter().flatten().any(|&x| x != 0.0)
    }

    /// `½(J + Jᵀ)`, the matrix that actually enters the gradient of the
    /// quadratic energy.
    pub fn symmetric_coupling(&self) -> [[f64; 3]; 3] {
        let mut s = [[0.0; 3]; 3];
        for (r, row) in s.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = 0.5 * (self.j[r][c] + self.j[c][r]);
            }
        }
        s
    }

    /// The mirror image under relabelling A ↔ B.
    pub fn swapped(&self) -> Self {
        let perm = [B, A, AB];
        let mut j = [[0.0; 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                j[r][c] = self.j[perm[r]][perm[c]];
            }
        }
        ModelParams {
            alpha: 1.0 - self.alpha,
            h: [self.h[B], self.h[A], self.h[AB]],
            j,
        }
    }
}

/// Sizes of the two populations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PopulationSizes {
    pub n: u64,
    pub n_a: u64,
    pub n_b: u64,
}

impl PopulationSizes {
    pub fn new(n_a: u64, n_b: u64) -> Result<Self> {
        if n_a == 0 || n_b == 0 {
            return Err(Error::invalid("sizes", "both populations need at least one site"));
        }
        Ok(PopulationSizes {
            n: n_a + n_b,
            n_a,
            n_b,
        })
    }

    pub fn admits(&self, d: &DimerCounts) -> bool {
        2 * d.d_a + d.d_ab <= self.n_a && 2 * d.d_b + d.d_ab <= self.n_b
    }
}

/// Dimer counts of a configuration class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct DimerCounts {
    pub d_a: u64,
    pub d_b: u64,
    pub d_ab: u64,
}

impl DimerCounts {
    pub fn new(d_a: u64, d_b: u64, d_ab: u64) -> Self {
        DimerCounts { d_a, d_b, d_ab }
    }

    pub fn total(&self) -> u64 {
        self.d_a + self.d_b + self.d_ab
    }

    pub fn as_array(&self) -> [u64; 3] {
        [self.d_a, self.d_b, self.d_ab]
    }

    pub fn as_reals(&self) -> [f64; 3] {
        [self.d_a as f64, self.d_b as f64, self.d_ab as f64]
    }

    /// Monomer counts `(M_A, M_B)`, or `None` if the hard-core relations fail.
    pub fn monomers(&self, sizes: &PopulationSizes) -> Option<(u64, u64)> {
        let m_a = sizes.n_a.checked_sub(2 * self.d_a + self.d_ab)?;
        let m_b = sizes.n_b.checked_sub(2 * self.d_b + self.d_ab)?;
        Some((m_a, m_b))
    }
}

/// Split `N` sites into `N_A = round(αN)` (kept within `[1, N-1]`) and the rest.
pub fn split_sizes(n: u64, alpha: f64) -> Result<PopulationSizes> {
    if n < 2 {
        return Err(Error::invalid("N", format!("need at least 2 sites, got {n}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    let n_a = ((alpha * n as f64).round() as u64).clamp(1, n - 1);
    PopulationSizes::new(n_a, n - n_a)
}

#[inline]
fn ln_phi(lnf: &LnFactorial, sizes: &PopulationSizes, d: &DimerCounts, m_a: u64, m_b: u64) -> f64 {
    lnf.get(sizes.n_a) + lnf.get(sizes.n_b)
        - lnf.get(m_a)
        - lnf.get(m_b)
        - lnf.get(d.d_a)
        - lnf.get(d.d_b)
        - lnf.get(d.d_ab)
        - (d.d_a + d.d_b) as f64 * std::f64::consts::LN_2
}

/// Log of the number of monomer-dimer configurations with counts `d`:
/// `N_A! N_B! / (M_A! M_B! D_A! D_B! D_AB! 2^{D_A} 2^{D_B})`.
pub fn log_config_count(d: &DimerCounts, sizes: &PopulationSizes) -> Result<f64> {
    let (m_a, m_b) = d.monomers(sizes).ok_or(Error::HardCore {
        counts: d.as_array(),
        n_a: sizes.n_a,
        n_b: sizes.n_b,
    })?;
    let lnf = LnFactorial::new(sizes.n_a.max(sizes.n_b));
    Ok(ln_phi(&lnf, sizes, d, m_a, m_b))
}

#[inline]
fn quadratic(j: &[[f64; 3]; 3], v: &[f64; 3]) -> f64 {
    let mut q = 0.0;
    for r in 0..3 {
        for c in 0..3 {
            q += v[r] * j[r][c] * v[c];
        }
    }
    q
}

/// `H_N(D) = −h·D − (1/2N) (JD)·D`.
pub fn hamiltonian(d: &DimerCounts, n: u64, params: &ModelParams) -> f64 {
    let v = d.as_reals();
    let linear: f64 = params.h.iter().zip(&v).map(|(h, x)| h * x).sum();
    -linear - quadratic(&params.j, &v) / (2.0 * n as f64)
}

/// Options for the exact triple sum.
#[derive(Debug, Clone, Copy)]
pub struct EnumerationOptions {
    /// Refuse `N` above this value.
    pub cap: u64,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        EnumerationOptions {
            cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

/// Everything the exact sum produces in one pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GibbsSummary {
    pub sizes: PopulationSizes,
    pub log_z: f64,
    /// `⟨D⟩_N / N`.
    pub densities: [f64; 3],
    /// `⟨D_AB / |D|⟩_N`, with the empty configuration contributing 0.
    pub d_mix: f64,
    /// Number of admissible count classes visited.
    pub classes: u64,
}

/// Exact Gibbs summary at size `n` by enumeration over count classes.
///
/// Slices at fixed `D_A` are summed in parallel and merged in index order,
/// so the result is bit-identical for any thread count.
pub fn enumerate(n: u64, params: &ModelParams, opts: EnumerationOptions) -> Result<GibbsSummary> {
    params.validate()?;
    if n > opts.cap {
        return Err(Error::ResourceCap {
            what: "enumeration",
            n,
            cap: opts.cap,
        });
    }
    let sizes = split_sizes(n, params.alpha)?;
    let lnf = LnFactorial::new(sizes.n_a.max(sizes.n_b));
    let ln_n = (n as f64).ln();

    let slices: Vec<(LogSumExp<4>, u64)> = (0..=sizes.n_a / 2)
        .into_par_iter()
        .map(|d_a| {
            let mut acc = LogSumExp::<4>::new();
            let mut classes = 0u64;
            for d_b in 0..=sizes.n_b / 2 {
                let top = (sizes.n_a - 2 * d_a).min(sizes.n_b - 2 * d_b);
                for d_ab in 0..=top {
                    let d = DimerCounts::new(d_a, d_b, d_ab);
                    let m_a = sizes.n_a - 2 * d_a - d_ab;
                    let m_b = sizes.n_b - 2 * d_b - d_ab;
                    let total = d.total();
                    let lw = ln_phi(&lnf, &sizes, &d, m_a, m_b) - total as f64 * ln_n
                        - hamiltonian(&d, n, params);
                    let mix = if total == 0 {
                        0.0
                    } else {
                        d_ab as f64 / total as f64
                    };
                    acc.push(lw, [d_a as f64, d_b as f64, d_ab as f64, mix]);
                    classes += 1;
                }
            }
            (acc, classes)
        })
        .collect();

    let (acc, classes) = slices
        .into_iter()
        .fold((LogSumExp::<4>::new(), 0u64), |(a, c), (b, k)| (a.merge(b), c + k));

    let nf = n as f64;
    Ok(GibbsSummary {
        sizes,
        log_z: acc.log_sum(),
        densities: [acc.mean(0) / nf, acc.mean(1) / nf, acc.mean(2) / nf],
        d_mix: acc.mean(3),
        classes,
    })
}

/// `log Z_N` by exact enumeration with the default cap.
pub fn log_partition_exact(n: u64, params: &ModelParams) -> Result<f64> {
    enumerate(n, params, EnumerationOptions::default()).map(|s| s.log_z)
}

/// `⟨D⟩_N / N` by exact enumeration with the default cap.
pub fn gibbs_expected_densities(n: u64, params: &ModelParams) -> Result<[f64; 3]> {
    enumerate(n, params, EnumerationOptions::default()).map(|s| s.densities)
}

/// `⟨D_AB / |D|⟩_N`, the expected fraction of mixed dimers.
pub fn d_mix_finite(n: u64, params: &ModelParams) -> Result<f64> {
    enumerate(n, params, EnumerationOptions::default()).map(|s| s.d_mix)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free(alpha: f64) -> ModelParams {
        ModelParams::zero_coupling(alpha, [0.0; 3]).unwrap()
    }

    #[test]
    fn split_sizes_examples() {
        let s = split_sizes(16, 0.3125).unwrap();
        assert_eq!((s.n_a, s.n_b), (5, 11));
        let s = split_sizes(2, 0.5).unwrap();
        assert_eq!((s.n_a, s.n_b), (1, 1));
        let s = split_sizes(10, 0.001).unwrap();
        assert_eq!((s.n_a, s.n_b), (1, 9));
        let s = split_sizes(10, 0.999).unwrap();
        assert_eq!((s.n_a, s.n_b), (9, 1));
        assert!(split_sizes(1, 0.5).is_err());
        assert!(split_sizes(10, 1.0).is_err());
    }

    #[test]
    fn config_count_examples() {
        let s = PopulationSizes::new(2, 2).unwrap();
        assert_eq!(log_config_count(&DimerCounts::new(0, 0, 0), &s).unwrap(), 0.0);
        let v = log_config_count(&DimerCounts::new(0, 0, 1), &s).unwrap();
        assert!((v - 4f64.ln()).abs() < 1e-14);
        let v = log_config_count(&DimerCounts::new(1, 0, 0), &s).unwrap();
        assert!(v.abs() < 1e-14);
        assert!(matches!(
            log_config_count(&DimerCounts::new(1, 0, 1), &s),
            Err(Error::HardCore { .. })
        ));
    }

    /// Brute force over explicit edge sets on a tiny graph.
    #[test]
    fn config_count_matches_explicit_matchings() {
        let sizes = PopulationSizes::new(3, 4).unwrap();
        let n = sizes.n as usize;
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        let mut counts = std::collections::HashMap::<DimerCounts, u64>::new();
        for mask in 0u32..(1 << edges.len()) {
            let mut used = 0u32;
            let mut d = DimerCounts::default();
            let mut ok = true;
            for (k, &(i, j)) in edges.iter().enumerate() {
                if mask & (1 << k) == 0 {
                    continue;
                }
                if used & (1 << i) != 0 || used & (1 << j) != 0 {
                    ok = false;
                    break;
                }
                used |= (1 << i) | (1 << j);
                let in_a = |s: usize| s < sizes.n_a as usize;
                match (in_a(i), in_a(j)) {
                    (true, true) => d.d_a += 1,
                    (false, false) => d.d_b += 1,
                    _ => d.d_ab += 1,
                }
            }
            if ok {
                *counts.entry(d).or_default() += 1;
            }
        }
        for (d, c) in counts {
            let v = log_config_count(&d, &sizes).unwrap();
            assert!((v - (c as f64).ln()).abs() < 1e-12, "{d:?}: {c}");
        }
    }

    #[test]
    fn hamiltonian_examples() {
        let d = DimerCounts::new(0, 0, 2);
        assert_eq!(hamiltonian(&d, 4, &free(0.5)), 0.0);
        let p = ModelParams::zero_coupling(0.5, [0.0, 0.0, 1.0]).unwrap();
        assert_eq!(hamiltonian(&d, 4, &p), -2.0);
        let p = ModelParams::mixed_only(0.5, 0.0, 4.0).unwrap();
        assert!((hamiltonian(&d, 4, &p) + 2.0).abs() < 1e-15);
    }

    #[test]
    fn partition_function_hand_enumerations() {
        assert!((log_partition_exact(2, &free(0.5)).unwrap() - 1.5f64.ln()).abs() < 1e-14);
        // empty, AA, BB, 4×AB singles, AA+BB, 2×(AB,AB): 1 + 1/4 + 1/4 + 1 + 1/16 + 1/8
        assert!((log_partition_exact(4, &free(0.5)).unwrap() - 2.6875f64.ln()).abs() < 1e-14);
        for h_ab in [-3.0, -0.2, 0.0, 1.7] {
            let p = ModelParams::zero_coupling(0.5, [0.0, 0.0, h_ab]).unwrap();
            let want = (1.0 + h_ab.exp() / 2.0).ln();
            assert!((log_partition_exact(2, &p).unwrap() - want).abs() < 1e-14);
        }
    }

    #[test]
    fn densities_and_mixing_hand_enumerations() {
        let d = gibbs_expected_densities(2, &free(0.5)).unwrap();
        assert!(d[A].abs() < 1e-15 && d[B].abs() < 1e-15);
        assert!((d[AB] - 1.0 / 6.0).abs() < 1e-14);
        assert!((d_mix_finite(2, &free(0.5)).unwrap() - 1.0 / 3.0).abs() < 1e-14);
        assert!((d_mix_finite(4, &free(0.5)).unwrap() - 1.125 / 2.6875).abs() < 1e-14);

        let p = ModelParams::zero_coupling(0.5, [-50.0; 3]).unwrap();
        let d = gibbs_expected_densities(20, &p).unwrap();
        assert!(d.iter().all(|&x| x < 1e-20));
    }

    #[test]
    fn d_mix_rises_with_mixed_field_when_intra_suppressed() {
        let vals: Vec<f64> = [-2.0, -1.0, 0.0, 1.0]
            .iter()
            .map(|&h| {
                let p = ModelParams::zero_coupling(0.4, [-50.0, -50.0, h]).unwrap();
                d_mix_finite(30, &p).unwrap()
            })
            .collect();
        assert!(vals.iter().all(|&v| v > 0.0 && v <= 1.0));
        assert!(vals.windows(2).all(|w| w[0] < w[1]), "{vals:?}");
        let p = ModelParams::zero_coupling(0.4, [0.0, 0.0, 0.0]).unwrap();
        let base = d_mix_finite(30, &p).unwrap();
        let hi = ModelParams::zero_coupling(0.4, [0.0, 0.0, 1.0]).unwrap();
        assert!(d_mix_finite(30, &hi).unwrap() > base);
    }

    #[test]
    fn cap_is_enforced() {
        let opts = EnumerationOptions { cap: 10 };
        assert!(matches!(
            enumerate(11, &free(0.5), opts),
            Err(Error::ResourceCap { .. })
        ));
        assert!(enumerate(10, &free(0.5), opts).is_ok());
    }

    #[test]
    fn swapped_params_round_trip() {
        let p = ModelParams::new(
            0.25,
            [0.1, -0.2, 0.3],
            [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 9.0]],
        )
        .unwrap();
        assert_eq!(p.swapped().swapped(), p);
        assert_eq!(p.swapped().j[A][A], 5.0);
        assert_eq!(p.swapped().j[A][AB], 6.0);
    }
}
