//! Choosing `(λ, τ)` for ADDIS*.
//!
//! If every p-value has CDF `F`, the ADDIS* level is governed by how much
//! probability `F` puts on the selected-but-not-candidate band `(λ, τ]`
//! relative to its width. Writing `λ = θτ`, the objective is
//!
//! ```text
//! g∘F(θ, τ) = (F(τ) − F(θτ)) / (τ (1 − θ)),
//! ```
//!
//! and smaller is better. Under the Gaussian model a p-value `Φ(−Z)` with
//! `Z ~ N(μ, 1)` satisfies `P(p ≤ x) = Φ(Φ⁻¹(x) + μ)`, so `F` is a two-point
//! mixture of such curves.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::gamma::GammaSequence;
use crate::normal::{cdf_unchecked, quantile_unchecked};
use crate::online::{AlgorithmKind, OnlineAlgorithm};
use crate::simulation::{
    csv_error, io_error, sample_stream_with, trial_rng, GaussianModelConfig, MeanEstimate, TrialMetrics,
};
use crate::types::AlgorithmConfig;

/// Default grid resolution per axis.
pub const DEFAULT_GRID: usize = 50;

/// Relative gap below which two surface values count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixtureCdf {
    pub pi_a: f64,
    pub mu_n: f64,
    pub mu_a: f64,
}

impl MixtureCdf {
    pub fn new(pi_a: f64, mu_n: f64, mu_a: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&pi_a) {
            return Err(invalid(format!("pi_A must lie in [0, 1], got {pi_a}")));
        }
        if !mu_n.is_finite() || !mu_a.is_finite() {
            return Err(invalid("means must be finite"));
        }
        Ok(Self { pi_a, mu_n, mu_a })
    }

    pub fn from_model(model: &GaussianModelConfig) -> Self {
        Self { pi_a: model.pi_a, mu_n: model.mu_n, mu_a: model.mu_a }
    }

    /// `F(x)`, for `x ∈ [0, 1]`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(invalid(format!("F is defined on [0, 1], got {x}")));
        }
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let q = quantile_unchecked(x);
        (1.0 - self.pi_a) * cdf_unchecked(q + self.mu_n) + self.pi_a * cdf_unchecked(q + self.mu_a)
    }
}

/// `(F(τ) − F(θτ)) / (τ(1 − θ))` on the open square.
pub fn g_of_f(f: &MixtureCdf, theta: f64, tau: f64) -> Result<f64> {
    let open = |v: f64| v > 0.0 && v < 1.0;
    if !open(theta) || !open(tau) {
        return Err(invalid(format!("theta and tau must lie in (0, 1), got theta={theta}, tau={tau}")));
    }
    Ok(g_unchecked(f, theta, tau))
}

fn g_unchecked(f: &MixtureCdf, theta: f64, tau: f64) -> f64 {
    (f.eval_unchecked(tau) - f.eval_unchecked(theta * tau)) / (tau * (1.0 - theta))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneSurface {
    pub cdf: MixtureCdf,
    /// Shared by both axes: `k / (n + 1)` for `k = 1..=n`.
    pub grid: Vec<f64>,
    /// `values[i][j] = g∘F(grid[i], grid[j])`, `i` over θ, `j` over τ.
    pub values: Vec<Vec<f64>>,
    pub theta_star: f64,
    pub tau_star: f64,
    /// `θ* τ*`.
    pub lambda_star: f64,
    pub min_value: f64,
    /// Empirical ADDIS* power on the same grid, if computed.
    pub empirical_power: Option<Vec<Vec<f64>>>,
}

impl TuneSurface {
    /// True when every value matches the minimum up to rounding.
    pub fn is_flat(&self) -> bool {
        self.values.iter().flatten().all(|&v| v - self.min_value <= 1e-9 * self.min_value.abs().max(1.0))
    }

    fn index_of(&self, v: f64) -> usize {
        self.grid.iter().position(|&g| g == v).expect("argmin lies on the grid")
    }

    /// Grid indices `(i, j)` of the argmin.
    pub fn argmin_index(&self) -> (usize, usize) {
        (self.index_of(self.theta_star), self.index_of(self.tau_star))
    }

    /// Empirical power at the argmin and the largest value over the grid.
    pub fn power_at_argmin_and_max(&self) -> Option<(f64, f64)> {
        let power = self.empirical_power.as_ref()?;
        let (i, j) = self.argmin_index();
        let max = power.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
        Some((power[i][j], max))
    }

    /// `theta,tau,g_of_F[,empirical_power]`, θ-major, after a `# fdrlab-v1` line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", crate::cli::FORMAT_TAG).map_err(io_error)?;
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["theta", "tau", "g_of_F"];
        if self.empirical_power.is_some() {
            header.push("empirical_power");
        }
        w.write_record(&header).map_err(csv_error)?;
        for (i, &theta) in self.grid.iter().enumerate() {
            for (j, &tau) in self.grid.iter().enumerate() {
                let mut row = vec![theta.to_string(), tau.to_string(), self.values[i][j].to_string()];
                if let Some(p) = &self.empirical_power {
                    row.push(p[i][j].to_string());
                }
                w.write_record(&row).map_err(csv_error)?;
            }
        }
        w.flush().map_err(io_error)?;
        Ok(())
    }
}

/// Midpoint grid `k / (n + 1)`, `k = 1..=n`.
pub fn open_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|k| k as f64 / (n + 1) as f64).collect()
}

/// Evaluates `g∘F` on the `grid_size × grid_size` open grid and records its argmin.
///
/// Ties (within a relative `1e-12`) go to the smallest `τ`, then the smallest `θ`.
pub fn tune_surface(f: &MixtureCdf, grid_size: usize) -> Result<TuneSurface> {
    if grid_size < 2 {
        return Err(invalid(format!("grid size must be at least 2, got {grid_size}")));
    }
    let grid = open_grid(grid_size);
    let values: Vec<Vec<f64>> =
        grid.iter().map(|&theta| grid.iter().map(|&tau| g_unchecked(f, theta, tau)).collect()).collect();
    let mut best = (0usize, 0usize);
    for j in 0..grid_size {
        for i in 0..grid_size {
            let incumbent = values[best.0][best.1];
            if values[i][j] < incumbent - TIE_TOLERANCE * incumbent.abs() {
                best = (i, j);
            }
        }
    }
    let (theta_star, tau_star) = (grid[best.0], grid[best.1]);
    Ok(TuneSurface {
        cdf: *f,
        min_value: values[best.0][best.1],
        grid,
        values,
        theta_star,
        tau_star,
        lambda_star: theta_star * tau_star,
        empirical_power: None,
    })
}

/// ADDIS* power for every `(θ, τ)` cell, with `λ = θτ` and the remaining
/// parameters from `base`. Every cell sees the same `n_trials` streams.
pub fn empirical_power_surface(
    model: &GaussianModelConfig,
    base: &AlgorithmConfig,
    grid: &[f64],
    n_trials: usize,
) -> Result<Vec<Vec<f64>>> {
    model.validate()?;
    if n_trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    let gamma = GammaSequence::from_spec(base.gamma)?;
    let streams: Vec<_> =
        (0..n_trials as u64).map(|t| sample_stream_with(model, &mut trial_rng(model.seed, t))).collect();
    let cells: Vec<(usize, usize)> = (0..grid.len()).flat_map(|i| (0..grid.len()).map(move |j| (i, j))).collect();
    let powers: Vec<f64> = cells
        .par_iter()
        .map(|&(i, j)| {
            let (theta, tau) = (grid[i], grid[j]);
            let cfg = AlgorithmConfig { lambda: theta * tau, tau, ..*base };
            let mut per_trial = Vec::with_capacity(streams.len());
            for s in &streams {
                let mut alg = OnlineAlgorithm::with_gamma(AlgorithmKind::Addis, cfg, gamma.clone())?;
                alg.run(&s.pvalues)?;
                let rejected: Vec<bool> = alg.log().iter().map(|r| r.rejected).collect();
                if let Some(p) = TrialMetrics::from_rejections(&rejected, &s.is_null)?.power {
                    per_trial.push(p);
                }
            }
            Ok(MeanEstimate::from_samples(per_trial).mean)
        })
        .collect::<Result<_>>()?;
    Ok(powers.chunks(grid.len()).map(<[f64]>::to_vec).collect())
}

/// Attaches the empirical ADDIS* power surface of `model` to `surface`.
pub fn with_empirical_power(
    mut surface: TuneSurface,
    model: &GaussianModelConfig,
    base: &AlgorithmConfig,
    n_trials: usize,
) -> Result<TuneSurface> {
    surface.empirical_power = Some(empirical_power_surface(model, base, &surface.grid, n_trials)?);
    Ok(surface)
}

/// Fraction of `n` sampled p-values at or below `x`, with its binomial standard error.
pub fn empirical_cdf(model: &GaussianModelConfig, x: f64, n: usize) -> Result<MeanEstimate> {
    let sized = GaussianModelConfig { m: n, ..*model };
    sized.validate()?;
    let stream = sample_stream_with(&sized, &mut trial_rng(model.seed, 0));
    let hits = stream.pvalues.iter().filter(|&&p| p <= x).count() as f64 / n as f64;
    Ok(MeanEstimate { mean: hits, stderr: (hits * (1.0 - hits) / n as f64).sqrt(), count: n })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_cdf_is_identity() {
        let f = MixtureCdf::new(0.0, 0.0, 3.0).unwrap();
        for k in 0..=100 {
            let x = k as f64 / 100.0;
            assert!((f.eval(x).unwrap() - x).abs() < 1e-14);
        }
        assert!(f.eval(-0.1).is_err());
        assert!(f.eval(1.1).is_err());
    }

    #[test]
    fn cdf_matches_sampling() {
        let f = MixtureCdf::new(0.2, -1.0, 3.0).unwrap();
        let model = GaussianModelConfig::new(1, 0.2, -1.0, 3.0, 17).unwrap();
        let emp = empirical_cdf(&model, 0.5, 1_000_000).unwrap();
        assert!((emp.mean - f.eval(0.5).unwrap()).abs() < 3.0 * emp.stderr);
    }

    #[test]
    fn cdf_nondecreasing() {
        let f = MixtureCdf::new(0.3, -1.5, 2.0).unwrap();
        let mut prev = 0.0;
        for k in 0..=10_000 {
            let v = f.eval(k as f64 / 10_000.0).unwrap();
            assert!(v >= prev);
            prev = v;
        }
        assert_eq!(prev, 1.0);
    }

    #[test]
    fn objective_examples() {
        let uniform = MixtureCdf::new(0.0, 0.0, 3.0).unwrap();
        assert!((g_of_f(&uniform, 0.3, 0.7).unwrap() - 1.0).abs() < 1e-12);
        let conservative = MixtureCdf::new(0.0, -1.0, 3.0).unwrap();
        assert!(g_of_f(&conservative, 0.5, 0.5).unwrap() < 1.0);
        for bad in [(0.0, 0.5), (1.0, 0.5), (0.5, 0.0), (0.5, 1.0)] {
            assert!(g_of_f(&uniform, bad.0, bad.1).is_err());
        }
    }

    #[test]
    fn flat_surface_picks_corner() {
        let s = tune_surface(&MixtureCdf::new(0.0, 0.0, 3.0).unwrap(), 20).unwrap();
        assert!(s.is_flat());
        assert_eq!(s.argmin_index(), (0, 0));
        assert!(tune_surface(&MixtureCdf::new(0.0, 0.0, 3.0).unwrap(), 1).is_err());
    }

    #[test]
    fn surface_nonnegative_and_argmin_is_minimum() {
        let f = MixtureCdf::new(0.2, -1.0, 3.0).unwrap();
        let s = tune_surface(&f, 30).unwrap();
        let min = s.values.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        assert!(s.values.iter().flatten().all(|&v| v >= 0.0));
        assert!(s.min_value <= min * (1.0 + 1e-12));
        assert_eq!(s.lambda_star, s.theta_star * s.tau_star);
    }

    #[test]
    fn matches_direct_lambda_tau_minimization() {
        let f = MixtureCdf::new(0.3, -0.5, 2.0).unwrap();
        let s = tune_surface(&f, 25).unwrap();
        for (i, &theta) in s.grid.iter().enumerate() {
            for (j, &tau) in s.grid.iter().enumerate() {
                let lambda = theta * tau;
                let direct = (f.eval(tau).unwrap() - f.eval(lambda).unwrap()) / (tau - lambda);
                assert!((direct - s.values[i][j]).abs() <= 1e-12 * direct.abs().max(1.0));
            }
        }
    }

    /// The mixture density is smallest where conservative nulls thin out, so
    /// the band average is minimized by the narrowest band: θ at the top of
    /// the grid, τ in the interior.
    #[test]
    fn appendix_configurations_push_theta_to_grid_edge() {
        for mu_n in [-0.5, -1.0] {
            for mu_a in [2.0, 3.0] {
                for pi_a in [0.2, 0.3] {
                    let s = tune_surface(&MixtureCdf::new(pi_a, mu_n, mu_a).unwrap(), DEFAULT_GRID).unwrap();
                    assert!(s.theta_star > 0.85, "theta* = {}", s.theta_star);
                    assert!(s.tau_star > 0.1 && s.tau_star < 0.35, "tau* = {}", s.tau_star);
                }
            }
        }
    }

    #[test]
    fn empirical_surface_is_deterministic() {
        let model = GaussianModelConfig::new(200, 0.2, -1.0, 3.0, 3).unwrap();
        let base = AlgorithmConfig::addis_default();
        let grid = open_grid(4);
        let a = empirical_power_surface(&model, &base, &grid, 5).unwrap();
        let b = empirical_power_surface(&model, &base, &grid, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
        assert!(a.iter().flatten().all(|&p| (0.0..=1.0).contains(&p)));
    }

    #[test]
    fn csv_has_optional_power_column() {
        let f = MixtureCdf::new(0.2, -1.0, 3.0).unwrap();
        let s = tune_surface(&f, 3).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(1), Some("theta,tau,g_of_F"));
        assert_eq!(text.lines().count(), 2 + 9);
    }
}
