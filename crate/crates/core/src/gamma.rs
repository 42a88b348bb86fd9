//! Nonnegative, nonincreasing, unit-sum weight sequences `{γ_j}_{j≥0}`.
//!
//! Two families are provided: the power family `γ_j ∝ (j+1)^{-s}` and the
//! Gaussian-optimal sequence used by LORD-type procedures,
//! `γ_j ∝ log(max(j+1, 2)) / ((j+1) e^{√log(j+1)})`.
//!
//! Normalizers are exact series sums: an explicit partial sum followed by an
//! Euler–Maclaurin tail (closed-form integral plus boundary corrections), so
//! the weights sum to one regardless of how long a stream runs.

use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::types::GammaSpec;

/// Terms summed explicitly before the analytic tail takes over.
const POWER_PARTIAL_TERMS: usize = 10_000;
const LORD_PARTIAL_TERMS: usize = 100_000;

/// Weights tabulated eagerly on construction; beyond this the formula is evaluated directly.
pub const DEFAULT_HORIZON: usize = 4_096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaKind {
    Power { exponent: f64 },
    LordGaussian,
}

#[derive(Debug, Clone)]
pub struct GammaSequence {
    kind: GammaKind,
    normalizer: f64,
    table: Arc<[f64]>,
}

impl GammaSequence {
    /// `γ_j = (j+1)^{-s} / ζ(s)`.
    pub fn power(exponent: f64) -> Result<Self> {
        if !(exponent > 1.0) || !exponent.is_finite() {
            return Err(invalid(format!("power gamma needs exponent > 1, got {exponent}")));
        }
        let kind = GammaKind::Power { exponent };
        Ok(Self::build(kind, power_normalizer(exponent)))
    }

    pub fn lord() -> Self {
        Self::build(GammaKind::LordGaussian, lord_normalizer())
    }

    pub fn from_spec(spec: GammaSpec) -> Result<Self> {
        match spec {
            GammaSpec::Power(s) => Self::power(s),
            GammaSpec::Lord => Ok(Self::lord()),
        }
    }

    fn build(kind: GammaKind, normalizer: f64) -> Self {
        let mut seq = Self { kind, normalizer, table: Arc::from(Vec::new()) };
        seq.ensure_horizon(DEFAULT_HORIZON);
        seq
    }

    /// Tabulates weights up to (excluding) `horizon`. Values already handed out never change.
    pub fn ensure_horizon(&mut self, horizon: usize) {
        if horizon <= self.table.len() {
            return;
        }
        let values: Vec<f64> = (0..horizon).map(|j| self.evaluate(j)).collect();
        self.table = Arc::from(values);
    }

    pub fn horizon(&self) -> usize {
        self.table.len()
    }

    pub fn kind(&self) -> GammaKind {
        self.kind
    }

    /// The series normalizer `Z = Σ_{j≥0} term(j)`.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    /// `γ_j`.
    #[inline]
    pub fn value(&self, j: usize) -> f64 {
        match self.table.get(j) {
            Some(&v) => v,
            None => self.evaluate(j),
        }
    }

    /// Unnormalized weight of index `j`.
    pub fn term(&self, j: usize) -> f64 {
        match self.kind {
            GammaKind::Power { exponent } => power_term((j + 1) as f64, exponent),
            GammaKind::LordGaussian => lord_term((j + 1) as f64),
        }
    }

    fn evaluate(&self, j: usize) -> f64 {
        self.term(j) / self.normalizer
    }

    /// `Σ_{j ≥ n} γ_j`, from the analytic tail.
    pub fn tail_mass(&self, n: usize) -> f64 {
        let start = (n + 1) as f64;
        let tail = match self.kind {
            GammaKind::Power { exponent } => power_tail(start, exponent),
            GammaKind::LordGaussian if n == 0 => return 1.0,
            GammaKind::LordGaussian => lord_tail(start),
        };
        tail / self.normalizer
    }
}

#[inline]
fn power_term(x: f64, s: f64) -> f64 {
    x.powf(-s)
}

/// `Σ_{k ≥ n} k^{-s}` by Euler–Maclaurin.
fn power_tail(n: f64, s: f64) -> f64 {
    let integral = n.powf(1.0 - s) / (s - 1.0);
    let f = n.powf(-s);
    let d1 = -s * n.powf(-s - 1.0);
    let d3 = -s * (s + 1.0) * (s + 2.0) * n.powf(-s - 3.0);
    integral + f / 2.0 - d1 / 12.0 + d3 / 720.0
}

fn power_normalizer(s: f64) -> f64 {
    let partial: f64 = (1..POWER_PARTIAL_TERMS).rev().map(|k| power_term(k as f64, s)).sum();
    partial + power_tail(POWER_PARTIAL_TERMS as f64, s)
}

/// `log(max(x, 2)) / (x e^{√log x})` for `x ≥ 1`.
#[inline]
fn lord_term(x: f64) -> f64 {
    let log_x = x.ln();
    x.max(2.0).ln() / (x * log_x.sqrt().exp())
}

/// `Σ_{k ≥ n} term(k)` for `n ≥ 2`, by Euler–Maclaurin.
///
/// With `v = √ln x`, `∫_n^∞ ln x / (x e^{√ln x}) dx = 2 e^{-v} (v³ + 3v² + 6v + 6)`.
fn lord_tail(n: f64) -> f64 {
    let v = n.ln().sqrt();
    let ev = (-v).exp();
    let integral = 2.0 * ev * (v * v * v + 3.0 * v * v + 6.0 * v + 6.0);
    let f = lord_term(n);
    let d1 = ev * (1.0 - v / 2.0 - v * v) / (n * n);
    integral + f / 2.0 - d1 / 12.0
}

fn lord_normalizer() -> f64 {
    let partial: f64 = (1..LORD_PARTIAL_TERMS).rev().map(|k| lord_term(k as f64)).sum();
    partial + lord_tail(LORD_PARTIAL_TERMS as f64)
}
