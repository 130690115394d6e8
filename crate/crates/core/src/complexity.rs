//! The four complexity measures of a network class: input size `s_x`, noise
//! size `s_{y|x}`, envelope size `w_F` and Rademacher complexity `c_F`.
//!
//! `s_x` and `s_{y|x}` are plug-in sample estimates. The suprema over the
//! class in `w_F` and `c_F` are intractable, so they are approximated from
//! below by multi-start projected gradient ascent and paired with the
//! closed-form upper bounds
//!
//! ```text
//! c_F ≤ 3 b^{l+1} √(l+1) s_x / √n        w_F ≤ 4 b^{l+1} l s_x
//! ```

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::network::{Architecture, ForwardCache, Matrix, NetworkParams, OracleNetwork};
use crate::rng::{self, Rng as StreamRng};

/// Budgets for the Monte Carlo estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ComplexityConfig {
    /// Sign draws for the Rademacher estimate.
    pub mc_reps: usize,
    /// Input draws for the envelope estimate.
    pub envelope_samples: usize,
    /// Total ascent steps per supremum, split evenly over `ascent_starts`.
    pub ascent_budget: usize,
    pub ascent_starts: usize,
    /// Ascent step length as a multiple of the ball radius.
    pub step_factor: f64,
}

impl Default for ComplexityConfig {
    fn default() -> Self {
        Self { mc_reps: 200, envelope_samples: 64, ascent_budget: 800, ascent_starts: 8, step_factor: 0.05 }
    }
}

impl ComplexityConfig {
    fn ascent(&self) -> Ascent {
        let starts = self.ascent_starts.max(1);
        Ascent { starts, steps: (self.ascent_budget / starts).max(1), step_factor: self.step_factor }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub s_x_hat: f64,
    pub s_y_given_x_hat: f64,
    pub rademacher_estimate: f64,
    /// Standard error of `rademacher_estimate` over the sign draws.
    pub rademacher_std_error: f64,
    pub rademacher_upper: f64,
    pub envelope_estimate: f64,
    pub envelope_std_error: f64,
    pub envelope_upper: f64,
    pub ball_radius: f64,
    pub depth: usize,
    pub n: usize,
    pub mc_reps: usize,
    pub envelope_samples: usize,
    pub ascent_budget: usize,
    pub seed: u64,
}

impl ComplexityReport {
    /// Whether both lower estimates stay below their upper bounds, allowing a
    /// relative `slack`.
    pub fn dominance_holds(&self, slack: f64) -> bool {
        self.rademacher_estimate <= self.rademacher_upper * (1.0 + slack)
            && self.envelope_estimate <= self.envelope_upper * (1.0 + slack)
    }
}

/// `sqrt((1/n) Σ ‖x_i‖²)`.
pub fn estimate_s_x(data: &Dataset) -> Result<f64> {
    data.ensure_nonempty()?;
    let total: f64 = data.xs_flat().iter().map(|v| v * v).sum();
    Ok((total / data.len() as f64).sqrt())
}

/// `sqrt((1/n) Σ (y_i - f*(x_i))²)`.
pub fn estimate_s_y_given_x(data: &Dataset, oracle: &OracleNetwork) -> Result<f64> {
    data.ensure_nonempty()?;
    if oracle.input_dim() != data.dim() {
        return Err(Error::Shape(format!(
            "oracle takes {} inputs but the data has {} columns",
            oracle.input_dim(),
            data.dim()
        )));
    }
    let mut cache = ForwardCache::default();
    let total: f64 = data
        .rows()
        .map(|(x, y)| {
            let r = y - oracle.params().forward_cached(x, &mut cache);
            r * r
        })
        .sum();
    Ok((total / data.len() as f64).sqrt())
}

/// `3 b^{l+1} √(l+1) s_x / √n`.
pub fn rademacher_upper_bound(b: f64, l: usize, s_x: f64, n: usize) -> f64 {
    let l1 = (l + 1) as f64;
    3.0 * b.powi(l as i32 + 1) * l1.sqrt() * s_x / (n as f64).sqrt()
}

/// `4 b^{l+1} l s_x`.
pub fn envelope_upper_bound(b: f64, l: usize, s_x: f64) -> f64 {
    4.0 * b.powi(l as i32 + 1) * l as f64 * s_x
}

#[derive(Debug, Clone, Copy)]
struct Ascent {
    starts: usize,
    steps: usize,
    step_factor: f64,
}

/// Random weights with every layer on the sphere of radius `b`.
fn random_on_sphere(arch: &Architecture, b: f64, rng: &mut StreamRng) -> Result<NetworkParams> {
    let mut p = NetworkParams::zeros(arch.clone(), b)?;
    if b == 0.0 {
        return Ok(p);
    }
    for layer in p.layers_mut() {
        for v in layer.data_mut() {
            *v = rng.random_range(-1.0..=1.0);
        }
        let norm = layer.frobenius_norm();
        if norm > 0.0 {
            layer.scale(b / norm);
        }
    }
    p.project_in_place();
    Ok(p)
}

/// Maximizes `|objective(Θ)|` over the ball. `eval` writes the gradient of
/// the signed objective into its buffer and returns the objective value.
fn maximize_abs<F>(arch: &Architecture, b: f64, ascent: Ascent, rng: &mut StreamRng, mut eval: F) -> Result<f64>
where
    F: FnMut(&NetworkParams, &mut [Matrix]) -> f64,
{
    if b == 0.0 {
        let zero = NetworkParams::zeros(arch.clone(), 0.0)?;
        let mut grads = zero.zero_like();
        return Ok(eval(&zero, &mut grads).abs());
    }
    let step = ascent.step_factor * b;
    let mut best = 0.0f64;
    for _ in 0..ascent.starts {
        let mut params = random_on_sphere(arch, b, rng)?;
        let mut grads = params.zero_like();
        for it in 0..=ascent.steps {
            let value = eval(&params, &mut grads);
            best = best.max(value.abs());
            if it == ascent.steps {
                break;
            }
            let sign = if value < 0.0 { -1.0 } else { 1.0 };
            // normalized per-layer steps keep the step length independent of
            // the input scale
            for (layer, g) in params.layers_mut().iter_mut().zip(&grads) {
                let gn = g.frobenius_norm();
                if gn > 0.0 {
                    let alpha = sign * step / gn;
                    for (w, &d) in layer.data_mut().iter_mut().zip(g.data()) {
                        *w += alpha * d;
                    }
                }
            }
            params.project_in_place();
        }
    }
    Ok(best)
}

fn zero_grads(grads: &mut [Matrix]) {
    for g in grads {
        g.data_mut().iter_mut().for_each(|v| *v = 0.0);
    }
}

fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Monte Carlo lower estimate of the conditional Rademacher complexity
/// `E_r sup_Θ |(1/n) Σ r_i f_Θ(x_i)|` on the given inputs, with its standard
/// error over sign draws.
pub fn estimate_rademacher_with(
    data: &Dataset,
    arch: &Architecture,
    ball_radius: f64,
    cfg: &ComplexityConfig,
    seed: u64,
) -> Result<(f64, f64)> {
    data.ensure_nonempty()?;
    if cfg.mc_reps == 0 {
        return Err(Error::InvalidInput("mc_reps must be at least 1".into()));
    }
    if arch.input_dim() != data.dim() {
        return Err(Error::Shape(format!("architecture {arch} does not match data with {} columns", data.dim())));
    }
    let ascent = cfg.ascent();
    let n = data.len();
    let sups = (0..cfg.mc_reps)
        .into_par_iter()
        .map(|rep| {
            let mut r = rng::stream(seed, rep as u64);
            let weights: Vec<f64> = (0..n).map(|_| if r.random::<bool>() { 1.0 } else { -1.0 } / n as f64).collect();
            let mut cache = ForwardCache::default();
            maximize_abs(arch, ball_radius, ascent, &mut r, |p, grads| {
                zero_grads(grads);
                let mut value = 0.0;
                for (i, &w) in weights.iter().enumerate() {
                    value += w * p.forward_cached(data.x(i), &mut cache);
                    p.backward_accumulate(&mut cache, w, grads);
                }
                value
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(mean_and_std_error(&sups))
}

/// [`estimate_rademacher_with`] using the default budget split
/// (8 starts, `ascent_budget / 8` steps each).
pub fn estimate_rademacher(
    data: &Dataset,
    arch: &Architecture,
    ball_radius: f64,
    mc_reps: usize,
    ascent_budget: usize,
    seed: u64,
) -> Result<f64> {
    let cfg = ComplexityConfig { mc_reps, ascent_budget, ..Default::default() };
    Ok(estimate_rademacher_with(data, arch, ball_radius, &cfg, seed)?.0)
}

/// Lower estimate of `w_F = sqrt(E sup_Θ |f_Θ(x) - f*(x)|²)` over inputs
/// resampled from `data`, with a delta-method standard error.
pub fn estimate_envelope_with(
    data: &Dataset,
    oracle: &OracleNetwork,
    cfg: &ComplexityConfig,
    seed: u64,
) -> Result<(f64, f64)> {
    data.ensure_nonempty()?;
    if cfg.envelope_samples == 0 {
        return Err(Error::InvalidInput("envelope_samples must be at least 1".into()));
    }
    if oracle.input_dim() != data.dim() {
        return Err(Error::Shape("oracle does not match the data dimension".into()));
    }
    let arch = oracle.params().architecture().clone();
    let b = oracle.params().ball_radius();
    let ascent = cfg.ascent();
    let sq = (0..cfg.envelope_samples)
        .into_par_iter()
        .map(|k| {
            let mut r = rng::stream(seed, (1u64 << 32) + k as u64);
            let x = data.x(r.random_range(0..data.len()));
            let target = oracle.forward(x)?;
            let mut cache = ForwardCache::default();
            let sup = maximize_abs(&arch, b, ascent, &mut r, |p, grads| {
                zero_grads(grads);
                let diff = p.forward_cached(x, &mut cache) - target;
                p.backward_accumulate(&mut cache, 1.0, grads);
                diff
            })?;
            Ok(sup * sup)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean_sq, se_sq) = mean_and_std_error(&sq);
    let estimate = mean_sq.sqrt();
    let se = if estimate > 0.0 { se_sq / (2.0 * estimate) } else { 0.0 };
    Ok((estimate, se))
}

pub fn estimate_envelope(
    data: &Dataset,
    oracle: &OracleNetwork,
    mc_samples: usize,
    ascent_budget: usize,
    seed: u64,
) -> Result<f64> {
    let cfg = ComplexityConfig { envelope_samples: mc_samples, ascent_budget, ..Default::default() };
    Ok(estimate_envelope_with(data, oracle, &cfg, seed)?.0)
}

/// All four measures for the class of `oracle`'s architecture and ball. The
/// upper bounds are evaluated at the plug-in `s_x`.
pub fn complexity_report(
    data: &Dataset,
    oracle: &OracleNetwork,
    cfg: &ComplexityConfig,
    seed: u64,
) -> Result<ComplexityReport> {
    let arch = oracle.params().architecture();
    let b = oracle.params().ball_radius();
    let l = arch.depth();
    let s_x = estimate_s_x(data)?;
    let s_y = estimate_s_y_given_x(data, oracle)?;
    let (rad, rad_se) = estimate_rademacher_with(data, arch, b, cfg, rng::derive_seed(seed, 0))?;
    let (env, env_se) = estimate_envelope_with(data, oracle, cfg, rng::derive_seed(seed, 1))?;
    Ok(ComplexityReport {
        s_x_hat: s_x,
        s_y_given_x_hat: s_y,
        rademacher_estimate: rad,
        rademacher_std_error: rad_se,
        rademacher_upper: rademacher_upper_bound(b, l, s_x, data.len()),
        envelope_estimate: env,
        envelope_std_error: env_se,
        envelope_upper: envelope_upper_bound(b, l, s_x),
        ball_radius: b,
        depth: l,
        n: data.len(),
        mc_reps: cfg.mc_reps,
        envelope_samples: cfg.envelope_samples,
        ascent_budget: cfg.ascent_budget,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{sample_contaminated, sample_oracle, ContaminationConfig};

    fn small_cfg() -> ComplexityConfig {
        ComplexityConfig { mc_reps: 20, envelope_samples: 16, ascent_budget: 240, ..Default::default() }
    }

    fn gaussian(d: usize, n: usize, seed: u64, oracle: &OracleNetwork) -> Dataset {
        sample_contaminated(&ContaminationConfig::log_normal(d, 1.0, 0.0, 0.0, 1.0), oracle, n, seed).unwrap()
    }

    #[test]
    fn s_x_examples() {
        let zeros = Dataset::from_rows(vec![vec![0.0, 0.0]; 5], vec![1.0; 5]).unwrap();
        assert_eq!(estimate_s_x(&zeros).unwrap(), 0.0);
        let one = Dataset::from_rows(vec![vec![3.0, 4.0]], vec![0.0]).unwrap();
        assert_eq!(estimate_s_x(&one).unwrap(), 5.0);
        let empty = Dataset::from_rows(vec![], vec![]).unwrap();
        assert!(matches!(estimate_s_x(&empty), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn s_x_scales_linearly() {
        let oracle = OracleNetwork::zero("3:2".parse().unwrap(), 1.0).unwrap();
        let ds = gaussian(3, 100, 1, &oracle);
        let s = estimate_s_x(&ds).unwrap();
        for c in [0.5, 2.0, 8.0] {
            let scaled = estimate_s_x(&ds.scale_inputs(c)).unwrap();
            assert!((scaled - c * s).abs() <= 1e-12 * c * s);
        }
    }

    #[test]
    fn s_y_given_x_examples() {
        let oracle = sample_oracle(&"2:3".parse().unwrap(), 1.0, 3).unwrap();
        let noiseless =
            sample_contaminated(&ContaminationConfig::log_normal(2, 1.0, 0.0, 0.0, 0.0), &oracle, 50, 2).unwrap();
        assert_eq!(estimate_s_y_given_x(&noiseless, &oracle).unwrap(), 0.0);

        let xs: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, 1.0]).collect();
        let ys: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| oracle.forward(x).unwrap() + if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let ds = Dataset::from_rows(xs, ys).unwrap();
        assert!((estimate_s_y_given_x(&ds, &oracle).unwrap() - 1.0).abs() < 1e-12);

        let wrong = OracleNetwork::zero("3:3".parse().unwrap(), 1.0).unwrap();
        assert!(matches!(estimate_s_y_given_x(&ds, &wrong), Err(Error::Shape(_))));
    }

    #[test]
    fn closed_form_bounds() {
        assert!((rademacher_upper_bound(1.0, 1, 1.0, 9) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(rademacher_upper_bound(1.3, 2, 0.0, 10), 0.0);
        let a = rademacher_upper_bound(1.7, 3, 2.2, 50);
        let b = rademacher_upper_bound(1.7, 3, 2.2, 200);
        assert_eq!(a, 2.0 * b);
        assert_eq!(envelope_upper_bound(1.0, 1, 1.0), 4.0);
        assert_eq!(envelope_upper_bound(2.0, 2, 1.0), 64.0);
        assert_eq!(envelope_upper_bound(2.0, 2, 0.0), 0.0);
    }

    #[test]
    fn degenerate_classes_have_zero_complexity() {
        let arch: Architecture = "2:3".parse().unwrap();
        let oracle = OracleNetwork::zero(arch.clone(), 1.0).unwrap();
        let ds = gaussian(2, 32, 4, &oracle);
        assert_eq!(estimate_rademacher(&ds, &arch, 0.0, 5, 80, 1).unwrap(), 0.0);
        let zero_inputs = Dataset::from_rows(vec![vec![0.0, 0.0]; 16], vec![1.0; 16]).unwrap();
        assert_eq!(estimate_rademacher(&zero_inputs, &arch, 1.0, 5, 80, 1).unwrap(), 0.0);

        let zero_oracle = OracleNetwork::zero(arch.clone(), 0.0).unwrap();
        assert_eq!(estimate_envelope(&ds, &zero_oracle, 8, 80, 2).unwrap(), 0.0);
        assert_eq!(estimate_envelope(&zero_inputs, &oracle, 8, 80, 2).unwrap(), 0.0);
    }

    #[test]
    fn rademacher_estimate_is_dominated() {
        let arch: Architecture = "2:2".parse().unwrap();
        let oracle = OracleNetwork::zero(arch.clone(), 1.0).unwrap();
        let ds = gaussian(2, 32, 5, &oracle);
        let est = estimate_rademacher(&ds, &arch, 1.0, 200, 800, 9).unwrap();
        let s_x = estimate_s_x(&ds).unwrap();
        let upper = 3.0 * 2f64.sqrt() * s_x / 32f64.sqrt();
        assert!(est > 0.0 && est <= upper, "{est} vs {upper}");
    }

    #[test]
    fn envelope_estimate_approaches_the_exact_supremum() {
        // For bias-free ReLU nets in the ball, sup_Θ |f_Θ(x)| = b^{l+1} ‖x‖
        // (rank-one aligned weights), so sup |f_Θ(x) - f*(x)| equals
        // b^{l+1} ‖x‖ + |f*(x)| exactly.
        let arch: Architecture = "2:3".parse().unwrap();
        let oracle = sample_oracle(&arch, 1.0, 6).unwrap();
        let ds = gaussian(2, 64, 6, &oracle);
        let exact = (ds
            .rows()
            .map(|(x, _)| {
                let s = x.iter().map(|v| v * v).sum::<f64>().sqrt() + oracle.forward(x).unwrap().abs();
                s * s
            })
            .sum::<f64>()
            / ds.len() as f64)
            .sqrt();
        let (est, _) =
            estimate_envelope_with(&ds, &oracle, &ComplexityConfig { envelope_samples: 2000, ..small_cfg() }, 3)
                .unwrap();
        assert!(est <= exact * 1.05, "{est} vs {exact}");
        assert!(est >= exact * 0.85, "{est} vs {exact}");
        let s_x = estimate_s_x(&ds).unwrap();
        assert!(est <= envelope_upper_bound(1.0, 1, s_x));
    }

    #[test]
    fn report_is_reproducible() {
        let arch: Architecture = "3:4".parse().unwrap();
        let oracle = sample_oracle(&arch, 1.2, 7).unwrap();
        let ds = gaussian(3, 40, 7, &oracle);
        let a = complexity_report(&ds, &oracle, &small_cfg(), 11).unwrap();
        let b = complexity_report(&ds, &oracle, &small_cfg(), 11).unwrap();
        assert_eq!(a, b);
        assert!(a.dominance_holds(0.05));
        assert!(a.rademacher_std_error >= 0.0 && a.envelope_std_error >= 0.0);
    }
}
