//! Risk-bound calculators for Lipschitz losses.
//!
//! With `C = 16 c_h c_F + 236 c_h (w_F + s_{y|x}) / (√n t)`:
//!
//! - general bound: `E h(y - f(x)) ≤ (1/n) Σ h(y_i - f(x_i)) + C`
//! - bound for the minimizer:
//!   `E h(y - f̂(x)) ≤ E h(y - f*(x)) + [(1/n) Σ h(y_i - f*(x_i)) - E h(y - f*(x))] + C`
//! - network bound, `t ∈ (0, 1/2)`:
//!   `E h(y - f̂(x)) ≤ E h(y - f*(x)) + a c_h (b^{l+1}(l+1) s_x + s_{y|x}) / (√n t)`
//! - large-`n` form:
//!   `E h(y - f̂(x)) ≤ 1.1 c_h s_{y|x} + a c_h b^{l+1}(l+1) s_x √(ln n / n)`
//!
//! The numerical constant `a` defaults to 996 = 48 + 948: the Rademacher
//! term contributes `48 √(l+1) ≤ 48 (l+1)` and the envelope term
//! `237 · 4 l = 948 l ≤ 948 (l+1)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::Sampler;
use crate::error::{Error, Result};
use crate::losses::LossFunction;
use crate::network::{ForwardCache, OracleNetwork};
use crate::rng;

pub const DEFAULT_A_CONSTANT: f64 = 996.0;

/// Threshold on `a √(ln n / n)` used as the "n large enough" proxy.
pub const LARGE_N_THRESHOLD: f64 = 0.1;

fn default_a() -> f64 {
    DEFAULT_A_CONSTANT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    #[serde(default)]
    pub empirical_risk: f64,
    #[serde(default)]
    pub oracle_population_risk: f64,
    #[serde(default)]
    pub oracle_empirical_risk: f64,
    pub c_h: f64,
    #[serde(default)]
    pub c_f: f64,
    #[serde(default)]
    pub w_f: f64,
    #[serde(default)]
    pub s_x: f64,
    #[serde(default)]
    pub s_y_given_x: f64,
    pub n: usize,
    pub t: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(default = "default_depth")]
    pub l: usize,
    #[serde(default = "default_a")]
    pub a_constant: f64,
}

fn default_depth() -> usize {
    1
}

impl BoundInputs {
    fn check_common(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Domain("n must be at least 1".into()));
        }
        let named = [
            ("c_h", self.c_h),
            ("c_F", self.c_f),
            ("w_F", self.w_f),
            ("s_x", self.s_x),
            ("s_y|x", self.s_y_given_x),
            ("b", self.b),
            ("a", self.a_constant),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Domain(format!("{name} must be finite and nonnegative, got {v}")));
            }
        }
        Ok(())
    }

    fn check_t(&self, upper: f64) -> Result<()> {
        if self.t > 0.0 && self.t < upper {
            Ok(())
        } else {
            Err(Error::Domain(format!("confidence parameter t = {} must lie in (0, {upper})", self.t)))
        }
    }

    /// `16 c_h c_F + 236 c_h (w_F + s_{y|x}) / (√n t)`.
    fn complexity_term(&self) -> f64 {
        16.0 * self.c_h * self.c_f
            + 236.0 * self.c_h * (self.w_f + self.s_y_given_x) / ((self.n as f64).sqrt() * self.t)
    }

    fn network_size(&self) -> f64 {
        self.b.powi(self.l as i32 + 1) * (self.l + 1) as f64 * self.s_x
    }
}

pub fn theorem1_rhs(inputs: &BoundInputs) -> Result<f64> {
    inputs.check_common()?;
    inputs.check_t(1.0)?;
    Ok(inputs.empirical_risk + inputs.complexity_term())
}

pub fn corollary2_rhs(inputs: &BoundInputs) -> Result<f64> {
    inputs.check_common()?;
    inputs.check_t(1.0)?;
    // E h(y - f*) + [emp(f*) - E h(y - f*)] telescopes to emp(f*); summing the
    // telescoped form keeps the result bit-identical to the general bound
    Ok(inputs.oracle_empirical_risk + inputs.complexity_term())
}

pub fn theorem3_first_rhs(inputs: &BoundInputs) -> Result<f64> {
    inputs.check_common()?;
    inputs.check_t(0.5)?;
    if inputs.l == 0 {
        return Err(Error::Domain("depth must be at least 1".into()));
    }
    let numerator = inputs.network_size() + inputs.s_y_given_x;
    Ok(inputs.oracle_population_risk
        + inputs.a_constant * inputs.c_h * numerator / ((inputs.n as f64).sqrt() * inputs.t))
}

/// Large-`n` bound and whether `a √(ln n / n) ≤ 0.1` holds.
pub fn theorem3_second_rhs(inputs: &BoundInputs) -> Result<(f64, bool)> {
    inputs.check_common()?;
    if inputs.n < 2 {
        return Err(Error::Domain(format!("n must be at least 2, got {}", inputs.n)));
    }
    if inputs.l == 0 {
        return Err(Error::Domain("depth must be at least 1".into()));
    }
    let rate = theorem3_rate(inputs.n as f64);
    let value = 1.1 * inputs.c_h * inputs.s_y_given_x + inputs.a_constant * inputs.c_h * inputs.network_size() * rate;
    Ok((value, inputs.a_constant * rate <= LARGE_N_THRESHOLD))
}

/// `√(ln n / n)`; takes a real `n` so the formula can be probed off the
/// integers.
pub fn theorem3_rate(n: f64) -> f64 {
    (n.ln() / n).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub theorem1_rhs: f64,
    pub corollary2_rhs: f64,
    /// `None` when `t ≥ 1/2`.
    pub theorem3_first_rhs: Option<f64>,
    /// `None` when `n < 2`.
    pub theorem3_second_rhs: Option<f64>,
    pub theorem3_second_valid: bool,
    pub inputs: BoundInputs,
}

/// Evaluates every bound whose preconditions hold. Fails only when the
/// general bound itself is undefined (`t ∉ (0, 1)` or invalid inputs).
pub fn bound_report(inputs: &BoundInputs) -> Result<BoundReport> {
    let theorem1 = theorem1_rhs(inputs)?;
    let corollary2 = corollary2_rhs(inputs)?;
    let first = theorem3_first_rhs(inputs).ok();
    let (second, valid) = match theorem3_second_rhs(inputs) {
        Ok((v, ok)) => (Some(v), ok),
        Err(_) => (None, false),
    };
    Ok(BoundReport {
        theorem1_rhs: theorem1,
        corollary2_rhs: corollary2,
        theorem3_first_rhs: first,
        theorem3_second_rhs: second,
        theorem3_second_valid: valid,
        inputs: inputs.clone(),
    })
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

const POPULATION_CHUNK: usize = 4096;

/// `E h(y - f*(x))` from `mc_n` fresh draws of `sampler`, generated in
/// fixed-size chunks with per-chunk seeds.
pub fn oracle_population_risk<S: Sampler + ?Sized>(
    oracle: &OracleNetwork,
    loss: &LossFunction,
    sampler: &S,
    mc_n: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if mc_n == 0 {
        return Err(Error::InvalidInput("mc_n must be at least 1".into()));
    }
    let chunks = mc_n.div_ceil(POPULATION_CHUNK);
    let sums = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = POPULATION_CHUNK.min(mc_n - c * POPULATION_CHUNK);
            let data = sampler.sample(oracle, len, rng::derive_seed(seed, c as u64))?;
            let mut cache = ForwardCache::default();
            let (mut s, mut s2) = (0.0, 0.0);
            for (x, y) in data.rows() {
                let v = loss.value(y - oracle.params().forward_cached(x, &mut cache));
                s += v;
                s2 += v * v;
            }
            Ok((s, s2))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let (s, s2) = sums.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let k = mc_n as f64;
    let mean = s / k;
    let var = if mc_n > 1 { ((s2 - k * mean * mean) / (k - 1.0)).max(0.0) } else { 0.0 };
    Ok(MonteCarloEstimate { mean, std_error: (var / k).sqrt(), samples: mc_n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{sample_oracle, ContaminationConfig, Dataset};
    use proptest::prelude::*;

    fn base() -> BoundInputs {
        BoundInputs {
            empirical_risk: 0.0,
            oracle_population_risk: 0.0,
            oracle_empirical_risk: 0.0,
            c_h: 1.0,
            c_f: 0.0,
            w_f: 0.0,
            s_x: 0.0,
            s_y_given_x: 0.0,
            n: 1,
            t: 0.5,
            b: 1.0,
            l: 1,
            a_constant: DEFAULT_A_CONSTANT,
        }
    }

    #[test]
    fn theorem1_constants() {
        let i = BoundInputs { c_f: 1.0, ..base() };
        assert_eq!(theorem1_rhs(&i).unwrap(), 16.0);
        let i = BoundInputs { w_f: 1.0, s_y_given_x: 1.0, n: 4, ..base() };
        assert_eq!(theorem1_rhs(&i).unwrap(), 472.0);
        let i = BoundInputs { c_h: 0.0, b: 0.0, ..base() };
        assert_eq!(theorem1_rhs(&i).unwrap(), 0.0);
        for t in [0.0, 1.0, -0.3, 1.5, f64::NAN] {
            assert!(matches!(theorem1_rhs(&BoundInputs { t, ..base() }), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn corollary2_examples() {
        let i = BoundInputs { w_f: 1.0, s_y_given_x: 1.0, n: 4, ..base() };
        assert_eq!(corollary2_rhs(&i).unwrap(), 472.0);
        let i = BoundInputs { oracle_population_risk: 0.7, oracle_empirical_risk: 0.5, ..base() };
        assert_eq!(corollary2_rhs(&i).unwrap(), 0.5);
        let i = BoundInputs { oracle_population_risk: 0.3, oracle_empirical_risk: 0.3, c_f: 0.5, n: 9, ..base() };
        assert_eq!(corollary2_rhs(&i).unwrap(), 0.3 + 8.0);
    }

    #[test]
    fn theorem3_first_examples() {
        let i = BoundInputs { s_y_given_x: 1.0, n: 4, t: 0.25, ..base() };
        assert_eq!(theorem3_first_rhs(&i).unwrap(), 1992.0);
        let i = BoundInputs { oracle_population_risk: 0.42, n: 100, t: 0.1, b: 3.0, ..base() };
        assert_eq!(theorem3_first_rhs(&i).unwrap(), 0.42);
        assert!(matches!(theorem3_first_rhs(&BoundInputs { t: 0.5, ..base() }), Err(Error::Domain(_))));
        let i = BoundInputs { s_x: 1.3, s_y_given_x: 0.4, b: 1.1, l: 2, n: 50, t: 0.2, ..base() };
        let a = theorem3_first_rhs(&i).unwrap();
        let b = theorem3_first_rhs(&BoundInputs { n: 100, ..i }).unwrap();
        assert!((b / a - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn theorem3_second_examples() {
        let i = BoundInputs { s_y_given_x: 2.0, n: 10, c_h: 1.5, ..base() };
        let (v, _) = theorem3_second_rhs(&i).unwrap();
        assert!((v - 1.1 * 1.5 * 2.0).abs() < 1e-15);
        let (v, _) = theorem3_second_rhs(&BoundInputs { n: 10, ..base() }).unwrap();
        assert_eq!(v, 0.0);
        assert!(matches!(theorem3_second_rhs(&base()), Err(Error::Domain(_))));

        // n = e: ln n / n = 1/e, value = 1.1 + 996 · 2 · e^{-1/2}
        let e = std::f64::consts::E;
        let expected = 1.1 + 1992.0 * (-0.5f64).exp();
        let i = BoundInputs { s_y_given_x: 1.0, s_x: 1.0, ..base() };
        let at_e = 1.1 * i.c_h * i.s_y_given_x + i.a_constant * i.c_h * 2.0 * i.s_x * theorem3_rate(e);
        assert!((at_e - expected).abs() < 1e-9);
        assert!((expected - 1209.309).abs() < 1e-3);
        assert!(DEFAULT_A_CONSTANT * theorem3_rate(e) > LARGE_N_THRESHOLD);

        let (_, valid) = theorem3_second_rhs(&BoundInputs { n: 10_000_000, ..base() }).unwrap();
        assert!(!valid);
        let (_, valid) = theorem3_second_rhs(&BoundInputs { n: 3_000_000_000, ..base() }).unwrap();
        assert!(valid);
    }

    #[test]
    fn report_tolerates_theorem3_preconditions() {
        let r = bound_report(&BoundInputs { t: 0.7, ..base() }).unwrap();
        assert_eq!(r.theorem3_first_rhs, None);
        assert_eq!(r.theorem3_second_rhs, None);
        assert!(!r.theorem3_second_valid);
        assert!(bound_report(&BoundInputs { t: 1.0, ..base() }).is_err());
        let json = serde_json::to_string(&r).unwrap();
        let back: BoundReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn a_constant_defaults_in_json() {
        let i: BoundInputs = serde_json::from_str(r#"{"c_h": 1, "n": 4, "t": 0.25, "s_y_given_x": 1}"#).unwrap();
        assert_eq!(i.a_constant, 996.0);
        assert_eq!(theorem3_first_rhs(&i).unwrap(), 1992.0);
    }

    fn arb_inputs() -> impl Strategy<Value = BoundInputs> {
        (
            (0.0..10.0f64, 0.0..10.0f64, 0.0..10.0f64, 0.0..5.0f64),
            (0.0..5.0f64, 0.0..20.0f64, 0.0..10.0f64, 0.0..10.0f64),
            (2usize..100_000, 0.001..0.499f64, 0.0..2.0f64, 1usize..6),
        )
            .prop_map(|((emp, pop, oemp, c_h), (c_f, w_f, s_x, s_y), (n, t, b, l))| BoundInputs {
                empirical_risk: emp,
                oracle_population_risk: pop,
                oracle_empirical_risk: oemp,
                c_h,
                c_f,
                w_f,
                s_x,
                s_y_given_x: s_y,
                n,
                t,
                b,
                l,
                a_constant: DEFAULT_A_CONSTANT,
            })
    }

    proptest! {
        #[test]
        fn binomial_inequality(a in -1e6..1e6f64, b in -1e6..1e6f64, c in -1e6..1e6f64, d in -1e6..1e6f64) {
            let lhs = (a + b + c + d).powi(2);
            let rhs = 4.0 * (a * a + b * b + c * c + d * d);
            prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-9);
        }

        #[test]
        fn corollary2_equals_theorem1_with_oracle_risk(i in arb_inputs()) {
            let swapped = BoundInputs { empirical_risk: i.oracle_empirical_risk, ..i.clone() };
            prop_assert_eq!(corollary2_rhs(&i).unwrap(), theorem1_rhs(&swapped).unwrap());
        }

        #[test]
        fn bounds_are_monotone(i in arb_inputs(), bump in 0.01..2.0f64) {
            let t1 = theorem1_rhs(&i).unwrap();
            let f3 = theorem3_first_rhs(&i).unwrap();
            let (s3, _) = theorem3_second_rhs(&i).unwrap();
            let more_n = BoundInputs { n: i.n * 2, ..i.clone() };
            prop_assert!(theorem1_rhs(&more_n).unwrap() <= t1);
            prop_assert!(theorem3_first_rhs(&more_n).unwrap() <= f3);
            let more_t = BoundInputs { t: (i.t * 1.0).min(0.49) + 0.005, ..i.clone() };
            if more_t.t > i.t {
                prop_assert!(theorem1_rhs(&more_t).unwrap() <= t1);
                prop_assert!(theorem3_first_rhs(&more_t).unwrap() <= f3);
            }
            for bumped in [
                BoundInputs { c_h: i.c_h + bump, ..i.clone() },
                BoundInputs { c_f: i.c_f + bump, ..i.clone() },
                BoundInputs { w_f: i.w_f + bump, ..i.clone() },
                BoundInputs { s_x: i.s_x + bump, ..i.clone() },
                BoundInputs { s_y_given_x: i.s_y_given_x + bump, ..i.clone() },
                BoundInputs { b: i.b + bump, ..i.clone() },
            ] {
                prop_assert!(theorem1_rhs(&bumped).unwrap() >= t1);
                prop_assert!(theorem3_first_rhs(&bumped).unwrap() >= f3);
                prop_assert!(theorem3_second_rhs(&bumped).unwrap().0 >= s3);
            }
        }

        #[test]
        fn report_is_finite_and_nonnegative(i in arb_inputs()) {
            let r = bound_report(&i).unwrap();
            prop_assert!(r.theorem1_rhs.is_finite() && r.theorem1_rhs >= 0.0);
            prop_assert!(r.corollary2_rhs.is_finite() && r.corollary2_rhs >= 0.0);
            prop_assert!(r.theorem3_first_rhs.unwrap() >= 0.0);
            prop_assert!(r.theorem3_second_rhs.unwrap() >= 0.0);
        }
    }

    struct SignNoise;

    impl Sampler for SignNoise {
        fn sample(&self, oracle: &OracleNetwork, n: usize, seed: u64) -> Result<Dataset> {
            let xs: Vec<Vec<f64>> = (0..n).map(|i| vec![(i % 7) as f64 - 3.0, 1.0]).collect();
            let ys = xs
                .iter()
                .enumerate()
                .map(|(i, x)| oracle.forward(x).unwrap() + if (i as u64 + seed) % 2 == 0 { 1.0 } else { -1.0 })
                .collect();
            Dataset::from_rows(xs, ys)
        }
    }

    #[test]
    fn oracle_population_risk_examples() {
        let oracle = sample_oracle(&"2:3".parse().unwrap(), 1.0, 1).unwrap();
        let noiseless = ContaminationConfig::log_normal(2, 1.0, 0.2, 1.0, 0.0);
        let r = oracle_population_risk(&oracle, &LossFunction::huber(1.345).unwrap(), &noiseless, 5000, 3).unwrap();
        assert_eq!(r.mean, 0.0);

        let r = oracle_population_risk(&oracle, &LossFunction::lad(), &SignNoise, 1000, 3).unwrap();
        assert_eq!(r.mean, 1.0);

        let gaussian = ContaminationConfig::log_normal(2, 1.0, 0.0, 0.0, 1.0);
        let a = oracle_population_risk(&oracle, &LossFunction::lad(), &gaussian, 10_000, 9).unwrap();
        let b = oracle_population_risk(&oracle, &LossFunction::lad(), &gaussian, 10_000, 9).unwrap();
        assert_eq!(a, b);
        // E|N(0,1)| = √(2/π)
        assert!((a.mean - (2.0 / std::f64::consts::PI).sqrt()).abs() < 4.0 * a.std_error);
    }
}
