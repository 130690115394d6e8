//! Synthetic regression data: inputs whose components are drawn from a
//! corruption distribution with probability `c` and from `N(0, σ²)`
//! otherwise, labels `y = f*(x) + ε`.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Architecture, NetworkParams, OracleNetwork};
use crate::rng;

/// `n` labelled inputs, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
    corrupted: Vec<bool>,
    seed: u64,
}

impl Dataset {
    /// Builds a dataset from rows; the corruption mask is all false.
    pub fn from_rows(xs: Vec<Vec<f64>>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::Shape(format!("{} inputs but {} labels", xs.len(), ys.len())));
        }
        let dim = xs.first().map_or(0, Vec::len);
        if xs.iter().any(|x| x.len() != dim) {
            return Err(Error::Shape("inputs have differing lengths".into()));
        }
        let n = ys.len();
        Self::from_parts(dim, xs.concat(), ys, vec![false; n * dim], 0)
    }

    pub fn from_parts(dim: usize, xs: Vec<f64>, ys: Vec<f64>, corrupted: Vec<bool>, seed: u64) -> Result<Self> {
        if xs.len() != ys.len() * dim {
            return Err(Error::Shape(format!(
                "{} input entries do not form {} rows of length {dim}",
                xs.len(),
                ys.len()
            )));
        }
        if corrupted.len() != xs.len() {
            return Err(Error::Shape("corruption mask does not match the inputs".into()));
        }
        Ok(Self { dim, xs, ys, corrupted, seed })
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.xs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn y(&self, i: usize) -> f64 {
        self.ys[i]
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn xs_flat(&self) -> &[f64] {
        &self.xs
    }

    pub fn mask(&self, i: usize) -> &[bool] {
        &self.corrupted[i * self.dim..(i + 1) * self.dim]
    }

    pub fn mask_flat(&self) -> &[bool] {
        &self.corrupted
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        (0..self.len()).map(move |i| (self.x(i), self.ys[i]))
    }

    /// Fraction of input components drawn from the corruption distribution.
    pub fn corruption_fraction(&self) -> f64 {
        if self.corrupted.is_empty() {
            return 0.0;
        }
        self.corrupted.iter().filter(|&&c| c).count() as f64 / self.corrupted.len() as f64
    }

    pub(crate) fn ensure_nonempty(&self) -> Result<()> {
        if self.is_empty() {
            Err(Error::InvalidInput("dataset is empty".into()))
        } else {
            Ok(())
        }
    }

    /// Copy with every input multiplied by `c`.
    pub fn scale_inputs(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.xs.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// CSV with header `y,x1..xd,mask1..maskd`; masks are written as 0/1.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["y".to_string()];
        header.extend((1..=self.dim).map(|j| format!("x{j}")));
        header.extend((1..=self.dim).map(|j| format!("mask{j}")));
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(1 + 2 * self.dim);
        for i in 0..self.len() {
            record.clear();
            record.push(self.ys[i].to_string());
            record.extend(self.x(i).iter().map(f64::to_string));
            record.extend(self.mask(i).iter().map(|&m| if m { "1" } else { "0" }.to_string()));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Reads the CSV layout written by [`write_csv`](Self::write_csv); the
    /// mask columns are optional.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = r.headers()?.clone();
        if header.get(0) != Some("y") {
            return Err(Error::Parse("first CSV column must be `y`".into()));
        }
        let dim = header.iter().filter(|h| h.starts_with('x')).count();
        let masks = header.iter().filter(|h| h.starts_with("mask")).count();
        if dim == 0 || header.len() != 1 + dim + masks || (masks != 0 && masks != dim) {
            return Err(Error::Parse(format!(
                "unexpected CSV header `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let parse = |s: &str, line: u64| {
            s.parse::<f64>().map_err(|_| Error::Parse(format!("line {line}: `{s}` is not a number")))
        };
        let (mut xs, mut ys, mut mask) = (Vec::new(), Vec::new(), Vec::new());
        for rec in r.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            ys.push(parse(&rec[0], line)?);
            for j in 0..dim {
                xs.push(parse(&rec[1 + j], line)?);
            }
            for j in 0..dim {
                mask.push(masks > 0 && &rec[1 + dim + j] == "1");
            }
        }
        Self::from_parts(dim, xs, ys, mask, 0)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// Distribution of corrupted input components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CorruptionKind {
    /// `exp(N(0, γ²))`.
    LogNormal,
    /// Constant `point_mass`.
    PointMass,
    /// Student-t with `custom_dof` degrees of freedom; its second moment has
    /// to be supplied as `custom_second_moment` for closed-form `s_x`.
    Custom,
}

/// Distribution of the label noise `y - f*(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind")]
pub enum NoiseKind {
    /// `N(0, noise_std²)`.
    #[default]
    Gaussian,
    /// Centered log-normal `exp(N(0, γ²)) - e^{γ²/2}` rescaled to unit
    /// variance, times `noise_std`. For heavy-tailed label experiments.
    LogNormal { gamma: f64 },
    /// Student-t with `dof > 2`, scaled to unit variance, times `noise_std`.
    StudentT { dof: f64 },
}

fn default_point_mass() -> f64 {
    10.0
}

fn default_custom_dof() -> f64 {
    3.0
}

fn default_noise_std() -> f64 {
    1.0
}

/// Input and noise model. Field names double as the JSON config keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContaminationConfig {
    pub d: usize,
    pub sigma: f64,
    pub corruption_level: f64,
    pub cor_kind: CorruptionKind,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default = "default_noise_std")]
    pub noise_std: f64,
    #[serde(default)]
    pub noise_kind: NoiseKind,
    /// Corrupt whole input vectors instead of single components.
    #[serde(default)]
    pub per_row: bool,
    #[serde(default = "default_point_mass")]
    pub point_mass: f64,
    #[serde(default = "default_custom_dof")]
    pub custom_dof: f64,
    #[serde(default)]
    pub custom_second_moment: Option<f64>,
}

impl ContaminationConfig {
    pub fn log_normal(d: usize, sigma: f64, corruption_level: f64, gamma: f64, noise_std: f64) -> Self {
        Self {
            d,
            sigma,
            corruption_level,
            cor_kind: CorruptionKind::LogNormal,
            gamma,
            noise_std,
            noise_kind: NoiseKind::Gaussian,
            per_row: false,
            point_mass: default_point_mass(),
            custom_dof: default_custom_dof(),
            custom_second_moment: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if self.d == 0 {
            return bad("d must be at least 1".into());
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if !(0.0..=1.0).contains(&self.corruption_level) {
            return bad(format!("corruption level must lie in [0, 1], got {}", self.corruption_level));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return bad(format!("gamma must be nonnegative, got {}", self.gamma));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return bad(format!("noise_std must be nonnegative, got {}", self.noise_std));
        }
        if self.cor_kind == CorruptionKind::Custom && !(self.custom_dof > 0.0) {
            return bad(format!("custom_dof must be positive, got {}", self.custom_dof));
        }
        match self.noise_kind {
            NoiseKind::StudentT { dof } if !(dof > 2.0) => bad(format!("Student-t noise needs dof > 2, got {dof}")),
            NoiseKind::LogNormal { gamma } if !(gamma.is_finite() && gamma > 0.0) => {
                bad(format!("log-normal noise needs gamma > 0, got {gamma}"))
            }
            _ => Ok(()),
        }
    }

    /// The same model without corruption.
    pub fn clean(&self) -> Self {
        Self { corruption_level: 0.0, ..self.clone() }
    }

    /// `E[x_cor²]`, when known in closed form.
    pub fn corruption_second_moment(&self) -> Result<f64> {
        match self.cor_kind {
            CorruptionKind::LogNormal => Ok((2.0 * self.gamma * self.gamma).exp()),
            CorruptionKind::PointMass => Ok(self.point_mass * self.point_mass),
            CorruptionKind::Custom => self.custom_second_moment.ok_or_else(|| {
                Error::Unsupported("custom corruption needs `custom_second_moment` for a closed-form s_x".into())
            }),
        }
    }

    /// `sqrt(E[(y - f*(x))²])` of the noise model.
    pub fn noise_rms(&self) -> f64 {
        self.noise_std
    }

    fn draw_corruption<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.cor_kind {
            CorruptionKind::LogNormal => {
                if self.gamma == 0.0 {
                    1.0
                } else {
                    LogNormal::new(0.0, self.gamma).expect("validated gamma").sample(rng)
                }
            }
            CorruptionKind::PointMass => self.point_mass,
            CorruptionKind::Custom => StudentT::new(self.custom_dof).expect("validated dof").sample(rng),
        }
    }

    fn draw_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.noise_std == 0.0 {
            return 0.0;
        }
        let unit = match self.noise_kind {
            NoiseKind::Gaussian => StandardNormal.sample(rng),
            NoiseKind::LogNormal { gamma } => {
                let g2 = gamma * gamma;
                let mean = (0.5 * g2).exp();
                let sd = ((g2.exp() - 1.0) * g2.exp()).sqrt();
                let z: f64 = Normal::new(0.0, gamma).expect("validated gamma").sample(rng);
                (z.exp() - mean) / sd
            }
            NoiseKind::StudentT { dof } => {
                let t: f64 = StudentT::new(dof).expect("validated dof").sample(rng);
                t / (dof / (dof - 2.0)).sqrt()
            }
        };
        self.noise_std * unit
    }
}

/// Closed-form input size of the mixture model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputSizeTheory {
    /// `sqrt(d ((1-c) σ² + c E[x_cor²]))`.
    pub exact: f64,
    /// `(1-c) √d σ + c √(d E[x_cor²])`, an upper bound on `exact` by
    /// concavity of the square root.
    pub displayed: f64,
}

pub fn theoretical_s_x(cfg: &ContaminationConfig) -> Result<InputSizeTheory> {
    cfg.validate()?;
    let m2 = cfg.corruption_second_moment()?;
    let c = cfg.corruption_level;
    let d = cfg.d as f64;
    let sigma = cfg.sigma;
    Ok(InputSizeTheory {
        exact: (d * ((1.0 - c) * sigma * sigma + c * m2)).sqrt(),
        displayed: (1.0 - c) * d.sqrt() * sigma + c * (d * m2).sqrt(),
    })
}

/// Draws `n` rows from `cfg` with labels `f*(x) + ε`. Row `i` uses its own
/// substream, so the result does not depend on evaluation order.
pub fn sample_contaminated(cfg: &ContaminationConfig, oracle: &OracleNetwork, n: usize, seed: u64) -> Result<Dataset> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    if oracle.input_dim() != cfg.d {
        return Err(Error::Shape(format!(
            "oracle takes {} inputs but the config has d = {}",
            oracle.input_dim(),
            cfg.d
        )));
    }
    let d = cfg.d;
    let clean = Normal::new(0.0, cfg.sigma).expect("validated sigma");
    let mut xs = vec![0.0; n * d];
    let mut ys = vec![0.0; n];
    let mut mask = vec![false; n * d];
    for i in 0..n {
        let mut r = rng::stream(seed, i as u64);
        let row = &mut xs[i * d..(i + 1) * d];
        let row_mask = &mut mask[i * d..(i + 1) * d];
        let row_corrupt = cfg.per_row && r.random::<f64>() < cfg.corruption_level;
        for (x, m) in row.iter_mut().zip(row_mask.iter_mut()) {
            let corrupt = if cfg.per_row { row_corrupt } else { r.random::<f64>() < cfg.corruption_level };
            *m = corrupt;
            *x = if corrupt { cfg.draw_corruption(&mut r) } else { clean.sample(&mut r) };
        }
        ys[i] = oracle.forward(row)? + cfg.draw_noise(&mut r);
    }
    Dataset::from_parts(d, xs, ys, mask, seed)
}

/// A random in-ball network: entries uniform on `[-1, 1]`, then projected.
pub fn sample_oracle(arch: &Architecture, ball_radius: f64, seed: u64) -> Result<OracleNetwork> {
    let mut r = rng::stream(seed, u64::MAX);
    let params = NetworkParams::random_uniform(arch.clone(), ball_radius, 1.0, &mut r)?;
    OracleNetwork::new(params)
}

/// Anything that can generate fresh samples around an oracle.
pub trait Sampler: Sync {
    fn sample(&self, oracle: &OracleNetwork, n: usize, seed: u64) -> Result<Dataset>;
}

impl Sampler for ContaminationConfig {
    fn sample(&self, oracle: &OracleNetwork, n: usize, seed: u64) -> Result<Dataset> {
        sample_contaminated(self, oracle, n, seed)
    }
}
