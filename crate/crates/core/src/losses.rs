//! Regression losses `h` applied to residuals `a = y - f(x)`.
//!
//! All losses are even, nonnegative and vanish at zero. Every kind except
//! [`LossKind::LeastSquares`] is Lipschitz continuous:
//!
//! | kind    | `h(a)`                                              | `c_h`           |
//! |---------|-----------------------------------------------------|-----------------|
//! | LAD     | `|a|`                                               | 1               |
//! | Huber   | `a²/2` for `|a| ≤ k`, else `k|a| - k²/2`            | `k`             |
//! | Cauchy  | `(k²/2) ln(1 + (a/k)²)`                             | `k/2`           |
//! | Tukey   | `(k²/6)(1 - (1 - (a/k)²)³)` for `|a| ≤ k`, else `k²/6` | `16k/(25√5)` |
//! | LS      | `a²`                                                | unbounded       |
//!
//! Losses are written on the command line and in configs as `lad`,
//! `huber:k`, `cauchy:k`, `tukey:k` or `ls`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

pub const DEFAULT_HUBER_SCALE: f64 = 1.345;
pub const DEFAULT_TUKEY_SCALE: f64 = 4.685;
pub const DEFAULT_CAUCHY_SCALE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LossKind {
    Lad,
    Huber,
    Cauchy,
    Tukey,
    LeastSquares,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::Lad => "lad",
            LossKind::Huber => "huber",
            LossKind::Cauchy => "cauchy",
            LossKind::Tukey => "tukey",
            LossKind::LeastSquares => "ls",
        }
    }

    pub fn has_scale(self) -> bool {
        matches!(self, LossKind::Huber | LossKind::Cauchy | LossKind::Tukey)
    }

    pub fn default_scale(self) -> f64 {
        match self {
            LossKind::Huber => DEFAULT_HUBER_SCALE,
            LossKind::Tukey => DEFAULT_TUKEY_SCALE,
            LossKind::Cauchy => DEFAULT_CAUCHY_SCALE,
            LossKind::Lad | LossKind::LeastSquares => 1.0,
        }
    }
}

/// A loss `h` together with its tuning parameter `k`.
///
/// The scale is stored for every kind but only read by Huber, Cauchy and
/// Tukey.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LossFunction {
    kind: LossKind,
    scale: f64,
}

impl LossFunction {
    pub fn new(kind: LossKind, scale: f64) -> Result<Self> {
        if kind.has_scale() && !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidInput(format!("{} scale must be positive and finite, got {scale}", kind.name())));
        }
        let scale = if kind.has_scale() { scale } else { 1.0 };
        Ok(Self { kind, scale })
    }

    pub fn with_default_scale(kind: LossKind) -> Self {
        Self { kind, scale: kind.default_scale() }
    }

    pub fn lad() -> Self {
        Self::with_default_scale(LossKind::Lad)
    }

    pub fn least_squares() -> Self {
        Self::with_default_scale(LossKind::LeastSquares)
    }

    pub fn huber(k: f64) -> Result<Self> {
        Self::new(LossKind::Huber, k)
    }

    pub fn cauchy(k: f64) -> Result<Self> {
        Self::new(LossKind::Cauchy, k)
    }

    pub fn tukey(k: f64) -> Result<Self> {
        Self::new(LossKind::Tukey, k)
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn is_lipschitz(&self) -> bool {
        self.kind != LossKind::LeastSquares
    }

    /// `h(residual)`.
    pub fn eval(&self, residual: f64) -> Result<f64> {
        ensure_finite(residual, "residual")?;
        Ok(self.value(residual))
    }

    /// `h(residual)` without the finiteness check; used on hot paths where
    /// residuals come from finite data and finite weights.
    #[inline]
    pub fn value(&self, a: f64) -> f64 {
        let k = self.scale;
        match self.kind {
            LossKind::Lad => a.abs(),
            LossKind::Huber => {
                let abs = a.abs();
                if abs <= k {
                    0.5 * a * a
                } else {
                    k * abs - 0.5 * k * k
                }
            }
            LossKind::Cauchy => {
                let u = a / k;
                0.5 * k * k * (u * u).ln_1p()
            }
            LossKind::Tukey => {
                let abs = a.abs();
                if abs <= k {
                    let v = 1.0 - (a / k) * (a / k);
                    k * k / 6.0 * (1.0 - v * v * v)
                } else {
                    k * k / 6.0
                }
            }
            LossKind::LeastSquares => a * a,
        }
    }

    /// An element of the subdifferential of `h` at `residual` (0 at the LAD
    /// kink).
    pub fn subgradient(&self, residual: f64) -> Result<f64> {
        ensure_finite(residual, "residual")?;
        Ok(self.derivative(residual))
    }

    #[inline]
    pub fn derivative(&self, a: f64) -> f64 {
        let k = self.scale;
        match self.kind {
            LossKind::Lad => {
                if a > 0.0 {
                    1.0
                } else if a < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            LossKind::Huber => a.clamp(-k, k),
            LossKind::Cauchy => {
                let u = a / k;
                a / (1.0 + u * u)
            }
            LossKind::Tukey => {
                if a.abs() <= k {
                    let v = 1.0 - (a / k) * (a / k);
                    a * v * v
                } else {
                    0.0
                }
            }
            LossKind::LeastSquares => 2.0 * a,
        }
    }

    /// The smallest `c_h` with `|h(a) - h(b)| ≤ c_h |a - b|`.
    pub fn lipschitz_constant(&self) -> Result<f64> {
        let k = self.scale;
        match self.kind {
            LossKind::Lad => Ok(1.0),
            LossKind::Huber => Ok(k),
            LossKind::Cauchy => Ok(0.5 * k),
            // |h'(a)| = |a|(1 - (a/k)²)² peaks at a = k/√5.
            LossKind::Tukey => Ok(16.0 * k / (25.0 * 5f64.sqrt())),
            LossKind::LeastSquares => Err(Error::NotLipschitz("least-squares")),
        }
    }

    /// Largest difference quotient `|h(a) - h(b)| / |a - b|` over all pairs
    /// of an evenly spaced grid on `[-half_width, half_width]`.
    pub fn verify_lipschitz(&self, grid_half_width: f64, grid_points: usize) -> Result<f64> {
        if grid_points < 2 {
            return Err(Error::InvalidInput(format!("grid needs at least 2 points, got {grid_points}")));
        }
        ensure_finite(grid_half_width, "grid half width")?;
        let step = 2.0 * grid_half_width / (grid_points - 1) as f64;
        let grid: Vec<(f64, f64)> = (0..grid_points)
            .map(|i| {
                let a = -grid_half_width + step * i as f64;
                (a, self.value(a))
            })
            .collect();
        let mut best = 0.0f64;
        for (i, &(a, ha)) in grid.iter().enumerate() {
            for &(b, hb) in &grid[i + 1..] {
                let gap = (a - b).abs();
                if gap > 0.0 {
                    best = best.max((ha - hb).abs() / gap);
                }
            }
        }
        Ok(best)
    }
}

impl Default for LossFunction {
    fn default() -> Self {
        Self::with_default_scale(LossKind::Huber)
    }
}

impl fmt::Display for LossFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.kind.has_scale() {
            write!(f, "{}:{}", self.kind.name(), self.scale)
        } else {
            f.write_str(self.kind.name())
        }
    }
}

impl FromStr for LossFunction {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        let (name, scale) = match text.split_once(':') {
            Some((name, scale)) => (name, Some(scale)),
            None => (text, None),
        };
        let kind = match name.to_ascii_lowercase().as_str() {
            "lad" | "l1" => LossKind::Lad,
            "huber" => LossKind::Huber,
            "cauchy" => LossKind::Cauchy,
            "tukey" => LossKind::Tukey,
            "ls" | "l2" => LossKind::LeastSquares,
            other => return Err(Error::Parse(format!("unknown loss `{other}`"))),
        };
        match (kind.has_scale(), scale) {
            (true, Some(s)) => {
                let k: f64 = s.trim().parse().map_err(|_| Error::Parse(format!("bad loss scale `{s}` in `{text}`")))?;
                Self::new(kind, k)
            }
            (true, None) => Ok(Self::with_default_scale(kind)),
            (false, None) => Ok(Self::with_default_scale(kind)),
            (false, Some(_)) => Err(Error::Parse(format!("`{name}` takes no scale parameter"))),
        }
    }
}

impl TryFrom<String> for LossFunction {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        value.parse()
    }
}

impl From<LossFunction> for String {
    fn from(loss: LossFunction) -> Self {
        loss.to_string()
    }
}
