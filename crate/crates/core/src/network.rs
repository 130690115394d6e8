//! Bias-free feedforward ReLU networks
//! `f_Θ(x) = Θ^l relu(Θ^{l-1} ⋯ relu(Θ^0 x))` with scalar output, and the
//! weight-decay ball `max_j ‖Θ^j‖_F ≤ b`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Layer widths `d = p^0, p^1, …, p^l` (the output width `p^{l+1} = 1` is
/// implicit).
///
/// Serialized as the string `d:h1,h2,…`; the object form
/// `{"input_dim": d, "hidden_dims": [...]}` is accepted on input.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Architecture {
    input_dim: usize,
    hidden_dims: Vec<usize>,
}

impl Serialize for Architecture {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Architecture {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Object { input_dim: usize, hidden_dims: Vec<usize> },
        }
        let arch = match Repr::deserialize(d)? {
            Repr::Text(s) => s.parse(),
            Repr::Object { input_dim, hidden_dims } => Architecture::new(input_dim, hidden_dims),
        };
        arch.map_err(serde::de::Error::custom)
    }
}

impl Architecture {
    pub fn new(input_dim: usize, hidden_dims: Vec<usize>) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::InvalidInput("input dimension must be at least 1".into()));
        }
        if hidden_dims.is_empty() {
            return Err(Error::InvalidInput("depth must be at least 1 (one hidden layer)".into()));
        }
        if hidden_dims.contains(&0) {
            return Err(Error::InvalidInput("hidden widths must be at least 1".into()));
        }
        Ok(Self { input_dim, hidden_dims })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dims(&self) -> &[usize] {
        &self.hidden_dims
    }

    /// Number of hidden layers `l`.
    pub fn depth(&self) -> usize {
        self.hidden_dims.len()
    }

    /// `w = max{p^1, …, p^l}`.
    pub fn width(&self) -> usize {
        self.hidden_dims.iter().copied().max().unwrap_or(0)
    }

    /// `(rows, cols)` of `Θ^0, …, Θ^l`.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_dims.len() + 2);
        dims.push(self.input_dim);
        dims.extend_from_slice(&self.hidden_dims);
        dims.push(1);
        dims.windows(2).map(|w| (w[1], w[0])).collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.layer_shapes().iter().map(|(r, c)| r * c).sum()
    }
}

/// Parses `d:h1,h2,…`, e.g. `4:8` or `2:3,3`.
impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("architecture `{s}` is not of the form d:h1,h2,..."));
        let (d, hidden) = s.trim().split_once(':').ok_or_else(bad)?;
        let d: usize = d.trim().parse().map_err(|_| bad())?;
        let hidden =
            hidden.split(',').map(|h| h.trim().parse::<usize>().map_err(|_| bad())).collect::<Result<Vec<_>>>()?;
        Architecture::new(d, hidden)
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.input_dim)?;
        for (i, h) in self.hidden_dims.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{h}")?;
        }
        Ok(())
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<RawMatrix> for Matrix {
    type Error = Error;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        Matrix::from_vec(raw.rows, raw.cols, raw.data)
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Ok(Self { rows: rows.len(), cols, data: rows.concat() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    /// `out = self · x`.
    fn matvec_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend((0..self.rows).map(|r| dot(self.row(r), x)));
    }

    /// `out = selfᵀ · v`.
    fn matvec_transpose_into(&self, v: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.resize(self.cols, 0.0);
        for (r, &vr) in v.iter().enumerate() {
            if vr == 0.0 {
                continue;
            }
            for (o, &m) in out.iter_mut().zip(self.row(r)) {
                *o += m * vr;
            }
        }
    }

    /// `self += alpha · u vᵀ`.
    fn add_outer(&mut self, alpha: f64, u: &[f64], v: &[f64]) {
        for (r, &ur) in u.iter().enumerate() {
            let coef = alpha * ur;
            if coef == 0.0 {
                continue;
            }
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            for (m, &vc) in row.iter_mut().zip(v) {
                *m += coef * vc;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Network weights `Θ = (Θ^0, …, Θ^l)` together with the ball radius `b`
/// they are constrained to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct NetworkParams {
    architecture: Architecture,
    ball_radius: f64,
    layers: Vec<Matrix>,
}

/// Unchecked wire form; shapes are validated on conversion.
#[derive(Deserialize)]
struct RawParams {
    architecture: Architecture,
    ball_radius: f64,
    layers: Vec<Matrix>,
}

impl TryFrom<RawParams> for NetworkParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        Self::from_layers(raw.architecture, raw.layers, raw.ball_radius)
    }
}

/// Activations cached by the forward pass: `inputs[j]` is the input of
/// layer `j`, `pre[j]` the pre-activation of hidden layer `j`.
#[derive(Debug, Default, Clone)]
pub(crate) struct ForwardCache {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    scratch: Vec<f64>,
}

impl NetworkParams {
    pub fn zeros(architecture: Architecture, ball_radius: f64) -> Result<Self> {
        check_radius(ball_radius)?;
        let layers = architecture.layer_shapes().into_iter().map(|(r, c)| Matrix::zeros(r, c)).collect();
        Ok(Self { architecture, ball_radius, layers })
    }

    pub fn from_layers(architecture: Architecture, layers: Vec<Matrix>, ball_radius: f64) -> Result<Self> {
        check_radius(ball_radius)?;
        let shapes = architecture.layer_shapes();
        if shapes.len() != layers.len() {
            return Err(Error::Shape(format!(
                "architecture {architecture} has {} layers, got {}",
                shapes.len(),
                layers.len()
            )));
        }
        for (j, (m, expected)) in layers.iter().zip(&shapes).enumerate() {
            if m.shape() != *expected {
                return Err(Error::Shape(format!(
                    "layer {j} should be {}x{}, got {}x{}",
                    expected.0,
                    expected.1,
                    m.rows(),
                    m.cols()
                )));
            }
            if m.data().iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("layer {j} has non-finite entries")));
            }
        }
        Ok(Self { architecture, ball_radius, layers })
    }

    /// Entries i.i.d. uniform on `[-scale, scale]`, then projected into the
    /// ball.
    pub fn random_uniform<R: Rng + ?Sized>(
        architecture: Architecture,
        ball_radius: f64,
        scale: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let mut params = Self::zeros(architecture, ball_radius)?;
        if scale > 0.0 {
            for layer in &mut params.layers {
                for v in layer.data_mut() {
                    *v = rng.random_range(-scale..=scale);
                }
            }
        }
        params.project_in_place();
        Ok(params)
    }

    pub fn architecture(&self) -> &Architecture {
        &self.architecture
    }

    pub fn ball_radius(&self) -> f64 {
        self.ball_radius
    }

    pub fn layers(&self) -> &[Matrix] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Matrix] {
        &mut self.layers
    }

    pub fn depth(&self) -> usize {
        self.architecture.depth()
    }

    pub fn input_dim(&self) -> usize {
        self.architecture.input_dim()
    }

    /// `f_Θ(x)`.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        let mut cache = ForwardCache::default();
        Ok(self.forward_cached(x, &mut cache))
    }

    pub(crate) fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape(format!("input has length {}, network expects {}", x.len(), self.input_dim())));
        }
        Ok(())
    }

    /// Forward pass keeping the activations needed by the backward pass.
    /// `x` must have length `input_dim`.
    pub(crate) fn forward_cached(&self, x: &[f64], cache: &mut ForwardCache) -> f64 {
        let l = self.depth();
        cache.inputs.resize_with(l + 1, Vec::new);
        cache.pre.resize_with(l, Vec::new);
        cache.inputs[0].clear();
        cache.inputs[0].extend_from_slice(x);
        for j in 0..l {
            let (head, tail) = cache.inputs.split_at_mut(j + 1);
            self.layers[j].matvec_into(&head[j], &mut cache.pre[j]);
            let next = &mut tail[0];
            next.clear();
            next.extend(cache.pre[j].iter().map(|&z| z.max(0.0)));
        }
        dot(self.layers[l].row(0), &cache.inputs[l])
    }

    /// Adds `upstream · ∂f_Θ(x)/∂Θ` into `grads`, using the activations of the
    /// last [`forward_cached`](Self::forward_cached) call. ReLU'(0) is taken
    /// to be 0.
    pub(crate) fn backward_accumulate(&self, cache: &mut ForwardCache, upstream: f64, grads: &mut [Matrix]) {
        let l = self.depth();
        grads[l].add_outer(upstream, &[1.0], &cache.inputs[l]);
        let mut delta = vec![upstream];
        let mut back = std::mem::take(&mut cache.scratch);
        for j in (0..l).rev() {
            self.layers[j + 1].matvec_transpose_into(&delta, &mut back);
            for (g, &z) in back.iter_mut().zip(&cache.pre[j]) {
                if z <= 0.0 {
                    *g = 0.0;
                }
            }
            grads[j].add_outer(1.0, &back, &cache.inputs[j]);
            std::mem::swap(&mut delta, &mut back);
        }
        cache.scratch = back;
    }

    /// `upstream · ∂f_Θ(x)/∂Θ`, one matrix per layer.
    pub fn backward(&self, x: &[f64], upstream: f64) -> Result<Vec<Matrix>> {
        self.check_input(x)?;
        let mut cache = ForwardCache::default();
        self.forward_cached(x, &mut cache);
        let mut grads = self.zero_like();
        self.backward_accumulate(&mut cache, upstream, &mut grads);
        Ok(grads)
    }

    pub(crate) fn zero_like(&self) -> Vec<Matrix> {
        self.layers.iter().map(|m| Matrix::zeros(m.rows(), m.cols())).collect()
    }

    /// `‖Θ^j‖_F` for `j = 0, …, l`.
    pub fn frobenius_norms(&self) -> Vec<f64> {
        self.layers.iter().map(Matrix::frobenius_norm).collect()
    }

    pub fn max_layer_norm(&self) -> f64 {
        self.frobenius_norms().into_iter().fold(0.0, f64::max)
    }

    /// Whether every layer satisfies `‖Θ^j‖_F ≤ b + tol`.
    pub fn in_ball(&self, tol: f64) -> bool {
        self.max_layer_norm() <= self.ball_radius + tol
    }

    /// Radially rescales every layer whose Frobenius norm exceeds the ball
    /// radius back onto the sphere; other layers are untouched.
    pub fn project_to_ball(&self) -> Self {
        let mut out = self.clone();
        out.project_in_place();
        out
    }

    pub fn project_in_place(&mut self) {
        let b = self.ball_radius;
        for layer in &mut self.layers {
            let norm = layer.frobenius_norm();
            if norm <= b {
                continue;
            }
            if b == 0.0 {
                layer.scale(0.0);
                continue;
            }
            layer.scale(b / norm);
            // rounding can leave the norm an ulp above b; shrink until it isn't
            while layer.frobenius_norm() > b {
                layer.scale(1.0 - f64::EPSILON);
            }
        }
    }

    /// Same weights under a different radius (not re-projected).
    pub fn with_ball_radius(mut self, ball_radius: f64) -> Result<Self> {
        check_radius(ball_radius)?;
        self.ball_radius = ball_radius;
        Ok(self)
    }

    /// `self + alpha · direction`, layer by layer.
    pub(crate) fn axpy(&mut self, alpha: f64, direction: &[Matrix]) {
        for (layer, d) in self.layers.iter_mut().zip(direction) {
            for (w, &g) in layer.data_mut().iter_mut().zip(d.data()) {
                *w += alpha * g;
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn check_radius(b: f64) -> Result<()> {
    if b.is_finite() && b >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("ball radius must be finite and nonnegative, got {b}")))
    }
}

/// Tolerance used when checking membership in the weight-decay ball.
pub const BALL_TOLERANCE: f64 = 1e-12;

/// Both sides of the parameter-Lipschitz inequality
/// `|f_Θ(x) - f_Γ(x)|² ≤ 4 b^{2l} l ‖x‖² Σ_j ‖Θ^j - Γ^j‖_F²`.
pub fn param_lipschitz_check(p1: &NetworkParams, p2: &NetworkParams, x: &[f64]) -> Result<(f64, f64)> {
    if p1.architecture != p2.architecture {
        return Err(Error::Shape(format!("architectures differ: {} vs {}", p1.architecture, p2.architecture)));
    }
    if p1.ball_radius != p2.ball_radius {
        return Err(Error::Domain("parameter sets use different ball radii".into()));
    }
    for (name, p) in [("first", p1), ("second", p2)] {
        if !p.in_ball(BALL_TOLERANCE) {
            return Err(Error::Domain(format!(
                "{name} parameter lies outside the ball (max norm {} > {})",
                p.max_layer_norm(),
                p.ball_radius
            )));
        }
    }
    let diff = p1.forward(x)? - p2.forward(x)?;
    let lhs = diff * diff;
    let b = p1.ball_radius;
    let l = p1.depth();
    let x_sq = dot(x, x);
    let dist_sq: f64 = p1
        .layers
        .iter()
        .zip(&p2.layers)
        .map(|(a, c)| a.data().iter().zip(c.data()).map(|(u, v)| (u - v) * (u - v)).sum::<f64>())
        .sum();
    let rhs = 4.0 * b.powi(2 * l as i32) * l as f64 * x_sq * dist_sq;
    Ok((lhs, rhs))
}

/// The reference network `f* = f_{Θ*}`; its weights must lie in the ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkParams", into = "NetworkParams")]
pub struct OracleNetwork {
    params: NetworkParams,
}

impl OracleNetwork {
    pub fn new(params: NetworkParams) -> Result<Self> {
        if !params.in_ball(BALL_TOLERANCE) {
            return Err(Error::Domain(format!(
                "oracle weights lie outside the ball (max norm {} > {})",
                params.max_layer_norm(),
                params.ball_radius()
            )));
        }
        Ok(Self { params })
    }

    pub fn zero(architecture: Architecture, ball_radius: f64) -> Result<Self> {
        Self::new(NetworkParams::zeros(architecture, ball_radius)?)
    }

    pub fn params(&self) -> &NetworkParams {
        &self.params
    }

    pub fn into_params(self) -> NetworkParams {
        self.params
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.params.forward(x)
    }

    pub fn input_dim(&self) -> usize {
        self.params.input_dim()
    }
}

impl TryFrom<NetworkParams> for OracleNetwork {
    type Error = Error;

    fn try_from(p: NetworkParams) -> Result<Self> {
        OracleNetwork::new(p)
    }
}

impl From<OracleNetwork> for NetworkParams {
    fn from(o: OracleNetwork) -> Self {
        o.params
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn net(d: usize, hidden: &[usize], layers: Vec<Vec<Vec<f64>>>, b: f64) -> NetworkParams {
        let arch = Architecture::new(d, hidden.to_vec()).unwrap();
        let mats = layers
            .into_iter()
            .map(|rows| {
                let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
                Matrix::from_rows(&refs).unwrap()
            })
            .collect();
        NetworkParams::from_layers(arch, mats, b).unwrap()
    }

    fn random_net(arch: &str, b: f64, seed: u64) -> NetworkParams {
        let mut r = rng::stream(seed, 0);
        NetworkParams::random_uniform(arch.parse().unwrap(), b, 1.0, &mut r).unwrap()
    }

    #[test]
    fn architecture_parsing_and_shapes() {
        let a: Architecture = "2:3,4".parse().unwrap();
        assert_eq!(a.depth(), 2);
        assert_eq!(a.width(), 4);
        assert_eq!(a.layer_shapes(), vec![(3, 2), (4, 3), (1, 4)]);
        assert_eq!(a.to_string(), "2:3,4");
        assert!("2".parse::<Architecture>().is_err());
        assert!("0:3".parse::<Architecture>().is_err());
        assert!("2:0".parse::<Architecture>().is_err());
        assert!(Architecture::new(2, vec![]).is_err());
        assert_eq!(serde_json::to_string(&a).unwrap(), "\"2:3,4\"");
        let obj: Architecture = serde_json::from_str(r#"{"input_dim":2,"hidden_dims":[3,4]}"#).unwrap();
        assert_eq!(obj, a);
        assert!(serde_json::from_str::<Architecture>("\"2:\"").is_err());
    }

    #[test]
    fn forward_examples() {
        let p = net(1, &[1], vec![vec![vec![1.0]], vec![vec![1.0]]], 10.0);
        assert_eq!(p.forward(&[2.0]).unwrap(), 2.0);
        assert_eq!(p.forward(&[-2.0]).unwrap(), 0.0);

        let p = net(2, &[2], vec![vec![vec![1.0, -1.0], vec![0.0, 2.0]], vec![vec![1.0, 1.0]]], 10.0);
        assert_eq!(p.forward(&[3.0, 1.0]).unwrap(), 4.0);

        let z = NetworkParams::zeros("3:4,2".parse().unwrap(), 1.0).unwrap();
        assert_eq!(z.forward(&[1.0, -5.0, 2.0]).unwrap(), 0.0);
        assert!(matches!(z.forward(&[1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn backward_examples() {
        let p = net(1, &[1], vec![vec![vec![1.0]], vec![vec![2.0]]], 10.0);
        let g = p.backward(&[3.0], 1.0).unwrap();
        assert_eq!(g[0].data(), &[6.0]);
        assert_eq!(g[1].data(), &[3.0]);

        let z = NetworkParams::zeros("2:3".parse().unwrap(), 1.0).unwrap();
        let g = z.backward(&[1.0, 2.0], 1.0).unwrap();
        assert!(g.iter().all(|m| m.data().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn backward_matches_central_differences() {
        let p = random_net("2:3", 5.0, 11);
        let x = [0.7, -1.3];
        let g = p.backward(&x, 1.0).unwrap();
        let h = 1e-5;
        for j in 0..p.layers().len() {
            for e in 0..p.layers()[j].data().len() {
                let mut plus = p.clone();
                plus.layers_mut()[j].data_mut()[e] += h;
                let mut minus = p.clone();
                minus.layers_mut()[j].data_mut()[e] -= h;
                let fd = (plus.forward(&x).unwrap() - minus.forward(&x).unwrap()) / (2.0 * h);
                let an = g[j].data()[e];
                assert!((fd - an).abs() <= 1e-4 * an.abs().max(1e-6) + 1e-9, "layer {j} entry {e}: {fd} vs {an}");
            }
        }
    }

    #[test]
    fn frobenius_examples() {
        assert_eq!(Matrix::zeros(2, 3).frobenius_norm(), 0.0);
        assert_eq!(Matrix::from_rows(&[&[3.0, 4.0]]).unwrap().frobenius_norm(), 5.0);
        let eye = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        assert_eq!(eye.frobenius_norm(), 2f64.sqrt());
        let p = net(2, &[1], vec![vec![vec![3.0, 4.0]], vec![vec![1.0]]], 10.0);
        assert_eq!(p.frobenius_norms(), vec![5.0, 1.0]);
    }

    #[test]
    fn projection_examples() {
        let p = net(1, &[1], vec![vec![vec![0.5]], vec![vec![-0.25]]], 1.0);
        assert_eq!(p.project_to_ball(), p);

        let p = net(2, &[2], vec![vec![vec![1.0, 1.0], vec![1.0, 1.0]], vec![vec![0.5, 0.0]]], 1.0);
        let q = p.project_to_ball();
        assert_eq!(q.layers()[0].data(), &[0.5, 0.5, 0.5, 0.5]);
        assert_eq!(q.layers()[1], p.layers()[1]);
        assert_eq!(q.project_to_ball(), q);

        let z = random_net("3:4", 0.0, 2);
        assert!(z.layers().iter().all(|m| m.data().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn projection_is_idempotent_and_feasible() {
        for seed in 0..200 {
            let mut r = rng::stream(seed, 1);
            let p = NetworkParams::random_uniform("4:7,5".parse().unwrap(), 1e3, 37.3, &mut r)
                .unwrap()
                .with_ball_radius(0.3 + seed as f64 * 0.01)
                .unwrap();
            let q = p.project_to_ball();
            assert!(q.max_layer_norm() <= q.ball_radius());
            assert_eq!(q.project_to_ball(), q);
            for (a, b) in q.frobenius_norms().iter().zip(p.frobenius_norms()) {
                assert!(*a <= b);
            }
        }
    }

    #[test]
    fn param_lipschitz_examples() {
        let p = random_net("2:3", 1.0, 4);
        assert_eq!(param_lipschitz_check(&p, &p, &[0.3, 0.9]).unwrap(), (0.0, 0.0));
        let q = random_net("2:3", 1.0, 5);
        assert_eq!(param_lipschitz_check(&p, &q, &[0.0, 0.0]).unwrap(), (0.0, 0.0));
        let (lhs, rhs) = param_lipschitz_check(&p, &q, &[1.5, -0.4]).unwrap();
        assert!(lhs <= rhs);

        let other = random_net("2:4", 1.0, 5);
        assert!(matches!(param_lipschitz_check(&p, &other, &[1.0, 1.0]), Err(Error::Shape(_))));
        let outside = q.clone().with_ball_radius(1.0).unwrap();
        let mut outside = outside;
        outside.layers_mut()[0].scale(10.0);
        assert!(matches!(param_lipschitz_check(&p, &outside, &[1.0, 1.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let p = random_net("3:5,2", 1.7, 9);
        let back = NetworkParams::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(back, p);
        let bad = r#"{"architecture":"2:1","ball_radius":1.0,
            "layers":[{"rows":1,"cols":3,"data":[0,0,0]},{"rows":1,"cols":1,"data":[0]}]}"#;
        let err = NetworkParams::from_json(bad).unwrap_err().to_string();
        assert!(err.contains("layer 0 should be 1x2"), "{err}");
        let ragged = r#"{"architecture":"1:1","ball_radius":1.0,
            "layers":[{"rows":1,"cols":1,"data":[0,0]},{"rows":1,"cols":1,"data":[0]}]}"#;
        assert!(NetworkParams::from_json(ragged).is_err());
    }

    #[test]
    fn oracle_requires_ball_membership() {
        let mut p = random_net("2:3", 1.0, 3);
        assert!(OracleNetwork::new(p.clone()).is_ok());
        p.layers_mut()[1].scale(100.0);
        assert!(matches!(OracleNetwork::new(p), Err(Error::Domain(_))));
    }
}
