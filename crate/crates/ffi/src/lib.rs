//! C ABI over `robustrisk`.
//!
//! Every fallible function returns an [`RrStatus`]; on failure a message is
//! available from [`rr_last_error_message`] on the calling thread. Networks
//! and datasets are opaque handles owned by the caller and released with
//! their `_free` functions. Strings returned by the library are released with
//! [`rr_string_free`]. Panics never cross the boundary; they surface as
//! [`RrStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use robustrisk::bounds::{bound_report, BoundInputs};
use robustrisk::complexity::{envelope_upper_bound, estimate_s_x, rademacher_upper_bound};
use robustrisk::datagen::{sample_contaminated, ContaminationConfig, Dataset};
use robustrisk::training::{train_erm, BatchSize, TrainConfig};
use robustrisk::{Architecture, Error, LossFunction, LossKind, NetworkParams, OracleNetwork};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Shape = 3,
    Domain = 4,
    NotLipschitz = 5,
    Diverged = 6,
    Unsupported = 7,
    Parse = 8,
    Io = 9,
    Panic = 10,
}

impl From<&Error> for RrStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidInput(_) => RrStatus::InvalidInput,
            Error::Shape(_) => RrStatus::Shape,
            Error::Domain(_) => RrStatus::Domain,
            Error::NotLipschitz(_) => RrStatus::NotLipschitz,
            Error::Diverged { .. } => RrStatus::Diverged,
            Error::Unsupported(_) => RrStatus::Unsupported,
            Error::Parse(_) | Error::Json(_) => RrStatus::Parse,
            Error::Io(_) | Error::Csv(_) => RrStatus::Io,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

/// Failure raised inside a call: a library error or a null argument.
enum Fail {
    Lib(Error),
    Null(&'static str),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

type FfiResult<T> = std::result::Result<T, Fail>;

/// Runs `f`, translating errors and panics into a status code.
fn guard<F: FnOnce() -> FfiResult<()>>(f: F) -> RrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            RrStatus::Ok
        }
        Ok(Err(Fail::Lib(e))) => {
            set_last_error(&e.to_string());
            RrStatus::from(&e)
        }
        Ok(Err(Fail::Null(what))) => {
            set_last_error(&format!("null pointer: {what}"));
            RrStatus::NullPointer
        }
        Err(_) => {
            set_last_error("internal panic");
            RrStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &'static str) -> FfiResult<&'a T> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn as_mut<'a, T>(p: *mut T, what: &'static str) -> FfiResult<&'a mut T> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn as_str<'a>(p: *const c_char, what: &'static str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail::Lib(Error::Parse(format!("{what} is not valid UTF-8"))))
}

unsafe fn as_slice<'a>(p: *const f64, len: usize, what: &'static str) -> FfiResult<&'a [f64]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn into_c_string(s: String) -> FfiResult<*mut c_char> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Fail::Lib(Error::InvalidInput("string contains a NUL byte".into())))
}

/// Message of the last failed call on this thread (empty after a success).
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn rr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not have been freed, or be null.
#[no_mangle]
pub unsafe extern "C" fn rr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ---------------------------------------------------------------- losses

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RrLossKind {
    Lad = 0,
    Huber = 1,
    Cauchy = 2,
    Tukey = 3,
    LeastSquares = 4,
}

/// A loss and its scale `k` (ignored by LAD and least squares). `kind`
/// holds an `RrLossKind` value; it is a plain integer so that out-of-range
/// values from C are rejected instead of being undefined behavior.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RrLoss {
    pub kind: u32,
    pub scale: f64,
}

impl RrLoss {
    fn to_loss(self) -> FfiResult<LossFunction> {
        let kind = match self.kind {
            k if k == RrLossKind::Lad as u32 => LossKind::Lad,
            k if k == RrLossKind::Huber as u32 => LossKind::Huber,
            k if k == RrLossKind::Cauchy as u32 => LossKind::Cauchy,
            k if k == RrLossKind::Tukey as u32 => LossKind::Tukey,
            k if k == RrLossKind::LeastSquares as u32 => LossKind::LeastSquares,
            k => return Err(Fail::Lib(Error::InvalidInput(format!("unknown loss kind {k}")))),
        };
        Ok(LossFunction::new(kind, self.scale)?)
    }

    fn from_loss(loss: LossFunction) -> Self {
        let kind = match loss.kind() {
            LossKind::Lad => RrLossKind::Lad,
            LossKind::Huber => RrLossKind::Huber,
            LossKind::Cauchy => RrLossKind::Cauchy,
            LossKind::Tukey => RrLossKind::Tukey,
            LossKind::LeastSquares => RrLossKind::LeastSquares,
        };
        RrLoss { kind: kind as u32, scale: loss.scale() }
    }
}

/// Parses `lad`, `huber:k`, `cauchy:k`, `tukey:k` or `ls`; the scale may be
/// omitted for its default.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rr_loss_parse(text: *const c_char, out: *mut RrLoss) -> RrStatus {
    guard(|| {
        let loss: LossFunction = as_str(text, "text")?.parse()?;
        *as_mut(out, "out")? = RrLoss::from_loss(loss);
        Ok(())
    })
}

/// `h(residual)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rr_loss_eval(loss: RrLoss, residual: f64, out: *mut f64) -> RrStatus {
    guard(|| {
        *as_mut(out, "out")? = loss.to_loss()?.eval(residual)?;
        Ok(())
    })
}

/// An element of the subdifferential of `h` at `residual`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rr_loss_subgradient(loss: RrLoss, residual: f64, out: *mut f64) -> RrStatus {
    guard(|| {
        *as_mut(out, "out")? = loss.to_loss()?.subgradient(residual)?;
        Ok(())
    })
}

/// Lipschitz constant `c_h`; `RR_STATUS_NOT_LIPSCHITZ` for least squares.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rr_loss_lipschitz_constant(loss: RrLoss, out: *mut f64) -> RrStatus {
    guard(|| {
        *as_mut(out, "out")? = loss.to_loss()?.lipschitz_constant()?;
        Ok(())
    })
}

// -------------------------------------------------------------- networks

/// Opaque network handle.
pub struct RrNetwork(NetworkParams);

fn new_handle<T>(value: T, out: *mut *mut T) -> FfiResult<()> {
    if out.is_null() {
        return Err(Fail::Null("out"));
    }
    // SAFETY: checked non-null above; caller guarantees it is writable.
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

/// All-zero network for architecture `d:h1,h2,...` in the ball of radius
/// `ball_radius`.
///
/// # Safety
/// `arch` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rr_network_zeros(arch: *const c_char, ball_radius: f64, out: *mut *mut RrNetwork) -> RrStatus {
    guard(|| {
        let arch: Architecture = as_str(arch, "arch")?.parse()?;
        new_handle(RrNetwork(NetworkParams::zeros(arch, ball_radius)?), out)
    })
}

/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rr_network_from_json(json: *const c_char, out: *mut *mut RrNetwork) -> RrStatus {
    guard(|| new_handle(RrNetwork(NetworkParams::from_json(as_str(json, "json")?)?), out))
}

/// Serializes the network; free the result with [`rr_string_free`].
///
/// # Safety
/// `net` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rr_network_to_json(net: *const RrNetwork, out: *mut *mut c_char) -> RrStatus {
    guard(|| {
        let json = as_ref(net, "net")?.0.to_json()?;
        *as_mut(out, "out")? = into_c_string(json)?;
        Ok(())
    })
}

/// Scalar output `f_Θ(x)` for an input of length `len`.
///
/// # Safety
/// `net` must be a live handle, `x` must point to `len` doubles and `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn rr_network_forward(
    net: *const RrNetwork,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> RrStatus {
    guard(|| {
        let net = as_ref(net, "net")?;
        *as_mut(out, "out")? = net.0.forward(as_slice(x, len, "x")?)?;
        Ok(())
    })
}

/// Projects the weights onto the ball in place.
///
/// # Safety
/// `net` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rr_network_project(net: *mut RrNetwork) -> RrStatus {
    guard(|| {
        as_mut(net, "net")?.0.project_in_place();
        Ok(())
    })
}

/// `max_j ‖Θ^j‖_F`.
///
/// # Safety
/// `net` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rr_network_max_layer_norm(net: *const RrNetwork, out: *mut f64) -> RrStatus {
    guard(|| {
        *as_mut(out, "out")? = as_ref(net, "net")?.0.max_layer_norm();
        Ok(())
    })
}

/// # Safety
/// `net` must be a handle from this library that has not been freed, or
/// null.
#[no_mangle]
pub unsafe extern "C" fn rr_network_free(net: *mut RrNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

// -------------------------------------------------------------- datasets

/// Opaque dataset handle.
pub struct RrDataset(Dataset);

/// Log-normal contamination model; see `ContaminationConfig`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RrContamination {
    pub sigma: f64,
    pub corruption_level: f64,
    pub gamma: f64,
    pub noise_std: f64,
}

/// Samples `n` rows with `y = f*(x) + noise`, where `oracle` plays `f*` and
/// must lie in its ball.
///
/// # Safety
/// `cfg` and `oracle` must be valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rr_dataset_sample(
    cfg: *const RrContamination,
    oracle: *const RrNetwork,
    n: usize,
    seed: u64,
    out: *mut *mut RrDataset,
) -> RrStatus {
    guard(|| {
        let c = as_ref(cfg, "cfg")?;
        let oracle = OracleNetwork::new(as_ref(oracle, "oracle")?.0.clone())?;
        let cfg =
            ContaminationConfig::log_normal(oracle.input_dim(), c.sigma, c.corruption_level, c.gamma, c.noise_std);
        new_handle(RrDataset(sample_contaminated(&cfg, &oracle, n, seed)?), out)
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rr_dataset_load_csv(path: *const c_char, out: *mut *mut RrDataset) -> RrStatus {
    guard(|| new_handle(RrDataset(Dataset::load_csv(as_str(path, "path")?)?), out))
}

/// # Safety
/// `data` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rr_dataset_save_csv(data: *const RrDataset, path: *const c_char) -> RrStatus {
    guard(|| Ok(as_ref(data, "data")?.0.save_csv(as_str(path, "path")?)?))
}

/// Number of rows, or 0 for a null handle.
///
/// # Safety
/// `data` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn rr_dataset_len(data: *const RrDataset) -> usize {
    data.as_ref().map_or(0, |d| d.0.len())
}

/// Input dimension, or 0 for a null handle.
///
/// # Safety
/// `data` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn rr_dataset_dim(data: *const RrDataset) -> usize {
    data.as_ref().map_or(0, |d| d.0.dim())
}

/// # Safety
/// `data` must be a handle from this library that has not been freed, or
/// null.
#[no_mangle]
pub unsafe extern "C" fn rr_dataset_free(data: *mut RrDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

// -------------------------------------------------------------- training

/// Projected subgradient descent settings. `batch_size = 0` means full
/// batch; `init_scale < 0` selects the default `ball_radius / sqrt(width)`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RrTrainOptions {
    pub step_size: f64,
    pub iterations: usize,
    pub batch_size: usize,
    pub init_scale: f64,
    pub restarts: usize,
    pub seed: u64,
}

/// Library defaults.
#[no_mangle]
pub extern "C" fn rr_train_options_default() -> RrTrainOptions {
    let d = TrainConfig::default();
    RrTrainOptions {
        step_size: d.step_size,
        iterations: d.iterations,
        batch_size: 0,
        init_scale: -1.0,
        restarts: d.restarts,
        seed: d.seed,
    }
}

/// Trains a network of architecture `arch` in the ball of radius
/// `ball_radius`; writes the best iterate and its empirical risk.
///
/// # Safety
/// Pointers must be valid; `opts` may be null for the defaults.
#[no_mangle]
pub unsafe extern "C" fn rr_train(
    data: *const RrDataset,
    loss: RrLoss,
    arch: *const c_char,
    ball_radius: f64,
    opts: *const RrTrainOptions,
    out_net: *mut *mut RrNetwork,
    out_risk: *mut f64,
) -> RrStatus {
    guard(|| {
        let data = as_ref(data, "data")?;
        let arch: Architecture = as_str(arch, "arch")?.parse()?;
        let o = opts.as_ref().copied().unwrap_or_else(|| rr_train_options_default());
        let cfg = TrainConfig {
            step_size: o.step_size,
            iterations: o.iterations,
            batch_size: if o.batch_size == 0 { BatchSize::Full } else { BatchSize::Mini(o.batch_size) },
            init_scale: (o.init_scale >= 0.0).then_some(o.init_scale),
            restarts: o.restarts,
            seed: o.seed,
        };
        let risk_out = as_mut(out_risk, "out_risk")?;
        let result = train_erm(&data.0, &loss.to_loss()?, &arch, ball_radius, &cfg)?;
        *risk_out = result.best_empirical_risk;
        new_handle(RrNetwork(result.params), out_net)
    })
}

// ---------------------------------------------------- complexity & bounds

/// `3 b^{l+1} √(l+1) s_x / √n`.
#[no_mangle]
pub extern "C" fn rr_rademacher_upper_bound(b: f64, l: usize, s_x: f64, n: usize) -> f64 {
    rademacher_upper_bound(b, l, s_x, n)
}

/// `4 b^{l+1} l s_x`.
#[no_mangle]
pub extern "C" fn rr_envelope_upper_bound(b: f64, l: usize, s_x: f64) -> f64 {
    envelope_upper_bound(b, l, s_x)
}

/// `sqrt(mean ‖x_i‖²)` of a dataset.
///
/// # Safety
/// `data` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rr_estimate_s_x(data: *const RrDataset, out: *mut f64) -> RrStatus {
    guard(|| {
        *as_mut(out, "out")? = estimate_s_x(&as_ref(data, "data")?.0)?;
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RrBoundInputs {
    pub empirical_risk: f64,
    pub oracle_population_risk: f64,
    pub oracle_empirical_risk: f64,
    pub c_h: f64,
    pub c_f: f64,
    pub w_f: f64,
    pub s_x: f64,
    pub s_y_given_x: f64,
    pub n: usize,
    pub t: f64,
    pub b: f64,
    pub l: usize,
    pub a_constant: f64,
}

/// Bounds whose preconditions fail are reported as NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RrBoundReport {
    pub theorem1_rhs: f64,
    pub corollary2_rhs: f64,
    pub theorem3_first_rhs: f64,
    pub theorem3_second_rhs: f64,
    pub theorem3_second_valid: bool,
}

/// # Safety
/// `inputs` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rr_bound_report(inputs: *const RrBoundInputs, out: *mut RrBoundReport) -> RrStatus {
    guard(|| {
        let i = as_ref(inputs, "inputs")?;
        let report = bound_report(&BoundInputs {
            empirical_risk: i.empirical_risk,
            oracle_population_risk: i.oracle_population_risk,
            oracle_empirical_risk: i.oracle_empirical_risk,
            c_h: i.c_h,
            c_f: i.c_f,
            w_f: i.w_f,
            s_x: i.s_x,
            s_y_given_x: i.s_y_given_x,
            n: i.n,
            t: i.t,
            b: i.b,
            l: i.l,
            a_constant: i.a_constant,
        })?;
        *as_mut(out, "out")? = RrBoundReport {
            theorem1_rhs: report.theorem1_rhs,
            corollary2_rhs: report.corollary2_rhs,
            theorem3_first_rhs: report.theorem3_first_rhs.unwrap_or(f64::NAN),
            theorem3_second_rhs: report.theorem3_second_rhs.unwrap_or(f64::NAN),
            theorem3_second_valid: report.theorem3_second_valid,
        };
        Ok(())
    })
}

/// The constant `a` used by the large-sample bounds.
#[no_mangle]
pub extern "C" fn rr_default_a_constant() -> f64 {
    robustrisk::DEFAULT_A_CONSTANT
}
