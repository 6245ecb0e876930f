//! C ABI for `blindbeam`.
//!
//! Every fallible function returns a [`BbStatus`]; on failure the message is
//! kept per thread and read with [`bb_last_error`]. Objects are opaque
//! handles created by `*_new`/`*_parse`/`*_realize` style functions and
//! released with the matching `*_free`. Strings returned as `char *` are
//! owned by the caller and released with [`bb_string_free`]; `const char *`
//! results are borrowed from the handle that produced them.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use blindbeam::beamforming::{
    random_beamforming, sequential_cpp_oracle, sequential_csm, virtual_single_irs, zero_phase_baseline,
    BeamformingError, BeamformingResult,
};
use blindbeam::channel::{CascadedChannel, LinkChannelGraph, NoiseMode, RadioParams};
use blindbeam::experiment::{run, ExperimentConfig, ExperimentError, ExperimentKind, ExperimentOutput, Method, Overrides};
use blindbeam::phase::{PhaseAssignment, PhaseGrid};
use blindbeam::rng::{sub_stream, StreamTag};
use blindbeam::scenario::{Scenario, ScenarioError};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BbStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// An argument was out of range or named something unknown.
    InvalidArgument = 3,
    /// A configuration or scenario was rejected.
    Config = 4,
    /// The computation itself failed.
    Runtime = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

/// Experiment settings being assembled key by key.
pub struct BbConfig {
    kind: ExperimentKind,
    overrides: Overrides,
}

/// Rows and summary of a finished experiment.
pub struct BbOutput {
    output: ExperimentOutput,
    csv: CString,
}

/// A deployment description.
pub struct BbScenario {
    scenario: Scenario,
}

/// One realised multi-IRS channel with its phase grids.
pub struct BbChannel {
    graph: LinkChannelGraph,
    grids: Vec<PhaseGrid>,
    radio: RadioParams,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(BbStatus, String);

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        let status = if e.is_config() { BbStatus::Config } else { BbStatus::Runtime };
        Failure(status, e.to_string())
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        let status = match e {
            ScenarioError::Config(_) => BbStatus::Config,
            _ => BbStatus::Runtime,
        };
        Failure(status, e.to_string())
    }
}

impl From<BeamformingError> for Failure {
    fn from(e: BeamformingError) -> Self {
        Failure(BbStatus::Runtime, e.to_string())
    }
}

fn set_last_error(msg: &str) {
    // interior NULs would truncate the message on the C side anyway
    let msg = CString::new(msg.replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

/// Runs `f`, records any failure or panic and maps it to a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> BbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BbStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            BbStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(BbStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(BbStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("NULs removed").into_raw()
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn bb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or null. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn bb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned as `char *`.
///
/// # Safety
/// `s` must be null or a pointer returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// New config for `kind` (`scaling`, `compare`, `conditions`, `examples`,
/// `lemma-check`) with that kind's defaults.
///
/// # Safety
/// `kind` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bb_config_new(kind: *const c_char, out: *mut *mut BbConfig) -> BbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let kind: ExperimentKind = str_arg(kind, "kind")?
            .parse()
            .map_err(|e: String| Failure(BbStatus::InvalidArgument, e))?;
        *out = Box::into_raw(Box::new(BbConfig {
            kind,
            overrides: Overrides::default(),
        }));
        Ok(())
    })
}

/// Sets one config key, as in a config file (`N`, `L`, `K`, `T`, `trials`,
/// `seed`, `methods`, `scenario`, `threads`, ...). The key is checked
/// immediately; a rejected key leaves the config unchanged.
///
/// # Safety
/// `cfg` must come from [`bb_config_new`]; `key` and `value` must be
/// NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn bb_config_set(cfg: *mut BbConfig, key: *const c_char, value: *const c_char) -> BbStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| null("cfg"))?;
        let key = str_arg(key, "key")?;
        let value = str_arg(value, "value")?;
        cfg.overrides.set.push((key.to_string(), value.to_string()));
        if let Err(e) = ExperimentConfig::load(Some(cfg.kind), None, &cfg.overrides) {
            cfg.overrides.set.pop();
            return Err(e.into());
        }
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or come from [`bb_config_new`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn bb_config_free(cfg: *mut BbConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs the configured experiment. Failed assertions (examples, deviation
/// checks) still produce an output; query them with [`bb_output_passed`].
///
/// # Safety
/// `cfg` must come from [`bb_config_new`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bb_run(cfg: *const BbConfig, out: *mut *mut BbOutput) -> BbStatus {
    guard(|| {
        let cfg = ref_arg(cfg, "cfg")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let config = ExperimentConfig::load(Some(cfg.kind), None, &cfg.overrides)?;
        let output = run(&config)?;
        let csv = CString::new(output.csv()).map_err(|e| Failure(BbStatus::Runtime, e.to_string()))?;
        *out = Box::into_raw(Box::new(BbOutput { output, csv }));
        Ok(())
    })
}

/// CSV text of the output, borrowed from `output`.
///
/// # Safety
/// `output` must come from [`bb_run`].
#[no_mangle]
pub unsafe extern "C" fn bb_output_csv(output: *const BbOutput) -> *const c_char {
    output.as_ref().map_or(ptr::null(), |o| o.csv.as_ptr())
}

/// Number of CSV rows, header and summary excluded.
///
/// # Safety
/// `output` must come from [`bb_run`]; `rows` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bb_output_num_rows(output: *const BbOutput, rows: *mut usize) -> BbStatus {
    guard(|| {
        let o = ref_arg(output, "output")?;
        *rows.as_mut().ok_or_else(|| null("rows"))? = o.output.records.len();
        Ok(())
    })
}

/// Whether every assertion of the run held.
///
/// # Safety
/// `output` must come from [`bb_run`]; `passed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bb_output_passed(output: *const BbOutput, passed: *mut bool) -> BbStatus {
    guard(|| {
        let o = ref_arg(output, "output")?;
        *passed.as_mut().ok_or_else(|| null("passed"))? = o.output.passed();
        Ok(())
    })
}

/// # Safety
/// `output` must be null or come from [`bb_run`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn bb_output_free(output: *mut BbOutput) {
    if !output.is_null() {
        drop(Box::from_raw(output));
    }
}

/// Built-in deployment: `double_irs` or `eight_irs`.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bb_scenario_builtin(name: *const c_char, out: *mut *mut BbScenario) -> BbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let scenario = match str_arg(name, "name")? {
            "double_irs" => Scenario::double_irs(),
            "eight_irs" => Scenario::eight_irs(),
            other => return Err(Failure(BbStatus::InvalidArgument, format!("no built-in scenario '{other}'"))),
        };
        *out = Box::into_raw(Box::new(BbScenario { scenario }));
        Ok(())
    })
}

/// Parses a scenario in the key-value file format. Relative `propagation`
/// file references are not allowed here.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bb_scenario_parse(text: *const c_char, out: *mut *mut BbScenario) -> BbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let scenario = Scenario::parse(str_arg(text, "text")?, None)?;
        *out = Box::into_raw(Box::new(BbScenario { scenario }));
        Ok(())
    })
}

/// # Safety
/// `scenario` must be null or come from a `bb_scenario_*` constructor and
/// not be used again.
#[no_mangle]
pub unsafe extern "C" fn bb_scenario_free(scenario: *mut BbScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Draws one channel with `num_elements` per IRS (0 keeps the scenario's
/// own `N`). The same `(seed, trial)` always gives the same channel.
///
/// # Safety
/// `scenario` must come from a `bb_scenario_*` constructor; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn bb_scenario_realize(
    scenario: *const BbScenario,
    num_elements: usize,
    seed: u64,
    trial: u64,
    out: *mut *mut BbChannel,
) -> BbStatus {
    guard(|| {
        let s = &ref_arg(scenario, "scenario")?.scenario;
        if out.is_null() {
            return Err(null("out"));
        }
        let n = if num_elements == 0 { s.num_elements } else { num_elements };
        let mut rng = sub_stream(seed, trial, StreamTag::Scenario, 0);
        let (_, _, graph) = s.realize(n, &mut rng)?;
        *out = Box::into_raw(Box::new(BbChannel {
            graph,
            grids: s.grids(),
            radio: s.radio,
        }));
        Ok(())
    })
}

/// # Safety
/// `channel` must be null or come from [`bb_scenario_realize`] and not be
/// used again.
#[no_mangle]
pub unsafe extern "C" fn bb_channel_free(channel: *mut BbChannel) {
    if !channel.is_null() {
        drop(Box::from_raw(channel));
    }
}

/// Number of IRSs `L` and elements per IRS `N`.
///
/// # Safety
/// `channel` must come from [`bb_scenario_realize`]; `num_irs` and
/// `num_elements` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bb_channel_shape(
    channel: *const BbChannel,
    num_irs: *mut usize,
    num_elements: *mut usize,
) -> BbStatus {
    guard(|| {
        let c = ref_arg(channel, "channel")?;
        *num_irs.as_mut().ok_or_else(|| null("num_irs"))? = c.graph.num_irs();
        *num_elements.as_mut().ok_or_else(|| null("num_elements"))? = c.graph.num_elements();
        Ok(())
    })
}

unsafe fn assignment_from(c: &BbChannel, indices: *const u32, len: usize) -> Result<PhaseAssignment, Failure> {
    let (l, n) = (c.graph.num_irs(), c.graph.num_elements());
    if indices.is_null() {
        return Err(null("indices"));
    }
    if len != l * n {
        return Err(Failure(BbStatus::InvalidArgument, format!("expected {} indices (L*N), got {len}", l * n)));
    }
    let flat = std::slice::from_raw_parts(indices, len);
    let rows = flat.chunks(n).map(|r| r.iter().map(|&i| i as usize).collect()).collect();
    PhaseAssignment::new(c.grids.clone(), rows).map_err(|e| Failure(BbStatus::InvalidArgument, e.to_string()))
}

/// Effective channel `g` for phase indices laid out IRS by IRS (`L*N`
/// entries, each below that IRS's `K`).
///
/// # Safety
/// `channel` must come from [`bb_scenario_realize`]; `indices` must point to
/// `len` values; `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bb_channel_effective(
    channel: *const BbChannel,
    indices: *const u32,
    len: usize,
    re: *mut f64,
    im: *mut f64,
) -> BbStatus {
    guard(|| {
        let c = ref_arg(channel, "channel")?;
        let p = assignment_from(c, indices, len)?;
        let g = c.graph.effective(&p).map_err(|e| Failure(BbStatus::Runtime, e.to_string()))?;
        *re.as_mut().ok_or_else(|| null("re"))? = g.re;
        *im.as_mut().ok_or_else(|| null("im"))? = g.im;
        Ok(())
    })
}

fn beamform(c: &BbChannel, method: Method, samples: usize, seed: u64) -> Result<BeamformingResult, Failure> {
    let (grids, params, mode) = (&c.grids, &c.radio, NoiseMode::Noiseless);
    let budget = grids.len() * samples;
    let rng = |tag| sub_stream(seed, 0, tag, 0);
    Ok(match method {
        Method::Zero => zero_phase_baseline(&c.graph, grids, params)?,
        Method::Cpp => sequential_cpp_oracle(&c.graph, grids, params)?,
        Method::Csm => sequential_csm(&c.graph, grids, samples, params, mode, false, &mut rng(StreamTag::Sampling))?,
        Method::Random => random_beamforming(&c.graph, grids, budget, params, mode, &mut rng(StreamTag::Random))?,
        Method::VirtualSingle => {
            virtual_single_irs(&c.graph, grids, budget, params, mode, &mut rng(StreamTag::VirtualSingle))?
        }
    })
}

/// Runs one method (`zero`, `random`, `virtual-single`, `csm`, `cpp`) on a
/// noiseless channel. `samples` is `T` per IRS for `csm` and `T` per IRS
/// times `L` for the joint methods; it is ignored by `zero` and `cpp`.
///
/// Each optional output may be null: `indices` receives `L*N` phase
/// indices (`len` must equal `L*N`), `boost` the SNR boost, `json` the full
/// result as an owned string.
///
/// # Safety
/// `channel` must come from [`bb_scenario_realize`]; `method` must be a
/// NUL-terminated string; non-null outputs must be writable and `indices`
/// must have room for `len` values.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn bb_channel_beamform(
    channel: *const BbChannel,
    method: *const c_char,
    samples: usize,
    seed: u64,
    indices: *mut u32,
    len: usize,
    boost: *mut f64,
    json: *mut *mut c_char,
) -> BbStatus {
    guard(|| {
        let c = ref_arg(channel, "channel")?;
        let method: Method = str_arg(method, "method")?
            .parse()
            .map_err(|e: String| Failure(BbStatus::InvalidArgument, e))?;
        let (l, n) = (c.graph.num_irs(), c.graph.num_elements());
        if !indices.is_null() && len != l * n {
            return Err(Failure(BbStatus::InvalidArgument, format!("expected room for {} indices, got {len}", l * n)));
        }
        let res = beamform(c, method, samples, seed)?;
        if !indices.is_null() {
            let dst = std::slice::from_raw_parts_mut(indices, len);
            for (d, &s) in dst.iter_mut().zip(res.assignment.indices().iter().flatten()) {
                *d = s as u32;
            }
        }
        if let Some(b) = boost.as_mut() {
            *b = res.boost.value();
        }
        if let Some(j) = json.as_mut() {
            let text = serde_json::to_string(&res).map_err(|e| Failure(BbStatus::Runtime, e.to_string()))?;
            *j = owned_string(text);
        }
        Ok(())
    })
}
