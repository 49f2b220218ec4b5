//! C ABI for embedding the islandrun router, sanitizer, and simulator.
//!
//! Conventions:
//! - Every function returns an [`IrStatus`] code; `IR_STATUS_OK` is zero.
//! - Structured inputs and outputs are NUL-terminated UTF-8 JSON strings.
//!   Output strings are allocated by this library and must be released with
//!   [`ir_string_free`].
//! - Handles (`IrEngine`, `IrCatalog`) are opaque; release them with their
//!   `_free` function. Passing NULL to a `_free` function is a no-op.
//! - [`ir_last_error`] returns a thread-local message describing the most
//!   recent failure on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_double, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use std::str::FromStr as _;

use islandrun::config::ScenarioConfig;
use islandrun::harness::{run_scenario, Agent, Policy};
use islandrun::mist::{desanitize, shared_analyzer, PlaceholderMap, SessionId};
use islandrun::registry::{compose_trust, Catalog, IslandDeclaration, TrustInputs, TrustMode};
use islandrun::tide::compute_available;
use islandrun::waves::{InferenceRequest, RouteContext};

/// Status codes returned by every API function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IrStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// An input string was not valid UTF-8.
    InvalidUtf8 = 2,
    /// JSON or TOML input failed to parse.
    ParseError = 3,
    /// Input parsed but violated a domain invariant.
    ValidationError = 4,
    /// Duplicate registration or similar conflict.
    ConflictError = 5,
    /// Simulation or I/O failure at run time.
    RuntimeError = 6,
    /// The orchestrated policy detected a privacy violation and aborted.
    PrivacyViolation = 7,
    /// An internal panic was caught at the boundary.
    InternalPanic = 8,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl std::fmt::Display) {
    let text = message.to_string().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(text).unwrap_or_default();
    });
}

/// Message for the most recent failure on this thread. The pointer is valid
/// until the next failing call on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn ir_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Release a string returned by this library.
///
/// # Safety
/// `ptr` must be a pointer previously returned via an out-parameter of this
/// library (or NULL), not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ir_string_free(ptr: *mut c_char) {
    if !ptr.is_null() {
        drop(CString::from_raw(ptr));
    }
}

unsafe fn read_str<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, IrStatus> {
    if ptr.is_null() {
        set_error(format!("{what} must not be NULL"));
        return Err(IrStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        IrStatus::InvalidUtf8
    })
}

fn write_out(text: String, out: *mut *mut c_char) -> IrStatus {
    if out.is_null() {
        set_error("output pointer must not be NULL");
        return IrStatus::NullArgument;
    }
    match CString::new(text) {
        Ok(cstring) => {
            unsafe { *out = cstring.into_raw() };
            IrStatus::Ok
        }
        Err(_) => {
            set_error("output contained an interior NUL byte");
            IrStatus::RuntimeError
        }
    }
}

fn guard(body: impl FnOnce() -> IrStatus) -> IrStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            IrStatus::InternalPanic
        }
    }
}

// --- trust and capacity primitives -----------------------------------------

/// Compose a trust score from owner-declared components.
/// `mode`: 0 = min composition, 1 = product composition.
///
/// # Safety
/// `out_trust` must point to writable memory for one double.
#[no_mangle]
pub unsafe extern "C" fn ir_compose_trust(
    base: c_double,
    certification: c_double,
    jurisdiction: c_double,
    mode: c_int,
    out_trust: *mut c_double,
) -> IrStatus {
    guard(|| {
        if out_trust.is_null() {
            set_error("out_trust must not be NULL");
            return IrStatus::NullArgument;
        }
        let mode = match mode {
            0 => TrustMode::Min,
            1 => TrustMode::Product,
            other => {
                set_error(format!("unknown trust mode {other}"));
                return IrStatus::ValidationError;
            }
        };
        match compose_trust(&TrustInputs::new(base, certification, jurisdiction), mode) {
            Ok(trust) => {
                unsafe { *out_trust = trust };
                IrStatus::Ok
            }
            Err(err) => {
                set_error(err);
                IrStatus::ValidationError
            }
        }
    })
}

/// Available capacity `R = 1 - max(cpu/100, gpu/100, mem_used/mem_total)`.
///
/// # Safety
/// `out_available` must point to writable memory for one double.
#[no_mangle]
pub unsafe extern "C" fn ir_compute_available(
    cpu_pct: c_double,
    gpu_pct: c_double,
    mem_used: u64,
    mem_total: u64,
    out_available: *mut c_double,
) -> IrStatus {
    guard(|| {
        if out_available.is_null() {
            set_error("out_available must not be NULL");
            return IrStatus::NullArgument;
        }
        match compute_available(cpu_pct, gpu_pct, mem_used, mem_total) {
            Ok(available) => {
                unsafe { *out_available = available };
                IrStatus::Ok
            }
            Err(err) => {
                set_error(err);
                IrStatus::ValidationError
            }
        }
    })
}

// --- catalog ---------------------------------------------------------------

/// Opaque island catalog handle.
pub struct IrCatalog {
    inner: Catalog,
}

/// Create an empty catalog. `trust_mode`: 0 = min, 1 = product.
///
/// # Safety
/// `out_catalog` must point to writable memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn ir_catalog_new(trust_mode: c_int, out_catalog: *mut *mut IrCatalog) -> IrStatus {
    guard(|| {
        if out_catalog.is_null() {
            set_error("out_catalog must not be NULL");
            return IrStatus::NullArgument;
        }
        let mode = match trust_mode {
            0 => TrustMode::Min,
            1 => TrustMode::Product,
            other => {
                set_error(format!("unknown trust mode {other}"));
                return IrStatus::ValidationError;
            }
        };
        let handle = Box::new(IrCatalog {
            inner: Catalog::new(mode),
        });
        unsafe { *out_catalog = Box::into_raw(handle) };
        IrStatus::Ok
    })
}

/// Release a catalog handle.
///
/// # Safety
/// `catalog` must be a pointer from [`ir_catalog_new`] (or NULL), not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn ir_catalog_free(catalog: *mut IrCatalog) {
    if !catalog.is_null() {
        drop(Box::from_raw(catalog));
    }
}

/// Validate and register one island declaration (JSON).
///
/// # Safety
/// `catalog` must be a live handle from [`ir_catalog_new`];
/// `declaration_json` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ir_catalog_register_json(
    catalog: *mut IrCatalog,
    declaration_json: *const c_char,
) -> IrStatus {
    guard(|| {
        if catalog.is_null() {
            set_error("catalog must not be NULL");
            return IrStatus::NullArgument;
        }
        let text = match read_str(declaration_json, "declaration_json") {
            Ok(text) => text,
            Err(status) => return status,
        };
        let declaration: IslandDeclaration = match serde_json::from_str(text) {
            Ok(declaration) => declaration,
            Err(err) => {
                set_error(err);
                return IrStatus::ParseError;
            }
        };
        let catalog = &mut (*catalog).inner;
        match catalog.register(declaration) {
            Ok(_) => IrStatus::Ok,
            Err(err @ islandrun::registry::RegistryError::DuplicateIsland(_)) => {
                set_error(err);
                IrStatus::ConflictError
            }
            Err(err) => {
                set_error(err);
                IrStatus::ValidationError
            }
        }
    })
}

/// Number of registered islands.
///
/// # Safety
/// `catalog` must be a live handle from [`ir_catalog_new`].
#[no_mangle]
pub unsafe extern "C" fn ir_catalog_len(catalog: *const IrCatalog) -> usize {
    if catalog.is_null() {
        return 0;
    }
    (*catalog).inner.len()
}

// --- engine ------------------------------------------------------------------

/// Opaque routing engine: catalog, capacity monitor, and router built from a
/// scenario configuration.
pub struct IrEngine {
    scenario: islandrun::config::Scenario,
}

fn engine_from_config(config: &ScenarioConfig, out_engine: *mut *mut IrEngine) -> IrStatus {
    match config.build() {
        Ok(scenario) => {
            let handle = Box::new(IrEngine { scenario });
            unsafe { *out_engine = Box::into_raw(handle) };
            IrStatus::Ok
        }
        Err(err) => {
            set_error(err);
            IrStatus::ValidationError
        }
    }
}

/// Build an engine from scenario TOML text.
///
/// # Safety
/// `config_toml` must be a NUL-terminated string; `out_engine` non-NULL.
#[no_mangle]
pub unsafe extern "C" fn ir_engine_from_toml(
    config_toml: *const c_char,
    out_engine: *mut *mut IrEngine,
) -> IrStatus {
    guard(|| {
        if out_engine.is_null() {
            set_error("out_engine must not be NULL");
            return IrStatus::NullArgument;
        }
        let text = match read_str(config_toml, "config_toml") {
            Ok(text) => text,
            Err(status) => return status,
        };
        match ScenarioConfig::from_str(text) {
            Ok(config) => engine_from_config(&config, out_engine),
            Err(err) => {
                set_error(err);
                IrStatus::ParseError
            }
        }
    })
}

/// Build an engine from a scenario file path.
///
/// # Safety
/// `config_path` must be a NUL-terminated string; `out_engine` non-NULL.
#[no_mangle]
pub unsafe extern "C" fn ir_engine_from_file(
    config_path: *const c_char,
    out_engine: *mut *mut IrEngine,
) -> IrStatus {
    guard(|| {
        if out_engine.is_null() {
            set_error("out_engine must not be NULL");
            return IrStatus::NullArgument;
        }
        let path = match read_str(config_path, "config_path") {
            Ok(path) => path,
            Err(status) => return status,
        };
        match ScenarioConfig::from_path(path) {
            Ok(config) => engine_from_config(&config, out_engine),
            Err(err) => {
                set_error(err);
                IrStatus::ParseError
            }
        }
    })
}

/// Release an engine handle.
///
/// # Safety
/// `engine` must be a pointer from an `ir_engine_from_*` call (or NULL),
/// not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ir_engine_free(engine: *mut IrEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Route one request (JSON `InferenceRequest`) at a simulation tick.
/// Writes the routing decision as JSON. `session_token` seeds the
/// sanitization map id; pass NULL for a random session.
///
/// # Safety
/// `engine` must be a live engine handle; `request_json` NUL-terminated;
/// `out_decision_json` non-NULL.
#[no_mangle]
pub unsafe extern "C" fn ir_engine_route_json(
    engine: *mut IrEngine,
    request_json: *const c_char,
    tick: u64,
    session_token: *const c_char,
    out_decision_json: *mut *mut c_char,
) -> IrStatus {
    guard(|| {
        if engine.is_null() {
            set_error("engine must not be NULL");
            return IrStatus::NullArgument;
        }
        let text = match read_str(request_json, "request_json") {
            Ok(text) => text,
            Err(status) => return status,
        };
        let mut request: InferenceRequest = match serde_json::from_str(text) {
            Ok(request) => request,
            Err(err) => {
                set_error(err);
                return IrStatus::ParseError;
            }
        };
        if !(0.0..=1.0).contains(&request.sensitivity) || request.deadline_ms <= 0.0 {
            set_error("sensitivity must lie in [0,1] and deadline_ms must be positive");
            return IrStatus::ValidationError;
        }
        // attach the analyzed score when the caller left sensitivity at 0
        if request.sensitivity == 0.0 {
            request.sensitivity = shared_analyzer().analyze_sensitivity(&request.prompt).score;
        }
        let session = if session_token.is_null() {
            SessionId::random()
        } else {
            match read_str(session_token, "session_token") {
                Ok(token) => SessionId::new(token),
                Err(status) => return status,
            }
        };
        let scenario = &(*engine).scenario;
        let decision = scenario.router.route(
            &request,
            RouteContext {
                catalog: &scenario.catalog,
                alive: None,
                tide: &scenario.tide,
                tick,
                sanitizer: shared_analyzer(),
                session,
            },
        );
        match serde_json::to_string(&decision) {
            Ok(json) => write_out(json, out_decision_json),
            Err(err) => {
                set_error(err);
                IrStatus::RuntimeError
            }
        }
    })
}

// --- sensitivity and sanitization ------------------------------------------

/// Analyze prompt sensitivity; writes a JSON report
/// `{score, triggers: [...], stage2_class}`.
///
/// # Safety
/// `prompt` must be NUL-terminated; `out_report_json` non-NULL.
#[no_mangle]
pub unsafe extern "C" fn ir_analyze_sensitivity(
    prompt: *const c_char,
    out_report_json: *mut *mut c_char,
) -> IrStatus {
    guard(|| {
        let text = match read_str(prompt, "prompt") {
            Ok(text) => text,
            Err(status) => return status,
        };
        let report = shared_analyzer().analyze_sensitivity(text);
        match serde_json::to_string(&report) {
            Ok(json) => write_out(json, out_report_json),
            Err(err) => {
                set_error(err);
                IrStatus::RuntimeError
            }
        }
    })
}

/// Detect entities; writes a JSON array of `{kind, start, end, surface}`.
///
/// # Safety
/// `text` must be NUL-terminated; `out_entities_json` non-NULL.
#[no_mangle]
pub unsafe extern "C" fn ir_detect_entities(
    text: *const c_char,
    out_entities_json: *mut *mut c_char,
) -> IrStatus {
    guard(|| {
        let text = match read_str(text, "text") {
            Ok(text) => text,
            Err(status) => return status,
        };
        let entities = shared_analyzer().detect_entities(text);
        match serde_json::to_string(&entities) {
            Ok(json) => write_out(json, out_entities_json),
            Err(err) => {
                set_error(err);
                IrStatus::RuntimeError
            }
        }
    })
}

/// Sanitize a history (JSON array of turn strings) for a target privacy
/// score. Writes a JSON `{turns, map}` document whose map reverses the
/// substitution.
///
/// # Safety
/// `history_json` and `session_token` (nullable) must be NUL-terminated;
/// `out_sanitized_json` non-NULL.
#[no_mangle]
pub unsafe extern "C" fn ir_sanitize(
    history_json: *const c_char,
    target_privacy: c_double,
    session_token: *const c_char,
    out_sanitized_json: *mut *mut c_char,
) -> IrStatus {
    guard(|| {
        let text = match read_str(history_json, "history_json") {
            Ok(text) => text,
            Err(status) => return status,
        };
        let turns: Vec<String> = match serde_json::from_str(text) {
            Ok(turns) => turns,
            Err(err) => {
                set_error(err);
                return IrStatus::ParseError;
            }
        };
        if !(0.0..1.0).contains(&target_privacy) {
            set_error("target_privacy must lie in [0, 1); fully trusted targets bypass sanitization");
            return IrStatus::ValidationError;
        }
        let session = if session_token.is_null() {
            SessionId::random()
        } else {
            match read_str(session_token, "session_token") {
                Ok(token) => SessionId::new(token),
                Err(status) => return status,
            }
        };
        let sanitized = shared_analyzer().sanitize(&turns, target_privacy, session);
        match serde_json::to_string(&sanitized) {
            Ok(json) => write_out(json, out_sanitized_json),
            Err(err) => {
                set_error(err);
                IrStatus::RuntimeError
            }
        }
    })
}

/// Reverse placeholders in a response using a map JSON produced by
/// [`ir_sanitize`] (the `map` field). Writes JSON
/// `{text, unknown_placeholders}`.
///
/// # Safety
/// `response` and `map_json` must be NUL-terminated; `out_json` non-NULL.
#[no_mangle]
pub unsafe extern "C" fn ir_desanitize(
    response: *const c_char,
    map_json: *const c_char,
    out_json: *mut *mut c_char,
) -> IrStatus {
    guard(|| {
        let response = match read_str(response, "response") {
            Ok(response) => response,
            Err(status) => return status,
        };
        let map_text = match read_str(map_json, "map_json") {
            Ok(map_text) => map_text,
            Err(status) => return status,
        };
        let map: PlaceholderMap = match serde_json::from_str(map_text) {
            Ok(map) => map,
            Err(err) => {
                set_error(err);
                return IrStatus::ParseError;
            }
        };
        let restored = desanitize(response, &map);
        match serde_json::to_string(&restored) {
            Ok(json) => write_out(json, out_json),
            Err(err) => {
                set_error(err);
                IrStatus::RuntimeError
            }
        }
    })
}

// --- simulation -----------------------------------------------------------------

/// Run a scenario file under a policy. `policy` is one of `islandrun`,
/// `cloud-only`, `local-only`, `latency-greedy`, `privacy-only`; `disable`
/// is NULL or one of `mist`, `tide`, `lighthouse`. Writes the metrics as
/// JSON; `out_trace` (nullable) receives the full trace text.
///
/// # Safety
/// String arguments must be NUL-terminated; `out_metrics_json` non-NULL.
#[no_mangle]
pub unsafe extern "C" fn ir_run_scenario_file(
    config_path: *const c_char,
    policy: *const c_char,
    disable: *const c_char,
    out_metrics_json: *mut *mut c_char,
    out_trace: *mut *mut c_char,
) -> IrStatus {
    guard(|| {
        let path = match read_str(config_path, "config_path") {
            Ok(path) => path,
            Err(status) => return status,
        };
        let policy: Policy = match read_str(policy, "policy") {
            Ok(label) => match label.parse() {
                Ok(policy) => policy,
                Err(err) => {
                    set_error(err);
                    return IrStatus::ValidationError;
                }
            },
            Err(status) => return status,
        };
        let disabled: Option<Agent> = if disable.is_null() {
            None
        } else {
            match read_str(disable, "disable") {
                Ok(label) => match label.parse() {
                    Ok(agent) => Some(agent),
                    Err(err) => {
                        set_error(err);
                        return IrStatus::ValidationError;
                    }
                },
                Err(status) => return status,
            }
        };
        let config = match ScenarioConfig::from_path(path) {
            Ok(config) => config,
            Err(err) => {
                set_error(err);
                return IrStatus::ParseError;
            }
        };
        let output = match run_scenario(&config, policy, disabled) {
            Ok(output) => output,
            Err(err @ islandrun::harness::SimError::PrivacyViolation { .. }) => {
                set_error(err);
                return IrStatus::PrivacyViolation;
            }
            Err(err) => {
                set_error(err);
                return IrStatus::RuntimeError;
            }
        };
        let metrics = match serde_json::to_string(&output.metrics) {
            Ok(json) => json,
            Err(err) => {
                set_error(err);
                return IrStatus::RuntimeError;
            }
        };
        if !out_trace.is_null() {
            let status = write_out(output.trace_text(), out_trace);
            if status != IrStatus::Ok {
                return status;
            }
        }
        write_out(metrics, out_metrics_json)
    })
}
