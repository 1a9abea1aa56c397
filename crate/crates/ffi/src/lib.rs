//! C ABI over `polotdr`.
//!
//! Every function returns a [`PolotdrStatus`]; results come back through out
//! pointers. On failure `polotdr_last_error` gives a message that stays valid
//! until the next call on the same thread. Strings handed out by the library
//! must be released with `polotdr_string_free`, handles with their own
//! `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use polotdr::config::{emit_manifest, parse_config_str, ManifestInfo};
use polotdr::estimators::{phase_mimo, phase_simo, phase_siso, PhaseEstimate};
use polotdr::experiments::{run_scenario, ScenarioConfig, ScenarioOutput};
use polotdr::fiber::{backscatter_matrix, sample_fiber, FiberRealization, FiberSpec, SegmentParams};
use polotdr::output::{manifest_notes, tables};
use polotdr::{Complex, Error, JonesMatrix};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolotdrStatus {
    Ok = 0,
    NullPointer = 1,
    /// Invalid argument or configuration.
    Config = 2,
    /// Malformed data or a scheme the data cannot feed.
    Data = 3,
    Io = 4,
    /// Index outside a handle's range.
    OutOfRange = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PolotdrComplex {
    pub re: f64,
    pub im: f64,
}

/// Row-major Jones matrix `[[xx, xy], [yx, yy]]`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PolotdrJones {
    pub xx: PolotdrComplex,
    pub xy: PolotdrComplex,
    pub yx: PolotdrComplex,
    pub yy: PolotdrComplex,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PolotdrFiberSpec {
    pub length_m: f64,
    pub segment_length_m: f64,
    pub alpha_db_per_km: f64,
    pub scatterers_per_segment: u32,
    pub group_index: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PolotdrSegment {
    pub theta_cap: f64,
    pub beta: f64,
    pub gamma: f64,
    pub attenuation: f64,
    pub phasor: PolotdrComplex,
    pub z_m: f64,
    pub tau_s: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PolotdrPhase {
    pub value: f64,
    /// Nonzero when the operand fell below the fading floor.
    pub flagged: u8,
}

/// Opaque fiber realization.
pub struct PolotdrFiber(FiberRealization);

/// Opaque resolved scenario.
pub struct PolotdrScenario(ScenarioConfig);

/// Opaque scenario result: named CSV tables plus the manifest.
pub struct PolotdrResult {
    tables: Vec<(String, String)>,
    manifest: String,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(PolotdrStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.exit_code() {
            3 => PolotdrStatus::Data,
            4 => PolotdrStatus::Io,
            _ => PolotdrStatus::Config,
        };
        Failure(status, format!("{}: {e}", e.code()))
    }
}

fn null(what: &str) -> Failure {
    Failure(PolotdrStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PolotdrStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PolotdrStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {msg}"));
            PolotdrStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(p: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

fn to_c_string(s: &str) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(PolotdrStatus::Data, "string contains NUL".into()))
}

fn complex(c: Complex) -> PolotdrComplex {
    PolotdrComplex { re: c.re, im: c.im }
}

fn from_complex(c: PolotdrComplex) -> Complex {
    Complex::new(c.re, c.im)
}

fn jones(h: &JonesMatrix) -> PolotdrJones {
    PolotdrJones {
        xx: complex(h.xx()),
        xy: complex(h.xy()),
        yx: complex(h.yx()),
        yy: complex(h.yy()),
    }
}

fn from_jones(h: &PolotdrJones) -> Result<JonesMatrix, Failure> {
    Ok(JonesMatrix::new(
        from_complex(h.xx),
        from_complex(h.xy),
        from_complex(h.yx),
        from_complex(h.yy),
    )?)
}

fn spec_from(s: &PolotdrFiberSpec) -> FiberSpec {
    FiberSpec {
        length_m: s.length_m,
        segment_length_m: s.segment_length_m,
        alpha_db_per_km: s.alpha_db_per_km,
        scatterers_per_segment: s.scatterers_per_segment,
        group_index: s.group_index,
    }
}

fn segment(s: &SegmentParams) -> PolotdrSegment {
    PolotdrSegment {
        theta_cap: s.theta_cap,
        beta: s.beta,
        gamma: s.gamma,
        attenuation: s.attenuation,
        phasor: complex(s.phasor),
        z_m: s.z_m,
        tau_s: s.tau_s,
    }
}

fn segment_from(s: &PolotdrSegment) -> SegmentParams {
    SegmentParams {
        theta_cap: s.theta_cap,
        beta: s.beta,
        gamma: s.gamma,
        attenuation: s.attenuation,
        phasor: from_complex(s.phasor),
        z_m: s.z_m,
        tau_s: s.tau_s,
    }
}

fn phase(e: PhaseEstimate) -> PolotdrPhase {
    PolotdrPhase {
        value: e.value,
        flagged: e.flagged as u8,
    }
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn polotdr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread ("" after a success).
#[no_mangle]
pub extern "C" fn polotdr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn polotdr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn polotdr_fiber_spec_default(out: *mut PolotdrFiberSpec) -> PolotdrStatus {
    guard(|| {
        let d = FiberSpec::default();
        let spec = PolotdrFiberSpec {
            length_m: d.length_m,
            segment_length_m: d.segment_length_m,
            alpha_db_per_km: d.alpha_db_per_km,
            scatterers_per_segment: d.scatterers_per_segment,
            group_index: d.group_index,
        };
        write_out(out, spec, "out")
    })
}

/// Draws a fiber realization.
///
/// # Safety
/// `spec` must point to a valid spec; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn polotdr_fiber_sample(
    spec: *const PolotdrFiberSpec,
    seed: u64,
    out: *mut *mut PolotdrFiber,
) -> PolotdrStatus {
    guard(|| {
        let spec = spec_from(deref(spec, "spec")?);
        if out.is_null() {
            return Err(null("out"));
        }
        let fiber = sample_fiber(&spec, seed)?;
        out.write(Box::into_raw(Box::new(PolotdrFiber(fiber))));
        Ok(())
    })
}

/// # Safety
/// `fiber` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn polotdr_fiber_len(fiber: *const PolotdrFiber, out: *mut usize) -> PolotdrStatus {
    guard(|| write_out(out, deref(fiber, "fiber")?.0.len(), "out"))
}

/// # Safety
/// `fiber` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn polotdr_fiber_segment(
    fiber: *const PolotdrFiber,
    index: usize,
    out: *mut PolotdrSegment,
) -> PolotdrStatus {
    guard(|| {
        let f = &deref(fiber, "fiber")?.0;
        let s = f.segments.get(index).ok_or_else(|| {
            Failure(
                PolotdrStatus::OutOfRange,
                format!("segment {index} of a {}-segment fiber", f.len()),
            )
        })?;
        write_out(out, segment(s), "out")
    })
}

/// # Safety
/// `fiber` must be null or a handle from `polotdr_fiber_sample`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn polotdr_fiber_free(fiber: *mut PolotdrFiber) {
    if !fiber.is_null() {
        drop(Box::from_raw(fiber));
    }
}

/// Backscatter Jones matrix of a segment under TX/RX misalignment `theta_mis`.
///
/// # Safety
/// `seg` must be valid for reads and `out` for writes.
#[no_mangle]
pub unsafe extern "C" fn polotdr_backscatter_matrix(
    seg: *const PolotdrSegment,
    theta_mis: f64,
    out: *mut PolotdrJones,
) -> PolotdrStatus {
    guard(|| {
        let seg = segment_from(deref(seg, "seg")?);
        let h = backscatter_matrix(&seg, theta_mis)?;
        write_out(out, jones(&h), "out")
    })
}

/// `½·∠det H`, flagged when `|det H| < floor²`.
///
/// # Safety
/// `h` must be valid for reads and `out` for writes.
#[no_mangle]
pub unsafe extern "C" fn polotdr_phase_mimo(
    h: *const PolotdrJones,
    floor: f64,
    out: *mut PolotdrPhase,
) -> PolotdrStatus {
    guard(|| {
        let h = from_jones(deref(h, "h")?)?;
        write_out(out, phase(phase_mimo(&h, floor)), "out")
    })
}

/// `∠(h_xx + h_yx)`, flagged when the sum is below `floor`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn polotdr_phase_simo(
    h_xx: PolotdrComplex,
    h_yx: PolotdrComplex,
    floor: f64,
    out: *mut PolotdrPhase,
) -> PolotdrStatus {
    guard(|| write_out(out, phase(phase_simo(from_complex(h_xx), from_complex(h_yx), floor)), "out"))
}

/// `∠h_xx`, flagged when `|h_xx|` is below `floor`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn polotdr_phase_siso(h_xx: PolotdrComplex, floor: f64, out: *mut PolotdrPhase) -> PolotdrStatus {
    guard(|| write_out(out, phase(phase_siso(from_complex(h_xx), floor)), "out"))
}

/// Parses and resolves a scenario from the flat TOML key/value format.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn polotdr_scenario_from_toml(
    toml: *const c_char,
    out: *mut *mut PolotdrScenario,
) -> PolotdrStatus {
    guard(|| {
        if toml.is_null() {
            return Err(null("toml"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(toml)
            .to_str()
            .map_err(|_| Failure(PolotdrStatus::Config, "scenario text is not UTF-8".into()))?;
        let cfg = parse_config_str(text)?;
        out.write(Box::into_raw(Box::new(PolotdrScenario(cfg))));
        Ok(())
    })
}

/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn polotdr_scenario_set_seed(scenario: *mut PolotdrScenario, seed: u64) -> PolotdrStatus {
    guard(|| {
        scenario.as_mut().ok_or_else(|| null("scenario"))?.0.master_seed = seed;
        Ok(())
    })
}

/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn polotdr_scenario_free(scenario: *mut PolotdrScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs the scenario. The result holds the CSV tables the CLI would write.
///
/// # Safety
/// `scenario` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn polotdr_scenario_run(
    scenario: *const PolotdrScenario,
    out: *mut *mut PolotdrResult,
) -> PolotdrStatus {
    guard(|| {
        let cfg = &deref(scenario, "scenario")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let output: ScenarioOutput = run_scenario(cfg)?;
        let info = ManifestInfo {
            tool_version: env!("CARGO_PKG_VERSION").into(),
            timestamp_unix_s: 0,
            notes: manifest_notes(cfg, &output),
        };
        let result = PolotdrResult {
            tables: tables(&output),
            manifest: emit_manifest(cfg, &info)?,
        };
        out.write(Box::into_raw(Box::new(result)));
        Ok(())
    })
}

/// # Safety
/// `result` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn polotdr_result_table_count(result: *const PolotdrResult, out: *mut usize) -> PolotdrStatus {
    guard(|| write_out(out, deref(result, "result")?.tables.len(), "out"))
}

/// Copies table `index` out as two new strings (name and CSV text), each to
/// be released with `polotdr_string_free`. Either out pointer may be null.
///
/// # Safety
/// `result` must be a live handle; non-null out pointers valid for writes.
#[no_mangle]
pub unsafe extern "C" fn polotdr_result_table(
    result: *const PolotdrResult,
    index: usize,
    name_out: *mut *mut c_char,
    csv_out: *mut *mut c_char,
) -> PolotdrStatus {
    guard(|| {
        let r = deref(result, "result")?;
        let (name, csv) = r.tables.get(index).ok_or_else(|| {
            Failure(
                PolotdrStatus::OutOfRange,
                format!("table {index} of {}", r.tables.len()),
            )
        })?;
        if !name_out.is_null() {
            name_out.write(to_c_string(name)?);
        }
        if !csv_out.is_null() {
            csv_out.write(to_c_string(csv)?);
        }
        Ok(())
    })
}

/// Manifest of the resolved scenario as a new string.
///
/// # Safety
/// `result` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn polotdr_result_manifest(result: *const PolotdrResult, out: *mut *mut c_char) -> PolotdrStatus {
    guard(|| {
        let r = deref(result, "result")?;
        write_out(out, to_c_string(&r.manifest)?, "out")
    })
}

/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn polotdr_result_free(result: *mut PolotdrResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}
