//! C interface to the tracker and the radar simulator.
//!
//! Every function returns a [`VmpStatus`]; on failure a description of the
//! last error of the calling thread is available from
//! [`vmp_last_error_message`]. Handles are opaque and must be released with
//! their `_free` function. Complex samples are passed as interleaved
//! `(re, im)` doubles, channel-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use vmptrack::radar_sim::{generate_scenario, RadarConfig, Scenario, ScenarioSpec, Simulator, Snapshot};
use vmptrack::tracker::{Tracker, TrackerConfig};
use vmptrack::{Error, C64};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VmpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    Io = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// A reported object: state `[x, y, vx, vy]` and existence probability.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VmpEstimate {
    pub track_id: u64,
    pub state: [f64; 4],
    pub existence: f64,
}

pub struct VmpTracker {
    tracker: Tracker,
    noise_precision: Arc<[f64]>,
    len: usize,
}

pub struct VmpSimulator {
    sim: Simulator,
    scenario: Scenario,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: VmpStatus, msg: impl Into<String>) -> VmpStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> VmpStatus {
    let status = match e {
        Error::Config(_) | Error::Scenario(_) | Error::Json(_) | Error::Format(_) => VmpStatus::Config,
        Error::Io(_) => VmpStatus::Io,
        Error::Dimension { .. } | Error::Empty(_) | Error::Domain(_) | Error::OutOfWindow { .. } => {
            VmpStatus::InvalidArgument
        }
        Error::Numerical(_) | Error::Simulation(_) => VmpStatus::Numerical,
    };
    fail(status, e.to_string())
}

/// Runs `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), VmpStatus>) -> VmpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VmpStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(VmpStatus::Panic, "internal panic"),
    }
}

/// Parses an optional JSON string; null means the default.
unsafe fn parse_json<T: serde::de::DeserializeOwned + Default>(text: *const c_char) -> Result<T, VmpStatus> {
    if text.is_null() {
        return Ok(T::default());
    }
    let s = CStr::from_ptr(text)
        .to_str()
        .map_err(|_| fail(VmpStatus::InvalidArgument, "JSON is not UTF-8"))?;
    serde_json::from_str(s).map_err(|e| from_error(e.into()))
}

/// Message of the calling thread's last error, or null. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn vmp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates a tracker. Both arguments are optional JSON documents (radar and
/// tracker configuration); null selects the defaults.
///
/// # Safety
/// The strings must be null or valid NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vmp_tracker_new(
    radar_json: *const c_char,
    tracker_json: *const c_char,
    out: *mut *mut VmpTracker,
) -> VmpStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(VmpStatus::NullPointer, "out is null"));
        }
        let radar: RadarConfig = parse_json(radar_json)?;
        let config: TrackerConfig = parse_json(tracker_json)?;
        let sim = Simulator::new(&radar).map_err(from_error)?;
        let tracker = Tracker::with_model(&radar, config, sim.model().clone()).map_err(from_error)?;
        let handle = VmpTracker { tracker, noise_precision: sim.noise_precision().clone(), len: sim.model().len() };
        *out = Box::into_raw(Box::new(handle));
        Ok(())
    })
}

/// # Safety
/// `tracker` must be null or a handle from [`vmp_tracker_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vmp_tracker_free(tracker: *mut VmpTracker) {
    if !tracker.is_null() {
        drop(Box::from_raw(tracker));
    }
}

/// Number of complex samples per snapshot.
///
/// # Safety
/// `tracker` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vmp_tracker_snapshot_len(tracker: *const VmpTracker, out: *mut usize) -> VmpStatus {
    guard(|| {
        let t = tracker.as_ref().ok_or_else(|| fail(VmpStatus::NullPointer, "tracker is null"))?;
        *out.as_mut().ok_or_else(|| fail(VmpStatus::NullPointer, "out is null"))? = t.len;
        Ok(())
    })
}

/// Processes the snapshot of `step` (`len` complex samples as `2 * len`
/// doubles) and writes up to `capacity` estimates. `written` receives the
/// number of reported objects even when the buffer is too small.
///
/// # Safety
/// `data` must hold `2 * len` doubles, `estimates` `capacity` entries (may be
/// null if `capacity` is 0), and `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vmp_tracker_step(
    tracker: *mut VmpTracker,
    step: usize,
    data: *const f64,
    len: usize,
    estimates: *mut VmpEstimate,
    capacity: usize,
    written: *mut usize,
) -> VmpStatus {
    guard(|| {
        let t = tracker.as_mut().ok_or_else(|| fail(VmpStatus::NullPointer, "tracker is null"))?;
        let written = written.as_mut().ok_or_else(|| fail(VmpStatus::NullPointer, "written is null"))?;
        if data.is_null() || (estimates.is_null() && capacity > 0) {
            return Err(fail(VmpStatus::NullPointer, "data or estimates is null"));
        }
        if len != t.len {
            return Err(fail(VmpStatus::InvalidArgument, format!("snapshot has {len} samples, expected {}", t.len)));
        }
        let raw = std::slice::from_raw_parts(data, 2 * len);
        let snapshot = Snapshot {
            step_index: step,
            data: raw.chunks_exact(2).map(|c| C64::new(c[0], c[1])).collect(),
            noise_precision: t.noise_precision.clone(),
        };
        let est = t.tracker.step(&snapshot).map_err(from_error)?;
        *written = est.len();
        if est.len() > capacity {
            return Err(fail(VmpStatus::BufferTooSmall, format!("{} estimates, capacity {capacity}", est.len())));
        }
        for (i, e) in est.iter().enumerate() {
            *estimates.add(i) = VmpEstimate {
                track_id: e.track_id,
                state: [e.state[0], e.state[1], e.state[2], e.state[3]],
                existence: e.existence,
            };
        }
        Ok(())
    })
}

/// Serializes every track history as JSON. Release with [`vmp_string_free`].
///
/// # Safety
/// `tracker` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vmp_tracker_checkpoint_json(tracker: *const VmpTracker, out: *mut *mut c_char) -> VmpStatus {
    guard(|| {
        let t = tracker.as_ref().ok_or_else(|| fail(VmpStatus::NullPointer, "tracker is null"))?;
        let out = out.as_mut().ok_or_else(|| fail(VmpStatus::NullPointer, "out is null"))?;
        let text = serde_json::to_string(&t.tracker.checkpoint(None)).map_err(|e| from_error(e.into()))?;
        *out = CString::new(text).expect("JSON has no NUL").into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn vmp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates a simulator for a scenario JSON document; null selects the
/// built-in three-track scene.
///
/// # Safety
/// `scenario_json` must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vmp_simulator_new(scenario_json: *const c_char, out: *mut *mut VmpSimulator) -> VmpStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(VmpStatus::NullPointer, "out is null"));
        }
        let spec = if scenario_json.is_null() {
            ScenarioSpec::reference()
        } else {
            let s = CStr::from_ptr(scenario_json)
                .to_str()
                .map_err(|_| fail(VmpStatus::InvalidArgument, "JSON is not UTF-8"))?;
            ScenarioSpec::from_json(s).map_err(from_error)?
        };
        let scenario = generate_scenario(&spec).map_err(from_error)?;
        let sim = Simulator::new(&scenario.radar).map_err(from_error)?;
        *out = Box::into_raw(Box::new(VmpSimulator { sim, scenario }));
        Ok(())
    })
}

/// # Safety
/// `sim` must be null or a handle from [`vmp_simulator_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vmp_simulator_free(sim: *mut VmpSimulator) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// First step index and number of steps of the scenario.
///
/// # Safety
/// `sim` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn vmp_simulator_steps(
    sim: *const VmpSimulator,
    first_step: *mut usize,
    num_steps: *mut usize,
) -> VmpStatus {
    guard(|| {
        let s = sim.as_ref().ok_or_else(|| fail(VmpStatus::NullPointer, "simulator is null"))?;
        if first_step.is_null() || num_steps.is_null() {
            return Err(fail(VmpStatus::NullPointer, "output is null"));
        }
        *first_step = s.scenario.first_step;
        *num_steps = s.scenario.num_steps;
        Ok(())
    })
}

/// Simulates the snapshot of `step` for run `seed` into `out` (`2 * len`
/// doubles, `len` as reported by [`vmp_tracker_snapshot_len`] for the same
/// radar).
///
/// # Safety
/// `sim` must be a live handle and `out` must hold `2 * len` doubles.
#[no_mangle]
pub unsafe extern "C" fn vmp_simulator_snapshot(
    sim: *const VmpSimulator,
    seed: u64,
    step: usize,
    out: *mut f64,
    len: usize,
) -> VmpStatus {
    guard(|| {
        let s = sim.as_ref().ok_or_else(|| fail(VmpStatus::NullPointer, "simulator is null"))?;
        if out.is_null() {
            return Err(fail(VmpStatus::NullPointer, "out is null"));
        }
        if !s.scenario.steps().contains(&step) {
            return Err(fail(VmpStatus::InvalidArgument, format!("step {step} outside the scenario")));
        }
        let need = s.sim.model().len();
        if len < need {
            return Err(fail(VmpStatus::BufferTooSmall, format!("need {need} samples, got {len}")));
        }
        let (snap, _) = s.sim.simulate_step(&s.scenario, step, seed).map_err(from_error)?;
        let buf = std::slice::from_raw_parts_mut(out, 2 * need);
        for (pair, z) in buf.chunks_exact_mut(2).zip(&snap.data) {
            pair[0] = z.re;
            pair[1] = z.im;
        }
        Ok(())
    })
}
