use std::ffi::{CStr, CString};
use std::ptr;

use vmptrack_ffi::*;

fn last_error() -> String {
    let p = vmp_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

struct Handles {
    tracker: *mut VmpTracker,
    sim: *mut VmpSimulator,
}

impl Drop for Handles {
    fn drop(&mut self) {
        unsafe {
            vmp_tracker_free(self.tracker);
            vmp_simulator_free(self.sim);
        }
    }
}

fn handles() -> Handles {
    let mut h = Handles { tracker: ptr::null_mut(), sim: ptr::null_mut() };
    unsafe {
        assert_eq!(vmp_tracker_new(ptr::null(), ptr::null(), &mut h.tracker), VmpStatus::Ok);
        assert_eq!(vmp_simulator_new(ptr::null(), &mut h.sim), VmpStatus::Ok);
    }
    h
}

#[test]
fn simulate_and_track_through_the_c_interface() {
    let h = handles();
    let mut len = 0usize;
    let (mut first, mut steps) = (0usize, 0usize);
    unsafe {
        assert_eq!(vmp_tracker_snapshot_len(h.tracker, &mut len), VmpStatus::Ok);
        assert_eq!(vmp_simulator_steps(h.sim, &mut first, &mut steps), VmpStatus::Ok);
    }
    assert_eq!((first, steps), (1, 100));
    let mut data = vec![0.0; 2 * len];
    let mut est = [VmpEstimate { track_id: 0, state: [0.0; 4], existence: 0.0 }; 8];
    let mut written = 0usize;
    for step in 1..=5 {
        unsafe {
            assert_eq!(vmp_simulator_snapshot(h.sim, 3, step, data.as_mut_ptr(), len), VmpStatus::Ok);
            let s = vmp_tracker_step(h.tracker, step, data.as_ptr(), len, est.as_mut_ptr(), est.len(), &mut written);
            assert_eq!(s, VmpStatus::Ok, "{}", last_error());
        }
    }
    assert_eq!(written, 2);
    // both objects start near (10, 10) and (10, 31)
    let mut ys: Vec<f64> = est[..2].iter().map(|e| e.state[1]).collect();
    ys.sort_by(f64::total_cmp);
    assert!((ys[0] - 12.5).abs() < 1.5 && (ys[1] - 28.5).abs() < 1.5, "{ys:?}");
    assert!(est[..2].iter().all(|e| e.existence > 0.5 && e.existence <= 1.0));

    let mut json = ptr::null_mut();
    unsafe {
        assert_eq!(vmp_tracker_checkpoint_json(h.tracker, &mut json), VmpStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        vmp_string_free(json);
        let ck: vmptrack::tracker::Checkpoint = serde_json::from_str(&text).unwrap();
        assert_eq!(ck.last_step, Some(5));
    }
}

#[test]
fn errors_are_reported_not_panicked() {
    let h = handles();
    let mut len = 0usize;
    let mut written = 0usize;
    unsafe {
        vmp_tracker_snapshot_len(h.tracker, &mut len);
        let data = vec![0.0; 2 * len];
        assert_eq!(
            vmp_tracker_step(ptr::null_mut(), 1, data.as_ptr(), len, ptr::null_mut(), 0, &mut written),
            VmpStatus::NullPointer
        );
        assert_eq!(
            vmp_tracker_step(h.tracker, 1, data.as_ptr(), len - 1, ptr::null_mut(), 0, &mut written),
            VmpStatus::InvalidArgument
        );
        assert!(last_error().contains("samples"));
        // a noise-free empty snapshot reports nothing, so a zero buffer is fine
        assert_eq!(
            vmp_tracker_step(h.tracker, 1, data.as_ptr(), len, ptr::null_mut(), 0, &mut written),
            VmpStatus::Ok
        );
        assert_eq!(written, 0);
        // steps must be consecutive
        assert_ne!(
            vmp_tracker_step(h.tracker, 5, data.as_ptr(), len, ptr::null_mut(), 0, &mut written),
            VmpStatus::Ok
        );
        let bad = CString::new("{\"p_survive\": 2.0}").unwrap();
        let mut t = ptr::null_mut();
        assert_eq!(vmp_tracker_new(ptr::null(), bad.as_ptr(), &mut t), VmpStatus::Config);
        assert!(t.is_null());
        let garbage = CString::new("nope").unwrap();
        let mut s = ptr::null_mut();
        assert_eq!(vmp_simulator_new(garbage.as_ptr(), &mut s), VmpStatus::Config);
        let mut out = vec![0.0; 2 * len];
        assert_eq!(vmp_simulator_snapshot(h.sim, 0, 0, out.as_mut_ptr(), len), VmpStatus::InvalidArgument);
        assert_eq!(vmp_simulator_snapshot(h.sim, 0, 1, out.as_mut_ptr(), 10), VmpStatus::BufferTooSmall);
        vmp_tracker_free(ptr::null_mut());
        vmp_string_free(ptr::null_mut());
    }
}

#[test]
fn small_estimate_buffer_reports_required_size() {
    let h = handles();
    let mut len = 0usize;
    let mut written = 0usize;
    unsafe {
        vmp_tracker_snapshot_len(h.tracker, &mut len);
        let mut data = vec![0.0; 2 * len];
        vmp_simulator_snapshot(h.sim, 1, 1, data.as_mut_ptr(), len);
        let mut one = [VmpEstimate { track_id: 0, state: [0.0; 4], existence: 0.0 }; 1];
        let s = vmp_tracker_step(h.tracker, 1, data.as_ptr(), len, one.as_mut_ptr(), 1, &mut written);
        assert_eq!(s, VmpStatus::BufferTooSmall);
        assert_eq!(written, 2);
    }
}

#[test]
fn header_declares_the_interface() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/vmptrack.h")).unwrap();
    for name in [
        "vmp_tracker_new",
        "vmp_tracker_step",
        "vmp_tracker_free",
        "vmp_simulator_snapshot",
        "vmp_last_error_message",
        "VMP_STATUS_BUFFER_TOO_SMALL",
        "typedef struct VmpTracker VmpTracker",
    ] {
        assert!(header.contains(name), "{name}");
    }
}
