use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use horizon_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(hz_last_error()).to_string_lossy().into_owned() }
}

unsafe fn series(values: &[f64]) -> *mut HzSeries {
    let mut out = ptr::null_mut();
    assert_eq!(hz_series_new(values.as_ptr(), values.len(), 1.0, &mut out), HzStatus::Ok);
    out
}

unsafe fn values(s: *const HzSeries) -> Vec<f64> {
    let mut buf = vec![0.0; hz_series_len(s)];
    let mut len = 0;
    assert_eq!(hz_series_values(s, buf.as_mut_ptr(), buf.len(), &mut len), HzStatus::Ok);
    assert_eq!(len, buf.len());
    buf
}

#[test]
fn split_and_solve_two_steps() {
    unsafe {
        let market = hz_market_default();
        let spot = series(&[10.0, 50.0]);
        let (mut buy, mut sell) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(hz_split_prices(spot, &market, &mut buy, &mut sell), HzStatus::Ok);
        assert!((values(buy)[0] - 12.07).abs() < 1e-12);
        assert!((values(sell)[1] - 49.99).abs() < 1e-12);

        let mut battery = ptr::null_mut();
        assert_eq!(hz_battery_new(1.0, 1.0, 1.0, 1.0, 0.0, &mut battery), HzStatus::Ok);
        let mut schedule = ptr::null_mut();
        assert_eq!(hz_solve_window(buy, sell, battery, &market, 0.0, &mut schedule), HzStatus::Ok);
        let mut objective = 0.0;
        assert_eq!(hz_schedule_objective(schedule, &mut objective), HzStatus::Ok);
        assert!((objective - 37.92).abs() < 1e-6);
        assert_eq!(hz_schedule_len(schedule), 2);
        let mut step = HzScheduleStep::default();
        assert_eq!(hz_schedule_step(schedule, 1, &mut step), HzStatus::Ok);
        assert!((step.discharge - 1.0).abs() < 1e-9 && step.soc.abs() < 1e-9);
        assert_eq!(hz_schedule_step(schedule, 2, &mut step), HzStatus::InvalidArgument);
        assert!(last_error().contains("out of range"));

        hz_schedule_free(schedule);
        hz_battery_free(battery);
        for s in [spot, buy, sell] {
            hz_series_free(s);
        }
    }
}

#[test]
fn errors_report_status_and_message() {
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(hz_series_new(ptr::null(), 3, 1.0, &mut out), HzStatus::NullPointer);
        assert!(last_error().contains("values"));
        assert_eq!(hz_battery_new(1.0, 1.0, 1.0, 1.5, 0.0, &mut ptr::null_mut()), HzStatus::InvalidArgument);
        let id = CString::new("no-such-battery").unwrap();
        assert_eq!(hz_battery_from_catalog(id.as_ptr(), &mut ptr::null_mut()), HzStatus::UnknownId);
        let json = CString::new("{\"harmonics\": 3}").unwrap();
        assert_eq!(hz_ground_truth_from_json(json.as_ptr(), &mut ptr::null_mut()), HzStatus::Parse);
        let mut v = 0.0;
        assert_eq!(hz_revenue_proxy(ptr::null(), &mut v), HzStatus::NullPointer);
        hz_series_free(ptr::null_mut());
    }
}

#[test]
fn catalog_ground_truth_and_rolling_run() {
    unsafe {
        let (dataset, id) = (CString::new("sine").unwrap(), CString::new("li-ion-1h").unwrap());
        let mut gt = ptr::null_mut();
        assert_eq!(hz_ground_truth_from_catalog(dataset.as_ptr(), &mut gt), HzStatus::Ok);
        assert_eq!(hz_series_len(gt), 336);
        let mut proxy = 0.0;
        assert_eq!(hz_revenue_proxy(gt, &mut proxy), HzStatus::Ok);
        assert!((proxy - 39.815).abs() < 5e-4);

        let mut battery = ptr::null_mut();
        assert_eq!(hz_battery_from_catalog(id.as_ptr(), &mut battery), HzStatus::Ok);
        let market = hz_market_default();
        let run = |h: usize| {
            let options = HzMpcOptions {
                horizon_hours: h,
                stride_hours: 3,
                forecast_horizon_hours: 72,
                uncertainty_factor: 0.0,
                seed: 1,
            };
            let mut revenue = 0.0;
            assert_eq!(hz_run_mpc(gt, battery, &market, &options, &mut revenue), HzStatus::Ok);
            revenue
        };
        assert!((run(24) - run(36)).abs() < 1e-6);
        let options = HzMpcOptions {
            horizon_hours: 96,
            stride_hours: 3,
            forecast_horizon_hours: 72,
            uncertainty_factor: 1.0,
            seed: 1,
        };
        assert_eq!(hz_run_mpc(gt, battery, &market, &options, &mut 0.0), HzStatus::CoverageGap);
        hz_battery_free(battery);
        hz_series_free(gt);
    }
}

#[test]
fn ground_truth_from_json_spec() {
    let spec = r#"{"harmonics": [{"amplitude": 10, "frequency": 0.041666666666666664, "phase": 0}],
                   "shape_exponent": 1, "target_range": [50, 70],
                   "sarima": {"nonseasonal_order": [0,0,0], "seasonal_order": [0,0,0,1], "innovation_variance": 1},
                   "sarima_weight": 0, "length": 48, "seed": 1}"#;
    let spec = CString::new(spec).unwrap();
    unsafe {
        let mut gt = ptr::null_mut();
        assert_eq!(hz_ground_truth_from_json(spec.as_ptr(), &mut gt), HzStatus::Ok, "{}", last_error());
        let v = values(gt);
        assert_eq!(v.len(), 48);
        assert!((v.iter().cloned().fold(f64::MIN, f64::max) - 70.0).abs() < 1e-9);
        hz_series_free(gt);
        let mut a = 0.0;
        assert_eq!(hz_amplitude_for_target(0.0, 24.0, 336, 1.0, &mut a), HzStatus::Ok);
        assert_eq!(a, 0.0);
    }
}

#[test]
fn horizon_metrics() {
    let h = [1usize, 2, 3, 4, 5];
    let r = [5.0, 9.0, 10.0, 8.0, 7.0];
    unsafe {
        let mut opt = 0;
        assert_eq!(hz_optimal_horizon(h.as_ptr(), r.as_ptr(), 5, &mut opt), HzStatus::Ok);
        assert_eq!(opt, 3);
        let flat = [5.0, 9.0, 10.0, 10.0, 10.0];
        let mut eff = 0;
        assert_eq!(hz_effective_horizon(h.as_ptr(), flat.as_ptr(), 5, 0.15, &mut eff), HzStatus::Ok);
        assert_eq!(eff, 2);
        let (mut loss, mut defined) = (0.0, false);
        assert_eq!(hz_loss_beyond_optimum(h.as_ptr(), r.as_ptr(), 5, &mut loss, &mut defined), HzStatus::Ok);
        assert!(defined && loss == 30.0);
        let negative = [-3.0, -1.0, -2.0, -4.0, -5.0];
        assert_eq!(hz_loss_beyond_optimum(h.as_ptr(), negative.as_ptr(), 5, &mut loss, &mut defined), HzStatus::Ok);
        assert!(!defined && loss.is_nan());
        assert_eq!(hz_optimal_horizon(h.as_ptr(), r.as_ptr(), 0, &mut opt), HzStatus::InvalidArgument);
    }
    assert_eq!(hz_uncertainty_gap(4, 7), -3);
}

#[test]
fn header_compiles_as_c() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/horizon.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for symbol in ["hz_solve_window", "hz_run_mpc", "HZ_STATUS_COVERAGE_GAP", "typedef struct HzSeries HzSeries"] {
        assert!(text.contains(symbol), "{symbol} missing from header");
    }
    let Ok(status) = Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler; skipping compile check");
        return;
    };
    assert!(status.status.success());
    let object = tempfile_path("arbitrage.o");
    let out = Command::new("cc")
        .args(["-std=c11", "-Wall", "-Werror", "-c"])
        .arg("-I")
        .arg(dir.join("include"))
        .arg(dir.join("examples/arbitrage.c"))
        .arg("-o")
        .arg(&object)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    // deps/<test binary> sits one level below the library artifacts.
    let exe = std::env::current_exe().unwrap();
    let archive = exe.parent().unwrap().parent().unwrap().join("libhorizon_ffi.a");
    if !archive.is_file() {
        eprintln!("{} not built; skipping link check", archive.display());
        return;
    }
    let program = tempfile_path("arbitrage");
    let out = Command::new("cc")
        .arg(&object)
        .arg(&archive)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&program)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&program).output().unwrap();
    assert!(run.status.success());
    assert_eq!(String::from_utf8_lossy(&run.stdout), "objective 37.92 EUR over 2 steps\n");
}

fn tempfile_path(name: &str) -> std::path::PathBuf {
    std::env::temp_dir().join(format!("horizon-ffi-{}-{name}", std::process::id()))
}
