//! C ABI over `horizon_core`.
//!
//! Every fallible function returns an [`HzStatus`]; results go through out
//! pointers. On failure the message is available from [`hz_last_error`] on the
//! same thread until the next failing call. Handles returned through out
//! pointers are owned by the caller and released with the matching `_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use horizon_core::battery::{self, BatterySpec, MarketParams, Schedule};
use horizon_core::catalog::Catalogs;
use horizon_core::forecast::{issue_forecasts, ErrorModel};
use horizon_core::horizon::{self, Curve};
use horizon_core::mpc::{run_mpc, MpcConfig};
use horizon_core::signal::{self, SignalSpec};
use horizon_core::{Error, Series};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HzStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidUtf8 = 3,
    Parse = 4,
    UnknownId = 5,
    Solver = 6,
    CoverageGap = 7,
    Panic = 8,
}

/// Buy/sell spread and grid limits. A cap `<= 0` means `max(P_c, P_d)`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct HzMarket {
    pub buy_multiplier: f64,
    pub buy_offset: f64,
    pub sell_offset: f64,
    pub grid_import_cap: f64,
    pub grid_export_cap: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HzScheduleStep {
    pub charge: f64,
    pub discharge: f64,
    pub soc: f64,
    pub grid_in: f64,
    pub grid_out: f64,
    pub charge_mode: bool,
    pub trade_mode: bool,
}

/// Rolling-horizon run on synthetic forecasts from the default error model.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct HzMpcOptions {
    pub horizon_hours: usize,
    /// Also the publication interval.
    pub stride_hours: usize,
    pub forecast_horizon_hours: usize,
    pub uncertainty_factor: f64,
    pub seed: u64,
}

pub struct HzSeries(Series);

pub struct HzBattery(BatterySpec);

pub struct HzSchedule(Schedule);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> HzStatus {
    match err {
        Error::Window { source, .. } => status_of(source),
        Error::Solver(_) => HzStatus::Solver,
        Error::CoverageGap { .. } => HzStatus::CoverageGap,
        Error::Json(_) | Error::Csv(_) | Error::Schema { .. } => HzStatus::Parse,
        Error::UnknownId { .. } => HzStatus::UnknownId,
        _ => HzStatus::InvalidArgument,
    }
}

struct Fail(HzStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(HzStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> HzStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HzStatus::Ok,
        Ok(Err(Fail(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            HzStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn floats<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Fail(HzStatus::InvalidUtf8, format!("{what}: {e}")))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

fn market_of(m: &HzMarket) -> MarketParams {
    let cap = |v: f64| if v > 0.0 { Some(v) } else { None };
    MarketParams {
        buy_multiplier: m.buy_multiplier,
        buy_offset: m.buy_offset,
        sell_offset: m.sell_offset,
        grid_import_cap: cap(m.grid_import_cap),
        grid_export_cap: cap(m.grid_export_cap),
    }
}

fn curve_of(horizons: &[usize], revenues: &[f64]) -> Result<Curve, Fail> {
    Ok(Curve::new(horizons.to_vec(), revenues.to_vec())?)
}

/// Message of the last failure on this thread, or null. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn hz_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn hz_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn hz_market_default() -> HzMarket {
    let d = MarketParams::default();
    HzMarket {
        buy_multiplier: d.buy_multiplier,
        buy_offset: d.buy_offset,
        sell_offset: d.sell_offset,
        grid_import_cap: 0.0,
        grid_export_cap: 0.0,
    }
}

/// # Safety
/// `values` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hz_series_new(
    values: *const f64,
    len: usize,
    step_hours: f64,
    out: *mut *mut HzSeries,
) -> HzStatus {
    guard(|| {
        let v = floats(values, len, "values")?.to_vec();
        put(out, boxed(HzSeries(Series::new(step_hours, v)?)), "out")
    })
}

/// # Safety
/// `series` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn hz_series_len(series: *const HzSeries) -> usize {
    series.as_ref().map_or(0, |s| s.0.len())
}

/// Copies up to `capacity` values into `buffer` and stores the total length
/// in `len_out`.
///
/// # Safety
/// `series` must be a live handle; `buffer` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn hz_series_values(
    series: *const HzSeries,
    buffer: *mut f64,
    capacity: usize,
    len_out: *mut usize,
) -> HzStatus {
    guard(|| {
        let s = get(series, "series")?.0.values();
        let n = s.len().min(capacity);
        if n > 0 {
            if buffer.is_null() {
                return Err(null("buffer"));
            }
            ptr::copy_nonoverlapping(s.as_ptr(), buffer, n);
        }
        put(len_out, s.len(), "len_out")
    })
}

/// # Safety
/// `series` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hz_series_free(series: *mut HzSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Ground truth from a JSON signal spec.
///
/// # Safety
/// `spec_json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hz_ground_truth_from_json(spec_json: *const c_char, out: *mut *mut HzSeries) -> HzStatus {
    guard(|| {
        let spec: SignalSpec = serde_json::from_str(text(spec_json, "spec_json")?).map_err(Error::from)?;
        put(out, boxed(HzSeries(signal::compose_ground_truth(&spec)?)), "out")
    })
}

/// Ground truth of a shipped catalog dataset.
///
/// # Safety
/// `dataset_id` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hz_ground_truth_from_catalog(dataset_id: *const c_char, out: *mut *mut HzSeries) -> HzStatus {
    guard(|| {
        let catalogs = Catalogs::shipped();
        let entry = catalogs.dataset(text(dataset_id, "dataset_id")?)?;
        put(out, boxed(HzSeries(signal::compose_ground_truth(&entry.spec)?)), "out")
    })
}

/// # Safety
/// `series` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hz_revenue_proxy(series: *const HzSeries, out: *mut f64) -> HzStatus {
    guard(|| put(out, signal::revenue_proxy(&get(series, "series")?.0)?, "out"))
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hz_amplitude_for_target(
    target: f64,
    period_hours: f64,
    length: usize,
    step_hours: f64,
    out: *mut f64,
) -> HzStatus {
    guard(|| put(out, signal::amplitude_for_target(target, period_hours, length, step_hours)?, "out"))
}

/// # Safety
/// `spot` and `market` must be valid; both out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn hz_split_prices(
    spot: *const HzSeries,
    market: *const HzMarket,
    buy_out: *mut *mut HzSeries,
    sell_out: *mut *mut HzSeries,
) -> HzStatus {
    guard(|| {
        if buy_out.is_null() || sell_out.is_null() {
            return Err(null("out"));
        }
        let (buy, sell) = battery::split_prices(&get(spot, "spot")?.0, &market_of(get(market, "market")?))?;
        put(buy_out, boxed(HzSeries(buy)), "buy_out")?;
        put(sell_out, boxed(HzSeries(sell)), "sell_out")
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hz_battery_new(
    capacity: f64,
    p_charge_max: f64,
    p_discharge_max: f64,
    efficiency: f64,
    soc_initial: f64,
    out: *mut *mut HzBattery,
) -> HzStatus {
    guard(|| {
        let spec = BatterySpec {
            capacity,
            p_charge_max,
            p_discharge_max,
            efficiency,
            soc_initial,
        };
        spec.validate()?;
        put(out, boxed(HzBattery(spec)), "out")
    })
}

/// # Safety
/// `battery_id` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hz_battery_from_catalog(battery_id: *const c_char, out: *mut *mut HzBattery) -> HzStatus {
    guard(|| {
        let catalogs = Catalogs::shipped();
        let entry = catalogs.battery(text(battery_id, "battery_id")?)?;
        put(out, boxed(HzBattery(entry.spec)), "out")
    })
}

/// # Safety
/// `battery` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hz_battery_free(battery: *mut HzBattery) {
    if !battery.is_null() {
        drop(Box::from_raw(battery));
    }
}

/// Solves one window exactly.
///
/// # Safety
/// All handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hz_solve_window(
    buy: *const HzSeries,
    sell: *const HzSeries,
    battery: *const HzBattery,
    market: *const HzMarket,
    soc_start: f64,
    out: *mut *mut HzSchedule,
) -> HzStatus {
    guard(|| {
        let schedule = battery::solve_window(
            &get(buy, "buy")?.0,
            &get(sell, "sell")?.0,
            &get(battery, "battery")?.0,
            &market_of(get(market, "market")?),
            soc_start,
        )?;
        put(out, boxed(HzSchedule(schedule)), "out")
    })
}

/// # Safety
/// `schedule` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn hz_schedule_len(schedule: *const HzSchedule) -> usize {
    schedule.as_ref().map_or(0, |s| s.0.len())
}

/// # Safety
/// `schedule` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hz_schedule_objective(schedule: *const HzSchedule, out: *mut f64) -> HzStatus {
    guard(|| put(out, get(schedule, "schedule")?.0.objective, "out"))
}

/// # Safety
/// `schedule` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hz_schedule_step(
    schedule: *const HzSchedule,
    index: usize,
    out: *mut HzScheduleStep,
) -> HzStatus {
    guard(|| {
        let steps = &get(schedule, "schedule")?.0.steps;
        let s = steps.get(index).ok_or_else(|| {
            Fail(HzStatus::InvalidArgument, format!("step {index} out of range (len {})", steps.len()))
        })?;
        let step = HzScheduleStep {
            charge: s.charge,
            discharge: s.discharge,
            soc: s.soc,
            grid_in: s.grid_in,
            grid_out: s.grid_out,
            charge_mode: s.charge_mode,
            trade_mode: s.trade_mode,
        };
        put(out, step, "out")
    })
}

/// # Safety
/// `schedule` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hz_schedule_free(schedule: *mut HzSchedule) {
    if !schedule.is_null() {
        drop(Box::from_raw(schedule));
    }
}

/// Realized revenue of one rolling-horizon run.
///
/// # Safety
/// All handles must be live; `revenue_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hz_run_mpc(
    ground_truth: *const HzSeries,
    battery: *const HzBattery,
    market: *const HzMarket,
    options: *const HzMpcOptions,
    revenue_out: *mut f64,
) -> HzStatus {
    guard(|| {
        let gt = &get(ground_truth, "ground_truth")?.0;
        let o = get(options, "options")?;
        let model = ErrorModel::default().with_uncertainty_factor(o.uncertainty_factor);
        let forecasts = issue_forecasts(gt, &model, o.stride_hours, o.forecast_horizon_hours, o.seed)?;
        let config = MpcConfig::new(o.horizon_hours, o.stride_hours, o.stride_hours);
        let run = run_mpc(
            gt,
            &forecasts,
            &get(battery, "battery")?.0,
            &market_of(get(market, "market")?),
            &config,
        )?;
        put(revenue_out, run.realized_revenue, "revenue_out")
    })
}

/// # Safety
/// `horizons` and `revenues` must each hold `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hz_optimal_horizon(
    horizons: *const usize,
    revenues: *const f64,
    len: usize,
    out: *mut usize,
) -> HzStatus {
    guard(|| {
        let h = if len == 0 || horizons.is_null() { &[][..] } else { slice::from_raw_parts(horizons, len) };
        let curve = curve_of(h, floats(revenues, len, "revenues")?)?;
        put(out, horizon::optimal_horizon(&curve), "out")
    })
}

/// # Safety
/// `horizons` and `revenues` must each hold `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hz_effective_horizon(
    horizons: *const usize,
    revenues: *const f64,
    len: usize,
    epsilon: f64,
    out: *mut usize,
) -> HzStatus {
    guard(|| {
        let h = if len == 0 || horizons.is_null() { &[][..] } else { slice::from_raw_parts(horizons, len) };
        let curve = curve_of(h, floats(revenues, len, "revenues")?)?;
        put(out, horizon::effective_horizon(&curve, epsilon)?, "out")
    })
}

/// Stores the loss in `out` and whether it is defined (positive maximum) in
/// `defined_out`; `out` is set to NaN when undefined.
///
/// # Safety
/// `horizons` and `revenues` must each hold `len` values; both outs must be writable.
#[no_mangle]
pub unsafe extern "C" fn hz_loss_beyond_optimum(
    horizons: *const usize,
    revenues: *const f64,
    len: usize,
    out: *mut f64,
    defined_out: *mut bool,
) -> HzStatus {
    guard(|| {
        let h = if len == 0 || horizons.is_null() { &[][..] } else { slice::from_raw_parts(horizons, len) };
        let loss = horizon::loss_beyond_optimum(&curve_of(h, floats(revenues, len, "revenues")?)?);
        put(defined_out, loss.is_some(), "defined_out")?;
        put(out, loss.unwrap_or(f64::NAN), "out")
    })
}

/// `h_eff - h_opt`.
#[no_mangle]
pub extern "C" fn hz_uncertainty_gap(h_eff: usize, h_opt: usize) -> i64 {
    horizon::uncertainty_gap(h_eff, h_opt).hours
}
