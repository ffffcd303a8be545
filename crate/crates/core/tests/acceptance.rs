//! Acceptance checks, one line per criterion. Exits non-zero if any fails.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{autocorrelation, dp_oracle, feasibility_violation, grid_battery, median, variance};
use horizon_core::battery::{solve_window, split_prices, MarketParams};
use horizon_core::catalog::Catalogs;
use horizon_core::experiment::{read_summary_csv, read_sweep_csv, run_plan, ExperimentPlan, RunOptions};
use horizon_core::forecast::{ar1_error_path, issue_forecasts, sigma_profile, ErrorModel};
use horizon_core::horizon::{
    effective_horizon, loss_beyond_optimum, optimal_horizon, sweep_horizons, uncertainty_gap, Curve,
    SweepInputs,
};
use horizon_core::signal::{amplitude_for_target, compose_ground_truth, fourier_backbone, revenue_proxy, HarmonicComponent};
use horizon_core::Series;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(number: u32, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let started = Instant::now();
    let outcome = f();
    let elapsed = started.elapsed();
    let in_time = elapsed <= limit;
    let pass = outcome.pass && in_time;
    println!(
        "criterion {number}: {} {} [{:.1}s, limit {}s{}]",
        if pass { "PASS" } else { "FAIL" },
        outcome.detail,
        elapsed.as_secs_f64(),
        limit.as_secs(),
        if in_time { "" } else { ", too slow" }
    );
    pass
}

struct Sine {
    gt: Series,
    catalogs: Catalogs,
}

impl Sine {
    fn load() -> Self {
        let catalogs = Catalogs::shipped();
        let gt = compose_ground_truth(&catalogs.dataset("sine").unwrap().spec).unwrap();
        Self { gt, catalogs }
    }

    fn curve(&self, uf: f64, seed: u64, horizons: &[usize]) -> Curve {
        let model = self.catalogs.error_model("linear").unwrap().model.with_uncertainty_factor(uf);
        let forecasts = issue_forecasts(&self.gt, &model, 3, 72, seed).unwrap();
        let inputs = SweepInputs {
            ground_truth: &self.gt,
            forecasts: &forecasts,
            battery: &self.catalogs.battery("li-ion-1h").unwrap().spec,
            market: &self.catalogs.market,
            stride_hours: 3,
        };
        sweep_horizons(&inputs, horizons).unwrap()
    }
}

fn amplitude_calibration() -> Outcome {
    let a = amplitude_for_target(40.0, 24.0, 336, 1.0).unwrap();
    let sine = fourier_backbone(&[HarmonicComponent::new(a, 1.0 / 24.0, 0.0).unwrap()], 336, 1.0).unwrap();
    let proxy = revenue_proxy(&sine).unwrap();
    let amp_ok = (a - 10.0).abs() <= 0.01;
    let proxy_ok = (proxy - 40.0).abs() <= 0.01;
    Outcome {
        pass: amp_ok && proxy_ok,
        detail: format!(
            "amplitude {a:.4} (want 10.00 +- 0.01: {}), proxy {proxy:.4} (want 40.00 +- 0.01: {})",
            if amp_ok { "ok" } else { "off" },
            if proxy_ok { "ok" } else { "off" }
        ),
    }
}

fn price_split() -> Outcome {
    let spot = Series::hourly(vec![100.0, 0.0, -10.0]).unwrap();
    let (buy, sell) = split_prices(&spot, &MarketParams::default()).unwrap();
    let want_buy = [120.07, 0.07, -11.93];
    let want_sell = [99.99, -0.01, -10.01];
    let dev = (0..3)
        .map(|t| (buy.values()[t] - want_buy[t]).abs().max((sell.values()[t] - want_sell[t]).abs()))
        .fold(0.0, f64::max);
    Outcome {
        pass: dev <= 1e-12,
        detail: format!("buy {:?}, sell {:?}, max deviation {dev:.1e}", buy.values(), sell.values()),
    }
}

fn solver_vs_oracle() -> Outcome {
    let market = MarketParams::default();
    let mut rng = StdRng::seed_from_u64(0xACCE);
    let instances = 200;
    let (mut worst_rel, mut worst_violation) = (0.0f64, 0.0f64);
    let mut failures = 0;
    for _ in 0..instances {
        let battery = grid_battery(&mut rng);
        let len = rng.random_range(1..=6);
        let spot: Vec<f64> = (0..len).map(|_| rng.random_range(-20.0..100.0)).collect();
        let (buy, sell) = split_prices(&Series::hourly(spot).unwrap(), &market).unwrap();
        let s = solve_window(&buy, &sell, &battery, &market, battery.soc_initial).unwrap();
        let oracle = dp_oracle(buy.values(), sell.values(), &battery, &market, battery.soc_initial, 1.0, 100);
        let rel = (s.objective - oracle).abs() / oracle.abs().max(1e-4);
        let v = feasibility_violation(&s, buy.values(), sell.values(), &battery, &market, battery.soc_initial);
        worst_rel = worst_rel.max(rel);
        worst_violation = worst_violation.max(v);
        if rel > 0.01 || v > 1e-9 {
            failures += 1;
        }
    }
    Outcome {
        pass: failures == 0,
        detail: format!(
            "{instances} instances, worst relative gap {worst_rel:.1e} (<= 1e-2), worst violation {worst_violation:.1e} (<= 1e-9)"
        ),
    }
}

fn perfect_information_plateau(sine: &Sine) -> Outcome {
    let horizons: Vec<usize> = (1..=36).collect();
    let curve = sine.curve(0.0, 0, &horizons);
    let r = curve.revenues();
    let worst_drop = r.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
    let max = curve.max_revenue();
    let plateau = (0..r.len())
        .find(|&i| r[i..].iter().all(|v| (v - max).abs() <= 1e-6))
        .map(|i| horizons[i])
        .unwrap();
    Outcome {
        pass: worst_drop <= 1e-6 && plateau <= 24,
        detail: format!("largest decrease {worst_drop:.1e} (<= 1e-6), flat from H = {plateau} (<= 24) at {max:.4} EUR"),
    }
}

fn near_oracle(sine: &Sine) -> Outcome {
    let horizons: Vec<usize> = (1..=36).collect();
    let reference = sine.curve(0.0, 0, &horizons).max_revenue();
    let mut gaps: Vec<f64> = (0..7)
        .map(|seed| (reference - sine.curve(0.1, seed, &horizons).max_revenue()).abs() / reference)
        .collect();
    let m = median(&mut gaps);
    Outcome {
        pass: m <= 0.05,
        detail: format!("median relative gap of best realized revenue {:.2}% over 7 seeds (<= 5%)", 100.0 * m),
    }
}

fn horizon_contraction(sine: &Sine) -> Outcome {
    let seeds: Vec<u64> = (0..7).collect();
    let ufs = [1.0, 3.0, 6.0, 10.0];
    let medians = |horizons: &[usize]| -> Vec<f64> {
        ufs.iter()
            .map(|&uf| {
                let mut h: Vec<f64> = seeds
                    .iter()
                    .map(|&s| optimal_horizon(&sine.curve(uf, s, horizons)) as f64)
                    .collect();
                median(&mut h)
            })
            .collect()
    };
    let swept: Vec<usize> = (3..=45).collect();
    let m = medians(&swept);
    let full: Vec<usize> = (1..=45).collect();
    let m_full = medians(&full);
    let trend = m.windows(2).all(|w| w[1] <= w[0]);
    let at_ten = (2.0..=6.0).contains(&m[3]);
    Outcome {
        pass: trend && at_ten,
        detail: format!(
            "median H_opt at u.f. 1/3/6/10 over {} seeds: {:?} on grid 3..45 (u.f. 10 in [2, 6], non-increasing); {:?} on grid 1..45",
            seeds.len(),
            m,
            m_full
        ),
    }
}

fn error_statistics() -> Outcome {
    let path = ar1_error_path(0.7, 100_000, 17).unwrap();
    let var = variance(path.values());
    let acf = autocorrelation(path.values(), 1);
    let model = ErrorModel::default();
    let zeros = Series::hourly(vec![0.0; 1000 * 3 + 72]).unwrap();
    let set = issue_forecasts(&zeros, &model, 3, 72, 23).unwrap();
    let lead = 24;
    let errors: Vec<f64> = set.forecasts[..1000].iter().map(|f| f.values.values()[lead]).collect();
    let sd = variance(&errors).sqrt();
    let sigma = sigma_profile(&model, lead as f64).unwrap();
    let scaled = issue_forecasts(&zeros, &model.with_uncertainty_factor(10.0), 3, 72, 23).unwrap();
    let exact = set
        .forecasts
        .iter()
        .zip(&scaled.forecasts)
        .all(|(a, b)| a.values.values().iter().zip(b.values.values()).all(|(x, y)| *y == 10.0 * x));
    let ok = (var - 1.0).abs() <= 0.05 && (acf - 0.7).abs() <= 0.02 && (sd / sigma - 1.0).abs() <= 0.05 && exact;
    Outcome {
        pass: ok,
        detail: format!(
            "variance {var:.4}, lag-1 {acf:.4} (rho 0.7), std at lead 24 h {sd:.3} vs {sigma:.3} over 1000 issuances, u.f. scaling exact: {exact}"
        ),
    }
}

fn derived_metrics() -> Outcome {
    let c = |r: &[f64]| Curve::new((1..=r.len()).collect(), r.to_vec()).unwrap();
    let checks = [
        effective_horizon(&c(&[5.0, 9.0, 10.0, 10.0, 10.0]), 0.0).unwrap() == 3,
        effective_horizon(&c(&[5.0, 9.0, 10.0, 10.0, 10.0]), 0.15).unwrap() == 2,
        effective_horizon(&c(&[4.0, 4.0, 4.0]), 0.0).unwrap() == 1,
        optimal_horizon(&c(&[5.0, 9.0, 10.0, 8.0, 7.0])) == 3,
        optimal_horizon(&c(&[10.0, 10.0, 7.0])) == 1,
        optimal_horizon(&c(&[1.0, 2.0, 3.0])) == 3,
        uncertainty_gap(10, 7).hours == 3,
        uncertainty_gap(7, 7).hours == 0,
        loss_beyond_optimum(&c(&[5.0, 9.0, 10.0, 8.0, 7.0])) == Some(30.0),
        loss_beyond_optimum(&c(&[5.0, 10.0, 10.0])) == Some(0.0),
    ];
    let passed = checks.iter().filter(|&&b| b).count();
    Outcome {
        pass: passed == checks.len(),
        detail: format!("{passed}/{} examples reproduced exactly", checks.len()),
    }
}

fn output_files(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                files.insert(path.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    files
}

/// The manifest minus its wall-clock timestamps.
fn manifest_body(bytes: &[u8]) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_slice(bytes).unwrap();
    let map = v.as_object_mut().unwrap();
    map.remove("started_unix");
    map.remove("finished_unix");
    v
}

fn desk_batch() -> Outcome {
    let plan = ExperimentPlan::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("plans/desk-3h.json")).unwrap();
    let catalogs = Catalogs::shipped();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let started = Instant::now();
    for d in &dirs {
        let outcome = run_plan(&plan, &catalogs, d.path(), RunOptions::default()).unwrap();
        if !outcome.succeeded() {
            return Outcome { pass: false, detail: format!("{} cells failed", outcome.manifest.failures.len()) };
        }
    }
    let per_run = started.elapsed() / 2;
    let (a, b) = (output_files(dirs[0].path()), output_files(dirs[1].path()));
    let mut identical = a.len() == b.len();
    for (name, bytes) in &a {
        let same = if name.as_os_str() == "manifest.json" {
            manifest_body(bytes) == manifest_body(&b[name])
        } else {
            b.get(name) == Some(bytes)
        };
        identical &= same;
    }
    let sweep = read_sweep_csv(&dirs[0].path().join("sweeps/sine__seed42.csv")).unwrap();
    let cells = sweep.iter().filter(|r| r.uf > 0.0).count();
    let summary = read_summary_csv(&dirs[0].path().join("summary.csv")).unwrap().len();
    Outcome {
        pass: identical && cells == 1350 && summary == 30,
        detail: format!(
            "{cells} cells (1350), {summary} summary rows (30), byte-identical rerun: {identical}, {:.1}s per run",
            per_run.as_secs_f64()
        ),
    }
}

fn main() -> ExitCode {
    let sine = Sine::load();
    let secs = Duration::from_secs;
    let results = [
        check(1, secs(1), amplitude_calibration),
        check(2, secs(1), price_split),
        check(3, secs(120), solver_vs_oracle),
        check(4, secs(300), || perfect_information_plateau(&sine)),
        check(5, secs(600), || near_oracle(&sine)),
        check(6, secs(1200), || horizon_contraction(&sine)),
        check(7, secs(60), error_statistics),
        check(8, secs(1), derived_metrics),
        check(9, secs(1800), desk_batch),
    ];
    let failed = results.iter().filter(|&&p| !p).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
