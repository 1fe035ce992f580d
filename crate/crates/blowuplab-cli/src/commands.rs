//! Subcommand implementations. Everything writes deterministic artifacts:
//! no timestamps, floats at 17 significant digits, rows in sorted order.

use crate::spec::{ExperimentSpec, SweepSpec};
use anyhow::{bail, Context, Result};
use blowuplab_core::bounds::j_value;
use blowuplab_core::integrate::{
    estimate_blowup_time, extract_final_profile, run, Trace,
};
use blowuplab_core::trace_io::{self, fmt_f64};
use blowuplab_core::verify::{run_check, CheckRecord, VerificationReport};
use blowuplab_core::mesh::interp_at;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

pub fn cmd_run(spec_path: &Path, out: Option<PathBuf>) -> Result<()> {
    let spec = ExperimentSpec::load(spec_path)?;
    let out_dir = out.unwrap_or_else(|| spec.output.dir.join("trace"));
    let trace = run(&spec.solver).context("solver run failed")?;
    trace_io::write_trace(&out_dir, &trace).context("writing trace directory")?;
    let t_est = estimate_blowup_time(&trace, spec.checks.settings.window_decades)
        .map(|e| fmt_f64(e.t_est))
        .unwrap_or_else(|_| "n/a".into());
    println!(
        "run: stop={:?} t_final={} m_final={} steps={} t_est={} -> {}",
        trace.stop_reason,
        fmt_f64(trace.t_final()),
        fmt_f64(trace.m_final()),
        trace.steps,
        t_est,
        out_dir.display()
    );
    Ok(())
}

/// Tolerance overrides given as `NAME=VALUE` flags.
pub fn parse_tol_overrides(raw: &[String]) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for item in raw {
        let (name, value) = item
            .split_once('=')
            .with_context(|| format!("--tol-override {item:?} is not NAME=VALUE"))?;
        let v: f64 = value
            .parse()
            .with_context(|| format!("--tol-override {item:?}: bad value"))?;
        out.insert(name.to_string(), v);
    }
    Ok(out)
}

pub fn verify_trace(
    spec: &ExperimentSpec,
    trace: &Trace,
    tol_overrides: &BTreeMap<String, f64>,
) -> Result<VerificationReport> {
    // the trace must have been produced by the same solver configuration,
    // otherwise the report would mix provenances
    let trace_cfg = serde_json::to_value(&trace.config)?;
    let spec_cfg = serde_json::to_value(&spec.solver)?;
    if trace_cfg != spec_cfg {
        bail!(
            "trace metadata does not match the spec's solver section; \
             re-run or point at the matching spec"
        );
    }
    let mut records: Vec<CheckRecord> = Vec::new();
    for name in spec.checks.effective_names() {
        let tol = tol_overrides
            .get(&name)
            .copied()
            .unwrap_or_else(|| spec.checks.tolerance_for(&name));
        let rec = run_check(&name, trace, &spec.bounds, &spec.checks.settings, tol)
            .with_context(|| format!("check {name} failed to execute"))?;
        records.push(rec);
    }
    let bounds_json = serde_json::to_string(&spec.bounds)?;
    let provenance = trace_io::provenance(trace, &bounds_json)?;
    Ok(VerificationReport::new(records, provenance))
}

pub fn cmd_verify(
    trace_dir: &Path,
    spec_path: &Path,
    out: Option<PathBuf>,
    tol_raw: &[String],
) -> Result<bool> {
    let spec = ExperimentSpec::load(spec_path)?;
    let overrides = parse_tol_overrides(tol_raw)?;
    let trace = trace_io::read_trace(trace_dir)
        .with_context(|| format!("reading trace {}", trace_dir.display()))?;
    let report = verify_trace(&spec, &trace, &overrides)?;
    let out_dir = out.unwrap_or_else(|| trace_dir.to_path_buf());
    std::fs::create_dir_all(&out_dir)?;
    std::fs::write(
        out_dir.join("report.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    std::fs::write(out_dir.join("report.txt"), report.render_text())?;
    print!("{}", report.render_text());
    Ok(report.all_pass())
}

pub fn worker_count(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("BLOWUPLAB_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or(4)
    .max(1)
}

pub fn cmd_sweep(
    spec_path: &Path,
    sweep_path: &Path,
    workers: Option<usize>,
    out: Option<PathBuf>,
) -> Result<bool> {
    let base = ExperimentSpec::load(spec_path)?;
    let sweep = SweepSpec::load(sweep_path)?;
    let cells = sweep.cells();
    let out_dir = out.unwrap_or_else(|| base.output.dir.join("sweep"));
    std::fs::create_dir_all(&out_dir)?;

    struct CellResult {
        key: String,
        records: Vec<CheckRecord>,
        error: Option<String>,
    }

    let n_workers = worker_count(workers).min(cells.len().max(1));
    let queue = Mutex::new((0..cells.len()).collect::<Vec<usize>>());
    let results: Vec<Mutex<Option<CellResult>>> =
        (0..cells.len()).map(|_| Mutex::new(None)).collect();

    std::thread::scope(|scope| {
        for _ in 0..n_workers {
            scope.spawn(|| loop {
                let idx = {
                    let mut q = queue.lock().unwrap();
                    match q.pop() {
                        Some(i) => i,
                        None => break,
                    }
                };
                let cell = &cells[idx];
                let key = cell.key();
                let spec = cell.apply(&base);
                let outcome = (|| -> Result<Vec<CheckRecord>> {
                    let cell_dir = out_dir.join("cells").join(&key);
                    let trace = run(&spec.solver)?;
                    trace_io::write_trace(&cell_dir.join("trace"), &trace)?;
                    let report = verify_trace(&spec, &trace, &BTreeMap::new())?;
                    std::fs::write(
                        cell_dir.join("report.json"),
                        serde_json::to_string_pretty(&report)?,
                    )?;
                    std::fs::write(cell_dir.join("report.txt"), report.render_text())?;
                    Ok(report.records)
                })();
                let result = match outcome {
                    Ok(records) => CellResult {
                        key,
                        records,
                        error: None,
                    },
                    Err(e) => CellResult {
                        key,
                        records: Vec::new(),
                        error: Some(format!("{e:#}")),
                    },
                };
                *results[idx].lock().unwrap() = Some(result);
            });
        }
    });

    let mut rows: Vec<CellResult> = results
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("cell executed"))
        .collect();
    rows.sort_by(|a, b| a.key.cmp(&b.key));

    // column set: union of check names across cells, sorted
    let mut check_names: Vec<String> = rows
        .iter()
        .flat_map(|r| r.records.iter().map(|c| c.name.clone()))
        .collect();
    check_names.sort();
    check_names.dedup();

    let mut csv = String::from("cell");
    for name in &check_names {
        csv.push_str(&format!(",{name}_fitted,{name}_violation,{name}_pass"));
    }
    csv.push_str(",error\n");
    let mut any_error = false;
    for row in &rows {
        csv.push_str(&row.key);
        for name in &check_names {
            match row.records.iter().find(|c| &c.name == name) {
                Some(rec) => {
                    csv.push(',');
                    csv.push_str(
                        &rec.fitted_constant
                            .map(fmt_f64)
                            .unwrap_or_else(|| "".into()),
                    );
                    csv.push(',');
                    csv.push_str(&fmt_f64(rec.max_violation));
                    csv.push(',');
                    csv.push_str(if rec.pass { "1" } else { "0" });
                }
                None => csv.push_str(",,,"),
            }
        }
        csv.push(',');
        if let Some(e) = &row.error {
            any_error = true;
            csv.push_str(&e.replace([',', '\n'], ";"));
        }
        csv.push('\n');
    }
    std::fs::write(out_dir.join("combined.csv"), &csv)?;
    println!(
        "sweep: {} cells -> {}",
        rows.len(),
        out_dir.join("combined.csv").display()
    );
    Ok(!any_error)
}

/// Plot-ready CSV emission: sup-norm history against the fitted blowup
/// time, the extrapolated final profile with its bound, rescaled core
/// profiles, and the functional along r at each retained snapshot.
pub fn cmd_plotdata(trace_dir: &Path, spec_path: &Path, out: Option<PathBuf>) -> Result<()> {
    let spec = ExperimentSpec::load(spec_path)?;
    let trace = trace_io::read_trace(trace_dir)?;
    let out_dir = out.unwrap_or_else(|| trace_dir.join("plotdata"));
    std::fs::create_dir_all(&out_dir)?;
    let est = estimate_blowup_time(&trace, spec.checks.settings.window_decades)?;

    let mut m_csv = String::from("t,m,neg_log_t_est_minus_t\n");
    for s in &trace.samples {
        if s.t < est.t_est {
            m_csv.push_str(&format!(
                "{},{},{}\n",
                fmt_f64(s.t),
                fmt_f64(s.m),
                fmt_f64(-(est.t_est - s.t).ln())
            ));
        }
    }
    std::fs::write(out_dir.join("m_vs_log.csv"), m_csv)?;

    let profile = extract_final_profile(&trace)?;
    // short traces may not span the decade the fit needs; emit the bound
    // at C = 0 then
    let c_fit = run_check(
        "final_profile",
        &trace,
        &spec.bounds,
        &spec.checks.settings,
        spec.checks.tolerance_for("final_profile"),
    )
    .map(|rec| rec.fitted_constant.unwrap_or(0.0).max(0.0))
    .unwrap_or(0.0);
    let mut p_csv = String::from("r,u,err,bound\n");
    for pt in &profile.points {
        if pt.r < 1.0 {
            let bound = blowuplab_core::bounds::final_profile_bound(pt.r, c_fit)?;
            p_csv.push_str(&format!(
                "{},{},{},{}\n",
                fmt_f64(pt.r),
                fmt_f64(pt.u),
                fmt_f64(pt.err),
                fmt_f64(bound)
            ));
        }
    }
    std::fs::write(out_dir.join("final_profile.csv"), p_csv)?;

    let k = spec.checks.settings.refined_k;
    let mut r_csv = String::from("m,xi,u_shifted,sharp\n");
    for snap in &trace.snapshots {
        if snap.m < 15.0 {
            continue;
        }
        let sc = (snap.m * (-snap.m).exp()).sqrt();
        for j in 0..=64 {
            let xi = k * j as f64 / 64.0;
            let u = interp_at(&snap.field, xi * sc);
            r_csv.push_str(&format!(
                "{},{},{},{}\n",
                fmt_f64(snap.m),
                fmt_f64(xi),
                fmt_f64(u - snap.m),
                fmt_f64(-(0.25 * xi * xi).ln_1p())
            ));
        }
    }
    std::fs::write(out_dir.join("rescaled_profiles.csv"), r_csv)?;

    let mut j_csv = String::from("m,r,j\n");
    for snap in &trace.snapshots {
        let ur = blowuplab_core::verify::radial_derivative(&snap.field);
        let nodes = snap.field.grid.nodes();
        let r_half = 0.5 * snap.field.grid.r_max();
        for i in 1..nodes.len() - 1 {
            if nodes[i] > r_half {
                break;
            }
            // guard: phi needs u >= 0, and late outer values may round below
            let u = snap.field.values[i].max(0.0);
            let jv = j_value(u, ur[i], nodes[i], &spec.bounds)?;
            j_csv.push_str(&format!(
                "{},{},{}\n",
                fmt_f64(snap.m),
                fmt_f64(nodes[i]),
                fmt_f64(jv)
            ));
        }
    }
    std::fs::write(out_dir.join("j_profile.csv"), j_csv)?;

    println!("plotdata: 4 files -> {}", out_dir.display());
    Ok(())
}
