//! Batch front end: builds sofic approximations, evaluates partition
//! distances, counts approximating partitions, assembles rate curves and
//! entropy reports, and runs the named verification suites.
//!
//! Every command is a pure function of its JSON config (plus seed): outputs
//! embed the config's SHA-256 and the tool version, numeric output is
//! printed with 12 significant digits, and results are bit-identical across
//! runs and worker counts.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use soficount::ap::{
    ap_enumerate, ap_importance_estimate, curve_csv, curve_json, df_sigma, fmt12, h_report,
    rate_curve, RateMode,
};
use soficount::bernoulli::{ow_pushforward_check, BaseMeasure, Verdict};
use soficount::fin::FinPartition;
use soficount::group::{decode_nf, Group, GroupElement, GroupSpec};
use soficount::partition::{df_model, ModelPartition};
use soficount::sofic::{
    build_folner_approx, build_quotient_approx, build_random_free_approx, SymMap,
};
use soficount::space::ModelSpace;
use soficount::verify::{run_suite, SUITE_NAMES};
use soficount::{Error, Result};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "soficount", version, about = "finite-scale sofic entropy toolkit")]
struct Cli {
    /// Worker thread count; results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a schedule of sofic approximations and certify their quality.
    BuildApprox {
        #[arg(long)]
        config: PathBuf,
    },
    /// Distance between partitions: Rohlin, model-side d_F, or d_F under sigma.
    Dist {
        #[arg(long)]
        config: PathBuf,
    },
    /// Count or estimate |AP(sigma, alpha : F, eps)|.
    CountAp {
        #[arg(long)]
        config: PathBuf,
    },
    /// One AP rate per approximation in the schedule; CSV on stdout.
    RateCurve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Tail-max rate matrix over (F, eps) schedules with a headline value.
    HReport {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run named invariant suites and print a pass/fail table.
    Verify {
        /// Suite name; repeatable. Defaults to all suites.
        #[arg(long)]
        suite: Vec<String>,
    },
    /// Ornstein-Weiss factor map pushforward check.
    OwDemo {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            // pool already initialized; worker count has no effect on results
        }
    }
    let outcome = match &cli.cmd {
        Cmd::BuildApprox { config } => cmd_build_approx(config),
        Cmd::Dist { config } => cmd_dist(config),
        Cmd::CountAp { config } => cmd_count_ap(config),
        Cmd::RateCurve { config } => cmd_rate_curve(config),
        Cmd::HReport { config } => cmd_h_report(config),
        Cmd::Verify { suite } => cmd_verify(suite),
        Cmd::OwDemo { config } => cmd_ow_demo(config),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let (kind, code) = classify(&e);
            eprintln!(
                "{}",
                json!({"error": {"kind": kind, "message": e.to_string()}})
            );
            code
        }
    }
}

/// Exit codes: 0 ok, 1 verification failure, 2 config error, 3 budget error.
fn classify(e: &Error) -> (&'static str, ExitCode) {
    match e {
        Error::Budget(_) => ("budget", ExitCode::from(3)),
        _ => ("config", ExitCode::from(2)),
    }
}

struct Config {
    value: Value,
    sha256: String,
}

fn load_config(path: &Path) -> Result<Config> {
    let bytes = fs::read(path)?;
    let value: Value = serde_json::from_slice(&bytes)?;
    let digest = Sha256::digest(&bytes);
    let sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
    Ok(Config { value, sha256 })
}

fn stamp(mut v: Value, cfg: &Config) -> Value {
    if let Some(map) = v.as_object_mut() {
        map.insert("tool_version".into(), json!(VERSION));
        map.insert("config_sha256".into(), json!(cfg.sha256));
    }
    v
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn field<'a>(v: &'a Value, name: &str) -> Result<&'a Value> {
    v.get(name).ok_or_else(|| bad(format!("missing config field '{name}'")))
}

fn parse_group(cfg: &Value) -> Result<Group> {
    let spec: GroupSpec = serde_json::from_value(field(cfg, "group")?.clone())?;
    Group::new(spec)
}

/// Builder spec: {"kind": "quotient"|"folner", "schedule": [..]} or
/// {"kind": "random-free", "degrees": [..], "seed": n}.
fn build_schedule(group: &Group, cfg: &Value) -> Result<Vec<SymMap>> {
    let b = field(cfg, "builder")?;
    let kind = b.get("kind").and_then(Value::as_str).ok_or_else(|| bad("builder.kind"))?;
    match kind {
        "quotient" => {
            let schedule: Vec<u64> = serde_json::from_value(field(b, "schedule")?.clone())?;
            build_quotient_approx(group, &schedule)
        }
        "folner" => {
            let schedule: Vec<u64> = serde_json::from_value(field(b, "schedule")?.clone())?;
            build_folner_approx(group, &schedule)
        }
        "random-free" => {
            let degrees: Vec<usize> = serde_json::from_value(field(b, "degrees")?.clone())?;
            let seed = b.get("seed").and_then(Value::as_u64).unwrap_or(0);
            degrees.iter().map(|&m| build_random_free_approx(group, m, seed)).collect()
        }
        other => Err(bad(format!("unknown builder kind '{other}'"))),
    }
}

/// F spec: {"radius": r} or {"elements": [normal forms]}.
fn parse_f(group: &Group, v: &Value) -> Result<(Vec<GroupElement>, Option<u32>)> {
    if let Some(r) = v.get("radius").and_then(Value::as_u64) {
        return Ok((group.ball(r as u32), Some(r as u32)));
    }
    if let Some(els) = v.get("elements").and_then(Value::as_array) {
        let f = els
            .iter()
            .map(|e| group.element(decode_nf(group.spec(), e)?))
            .collect::<Result<Vec<_>>>()?;
        return Ok((f, None));
    }
    Err(bad("F spec needs 'radius' or 'elements'"))
}

/// Partition spec: full partition JSON, or the shorthand
/// {"kind": "canonical", "weights": [..]} / {"kind": "trivial", "weights": [..]}.
fn parse_partition(group: &Group, v: &Value) -> Result<ModelPartition> {
    if v.get("space").is_some() {
        return ModelPartition::from_json(v);
    }
    let weights: Vec<f64> = serde_json::from_value(field(v, "weights")?.clone())?;
    let space = ModelSpace::bernoulli(group.clone(), weights)?;
    match v.get("kind").and_then(Value::as_str) {
        Some("canonical") => ModelPartition::canonical_bernoulli(&space),
        Some("trivial") => Ok(ModelPartition::trivial(&space)),
        _ => Err(bad("partition spec needs 'space' or kind canonical/trivial")),
    }
}

fn parse_mode(cfg: &Value) -> Result<RateMode> {
    match cfg.get("mode").and_then(Value::as_str).unwrap_or("exact") {
        "exact" => Ok(RateMode::Exact),
        "sampled" => {
            let n = field(cfg, "n_samples")?.as_u64().ok_or_else(|| bad("n_samples"))? as usize;
            let seed = cfg.get("seed").and_then(Value::as_u64).unwrap_or(0);
            Ok(RateMode::Sampled { n_samples: n, seed })
        }
        other => Err(bad(format!("unknown mode '{other}'"))),
    }
}

fn emit(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn cmd_build_approx(path: &Path) -> Result<ExitCode> {
    let cfg = load_config(path)?;
    let group = parse_group(&cfg.value)?;
    let sigmas = build_schedule(&group, &cfg.value)?;
    let certify_radius =
        cfg.value.get("certify_radius").and_then(Value::as_u64).unwrap_or(1) as u32;
    let support = group.ball(certify_radius);
    let out_dir = cfg.value.get("out_dir").and_then(Value::as_str);
    let mut reports = Vec::new();
    for (i, sigma) in sigmas.iter().enumerate() {
        let rep = sigma.good_set(&support)?;
        let mut entry = json!({
            "i": i + 1,
            "m": sigma.degree(),
            "certify_radius": certify_radius,
            "epsilon": fmt12(rep.epsilon),
            "good_set_size": rep.good_set.len(),
        });
        if let Some(dir) = out_dir {
            fs::create_dir_all(dir)?;
            let file = format!("{dir}/sigma_{:03}.json", i + 1);
            fs::write(&file, serde_json::to_string_pretty(&sigma.to_json(&support)?)?)?;
            entry["file"] = json!(file);
        }
        reports.push(entry);
    }
    emit(&stamp(json!({"approximations": reports}), &cfg));
    Ok(ExitCode::SUCCESS)
}

fn cmd_dist(path: &Path) -> Result<ExitCode> {
    let cfg = load_config(path)?;
    let group = parse_group(&cfg.value)?;
    let metric =
        cfg.value.get("metric").and_then(Value::as_str).ok_or_else(|| bad("metric"))?;
    let alpha = parse_partition(&group, field(&cfg.value, "alpha")?)?;
    let value = match metric {
        "rohlin" => {
            let beta = parse_partition(&group, field(&cfg.value, "beta")?)?;
            alpha.rohlin_distance(&beta)?
        }
        "df-model" => {
            let beta = parse_partition(&group, field(&cfg.value, "beta")?)?;
            let (f, _) = parse_f(&group, field(&cfg.value, "f")?)?;
            df_model(&alpha, &beta, &f)?
        }
        "df-sigma" => {
            let sigma = build_schedule(&group, &cfg.value)?
                .pop()
                .ok_or_else(|| bad("empty builder schedule"))?;
            let fin = field(&cfg.value, "finite_partition")?;
            let abar = FinPartition::from_json(fin)?;
            let (f, _) = parse_f(&group, field(&cfg.value, "f")?)?;
            df_sigma(&sigma, &alpha, &abar, &f)?
        }
        other => return Err(bad(format!("unknown metric '{other}'"))),
    };
    emit(&stamp(json!({"metric": metric, "value": fmt12(value)}), &cfg));
    Ok(ExitCode::SUCCESS)
}

fn cmd_count_ap(path: &Path) -> Result<ExitCode> {
    let cfg = load_config(path)?;
    let group = parse_group(&cfg.value)?;
    let sigma = build_schedule(&group, &cfg.value)?
        .pop()
        .ok_or_else(|| bad("empty builder schedule"))?;
    let alpha = parse_partition(&group, field(&cfg.value, "partition")?)?;
    let (f, _) = parse_f(&group, field(&cfg.value, "f")?)?;
    let eps = field(&cfg.value, "epsilon")?.as_f64().ok_or_else(|| bad("epsilon"))?;
    let count = match parse_mode(&cfg.value)? {
        RateMode::Exact => ap_enumerate(&sigma, &alpha, &f, eps, None)?.0,
        RateMode::Sampled { n_samples, seed } => {
            ap_importance_estimate(&sigma, &alpha, &f, eps, n_samples, seed)?
        }
    };
    let mut v = count.to_json();
    v["count"] = json!(fmt12(count.count));
    v["m"] = json!(sigma.degree());
    emit(&stamp(v, &cfg));
    Ok(ExitCode::SUCCESS)
}

fn cmd_rate_curve(path: &Path) -> Result<ExitCode> {
    let cfg = load_config(path)?;
    let group = parse_group(&cfg.value)?;
    let sigmas = build_schedule(&group, &cfg.value)?;
    let alpha = parse_partition(&group, field(&cfg.value, "partition")?)?;
    let (f, radius) = parse_f(&group, field(&cfg.value, "f")?)?;
    let eps = field(&cfg.value, "epsilon")?.as_f64().ok_or_else(|| bad("epsilon"))?;
    let mode = parse_mode(&cfg.value)?;
    let curve = rate_curve(&sigmas, &alpha, &f, radius, eps, mode);
    let csv = format!(
        "# tool_version={VERSION}\n# config_sha256={}\n{}",
        cfg.sha256,
        curve_csv(&curve.entries)
    );
    print!("{csv}");
    if let Some(out) = cfg.value.get("csv_out").and_then(Value::as_str) {
        fs::write(out, &csv)?;
    }
    if let Some(out) = cfg.value.get("json_out").and_then(Value::as_str) {
        let v = stamp(json!({"entries": curve_json(&curve.entries)}), &cfg);
        fs::write(out, serde_json::to_string_pretty(&v)?)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_h_report(path: &Path) -> Result<ExitCode> {
    let cfg = load_config(path)?;
    let group = parse_group(&cfg.value)?;
    let sigmas = build_schedule(&group, &cfg.value)?;
    let alpha = parse_partition(&group, field(&cfg.value, "partition")?)?;
    let f_specs =
        field(&cfg.value, "f_schedule")?.as_array().ok_or_else(|| bad("f_schedule"))?;
    let mut f_schedule = Vec::new();
    let mut radii = Vec::new();
    for spec in f_specs {
        let (f, r) = parse_f(&group, spec)?;
        f_schedule.push(f);
        radii.push(r);
    }
    let f_radii: Option<Vec<u32>> = radii.into_iter().collect();
    let eps_schedule: Vec<f64> =
        serde_json::from_value(field(&cfg.value, "eps_schedule")?.clone())?;
    let tail = cfg.value.get("tail_window").and_then(Value::as_u64).unwrap_or(3) as usize;
    let mode = parse_mode(&cfg.value)?;
    let report =
        h_report(&sigmas, &alpha, &f_schedule, f_radii.as_deref(), &eps_schedule, mode, tail)?;
    let v = stamp(report.to_json(), &cfg);
    emit(&v);
    if let Some(out) = cfg.value.get("json_out").and_then(Value::as_str) {
        fs::write(out, serde_json::to_string_pretty(&v)?)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(suites: &[String]) -> Result<ExitCode> {
    let names: Vec<&str> = if suites.is_empty() {
        SUITE_NAMES.to_vec()
    } else {
        suites.iter().map(String::as_str).collect()
    };
    let mut failures = 0usize;
    let mut total = 0usize;
    for name in names {
        for r in run_suite(name)? {
            total += 1;
            let status = if r.passed { "PASS" } else { "FAIL" };
            failures += usize::from(!r.passed);
            if r.detail.is_empty() {
                println!("{status} {} :: {}", r.suite, r.name);
            } else {
                println!("{status} {} :: {} :: {}", r.suite, r.name, r.detail);
            }
        }
    }
    println!("{} checks, {failures} failures", total);
    Ok(if failures == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_ow_demo(path: &Path) -> Result<ExitCode> {
    let cfg = load_config(path)?;
    let radius = cfg.value.get("radius").and_then(Value::as_u64).unwrap_or(1) as u32;
    let base = match cfg.value.get("base") {
        Some(w) => BaseMeasure::new(serde_json::from_value(w.clone())?)?,
        None => BaseMeasure::uniform(2)?,
    };
    let report = ow_pushforward_check(radius, &base)?;
    let pass = report.verdict == Verdict::Pass;
    emit(&stamp(report.to_json(), &cfg));
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
