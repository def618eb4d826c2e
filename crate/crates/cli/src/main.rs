//! Batch front door: run scenarios, raw ensemble simulations, parameter
//! sweeps, or pure criterion checks, and emit machine-readable results.
//!
//! Exit codes: 0 consistent, 1 inconsistent, 2 inconclusive, 64 usage
//! error, 65 malformed configuration, 70 internal error.

mod checks;
mod io;
mod model_cfg;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spde_stab::error::Error;
use spde_stab::scenarios::{self, Config, Verdict};

const EXIT_CONSISTENT: u8 = 0;
const EXIT_INCONSISTENT: u8 = 1;
const EXIT_INCONCLUSIVE: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_CONFIG: u8 = 65;
const EXIT_INTERNAL: u8 = 70;

/// Seed override for CI fuzzing; recorded in the manifest when used.
const SEED_ENV: &str = "SPDE_STAB_SEED";

#[derive(Parser)]
#[command(name = "spde-stab", version, about = "Stability laboratory for stochastic reaction-diffusion equations", disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named scenario; writes report JSON, series CSV, and manifest
    Scenario {
        /// Scenario name from the catalog (see `list`)
        name: String,
        /// Config file of key=value lines overriding the defaults
        #[arg(long)]
        config: Option<PathBuf>,
        /// Inline overrides, repeatable; last one wins
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        /// Output directory
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads for the ensemble (default: all cores)
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Raw ensemble run of a configured model; writes series CSV
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Cartesian sweep of a scenario over 1 or 2 config keys
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        /// Axis spec `key=start:step:end` or `key=v1,v2,...`; repeatable
        #[arg(long = "axis", value_name = "SPEC", required = true)]
        axes: Vec<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Evaluate one stability criterion; prints the report JSON to stdout
    Check {
        /// Criterion tag (see `list`)
        tag: String,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
    /// List scenarios and criterion tags
    List,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::InvalidArgument(_)
        | Error::InvalidCovariance(_)
        | Error::ConditionViolated(_)
        | Error::FitUndefined(_) => EXIT_CONFIG,
        Error::Internal(_) => EXIT_INTERNAL,
    }
}

fn dispatch(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Scenario {
            name,
            config,
            sets,
            out,
            jobs,
        } => cmd_scenario(&name, config, &sets, &out, jobs),
        Command::Simulate {
            config,
            sets,
            out,
            jobs,
        } => cmd_simulate(config, &sets, &out, jobs),
        Command::Sweep {
            config,
            sets,
            axes,
            out,
            jobs,
        } => cmd_sweep(config, &sets, &axes, &out, jobs),
        Command::Check { tag, sets } => cmd_check(&tag, &sets),
        Command::List => {
            cmd_list();
            Ok(EXIT_CONSISTENT)
        }
    }
}

fn cmd_list() {
    println!("scenarios:");
    for (name, desc) in scenarios::catalog() {
        println!("  {name:<22} {desc}");
    }
    println!("criterion tags (for `check`):");
    for (tag, params) in checks::TAGS {
        println!("  {tag:<12} parameters: {params}");
    }
}

/// Merges defaults <- file <- --set pairs <- seed env override.
fn merge_config(
    mut cfg: Config,
    file: Option<PathBuf>,
    sets: &[String],
) -> Result<(Config, bool), Error> {
    if let Some(path) = file {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::Config(format!("reading {}: {e}", path.display())))?;
        cfg.merge_text(&text)?;
    }
    for pair in sets {
        cfg.set_pair(pair)?;
    }
    let mut env_seed = false;
    if let Ok(seed) = std::env::var(SEED_ENV) {
        let parsed: u64 = seed
            .parse()
            .map_err(|_| Error::Config(format!("{SEED_ENV}=`{seed}` is not a u64 seed")))?;
        cfg.set("ensemble.seed", &parsed.to_string());
        env_seed = true;
    }
    Ok((cfg, env_seed))
}

fn with_pool<T: Send>(
    jobs: Option<usize>,
    f: impl FnOnce() -> Result<T, Error> + Send,
) -> Result<T, Error> {
    match jobs {
        None => f(),
        Some(n) => {
            if n == 0 {
                return Err(Error::Config("--jobs must be at least 1".into()));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
            pool.install(f)
        }
    }
}

fn verdict_exit(verdict: Verdict) -> u8 {
    match verdict {
        Verdict::Consistent => EXIT_CONSISTENT,
        Verdict::Inconsistent => EXIT_INCONSISTENT,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

fn cmd_scenario(
    name: &str,
    config: Option<PathBuf>,
    sets: &[String],
    out: &std::path::Path,
    jobs: Option<usize>,
) -> Result<u8, Error> {
    let defaults = match scenarios::default_config(name) {
        Ok(cfg) => cfg,
        Err(_) => {
            eprintln!("unknown scenario `{name}`; available scenarios:");
            for (n, desc) in scenarios::catalog() {
                eprintln!("  {n:<22} {desc}");
            }
            return Ok(EXIT_USAGE);
        }
    };
    let (cfg, env_seed) = merge_config(defaults, config, sets)?;
    let seed = cfg.u64("ensemble.seed")?;
    let mut manifest = io::RunManifest::start(&format!("scenario {name}"), &cfg.canonical_text(), seed);
    manifest.jobs = jobs;
    manifest.seed_env_override = env_seed;
    manifest.scenarios.push(name.to_string());

    let report = with_pool(jobs, || scenarios::run(name, &cfg))?;

    let dir = io::ensure_out_dir(out)?;
    let report_path = dir.join(format!("{name}_report.json"));
    let csv_path = dir.join(format!("{name}_series.csv"));
    io::write_json(&report_path, &report)?;
    io::write_csv(&csv_path, &report.series)?;
    manifest.outputs = vec![
        report_path.display().to_string(),
        csv_path.display().to_string(),
    ];
    manifest.finish();
    io::write_json(&dir.join("manifest.json"), &manifest)?;

    println!("scenario {name}: verdict {:?} ({:.2}s)", report.verdict, report.wall_clock_secs);
    for c in &report.checks {
        println!("  [{:?}] {} (observed {:.6e}, bound {:.6e})", c.status, c.name, c.observed, c.bound);
    }
    println!("report: {}", report_path.display());
    Ok(verdict_exit(report.verdict))
}

fn cmd_simulate(
    config: Option<PathBuf>,
    sets: &[String],
    out: &std::path::Path,
    jobs: Option<usize>,
) -> Result<u8, Error> {
    let (cfg, env_seed) = merge_config(Config::new(), config, sets)?;
    let run = model_cfg::parse_simulate(&cfg)?;
    let mut manifest = io::RunManifest::start("simulate", &cfg.canonical_text(), run.seed);
    manifest.jobs = jobs;
    manifest.seed_env_override = env_seed;

    let stats = with_pool(jobs, || {
        let ensemble = spde_stab::evolve::run_ensemble(
            &run.model,
            &run.init,
            run.t_end,
            run.dt,
            run.save_stride,
            run.seed,
            run.paths,
        )?;
        spde_stab::stats::ms_norm(&ensemble)
    })?;

    let series = spde_stab::scenarios::TimeSeries {
        columns: vec![
            "t".into(),
            "ms_norm".into(),
            "stderr".into(),
            "min_norm".into(),
            "max_norm".into(),
            "blowup_fraction".into(),
        ],
        rows: (0..stats.times.len())
            .map(|i| {
                vec![
                    stats.times[i],
                    stats.mean[i],
                    stats.stderr[i],
                    stats.min[i],
                    stats.max[i],
                    stats.blowup_fraction[i],
                ]
            })
            .collect(),
    };
    let dir = io::ensure_out_dir(out)?;
    let csv_path = dir.join("simulate_series.csv");
    io::write_csv(&csv_path, &series)?;
    manifest.outputs = vec![csv_path.display().to_string()];
    manifest.finish();
    io::write_json(&dir.join("manifest.json"), &manifest)?;
    println!(
        "simulate: {} paths ({} overflowed), {} saved times -> {}",
        stats.path_count,
        stats.overflow_count,
        stats.times.len(),
        csv_path.display()
    );
    Ok(EXIT_CONSISTENT)
}

fn cmd_sweep(
    config: Option<PathBuf>,
    sets: &[String],
    axes: &[String],
    out: &std::path::Path,
    jobs: Option<usize>,
) -> Result<u8, Error> {
    let (pre, _) = merge_config(Config::new(), config.clone(), sets)?;
    let scenario = pre
        .get("scenario")
        .ok_or_else(|| Error::Config("sweep needs a `scenario=<name>` config key".into()))?
        .to_string();
    let base = match scenarios::default_config(&scenario) {
        Ok(cfg) => cfg,
        Err(_) => {
            eprintln!("unknown scenario `{scenario}` in sweep config");
            return Ok(EXIT_USAGE);
        }
    };
    // rebuild on top of the scenario defaults, then drop the selector key
    let (merged, env_seed) = merge_config(base, config, sets)?;
    let mut cfg = Config::new();
    for (k, v) in merged.entries() {
        if k != "scenario" {
            cfg.set(k, v);
        }
    }

    let parsed_axes: Vec<sweep::Axis> = axes
        .iter()
        .map(|s| sweep::parse_axis(s))
        .collect::<Result<_, _>>()?;
    let seed = cfg.u64("ensemble.seed")?;
    let mut manifest = io::RunManifest::start(
        &format!("sweep {scenario}"),
        &format!("{}axes={}\n", cfg.canonical_text(), axes.join(";")),
        seed,
    );
    manifest.jobs = jobs;
    manifest.seed_env_override = env_seed;
    manifest.scenarios.push(scenario.to_string());

    let result = with_pool(jobs, || sweep::run_sweep(&scenario, &cfg, &parsed_axes))?;

    let dir = io::ensure_out_dir(out)?;
    let csv_path = dir.join("sweep.csv");
    let json_path = dir.join("sweep.json");
    io::write_csv(&csv_path, &result.csv)?;
    io::write_json(&json_path, &result.rows)?;
    manifest.outputs = vec![
        csv_path.display().to_string(),
        json_path.display().to_string(),
    ];
    manifest.finish();
    io::write_json(&dir.join("manifest.json"), &manifest)?;
    println!("sweep {scenario}: {} points -> {}", result.rows.len(), csv_path.display());
    Ok(EXIT_CONSISTENT)
}

fn cmd_check(tag: &str, sets: &[String]) -> Result<u8, Error> {
    if !checks::TAGS.iter().any(|(t, _)| *t == tag) {
        eprintln!("unknown criterion tag `{tag}`; available tags:");
        for (t, params) in checks::TAGS {
            eprintln!("  {t:<12} parameters: {params}");
        }
        return Ok(EXIT_USAGE);
    }
    let mut cfg = Config::new();
    for pair in sets {
        cfg.set_pair(pair)?;
    }
    let output = checks::run_check(tag, &cfg)?;
    let json = match output {
        checks::CheckOutput::Reports(reports) => serde_json::to_string_pretty(&reports)
            .map_err(|e| Error::Internal(format!("serializing: {e}")))?,
        checks::CheckOutput::Value { tag, value } => serde_json::to_string_pretty(
            &serde_json::json!({ "tag": tag, "value": value }),
        )
        .map_err(|e| Error::Internal(format!("serializing: {e}")))?,
    };
    println!("{json}");
    Ok(EXIT_CONSISTENT)
}
