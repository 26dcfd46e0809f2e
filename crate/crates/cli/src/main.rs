//! Experiment harness CLI for the dressed-state ion qubit simulator.
//!
//! Exit codes: 0 on success, 1 on validation errors (configuration,
//! sequence syntax, unknown experiments or parameters), 2 on fit or
//! integration failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};

use dressedsim::config::{ParamValue, Params, RunConfig};
use dressedsim::experiments::{run_experiment, Experiment, ExperimentError, ExperimentResult};
use dressedsim::measure::fidelity_report;
use dressedsim::noise::{calibrate_quasi_static, sample_trajectory};
use dressedsim::propagator::{evolve, run_ensemble, Physics};
use dressedsim::report::write_outputs;
use dressedsim::seqlang::{parse, parse_scalar, serialize, SequenceSource};
use dressedsim::statespace::{BareLevel, StateVector};

#[derive(Parser)]
#[command(
    name = "dressedsim",
    about = "Simulate a microwave dressed-state trapped-ion qubit",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// Configuration file: flat `key = value` text, or a JSON result
    /// sidecar to reproduce a previous run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one configuration key or experiment parameter, e.g.
    /// `--set delta=160Hz` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named experiment sweep and write CSV + JSON results.
    Run {
        /// Experiment name (see `list-experiments`).
        experiment: String,
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory (default `results`, or `output_dir` from the
        /// config file).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run a raw pulse sequence and report the bright fraction.
    Seq {
        /// Sequence file (.seq).
        file: Option<PathBuf>,
        /// Inline sequence text instead of a file.
        #[arg(short, long, conflicts_with = "file")]
        expr: Option<String>,
        #[command(flatten)]
        config: ConfigArgs,
        /// Print the pre-measurement state of shot 0 as JSON.
        #[arg(long)]
        dump_state: bool,
        /// Write the shot-0 noise trajectory to this CSV file.
        #[arg(long, value_name = "FILE")]
        dump_noise: Option<PathBuf>,
    },
    /// Print the control dump (time-resolved field table) of a sequence.
    DumpControls {
        /// Sequence file (.seq).
        file: PathBuf,
        /// Samples per segment.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Write to a file instead of stdout.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo estimate of the detection fidelity.
    DetectorFidelity {
        #[command(flatten)]
        config: ConfigArgs,
        /// Shots per input state.
        #[arg(long, default_value_t = 20000)]
        shots: usize,
    },
    /// Find the quasi-static field noise matching a target coherence time.
    CalibrateNoise {
        /// Target 1/e Ramsey coherence time, e.g. `40ms`.
        #[arg(long)]
        t2: String,
        #[command(flatten)]
        config: ConfigArgs,
        /// Monte-Carlo shots per bisection step.
        #[arg(long, default_value_t = 20000)]
        shots: usize,
    },
    /// List the available experiments.
    ListExperiments,
}

/// Failures that indicate bad inputs rather than a failed computation.
fn is_validation_error(err: &ExperimentError) -> bool {
    matches!(
        err,
        ExperimentError::UnknownExperiment(_)
            | ExperimentError::BadParam { .. }
            | ExperimentError::Schedule(_)
    )
}

fn load_config(args: &ConfigArgs, experiment: Option<&str>) -> anyhow::Result<(RunConfig, Params)> {
    let mut cfg = RunConfig::default();
    let mut params = Params::new();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        if text.trim_start().starts_with('{') {
            let sidecar: ExperimentResult = serde_json::from_str(&text)
                .with_context(|| format!("{} is not a result sidecar", path.display()))?;
            if let Some(requested) = experiment {
                if requested != sidecar.experiment {
                    bail!(
                        "sidecar {} was produced by `{}`, not `{requested}`",
                        path.display(),
                        sidecar.experiment
                    );
                }
            }
            cfg = sidecar.config;
            params = sidecar.params;
        } else {
            cfg.apply_text(&text)
                .with_context(|| format!("invalid config {}", path.display()))?;
        }
    }
    for entry in &args.sets {
        let (key, value) = entry
            .split_once('=')
            .ok_or_else(|| anyhow!("--set needs KEY=VALUE, got `{entry}`"))?;
        apply_set(&mut cfg, &mut params, experiment, key.trim(), value.trim())?;
    }
    cfg.validate()?;
    Ok((cfg, params))
}

/// Route a `--set` to the experiment parameters when the experiment has
/// the key, otherwise to the run configuration.
fn apply_set(
    cfg: &mut RunConfig,
    params: &mut Params,
    experiment: Option<&str>,
    key: &str,
    value: &str,
) -> anyhow::Result<()> {
    if let Some(name) = experiment {
        let exp = Experiment::from_name(name).map_err(|e| anyhow!(e.to_string()))?;
        if let Some((_, default, _)) = exp.params().into_iter().find(|(k, _, _)| *k == key) {
            let parsed = match default {
                ParamValue::Number(_) => ParamValue::Number(
                    parse_scalar(value).map_err(|e| anyhow!("--set {key}: {e}"))?,
                ),
                ParamValue::Word(_) => ParamValue::Word(value.to_string()),
            };
            params.insert(key.to_string(), parsed);
            return Ok(());
        }
    }
    cfg.set(key, value)
        .map_err(|e| anyhow!("--set {key}: {e}"))?;
    Ok(())
}

fn read_sequence(file: Option<&Path>, expr: Option<&str>) -> anyhow::Result<SequenceSource> {
    match (file, expr) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            Ok(SequenceSource::new(path.display().to_string(), text))
        }
        (None, Some(text)) => Ok(SequenceSource::new("<inline>", text.to_string())),
        _ => bail!("provide a sequence file or --expr <text>"),
    }
}

fn print_diagnostics(src: &SequenceSource, diags: &[dressedsim::seqlang::Diagnostic]) {
    for d in diags {
        eprintln!("{}:{d}", src.name);
    }
}

fn cmd_run(experiment: &str, config: &ConfigArgs, out: Option<PathBuf>) -> anyhow::Result<u8> {
    let exp = match Experiment::from_name(experiment) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("known experiments:");
            for e in Experiment::ALL {
                eprintln!("  {}", e.name());
            }
            return Ok(1);
        }
    };
    let (cfg, params) = match load_config(config, Some(experiment)) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e:#}");
            return Ok(1);
        }
    };
    let result = match run_experiment(exp, &cfg, &params) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(if is_validation_error(&e) { 1 } else { 2 });
        }
    };
    let dir = out
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"));
    let (csv_path, json_path) = write_outputs(&result, &dir)?;
    println!(
        "{}: {} points × {} shots",
        result.experiment,
        result.rows.len(),
        cfg.shots
    );
    if let Some(fit) = &result.fit {
        for p in &fit.params {
            println!("  {} = {:.6e} ± {:.1e}", p.name, p.value, p.stderr);
        }
        println!(
            "  model {}, reduced chi² = {:.2}",
            fit.model, fit.reduced_chi2
        );
    }
    for note in &result.notes {
        println!("  note: {note}");
    }
    println!("wrote {}", csv_path.display());
    println!("wrote {}", json_path.display());
    Ok(0)
}

fn cmd_seq(
    file: Option<&Path>,
    expr: Option<&str>,
    config: &ConfigArgs,
    dump_state: bool,
    dump_noise: Option<&Path>,
) -> anyhow::Result<u8> {
    let (mut cfg, _) = match load_config(config, None) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e:#}");
            return Ok(1);
        }
    };
    let src = read_sequence(file, expr)?;
    let parsed = parse::<f64>(&src);
    print_diagnostics(&src, &parsed.diagnostics);
    let Some(schedule) = parsed.schedule else {
        return Ok(1);
    };
    // `set B = ...` inside the sequence overrides the run configuration.
    for (key, value) in &schedule.settings {
        if key == "B" {
            if let dressedsim::pulses::SettingValue::Quantity(v) = value {
                cfg.b_field = *v;
            }
        }
    }
    let ctx = cfg.sim_context();
    let points = vec![(0.0, schedule.clone())];
    let stats = match run_ensemble(&points, &ctx, cfg.seed, cfg.shots) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(2);
        }
    };
    let s = &stats[0];
    println!(
        "bright fraction {:.4} (95% CI [{:.4}, {:.4}], {} shots, {:.6e} s sequence)",
        s.p_bright,
        s.ci_low,
        s.ci_high,
        s.shots,
        schedule.total_duration()
    );

    if dump_state || dump_noise.is_some() {
        let duration = schedule.total_duration().max(1e-9);
        let mut noise = ctx.noise;
        noise.seed = cfg.seed;
        let traj = sample_trajectory(&noise, duration, duration, 0);
        if let Some(path) = dump_noise {
            let mut out = String::from("t,delta_b_gauss\n");
            for (k, v) in traj.values.iter().enumerate() {
                out.push_str(&format!("{},{}\n", traj.dt * k as f64, v));
            }
            std::fs::write(path, out)
                .with_context(|| format!("cannot write {}", path.display()))?;
            println!("wrote {}", path.display());
        }
        if dump_state {
            let initial = StateVector::<f64>::bare(BareLevel::Zero);
            match evolve(
                &initial,
                &schedule,
                &traj,
                &Physics::at_field(cfg.b_field),
                &cfg.propagator,
                0,
            ) {
                Ok(shot) => {
                    let state = serde_json::json!({
                        "basis": shot.final_state.basis,
                        "amplitudes": shot.final_state.to_flat(),
                    });
                    println!("{state}");
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return Ok(2);
                }
            }
        }
    }
    Ok(0)
}

fn cmd_dump_controls(file: &Path, samples: usize, out: Option<&Path>) -> anyhow::Result<u8> {
    let src = read_sequence(Some(file), None)?;
    let parsed = parse::<f64>(&src);
    print_diagnostics(&src, &parsed.diagnostics);
    let Some(schedule) = parsed.schedule else {
        return Ok(1);
    };
    let csv = schedule.control_dump_csv(samples);
    match out {
        Some(path) => {
            std::fs::write(path, csv)
                .with_context(|| format!("cannot write {}", path.display()))?;
            println!("wrote {}", path.display());
        }
        None => print!("{csv}"),
    }
    if let Err(e) = serialize(&schedule) {
        eprintln!("warning: schedule is not serializable: {e}");
    }
    Ok(0)
}

fn cmd_detector_fidelity(config: &ConfigArgs, shots: usize) -> anyhow::Result<u8> {
    let (cfg, _) = match load_config(config, None) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e:#}");
            return Ok(1);
        }
    };
    if shots < 1000 {
        eprintln!("error: fidelity estimate needs at least 1000 shots");
        return Ok(1);
    }
    let report = fidelity_report(&cfg.detector, shots, cfg.seed);
    println!("P(bright | F=1) = {:.4}", report.f_bright);
    println!("P(dark   | F=0) = {:.4}", report.f_dark);
    println!(
        "mean fidelity   = {:.4}  ({} shots per state)",
        report.f_mean, report.shots
    );
    Ok(0)
}

fn cmd_calibrate_noise(t2: &str, config: &ConfigArgs, shots: usize) -> anyhow::Result<u8> {
    let (cfg, _) = match load_config(config, None) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e:#}");
            return Ok(1);
        }
    };
    let target = match parse_scalar(t2) {
        Ok(v) if v > 0.0 => v,
        Ok(_) => {
            eprintln!("error: --t2 must be positive");
            return Ok(1);
        }
        Err(e) => {
            eprintln!("error: --t2: {e}");
            return Ok(1);
        }
    };
    let physics = Physics::at_field(cfg.b_field);
    match calibrate_quasi_static(target, physics.constants.s1, cfg.seed, shots) {
        Ok(sigma) => {
            println!(
                "quasi-static σ_B = {:.4e} G ({:.3} µG) for a {:.3e} s coherence time",
                sigma,
                sigma * 1e6,
                target
            );
            println!("config line: qs_sigma = {sigma}G");
            Ok(0)
        }
        Err(e) => {
            eprintln!("error: {e}");
            Ok(2)
        }
    }
}

fn cmd_list_experiments() -> u8 {
    for exp in Experiment::ALL {
        println!("{:<20} {}", exp.name(), exp.describe());
    }
    0
}

fn main() -> ExitCode {
    // Usage errors are validation errors: exit 1, not clap's default 2.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.exit_code() == 0 { 0 } else { 1 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = match &cli.command {
        Command::Run {
            experiment,
            config,
            out,
        } => cmd_run(experiment, config, out.clone()),
        Command::Seq {
            file,
            expr,
            config,
            dump_state,
            dump_noise,
        } => cmd_seq(
            file.as_deref(),
            expr.as_deref(),
            config,
            *dump_state,
            dump_noise.as_deref(),
        ),
        Command::DumpControls { file, samples, out } => {
            cmd_dump_controls(file, *samples, out.as_deref())
        }
        Command::DetectorFidelity { config, shots } => cmd_detector_fidelity(config, *shots),
        Command::CalibrateNoise { t2, config, shots } => cmd_calibrate_noise(t2, config, *shots),
        Command::ListExperiments => Ok(cmd_list_experiments()),
    };
    match code {
        Ok(c) => ExitCode::from(c),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
