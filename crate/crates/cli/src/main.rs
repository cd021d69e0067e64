use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use slt_cli::manifest::Manifest;
use slt_cli::pipeline::{
    build_params_for, parse_build_mode, run_end_to_end, RunConfig, SpectralChoice,
};
use slt_cli::repro::{render_table, repro_examples};
use slt_cli::subsums::{subsum_analysis, SubsumConfig, SubsumMode};
use slt_core::bounds::{bound_report, BoundInputs};
use slt_core::construction::{prune_batch, prune_recycle, verify_sup_error, BuildMode};
use slt_core::container::{large_to_bytes, pruned_to_bytes, read_container};
use slt_core::{Error, InputDomain, TargetNetwork};

/// Strong-lottery-ticket toolkit: build a random overparameterized ReLU
/// network, prune it to approximate a given target network, and check every
/// bound behind the construction.
#[derive(Parser)]
#[command(name = "slt", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the sample-complexity report for a target network file.
    Bounds {
        /// Target network JSON file.
        #[arg(long)]
        arch: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        delta: f64,
        /// Override the weight bound declared in the file.
        #[arg(long)]
        wmax: Option<f64>,
        /// Override the measured activation bound.
        #[arg(long)]
        fmax: Option<f64>,
        /// Spectral factors: unit | worst | explicit.
        #[arg(long, default_value = "explicit")]
        spectral: String,
        /// Inputs sampled to measure the activation bound.
        #[arg(long, default_value_t = 1000)]
        inputs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write bounds.json and manifest.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample the large network for a target and store it.
    Build {
        #[arg(long)]
        arch: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        delta: f64,
        /// Sizing rule: thm1 | recycle.
        #[arg(long, default_value = "thm1")]
        mode: String,
        #[arg(long, default_value = "explicit")]
        spectral: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        inputs: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Prune a stored large network against its target.
    Prune {
        #[arg(long)]
        arch: PathBuf,
        /// Container written by `build`.
        #[arg(long)]
        large: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Measure the sup gap of a stored pruned network against its target.
    Verify {
        #[arg(long)]
        arch: PathBuf,
        /// Container written by `prune`.
        #[arg(long)]
        pruned: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 1000)]
        inputs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build, prune, and verify in one go.
    Run {
        #[arg(long)]
        arch: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value = "thm1")]
        mode: String,
        #[arg(long, default_value = "explicit")]
        spectral: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        inputs: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sub-sum gap analysis; emits a sorted value/gap CSV.
    Subsums {
        /// uniform_sorted_1000 | hyperbolic_subsums_15 | uniform_subsums_15.
        #[arg(long)]
        mode: String,
        /// Sample count (defaults to the number in the mode name).
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Accuracy for the hyperbolic mode (defaults to the value whose
        /// interval budget equals the sample count).
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute the reference per-weight sample counts and compare.
    Repro {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

/// 1 = pruning failure (the probability-delta event), 2 = input validation,
/// 3 = I/O or internal.
fn exit_code_for(e: &Error) -> u8 {
    if e.is_prune_failure() {
        1
    } else if matches!(e, Error::Io(_)) {
        3
    } else {
        2
    }
}

fn dispatch(command: Command) -> Result<(), Error> {
    match command {
        Command::Bounds {
            arch,
            eps,
            delta,
            wmax,
            fmax,
            spectral,
            inputs,
            seed,
            out,
        } => cmd_bounds(&arch, eps, delta, wmax, fmax, &spectral, inputs, seed, out.as_deref()),
        Command::Build {
            arch,
            eps,
            delta,
            mode,
            spectral,
            seed,
            inputs,
            out,
        } => cmd_build(&arch, eps, delta, &mode, &spectral, seed, inputs, &out),
        Command::Prune {
            arch,
            large,
            eps,
            delta,
            out,
        } => cmd_prune(&arch, &large, eps, delta, &out),
        Command::Verify {
            arch,
            pruned,
            eps,
            inputs,
            seed,
            out,
        } => cmd_verify(&arch, &pruned, eps, inputs, seed, out.as_deref()),
        Command::Run {
            arch,
            eps,
            delta,
            mode,
            spectral,
            seed,
            inputs,
            out,
        } => cmd_run(&arch, eps, delta, &mode, &spectral, seed, inputs, &out),
        Command::Subsums {
            mode,
            count,
            seed,
            eps,
            out,
        } => cmd_subsums(&mode, count, seed, eps, &out),
        Command::Repro { out } => cmd_repro(out.as_deref()),
    }
}

fn load_network(path: &Path) -> Result<TargetNetwork, Error> {
    let text = fs::read_to_string(path)?;
    TargetNetwork::from_json(&text)
}

fn write_artifact(
    dir: &Path,
    name: &str,
    bytes: &[u8],
    manifest: &mut Manifest,
) -> Result<(), Error> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), bytes)?;
    manifest.record(name, bytes);
    Ok(())
}

fn finish_manifest(dir: &Path, manifest: &Manifest) -> Result<(), Error> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("manifest.json"), manifest.to_json())?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_bounds(
    arch: &Path,
    eps: f64,
    delta: f64,
    wmax: Option<f64>,
    fmax: Option<f64>,
    spectral: &str,
    inputs: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), Error> {
    let net = load_network(arch)?;
    let spectral = SpectralChoice::parse(spectral)?;
    let f_max = match fmax {
        Some(v) => v,
        None => {
            let domain = InputDomain::sample_uniform(net.arch().width(0), inputs, seed);
            net.f_max(&domain)?
        }
    };
    let inputs_struct = BoundInputs::new(
        net.arch().clone(),
        eps,
        delta,
        wmax.unwrap_or_else(|| net.w_max()),
        f_max,
        spectral.mode_for(&net),
    )?;
    let report = bound_report(&inputs_struct)?;
    let json = serde_json::to_string_pretty(&report).expect("serializable") + "\n";
    print!("{json}");
    if let Some(dir) = out {
        let mut manifest = Manifest::new("bounds", seed);
        manifest.set_param("arch", arch.display());
        manifest.set_param("eps", eps);
        manifest.set_param("delta", delta);
        manifest.set_param("spectral", spectral.name());
        manifest.set_param("fmax", f_max);
        write_artifact(dir, "bounds.json", json.as_bytes(), &mut manifest)?;
        finish_manifest(dir, &manifest)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_build(
    arch: &Path,
    eps: f64,
    delta: f64,
    mode: &str,
    spectral: &str,
    seed: u64,
    inputs: usize,
    out: &Path,
) -> Result<(), Error> {
    let net = load_network(arch)?;
    let mode = parse_build_mode(mode)?;
    let spectral = SpectralChoice::parse(spectral)?;
    let cfg = RunConfig {
        eps,
        delta,
        seed,
        mode,
        spectral,
        num_inputs: inputs,
    };
    let (params, _domain) = build_params_for(&net, &cfg)?;
    let large = slt_core::construction::build_large(net.arch(), &params)?;
    let bytes = large_to_bytes(&large);
    let mut manifest = Manifest::new("build", seed);
    manifest.set_param("arch", arch.display());
    manifest.set_param("eps", eps);
    manifest.set_param("delta", delta);
    manifest.set_param("mode", mode_name(mode));
    manifest.set_param("spectral", spectral.name());
    manifest.set_param("inputs", inputs);
    write_artifact(out, "large.bin", &bytes, &mut manifest)?;
    finish_manifest(out, &manifest)?;
    println!(
        "built large network: eps_w = {:.6e}, widths = {:?}",
        large.eps_w(),
        large.m_widths()
    );
    Ok(())
}

fn cmd_prune(
    arch: &Path,
    large_path: &Path,
    eps: f64,
    delta: f64,
    out: &Path,
) -> Result<(), Error> {
    let net = load_network(arch)?;
    let container = read_container(&mut BufReader::new(fs::File::open(large_path)?))?;
    if container.prune.is_some() {
        return Err(Error::Format(
            "container is already pruned; pass the build output".into(),
        ));
    }
    let large = container.large;
    let prune = match large.mode() {
        BuildMode::Thm1 => prune_batch(&large, &net, eps, delta)?,
        BuildMode::Recycle => prune_recycle(&large, &net, eps, delta)?,
    };
    let bytes = pruned_to_bytes(&large, &prune)?;
    let mut manifest = Manifest::new("prune", large.seed());
    manifest.set_param("arch", arch.display());
    manifest.set_param("large", large_path.display());
    manifest.set_param("eps", eps);
    manifest.set_param("delta", delta);
    write_artifact(out, "pruned.bin", &bytes, &mut manifest)?;
    finish_manifest(out, &manifest)?;
    println!(
        "pruned: {} of {} intermediate neurons survive",
        prune.surviving_neurons(),
        large.m_widths().iter().sum::<usize>()
    );
    Ok(())
}

fn cmd_verify(
    arch: &Path,
    pruned_path: &Path,
    eps: f64,
    inputs: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), Error> {
    let net = load_network(arch)?;
    let container = read_container(&mut BufReader::new(fs::File::open(pruned_path)?))?;
    let Some(prune) = container.prune else {
        return Err(Error::Format(
            "container holds an unpruned network; pass the prune output".into(),
        ));
    };
    let domain = InputDomain::sample_uniform(net.arch().width(0), inputs, seed);
    let report = verify_sup_error(&net, &container.large, &prune, &domain, eps)?;
    let json = serde_json::to_string_pretty(&report).expect("serializable") + "\n";
    print!("{json}");
    if let Some(dir) = out {
        let mut manifest = Manifest::new("verify", seed);
        manifest.set_param("arch", arch.display());
        manifest.set_param("pruned", pruned_path.display());
        manifest.set_param("eps", eps);
        manifest.set_param("inputs", inputs);
        write_artifact(dir, "report.json", json.as_bytes(), &mut manifest)?;
        finish_manifest(dir, &manifest)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    arch: &Path,
    eps: f64,
    delta: f64,
    mode: &str,
    spectral: &str,
    seed: u64,
    inputs: usize,
    out: &Path,
) -> Result<(), Error> {
    let net = load_network(arch)?;
    let mode = parse_build_mode(mode)?;
    let spectral = SpectralChoice::parse(spectral)?;
    let cfg = RunConfig {
        eps,
        delta,
        seed,
        mode,
        spectral,
        num_inputs: inputs,
    };
    let outcome = run_end_to_end(&net, &cfg)?;
    let report_json = serde_json::to_string_pretty(&outcome.report).expect("serializable") + "\n";

    let mut manifest = Manifest::new("run", seed);
    manifest.set_param("arch", arch.display());
    manifest.set_param("eps", eps);
    manifest.set_param("delta", delta);
    manifest.set_param("mode", mode_name(mode));
    manifest.set_param("spectral", spectral.name());
    manifest.set_param("inputs", inputs);
    write_artifact(out, "large.bin", &large_to_bytes(&outcome.large), &mut manifest)?;
    write_artifact(
        out,
        "pruned.bin",
        &pruned_to_bytes(&outcome.large, &outcome.prune)?,
        &mut manifest,
    )?;
    write_artifact(out, "report.json", report_json.as_bytes(), &mut manifest)?;
    finish_manifest(out, &manifest)?;
    print!("{report_json}");
    Ok(())
}

fn cmd_subsums(
    mode: &str,
    count: Option<usize>,
    seed: u64,
    eps: Option<f64>,
    out: &Path,
) -> Result<(), Error> {
    let mode = SubsumMode::parse(mode)?;
    let cfg = SubsumConfig {
        mode,
        count: count.unwrap_or_else(|| mode.default_count()),
        seed,
        eps,
    };
    let table = subsum_analysis(&cfg)?;
    let csv = table.to_csv();
    let mut manifest = Manifest::new("subsums", seed);
    manifest.set_param("mode", mode.name());
    manifest.set_param("count", cfg.count);
    if mode == SubsumMode::HyperbolicSubsums {
        manifest.set_param("eps", cfg.effective_eps());
    }
    write_artifact(out, "subsums.csv", csv.as_bytes(), &mut manifest)?;
    finish_manifest(out, &manifest)?;
    println!(
        "{} values, max gap {:.6e}",
        table.values.len(),
        table.max_gap()
    );
    Ok(())
}

fn cmd_repro(out: Option<&Path>) -> Result<(), Error> {
    let rows = repro_examples()?;
    print!("{}", render_table(&rows));
    let all_pass = rows.iter().all(|r| r.pass);
    if let Some(dir) = out {
        let json = serde_json::to_string_pretty(&rows).expect("serializable") + "\n";
        let mut manifest = Manifest::new("repro", 0);
        write_artifact(dir, "repro.json", json.as_bytes(), &mut manifest)?;
        finish_manifest(dir, &manifest)?;
    }
    if all_pass {
        Ok(())
    } else {
        Err(Error::Format("reference reproduction failed".into()))
    }
}

fn mode_name(mode: BuildMode) -> &'static str {
    match mode {
        BuildMode::Thm1 => "thm1",
        BuildMode::Recycle => "recycle",
    }
}
