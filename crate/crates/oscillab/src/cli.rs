//! Command-line driver: config loading (file path or built-in corpus name),
//! experiment orchestration in dependency order (geometry, gamma, meshes,
//! systems, sweeps), output management and exit codes.
//!
//! Exit codes: 0 = all selected sweeps produced verdicts, 2 = hard error,
//! 3 = config schema violation.

use crate::config::{ConfigError, ExperimentConfig};
use crate::homogenization::{
    empirical_cauchy_gap, gamma_closed_form, gamma_field_empirical, GammaError,
};
use crate::mesh::{mesh_domain, MeshTarget};
use crate::report::{svg_loglog, OutputDir};
use crate::sweeps::{
    attractor_sweep, equilibria_sweep, nonlinearity_sweep, resolvent_sweep, spectral_sweep,
    trajectory_sweep, SweepError, SweepResult,
};
use clap::{Parser, Subcommand};
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_HARD_ERROR: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

/// Built-in corpora, usable wherever a config path is expected.
pub const BUILTIN_CORPORA: [(&str, &str); 2] = [
    (
        "flat-sanity",
        r#"
epsilons = [0.2, 0.1, 0.05]

[profile]
kind = "flat"

[mesh]
h = 0.0625
refine_check = false
curve_quadrature = true

[nonlinearity]
f = { name = "zero" }
g = { name = "zero" }

[sweeps]
run = ["resolvent", "nonlinearity", "trajectory"]
initial_condition = 1.0
"#,
    ),
    (
        "sawtooth-gamma",
        r#"
epsilons = [0.2, 0.1, 0.05]

[profile]
kind = "sawtooth"
slope = 1.0

[mesh]
h = 0.0625
refine_check = false
curve_quadrature = true

[nonlinearity]
f = { name = "zero" }
g = { name = "logistic", params = [1.0] }

[sweeps]
run = ["resolvent", "nonlinearity"]
initial_condition = 1.0
"#,
    ),
];

#[derive(Parser)]
#[command(name = "oscillab", about = "Oscillating-boundary homogenization laboratory", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Run the selected sweeps of a config (or built-in corpus name)
    Run {
        config: String,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print closed-form vs empirical gamma tables
    Gamma {
        config: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Generate the meshes of a config; --dump writes the plain-text format
    Mesh {
        config: String,
        #[arg(long)]
        dump: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_HARD_ERROR } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Run {
            config,
            threads,
            out,
            seed,
        } => run_command(&config, threads, out, seed),
        Command::Gamma { config, out, seed } => gamma_command(&config, out, seed),
        Command::Mesh { config, dump, out } => mesh_command(&config, dump, out),
    }
}

fn load_config(arg: &str) -> Result<(ExperimentConfig, String), ConfigError> {
    let text = if std::path::Path::new(arg).exists() {
        std::fs::read_to_string(arg).map_err(|e| ConfigError::Parse(e.to_string()))?
    } else if let Some((_, body)) = BUILTIN_CORPORA.iter().find(|(name, _)| *name == arg) {
        body.to_string()
    } else {
        return Err(ConfigError::Parse(format!(
            "'{arg}' is neither a readable file nor a built-in corpus ({})",
            BUILTIN_CORPORA
                .iter()
                .map(|(n, _)| *n)
                .collect::<Vec<_>>()
                .join(", ")
        )));
    };
    let cfg = ExperimentConfig::from_toml(&text)?;
    Ok((cfg, text))
}

fn apply_overrides(
    cfg: &mut ExperimentConfig,
    out: Option<PathBuf>,
    seed: Option<u64>,
    threads: Option<usize>,
) {
    if let Some(o) = out {
        cfg.output.dir = o.to_string_lossy().to_string();
    } else if let Ok(dir) = std::env::var("OUTPUT_DIR") {
        cfg.output.dir = dir;
    }
    if let Some(s) = seed {
        cfg.output.seed = s;
    }
    if let Some(t) = threads {
        cfg.output.threads = t;
    }
}

pub fn run_command(
    config_arg: &str,
    threads: Option<usize>,
    out: Option<PathBuf>,
    seed: Option<u64>,
) -> i32 {
    let (mut cfg, text) = match load_config(config_arg) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    apply_overrides(&mut cfg, out, seed, threads);
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.output.threads)
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("thread pool: {e}");
            return EXIT_HARD_ERROR;
        }
    };
    let result = pool.install(|| run_pipeline(&cfg, &text));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_HARD_ERROR
        }
    }
}

fn run_pipeline(cfg: &ExperimentConfig, config_text: &str) -> Result<i32, Box<dyn std::error::Error + Send + Sync>> {
    let mut out = OutputDir::create(std::path::Path::new(&cfg.output.dir))?;
    let sweep_cfg = cfg.sweep_config()?;

    // geometry stage: hypothesis report
    let report = sweep_cfg.family.check_hypotheses();
    out.write("hypotheses.txt", &report.render())?;
    if !report.all_pass() {
        println!("geometry: WARNING, family is outside the uniform-Lipschitz class");
    } else {
        println!("geometry: hypotheses pass (Lipschitz constant {:.4})", report.lipschitz_constant);
    }

    // gamma stage
    let gamma = sweep_cfg.gamma()?;
    out.write("gamma.csv", &gamma.to_csv())?;
    println!(
        "gamma: min {:.6} (mode {:?})",
        gamma.min_value(),
        cfg.gamma.mode
    );

    // sweeps in dependency order
    let order = ["resolvent", "nonlinearity", "spectral", "equilibria", "trajectory", "attractor"];
    let mut all_verdicts = true;
    for name in order {
        if !cfg.sweeps.run.iter().any(|s| s == name) {
            continue;
        }
        let result: Result<SweepResult, SweepError> = match name {
            "resolvent" => resolvent_sweep(&sweep_cfg),
            "nonlinearity" => nonlinearity_sweep(&sweep_cfg),
            "spectral" => spectral_sweep(&sweep_cfg),
            "equilibria" => equilibria_sweep(&sweep_cfg),
            "trajectory" => {
                let mesh = mesh_domain(&sweep_cfg.family, MeshTarget::Reference, sweep_cfg.h)?;
                let u0 = vec![cfg.sweeps.initial_condition; mesh.vertex_count()];
                trajectory_sweep(&sweep_cfg, &u0)
            }
            "attractor" => attractor_sweep(&sweep_cfg),
            _ => unreachable!(),
        };
        match result {
            Ok(res) => {
                out.write(&format!("{name}.csv"), &res.to_csv())?;
                let points: Vec<(f64, f64)> =
                    res.rows.iter().map(|r| (r.epsilon, r.metric)).collect();
                out.write(
                    &format!("{name}.svg"),
                    &svg_loglog(&format!("{name} metric vs eps"), "eps", "metric", &points),
                )?;
                println!("{}", res.summary_line());
            }
            Err(SweepError::NonHyperbolicLimit { lambda_min }) => {
                // the warning the theory mandates: lower semicontinuity
                // needs every limit equilibrium hyperbolic
                let verdict = format!(
                    "{name}: aborted (non-hyperbolic limit equilibrium, lambda_min = {lambda_min:.3e})"
                );
                out.write(&format!("{name}.txt"), &verdict)?;
                println!("{verdict}");
            }
            Err(e) => {
                eprintln!("{name}: hard error: {e}");
                all_verdicts = false;
            }
        }
    }
    out.finish(toml::from_str(config_text)?, cfg.output.seed)?;
    Ok(if all_verdicts { EXIT_OK } else { EXIT_HARD_ERROR })
}

pub fn gamma_command(config_arg: &str, out: Option<PathBuf>, seed: Option<u64>) -> i32 {
    let (mut cfg, _) = match load_config(config_arg) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    apply_overrides(&mut cfg, out, seed, None);
    match gamma_report(&cfg) {
        Ok(report) => {
            print!("{report}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_HARD_ERROR
        }
    }
}

pub fn gamma_report(cfg: &ExperimentConfig) -> Result<String, Box<dyn std::error::Error>> {
    let family = cfg.family()?;
    let profile = cfg.profile();
    let mut s = String::new();
    match gamma_closed_form(&profile) {
        Ok(v) => s.push_str(&format!("closed-form gamma: {v:.10}\n")),
        Err(GammaError::ClosedFormUnsupported) => {
            s.push_str("closed-form gamma: unsupported for this profile; using empirical windowed averages\n");
        }
        Err(e) => return Err(Box::new(e)),
    }
    s.push_str(&format!(
        "empirical windowed averages ({} windows):\n",
        cfg.gamma.windows
    ));
    s.push_str("epsilon      min_cell     max_cell     max_gap_to_closed_form\n");
    let closed = gamma_closed_form(&profile).ok();
    for &eps in &family.epsilons {
        let field = gamma_field_empirical(&family, eps, cfg.gamma.windows, 8)?;
        let mut min_c = f64::INFINITY;
        let mut max_c = f64::NEG_INFINITY;
        let mut gap = 0.0f64;
        for ci in family.oscillating_charts() {
            for cell in &field.charts[ci].cells {
                min_c = min_c.min(cell.value);
                max_c = max_c.max(cell.value);
                if let Some(cf) = closed {
                    gap = gap.max((cell.value - cf).abs());
                }
            }
        }
        if closed.is_some() {
            s.push_str(&format!(
                "{eps:<12.6} {min_c:<12.8} {max_c:<12.8} {gap:.3e}\n"
            ));
        } else {
            s.push_str(&format!("{eps:<12.6} {min_c:<12.8} {max_c:<12.8} n/a\n"));
        }
    }
    if closed.is_none() {
        for ci in family.oscillating_charts() {
            let gap = empirical_cauchy_gap(&family, ci, cfg.gamma.windows, 8)?;
            let verdict = if gap < 1e-2 {
                "converging (Cauchy gap small)"
            } else {
                "NOT converging (Cauchy gap large)"
            };
            s.push_str(&format!(
                "chart {ci}: Cauchy gap across finest epsilons = {gap:.3e} -> {verdict}\n"
            ));
        }
    }
    Ok(s)
}

pub fn mesh_command(config_arg: &str, dump: bool, out: Option<PathBuf>) -> i32 {
    let (mut cfg, _) = match load_config(config_arg) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    apply_overrides(&mut cfg, out, None, None);
    let family = match cfg.family() {
        Ok(f) => f,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    let run = || -> Result<(), Box<dyn std::error::Error>> {
        let mut out = OutputDir::create(std::path::Path::new(&cfg.output.dir))?;
        let mesh = mesh_domain(&family, MeshTarget::Reference, cfg.mesh.h)?;
        println!(
            "reference mesh: {} vertices, {} triangles, min angle {:.1} deg, area {:.8}",
            mesh.vertex_count(),
            mesh.triangles.len(),
            mesh.min_angle_deg(),
            mesh.area()
        );
        if dump {
            out.write("mesh_reference.txt", &mesh.dump())?;
        }
        for &eps in &family.epsilons {
            let mesh = mesh_domain(&family, MeshTarget::Perturbed(eps), cfg.mesh.h)?;
            println!(
                "eps = {eps}: {} vertices, {} triangles, min angle {:.1} deg, area {:.8}",
                mesh.vertex_count(),
                mesh.triangles.len(),
                mesh.min_angle_deg(),
                mesh.area()
            );
            if dump {
                out.write(&format!("mesh_eps_{eps}.txt"), &mesh.dump())?;
            }
        }
        if dump {
            out.finish(toml::Value::String("mesh dump".into()), cfg.output.seed)?;
        }
        Ok(())
    };
    match run() {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_HARD_ERROR
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_corpora_parse() {
        for (name, body) in BUILTIN_CORPORA {
            let cfg = ExperimentConfig::from_toml(body)
                .unwrap_or_else(|e| panic!("builtin {name} invalid: {e}"));
            cfg.sweep_config().unwrap();
        }
    }

    #[test]
    fn unknown_corpus_is_config_error() {
        let code = run_command("no-such-corpus", None, None, None);
        assert_eq!(code, EXIT_CONFIG);
    }
}
