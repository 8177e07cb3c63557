//! Command-line entry point: classification of nets, scenario runs from
//! JSON configs, and the full verification suite. Exit codes follow the
//! CI convention: 0 pass, 2 classification surprise, 3 verdict failure,
//! 64 usage or config error, 73 I/O failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;

use colvar::asymptotics::{classify, NetClass};
use colvar::net_core::{EpsGrid, GenNumber};
use colvar::scenarios::{
    beam_with_joint, central_field, delta_particle, geodesic_energy, hard_rod, rod_general,
    string_with_spring, wave_delta_spring, weierstrass, BeamConfig, CentralFieldConfig,
    DeltaParticleConfig, GeodesicConfig, HardRodConfig, RodGeneralConfig, ScenarioResult,
    StringSpringConfig, WaveConfig, WeierstrassConfig,
};
use colvar::suite::{run_suite, SuiteOptions, DEFAULT_SEED};
use colvar::asymptotics::M_MAX;

const EXIT_OK: u8 = 0;
const EXIT_SURPRISE: u8 = 2;
const EXIT_VERDICT: u8 = 3;
const EXIT_USAGE: u8 = 64;
const EXIT_IO: u8 = 73;

#[derive(Parser)]
#[command(name = "colvar", version, about = "epsilon-net calculus of variations toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classify a net: a builtin name (eps_squared, exp_neg_inv) or a CSV
    /// file with an epsilon,value header.
    Classify {
        input: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-6)]
        eps_min: f64,
        #[arg(long, default_value_t = 1e-1)]
        eps_max: f64,
        #[arg(long, default_value_t = 12)]
        eps_count: usize,
    },
    /// Run one named scenario, writing result.json and CSV profiles.
    Scenario {
        name: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "colvar-out")]
        out: PathBuf,
    },
    /// Run the full verification suite.
    Suite {
        #[arg(long, default_value = "colvar-out")]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Echo of the negligibility exponent bound; values below the
        /// built-in constant are flagged as config drift.
        #[arg(long, default_value_t = M_MAX)]
        m_max: u32,
    },
}

fn init_threads() {
    #[cfg(feature = "parallel")]
    if let Ok(v) = std::env::var("COLVAR_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn parse_csv_net(path: &Path) -> Result<GenNumber, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {path:?}: {e}"))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "epsilon,value" => {}
        _ => return Err("expected header line 'epsilon,value'".into()),
    }
    let mut rows: Vec<(f64, f64)> = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split(',');
        let eps: f64 = it
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| format!("bad epsilon on data line {}", i + 1))?;
        let val: f64 = it
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| format!("bad value on data line {}", i + 1))?;
        if it.next().is_some() {
            return Err(format!("extra column on data line {}", i + 1));
        }
        rows.push((eps, val));
    }
    rows.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let grid = EpsGrid::explicit(rows.iter().map(|r| r.0).collect())
        .map_err(|e| format!("invalid epsilon column: {e}"))?;
    GenNumber::from_samples(Arc::new(grid), rows.into_iter().map(|r| r.1).collect())
        .map_err(|e| format!("invalid value column: {e}"))
}

fn cmd_classify(
    input: &str,
    out: Option<&Path>,
    eps_min: f64,
    eps_max: f64,
    eps_count: usize,
) -> u8 {
    let net = match input {
        "eps_squared" | "exp_neg_inv" => {
            let grid = match EpsGrid::geometric(eps_min, eps_max, eps_count) {
                Ok(g) => Arc::new(g),
                Err(e) => {
                    eprintln!("colvar classify: {e}");
                    return EXIT_USAGE;
                }
            };
            let rule: fn(f64) -> f64 =
                if input == "eps_squared" { |e| e * e } else { |e| (-1.0 / e).exp() };
            GenNumber::from_rule(grid, rule).expect("builtin rules are finite")
        }
        path => match parse_csv_net(Path::new(path)) {
            Ok(n) => n,
            Err(e) => {
                eprintln!("colvar classify: {e}");
                return EXIT_USAGE;
            }
        },
    };
    let report = classify(&net);
    let text = report.to_json();
    println!("{text}");
    if let Some(dir) = out {
        if let Err(e) = fs::create_dir_all(dir)
            .and_then(|_| fs::write(dir.join("classify.json"), &text))
        {
            eprintln!("colvar classify: cannot write output: {e}");
            return EXIT_IO;
        }
    }
    match report.class {
        NetClass::NonModerate => EXIT_SURPRISE,
        _ => EXIT_OK,
    }
}

fn load_config<T: Default + DeserializeOwned>(path: Option<&Path>) -> Result<T, String> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| format!("cannot read {p:?}: {e}"))?;
            serde_json::from_str(&text).map_err(|e| format!("config rejected: {e}"))
        }
    }
}

fn run_scenario(name: &str, config: Option<&Path>) -> Result<Result<ScenarioResult, String>, String> {
    // outer error: usage (unknown name / bad config); inner: run failure
    let run = |r: colvar::Result<ScenarioResult>| Ok(r.map_err(|e| e.to_string()));
    match name {
        "delta_particle" => run(delta_particle(&load_config::<DeltaParticleConfig>(config)?)),
        "central_field" => run(central_field(&load_config::<CentralFieldConfig>(config)?)),
        "string_with_spring" => {
            run(string_with_spring(&load_config::<StringSpringConfig>(config)?))
        }
        "beam_with_joint" => run(beam_with_joint(&load_config::<BeamConfig>(config)?)),
        "hard_rod" => run(hard_rod(&load_config::<HardRodConfig>(config)?)),
        "rod_general" => run(rod_general(&load_config::<RodGeneralConfig>(config)?)),
        "weierstrass" => run(weierstrass(&load_config::<WeierstrassConfig>(config)?)),
        "wave_delta_spring" => run(wave_delta_spring(&load_config::<WaveConfig>(config)?)),
        "geodesic_energy" => run(geodesic_energy(&load_config::<GeodesicConfig>(config)?)),
        _ => Err(format!(
            "unknown scenario '{name}'; expected one of delta_particle, central_field, \
             string_with_spring, beam_with_joint, hard_rod, rod_general, weierstrass, \
             wave_delta_spring, geodesic_energy"
        )),
    }
}

fn write_artifacts(dir: &Path, result: &ScenarioResult) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("result.json"), result.to_json())?;
    for (name, contents) in &result.csv {
        fs::write(dir.join(name), contents)?;
    }
    Ok(())
}

fn cmd_scenario(name: &str, config: Option<&Path>, out: &Path) -> u8 {
    let result = match run_scenario(name, config) {
        Err(usage) => {
            eprintln!("colvar scenario: {usage}");
            return EXIT_USAGE;
        }
        Ok(Err(failure)) => {
            eprintln!("colvar scenario {name}: {failure}");
            return EXIT_VERDICT;
        }
        Ok(Ok(r)) => r,
    };
    let dir = out.join(&result.name);
    if let Err(e) = write_artifacts(&dir, &result) {
        eprintln!("colvar scenario: cannot write artifacts to {dir:?}: {e}");
        return EXIT_IO;
    }
    for c in &result.checks {
        println!("{} {}: {}", if c.pass { "pass" } else { "FAIL" }, result.name, c.name);
    }
    if result.pass() {
        EXIT_OK
    } else {
        EXIT_VERDICT
    }
}

fn cmd_suite(out: &Path, seed: u64, m_max: u32) -> u8 {
    let report = run_suite(&SuiteOptions { seed, m_max });
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for c in &report.criteria {
        println!(
            "{} [{:2}] {} ({:.2}s)",
            if c.pass { "pass" } else { "FAIL" },
            c.id,
            c.name,
            c.seconds
        );
    }
    if let Err(e) =
        fs::create_dir_all(out).and_then(|_| fs::write(out.join("suite.json"), report.to_json()))
    {
        eprintln!("colvar suite: cannot write {out:?}: {e}");
        return EXIT_IO;
    }
    if report.pass {
        EXIT_OK
    } else {
        EXIT_VERDICT
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap renders its own message; remap the exit code to 64
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    init_threads();
    let code = match cli.cmd {
        Cmd::Classify { input, out, eps_min, eps_max, eps_count } => {
            cmd_classify(&input, out.as_deref(), eps_min, eps_max, eps_count)
        }
        Cmd::Scenario { name, config, out } => cmd_scenario(&name, config.as_deref(), &out),
        Cmd::Suite { out, seed, m_max } => cmd_suite(&out, seed, m_max),
    };
    ExitCode::from(code)
}
