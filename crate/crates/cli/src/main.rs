use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use jitai_core::config::SimConfig;
use jitai_core::harness::{self, Arm, ProfileSource, SessionLog};
use jitai_core::interface::{self, ServeOptions, LISTEN_ENV};
use jitai_core::profile::{self, QuestionnaireResponse};

#[derive(Parser)]
#[command(name = "jitai", version, about = "Adaptive stress-intervention engine and training simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a questionnaire file and print the resulting intervention profile.
    ScoreQuestionnaire {
        /// JSON: `{"items": [...]}` or a bare array of 19 answers.
        file: PathBuf,
    },
    /// Run one simulated session, write its log and print its metrics.
    Simulate {
        /// Config file, or a preset name such as `study`.
        #[arg(long, default_value = "study")]
        config: String,
        #[arg(long)]
        arm: Arm,
        #[arg(long)]
        seed: u64,
        /// Questionnaire file for the trainee; defaults to the first cohort member.
        #[arg(long, conflicts_with = "cohort")]
        questionnaire: Option<PathBuf>,
        #[arg(long)]
        cohort: Option<usize>,
        /// Log path; defaults to `session-<arm>-<seed>.ndjson`.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Run a two-arm experiment and print the report.
    Experiment {
        #[arg(long, default_value = "study")]
        config: String,
        /// Sessions per arm.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        out: Format,
        /// Write the report here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Serve live sessions over TCP, or one session over stdio.
    Serve {
        #[arg(long, default_value = "study")]
        config: String,
        /// `host:port` or `stdio`.
        #[arg(long, env = LISTEN_ENV, default_value = "127.0.0.1:7878")]
        listen: String,
        /// Save each session log in this directory.
        #[arg(long)]
        log_dir: Option<PathBuf>,
    },
    /// Re-derive a session log and report the first divergence.
    Replay { log: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

type CliResult = Result<ExitCode, String>;

fn load_config(name: &str) -> Result<SimConfig, String> {
    SimConfig::load(name).map_err(|e| format!("{name}: {e}"))
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn parse_questionnaire(path: &Path) -> Result<QuestionnaireResponse, String> {
    let text = read(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let parsed = if value.is_array() {
        serde_json::from_value::<Vec<i64>>(value)
            .map_err(|e| e.to_string())
            .and_then(|items| QuestionnaireResponse::new(&items).map_err(|e| e.to_string()))
    } else {
        serde_json::from_value(value).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| format!("{}: {e}", path.display()))
}

fn write_out(output: Option<&Path>, text: &str) -> Result<(), String> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::ScoreQuestionnaire { file } => {
            let q = parse_questionnaire(&file)?;
            let p = profile::score(&q);
            println!("{}", serde_json::to_string_pretty(&p).map_err(|e| e.to_string())?);
        }
        Command::Simulate {
            config,
            arm,
            seed,
            questionnaire,
            cohort,
            log,
        } => {
            let cfg = load_config(&config)?;
            let source = match questionnaire {
                Some(path) => ProfileSource::Questionnaire(parse_questionnaire(&path)?),
                None => ProfileSource::Cohort(cohort.unwrap_or(0)),
            };
            let (session, metrics) = harness::run_session(&cfg, &source, arm, seed).map_err(|e| e.to_string())?;
            let path = log.unwrap_or_else(|| PathBuf::from(format!("session-{}-{seed}.ndjson", arm_name(arm))));
            std::fs::write(&path, session.to_ndjson()).map_err(|e| format!("{}: {e}", path.display()))?;
            eprintln!("log written to {}", path.display());
            println!("{}", serde_json::to_string_pretty(&metrics).map_err(|e| e.to_string())?);
        }
        Command::Experiment {
            config,
            n,
            seed,
            out,
            output,
        } => {
            let cfg = load_config(&config)?;
            let report = harness::run_experiment(&cfg, n as usize, seed).map_err(|e| e.to_string())?;
            let text = match out {
                Format::Csv => report.to_csv(),
                Format::Json => report.to_json() + "\n",
            };
            write_out(output.as_deref(), &text)?;
        }
        Command::Serve {
            config,
            listen,
            log_dir,
        } => {
            let cfg = load_config(&config)?;
            let opts = ServeOptions { log_dir };
            if listen == "stdio" {
                interface::serve_stdio(&cfg, &opts).map_err(|e| e.to_string())?;
            } else {
                let listener = TcpListener::bind(&listen).map_err(|e| format!("{listen}: {e}"))?;
                eprintln!("listening on {}", listener.local_addr().map_err(|e| e.to_string())?);
                interface::serve_tcp(listener, &cfg, &opts).map_err(|e| e.to_string())?;
            }
        }
        Command::Replay { log } => {
            let text = read(&log)?;
            let parsed = SessionLog::parse(&text).map_err(|e| format!("{}: {e}", log.display()))?;
            let report = harness::replay(&parsed).map_err(|e| format!("{}: {e}", log.display()))?;
            match report.divergence {
                None => println!("verified {} records", report.records),
                Some(d) => {
                    println!("diverged at line {} (t = {} ms)", d.line, d.t_ms);
                    println!("expected: {}", d.expected.as_deref().unwrap_or("<no record>"));
                    println!("found:    {}", d.found.as_deref().unwrap_or("<no record>"));
                    return Ok(ExitCode::FAILURE);
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn arm_name(arm: Arm) -> &'static str {
    match arm {
        Arm::Intervention => "intervention",
        Arm::Control => "control",
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
