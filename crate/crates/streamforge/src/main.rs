use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;
use streamforge::driver::{
    bench_dir, bench_report_csv, bench_report_json, result_to_json, synthesize,
};
use streamforge::enumsynth::SearchConfig;
use streamforge::eval::run_scheme;
use streamforge::ir::{parse_program, parse_scheme, print_scheme};

/// Derives online (streaming) update schemes from offline batch programs.
#[derive(Parser)]
#[command(name = "streamforge", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize an online scheme from an offline program file.
    Synth {
        /// Path to the `.off` program.
        file: PathBuf,
        /// Per-hole timeout in seconds.
        #[arg(long, default_value_t = 600)]
        timeout: u64,
        /// Symbolic unrolling depth for template mining.
        #[arg(long, default_value_t = 3)]
        unroll_depth: u32,
        /// Enumeration size budget.
        #[arg(long, default_value_t = 25)]
        max_size: usize,
        /// Number of random tests per equivalence check.
        #[arg(long, default_value_t = 200)]
        tests: usize,
        /// RNG seed (all randomness derives from it).
        #[arg(long, default_value_t = 0x517e_a11c_e0f5)]
        seed: u64,
        /// Output format.
        #[arg(long, default_value = "text", value_parser = ["text", "json"])]
        emit: String,
        /// Dump pipeline internals (sketch, specs, formulas).
        #[arg(long)]
        debug: bool,
    },
    /// Run every `.off` benchmark in a directory and report results.
    Bench {
        dir: PathBuf,
        #[arg(long, default_value = "csv", value_parser = ["csv", "json"])]
        report: String,
        #[arg(long, default_value_t = 600)]
        timeout: u64,
        #[arg(long, default_value_t = 200)]
        tests: usize,
        #[arg(long, default_value_t = 0x517e_a11c_e0f5)]
        seed: u64,
    },
    /// Replay a printed scheme over a stream of rationals.
    Run {
        /// Path to a file containing a printed scheme.
        scheme_file: PathBuf,
        /// Whitespace-separated stream elements, e.g. "1 2 7/2".
        #[arg(long)]
        stream: String,
        /// Whitespace-separated extra-argument values, when the scheme has
        /// pass-through arguments.
        #[arg(long, default_value = "")]
        args: String,
    },
}

fn init_logging(debug: bool) {
    let env = env_logger::Env::new().filter("STREAMFORGE_LOG");
    let mut builder = env_logger::Builder::from_env(env);
    if debug {
        builder.filter_level(log::LevelFilter::Debug);
    }
    let _ = builder.format_timestamp(None).try_init();
}

fn parse_rat_list(text: &str) -> Result<Vec<streamforge::rat::Rat>, String> {
    text.split_whitespace()
        .map(|t| streamforge::rat::parse(t).ok_or_else(|| format!("bad rational `{t}`")))
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Synth { file, timeout, unroll_depth, max_size, tests, seed, emit, debug } => {
            init_logging(debug);
            let text = match std::fs::read_to_string(&file) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", file.display());
                    return ExitCode::from(1);
                }
            };
            let program = match parse_program(&text) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("parse error in {}: {e}", file.display());
                    return ExitCode::from(1);
                }
            };
            let cfg = SearchConfig {
                max_size,
                timeout: Duration::from_secs(timeout),
                test_count: tests,
                rng_seed: seed,
                unroll_depth,
                ..Default::default()
            };
            match synthesize(&program, &cfg) {
                Ok(result) => {
                    if emit == "json" {
                        println!(
                            "{}",
                            serde_json::to_string_pretty(&result_to_json(&result))
                                .expect("json rendering")
                        );
                    } else {
                        println!("{}", print_scheme(&result.scheme));
                        for h in &result.holes {
                            eprintln!(
                                "hole {} [{}] {:.2}s: {}",
                                h.hole,
                                h.method.name(),
                                h.elapsed.as_secs_f64(),
                                streamforge::ir::print_online_expr(&h.expr)
                            );
                        }
                        if !result.pruned.is_empty() {
                            eprintln!("pruned accumulators: {:?}", result.pruned);
                        }
                        eprintln!(
                            "total {:.2}s, verification: tested+bounded",
                            result.elapsed.as_secs_f64()
                        );
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("synthesis failed: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Bench { dir, report, timeout, tests, seed } => {
            init_logging(false);
            let cfg = SearchConfig {
                timeout: Duration::from_secs(timeout),
                test_count: tests,
                rng_seed: seed,
                ..Default::default()
            };
            match bench_dir(&dir, &cfg) {
                Ok(rows) => {
                    if report == "json" {
                        println!(
                            "{}",
                            serde_json::to_string_pretty(&bench_report_json(&rows))
                                .expect("json rendering")
                        );
                    } else {
                        print!("{}", bench_report_csv(&rows));
                    }
                    if rows.iter().all(|r| r.solved) {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(2)
                    }
                }
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", dir.display());
                    ExitCode::from(1)
                }
            }
        }
        Command::Run { scheme_file, stream, args } => {
            init_logging(false);
            let text = match std::fs::read_to_string(&scheme_file) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", scheme_file.display());
                    return ExitCode::from(1);
                }
            };
            let scheme = match parse_scheme(text.trim()) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("parse error in {}: {e}", scheme_file.display());
                    return ExitCode::from(1);
                }
            };
            let stream = match parse_rat_list(&stream) {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            let argv = match parse_rat_list(&args) {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            match run_scheme(&scheme, &stream, &argv) {
                Ok(out) => {
                    println!(
                        "{}",
                        out.iter().map(streamforge::rat::render).collect::<Vec<_>>().join(" ")
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("execution error: {e}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
