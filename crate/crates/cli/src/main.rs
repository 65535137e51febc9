//! `wsnloc`: build radio maps, locate queries, run and summarize simulations.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use wsnloc_core::io::{
    estimates_csv, parse_scenario_file, read_queries, read_radio_map, read_summary, write_radio_map, write_report,
    Summary,
};
use wsnloc_core::localization::{locate, AlgorithmKind, AwknnParams};
use wsnloc_core::sim::{build_radio_map, run_scenario};
use wsnloc_core::Error;

#[derive(Debug, Parser)]
#[command(name = "wsnloc", version, about = "Zoned WSN fingerprint localization and tracking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the offline radio map of a scenario and write it as CSV.
    MapBuild {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Locate queries against a stored radio map; estimates go to stdout.
    Locate {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        query: PathBuf,
        #[arg(long, default_value = "awknn")]
        algo: AlgorithmKind,
        #[arg(long, default_value_t = 3)]
        k: usize,
    },
    /// Run a scenario and write track.csv and summary.toml.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the scenario matcher.
        #[arg(long)]
        algo: Option<AlgorithmKind>,
    },
    /// Print a summary of a simulation output directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.chain().find_map(|c| c.downcast_ref::<Error>()) {
        Some(Error::Config { .. } | Error::InvalidScenario(_)) => 2,
        Some(Error::InvariantViolation { .. }) => 3,
        _ => 1,
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::MapBuild { scenario, out } => {
            let sc = load(&scenario)?;
            let map = build_radio_map(&sc)?;
            write_radio_map(&map, &out).with_context(|| format!("writing map to {}", out.display()))?;
            eprintln!(
                "wrote {} reference points x {} anchors to {}",
                map.len(),
                map.anchor_count(),
                out.display()
            );
        }
        Command::Locate { map, query, algo, k } => {
            let radio_map = read_radio_map(&map).with_context(|| format!("reading map {}", map.display()))?;
            let queries = read_queries(&query, &radio_map)?;
            let algorithm = algo.with(k, AwknnParams::default());
            let results = queries
                .into_iter()
                .map(|(id, m)| {
                    Ok((
                        id,
                        locate(&radio_map, &m, &algorithm).with_context(|| format!("query {id}"))?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            print!("{}", estimates_csv(&results));
        }
        Command::Simulate {
            scenario,
            out,
            seed,
            algo,
        } => {
            let mut sc = load(&scenario)?;
            if let Some(seed) = seed {
                sc.seed = seed;
            }
            if let Some(kind) = algo {
                sc.localization.algorithm = kind;
            }
            let report = run_scenario(&sc)?;
            write_report(&report, &out).with_context(|| format!("writing report to {}", out.display()))?;
            eprintln!("{} localizations written to {}", report.track.len(), out.display());
        }
        Command::Report { input } => {
            let summary = read_summary(&input).with_context(|| format!("reading {}", input.display()))?;
            print!("{}", render(&summary));
        }
    }
    Ok(())
}

fn load(path: &Path) -> Result<wsnloc_core::Scenario> {
    Ok(parse_scenario_file(path)?)
}

fn render(s: &Summary) -> String {
    let mut out = format!(
        "scenario {} (seed {}, {} s, {}, {})\n",
        s.scenario, s.seed, s.duration_s, s.algorithm, s.variant
    );
    match &s.error {
        Some(e) => out.push_str(&format!(
            "error: {} fixes, mean {:.3} m, median {:.3} m, p90 {:.3} m\n",
            e.count, e.mean, e.median, e.p90
        )),
        None => out.push_str("error: no fixes\n"),
    }
    for (zone, e) in &s.error_by_zone {
        out.push_str(&format!(
            "  zone {zone}: mean {:.3} m, p90 {:.3} m ({} fixes)\n",
            e.mean, e.p90, e.count
        ));
    }
    for (variant, p) in &s.plr {
        out.push_str(&format!(
            "plr {variant}: {}/{} lost ({:.2}%)\n",
            p.lost,
            p.sent,
            100.0 * p.plr
        ));
    }
    if let Some(j) = s.energy.mean_mn_total_j {
        out.push_str(&format!("mean MN energy: {j:.6} J\n"));
    }
    for (mn, e) in &s.energy.mn {
        out.push_str(&format!(
            "  MN {mn}: transmit {:.6} J, receive {:.6} J, sleep {:.6} J\n",
            e.transmit_j, e.receive_j, e.sleep_j
        ));
    }
    if let Some(eff) = &s.efficiency {
        out.push_str(&format!("eta: {:.4} 1/(m^2 J)\n", eff.eta));
    }
    out
}
