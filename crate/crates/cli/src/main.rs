use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use sqcka_cli::config::{Options, Settings};
use sqcka_cli::sweep::{sweep_rows, to_csv, write_figures, write_file, SweepSpec, FIGURE_MODES};
use sqcka_cli::{simulate, verify};

#[derive(Parser)]
#[command(name = "sqcka", version, about = "GHZ-based semi-quantum conference key agreement: simulation and key rates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the invariant checks; --attack-file also validates a table file
    Verify(Options),
    /// Key-rate CSV over a (n, Q, Q̃, mode) grid for the depolarizing channel
    Sweep(Options),
    /// Figure data and zero-crossing thresholds into the --out directory
    Figures(Options),
    /// Simulate a session and estimate the key rate from its tallies
    Simulate(Options),
}

fn run(cli: Cli) -> Result<bool> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Verify(opts) => {
            let s = Settings::resolve(&opts)?;
            let checks = verify::run_all(s.path("attack_file").as_deref());
            for c in &checks {
                writeln!(out, "{}", c.line())?;
            }
            let failed = checks.iter().filter(|c| !c.pass).count();
            writeln!(out, "{} checks, {failed} failed", checks.len())?;
            Ok(failed == 0)
        }
        Command::Sweep(opts) => {
            let s = Settings::resolve(&opts)?;
            let spec = SweepSpec {
                ns: s.n_list(&[3])?,
                q: s.range("q", "0:0.5")?.values(),
                qtilde: s.range("qtilde", "0:0.5")?.values(),
                modes: s.modes(&FIGURE_MODES)?,
            };
            let csv = to_csv(&sweep_rows(&spec)?);
            match s.path("out") {
                Some(path) => write_file(&path, &csv)?,
                None => out.write_all(csv.as_bytes())?,
            }
            Ok(true)
        }
        Command::Figures(opts) => {
            let s = Settings::resolve(&opts)?;
            let dir = s.path("out").unwrap_or_else(|| PathBuf::from("figures"));
            let th = write_figures(&dir, s.step()?)?;
            writeln!(out, "wrote fig2.csv fig3.csv fig4a.csv fig4b.csv thresholds.csv to {}", dir.display())?;
            for t in &th {
                writeln!(out, "{}", t.csv_line())?;
            }
            Ok(true)
        }
        Command::Simulate(opts) => {
            let cfg = Settings::resolve(&opts)?.run_config()?;
            let (rec, report) = simulate::run(&cfg)?;
            out.write_all(report.as_bytes())?;
            let path = cfg.out.clone().unwrap_or_else(|| PathBuf::from("tallies.txt"));
            write_file(&path, &rec.tallies.to_text())?;
            writeln!(out, "tallies: {}", path.display())?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
