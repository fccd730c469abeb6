use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use wpt_mec::{load_scenario, run, write_csv, write_json, write_trace_csv, Mode, RunOptions};

#[derive(Parser)]
#[command(name = "wpt-mec", version, about = "Energy-minimizing resource allocation for wireless-powered edge computing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve every point of a scenario under the selected scheme(s).
    Run {
        /// Scenario file (`key = value` lines).
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Proposed)]
        mode: ModeArg,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Also emit dual-iteration traces (CSV: `<out>.trace.csv`, or after a blank line on stdout).
        #[arg(long)]
        trace: bool,
        /// Number of sweep points solved concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Record wall time per record (JSON only; output is then not reproducible).
        #[arg(long)]
        timing: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Proposed,
    Local,
    Full,
    Half,
    Oracle,
    All,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Proposed => Mode::Proposed,
            ModeArg::Local => Mode::Local,
            ModeArg::Full => Mode::Full,
            ModeArg::Half => Mode::Half,
            ModeArg::Oracle => Mode::Oracle,
            ModeArg::All => Mode::All,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn writer(path: Option<&PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let Command::Run { scenario, mode, out, format, trace, jobs, timing } = cli.command;

    let scn = match load_scenario(&scenario) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let points = match scn.points() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let opts = RunOptions { mode: mode.into(), jobs, trace, timing };
    let records = run(&points, &scn, &opts);

    let emitted = (|| -> io::Result<()> {
        let mut w = writer(out.as_ref())?;
        match format {
            Format::Json => write_json(&records, &mut w)?,
            Format::Csv => {
                write_csv(&records, &mut w)?;
                if trace {
                    match &out {
                        Some(p) => {
                            let mut name = p.clone().into_os_string();
                            name.push(".trace.csv");
                            let mut t = writer(Some(&PathBuf::from(name)))?;
                            write_trace_csv(&records, &mut t)?;
                            t.flush()?;
                        }
                        None => {
                            writeln!(w)?;
                            write_trace_csv(&records, &mut w)?;
                        }
                    }
                }
            }
        }
        w.flush()
    })();
    if let Err(e) = emitted {
        eprintln!("error: writing output: {e}");
        return ExitCode::from(1);
    }

    let failed = records.iter().filter(|r| r.failed()).count();
    if failed > 0 {
        eprintln!("{failed} of {} record(s) did not solve cleanly", records.len());
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}
