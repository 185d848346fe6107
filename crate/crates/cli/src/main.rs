use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use rgti::control::ControlDesign;
use rgti::plant::SystemParams;
use rgti::scenario::{
    emit_bode, load_scenario, sweep_mpp, BodeRequest, NamedTf, RunReport, System,
};
use rgti::supervisor::{fsm_check, write_transition_log};

/// Averaged-model simulator for a reconfigurable grid-tied PV inverter.
#[derive(Debug, Parser)]
#[command(name = "rgti", version)]
struct Cli {
    /// Plant parameter file (TOML); defaults to the built-in rating.
    #[arg(long, global = true)]
    params: Option<PathBuf>,
    /// Controller parameter file (TOML); defaults to gains derived from the plant.
    #[arg(long, global = true)]
    controllers: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run scenario files and check their assertions.
    Run {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        /// Directory for traces, transition logs and reports.
        #[arg(long, env = "RGTI_OUT_DIR", default_value = "out")]
        out: PathBuf,
        /// Integration step in seconds, overriding the scenario.
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Print the frequency response of a named transfer function as CSV.
    Bode {
        /// One of Gpv, Gpi, Hv, Hi, H2, loop_v, loop_i.
        tf: String,
        /// Add the response measured on the nonlinear model (plants only).
        #[arg(long)]
        numeric: bool,
        /// PV voltage of the operating point, V.
        #[arg(long)]
        v_pv: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        irradiance: f64,
        #[arg(long, default_value_t = 0.1)]
        f_min: f64,
        #[arg(long, default_value_t = 1000.0)]
        f_max: f64,
        #[arg(long, default_value_t = 20)]
        points_per_decade: usize,
    },
    /// Enumerate every mode and flag combination against the transition table.
    FsmCheck,
    /// Sweep the PV curve for its maximum power point.
    SweepMpp {
        #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.4, 0.6, 0.8, 1.0])]
        irradiance: Vec<f64>,
        /// Voltage resolution of the coarse sweep, V.
        #[arg(long, default_value_t = 0.1)]
        resolution: f64,
    },
    /// Print the plant parameters in the parameter-file format.
    Params,
    /// Print the controller parameters in the parameter-file format.
    Design,
}

fn system(cli: &Cli) -> Result<System> {
    let params = match &cli.params {
        Some(p) => SystemParams::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => SystemParams::default(),
    };
    let design = match &cli.controllers {
        Some(p) => ControlDesign::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => ControlDesign::derive(&params).context("deriving controller gains")?,
    };
    Ok(System::new(params, design))
}

fn run_one(sys: &System, path: &Path, out: &Path, dt: Option<f64>) -> Result<RunReport> {
    let mut scenario =
        load_scenario(path).with_context(|| format!("reading {}", path.display()))?;
    if dt.is_some() {
        scenario.dt = dt;
    }
    let output = sys
        .run(&scenario)
        .with_context(|| format!("running {}", scenario.name))?;
    let base = out.join(&scenario.name);
    let trace = fs::File::create(base.with_extension("csv"))?;
    output.trace.write_csv(std::io::BufWriter::new(trace))?;
    let mut log = Vec::new();
    write_transition_log(&output.report.transitions, &mut log)?;
    fs::write(base.with_extension("transitions.csv"), log)?;
    fs::write(base.with_extension("report.txt"), output.report.to_text())?;
    Ok(output.report)
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run { scenarios, out, dt } => {
            let sys = system(&cli)?;
            fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
            let results: Vec<Result<RunReport>> = std::thread::scope(|s| {
                let handles: Vec<_> = scenarios
                    .iter()
                    .map(|p| {
                        let sys = &sys;
                        s.spawn(move || run_one(sys, p, out, *dt))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| {
                        h.join()
                            .unwrap_or_else(|_| Err(anyhow::anyhow!("scenario run panicked")))
                    })
                    .collect()
            });
            let mut ok = true;
            for (path, r) in scenarios.iter().zip(results) {
                match r {
                    Ok(report) => {
                        print!("{}", report.to_text());
                        ok &= report.passed();
                    }
                    Err(e) => {
                        eprintln!("{}: {e:#}", path.display());
                        ok = false;
                    }
                }
            }
            Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Bode {
            tf,
            numeric,
            v_pv,
            irradiance,
            f_min,
            f_max,
            points_per_decade,
        } => {
            let sys = system(&cli)?;
            let tf: NamedTf = tf.parse()?;
            let mut req = BodeRequest::new(tf, &sys);
            req.v_pv = v_pv.unwrap_or(req.v_pv);
            req.irradiance = *irradiance;
            req.f_min = *f_min;
            req.f_max = *f_max;
            req.points_per_decade = *points_per_decade;
            req.numeric = *numeric;
            print!("{}", emit_bode(&sys, &req)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::FsmCheck => {
            let report = fsm_check();
            print!("{}", report.to_text());
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::SweepMpp {
            irradiance,
            resolution,
        } => {
            let sys = system(&cli)?;
            anyhow::ensure!(*resolution > 0.0, "resolution must be positive");
            println!("irradiance,v_mpp,p_mpp");
            for &g in irradiance {
                anyhow::ensure!(
                    (0.0..=rgti::plant::MAX_IRRADIANCE).contains(&g),
                    "irradiance {g} out of range"
                );
                let s = sweep_mpp(&sys.params.pv, g, *resolution);
                println!("{},{:.3},{:.3}", s.irradiance, s.v_mpp, s.p_mpp);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Params => {
            print!("{}", system(&cli)?.params.to_toml());
            Ok(ExitCode::SUCCESS)
        }
        Command::Design => {
            let sys = system(&cli)?;
            print!("{}", sys.design.to_toml());
            Ok(ExitCode::SUCCESS)
        }
    }
}
