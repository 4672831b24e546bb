mod args;
mod config;
mod output;
mod repro;
mod stages;

use std::path::Path;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, PipelineArgs};
use output::StageOutcome;
use stages::Ctx;

const EXIT_VIOLATION: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const EXIT_BLOW_UP: u8 = 4;

fn exit_code(err: &anyhow::Error) -> u8 {
    use attrforge::Error as E;
    for cause in err.chain() {
        if cause.is::<config::ConfigError>() || cause.is::<stages::MissingArtifact>() {
            return EXIT_CONFIG;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::BlowUp { .. } => EXIT_BLOW_UP,
                E::NotQuasiStable { .. }
                | E::NoContraction { .. }
                | E::NoCertificateInGrid
                | E::CertificateMismatch(_)
                | E::InequalityViolated { .. }
                | E::NoAbsorbingBall
                | E::NoSplit { .. }
                | E::EpsilonTooLarge(_)
                | E::EmptyAdmissibleInterval => EXIT_VIOLATION,
                E::Io(_) => 1,
                _ => EXIT_CONFIG,
            };
        }
        if cause.is::<toml::de::Error>() {
            return EXIT_CONFIG;
        }
    }
    1
}

fn init_threads(n: Option<usize>) -> anyhow::Result<()> {
    if let Some(n) = n {
        if n == 0 {
            return Err(config::config_error("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

/// Loads the configuration for `run`, saves it there and runs the stage.
fn pipeline_stage<F>(name: &str, p: &PipelineArgs, body: F) -> anyhow::Result<StageOutcome>
where
    F: Fn(&Ctx) -> anyhow::Result<StageOutcome>,
{
    init_threads(p.threads)?;
    let go = |run: &Path| -> anyhow::Result<StageOutcome> {
        std::fs::create_dir_all(run)?;
        let cfg = config::load(run, p)?;
        let saved = config::save(run, &cfg)?;
        let ctx = Ctx {
            run: run.to_path_buf(),
            cfg,
        };
        let mut out = body(&ctx)?;
        out.files.push(saved);
        Ok(out)
    };
    if p.verify_repro {
        std::fs::create_dir_all(&p.run)?;
        let (out, n) = repro::verify(&p.run, go)?;
        eprintln!("{name}: --verify-repro ok, {n} files bit-identical");
        Ok(out)
    } else {
        go(&p.run)
    }
}

fn dispatch(cmd: &Command) -> anyhow::Result<StageOutcome> {
    match cmd {
        Command::Systems(a) => {
            init_threads(a.threads)?;
            let go = |dir: &Path| stages::systems::run(Some(dir));
            match (&a.out, a.verify_repro) {
                (Some(dir), true) => {
                    std::fs::create_dir_all(dir)?;
                    Ok(repro::verify(dir, go)?.0)
                }
                (Some(dir), false) => {
                    std::fs::create_dir_all(dir)?;
                    go(dir)
                }
                (None, _) => stages::systems::run(None),
            }
        }
        Command::Absorb(a) => pipeline_stage("absorb", &a.pipeline, stages::absorb::run),
        Command::Cover(a) => pipeline_stage("cover", &a.pipeline, |c| stages::cover::run(c, a)),
        Command::Build(a) => pipeline_stage("build", &a.pipeline, stages::build::run),
        Command::Certify(a) => pipeline_stage("certify", &a.pipeline, stages::certify::run),
        Command::Bounds(a) => pipeline_stage("bounds", &a.pipeline, |c| stages::bounds::run(c, a)),
        Command::Dim(a) => pipeline_stage("dim", &a.pipeline, |c| stages::dim::run(c, a)),
        Command::Capacity(a) => pipeline_stage("capacity", &a.pipeline, |c| stages::capacity::run(c, a)),
        Command::Report(a) => pipeline_stage("report", &a.pipeline, stages::report::run),
    }
}

fn main() -> ExitCode {
    let argv = args::rewrite_param_flags(std::env::args().collect());
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(&cli.command) {
        Ok(out) => {
            print!("{}", out.table.render());
            match out.violation {
                Some(msg) => {
                    eprintln!("certificate violation: {msg}");
                    ExitCode::from(EXIT_VIOLATION)
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
