mod args;
mod commands;
mod config;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};

use args::{Cli, Command};
use commands::{Ctx, Primary};

/// Exit 1: bad input or usage. Exit 2: a failure that is not the input's fault.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Internal(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> CliError {
        CliError::Input(format!("{}: {e}", path.display()))
    }
}

fn parse(argv: &[String]) -> Result<Cli, clap::Error> {
    let root = Cli::command();
    // Required flags may come from the config file, so the first pass only
    // looks for `--config`; the strict parse runs on the merged arguments.
    let relaxed = root.clone().mut_subcommands(|s| s.mut_args(|a| a.required(false)));
    let matches = match relaxed.try_get_matches_from(argv) {
        Ok(m) => m,
        Err(_) => return Cli::from_arg_matches(&root.try_get_matches_from(argv)?),
    };
    let config = matches.subcommand().and_then(|(_, m)| m.get_one::<PathBuf>("config").cloned());
    let Some(path) = config else {
        return Cli::from_arg_matches(&root.try_get_matches_from(argv)?);
    };
    let merged = config::merge(&root, argv, &matches, &path).map_err(|e| {
        let msg = match e {
            CliError::Input(m) | CliError::Internal(m) => m,
        };
        root.clone().error(clap::error::ErrorKind::InvalidValue, msg)
    })?;
    Cli::from_arg_matches(&root.try_get_matches_from(merged)?)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let mut ctx = Ctx { seed: cli.seed, quiet: cli.quiet, tracker: Default::default() };
    let primary = match &cli.command {
        Command::Features(a) => commands::features(&mut ctx, a),
        Command::Baselines(a) => commands::baselines(&mut ctx, a),
        Command::BuildCorpus(a) => commands::build_corpus(&mut ctx, a),
        Command::SynthCorpus(a) => commands::synth_corpus(&mut ctx, a),
        Command::Split(a) => commands::split(&mut ctx, a),
        Command::Train(a) => commands::train_model(&mut ctx, a),
        Command::Validate(a) => commands::validate(&mut ctx, a),
        Command::Score(a) => commands::score(&mut ctx, a),
        Command::BwsDesign(a) => commands::bws_design(&mut ctx, a),
        Command::BwsScore(a) => commands::bws_score(&mut ctx, a),
        Command::Shr(a) => commands::shr(&mut ctx, a),
        Command::Icc(a) => commands::icc(&mut ctx, a),
        Command::Spearman(a) => commands::spearman_cmd(&mut ctx, a),
        Command::Report(a) => commands::report(&mut ctx, a),
        Command::Serve(a) => return commands::serve(&mut ctx, a).map(|_| ()),
    }?;
    let config = serde_json::to_value(&cli.command).map_err(|e| CliError::Internal(e.to_string()))?;
    let manifest = ctx.tracker.finish(cli.seed, config);
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Internal(e.to_string()))? + "\n";
    let target = cli.manifest.clone().or(match primary {
        Primary::File(p) => {
            let mut name = p.into_os_string();
            name.push(".manifest.json");
            Some(PathBuf::from(name))
        }
        Primary::Dir(d) => Some(d.join("manifest.json")),
        Primary::Stdout => None,
    });
    match target {
        Some(path) => std::fs::write(&path, text).map_err(|e| CliError::io(&path, e)),
        None => {
            if !cli.quiet {
                eprint!("{text}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match parse(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match std::panic::catch_unwind(|| run(&cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(CliError::Input(msg))) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Ok(Err(CliError::Internal(msg))) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(2)
        }
        Err(_) => ExitCode::from(2),
    }
}
