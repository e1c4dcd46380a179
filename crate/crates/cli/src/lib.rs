//! `critnet` command-line driver.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::Ctx;
use error::{CliError, CliResult};
use manifest::Recorder;

/// Runs one command line and returns the process exit status.
pub fn run<I: IntoIterator<Item = String>>(argv: I) -> i32 {
    match run_inner(argv.into_iter().collect()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

fn run_inner(argv: Vec<String>) -> CliResult<()> {
    let argv = config::expand(argv)?;
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return Ok(());
        }
        Err(e) => {
            let text = e.render().to_string();
            let text = text.trim_end();
            return Err(CliError::usage(text.strip_prefix("error: ").unwrap_or(text)));
        }
    };
    init_logging(cli.global.verbose);
    if let Some(t) = cli.global.threads {
        if t == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        if rayon::ThreadPoolBuilder::new().num_threads(t).build_global().is_err() {
            log::debug!("thread pool already initialised");
        }
    }
    let name = cli.command.name();
    let mut rec = Recorder::new(name);
    rec.parameters = match serde_json::to_value(&cli.command)? {
        serde_json::Value::Object(mut m) => m.remove(name).unwrap_or_default(),
        other => other,
    };
    let mut ctx = Ctx {
        out: cli.global.out.clone(),
        rec,
    };
    let result = match &cli.command {
        Command::Generate(a) => commands::generate(&mut ctx, a),
        Command::Label(a) => commands::label(&mut ctx, a),
        Command::Pretrain(a) => commands::pretrain(&mut ctx, a),
        Command::Select(a) => commands::select(&mut ctx, a),
        Command::Finetune(a) => commands::finetune_cmd(&mut ctx, a),
        Command::Rank(a) => commands::rank(&mut ctx, a),
        Command::Evaluate(a) => commands::evaluate(&mut ctx, a),
        Command::Imp(a) => commands::imp(&mut ctx, a),
        Command::Spread(a) => commands::spread(&mut ctx, a),
        Command::Compare(a) => commands::compare(&mut ctx, a),
        Command::Fixtures(a) => commands::fixtures_cmd(a),
    };
    result?;
    if let Some(path) = ctx.rec.finish(rayon::current_num_threads())? {
        log::info!("run manifest {}", path.display());
    }
    Ok(())
}
