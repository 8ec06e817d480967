//! `mrlab`: front end for exact regret games, duality certificates, regret
//! bounds and Thompson-sampling experiments on finite MDP classes.

mod args;
mod commands;
mod inputs;
mod output;
mod status;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::Ctx;
use status::{input_error, CliResult, Status};

fn init_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("MRLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| input_error(format!("MRLAB_THREADS=`{v}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| input_error(e.to_string()))
}

fn run(cli: &Cli) -> CliResult<Status> {
    init_threads()?;
    let config = serde_json::to_value(cli).expect("arguments serialize");
    let name = match &cli.command {
        Command::Gen(_) => "gen",
        Command::VerifyDuality => "verify-duality",
        Command::Bounds(_) => "bounds",
        Command::Sweep(_) => "sweep",
        Command::Mbr(_) => "mbr",
        Command::Minimax => "minimax",
        Command::SimulateTs(_) => "simulate-ts",
    };
    let mut ctx = Ctx::new(&cli.common, name, config)?;
    let status = match &cli.command {
        Command::Gen(a) => commands::gen(&mut ctx, a),
        Command::VerifyDuality => commands::verify(&mut ctx),
        Command::Bounds(a) => commands::bounds(&mut ctx, a),
        Command::Sweep(a) => commands::sweep(&mut ctx, a),
        Command::Mbr(a) => commands::mbr_cmd(&mut ctx, a),
        Command::Minimax => commands::minimax(&mut ctx),
        Command::SimulateTs(a) => commands::simulate(&mut ctx, a),
    }?;
    for p in &ctx.out.written {
        eprintln!("wrote {}", p.display());
    }
    Ok(status)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { Status::InputError.code() } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let status = run(&cli).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.status
    });
    if status != Status::Pass {
        eprintln!("exit status {} ({status:?})", status.code());
    }
    ExitCode::from(status.code())
}
