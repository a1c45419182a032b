use anyhow::Context;
use clap::Parser;
use shortcircuit_lab::cli::{pretty, run, Cli};
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match go(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn go(cli: &Cli) -> anyhow::Result<u8> {
    let out = run(cli)?;
    let summary = pretty(&out.summary);
    match &cli.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let write = |name: &str, body: &str| {
                let path = dir.join(name);
                std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
            };
            write("summary.json", &summary)?;
            for (name, body) in &out.files {
                write(name, body)?;
            }
        }
        None => print!("{summary}"),
    }
    Ok(out.exit_code() as u8)
}
