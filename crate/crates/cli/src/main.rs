use clap::Parser;
use geoflow_cli::config::{resolve, Args};
use geoflow_cli::{configure_threads, execute, CliError, EXIT_CONFIG};

fn run() -> Result<i32, CliError> {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return Ok(0);
        }
        Err(e) => {
            eprint!("{e}");
            return Ok(EXIT_CONFIG);
        }
    };
    configure_threads()?;
    let cfg = resolve(&args)?;
    let report = execute(&cfg)?;
    for line in &report.summary {
        println!("{line}");
    }
    println!("output: {}", cfg.out.display());
    Ok(report.exit_code)
}

fn main() {
    let code = run().unwrap_or_else(|e| {
        eprintln!("geoflow: {e}");
        e.exit_code()
    });
    std::process::exit(code);
}
