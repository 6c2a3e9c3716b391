use clap::Parser;
use topocharge_cli::{run, Cli, EXIT_ERROR, EXIT_OK};

fn main() {
    let code = match Cli::try_parse() {
        Ok(cli) => run(cli),
        Err(e) => {
            // usage errors share exit status 1 with other errors; 2 means disagreement
            let _ = e.print();
            if e.use_stderr() {
                EXIT_ERROR
            } else {
                EXIT_OK
            }
        }
    };
    std::process::exit(code);
}
