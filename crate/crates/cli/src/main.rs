use std::io::{self, Write};

fn main() {
    let (stdout, stderr, stdin) = (io::stdout(), io::stderr(), io::stdin());
    let (mut out, mut err, mut input) = (stdout.lock(), stderr.lock(), stdin.lock());
    let code = paradigm_cli::run_args(std::env::args_os(), &mut paradigm_cli::Io {
        out: &mut out,
        err: &mut err,
        input: &mut input,
    });
    let _ = out.flush();
    std::process::exit(code);
}
