use std::io::Write;

fn main() {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let mut out = std::io::BufWriter::new(stdout.lock());
    let code = mrwlan_cli::run(std::env::args_os(), &mut out, &mut stderr.lock());
    let code = if out.flush().is_err() && code == 0 {
        mrwlan_cli::EXIT_IO
    } else {
        code
    };
    drop(out);
    std::process::exit(code);
}
