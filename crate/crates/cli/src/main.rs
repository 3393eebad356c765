fn main() {
    let args: Vec<String> = std::env::args().collect();
    let stdin = std::io::stdin();
    let code = rccs_cli::run(&args, &mut stdin.lock(), &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
