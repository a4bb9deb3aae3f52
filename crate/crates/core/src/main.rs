fn main() {
    let code = stencil_lab::cli::run_with(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
