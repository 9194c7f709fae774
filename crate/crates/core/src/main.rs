fn main() {
    std::process::exit(finslervol::cli::run_cli(std::env::args_os()));
}
