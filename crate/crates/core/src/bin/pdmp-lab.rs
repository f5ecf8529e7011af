fn main() {
    std::process::exit(pdmp_lab::cli::run(std::env::args_os()));
}
