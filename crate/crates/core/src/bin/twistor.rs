fn main() {
    std::process::exit(twistor_core::cli::run(std::env::args_os()));
}
