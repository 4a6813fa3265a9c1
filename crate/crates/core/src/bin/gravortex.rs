fn main() {
    std::process::exit(gravortex::cli::run(std::env::args_os()));
}
