fn main() {
    std::process::exit(pendency::cli::run(std::env::args_os()));
}
