fn main() {
    std::process::exit(khaos::cli::run(std::env::args_os()));
}
