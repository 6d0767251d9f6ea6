fn main() {
    std::process::exit(ghz_repeater::cli::run(std::env::args_os()));
}
