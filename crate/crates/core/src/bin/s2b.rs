fn main() {
    std::process::exit(s2b::cli::run(std::env::args_os()));
}
