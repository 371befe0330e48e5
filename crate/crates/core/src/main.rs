fn main() {
    std::process::exit(dobf::cli::run(std::env::args_os()));
}
