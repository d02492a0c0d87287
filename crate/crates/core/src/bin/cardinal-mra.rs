fn main() {
    std::process::exit(cardinal_mra::cli::run(std::env::args_os()));
}
