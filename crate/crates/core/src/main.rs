fn main() {
    std::process::exit(tallynet::cli::run(std::env::args_os()));
}
