fn main() {
    std::process::exit(hybrid_ssd::cli::main(std::env::args_os()));
}
