fn main() {
    std::process::exit(nilm::cli::main_with(std::env::args_os()));
}
