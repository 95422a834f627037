fn main() {
    std::process::exit(owcsim::cli::main(std::env::args_os()));
}
