fn main() {
    std::process::exit(lade::cli::main(std::env::args_os()));
}
