fn main() {
    std::process::exit(rispace::cli::main_with(std::env::args_os()));
}
