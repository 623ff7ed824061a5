fn main() {
    std::process::exit(westervelt::cli::main_with_args(std::env::args_os()));
}
