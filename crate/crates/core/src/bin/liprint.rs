fn main() {
    liprint::cli::init_logging();
    std::process::exit(liprint::cli::main_with_args(std::env::args_os()));
}
