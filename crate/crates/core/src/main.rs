fn main() {
    std::process::exit(delaybw::cli::main_with_args(std::env::args_os()));
}
