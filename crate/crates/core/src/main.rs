fn main() {
    std::process::exit(cavity_spdc::cli::main_with_args(std::env::args_os()));
}
