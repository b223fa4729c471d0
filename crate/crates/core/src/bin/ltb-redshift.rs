fn main() {
    std::process::exit(ltb_redshift::cli::main_with_args(std::env::args_os()));
}
