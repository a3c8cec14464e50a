fn main() {
    std::process::exit(aci_cli::main_with_args(std::env::args_os()));
}
