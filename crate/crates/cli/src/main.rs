fn main() {
    std::process::exit(scenekg_cli::main_from_args(std::env::args_os()));
}
