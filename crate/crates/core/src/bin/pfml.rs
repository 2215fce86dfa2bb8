fn main() {
    std::process::exit(pfml::app::main_with_args(std::env::args_os()));
}
