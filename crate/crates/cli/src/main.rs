fn main() {
    std::process::exit(mediprobe_cli::main_with_args(std::env::args_os()));
}
