fn main() {
    std::process::exit(comix::cli::main_with_args(std::env::args_os()));
}
