fn main() {
    std::process::exit(bugscope_cli::run(std::env::args_os()));
}
