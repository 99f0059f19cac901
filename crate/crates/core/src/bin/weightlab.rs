fn main() {
    std::process::exit(weightlab::report::main_with_args(std::env::args_os()));
}
