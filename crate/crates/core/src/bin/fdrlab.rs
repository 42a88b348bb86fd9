fn main() {
    std::process::exit(fdrlab::cli::main_from_env());
}
