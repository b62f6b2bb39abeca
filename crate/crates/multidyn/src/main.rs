fn main() {
    std::process::exit(multidyn::cli::main_with(std::env::args_os()));
}
