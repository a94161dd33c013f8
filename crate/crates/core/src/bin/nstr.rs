fn main() {
    std::process::exit(nstr::cli::run(std::env::args_os()));
}
