fn main() {
    std::process::exit(metasets::cli::run(std::env::args_os()));
}
