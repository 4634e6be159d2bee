fn main() {
    std::process::exit(hypfill::cli::run(std::env::args_os()));
}
