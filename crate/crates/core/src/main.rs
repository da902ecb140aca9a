fn main() {
    std::process::exit(idisi::cli::dispatch(std::env::args_os()));
}
