fn main() {
    std::process::exit(memwave::cli::dispatch(std::env::args_os()));
}
