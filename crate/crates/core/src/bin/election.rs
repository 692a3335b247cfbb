fn main() {
    std::process::exit(election_coding::cli::dispatch(std::env::args_os()));
}
