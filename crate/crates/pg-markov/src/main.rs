fn main() {
    std::process::exit(pg_markov::io::cli::run());
}
