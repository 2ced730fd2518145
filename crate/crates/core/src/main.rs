fn main() {
    std::process::exit(pour_rnn::cli::run(std::env::args_os()));
}
