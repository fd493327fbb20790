fn main() {
    std::process::exit(qcorner_lab::cli::run(std::env::args_os()));
}
