fn main() {
    std::process::exit(krein_feller::cli::run(std::env::args_os()));
}
