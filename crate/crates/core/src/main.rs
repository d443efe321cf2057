fn main() {
    std::process::exit(cm_moduli::cli::run(std::env::args_os()));
}
