fn main() {
    std::process::exit(fk_ground::cli::run(std::env::args_os().collect()));
}
