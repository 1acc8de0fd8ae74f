fn main() {
    std::process::exit(compo_motor::cli::run(std::env::args_os()));
}
