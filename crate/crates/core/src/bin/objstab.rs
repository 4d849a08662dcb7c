fn main() {
    std::process::exit(objstab::cli::run(std::env::args_os()));
}
