fn main() {
    std::process::exit(foldpath_cli::run(std::env::args_os()));
}
