fn main() {
    env_logger::init();
    std::process::exit(stprobe::cli::execute(std::env::args_os()));
}
