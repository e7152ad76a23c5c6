fn main() {
    std::process::exit(stereo_vo::cli::main_with_args(std::env::args_os()));
}
