fn main() {
    std::process::exit(noisemorph::cli::main_with_args(std::env::args_os()));
}
