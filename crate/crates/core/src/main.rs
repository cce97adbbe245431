fn main() {
    std::process::exit(vortex_filaments::cli::main_with_env());
}
