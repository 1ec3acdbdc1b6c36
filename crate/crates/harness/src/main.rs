fn main() {
    std::process::exit(ffpr_harness::cli::run(std::env::args_os()));
}
