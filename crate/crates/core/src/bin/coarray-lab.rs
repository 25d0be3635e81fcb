fn main() {
    std::process::exit(coarray_lab::cli::cli_main());
}
