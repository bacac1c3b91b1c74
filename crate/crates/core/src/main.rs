fn main() {
    std::process::exit(qlbe::runner::cli_main());
}
