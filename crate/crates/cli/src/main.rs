fn main() {
    std::process::exit(infpast_cli::cli_main(std::env::args_os()));
}
