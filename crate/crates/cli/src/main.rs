fn main() {
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(qweb_cli::run_cli(&argv));
}
