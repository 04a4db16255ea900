fn main() {
    // panics are reported as a single error line by `run`
    std::panic::set_hook(Box::new(|_| {}));
    std::process::exit(weakmap_cli::run_args(std::env::args_os()));
}
