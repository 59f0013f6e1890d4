fn main() {
    std::process::exit(piezo_omit_cli::dispatch(std::env::args_os()));
}
