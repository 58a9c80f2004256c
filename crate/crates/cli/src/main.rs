fn main() {
    std::process::exit(tgslmm_cli::main_entry(std::env::args_os()));
}
