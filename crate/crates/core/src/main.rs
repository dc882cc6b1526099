fn main() {
    std::process::exit(pck_hdmr::cli::main_with_args(std::env::args_os()));
}
