fn main() {
    std::process::exit(drr_gossip::cli::main_with_args(std::env::args_os()));
}
