fn main() {
    std::process::exit(agentsynth_cli::run(std::env::args_os()));
}
