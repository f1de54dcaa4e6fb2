fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("ENTROPYLAB_LOG", "warn")).init();
    std::process::exit(entropylab::cli::run(std::env::args_os()));
}
